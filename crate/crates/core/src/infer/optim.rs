//! Nelder-Mead simplex minimisation.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Absolute tolerance on the spread of objective values.
    pub f_abs_tol: f64,
    /// Relative tolerance on the spread of objective values.
    pub f_rel_tol: f64,
    /// Tolerance on the simplex diameter (max-norm).
    pub x_tol: f64,
    /// Number of restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            f_abs_tol: 1e-22,
            f_rel_tol: 1e-13,
            x_tol: 1e-11,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn run<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if step[i] != 0.0 { step[i] } else { 0.05 };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(f, p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_abs_tol + opts.f_rel_tol * vals[0].abs() && diameter <= opts.x_tol {
            converged = true;
            break;
        }
        if diameter == 0.0 {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = eval(f, &xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = eval(f, &xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = pts[0].clone();
        for i in 1..=n {
            for k in 0..n {
                pts[i][k] = best[k] + 0.5 * (pts[i][k] - best[k]);
            }
            vals[i] = eval(f, &pts[i]);
        }
    }
    let (mut bi, mut bv) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    Minimum {
        x: pts[bi].clone(),
        f: bv,
        iterations,
        converged,
    }
}

/// Minimises `f` from `x0` with initial simplex offsets `step`. Non-finite
/// objective values are treated as `+inf`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> Minimum {
    let mut best = run(&f, x0, step, opts);
    let mut total = best.iterations;
    for _ in 0..opts.restarts {
        let restart_step: Vec<f64> = step.iter().map(|s| 0.1 * s).collect();
        let next = run(&f, &best.x, &restart_step, opts);
        total += next.iterations;
        let improved = next.f < best.f;
        if next.f <= best.f {
            best = next;
        }
        if !improved {
            break;
        }
    }
    best.iterations = total;
    best
}
