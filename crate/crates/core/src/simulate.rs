//! Grid simulation of MIVT processes through the compound-Poisson slice
//! representation of the Lévy basis.

use crate::error::{MivtError, Result};
use crate::rng::{poisson, stream_rng, stream_seed, StreamRng};
use crate::seed::{CpBlock, SeedSpec};
use crate::series::CountSeries;
use crate::trawl::{autocorrelator, TrawlFamily, TrawlSpec};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest admissible expected jump count per block.
pub const MAX_EXPECTED_JUMPS: f64 = 2_147_483_648.0;

/// Default trawl cutoff below which jump contributions are dropped.
pub const DEFAULT_EPS_CUT: f64 = 1e-12;

/// Default level for [`default_burnin`].
pub const DEFAULT_BURNIN_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelRepr {
    trawls: Vec<TrawlSpec>,
    seed: SeedSpec,
}

/// One trawl per component and a shared seed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct MivtModel {
    trawls: Vec<TrawlSpec>,
    seed: SeedSpec,
}

impl TryFrom<ModelRepr> for MivtModel {
    type Error = MivtError;
    fn try_from(r: ModelRepr) -> Result<Self> {
        MivtModel::new(r.trawls, r.seed)
    }
}

impl From<MivtModel> for ModelRepr {
    fn from(m: MivtModel) -> Self {
        ModelRepr {
            trawls: m.trawls,
            seed: m.seed,
        }
    }
}

impl MivtModel {
    pub fn new(trawls: Vec<TrawlSpec>, seed: SeedSpec) -> Result<Self> {
        if trawls.len() != seed.dim() {
            return Err(MivtError::invalid(format!(
                "{} trawls for a {}-dimensional seed",
                trawls.len(),
                seed.dim()
            )));
        }
        Ok(Self { trawls, seed })
    }

    pub fn dim(&self) -> usize {
        self.trawls.len()
    }

    pub fn trawls(&self) -> &[TrawlSpec] {
        &self.trawls
    }

    pub fn seed(&self) -> &SeedSpec {
        &self.seed
    }

    /// `E[Y^(i)] = leb(A_i) E[L'_i]`.
    pub fn stationary_mean(&self) -> Vec<f64> {
        let c = self.seed.cumulants();
        self.trawls.iter().zip(&c.mean).map(|(t, m)| t.leb() * m).collect()
    }

    /// `Var(Y^(i)) = leb(A_i) Var(L'_i)`.
    pub fn stationary_var(&self) -> Vec<f64> {
        let c = self.seed.cumulants();
        self.trawls.iter().zip(c.var()).map(|(t, v)| t.leb() * v).collect()
    }

    /// `Cov(Y^(i)_t, Y^(j)_{t+h}) = R_ij(h) Cov(L'_i, L'_j)`.
    pub fn cross_cov(&self, i: usize, j: usize, h: f64) -> Result<f64> {
        let c = self.seed.cumulants();
        Ok(autocorrelator(&self.trawls[i], &self.trawls[j], h)? * c.cov[i][j])
    }
}

/// Grid and horizon of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Grid step.
    pub delta: f64,
    /// Length of the returned path.
    pub horizon: f64,
    /// Discarded initial stretch.
    pub burnin: f64,
    /// Jumps contribute only where the trawl height is at least this value.
    pub eps_cut: f64,
    /// Master seed.
    pub seed: u64,
}

impl SimConfig {
    pub fn new(delta: f64, horizon: f64, burnin: f64, seed: u64) -> Self {
        Self {
            delta,
            horizon,
            burnin,
            eps_cut: DEFAULT_EPS_CUT,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(MivtError::invalid(format!("grid step must be positive, got {}", self.delta)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(MivtError::invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.burnin >= 0.0 && self.burnin.is_finite()) {
            return Err(MivtError::invalid(format!("burn-in must be >= 0, got {}", self.burnin)));
        }
        if !(0.0..1.0).contains(&self.eps_cut) {
            return Err(MivtError::invalid(format!("trawl cutoff must lie in [0, 1), got {}", self.eps_cut)));
        }
        Ok(())
    }

    /// Burn-in and output lengths in grid steps, `(b1, K)`.
    pub fn grid(&self) -> Result<(usize, usize)> {
        self.validate()?;
        let kb = self.burnin / self.delta;
        let kt = self.horizon / self.delta;
        let b1 = kb.round();
        let k = kt.round();
        if (kb - b1).abs() > 1e-9 * kb.max(1.0) {
            log::warn!("burn-in {} is not a multiple of the grid step; using {} steps", self.burnin, b1);
        }
        if (kt - k).abs() > 1e-9 * kt.max(1.0) {
            log::warn!("horizon {} is not a multiple of the grid step; using {} steps", self.horizon, k);
        }
        if k < 1.0 {
            return Err(MivtError::invalid("horizon is shorter than one grid step"));
        }
        if b1 + k > u32::MAX as f64 {
            return Err(MivtError::Resource(format!("{} grid points requested", b1 + k)));
        }
        Ok((b1 as usize, k as usize))
    }
}

/// Jumps of one compound-Poisson block on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSet {
    dim: usize,
    times: Vec<f64>,
    heights: Vec<f64>,
    // Jump-major marks: marks[j * dim + i].
    marks: Vec<u64>,
}

impl JumpSet {
    pub fn new(dim: usize, times: Vec<f64>, heights: Vec<f64>, marks: Vec<u64>) -> Result<Self> {
        if times.len() != heights.len() || marks.len() != dim * times.len() {
            return Err(MivtError::invalid("jump arrays have inconsistent lengths"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(MivtError::invalid("jump times must be sorted"));
        }
        Ok(Self {
            dim,
            times,
            heights,
            marks,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn mark(&self, j: usize) -> &[u64] {
        &self.marks[j * self.dim..(j + 1) * self.dim]
    }

    /// Draws jump count, sorted times, heights and marks, in that order.
    pub fn draw<R: Rng + ?Sized>(block: &CpBlock, dim: usize, t: f64, rng: &mut R) -> Result<Self> {
        let expected = block.rate * t;
        if !(expected <= MAX_EXPECTED_JUMPS) {
            return Err(MivtError::Resource(format!(
                "expected {expected:e} jumps in one block exceeds the limit of 2^31"
            )));
        }
        let n = poisson(rng, expected) as usize;
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
        times.sort_by(f64::total_cmp);
        let heights: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut marks = vec![0u64; n * dim];
        for mark in marks.chunks_mut(dim.max(1)) {
            block.law.sample_into(rng, mark);
        }
        Ok(Self {
            dim,
            times,
            heights,
            marks,
        })
    }
}

#[inline]
fn counts_at(spec: &TrawlSpec, tau: f64, level: f64, k: usize, delta: f64) -> bool {
    tau <= k as f64 * delta && level <= spec.d(tau - k as f64 * delta)
}

/// Adds jump contributions at grid points `k = lo..=hi` into `out[i][k - lo]`.
///
/// A jump at `tau` with height `u` and mark `c` adds `c_i` at `k` when
/// `tau <= k delta` and `max(u, eps_cut) <= d_i(tau - k delta)`. Only the
/// active window of each jump is visited.
pub fn accumulate(
    trawls: &[TrawlSpec],
    jumps: &JumpSet,
    delta: f64,
    lo: usize,
    hi: usize,
    eps_cut: f64,
    out: &mut [Vec<i64>],
) {
    let width = hi + 1 - lo;
    for (i, spec) in trawls.iter().enumerate() {
        // Difference array over lo..=hi+1.
        let diff = &mut out[i];
        debug_assert!(diff.len() > width);
        let monotone = spec.is_monotone();
        for j in 0..jumps.len() {
            let c = jumps.marks[j * jumps.dim + i];
            if c == 0 {
                continue;
            }
            let tau = jumps.times[j];
            let level = jumps.heights[j].max(eps_cut);
            let mut k0 = (tau / delta).ceil().max(0.0) as usize;
            while k0 > 0 && tau <= (k0 - 1) as f64 * delta {
                k0 -= 1;
            }
            while tau > k0 as f64 * delta {
                k0 += 1;
            }
            if k0 > hi {
                continue;
            }
            let lag = spec.envelope_lag(level);
            let guess = if lag.is_finite() {
                (((tau + lag) / delta).floor().max(0.0) as usize).clamp(k0.saturating_sub(1), hi)
            } else {
                hi
            };
            if monotone {
                let mut last = guess;
                while last >= k0 && !counts_at(spec, tau, level, last, delta) {
                    if last == 0 {
                        break;
                    }
                    last -= 1;
                }
                while last < hi && counts_at(spec, tau, level, last + 1, delta) {
                    last += 1;
                }
                if last < k0 || !counts_at(spec, tau, level, last, delta) {
                    continue;
                }
                let a = k0.max(lo);
                if last < a {
                    continue;
                }
                diff[a - lo] += c as i64;
                diff[last + 1 - lo] -= c as i64;
            } else {
                // Envelope guarantees nothing counts beyond guess + 1.
                let end = (guess + 1).min(hi);
                for k in k0.max(lo)..=end {
                    if counts_at(spec, tau, level, k, delta) {
                        diff[k - lo] += c as i64;
                        diff[k + 1 - lo] -= c as i64;
                    }
                }
            }
        }
    }
}

/// Direct evaluation over every (jump, grid point) pair. Quadratic cost;
/// kept as an oracle for [`accumulate`].
pub fn accumulate_reference(
    trawls: &[TrawlSpec],
    jumps: &JumpSet,
    delta: f64,
    lo: usize,
    hi: usize,
    eps_cut: f64,
) -> Vec<Vec<u64>> {
    trawls
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            (lo..=hi)
                .map(|k| {
                    (0..jumps.len())
                        .filter(|&j| counts_at(spec, jumps.times[j], jumps.heights[j].max(eps_cut), k, delta))
                        .map(|j| jumps.marks[j * jumps.dim + i])
                        .sum()
                })
                .collect()
        })
        .collect()
}

fn finish(diff: Vec<Vec<i64>>, width: usize) -> Vec<Vec<u64>> {
    diff.into_iter()
        .map(|d| {
            let mut acc = 0i64;
            d[..width]
                .iter()
                .map(|&x| {
                    acc += x;
                    acc as u64
                })
                .collect()
        })
        .collect()
}

/// Simulates one path. Block `b` of the seed's compound-Poisson form uses
/// RNG stream `b` of `cfg.seed`; blocks run in parallel.
pub fn simulate_mivt(model: &MivtModel, cfg: &SimConfig) -> Result<CountSeries> {
    let (b1, k) = cfg.grid()?;
    let n = model.dim();
    let t = (b1 + k) as f64 * cfg.delta;
    let lo = b1 + 1;
    let hi = b1 + k;
    let cp = model.seed.cp_representation()?;
    let partials: Vec<Vec<Vec<i64>>> = cp
        .blocks
        .par_iter()
        .enumerate()
        .map(|(b, block)| {
            let mut rng: StreamRng = stream_rng(cfg.seed, b as u64);
            let jumps = JumpSet::draw(block, n, t, &mut rng)?;
            let mut diff = vec![vec![0i64; k + 1]; n];
            accumulate(&model.trawls, &jumps, cfg.delta, lo, hi, cfg.eps_cut, &mut diff);
            Ok(diff)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![vec![0i64; k + 1]; n];
    for p in partials {
        for (acc, d) in total.iter_mut().zip(p) {
            for (a, x) in acc.iter_mut().zip(d) {
                *a += x;
            }
        }
    }
    CountSeries::new(cfg.delta, CountSeries::default_labels(n), finish(total, k))
}

/// Independent replicate paths; replicate `r` uses master seed
/// `stream_seed(cfg.seed, r)`.
pub fn simulate_replicates(model: &MivtModel, cfg: &SimConfig, reps: usize) -> Result<Vec<CountSeries>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let c = SimConfig {
                seed: stream_seed(cfg.seed, r as u64),
                ..*cfg
            };
            simulate_mivt(model, &c)
        })
        .collect()
}

/// Smallest burn-in after which every trawl has decayed below `eps`
/// (an envelope bound for the seasonal family).
pub fn default_burnin(model: &MivtModel, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MivtError::invalid(format!("burn-in level must lie in (0, 1), got {eps}")));
    }
    let mut bi: f64 = 0.0;
    for spec in model.trawls() {
        if spec.family() == TrawlFamily::GammaLm {
            log::warn!(
                "long-memory trawl: the pre-sample contribution decays only polynomially; burn-in from level {eps} may be inadequate"
            );
        }
        bi = bi.max(spec.envelope_lag(eps));
    }
    Ok(bi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trawl::TrawlParams;

    fn reference_model() -> MivtModel {
        MivtModel::new(
            vec![TrawlSpec::exponential(2.157).unwrap(), TrawlSpec::exponential(1.919).unwrap()],
            SeedSpec::nb_common(0.812, vec![95.161, 73.055]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_jump_replay() {
        // One jump at tau = 2.3 with height 0.2 and mark (3, 0), lambda = 1:
        // inside the trawl while exp(tau - k) >= 0.2, i.e. k <= 2.3 + ln 5 = 3.909.
        let trawls = vec![TrawlSpec::exponential(1.0).unwrap(), TrawlSpec::exponential(1.0).unwrap()];
        let jumps = JumpSet::new(2, vec![2.3], vec![0.2], vec![3, 0]).unwrap();
        let mut diff = vec![vec![0i64; 11]; 2];
        accumulate(&trawls, &jumps, 1.0, 1, 10, 0.0, &mut diff);
        let got = finish(diff, 10);
        assert_eq!(got[0], vec![0, 0, 3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(got[1], vec![0; 10]);
        let jumps = JumpSet::new(2, vec![2.3], vec![0.05], vec![3, 1]).unwrap();
        let mut diff = vec![vec![0i64; 11]; 2];
        accumulate(&trawls, &jumps, 1.0, 1, 10, 0.0, &mut diff);
        let got = finish(diff, 10);
        // 2.3 + ln 20 = 5.296
        assert_eq!(got[0], vec![0, 0, 3, 3, 3, 0, 0, 0, 0, 0]);
        assert_eq!(got[1], vec![0, 0, 1, 1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(got, accumulate_reference(&trawls, &jumps, 1.0, 1, 10, 0.0));
    }

    #[test]
    fn windowed_matches_reference_for_all_families() {
        let trawls = vec![
            TrawlSpec::exponential(0.8).unwrap(),
            TrawlSpec::new(TrawlParams::SupIg { delta: 0.7, gamma: 1.4 }).unwrap(),
            TrawlSpec::new(TrawlParams::GammaLm { alpha: 0.6, h: 1.8 }).unwrap(),
            TrawlSpec::new(TrawlParams::Gig { nu: -0.4, delta: 1.1, gamma: 0.8 }).unwrap(),
            TrawlSpec::new(TrawlParams::SeasonalExp { lambda: 0.3, psi: 0.45 }).unwrap(),
        ];
        let seed = SeedSpec::new(crate::seed::SeedParams::NbCommonFactor {
            kappa: 1.0,
            alpha: vec![0.5; 5],
        })
        .unwrap();
        let cp = seed.cp_representation().unwrap();
        for (delta, b1, k) in [(1.0, 5usize, 60usize), (0.3, 0, 150)] {
            let mut rng = stream_rng(11, 0);
            let t = (b1 + k) as f64 * delta;
            let jumps = JumpSet::draw(&cp.blocks[0], 5, t, &mut rng).unwrap();
            assert!(jumps.len() > 20);
            for eps in [0.0, 1e-12, 1e-3] {
                let mut diff = vec![vec![0i64; k + 1]; 5];
                accumulate(&trawls, &jumps, delta, b1 + 1, b1 + k, eps, &mut diff);
                assert_eq!(
                    finish(diff, k),
                    accumulate_reference(&trawls, &jumps, delta, b1 + 1, b1 + k, eps),
                    "delta={delta} eps={eps}"
                );
            }
        }
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let model = reference_model();
        let cfg = SimConfig::new(1.0, 300.0, 8.0, 42);
        let a = simulate_mivt(&model, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_mivt(&model, &cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
        let c = simulate_mivt(&model, &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_burnin_examples() {
        let m = MivtModel::new(
            vec![TrawlSpec::exponential(2.0).unwrap()],
            SeedSpec::nb_common(1.0, vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!((default_burnin(&m, 1e-6).unwrap() - 1e6f64.ln() / 2.0).abs() < 1e-12);
        let g = MivtModel::new(
            vec![TrawlSpec::new(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 }).unwrap()],
            SeedSpec::nb_common(1.0, vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!((default_burnin(&g, 1e-4).unwrap() - 99.0).abs() < 1e-9);
        let bi = default_burnin(&reference_model(), 1e-6).unwrap();
        assert!((bi - 1e6f64.ln() / 1.919).abs() < 1e-12);
        assert!((bi - 7.199).abs() < 1e-3);
    }

    #[test]
    fn resource_limit() {
        let m = MivtModel::new(
            vec![TrawlSpec::exponential(1.0).unwrap()],
            SeedSpec::nb_common(1e9, vec![1.0]).unwrap(),
        )
        .unwrap();
        let err = simulate_mivt(&m, &SimConfig::new(1.0, 10.0, 0.0, 1)).unwrap_err();
        assert!(matches!(err, MivtError::Resource(_)));
    }

    #[test]
    fn model_json() {
        let m: MivtModel = serde_json::from_str(
            r#"{"trawls":[{"family":"exponential","lambda":2.157},{"family":"exponential","lambda":1.919}],
                "seed":{"family":"nb-common","kappa":0.812,"alpha":[95.161,73.055]}}"#,
        )
        .unwrap();
        assert_eq!(m, reference_model());
        assert!((m.stationary_mean()[0] - 35.82).abs() < 0.01);
        assert!(serde_json::from_str::<MivtModel>(
            r#"{"trawls":[{"family":"exponential","lambda":2}],"seed":{"family":"nb-common","kappa":1,"alpha":[1,1]}}"#
        )
        .is_err());
    }
}
