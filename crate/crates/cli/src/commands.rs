use crate::{AcfArgs, BinArgs, BootstrapArgs, Burnin, FitArgs, McStudyArgs, SimulateArgs, TemplateArgs};
use anyhow::{anyhow, Context};
use mivt::binning::{in_bin_units, read_events};
use mivt::infer::{FitReport, FitTemplate};
use mivt::moments::{sample_acf, summarize};
use mivt::simulate::{default_burnin, MivtModel, SimConfig, DEFAULT_BURNIN_EPS};
use mivt::{CountSeries, MivtError};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// An error with its process exit code: 1 for usage, I/O and parse errors,
/// 2 for model and fit errors.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn exit_code(e: &MivtError) -> u8 {
    match e {
        MivtError::Io(_) | MivtError::Csv(_) | MivtError::Format(_) => 1,
        MivtError::Stage { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn lib(e: MivtError) -> Failure {
    Failure {
        code: exit_code(&e),
        error: e.into(),
    }
}

trait Annotate<T> {
    fn at(self, what: impl FnOnce() -> String) -> Outcome<T>;
}

impl<T> Annotate<T> for Result<T, Failure> {
    fn at(self, what: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|f| Failure {
            code: f.code,
            error: f.error.context(what()),
        })
    }
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(input)
}

/// Syntax errors exit with 1; a well-formed file that does not describe a
/// valid model exits with 2.
fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let value: serde_json::Value = serde_json::from_reader(open(path)?)
        .with_context(|| format!("{} is not valid JSON", path.display()))
        .map_err(input)?;
    serde_json::from_value(value).map_err(|e| Failure {
        code: 2,
        error: anyhow!(e).context(format!("invalid contents in {}", path.display())),
    })
}

fn read_counts(path: &Path) -> Outcome<CountSeries> {
    CountSeries::read_csv(open(path)?)
        .map_err(lib)
        .at(|| format!("reading {}", path.display()))
}

fn output(path: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> Outcome {
    match path {
        Some(p) => {
            let file = File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(input)?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(input)?;
            w.flush().map_err(input)
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write(&mut w).map_err(input)?;
            w.flush().map_err(input)
        }
    }
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Outcome {
    output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_counts(path: &Option<PathBuf>, series: &CountSeries) -> Outcome {
    output(path, |w| Ok(series.write_csv(w)?))
}

pub fn bin(a: BinArgs) -> Outcome {
    let labels = match a.labels {
        Some(l) if l.len() != a.events.len() => {
            return Err(input(anyhow!("{} labels for {} event files", l.len(), a.events.len())));
        }
        Some(l) => l,
        None => a
            .events
            .iter()
            .map(|p| p.file_stem().map_or_else(|| "events".into(), |s| s.to_string_lossy().into_owned()))
            .collect(),
    };
    let mut events = Vec::with_capacity(a.events.len());
    for p in &a.events {
        events.push(read_events(open(p)?).map_err(lib).at(|| format!("reading {}", p.display()))?);
    }
    let binned = mivt::bin_events(&events, labels, a.delta, a.start, a.end).map_err(input)?;
    let series = if a.seconds { binned } else { in_bin_units(&binned).map_err(lib)? };
    log::info!("{} bins of width {}", series.len(), a.delta);
    write_counts(&a.out, &series)
}

pub fn simulate(a: SimulateArgs) -> Outcome {
    let model: MivtModel = read_json(&a.model)?;
    let burnin = match a.burnin {
        Burnin::Fixed(v) => v,
        Burnin::Auto => {
            let bi = default_burnin(&model, DEFAULT_BURNIN_EPS).map_err(lib)?;
            (bi / a.delta).ceil() * a.delta
        }
    };
    let cfg = SimConfig {
        eps_cut: a.eps_cut,
        ..SimConfig::new(a.delta, a.horizon, burnin, a.seed)
    };
    let series = mivt::simulate_mivt(&model, &cfg).map_err(lib)?;
    write_counts(&a.out, &series)
}

fn template(t: &TemplateArgs) -> Outcome<FitTemplate> {
    let mut tpl = FitTemplate::new(t.trawl.clone(), t.seed_model);
    tpl.lags = t.lags;
    if let Some(a) = &t.factor_matrix {
        let a: Vec<Vec<u32>> = serde_json::from_str(a)
            .context("--factor-matrix must be a JSON array of 0/1 rows")
            .map_err(input)?;
        tpl.factor_matrix = Some(a);
    }
    Ok(tpl)
}

pub fn fit(a: FitArgs) -> Outcome {
    let series = read_counts(&a.counts)?;
    let tpl = template(&a.template)?;
    if tpl.trawls.len() != series.dim() {
        return Err(input(anyhow!(
            "--trawl lists {} families but {} has {} components",
            tpl.trawls.len(),
            a.counts.display(),
            series.dim()
        )));
    }
    let report = mivt::fit(&series, &tpl).map_err(lib)?;
    if report.dependence.floored {
        log::warn!("negative dependence estimate floored at zero; the report carries no simulable model");
    }
    write_json(&a.out, &report)
}

pub fn acf(a: AcfArgs) -> Outcome {
    let series = read_counts(&a.counts)?;
    let mut columns = Vec::new();
    let mut header = vec!["lag".to_string()];
    for (i, label) in series.labels().iter().enumerate() {
        columns.push(sample_acf(&series, i, a.lags).map_err(lib).at(|| format!("component '{label}'"))?);
        header.push(label.clone());
    }
    if let Some(p) = &a.fit {
        let report: FitReport = read_json(p)?;
        if report.trawl.len() != series.dim() {
            return Err(input(anyhow!("fit report has {} components, counts have {}", report.trawl.len(), series.dim())));
        }
        for (t, label) in report.trawl.iter().zip(series.labels()) {
            let model: Result<Vec<f64>, _> = (1..=a.lags).map(|h| t.spec.acf(h as f64 * series.delta())).collect();
            columns.push(model.map_err(lib)?);
            header.push(format!("{label}_model"));
        }
    }
    if let Some(p) = &a.summary {
        write_json(&Some(p.clone()), &summarize(&series))?;
    }
    output(&a.out, |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&header)?;
        for h in 0..a.lags {
            let mut row = vec![(h + 1).to_string()];
            row.extend(columns.iter().map(|c| c[h].to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    })
}

pub fn bootstrap(a: BootstrapArgs) -> Outcome {
    let report: FitReport = read_json(&a.fit)?;
    let out = mivt::bootstrap(&report, a.reps, a.level, a.seed).map_err(lib)?;
    for (name, ci) in &out.ci {
        if !ci.contains_estimate {
            log::warn!("{name}: point estimate lies outside its percentile interval");
        }
    }
    write_json(&a.out, &out)
}

pub fn mc_study(a: McStudyArgs) -> Outcome {
    let model: MivtModel = read_json(&a.model)?;
    let mut tpl = FitTemplate::of_model(&model);
    tpl.lags = a.lags;
    let study = mivt::mc_study(&model, &tpl, a.reps, a.n_obs, a.delta, a.seed).map_err(lib)?;
    if let Some(p) = &a.estimates {
        let rows = &study.replicates;
        output(&Some(p.clone()), |w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(&rows.names)?;
            for r in &rows.estimates {
                wr.write_record(r.iter().map(|v| v.to_string()))?;
            }
            wr.flush()?;
            Ok(())
        })?;
    }
    write_json(&a.out, &study)
}
