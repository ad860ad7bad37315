use std::path::{Path, PathBuf};

use clap::ValueEnum;
use condmetrics::metrics::{accuracy_paired, subsampled_fid_suite};
use condmetrics::rng::derive_seed;
use condmetrics::synth::{
    gen_conditional, gen_matched_moments, gen_rings, gen_tightness_case, label_noise, mode_collapse_run,
    CollapseSchedule, ConditionalSpec, LabeledSet,
};
use condmetrics::{
    align_discovered, average_class_probabilities, conditional_fid, fid, inception_score, inception_scores,
    ClassAssignment, FeatureMatrix, LabelVector, MetricReport, ProbabilityMatrix, Weighting,
};
use rayon::prelude::*;

use crate::config::{CliError, PairingMode, RunConfig};
use crate::report::{self, Pairing, RunOutput};
use crate::tensor;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Is,
    Bcis,
    Wcis,
    Accuracy,
    Fid,
    Bcfid,
    Wcfid,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Is => "is",
            Metric::Bcis => "bcis",
            Metric::Wcis => "wcis",
            Metric::Accuracy => "accuracy",
            Metric::Fid => "fid",
            Metric::Bcfid => "bcfid",
            Metric::Wcfid => "wcfid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Input {
    RealFeatures,
    GenFeatures,
    RealLabels,
    GenLabels,
    Probs,
}

impl Input {
    fn describe(self) -> &'static str {
        match self {
            Input::RealFeatures => "--real-features (real feature file)",
            Input::GenFeatures => "--gen-features (generated feature file)",
            Input::RealLabels => "--real-labels (real label file)",
            Input::GenLabels => "--gen-labels (generated label file)",
            Input::Probs => "--probs (class probability file)",
        }
    }

    fn path(self, cfg: &RunConfig) -> Option<&PathBuf> {
        match self {
            Input::RealFeatures => cfg.real_features.as_ref(),
            Input::GenFeatures => cfg.gen_features.as_ref(),
            Input::RealLabels => cfg.real_labels.as_ref(),
            Input::GenLabels => cfg.gen_labels.as_ref(),
            Input::Probs => cfg.probs.as_ref(),
        }
    }
}

fn required_inputs(m: Metric) -> &'static [Input] {
    match m {
        Metric::Is => &[Input::Probs],
        Metric::Bcis | Metric::Wcis | Metric::Accuracy => &[Input::Probs, Input::GenLabels],
        Metric::Fid => &[Input::RealFeatures, Input::GenFeatures],
        Metric::Bcfid | Metric::Wcfid => &[
            Input::RealFeatures,
            Input::GenFeatures,
            Input::RealLabels,
            Input::GenLabels,
        ],
    }
}

fn require(cfg: &RunConfig, what: &str, inputs: &[Input]) -> Result<()> {
    match inputs.iter().find(|i| i.path(cfg).is_none()) {
        Some(missing) => Err(CliError::Config(format!("{what} needs {}", missing.describe()))),
        None => Ok(()),
    }
}

/// Fails with a config error when a requested metric, or the pairing mode,
/// lacks an input file.
pub fn check_requested(cfg: &RunConfig, requested: &[Metric]) -> Result<()> {
    for &m in requested {
        require(cfg, &format!("metric '{}'", m.name()), required_inputs(m))?;
    }
    if cfg.pairing == PairingMode::Hungarian {
        require(cfg, "pairing 'hungarian'", &[Input::Probs, Input::GenLabels])?;
    }
    let computable = [Metric::Is, Metric::Fid]
        .iter()
        .any(|&m| required_inputs(m).iter().all(|i| i.path(cfg).is_some()));
    if !computable {
        return Err(CliError::Config(
            "nothing to compute: supply --probs, or --real-features and --gen-features".into(),
        ));
    }
    Ok(())
}

/// Loaded and type-checked inputs.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub real_features: Option<FeatureMatrix>,
    pub gen_features: Option<FeatureMatrix>,
    pub real_labels: Option<LabelVector>,
    pub gen_labels: Option<LabelVector>,
    pub probs: Option<ProbabilityMatrix>,
}

/// Borrowed inputs, so sweeps can swap one part without copying the rest.
#[derive(Debug, Clone, Copy, Default)]
pub struct InputView<'a> {
    pub real_features: Option<&'a FeatureMatrix>,
    pub gen_features: Option<&'a FeatureMatrix>,
    pub real_labels: Option<&'a LabelVector>,
    pub gen_labels: Option<&'a LabelVector>,
    pub probs: Option<&'a ProbabilityMatrix>,
}

fn load<T>(path: Option<&PathBuf>, f: impl Fn(&Path) -> std::result::Result<T, tensor::TensorError>) -> Result<Option<T>> {
    path.map(|p| f(p).map_err(|e| CliError::tensor(p, e))).transpose()
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let real_features = load(cfg.real_features.as_ref(), tensor::load_features)?;
        let gen_features = load(cfg.gen_features.as_ref(), tensor::load_features)?;
        let probs = load(cfg.probs.as_ref(), tensor::load_probabilities)?;
        let real_raw = load(cfg.real_labels.as_ref(), tensor::load_labels)?;
        let gen_raw = load(cfg.gen_labels.as_ref(), tensor::load_labels)?;

        let inferred = real_raw
            .iter()
            .chain(&gen_raw)
            .flat_map(|l| l.iter().max().map(|m| m + 1))
            .chain(probs.as_ref().map(ProbabilityMatrix::nclasses))
            .max();
        let k = cfg.k.or(inferred).unwrap_or(1);
        if let Some(p) = &probs {
            if p.nclasses() != k {
                return Err(CliError::Input(format!(
                    "probabilities have {} classes but k = {k}",
                    p.nclasses()
                )));
            }
        }
        let labels = |raw: Option<Vec<usize>>, path: Option<&PathBuf>| -> Result<Option<LabelVector>> {
            raw.map(|r| tensor::label_vector(r, k).map_err(|e| CliError::tensor(path.unwrap(), e)))
                .transpose()
        };
        Ok(Self {
            real_labels: labels(real_raw, cfg.real_labels.as_ref())?,
            gen_labels: labels(gen_raw, cfg.gen_labels.as_ref())?,
            real_features,
            gen_features,
            probs,
        })
    }

    pub fn view(&self) -> InputView<'_> {
        InputView {
            real_features: self.real_features.as_ref(),
            gen_features: self.gen_features.as_ref(),
            real_labels: self.real_labels.as_ref(),
            gen_labels: self.gen_labels.as_ref(),
            probs: self.probs.as_ref(),
        }
    }
}

fn check_len(what: &str, labels: usize, rows: usize) -> Result<()> {
    if labels != rows {
        return Err(CliError::Input(format!("{what}: {labels} labels for {rows} rows")));
    }
    Ok(())
}

fn count_warning(real: &LabelVector, gen: &LabelVector) -> Option<String> {
    let (rc, gc) = (real.counts(), gen.counts());
    let differing: Vec<String> = rc
        .iter()
        .zip(&gc)
        .enumerate()
        .filter(|(_, (r, g))| r != g)
        .map(|(c, (r, g))| format!("{c} ({r} real vs {g} generated)"))
        .collect();
    (!differing.is_empty()).then(|| {
        format!(
            "per-class sample counts differ for classes {}; evaluation assumes equal real and generated counts per class",
            differing.join(", ")
        )
    })
}

/// Computes every metric the inputs allow.
pub fn compute(inputs: InputView<'_>, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let weighting: Weighting = cfg.weighting.into();
    let mut report = MetricReport::default();
    let mut warnings = Vec::new();

    let classes = inputs
        .gen_labels
        .or(inputs.real_labels)
        .map(LabelVector::class_count)
        .or(inputs.probs.map(ProbabilityMatrix::nclasses));
    let pairing = match cfg.pairing {
        PairingMode::Identity => classes.map(ClassAssignment::identity),
        PairingMode::Hungarian => match (inputs.probs, inputs.gen_labels) {
            (Some(p), Some(l)) => {
                check_len("generated labels vs probabilities", l.len(), p.nrows())?;
                Some(align_discovered(p, l)?)
            }
            _ => return Err(CliError::Config("pairing 'hungarian' needs --probs and --gen-labels".into())),
        },
    };

    if let Some(probs) = inputs.probs {
        match inputs.gen_labels {
            Some(labels) => {
                check_len("generated labels vs probabilities", labels.len(), probs.nrows())?;
                report.set_inception(inception_scores(probs, labels, weighting)?);
                report.set_accuracy(accuracy_paired(probs, labels, pairing.as_ref().unwrap())?);
            }
            None => report.is = Some(inception_score(probs)),
        }
        if let Some(gf) = inputs.gen_features {
            if gf.nrows() != probs.nrows() {
                warnings.push(format!(
                    "probabilities have {} rows but generated features have {}",
                    probs.nrows(),
                    gf.nrows()
                ));
            }
        }
    }

    if let (Some(rf), Some(gf)) = (inputs.real_features, inputs.gen_features) {
        let d = rf.ncols();
        if gf.ncols() != d {
            return Err(CliError::Input(format!(
                "real features have {d} dimensions, generated features {}",
                gf.ncols()
            )));
        }
        if let Some(s) = cfg.subset_size.filter(|&s| s > d) {
            return Err(CliError::Config(format!("subset size {s} exceeds feature dimension {d}")));
        }
        match (inputs.real_labels, inputs.gen_labels) {
            (Some(rl), Some(gl)) => {
                check_len("real labels vs real features", rl.len(), rf.nrows())?;
                check_len("generated labels vs generated features", gl.len(), gf.nrows())?;
                warnings.extend(count_warning(rl, gl));
                let pairing = pairing.as_ref().unwrap();
                match cfg.subset_size {
                    Some(s) => {
                        let sub = subsampled_fid_suite(rf, rl, gf, gl, pairing, weighting, s, cfg.trials, cfg.seed)?;
                        report.fid = sub.fid;
                        report.bcfid = sub.bcfid;
                        report.wcfid = sub.wcfid;
                        report.cfid_sum = sub.cfid_sum;
                        report.per_class_fid = sub.per_class_fid;
                        report.dims_used = sub.dims_used;
                    }
                    None => report.set_fid(conditional_fid(rf, rl, gf, gl, pairing, weighting)?, d),
                }
            }
            _ => match cfg.subset_size {
                Some(s) => {
                    // one pseudo-class reduces the suite to plain FID
                    let one = |n| LabelVector::new(vec![0; n], 1).expect("single class");
                    let sub = subsampled_fid_suite(
                        rf,
                        &one(rf.nrows()),
                        gf,
                        &one(gf.nrows()),
                        &ClassAssignment::identity(1),
                        weighting,
                        s,
                        cfg.trials,
                        cfg.seed,
                    )?;
                    report.fid = sub.fid;
                    report.dims_used = sub.dims_used;
                }
                None => {
                    report.fid = Some(fid(rf, gf)?);
                    report.dims_used = Some(d);
                }
            },
        }
    }

    Ok(RunOutput {
        report,
        pairing: pairing.map(|p| Pairing {
            mode: cfg.pairing,
            mapping: p.mapping().to_vec(),
        }),
        seed: cfg.seed,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

pub fn cmd_metrics(cfg: &RunConfig, requested: &[Metric], format: OutputFormat) -> Result<String> {
    cfg.validate()?;
    check_requested(cfg, requested)?;
    let inputs = Inputs::load(cfg)?;
    let out = compute(inputs.view(), cfg)?;
    Ok(match format {
        OutputFormat::Json => report::to_json(&out),
        OutputFormat::Csv => format!(
            "{}\n{}\n",
            report::SCALAR_COLUMNS.join(","),
            report::scalar_fields(&out.report).join(",")
        ),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Noise levels in `[0, 1]`; every level uses the run seed.
    LabelNoise { grid: Vec<f64> },
    /// Collapse of the generated side, averaged over `repeats` runs seeded
    /// `derive_seed(seed, r)`.
    ModeCollapse { schedule: CollapseSchedule, repeats: usize },
}

fn mean_reports(reports: &[MetricReport]) -> MetricReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&MetricReport) -> Option<f64>| -> Option<f64> {
        reports.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
    };
    MetricReport {
        is: avg(|r| r.is),
        bcis: avg(|r| r.bcis),
        wcis: avg(|r| r.wcis),
        fid: avg(|r| r.fid),
        bcfid: avg(|r| r.bcfid),
        wcfid: avg(|r| r.wcfid),
        cfid_sum: avg(|r| r.cfid_sum),
        accuracy: avg(|r| r.accuracy),
        dims_used: reports.first().and_then(|r| r.dims_used),
        ..MetricReport::default()
    }
}

/// Runs a sweep on loaded inputs, one CSV row per grid point.
pub fn sweep(inputs: &Inputs, cfg: &RunConfig, spec: &Sweep) -> Result<String> {
    let view = inputs.view();
    match spec {
        Sweep::LabelNoise { grid } => {
            let labels = view
                .gen_labels
                .ok_or_else(|| CliError::Config("label_noise sweep needs --gen-labels".into()))?;
            if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(CliError::Config(format!("noise level {p} outside [0, 1]")));
            }
            let rows = grid
                .iter()
                .map(|&p| {
                    let noisy = label_noise(labels, p, cfg.seed)?;
                    let out = compute(InputView { gen_labels: Some(&noisy), ..view }, cfg)?;
                    Ok((p.to_string(), out.report))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(report::to_csv("p", &rows))
        }
        Sweep::ModeCollapse { schedule, repeats } => {
            let (Some(gf), Some(gl)) = (view.gen_features, view.gen_labels) else {
                return Err(CliError::Config(
                    "mode_collapse sweep needs --gen-features and --gen-labels".into(),
                ));
            };
            if *repeats == 0 {
                return Err(CliError::Config("repeats must be at least 1".into()));
            }
            let runs = (0..*repeats)
                .into_par_iter()
                .map(|r| {
                    let steps = mode_collapse_run(gf, gl, schedule, derive_seed(cfg.seed, r as u64))?;
                    steps
                        .iter()
                        .map(|s| {
                            let probs = view.probs.map(|p| p.select_rows(&s.indices)).transpose()?;
                            let v = InputView {
                                gen_features: Some(&s.data.features),
                                gen_labels: Some(&s.data.labels),
                                probs: probs.as_ref(),
                                ..view
                            };
                            Ok(compute(v, cfg)?.report)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = (0..schedule.steps)
                .map(|s| {
                    let at_step: Vec<MetricReport> = runs.iter().map(|run| run[s].clone()).collect();
                    (s.to_string(), mean_reports(&at_step))
                })
                .collect::<Vec<_>>();
            Ok(report::to_csv("step", &rows))
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig, spec: &Sweep) -> Result<String> {
    cfg.validate()?;
    check_requested(cfg, &[])?;
    sweep(&Inputs::load(cfg)?, cfg, spec)
}

pub fn cmd_match(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    require(cfg, "match", &[Input::Probs, Input::GenLabels])?;
    let inputs = Inputs::load(cfg)?;
    let (probs, labels) = (inputs.probs.as_ref().unwrap(), inputs.gen_labels.as_ref().unwrap());
    check_len("generated labels vs probabilities", labels.len(), probs.nrows())?;
    let avg = average_class_probabilities(probs, labels)?;
    let assignment = condmetrics::hungarian_max(&avg)?;
    let rows: Vec<String> = avg
        .row_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|&v| report::number(v)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    let mapping: Vec<String> = assignment.mapping().iter().map(usize::to_string).collect();
    Ok(report::object(&[
        ("mapping", format!("[{}]", mapping.join(", "))),
        ("score", report::number(assignment.score())),
        ("average_probabilities", format!("[{}]", rows.join(", "))),
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Two mixtures with equal overall moments and different classes.
    MatchedMoments,
    /// Construction where FID equals BCFID + WCFID.
    Tightness,
    /// Concentric noisy rings, one per class.
    Rings,
    /// Gaussian classes with classifier-style probabilities.
    Conditional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub kind: SynthKind,
    pub n_per_class: usize,
    pub seed: u64,
    pub sigma_real: [f64; 2],
    pub sigma_gen: [f64; 2],
    pub radii: Vec<f64>,
    pub radial_sigma: f64,
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub confidence: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            kind: SynthKind::MatchedMoments,
            n_per_class: 1000,
            seed: 0,
            sigma_real: [1.0, 2.0],
            sigma_gen: [2.0, 1.0],
            radii: vec![1.0, 2.0, 3.0],
            radial_sigma: 0.1,
            classes: 10,
            dim: 8,
            separation: 3.0,
            confidence: 0.9,
        }
    }
}

/// Writes `real_*` / `gen_*` tensors (and `probs.cfm` for the conditional
/// kind) into `dir`; returns the written paths.
pub fn cmd_synth(opts: &SynthOptions, dir: &Path) -> Result<Vec<PathBuf>> {
    let (real, gen, probs): (LabeledSet, LabeledSet, Option<ProbabilityMatrix>) = match opts.kind {
        SynthKind::MatchedMoments => {
            let (a, b) = gen_matched_moments(opts.seed, opts.n_per_class)?;
            (a, b, None)
        }
        SynthKind::Tightness => {
            let (a, b) = gen_tightness_case(opts.sigma_real, opts.sigma_gen, opts.n_per_class, opts.seed)?;
            (a, b, None)
        }
        SynthKind::Rings => (
            gen_rings(&opts.radii, opts.radial_sigma, opts.n_per_class, derive_seed(opts.seed, 0))?,
            gen_rings(&opts.radii, opts.radial_sigma, opts.n_per_class, derive_seed(opts.seed, 1))?,
            None,
        ),
        SynthKind::Conditional => {
            let spec = ConditionalSpec {
                classes: opts.classes,
                per_class: opts.n_per_class,
                dim: opts.dim,
                separation: opts.separation,
                confidence: opts.confidence,
                seed: opts.seed,
            };
            let r = gen_conditional(&spec, 0)?;
            let g = gen_conditional(&spec, 1)?;
            (r.data, g.data, Some(g.probs))
        }
    };
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut save = |name: &str, f: &dyn Fn(&Path) -> std::result::Result<(), tensor::TensorError>| -> Result<()> {
        let path = dir.join(name);
        f(&path).map_err(|e| CliError::tensor(&path, e))?;
        written.push(path);
        Ok(())
    };
    save("real_features.cfm", &|p| tensor::save_features(p, &real.features))?;
    save("real_labels.cfm", &|p| tensor::save_labels(p, &real.labels))?;
    save("gen_features.cfm", &|p| tensor::save_features(p, &gen.features))?;
    save("gen_labels.cfm", &|p| tensor::save_labels(p, &gen.labels))?;
    if let Some(probs) = &probs {
        save("probs.cfm", &|p| tensor::save_probabilities(p, probs))?;
    }
    Ok(written)
}
