use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use spikerbm_core::calibration::{fit_rmse, fit_sigmoid, log_rate_r2, measure_transfer_curve, Delivery, Probe};
use spikerbm_core::evaluation::{quantize_params, QuantizationSpec};
use spikerbm_core::io::{load_snapshot, save_snapshot, write_pgm};
use spikerbm_core::mnist::SIDE;
use spikerbm_core::pipeline::{self, MnistTask};
use spikerbm_core::sampling::write_kl_csv;
use spikerbm_core::{Error, ExperimentConfig, RbmParams};

#[derive(Parser)]
#[command(name = "spikerbm", version, about = "Neural sampling and event-driven CD on LIF neurons")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config entry, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent trials or digits.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure the transfer curve and fit the sigmoid.
    Calibrate {
        /// Refractory period override (s); 0 gives the exponential regime.
        #[arg(long)]
        tau_r: Option<f64>,
    },
    /// KL-vs-time of the LIF, abstract and Gibbs samplers on random RBMs.
    ValidateSampling {
        /// Fail unless the mean LIF KL is at most this value and Gibbs ends lower.
        #[arg(long)]
        check: Option<f64>,
    },
    /// Train on the MNIST subset and write `model.srbm`.
    Train {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Shorthand for `--set presentations=N`.
        #[arg(long)]
        presentations: Option<usize>,
    },
    /// Test-set accuracy of a snapshot.
    Eval {
        #[arg(long, value_enum)]
        method: Method,
        /// Snapshot; defaults to the `snapshot` config entry.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fail if accuracy is below this fraction.
        #[arg(long)]
        min_accuracy: Option<f64>,
    },
    /// Clamp one label group and record the visible rates.
    Generate {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Digit to generate; defaults to the `label`-th configured class.
        #[arg(long)]
        digit: Option<u8>,
    },
    /// Partial image with restricted labels.
    Cue {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Free-energy accuracy after snapping parameters to fewer bits.
    Quantize {
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ecd,
    Cd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    FreeEnergy,
    Sampling,
}

/// A run that completed but failed its requested check.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    header: String,
}

impl Ctx {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.out.join(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    /// Text file whose first line is the config header.
    fn text(&self, name: &str) -> Result<BufWriter<File>> {
        let mut w = self.create(name)?;
        writeln!(w, "# {}", self.header)?;
        Ok(w)
    }

    fn model(&self, model: &Option<PathBuf>) -> Result<RbmParams> {
        let p = match model {
            Some(p) => p.clone(),
            None if !self.cfg.snapshot.is_empty() => PathBuf::from(&self.cfg.snapshot),
            None => return Err(Error::MissingKey("snapshot".into()).into()),
        };
        load_snapshot(&p).with_context(|| format!("loading {}", p.display()))
    }

    fn task(&self) -> Result<MnistTask> {
        pipeline::load_task(&self.cfg).with_context(|| {
            format!(
                "loading MNIST from {} (see README for fetching the data)",
                self.cfg.mnist_dir
            )
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("check failed: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    match &cli.cmd {
        Cmd::Calibrate { tau_r: Some(t) } => {
            cfg.tau_r = *t;
            cfg.fit_tau_r = *t;
        }
        Cmd::Train {
            presentations: Some(n),
            ..
        } => cfg.presentations = *n,
        _ => {}
    }
    cfg.validate()?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let header = format!("spikerbm {} config {}", env!("CARGO_PKG_VERSION"), cfg.hash());
    let ctx = Ctx {
        cfg,
        out: cli.out.clone(),
        header,
    };
    fs::write(ctx.out.join("config.txt"), ctx.cfg.to_text())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build()?;
    pool.install(|| match cli.cmd {
        Cmd::Calibrate { .. } => calibrate(&ctx),
        Cmd::ValidateSampling { check } => validate_sampling(&ctx, check),
        Cmd::Train { mode, .. } => train(&ctx, mode),
        Cmd::Eval {
            method,
            model,
            min_accuracy,
        } => eval(&ctx, method, &model, min_accuracy),
        Cmd::Generate { model, digit } => generate(&ctx, &model, digit),
        Cmd::Cue { model } => cue(&ctx, &model),
        Cmd::Quantize { model } => quantize(&ctx, &model),
    })
}

fn calibrate(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let fit = if cfg.tau_r == 0.0 {
        // constant injected current, as in the exponential-regime curve
        let probe = Probe {
            delivery: Delivery::Direct,
            ..cfg.probe()?
        };
        let curve = measure_transfer_curve(&cfg.neuron(), &cfg.calibration_grid(), &probe, cfg.seed)?;
        curve.write_csv(ctx.text("transfer_curve.csv")?, "")?;
        match log_rate_r2(&curve, 1.0, 100.0) {
            Some(r2) => println!("log-rate R^2 over 1-100 Hz: {r2:.4}"),
            None => println!("fewer than three points in 1-100 Hz"),
        }
        fit_sigmoid(&curve, 0.0)?
    } else {
        let cal = pipeline::run_calibration(cfg)?;
        cal.curve.write_csv(ctx.text("transfer_curve.csv")?, "")?;
        println!("probe rate {:.2} Hz", cal.probe_rate);
        println!("rmse {:.3} Hz", fit_rmse(&cal.curve, &cal.fit));
        cal.fit
    };
    let mut w = ctx.create("fit.txt")?;
    fit.write(&mut w, &ctx.header)?;
    w.flush()?;
    println!("beta {:.4e} 1/A  gamma {:.2} Hz  tau_r {:.4e} s", fit.beta, fit.gamma, fit.tau_r);
    Ok(())
}

fn validate_sampling(ctx: &Ctx, check: Option<f64>) -> Result<()> {
    let cfg = &ctx.cfg;
    let fit = cfg.fit()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| pipeline::sampling_trial(cfg, &fit, k))
        .collect::<spikerbm_core::Result<Vec<_>>>()?;
    let mut summary = ctx.text("summary.csv")?;
    writeln!(summary, "trial,kl_lif,kl_abstract,kl_gibbs")?;
    let last = |s: &[(f64, f64)]| s.last().map_or(f64::NAN, |x| x.1);
    for (k, t) in trials.iter().enumerate() {
        for (name, s) in [("lif", &t.integrate_and_fire), ("abstract", &t.abstract_model), ("gibbs", &t.gibbs)] {
            let w = ctx.create(&format!("kl_{name}_{k}.csv"))?;
            write_kl_csv(w, &ctx.header, s)?;
        }
        writeln!(
            summary,
            "{k},{},{},{}",
            last(&t.integrate_and_fire),
            last(&t.abstract_model),
            last(&t.gibbs)
        )?;
    }
    summary.flush()?;
    let n = trials.len().max(1) as f64;
    let mean = |f: &dyn Fn(&pipeline::SamplingTrial) -> f64| trials.iter().map(f).sum::<f64>() / n;
    let lif = mean(&|t| last(&t.integrate_and_fire));
    let abs = mean(&|t| last(&t.abstract_model));
    let gibbs = mean(&|t| last(&t.gibbs));
    println!("mean final KL: lif {lif:.4}  abstract {abs:.4}  gibbs {gibbs:.4}");
    if let Some(limit) = check {
        if !(lif <= limit && gibbs < lif) {
            bail!(CheckFailed(format!("lif {lif:.4} (limit {limit}), gibbs {gibbs:.4}")));
        }
    }
    Ok(())
}

fn train(ctx: &Ctx, mode: Mode) -> Result<()> {
    let cfg = &ctx.cfg;
    let task = ctx.task()?;
    let params = match mode {
        Mode::Ecd => {
            let outcome = pipeline::train_ecd_task(cfg, &task, |_| false, |_, _| Ok(()))?;
            let mut w = ctx.text("training.csv")?;
            writeln!(w, "presentation,mean_weight,hidden_rate_hz")?;
            for (p, (m, r)) in outcome.mean_weight.iter().zip(&outcome.hidden_rate).enumerate() {
                writeln!(w, "{},{m},{r}", p + 1)?;
            }
            w.flush()?;
            outcome.params
        }
        Mode::Cd => {
            let mut log = Vec::new();
            let p = pipeline::train_cd_task(cfg, &task, |e, p| log.push((e + 1, p.mean_weight())))?;
            let mut w = ctx.text("training.csv")?;
            writeln!(w, "epoch,mean_weight")?;
            for (e, m) in log {
                writeln!(w, "{e},{m}")?;
            }
            w.flush()?;
            p
        }
    };
    if !params.is_finite() {
        bail!("training diverged");
    }
    let path = ctx.out.join("model.srbm");
    save_snapshot(&path, &params)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn eval(ctx: &Ctx, method: Method, model: &Option<PathBuf>, min_accuracy: Option<f64>) -> Result<()> {
    let cfg = &ctx.cfg;
    let rbm = ctx.model(model)?;
    let task = ctx.task()?;
    check_shape(&rbm, &task)?;
    let (acc, window) = match method {
        Method::FreeEnergy => (pipeline::free_energy_test_accuracy(&rbm, &task), 0.0),
        Method::Sampling => {
            let ev = cfg.network_eval()?;
            let readouts = (0..task.test.len())
                .into_par_iter()
                .map(|k| pipeline::rate_classify(cfg, &ev, &rbm, &task, k))
                .collect::<spikerbm_core::Result<Vec<_>>>()?;
            let mut w = ctx.text("readouts.csv")?;
            let rates: Vec<String> = (0..task.classes.len()).map(|c| format!("rate_{c}")).collect();
            writeln!(w, "digit,label,winner,no_evidence,{}", rates.join(","))?;
            for (k, (r, (_, c))) in readouts.iter().zip(&task.test).enumerate() {
                let rs: Vec<String> = r.rates.iter().map(|x| x.to_string()).collect();
                writeln!(w, "{k},{c},{},{},{}", r.winner, r.no_evidence, rs.join(","))?;
            }
            w.flush()?;
            (pipeline::rate_accuracy(&task, &readouts), cfg.readout)
        }
    };
    let mut w = ctx.text("accuracy.csv")?;
    writeln!(w, "n_test,window_s,accuracy")?;
    writeln!(w, "{},{window},{acc}", task.test.len())?;
    w.flush()?;
    println!("accuracy {acc:.4} on {} digits", task.test.len());
    if let Some(min) = min_accuracy {
        if acc < min {
            bail!(CheckFailed(format!("accuracy {acc:.4} below {min}")));
        }
    }
    Ok(())
}

fn check_shape(rbm: &RbmParams, task: &MnistTask) -> Result<()> {
    if rbm.n_visible() != task.n_visible() || rbm.n_class != task.code.n_units() {
        bail!(
            "model has {} visible / {} label units but the config implies {} / {}",
            rbm.n_visible(),
            rbm.n_class,
            task.n_visible(),
            task.code.n_units()
        );
    }
    Ok(())
}

fn write_image(ctx: &Ctx, stem: &str, img: &[f64]) -> Result<()> {
    let max = img.iter().cloned().fold(0.0, f64::max);
    let mut w = ctx.create(&format!("{stem}.pgm"))?;
    write_pgm(&mut w, img, SIDE, max)?;
    w.flush()?;
    let mut w = ctx.text(&format!("{stem}.csv"))?;
    writeln!(w, "row,col,rate_hz")?;
    for (k, r) in img.iter().enumerate() {
        writeln!(w, "{},{},{r}", k / SIDE, k % SIDE)?;
    }
    w.flush()?;
    Ok(())
}

fn generate(ctx: &Ctx, model: &Option<PathBuf>, digit: Option<u8>) -> Result<()> {
    let cfg = &ctx.cfg;
    let rbm = ctx.model(model)?;
    let task = ctx.task()?;
    check_shape(&rbm, &task)?;
    let class = match digit {
        Some(d) => task.class_of(d)?,
        None if cfg.label < task.classes.len() => cfg.label,
        None => bail!("`label` {} exceeds the {} classes", cfg.label, task.classes.len()),
    };
    let ev = cfg.network_eval()?;
    let (img, corr) = pipeline::generate_class(cfg, &ev, &rbm, &task, class)?;
    write_image(ctx, &format!("generated_{}", task.classes[class]), &img)?;
    let mut w = ctx.text("generated_correlation.csv")?;
    writeln!(w, "class_digit,correlation")?;
    for (d, c) in task.classes.iter().zip(&corr) {
        writeln!(w, "{d},{c}")?;
        println!("correlation with mean {d}: {c:.3}");
    }
    w.flush()?;
    Ok(())
}

fn cue(ctx: &Ctx, model: &Option<PathBuf>) -> Result<()> {
    let cfg = &ctx.cfg;
    let rbm = ctx.model(model)?;
    let task = ctx.task()?;
    check_shape(&rbm, &task)?;
    let ev = cfg.network_eval()?;
    let runs = (0..cfg.cue_runs)
        .into_par_iter()
        .map(|k| pipeline::cue_run(cfg, &ev, &rbm, &task, k))
        .collect::<spikerbm_core::Result<Vec<_>>>()?;
    let mut w = ctx.text("cue.csv")?;
    writeln!(w, "run,winner_digit,no_evidence")?;
    let mut votes = vec![0usize; task.classes.len()];
    for (k, r) in runs.iter().enumerate() {
        writeln!(w, "{k},{},{}", task.classes[r.readout.winner], r.readout.no_evidence)?;
        if !r.readout.no_evidence {
            votes[r.readout.winner] += 1;
        }
    }
    w.flush()?;
    if let Some(r) = runs.first() {
        write_image(ctx, "cue_reconstruction", &r.reconstruction)?;
    }
    for (d, v) in task.classes.iter().zip(&votes) {
        if *v > 0 {
            println!("digit {d}: {v} of {} runs", runs.len());
        }
    }
    Ok(())
}

fn quantize(ctx: &Ctx, model: &Option<PathBuf>) -> Result<()> {
    let cfg = &ctx.cfg;
    let rbm = ctx.model(model)?;
    let task = ctx.task()?;
    check_shape(&rbm, &task)?;
    let full = pipeline::free_energy_test_accuracy(&rbm, &task);
    let mut w = ctx.text("quantize.csv")?;
    writeln!(w, "bits,accuracy,change_points")?;
    writeln!(w, "64,{full},0")?;
    println!("full precision {full:.4}");
    for bits in cfg.bit_list()? {
        let q = quantize_params(&rbm, &QuantizationSpec::from_params(&rbm, bits)?);
        let acc = pipeline::free_energy_test_accuracy(&q, &task);
        let change = 100.0 * (acc - full);
        writeln!(w, "{bits},{acc},{change}")?;
        save_snapshot(&ctx.out.join(format!("model_{bits}bit.srbm")), &q)?;
        println!("{bits} bits {acc:.4} ({change:+.2} points)");
    }
    w.flush()?;
    Ok(())
}
