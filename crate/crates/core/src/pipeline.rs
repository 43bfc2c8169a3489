//! End-to-end experiment steps shared by the command line and the tests.
//! Each step is deterministic in `(config, index)` so callers may run the
//! independent ones in any order or in parallel.

use ndarray::Array2;
use rand::Rng;

use crate::calibration::{calibrate, Calibration, SigmoidFit};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    correlation, free_energy_accuracy, right_half_mask, ClassReadout, CueResult, NetworkEval,
};
use crate::learning::{train_cd_reference, train_ecd, EcdOutcome};
use crate::mnist::{balanced_subset, binarize, clamp_currents, Digit, LabelCode, MnistFiles, HIGH, LOW, SIDE};
use crate::rbm::RbmParams;
use crate::rng::{child_seed, stream, Stream};
use crate::sampling::{
    abstract_neural_sample, decade_checkpoints, exact_boltzmann, gibbs_sample_rbm, kl_vs_time, random_test_rbm,
    spikes_to_binary_trace, IfSampler,
};

/// Rate at which spike trains are turned into binary samples (Hz).
pub const SAMPLE_RATE: f64 = 1000.0;

pub fn run_calibration(cfg: &ExperimentConfig) -> Result<Calibration> {
    calibrate(&cfg.neuron(), &cfg.calibration_grid(), &cfg.probe()?, cfg.seed)
}

/// KL-vs-time series of the three samplers on one random RBM.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingTrial {
    pub rbm: RbmParams,
    pub exact: Vec<f64>,
    pub integrate_and_fire: Vec<(f64, f64)>,
    pub abstract_model: Vec<(f64, f64)>,
    /// Gibbs chain with one iteration per refractory period.
    pub gibbs: Vec<(f64, f64)>,
}

pub fn sampling_trial(cfg: &ExperimentConfig, fit: &SigmoidFit, trial: usize) -> Result<SamplingTrial> {
    let base = child_seed(cfg.seed, trial as u64);
    let rbm = random_test_rbm(cfg.n_visible, cfg.n_hidden, base);
    let exact = exact_boltzmann(&rbm.to_boltzmann())?;
    let duration = cfg.sample_duration;
    let checkpoints = decade_checkpoints(duration);
    let interval = 1.0 / SAMPLE_RATE;

    let sampler = IfSampler {
        neuron: cfg.neuron(),
        fit: *fit,
        mapping: cfg.mapping(),
        dt: cfg.dt,
        integrator: cfg.integrator()?,
    };
    let rec = sampler.run(&rbm, duration, child_seed(base, 1))?;
    let codes = spikes_to_binary_trace(&rec, cfg.tau_r, SAMPLE_RATE).codes();
    let integrate_and_fire = kl_vs_time(&codes, interval, &exact, &checkpoints, 1.0)?;

    let rec = abstract_neural_sample(&rbm.to_boltzmann(), cfg.psp()?, duration, child_seed(base, 2));
    let codes = spikes_to_binary_trace(&rec, cfg.tau_r, SAMPLE_RATE).codes();
    let abstract_model = kl_vs_time(&codes, interval, &exact, &checkpoints, 1.0)?;

    // one iteration per refractory period, each state read at the same
    // 1 kHz as the spiking samplers
    let hold = (cfg.tau_r * SAMPLE_RATE).round().max(1.0) as usize;
    let iterations = (duration / cfg.tau_r).round() as usize;
    let codes: Vec<u64> = gibbs_sample_rbm(&rbm, iterations, child_seed(base, 3))
        .into_iter()
        .flat_map(|c| std::iter::repeat(c).take(hold))
        .collect();
    let gibbs = kl_vs_time(&codes, interval, &exact, &checkpoints, 1.0)?;
    Ok(SamplingTrial {
        rbm,
        exact,
        integrate_and_fire,
        abstract_model,
        gibbs,
    })
}

/// Digits selected for one experiment, labels mapped to class indices.
#[derive(Debug, Clone)]
pub struct MnistTask {
    pub classes: Vec<u8>,
    pub code: LabelCode,
    pub train: Vec<(Vec<f64>, usize)>,
    pub test: Vec<(Vec<f64>, usize)>,
}

impl MnistTask {
    pub fn n_visible(&self) -> usize {
        SIDE * SIDE + self.code.n_units()
    }

    /// Mean gray image of each class over the training set.
    pub fn class_means(&self) -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0.0; SIDE * SIDE]; self.classes.len()];
        let mut counts = vec![0usize; self.classes.len()];
        for (px, c) in &self.train {
            counts[*c] += 1;
            for (s, p) in sums[*c].iter_mut().zip(px) {
                *s += p;
            }
        }
        for (s, &n) in sums.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|x| *x /= n.max(1) as f64);
        }
        sums
    }

    pub fn class_of(&self, digit: u8) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == digit)
            .ok_or_else(|| Error::Config(format!("digit {digit} is not among the trained classes")))
    }
}

fn pick(digits: &[Digit], classes: &[u8], per_class: usize, seed: u64) -> Result<Vec<(Vec<f64>, usize)>> {
    let idx = balanced_subset(digits, classes, per_class, seed)?;
    Ok(idx
        .into_iter()
        .map(|i| {
            let c = classes.iter().position(|&c| c == digits[i].label).expect("filtered by class");
            (digits[i].pixels.clone(), c)
        })
        .collect())
}

pub fn load_task(cfg: &ExperimentConfig) -> Result<MnistTask> {
    let classes = cfg.class_list()?;
    let files = MnistFiles::in_dir(&cfg.mnist_path());
    let train = pick(&files.load_train()?, &classes, cfg.train_per_class, child_seed(cfg.seed, 11))?;
    let per_test = cfg.n_test.div_ceil(classes.len());
    let test = pick(&files.load_test()?, &classes, per_test, child_seed(cfg.seed, 12))?;
    Ok(MnistTask {
        code: LabelCode {
            n_labels: classes.len(),
            per_label: cfg.per_label,
        },
        classes,
        train,
        test,
    })
}

/// Small zero-mean weights and zero biases.
pub fn initial_params(cfg: &ExperimentConfig, task: &MnistTask) -> Result<RbmParams> {
    let mut rng = stream(cfg.seed, Stream::Aux(10));
    Ok(RbmParams::random(task.n_visible(), cfg.hidden, (0.0, cfg.w_init), (0.0, 0.0), &mut rng)?
        .with_classes(task.code.n_units()))
}

/// Visible probabilities for a labelled digit: binarized pixels, then the
/// label code.
pub fn visible_target(task: &MnistTask, pixels: &[f64], class: usize, high: f64, low: f64) -> Result<Vec<f64>> {
    let mut v = binarize(pixels);
    v.extend(task.code.encode(class, high, low)?);
    Ok(v)
}

/// Event-driven training; `on_checkpoint(p, params)` runs after every
/// presentation `p` for which `wants(p)` holds.
pub fn train_ecd_task(
    cfg: &ExperimentConfig,
    task: &MnistTask,
    wants: impl Fn(usize) -> bool,
    on_checkpoint: impl FnMut(usize, &RbmParams) -> Result<()>,
) -> Result<EcdOutcome> {
    let ecd = cfg.ecd()?;
    let clamps = task
        .train
        .iter()
        .map(|(px, c)| clamp_currents(&visible_target(task, px, *c, HIGH, LOW)?, &ecd.fit))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = stream(cfg.seed, Stream::Aux(11));
    let order: Vec<usize> = (0..cfg.presentations).map(|_| rng.gen_range(0..clamps.len())).collect();
    let init = initial_params(cfg, task)?;
    train_ecd(&init, &clamps, &order, &ecd, child_seed(cfg.seed, 13), wants, on_checkpoint)
}

/// Standard CD on binarized digits with one-hot label groups.
pub fn train_cd_task(
    cfg: &ExperimentConfig,
    task: &MnistTask,
    on_epoch: impl FnMut(usize, &RbmParams),
) -> Result<RbmParams> {
    let nv = task.n_visible();
    let mut data = Array2::zeros((task.train.len(), nv));
    for (r, (px, c)) in task.train.iter().enumerate() {
        for (k, x) in visible_target(task, px, *c, 1.0, 0.0)?.into_iter().enumerate() {
            data[[r, k]] = x;
        }
    }
    let init = initial_params(cfg, task)?;
    train_cd_reference(&init, data.view(), &cfg.cd(), child_seed(cfg.seed, 14), on_epoch)
}

pub fn free_energy_test_accuracy(rbm: &RbmParams, task: &MnistTask) -> f64 {
    free_energy_accuracy(rbm, task.test.iter().map(|(px, c)| (px.as_slice(), *c)), &task.code)
}

/// Rate readout of test digit `k`.
pub fn rate_classify(
    cfg: &ExperimentConfig,
    ev: &NetworkEval,
    rbm: &RbmParams,
    task: &MnistTask,
    k: usize,
) -> Result<ClassReadout> {
    let (px, _) = &task.test[k];
    ev.classify_digit(rbm, px, &task.code, cfg.readout, child_seed(cfg.seed, 100_000 + k as u64))
}

/// Fraction of readouts naming the right class; silent readouts count as wrong.
pub fn rate_accuracy(task: &MnistTask, readouts: &[ClassReadout]) -> f64 {
    let ok = readouts
        .iter()
        .zip(&task.test)
        .filter(|(r, (_, c))| !r.no_evidence && r.winner == *c)
        .count();
    ok as f64 / readouts.len().max(1) as f64
}

/// Generated image of class `class` and its correlation with every class mean.
pub fn generate_class(
    cfg: &ExperimentConfig,
    ev: &NetworkEval,
    rbm: &RbmParams,
    task: &MnistTask,
    class: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (img, _) = ev.generate_digit(rbm, class, &task.code, cfg.gen_duration, child_seed(cfg.seed, 200 + class as u64))?;
    let corr = task.class_means().iter().map(|m| correlation(&img, m)).collect();
    Ok((img, corr))
}

/// Cue run `run`: right half of the first test digit of `cue_digit`, only
/// the classes in `cue_allowed` free to win.
pub fn cue_run(
    cfg: &ExperimentConfig,
    ev: &NetworkEval,
    rbm: &RbmParams,
    task: &MnistTask,
    run: usize,
) -> Result<CueResult> {
    let target = task.class_of(cfg.cue_digit)?;
    let allowed = cfg
        .allowed_list()?
        .into_iter()
        .map(|d| task.class_of(d))
        .collect::<Result<Vec<_>>>()?;
    let (px, _) = task
        .test
        .iter()
        .find(|(_, c)| *c == target)
        .ok_or_else(|| Error::Config(format!("no test digit of class {}", cfg.cue_digit)))?;
    let mask = right_half_mask(SIDE, cfg.cue_from_col);
    ev.cue_integration(
        rbm,
        px,
        &mask,
        &allowed,
        &task.code,
        cfg.gen_duration,
        child_seed(cfg.seed, 300 + run as u64),
    )
}
