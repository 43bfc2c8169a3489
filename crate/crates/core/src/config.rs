//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::calibration::{calibrate, current_grid, Delivery, NetworkMapping, Probe, SigmoidFit};
use crate::error::{Error, Result};
use crate::evaluation::{NetworkEval, RegulatorConfig};
use crate::learning::{CdConfig, EcdConfig, ModulationSchedule, StdpConfig};
use crate::sampling::PspShape;
use crate::sim::{Integrator, NeuronConfig};

macro_rules! config {
    ($($key:ident: $ty:ty = $default:expr, $doc:literal;)*) => {
        /// Every tunable of every subcommand. Keys match field names.
        #[derive(Debug, Clone, PartialEq)]
        pub struct ExperimentConfig {
            $(#[doc = $doc] pub $key: $ty,)*
        }

        impl Default for ExperimentConfig {
            fn default() -> Self {
                Self { $($key: $default,)* }
            }
        }

        impl ExperimentConfig {
            pub const KEYS: &'static [(&'static str, &'static str)] = &[$((stringify!($key), $doc),)*];

            /// Set one entry from its text form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($key) => {
                        self.$key = value.trim().parse().map_err(|_| {
                            Error::Config(format!("`{key}`: cannot parse `{value}`"))
                        })?;
                    })*
                    _ => return Err(Error::UnknownKey(key.to_string())),
                }
                Ok(())
            }

            /// All entries in declaration order, as text.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($key), self.$key.to_string()),)*]
            }
        }
    };
}

config! {
    seed: u64 = 1, "master seed";
    dt: f64 = 1e-4, "time step (s)";
    integrator: String = "exact".into(), "membrane integrator: exact | euler";
    capacitance: f64 = 1e-12, "membrane capacitance (F)";
    leak_conductance: f64 = 1e-9, "leak conductance (S)";
    threshold: f64 = 0.1, "firing threshold (V)";
    reset: f64 = 0.0, "reset potential (V)";
    tau_r: f64 = 4e-3, "refractory period (s)";
    sigma: f64 = 3e-11, "noise amplitude (A s^1/2)";
    tau_syn: f64 = 4e-3, "synaptic time constant (s)";
    nu_bias: f64 = 1000.0, "bias train rate (Hz)";
    fit: String = "calibrate".into(), "sigmoid fit: calibrate | inline (beta, gamma, fit_tau_r) | path to a fit file";
    beta: f64 = 2.044e9, "sigmoid gain (1/A)";
    gamma: f64 = 8808.0, "sigmoid baseline rate (Hz)";
    fit_tau_r: f64 = 4e-3, "refractory period used by the fit (s)";
    cal_i_min: f64 = -4.2e-9, "lowest calibration current (A)";
    cal_i_max: f64 = 0.6e-9, "highest calibration current (A)";
    cal_points: usize = 21, "calibration grid size";
    cal_duration: f64 = 5.0, "simulated time per calibration point (s)";
    cal_delivery: String = "bias".into(), "calibration current delivery: bias | direct";
    n_visible: usize = 5, "visible units of the sampling test RBMs";
    n_hidden: usize = 5, "hidden units of the sampling test RBMs";
    trials: usize = 10, "random RBMs for sampling validation";
    sample_duration: f64 = 200.0, "simulated sampling time per trial (s)";
    psp: String = "alpha".into(), "abstract-sampler PSP shape: alpha | rect";
    mnist_dir: String = "data/mnist".into(), "directory holding the four MNIST IDX files";
    classes: String = "0,1,2".into(), "digit classes used for training and testing";
    per_label: usize = 4, "label units per class";
    train_per_class: usize = 1000, "training digits drawn per class";
    hidden: usize = 100, "hidden units of the trained RBM";
    w_init: f64 = 0.01, "initial weight standard deviation";
    amplitude: f64 = 2e-3, "STDP pair amplitude";
    tau_stdp: f64 = 4e-3, "STDP time constant (s)";
    half_epoch: f64 = 0.05, "data or reconstruction phase length (s)";
    burn_in: f64 = 0.01, "plasticity-free interval after each phase switch (s)";
    learn_bias: bool = true, "train biases";
    presentations: usize = 3000, "training presentations";
    cd_k: usize = 1, "Gibbs steps per CD update";
    learning_rate: f64 = 1e-3, "CD learning rate";
    batch: usize = 100, "CD minibatch size";
    epochs: usize = 25, "CD epochs";
    snapshot: String = String::new(), "trained parameter snapshot to load";
    n_test: usize = 300, "held-out test digits";
    readout: f64 = 1.0, "readout window per digit (s)";
    settle: f64 = 0.04, "initial interval excluded from readouts (s)";
    inhibit_margin: f64 = 2e-9, "extra negative current on inhibited labels (A)";
    regulator: bool = false, "enable the layer activity watchdog";
    reg_threshold: f64 = 5.0, "watchdog rate threshold (Hz)";
    reg_window: f64 = 0.02, "watchdog averaging window (s)";
    reg_current: f64 = 2e-9, "watchdog excitation current (A)";
    label: usize = 0, "class index to generate";
    gen_duration: f64 = 1.0, "generation run length (s)";
    cue_digit: u8 = 8, "digit whose partial image is presented";
    cue_allowed: String = "3,6".into(), "digits allowed to win the cue experiment";
    cue_from_col: usize = 14, "first clamped image column";
    cue_runs: usize = 10, "seeded cue runs";
    bits: String = "8,5".into(), "quantization bit depths";
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(r: impl BufRead, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut offset = 0u64;
        for line in r.lines() {
            let line = line?;
            let len = line.len() as u64 + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    offset,
                    msg: format!("expected `key = value`, got `{body}`"),
                })?;
                cfg.set(k.trim(), v.trim())?;
            }
            offset += len;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(std::io::BufReader::new(std::fs::File::open(path)?), path)
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not `key=value`")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Canonical text form, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("capacitance", self.capacitance),
            ("leak_conductance", self.leak_conductance),
            ("threshold", self.threshold),
            ("sigma", self.sigma),
            ("tau_syn", self.tau_syn),
            ("nu_bias", self.nu_bias),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("cal_duration", self.cal_duration),
            ("sample_duration", self.sample_duration),
            ("tau_stdp", self.tau_stdp),
            ("half_epoch", self.half_epoch),
            ("readout", self.readout),
            ("gen_duration", self.gen_duration),
            ("reg_window", self.reg_window),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("tau_r", self.tau_r),
            ("fit_tau_r", self.fit_tau_r),
            ("w_init", self.w_init),
            ("amplitude", self.amplitude),
            ("burn_in", self.burn_in),
            ("learning_rate", self.learning_rate),
            ("settle", self.settle),
            ("inhibit_margin", self.inhibit_margin),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be non-negative, got {v}")));
            }
        }
        if self.reset >= self.threshold {
            return Err(Error::Config("`reset` must lie below `threshold`".into()));
        }
        if self.cal_points < 2 || self.cal_i_min >= self.cal_i_max {
            return Err(Error::Config("calibration grid needs two points and cal_i_min < cal_i_max".into()));
        }
        for (k, v) in [("per_label", self.per_label), ("hidden", self.hidden), ("batch", self.batch), ("cd_k", self.cd_k)] {
            if v == 0 {
                return Err(Error::Config(format!("`{k}` must be at least 1")));
            }
        }
        self.integrator()?;
        self.delivery()?;
        self.psp()?;
        self.class_list()?;
        self.bit_list()?;
        self.allowed_list()?;
        Ok(())
    }

    pub fn integrator(&self) -> Result<Integrator> {
        self.integrator.parse()
    }

    pub fn psp(&self) -> Result<PspShape> {
        self.psp.parse()
    }

    pub fn delivery(&self) -> Result<Delivery> {
        match self.cal_delivery.as_str() {
            "bias" => Ok(Delivery::BiasSynapse {
                rate: self.nu_bias,
                tau_syn: self.tau_syn,
            }),
            "direct" => Ok(Delivery::Direct),
            s => Err(Error::Config(format!("unknown delivery `{s}`"))),
        }
    }

    pub fn neuron(&self) -> NeuronConfig {
        NeuronConfig {
            capacitance: self.capacitance,
            leak_conductance: self.leak_conductance,
            threshold: self.threshold,
            reset: self.reset,
            refractory: self.tau_r,
            sigma: self.sigma,
        }
    }

    pub fn mapping(&self) -> NetworkMapping {
        NetworkMapping {
            tau_syn: self.tau_syn,
            nu_bias: self.nu_bias,
        }
    }

    /// Fresh calibration, the inline values, or a fit file, per `fit`.
    pub fn fit(&self) -> Result<SigmoidFit> {
        match self.fit.as_str() {
            "calibrate" => Ok(calibrate(&self.neuron(), &self.calibration_grid(), &self.probe()?, self.seed)?.fit),
            "inline" => Ok(SigmoidFit {
                beta: self.beta,
                gamma: self.gamma,
                tau_r: self.fit_tau_r,
            }),
            path => SigmoidFit::read(std::io::BufReader::new(std::fs::File::open(path)?)),
        }
    }

    pub fn probe(&self) -> Result<Probe> {
        Ok(Probe {
            duration: self.cal_duration,
            dt: self.dt,
            integrator: self.integrator()?,
            delivery: self.delivery()?,
        })
    }

    pub fn calibration_grid(&self) -> Vec<f64> {
        current_grid(self.cal_i_min, self.cal_i_max, self.cal_points)
    }

    pub fn ecd(&self) -> Result<EcdConfig> {
        Ok(EcdConfig {
            neuron: self.neuron(),
            fit: self.fit()?,
            mapping: self.mapping(),
            schedule: ModulationSchedule {
                half_epoch: self.half_epoch,
                burn_in: self.burn_in,
            },
            stdp: StdpConfig {
                amplitude: self.amplitude,
                tau_stdp: self.tau_stdp,
            },
            dt: self.dt,
            integrator: self.integrator()?,
            learn_bias: self.learn_bias,
        })
    }

    pub fn cd(&self) -> CdConfig {
        CdConfig {
            k: self.cd_k,
            learning_rate: self.learning_rate,
            batch: self.batch,
            epochs: self.epochs,
        }
    }

    pub fn network_eval(&self) -> Result<NetworkEval> {
        Ok(NetworkEval {
            neuron: self.neuron(),
            fit: self.fit()?,
            mapping: self.mapping(),
            dt: self.dt,
            integrator: self.integrator()?,
            settle: self.settle,
            inhibit_margin: self.inhibit_margin,
            regulator: self.regulator.then_some(RegulatorConfig {
                threshold_hz: self.reg_threshold,
                window: self.reg_window,
                current: self.reg_current,
            }),
        })
    }

    pub fn class_list(&self) -> Result<Vec<u8>> {
        let v: Vec<u8> = parse_list(&self.classes, "classes")?;
        if v.is_empty() || v.iter().any(|&c| c > 9) {
            return Err(Error::Config(format!("`classes` must list digits 0-9, got `{}`", self.classes)));
        }
        Ok(v)
    }

    pub fn allowed_list(&self) -> Result<Vec<u8>> {
        parse_list(&self.cue_allowed, "cue_allowed")
    }

    pub fn bit_list(&self) -> Result<Vec<u32>> {
        let v: Vec<u32> = parse_list(&self.bits, "bits")?;
        if v.iter().any(|&b| !(2..=52).contains(&b)) {
            return Err(Error::Config(format!("`bits` entries must lie in 2..=52, got `{}`", self.bits)));
        }
        Ok(v)
    }

    pub fn mnist_path(&self) -> PathBuf {
        PathBuf::from(&self.mnist_dir)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{x}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("seed = 3\nbogus = 1\n".as_bytes(), Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(ref k) if k == "bogus"), "{err}");
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides(&["seed=9", "dt = 5e-5", "classes=3,6"]).unwrap();
        let back = ExperimentConfig::parse(cfg.to_text().as_bytes(), Path::new("x")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(cfg.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ExperimentConfig::parse("# c\n\n seed = 4 # trailing\n".as_bytes(), Path::new("x")).unwrap();
        assert_eq!(cfg.seed, 4);
    }

    #[test]
    fn bad_values_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("dt", "fast").is_err());
        cfg.dt = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.integrator = "rk4".into();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.bits = "1".into();
        assert!(cfg.validate().is_err());
        assert!(cfg.apply_overrides(&["seed"]).is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = ExperimentConfig::default();
        let mut other = ExperimentConfig::default();
        for (k, v) in cfg.entries() {
            other.set(k, &v).unwrap();
        }
        assert_eq!(other, cfg);
        assert_eq!(ExperimentConfig::KEYS.len(), cfg.entries().len());
    }
}
