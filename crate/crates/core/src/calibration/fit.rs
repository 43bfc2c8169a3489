use std::io::{BufRead, Write};

use crate::calibration::transfer::TransferCurve;
use crate::error::{Error, Result};

/// Logistic transfer curve `nu(I) = gamma e^{beta I} / (1 + gamma tau_r e^{beta I})`,
/// equivalently `1/nu = tau_r + e^{-beta I} / gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    /// Gain (1/A).
    pub beta: f64,
    /// Baseline rate (Hz).
    pub gamma: f64,
    /// Refractory period (s).
    pub tau_r: f64,
}

impl Default for SigmoidFit {
    /// The published fit for the default neuron.
    fn default() -> Self {
        Self {
            beta: 2.044e9,
            gamma: 8808.0,
            tau_r: 4e-3,
        }
    }
}

impl SigmoidFit {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.gamma > 0.0 && self.tau_r > 0.0) {
            return Err(Error::Config(format!(
                "sigmoid fit needs beta, gamma, tau_r > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn rate(&self, current: f64) -> f64 {
        1.0 / (self.tau_r + (-self.beta * current).exp() / self.gamma)
    }

    /// `ln(gamma tau_r)`: the offset between dimensionless input and `beta I`.
    pub fn log_gamma_tau(&self) -> f64 {
        (self.gamma * self.tau_r).ln()
    }

    /// Current at which `nu * tau_r = 1/2`.
    pub fn half_max_current(&self) -> f64 {
        -self.log_gamma_tau() / self.beta
    }

    pub fn write(&self, mut w: impl Write, header: &str) -> Result<()> {
        if !header.is_empty() {
            writeln!(w, "# {header}")?;
        }
        writeln!(w, "beta={:e}", self.beta)?;
        writeln!(w, "gamma={:e}", self.gamma)?;
        writeln!(w, "tau_r={:e}", self.tau_r)?;
        Ok(())
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut fit = (None, None, None);
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{line}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number for `{k}`")))?;
            match k.trim() {
                "beta" => fit.0 = Some(v),
                "gamma" => fit.1 = Some(v),
                "tau_r" => fit.2 = Some(v),
                other => return Err(Error::UnknownKey(other.to_string())),
            }
        }
        let fit = SigmoidFit {
            beta: fit.0.ok_or_else(|| Error::MissingKey("beta".into()))?,
            gamma: fit.1.ok_or_else(|| Error::MissingKey("gamma".into()))?,
            tau_r: fit.2.ok_or_else(|| Error::MissingKey("tau_r".into()))?,
        };
        fit.validate()?;
        Ok(fit)
    }
}

/// Least squares of `ln(1/rho - tau_r)` against `I`: slope `-beta`,
/// intercept `-ln gamma`. Points that are silent or at saturation are skipped.
pub fn fit_sigmoid(curve: &TransferCurve, tau_r: f64) -> Result<SigmoidFit> {
    if !(tau_r >= 0.0) {
        return Err(Error::Config("tau_r must be >= 0".into()));
    }
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.rate > 0.0 && 1.0 / p.rate > tau_r)
        .map(|p| (p.current, (1.0 / p.rate - tau_r).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateCurve(format!(
            "{} usable points (need 2 with 0 < rate < 1/tau_r)",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateCurve("all usable points share one current".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fit = SigmoidFit {
        beta: -slope,
        gamma: (-intercept).exp(),
        tau_r,
    };
    if !(fit.beta > 0.0) {
        return Err(Error::DegenerateCurve("rate does not increase with current".into()));
    }
    Ok(fit)
}

/// Refractory period implied by a saturated rate.
pub fn refractory_from_rate(max_rate: f64) -> Result<f64> {
    if !(max_rate > 0.0) {
        return Err(Error::DegenerateCurve("saturation probe did not fire".into()));
    }
    Ok(1.0 / max_rate)
}

/// Root-mean-square difference between fitted and measured rates (Hz).
pub fn fit_rmse(curve: &TransferCurve, fit: &SigmoidFit) -> f64 {
    let n = curve.points.len().max(1) as f64;
    let ss: f64 = curve
        .points
        .iter()
        .map(|p| (fit.rate(p.current) - p.rate).powi(2))
        .sum();
    (ss / n).sqrt()
}

/// Coefficient of determination of `ln(rate)` regressed on current, over the
/// points whose rate lies in `[lo, hi]`.
pub fn log_rate_r2(curve: &TransferCurve, lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.rate >= lo && p.rate <= hi && p.rate > 0.0)
        .map(|p| (p.current, p.rate.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy * sxy / (sxx * syy))
}

/// Current that makes `nu(f) = s` exactly.
pub fn inverse_transfer(s: f64, fit: &SigmoidFit) -> Result<f64> {
    let hi = 1.0 / fit.tau_r;
    if !(s > 0.0 && s < hi) {
        return Err(Error::OutOfRange { value: s, lo: 0.0, hi });
    }
    Ok((s / (fit.gamma * (1.0 - s * fit.tau_r))).ln() / fit.beta)
}
