//! Decoy-state BB84 key generation capability of a fiber link.
//!
//! The channel is the usual asymptotic fiber model: a Poisson source with
//! intensity `lambda`, transmittance `eta = eta_bob * 10^(-alpha L / 10)`,
//! background yield `y0` with error `e0`, and misalignment error `e_det`:
//!
//! ```text
//! Q_lambda = y0 + 1 - exp(-eta lambda)
//! E_lambda = (e0 y0 + e_det (1 - exp(-eta lambda))) / Q_lambda
//! ```
//!
//! Single-photon bounds come from the two-decoy method with decoys
//! `nu > phi` (`phi = 0` is the vacuum state):
//!
//! ```text
//! Y0_L = max((nu Q_phi e^phi - phi Q_nu e^nu) / (nu - phi), 0)
//! Y1_L = mu / (mu (nu - phi) - nu^2 + phi^2)
//!        * [Q_nu e^nu - Q_phi e^phi - (nu^2 - phi^2) / mu^2 (Q_mu e^mu - Y0_L)]
//! Q1_L = Y1_L mu e^-mu
//! e1_U = (E_nu Q_nu e^nu - E_phi Q_phi e^phi) / ((nu - phi) Y1_L)
//! ```
//!
//! and the rate is `R = max(f_req R_L, 0)` with
//! `R_L = -q Q_mu f_ec H(E_mu) + q Q1_L (1 - H(e1_U))`.
//!
//! With `finite_key` set, every observed count `N p` is widened to
//! `N p (1 +- delta)`, `delta = sqrt(3 ln(1/varsigma) / (N p))`, and each
//! bound is evaluated at the worst corner of the widened box.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeyRateError {
    #[error("binary entropy argument {0} is outside [0, 1]")]
    Domain(f64),
    #[error("invalid QKD system parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("decoy estimate is degenerate (single-photon yield bound {y1_lower} <= 0)")]
    EstimateDegenerate { y1_lower: f64 },
}

/// QKD system parameters, one field per physical quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkdSystemParams {
    /// Pulse repetition rate (Hz).
    pub f_req: f64,
    /// Sifting coefficient.
    pub q: f64,
    /// Fiber attenuation (dB/km).
    pub alpha: f64,
    /// Receiver transmittance.
    pub eta_bob: f64,
    /// Misalignment error rate.
    pub e_det: f64,
    /// Signal intensity.
    pub mu: f64,
    /// Decoy intensity.
    pub nu: f64,
    /// Vacuum (weakest decoy) intensity.
    pub phi: f64,
    /// Background yield.
    pub y0: f64,
    /// Background error rate.
    pub e0: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    pub n_mu: u64,
    pub n_nu: u64,
    pub n_phi: u64,
    /// Failure probability of each fluctuation estimate.
    pub varsigma: f64,
    #[serde(default = "default_finite_key")]
    pub finite_key: bool,
}

fn default_finite_key() -> bool {
    true
}

impl QkdSystemParams {
    /// The reference system: 1 GHz, q = 0.9, 0.2 dB/km, eta_Bob = 0.1,
    /// e_det = 1%, (mu, nu, phi) = (0.4, 0.1, 0), Y0 = 2.1e-5, e0 = 0.5,
    /// f_ec = 1.15, N = (1.6e10, 2e9, 2e9), varsigma = 5.73e-7.
    pub fn reference() -> Self {
        Self {
            f_req: 1e9,
            q: 0.9,
            alpha: 0.2,
            eta_bob: 0.1,
            e_det: 0.01,
            mu: 0.4,
            nu: 0.1,
            phi: 0.0,
            y0: 2.1e-5,
            e0: 0.5,
            f_ec: 1.15,
            n_mu: 16_000_000_000,
            n_nu: 2_000_000_000,
            n_phi: 2_000_000_000,
            varsigma: 5.73e-7,
            finite_key: true,
        }
    }

    pub fn with_finite_key(mut self, on: bool) -> Self {
        self.finite_key = on;
        self
    }

    pub fn validate(&self) -> Result<(), KeyRateError> {
        let bad = |field: &'static str, reason: &str| {
            Err(KeyRateError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        let nonneg = [
            ("f_req", self.f_req),
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("nu", self.nu),
            ("phi", self.phi),
            ("y0", self.y0),
        ];
        for (field, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, "must be finite and non-negative");
            }
        }
        for (field, v) in [("q", self.q), ("eta_bob", self.eta_bob)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(field, "must lie in (0, 1]");
            }
        }
        for (field, v) in [("e_det", self.e_det), ("e0", self.e0)] {
            if !(0.0..=0.5).contains(&v) {
                return bad(field, "must lie in [0, 0.5]");
            }
        }
        if !(self.phi < self.nu && self.nu < self.mu) {
            return bad("nu", "intensities must satisfy 0 <= phi < nu < mu");
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return bad("f_ec", "must be finite and at least 1");
        }
        if self.n_mu == 0 || self.n_nu == 0 || self.n_phi == 0 {
            return bad("n_mu", "pulse counts must be positive");
        }
        if !(self.varsigma > 0.0 && self.varsigma < 1.0) {
            return bad("varsigma", "must lie in (0, 1)");
        }
        Ok(())
    }
}

impl Default for QkdSystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Gains and QBERs of the three intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelObservables {
    pub q_mu: f64,
    pub q_nu: f64,
    pub q_phi: f64,
    pub e_mu: f64,
    pub e_nu: f64,
    pub e_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyEstimates {
    pub y1_lower: f64,
    pub q1_lower: f64,
    pub e1_upper: f64,
}

/// `H(x) = -x log2 x - (1-x) log2 (1-x)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, KeyRateError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(KeyRateError::Domain(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Entropy of a probability already known to lie in `[0, 1]` up to rounding.
fn h(x: f64) -> f64 {
    binary_entropy(x.clamp(0.0, 1.0)).unwrap_or(0.0)
}

/// Overall transmittance of a link of `length_km`.
pub fn transmittance(length_km: f64, params: &QkdSystemParams) -> f64 {
    params.eta_bob * 10f64.powf(-params.alpha * length_km / 10.0)
}

fn gain_and_qber(eta: f64, intensity: f64, p: &QkdSystemParams) -> (f64, f64) {
    let detect = -(-eta * intensity).exp_m1();
    let gain = p.y0 + detect;
    let qber = if gain > 0.0 {
        (p.e0 * p.y0 + p.e_det * detect) / gain
    } else {
        0.0
    };
    (gain, qber)
}

pub fn simulate_observables(length_km: f64, params: &QkdSystemParams) -> ChannelObservables {
    let eta = transmittance(length_km, params);
    let (q_mu, e_mu) = gain_and_qber(eta, params.mu, params);
    let (q_nu, e_nu) = gain_and_qber(eta, params.nu, params);
    let (q_phi, e_phi) = gain_and_qber(eta, params.phi, params);
    ChannelObservables {
        q_mu,
        q_nu,
        q_phi,
        e_mu,
        e_nu,
        e_phi,
    }
}

/// Relative Chernoff deviation for an observed rate `p` over `pulses` trials.
pub fn chernoff_delta(pulses: u64, p: f64, varsigma: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    (3.0 * (1.0 / varsigma).ln() / (pulses as f64 * p)).sqrt()
}

/// `[p (1 - delta), p (1 + delta)]`, floored at zero.
fn widen(p: f64, pulses: u64, params: &QkdSystemParams) -> [f64; 2] {
    if !params.finite_key {
        return [p, p];
    }
    let d = chernoff_delta(pulses, p, params.varsigma);
    [(p * (1.0 - d)).max(0.0), p * (1.0 + d)]
}

fn y1_lower_bound(q_mu: f64, q_nu: f64, q_phi: f64, p: &QkdSystemParams) -> f64 {
    let (mu, nu, phi) = (p.mu, p.nu, p.phi);
    let y0_lower = ((nu * q_phi * phi.exp() - phi * q_nu * nu.exp()) / (nu - phi)).max(0.0);
    mu / (mu * (nu - phi) - nu * nu + phi * phi)
        * (q_nu * nu.exp()
            - q_phi * phi.exp()
            - (nu * nu - phi * phi) / (mu * mu) * (q_mu * mu.exp() - y0_lower))
}

/// Single-photon bounds from the weak+vacuum decoy method.
pub fn decoy_estimate(
    obs: &ChannelObservables,
    params: &QkdSystemParams,
) -> Result<DecoyEstimates, KeyRateError> {
    let (mu, nu, phi) = (params.mu, params.nu, params.phi);
    let q_mu = widen(obs.q_mu, params.n_mu, params);
    let q_nu = widen(obs.q_nu, params.n_nu, params);
    let q_phi = widen(obs.q_phi, params.n_phi, params);
    let mut y1_lower = f64::INFINITY;
    for &a in &q_mu {
        for &b in &q_nu {
            for &c in &q_phi {
                y1_lower = y1_lower.min(y1_lower_bound(a, b, c, params));
            }
        }
    }
    if y1_lower.is_nan() || y1_lower <= 0.0 {
        return Err(KeyRateError::EstimateDegenerate { y1_lower });
    }

    let err_nu = widen(obs.e_nu * obs.q_nu, params.n_nu, params);
    let err_phi = widen(obs.e_phi * obs.q_phi, params.n_phi, params);
    let numerator = err_nu[1] * nu.exp() - err_phi[0] * phi.exp();
    let e1_upper = (numerator / ((nu - phi) * y1_lower)).clamp(0.0, 1.0);

    Ok(DecoyEstimates {
        y1_lower,
        q1_lower: y1_lower * mu * (-mu).exp(),
        e1_upper,
    })
}

/// Secret key rate of one system on a link of `length_km`, in bits/second.
pub fn key_rate(length_km: f64, params: &QkdSystemParams) -> f64 {
    let obs = simulate_observables(length_km, params);
    let est = match decoy_estimate(&obs, params) {
        Ok(e) => e,
        Err(_) => return 0.0,
    };
    // Error-correction leakage Q_mu H(E_mu), worst corner when fluctuating.
    let gains = widen(obs.q_mu, params.n_mu, params);
    let errors = widen(obs.e_mu * obs.q_mu, params.n_mu, params);
    let mut leak = 0.0f64;
    for &g in &gains {
        for &e in &errors {
            if g > 0.0 {
                leak = leak.max(g * h((e / g).min(0.5)));
            }
        }
    }
    let r_l = -params.q * params.f_ec * leak + params.q * est.q1_lower * (1.0 - h(est.e1_upper));
    (params.f_req * r_l).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 30 digits: H(0.11) = 0.499915958164528...
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-13);
        assert_eq!(binary_entropy(1.2), Err(KeyRateError::Domain(1.2)));
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn transmittance_values() {
        let p = QkdSystemParams::reference();
        assert_eq!(transmittance(0.0, &p), 0.1);
        assert!((transmittance(50.0, &p) - 0.01).abs() < 1e-15);
        assert!((transmittance(85.0, &p) - 1.995_262_314_968_88e-3).abs() < 1e-15);
    }

    #[test]
    fn vacuum_sees_background_only() {
        let p = QkdSystemParams::reference();
        let o = simulate_observables(40.0, &p);
        assert_eq!(o.q_phi, p.y0);
        assert_eq!(o.e_phi, p.e0);
        let quiet = QkdSystemParams {
            y0: 0.0,
            e_det: 0.0,
            ..p
        };
        let o = simulate_observables(40.0, &quiet);
        assert_eq!((o.e_mu, o.e_nu), (0.0, 0.0));
    }

    #[test]
    fn observables_at_85_km() {
        // Independent closed-form evaluation (double precision, expm1).
        let o = simulate_observables(85.0, &QkdSystemParams::reference());
        assert!((o.q_mu - 8.187_865_249_625_4e-4).abs() < 1e-15);
        assert!((o.e_mu - 2.256_737_829_249_3e-2).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(QkdSystemParams::reference().validate().is_ok());
        let p = QkdSystemParams {
            nu: 0.5,
            ..QkdSystemParams::reference()
        };
        assert!(matches!(
            p.validate(),
            Err(KeyRateError::InvalidParams { field: "nu", .. })
        ));
        let p = QkdSystemParams {
            e0: 0.7,
            ..QkdSystemParams::reference()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn degenerate_estimate_at_long_distance() {
        // Dark counts keep Y1^L positive at any range; the rate still vanishes.
        let p = QkdSystemParams::reference();
        assert!(decoy_estimate(&simulate_observables(400.0, &p), &p).is_ok());
        assert_eq!(key_rate(400.0, &p), 0.0);
        // Decoy gain far below the signal gain has no consistent single-photon yield.
        let o = ChannelObservables {
            q_mu: 1e-2,
            q_nu: 1e-5,
            q_phi: 1e-5,
            e_mu: 0.01,
            e_nu: 0.01,
            e_phi: 0.5,
        };
        assert!(matches!(
            decoy_estimate(&o, &p),
            Err(KeyRateError::EstimateDegenerate { .. })
        ));
    }

    #[test]
    fn chernoff_delta_zero_rate() {
        assert_eq!(chernoff_delta(10, 0.0, 0.1), 0.0);
        let d = chernoff_delta(2_000_000_000, 2.1e-5, 5.73e-7);
        assert!((d - (3.0 * (1.0f64 / 5.73e-7).ln() / 42_000.0).sqrt()).abs() < 1e-15);
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn asymptotic_estimates_at_85_km() {
        // Frozen from an independent double-precision evaluation.
        let p = QkdSystemParams::reference().with_finite_key(false);
        let e = decoy_estimate(&simulate_observables(85.0, &p), &p).unwrap();
        assert!(rel(e.y1_lower, 0.001_968_890_771_474_982) < 1e-10);
        assert!(rel(e.q1_lower, 5.279_147_810_297_022e-4) < 1e-10);
        assert!(rel(e.e1_upper, 0.016_807_334_355_818_365) < 1e-10);
    }

    #[test]
    fn finite_key_tightens_estimates() {
        let p = QkdSystemParams::reference();
        let o = simulate_observables(85.0, &p);
        let fin = decoy_estimate(&o, &p).unwrap();
        let asy = decoy_estimate(&o, &p.clone().with_finite_key(false)).unwrap();
        assert!(fin.y1_lower < asy.y1_lower);
        assert!(fin.e1_upper > asy.e1_upper);
        assert!(rel(fin.y1_lower, 0.001_926_505) < 1e-5);
        assert!(rel(fin.e1_upper, 0.022_624) < 1e-4);
    }

    #[test]
    fn rate_oracle_points() {
        let p = QkdSystemParams::reference();
        assert!(rel(key_rate(85.0, &p), 259_217.090_743_845_2) < 1e-9);
        assert!(rel(key_rate(85.0, &p.clone().with_finite_key(false)), 284_745.516_679_692_8) < 1e-9);
        assert!(rel(key_rate(100.0, &p), 87_997.0) < 1e-4);
        assert_eq!(key_rate(118.0, &p), 0.0);
    }

    #[test]
    fn rate_falls_with_distance() {
        let p = QkdSystemParams::reference();
        let mut prev = f64::INFINITY;
        for l in 0..=150 {
            let r = key_rate(l as f64, &p);
            assert!(r >= 0.0 && r <= prev, "not monotone at {l} km");
            prev = r;
        }
    }
}
