//! Quantitative objects of the localization bounds: the one-site integral
//! `I_β`, the threshold `β_c`, the exponential decay envelopes and a weighted
//! fit that turns measured correlations into a decay rate.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk;

/// Absolute accuracy of [`i_beta`]; well inside the 1e-10 certified target.
const I_BETA_TOL: f64 = 1e-13;
/// Exponent at which the integrand `e^{−β(cosh t − 1)}` is treated as zero.
const UNDERFLOW_EXPONENT: f64 = 800.0;

/// `β (cosh t − 1)` written without cancellation near `t = 0`.
fn cosh_m1(t: f64) -> f64 {
    let s = (0.5 * t).sinh();
    2.0 * s * s
}

/// `I_β = √β ∫ e^{−β(cosh t − 1)} dt / √(2π)`.
pub fn i_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("I_beta needs beta > 0, got {beta}")));
    }
    let t_max = (1.0 + UNDERFLOW_EXPONENT / beta).acosh();
    let half = adaptive_gk(|t| (-beta * cosh_m1(t)).exp(), 0.0, t_max, I_BETA_TOL)?;
    Ok((beta / (2.0 * PI)).sqrt() * 2.0 * half.value)
}

/// Connective bound `c_d = 2d − 1`.
pub fn connective_constant(d: usize) -> f64 {
    (2 * d - 1) as f64
}

/// Per-step decay ratio `r(β) = I_β e^{β(c_d − 1)} c_d`.
pub fn decay_ratio(d: usize, beta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let c = connective_constant(d);
    Ok(i_beta(beta)? * (beta * (c - 1.0)).exp() * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalBeta {
    Finite(f64),
    /// `d = 1`: the ratio is `I_β < 1` for every `β`.
    Infinite,
}

impl CriticalBeta {
    pub fn as_f64(self) -> f64 {
        match self {
            CriticalBeta::Finite(b) => b,
            CriticalBeta::Infinite => f64::INFINITY,
        }
    }

    pub fn exceeds(self, beta: f64) -> bool {
        beta < self.as_f64()
    }
}

impl fmt::Display for CriticalBeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalBeta::Finite(b) => write!(f, "{b}"),
            CriticalBeta::Infinite => f.write_str("inf"),
        }
    }
}

pub const BETA_C_BRACKET: (f64, f64) = (1e-8, 1.0);

/// Root of `I_β e^{β(c_d − 1)} c_d = 1` by bisection on [`BETA_C_BRACKET`].
pub fn beta_c(d: usize) -> Result<CriticalBeta> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if d == 1 {
        return Ok(CriticalBeta::Infinite);
    }
    let f = |b: f64| decay_ratio(d, b).map(|r| r - 1.0);
    let (mut lo, mut hi) = BETA_C_BRACKET;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    // Bisect to the resolution of f64 rather than a fixed width: the root
    // residual must reach 1e-9 and f' is O(100) near the root in d = 3.
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(CriticalBeta::Finite(mid));
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalBeta::Finite(0.5 * (lo + hi)))
}

/// `√β ln β⁻¹ ≤ 1/(2d − 1)`, the sufficient small-`β` condition for localization.
pub fn small_beta_condition(d: usize, beta: f64) -> bool {
    beta.sqrt() * (1.0 / beta).ln() <= 1.0 / connective_constant(d)
}

/// Parameters of the decay envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    d: usize,
    beta: f64,
    ratio: f64,
    beta_c: CriticalBeta,
    c0: f64,
}

impl BoundParams {
    /// Envelope parameters with the default prefactor
    /// `C₀ = 2 e^{1 + 2dβ} / (1 − r)` obtained by summing the geometric series
    /// over path lengths, with `|∂γ| ≤ (2d − 2)(|γ| + 1) + 2` for a walk of
    /// `|γ|` steps (infinite when `r ≥ 1`).
    pub fn new(d: usize, beta: f64) -> Result<Self> {
        let ratio = decay_ratio(d, beta)?;
        let beta_c = beta_c(d)?;
        let c0 = if ratio < 1.0 {
            2.0 * (1.0 + 2.0 * d as f64 * beta).exp() / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        Ok(BoundParams { d, beta, ratio, beta_c, c0 })
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("C0 must be positive, got {c0}")));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_d(&self) -> f64 {
        connective_constant(self.d)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `r = I_β e^{β(c_d − 1)} c_d`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn beta_c(&self) -> CriticalBeta {
        self.beta_c
    }

    /// `−ln r`, the decay rate guaranteed by the envelope.
    pub fn bound_rate(&self) -> f64 {
        -self.ratio.ln()
    }

    fn require_subcritical(&self) -> Result<()> {
        if self.beta_c.exceeds(self.beta) {
            Ok(())
        } else {
            Err(Error::AboveCritical { beta: self.beta, beta_c: self.beta_c.as_f64() })
        }
    }

    /// `C₀ (ε_x⁻¹ + ε_y⁻¹) r^dist`, the two-point correlation envelope.
    pub fn two_point_envelope(&self, eps_x: f64, eps_y: f64, dist: f64) -> Result<f64> {
        self.require_subcritical()?;
        if !(eps_x > 0.0 && eps_y > 0.0) {
            return Err(Error::PinningMismatch("envelope needs eps_x > 0 and eps_y > 0".into()));
        }
        Ok(self.c0 * (1.0 / eps_x + 1.0 / eps_y) * self.ratio.powf(dist))
    }

    /// `C₀ r^dist`, the single-pinning envelope for `⟨e^{t_x/2}⟩`.
    pub fn one_point_envelope(&self, dist: f64) -> Result<f64> {
        self.require_subcritical()?;
        Ok(self.c0 * self.ratio.powf(dist))
    }
}

/// One measured point `(distance, value ± stderr)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub distance: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Fit of `ln value ≈ intercept − rate · distance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub rate_stderr: f64,
    /// Points dropped because their value was not positive.
    pub excluded: usize,
}

/// Weighted least squares of `ln value` against distance with weights
/// `(value / stderr)²`. When every stderr is zero the fit is unweighted and the
/// slope error comes from the residuals.
pub fn fit_decay_rate(points: &[DecayPoint]) -> Result<DecayFit> {
    let usable: Vec<&DecayPoint> = points
        .iter()
        .filter(|p| p.value > 0.0 && p.value.is_finite() && p.distance.is_finite())
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 3 positive points, got {}",
            usable.len()
        )));
    }
    let weighted = usable.iter().all(|p| p.stderr > 0.0 && p.stderr.is_finite());
    let weights: Vec<f64> = usable
        .iter()
        .map(|p| if weighted { (p.value / p.stderr).powi(2) } else { 1.0 })
        .collect();
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &w) in usable.iter().zip(&weights) {
        let y = p.value.ln();
        sw += w;
        sx += w * p.distance;
        sy += w * y;
        sxx += w * p.distance * p.distance;
        sxy += w * p.distance * y;
    }
    let delta = sw * sxx - sx * sx;
    if !(delta > 0.0) {
        return Err(Error::InsufficientData("decay fit needs at least two distinct distances".into()));
    }
    let slope = (sw * sxy - sx * sy) / delta;
    let intercept = (sxx * sy - sx * sxy) / delta;
    let slope_var = if weighted {
        sw / delta
    } else {
        let rss: f64 = usable
            .iter()
            .map(|p| (p.value.ln() - intercept - slope * p.distance).powi(2))
            .sum();
        rss / (usable.len() as f64 - 2.0) * sw / delta
    };
    Ok(DecayFit { rate: -slope, intercept, rate_stderr: slope_var.sqrt(), excluded })
}
