//! Ingredients of the measure: field configurations, the actions `F` and `M`,
//! the matrices `D` and `A`, and the pinning schemes.
//!
//! `D` carries the coordination-number diagonal
//! `D_jj = β Σ_{k∼j} e^{t_k − t_j} + ε_j e^{−t_j}` and `A` includes the pinning
//! term on its diagonal, so that `A = diag(e^t) · D · diag(e^t)` holds entrywise
//! under both boundary conditions.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, Matrix, SpdFactor};

/// One real `t` value per site.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig(Vec<f64>);

impl FieldConfig {
    pub fn zeros(n: usize) -> Self {
        FieldConfig(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field configuration"));
        }
        Ok(FieldConfig(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, site: usize) -> f64 {
        self.0[site]
    }

    pub fn set(&mut self, site: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("field configuration"));
        }
        self.0[site] = value;
        Ok(())
    }
}

/// Assignment of the pinning parameters `ε_j ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum PinningScheme {
    /// `ε_j = eps` at every site.
    Uniform { eps: f64 },
    /// `ε_x`, `ε_y` at two sites, zero elsewhere.
    TwoPoint { x: usize, eps_x: f64, y: usize, eps_y: f64 },
    /// A single pinned site.
    Single { site: usize, eps: f64 },
    /// Arbitrary per-site values; used by the randomized identity checks.
    Custom(Vec<f64>),
}

impl PinningScheme {
    /// Expand into one `ε_j` per site.
    pub fn epsilons(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        let n = lattice.size();
        let eps = match *self {
            PinningScheme::Uniform { eps } => vec![eps; n],
            PinningScheme::TwoPoint { x, eps_x, y, eps_y } => {
                lattice.check_site(x)?;
                lattice.check_site(y)?;
                if x == y {
                    return Err(Error::PinningMismatch("two-point pinning needs distinct sites".into()));
                }
                let mut v = vec![0.0; n];
                v[x] = eps_x;
                v[y] = eps_y;
                v
            }
            PinningScheme::Single { site, eps } => {
                lattice.check_site(site)?;
                let mut v = vec![0.0; n];
                v[site] = eps;
                v
            }
            PinningScheme::Custom(ref v) => {
                if v.len() != n {
                    return Err(Error::SizeMismatch { expected: n, got: v.len() });
                }
                v.clone()
            }
        };
        if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::InvalidParameter("pinning parameters must be finite and >= 0".into()));
        }
        Ok(eps)
    }

    pub fn single_site(&self) -> Option<(usize, f64)> {
        match *self {
            PinningScheme::Single { site, eps } => Some((site, eps)),
            _ => None,
        }
    }
}

/// Inverse temperature, lattice and pinning.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    beta: f64,
    lattice: Lattice,
    pinning: PinningScheme,
    eps: Vec<f64>,
}

impl ModelParams {
    pub fn new(beta: f64, lattice: Lattice, pinning: PinningScheme) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        let eps = pinning.epsilons(&lattice)?;
        Ok(ModelParams { beta, lattice, pinning, eps })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn pinning(&self) -> &PinningScheme {
        &self.pinning
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    /// `ε_j` per site.
    pub fn epsilons(&self) -> &[f64] {
        &self.eps
    }

    pub fn has_pinning(&self) -> bool {
        self.eps.iter().any(|&e| e > 0.0)
    }

    /// `Σ_j ε_j ≤ 1`, the mass budget under which the two-point decay bound is stated.
    pub fn within_mass_budget(&self) -> bool {
        self.eps.iter().sum::<f64>() <= 1.0
    }

    /// Sites with `ε_j > 0`, ascending.
    pub fn pinned_sites(&self) -> Vec<usize> {
        (0..self.size()).filter(|&j| self.eps[j] > 0.0).collect()
    }

    fn check_config(&self, config: &FieldConfig) -> Result<()> {
        if config.len() != self.size() {
            return Err(Error::SizeMismatch { expected: self.size(), got: config.len() });
        }
        Ok(())
    }
}

/// Observables measured under the measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `G_xy = (D⁻¹)_xy`.
    Correlation { x: usize, y: usize },
    /// `O_x = e^{t_x / 2}`.
    HalfExp { x: usize },
}

impl Observable {
    /// Check the observable against the pinning: `G_xy` needs `ε_x, ε_y > 0`.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        match *self {
            Observable::Correlation { x, y } => {
                params.lattice().check_site(x)?;
                params.lattice().check_site(y)?;
                let eps = params.epsilons();
                if !(eps[x] > 0.0 && eps[y] > 0.0) {
                    return Err(Error::PinningMismatch(format!(
                        "G_{{{x},{y}}} requires eps_x > 0 and eps_y > 0"
                    )));
                }
                Ok(())
            }
            Observable::HalfExp { x } => params.lattice().check_site(x),
        }
    }

    /// Evaluate on a configuration given the factor of its `D`.
    pub fn evaluate(&self, config: &FieldConfig, factor: &SpdFactor) -> Result<f64> {
        match *self {
            Observable::Correlation { x, y } => factor.inverse_entry(x, y),
            Observable::HalfExp { x } => Ok((0.5 * config.get(x)).exp()),
        }
    }
}

/// Kinetic action `F = β Σ_(jj') (cosh(t_j − t_j') − 1)`, each pair once.
pub fn action_f(params: &ModelParams, config: &FieldConfig) -> Result<f64> {
    params.check_config(config)?;
    let t = config.as_slice();
    let sum: f64 = params
        .lattice()
        .edges()
        .iter()
        .map(|&(j, k)| (t[j] - t[k]).cosh() - 1.0)
        .sum();
    Ok(params.beta() * sum)
}

/// Mass term `M = Σ_j ε_j (cosh t_j − 1)`.
pub fn mass_m(params: &ModelParams, config: &FieldConfig) -> Result<f64> {
    params.check_config(config)?;
    Ok(params
        .epsilons()
        .iter()
        .zip(config.as_slice())
        .map(|(&e, &t)| if e == 0.0 { 0.0 } else { e * (t.cosh() - 1.0) })
        .sum())
}

/// Gradient of `F + M` with respect to `t`.
pub fn action_gradient(params: &ModelParams, config: &FieldConfig) -> Result<Vec<f64>> {
    params.check_config(config)?;
    let t = config.as_slice();
    let beta = params.beta();
    let mut grad: Vec<f64> = params
        .epsilons()
        .iter()
        .zip(t)
        .map(|(&e, &tj)| e * tj.sinh())
        .collect();
    for &(j, k) in params.lattice().edges() {
        let s = beta * (t[j] - t[k]).sinh();
        grad[j] += s;
        grad[k] -= s;
    }
    Ok(grad)
}

/// The matrix `D(t)`: `−β` on nearest-neighbor pairs and diagonal
/// `β Σ_{k∼j} e^{t_k − t_j} + ε_j e^{−t_j}`.
pub fn build_d(params: &ModelParams, config: &FieldConfig) -> Result<Matrix> {
    params.check_config(config)?;
    let n = params.size();
    let t = config.as_slice();
    let beta = params.beta();
    let mut d = Matrix::zeros(n);
    for (j, &e) in params.epsilons().iter().enumerate() {
        if e > 0.0 {
            d[(j, j)] = e * (-t[j]).exp();
        }
    }
    for &(j, k) in params.lattice().edges() {
        d[(j, k)] = -beta;
        d[(k, j)] = -beta;
        d[(j, j)] += beta * (t[k] - t[j]).exp();
        d[(k, k)] += beta * (t[j] - t[k]).exp();
    }
    if d.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix D"));
    }
    Ok(d)
}

/// The matrix `A(t) = diag(e^t) D diag(e^t)`: `−β e^{t_i + t_j}` on pairs and
/// diagonal `β Σ_{i'∼i} e^{t_i + t_i'} + ε_i e^{t_i}`.
pub fn build_a(params: &ModelParams, config: &FieldConfig) -> Result<Matrix> {
    params.check_config(config)?;
    let n = params.size();
    let t = config.as_slice();
    let beta = params.beta();
    let mut a = Matrix::zeros(n);
    for (j, &e) in params.epsilons().iter().enumerate() {
        if e > 0.0 {
            a[(j, j)] = e * t[j].exp();
        }
    }
    for &(j, k) in params.lattice().edges() {
        let w = beta * (t[j] + t[k]).exp();
        a[(j, k)] = -w;
        a[(k, j)] = -w;
        a[(j, j)] += w;
        a[(k, k)] += w;
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix A"));
    }
    Ok(a)
}

/// Log unnormalized density with respect to `Π dt_j/√(2π)`, together with the
/// Cholesky factor of `D` used to compute it.
pub fn log_weight_with_factor(params: &ModelParams, config: &FieldConfig) -> Result<(f64, SpdFactor)> {
    if !params.has_pinning() {
        return Err(Error::NoPinning);
    }
    let f = action_f(params, config)?;
    let m = mass_m(params, config)?;
    let factor = linalg::factor(&build_d(params, config)?)?;
    let lw = -f - m + 0.5 * factor.logdet();
    if !lw.is_finite() {
        return Err(Error::NonFinite("log weight"));
    }
    Ok((lw, factor))
}

/// `−F − M + ½ ln det D`.
pub fn log_weight(params: &ModelParams, config: &FieldConfig) -> Result<f64> {
    log_weight_with_factor(params, config).map(|(lw, _)| lw)
}
