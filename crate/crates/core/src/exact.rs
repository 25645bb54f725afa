//! Deterministic tensor-product quadrature over the `t` field for volumes of
//! at most [`MAX_SITES`] sites.
//!
//! Every integral here has the form
//!
//! ```text
//! ∫ Π_{j∈V} dt_j/√(2π) · exp(−Σ_{edges touching V} β(cosh Δt − 1) − Σ_{j∈V} ε_j(cosh t_j − 1))
//!                      · √det D[V] · f(t)
//! ```
//!
//! where `V` is the set of integrated sites and the remaining sites (if any)
//! are frozen. With `V = Λ` this is the partition function; with `V = Λ∖γ`
//! and the path field frozen it is the conditioned partition function.

use rayon::prelude::*;

use crate::combinatorics::{off_path_degrees, Path};
use crate::error::{Error, Result};
use crate::linalg::cholesky_in_place;
use crate::model::{ModelParams, Observable};
use crate::quadrature::composite_gauss_legendre;

pub const MAX_SITES: usize = 4;

/// Exponent of the double-exponential tails at which the box is cut.
const TAIL_EXPONENT: f64 = 40.0;
/// Integrand values below `e^{PRUNE_LOG}` are skipped without factorization.
const PRUNE_LOG: f64 = -720.0;
const DEFAULT_ORDER: usize = 10;

/// Integration box `[−T, T]^N` split into `panels` Gauss–Legendre panels of
/// `order` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub truncation: f64,
    pub panels: usize,
    pub order: usize,
}

/// `t` range over which `e^{−s(cosh t − 1)}` stays above `e^{−TAIL_EXPONENT}`.
fn reach(strength: f64) -> f64 {
    (1.0 + TAIL_EXPONENT / strength).acosh()
}

/// Panel width resolving the narrowest Gaussian core `1/√s` of the integrand.
fn panel_width(stiffest: f64) -> f64 {
    (2.0 / stiffest.max(1.0).sqrt()).min(2.0)
}

impl QuadratureSpec {
    pub fn new(truncation: f64, panels: usize, order: usize) -> Result<Self> {
        if !(truncation > 0.0) || !truncation.is_finite() || panels == 0 || order == 0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs T > 0, panels > 0, order > 0 (got {truncation}, {panels}, {order})"
            )));
        }
        Ok(QuadratureSpec { truncation, panels, order })
    }

    fn from_box(truncation: f64, stiffest: f64) -> Self {
        let panels = (2.0 * truncation / panel_width(stiffest)).ceil() as usize;
        QuadratureSpec { truncation, panels: panels.max(1), order: DEFAULT_ORDER }
    }

    /// Box and resolution chosen from the decay channels of the model: a pinned
    /// site is confined within `acosh(1 + K/ε_j)` and every lattice step away
    /// from the pinning adds at most `acosh(1 + K/β)`.
    pub fn for_model(params: &ModelParams) -> Self {
        let eps = params.epsilons();
        let pinned = params.pinned_sites();
        let lat = params.lattice();
        let step = reach(params.beta());
        let mut truncation: f64 = 0.0;
        for j in 0..params.size() {
            let r = pinned
                .iter()
                .map(|&p| reach(eps[p]) + lat.graph_distance(p, j).unwrap_or(0) as f64 * step)
                .fold(f64::INFINITY, f64::min);
            truncation = truncation.max(r);
        }
        if !truncation.is_finite() || truncation == 0.0 {
            truncation = 40.0;
        }
        let stiffest = eps.iter().copied().fold(params.beta(), f64::max);
        Self::from_box(truncation + 1.0, stiffest)
    }

    /// Box for the conditioned partition function: every integrated site sits
    /// within a few coupling reaches of the frozen path field.
    pub fn for_conditioned(params: &ModelParams, gamma: &Path, t_gamma: &[f64]) -> Self {
        let lat = params.lattice();
        let anchor = t_gamma.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let dist = lat.distances_from(gamma.sites());
        let far = dist.iter().filter(|&&d| d != usize::MAX).max().copied().unwrap_or(0);
        let truncation = anchor + far as f64 * reach(params.beta()) + 1.0;
        let stiffest = params.epsilons().iter().copied().fold(params.beta(), f64::max);
        Self::from_box(truncation, stiffest)
    }

    /// Same box with twice as many panels.
    pub fn refined(&self) -> Self {
        QuadratureSpec { panels: 2 * self.panels, ..*self }
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.panels * self.order
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// `e^{−ε_min (cosh T − 1)}` with `ε_min` the smallest positive pinning.
    pub tail_bound: f64,
    pub dims: usize,
    pub nodes_per_axis: usize,
}

/// Integrand over the sites `vars` with all other sites frozen at `frozen`.
struct Integrand<'a> {
    params: &'a ModelParams,
    vars: Vec<usize>,
    // For each integrated site: neighbors as (Some(var index)) or (None, frozen t).
    neighbors: Vec<Vec<Neighbor>>,
    eps: Vec<f64>,
    observable: Option<LocalObservable>,
    obs_log_bound: f64,
}

#[derive(Clone, Copy)]
enum Neighbor {
    Var(usize),
    Frozen(f64),
}

#[derive(Clone, Copy)]
enum LocalObservable {
    Correlation(usize, usize),
    HalfExp(usize),
}

impl<'a> Integrand<'a> {
    fn new(params: &'a ModelParams, vars: Vec<usize>, frozen: &[f64]) -> Self {
        let lat = params.lattice();
        let mut slot = vec![usize::MAX; params.size()];
        for (a, &j) in vars.iter().enumerate() {
            slot[j] = a;
        }
        let neighbors = vars
            .iter()
            .map(|&j| {
                lat.neighbors(j)
                    .expect("valid site")
                    .iter()
                    .map(|&k| if slot[k] != usize::MAX { Neighbor::Var(slot[k]) } else { Neighbor::Frozen(frozen[k]) })
                    .collect()
            })
            .collect();
        let eps = vars.iter().map(|&j| params.epsilons()[j]).collect();
        Integrand { params, vars, neighbors, eps, observable: None, obs_log_bound: 0.0 }
    }

    fn with_observable(mut self, obs: LocalObservable, log_bound: f64) -> Self {
        self.observable = Some(obs);
        self.obs_log_bound = log_bound;
        self
    }

    fn eval(&self, t: &[f64]) -> f64 {
        let n = self.vars.len();
        let beta = self.params.beta();
        let mut action = 0.0;
        let mut d = [0.0f64; MAX_SITES * MAX_SITES];
        for a in 0..n {
            let ta = t[a];
            let e = self.eps[a];
            let mut diag = 0.0;
            if e > 0.0 {
                action += e * (ta.cosh() - 1.0);
                diag += e * (-ta).exp();
            }
            for nb in &self.neighbors[a] {
                match *nb {
                    Neighbor::Var(b) => {
                        diag += beta * (t[b] - ta).exp();
                        d[a * n + b] = -beta;
                        // Internal pairs are visited from both ends.
                        action += 0.5 * beta * ((ta - t[b]).cosh() - 1.0);
                    }
                    Neighbor::Frozen(tk) => {
                        diag += beta * (tk - ta).exp();
                        action += beta * ((ta - tk).cosh() - 1.0);
                    }
                }
            }
            d[a * n + a] = diag;
        }
        let hadamard: f64 = (0..n).map(|a| 0.5 * d[a * n + a].ln()).sum();
        if -action + hadamard + self.obs_log_bound < PRUNE_LOG || !hadamard.is_finite() {
            return 0.0;
        }
        let Ok(logdet) = cholesky_in_place(&mut d[..n * n], n) else {
            return 0.0;
        };
        let weight = (-action + 0.5 * logdet).exp();
        match self.observable {
            None => weight,
            Some(LocalObservable::HalfExp(a)) => weight * (0.5 * t[a]).exp(),
            Some(LocalObservable::Correlation(x, y)) => weight * lower_inverse_entry(&d[..n * n], n, x, y),
        }
    }
}

/// `(M⁻¹)_xy` from an in-place Cholesky buffer of size at most `MAX_SITES`.
fn lower_inverse_entry(l: &[f64], n: usize, x: usize, y: usize) -> f64 {
    let forward = |s: usize| {
        let mut z = [0.0f64; MAX_SITES];
        z[s] = 1.0 / l[s * n + s];
        for i in s + 1..n {
            let acc: f64 = (s..i).map(|k| l[i * n + k] * z[k]).sum();
            z[i] = -acc / l[i * n + i];
        }
        z
    };
    let (zx, zy) = (forward(x), forward(y));
    (x.max(y)..n).map(|k| zx[k] * zy[k]).sum()
}

/// Tensor-product sum of `f` over `rule^dims`, normalized by `(2π)^{−dims/2}`.
/// Rows of the outermost axis run in parallel; the reduction is sequential so
/// the result is bit-reproducible.
fn tensor_integrate(dims: usize, rule: &[(f64, f64)], f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let norm = (2.0 * std::f64::consts::PI).powf(-0.5 * dims as f64);
    if dims == 0 {
        return f(&[]);
    }
    let m = rule.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; dims];
            idx[0] = i0;
            let mut point = vec![0.0; dims];
            let mut total = 0.0;
            loop {
                let mut w = 1.0;
                for (a, &i) in idx.iter().enumerate() {
                    point[a] = rule[i].0;
                    w *= rule[i].1;
                }
                total += w * f(&point);
                // Odometer over axes 1..dims.
                let mut axis = dims;
                loop {
                    if axis == 1 {
                        return total;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < m {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
        })
        .collect();
    norm * rows.iter().sum::<f64>()
}

fn tail_bound(eps: impl Iterator<Item = f64>, truncation: f64) -> f64 {
    let eps_min = eps.filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
    if eps_min.is_finite() {
        (-eps_min * (truncation.cosh() - 1.0)).exp()
    } else {
        1.0
    }
}

fn check_volume(n: usize) -> Result<()> {
    if n > MAX_SITES {
        return Err(Error::TooLarge { what: "quadrature volume", size: n, max: MAX_SITES });
    }
    Ok(())
}

fn integrate(params: &ModelParams, spec: &QuadratureSpec, integrand: &Integrand) -> Result<QuadratureResult> {
    let dims = integrand.vars.len();
    let rule = composite_gauss_legendre(-spec.truncation, spec.truncation, spec.panels, spec.order);
    let value = tensor_integrate(dims, &rule, |t| integrand.eval(t));
    if !value.is_finite() {
        return Err(Error::QuadratureNonFinite);
    }
    let eps: Vec<f64> = integrand.vars.iter().map(|&j| params.epsilons()[j]).collect();
    Ok(QuadratureResult {
        value,
        tail_bound: tail_bound(eps.into_iter(), spec.truncation),
        dims,
        nodes_per_axis: spec.nodes_per_axis(),
    })
}

/// `Z = ∫ dμ`, which must equal one for every `β` and pinning.
pub fn partition_function(params: &ModelParams, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    check_volume(params.size())?;
    if !params.has_pinning() {
        return Err(Error::NoPinning);
    }
    let integrand = Integrand::new(params, (0..params.size()).collect(), &[]);
    integrate(params, spec, &integrand)
}

/// `⟨f⟩ = ∫ dμ f` without division by `Z` (which equals one).
pub fn expectation(params: &ModelParams, spec: &QuadratureSpec, obs: Observable) -> Result<QuadratureResult> {
    check_volume(params.size())?;
    if !params.has_pinning() {
        return Err(Error::NoPinning);
    }
    obs.validate(params)?;
    let integrand = Integrand::new(params, (0..params.size()).collect(), &[]);
    let t = spec.truncation;
    let integrand = match obs {
        Observable::Correlation { x, y } => {
            let eps = params.epsilons();
            // Pointwise bound D⁻¹_xy ≤ e^{t_x}/ε_x + e^{t_y}/ε_y, used only for pruning.
            let bound = t - eps[x].min(eps[y]).ln() + std::f64::consts::LN_2;
            integrand.with_observable(LocalObservable::Correlation(x, y), bound)
        }
        Observable::HalfExp { x } => integrand.with_observable(LocalObservable::HalfExp(x), 0.5 * t),
    };
    integrate(params, spec, &integrand)
}

/// `⟨f⟩ / Z`, a diagnostic that removes the common quadrature error.
pub fn expectation_normalized(params: &ModelParams, spec: &QuadratureSpec, obs: Observable) -> Result<f64> {
    let num = expectation(params, spec, obs)?;
    let z = partition_function(params, spec)?;
    Ok(num.value / z.value)
}

/// Conditioned partition function: the integral over `Λ∖γ` of
/// `exp(−F_{Λ∖γ} − M^ε_{Λ∖γ}) √det D̃ exp(−F_∂γ)` with the path field frozen
/// at `t_gamma` (aligned with `gamma.sites()`).
pub fn conditioned_z(
    params: &ModelParams,
    spec: &QuadratureSpec,
    gamma: &Path,
    t_gamma: &[f64],
) -> Result<QuadratureResult> {
    let n = params.size();
    if t_gamma.len() != gamma.sites().len() {
        return Err(Error::SizeMismatch { expected: gamma.sites().len(), got: t_gamma.len() });
    }
    if t_gamma.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("path field"));
    }
    let validated = Path::new(params.lattice(), gamma.sites().to_vec())?;
    let mut frozen = vec![0.0; n];
    let mut on_path = vec![false; n];
    for (&k, &tk) in validated.sites().iter().zip(t_gamma) {
        frozen[k] = tk;
        on_path[k] = true;
    }
    let vars: Vec<usize> = (0..n).filter(|&j| !on_path[j]).collect();
    check_volume(vars.len())?;
    let integrand = Integrand::new(params, vars, &frozen);
    integrate(params, spec, &integrand)
}

/// The upper bound on the conditioned partition function obtained by a global
/// translation of the complement field by `t*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedBound {
    /// `t* = max(0, max_k t_k)`.
    pub t_star: f64,
    /// `exp(β Σ_{k∈γ} d_k (1 − e^{t_k − t*}) + Σ_{j∉γ} ε_j (1 − e^{−t*}))`.
    pub bound: f64,
    /// `exp(β Σ_{k∈γ} d_k + Σ_{j∉γ} ε_j)`, independent of the path field.
    pub coarse: f64,
}

pub fn conditioned_bound(params: &ModelParams, gamma: &Path, t_gamma: &[f64]) -> Result<ConditionedBound> {
    if t_gamma.len() != gamma.sites().len() {
        return Err(Error::SizeMismatch { expected: gamma.sites().len(), got: t_gamma.len() });
    }
    let lat = params.lattice();
    let t_star = t_gamma.iter().fold(0.0f64, |m, &t| m.max(t));
    let degrees = off_path_degrees(lat, gamma);
    let beta = params.beta();
    let path_term: f64 = degrees.iter().zip(t_gamma).map(|(&dk, &tk)| dk as f64 * (1.0 - (tk - t_star).exp())).sum();
    let off_path_eps: f64 = (0..lat.size()).filter(|j| !gamma.contains(*j)).map(|j| params.epsilons()[j]).sum();
    let bound = (beta * path_term + off_path_eps * (1.0 - (-t_star).exp())).exp();
    let coarse = (beta * degrees.iter().sum::<usize>() as f64 + off_path_eps).exp();
    Ok(ConditionedBound { t_star, bound, coarse })
}
