//! The identity suite: randomized and quadrature checks of every exact
//! identity and inequality the decay bounds rest on.
//!
//! Each check returns an [`IdentityRow`]. For equalities `max_deviation` is the
//! largest relative error; for inequalities `lhs ≤ rhs` it is the largest
//! `lhs/rhs − 1`, so a negative value means every instance held strictly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{
    loop_gas_determinant, matrix_tree_check, path_expansion, single_pinning_identity, single_pinning_identity_d,
    Path,
};
use crate::error::{Error, Result};
use crate::exact::{conditioned_bound, conditioned_z, partition_function, QuadratureSpec};
use crate::lattice::{Boundary, Lattice};
use crate::linalg::{factor, Matrix};
use crate::model::{build_d, FieldConfig, ModelParams, PinningScheme};
use crate::quadrature::adaptive_gk;

pub const IDENTITY_TOL: f64 = 1e-10;
pub const INEQUALITY_TOL: f64 = 1e-12;
pub const WARD_TOL: f64 = 1e-6;
pub const CONDITIONED_TOL: f64 = 1e-6;
pub const CLOSED_FORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityRow {
    fn equality(name: &str, errors: &[f64], tolerance: f64) -> Self {
        let max_deviation = errors.iter().copied().fold(0.0, f64::max);
        let passed = !errors.is_empty() && errors.iter().all(|e| e.is_finite() && *e <= tolerance);
        IdentityRow { name: name.to_string(), instances: errors.len(), max_deviation, tolerance, passed }
    }

    fn inequality(name: &str, excess: &[f64], tolerance: f64) -> Self {
        let max_deviation = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let passed = !excess.is_empty() && excess.iter().all(|e| e.is_finite() && *e <= tolerance);
        IdentityRow { name: name.to_string(), instances: excess.len(), max_deviation, tolerance, passed }
    }
}

/// Instance counts and seed for [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub inverse_bound_configs: usize,
    pub random_matrices: usize,
    pub single_pinning_configs: usize,
    pub conditioned_per_geometry: usize,
    /// Skip the quadrature-based checks (normalization, conditioned bound).
    pub quadrature: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            inverse_bound_configs: 1000,
            random_matrices: 200,
            single_pinning_configs: 100,
            conditioned_per_geometry: 3,
            quadrature: true,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_config(rng: &mut impl Rng, n: usize, scale: f64) -> FieldConfig {
    FieldConfig::new((0..n).map(|_| rng.random_range(-scale..=scale)).collect()).expect("finite")
}

/// Log-uniform `β` in `[lo, hi]`.
fn random_beta(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Random `ε` with about a third of the sites unpinned and at least two pinned.
fn random_pinning(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let eps: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.35) { 0.0 } else { random_beta(rng, 0.05, 5.0) })
            .collect();
        if eps.iter().filter(|e| **e > 0.0).count() >= n.min(2) {
            return eps;
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn inverse_bound_lattices() -> Vec<Lattice> {
    vec![
        Lattice::chain(5).unwrap(),
        Lattice::new(&[3, 3], Boundary::Neumann).unwrap(),
        Lattice::new(&[2, 3], Boundary::Neumann).unwrap(),
        Lattice::new(&[4], Boundary::Periodic).unwrap(),
        Lattice::new(&[3, 3], Boundary::Periodic).unwrap(),
    ]
}

/// Largest `D⁻¹_xy / (e^{t_x}/ε_x + e^{t_y}/ε_y) − 1` over pairs of pinned sites.
pub fn inverse_bound_excess(params: &ModelParams, config: &FieldConfig) -> Result<f64> {
    let f = factor(&build_d(params, config)?)?;
    let eps = params.epsilons();
    let t = config.as_slice();
    let pinned = params.pinned_sites();
    let mut worst = f64::NEG_INFINITY;
    for &x in &pinned {
        let col = f.inverse_column(x)?;
        for &y in &pinned {
            let bound = t[x].exp() / eps[x] + t[y].exp() / eps[y];
            worst = worst.max(col[y] / bound - 1.0);
        }
    }
    Ok(worst)
}

/// `D⁻¹_xy ≤ e^{t_x}/ε_x + e^{t_y}/ε_y` on random lattices, couplings, pinnings
/// and fields.
pub fn check_inverse_bound(seed: u64, configs: usize) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 1);
    let lattices = inverse_bound_lattices();
    let mut excess = Vec::with_capacity(configs);
    for i in 0..configs {
        let lat = lattices[i % lattices.len()].clone();
        let n = lat.size();
        let params = ModelParams::new(random_beta(&mut rng, 0.01, 10.0), lat, PinningScheme::Custom(random_pinning(&mut rng, n)))?;
        let config = random_config(&mut rng, n, 4.0);
        excess.push(inverse_bound_excess(&params, &config)?);
    }
    Ok(IdentityRow::inequality("inverse bound: D^-1_xy <= e^tx/eps_x + e^ty/eps_y", &excess, INEQUALITY_TOL))
}

/// Strictly diagonally dominant random matrix with a random support pattern,
/// not symmetric.
pub fn random_dominant_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    let mut m = Matrix::from_fn(n, |i, j| {
        if i != j && rng.random_bool(0.6) {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        }
    });
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] = off + rng.random_range(0.5..=2.0);
    }
    m
}

/// Largest normwise error of the path expansion against the cofactor over all
/// `(x, y)`, scaled by `|det M| max |M⁻¹|`.
pub fn path_expansion_error(m: &Matrix) -> Result<f64> {
    let n = m.n();
    let cof: Vec<f64> = (0..n * n).map(|k| m.cofactor(k % n, k / n)).collect();
    let scale = cof.iter().fold(0.0f64, |s, c| s.max(c.abs())).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            // (M⁻¹)_xy det M is the (y, x) cofactor.
            let expected = cof[x * n + y];
            let got = path_expansion(m, x, y)?;
            worst = worst.max((got - expected).abs() / scale);
        }
    }
    Ok(worst)
}

/// Path expansion of `M⁻¹_xy det M` on random matrices of size `1..=6`.
pub fn check_path_expansion_random(seed: u64, count: usize) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 2);
    let errors: Vec<f64> = (0..count)
        .map(|i| path_expansion_error(&random_dominant_matrix(&mut rng, 1 + i % 6)))
        .collect::<Result<_>>()?;
    Ok(IdentityRow::equality("path expansion, random matrices", &errors, IDENTITY_TOL))
}

/// Path expansion on `D` for a lattice with random fields and pinning.
pub fn check_path_expansion_model(seed: u64, lattice: &Lattice, configs: usize, name: &str) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 3);
    let n = lattice.size();
    let mut errors = Vec::with_capacity(configs);
    for _ in 0..configs {
        let params = ModelParams::new(
            random_beta(&mut rng, 0.05, 5.0),
            lattice.clone(),
            PinningScheme::Custom(random_pinning(&mut rng, n)),
        )?;
        let d = build_d(&params, &random_config(&mut rng, n, 2.0))?;
        errors.push(path_expansion_error(&d)?);
    }
    Ok(IdentityRow::equality(name, &errors, IDENTITY_TOL))
}

/// Loop-gas determinant against LU on random matrices.
pub fn check_loop_gas(seed: u64, count: usize) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 4);
    let errors: Vec<f64> = (0..count)
        .map(|i| {
            let m = random_dominant_matrix(&mut rng, 1 + i % 6);
            rel_err(loop_gas_determinant(&m), m.determinant())
        })
        .collect();
    Ok(IdentityRow::equality("loop gas determinant", &errors, IDENTITY_TOL))
}

fn single_pinned(rng: &mut impl Rng, lattice: Lattice) -> Result<ModelParams> {
    let site = rng.random_range(0..lattice.size());
    let eps = random_beta(rng, 0.05, 5.0);
    ModelParams::new(random_beta(rng, 0.05, 5.0), lattice, PinningScheme::Single { site, eps })
}

/// `det A = ε₀ e^{t₀} Σ_T Π β e^{t_j + t_j'}` on chains of 1–6 sites and the
/// 2×2 and 2×3 blocks.
pub fn check_matrix_tree(seed: u64, configs_per_lattice: usize) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 5);
    let mut lattices: Vec<Lattice> = (1..=6).map(|n| Lattice::chain(n).unwrap()).collect();
    lattices.push(Lattice::new(&[2, 2], Boundary::Neumann)?);
    lattices.push(Lattice::new(&[2, 3], Boundary::Neumann)?);
    let mut errors = Vec::new();
    for lat in lattices {
        for _ in 0..configs_per_lattice {
            let params = single_pinned(&mut rng, lat.clone())?;
            let config = random_config(&mut rng, lat.size(), 2.0);
            errors.push(matrix_tree_check(&params, &config)?.relative_error());
        }
    }
    Ok(IdentityRow::equality("matrix-tree expansion of det A", &errors, IDENTITY_TOL))
}

/// `ε₀ e^{t₀} A⁻¹_{0x} = 1` and `ε₀ e^{−t_x} D⁻¹_{0x} = 1` for every `x` of a
/// 3×3 block pinned at the corner.
pub fn check_single_pinning(seed: u64, configs: usize) -> Result<[IdentityRow; 2]> {
    let mut rng = rng_for(seed, 6);
    let lat = Lattice::new(&[3, 3], Boundary::Neumann)?;
    let (mut via_a, mut via_d) = (Vec::new(), Vec::new());
    for _ in 0..configs {
        let params = ModelParams::new(
            random_beta(&mut rng, 0.05, 5.0),
            lat.clone(),
            PinningScheme::Single { site: 0, eps: random_beta(&mut rng, 0.05, 5.0) },
        )?;
        let config = random_config(&mut rng, lat.size(), 2.0);
        let mut ea: f64 = 0.0;
        let mut ed: f64 = 0.0;
        for x in 0..lat.size() {
            ea = ea.max((single_pinning_identity(&params, &config, x)? - 1.0).abs());
            ed = ed.max((single_pinning_identity_d(&params, &config, x)? - 1.0).abs());
        }
        via_a.push(ea);
        via_d.push(ed);
    }
    Ok([
        IdentityRow::equality("single pinning: eps0 e^t0 A^-1_0x = 1", &via_a, IDENTITY_TOL),
        IdentityRow::equality("single pinning: eps0 e^-tx D^-1_0x = 1", &via_d, IDENTITY_TOL),
    ])
}

/// The normalization instances: all three pinning schemes, `β ∈ {0.05, 1, 5}`,
/// one to three sites.
pub fn ward_instances() -> Vec<ModelParams> {
    let chain = |n| Lattice::chain(n).unwrap();
    let two = |x, y, e| PinningScheme::TwoPoint { x, eps_x: e, y, eps_y: e };
    vec![
        ModelParams::new(1.0, chain(1), PinningScheme::Uniform { eps: 0.5 }),
        ModelParams::new(0.05, chain(2), PinningScheme::Uniform { eps: 1.0 }),
        ModelParams::new(1.0, chain(2), PinningScheme::TwoPoint { x: 0, eps_x: 0.5, y: 1, eps_y: 2.0 }),
        ModelParams::new(5.0, chain(2), PinningScheme::Single { site: 1, eps: 1.0 }),
        ModelParams::new(5.0, chain(3), PinningScheme::Uniform { eps: 0.3 }),
        ModelParams::new(0.05, chain(3), two(0, 2, 1.0)),
        ModelParams::new(1.0, chain(3), PinningScheme::Single { site: 1, eps: 0.5 }),
        ModelParams::new(5.0, chain(3), PinningScheme::Single { site: 0, eps: 1.0 }),
    ]
    .into_iter()
    .collect::<Result<_>>()
    .expect("valid instances")
}

/// `|Z − 1|` by quadrature with the automatic box.
pub fn ward_error(params: &ModelParams) -> Result<f64> {
    let z = partition_function(params, &QuadratureSpec::for_model(params))?;
    Ok((z.value - 1.0).abs())
}

pub fn check_ward(instances: &[ModelParams], name: &str) -> Result<IdentityRow> {
    let errors: Vec<f64> = instances.iter().map(ward_error).collect::<Result<_>>()?;
    Ok(IdentityRow::equality(name, &errors, WARD_TOL))
}

/// Lattice/path pairs with at most three sites off the path.
pub fn conditioned_geometries() -> Vec<(Lattice, Path)> {
    let block = |e: &[usize]| Lattice::new(e, Boundary::Neumann).unwrap();
    let path = |lat: &Lattice, coords: &[&[usize]]| {
        let sites = coords.iter().map(|c| lat.index(c).unwrap()).collect();
        Path::new(lat, sites).unwrap()
    };
    let mut out = Vec::new();
    let c3 = Lattice::chain(3).unwrap();
    out.push((c3.clone(), path(&c3, &[&[0]])));
    out.push((c3.clone(), path(&c3, &[&[1]])));
    let c4 = Lattice::chain(4).unwrap();
    out.push((c4.clone(), path(&c4, &[&[0], &[1]])));
    out.push((c4.clone(), path(&c4, &[&[2]])));
    let b22 = block(&[2, 2]);
    out.push((b22.clone(), path(&b22, &[&[0, 0]])));
    out.push((b22.clone(), path(&b22, &[&[0, 0], &[0, 1]])));
    let b23 = block(&[2, 3]);
    out.push((b23.clone(), path(&b23, &[&[0, 0], &[0, 1], &[0, 2]])));
    out.push((b23.clone(), path(&b23, &[&[0, 0], &[1, 0], &[1, 1]])));
    out
}

/// `Z^γ / bound − 1` for one instance, with `Z^γ` at the automatic resolution.
pub fn conditioned_excess(params: &ModelParams, gamma: &Path, t_gamma: &[f64]) -> Result<f64> {
    let spec = QuadratureSpec::for_conditioned(params, gamma, t_gamma);
    let z = conditioned_z(params, &spec, gamma, t_gamma)?;
    let b = conditioned_bound(params, gamma, t_gamma)?;
    Ok(z.value / b.bound - 1.0)
}

/// Conditioned partition function against its translation bound.
pub fn check_conditioned(seed: u64, per_geometry: usize) -> Result<IdentityRow> {
    let mut rng = rng_for(seed, 7);
    let betas = [0.05, 0.5, 2.0];
    let mut excess = Vec::new();
    for (lat, gamma) in conditioned_geometries() {
        for i in 0..per_geometry {
            let n = lat.size();
            let eps: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 0.0 } else { random_beta(&mut rng, 0.1, 3.0) }).collect();
            let params = ModelParams::new(betas[i % betas.len()], lat.clone(), PinningScheme::Custom(eps))?;
            let t_gamma: Vec<f64> = gamma.sites().iter().map(|_| rng.random_range(-2.0..=2.0)).collect();
            excess.push(conditioned_excess(&params, &gamma, &t_gamma)?);
        }
    }
    Ok(IdentityRow::inequality("conditioned Z <= translation bound", &excess, CONDITIONED_TOL))
}

fn symmetric_integral(f: impl Fn(f64) -> f64, strength: f64) -> Result<f64> {
    let half_width = (1.0 + 800.0 / strength).acosh();
    Ok(adaptive_gk(f, -half_width, half_width, 1e-14)?.value)
}

/// `√(β/2π) ∫ cosh(t/2) e^{−β(cosh t − 1)} dt`, equal to one for every `β`.
pub fn kinetic_normalization(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let v = symmetric_integral(|t| (0.5 * t).cosh() * (-beta * ((0.5 * t).sinh().powi(2) * 2.0)).exp(), beta)?;
    Ok((beta / (2.0 * std::f64::consts::PI)).sqrt() * v)
}

/// `∫ e^{t/2} e^{−ε(cosh t − 1)} dt/√(2π)`, equal to `1/√ε`.
pub fn pinned_half_exp_integral(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let v = symmetric_integral(|t| (0.5 * t).exp() * (-eps * ((0.5 * t).sinh().powi(2) * 2.0)).exp(), eps)?;
    Ok(v / (2.0 * std::f64::consts::PI).sqrt())
}

pub const CLOSED_FORM_PARAMS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

pub fn check_closed_forms() -> Result<IdentityRow> {
    let mut errors = Vec::new();
    for p in CLOSED_FORM_PARAMS {
        errors.push(rel_err(kinetic_normalization(p)?, 1.0));
        errors.push(rel_err(pinned_half_exp_integral(p)?, 1.0 / p.sqrt()));
    }
    Ok(IdentityRow::equality("one-dimensional closed forms", &errors, CLOSED_FORM_TOL))
}

/// Largest lattice on which the suite enumerates paths of the configured model.
pub const MODEL_PATH_SITES: usize = 9;
/// Largest configured model whose normalization is checked by quadrature.
pub const MODEL_WARD_SITES: usize = 3;

/// Run every check. Checks on the configured `model` (if any) are added when
/// its size and pinning allow them.
pub fn run_suite(opts: &SuiteOptions, model: Option<&ModelParams>) -> Result<Vec<IdentityRow>> {
    let seed = opts.seed;
    let mut rows = vec![
        check_inverse_bound(seed, opts.inverse_bound_configs)?,
        check_path_expansion_random(seed, opts.random_matrices)?,
        check_path_expansion_model(seed, &Lattice::new(&[2, 3], Boundary::Neumann)?, 20, "path expansion, D on 2x3")?,
        check_loop_gas(seed, opts.random_matrices)?,
        check_matrix_tree(seed, 5)?,
    ];
    rows.extend(check_single_pinning(seed, opts.single_pinning_configs)?);
    rows.push(check_closed_forms()?);
    if opts.quadrature {
        rows.push(check_ward(&ward_instances(), "normalization Z = 1")?);
        rows.push(check_conditioned(seed, opts.conditioned_per_geometry)?);
    }
    if let Some(params) = model {
        rows.extend(model_rows(seed, params, opts)?);
    }
    Ok(rows)
}

fn model_rows(seed: u64, params: &ModelParams, opts: &SuiteOptions) -> Result<Vec<IdentityRow>> {
    if !params.has_pinning() {
        return Err(Error::NoPinning);
    }
    let mut rng = rng_for(seed, 8);
    let n = params.size();
    let mut rows = Vec::new();
    let configs: Vec<FieldConfig> = (0..opts.inverse_bound_configs.clamp(1, 200)).map(|_| random_config(&mut rng, n, 3.0)).collect();

    if !params.pinned_sites().is_empty() {
        let excess: Vec<f64> = configs.iter().map(|c| inverse_bound_excess(params, c)).collect::<Result<_>>()?;
        rows.push(IdentityRow::inequality("inverse bound on configured model", &excess, INEQUALITY_TOL));
    }
    if n <= MODEL_PATH_SITES {
        let errors: Vec<f64> = configs
            .iter()
            .take(10)
            .map(|c| path_expansion_error(&build_d(params, c)?))
            .collect::<Result<_>>()?;
        rows.push(IdentityRow::equality("path expansion on configured model", &errors, IDENTITY_TOL));
    }
    if params.pinning().single_site().is_some() {
        let mut errors = Vec::new();
        for c in configs.iter().take(50) {
            let mut e: f64 = 0.0;
            for x in 0..n {
                e = e.max((single_pinning_identity(params, c, x)? - 1.0).abs());
            }
            errors.push(e);
        }
        rows.push(IdentityRow::equality("single pinning on configured model", &errors, IDENTITY_TOL));
        if n <= crate::combinatorics::MAX_TREE_SITES {
            let errors: Vec<f64> = configs
                .iter()
                .take(10)
                .map(|c| Ok(matrix_tree_check(params, c)?.relative_error()))
                .collect::<Result<_>>()?;
            rows.push(IdentityRow::equality("matrix-tree on configured model", &errors, IDENTITY_TOL));
        }
    }
    if opts.quadrature && n <= MODEL_WARD_SITES {
        rows.push(check_ward(std::slice::from_ref(params), "normalization on configured model")?);
    }
    Ok(rows)
}
