//! Decay measurements: sampled correlations or `⟨e^{t_x/2}⟩` profiles checked
//! against the exponential envelopes and fitted for a decay rate.

use crate::bounds::{fit_decay_rate, BoundParams, DecayFit, DecayPoint};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mcmc::{estimate, run_estimator, EstimatorResult, RunSpec};
use crate::model::{ModelParams, Observable, PinningScheme};

/// Which profile a decay run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    /// `⟨(D⁻¹)_xy⟩` for every pair `x ≤ y`.
    Correlation,
    /// `⟨e^{t_x/2}⟩` for every site, distances from the pinned site.
    HalfExp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub x: usize,
    /// `None` for the one-point profile.
    pub y: Option<usize>,
    pub distance: f64,
    pub estimate: EstimatorResult,
    pub envelope: Option<f64>,
}

impl DecayRow {
    /// `mean ≤ envelope + 3 stderr`; `None` without an envelope.
    pub fn within_envelope(&self) -> Option<bool> {
        self.envelope.map(|b| self.estimate.mean <= b + 3.0 * self.estimate.stderr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub kind: DecayKind,
    pub rows: Vec<DecayRow>,
    pub bound: Option<BoundParams>,
    /// Why no envelope was evaluated (e.g. `β ≥ β_c`).
    pub envelope_refusal: Option<String>,
    /// Fit over the rows starting at the reference site.
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub reference: usize,
    pub acceptance_rate: f64,
}

impl DecayReport {
    /// True when every row carrying an envelope lies under it within 3 stderr;
    /// `None` when no row has one (refused, or no pair satisfies the hypothesis).
    pub fn pass(&self) -> Option<bool> {
        let checks: Vec<bool> = self.rows.iter().filter_map(|r| r.within_envelope()).collect();
        if checks.is_empty() {
            None
        } else {
            Some(checks.iter().all(|&b| b))
        }
    }

    /// Envelope value per distinct distance, ascending.
    pub fn envelope_table(&self) -> Vec<(f64, f64)> {
        let mut table: Vec<(f64, f64)> =
            self.rows.iter().filter_map(|r| r.envelope.map(|b| (r.distance, b))).collect();
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        table.dedup_by(|a, b| a.0 == b.0);
        table
    }

    /// Rows from the reference site, sorted by distance.
    pub fn reference_rows(&self) -> Vec<&DecayRow> {
        let mut rows: Vec<&DecayRow> = self
            .rows
            .iter()
            .filter(|r| match self.kind {
                DecayKind::Correlation => r.x == self.reference,
                DecayKind::HalfExp => true,
            })
            .collect();
        rows.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        rows
    }
}

/// Sample the decay profile of `params`: `⟨e^{t_x/2}⟩` under single pinning,
/// otherwise all correlations `⟨(D⁻¹)_xy⟩`. The two-point envelope is attached
/// only to pairs with `ε_x, ε_y > 0`; the other pairs are reported without one.
/// `c0` overrides the envelope prefactor.
pub fn measure_decay(params: &ModelParams, run: &RunSpec, c0: Option<f64>) -> Result<DecayReport> {
    let lattice = params.lattice();
    let n = params.size();
    let (kind, reference) = match params.pinning().single_site() {
        Some((site, _)) => (DecayKind::HalfExp, site),
        None => {
            let pinned = params.pinned_sites();
            (DecayKind::Correlation, *pinned.first().ok_or(Error::NoPinning)?)
        }
    };

    let (labels, estimates) = match kind {
        DecayKind::HalfExp => {
            let est = run_estimator(params, run, n, |state, out| {
                for (slot, t) in out.iter_mut().zip(state.config().as_slice()) {
                    *slot = (0.5 * t).exp();
                }
            })?;
            ((0..n).map(|x| (x, None)).collect::<Vec<_>>(), est)
        }
        DecayKind::Correlation => {
            let pairs: Vec<(usize, Option<usize>)> =
                (0..n).flat_map(|x| (x..n).map(move |y| (x, Some(y)))).collect();
            let est = run_estimator(params, run, pairs.len(), |state, out| {
                let mut k = 0;
                for x in 0..n {
                    let col = state.factor().inverse_column(x).expect("site in range");
                    for v in &col[x..] {
                        out[k] = *v;
                        k += 1;
                    }
                }
            })?;
            (pairs, est)
        }
    };

    let (bound, envelope_refusal) = bound_for(params, c0)?;
    let eps = params.epsilons();
    let mut envelope_refusal = envelope_refusal;

    let mut rows = Vec::with_capacity(labels.len());
    for ((x, y), estimate) in labels.into_iter().zip(estimates) {
        let (a, b) = match y {
            Some(y) => (x, y),
            None => (reference, x),
        };
        let distance = lattice.distance(a, b)?;
        let envelope = match (&bound, kind) {
            (Some(bp), DecayKind::HalfExp) => record(bp.one_point_envelope(distance), &mut envelope_refusal),
            (Some(bp), DecayKind::Correlation) if eps[a] > 0.0 && eps[b] > 0.0 => {
                record(bp.two_point_envelope(eps[a], eps[b], distance), &mut envelope_refusal)
            }
            _ => None,
        };
        rows.push(DecayRow { x, y, distance, estimate, envelope });
    }
    Ok(finish(kind, rows, bound, envelope_refusal, reference))
}

fn finish(
    kind: DecayKind,
    rows: Vec<DecayRow>,
    bound: Option<BoundParams>,
    envelope_refusal: Option<String>,
    reference: usize,
) -> DecayReport {
    let acceptance_rate = if rows.is_empty() {
        1.0
    } else {
        rows.iter().map(|r| r.estimate.acceptance_rate).sum::<f64>() / rows.len() as f64
    };
    let mut report = DecayReport {
        kind,
        rows,
        bound,
        envelope_refusal,
        fit: None,
        fit_error: None,
        reference,
        acceptance_rate,
    };
    let points: Vec<DecayPoint> = report
        .reference_rows()
        .iter()
        .map(|r| DecayPoint { distance: r.distance, value: r.estimate.mean, stderr: r.estimate.stderr })
        .collect();
    match fit_decay_rate(&points) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    report
}

fn bound_for(params: &ModelParams, c0: Option<f64>) -> Result<(Option<BoundParams>, Option<String>)> {
    Ok(match BoundParams::new(params.lattice().dim(), params.beta()) {
        Ok(b) => match c0 {
            Some(c) => (Some(b.with_c0(c)?), None),
            None => (Some(b), None),
        },
        Err(e) => (None, Some(e.to_string())),
    })
}

/// `⟨G_{origin,y}⟩` for every `y ≠ origin`, each from its own run with the
/// two-point pinning `ε_origin = ε_y = eps`, so every row satisfies the
/// hypothesis of the two-point envelope. The run for `y` uses seed `run.seed + y`.
pub fn two_point_sweep(
    beta: f64,
    lattice: &Lattice,
    origin: usize,
    eps: f64,
    run: &RunSpec,
    c0: Option<f64>,
) -> Result<DecayReport> {
    lattice.check_site(origin)?;
    let mut rows = Vec::with_capacity(lattice.size().saturating_sub(1));
    let mut bound = None;
    let mut envelope_refusal = None;
    for y in (0..lattice.size()).filter(|&y| y != origin) {
        let params = ModelParams::new(
            beta,
            lattice.clone(),
            PinningScheme::TwoPoint { x: origin, eps_x: eps, y, eps_y: eps },
        )?;
        if bound.is_none() && envelope_refusal.is_none() {
            (bound, envelope_refusal) = bound_for(&params, c0)?;
        }
        let spec = RunSpec { seed: run.seed.wrapping_add(y as u64), ..run.clone() };
        let estimate = estimate(&params, Observable::Correlation { x: origin, y }, &spec)?;
        let distance = lattice.distance(origin, y)?;
        let envelope = bound.as_ref().and_then(|b| record(b.two_point_envelope(eps, eps, distance), &mut envelope_refusal));
        rows.push(DecayRow { x: origin, y: Some(y), distance, estimate, envelope });
    }
    Ok(finish(DecayKind::Correlation, rows, bound, envelope_refusal, origin))
}

fn record(value: Result<f64>, refusal: &mut Option<String>) -> Option<f64> {
    match value {
        Ok(v) => Some(v),
        Err(e) => {
            refusal.get_or_insert_with(|| e.to_string());
            None
        }
    }
}
