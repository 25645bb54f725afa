mod common;

use common::simpson;
use hsm::exact::{expectation, QuadratureSpec};
use hsm::mcmc::{estimate, estimate_many, metropolis_sweep, run_estimator, ChainState, RunSpec};
use hsm::model::log_weight;
use hsm::{FieldConfig, Lattice, ModelParams, Observable, PinningScheme};

fn cosh_m1(t: f64) -> f64 {
    2.0 * (0.5 * t).sinh().powi(2)
}

#[test]
fn zero_width_proposals_never_move() {
    let p = ModelParams::new(0.3, Lattice::chain(4).unwrap(), PinningScheme::Single { site: 0, eps: 1.0 }).unwrap();
    let start = FieldConfig::new(vec![0.5, -1.0, 2.0, 0.1]).unwrap();
    let mut s = ChainState::from_config(&p, start.clone(), 8, 0).unwrap();
    for _ in 0..50 {
        metropolis_sweep(&mut s, &p, 0.0);
    }
    assert_eq!(s.config(), &start);
    assert_eq!(s.acceptance_rate(), 1.0);
    assert_eq!(s.sweeps(), 50);
}

#[test]
fn one_site_marginal_matches_quadrature() {
    // Density ∝ e^{−ε(cosh t − 1)} √(ε e^{−t}); no coupling on a single site.
    let eps = 1.0;
    let p = ModelParams::new(1.0, Lattice::chain(1).unwrap(), PinningScheme::Single { site: 0, eps }).unwrap();
    let dens = |t: f64| (-eps * cosh_m1(t)).exp() * (eps * (-t).exp()).sqrt();
    let norm = simpson(&dens, -30.0, 30.0, 1e-13);
    let want = simpson(&|t| dens(t) * t.cosh(), -30.0, 30.0, 1e-13) / norm;
    let mut run = RunSpec::new(200_000, 4, 17);
    run.proposal_sigma = 2.0;
    let est = run_estimator(&p, &run, 1, |s, out| out[0] = s.config().get(0).cosh()).unwrap();
    let e = est[0];
    assert!((e.mean - want).abs() < 3.0 * e.stderr, "{} ± {} vs {want}", e.mean, e.stderr);
    assert!(e.stderr < 0.02 * want);
    assert_eq!(e.batch_count, 128);
}

#[test]
fn two_site_correlations_match_quadrature() {
    let p = ModelParams::new(
        0.7,
        Lattice::chain(2).unwrap(),
        PinningScheme::TwoPoint { x: 0, eps_x: 1.0, y: 1, eps_y: 0.5 },
    )
    .unwrap();
    let obs = [Observable::Correlation { x: 0, y: 1 }, Observable::Correlation { x: 1, y: 1 }, Observable::HalfExp { x: 0 }];
    let mut run = RunSpec::new(100_000, 4, 3);
    run.tune = true;
    let est = estimate_many(&p, &obs, &run).unwrap();
    let spec = QuadratureSpec::for_model(&p);
    for (o, e) in obs.iter().zip(&est) {
        let exact = expectation(&p, &spec, *o).unwrap().value;
        assert!((e.mean - exact).abs() < 3.0 * e.stderr, "{o:?}: {} ± {} vs {exact}", e.mean, e.stderr);
    }
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let p = ModelParams::new(0.2, Lattice::chain(5).unwrap(), PinningScheme::Uniform { eps: 0.5 }).unwrap();
    let run = RunSpec::new(500, 3, 99);
    let obs = Observable::Correlation { x: 0, y: 4 };
    let a = estimate(&p, obs, &run).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate(&p, obs, &run).unwrap());
    assert_eq!(a, b);
    let c = estimate(&p, obs, &RunSpec { seed: 100, ..run.clone() }).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn acceptance_rule_satisfies_detailed_balance() {
    // With a symmetric proposal, a → b is taken iff u < π(b)/π(a); so
    // π(a) P(a→b) = min(π(a), π(b)) = π(b) P(b→a).
    let p = ModelParams::new(0.9, Lattice::chain(3).unwrap(), PinningScheme::Single { site: 1, eps: 0.8 }).unwrap();
    let a = FieldConfig::new(vec![0.2, 0.0, -0.4]).unwrap();
    let mut b = a.clone();
    b.set(0, 2.5).unwrap();
    let (wa, wb) = (log_weight(&p, &a).unwrap(), log_weight(&p, &b).unwrap());
    assert!(wb < wa);
    let ratio = (wb - wa).exp();

    let fresh = || ChainState::from_config(&p, a.clone(), 0, 0).unwrap();
    let mut s = fresh();
    assert!(s.try_site_update(&p, 0, 2.5, ratio * (1.0 - 1e-9)));
    assert!((s.log_weight() - wb).abs() < 1e-12);
    let mut s = fresh();
    assert!(!s.try_site_update(&p, 0, 2.5, ratio * (1.0 + 1e-9)));
    assert_eq!(s.config(), &a);
    assert!((s.log_weight() - wa).abs() < 1e-12);

    // Uphill moves are always taken.
    let mut s = ChainState::from_config(&p, b.clone(), 0, 0).unwrap();
    assert!(s.try_site_update(&p, 0, 0.2, 0.999_999));

    let forward = wa.exp() * ratio.min(1.0);
    let backward = wb.exp() * 1.0;
    assert!((forward - backward).abs() < 1e-12 * forward);
}
