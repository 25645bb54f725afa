use std::path::PathBuf;

use hsm::bounds::{beta_c, connective_constant, decay_ratio, i_beta, small_beta_condition, BoundParams};
use hsm::decay::{measure_decay, two_point_sweep, DecayKind, DecayReport, DecayRow};
use hsm::exact::{expectation, partition_function, QuadratureResult, QuadratureSpec};
use hsm::verify::{run_suite, SuiteOptions};
use hsm::{Lattice, Observable};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, OutputSection, PinningSection};
use crate::error::{CliError, EXIT_ENVELOPE, EXIT_IDENTITY};
use crate::output::{hash_of, jnum, num, Meta, OutputDir};

/// Where results go and in which formats.
pub struct Sink {
    pub output: OutputSection,
}

impl Sink {
    pub fn new(config: Option<&ExperimentConfig>, out: Option<PathBuf>) -> Self {
        let mut output = config.map(|c| c.output.clone()).unwrap_or_default();
        if let Some(dir) = out {
            output.directory = dir;
        }
        Sink { output }
    }

    fn open(&self, meta: Meta) -> Result<OutputDir, CliError> {
        OutputDir::create(&self.output.directory, meta)
    }

    fn csv(&self) -> bool {
        self.output.formats.contains(&Format::Csv)
    }

    fn json(&self) -> bool {
        self.output.formats.contains(&Format::Json)
    }
}

pub fn verify(
    config: Option<&ExperimentConfig>,
    seed: Option<u64>,
    quadrature: bool,
    sink: &Sink,
) -> Result<i32, CliError> {
    let seed = seed.or(config.map(|c| c.run.seed)).unwrap_or(0);
    let opts = SuiteOptions { seed, quadrature, ..SuiteOptions::default() };
    let params = config.map(|c| c.params()).transpose()?;
    let rows = run_suite(&opts, params.as_ref())?;

    let hash = hash_of(&json!({ "config": config.map(|c| c.hash()), "seed": seed, "quadrature": quadrature }));
    let mut out = sink.open(Meta::new("verify", hash, seed))?;
    if sink.csv() {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![r.name.clone(), r.instances.to_string(), num(r.max_deviation), num(r.tolerance), r.passed.to_string()]
            })
            .collect();
        out.csv("verify.csv", &["check", "instances", "max_deviation", "tolerance", "passed"], &table, &[])?;
    }
    if sink.json() {
        let checks: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "check": r.name,
                    "instances": r.instances,
                    "max_deviation": jnum(r.max_deviation),
                    "tolerance": r.tolerance,
                    "passed": r.passed,
                })
            })
            .collect();
        out.json("verify.json", json!({ "checks": checks }))?;
    }
    println!("{:<48} {:>9} {:>13} {:>9}  result", "check", "instances", "max_dev", "tol");
    for r in &rows {
        println!(
            "{:<48} {:>9} {:>13.3e} {:>9.0e}  {}",
            r.name,
            r.instances,
            r.max_deviation,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", rows.len() - failed, rows.len());
    Ok(if failed == 0 { 0 } else { EXIT_IDENTITY })
}

struct ExactRow {
    quantity: &'static str,
    x: Option<usize>,
    y: Option<usize>,
    base: QuadratureResult,
    refined: Option<QuadratureResult>,
}

pub fn exact(config: &ExperimentConfig, sink: &Sink) -> Result<i32, CliError> {
    let params = config.params()?;
    let spec = config.quadrature_spec(&params)?;
    let refine = config.quadrature.refine;
    let eval = |quantity: &'static str, x: Option<usize>, y: Option<usize>, obs: Option<Observable>| {
        let run = |s: &QuadratureSpec| match obs {
            Some(o) => expectation(&params, s, o),
            None => partition_function(&params, s),
        };
        let base = run(&spec)?;
        let refined = if refine { Some(run(&spec.refined())?) } else { None };
        Ok::<_, CliError>(ExactRow { quantity, x, y, base, refined })
    };

    let mut rows = vec![eval("Z", None, None, None)?];
    for x in 0..params.size() {
        rows.push(eval("half_exp", Some(x), None, Some(Observable::HalfExp { x }))?);
    }
    let pinned = params.pinned_sites();
    for (i, &x) in pinned.iter().enumerate() {
        for &y in &pinned[i..] {
            rows.push(eval("correlation", Some(x), Some(y), Some(Observable::Correlation { x, y }))?);
        }
    }

    let mut out = sink.open(Meta::new("exact", config.hash(), config.run.seed))?;
    let site = |s: Option<usize>| s.map(|v| v.to_string()).unwrap_or_default();
    let change = |r: &ExactRow| r.refined.map(|f| (f.value - r.base.value).abs());
    if sink.csv() {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.quantity.to_string(),
                    site(r.x),
                    site(r.y),
                    num(r.base.value),
                    r.refined.map(|f| num(f.value)).unwrap_or_default(),
                    change(r).map(num).unwrap_or_default(),
                    num(r.base.tail_bound),
                ]
            })
            .collect();
        let grid = format!(
            "quadrature T={} panels={} order={}",
            spec.truncation, spec.panels, spec.order
        );
        out.csv(
            "expectations.csv",
            &["quantity", "x", "y", "value", "refined_value", "refine_diff", "tail_bound"],
            &table,
            &[grid],
        )?;
    }
    if sink.json() {
        let values: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "quantity": r.quantity,
                    "x": r.x,
                    "y": r.y,
                    "value": jnum(r.base.value),
                    "refined_value": r.refined.map(|f| jnum(f.value)),
                    "refine_diff": change(r).map(jnum),
                    "tail_bound": jnum(r.base.tail_bound),
                })
            })
            .collect();
        let grid = json!({
            "T": spec.truncation,
            "panels": spec.panels,
            "order": spec.order,
            "nodes_per_axis": spec.nodes_per_axis(),
            "dims": rows[0].base.dims,
        });
        out.json("exact.json", json!({ "quadrature": grid, "values": values }))?;
    }
    println!(
        "quadrature: T = {}, {} panels x {} nodes ({} per axis)",
        spec.truncation,
        spec.panels,
        spec.order,
        spec.nodes_per_axis()
    );
    println!("{:<12} {:>3} {:>3} {:>22} {:>12}", "quantity", "x", "y", "value", "refine_diff");
    for r in &rows {
        println!(
            "{:<12} {:>3} {:>3} {:>22.15e} {:>12}",
            r.quantity,
            site(r.x),
            site(r.y),
            r.base.value,
            change(r).map(|c| format!("{c:.2e}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(0)
}

pub fn sample(config: &ExperimentConfig, sink: &Sink) -> Result<i32, CliError> {
    let run = config.run_spec();
    let c0 = config.bounds.c0;
    let lattice = config.lattice()?;
    let report = match &config.model.pinning {
        PinningSection::TwoPointSweep { origin, eps } => {
            two_point_sweep(config.model.beta, &lattice, lattice.index(origin)?, *eps, &run, c0)?
        }
        _ => measure_decay(&config.params()?, &run, c0)?,
    };

    let mut out = sink.open(Meta::new("sample", config.hash(), config.run.seed))?;
    if sink.csv() {
        write_rows_csv(&mut out, &report, &lattice)?;
        let envelope: Vec<Vec<String>> =
            report.envelope_table().into_iter().map(|(d, b)| vec![num(d), num(b)]).collect();
        let note: Vec<String> = report.envelope_refusal.iter().map(|r| format!("envelope refused: {r}")).collect();
        out.csv("envelope.csv", &["distance", "bound"], &envelope, &note)?;
        let fit = vec![vec![
            report.fit.map(|f| num(f.rate)).unwrap_or_default(),
            report.fit.map(|f| num(f.rate_stderr)).unwrap_or_default(),
            report.bound.map(|b| num(b.bound_rate())).unwrap_or_default(),
            num(report.acceptance_rate),
            report.pass().map(|p| p.to_string()).unwrap_or_default(),
        ]];
        out.csv("fit.csv", &["rate", "rate_stderr", "bound_rate", "acceptance_rate", "pass"], &fit, &[])?;
    }
    if sink.json() {
        out.json("fit.json", report_json(&report, &lattice))?;
    }
    print_report(&report, &lattice);
    Ok(if report.pass() == Some(false) { EXIT_ENVELOPE } else { 0 })
}

fn coords(lattice: &Lattice, site: usize) -> String {
    let c = lattice.coords(site).expect("site from report");
    c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn row_fields(r: &DecayRow) -> [String; 5] {
    [
        num(r.estimate.mean),
        num(r.estimate.stderr),
        r.estimate.n_samples.to_string(),
        r.envelope.map(num).unwrap_or_default(),
        r.within_envelope().map(|w| w.to_string()).unwrap_or_default(),
    ]
}

fn write_rows_csv(out: &mut OutputDir, report: &DecayReport, lattice: &Lattice) -> Result<(), CliError> {
    let tail = ["mean", "stderr", "n_samples", "envelope", "within_envelope"];
    match report.kind {
        DecayKind::Correlation => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let y = r.y.expect("pair row");
                    let mut v = vec![r.x.to_string(), y.to_string(), coords(lattice, r.x), coords(lattice, y), num(r.distance)];
                    v.extend(row_fields(r));
                    v
                })
                .collect();
            let mut header = vec!["x", "y", "x_coords", "y_coords", "distance"];
            header.extend(tail);
            out.csv("correlations.csv", &header, &rows, &[])
        }
        DecayKind::HalfExp => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.x.to_string(), coords(lattice, r.x), num(r.distance)];
                    v.extend(row_fields(r));
                    v
                })
                .collect();
            let mut header = vec!["x", "x_coords", "distance"];
            header.extend(tail);
            let note = format!("pinned site {} ({})", report.reference, coords(lattice, report.reference));
            out.csv("half_exp.csv", &header, &rows, &[note])
        }
    }
}

fn report_json(report: &DecayReport, lattice: &Lattice) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "x": r.x,
                "y": r.y,
                "distance": r.distance,
                "mean": jnum(r.estimate.mean),
                "stderr": jnum(r.estimate.stderr),
                "n_samples": r.estimate.n_samples,
                "batches": r.estimate.batch_count,
                "envelope": r.envelope.map(jnum),
                "within_envelope": r.within_envelope(),
            })
        })
        .collect();
    let bound = report.bound.map(|b| {
        json!({
            "d": b.d(),
            "beta": b.beta(),
            "r": jnum(b.ratio()),
            "c0": jnum(b.c0()),
            "beta_c": jnum(b.beta_c().as_f64()),
            "bound_rate": jnum(b.bound_rate()),
        })
    });
    let fit = report.fit.map(|f| {
        json!({
            "rate": jnum(f.rate),
            "rate_stderr": jnum(f.rate_stderr),
            "intercept": jnum(f.intercept),
            "excluded": f.excluded,
        })
    });
    json!({
        "kind": match report.kind {
            DecayKind::Correlation => "correlation",
            DecayKind::HalfExp => "half_exp",
        },
        "reference": report.reference,
        "reference_coords": coords(lattice, report.reference),
        "acceptance_rate": report.acceptance_rate,
        "bound": bound,
        "envelope_refusal": report.envelope_refusal,
        "fit": fit,
        "fit_error": report.fit_error,
        "pass": report.pass(),
        "rows": rows,
    })
}

fn print_report(report: &DecayReport, lattice: &Lattice) {
    println!("{:>10} {:>10} {:>9} {:>13} {:>10} {:>12}", "x", "y", "distance", "mean", "stderr", "envelope");
    for r in &report.rows {
        println!(
            "{:>10} {:>10} {:>9.3} {:>13.5e} {:>10.2e} {:>12}",
            coords(lattice, r.x),
            r.y.map(|y| coords(lattice, y)).unwrap_or_else(|| "-".into()),
            r.distance,
            r.estimate.mean,
            r.estimate.stderr,
            r.envelope.map(|b| format!("{b:.3e}")).unwrap_or_else(|| "-".into())
        );
    }
    println!("acceptance rate {:.3}", report.acceptance_rate);
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => println!("fitted decay rate {:.4} ± {:.4}", f.rate, f.rate_stderr),
        (None, Some(e)) => println!("no decay fit: {e}"),
        _ => {}
    }
    if let Some(b) = &report.bound {
        println!("envelope rate -ln r = {:.4} (r = {:.4}, C0 = {:.4e})", b.bound_rate(), b.ratio(), b.c0());
    }
    if let Some(reason) = &report.envelope_refusal {
        println!("envelope refused: {reason}");
    }
    match report.pass() {
        Some(true) => println!("envelope: PASS"),
        Some(false) => println!("envelope: FAIL"),
        None => println!("envelope: not evaluated"),
    }
}

/// Default `β` grid: 20 log-spaced points on `[1e-3, 1e2]`.
pub fn default_betas() -> Vec<f64> {
    (0..20).map(|k| 10f64.powf(-3.0 + 5.0 * k as f64 / 19.0)).collect()
}

pub fn bounds(config: Option<&ExperimentConfig>, sink: &Sink) -> Result<i32, CliError> {
    let dims = config
        .map(|c| c.bounds.dims.clone().unwrap_or_else(|| vec![c.model.extents.len()]))
        .unwrap_or_else(|| vec![1, 2, 3]);
    let betas = config
        .map(|c| c.bounds.betas.clone().unwrap_or_else(|| vec![c.model.beta]))
        .unwrap_or_else(default_betas);

    let mut rows = Vec::new();
    for &d in &dims {
        let bc = beta_c(d)?;
        for &beta in &betas {
            let bp = BoundParams::new(d, beta)?;
            let mut c0 = bp.c0();
            if let Some(c) = config.and_then(|c| c.bounds.c0) {
                c0 = c;
            }
            rows.push(BoundsRow {
                d,
                beta,
                i_beta: i_beta(beta)?,
                r: decay_ratio(d, beta)?,
                beta_c: bc.as_f64(),
                localized: bc.exceeds(beta),
                small_beta: small_beta_condition(d, beta),
                c0,
            });
        }
    }

    let seed = config.map(|c| c.run.seed).unwrap_or(0);
    let hash = hash_of(&json!({ "config": config.map(|c| c.hash()), "dims": dims, "betas": betas }));
    let mut out = sink.open(Meta::new("bounds", hash, seed))?;
    if sink.csv() {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    num(r.beta),
                    num(r.i_beta),
                    num(r.r),
                    num(r.beta_c),
                    r.localized.to_string(),
                    r.small_beta.to_string(),
                    num(-r.r.ln()),
                    num(r.c0),
                ]
            })
            .collect();
        let header = ["d", "beta", "I_beta", "r", "beta_c", "localized", "small_beta", "bound_rate", "c0"];
        let note: Vec<String> = dims.iter().map(|&d| format!("c_{d}={}", connective_constant(d))).collect();
        out.csv("bounds.csv", &header, &table, &note)?;
    }
    if sink.json() {
        let values: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "d": r.d,
                    "beta": r.beta,
                    "I_beta": jnum(r.i_beta),
                    "r": jnum(r.r),
                    "beta_c": jnum(r.beta_c),
                    "localized": r.localized,
                    "small_beta": r.small_beta,
                    "bound_rate": jnum(-r.r.ln()),
                    "c0": jnum(r.c0),
                })
            })
            .collect();
        out.json("bounds.json", json!({ "rows": values }))?;
    }
    println!(
        "{:>2} {:>11} {:>11} {:>11} {:>11} {:>9} {:>10}",
        "d", "beta", "I_beta", "r", "beta_c", "localized", "small_beta"
    );
    for r in &rows {
        println!(
            "{:>2} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>9} {:>10}",
            r.d, r.beta, r.i_beta, r.r, r.beta_c, r.localized, r.small_beta
        );
    }
    Ok(0)
}

struct BoundsRow {
    d: usize,
    beta: f64,
    i_beta: f64,
    r: f64,
    beta_c: f64,
    /// `β < β_c(d)`: the envelopes apply.
    localized: bool,
    small_beta: bool,
    c0: f64,
}
