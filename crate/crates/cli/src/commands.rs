use std::fmt::Write as _;

use qmeasure_core::{
    alpha_bounds, amplitude, boolean_sum_plan, classify_outcome, enumerate_all_events, execute_plan,
    fourier_outcome_basis, interference, measure, measure_the_measure, partition, plan_route, AncillaProjector, Chain,
    Event, GatePlan64, MeasurementRoute, OutcomeClassification64, SubchainPartition,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::spec::{Mode, RunSpec};
use crate::CliError;

/// Classification enumerates `2ⁿ` outcome vectors of length `2ⁿ`.
const MAX_CLASSIFY_STEPS: usize = 8;

/// Full measure tables are printed without `--max-rows` only up to this `n`.
const MAX_FULL_TABLE_STEPS: usize = 2;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub mode: Mode,
    pub seed: u64,
    pub tolerance: f64,
    pub config: crate::spec::RawSpec,
    pub warnings: Vec<String>,
    pub passed: bool,
    pub results: serde_json::Value,
    #[serde(skip)]
    pub text: String,
    #[serde(skip)]
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
struct MeasureRow {
    event: String,
    k: usize,
    measure: f64,
}

#[derive(Debug, Serialize)]
struct SimulateRow {
    event: String,
    k: usize,
    probability: f64,
    inferred_measure: f64,
    oracle_measure: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct SynthRow {
    event: String,
    k: usize,
    partition: Option<SubchainPartition>,
    alpha_bounds: Option<(usize, usize)>,
    route: &'static str,
    plan: Option<GatePlan64>,
    fourier_target: Option<String>,
    probability: f64,
    inferred_measure: f64,
    oracle_measure: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct InterfereRow {
    events: Vec<String>,
    measures: Vec<f64>,
    order: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct ClassifyRow {
    event: String,
    outcome: String,
    classification: OutcomeClassification64,
}

#[derive(Debug, Serialize)]
struct AmplitudeRow {
    chain: String,
    re: f64,
    im: f64,
    modulus: f64,
    phase: f64,
}

#[derive(Debug, Serialize)]
struct Tables {
    amplitudes: Vec<AmplitudeRow>,
    measures: Vec<MeasureRow>,
    total_events: u128,
    truncated: bool,
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    event: String,
    k: usize,
    oracle_measure: f64,
    protocol_residual: f64,
    plan_residual: f64,
    fourier_residual: f64,
    passed: bool,
}

/// Shortest round-trip form, identical to the JSON output.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("float serializes")
}

fn to_value<S: Serialize>(rows: &S) -> serde_json::Value {
    serde_json::to_value(rows).expect("report rows serialize")
}

pub fn run(spec: &RunSpec, corrupt: bool) -> Result<Report, CliError> {
    let (results, text, passed, failures) = match spec.mode {
        Mode::Measure => cmd_measure(spec)?,
        Mode::Simulate => cmd_simulate(spec)?,
        Mode::Synth => cmd_synth(spec)?,
        Mode::Interfere => cmd_interfere(spec)?,
        Mode::Classify => cmd_classify(spec)?,
        Mode::Table => cmd_table(spec)?,
        Mode::Verify => cmd_verify(spec, corrupt)?,
    };
    let mut header = format!("mode {}  seed {}  n {}\n", spec.mode, spec.seed, spec.steps());
    let a = spec.config.initial;
    let _ = writeln!(
        header,
        "initial ({}, {}) ({}, {})",
        num(a.a0.re),
        num(a.a0.im),
        num(a.a1.re),
        num(a.a1.im)
    );
    for (i, d) in spec.config.analyzers.iter().enumerate() {
        let _ = writeln!(header, "analyzer {} {d}", i + 1);
    }
    Ok(Report {
        schema: 1,
        mode: spec.mode,
        seed: spec.seed,
        tolerance: spec.tolerance,
        config: spec.echo(),
        warnings: spec.warnings.clone(),
        passed,
        results,
        text: header + "\n" + &text,
        failures,
    })
}

/// JSON rows, text rendering, pass flag, failing rows.
type Rendered = (serde_json::Value, String, bool, Vec<String>);

fn cmd_measure(spec: &RunSpec) -> Result<Rendered, CliError> {
    let rows = spec
        .events
        .iter()
        .map(|e| Ok(MeasureRow { event: e.to_string(), k: e.len(), measure: measure(&spec.config, e)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut text = String::from("event\tk\tmeasure\n");
    for r in &rows {
        let _ = writeln!(text, "{}\t{}\t{}", r.event, r.k, num(r.measure));
    }
    Ok((to_value(&rows), text, true, Vec::new()))
}

fn simulate_one(spec: &RunSpec, e: &Event) -> Result<SimulateRow, CliError> {
    if e.is_empty() {
        // nothing to project on; μ(∅) = 0 by definition
        return Ok(SimulateRow {
            event: e.to_string(),
            k: 0,
            probability: 0.0,
            inferred_measure: 0.0,
            oracle_measure: 0.0,
            residual: 0.0,
        });
    }
    let r = measure_the_measure(&spec.config, e)?;
    Ok(SimulateRow {
        event: e.to_string(),
        k: r.cardinality,
        probability: r.probability,
        inferred_measure: r.inferred_measure,
        oracle_measure: r.oracle_measure,
        residual: r.residual,
    })
}

fn cmd_simulate(spec: &RunSpec) -> Result<Rendered, CliError> {
    let rows = spec.events.iter().map(|e| simulate_one(spec, e)).collect::<Result<Vec<_>, _>>()?;
    let mut text = String::from("event\tk\tP(E)\tk*P(E)\tmu(E)\tresidual\n");
    let mut passed = true;
    for r in &rows {
        passed &= r.residual < spec.tolerance;
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.event,
            r.k,
            num(r.probability),
            num(r.inferred_measure),
            num(r.oracle_measure),
            num(r.residual)
        );
    }
    Ok((to_value(&rows), text, passed, Vec::new()))
}

fn synth_one(spec: &RunSpec, e: &Event) -> Result<SynthRow, CliError> {
    if e.is_empty() {
        return Err(CliError::Semantic("the empty event needs no measurement plan".into()));
    }
    let route = plan_route::<f64>(e)?;
    let r = execute_plan(&spec.config, &route, e)?;
    let (part, bounds) = if e.len() >= 2 {
        (Some(partition(e)?), Some(alpha_bounds(e.len(), e.steps())))
    } else {
        (None, None)
    };
    let (name, plan, target) = match route {
        MeasurementRoute::BooleanSum(plan) => ("boolean_sum", Some(plan), None),
        MeasurementRoute::Fourier { target, .. } => ("fourier", None, Some(target.to_string())),
    };
    Ok(SynthRow {
        event: e.to_string(),
        k: e.len(),
        partition: part,
        alpha_bounds: bounds,
        route: name,
        plan,
        fourier_target: target,
        probability: r.probability,
        inferred_measure: r.inferred_measure,
        oracle_measure: r.oracle_measure,
        residual: r.residual,
    })
}

fn cmd_synth(spec: &RunSpec) -> Result<Rendered, CliError> {
    let rows = spec
        .events
        .iter()
        .filter(|e| !e.is_empty())
        .map(|e| synth_one(spec, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = String::new();
    let mut passed = true;
    for r in &rows {
        passed &= r.residual < spec.tolerance;
        let _ = writeln!(text, "event {}  k {}  route {}", r.event, r.k, r.route);
        if let (Some(p), Some((lo, hi))) = (&r.partition, r.alpha_bounds) {
            let _ = writeln!(text, "  common {:?}  groups {:?}  alpha {} (bounds {lo}..={hi})", p.common, p.groups, p.alpha);
        }
        if let Some(plan) = &r.plan {
            let bases: Vec<String> = plan.bases.iter().map(|b| format!("{b:?}")).collect();
            let _ = writeln!(text, "  xor (target, control) {:?}", plan.xor_gates);
            let _ = writeln!(text, "  bases {}", bases.join(" "));
            let expected: Vec<String> =
                plan.expected.iter().map(|b| b.map_or("-".to_string(), |b| b.to_string())).collect();
            let _ = writeln!(text, "  expected {}", expected.join(""));
            if !plan.residual.qubits.is_empty() {
                let _ = writeln!(text, "  residual qubits {:?}", plan.residual.qubits);
            }
        }
        if let Some(t) = &r.fourier_target {
            let _ = writeln!(text, "  subspace Fourier transform, read {t}");
        }
        let _ = writeln!(
            text,
            "  P {}  k*P {}  mu {}  residual {}",
            num(r.probability),
            num(r.inferred_measure),
            num(r.oracle_measure),
            num(r.residual)
        );
    }
    Ok((to_value(&rows), text, passed, Vec::new()))
}

fn cmd_interfere(spec: &RunSpec) -> Result<Rendered, CliError> {
    if !(1..=3).contains(&spec.events.len()) {
        return Err(CliError::Semantic(format!(
            "interference takes 1 to 3 disjoint events, got {}",
            spec.events.len()
        )));
    }
    let report = interference(&spec.config, &spec.events)?;
    let row = InterfereRow {
        events: spec.events.iter().map(|e| e.to_string()).collect(),
        measures: spec.events.iter().map(|e| measure(&spec.config, e)).collect::<Result<_, _>>()?,
        order: report.order,
        value: report.value,
    };
    let text = format!("I{} over {}\n{}\n", row.order, row.events.join(" "), num(row.value));
    Ok((to_value(&row), text, true, Vec::new()))
}

fn cmd_classify(spec: &RunSpec) -> Result<Rendered, CliError> {
    let n = spec.steps();
    if n > MAX_CLASSIFY_STEPS {
        return Err(CliError::Resource(format!("classification is limited to {MAX_CLASSIFY_STEPS} analyzers")));
    }
    let mut rows = Vec::new();
    for e in &spec.events {
        if e.is_empty() {
            return Err(CliError::Semantic("cannot classify outcomes for the empty event".into()));
        }
        for (chain, v) in fourier_outcome_basis::<f64>(e)? {
            let c = classify_outcome(&spec.config, e, &AncillaProjector::rank1(v)?)?;
            rows.push(ClassifyRow { event: e.to_string(), outcome: chain.to_string(), classification: c });
        }
    }
    let mut text = String::from("outcomes are ancilla readings after the subspace Fourier transform of E\n");
    text.push_str("event\toutcome\tstate\thappened\tP\trelation\tfinal system\n");
    for r in &rows {
        let c = &r.classification;
        let _ = writeln!(
            text,
            "{}\t{}\t{:?}\t{:?}\t{}\t{:?}\t{}",
            r.event,
            r.outcome,
            c.state_kind,
            c.verdict,
            num(c.probability),
            c.probability_relation,
            c.final_system_description
        );
    }
    if let Some(r) = rows.first() {
        let _ = writeln!(text, "\nconvention: {}", r.classification.convention);
    }
    Ok((to_value(&rows), text, true, Vec::new()))
}

fn cmd_table(spec: &RunSpec) -> Result<Rendered, CliError> {
    let n = spec.steps();
    let cfg = &spec.config;
    let total_events: u128 = 1u128.checked_shl(1u32 << n.min(31)).unwrap_or(u128::MAX);
    if n > MAX_FULL_TABLE_STEPS && spec.max_rows.is_none() {
        return Err(CliError::Resource(format!(
            "the measure table has {} rows at n = {n}; pass --max-rows",
            if n < 7 { total_events.to_string() } else { format!("2^{}", 1u64 << n) }
        )));
    }
    if n > 16 {
        return Err(CliError::Resource(format!("amplitude table over {n} analyzers is too large")));
    }
    let amplitudes = (0..1u64 << n)
        .map(|i| {
            let chain = Chain::new(n, i)?;
            let a = amplitude(cfg, &chain)?;
            Ok(AmplitudeRow { chain: chain.to_string(), re: a.re, im: a.im, modulus: a.norm(), phase: a.arg() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let events = enumerate_all_events(n)?;
    let mut measures = events
        .iter()
        .map(|e| Ok(MeasureRow { event: e.to_string(), k: e.len(), measure: measure(cfg, e)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let truncated = match spec.max_rows {
        Some(rows) if rows < measures.len() => {
            // largest measures first; ties keep canonical order
            measures.sort_by(|a, b| b.measure.total_cmp(&a.measure));
            measures.truncate(rows);
            true
        }
        _ => false,
    };

    let mut text = String::from("chain\t|A|\tphase\tA\n");
    for r in &amplitudes {
        let _ = writeln!(text, "{}\t{}\t{}\t({}, {})", r.chain, num(r.modulus), num(r.phase), num(r.re), num(r.im));
    }
    text.push_str(if truncated { "\nevent\tmeasure (largest first)\n" } else { "\nevent\tmeasure\n" });
    for r in &measures {
        let _ = writeln!(text, "{}\t{}", r.event, num(r.measure));
    }
    let tables = Tables { amplitudes, measures, total_events, truncated };
    Ok((to_value(&tables), text, true, Vec::new()))
}

fn residual(inferred: f64, oracle: f64) -> f64 {
    (inferred - oracle).abs()
}

fn verify_one(spec: &RunSpec, e: &Event, corrupt: bool) -> Result<VerifyRow, CliError> {
    let cfg = &spec.config;
    let oracle = measure(cfg, e)?;
    let (protocol, plan, fourier) = if e.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let direct = measure_the_measure(cfg, e)?;
        let mut plan = boolean_sum_plan::<f64>(e)?;
        if corrupt {
            // read the wrong value on the first computational-basis ancilla
            if let Some(bit) = plan.expected.iter_mut().flatten().next() {
                *bit ^= 1;
            }
        }
        let via_plan = execute_plan(cfg, &MeasurementRoute::BooleanSum(plan), e)?;
        let via_fourier = execute_plan(cfg, &MeasurementRoute::fourier(e)?, e)?;
        (
            direct.residual,
            residual(via_plan.inferred_measure, oracle),
            residual(via_fourier.inferred_measure, oracle),
        )
    };
    let tol = spec.tolerance;
    Ok(VerifyRow {
        event: e.to_string(),
        k: e.len(),
        oracle_measure: oracle,
        protocol_residual: protocol,
        plan_residual: plan,
        fourier_residual: fourier,
        passed: protocol < tol && plan < tol && fourier < tol,
    })
}

fn cmd_verify(spec: &RunSpec, corrupt: bool) -> Result<Rendered, CliError> {
    // par_iter().collect() keeps input order, so output is stable across runs
    let rows = spec
        .events
        .par_iter()
        .map(|e| verify_one(spec, e, corrupt))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = rows.iter().all(|r| r.passed);
    let mut text = String::from("event\tk\tmu(E)\tprotocol\tplan\tfourier\tstatus\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.event,
            r.k,
            num(r.oracle_measure),
            num(r.protocol_residual),
            num(r.plan_residual),
            num(r.fourier_residual),
            if r.passed { "ok" } else { "FAIL" }
        );
    }
    let failures = rows.iter().filter(|r| !r.passed).count();
    let _ = writeln!(
        text,
        "\n{} events, {} residuals, {failures} failing at tolerance {}",
        rows.len(),
        3 * rows.len(),
        num(spec.tolerance)
    );
    let failures = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            format!(
                "{}: mu {} protocol {} plan {} fourier {}",
                r.event,
                num(r.oracle_measure),
                num(r.protocol_residual),
                num(r.plan_residual),
                num(r.fourier_residual)
            )
        })
        .collect();
    Ok((to_value(&rows), text, passed, failures))
}
