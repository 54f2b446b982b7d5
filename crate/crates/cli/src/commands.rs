use std::collections::BTreeMap;
use std::path::Path;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use purelab::axioms::{replay, run_battery, BatteryConfig};
use purelab::choi::{check_causal_order, comb_decompose, faithful_pair, link, retrieve, store, CausalOrder};
use purelab::dilation::stinespring;
use purelab::ec::{self, CodeSpec, Correctability};
use purelab::io::{self, Document, Kind};
use purelab::linalg::{self, cr, CMat};
use purelab::metrology::{self, SeesawBudget};
use purelab::protocols;
use purelab::theory::{model_for, LinearMap, SystemLabel, TheoryId, TheoryModel};
use purelab::{parse_script, DslEnv, Error, Evaluation, Result};

use crate::report::Report;
use crate::Global;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuiltinCode {
    /// Three-qubit repetition code against single bit flips.
    BitFlip,
    /// Fully depolarizing qubit channel on the whole space.
    Depolarizing,
    /// Real-qubit isometry whose marginals both delete.
    RealCounterexample,
}

fn theory(g: &Global) -> Result<TheoryId> {
    if g.theory == "all" {
        return Err(Error::InvalidArgument("--theory all is only valid for `axioms`".into()));
    }
    g.theory.parse()
}

fn model(g: &Global) -> Result<Box<dyn TheoryModel>> {
    model_for(theory(g)?, g.dim[0])
}

fn doc_value(d: &Document) -> Value {
    serde_json::to_value(d).expect("documents serialize")
}

fn read_doc(path: &Path) -> Result<Document> {
    io::read_document(path)
}

fn map_from_doc(model: &dyn TheoryModel, path: &Path) -> Result<LinearMap> {
    let d = read_doc(path)?;
    if !matches!(d.kind, Kind::Map | Kind::Kraus) {
        return Err(Error::InvalidArgument(format!("{} does not hold a map", path.display())));
    }
    d.to_map(model)
}

pub fn axioms(g: &Global, samples: usize) -> Result<Report> {
    let theories: Vec<TheoryId> = if g.theory == "all" {
        vec![TheoryId::Quantum, TheoryId::Classical, TheoryId::RealQuantum]
    } else {
        vec![g.theory.parse()?]
    };
    let d = g.dim[0];
    let cfg = BatteryConfig {
        dims: (d, g.dim.get(1).copied().unwrap_or(d)),
        seed: g.seed,
        samples,
    };
    let report = run_battery(&theories, &cfg)?;
    let mut replay_failures = Vec::new();
    for e in &report.entries {
        if !replay(e)? {
            replay_failures.push(format!("{}/{}", e.theory, e.check));
        }
    }
    let mut ok = replay_failures.is_empty();
    let mut json = serde_json::to_value(&report).expect("report serializes");
    json["replay_failures"] = json!(replay_failures);
    let mut md = report.to_markdown();
    if let Some(path) = &g.expect {
        let mismatches = compare_golden(&report, &io::read_text(path)?)?;
        ok &= mismatches.is_empty();
        md.push_str(&format!("\nexpectation: {}\n", if mismatches.is_empty() { "matched" } else { "MISMATCH" }));
        for m in &mismatches {
            md.push_str(&format!("- {m}\n"));
        }
        json["expectation"] = json!({"matched": mismatches.is_empty(), "mismatches": mismatches});
    }
    Ok(Report::new(json, ok).with_markdown(md))
}

/// Golden file: `{"verdicts": {theory: {check: label}}}`.
fn compare_golden(report: &purelab::AxiomReport, text: &str) -> Result<Vec<String>> {
    let v: Value = serde_json::from_str(text)?;
    let golden: BTreeMap<String, BTreeMap<String, String>> = serde_json::from_value(
        v.get("verdicts")
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("golden file needs a \"verdicts\" object".into()))?,
    )?;
    let mut out = Vec::new();
    for e in &report.entries {
        let want = golden
            .get(e.theory.as_str())
            .and_then(|m| m.get(e.check.as_str()));
        match want {
            Some(w) if w == e.verdict.label() => {}
            Some(w) => out.push(format!("{}/{}: expected {w}, got {}", e.theory, e.check, e.verdict.label())),
            None => out.push(format!("{}/{}: missing from the golden file", e.theory, e.check)),
        }
    }
    Ok(out)
}

pub fn eval(g: &Global, path: &Path, run: Option<&str>) -> Result<Report> {
    let text = io::read_text(path)?;
    let script = parse_script(&text)?;
    let model = model(g)?;
    let mut env = DslEnv::new(model.as_ref());
    env.default_dim = g.dim[0];
    if let Some(dir) = path.parent() {
        env.base_dir = dir.to_path_buf();
    }
    let name = match run {
        Some(r) => r.to_string(),
        None => script
            .runs()
            .first()
            .ok_or_else(|| Error::InvalidArgument("script has no run statement".into()))?
            .name
            .clone(),
    };
    let circuit = script.build(&name, &env)?;
    let m = model.as_ref();
    let result = match purelab::evaluate(&circuit, m)? {
        Evaluation::Scalar(p) => json!({"kind": "scalar", "value": p}),
        Evaluation::State(s) => json!({"kind": "state", "document": doc_value(&Document::from_state(m, &s))}),
        Evaluation::Effect(a) => json!({"kind": "effect", "document": doc_value(&Document::from_effect(m, &a))}),
        Evaluation::Map(l) => json!({"kind": "map", "document": doc_value(&Document::from_map(&l))}),
    };
    Ok(Report::new(json!({"run": name, "result": result}), true))
}

pub fn norm(g: &Global, a: &Path, b: &Path, restarts: usize) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    let (da, db) = (read_doc(a)?, read_doc(b)?);
    match (da.kind, db.kind) {
        (Kind::State, Kind::State) => {
            let delta = da.to_state(m)?.sub(&db.to_state(m)?)?;
            let v = metrology::state_norm(m, &delta)?;
            Ok(Report::new(json!({"kind": "state", "norm": v}), true))
        }
        (Kind::Map | Kind::Kraus, Kind::Map | Kind::Kraus) => {
            let delta = da.to_map(m)?.sub(&db.to_map(m)?)?;
            let budget = SeesawBudget {
                restarts,
                seed: g.seed,
                ..Default::default()
            };
            match metrology::transformation_norm(m, &delta, budget) {
                Ok(nb) => Ok(Report::new(
                    json!({"kind": "map", "lower_bound": nb.value, "restarts": restarts, "history": nb.history}),
                    true,
                )),
                Err(Error::Unsupported(reason)) => Ok(Report::new(json!({"kind": "map", "unsupported": reason}), true)),
                Err(e) => Err(e),
            }
        }
        _ => Err(Error::InvalidArgument("norm needs two states or two maps".into())),
    }
}

pub fn discriminate(g: &Global, a: &Path, b: &Path, prior: f64) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    let (x, y) = (read_doc(a)?.to_state(m)?, read_doc(b)?.to_state(m)?);
    let r = metrology::discriminate(m, &x, &y, prior, 1.0 - prior)?;
    Ok(Report::new(
        json!({
            "p_success": r.p_success,
            "priors": [prior, 1.0 - prior],
            "test": [doc_value(&Document::from_effect(m, &r.test.0)), doc_value(&Document::from_effect(m, &r.test.1))],
        }),
        true,
    ))
}

pub fn choi(g: &Global, map: Option<&Path>, count: usize) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    if let Some(path) = map {
        let c = map_from_doc(m, path)?;
        let fp = faithful_pair(m, &c.input)?;
        let r = store(m, &c, &fp)?;
        let back = retrieve(m, &r, g.tol)?;
        let residual = back.max_abs_diff(&c);
        return Ok(Report::new(
            json!({
                "probability": fp.probability,
                "choi_state": doc_value(&Document::from_state(m, &r.state)),
                "round_trip_residual": residual,
            }),
            residual <= g.tol,
        ));
    }
    let h = m
        .as_hilbert()
        .ok_or_else(|| Error::Unsupported("random channels need a Hilbert-space theory".into()))?;
    let d = g.dim[0];
    let a = m.atom(d)?;
    let fp = faithful_pair(m, &a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let (mut round, mut linked) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let c1 = h.map_from_kraus(&a, &a, random_kraus(d, d, 1 + d, h.is_real(), &mut rng))?;
        let c2 = h.map_from_kraus(&a, &a, random_kraus(d, d, 2, h.is_real(), &mut rng))?;
        let r1 = store(m, &c1, &fp)?;
        let r2 = store(m, &c2, &fp)?;
        round = round.max(retrieve(m, &r1, g.tol)?.max_abs_diff(&c1));
        let l = retrieve(m, &link(m, &r1, &r2)?, g.tol)?;
        linked = linked.max(l.max_abs_diff(&c1.then(&c2)?));
    }
    Ok(Report::new(
        json!({
            "channels": count,
            "probability": fp.probability,
            "round_trip_residual": round,
            "link_residual": linked,
        }),
        round <= g.tol && linked <= g.tol,
    ))
}

pub fn random_kraus(din: usize, dout: usize, r: usize, real: bool, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    let u = linalg::random_unitary(dout * r, rng, real);
    let v = u.columns(0, din).into_owned();
    linalg::kraus_from_isometry(&v, dout, r)
}

pub fn teleport(g: &Global) -> Result<Report> {
    let t = theory(g)?;
    let mut runs = Vec::new();
    let mut ok = true;
    for &d in g.dim.iter() {
        let model = model_for(t, d)?;
        let m = model.as_ref();
        let run = protocols::deterministic_teleport(m, d)?;
        let bound = 1.0 / m.atom(d)?.coord_dim() as f64;
        let c = &run.clauses;
        let clauses_ok = c.atomic
            && c.reversible_corrections
            && c.resource_residual <= g.tol
            && c.marginal_residual <= g.tol
            && c.twirl_residual <= g.tol;
        ok &= run.max_residual() <= g.tol && clauses_ok && run.pair.probability <= bound + 1e-15;
        runs.push(json!({
            "d": d,
            "probability": run.pair.probability,
            "bound": bound,
            "outcomes": run.effects.len(),
            "residuals": run.residuals,
            "max_residual": run.max_residual(),
            "clauses": {
                "reversible_corrections": c.reversible_corrections,
                "resource_residual": c.resource_residual,
                "marginal_residual": c.marginal_residual,
                "twirl_residual": c.twirl_residual,
                "atomic": c.atomic,
            },
            "dense_coding_residual": run.dense_coding_residual,
        }));
    }
    Ok(Report::new(json!({"theory": t, "runs": runs}), ok))
}

pub fn twirl(g: &Global) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    let d = g.dim[0];
    let t = protocols::pauli_twirl(m, d)?;
    let a = m.atom(d)?;
    let chi = m.invariant_state(&a);
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut residual: f64 = 0.0;
    for _ in 0..20 {
        let x = m.random_state(&a, &mut rng);
        let y = t.channel.apply(&x)?;
        residual = residual.max(linalg::max_abs_diff_real(&y.coords, &chi.coords));
    }
    Ok(Report::new(
        json!({
            "d": d,
            "outcomes": t.probabilities.len(),
            "probabilities": t.probabilities,
            "invariant_state_residual": residual,
        }),
        residual <= g.tol,
    ))
}

fn correctability_json(c: &Correctability) -> Value {
    match c {
        Correctability::Correctable {
            recovery,
            end_to_end_residual,
            factorization_residual,
            ..
        } => json!({
            "verdict": "correctable",
            "recovery_kraus": recovery.len(),
            "end_to_end_residual": end_to_end_residual,
            "factorization_residual": factorization_residual,
        }),
        Correctability::NotCorrectable {
            witness,
            kl_residual,
            factorization_residual,
        } => json!({
            "verdict": "not-correctable",
            "witness": [witness.0, witness.1],
            "kl_residual": kl_residual,
            "factorization_residual": factorization_residual,
        }),
    }
}

pub fn ec(g: &Global, spec: Option<&Path>, code: BuiltinCode) -> Result<Report> {
    let tol = g.tol.max(1e-8);
    if spec.is_none() && code == BuiltinCode::RealCounterexample {
        let r = ec::real_counterexample(1e-9)?;
        let ok = r.channel_residual < 1e-12
            && r.complement_residual < 1e-12
            && r.channel_deletion
            && r.complement_deletion
            && !r.correctable
            && r.complementarity.consistent();
        return Ok(Report::new(
            json!({
                "code": "real-counterexample",
                "channel_residual": r.channel_residual,
                "complement_residual": r.complement_residual,
                "channel_deletion": r.channel_deletion,
                "complement_deletion": r.complement_deletion,
                "correctable": r.correctable,
                "converse_holds": r.complement_deletion <= r.correctable,
            }),
            ok,
        ));
    }
    let (spec, name) = match spec {
        Some(path) => {
            let v: Value = serde_json::from_str(&io::read_text(path)?)?;
            (CodeSpec::from_json(&v)?, path.display().to_string())
        }
        None => match code {
            BuiltinCode::BitFlip => (ec::bit_flip_code(0.3)?, "bit-flip".to_string()),
            BuiltinCode::Depolarizing => {
                let kraus = purelab::theory::paulis().iter().map(|p| p * cr(0.5)).collect();
                (CodeSpec::full(kraus)?, "depolarizing".to_string())
            }
            BuiltinCode::RealCounterexample => unreachable!("handled above"),
        },
    };
    let model = model_for(theory(g)?, spec.din())?;
    let m = model.as_ref();
    let verdict = ec::is_correctable(m, &spec, tol)?;
    let comp = ec::complementarity_check(m, &spec, tol)?;
    let ok = match &verdict {
        Correctability::Correctable {
            end_to_end_residual,
            factorization_residual,
            ..
        } => *end_to_end_residual <= 1e-8 && *factorization_residual <= 1e-8,
        Correctability::NotCorrectable { .. } => true,
    } && comp.consistent();
    Ok(Report::new(
        json!({
            "code": name,
            "result": correctability_json(&verdict),
            "complement_deletion": comp.complement_deletion,
            "complementarity_consistent": comp.consistent(),
        }),
        ok,
    ))
}

pub fn comb(g: &Global, map: Option<&Path>, memory: usize) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    let h = m
        .as_hilbert()
        .ok_or_else(|| Error::Unsupported("comb decomposition needs a Hilbert-space theory".into()))?;
    let c = match map {
        Some(path) => map_from_doc(m, path)?,
        None => {
            let d = g.dim[0];
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let v1 = random_isometry(d, d * memory, h.is_real(), &mut rng);
            let v2 = random_isometry(memory * d, d * memory, h.is_real(), &mut rng);
            let w = linalg::kron(&CMat::identity(d, d), &v2) * linalg::kron(&v1, &CMat::identity(d, d));
            let sys = SystemLabel::composite(m.id(), vec![d, d]);
            h.map_from_kraus(&sys, &sys, linalg::kraus_from_isometry(&w, d * d, memory))?
        }
    };
    if c.input.factors.len() != c.output.factors.len() {
        return Err(Error::InvalidArgument("comb needs as many output factors as input factors".into()));
    }
    let parts: Vec<(usize, usize)> = c.input.factors.iter().copied().zip(c.output.factors.iter().copied()).collect();
    let order = check_causal_order(m, &c, 1, 1, 1e-9)?;
    let ordered = matches!(order, CausalOrder::Ordered { .. });
    let residual = match &order {
        CausalOrder::Ordered { residual, .. } | CausalOrder::NotOrdered { residual } => *residual,
    };
    let mut json = json!({"parts": parts, "ordered": ordered, "order_residual": residual});
    let mut ok = true;
    if ordered {
        let dec = comb_decompose(m, &c, &parts, 1e-9)?;
        let w = dec.recompose();
        let dout = c.output.local_dim();
        let ks = linalg::kraus_from_isometry(&w, dout, w.nrows() / dout);
        let rebuilt = h.map_from_kraus(&c.input, &c.output, ks)?;
        let rec = rebuilt.max_abs_diff(&c);
        ok = rec <= 1e-8;
        json["memory_dims"] = json!(dec.memory_dims());
        json["recomposition_residual"] = json!(rec);
    }
    Ok(Report::new(json, ok))
}

fn random_isometry(din: usize, dout: usize, real: bool, rng: &mut ChaCha8Rng) -> CMat {
    linalg::random_unitary(dout, rng, real).columns(0, din).into_owned()
}

pub fn dilate(g: &Global, map: Option<&Path>) -> Result<Report> {
    let model = model(g)?;
    let m = model.as_ref();
    let h = m
        .as_hilbert()
        .ok_or_else(|| Error::Unsupported("dilation needs a Hilbert-space theory".into()))?;
    let c = match map {
        Some(path) => map_from_doc(m, path)?,
        None => {
            let a = m.atom(2)?;
            let gamma: f64 = 0.3;
            let k0 = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - gamma).sqrt())]);
            let k1 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(gamma.sqrt()), cr(0.0), cr(0.0)]);
            h.map_from_kraus(&a, &a, vec![k0, k1])?
        }
    };
    let v = stinespring(m, &c)?;
    let iso = v.isometry_residual();
    let reduced = v.reduced(m)?.max_abs_diff(&c);
    let comp = v.complementary(m)?;
    Ok(Report::new(
        json!({
            "env_dim": v.env.local_dim(),
            "isometry_residual": iso,
            "reduced_residual": reduced,
            "complementary": doc_value(&Document::from_map(&comp)),
        }),
        iso <= 1e-10 && reduced <= g.tol.max(1e-10),
    ))
}
