//! Per-theory verdicts on causality, local discriminability, purification,
//! no-cloning, the distinguishability bound and information vs disturbance.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dilation::{connect_purifications, purify};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, RMat};
use crate::metrology::discriminate;
use crate::theory::{model_for, LinearMap, StateVec, SystemLabel, TheoryId, TheoryModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Causality,
    LocalDiscriminability,
    Purification,
    NoCloning,
    MaxDistinguishable,
    NoInfoWithoutDisturbance,
}

impl CheckId {
    pub const ALL: [CheckId; 6] = [
        CheckId::Causality,
        CheckId::LocalDiscriminability,
        CheckId::Purification,
        CheckId::NoCloning,
        CheckId::MaxDistinguishable,
        CheckId::NoInfoWithoutDisturbance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Causality => "causality",
            CheckId::LocalDiscriminability => "local-discriminability",
            CheckId::Purification => "purification",
            CheckId::NoCloning => "no-cloning",
            CheckId::MaxDistinguishable => "max-distinguishable",
            CheckId::NoInfoWithoutDisturbance => "no-info-without-disturbance",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown check '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Holds { evidence: Value },
    Fails { witness: Value },
    Unsupported { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds { .. } => "holds",
            Verdict::Fails { .. } => "fails",
            Verdict::Unsupported { .. } => "unsupported",
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    fn data(&self) -> Option<&Value> {
        match self {
            Verdict::Holds { evidence } => Some(evidence),
            Verdict::Fails { witness } => Some(witness),
            Verdict::Unsupported { .. } => None,
        }
    }
}

fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = RMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    m.svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// `⟨e', ρ_k⟩ = 1` on a spanning set of normalized states has the single
/// solution `e`.
pub fn check_causality(model: &dyn TheoryModel, a: &SystemLabel) -> Verdict {
    let states = model.spanning_states(a);
    let rows: Vec<Vec<f64>> = states.iter().map(|s| s.coords.clone()).collect();
    let dim = a.coord_dim();
    let r = rank(&rows, 1e-9);
    let e = model.deterministic_effect(a);
    let residual = states
        .iter()
        .map(|s| (s.pair(&e) - 1.0).abs())
        .fold(0.0, f64::max);
    let nullity = dim - r;
    let data = json!({"dim": dim, "rank": r, "nullity": nullity, "residual": residual});
    if nullity == 0 && residual < 1e-9 {
        Verdict::Holds { evidence: data }
    } else {
        Verdict::Fails { witness: data }
    }
}

/// `D(AB) = D(A)·D(B)`, with the span of product states as extra evidence.
pub fn check_local_discriminability(model: &dyn TheoryModel, a: &SystemLabel, b: &SystemLabel) -> Result<Verdict> {
    let ab = model.compose(a, b)?;
    let (da, db, dab) = (a.coord_dim(), b.coord_dim(), ab.coord_dim());
    let sa = model.spanning_states(a);
    let sb = model.spanning_states(b);
    let mut rows = Vec::new();
    for x in &sa {
        for y in &sb {
            rows.push(model.embed_product(x, y)?.coords);
        }
    }
    let product_rank = rank(&rows, 1e-9);
    let data = json!({"joint": dab, "product": da * db, "product_span_rank": product_rank});
    Ok(if dab == da * db {
        Verdict::Holds { evidence: data }
    } else {
        Verdict::Fails { witness: data }
    })
}

/// Existence on random mixed states, uniqueness through the connector
/// between `Ψ` and `(I ⊗ U)Ψ`.
pub fn check_purification(model: &dyn TheoryModel, a: &SystemLabel, samples: usize, seed: u64) -> Result<Verdict> {
    if samples == 0 {
        return Err(Error::invalid("purification check needs at least one sample"));
    }
    if model.id() == TheoryId::Classical {
        let mixed = model.invariant_state(a);
        let refused = matches!(model.purify(&mixed), Err(Error::PurificationUnsupported(_)));
        return Ok(Verdict::Fails {
            witness: json!({
                "reason": "pure composite states are products, whose marginals are pure",
                "state": mixed.coords,
                "purify_refused": refused,
            }),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut marginal, mut pure, mut connect, mut unitarity) = (0.0f64, true, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let rho = model.random_state(a, &mut rng);
        let p1 = purify(model, &rho)?;
        let back = model.marginal(&p1.psi, &(0..a.factors.len()).collect::<Vec<_>>())?;
        marginal = marginal.max(linalg::max_abs_diff_real(&back.coords, &rho.coords));
        pure &= model.is_pure(&p1.psi, 1e-9);
        let u = model.random_reversible(&p1.purifying, &mut rng);
        let lifted = model.tensor_maps(&LinearMap::identity(a), &u)?;
        let mut p2 = p1.clone();
        p2.psi = lifted.apply(&p1.psi)?;
        let c = connect_purifications(model, &p1, &p2)?;
        connect = connect.max(c.residual);
        unitarity = unitarity.max(linalg::unitarity_residual(&c.z));
    }
    let data = json!({
        "samples": samples,
        "seed": seed,
        "marginal_residual": marginal,
        "connector_residual": connect,
        "unitarity_residual": unitarity,
    });
    Ok(if pure && marginal < 1e-8 && connect < 1e-8 && unitarity < 1e-8 {
        Verdict::Holds { evidence: data }
    } else {
        Verdict::Fails { witness: data }
    })
}

/// A set is cloneable iff it is perfectly distinguishable; a spanning set
/// of pure states with a non-orthogonal pair is not.
pub fn check_no_cloning(model: &dyn TheoryModel, a: &SystemLabel) -> Result<Verdict> {
    let states = model.spanning_states(a);
    no_cloning_on(model, &states)
}

pub fn no_cloning_on(model: &dyn TheoryModel, states: &[StateVec]) -> Result<Verdict> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let p = discriminate(model, &states[i], &states[j], 0.5, 0.5)?.p_success;
            if worst.is_none_or(|w| p < w.2) {
                worst = Some((i, j, p));
            }
        }
    }
    Ok(match worst {
        Some((i, j, p)) if p < 1.0 - 1e-9 => Verdict::Holds {
            evidence: json!({
                "pair": [i, j],
                "p_success": p,
                "states": [states[i].coords, states[j].coords],
            }),
        },
        _ => Verdict::Fails {
            witness: json!({
                "cloneable": true,
                "states": states.iter().map(|s| s.coords.clone()).collect::<Vec<_>>(),
            }),
        },
    })
}

fn perfectly_distinguishable(model: &dyn TheoryModel, x: &StateVec, y: &StateVec) -> bool {
    x.sub(y).is_ok_and(|d| (model.op_norm(&d) - 2.0).abs() < 1e-9)
}

/// Greedy search for pairwise perfectly distinguishable pure states;
/// holds iff the count stays below `D(A)`.
pub fn check_max_distinguishable(model: &dyn TheoryModel, a: &SystemLabel, budget: usize, seed: u64) -> Result<Verdict> {
    let mut chosen: Vec<StateVec> = Vec::new();
    let consider = |s: StateVec, chosen: &mut Vec<StateVec>| {
        if chosen.iter().all(|c| perfectly_distinguishable(model, c, &s)) {
            chosen.push(s);
        }
    };
    if let Some(h) = model.as_hilbert() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = a.local_dim();
        let mut kets: Vec<linalg::CVec> = Vec::new();
        for _ in 0..budget.max(n) {
            let mut v = linalg::random_ket(n, &mut rng, h.is_real());
            for k in &kets {
                let ov = k.dotc(&v);
                v -= k * ov;
            }
            if v.norm() < 1e-6 {
                continue;
            }
            let nv = v.norm();
            v /= cr(nv);
            let s = h.state_from_ket(a, &v)?;
            let before = chosen.len();
            consider(s, &mut chosen);
            if chosen.len() > before {
                kets.push(v);
            }
        }
    } else {
        for s in model.spanning_states(a) {
            consider(s, &mut chosen);
        }
    }
    let bound = a.coord_dim();
    let data = json!({
        "count": chosen.len(),
        "bound": bound,
        "states": chosen.iter().map(|s| s.coords.clone()).collect::<Vec<_>>(),
    });
    Ok(if chosen.len() < bound {
        Verdict::Holds { evidence: data }
    } else {
        Verdict::Fails { witness: data }
    })
}

fn cosine_distance(a: &RMat, b: &RMat) -> f64 {
    1.0 - a.dot(b) / (a.norm() * b.norm())
}

/// An instrument that sums to the identity on a faithful state has every
/// branch proportional to the identity.
pub fn check_no_info_without_disturbance(
    model: &dyn TheoryModel,
    a: &SystemLabel,
    instrument: &[LinearMap],
) -> Result<Verdict> {
    model.own(a)?;
    let id = LinearMap::identity(a);
    let mut sum = id.scale(0.0);
    for m in instrument {
        if m.input != *a || m.output != *a {
            return Err(Error::invalid("instrument branches must act on A"));
        }
        sum = sum.add(m)?;
    }
    // the invariant state is full rank, so equality on it is equality of maps
    let residual = sum.max_abs_diff(&id);
    if residual > 1e-9 {
        return Err(Error::Precondition {
            what: "instrument does not sum to the identity".into(),
            residual,
        });
    }
    let mut probs = Vec::new();
    for (i, m) in instrument.iter().enumerate() {
        let p = m.matrix.dot(&id.matrix) / id.matrix.norm_squared();
        if m.matrix.norm() > 1e-12 && cosine_distance(&m.matrix, &id.matrix) > 1e-8 {
            return Ok(Verdict::Fails {
                witness: json!({"branch": i, "cosine_distance": cosine_distance(&m.matrix, &id.matrix)}),
            });
        }
        probs.push(p);
    }
    Ok(Verdict::Holds {
        evidence: json!({"probabilities": probs}),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub theory: TheoryId,
    pub dims: (usize, usize),
    pub check: CheckId,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub samples: usize,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatteryConfig {
    pub dims: (usize, usize),
    pub seed: u64,
    pub samples: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            dims: (2, 2),
            seed: 0,
            samples: 50,
        }
    }
}

pub fn run_check(theory: TheoryId, check: CheckId, cfg: &BatteryConfig) -> Result<Entry> {
    let (d, e) = cfg.dims;
    let model = model_for(theory, d)?;
    let m = model.as_ref();
    let a = m.atom(d)?;
    let verdict = match check {
        CheckId::Causality => check_causality(m, &a),
        CheckId::LocalDiscriminability => check_local_discriminability(m, &a, &m.atom(e)?)?,
        CheckId::Purification => check_purification(m, &a, cfg.samples, cfg.seed)?,
        CheckId::NoCloning => check_no_cloning(m, &a)?,
        CheckId::MaxDistinguishable => check_max_distinguishable(m, &a, cfg.samples, cfg.seed)?,
        CheckId::NoInfoWithoutDisturbance => {
            let id = LinearMap::identity(&a);
            check_no_info_without_disturbance(m, &a, &[id.scale(0.3), id.scale(0.7)])?
        }
    };
    Ok(Entry {
        theory,
        dims: cfg.dims,
        check,
        verdict,
    })
}

/// All checks for all theories; entries sorted by theory then check id.
pub fn run_battery(theories: &[TheoryId], cfg: &BatteryConfig) -> Result<AxiomReport> {
    let jobs: Vec<(TheoryId, CheckId)> = theories
        .iter()
        .flat_map(|&t| CheckId::ALL.into_iter().map(move |c| (t, c)))
        .collect();
    let mut entries = jobs
        .par_iter()
        .map(|&(t, c)| run_check(t, c, cfg))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by_key(|e| (e.theory, e.check));
    entries.dedup_by_key(|e| (e.theory, e.check));
    Ok(AxiomReport {
        seed: cfg.seed,
        samples: cfg.samples,
        entries,
    })
}

impl AxiomReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn verdict(&self, theory: TheoryId, check: CheckId) -> Option<&Verdict> {
        self.entries
            .iter()
            .find(|e| e.theory == theory && e.check == check)
            .map(|e| &e.verdict)
    }

    /// `(theory, check, label)` for comparison against golden files.
    pub fn matrix(&self) -> Vec<(TheoryId, CheckId, &'static str)> {
        self.entries
            .iter()
            .map(|e| (e.theory, e.check, e.verdict.label()))
            .collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut theories: Vec<TheoryId> = self.entries.iter().map(|e| e.theory).collect();
        theories.dedup();
        let mut out = String::from("| check |");
        for t in &theories {
            let _ = write!(out, " {t} |");
        }
        out.push_str("\n|---|");
        for _ in &theories {
            out.push_str("---|");
        }
        out.push('\n');
        for c in CheckId::ALL {
            if !self.entries.iter().any(|e| e.check == c) {
                continue;
            }
            let _ = write!(out, "| {c} |");
            for &t in &theories {
                let cell = match self.verdict(t, c) {
                    Some(v) => cell_text(c, v),
                    None => "-".to_string(),
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out
    }
}

fn cell_text(c: CheckId, v: &Verdict) -> String {
    let detail = match (c, v.data()) {
        (CheckId::LocalDiscriminability, Some(d)) => format!(" ({}, {})", d["joint"], d["product"]),
        (CheckId::MaxDistinguishable, Some(d)) => format!(" ({} of {})", d["count"], d["bound"]),
        (CheckId::NoCloning, Some(_)) if !v.holds() => " (cloneable)".to_string(),
        _ => String::new(),
    };
    format!("{}{}", v.label(), detail)
}

/// Recompute the evidence of an entry from its own data.
pub fn replay(entry: &Entry) -> Result<bool> {
    let (d, e) = entry.dims;
    let model = model_for(entry.theory, d)?;
    let m = model.as_ref();
    let a = m.atom(d)?;
    let Some(data) = entry.verdict.data() else {
        return Ok(true);
    };
    let state = |v: &Value| -> Result<StateVec> {
        StateVec::new(a.clone(), crate::io::real_vector_from_json(v)?)
    };
    Ok(match entry.check {
        CheckId::LocalDiscriminability => {
            let ab = m.compose(&a, &m.atom(e)?)?;
            data["joint"] == json!(ab.coord_dim())
                && data["product"] == json!(a.coord_dim() * m.atom(e)?.coord_dim())
                && entry.verdict.holds() == (data["joint"] == data["product"])
        }
        CheckId::Causality => check_causality(m, &a) == entry.verdict,
        CheckId::Purification if entry.theory == TheoryId::Classical => {
            let x = state(&data["state"])?;
            !m.is_pure(&x, 1e-9) && matches!(m.purify(&x), Err(Error::PurificationUnsupported(_)))
        }
        CheckId::Purification => {
            let cfg = BatteryConfig {
                dims: entry.dims,
                seed: data["seed"].as_u64().unwrap_or(0),
                samples: data["samples"].as_u64().unwrap_or(1) as usize,
            };
            run_check(entry.theory, entry.check, &cfg)?.verdict == entry.verdict
        }
        CheckId::NoCloning => {
            let states = data["states"]
                .as_array()
                .ok_or_else(|| Error::invalid("witness lacks states"))?
                .iter()
                .map(state)
                .collect::<Result<Vec<_>>>()?;
            no_cloning_on(m, &states)?.label() == entry.verdict.label()
        }
        CheckId::MaxDistinguishable => {
            let states = data["states"]
                .as_array()
                .ok_or_else(|| Error::invalid("witness lacks states"))?
                .iter()
                .map(state)
                .collect::<Result<Vec<_>>>()?;
            let pairwise = (0..states.len()).all(|i| {
                (i + 1..states.len()).all(|j| perfectly_distinguishable(m, &states[i], &states[j]))
            });
            pairwise
                && data["count"] == json!(states.len())
                && entry.verdict.holds() == (states.len() < a.coord_dim())
        }
        CheckId::NoInfoWithoutDisturbance => {
            run_check(entry.theory, entry.check, &BatteryConfig { dims: entry.dims, ..Default::default() })?
                .verdict
                == entry.verdict
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{classical_model, quantum_model, real_quantum_model};

    #[test]
    fn real_quantum_lacks_local_discriminability() {
        let m = real_quantum_model(2).unwrap();
        let a = m.system();
        match check_local_discriminability(&m, &a, &a).unwrap() {
            Verdict::Fails { witness } => {
                assert_eq!(witness["joint"], 10);
                assert_eq!(witness["product"], 9);
                assert_eq!(witness["product_span_rank"], 9);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn quantum_distinguishable_count_is_d() {
        for d in [2, 3] {
            let m = quantum_model(d).unwrap();
            match check_max_distinguishable(&m, &m.system(), 20, 0).unwrap() {
                Verdict::Holds { evidence } => assert_eq!(evidence["count"], d),
                v => panic!("{v:?}"),
            }
        }
    }

    #[test]
    fn classical_states_are_cloneable() {
        let m = classical_model(3).unwrap();
        assert!(!check_no_cloning(&m, &m.system()).unwrap().holds());
        let single = vec![m.vertex(&m.system(), 0)];
        assert!(!no_cloning_on(&m, &single).unwrap().holds());
    }

    #[test]
    fn dephasing_instrument_is_rejected() {
        let m = quantum_model(2).unwrap();
        let a = m.system();
        let p0 = linalg::projector(&linalg::basis_ket(2, 0));
        let p1 = linalg::projector(&linalg::basis_ket(2, 1));
        let b0 = m.map_from_kraus(&a, &a, vec![p0]).unwrap();
        let b1 = m.map_from_kraus(&a, &a, vec![p1]).unwrap();
        assert!(matches!(
            check_no_info_without_disturbance(&m, &a, &[b0, b1]),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn battery_matrix_and_replay() {
        let cfg = BatteryConfig {
            samples: 5,
            ..Default::default()
        };
        let r = run_battery(&TheoryId::ALL, &cfg).unwrap();
        let expect = [
            (TheoryId::Quantum, ["holds", "holds", "holds", "holds"]),
            (TheoryId::Classical, ["holds", "holds", "fails", "fails"]),
            (TheoryId::RealQuantum, ["holds", "fails", "holds", "holds"]),
        ];
        for (t, labels) in expect {
            for (c, l) in CheckId::ALL.iter().zip(labels) {
                assert_eq!(r.verdict(t, *c).unwrap().label(), l, "{t} {c}");
            }
        }
        for e in &r.entries {
            assert!(replay(e).unwrap(), "{:?}", e.check);
        }
        let back = AxiomReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_markdown().contains("| local-discriminability |"));
    }
}
