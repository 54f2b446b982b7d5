//! Typed circuits of preparations, transformations and effects, plus
//! outcome-indexed tests.

pub mod dsl;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::tensor::{apply_on_last, permute_rows};
use crate::theory::{
    EffectVec, LinearMap, MapTag, StateVec, SystemLabel, TheoryId, TheoryModel,
};

#[derive(Clone, Debug)]
pub enum Payload {
    State(StateVec),
    Effect(EffectVec),
    Map(LinearMap),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxKind {
    Prep,
    Map,
    Effect,
}

impl Payload {
    pub fn kind(&self) -> BoxKind {
        match self {
            Payload::State(_) => BoxKind::Prep,
            Payload::Effect(_) => BoxKind::Effect,
            Payload::Map(_) => BoxKind::Map,
        }
    }

    fn input_system(&self) -> SystemLabel {
        match self {
            Payload::State(s) => SystemLabel::trivial(s.system.theory),
            Payload::Effect(e) => e.system.clone(),
            Payload::Map(m) => m.input.clone(),
        }
    }

    fn output_system(&self) -> SystemLabel {
        match self {
            Payload::State(s) => s.system.clone(),
            Payload::Effect(e) => SystemLabel::trivial(e.system.theory),
            Payload::Map(m) => m.output.clone(),
        }
    }

    /// Coordinate matrix: states are columns, effects are rows.
    fn matrix(&self) -> RMat {
        match self {
            Payload::State(s) => RMat::from_column_slice(s.coords.len(), 1, &s.coords),
            Payload::Effect(e) => RMat::from_row_slice(1, e.coords.len(), &e.coords),
            Payload::Map(m) => m.matrix.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CircuitBox {
    pub name: String,
    pub payload: Payload,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// A wiring of boxes. Each wire has exactly one producer (a box or the
/// circuit's input list) and at most one consumer.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    wires: Vec<SystemLabel>,
    boxes: Vec<CircuitBox>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

/// The object a circuit evaluates to.
#[derive(Clone, Debug)]
pub enum Evaluation {
    Scalar(f64),
    State(StateVec),
    Effect(EffectVec),
    Map(LinearMap),
}

impl Evaluation {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Evaluation::Scalar(p) => Some(*p),
            _ => None,
        }
    }

    pub fn as_state(&self) -> Option<&StateVec> {
        match self {
            Evaluation::State(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&LinearMap> {
        match self {
            Evaluation::Map(m) => Some(m),
            _ => None,
        }
    }

    /// Coordinate matrix of the result (scalars are 1×1).
    pub fn matrix(&self) -> RMat {
        match self {
            Evaluation::Scalar(p) => RMat::from_element(1, 1, *p),
            Evaluation::State(s) => RMat::from_column_slice(s.coords.len(), 1, &s.coords),
            Evaluation::Effect(e) => RMat::from_row_slice(1, e.coords.len(), &e.coords),
            Evaluation::Map(m) => m.matrix.clone(),
        }
    }
}

fn wiring(wires: Vec<usize>, msg: impl Into<String>) -> Error {
    Error::Wiring {
        wires,
        msg: msg.into(),
    }
}

fn joint(theory: TheoryId, labels: &[&SystemLabel]) -> SystemLabel {
    let factors = labels.iter().flat_map(|l| l.factors.iter().copied()).collect();
    SystemLabel::composite(theory, factors)
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Circuit with bare wires and no boxes: the identity on `systems`.
    pub fn identity(systems: &[SystemLabel]) -> Self {
        let mut c = Circuit::new();
        for s in systems {
            let w = c.add_wire(s.clone());
            c.inputs.push(w);
            c.outputs.push(w);
        }
        c
    }

    /// One box with fresh wires, one per factor of its input/output systems.
    pub fn single(name: &str, payload: Payload) -> Self {
        let mut c = Circuit::new();
        let input = payload.input_system();
        let output = payload.output_system();
        let ins: Vec<usize> = if input.is_trivial() {
            Vec::new()
        } else {
            vec![c.add_wire(input)]
        };
        let outs: Vec<usize> = if output.is_trivial() {
            Vec::new()
        } else {
            vec![c.add_wire(output)]
        };
        c.inputs = ins.clone();
        c.outputs = outs.clone();
        c.boxes.push(CircuitBox {
            name: name.to_string(),
            payload,
            inputs: ins,
            outputs: outs,
        });
        c
    }

    pub fn add_wire(&mut self, sys: SystemLabel) -> usize {
        self.wires.push(sys);
        self.wires.len() - 1
    }

    pub fn mark_input(&mut self, w: usize) {
        self.inputs.push(w);
    }

    pub fn set_outputs(&mut self, outs: Vec<usize>) {
        self.outputs = outs;
    }

    pub fn add_box(
        &mut self,
        name: &str,
        payload: Payload,
        inputs: &[usize],
        outputs: &[usize],
    ) -> Result<usize> {
        for &w in inputs.iter().chain(outputs) {
            if w >= self.wires.len() {
                return Err(wiring(vec![w], "unknown wire"));
            }
        }
        self.boxes.push(CircuitBox {
            name: name.to_string(),
            payload,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        });
        Ok(self.boxes.len() - 1)
    }

    pub fn boxes(&self) -> &[CircuitBox] {
        &self.boxes
    }

    pub fn wire(&self, w: usize) -> &SystemLabel {
        &self.wires[w]
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    fn theory(&self) -> Option<TheoryId> {
        self.wires.first().map(|w| w.theory)
    }

    pub fn input_types(&self) -> Vec<SystemLabel> {
        self.inputs.iter().map(|&w| self.wires[w].clone()).collect()
    }

    pub fn output_types(&self) -> Vec<SystemLabel> {
        self.outputs.iter().map(|&w| self.wires[w].clone()).collect()
    }

    /// Check producer/consumer uniqueness, box signatures and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let nw = self.wires.len();
        let mut producer = vec![None::<usize>; nw];
        let mut consumer = vec![None::<usize>; nw];
        for &w in &self.inputs {
            if producer[w].is_some() {
                return Err(wiring(vec![w], "wire listed twice as circuit input"));
            }
            producer[w] = Some(usize::MAX);
        }
        for (b, bx) in self.boxes.iter().enumerate() {
            for &w in &bx.outputs {
                if producer[w].is_some() {
                    return Err(wiring(vec![w], "wire has two producers"));
                }
                producer[w] = Some(b);
            }
            for &w in &bx.inputs {
                if consumer[w].is_some() {
                    return Err(wiring(vec![w], "wire has two consumers"));
                }
                consumer[w] = Some(b);
            }
            let theory = self.theory().unwrap_or(TheoryId::Quantum);
            let ins: Vec<&SystemLabel> = bx.inputs.iter().map(|&w| &self.wires[w]).collect();
            let outs: Vec<&SystemLabel> = bx.outputs.iter().map(|&w| &self.wires[w]).collect();
            let want_in = bx.payload.input_system();
            let want_out = bx.payload.output_system();
            let have_in = joint(theory, &ins);
            let have_out = joint(theory, &outs);
            if have_in.coord_dim() != want_in.coord_dim()
                || strip_ones(&have_in) != strip_ones(&want_in)
            {
                return Err(wiring(
                    bx.inputs.clone(),
                    format!("box '{}' expects input {want_in}, wired {have_in}", bx.name),
                ));
            }
            if have_out.coord_dim() != want_out.coord_dim()
                || strip_ones(&have_out) != strip_ones(&want_out)
            {
                return Err(wiring(
                    bx.outputs.clone(),
                    format!("box '{}' produces {want_out}, wired {have_out}", bx.name),
                ));
            }
        }
        for w in 0..nw {
            if producer[w].is_none() {
                return Err(wiring(vec![w], "wire has no producer"));
            }
        }
        for &w in &self.outputs {
            if consumer[w].is_some() {
                return Err(wiring(vec![w], "circuit output is consumed inside the circuit"));
            }
        }
        let dangling: Vec<usize> = (0..nw)
            .filter(|&w| consumer[w].is_none() && !self.outputs.contains(&w))
            .collect();
        if !dangling.is_empty() {
            return Err(wiring(dangling, "wire neither consumed nor a circuit output"));
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm, lowest box index first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let nb = self.boxes.len();
        let mut producer = vec![None::<usize>; self.wires.len()];
        for (b, bx) in self.boxes.iter().enumerate() {
            for &w in &bx.outputs {
                producer[w] = Some(b);
            }
        }
        let deps: Vec<BTreeSet<usize>> = self
            .boxes
            .iter()
            .map(|bx| bx.inputs.iter().filter_map(|&w| producer[w]).collect())
            .collect();
        let mut done = vec![false; nb];
        let mut order = Vec::with_capacity(nb);
        while order.len() < nb {
            let next = (0..nb).find(|&b| !done[b] && deps[b].iter().all(|&d| done[d]));
            match next {
                Some(b) => {
                    done[b] = true;
                    order.push(b);
                }
                None => {
                    let stuck: Vec<usize> = (0..nb)
                        .filter(|&b| !done[b])
                        .flat_map(|b| self.boxes[b].inputs.clone())
                        .collect();
                    return Err(wiring(stuck, "circuit contains a cycle"));
                }
            }
        }
        Ok(order)
    }
}

fn strip_ones(s: &SystemLabel) -> Vec<usize> {
    s.factors.iter().copied().filter(|&d| d != 1).collect()
}

/// Sequential composition: outputs of `c1` feed the inputs of `c2` in order.
pub fn compose_seq(c1: &Circuit, c2: &Circuit) -> Result<Circuit> {
    if c1.outputs.len() != c2.inputs.len() {
        return Err(wiring(
            c1.outputs.clone(),
            format!(
                "{} open outputs cannot feed {} inputs",
                c1.outputs.len(),
                c2.inputs.len()
            ),
        ));
    }
    for (&o, &i) in c1.outputs.iter().zip(&c2.inputs) {
        if c1.wires[o] != c2.wires[i] {
            return Err(wiring(
                vec![o, i],
                format!("type mismatch: {} vs {}", c1.wires[o], c2.wires[i]),
            ));
        }
    }
    let mut out = c1.clone();
    let mut remap = vec![usize::MAX; c2.wires.len()];
    for (&o, &i) in c1.outputs.iter().zip(&c2.inputs) {
        remap[i] = o;
    }
    for (w, sys) in c2.wires.iter().enumerate() {
        if remap[w] == usize::MAX {
            remap[w] = out.wires.len();
            out.wires.push(sys.clone());
        }
    }
    for bx in &c2.boxes {
        out.boxes.push(CircuitBox {
            name: bx.name.clone(),
            payload: bx.payload.clone(),
            inputs: bx.inputs.iter().map(|&w| remap[w]).collect(),
            outputs: bx.outputs.iter().map(|&w| remap[w]).collect(),
        });
    }
    out.outputs = c2.outputs.iter().map(|&w| remap[w]).collect();
    Ok(out)
}

/// Parallel composition: disjoint union, `c1`'s wires listed first.
pub fn compose_par(c1: &Circuit, c2: &Circuit) -> Result<Circuit> {
    if let (Some(a), Some(b)) = (c1.theory(), c2.theory()) {
        if a != b {
            return Err(Error::invalid(format!("cannot compose {a} with {b} circuits")));
        }
    }
    let mut out = c1.clone();
    let offset = out.wires.len();
    out.wires.extend(c2.wires.iter().cloned());
    for bx in &c2.boxes {
        out.boxes.push(CircuitBox {
            name: bx.name.clone(),
            payload: bx.payload.clone(),
            inputs: bx.inputs.iter().map(|&w| w + offset).collect(),
            outputs: bx.outputs.iter().map(|&w| w + offset).collect(),
        });
    }
    out.inputs.extend(c2.inputs.iter().map(|&w| w + offset));
    out.outputs.extend(c2.outputs.iter().map(|&w| w + offset));
    Ok(out)
}

/// Evaluate in the default topological order.
pub fn evaluate(c: &Circuit, model: &dyn TheoryModel) -> Result<Evaluation> {
    c.validate()?;
    let order = c.topological_order()?;
    evaluate_in_order(c, model, &order)
}

/// Eager contraction following `order`, which must be topological.
pub fn evaluate_in_order(c: &Circuit, model: &dyn TheoryModel, order: &[usize]) -> Result<Evaluation> {
    let theory = model.id();
    if let Some(t) = c.theory() {
        if t != theory {
            return Err(Error::invalid(format!("circuit over {t} evaluated in {theory}")));
        }
    }
    let dim = |w: usize| c.wires[w].coord_dim();
    let in_dim: usize = c.inputs.iter().map(|&w| dim(w)).product();
    let mut live: Vec<usize> = c.inputs.clone();
    let mut r = RMat::identity(in_dim, in_dim);
    let product_coords = theory != TheoryId::RealQuantum;
    for &b in order {
        let bx = c.boxes.get(b).ok_or_else(|| Error::Payload(format!("no box with index {b}")))?;
        let mut positions = Vec::with_capacity(bx.inputs.len());
        for &w in &bx.inputs {
            let p = live.iter().position(|&l| l == w).ok_or_else(|| {
                wiring(vec![w], format!("box '{}' consumes a wire that is not live", bx.name))
            })?;
            positions.push(p);
        }
        let rest: Vec<usize> = (0..live.len()).filter(|p| !positions.contains(p)).collect();
        if !product_coords && (live.len() > 1 || (!rest.is_empty() && !bx.outputs.is_empty())) {
            return Err(Error::unsupported(
                "real-quantum circuits are evaluated only as single-wire chains",
            ));
        }
        let dims: Vec<usize> = live.iter().map(|&w| dim(w)).collect();
        let perm: Vec<usize> = rest.iter().chain(&positions).copied().collect();
        let permuted = permute_rows(&r, &dims, &perm);
        let d_rest: usize = rest.iter().map(|&p| dims[p]).product();
        let d_in: usize = positions.iter().map(|&p| dims[p]).product();
        let m = bx.payload.matrix();
        if m.ncols() != d_in {
            return Err(wiring(
                bx.inputs.clone(),
                format!("box '{}' expects {} input coordinates, got {d_in}", bx.name, m.ncols()),
            ));
        }
        let d_out: usize = bx.outputs.iter().map(|&w| dim(w)).product();
        if m.nrows() != d_out {
            return Err(wiring(
                bx.outputs.clone(),
                format!("box '{}' produces {} coordinates, wired {d_out}", bx.name, m.nrows()),
            ));
        }
        r = apply_on_last(&permuted, d_rest, d_in, &m);
        live = rest
            .iter()
            .map(|&p| live[p])
            .chain(bx.outputs.iter().copied())
            .collect();
    }
    // bring live wires into the declared output order
    let mut perm = Vec::with_capacity(c.outputs.len());
    for &w in &c.outputs {
        let p = live
            .iter()
            .position(|&l| l == w)
            .ok_or_else(|| wiring(vec![w], "declared output is not live"))?;
        perm.push(p);
    }
    if perm.len() != live.len() {
        let extra: Vec<usize> = live.iter().copied().filter(|w| !c.outputs.contains(w)).collect();
        return Err(wiring(extra, "live wires missing from the output list"));
    }
    let dims: Vec<usize> = live.iter().map(|&w| dim(w)).collect();
    let r = permute_rows(&r, &dims, &perm);
    let in_sys = joint(theory, &c.inputs.iter().map(|&w| &c.wires[w]).collect::<Vec<_>>());
    let out_sys = joint(theory, &c.outputs.iter().map(|&w| &c.wires[w]).collect::<Vec<_>>());
    Ok(match (c.inputs.is_empty(), c.outputs.is_empty()) {
        (true, true) => Evaluation::Scalar(r[(0, 0)]),
        (true, false) => Evaluation::State(StateVec::new(out_sys, r.column(0).iter().copied().collect())?),
        (false, true) => Evaluation::Effect(EffectVec::new(in_sys, r.row(0).iter().copied().collect())?),
        (false, false) => Evaluation::Map(LinearMap::new(in_sys, out_sys, r, MapTag::Unconstrained)?),
    })
}

/// An outcome-indexed family of transformations `A → B`.
#[derive(Clone, Debug)]
pub struct Test {
    pub input: SystemLabel,
    pub output: SystemLabel,
    pub outcomes: Vec<String>,
    pub branches: Vec<LinearMap>,
}

impl Test {
    /// Build and check `Σ_i e_B ∘ C_i = e_A` within `tol`.
    pub fn new(
        model: &dyn TheoryModel,
        outcomes: Vec<String>,
        branches: Vec<LinearMap>,
        tol: f64,
    ) -> Result<Self> {
        if branches.is_empty() || outcomes.len() != branches.len() {
            return Err(Error::invalid("a test needs one label per branch and at least one branch"));
        }
        let input = branches[0].input.clone();
        let output = branches[0].output.clone();
        for b in &branches {
            if b.input != input || b.output != output {
                return Err(Error::invalid("test branches must share input and output systems"));
            }
        }
        let t = Test {
            input,
            output,
            outcomes,
            branches,
        };
        let res = t.normalization_residual(model);
        if res > tol {
            return Err(Error::Precondition {
                what: "test branches do not sum to a channel".into(),
                residual: res,
            });
        }
        Ok(t)
    }

    /// Preparation test from sub-normalized states summing to a normalized one.
    pub fn preparation(model: &dyn TheoryModel, states: Vec<StateVec>, tol: f64) -> Result<Self> {
        let branches = states
            .into_iter()
            .map(|s| {
                let triv = SystemLabel::trivial(s.system.theory);
                let m = RMat::from_column_slice(s.coords.len(), 1, &s.coords);
                LinearMap::new(triv, s.system, m, MapTag::Transformation)
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..branches.len()).map(|i| i.to_string()).collect();
        Test::new(model, labels, branches, tol)
    }

    /// Observation test; requires `Σ a_i = e`.
    pub fn observation(model: &dyn TheoryModel, effects: Vec<EffectVec>, tol: f64) -> Result<Self> {
        let branches = effects
            .into_iter()
            .map(|a| {
                let triv = SystemLabel::trivial(a.system.theory);
                let m = RMat::from_row_slice(1, a.coords.len(), &a.coords);
                LinearMap::new(a.system, triv, m, MapTag::Transformation)
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..branches.len()).map(|i| i.to_string()).collect();
        Test::new(model, labels, branches, tol)
    }

    pub fn normalization_residual(&self, model: &dyn TheoryModel) -> f64 {
        let ea = model.deterministic_effect(&self.input);
        let eb = model.deterministic_effect(&self.output);
        let mut acc = vec![0.0; ea.coords.len()];
        for b in &self.branches {
            let p = b.pullback(&eb).expect("branch output matches test output");
            for (a, v) in acc.iter_mut().zip(&p.coords) {
                *a += v;
            }
        }
        acc.iter()
            .zip(&ea.coords)
            .map(|(a, e)| (a - e).abs())
            .fold(0.0, f64::max)
    }

    /// The channel `Σ_i C_i`.
    pub fn channel(&self) -> LinearMap {
        let mut m = self.branches[0].clone();
        for b in &self.branches[1..] {
            m = m.add(b).expect("branches share a signature");
        }
        m.tag = MapTag::Channel;
        m
    }

    /// `C_Y = Σ_{j ∈ Y} D_j` for each group `Y`.
    pub fn coarse_grain(&self, model: &dyn TheoryModel, groups: &[Vec<usize>], tol: f64) -> Result<Test> {
        let mut seen = BTreeSet::new();
        for g in groups {
            for &j in g {
                if j >= self.branches.len() || !seen.insert(j) {
                    return Err(Error::invalid("coarse-graining groups must partition the outcomes"));
                }
            }
        }
        if seen.len() != self.branches.len() || groups.iter().any(|g| g.is_empty()) {
            return Err(Error::invalid("coarse-graining groups must partition the outcomes"));
        }
        let mut branches = Vec::with_capacity(groups.len());
        let mut labels = Vec::with_capacity(groups.len());
        for g in groups {
            let mut m = self.branches[g[0]].clone();
            for &j in &g[1..] {
                m = m.add(&self.branches[j])?;
            }
            m.tag = MapTag::Transformation;
            branches.push(m);
            labels.push(
                g.iter()
                    .map(|&j| self.outcomes[j].clone())
                    .collect::<Vec<_>>()
                    .join("|"),
            );
        }
        Test::new(model, labels, branches, tol)
    }

    /// Conditioned test: after outcome `i`, run `next[i]`; outcomes `(i, j)`.
    pub fn condition(&self, model: &dyn TheoryModel, next: &[Test], tol: f64) -> Result<Test> {
        if next.len() != self.branches.len() {
            return Err(Error::invalid("one follow-up test per outcome is required"));
        }
        let out = next[0].output.clone();
        let mut branches = Vec::new();
        let mut labels = Vec::new();
        for (i, (c, t)) in self.branches.iter().zip(next).enumerate() {
            if t.input != self.output {
                return Err(wiring(vec![i], "follow-up test input differs from test output"));
            }
            if t.output != out {
                return Err(Error::unsupported(
                    "outcome-dependent output systems are not supported",
                ));
            }
            for (j, d) in t.branches.iter().enumerate() {
                let mut m = c.then(d)?;
                m.tag = MapTag::Transformation;
                branches.push(m);
                labels.push(format!("{}.{}", self.outcomes[i], t.outcomes[j]));
            }
        }
        Test::new(model, labels, branches, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, CMat};
    use crate::theory::{quantum_model, HilbertModel};

    fn qubit() -> (HilbertModel, SystemLabel) {
        let m = quantum_model(2).unwrap();
        let s = m.system();
        (m, s)
    }

    #[test]
    fn discard_of_mixed_is_one() {
        let (m, s) = qubit();
        let prep = Circuit::single("chi", Payload::State(m.invariant_state(&s)));
        let eff = Circuit::single("e", Payload::Effect(m.deterministic_effect(&s)));
        let c = compose_seq(&prep, &eff).unwrap();
        let p = evaluate(&c, &m).unwrap().as_scalar().unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bit_flip_probability() {
        let (m, s) = qubit();
        let x = crate::theory::paulis()[1].clone();
        let flip = m
            .map_from_kraus(&s, &s, vec![CMat::identity(2, 2) * cr(0.75f64.sqrt()), x * cr(0.5)])
            .unwrap();
        let zero = m.state_from_ket(&s, &crate::linalg::basis_ket(2, 0)).unwrap();
        let one = m
            .effect_from_operator(&s, &crate::linalg::projector(&crate::linalg::basis_ket(2, 1)))
            .unwrap();
        let c = compose_seq(
            &compose_seq(&Circuit::single("z", Payload::State(zero)), &Circuit::single("f", Payload::Map(flip)))
                .unwrap(),
            &Circuit::single("a", Payload::Effect(one)),
        )
        .unwrap();
        let p = evaluate(&c, &m).unwrap().as_scalar().unwrap();
        assert!((p - 0.25).abs() < 1e-14);
    }

    #[test]
    fn seq_type_mismatch_reports_wires() {
        let (m, s) = qubit();
        let q3 = SystemLabel::atom(TheoryId::Quantum, 3);
        let a = Circuit::single("a", Payload::State(m.invariant_state(&s)));
        let b = Circuit::identity(&[q3]);
        match compose_seq(&a, &b) {
            Err(Error::Wiring { wires, .. }) => assert_eq!(wires.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_detected() {
        let (m, s) = qubit();
        let mut c = Circuit::new();
        let w0 = c.add_wire(s.clone());
        let w1 = c.add_wire(s.clone());
        let id = LinearMap::identity(&s);
        c.add_box("a", Payload::Map(id.clone()), &[w0], &[w1]).unwrap();
        c.add_box("b", Payload::Map(id), &[w1], &[w0]).unwrap();
        assert!(matches!(evaluate(&c, &m), Err(Error::Wiring { .. })));
    }

    #[test]
    fn par_identity_is_identity() {
        let (m, s) = qubit();
        let c = compose_par(&Circuit::identity(&[s.clone()]), &Circuit::identity(&[s])).unwrap();
        let ev = evaluate(&c, &m).unwrap();
        let mm = ev.as_map().unwrap();
        assert_eq!(mm.matrix, RMat::identity(16, 16));
    }
}
