//! Entanglement swapping, transposition of reversible maps, twirling,
//! deterministic teleportation and programming of unitaries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choi::{faithful_pair, FaithfulPair};
use crate::circuit::{evaluate, Circuit, Payload};
use crate::dilation::hilbert;
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, ket_to_matrix, kron, max_abs_diff, omega_ket, partial_trace, pinv, projector,
    weyl, CMat, CVec,
};
use crate::theory::{EffectVec, LinearMap, MapTag, StateVec, SystemLabel, TheoryModel};

#[derive(Clone, Debug)]
pub struct SwapResult {
    /// Rank-one effect on the inner wires `B ⊗ A`.
    pub effect: EffectVec,
    pub probability: f64,
    /// `max |⟨E|_{inner} (Ψ ⊗ Ψ) − p Ψ|` over operator entries.
    pub residual: f64,
}

/// For `|Ψ⟩ = Σ M_{ab} |a⟩|b⟩` on `A ⊗ B`, the effect `|ε⟩⟨ε|` with
/// `ε ∝ conj(M⁺)` on `B ⊗ A` swaps `Ψ ⊗ Ψ` into `Ψ` on the outer wires with
/// probability `1/‖M⁺‖²`.
pub fn entanglement_swap(model: &dyn TheoryModel, psi: &StateVec) -> Result<SwapResult> {
    let h = hilbert(model)?;
    if psi.system.factors.len() != 2 {
        return Err(Error::invalid("entanglement swapping needs a bipartite state"));
    }
    let (da, db) = (psi.system.factors[0], psi.system.factors[1]);
    let ket = h.ket_of_pure(psi)?;
    let m = ket_to_matrix(&ket, da, db);
    let mp = pinv(&m, 1e-10);
    let norm = mp.norm();
    let eps = linalg::matrix_to_ket(&mp.map(|z| z.conj())) / cr(norm);
    let inner = SystemLabel::composite(psi.system.theory, vec![db, da]);
    let effect = h.effect_from_operator(&inner, &projector(&eps))?;
    let probability = 1.0 / (norm * norm);

    // contract on Ψ_{A1 B1} ⊗ Ψ_{A2 B2}: effect on (B1, A2)
    let rho = h.density(psi);
    let four = kron(&rho, &rho);
    let lift = kron(
        &kron(&CMat::identity(da, da), &projector(&eps)),
        &CMat::identity(db, db),
    );
    let out = partial_trace(&(lift * four), &[da, db, da, db], &[0, 3]);
    let residual = max_abs_diff(&out, &(rho * cr(probability)));
    Ok(SwapResult {
        effect,
        probability,
        residual,
    })
}

fn require_reversible(model: &dyn TheoryModel, u: &LinearMap) -> Result<()> {
    if u.input != u.output {
        return Err(Error::invalid("reversible maps act on a single system"));
    }
    if u.tag == MapTag::Reversible {
        return Ok(());
    }
    let h = hilbert(model)?;
    let ks = h.kraus_of(u)?;
    let ok = ks.len() == 1 && linalg::unitarity_residual(&ks[0]) < 1e-9;
    if !ok {
        return Err(Error::invalid("map is not reversible"));
    }
    Ok(())
}

/// `Uᵀ` on `Ã`, defined by `(U ⊗ I)Ψ = (I ⊗ Uᵀ)Ψ`, computed in coordinates
/// as `(E_Ψ M Ψ / p)ᵀ`.
pub fn transpose_reversible(model: &dyn TheoryModel, u: &LinearMap, fp: &FaithfulPair) -> Result<LinearMap> {
    require_reversible(model, u)?;
    if u.input != fp.system {
        return Err(Error::invalid("faithful pair is for a different system"));
    }
    let d = fp.system.coord_dim();
    let psi = crate::linalg::RMat::from_row_slice(d, d, &fp.psi.coords);
    let e = crate::linalg::RMat::from_row_slice(d, d, &fp.effect.coords);
    let t = (e * &u.matrix * psi / fp.probability).transpose();
    LinearMap::new(fp.purifying.clone(), fp.purifying.clone(), t, MapTag::Reversible)
}

/// `U* = (Uᵀ)⁻¹`.
pub fn conjugate_reversible(model: &dyn TheoryModel, u: &LinearMap, fp: &FaithfulPair) -> Result<LinearMap> {
    let t = transpose_reversible(model, u, fp)?;
    let inv = t
        .matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("transpose is not invertible"))?;
    LinearMap::new(t.input, t.output, inv, MapTag::Reversible)
}

#[derive(Clone, Debug)]
pub struct TwirlTest {
    pub probabilities: Vec<f64>,
    pub unitaries: Vec<CMat>,
    pub maps: Vec<LinearMap>,
    /// `Σ p_i U_i`.
    pub channel: LinearMap,
}

/// Weyl twirl `{1/d², W_k · W_k†}`, `W_k = X^a Z^b`, `k = a·d + b`; `W_0 = I`.
pub fn pauli_twirl(model: &dyn TheoryModel, d: usize) -> Result<TwirlTest> {
    let h = hilbert(model)?;
    if d < 2 {
        return Err(Error::invalid("twirl needs d ≥ 2"));
    }
    if h.is_real() {
        return Err(Error::unsupported("Weyl operators are complex for d ≥ 2"));
    }
    let sys = model.atom(d)?;
    let n = d * d;
    let unitaries: Vec<CMat> = (0..n).map(|k| weyl(d, k / d, k % d)).collect();
    let maps = unitaries
        .iter()
        .map(|w| h.unitary(&sys, w))
        .collect::<Result<Vec<_>>>()?;
    let p = 1.0 / n as f64;
    let kraus: Vec<CMat> = unitaries.iter().map(|w| w * cr(p.sqrt())).collect();
    let channel = h.map_from_kraus(&sys, &sys, kraus)?;
    Ok(TwirlTest {
        probabilities: vec![p; n],
        unitaries,
        maps,
        channel,
    })
}

/// Checks of the structure every deterministic teleportation scheme has.
#[derive(Clone, Debug)]
pub struct StructureClauses {
    /// Every correction is reversible.
    pub reversible_corrections: bool,
    /// `‖ρ_resource − χ‖` on each leg: the resource is locally maximally mixed.
    pub resource_residual: f64,
    /// `max_i |⟨B_i|(· ⊗ χ) − p_i e|`.
    pub marginal_residual: f64,
    /// `‖Σ p_i U_i − T‖` with `U_i` the inverse corrections.
    pub twirl_residual: f64,
    /// Every `B_i` is rank one.
    pub atomic: bool,
}

#[derive(Clone, Debug)]
pub struct TeleportationRun {
    pub d: usize,
    pub pair: FaithfulPair,
    /// Bell effects on `(A, B)`: input wire, first resource wire.
    pub effects: Vec<EffectVec>,
    /// Corrections on the second resource wire `C`.
    pub corrections: Vec<LinearMap>,
    pub probabilities: Vec<f64>,
    /// `max |C_i − p_i I|` in coordinates, one per outcome.
    pub residuals: Vec<f64>,
    pub clauses: StructureClauses,
    /// `max_{ij} |⟨B_i|(W_j ⊗ I)Φ⟩ − δ_ij|`.
    pub dense_coding_residual: f64,
}

impl TeleportationRun {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Bell ket `(W_k ⊗ I)|Φ⟩`.
pub fn bell_ket(d: usize, k: usize) -> CVec {
    crate::circuit::dsl::bell_basis_ket(d, k)
}

/// Teleportation circuit for outcome `k`: input `A`, resource `Φ` on
/// `(B, C)`, effect on `(A, B)`, correction on `C`.
pub fn teleport_circuit(
    model: &dyn TheoryModel,
    resource: &StateVec,
    effect: &EffectVec,
    correction: &LinearMap,
) -> Result<Circuit> {
    let d = correction.input.local_dim();
    let atom = model.atom(d)?;
    let mut c = Circuit::new();
    let a = c.add_wire(atom.clone());
    let b = c.add_wire(atom.clone());
    let w = c.add_wire(atom.clone());
    let out = c.add_wire(atom);
    c.mark_input(a);
    c.add_box("phi", Payload::State(resource.clone()), &[], &[b, w])?;
    c.add_box("bell", Payload::Effect(effect.clone()), &[a, b], &[])?;
    c.add_box("fix", Payload::Map(correction.clone()), &[w], &[out])?;
    c.set_outputs(vec![out]);
    c.validate()?;
    Ok(c)
}

pub fn deterministic_teleport(model: &dyn TheoryModel, d: usize) -> Result<TeleportationRun> {
    let h = hilbert(model)?;
    let twirl = pauli_twirl(model, d)?;
    let sys = model.atom(d)?;
    let pair = faithful_pair(model, &sys)?;
    let n = d * d;
    let pair_sys = sys.tensor(&sys)?;
    let phi = omega_ket(d) * cr(1.0 / (d as f64).sqrt());

    let mut effects = Vec::with_capacity(n);
    let mut corrections = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut atomic = true;
    let mut marginal_residual: f64 = 0.0;
    let chi = CMat::identity(d, d) / cr(d as f64);
    for (k, w) in twirl.unitaries.iter().enumerate() {
        let ket = bell_ket(d, k);
        let op = projector(&ket);
        atomic &= linalg::rank(&op, 1e-10) == 1;
        let eff = h.effect_from_operator(&pair_sys, &op)?;
        let fix = h.unitary(&sys, w)?;
        let circuit = teleport_circuit(model, &pair.psi, &eff, &fix)?;
        let got = evaluate(&circuit, model)?.matrix();
        let p = twirl.probabilities[k];
        let want = crate::linalg::RMat::identity(got.nrows(), got.ncols()) * p;
        residuals.push(linalg::max_abs_real(&(got - want)));
        // ⟨B_k|(· ⊗ χ) on the resource leg equals p e on the input leg
        let reduced = partial_trace(&(&op * kron(&CMat::identity(d, d), &chi)), &[d, d], &[0]);
        marginal_residual = marginal_residual.max(max_abs_diff(&reduced, &(CMat::identity(d, d) * cr(p))));
        effects.push(eff);
        corrections.push(fix);
    }
    let reversible_corrections = corrections.iter().all(|c| c.tag == MapTag::Reversible);
    // inverse corrections average to the twirl
    let inv_kraus: Vec<CMat> = twirl
        .unitaries
        .iter()
        .zip(&twirl.probabilities)
        .map(|(w, p)| w.adjoint() * cr(p.sqrt()))
        .collect();
    let avg = h.map_from_kraus(&sys, &sys, inv_kraus)?;
    let twirl_residual = avg.max_abs_diff(&twirl.channel);
    let rho = projector(&phi);
    let left = partial_trace(&rho, &[d, d], &[0]);
    let right = partial_trace(&rho, &[d, d], &[1]);
    let resource_residual = max_abs_diff(&left, &chi).max(max_abs_diff(&right, &chi));

    let mut dense_coding_residual: f64 = 0.0;
    for i in 0..n {
        let bi = bell_ket(d, i);
        for j in 0..n {
            let sj = bell_ket(d, j);
            let v = bi.dotc(&sj).norm_sqr();
            let want = if i == j { 1.0 } else { 0.0 };
            dense_coding_residual = dense_coding_residual.max((v - want).abs());
        }
    }

    Ok(TeleportationRun {
        d,
        pair,
        effects,
        corrections,
        probabilities: twirl.probabilities,
        residuals,
        clauses: StructureClauses {
            reversible_corrections,
            resource_residual,
            marginal_residual,
            twirl_residual,
            atomic,
        },
        dense_coding_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProgrammingBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ProgrammingBudget {
    fn default() -> Self {
        Self {
            restarts: 50,
            iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ProgrammingOutcome {
    /// Orthogonal programs: the controlled unitary retrieves every `U_i`.
    Exact { residual: f64 },
    /// Best average entanglement fidelity found, and `1 −` that.
    Deficit { fidelity: f64, deficit: f64 },
}

/// Try to program the unitaries `U_i` into a fixed retriever
/// `R: A ⊗ P → A` through program states `η_i` on `P`.
pub fn programming_demo(
    model: &dyn TheoryModel,
    unitaries: &[CMat],
    programs: &[CVec],
    budget: ProgrammingBudget,
) -> Result<ProgrammingOutcome> {
    hilbert(model)?;
    if unitaries.is_empty() || unitaries.len() != programs.len() {
        return Err(Error::invalid("one program per unitary is required"));
    }
    let d = unitaries[0].nrows();
    let dp = programs[0].len();
    for u in unitaries {
        if u.shape() != (d, d) || linalg::unitarity_residual(u) > 1e-9 {
            return Err(Error::invalid("programmed maps must be unitaries of one size"));
        }
    }
    for p in programs {
        if p.len() != dp || (p.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("programs must be normalized kets of one size"));
        }
    }
    let n = programs.len();
    let gram_off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| programs[i].dotc(&programs[j]).norm())
        .fold(0.0, f64::max);
    if gram_off < 1e-10 {
        return Ok(ProgrammingOutcome::Exact {
            residual: controlled_residual(unitaries, programs)?,
        });
    }
    // objective Tr(J W) on the Choi matrix (out ⊗ A ⊗ P) of the retriever
    let din = d * dp;
    let mut w = CMat::zeros(d * din, d * din);
    let phi = omega_ket(d) * cr(1.0 / (d as f64).sqrt());
    for (u, eta) in unitaries.iter().zip(programs) {
        let phi_i = kron(u, &CMat::identity(d, d)) * &phi;
        let eta_t = projector(eta).transpose();
        w += kron(&projector(&phi_i), &eta_t) / cr((n * d) as f64);
    }
    let mut best: f64 = 0.0;
    for r in 0..budget.restarts.max(1) {
        let mut j = if r == 0 {
            CMat::identity(d * din, d * din) / cr(d as f64)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(r as u64));
            random_choi(d, din, &mut rng)
        };
        let mut f = (&j * &w).trace().re;
        for _ in 0..budget.iterations {
            let wjw = &w * &j * &w;
            let lam = partial_trace(&wjw, &[d, din], &[1]);
            let inv = kron(&CMat::identity(d, d), &linalg::support_inv_sqrt(&lam, 1e-14));
            let next = &inv * wjw * &inv;
            // restore trace preservation on any part the inverse dropped
            let next = fix_trace_preserving(&next, d, din);
            let fnext = (&next * &w).trace().re;
            if fnext < f - 1e-12 {
                break;
            }
            let gain = fnext - f;
            j = next;
            f = fnext;
            if gain < 1e-12 {
                break;
            }
        }
        best = best.max(f);
    }
    Ok(ProgrammingOutcome::Deficit {
        fidelity: best,
        deficit: 1.0 - best,
    })
}

fn random_choi(dout: usize, din: usize, rng: &mut dyn rand::RngCore) -> CMat {
    let g = linalg::ginibre(dout * din, dout * din, rng, false);
    let j = &g * g.adjoint();
    fix_trace_preserving(&j, dout, din)
}

/// `(I ⊗ Λ^{-1/2}) J (I ⊗ Λ^{-1/2})` with `Λ = Tr_out J`, plus a completion
/// on the kernel of `Λ`.
fn fix_trace_preserving(j: &CMat, dout: usize, din: usize) -> CMat {
    let lam = partial_trace(j, &[dout, din], &[1]);
    let inv = kron(&CMat::identity(dout, dout), &linalg::support_inv_sqrt(&lam, 1e-14));
    let mut out = &inv * j * &inv;
    let supp = linalg::support_projector(&lam, 1e-14);
    let rest = CMat::identity(din, din) - supp;
    if linalg::max_abs(&rest) > 1e-12 {
        out += kron(&(CMat::identity(dout, dout) / cr(dout as f64)), &rest.transpose());
    }
    out
}

/// Controlled unitary `Σ U_i ⊗ |e_i⟩⟨e_i|` over an orthonormal completion of
/// the programs; residual of every retrieved channel against `U_i`.
fn controlled_residual(unitaries: &[CMat], programs: &[CVec]) -> Result<f64> {
    let d = unitaries[0].nrows();
    let dp = programs[0].len();
    let mut basis: Vec<CVec> = programs.to_vec();
    for k in 0..dp {
        let mut v = linalg::basis_ket(dp, k);
        for b in &basis {
            let ov = b.dotc(&v);
            v -= b * ov;
        }
        if v.norm() > 1e-8 {
            let nv = v.norm();
            basis.push(v / cr(nv));
        }
    }
    let mut cu = CMat::zeros(d * dp, d * dp);
    for (i, e) in basis.iter().enumerate() {
        let u = unitaries.get(i).cloned().unwrap_or_else(|| CMat::identity(d, d));
        cu += kron(&u, &projector(e));
    }
    let mut worst: f64 = 0.0;
    for (u, eta) in unitaries.iter().zip(programs) {
        for a in 0..d {
            for b in 0..d {
                let mut x = CMat::zeros(d, d);
                x[(a, b)] = cr(1.0);
                let full = &cu * kron(&x, &projector(eta)) * cu.adjoint();
                let got = partial_trace(&full, &[d, dp], &[0]);
                worst = worst.max(max_abs_diff(&got, &(u * &x * u.adjoint())));
            }
        }
    }
    Ok(worst)
}
