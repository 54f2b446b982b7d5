//! Faithful states, the states–transformations correspondence, link
//! products, entanglement breaking and causally ordered channels.
//!
//! A state on `B ⊗ Ã` with a product coordinate basis is handled as the
//! `D(B) × D(Ã)` matrix of its coordinates. With the faithful pair
//! `(Ψ, E_Ψ)` one has `Ψ · E_Ψ = p_Ψ I`, so storing is `R = M Ψ`,
//! retrieving is `M = R E_Ψ / p_Ψ` and linking is `R₂ E_B R₁ / p_B`.

use crate::dilation::{connect_dilations, hilbert, stinespring, Dilation};
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, eigh, kron, max_abs_diff, min_eig, omega_ket, partial_trace, partial_transpose_second,
    projector, CMat, RMat,
};
use crate::tensor::kron_real;
use crate::theory::{
    EffectVec, LinearMap, MapTag, StateVec, SystemLabel, TheoryId, TheoryModel,
};

#[derive(Clone, Debug)]
pub struct FaithfulPair {
    pub system: SystemLabel,
    pub purifying: SystemLabel,
    /// Pure state on `A ⊗ Ã`.
    pub psi: StateVec,
    /// Effect on `Ã ⊗ A`.
    pub effect: EffectVec,
    pub probability: f64,
}

impl FaithfulPair {
    fn psi_mat(&self) -> RMat {
        as_matrix(&self.psi.coords, self.system.coord_dim(), self.purifying.coord_dim())
    }

    fn effect_mat(&self) -> RMat {
        as_matrix(&self.effect.coords, self.purifying.coord_dim(), self.system.coord_dim())
    }

    /// `max |Ψ E_Ψ − p I|` in coordinates.
    pub fn teleportation_residual(&self) -> f64 {
        let d = self.system.coord_dim();
        linalg::max_abs_real(&(self.psi_mat() * self.effect_mat() - RMat::identity(d, d) * self.probability))
    }
}

fn as_matrix(coords: &[f64], rows: usize, cols: usize) -> RMat {
    RMat::from_row_slice(rows, cols, coords)
}

fn product_basis(model: &dyn TheoryModel) -> Result<()> {
    if model.id() == TheoryId::RealQuantum {
        return Err(Error::unsupported(
            "real-quantum composites have no product coordinate basis; coordinate Choi calculus is unavailable",
        ));
    }
    Ok(())
}

/// Canonical faithful pair: the maximally entangled state (purification of
/// the invariant state) and its projector, `p = 1/d²`.
pub fn faithful_pair(model: &dyn TheoryModel, a: &SystemLabel) -> Result<FaithfulPair> {
    model.own(a)?;
    if model.id() == TheoryId::Classical && a.coord_dim() > 1 {
        // the invariant state of a classical system is mixed
        model.purify(&model.invariant_state(a))?;
    }
    product_basis(model)?;
    let h = hilbert(model)?;
    let d = a.local_dim();
    let purifying = a.clone();
    let ket = omega_ket(d) * cr(1.0 / (d as f64).sqrt());
    let proj = projector(&ket);
    let psi = h.state_from_density(&a.tensor(&purifying)?, &proj)?;
    let effect = h.effect_from_operator(&purifying.tensor(a)?, &proj)?;
    Ok(FaithfulPair {
        system: a.clone(),
        purifying,
        psi,
        effect,
        probability: 1.0 / (d * d) as f64,
    })
}

#[derive(Clone, Debug)]
pub struct ChoiState {
    /// Input system `A` of the stored map.
    pub input: SystemLabel,
    /// Output system `B`.
    pub output: SystemLabel,
    /// State on `B ⊗ Ã`.
    pub state: StateVec,
    pub pair: FaithfulPair,
}

impl ChoiState {
    fn mat(&self) -> RMat {
        as_matrix(&self.state.coords, self.output.coord_dim(), self.pair.purifying.coord_dim())
    }

    /// `⟨e_B| R`, a vector on `Ã`.
    pub fn marginal(&self, model: &dyn TheoryModel) -> Vec<f64> {
        let e = model.deterministic_effect(&self.output);
        let m = self.mat();
        (0..m.ncols()).map(|t| linalg::dot(&e.coords, m.column(t).as_slice())).collect()
    }
}

/// `R_C = (C ⊗ I)Ψ`.
pub fn store(model: &dyn TheoryModel, c: &LinearMap, fp: &FaithfulPair) -> Result<ChoiState> {
    product_basis(model)?;
    if c.input != fp.system {
        return Err(Error::invalid("faithful pair is for a different system"));
    }
    let r = &c.matrix * fp.psi_mat();
    let sys = c.output.tensor(&fp.purifying)?;
    Ok(ChoiState {
        input: c.input.clone(),
        output: c.output.clone(),
        state: StateVec::new(sys, r.transpose().as_slice().to_vec())?,
        pair: fp.clone(),
    })
}

/// Wrap a state on `B ⊗ Ã` for retrieval.
pub fn choi_state(output: &SystemLabel, state: StateVec, fp: &FaithfulPair) -> Result<ChoiState> {
    if state.system != output.tensor(&fp.purifying)? {
        return Err(Error::invalid("state is not on output ⊗ purifying system"));
    }
    Ok(ChoiState {
        input: fp.system.clone(),
        output: output.clone(),
        state,
        pair: fp.clone(),
    })
}

/// `M = R E_Ψ / p_Ψ`, after checking that `R` is a state whose marginal on
/// `Ã` is dominated by the marginal of `Ψ`.
pub fn retrieve(model: &dyn TheoryModel, r: &ChoiState, tol: f64) -> Result<LinearMap> {
    product_basis(model)?;
    if !model.contains_state(&r.state, tol)? {
        return Err(Error::NotAChoiState("not a state".into()));
    }
    let fp = &r.pair;
    let k = fp.system.factors.len();
    let ref_marg = model.marginal(&fp.psi, &(k..2 * k).collect::<Vec<_>>())?;
    let marg = StateVec::new(fp.purifying.clone(), r.marginal(model))?;
    let slack = ref_marg.sub(&marg)?;
    if !model.contains_state(&slack, tol)? {
        return Err(Error::NotAChoiState(
            "marginal on the purifying system exceeds that of the faithful state".into(),
        ));
    }
    let m = r.mat() * fp.effect_mat() / fp.probability;
    let tag = if linalg::max_abs_diff_real(&marg.coords, &ref_marg.coords) <= tol {
        MapTag::Channel
    } else {
        MapTag::Transformation
    };
    LinearMap::new(r.input.clone(), r.output.clone(), m, tag)
}

/// Link product of `R₁` on `B ⊗ Ã` and `R₂` on `C ⊗ B̃`: the Choi state of
/// the composite `D ∘ C`. With a trivial `B` this is the product state.
pub fn link(model: &dyn TheoryModel, r1: &ChoiState, r2: &ChoiState) -> Result<ChoiState> {
    product_basis(model)?;
    if r1.output != r2.input {
        return Err(Error::invalid(format!(
            "link: first output {} does not match second input {}",
            r1.output, r2.input
        )));
    }
    let fp_b = &r2.pair;
    let m = r2.mat() * fp_b.effect_mat() * r1.mat() / fp_b.probability;
    let sys = r2.output.tensor(&r1.pair.purifying)?;
    Ok(ChoiState {
        input: r1.input.clone(),
        output: r2.output.clone(),
        state: StateVec::new(sys, m.transpose().as_slice().to_vec())?,
        pair: r1.pair.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbMethod {
    /// Positive partial transpose; exact when `d_out · d_in ≤ 6`.
    Ppt,
    /// Look for a product basis in which the Choi matrix is block diagonal.
    MpWitness,
}

/// Measure-and-prepare form `C(ρ) = Σ_k Tr(P_k ρ) σ_k`.
#[derive(Clone, Debug)]
pub struct MeasurePrepare {
    pub povm: Vec<CMat>,
    pub states: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub enum EbVerdict {
    EntanglementBreaking(Option<MeasurePrepare>),
    /// Negative eigenvalue of the partially transposed Choi matrix.
    NotEntanglementBreaking(f64),
    Inconclusive,
}

pub fn is_entanglement_breaking(model: &dyn TheoryModel, c: &LinearMap, method: EbMethod) -> Result<EbVerdict> {
    let h = hilbert(model)?;
    let (dout, din) = (c.output.local_dim(), c.input.local_dim());
    let j = h.choi(c)?;
    // normalized Choi state, so the identity channel gives −1/2 at d = 2
    let pt_min = min_eig(&partial_transpose_second(&j, dout, din)) / din as f64;
    let tol = 1e-10;
    if pt_min < -tol {
        return Ok(EbVerdict::NotEntanglementBreaking(pt_min));
    }
    Ok(match method {
        EbMethod::Ppt if dout * din <= 6 => EbVerdict::EntanglementBreaking(None),
        EbMethod::Ppt => EbVerdict::Inconclusive,
        EbMethod::MpWitness => match mp_witness(&j, dout, din, tol) {
            Some(mp) => EbVerdict::EntanglementBreaking(Some(mp)),
            None => EbVerdict::Inconclusive,
        },
    })
}

fn basis_candidates(marg: &CMat) -> Vec<CMat> {
    let n = marg.nrows();
    vec![eigh(marg).1, CMat::identity(n, n)]
}

/// Choi matrix block diagonal in an input basis `{|a_k⟩}` (or output basis
/// `{|b_k⟩}`) yields a measure-and-prepare form.
fn mp_witness(j: &CMat, dout: usize, din: usize, tol: f64) -> Option<MeasurePrepare> {
    let j_in = partial_trace(j, &[dout, din], &[1]);
    for basis in basis_candidates(&j_in) {
        let blocks: Vec<CMat> = (0..din)
            .map(|k| kron(&CMat::identity(dout, dout), &projector(&basis.column(k).into_owned())))
            .collect();
        let pinched = blocks.iter().fold(CMat::zeros(j.nrows(), j.ncols()), |acc, p| acc + p * j * p);
        if max_abs_diff(&pinched, j) < tol {
            let mut povm = Vec::new();
            let mut states = Vec::new();
            for k in 0..din {
                let a = basis.column(k).into_owned();
                // σ_k = (I ⊗ ⟨a_k|) J (I ⊗ |a_k⟩); measuring ρᵀ in {|a_k⟩} is
                // measuring ρ in {|ā_k⟩}
                let mut sigma = CMat::zeros(dout, dout);
                for x in 0..dout {
                    for y in 0..dout {
                        let mut s = cr(0.0);
                        for i in 0..din {
                            for l in 0..din {
                                s += a[i].conj() * j[(x * din + i, y * din + l)] * a[l];
                            }
                        }
                        sigma[(x, y)] = s;
                    }
                }
                let abar = a.map(|z| z.conj());
                povm.push(projector(&abar));
                states.push(sigma);
            }
            return Some(MeasurePrepare { povm, states });
        }
    }
    let j_out = partial_trace(j, &[dout, din], &[0]);
    for basis in basis_candidates(&j_out) {
        let blocks: Vec<CMat> = (0..dout)
            .map(|k| kron(&projector(&basis.column(k).into_owned()), &CMat::identity(din, din)))
            .collect();
        let pinched = blocks.iter().fold(CMat::zeros(j.nrows(), j.ncols()), |acc, p| acc + p * j * p);
        if max_abs_diff(&pinched, j) < tol {
            let mut povm = Vec::new();
            let mut states = Vec::new();
            for k in 0..dout {
                let b = basis.column(k).into_owned();
                // P_kᵀ = (⟨b_k| ⊗ I) J (|b_k⟩ ⊗ I)
                let mut pt = CMat::zeros(din, din);
                for x in 0..din {
                    for y in 0..din {
                        let mut s = cr(0.0);
                        for i in 0..dout {
                            for l in 0..dout {
                                s += b[i].conj() * j[(i * din + x, l * din + y)] * b[l];
                            }
                        }
                        pt[(x, y)] = s;
                    }
                }
                povm.push(pt.transpose());
                states.push(projector(&b));
            }
            return Some(MeasurePrepare { povm, states });
        }
    }
    None
}

#[derive(Clone, Debug)]
pub enum CausalOrder {
    /// `⟨e_{B2}| C = D ⊗ ⟨e_{A2}|`.
    Ordered { reduced: LinearMap, residual: f64 },
    NotOrdered { residual: f64 },
}

/// Split `c: A1 A2 → B1 B2` after `in_split` input and `out_split` output
/// factors and test whether `B1` depends on `A1` only.
pub fn check_causal_order(
    model: &dyn TheoryModel,
    c: &LinearMap,
    in_split: usize,
    out_split: usize,
    tol: f64,
) -> Result<CausalOrder> {
    product_basis(model)?;
    let nin = c.input.factors.len();
    let nout = c.output.factors.len();
    if in_split > nin || out_split > nout {
        return Err(Error::invalid("split beyond the number of factors"));
    }
    let a1 = SystemLabel::composite(c.input.theory, c.input.factors[..in_split].to_vec());
    let a2 = SystemLabel::composite(c.input.theory, c.input.factors[in_split..].to_vec());
    let b1 = SystemLabel::composite(c.output.theory, c.output.factors[..out_split].to_vec());
    let b2 = SystemLabel::composite(c.output.theory, c.output.factors[out_split..].to_vec());
    let e_b2 = RMat::from_row_slice(1, b2.coord_dim(), &model.deterministic_effect(&b2).coords);
    let e_a2 = RMat::from_row_slice(1, a2.coord_dim(), &model.deterministic_effect(&a2).coords);
    let chi_a2 = model.invariant_state(&a2);
    let chi = RMat::from_column_slice(a2.coord_dim(), 1, &chi_a2.coords);
    let l = kron_real(&RMat::identity(b1.coord_dim(), b1.coord_dim()), &e_b2) * &c.matrix;
    let d = &l * kron_real(&RMat::identity(a1.coord_dim(), a1.coord_dim()), &chi);
    let residual = linalg::max_abs_real(&(&l - kron_real(&d, &e_a2)));
    if residual > tol {
        return Ok(CausalOrder::NotOrdered { residual });
    }
    let mut reduced = LinearMap::new(a1, b1, d, MapTag::Unconstrained)?;
    if c.tag == MapTag::Channel || c.tag == MapTag::Reversible {
        reduced.tag = MapTag::Channel;
    }
    Ok(CausalOrder::Ordered { reduced, residual })
}

/// One tooth of a comb: `V_k: E_{k−1} ⊗ A_k → B_k ⊗ E_k`.
#[derive(Clone, Debug)]
pub struct CombPart {
    pub memory_in: usize,
    pub input: usize,
    pub output: usize,
    pub memory_out: usize,
    pub isometry: CMat,
}

#[derive(Clone, Debug)]
pub struct CombDecomposition {
    pub parts: Vec<CombPart>,
}

impl CombDecomposition {
    pub fn memory_dims(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.memory_out).collect()
    }

    /// `(I ⊗ V_N) ⋯ (V_1 ⊗ I)`: `A1…AN → B1…BN ⊗ E_N`.
    pub fn recompose(&self) -> CMat {
        let ins: Vec<usize> = self.parts.iter().map(|p| p.input).collect();
        let outs: Vec<usize> = self.parts.iter().map(|p| p.output).collect();
        let n = self.parts.len();
        // current operator maps A1..AN → B1..Bk ⊗ E_k ⊗ A_{k+1}..AN
        let total_in: usize = ins.iter().product();
        let mut w = CMat::identity(total_in, total_in);
        for (k, p) in self.parts.iter().enumerate() {
            let before: usize = outs[..k].iter().product();
            let after: usize = ins[k + 1..n].iter().product();
            let step = kron(
                &kron(&CMat::identity(before, before), &p.isometry),
                &CMat::identity(after, after),
            );
            w = step * w;
        }
        w
    }
}

/// Decompose a causally ordered channel on `A1…AN → B1…BN` into isometries
/// with memory. `parts[k] = (dim A_k, dim B_k)` as Hilbert dimensions.
pub fn comb_decompose(model: &dyn TheoryModel, c: &LinearMap, parts: &[(usize, usize)], tol: f64) -> Result<CombDecomposition> {
    let h = hilbert(model)?;
    let din: usize = parts.iter().map(|p| p.0).product();
    let dout: usize = parts.iter().map(|p| p.1).product();
    if din != c.input.local_dim() || dout != c.output.local_dim() {
        return Err(Error::invalid("part dimensions do not multiply to the channel dimensions"));
    }
    let w = stinespring(model, c)?;
    let mut out = Vec::new();
    decompose_iso(h, &w.isometry, 1, parts, w.env.local_dim(), tol, 0, &mut out)?;
    Ok(CombDecomposition { parts: out })
}

/// `iso: (mem ⊗ A_1 ⊗ … ⊗ A_n) → B_1 ⊗ … ⊗ B_n ⊗ F`.
#[allow(clippy::too_many_arguments)]
fn decompose_iso(
    h: &crate::theory::HilbertModel,
    iso: &CMat,
    mem: usize,
    parts: &[(usize, usize)],
    f: usize,
    tol: f64,
    cut: usize,
    out: &mut Vec<CombPart>,
) -> Result<()> {
    let (a1, b1) = parts[0];
    if parts.len() == 1 {
        out.push(CombPart {
            memory_in: mem,
            input: a1,
            output: b1,
            memory_out: f,
            isometry: iso.clone(),
        });
        return Ok(());
    }
    let a_rest: usize = parts[1..].iter().map(|p| p.0).product();
    let b_rest: usize = parts[1..].iter().map(|p| p.1).product();
    let first_in = mem * a1;
    // reduced channel (mem A1) → B1 with the remaining inputs maximally mixed,
    // then check it against every basis input
    let reduce = |x: &CMat| -> CMat {
        let y = iso * x * iso.adjoint();
        partial_trace(&y, &[b1, b_rest * f], &[0])
    };
    let mut residual: f64 = 0.0;
    let mix = CMat::identity(a_rest, a_rest) / cr(a_rest as f64);
    let sys_in = SystemLabel::atom(h.id(), first_in);
    let sys_b1 = SystemLabel::atom(h.id(), b1);
    let d1 = h.map_from_fn(&sys_in, &sys_b1, &|x: &CMat| reduce(&kron(x, &mix)))?;
    for i in 0..first_in * a_rest {
        for j in 0..first_in * a_rest {
            let mut e = CMat::zeros(first_in * a_rest, first_in * a_rest);
            e[(i, j)] = cr(1.0);
            let lhs = reduce(&e);
            let (i1, i2) = (i / a_rest, i % a_rest);
            let (j1, j2) = (j / a_rest, j % a_rest);
            let rhs = if i2 == j2 {
                let mut e1 = CMat::zeros(first_in, first_in);
                e1[(i1, j1)] = cr(1.0);
                h.apply_to_operator(&d1, &e1)?
            } else {
                CMat::zeros(b1, b1)
            };
            residual = residual.max(max_abs_diff(&lhs, &rhs));
        }
    }
    if residual > tol {
        return Err(Error::Precondition {
            what: format!("not causally ordered at cut {}", cut + 1),
            residual,
        });
    }
    let d1 = d1.with_tag(MapTag::Channel);
    let v1 = stinespring(h, &d1)?;
    let e1 = v1.env.local_dim();
    // V1 ⊗ I_rest: (mem A1) A_rest → B1 ⊗ (E1 A_rest)
    let lifted = Dilation {
        input: SystemLabel::atom(h.id(), first_in * a_rest),
        output: sys_b1.clone(),
        env: SystemLabel::atom(h.id(), e1 * a_rest),
        isometry: kron(&v1.isometry, &CMat::identity(a_rest, a_rest)),
    };
    let full = Dilation {
        input: lifted.input.clone(),
        output: sys_b1,
        env: SystemLabel::atom(h.id(), b_rest * f),
        isometry: iso.clone(),
    };
    let con = connect_dilations(&lifted, &full)?;
    if con.residual > tol.max(1e-8) {
        return Err(Error::Precondition {
            what: format!("memory channel not found at cut {}", cut + 1),
            residual: con.residual,
        });
    }
    out.push(CombPart {
        memory_in: mem,
        input: a1,
        output: b1,
        memory_out: e1,
        isometry: v1.isometry,
    });
    decompose_iso(h, &con.z, e1, &parts[1..], f, tol, cut + 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{paulis, quantum_model};

    #[test]
    fn qubit_pair_teleports_with_quarter_probability() {
        let m = quantum_model(2).unwrap();
        let fp = faithful_pair(&m, &m.system()).unwrap();
        assert_eq!(fp.probability, 0.25);
        assert!(fp.teleportation_residual() < 1e-12);
        let m3 = quantum_model(3).unwrap();
        let fp3 = faithful_pair(&m3, &m3.system()).unwrap();
        assert!((fp3.probability - 1.0 / 9.0).abs() < 1e-15);
        assert!(fp3.teleportation_residual() < 1e-12);
    }

    #[test]
    fn identity_stores_to_the_faithful_state() {
        let m = quantum_model(2).unwrap();
        let fp = faithful_pair(&m, &m.system()).unwrap();
        let r = store(&m, &LinearMap::identity(&m.system()), &fp).unwrap();
        assert!(linalg::max_abs_diff_real(&r.state.coords, &fp.psi.coords) < 1e-14);
    }

    #[test]
    fn wrong_marginal_is_rejected() {
        let m = quantum_model(2).unwrap();
        let fp = faithful_pair(&m, &m.system()).unwrap();
        let mut p0 = CMat::zeros(4, 4);
        p0[(0, 0)] = cr(1.0);
        let s = m.state_from_density(&m.system().tensor(&m.system()).unwrap(), &p0).unwrap();
        let r = choi_state(&m.system(), s, &fp).unwrap();
        assert!(matches!(retrieve(&m, &r, 1e-9), Err(Error::NotAChoiState(_))));
    }

    #[test]
    fn swap_is_not_causally_ordered() {
        let m = quantum_model(2).unwrap();
        let sys = SystemLabel::composite(TheoryId::Quantum, vec![2, 2]);
        let sw = m
            .map_from_kraus(&sys, &sys, vec![linalg::permutation_matrix(&[2, 2], &[1, 0])])
            .unwrap();
        assert!(matches!(check_causal_order(&m, &sw, 1, 1, 1e-9).unwrap(), CausalOrder::NotOrdered { .. }));
        let x = m.unitary(&m.system(), &paulis()[1]).unwrap();
        let prod = m.tensor_maps(&x, &x).unwrap();
        assert!(matches!(check_causal_order(&m, &prod, 1, 1, 1e-9).unwrap(), CausalOrder::Ordered { .. }));
    }

    #[test]
    fn identity_channel_is_not_entanglement_breaking() {
        let m = quantum_model(2).unwrap();
        let v = is_entanglement_breaking(&m, &LinearMap::identity(&m.system()), EbMethod::Ppt).unwrap();
        match v {
            EbVerdict::NotEntanglementBreaking(l) => assert!((l + 0.5).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }
}
