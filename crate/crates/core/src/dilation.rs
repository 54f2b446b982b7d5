//! Purifications, steering, reversible dilations of channels and tests.
//!
//! Dilations are stored as isometries `V: A → B ⊗ E` with the environment
//! as the last tensor factor (row index `b·dim E + k`).

use crate::circuit::Test;
use crate::error::{Error, Result};
use crate::linalg::{
    self, choi_from_kraus, cr, eigh, isometry_from_kraus, ket_to_matrix, kraus_from_choi,
    kraus_from_isometry, max_abs_diff, min_eig, partial_trace, pinv, CMat, ZERO,
};
use crate::theory::{
    check_channel, EffectVec, HilbertModel, LinearMap, MapClass, MapTag, StateVec, SystemLabel,
    TheoryId, TheoryModel,
};

pub(crate) fn hilbert(model: &dyn TheoryModel) -> Result<&HilbertModel> {
    model
        .as_hilbert()
        .ok_or_else(|| Error::unsupported(format!("{} has no Hilbert-space realization", model.id())))
}

#[derive(Clone, Debug)]
pub struct Purification {
    pub rho: StateVec,
    /// Pure state on `A ⊗ Ã`.
    pub psi: StateVec,
    pub purifying: SystemLabel,
    /// Marginal of `psi` on `Ã`.
    pub complement: StateVec,
}

impl Purification {
    fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let k = self.rho.system.factors.len();
        let m = self.purifying.factors.len();
        ((0..k).collect(), (k..k + m).collect())
    }
}

/// Minimal purification; classical mixed states fail with
/// [`Error::PurificationUnsupported`].
pub fn purify(model: &dyn TheoryModel, rho: &StateVec) -> Result<Purification> {
    let p = model.purify(rho)?;
    finish_purification(model, rho, p.state, p.purifying)
}

/// Purification whose purifying system has dimension at least `min_dim`.
pub fn purify_padded(model: &dyn TheoryModel, rho: &StateVec, min_dim: usize) -> Result<Purification> {
    let h = hilbert(model)?;
    let p = h.purify_padded(rho, min_dim)?;
    finish_purification(model, rho, p.state, p.purifying)
}

fn finish_purification(
    model: &dyn TheoryModel,
    rho: &StateVec,
    psi: StateVec,
    purifying: SystemLabel,
) -> Result<Purification> {
    let mut out = Purification {
        rho: rho.clone(),
        complement: psi.clone(),
        psi,
        purifying,
    };
    let (_, anc) = out.split();
    out.complement = model.marginal(&out.psi, &anc)?;
    Ok(out)
}

/// Observation test `{b_i}` on `Ã` with `⟨b_i|_Ã Ψ = ρ_i`.
///
/// With `|Ψ⟩ = Σ M_{a t} |a⟩|t⟩` the steered operator is `M bᵀ M†`, so
/// `b_iᵀ = M⁺ ρ_i M⁺†`. The part of `e` outside the support of the
/// complementary state goes to the last outcome.
pub fn steering_test(
    model: &dyn TheoryModel,
    p: &Purification,
    ensemble: &[StateVec],
    tol: f64,
) -> Result<Vec<EffectVec>> {
    let h = hilbert(model)?;
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let rho = h.density(&p.rho);
    let mut sum = CMat::zeros(rho.nrows(), rho.ncols());
    for s in ensemble {
        if s.system != p.rho.system {
            return Err(Error::invalid("ensemble element on the wrong system"));
        }
        let r = h.density(s);
        let m = min_eig(&r);
        if m < -tol {
            return Err(Error::Precondition {
                what: "ensemble element is not positive".into(),
                residual: -m,
            });
        }
        sum += r;
    }
    let res = max_abs_diff(&sum, &rho);
    if res > tol {
        return Err(Error::Precondition {
            what: "ensemble does not sum to the purified state".into(),
            residual: res,
        });
    }
    let da = p.rho.system.local_dim();
    let dt = p.purifying.local_dim();
    let ket = h.ket_of_pure(&p.psi)?;
    let m = ket_to_matrix(&ket, da, dt);
    let mp = pinv(&m, 1e-10);
    let mut effects: Vec<CMat> = ensemble
        .iter()
        .map(|s| (&mp * h.density(s) * mp.adjoint()).transpose())
        .collect();
    let total: CMat = effects.iter().fold(CMat::zeros(dt, dt), |acc, b| acc + b);
    let last = effects.len() - 1;
    effects[last] += CMat::identity(dt, dt) - total;
    effects
        .iter()
        .map(|b| h.effect_from_operator(&p.purifying, &linalg::hermitian_part(b)))
        .collect()
}

/// State on `A` obtained by applying `b` to the purifying system of `Ψ`.
pub fn steer(model: &dyn TheoryModel, p: &Purification, b: &EffectVec) -> Result<StateVec> {
    let h = hilbert(model)?;
    let (da, dt) = (p.rho.system.local_dim(), p.purifying.local_dim());
    let lifted = linalg::kron(&CMat::identity(da, da), &h.effect_operator(b));
    let out = partial_trace(&(lifted * h.density(&p.psi)), &[da, dt], &[0]);
    h.state_from_density(&p.rho.system, &linalg::hermitian_part(&out))
}

/// `(A1 ⊗ I)Ψ_ρ = (A2 ⊗ I)Ψ_ρ` for a purification of `ρ`.
///
/// Over real Hilbert spaces only pairs of reversible maps are accepted.
pub fn equal_upon_input(
    model: &dyn TheoryModel,
    a1: &LinearMap,
    a2: &LinearMap,
    rho: &StateVec,
    tol: f64,
) -> Result<bool> {
    if a1.input != a2.input || a1.output != a2.output || a1.input != rho.system {
        return Err(Error::invalid("maps and state must share the input system"));
    }
    if model.id() == TheoryId::RealQuantum
        && !(a1.tag == MapTag::Reversible && a2.tag == MapTag::Reversible)
    {
        return Err(Error::unsupported(
            "equality upon input over real Hilbert spaces is only decided for reversible maps",
        ));
    }
    let p = purify(model, rho)?;
    let l1 = model.lift_local(a1, &p.purifying)?;
    let l2 = model.lift_local(a2, &p.purifying)?;
    let y1 = l1.apply(&p.psi)?;
    let y2 = l2.apply(&p.psi)?;
    Ok(linalg::max_abs_diff_real(&y1.coords, &y2.coords) <= tol)
}

#[derive(Clone, Debug)]
pub struct Dilation {
    pub input: SystemLabel,
    pub output: SystemLabel,
    pub env: SystemLabel,
    /// `V: A → B ⊗ E`.
    pub isometry: CMat,
}

impl Dilation {
    pub fn kraus(&self) -> Vec<CMat> {
        kraus_from_isometry(&self.isometry, self.output.local_dim(), self.env.local_dim())
    }

    pub fn isometry_residual(&self) -> f64 {
        let n = self.input.local_dim();
        max_abs_diff(&(self.isometry.adjoint() * &self.isometry), &CMat::identity(n, n))
    }

    /// `Tr_E V ρ V†`, computed by partial trace.
    pub fn reduced(&self, model: &dyn TheoryModel) -> Result<LinearMap> {
        let h = hilbert(model)?;
        let dims = [self.output.local_dim(), self.env.local_dim()];
        let v = self.isometry.clone();
        let m = h.map_from_fn(&self.input, &self.output, &|x: &CMat| {
            partial_trace(&(&v * x * v.adjoint()), &dims, &[0])
        })?;
        Ok(m.with_tag(MapTag::Channel))
    }

    /// `Tr_B V ρ V†`.
    pub fn complementary(&self, model: &dyn TheoryModel) -> Result<LinearMap> {
        let h = hilbert(model)?;
        h.map_from_kraus(&self.input, &self.env, linalg::complementary_kraus(&self.kraus()))
    }

    /// Pure ancilla `|0⟩` on `E'` and a unitary `U: A ⊗ E' → B ⊗ E` with
    /// `U(|a⟩ ⊗ |0⟩) = V|a⟩`, when `dim A` divides `dim B · dim E`.
    pub fn reversible_form(&self) -> Option<(usize, CMat)> {
        let (da, n) = (self.input.local_dim(), self.isometry.nrows());
        if n % da != 0 {
            return None;
        }
        let anc = n / da;
        let mut u = CMat::zeros(n, n);
        for a in 0..da {
            u.set_column(a * anc, &self.isometry.column(a));
        }
        let fixed: Vec<usize> = (0..da).map(|a| a * anc).collect();
        let free: Vec<usize> = (0..n).filter(|j| !fixed.contains(j)).collect();
        let mut cols: Vec<linalg::CVec> = fixed.iter().map(|&j| u.column(j).into_owned()).collect();
        let mut next = free.iter();
        for e in 0..n {
            let mut v = linalg::basis_ket(n, e);
            for c in &cols {
                let ov = c.dotc(&v);
                v -= c * ov;
            }
            let nv = v.norm();
            if nv > 1e-8 {
                v /= cr(nv);
                match next.next() {
                    Some(&j) => u.set_column(j, &v),
                    None => break,
                }
                cols.push(v);
            }
        }
        Some((anc, u))
    }
}

fn require_channel(model: &dyn TheoryModel, c: &LinearMap) -> Result<()> {
    let chk = check_channel(c, model);
    if chk.class != MapClass::Channel {
        return Err(Error::NotAChannel(format!(
            "normalization residual {:.3e}, positivity margin {:?}",
            chk.normalization_residual, chk.positivity_margin
        )));
    }
    Ok(())
}

/// Minimal Kraus decomposition, reusing an attached realization of the
/// right length.
fn minimal_kraus(h: &HilbertModel, c: &LinearMap) -> Result<Vec<CMat>> {
    let j = h.choi(c)?;
    let floor = 1e-11 * (1.0 + linalg::max_abs(&j));
    let rank = linalg::rank(&j, floor).max(1);
    if let Some(ks) = &c.realization {
        if ks.len() == rank {
            return Ok(ks.clone());
        }
    }
    let ks = kraus_from_choi(&j, c.output.local_dim(), c.input.local_dim(), floor);
    if ks.is_empty() {
        return Ok(vec![CMat::zeros(c.output.local_dim(), c.input.local_dim())]);
    }
    Ok(ks)
}

/// Isometric dilation with environment dimension equal to the Kraus rank.
pub fn stinespring(model: &dyn TheoryModel, c: &LinearMap) -> Result<Dilation> {
    let h = hilbert(model)?;
    require_channel(model, c)?;
    let ks = minimal_kraus(h, c)?;
    Ok(dilation_from_kraus(model, c, &ks))
}

/// Dilation with environment padded to at least `env_dim`.
pub fn stinespring_padded(model: &dyn TheoryModel, c: &LinearMap, env_dim: usize) -> Result<Dilation> {
    let h = hilbert(model)?;
    require_channel(model, c)?;
    let mut ks = minimal_kraus(h, c)?;
    while ks.len() < env_dim {
        ks.push(CMat::zeros(c.output.local_dim(), c.input.local_dim()));
    }
    Ok(dilation_from_kraus(model, c, &ks))
}

fn dilation_from_kraus(model: &dyn TheoryModel, c: &LinearMap, ks: &[CMat]) -> Dilation {
    Dilation {
        input: c.input.clone(),
        output: c.output.clone(),
        env: SystemLabel::atom(model.id(), ks.len()),
        isometry: isometry_from_kraus(ks),
    }
}

pub fn complementary_channel(model: &dyn TheoryModel, c: &LinearMap) -> Result<LinearMap> {
    stinespring(model, c)?.complementary(model)
}

#[derive(Clone, Debug)]
pub struct Connection {
    /// Partial isometry `Z: E1 → E2` with `V2 = (I ⊗ Z) V1`.
    pub z: CMat,
    /// `Z` completed to a channel: `{Z} ∪ {|0⟩⟨φ| : φ ∈ ker Z}`.
    pub channel_kraus: Vec<CMat>,
    pub residual: f64,
}

impl Connection {
    /// For equal environments: `Z` extended by an isometry from `ker Z` onto
    /// `ker Z†`.
    pub fn unitary_completion(&self) -> Option<CMat> {
        let n = self.z.nrows();
        if self.z.ncols() != n {
            return None;
        }
        let kernel = |m: CMat| {
            let (vals, vecs) = eigh(&m);
            vals.iter()
                .enumerate()
                .filter(|(_, v)| **v < 0.5)
                .map(|(i, _)| vecs.column(i).into_owned())
                .collect::<Vec<_>>()
        };
        let ker = kernel(self.z.adjoint() * &self.z);
        let coker = kernel(&self.z * self.z.adjoint());
        let mut u = self.z.clone();
        for (k, c) in ker.iter().zip(&coker) {
            u += c * k.adjoint();
        }
        Some(u)
    }
}

/// Connect two dilations of the same channel through the environment.
pub fn connect_dilations(v1: &Dilation, v2: &Dilation) -> Result<Connection> {
    if v1.input != v2.input || v1.output != v2.output {
        return Err(Error::invalid("dilations have different signatures"));
    }
    let (k1, k2) = (v1.kraus(), v2.kraus());
    let distance = max_abs_diff(&choi_from_kraus(&k1), &choi_from_kraus(&k2));
    if distance > 1e-8 {
        return Err(Error::NotSameChannel { distance });
    }
    let (r1, r2) = (k1.len(), k2.len());
    let n = k1[0].len();
    let stack = |ks: &[CMat]| {
        let mut a = CMat::zeros(n, ks.len());
        for (j, k) in ks.iter().enumerate() {
            a.set_column(j, &linalg::matrix_to_ket(k));
        }
        a
    };
    let (a1, a2) = (stack(&k1), stack(&k2));
    // A2 = A1 Wᵀ
    let w = (pinv(&a1, 1e-10) * a2).transpose();
    // snap to the nearest partial isometry
    let svd = w.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let k = svd.singular_values.len();
    let s = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        k,
        svd.singular_values.iter().map(|&x| cr(if x > 0.5 { 1.0 } else { 0.0 })),
    ));
    let z = &u * s * &vt;
    let mut channel_kraus = vec![z.clone()];
    let ztz = z.adjoint() * &z;
    let (vals, vecs) = eigh(&(CMat::identity(r1, r1) - ztz));
    for (i, &l) in vals.iter().enumerate() {
        if l > 0.5 {
            let mut op = CMat::zeros(r2, r1);
            let phi = vecs.column(i);
            for c in 0..r1 {
                op[(0, c)] = phi[c].conj();
            }
            channel_kraus.push(op);
        }
    }
    let db = v1.output.local_dim();
    let mut lifted = CMat::zeros(db * r2, v1.input.local_dim());
    for b in 0..db {
        for j in 0..r2 {
            for kk in 0..r1 {
                let zz = z[(j, kk)];
                if zz != ZERO {
                    let row = v1.isometry.row(b * r1 + kk).into_owned() * zz;
                    let mut target = lifted.row_mut(b * r2 + j);
                    target += row;
                }
            }
        }
    }
    let residual = max_abs_diff(&lifted, &v2.isometry);
    Ok(Connection {
        z,
        channel_kraus,
        residual,
    })
}

/// Purifications of the same state are connected by a partial isometry on
/// the purifying systems, `Ψ2 = (I ⊗ Z) Ψ1`.
pub fn connect_purifications(model: &dyn TheoryModel, p1: &Purification, p2: &Purification) -> Result<Connection> {
    let h = hilbert(model)?;
    let triv = SystemLabel::trivial(model.id());
    let as_dilation = |p: &Purification| -> Result<Dilation> {
        let ket = h.ket_of_pure(&p.psi)?;
        Ok(Dilation {
            input: triv.clone(),
            output: p.rho.system.clone(),
            env: p.purifying.clone(),
            isometry: CMat::from_column_slice(ket.len(), 1, ket.as_slice()),
        })
    };
    connect_dilations(&as_dilation(p1)?, &as_dilation(p2)?)
}

#[derive(Clone, Debug)]
pub struct TestDilation {
    pub dilation: Dilation,
    /// Orthogonal projectors on the environment, one per outcome.
    pub readout: Vec<EffectVec>,
}

impl TestDilation {
    /// Branch `i` as read out on the environment after the isometry.
    pub fn branch(&self, model: &dyn TheoryModel, i: usize) -> Result<LinearMap> {
        let h = hilbert(model)?;
        let d = &self.dilation;
        let dims = [d.output.local_dim(), d.env.local_dim()];
        let proj = linalg::kron(
            &CMat::identity(dims[0], dims[0]),
            &h.effect_operator(&self.readout[i]),
        );
        let v = d.isometry.clone();
        h.map_from_fn(&d.input, &d.output, &|x: &CMat| {
            partial_trace(&(&proj * (&v * x * v.adjoint())), &dims, &[0])
        })
    }
}

/// Isometry `Σ_i Σ_k K_{ik} ⊗ |i,k⟩` with block readout on the environment.
pub fn dilate_test(model: &dyn TheoryModel, test: &Test) -> Result<TestDilation> {
    let h = hilbert(model)?;
    let res = test.normalization_residual(model);
    if res > 1e-9 {
        return Err(Error::Precondition {
            what: "test branches do not sum to a channel".into(),
            residual: res,
        });
    }
    let mut all = Vec::new();
    let mut blocks = Vec::new();
    for b in &test.branches {
        let ks = minimal_kraus(h, b)?;
        let start = all.len();
        all.extend(ks);
        blocks.push(start..all.len());
    }
    let env = SystemLabel::atom(model.id(), all.len());
    let dilation = Dilation {
        input: test.input.clone(),
        output: test.output.clone(),
        env: env.clone(),
        isometry: isometry_from_kraus(&all),
    };
    let readout = blocks
        .iter()
        .map(|r| {
            let mut p = CMat::zeros(all.len(), all.len());
            for k in r.clone() {
                p[(k, k)] = cr(1.0);
            }
            h.effect_from_operator(&env, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestDilation { dilation, readout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::theory::{classical_model, quantum_model};

    fn amp_damp(g: f64) -> Vec<CMat> {
        vec![
            CMat::from_row_slice(2, 2, &[cr(1.0), ZERO, ZERO, cr((1.0 - g).sqrt())]),
            CMat::from_row_slice(2, 2, &[ZERO, cr(g.sqrt()), ZERO, ZERO]),
        ]
    }

    #[test]
    fn classical_mixed_state_has_no_purification() {
        let m = classical_model(2).unwrap();
        let x = StateVec::new(m.system(), vec![0.5, 0.5]).unwrap();
        assert!(matches!(purify(&m, &x), Err(Error::PurificationUnsupported(_))));
    }

    #[test]
    fn maximally_mixed_purifies_to_bell() {
        let m = quantum_model(2).unwrap();
        let p = purify(&m, &m.invariant_state(&m.system())).unwrap();
        assert!(m.is_pure(&p.psi, 1e-10));
        let back = m.marginal(&p.psi, &[0]).unwrap();
        assert!(linalg::max_abs_diff_real(&back.coords, &p.rho.coords) < 1e-10);
        assert_eq!(p.purifying.local_dim(), 2);
    }

    #[test]
    fn amplitude_damping_dilation() {
        let m = quantum_model(2).unwrap();
        let ch = m.map_from_kraus(&m.system(), &m.system(), amp_damp(0.3)).unwrap();
        let d = stinespring(&m, &ch).unwrap();
        assert_eq!(d.env.local_dim(), 2);
        assert!(d.isometry_residual() < 1e-12);
        assert!(d.reduced(&m).unwrap().max_abs_diff(&ch) < 1e-10);
        let comp = d.complementary(&m).unwrap();
        let flipped = m.map_from_kraus(&m.system(), &m.system(), amp_damp(0.7)).unwrap();
        // complementary channel equals damping 1 − γ up to a unitary on E
        let x = m.unitary(&m.system(), &crate::theory::paulis()[1]).unwrap();
        assert!(comp.then(&x).unwrap().max_abs_diff(&flipped) < 1e-10 || comp.max_abs_diff(&flipped) < 1e-10);
    }

    #[test]
    fn connection_recovers_environment_unitary() {
        let m = quantum_model(2).unwrap();
        let ch = m.map_from_kraus(&m.system(), &m.system(), amp_damp(0.3)).unwrap();
        let d1 = stinespring(&m, &ch).unwrap();
        let w = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), ZERO, ZERO, c(0.6, 0.8)]);
        let d2 = Dilation {
            isometry: linalg::kron(&CMat::identity(2, 2), &w) * &d1.isometry,
            ..d1.clone()
        };
        let con = connect_dilations(&d1, &d2).unwrap();
        assert!(con.residual < 1e-10);
        assert!(max_abs_diff(&con.z, &w) < 1e-8);
    }

    #[test]
    fn steering_reproduces_ensemble() {
        let m = quantum_model(2).unwrap();
        let p = purify(&m, &m.invariant_state(&m.system())).unwrap();
        let s = cr(0.5f64.sqrt());
        let plus = linalg::CVec::from_vec(vec![s, s]);
        let minus = linalg::CVec::from_vec(vec![s, -s]);
        let ens = vec![
            m.state_from_ket(&m.system(), &plus).unwrap().scale(0.5),
            m.state_from_ket(&m.system(), &minus).unwrap().scale(0.5),
        ];
        let bs = steering_test(&m, &p, &ens, 1e-9).unwrap();
        for (b, r) in bs.iter().zip(&ens) {
            let got = steer(&m, &p, b).unwrap();
            assert!(linalg::max_abs_diff_real(&got.coords, &r.coords) < 1e-8);
        }
    }
}
