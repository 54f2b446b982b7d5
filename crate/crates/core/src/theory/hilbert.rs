use rand::RngCore;

use super::{
    EffectVec, HermBasis, LinearMap, MapTag, Purified, StateVec, SystemLabel, TheoryId,
    TheoryModel,
};
use crate::cone::Cone;
use crate::error::{check_len, Error, Result};
use crate::linalg::{
    self, basis_ket, c, choi_from_kraus, cr, eigh, kraus_completeness, kraus_from_choi, kron,
    kron_vec, max_abs_diff, min_eig, partial_trace, projector, random_density,
    random_ket, random_unitary, trace_norm, CMat, CVec, RMat, C64, ZERO,
};
use crate::tensor::{contract, kron_real};

const REAL_TOL: f64 = 1e-12;

/// Complex quantum theory, or quantum theory over real Hilbert spaces when
/// `real` is set. Coordinates are taken over an orthonormal Hermitian basis;
/// complex composites use the product basis, real composites use the basis
/// of symmetric matrices on the full tensor-product space.
#[derive(Clone, Debug)]
pub struct HilbertModel {
    d: usize,
    real: bool,
}

impl HilbertModel {
    pub fn new(d: usize, real: bool) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("Hilbert-space model needs d >= 2"));
        }
        Ok(Self { d, real })
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn basis(&self, sys: &SystemLabel) -> HermBasis {
        if self.real {
            HermBasis::gell_mann(sys.local_dim(), true)
        } else if sys.factors.len() == 1 {
            HermBasis::gell_mann(sys.factors[0], false)
        } else {
            let fs: Vec<HermBasis> = sys
                .factors
                .iter()
                .map(|&d| HermBasis::gell_mann(d, false))
                .collect();
            HermBasis::product(&fs)
        }
    }

    fn check_real(&self, m: &CMat, what: &str) -> Result<()> {
        if self.real {
            let scale = 1.0 + linalg::max_abs(m);
            if m.iter().any(|z| z.im.abs() > REAL_TOL * scale) {
                return Err(Error::unsupported(format!(
                    "{what} has complex entries, not allowed over real Hilbert spaces"
                )));
            }
        }
        Ok(())
    }

    fn check_square(&self, sys: &SystemLabel, m: &CMat) -> Result<()> {
        let n = sys.local_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        Ok(())
    }

    pub fn density(&self, x: &StateVec) -> CMat {
        self.basis(&x.system).matrix(&x.coords)
    }

    pub fn state_from_density(&self, sys: &SystemLabel, rho: &CMat) -> Result<StateVec> {
        self.own(sys)?;
        self.check_square(sys, rho)?;
        self.check_real(rho, "density matrix")?;
        Ok(StateVec {
            system: sys.clone(),
            coords: self.basis(sys).coords(rho),
        })
    }

    pub fn state_from_ket(&self, sys: &SystemLabel, psi: &CVec) -> Result<StateVec> {
        self.state_from_density(sys, &projector(psi))
    }

    pub fn effect_operator(&self, a: &EffectVec) -> CMat {
        self.basis(&a.system).matrix(&a.coords)
    }

    pub fn effect_from_operator(&self, sys: &SystemLabel, p: &CMat) -> Result<EffectVec> {
        self.own(sys)?;
        self.check_square(sys, p)?;
        self.check_real(p, "effect operator")?;
        Ok(EffectVec {
            system: sys.clone(),
            coords: self.basis(sys).coords(p),
        })
    }

    /// Coordinate matrix `M_jk = Tr(F_j f(F_k))` of a linear super-operator.
    pub fn map_from_fn(
        &self,
        a: &SystemLabel,
        b: &SystemLabel,
        f: &dyn Fn(&CMat) -> CMat,
    ) -> Result<LinearMap> {
        self.own(a)?;
        self.own(b)?;
        let ba = self.basis(a);
        let bb = self.basis(b);
        let mut m = RMat::zeros(bb.len(), ba.len());
        for k in 0..ba.len() {
            let out = f(&ba.element(k));
            self.check_square(b, &out)?;
            let col = bb.coords(&out);
            for (j, v) in col.into_iter().enumerate() {
                m[(j, k)] = v;
            }
        }
        LinearMap::new(a.clone(), b.clone(), m, MapTag::Unconstrained)
    }

    /// Map `ρ ↦ Σ K ρ K†`, tagged from the completeness relation.
    pub fn map_from_kraus(
        &self,
        a: &SystemLabel,
        b: &SystemLabel,
        kraus: Vec<CMat>,
    ) -> Result<LinearMap> {
        if kraus.is_empty() {
            return Err(Error::invalid("empty Kraus list"));
        }
        let (din, dout) = (a.local_dim(), b.local_dim());
        for k in &kraus {
            if k.shape() != (dout, din) {
                return Err(Error::invalid(format!(
                    "Kraus operator has shape {:?}, expected ({dout}, {din})",
                    k.shape()
                )));
            }
            self.check_real(k, "Kraus operator")?;
        }
        let ks = kraus.clone();
        let mut m = self.map_from_fn(a, b, &|x: &CMat| linalg::apply_kraus(&ks, x))?;
        let comp = kraus_completeness(&kraus);
        let id = CMat::identity(din, din);
        m.tag = if max_abs_diff(&comp, &id) < 1e-10 {
            let unitary = kraus.len() == 1
                && din == dout
                && max_abs_diff(&(&kraus[0] * kraus[0].adjoint()), &id) < 1e-10;
            if unitary {
                MapTag::Reversible
            } else {
                MapTag::Channel
            }
        } else if min_eig(&(id - comp)) >= -1e-10 {
            MapTag::Transformation
        } else {
            MapTag::Unconstrained
        };
        m.realization = Some(kraus);
        Ok(m)
    }

    pub fn unitary(&self, a: &SystemLabel, u: &CMat) -> Result<LinearMap> {
        self.map_from_kraus(a, a, vec![u.clone()])
    }

    /// Apply a map to an arbitrary (not necessarily Hermitian) operator by
    /// complex-linear extension.
    pub fn apply_to_operator(&self, m: &LinearMap, x: &CMat) -> Result<CMat> {
        self.check_square(&m.input, x)?;
        let symmetric = max_abs_diff(x, &x.transpose()) <= REAL_TOL * (1.0 + linalg::max_abs(x));
        if self.real && !symmetric {
            return match &m.realization {
                Some(ks) => Ok(linalg::apply_kraus(ks, x)),
                None => Err(Error::unsupported(
                    "action on non-symmetric operators needs a Kraus realization",
                )),
            };
        }
        let xin = self.basis(&m.input).coords_complex(x);
        let mut out = vec![ZERO; m.matrix.nrows()];
        for (j, o) in out.iter_mut().enumerate() {
            for (k, &v) in xin.iter().enumerate() {
                let w = m.matrix[(j, k)];
                if w != 0.0 {
                    *o += v * w;
                }
            }
        }
        Ok(self.basis(&m.output).matrix_complex(&out))
    }

    /// Choi matrix `Σ_ij C(|i⟩⟨j|) ⊗ |i⟩⟨j|` on output ⊗ input.
    pub fn choi(&self, m: &LinearMap) -> Result<CMat> {
        if self.real {
            return match &m.realization {
                Some(ks) => Ok(choi_from_kraus(ks)),
                None => Err(Error::unsupported(
                    "Choi matrix over real Hilbert spaces needs a Kraus realization",
                )),
            };
        }
        let din = m.input.local_dim();
        let dout = m.output.local_dim();
        let mut j = CMat::zeros(dout * din, dout * din);
        for a in 0..din {
            for b in 0..din {
                let mut e = CMat::zeros(din, din);
                e[(a, b)] = C64::new(1.0, 0.0);
                let out = self.apply_to_operator(m, &e)?;
                let eab = {
                    let mut t = CMat::zeros(din, din);
                    t[(a, b)] = C64::new(1.0, 0.0);
                    t
                };
                j += kron(&out, &eab);
            }
        }
        Ok(j)
    }

    /// Kraus operators: the attached realization, else from the Choi matrix.
    pub fn kraus_of(&self, m: &LinearMap) -> Result<Vec<CMat>> {
        if let Some(ks) = &m.realization {
            return Ok(ks.clone());
        }
        let j = self.choi(m)?;
        let floor = 1e-12 * (1.0 + linalg::max_abs(&j));
        let ks = kraus_from_choi(&j, m.output.local_dim(), m.input.local_dim(), floor);
        if ks.is_empty() {
            Ok(vec![CMat::zeros(m.output.local_dim(), m.input.local_dim())])
        } else {
            Ok(ks)
        }
    }

    /// Purification with purifying dimension at least `min_dim` (padding with
    /// unused levels when it exceeds the rank).
    pub fn purify_padded(&self, x: &StateVec, min_dim: usize) -> Result<Purified> {
        let rho = self.density(x);
        let (vals, vecs) = eigh(&rho);
        let n = rho.nrows();
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if vals.first().copied().unwrap_or(0.0) < -1e-9 * scale.max(1.0) {
            return Err(Error::invalid("cannot purify a non-positive operator"));
        }
        let support: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > 1e-12 * scale).collect();
        let r = support.len().max(1).max(min_dim);
        let mut psi = CVec::zeros(n * r);
        for (slot, &i) in support.iter().enumerate() {
            let s = vals[i].sqrt();
            for a in 0..n {
                psi[a * r + slot] += vecs[(a, i)] * cr(s);
            }
        }
        let purifying = SystemLabel::atom(self.id(), r);
        let sys = x.system.tensor(&purifying)?;
        Ok(Purified {
            state: self.state_from_ket(&sys, &psi)?,
            purifying,
        })
    }

    /// Pure-state ket of a rank-one state, with a fixed global phase.
    pub fn ket_of_pure(&self, x: &StateVec) -> Result<CVec> {
        let rho = self.density(x);
        let (vals, vecs) = eigh(&rho);
        let n = rho.nrows();
        let top = vals[n - 1];
        if !self.is_pure(x, 1e-9) {
            return Err(Error::invalid("state is not pure"));
        }
        let v = vecs.column(n - 1).into_owned() * cr(top.max(0.0).sqrt());
        let k = (0..n)
            .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
            .unwrap_or(0);
        let phase = if v[k].norm() > 0.0 { v[k].conj() / cr(v[k].norm()) } else { cr(1.0) };
        Ok(v * phase)
    }

    /// Canonical pure states spanning the real span of states.
    pub fn spanning_kets(&self, n: usize) -> Vec<CVec> {
        let mut out: Vec<CVec> = (0..n).map(|i| basis_ket(n, i)).collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i + 1..n {
                let mut v = CVec::zeros(n);
                v[i] = cr(h);
                v[j] = cr(h);
                out.push(v);
                if !self.real {
                    let mut w = CVec::zeros(n);
                    w[i] = cr(h);
                    w[j] = c(0.0, h);
                    out.push(w);
                }
            }
        }
        out
    }
}

impl TheoryModel for HilbertModel {
    fn id(&self) -> TheoryId {
        if self.real {
            TheoryId::RealQuantum
        } else {
            TheoryId::Quantum
        }
    }

    fn default_dim(&self) -> usize {
        self.d
    }

    fn state_cone(&self, _a: &SystemLabel) -> Option<Cone> {
        None
    }

    fn effect_cone(&self, _a: &SystemLabel) -> Option<Cone> {
        None
    }

    fn contains_state(&self, x: &StateVec, tol: f64) -> Result<bool> {
        check_len(x.system.coord_dim(), x.coords.len())?;
        let rho = self.density(x);
        Ok(min_eig(&rho) >= -tol)
    }

    fn contains_effect(&self, a: &EffectVec, tol: f64) -> Result<bool> {
        check_len(a.system.coord_dim(), a.coords.len())?;
        let p = self.effect_operator(a);
        let vals = linalg::eigvalsh(&p);
        Ok(vals.first().is_none_or(|&v| v >= -tol) && vals.last().is_none_or(|&v| v <= 1.0 + tol))
    }

    fn min_on_states(&self, a: &EffectVec) -> Result<f64> {
        check_len(a.system.coord_dim(), a.coords.len())?;
        Ok(min_eig(&self.effect_operator(a)))
    }

    fn deterministic_effect(&self, a: &SystemLabel) -> EffectVec {
        let n = a.local_dim();
        EffectVec {
            system: a.clone(),
            coords: self.basis(a).coords(&CMat::identity(n, n)),
        }
    }

    fn embed_product(&self, x: &StateVec, y: &StateVec) -> Result<StateVec> {
        let sys = self.compose(&x.system, &y.system)?;
        if self.real {
            let rho = kron(&self.density(x), &self.density(y));
            self.state_from_density(&sys, &rho)
        } else {
            Ok(StateVec {
                system: sys,
                coords: kron_vec(&x.coords, &y.coords),
            })
        }
    }

    fn embed_product_effects(&self, a: &EffectVec, b: &EffectVec) -> Result<EffectVec> {
        let sys = self.compose(&a.system, &b.system)?;
        if self.real {
            let p = kron(&self.effect_operator(a), &self.effect_operator(b));
            self.effect_from_operator(&sys, &p)
        } else {
            Ok(EffectVec {
                system: sys,
                coords: kron_vec(&a.coords, &b.coords),
            })
        }
    }

    fn lift_local(&self, m: &LinearMap, b: &SystemLabel) -> Result<LinearMap> {
        self.tensor_maps(m, &LinearMap::identity(b))
    }

    fn tensor_maps(&self, m1: &LinearMap, m2: &LinearMap) -> Result<LinearMap> {
        let input = self.compose(&m1.input, &m2.input)?;
        let output = self.compose(&m1.output, &m2.output)?;
        let tag = if m1.tag == m2.tag { m1.tag } else { MapTag::Unconstrained };
        let realization = match (&m1.realization, &m2.realization) {
            (Some(k1), Some(k2)) => Some(
                k1.iter()
                    .flat_map(|a| k2.iter().map(move |b| kron(a, b)))
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };
        if self.real {
            let ks = realization.ok_or_else(|| {
                Error::unsupported(
                    "parallel composition over real Hilbert spaces needs Kraus realizations",
                )
            })?;
            let mut m = self.map_from_kraus(&input, &output, ks)?;
            if m.tag != MapTag::Unconstrained {
                m.tag = tag;
            }
            return Ok(m);
        }
        let mut m = LinearMap::new(input, output, kron_real(&m1.matrix, &m2.matrix), tag)?;
        m.realization = realization;
        Ok(m)
    }

    fn marginal(&self, x: &StateVec, keep: &[usize]) -> Result<StateVec> {
        check_len(x.system.coord_dim(), x.coords.len())?;
        let nf = x.system.factors.len();
        if keep.iter().any(|&k| k >= nf) {
            return Err(Error::invalid("marginal: factor index out of range"));
        }
        let sub = x.system.sub(keep);
        if self.real {
            let rho = self.density(x);
            let mut sorted = keep.to_vec();
            sorted.sort_unstable();
            let mut red = partial_trace(&rho, &x.system.factors, &sorted);
            if sorted != keep {
                let sorted_dims: Vec<usize> = sorted.iter().map(|&k| x.system.factors[k]).collect();
                let perm: Vec<usize> = keep
                    .iter()
                    .map(|k| sorted.iter().position(|s| s == k).expect("kept factor"))
                    .collect();
                let p = linalg::permutation_matrix(&sorted_dims, &perm);
                red = &p * red * p.adjoint();
            }
            return self.state_from_density(&sub, &red);
        }
        let dims = x.system.factor_coord_dims();
        let weights: Vec<Vec<f64>> = x
            .system
            .factors
            .iter()
            .map(|&d| {
                let mut w = vec![0.0; d * d];
                w[0] = (d as f64).sqrt();
                w
            })
            .collect();
        Ok(StateVec {
            system: sub,
            coords: contract(&x.coords, &dims, keep, &weights),
        })
    }

    fn random_pure_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec {
        let psi = random_ket(a.local_dim(), rng, self.real);
        self.state_from_ket(a, &psi).expect("sampled ket has the system's dimension")
    }

    fn random_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec {
        let n = a.local_dim();
        let rho = random_density(n, n, rng, self.real);
        self.state_from_density(a, &rho).expect("sampled density has the system's dimension")
    }

    fn random_reversible(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> LinearMap {
        let u = random_unitary(a.local_dim(), rng, self.real);
        let mut m = self.unitary(a, &u).expect("sampled unitary has the system's dimension");
        m.tag = MapTag::Reversible;
        m
    }

    fn invariant_state(&self, a: &SystemLabel) -> StateVec {
        let n = a.local_dim();
        let rho = CMat::identity(n, n) * cr(1.0 / n as f64);
        self.state_from_density(a, &rho).expect("identity has the system's dimension")
    }

    fn op_norm(&self, delta: &StateVec) -> f64 {
        trace_norm(&self.density(delta))
    }

    fn effect_norm(&self, delta: &EffectVec) -> f64 {
        linalg::spectral_norm_herm(&self.effect_operator(delta))
    }

    fn is_pure(&self, x: &StateVec, tol: f64) -> bool {
        let vals = linalg::eigvalsh(&self.density(x));
        let n = vals.len();
        let rest: f64 = vals[..n - 1].iter().map(|v| v.abs()).sum();
        vals[n - 1] > tol && rest <= tol
    }

    fn purify(&self, x: &StateVec) -> Result<Purified> {
        self.purify_padded(x, 1)
    }

    fn positive_part_effect(&self, delta: &StateVec) -> EffectVec {
        let p = linalg::positive_part_projector(&self.density(delta));
        self.effect_from_operator(&delta.system, &p)
            .expect("projector has the system's dimension")
    }

    fn spanning_states(&self, a: &SystemLabel) -> Vec<StateVec> {
        self.spanning_kets(a.local_dim())
            .iter()
            .map(|k| self.state_from_ket(a, k).expect("canonical ket"))
            .collect()
    }

    fn positivity_margin(&self, m: &LinearMap) -> Result<f64> {
        if self.real {
            let ks = m.realization.as_ref().ok_or_else(|| {
                Error::unsupported("complete positivity over real Hilbert spaces needs a Kraus realization")
            })?;
            let rebuilt = self.map_from_kraus(&m.input, &m.output, ks.clone())?;
            let gap = rebuilt.max_abs_diff(m);
            if gap > 1e-9 {
                return Err(Error::unsupported(format!(
                    "Kraus realization disagrees with the coordinate matrix by {gap:.3e}"
                )));
            }
            return Ok(min_eig(&choi_from_kraus(ks)));
        }
        Ok(min_eig(&self.choi(m)?))
    }

    fn as_hilbert(&self) -> Option<&HilbertModel> {
        Some(self)
    }
}

/// Pauli matrices `I, X, Y, Z`.
pub fn paulis() -> [CMat; 4] {
    let i = CMat::identity(2, 2);
    let x = CMat::from_row_slice(2, 2, &[ZERO, cr(1.0), cr(1.0), ZERO]);
    let y = CMat::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
    let z = CMat::from_row_slice(2, 2, &[cr(1.0), ZERO, ZERO, cr(-1.0)]);
    [i, x, y, z]
}
