//! Error correction upon input of a state: Knill–Laflamme data, recovery,
//! environment factorization, deletion channels and one-way correction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::dilation::{equal_upon_input, hilbert};
use crate::error::{Error, Result};
use crate::io::{complex_matrix_from_json, complex_matrix_to_json};
use crate::linalg::{
    self, apply_kraus, c, complementary_kraus, cr, eigh, kron, max_abs_diff, omega_ket,
    partial_trace, projector, psd_sqrt, CMat, CVec,
};
use crate::theory::{HilbertModel, LinearMap, TheoryModel};

/// Code projector plus the noise as Kraus operators `K_i: A → B`.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub projector: CMat,
    pub kraus: Vec<CMat>,
}

impl CodeSpec {
    pub fn new(projector: CMat, kraus: Vec<CMat>) -> Result<Self> {
        let n = projector.nrows();
        if projector.ncols() != n {
            return Err(Error::invalid("code projector must be square"));
        }
        if max_abs_diff(&(&projector * &projector), &projector) > 1e-9
            || max_abs_diff(&projector, &projector.adjoint()) > 1e-9
        {
            return Err(Error::invalid("code projector must satisfy P² = P = P†"));
        }
        let first = kraus
            .first()
            .ok_or_else(|| Error::invalid("empty Kraus list"))?
            .shape();
        if first.1 != n || kraus.iter().any(|k| k.shape() != first) {
            return Err(Error::invalid("malformed Kraus list"));
        }
        let res = max_abs_diff(&linalg::kraus_completeness(&kraus), &CMat::identity(n, n));
        if res > 1e-8 {
            return Err(Error::Precondition {
                what: "Kraus operators are not trace preserving".into(),
                residual: res,
            });
        }
        Ok(Self { projector, kraus })
    }

    /// Code on the whole input space.
    pub fn full(kraus: Vec<CMat>) -> Result<Self> {
        let n = kraus.first().map_or(0, |k| k.ncols());
        Self::new(CMat::identity(n, n), kraus)
    }

    pub fn din(&self) -> usize {
        self.projector.nrows()
    }

    pub fn dout(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// `ρ = P / Tr P`.
    pub fn rho(&self) -> CMat {
        let t = linalg::trace(&self.projector).re;
        &self.projector / cr(t)
    }

    /// Orthonormal basis of the code space, as columns.
    pub fn code_basis(&self) -> CMat {
        let (vals, vecs) = eigh(&self.projector);
        let cols: Vec<CVec> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.5)
            .map(|(i, _)| vecs.column(i).into_owned())
            .collect();
        CMat::from_columns(&cols)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "projector": complex_matrix_to_json(&self.projector),
            "kraus": self.kraus.iter().map(complex_matrix_to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kraus = v
            .get("kraus")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid("code spec needs a \"kraus\" array"))?
            .iter()
            .map(complex_matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        match v.get("projector") {
            Some(p) => Self::new(complex_matrix_from_json(p)?, kraus),
            None => Self::full(kraus),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Correctability {
    Correctable {
        /// Recovery Kraus operators `B → A`.
        recovery: Vec<CMat>,
        /// `λ_ij` with `P K_i† K_j P = λ_ij P`.
        kl: CMat,
        /// `‖(R∘C ⊗ I)Ψ_ρ − Ψ_ρ‖` entrywise.
        end_to_end_residual: f64,
        /// `‖ω_ER − σ_E ⊗ ρ_R‖` entrywise.
        factorization_residual: f64,
    },
    NotCorrectable {
        /// Offending Kraus pair.
        witness: (usize, usize),
        kl_residual: f64,
        factorization_residual: f64,
    },
}

impl Correctability {
    pub fn is_correctable(&self) -> bool {
        matches!(self, Correctability::Correctable { .. })
    }
}

/// `|Ψ_ρ⟩ = (√ρ ⊗ I)|Ω⟩` on `A ⊗ A`.
pub fn purification_ket(rho: &CMat) -> CVec {
    let d = rho.nrows();
    kron(&psd_sqrt(rho), &CMat::identity(d, d)) * omega_ket(d)
}

fn kl_data(spec: &CodeSpec) -> (CMat, (usize, usize), f64) {
    let p = &spec.projector;
    let tp = linalg::trace(p).re;
    let r = spec.kraus.len();
    let mut lam = CMat::zeros(r, r);
    let mut worst = (0, 0);
    let mut worst_res: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let m = p * spec.kraus[i].adjoint() * &spec.kraus[j] * p;
            let l = linalg::trace(&m) / cr(tp);
            lam[(i, j)] = l;
            let res = max_abs_diff(&m, &(p * l));
            if res > worst_res {
                worst_res = res;
                worst = (i, j);
            }
        }
    }
    (lam, worst, worst_res)
}

/// Entrywise distance of the environment–reference state from a product.
pub fn factorization_residual(spec: &CodeSpec) -> f64 {
    let (dout, din, r) = (spec.dout(), spec.din(), spec.kraus.len());
    let psi = purification_ket(&spec.rho());
    let v = linalg::isometry_from_kraus(&spec.kraus);
    // (V ⊗ I)Ψ on B ⊗ E ⊗ R
    let full = kron(&v, &CMat::identity(din, din)) * psi;
    let omega = projector(&full);
    let er = partial_trace(&omega, &[dout, r, din], &[1, 2]);
    let sigma = partial_trace(&er, &[r, din], &[0]);
    let rho_r = partial_trace(&er, &[r, din], &[1]);
    max_abs_diff(&er, &kron(&sigma, &rho_r))
}

/// Entrywise `‖(Σ_k M_k ⊗ I) Ψ_ρ (…)† − s Ψ_ρ‖` for Kraus `M_k: A → A`.
pub fn upon_input_residual(composite: &[CMat], rho: &CMat, scale: f64) -> f64 {
    let d = rho.nrows();
    let psi = projector(&purification_ket(rho));
    let lifted: Vec<CMat> = composite
        .iter()
        .map(|m| kron(m, &CMat::identity(d, d)))
        .collect();
    max_abs_diff(&apply_kraus(&lifted, &psi), &(psi * cr(scale)))
}

pub fn compose_kraus(first: &[CMat], then: &[CMat]) -> Vec<CMat> {
    then.iter()
        .flat_map(|r| first.iter().map(move |k| r * k))
        .collect()
}

/// Knill–Laflamme check with recovery construction and end-to-end verification.
pub fn is_correctable(model: &dyn TheoryModel, spec: &CodeSpec, tol: f64) -> Result<Correctability> {
    let h = hilbert(model)?;
    check_dim(h, spec)?;
    let (lam, witness, kl_residual) = kl_data(spec);
    let fact = factorization_residual(spec);
    if kl_residual > tol {
        return Ok(Correctability::NotCorrectable {
            witness,
            kl_residual,
            factorization_residual: fact,
        });
    }
    let recovery = recovery_from_kl(spec, &lam);
    let composite = compose_kraus(&spec.kraus, &recovery);
    let rho = spec.rho();
    let end_to_end_residual = upon_input_residual(&composite, &rho, 1.0);
    // coordinate check on A ⊗ A when it is small; the operator residual
    // above is the same statement
    if !h.is_real() && spec.din() <= 4 {
        let a = model.atom(spec.din())?;
        let rc = h.map_from_kraus(&a, &a, composite)?;
        let state = h.state_from_density(&a, &rho)?;
        if !equal_upon_input(model, &rc, &LinearMap::identity(&a), &state, tol.max(1e-8))? {
            return Err(Error::Precondition {
                what: "recovery does not restore the input".into(),
                residual: end_to_end_residual,
            });
        }
    }
    Ok(Correctability::Correctable {
        recovery,
        kl: lam,
        end_to_end_residual,
        factorization_residual: fact,
    })
}

fn check_dim(h: &HilbertModel, spec: &CodeSpec) -> Result<()> {
    if h.is_real() {
        let imag = spec
            .kraus
            .iter()
            .chain(std::iter::once(&spec.projector))
            .map(|m| m.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if imag > 1e-12 {
            return Err(Error::invalid("real theory needs real Kraus operators"));
        }
    }
    Ok(())
}

/// Polar recovery: diagonalize `λ`, `F_k = Σ_i u_ik K_i`, `R_k = P F_k† / √d_k`,
/// completed on the orthogonal complement of the error images.
fn recovery_from_kl(spec: &CodeSpec, lam: &CMat) -> Vec<CMat> {
    let (vals, u) = eigh(&linalg::hermitian_part(lam));
    let (dout, din) = (spec.dout(), spec.din());
    let mut out = Vec::new();
    for (k, &dk) in vals.iter().enumerate() {
        if dk <= 1e-12 {
            continue;
        }
        let mut f = CMat::zeros(dout, din);
        for (i, ki) in spec.kraus.iter().enumerate() {
            f += ki * u[(i, k)];
        }
        out.push(&spec.projector * f.adjoint() / cr(dk.sqrt()));
    }
    let used = linalg::kraus_completeness(&out);
    let rest = CMat::identity(dout, dout) - used;
    let (rv, rvec) = eigh(&linalg::hermitian_part(&rest));
    let anchor = spec.code_basis().column(0).into_owned();
    for (m, &lm) in rv.iter().enumerate() {
        if lm > 1e-12 {
            let q = rvec.column(m).into_owned();
            out.push(&anchor * q.adjoint() * cr(lm.sqrt()));
        }
    }
    out
}

/// `R∘D` for a refinement `D ⊂ C` given by a Kraus subset; returns `(p, residual)`
/// with `R∘D =_ρ p·I`.
pub fn refinement_residual(spec: &CodeSpec, recovery: &[CMat], subset: &[usize]) -> (f64, f64) {
    let sub: Vec<CMat> = subset.iter().map(|&i| spec.kraus[i].clone()).collect();
    if sub.is_empty() {
        return (0.0, 0.0);
    }
    let rho = spec.rho();
    let p = linalg::trace(&apply_kraus(&sub, &rho)).re;
    let composite = compose_kraus(&sub, recovery);
    (p, upon_input_residual(&composite, &rho, p))
}

#[derive(Clone, Debug)]
pub enum Deletion {
    Deletion { sigma: CMat, residual: f64 },
    NotDeletion { residual: f64 },
}

impl Deletion {
    pub fn is_deletion(&self) -> bool {
        matches!(self, Deletion::Deletion { .. })
    }
}

/// `C(τ) = σ` for every normalized `τ` supported on the code, tested on a
/// spanning set of pure states of the theory.
pub fn is_deletion(model: &dyn TheoryModel, kraus: &[CMat], code: &CMat, tol: f64) -> Result<Deletion> {
    let h = hilbert(model)?;
    let spec = CodeSpec::new(code.clone(), kraus.to_vec())?;
    let basis = spec.code_basis();
    let k = basis.ncols();
    let sigma = apply_kraus(kraus, &spec.rho());
    let mut residual: f64 = 0.0;
    for v in h.spanning_kets(k) {
        let ket = &basis * v;
        let out = apply_kraus(kraus, &projector(&ket));
        residual = residual.max(max_abs_diff(&out, &sigma));
    }
    Ok(if residual <= tol {
        Deletion::Deletion { sigma, residual }
    } else {
        Deletion::NotDeletion { residual }
    })
}

#[derive(Clone, Debug)]
pub struct ComplementarityReport {
    pub correctable: bool,
    pub complement_deletion: bool,
    /// Correctable implies the complement is a deletion channel.
    pub forward: bool,
    /// The complement being a deletion channel implies correctable; only
    /// asserted over complex Hilbert spaces.
    pub converse: Option<bool>,
    pub deletion_residual: f64,
}

impl ComplementarityReport {
    /// Every asserted direction holds.
    pub fn consistent(&self) -> bool {
        self.forward && self.converse.unwrap_or(true)
    }
}

pub fn complementarity_check(model: &dyn TheoryModel, spec: &CodeSpec, tol: f64) -> Result<ComplementarityReport> {
    let h = hilbert(model)?;
    let correctable = is_correctable(model, spec, tol)?.is_correctable();
    let comp = complementary_kraus(&spec.kraus);
    let del = is_deletion(model, &comp, &spec.projector, tol)?;
    let deletion_residual = match &del {
        Deletion::Deletion { residual, .. } | Deletion::NotDeletion { residual } => *residual,
    };
    let complement_deletion = del.is_deletion();
    let forward = !correctable || complement_deletion;
    let converse = (!h.is_real()).then_some(!complement_deletion || correctable);
    Ok(ComplementarityReport {
        correctable,
        complement_deletion,
        forward,
        converse,
        deletion_residual,
    })
}

/// Real qubit isometry `V = |Φ+⟩⟨0| + |Ψ−⟩⟨1|: A → B ⊗ E`.
pub fn real_counterexample_isometry() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMat::zeros(4, 2);
    v[(0, 0)] = cr(s);
    v[(3, 0)] = cr(s);
    v[(1, 1)] = cr(s);
    v[(2, 1)] = cr(-s);
    v
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    /// Max deviation of `C(τ)` from `I/2` over the real symmetric basis inputs.
    pub channel_residual: f64,
    pub complement_residual: f64,
    pub channel_deletion: bool,
    pub complement_deletion: bool,
    pub correctable: bool,
    pub complementarity: ComplementarityReport,
}

/// Both marginals of `V` delete real inputs, yet `C` is not correctable:
/// complementarity fails in the converse direction.
pub fn real_counterexample(tol: f64) -> Result<CounterexampleReport> {
    let model = crate::theory::real_quantum_model(2)?;
    let v = real_counterexample_isometry();
    let kraus = linalg::kraus_from_isometry(&v, 2, 2);
    let comp = complementary_kraus(&kraus);
    let half = CMat::identity(2, 2) * cr(0.5);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let inputs = [
        projector(&linalg::basis_ket(2, 0)),
        projector(&linalg::basis_ket(2, 1)),
        projector(&CVec::from_vec(vec![cr(s), cr(s)])),
    ];
    let channel_residual = inputs
        .iter()
        .map(|t| max_abs_diff(&apply_kraus(&kraus, t), &half))
        .fold(0.0, f64::max);
    let complement_residual = inputs
        .iter()
        .map(|t| max_abs_diff(&apply_kraus(&comp, t), &half))
        .fold(0.0, f64::max);
    let full = CMat::identity(2, 2);
    let spec = CodeSpec::new(full.clone(), kraus.clone())?;
    let channel_deletion = is_deletion(&model, &kraus, &full, tol)?.is_deletion();
    let complement_deletion = is_deletion(&model, &comp, &full, tol)?.is_deletion();
    let correctable = is_correctable(&model, &spec, tol)?.is_correctable();
    let complementarity = complementarity_check(&model, &spec, tol)?;
    Ok(CounterexampleReport {
        channel_residual,
        complement_residual,
        channel_deletion,
        complement_deletion,
        correctable,
        complementarity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OneWayBudget {
    pub restarts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for OneWayBudget {
    fn default() -> Self {
        Self {
            restarts: 20,
            sweeps: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum OneWay {
    /// `C = Σ p_i U_i · U_i†`, recovered by `U_i⁻¹` on outcome `i`.
    Decomposed {
        probabilities: Vec<f64>,
        unitaries: Vec<CMat>,
        recoveries: Vec<CMat>,
        residual: f64,
    },
    /// Not unital, so no mixture of unitaries: `‖C(I) − I‖`.
    NotRandomUnitary { unitality_residual: f64 },
    /// The bounded search found no decomposition.
    Inconclusive { best_cost: f64 },
}

/// Search for a random-unitary decomposition of a channel `A → A` among
/// Kraus representations obtained from the Choi eigenvectors.
pub fn one_way_correct(model: &dyn TheoryModel, kraus: &[CMat], budget: OneWayBudget) -> Result<OneWay> {
    let h = hilbert(model)?;
    let spec = CodeSpec::full(kraus.to_vec())?;
    let d = spec.din();
    if spec.dout() != d {
        return Err(Error::invalid("one-way correction needs a channel A → A"));
    }
    let id = CMat::identity(d, d);
    let unitality_residual = max_abs_diff(&apply_kraus(kraus, &id), &id);
    if unitality_residual > 1e-9 {
        return Ok(OneWay::NotRandomUnitary { unitality_residual });
    }
    let choi = linalg::choi_from_kraus(kraus);
    let (vals, vecs) = eigh(&choi);
    let mut groups: Vec<Vec<(f64, CMat)>> = Vec::new();
    for (k, &lk) in vals.iter().enumerate().rev() {
        if lk <= 1e-12 {
            continue;
        }
        let col = vecs.column(k);
        let g = CMat::from_fn(d, d, |b, a| col[b * d + a] * cr(lk.sqrt()));
        match groups.last_mut() {
            Some(last) if (last[0].0 - lk).abs() < 1e-9 => last.push((lk, g)),
            _ => groups.push(vec![(lk, g)]),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut found: Vec<CMat> = Vec::new();
    let mut total_cost = 0.0;
    for group in &groups {
        let ops: Vec<CMat> = group.iter().map(|(_, g)| g.clone()).collect();
        match unitary_basis_in_span(&ops, d, h.is_real(), budget, &mut rng) {
            Ok(fs) => found.extend(fs),
            Err(cost) => total_cost += cost,
        }
    }
    if total_cost > 0.0 {
        return Ok(OneWay::Inconclusive { best_cost: total_cost });
    }
    let mut probabilities = Vec::new();
    let mut unitaries = Vec::new();
    for f in &found {
        let p = linalg::trace(&(f.adjoint() * f)).re / d as f64;
        probabilities.push(p);
        unitaries.push(f / cr(p.sqrt()));
    }
    let rebuilt: Vec<CMat> = found.clone();
    let residual = max_abs_diff(&linalg::choi_from_kraus(&rebuilt), &choi);
    let recoveries = unitaries.iter().map(|u| u.adjoint()).collect();
    Ok(OneWay::Decomposed {
        probabilities,
        unitaries,
        recoveries,
        residual,
    })
}

fn non_unitarity(f: &CMat) -> f64 {
    let d = f.ncols();
    let g = f.adjoint() * f;
    let t = linalg::trace(&g) / cr(d as f64);
    (g - CMat::identity(d, d) * t).norm_squared()
}

fn mix(ops: &[CMat], q: &CMat) -> Vec<CMat> {
    (0..ops.len())
        .map(|k| {
            let mut f = CMat::zeros(ops[0].nrows(), ops[0].ncols());
            for (l, g) in ops.iter().enumerate() {
                f += g * q[(k, l)];
            }
            f
        })
        .collect()
}

/// Unitary mixing `F_k = Σ_l q_kl G_l` of equal-weight Kraus operators with
/// every `F_k ∝` unitary. Weyl candidates first, then Givens descent.
fn unitary_basis_in_span(
    ops: &[CMat],
    d: usize,
    real: bool,
    budget: OneWayBudget,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<CMat>, f64> {
    let m = ops.len();
    let cost = |fs: &[CMat]| fs.iter().map(non_unitarity).sum::<f64>();
    if cost(ops) < 1e-18 {
        return Ok(ops.to_vec());
    }
    // Gram-normalized coordinates of candidates in the span
    let gram = CMat::from_fn(m, m, |i, j| ops[i].dotc(&ops[j]));
    let gram_inv = gram.clone().try_inverse().ok_or(f64::INFINITY)?;
    let mut candidates: Vec<CMat> = Vec::new();
    for a in 0..d {
        for b in 0..d {
            candidates.push(linalg::weyl(d, a, b));
        }
    }
    for g in ops {
        let svd = g.clone().svd(true, true);
        if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
            candidates.push(u * vt);
        }
    }
    let mut picked: Vec<CVec> = Vec::new();
    for cand in &candidates {
        let rhs = CVec::from_fn(m, |i, _| ops[i].dotc(cand));
        let coef = &gram_inv * rhs;
        let mut proj = CMat::zeros(d, d);
        for (l, g) in ops.iter().enumerate() {
            proj += g * coef[l];
        }
        if max_abs_diff(&proj, cand) > 1e-9 {
            continue;
        }
        // orthogonal in the span metric to the ones already taken
        let orth = picked.iter().all(|p| (p.adjoint() * &gram * &coef)[(0, 0)].norm() < 1e-9);
        if orth {
            picked.push(coef);
        }
        if picked.len() == m {
            break;
        }
    }
    if picked.len() == m {
        // rescale each to the common weight so the mixing is unitary
        let w = gram[(0, 0)].re;
        let fs: Vec<CMat> = picked
            .iter()
            .map(|coef| {
                let mut f = CMat::zeros(d, d);
                for (l, g) in ops.iter().enumerate() {
                    f += g * coef[l];
                }
                let n = f.norm();
                f * cr(w.sqrt() / n)
            })
            .collect();
        return Ok(fs);
    }
    let mut best = f64::INFINITY;
    for r in 0..budget.restarts.max(1) {
        let mut q = if r == 0 {
            CMat::identity(m, m)
        } else {
            linalg::random_unitary(m, rng, real)
        };
        let mut cur = cost(&mix(ops, &q));
        for _ in 0..budget.sweeps {
            let before = cur;
            for i in 0..m {
                for j in i + 1..m {
                    let mut best_local = (cur, None);
                    for _ in 0..24 {
                        let theta = rng.random_range(-1.0..1.0) * std::f64::consts::FRAC_PI_2 * (cur.sqrt().min(1.0) + 0.05);
                        let phi = if real { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
                        let g = givens(m, i, j, theta, phi);
                        let trial = &g * &q;
                        let tc = cost(&mix(ops, &trial));
                        if tc < best_local.0 {
                            best_local = (tc, Some(trial));
                        }
                    }
                    if let (tc, Some(t)) = best_local {
                        cur = tc;
                        q = t;
                    }
                }
            }
            if cur < 1e-20 || before - cur < 1e-16 {
                break;
            }
        }
        if cur < 1e-16 {
            return Ok(mix(ops, &q));
        }
        best = best.min(cur);
    }
    Err(best)
}

fn givens(m: usize, i: usize, j: usize, theta: f64, phi: f64) -> CMat {
    let mut g = CMat::identity(m, m);
    let (s, co) = theta.sin_cos();
    let e = c(phi.cos(), phi.sin());
    g[(i, i)] = cr(co);
    g[(j, j)] = cr(co);
    g[(i, j)] = -e.conj() * cr(s);
    g[(j, i)] = e * cr(s);
    g
}

/// Three-qubit repetition code with single bit-flip noise of probability `p`
/// spread over the qubits.
pub fn bit_flip_code(p: f64) -> Result<CodeSpec> {
    let x = crate::theory::paulis()[1].clone();
    let i2 = CMat::identity(2, 2);
    let mut kraus = vec![CMat::identity(8, 8) * cr((1.0 - p).sqrt())];
    for q in 0..3 {
        let mut ops = [i2.clone(), i2.clone(), i2.clone()];
        ops[q] = x.clone();
        kraus.push(linalg::kron_all(&ops) * cr((p / 3.0).sqrt()));
    }
    let mut proj = CMat::zeros(8, 8);
    proj[(0, 0)] = cr(1.0);
    proj[(7, 7)] = cr(1.0);
    CodeSpec::new(proj, kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{paulis, quantum_model};

    #[test]
    fn bit_flip_code_is_correctable() {
        let m = quantum_model(8).unwrap();
        let spec = bit_flip_code(0.3).unwrap();
        match is_correctable(&m, &spec, 1e-8).unwrap() {
            Correctability::Correctable {
                end_to_end_residual,
                factorization_residual,
                ..
            } => {
                assert!(end_to_end_residual < 1e-10);
                assert!(factorization_residual < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn depolarizing_is_not_correctable() {
        let m = quantum_model(2).unwrap();
        let kraus: Vec<CMat> = paulis().iter().map(|p| p * cr(0.5)).collect();
        let spec = CodeSpec::full(kraus).unwrap();
        match is_correctable(&m, &spec, 1e-8).unwrap() {
            Correctability::NotCorrectable { witness, kl_residual, .. } => {
                assert_ne!(witness.0, witness.1);
                assert!(kl_residual > 0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_counterexample_breaks_the_converse() {
        let r = real_counterexample(1e-9).unwrap();
        assert!(r.channel_residual < 1e-12 && r.complement_residual < 1e-12);
        assert!(r.channel_deletion && r.complement_deletion);
        assert!(!r.correctable);
        assert_eq!(r.complementarity.converse, None);
        assert!(r.complementarity.consistent());
    }

    #[test]
    fn pauli_channel_decomposes() {
        let m = quantum_model(2).unwrap();
        let ps = [0.4, 0.3, 0.2, 0.1];
        let kraus: Vec<CMat> = paulis().iter().zip(ps).map(|(s, p)| s * cr(f64::sqrt(p))).collect();
        match one_way_correct(&m, &kraus, OneWayBudget::default()).unwrap() {
            OneWay::Decomposed { probabilities, residual, .. } => {
                let mut got = probabilities.clone();
                got.sort_by(|a, b| b.total_cmp(a));
                for (g, w) in got.iter().zip(ps) {
                    assert!((g - w).abs() < 1e-10);
                }
                assert!(residual < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniform_twirl_decomposes_through_the_degenerate_search() {
        let m = quantum_model(2).unwrap();
        let kraus: Vec<CMat> = paulis().iter().map(|s| s * cr(0.5)).collect();
        match one_way_correct(&m, &kraus, OneWayBudget::default()).unwrap() {
            OneWay::Decomposed { probabilities, residual, unitaries, .. } => {
                assert_eq!(probabilities.len(), 4);
                assert!(residual < 1e-10);
                assert!(unitaries.iter().all(|u| linalg::unitarity_residual(u) < 1e-9));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn amplitude_damping_is_not_random_unitary() {
        let m = quantum_model(2).unwrap();
        let g: f64 = 0.3;
        let k0 = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr((1.0 - g).sqrt())]);
        let k1 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(g.sqrt()), cr(0.0), cr(0.0)]);
        assert!(matches!(
            one_way_correct(&m, &[k0, k1], OneWayBudget::default()).unwrap(),
            OneWay::NotRandomUnitary { .. }
        ));
    }
}
