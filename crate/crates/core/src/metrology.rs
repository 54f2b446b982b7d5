//! Operational norms and two-state discrimination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, random_ket, CMat, CVec};
use crate::lp::{lp_solve, LpOutcome, LpProblem, Relation};
use crate::theory::{EffectVec, LinearMap, StateVec, SystemLabel, TheoryId, TheoryModel};

/// `sup_a ⟨a,δ⟩ − inf_a ⟨a,δ⟩` over the effects of the theory.
///
/// Hilbert-space theories use the trace norm. Polyhedral theories solve two
/// LPs over `{a : a ≥ 0, e − a ≥ 0 on the state cone}` and evaluate the
/// difference of the optimal effects against `δ` in index order.
pub fn state_norm(model: &dyn TheoryModel, delta: &StateVec) -> Result<f64> {
    model.own(&delta.system)?;
    if model.as_hilbert().is_some() {
        return Ok(model.op_norm(delta));
    }
    let cone = model
        .state_cone(&delta.system)
        .ok_or_else(|| Error::unsupported("state norm needs a polyhedral state cone"))?;
    let e = model.deterministic_effect(&delta.system).coords;
    let n = delta.coords.len();
    let solve = |sign: f64| -> Result<Vec<f64>> {
        let mut p = LpProblem::maximize(delta.coords.iter().map(|v| sign * v).collect()).with_free(0..n);
        for g in cone.generators() {
            p = p.subject_to(g.clone(), Relation::Ge, 0.0);
            p = p.subject_to(g.clone(), Relation::Le, linalg::dot(&e, g));
        }
        match lp_solve(&p)? {
            LpOutcome::Optimal { x, .. } => Ok(x),
            other => Err(Error::invalid(format!("effect-box LP ended {other:?}"))),
        }
    };
    let hi = solve(1.0)?;
    let lo = solve(-1.0)?;
    // round to the box vertices the simplex lands on; both are exact 0/1 here
    let diff: Vec<f64> = hi
        .iter()
        .zip(&lo)
        .map(|(a, b)| {
            let d = a - b;
            if (d - d.round()).abs() < 1e-9 {
                d.round()
            } else {
                d
            }
        })
        .collect();
    Ok(diff
        .iter()
        .zip(&delta.coords)
        .fold(0.0, |acc, (w, v)| acc + if *w == -1.0 { -v } else { w * v }))
}

/// `sup_ρ |⟨δ,ρ⟩|` over normalized states.
pub fn effect_norm(model: &dyn TheoryModel, delta: &EffectVec) -> Result<f64> {
    model.own(&delta.system)?;
    Ok(model.effect_norm(delta))
}

#[derive(Clone, Debug)]
pub struct DiscriminationResult {
    pub p_success: f64,
    /// `(a0, a1)`, guessing `ρ_i` on outcome `i`.
    pub test: (EffectVec, EffectVec),
    /// `π1 ρ1 − π0 ρ0`.
    pub witness: Vec<f64>,
}

/// Optimal two-state discrimination with priors `π0, π1`.
pub fn discriminate(
    model: &dyn TheoryModel,
    rho0: &StateVec,
    rho1: &StateVec,
    pi0: f64,
    pi1: f64,
) -> Result<DiscriminationResult> {
    if rho0.system != rho1.system {
        return Err(Error::invalid("states live on different systems"));
    }
    if pi0 < 0.0 || pi1 < 0.0 || ((pi0 + pi1) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("priors ({pi0}, {pi1}) are not a distribution")));
    }
    let sys = &rho0.system;
    let e = model.deterministic_effect(sys);
    let zero = e.scale(0.0);
    if pi0 == 0.0 || pi1 == 0.0 {
        let test = if pi0 == 0.0 { (zero, e) } else { (e, zero) };
        return Ok(DiscriminationResult {
            p_success: 1.0,
            test,
            witness: rho1.scale(pi1).sub(&rho0.scale(pi0))?.coords,
        });
    }
    // evaluate in a canonical orientation so that swapping the hypotheses
    // reproduces the same floating-point result
    let swapped = (pi1, &rho1.coords)
        .partial_cmp(&(pi0, &rho0.coords))
        .is_some_and(|o| o.is_lt());
    let (r0, r1, p0, p1) = if swapped {
        (rho1, rho0, pi1, pi0)
    } else {
        (rho0, rho1, pi0, pi1)
    };
    let delta = r1.scale(p1).sub(&r0.scale(p0))?;
    let norm = state_norm(model, &delta)?;
    let a1 = model.positive_part_effect(&delta);
    let a0 = e.sub(&a1)?;
    let (test, witness) = if swapped {
        (
            (a1, a0),
            delta.coords.iter().map(|v| -v).collect(),
        )
    } else {
        ((a0, a1), delta.coords)
    };
    Ok(DiscriminationResult {
        p_success: 0.5 * (1.0 + norm),
        test,
        witness,
    })
}

#[derive(Clone, Debug)]
pub struct WorstCaseTest {
    pub a0: EffectVec,
    pub a1: EffectVec,
    /// `p(1|0) = p(0|1)`.
    pub error: f64,
}

/// Binary test with equal error probabilities below one half.
///
/// Starts from an effect `a` with `⟨a,ρ0⟩ > ⟨a,ρ1⟩` (the Helstrom effect),
/// replaces it by `(a+e)/2` when `⟨a,ρ0⟩ + ⟨a,ρ1⟩ < 1` (up to rounding),
/// and sets `a0 = q a`, `q = 1/(⟨a,ρ0⟩+⟨a,ρ1⟩)`.
pub fn worst_case_test(
    model: &dyn TheoryModel,
    rho0: &StateVec,
    rho1: &StateVec,
    tol: f64,
) -> Result<WorstCaseTest> {
    let delta = rho0.sub(rho1)?;
    let e = model.deterministic_effect(&rho0.system);
    let mut a = model.positive_part_effect(&delta);
    if delta.pair(&a) <= tol {
        return Err(Error::Indistinguishable);
    }
    // rounding can leave a projector summing to 1 − ε; mixing then would
    // throw away a perfect test
    if rho0.pair(&a) + rho1.pair(&a) < 1.0 - 1e-9 {
        a = a.add_scaled(&e, 1.0)?.scale(0.5);
    }
    let s = rho0.pair(&a) + rho1.pair(&a);
    let a0 = a.scale(1.0 / s);
    let a1 = e.sub(&a0)?;
    Ok(WorstCaseTest {
        error: rho1.pair(&a) / s,
        a0,
        a1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeesawBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SeesawBudget {
    fn default() -> Self {
        Self {
            restarts: 8,
            iterations: 400,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormBound {
    pub value: f64,
    /// Input state on `A ⊗ A'` attaining `value`.
    pub certificate: StateVec,
    /// Best value after each seesaw round of the winning restart.
    pub history: Vec<f64>,
}

/// Lower bound on `sup ‖(Δ ⊗ I)Ψ‖` over states `Ψ` on `A ⊗ A'`, `A' ≅ A`.
///
/// Quantum: seesaw between the pure input and the sign of the output,
/// starting from the maximally entangled state and `restarts − 1`
/// Haar-random inputs. Classical: exact, by enumerating the input vertices.
pub fn transformation_norm(
    model: &dyn TheoryModel,
    delta: &LinearMap,
    budget: SeesawBudget,
) -> Result<NormBound> {
    model.own(&delta.input)?;
    match model.id() {
        TheoryId::RealQuantum => Err(Error::unsupported(
            "transformation norm with an equal-size ancilla is not known to be exact for real Hilbert spaces",
        )),
        TheoryId::Classical => classical_transformation_norm(model, delta),
        TheoryId::Quantum => seesaw(model, delta, budget),
    }
}

fn classical_transformation_norm(model: &dyn TheoryModel, delta: &LinearMap) -> Result<NormBound> {
    let anc = delta.input.clone();
    let lifted = model.lift_local(delta, &anc)?;
    let mut best: Option<(f64, StateVec)> = None;
    let n = delta.input.coord_dim();
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let x = StateVec::new(delta.input.clone(), v)?;
        let y = model.embed_product(&x, &unit_vertex(&anc))?;
        let val = state_norm(model, &lifted.apply(&y)?)?;
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, y));
        }
    }
    let (value, certificate) = best.expect("at least one vertex");
    Ok(NormBound {
        value,
        certificate,
        history: vec![value],
    })
}

fn unit_vertex(a: &SystemLabel) -> StateVec {
    let mut v = vec![0.0; a.coord_dim()];
    v[0] = 1.0;
    StateVec { system: a.clone(), coords: v }
}

struct Run {
    value: f64,
    ket: CVec,
    history: Vec<f64>,
}

fn seesaw(model: &dyn TheoryModel, delta: &LinearMap, budget: SeesawBudget) -> Result<NormBound> {
    let h = model.as_hilbert().expect("quantum model");
    let anc = delta.input.clone();
    let lifted = model.lift_local(delta, &anc)?;
    let in_sys = delta.input.tensor(&anc)?;
    let out_sys = delta.output.tensor(&anc)?;
    let d = delta.input.local_dim();
    let n = d * d;

    let value_of = |ket: &CVec| -> Result<(f64, CMat)> {
        let x = h.state_from_ket(&in_sys, ket)?;
        let y = h.density(&lifted.apply(&x)?);
        let (vals, vecs) = eigh(&y);
        let signs = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| linalg::cr(if v > 0.0 { 1.0 } else { -1.0 })),
        ));
        let sign = &vecs * signs * vecs.adjoint();
        Ok((vals.iter().map(|v| v.abs()).sum(), sign))
    };

    let run = |start: CVec| -> Result<Run> {
        let mut ket = start;
        let (mut value, mut sign) = value_of(&ket)?;
        let mut history = vec![value];
        for _ in 0..budget.iterations {
            let s = h.effect_from_operator(&out_sys, &linalg::hermitian_part(&sign))?;
            let pulled = h.effect_operator(&lifted.pullback(&s)?);
            let (_, vecs) = eigh(&linalg::hermitian_part(&pulled));
            let cand = vecs.column(n - 1).into_owned();
            let (v, sg) = value_of(&cand)?;
            if v <= value + 1e-15 {
                break;
            }
            let gain = v - value;
            ket = cand;
            value = v;
            sign = sg;
            history.push(value);
            if gain < 1e-13 {
                break;
            }
        }
        Ok(Run { value, ket, history })
    };

    let starts: Vec<CVec> = (0..budget.restarts.max(1))
        .map(|k| {
            if k == 0 {
                linalg::omega_ket(d) * linalg::cr(1.0 / (d as f64).sqrt())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(k as u64));
                random_ket(n, &mut rng, false)
            }
        })
        .collect();
    let runs: Vec<Run> = starts.into_par_iter().map(run).collect::<Result<_>>()?;
    // keep the first maximizer
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    log::debug!("seesaw bound {} after {} rounds", best.value, best.history.len());
    Ok(NormBound {
        value: best.value,
        certificate: h.state_from_ket(&in_sys, &best.ket)?,
        history: best.history,
    })
}
