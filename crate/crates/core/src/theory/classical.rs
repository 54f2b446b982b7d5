use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::{
    EffectVec, LinearMap, MapTag, Purified, StateVec, SystemLabel, TheoryId, TheoryModel,
};
use crate::cone::Cone;
use crate::error::{check_len, Error, Result};
use crate::linalg::{kron_vec, RMat};
use crate::tensor::{contract, kron_real};

/// Finite classical probability theory: states are sub-normalized
/// probability vectors, effects are vectors in `[0,1]^n`.
#[derive(Clone, Debug)]
pub struct ClassicalModel {
    n: usize,
}

impl ClassicalModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("classical model needs n >= 2"));
        }
        Ok(Self { n })
    }

    pub fn vertex(&self, a: &SystemLabel, i: usize) -> StateVec {
        let mut v = vec![0.0; a.coord_dim()];
        v[i] = 1.0;
        StateVec {
            system: a.clone(),
            coords: v,
        }
    }
}

impl TheoryModel for ClassicalModel {
    fn id(&self) -> TheoryId {
        TheoryId::Classical
    }

    fn default_dim(&self) -> usize {
        self.n
    }

    fn state_cone(&self, a: &SystemLabel) -> Option<Cone> {
        Cone::orthant(a.coord_dim()).ok()
    }

    fn effect_cone(&self, a: &SystemLabel) -> Option<Cone> {
        Cone::orthant(a.coord_dim()).ok()
    }

    fn contains_state(&self, x: &StateVec, tol: f64) -> Result<bool> {
        let cone = Cone::orthant(x.system.coord_dim())?;
        cone.contains(&x.coords, tol)
    }

    fn contains_effect(&self, a: &EffectVec, tol: f64) -> Result<bool> {
        Ok(a.coords.iter().all(|&v| v >= -tol && v <= 1.0 + tol))
    }

    fn min_on_states(&self, a: &EffectVec) -> Result<f64> {
        Ok(a.coords.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn deterministic_effect(&self, a: &SystemLabel) -> EffectVec {
        EffectVec {
            system: a.clone(),
            coords: vec![1.0; a.coord_dim()],
        }
    }

    fn embed_product(&self, x: &StateVec, y: &StateVec) -> Result<StateVec> {
        Ok(StateVec {
            system: self.compose(&x.system, &y.system)?,
            coords: kron_vec(&x.coords, &y.coords),
        })
    }

    fn embed_product_effects(&self, a: &EffectVec, b: &EffectVec) -> Result<EffectVec> {
        Ok(EffectVec {
            system: self.compose(&a.system, &b.system)?,
            coords: kron_vec(&a.coords, &b.coords),
        })
    }

    fn lift_local(&self, m: &LinearMap, b: &SystemLabel) -> Result<LinearMap> {
        self.tensor_maps(m, &LinearMap::identity(b))
    }

    fn tensor_maps(&self, m1: &LinearMap, m2: &LinearMap) -> Result<LinearMap> {
        let tag = if m1.tag == m2.tag { m1.tag } else { MapTag::Unconstrained };
        LinearMap::new(
            self.compose(&m1.input, &m2.input)?,
            self.compose(&m1.output, &m2.output)?,
            kron_real(&m1.matrix, &m2.matrix),
            tag,
        )
    }

    fn marginal(&self, x: &StateVec, keep: &[usize]) -> Result<StateVec> {
        check_len(x.system.coord_dim(), x.coords.len())?;
        let dims = x.system.factor_coord_dims();
        if keep.iter().any(|&k| k >= dims.len()) {
            return Err(Error::invalid("marginal: factor index out of range"));
        }
        let weights: Vec<Vec<f64>> = dims.iter().map(|&d| vec![1.0; d]).collect();
        Ok(StateVec {
            system: x.system.sub(keep),
            coords: contract(&x.coords, &dims, keep, &weights),
        })
    }

    fn random_pure_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec {
        let i = rng.random_range(0..a.coord_dim());
        self.vertex(a, i)
    }

    fn random_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec {
        let w: Vec<f64> = (0..a.coord_dim())
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let s: f64 = w.iter().sum();
        StateVec {
            system: a.clone(),
            coords: w.into_iter().map(|v| v / s).collect(),
        }
    }

    fn random_reversible(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> LinearMap {
        let n = a.coord_dim();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut m = RMat::zeros(n, n);
        for (src, &dst) in perm.iter().enumerate() {
            m[(dst, src)] = 1.0;
        }
        LinearMap::new(a.clone(), a.clone(), m, MapTag::Reversible).expect("square permutation")
    }

    fn invariant_state(&self, a: &SystemLabel) -> StateVec {
        let n = a.coord_dim();
        StateVec {
            system: a.clone(),
            coords: vec![1.0 / n as f64; n],
        }
    }

    fn op_norm(&self, delta: &StateVec) -> f64 {
        delta.coords.iter().map(|v| v.abs()).sum()
    }

    fn effect_norm(&self, delta: &EffectVec) -> f64 {
        delta.coords.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn is_pure(&self, x: &StateVec, tol: f64) -> bool {
        x.coords.iter().filter(|v| v.abs() > tol).count() <= 1
    }

    fn purify(&self, x: &StateVec) -> Result<Purified> {
        if !self.is_pure(x, 1e-12) {
            return Err(Error::PurificationUnsupported(
                "pure classical composite states are products of vertices, so their marginals are pure"
                    .into(),
            ));
        }
        let purifying = SystemLabel::atom(TheoryId::Classical, 1);
        let anc = StateVec {
            system: purifying.clone(),
            coords: vec![1.0],
        };
        Ok(Purified {
            state: self.embed_product(x, &anc)?,
            purifying,
        })
    }

    fn positive_part_effect(&self, delta: &StateVec) -> EffectVec {
        EffectVec {
            system: delta.system.clone(),
            coords: delta
                .coords
                .iter()
                .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    fn spanning_states(&self, a: &SystemLabel) -> Vec<StateVec> {
        (0..a.coord_dim()).map(|i| self.vertex(a, i)).collect()
    }

    fn positivity_margin(&self, m: &LinearMap) -> Result<f64> {
        Ok(m.matrix.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{check_channel, MapClass};

    #[test]
    fn deterministic_effect_is_all_ones() {
        let m = ClassicalModel::new(2).unwrap();
        assert_eq!(m.deterministic_effect(&m.system()).coords, vec![1.0, 1.0]);
    }

    #[test]
    fn op_norm_is_l1() {
        let m = ClassicalModel::new(2).unwrap();
        let d = StateVec::new(m.system(), vec![0.5, -0.5]).unwrap();
        assert_eq!(m.op_norm(&d), 1.0);
    }

    #[test]
    fn mixed_states_cannot_be_purified() {
        let m = ClassicalModel::new(2).unwrap();
        let x = StateVec::new(m.system(), vec![0.5, 0.5]).unwrap();
        assert!(matches!(m.purify(&x), Err(Error::PurificationUnsupported(_))));
    }

    #[test]
    fn stochastic_matrix_is_a_channel() {
        let m = ClassicalModel::new(2).unwrap();
        let s = m.system();
        let mat = RMat::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]);
        let lm = LinearMap::new(s.clone(), s, mat, MapTag::Unconstrained).unwrap();
        assert_eq!(check_channel(&lm, &m).class, MapClass::Channel);
    }

    #[test]
    fn d0_rejected() {
        assert!(ClassicalModel::new(1).is_err());
    }
}
