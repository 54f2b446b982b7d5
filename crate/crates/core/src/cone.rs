//! Finitely generated convex cones in `R^n`.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::lp::{lp_solve, LpOutcome, LpProblem, Relation};

pub const DEFAULT_TOL: f64 = 1e-9;

/// A cone given by generators, optionally with a facet (H-) description.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    ambient_dim: usize,
    generators: Vec<Vec<f64>>,
    facets: Option<Vec<Vec<f64>>>,
}

impl Cone {
    pub fn new(ambient_dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::invalid("cone ambient dimension must be positive"));
        }
        for g in &generators {
            check_len(ambient_dim, g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("cone generator has non-finite entries"));
            }
        }
        Ok(Self {
            ambient_dim,
            generators,
            facets: None,
        })
    }

    /// Attach an H-representation. Every generator must satisfy every facet.
    pub fn with_facets(mut self, facets: Vec<Vec<f64>>) -> Result<Self> {
        for f in &facets {
            check_len(self.ambient_dim, f.len())?;
            for g in &self.generators {
                if dot(f, g) < -DEFAULT_TOL {
                    return Err(Error::invalid("generator violates a facet inequality"));
                }
            }
        }
        self.facets = Some(facets);
        Ok(self)
    }

    /// The non-negative orthant with both representations.
    pub fn orthant(n: usize) -> Result<Self> {
        let unit: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect();
        Cone::new(n, unit.clone())?.with_facets(unit)
    }

    /// A simplicial cone (linearly independent generators spanning `R^n`);
    /// facets are the normalised rows of the inverse generator matrix.
    pub fn simplicial(generators: Vec<Vec<f64>>) -> Result<Self> {
        let n = generators.len();
        let cone = Cone::new(n.max(1), generators)?;
        let g = DMatrix::from_fn(n, n, |i, j| cone.generators[j][i]);
        let inv = g
            .try_inverse()
            .ok_or_else(|| Error::invalid("simplicial generators are linearly dependent"))?;
        let facets = (0..n)
            .map(|i| {
                let row: Vec<f64> = inv.row(i).iter().copied().collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        cone.with_facets(facets)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn facets(&self) -> Option<&[Vec<f64>]> {
        self.facets.as_deref()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_len(self.ambient_dim, x.len())?;
        match &self.facets {
            Some(facets) => Ok(facets.iter().all(|f| dot(f, x) >= -tol)),
            None => self.contains_via_generators(x, tol),
        }
    }

    /// LP feasibility: minimise `‖x − Σ λ_g g‖_∞` over `λ ≥ 0`.
    pub fn contains_via_generators(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_len(self.ambient_dim, x.len())?;
        Ok(self.generator_residual(x)? <= tol)
    }

    pub fn generator_residual(&self, x: &[f64]) -> Result<f64> {
        let m = self.generators.len();
        if m == 0 {
            return Ok(x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
        // variables: λ_0 … λ_{m-1}, t
        let mut objective = vec![0.0; m + 1];
        objective[m] = -1.0;
        let mut p = LpProblem::maximize(objective);
        for (k, &xk) in x.iter().enumerate() {
            let mut row: Vec<f64> = self.generators.iter().map(|g| g[k]).collect();
            row.push(-1.0);
            p = p.subject_to(row.clone(), Relation::Le, xk);
            row[m] = 1.0;
            p = p.subject_to(row, Relation::Ge, xk);
        }
        match lp_solve(&p)? {
            LpOutcome::Optimal { value, .. } => Ok(-value),
            other => Err(Error::invalid(format!("membership LP ended as {other:?}"))),
        }
    }

    pub fn dual_contains(&self, f: &[f64], tol: f64) -> Result<bool> {
        check_len(self.ambient_dim, f.len())?;
        Ok(self.generators.iter().all(|g| dot(f, g) >= -tol))
    }

    /// Dual cone, available when facets are known (the facets generate it).
    pub fn dual(&self) -> Option<Cone> {
        let facets = self.facets.as_ref()?;
        let n = self.ambient_dim;
        if facets.len() == n {
            let c = Cone::simplicial(facets.clone()).ok()?;
            if c.generators.iter().all(|g| self.dual_generator_ok(g)) {
                return Some(c);
            }
        }
        Cone::new(n, facets.clone()).ok()
    }

    fn dual_generator_ok(&self, f: &[f64]) -> bool {
        self.generators.iter().all(|g| dot(f, g) >= -DEFAULT_TOL)
    }
}

pub fn cone_contains(c: &Cone, x: &[f64], tol: f64) -> Result<bool> {
    c.contains(x, tol)
}

pub fn dual_cone_contains(c: &Cone, f: &[f64], tol: f64) -> Result<bool> {
    c.dual_contains(f, tol)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex2() -> Cone {
        Cone::orthant(2).unwrap()
    }

    #[test]
    fn simplex_membership() {
        assert!(cone_contains(&simplex2(), &[0.3, 0.7], DEFAULT_TOL).unwrap());
        assert!(!cone_contains(&simplex2(), &[-0.1, 1.1], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn generator_cone_hand_oracle() {
        // (2,1) = 1·(1,0) + 1·(1,1)
        let c = Cone::new(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(cone_contains(&c, &[2.0, 1.0], DEFAULT_TOL).unwrap());
        // (0,1) would need a negative weight on (1,0)
        assert!(!cone_contains(&c, &[0.0, 1.0], DEFAULT_TOL).unwrap());
        assert!(dual_cone_contains(&c, &[0.0, 1.0], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn orthant_dual() {
        let c = Cone::orthant(2).unwrap();
        assert!(dual_cone_contains(&c, &[1.0, 1.0], DEFAULT_TOL).unwrap());
        assert!(!dual_cone_contains(&c, &[1.0, -1.0], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            cone_contains(&simplex2(), &[1.0], DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn facet_violation_rejected() {
        let c = Cone::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert!(c.with_facets(vec![vec![-1.0, 0.0]]).is_err());
    }
}
