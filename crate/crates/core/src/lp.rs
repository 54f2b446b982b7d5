//! Dense two-phase simplex with Bland's rule.
//!
//! Problems in this crate have at most a few hundred variables, so a dense
//! tableau is adequate. Pivoting is fully deterministic for a fixed input.

use crate::cone::Cone;
use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

/// Membership of a slice of the decision vector in a cone.
#[derive(Clone, Debug)]
pub struct ConeConstraint {
    pub cone: Cone,
    pub offset: usize,
}

/// `maximize ⟨objective, x⟩` subject to linear constraints and cone
/// memberships. Variables are non-negative unless listed in `free`.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub cone_constraints: Vec<ConeConstraint>,
    pub free: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl LpProblem {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn subject_to(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
        self
    }

    pub fn with_cone(mut self, cone: Cone, offset: usize) -> Self {
        self.cone_constraints.push(ConeConstraint { cone, offset });
        self
    }

    pub fn with_free(mut self, vars: impl IntoIterator<Item = usize>) -> Self {
        self.free.extend(vars);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::invalid("LP has no variables"));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite LP coefficient"));
            }
        }
        for cc in &self.cone_constraints {
            if cc.offset + cc.cone.ambient_dim() > n {
                return Err(Error::invalid("cone constraint slice out of range"));
            }
        }
        if self.free.iter().any(|&i| i >= n) {
            return Err(Error::invalid("free variable index out of range"));
        }
        Ok(())
    }

    /// Rewrite into `max c·y, A y (rel) b, y ≥ 0` over expanded variables.
    /// Returns the expanded problem and a map back to the original variables.
    fn standardize(&self) -> (Vec<f64>, Vec<Constraint>, Vec<(usize, Option<usize>)>) {
        let n = self.num_vars();
        // original var i -> (positive column, optional negative column)
        let mut map: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
        let mut ncols = 0;
        for i in 0..n {
            let pos = ncols;
            ncols += 1;
            let neg = if self.free.contains(&i) {
                ncols += 1;
                Some(ncols - 1)
            } else {
                None
            };
            map.push((pos, neg));
        }
        // generator-only cones need multiplier columns
        let mut gen_blocks = Vec::new();
        for cc in &self.cone_constraints {
            if cc.cone.facets().is_none() {
                gen_blocks.push((ncols, cc));
                ncols += cc.cone.generators().len();
            }
        }
        let expand = |coeffs: &[f64]| -> Vec<f64> {
            let mut row = vec![0.0; ncols];
            for (i, &(p, neg)) in map.iter().enumerate() {
                row[p] += coeffs[i];
                if let Some(q) = neg {
                    row[q] -= coeffs[i];
                }
            }
            row
        };
        let objective = expand(&self.objective);
        let mut rows: Vec<Constraint> = self
            .constraints
            .iter()
            .map(|c| Constraint::new(expand(&c.coeffs), c.relation, c.rhs))
            .collect();
        for cc in &self.cone_constraints {
            if let Some(facets) = cc.cone.facets() {
                for f in facets {
                    let mut coeffs = vec![0.0; n];
                    coeffs[cc.offset..cc.offset + f.len()].copy_from_slice(f);
                    rows.push(Constraint::new(expand(&coeffs), Relation::Ge, 0.0));
                }
            }
        }
        for (start, cc) in gen_blocks {
            let dim = cc.cone.ambient_dim();
            for k in 0..dim {
                let mut coeffs = vec![0.0; n];
                coeffs[cc.offset + k] = 1.0;
                let mut row = expand(&coeffs);
                for (g, gen) in cc.cone.generators().iter().enumerate() {
                    row[start + g] -= gen[k];
                }
                rows.push(Constraint::new(row, Relation::Eq, 0.0));
            }
        }
        (objective, rows, map)
    }
}

/// Solve `p`. Infeasible and unbounded problems are reported as outcomes.
pub fn lp_solve(p: &LpProblem) -> Result<LpOutcome> {
    p.validate()?;
    let (objective, rows, map) = p.standardize();
    let outcome = Tableau::solve(&objective, &rows);
    Ok(match outcome {
        LpOutcome::Optimal { value, x } => {
            let orig = map
                .iter()
                .map(|&(pos, neg)| x[pos] - neg.map_or(0.0, |q| x[q]))
                .collect();
            LpOutcome::Optimal { value, x: orig }
        }
        other => other,
    })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    // reduced costs; last entry holds minus the objective value
    z: Vec<f64>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn solve(objective: &[f64], constraints: &[Constraint]) -> LpOutcome {
        let nvars = objective.len();
        let m = constraints.len();
        // Normalise so every rhs is non-negative.
        let normalized: Vec<(Vec<f64>, Relation, f64)> = constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        let n_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let ncols = nvars + n_slack + n_art;
        let mut rows = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut is_art = vec![false; ncols];
        let (mut s, mut a) = (nvars, nvars + n_slack);
        for (i, (coeffs, rel, rhs)) in normalized.iter().enumerate() {
            rows[i][..nvars].copy_from_slice(coeffs);
            rows[i][ncols] = *rhs;
            match rel {
                Relation::Le => {
                    rows[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    rows[i][s] = -1.0;
                    s += 1;
                    rows[i][a] = 1.0;
                    is_art[a] = true;
                    basis[i] = a;
                    a += 1;
                }
                Relation::Eq => {
                    rows[i][a] = 1.0;
                    is_art[a] = true;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        let mut t = Tableau {
            rows,
            basis,
            ncols,
            z: vec![0.0; ncols + 1],
            blocked: vec![false; ncols],
        };

        if n_art > 0 {
            let cost: Vec<f64> = (0..ncols).map(|j| if is_art[j] { -1.0 } else { 0.0 }).collect();
            t.set_costs(&cost);
            if t.run() == RunStatus::Unbounded {
                // phase one is bounded by construction
                return LpOutcome::Infeasible;
            }
            let scale = 1.0 + normalized.iter().map(|(_, _, b)| b.abs()).fold(0.0, f64::max);
            if -t.z[ncols] < -1e-9 * scale {
                return LpOutcome::Infeasible;
            }
            t.drive_out_artificials(&is_art);
            for (j, art) in is_art.iter().enumerate() {
                if *art {
                    t.blocked[j] = true;
                }
            }
        }
        let mut cost = vec![0.0; ncols];
        cost[..nvars].copy_from_slice(objective);
        t.set_costs(&cost);
        match t.run() {
            RunStatus::Unbounded => LpOutcome::Unbounded,
            RunStatus::Optimal => {
                let mut x = vec![0.0; nvars];
                for (i, &b) in t.basis.iter().enumerate() {
                    if b < nvars {
                        x[b] = t.rows[i][ncols].max(0.0);
                    }
                }
                LpOutcome::Optimal {
                    value: -t.z[ncols],
                    x,
                }
            }
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let n = self.ncols;
        let mut z = vec![0.0; n + 1];
        z[..n].copy_from_slice(cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (zj, rj) in z.iter_mut().zip(&self.rows[i]) {
                    *zj -= cb * rj;
                }
            }
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.ncols;
        let pv = self.rows[r][s];
        for v in self.rows[r].iter_mut() {
            *v /= pv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[s];
            if f != 0.0 {
                for j in 0..=n {
                    row[j] -= f * prow[j];
                }
                row[s] = 0.0;
            }
        }
        let f = self.z[s];
        if f != 0.0 {
            for j in 0..=n {
                self.z[j] -= f * prow[j];
            }
            self.z[s] = 0.0;
        }
        self.basis[r] = s;
    }

    fn run(&mut self) -> RunStatus {
        let n = self.ncols;
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving column
            let entering = (0..n).find(|&j| !self.blocked[j] && self.z[j] > 1e-11);
            let Some(s) = entering else {
                return RunStatus::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[s];
                if a > PIVOT_EPS {
                    let ratio = row[n] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || ((ratio - br).abs() <= 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return RunStatus::Unbounded,
                Some((r, _)) => self.pivot(r, s),
            }
        }
        log::warn!("simplex pivot limit reached");
        RunStatus::Optimal
    }

    fn drive_out_artificials(&mut self, is_art: &[bool]) {
        let mut i = 0;
        while i < self.rows.len() {
            if is_art[self.basis[i]] {
                let col = (0..self.ncols)
                    .find(|&j| !is_art[j] && self.rows[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        // redundant row
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}

#[derive(PartialEq, Eq)]
enum RunStatus {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_max_on_segment() {
        let p = LpProblem::maximize(vec![1.0, 0.0]).subject_to(vec![1.0, 1.0], Relation::Eq, 1.0);
        match lp_solve(&p).unwrap() {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 1.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn equality_and_bound() {
        // hand solve: x1 = x2 and x1 ≤ 1/2 ⇒ optimum at (1/2, 1/2)
        let p = LpProblem::maximize(vec![1.0, 0.0])
            .subject_to(vec![1.0, -1.0], Relation::Eq, 0.0)
            .subject_to(vec![1.0, 0.0], Relation::Le, 0.5);
        match lp_solve(&p).unwrap() {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 0.5).abs() < 1e-12);
                assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let p = LpProblem::maximize(vec![1.0])
            .subject_to(vec![1.0], Relation::Ge, 1.0)
            .subject_to(vec![1.0], Relation::Le, 0.0);
        assert_eq!(lp_solve(&p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let p = LpProblem::maximize(vec![1.0, 1.0]).subject_to(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp_solve(&p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_go_negative() {
        // max -x s.t. x ≥ -3, x free
        let p = LpProblem::maximize(vec![-1.0])
            .subject_to(vec![1.0], Relation::Ge, -3.0)
            .with_free([0]);
        let v = lp_solve(&p).unwrap();
        assert_eq!(v.value().map(|v| (v - 3.0).abs() < 1e-12), Some(true));
    }

    #[test]
    fn redundant_equalities() {
        let p = LpProblem::maximize(vec![1.0, 2.0])
            .subject_to(vec![1.0, 1.0], Relation::Eq, 1.0)
            .subject_to(vec![2.0, 2.0], Relation::Eq, 2.0);
        assert!((lp_solve(&p).unwrap().value().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = LpProblem::maximize(vec![1.0, 2.0]).subject_to(vec![1.0], Relation::Eq, 1.0);
        assert!(matches!(lp_solve(&p), Err(Error::DimensionMismatch { .. })));
    }
}
