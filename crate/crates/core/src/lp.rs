//! Exact rational simplex (two-phase, Bland's rule) with primal, dual and
//! Farkas certificates.
//!
//! Rows are `a · x (≤ | ≥ | =) b`; each variable is either free or `≥ 0`.
//! Dual multipliers `y` are reported with the natural sign for the sense of
//! the problem, so that `b · y` equals the optimal value:
//!
//! * maximize: `y ≥ 0` on `≤` rows, `y ≤ 0` on `≥` rows;
//! * minimize: `y ≤ 0` on `≤` rows, `y ≥ 0` on `≥` rows;
//!
//! and `Σ y_i a_i` dominates the objective on `≥ 0` variables (from above
//! when maximizing, from below when minimizing) and matches it exactly on
//! free variables.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::rational::{dot, Rational, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vector,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    free: Vec<bool>,
    objective: Vector,
    sense: Sense,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vector,
    pub duals: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// Multipliers `y` (one per row) with `y ≥ 0` on `≤` rows, `y ≤ 0` on `≥`
    /// rows, `Σ y_i a_i ≥ 0` on nonnegative variables, `= 0` on free ones and
    /// `y · b < 0`.
    Infeasible {
        farkas: Vector,
    },
    /// A feasible point and a recession direction improving the objective.
    Unbounded {
        point: Vector,
        ray: Vector,
    },
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            free: vec![false; num_vars],
            objective: vec![Rational::zero(); num_vars],
            sense,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn set_all_free(&mut self) {
        self.free.iter_mut().for_each(|f| *f = true);
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.free[j]
    }

    pub fn set_objective(&mut self, c: Vector) {
        assert_eq!(c.len(), self.num_vars);
        self.objective = c;
    }

    pub fn set_objective_coeff(&mut self, j: usize, c: Rational) {
        self.objective[j] = c;
    }

    pub fn add(&mut self, coeffs: Vector, relation: Relation, rhs: Rational) -> usize {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Adds a row given as sparse `(index, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) -> usize {
        let mut coeffs = vec![Rational::zero(); self.num_vars];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add(coeffs, relation, rhs)
    }

    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars {
            return false;
        }
        if x.iter()
            .zip(&self.free)
            .any(|(v, &free)| !free && v.is_negative())
        {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs = dot(&c.coeffs, x);
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            }
        })
    }

    /// Checks a Farkas infeasibility certificate by direct arithmetic.
    pub fn verify_farkas(&self, y: &[Rational]) -> bool {
        if y.len() != self.constraints.len() {
            return false;
        }
        for (yi, c) in y.iter().zip(&self.constraints) {
            let ok = match c.relation {
                Relation::Le => !yi.is_negative(),
                Relation::Ge => !yi.is_positive(),
                Relation::Eq => true,
            };
            if !ok {
                return false;
            }
        }
        let w = self.combine_rows(y);
        for (j, wj) in w.iter().enumerate() {
            if self.free[j] && !wj.is_zero() {
                return false;
            }
            if !self.free[j] && wj.is_negative() {
                return false;
            }
        }
        let yb: Rational = y.iter().zip(&self.constraints).map(|(yi, c)| yi * &c.rhs).sum();
        yb.is_negative()
    }

    /// Checks primal feasibility, dual feasibility and equal objective values.
    pub fn verify_optimal(&self, sol: &LpSolution) -> bool {
        if !self.is_feasible_point(&sol.x) || dot(&self.objective, &sol.x) != sol.value {
            return false;
        }
        let y = &sol.duals;
        if y.len() != self.constraints.len() {
            return false;
        }
        let max = self.sense == Sense::Maximize;
        for (yi, c) in y.iter().zip(&self.constraints) {
            let ok = match (c.relation, max) {
                (Relation::Eq, _) => true,
                (Relation::Le, true) | (Relation::Ge, false) => !yi.is_negative(),
                (Relation::Ge, true) | (Relation::Le, false) => !yi.is_positive(),
            };
            if !ok {
                return false;
            }
        }
        let w = self.combine_rows(y);
        for (j, (wj, cj)) in w.iter().zip(&self.objective).enumerate() {
            let ok = if self.free[j] {
                wj == cj
            } else if max {
                wj >= cj
            } else {
                wj <= cj
            };
            if !ok {
                return false;
            }
        }
        let yb: Rational = y.iter().zip(&self.constraints).map(|(yi, c)| yi * &c.rhs).sum();
        yb == sol.value
    }

    pub fn verify_unbounded(&self, point: &[Rational], ray: &[Rational]) -> bool {
        if !self.is_feasible_point(point) {
            return false;
        }
        let improving = dot(&self.objective, ray);
        let improving = match self.sense {
            Sense::Maximize => improving.is_positive(),
            Sense::Minimize => improving.is_negative(),
        };
        improving
            && ray
                .iter()
                .zip(&self.free)
                .all(|(r, &free)| free || !r.is_negative())
            && self.constraints.iter().all(|c| {
                let d = dot(&c.coeffs, ray);
                match c.relation {
                    Relation::Le => !d.is_positive(),
                    Relation::Ge => !d.is_negative(),
                    Relation::Eq => d.is_zero(),
                }
            })
    }

    fn combine_rows(&self, y: &[Rational]) -> Vector {
        let mut w = vec![Rational::zero(); self.num_vars];
        for (yi, c) in y.iter().zip(&self.constraints) {
            if yi.is_zero() {
                continue;
            }
            for (wj, a) in w.iter_mut().zip(&c.coeffs) {
                if !a.is_zero() {
                    *wj += yi * a;
                }
            }
        }
        w
    }

    pub fn solve(&self) -> LpOutcome {
        Simplex::build(self).run(self)
    }
}

/// Column layout of the standard-form tableau.
struct Layout {
    /// For each original variable: (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
    /// Number of structural columns (variables, splits, slacks).
    n_struct: usize,
    /// Sign applied to each row to make its right-hand side nonnegative.
    row_sign: Vec<bool>,
}

struct Simplex {
    layout: Layout,
    rows: Vec<Vector>,
    rhs: Vector,
    basis: Vec<usize>,
    reduced: Vector,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Simplex {
        let m = lp.constraints.len();
        let mut var_cols = Vec::with_capacity(lp.num_vars);
        let mut col = 0;
        for j in 0..lp.num_vars {
            if lp.free[j] {
                var_cols.push((col, Some(col + 1)));
                col += 2;
            } else {
                var_cols.push((col, None));
                col += 1;
            }
        }
        let mut slack_col = Vec::with_capacity(m);
        for c in &lp.constraints {
            if c.relation == Relation::Eq {
                slack_col.push(None);
            } else {
                slack_col.push(Some(col));
                col += 1;
            }
        }
        let n_struct = col;
        let ncols = n_struct + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![Rational::zero(); ncols];
            for (j, a) in c.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let (p, n) = var_cols[j];
                row[p] = a.clone();
                if let Some(n) = n {
                    row[n] = -a.clone();
                }
            }
            match (c.relation, slack_col[i]) {
                (Relation::Le, Some(s)) => row[s] = Rational::one(),
                (Relation::Ge, Some(s)) => row[s] = -Rational::one(),
                _ => {}
            }
            let flip = c.rhs.is_negative();
            let mut b = c.rhs.clone();
            if flip {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
                b = -b;
            }
            row[n_struct + i] = Rational::one();
            rows.push(row);
            rhs.push(b);
            row_sign.push(flip);
        }
        Simplex {
            layout: Layout {
                var_cols,
                n_struct,
                row_sign,
            },
            rows,
            rhs,
            basis: (n_struct..n_struct + m).collect(),
            reduced: vec![Rational::zero(); ncols],
        }
    }

    fn ncols(&self) -> usize {
        self.layout.n_struct + self.rows.len()
    }

    fn set_costs(&mut self, costs: &[Rational]) {
        let mut r = costs.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (rj, a) in r.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *rj -= cb * a;
                }
            }
        }
        self.reduced = r;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let inv = Rational::one() / &self.rows[pr][pc];
        for x in self.rows[pr].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        self.rhs[pr] *= &inv;
        let nz: Vec<usize> = (0..self.rows[pr].len())
            .filter(|&j| !self.rows[pr][j].is_zero())
            .collect();
        let prow = std::mem::take(&mut self.rows[pr]);
        let pb = self.rhs[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr || row.is_empty() || row[pc].is_zero() {
                continue;
            }
            let f = row[pc].clone();
            for &j in &nz {
                row[j] -= &f * &prow[j];
            }
            self.rhs[i] -= &f * &pb;
        }
        if !self.reduced[pc].is_zero() {
            let f = self.reduced[pc].clone();
            for &j in &nz {
                self.reduced[j] -= &f * &prow[j];
            }
        }
        self.rows[pr] = prow;
        self.basis[pr] = pc;
    }

    /// Runs Bland's rule over columns `< allowed`. Returns the unbounded
    /// entering column, if any.
    fn iterate(&mut self, allowed: usize) -> Option<usize> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.reduced[j].is_positive()) else {
                return None;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Some(enter),
                Some((pr, _)) => self.pivot(pr, enter),
            }
        }
    }

    fn standard_point(&self) -> Vector {
        let mut x = vec![Rational::zero(); self.ncols()];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs[i].clone();
        }
        x
    }

    fn to_original(&self, xs: &[Rational]) -> Vector {
        self.layout
            .var_cols
            .iter()
            .map(|&(p, n)| match n {
                Some(n) => &xs[p] - &xs[n],
                None => xs[p].clone(),
            })
            .collect()
    }

    /// `y = c_B B^{-1}` read from the reduced costs of the artificial block.
    fn row_multipliers(&self, art_cost: &Rational) -> Vector {
        let ns = self.layout.n_struct;
        (0..self.rows.len())
            .map(|i| {
                let y = art_cost - &self.reduced[ns + i];
                if self.layout.row_sign[i] {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let m = self.rows.len();
        let ns = self.layout.n_struct;
        let ncols = self.ncols();

        // Phase 1: maximize −Σ artificials.
        let mut c1 = vec![Rational::zero(); ncols];
        for c in c1.iter_mut().skip(ns) {
            *c = -Rational::one();
        }
        self.set_costs(&c1);
        self.iterate(ns);
        let phase1: Rational = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| b >= ns)
            .map(|(_, v)| v.clone())
            .sum();
        if phase1.is_positive() {
            let farkas = self.row_multipliers(&-Rational::one());
            return LpOutcome::Infeasible { farkas };
        }

        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if self.basis[i] >= ns {
                if let Some(j) = (0..ns).find(|&j| !self.rows[i][j].is_zero()) {
                    self.pivot(i, j);
                }
            }
        }

        // Phase 2.
        let mut c2 = vec![Rational::zero(); ncols];
        let flip = lp.sense == Sense::Minimize;
        for (j, c) in lp.objective.iter().enumerate() {
            let c = if flip { -c.clone() } else { c.clone() };
            let (p, n) = self.layout.var_cols[j];
            if let Some(n) = n {
                c2[n] = -c.clone();
            }
            c2[p] = c;
        }
        self.set_costs(&c2);
        if let Some(enter) = self.iterate(ns) {
            let point = self.to_original(&self.standard_point());
            let mut dir = vec![Rational::zero(); ncols];
            dir[enter] = Rational::one();
            for (i, &b) in self.basis.iter().enumerate() {
                dir[b] = -self.rows[i][enter].clone();
            }
            let ray = self.to_original(&dir);
            return LpOutcome::Unbounded { point, ray };
        }
        let x = self.to_original(&self.standard_point());
        let mut duals = self.row_multipliers(&Rational::zero());
        if flip {
            duals.iter_mut().for_each(|y| *y = -y.clone());
        }
        let value = dot(&lp.objective, &x);
        LpOutcome::Optimal(LpSolution { value, x, duals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, vec_from_ints};

    #[test]
    fn max_single_bound() {
        let mut lp = LinearProgram::new(1, Sense::Maximize);
        lp.set_free(0);
        lp.set_objective(vec_from_ints(&[1]));
        lp.add(vec_from_ints(&[1]), Relation::Le, int(3));
        let sol = lp.solve().optimal().unwrap();
        assert_eq!(sol.value, int(3));
        assert!(lp.verify_optimal(&sol));
    }

    #[test]
    fn max_over_simplex() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec_from_ints(&[1, 1]));
        lp.add(vec_from_ints(&[1, 1]), Relation::Le, int(1));
        let sol = lp.solve().optimal().unwrap();
        assert_eq!(sol.value, int(1));
        assert!(lp.verify_optimal(&sol));
    }

    #[test]
    fn min_with_dual_on_binding_row() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.set_free(0);
        lp.set_objective(vec_from_ints(&[1]));
        lp.add(vec_from_ints(&[1]), Relation::Ge, int(2));
        lp.add(vec_from_ints(&[1]), Relation::Ge, int(5));
        let sol = lp.solve().optimal().unwrap();
        assert_eq!(sol.value, int(5));
        assert_eq!(sol.duals, vec_from_ints(&[0, 1]));
        assert!(lp.verify_optimal(&sol));
    }

    #[test]
    fn infeasible_has_farkas() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.add(vec_from_ints(&[1, 1]), Relation::Le, int(1));
        lp.add(vec_from_ints(&[1, 1]), Relation::Ge, int(2));
        match lp.solve() {
            LpOutcome::Infeasible { farkas } => assert!(lp.verify_farkas(&farkas)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_has_ray() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec_from_ints(&[1, 0]));
        lp.add(vec_from_ints(&[0, 1]), Relation::Le, int(1));
        match lp.solve() {
            LpOutcome::Unbounded { point, ray } => assert!(lp.verify_unbounded(&point, &ray)),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // min x + 2y s.t. x - y = -1, x + y >= 3, x,y >= 0 -> x=1,y=2 value 5
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.set_objective(vec_from_ints(&[1, 2]));
        lp.add(vec_from_ints(&[1, -1]), Relation::Eq, int(-1));
        lp.add(vec_from_ints(&[1, 1]), Relation::Ge, int(3));
        let sol = lp.solve().optimal().unwrap();
        assert_eq!(sol.value, int(5));
        assert_eq!(sol.x, vec_from_ints(&[1, 2]));
        assert!(lp.verify_optimal(&sol));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec_from_ints(&[1, 1]));
        lp.add(vec_from_ints(&[1, 1]), Relation::Eq, frac(1, 2));
        lp.add(vec_from_ints(&[2, 2]), Relation::Eq, int(1));
        let sol = lp.solve().optimal().unwrap();
        assert_eq!(sol.value, frac(1, 2));
        assert!(lp.verify_optimal(&sol));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small() -> impl Strategy<Value = i64> {
            -4i64..=4
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            /// Every outcome carries a certificate that re-verifies.
            #[test]
            fn certificates_verify(
                a in proptest::collection::vec(proptest::collection::vec(small(), 3), 1..5),
                b in proptest::collection::vec(small(), 5),
                c in proptest::collection::vec(small(), 3),
                rels in proptest::collection::vec(0u8..3, 5),
                free0 in any::<bool>(),
                maximize in any::<bool>(),
            ) {
                let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
                let mut lp = LinearProgram::new(3, sense);
                if free0 { lp.set_free(0); }
                lp.set_objective(vec_from_ints(&c));
                for (i, row) in a.iter().enumerate() {
                    let rel = match rels[i] { 0 => Relation::Le, 1 => Relation::Ge, _ => Relation::Eq };
                    lp.add(vec_from_ints(row), rel, int(b[i]));
                }
                match lp.solve() {
                    LpOutcome::Optimal(sol) => prop_assert!(lp.verify_optimal(&sol)),
                    LpOutcome::Infeasible { farkas } => prop_assert!(lp.verify_farkas(&farkas)),
                    LpOutcome::Unbounded { point, ray } => prop_assert!(lp.verify_unbounded(&point, &ray)),
                }
            }
        }
    }
}
