//! Exact two-phase tableau simplex over rationals with Bland's rule.
//!
//! Variables are implicitly non-negative. Sized for the small programs the
//! bound engine feeds it (a handful of columns, tens of rows).

use num_traits::{Signed, Zero};

use crate::ratio::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// `maximize objective · x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs of the current objective (maximisation).
    cost: Vec<Rational>,
    value: Rational,
    /// Columns barred from entering (artificials in phase 2).
    barred: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.value += &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule iterations until optimal; `false` means unbounded.
    fn optimise(&mut self) -> bool {
        loop {
            let Some(c) = (0..self.cost.len()).find(|&j| !self.barred[j] && self.cost[j].is_positive())
            else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
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
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    // Normalise to non-negative right-hand sides.
    let mut rows_in: Vec<(Vec<Rational>, Relation, Rational)> = lp
        .constraints
        .iter()
        .map(|c| {
            assert_eq!(c.coeffs.len(), n, "constraint width mismatch");
            if c.rhs.is_negative() {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), rel, -&c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs.clone())
            }
        })
        .collect();

    let slack_count = rows_in.iter().filter(|r| r.1 != Relation::Eq).count();
    let art_count = rows_in.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slack_count + art_count;
    let art_start = n + slack_count;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut s, mut a) = (n, art_start);
    for (coeffs, rel, b) in rows_in.drain(..) {
        let mut row = vec![Rational::zero(); width];
        row[..n].clone_from_slice(&coeffs);
        match rel {
            Relation::Le => {
                row[s] = Rational::from_integer(1.into());
                basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = Rational::from_integer((-1).into());
                s += 1;
                row[a] = Rational::from_integer(1.into());
                basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                row[a] = Rational::from_integer(1.into());
                basis.push(a);
                a += 1;
            }
        }
        rows.push(row);
        rhs.push(b);
    }

    // Phase 1: maximise -Σ artificials.
    let mut cost = vec![Rational::zero(); width];
    let mut value = Rational::zero();
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..art_start {
                cost[j] += &rows[i][j];
            }
            value -= &rhs[i];
        }
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        cost,
        value,
        barred: vec![false; width],
    };
    if art_count > 0 {
        t.optimise();
        if t.value.is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in art_start..width {
            t.barred[j] = true;
        }
    }

    // Phase 2.
    let mut cost = vec![Rational::zero(); width];
    cost[..n].clone_from_slice(&lp.objective);
    let mut value = Rational::zero();
    for i in 0..t.rows.len() {
        let cb = if t.basis[i] < n {
            lp.objective[t.basis[i]].clone()
        } else {
            Rational::zero()
        };
        if cb.is_zero() {
            continue;
        }
        for j in 0..width {
            if !t.rows[i][j].is_zero() {
                cost[j] -= &cb * &t.rows[i][j];
            }
        }
        value += &cb * &t.rhs[i];
    }
    t.cost = cost;
    t.value = value;
    if !t.optimise() {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    LpOutcome::Optimal { value: t.value, x }
}
