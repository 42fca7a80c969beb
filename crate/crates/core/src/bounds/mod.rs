//! Capacity upper bound and its comparison with the achievable schemes.
//!
//! For a sequence `(n_1, …, n_{M-1}) ∈ {1..N}^{M-1}` the bound is linear in
//! the traffic vector: `R ≤ Σ_m g_m (1 - μ_m) τ_m` where
//! `g_m = Σ_{j : n_j < m} w_j / Σ_j w_j`, `w_0 = 1`, `w_j = 1 / Π_{i≤j} n_i`
//! and `n_0 = 0`. The upper bound maximises the lower envelope of these planes
//! over the probability simplex.

pub mod simplex;
pub mod vertex;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::{self, Rational};
use crate::rates::{self, EavesdropProfile, GroupSequence, RatesError, SchemeCatalog};
use simplex::{Constraint, LinearProgram, LpOutcome, Relation};

/// Hard cap on `N^{M-1}`; beyond this the bound is not attempted.
pub const MAX_SEQUENCES: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error("traffic vector is not a probability vector: {0}")]
    InvalidTau(String),
    #[error(
        "enumeration too large: {count} candidates exceed the budget of {budget}; \
         use the simplex path or the closed forms for M = 2, 3"
    )]
    EnumerationTooLarge { count: u128, budget: u128 },
    #[error("closed-form capacity is only known for M = 2 and M = 3, got M = {0}")]
    NoClosedForm(usize),
    #[error("grid step must be positive and the grid maximum must lie in [0, 1)")]
    InvalidGrid,
    #[error("internal linear program failure: {0}")]
    Lp(&'static str),
}

/// Coefficients `g_m` of one sequence constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceBound {
    pub seq: Vec<usize>,
    pub weights: Vec<Rational>,
}

pub fn sequence_weights(databases: usize, seq: &[usize]) -> Vec<Rational> {
    let mut w = Vec::with_capacity(seq.len() + 1);
    w.push(Rational::one());
    let mut prod = Rational::one();
    for &n in seq {
        prod *= ratio::int(n as u64);
        w.push(prod.recip());
    }
    let total: Rational = w.iter().sum();
    (1..=databases)
        .map(|m| {
            let mut acc = w[0].clone();
            for (j, &n) in seq.iter().enumerate() {
                if n < m {
                    acc += &w[j + 1];
                }
            }
            acc / &total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundResult {
    #[serde(with = "ratio::serde_exact")]
    pub value: Rational,
    #[serde(with = "ratio::serde_exact_vec")]
    pub argmax_tau: Vec<Rational>,
    /// Sequences `(n_1, …, n_{M-1})` attaining the minimum at `argmax_tau`.
    pub active_sequences: Vec<Vec<usize>>,
}

/// Precomputed sequence constraints for one `(M, N)`.
#[derive(Debug, Clone)]
pub struct BoundEngine {
    messages: usize,
    databases: usize,
    all: Vec<SequenceBound>,
    kept: Vec<usize>,
}

impl BoundEngine {
    /// Engine with dominated constraints removed.
    pub fn new(messages: usize, databases: usize) -> Result<Self, BoundsError> {
        let mut e = Self::unpruned(messages, databases)?;
        e.kept = prune(&e.all);
        Ok(e)
    }

    /// Engine keeping every sequence constraint.
    pub fn unpruned(messages: usize, databases: usize) -> Result<Self, BoundsError> {
        if messages == 0 || databases == 0 {
            return Err(RatesError::Empty.into());
        }
        let count = (databases as u128).saturating_pow(messages as u32 - 1);
        if count > MAX_SEQUENCES {
            return Err(BoundsError::EnumerationTooLarge {
                count,
                budget: MAX_SEQUENCES,
            });
        }
        let mut all = Vec::with_capacity(count as usize);
        let mut seq = vec![1usize; messages - 1];
        loop {
            all.push(SequenceBound {
                weights: sequence_weights(databases, &seq),
                seq: seq.clone(),
            });
            let Some(i) = (0..seq.len()).rev().find(|&i| seq[i] < databases) else {
                break;
            };
            seq[i] += 1;
            for x in &mut seq[i + 1..] {
                *x = 1;
            }
        }
        let kept = (0..all.len()).collect();
        Ok(Self {
            messages,
            databases,
            all,
            kept,
        })
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn databases(&self) -> usize {
        self.databases
    }

    pub fn sequences(&self) -> &[SequenceBound] {
        &self.all
    }

    /// Indices into [`sequences`](Self::sequences) that survive pruning.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    fn check_mu(&self, mu: &EavesdropProfile) -> Result<(), BoundsError> {
        if mu.len() != self.databases {
            return Err(RatesError::ProfileLength {
                expected: self.databases,
                got: mu.len(),
            }
            .into());
        }
        Ok(())
    }

    fn row(&self, idx: usize, mu: &EavesdropProfile) -> Vec<Rational> {
        self.all[idx]
            .weights
            .iter()
            .zip(mu.values())
            .map(|(g, m)| g * (Rational::one() - m))
            .collect()
    }

    fn rows(&self, mu: &EavesdropProfile) -> Vec<Vec<Rational>> {
        self.kept.iter().map(|&i| self.row(i, mu)).collect()
    }

    /// `min_n Σ_m g_m (1 - μ_m) τ_m` over all sequences.
    pub fn inner_bound_at(&self, tau: &[Rational], mu: &EavesdropProfile) -> Result<Rational, BoundsError> {
        self.check_mu(mu)?;
        check_tau(tau, self.databases)?;
        let rows = self.rows(mu);
        Ok(rows
            .iter()
            .map(|r| dot(r, tau))
            .min()
            .expect("at least one sequence"))
    }

    pub fn upper_bound(&self, mu: &EavesdropProfile) -> Result<BoundResult, BoundsError> {
        self.check_mu(mu)?;
        let n = self.databases;
        let rows = self.rows(mu);

        // Stage 1: maximise R by constraint generation.
        let mut working: Vec<usize> = (0..rows.len())
            .filter(|&k| {
                let s = &self.all[self.kept[k]].seq;
                s.windows(2).all(|w| w[0] == w[1])
            })
            .collect();
        if working.is_empty() {
            working.push(0);
        }
        let (value, first_tau) = loop {
            let mut constraints: Vec<Constraint> = working
                .iter()
                .map(|&k| {
                    let mut c: Vec<Rational> = rows[k].iter().map(|v| -v).collect();
                    c.push(Rational::one());
                    Constraint::new(c, Relation::Le, Rational::zero())
                })
                .collect();
            constraints.push(simplex_row(n, Rational::zero()));
            let mut objective = vec![Rational::zero(); n];
            objective.push(Rational::one());
            let LpOutcome::Optimal { value, mut x } = simplex::solve(&LinearProgram {
                objective,
                constraints,
            }) else {
                return Err(BoundsError::Lp("rate program not optimal"));
            };
            x.truncate(n);
            match most_violated(&rows, &x, &value, &working) {
                Some(k) => working.push(k),
                None => break (value, x),
            }
        };

        // Stage 2: among optimal τ, maximise the smallest entry.
        debug_assert_eq!(most_violated(&rows, &first_tau, &value, &working), None);
        let tau = loop {
            let mut constraints: Vec<Constraint> = working
                .iter()
                .map(|&k| {
                    let mut c = rows[k].clone();
                    c.push(Rational::zero());
                    Constraint::new(c, Relation::Ge, value.clone())
                })
                .collect();
            for db in 0..n {
                let mut c = vec![Rational::zero(); n + 1];
                c[db] = Rational::one();
                c[n] = -Rational::one();
                constraints.push(Constraint::new(c, Relation::Ge, Rational::zero()));
            }
            constraints.push(simplex_row(n, Rational::zero()));
            let mut objective = vec![Rational::zero(); n];
            objective.push(Rational::one());
            let LpOutcome::Optimal { mut x, .. } = simplex::solve(&LinearProgram {
                objective,
                constraints,
            }) else {
                return Err(BoundsError::Lp("tie-break program not optimal"));
            };
            x.truncate(n);
            match most_violated(&rows, &x, &value, &working) {
                Some(k) => working.push(k),
                None => break x,
            }
        };

        let active_sequences = (0..self.all.len())
            .filter(|&i| dot(&self.row(i, mu), &tau) == value)
            .map(|i| self.all[i].seq.clone())
            .collect();
        Ok(BoundResult {
            value,
            argmax_tau: tau,
            active_sequences,
        })
    }

    /// Same optimum by exhaustive vertex enumeration.
    pub fn upper_bound_by_vertices(
        &self,
        mu: &EavesdropProfile,
        budget: u128,
    ) -> Result<(Rational, Vec<Rational>), BoundsError> {
        self.check_mu(mu)?;
        let rows = self.rows(mu);
        let count = vertex::candidate_count(rows.len(), self.databases);
        if count > budget {
            return Err(BoundsError::EnumerationTooLarge { count, budget });
        }
        vertex::enumerate(&rows, self.databases).ok_or(BoundsError::Lp("no feasible vertex"))
    }
}

/// The row `Σ τ_n = rhs` with one trailing zero column.
fn simplex_row(n: usize, trailing: Rational) -> Constraint {
    let mut c = vec![Rational::one(); n];
    c.push(trailing);
    Constraint::new(c, Relation::Eq, Rational::one())
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn most_violated(rows: &[Vec<Rational>], tau: &[Rational], value: &Rational, working: &[usize]) -> Option<usize> {
    let mut worst: Option<(usize, Rational)> = None;
    for (k, r) in rows.iter().enumerate() {
        let v = dot(r, tau);
        if &v < value && worst.as_ref().is_none_or(|(_, w)| v < *w) {
            worst = Some((k, v));
        }
    }
    let k = worst?.0;
    debug_assert!(!working.contains(&k));
    Some(k)
}

fn check_tau(tau: &[Rational], n: usize) -> Result<(), BoundsError> {
    if tau.len() != n {
        return Err(BoundsError::InvalidTau(format!("expected {n} entries, got {}", tau.len())));
    }
    if tau.iter().any(|t| t < &Rational::zero()) {
        return Err(BoundsError::InvalidTau("negative entry".into()));
    }
    let s: Rational = tau.iter().sum();
    if !s.is_one() {
        return Err(BoundsError::InvalidTau(format!("entries sum to {}", ratio::to_exact_string(&s))));
    }
    Ok(())
}

/// Indices of constraints not dominated by another one.
///
/// A constraint whose weights are componentwise at least those of another is
/// never the binding one for any `μ`, since `1 - μ_m ≥ 0` and `τ ≥ 0`.
pub fn prune(all: &[SequenceBound]) -> Vec<usize> {
    (0..all.len())
        .filter(|&i| {
            !(0..all.len()).any(|j| {
                j != i
                    && all[j].weights.iter().zip(&all[i].weights).all(|(a, b)| a <= b)
                    && (all[j].weights != all[i].weights || j < i)
            })
        })
        .collect()
}

pub fn inner_bound_at(
    tau: &[Rational],
    mu: &EavesdropProfile,
    messages: usize,
) -> Result<Rational, BoundsError> {
    BoundEngine::unpruned(messages, mu.len())?.inner_bound_at(tau, mu)
}

pub fn upper_bound(messages: usize, databases: usize, mu: &EavesdropProfile) -> Result<BoundResult, BoundsError> {
    BoundEngine::new(messages, databases)?.upper_bound(mu)
}

/// Capacity for `M ∈ {2, 3}` and the maximising monotone sequence.
pub fn closed_form_argmax(
    messages: usize,
    databases: usize,
    mu: &EavesdropProfile,
) -> Result<(Rational, Vec<usize>), BoundsError> {
    if !(2..=3).contains(&messages) {
        return Err(BoundsError::NoClosedForm(messages));
    }
    if mu.len() != databases {
        return Err(RatesError::ProfileLength {
            expected: databases,
            got: mu.len(),
        }
        .into());
    }
    let e: Vec<Rational> = (0..databases).map(|db| mu.expansion(db)).collect();
    let range_sum = |lo: usize, hi: usize| -> Rational { e[lo..hi].iter().sum() };
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for s in rates::monotone_sequences(messages, databases) {
        let v = if messages == 2 {
            let (n0, n1) = (s[0], s[1]);
            let num = ratio::int((n0 * n1) as u64);
            num / (ratio::int((n0 + 1) as u64) * range_sum(0, n0) + ratio::int(n0 as u64) * range_sum(n0, n1))
        } else {
            let (n0, n1, n2) = (s[0], s[1], s[2]);
            let num = ratio::int((n0 * n1 * n2) as u64);
            num / (ratio::int((n0 * n1 + n0 + 1) as u64) * range_sum(0, n0)
                + ratio::int((n0 * n1 + n0) as u64) * range_sum(n0, n1)
                + ratio::int((n0 * n1) as u64) * range_sum(n1, n2))
        };
        if best.as_ref().is_none_or(|(b, _)| &v >= b) {
            best = Some((v, s));
        }
    }
    Ok(best.expect("non-empty sequence set"))
}

pub fn closed_form_capacity(messages: usize, databases: usize, mu: &EavesdropProfile) -> Result<Rational, BoundsError> {
    closed_form_argmax(messages, databases, mu).map(|(v, _)| v)
}

/// Explicit three-term upper bound for `M = 3`, `N = 2`.
pub fn ub32(mu: &EavesdropProfile) -> Result<Rational, BoundsError> {
    if mu.len() != 2 {
        return Err(RatesError::ProfileLength { expected: 2, got: mu.len() }.into());
    }
    let a = Rational::one() - &mu.values()[0];
    let b = Rational::one() - &mu.values()[1];
    let r = |x: i64| ratio::int(x);
    let terms = [
        &a / r(3),
        r(2) * &a * &b / (r(3) * &b + &a),
        r(4) * &a * &b / (r(4) * &b + r(3) * &a),
    ];
    Ok(terms.into_iter().max().expect("three terms"))
}

/// Upper bound, best achievable scheme and their difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityReport {
    pub upper: BoundResult,
    pub lower: Rational,
    pub best: GroupSequence,
    pub best_index: usize,
    pub gap: Rational,
}

/// Bound engine and scheme catalog for repeated evaluation at one `(M, N)`.
#[derive(Debug, Clone)]
pub struct Evaluator {
    engine: BoundEngine,
    catalog: SchemeCatalog,
}

impl Evaluator {
    pub fn new(messages: usize, databases: usize) -> Result<Self, BoundsError> {
        Ok(Self {
            engine: BoundEngine::new(messages, databases)?,
            catalog: SchemeCatalog::new(messages, databases)?,
        })
    }

    pub fn engine(&self) -> &BoundEngine {
        &self.engine
    }

    pub fn catalog(&self) -> &SchemeCatalog {
        &self.catalog
    }

    pub fn evaluate(&self, mu: &EavesdropProfile) -> Result<CapacityReport, BoundsError> {
        let upper = self.engine.upper_bound(mu)?;
        let (best_index, lower) = self.catalog.best(mu)?;
        let gap = &upper.value - &lower;
        Ok(CapacityReport {
            upper,
            lower,
            best: self.catalog.sequence(best_index).clone(),
            best_index,
            gap,
        })
    }
}

pub fn capacity(messages: usize, databases: usize, mu: &EavesdropProfile) -> Result<CapacityReport, BoundsError> {
    Evaluator::new(messages, databases)?.evaluate(mu)
}

/// `upper_bound - best_scheme` rate.
pub fn gap(messages: usize, databases: usize, mu: &EavesdropProfile) -> Result<Rational, BoundsError> {
    capacity(messages, databases, mu).map(|r| r.gap)
}

/// Every sorted profile with entries in `{0, step, 2·step, …} ∩ [0, max]`.
pub fn mu_grid(databases: usize, step: &Rational, max: &Rational) -> Result<Vec<EavesdropProfile>, BoundsError> {
    if step <= &Rational::zero() || max < &Rational::zero() || max >= &Rational::one() {
        return Err(BoundsError::InvalidGrid);
    }
    let count = (max / step).floor().to_integer();
    let count: usize = count.try_into().map_err(|_| BoundsError::InvalidGrid)?;
    let levels: Vec<Rational> = (0..=count).map(|k| step * ratio::int(k as u64)).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; databases];
    loop {
        let mu = idx.iter().map(|&i| levels[i].clone()).collect();
        out.push(EavesdropProfile::new(mu)?);
        let Some(i) = (0..databases).rev().find(|&i| idx[i] < count) else {
            break;
        };
        let v = idx[i] + 1;
        for x in &mut idx[i..] {
            *x = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub mu: EavesdropProfile,
    pub upper: Rational,
    pub lower: Rational,
    pub gap: Rational,
    /// Position of the best scheme in the lexicographic list of sequences.
    pub active_idx: usize,
}

/// Evaluates every grid point in parallel; rows keep grid order.
pub fn sweep(evaluator: &Evaluator, grid: &[EavesdropProfile]) -> Result<Vec<SweepRow>, BoundsError> {
    grid.par_iter()
        .map(|mu| {
            let r = evaluator.evaluate(mu)?;
            Ok(SweepRow {
                mu: mu.clone(),
                upper: r.upper.value,
                lower: r.lower,
                gap: r.gap,
                active_idx: r.best_index,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    fn mu(v: &[(i64, i64)]) -> EavesdropProfile {
        EavesdropProfile::new(v.iter().map(|&(a, b)| rat(a, b)).collect()).unwrap()
    }

    fn classic(m: usize, n: usize) -> Rational {
        let s: Rational = (0..m).map(|k| rat(1, (n as i64).pow(k as u32))).sum();
        s.recip()
    }

    #[test]
    fn weights_for_three_messages_two_databases() {
        assert_eq!(sequence_weights(2, &[1, 2]), vec![rat(2, 5), rat(4, 5)]);
        assert_eq!(sequence_weights(2, &[1, 1]), vec![rat(1, 3), rat(1, 1)]);
        assert_eq!(sequence_weights(2, &[2, 2]), vec![rat(4, 7), rat(4, 7)]);
    }

    #[test]
    fn pruning_keeps_the_optimum() {
        let e = BoundEngine::new(4, 3).unwrap();
        assert!(e.kept().len() < e.sequences().len());
        let full = BoundEngine::unpruned(4, 3).unwrap();
        let m = mu(&[(1, 10), (1, 4), (2, 3)]);
        assert_eq!(e.upper_bound(&m).unwrap(), full.upper_bound(&m).unwrap());
    }

    #[test]
    fn inner_bound_examples() {
        let z = EavesdropProfile::zeros(2);
        assert_eq!(inner_bound_at(&[rat(1, 1), rat(0, 1)], &z, 3).unwrap(), rat(1, 3));
        for m in 1..5 {
            for n in 1..5 {
                let tau = vec![rat(1, n as i64); n];
                let z = EavesdropProfile::zeros(n);
                assert_eq!(inner_bound_at(&tau, &z, m).unwrap(), classic(m, n), "M={m} N={n}");
            }
        }
        assert!(matches!(
            inner_bound_at(&[rat(1, 2), rat(1, 3)], &z, 3),
            Err(BoundsError::InvalidTau(_))
        ));
    }

    #[test]
    fn worked_example_bound() {
        let m = mu(&[(1, 4), (1, 2)]);
        let b = upper_bound(3, 2, &m).unwrap();
        assert_eq!(b.value, rat(6, 17));
        assert_eq!(ub32(&m).unwrap(), rat(6, 17));
        assert_eq!(closed_form_argmax(3, 2, &m).unwrap(), (rat(6, 17), vec![1, 2, 2]));
        assert_eq!(
            BoundEngine::new(3, 2).unwrap().inner_bound_at(&b.argmax_tau, &m).unwrap(),
            rat(6, 17)
        );
    }

    #[test]
    fn symmetric_tau_at_zero() {
        for (m, n) in [(2, 2), (3, 3), (4, 2), (2, 4)] {
            let b = upper_bound(m, n, &EavesdropProfile::zeros(n)).unwrap();
            assert_eq!(b.value, classic(m, n));
            assert_eq!(b.argmax_tau, vec![rat(1, n as i64); n]);
        }
    }

    #[test]
    fn vertex_enumeration_agrees() {
        let m = mu(&[(1, 4), (1, 2)]);
        for e in [BoundEngine::new(3, 2).unwrap(), BoundEngine::unpruned(3, 2).unwrap()] {
            assert_eq!(e.upper_bound_by_vertices(&m, 10_000).unwrap().0, rat(6, 17));
        }
        let e = BoundEngine::unpruned(5, 5).unwrap();
        assert!(matches!(
            e.upper_bound_by_vertices(&EavesdropProfile::zeros(5), 10_000),
            Err(BoundsError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_argmax(2, 2, &EavesdropProfile::zeros(2)).unwrap(), (rat(2, 3), vec![2, 2]));
        for n in 2..5i64 {
            let e = rat(1, 3);
            let p = EavesdropProfile::new(vec![&e / rat(n, 1); n as usize]).unwrap();
            let expect = (rat(1, 1) - &e / rat(n, 1)) / (rat(1, 1) + rat(1, n) + rat(1, n * n));
            assert_eq!(closed_form_capacity(3, n as usize, &p).unwrap(), expect);
        }
        assert!(matches!(
            closed_form_capacity(4, 2, &EavesdropProfile::zeros(2)),
            Err(BoundsError::NoClosedForm(4))
        ));
    }

    #[test]
    fn single_message_gap_is_zero() {
        let m = mu(&[(1, 5), (1, 3), (1, 2)]);
        let r = capacity(1, 3, &m).unwrap();
        assert_eq!(r.upper.value, rat(4, 5));
        assert_eq!(r.gap, rat(0, 1));
    }

    #[test]
    fn grid_shape() {
        let g = mu_grid(2, &rat(1, 20), &rat(19, 20)).unwrap();
        assert_eq!(g.len(), 210);
        assert_eq!(mu_grid(3, &rat(1, 2), &rat(1, 2)).unwrap().len(), 4);
        assert!(mu_grid(2, &rat(0, 1), &rat(1, 2)).is_err());
        assert!(mu_grid(2, &rat(1, 2), &rat(1, 1)).is_err());
    }
}
