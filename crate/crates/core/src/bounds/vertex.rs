//! Brute-force vertex enumeration of the bound program.
//!
//! Variables are `(τ_1, …, τ_N, R)`. A candidate vertex fixes `Σ τ = 1` plus
//! `N` further tight constraints chosen among the rate rows `R = c_k · τ` and
//! the sign rows `τ_n = 0`. Exponential, kept as an independent check on the
//! simplex path for small instances.

use num_traits::{One, Zero};

use crate::ratio::Rational;
use crate::subsets;

/// Solves a square system exactly; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        b[col] /= &p;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Some(b)
}

/// Number of candidate vertices for `rows` rate rows over `n` databases.
pub fn candidate_count(rows: usize, n: usize) -> u128 {
    subsets::count(rows + n, n)
}

/// Best vertex `(R, τ)` of `max R s.t. R ≤ c_k·τ, τ ∈ simplex`.
pub fn enumerate(rows: &[Vec<Rational>], n: usize) -> Option<(Rational, Vec<Rational>)> {
    let total = rows.len() + n;
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    subsets::for_each_subset(total, n, |chosen| {
        // Unknowns: τ_1..τ_N, R.
        let mut a = Vec::with_capacity(n + 1);
        let mut b = Vec::with_capacity(n + 1);
        a.push(
            (0..=n)
                .map(|j| if j < n { Rational::one() } else { Rational::zero() })
                .collect::<Vec<_>>(),
        );
        b.push(Rational::one());
        for &idx in chosen {
            let mut row = vec![Rational::zero(); n + 1];
            if idx < rows.len() {
                for (j, c) in rows[idx].iter().enumerate() {
                    row[j] = -c.clone();
                }
                row[n] = Rational::one();
            } else {
                row[idx - rows.len()] = Rational::one();
            }
            a.push(row);
            b.push(Rational::zero());
        }
        let Some(x) = solve_square(a, b) else {
            return;
        };
        let (tau, r) = x.split_at(n);
        if tau.iter().any(|t| t < &Rational::zero()) {
            return;
        }
        let feasible = rows.iter().all(|row| {
            let v: Rational = row.iter().zip(tau).map(|(c, t)| c * t).sum();
            r[0] <= v
        });
        if !feasible {
            return;
        }
        if best.as_ref().is_none_or(|(b, _)| r[0] > *b) {
            best = Some((r[0].clone(), tau.to_vec()));
        }
    });
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{int, rat};

    #[test]
    fn two_line_envelope() {
        // R ≤ τ1, R ≤ τ2 → R = 1/2
        let rows = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
        let (r, tau) = enumerate(&rows, 2).unwrap();
        assert_eq!(r, rat(1, 2));
        assert_eq!(tau, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn singular_system() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        assert!(solve_square(a, vec![int(1), int(2)]).is_none());
        let a = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
        assert_eq!(solve_square(a, vec![int(3), int(4)]), Some(vec![int(2), int(3)]));
    }
}
