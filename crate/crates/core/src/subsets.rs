//! Combinations of index sets.

use rand::seq::index;
use rand::Rng;

/// Visits every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All `k`-subsets of `0..n`, lexicographic.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_subset(n, k, |s| out.push(s.to_vec()));
    out
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// A uniformly random sorted `k`-subset of `0..n`.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn enumeration_counts() {
        for n in 0..8 {
            for k in 0..=n + 1 {
                let mut c = 0u128;
                let mut prev: Option<Vec<usize>> = None;
                for_each_subset(n, k, |s| {
                    assert!(s.windows(2).all(|w| w[0] < w[1]));
                    if let Some(p) = &prev {
                        assert!(p.as_slice() < s);
                    }
                    prev = Some(s.to_vec());
                    c += 1;
                });
                assert_eq!(c, count(n, k), "n={n} k={k}");
            }
        }
        assert_eq!(count(18, 9), 48620);
        assert_eq!(count(200, 100), u128::MAX);
    }

    #[test]
    fn random_subsets_are_sorted_and_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_subset(&mut rng, 20, 7);
            assert_eq!(s.len(), 7);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(*s.last().unwrap() < 20);
        }
    }
}
