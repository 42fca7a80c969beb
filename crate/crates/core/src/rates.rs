//! Achievable rates for monotone group sequences.
//!
//! A sequence `n = (n_0, …, n_{M-1})` splits the databases into groups: group
//! `ℓ` holds databases `n_{ℓ-1}+1 ..= n_ℓ` (with `n_{-1} = 0`) and starts
//! exploiting side information in round `ℓ + 1`. The per-round stage counts
//! follow a linear recurrence; everything else (meaningful downloads, message
//! length, repetition factor, rate) is derived from that table.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatesError {
    #[error("invalid group sequence {seq:?} for M = {messages}, N = {databases}: {reason}")]
    InvalidSequence {
        seq: Vec<usize>,
        messages: usize,
        databases: usize,
        reason: String,
    },
    #[error("eavesdropping profile has {got} entries, expected {expected}")]
    ProfileLength { expected: usize, got: usize },
    #[error("mu_{index} = {value} is outside [0, 1)")]
    MuOutOfRange { index: usize, value: String },
    #[error("mu must be non-decreasing: mu_{index} < mu_{prev}", prev = index - 1)]
    Unsorted { index: usize },
    #[error("database {database} is fully observed (mu = 1) but carries meaningful downloads")]
    FullyObserved { database: usize },
    #[error("need at least one message and one database")]
    Empty,
}

/// Binomial coefficient as used by the stage recurrence: `C(n, -1) = 1`,
/// every other out-of-range lower index gives 0.
pub fn stage_binom(n: i64, k: i64) -> u64 {
    if k == -1 {
        return 1;
    }
    binom(n, k)
}

pub fn binom(n: i64, k: i64) -> u64 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Per-database eavesdropping ratios, sorted non-decreasing, each in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct EavesdropProfile {
    mu: Vec<Rational>,
}

impl TryFrom<Vec<String>> for EavesdropProfile {
    type Error = String;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        let mu = v
            .iter()
            .map(|s| ratio::parse_rational(s).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        EavesdropProfile::new(mu).map_err(|e| e.to_string())
    }
}

impl From<EavesdropProfile> for Vec<String> {
    fn from(p: EavesdropProfile) -> Self {
        p.mu.iter().map(ratio::to_exact_string).collect()
    }
}

impl EavesdropProfile {
    pub fn new(mu: Vec<Rational>) -> Result<Self, RatesError> {
        if mu.is_empty() {
            return Err(RatesError::Empty);
        }
        for (i, m) in mu.iter().enumerate() {
            if m < &Rational::zero() || m >= &Rational::one() {
                return Err(RatesError::MuOutOfRange {
                    index: i + 1,
                    value: ratio::to_exact_string(m),
                });
            }
            if i > 0 && m < &mu[i - 1] {
                return Err(RatesError::Unsorted { index: i + 1 });
            }
        }
        Ok(Self { mu })
    }

    /// Sorts before validating.
    pub fn new_sorted(mut mu: Vec<Rational>) -> Result<Self, RatesError> {
        mu.sort();
        Self::new(mu)
    }

    pub fn zeros(databases: usize) -> Self {
        Self {
            mu: vec![Rational::zero(); databases],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.mu
    }

    /// `1 / (1 - μ_n)` for the 0-based database index.
    pub fn expansion(&self, db: usize) -> Rational {
        (Rational::one() - &self.mu[db]).recip()
    }
}

impl fmt::Display for EavesdropProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.mu.iter().map(ratio::to_exact_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A validated monotone sequence with its group set `S` and multipliers `ξ_ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSequence {
    messages: usize,
    databases: usize,
    seq: Vec<usize>,
    groups: Vec<usize>,
    xi: BTreeMap<usize, u64>,
}

impl GroupSequence {
    pub fn new(messages: usize, databases: usize, seq: Vec<usize>) -> Result<Self, RatesError> {
        let invalid = |reason: &str| RatesError::InvalidSequence {
            seq: seq.clone(),
            messages,
            databases,
            reason: reason.to_string(),
        };
        if messages == 0 || databases == 0 {
            return Err(RatesError::Empty);
        }
        if seq.len() != messages {
            return Err(invalid("length must equal M"));
        }
        if seq.iter().any(|&x| x == 0 || x > databases) {
            return Err(invalid("entries must lie in 1..=N"));
        }
        if seq.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("sequence must be non-decreasing"));
        }
        let groups: Vec<usize> = (0..messages)
            .filter(|&i| seq[i] > if i == 0 { 0 } else { seq[i - 1] })
            .collect();
        let m2 = messages as i64 - 2;
        let xi = groups
            .iter()
            .map(|&l| {
                let prod = groups
                    .iter()
                    .filter(|&&s| s != l)
                    .map(|&s| stage_binom(m2, s as i64 - 1))
                    .product();
                (l, prod)
            })
            .collect();
        Ok(Self {
            messages,
            databases,
            seq,
            groups,
            xi,
        })
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn databases(&self) -> usize {
        self.databases
    }

    pub fn seq(&self) -> &[usize] {
        &self.seq
    }

    /// The group set `S`, ascending.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn xi(&self, group: usize) -> Option<u64> {
        self.xi.get(&group).copied()
    }

    /// `n_{ℓ-1}` with `n_{-1} = 0`.
    fn prev(&self, l: usize) -> usize {
        if l == 0 {
            0
        } else {
            self.seq[l - 1]
        }
    }

    /// Number of databases in group `ℓ` (`n_ℓ - n_{ℓ-1}`).
    pub fn group_size(&self, l: usize) -> usize {
        self.seq[l] - self.prev(l)
    }

    /// 0-based database indices of group `ℓ`.
    pub fn group_databases(&self, l: usize) -> std::ops::Range<usize> {
        self.prev(l)..self.seq[l]
    }

    /// Group of a 0-based database, `None` when the database is deactivated.
    pub fn group_of(&self, db: usize) -> Option<usize> {
        self.groups
            .iter()
            .copied()
            .find(|&l| self.group_databases(l).contains(&db))
    }

    /// Number of active databases (`n_{M-1}`).
    pub fn active_databases(&self) -> usize {
        self.seq[self.messages - 1]
    }

    /// `y_0[1] = Π_{s∈S} C(M-2, s-1)`.
    pub fn initial_stages(&self) -> u64 {
        let m2 = self.messages as i64 - 2;
        self.groups
            .iter()
            .map(|&s| stage_binom(m2, s as i64 - 1))
            .product()
    }
}

impl fmt::Display for GroupSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.seq.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn derive_groups(
    messages: usize,
    databases: usize,
    seq: Vec<usize>,
) -> Result<GroupSequence, RatesError> {
    GroupSequence::new(messages, databases, seq)
}

/// Stage counts `y_ℓ[k]` for `ℓ ∈ S`, `k = 1..=M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    messages: usize,
    y: BTreeMap<usize, Vec<u64>>,
}

impl StageCounts {
    /// `y_ℓ[k]`; zero for groups outside `S` and rounds outside `1..=M`.
    pub fn get(&self, group: usize, round: usize) -> u64 {
        if round == 0 || round > self.messages {
            return 0;
        }
        self.y.get(&group).map_or(0, |row| row[round - 1])
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn groups(&self) -> impl Iterator<Item = usize> + '_ {
        self.y.keys().copied()
    }

    pub fn row(&self, group: usize) -> Option<&[u64]> {
        self.y.get(&group).map(|v| v.as_slice())
    }
}

pub fn stage_counts(g: &GroupSequence) -> StageCounts {
    let m = g.messages();
    let n0 = g.seq()[0] as u64;
    let mut y: BTreeMap<usize, Vec<u64>> = g.groups().iter().map(|&l| (l, vec![0; m])).collect();
    for k in 1..=m {
        for &l in g.groups() {
            let value = if k <= l {
                0
            } else if k == 1 {
                // only ℓ = 0 reaches here
                g.initial_stages()
            } else {
                let impulse = if l >= 2 && k == l + 1 {
                    n0 * g.xi(l).unwrap_or(0)
                } else {
                    0
                };
                let own = (g.group_size(l) as u64 - 1) * y[&l][k - 2];
                let others: u64 = g
                    .groups()
                    .iter()
                    .filter(|&&j| j != l)
                    .map(|&j| g.group_size(j) as u64 * y[&j][k - 2])
                    .sum();
                impulse + own + others
            };
            y.get_mut(&l).expect("group present")[k - 1] = value;
        }
    }
    StageCounts { messages: m, y }
}

/// Meaningful downloads per database per repetition, plus the desired
/// symbols recovered per repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionShape {
    pub downloads: Vec<u64>,
    pub desired_per_rep: u64,
}

pub fn plan_dimensions_per_rep(g: &GroupSequence) -> RepetitionShape {
    plan_dimensions_from_counts(g, &stage_counts(g))
}

fn plan_dimensions_from_counts(g: &GroupSequence, y: &StageCounts) -> RepetitionShape {
    let m = g.messages() as i64;
    let mut downloads = vec![0u64; g.databases()];
    let mut desired = 0u64;
    for &l in g.groups() {
        let per_db: u64 = (1..=g.messages())
            .map(|k| binom(m, k as i64) * y.get(l, k))
            .sum();
        let des: u64 = (1..=g.messages())
            .map(|k| binom(m - 1, k as i64 - 1) * y.get(l, k))
            .sum();
        for db in g.group_databases(l) {
            downloads[db] = per_db;
        }
        desired += des * g.group_size(l) as u64;
    }
    RepetitionShape {
        downloads,
        desired_per_rep: desired,
    }
}

/// Answer-string geometry after choosing the repetition factor `ν`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDimensions {
    /// Meaningful downloads per repetition, per database.
    pub downloads: Vec<u64>,
    /// Desired symbols per repetition.
    pub desired_per_rep: u64,
    pub nu: u64,
    /// Total answer length per database.
    pub t: Vec<u64>,
    /// Key length `μ_n t_n` per database.
    pub key_len: Vec<u64>,
}

impl PlanDimensions {
    /// Message length `L = ν · L_per_rep`.
    pub fn message_len(&self) -> u64 {
        self.nu * self.desired_per_rep
    }

    pub fn total_download(&self) -> u64 {
        self.t.iter().sum()
    }

    pub fn meaningful(&self, db: usize) -> u64 {
        self.nu * self.downloads[db]
    }
}

fn check_profile(g: &GroupSequence, mu: &EavesdropProfile) -> Result<(), RatesError> {
    if mu.len() != g.databases() {
        return Err(RatesError::ProfileLength {
            expected: g.databases(),
            got: mu.len(),
        });
    }
    Ok(())
}

pub fn repetition_factor(
    g: &GroupSequence,
    mu: &EavesdropProfile,
) -> Result<PlanDimensions, RatesError> {
    check_profile(g, mu)?;
    let shape = plan_dimensions_per_rep(g);
    let mut nu = BigInt::one();
    let mut per_rep = Vec::with_capacity(g.databases());
    for (db, &d) in shape.downloads.iter().enumerate() {
        if d == 0 {
            per_rep.push(Rational::zero());
            continue;
        }
        if mu.values()[db] >= Rational::one() {
            return Err(RatesError::FullyObserved { database: db + 1 });
        }
        let r = ratio::int(d) * mu.expansion(db);
        nu = nu.lcm(r.denom());
        per_rep.push(r);
    }
    let nu_r = Rational::from_integer(nu.clone());
    let t: Vec<u64> = per_rep
        .iter()
        .map(|r| {
            let v = r * &nu_r;
            debug_assert!(v.is_integer());
            u64::try_from(v.to_integer()).expect("answer length fits u64")
        })
        .collect();
    let nu = u64::try_from(nu).expect("repetition factor fits u64");
    let key_len = t
        .iter()
        .zip(&shape.downloads)
        .map(|(&t, &d)| t - nu * d)
        .collect();
    Ok(PlanDimensions {
        downloads: shape.downloads,
        desired_per_rep: shape.desired_per_rep,
        nu,
        t,
        key_len,
    })
}

/// Meaningful traffic ratios `τ_n = D_n / Σ D`.
pub fn traffic_vector(g: &GroupSequence) -> Vec<Rational> {
    let shape = plan_dimensions_per_rep(g);
    let total: u64 = shape.downloads.iter().sum();
    shape
        .downloads
        .iter()
        .map(|&d| ratio::rat(d as i64, total as i64))
        .collect()
}

/// `R(n, μ) = L_per_rep / Σ_n D_n / (1 - μ_n)`.
pub fn achievable_rate(g: &GroupSequence, mu: &EavesdropProfile) -> Result<Rational, RatesError> {
    check_profile(g, mu)?;
    let shape = plan_dimensions_per_rep(g);
    Ok(rate_from_shape(&shape, mu))
}

fn rate_from_shape(shape: &RepetitionShape, mu: &EavesdropProfile) -> Rational {
    let denom: Rational = shape
        .downloads
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0)
        .map(|(db, &d)| ratio::int(d) * mu.expansion(db))
        .sum();
    ratio::int(shape.desired_per_rep) / denom
}

/// All monotone sequences in `{1..N}^M`, lexicographic order.
pub fn monotone_sequences(messages: usize, databases: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if messages == 0 || databases == 0 {
        return out;
    }
    let mut cur = vec![1usize; messages];
    loop {
        out.push(cur.clone());
        let Some(i) = (0..messages).rev().find(|&i| cur[i] < databases) else {
            break;
        };
        let v = cur[i] + 1;
        for x in &mut cur[i..] {
            *x = v;
        }
    }
    out
}

/// Precomputed per-repetition shapes for every monotone sequence.
#[derive(Debug, Clone)]
pub struct SchemeCatalog {
    messages: usize,
    databases: usize,
    entries: Vec<(GroupSequence, RepetitionShape)>,
}

impl SchemeCatalog {
    pub fn new(messages: usize, databases: usize) -> Result<Self, RatesError> {
        if messages == 0 || databases == 0 {
            return Err(RatesError::Empty);
        }
        let entries = monotone_sequences(messages, databases)
            .into_iter()
            .map(|s| {
                let g = GroupSequence::new(messages, databases, s)?;
                let shape = plan_dimensions_per_rep(&g);
                Ok((g, shape))
            })
            .collect::<Result<Vec<_>, RatesError>>()?;
        Ok(Self {
            messages,
            databases,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sequence(&self, idx: usize) -> &GroupSequence {
        &self.entries[idx].0
    }

    /// Rate of every sequence, catalog order.
    pub fn rates(&self, mu: &EavesdropProfile) -> Result<Vec<Rational>, RatesError> {
        if mu.len() != self.databases {
            return Err(RatesError::ProfileLength {
                expected: self.databases,
                got: mu.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .map(|(_, shape)| rate_from_shape(shape, mu))
            .collect())
    }

    /// Index and rate of the best sequence. Ties go to the lexicographically
    /// largest sequence, i.e. the one spreading load over more databases.
    pub fn best(&self, mu: &EavesdropProfile) -> Result<(usize, Rational), RatesError> {
        let rates = self.rates(mu)?;
        let mut best = 0;
        for (i, r) in rates.iter().enumerate().skip(1) {
            if r >= &rates[best] {
                best = i;
            }
        }
        Ok((best, rates[best].clone()))
    }

    pub fn messages(&self) -> usize {
        self.messages
    }
}

/// Exhaustive maximisation of `R(n, μ)` over monotone sequences.
pub fn best_scheme(
    messages: usize,
    databases: usize,
    mu: &EavesdropProfile,
) -> Result<(GroupSequence, Rational), RatesError> {
    let catalog = SchemeCatalog::new(messages, databases)?;
    let (idx, rate) = catalog.best(mu)?;
    Ok((catalog.sequence(idx).clone(), rate))
}

/// Closed-form N = 2 rate for `s_2` side-information symbols at database 2.
pub fn n2_closed_form(messages: usize, s2: usize, mu: &EavesdropProfile) -> Result<Rational, RatesError> {
    if mu.len() != 2 {
        return Err(RatesError::ProfileLength {
            expected: 2,
            got: mu.len(),
        });
    }
    let m = messages as i64;
    let s = s2 as i64;
    let lead = stage_binom(m - 2, s - 1);
    let numer = lead + (0..m - s).map(|k| binom(m - 1, s + k)).sum::<u64>();
    let d1 = m as u64 * lead + (1..=(m - s) / 2).map(|k| binom(m, s + 2 * k)).sum::<u64>();
    let d2: u64 = (0..=(m - s - 1).div_euclid(2))
        .map(|k| binom(m, s + 2 * k + 1))
        .sum();
    let denom = ratio::int(d1) * mu.expansion(0) + ratio::int(d2) * mu.expansion(1);
    Ok(ratio::int(numer) / denom)
}

/// The trivial rate `(1 - μ_1) / M` of downloading everything from database 1.
pub fn trivial_rate(messages: usize, mu: &EavesdropProfile) -> Rational {
    (Rational::one() - &mu.values()[0]) / ratio::int(messages as u64)
}
