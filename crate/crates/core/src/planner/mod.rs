//! Explicit query plans for a group-sequence scheme.
//!
//! Each repetition is built round by round. Round 1 gives every group-0
//! database `y_0[1]` stages of single symbols. In round `k ≥ 2` a database of
//! group `ℓ < k` runs one stage per round-`(k-1)` stage held by every other
//! database, pairing a fresh desired symbol with each undesired `(k-1)`-sum of
//! that stage and completing the stage with undesired-only `k`-sums. Groups
//! `ℓ ≥ 2` additionally open round `ℓ+1` with `n_0 ξ_ℓ` stages whose
//! side information is assembled from group-0 round-1 singles.
//!
//! After `ν` repetitions every database appends its pure-noise downloads and
//! shuffles its queries; a query's noise slot is its final position.

pub mod faults;
mod table;

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{self, AlgebraError};
use crate::ratio::{self, Rational};
use crate::rates::{self, EavesdropProfile, GroupSequence, PlanDimensions, RatesError, StageCounts};
use crate::subsets;

pub use table::{plan_to_table, PlanTable};

pub const PLAN_SCHEMA_VERSION: u32 = 1;

/// RNG stream used for the message permutations; database `n` shuffles on
/// stream `SHUFFLE_STREAM + n`.
const PERMUTATION_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("desired message index {desired} out of range for M = {messages}")]
    InvalidDesired { desired: usize, messages: usize },
    #[error("field GF({q}) too small: need q > {max_t}")]
    FieldTooSmall { q: u64, max_t: u64 },
    #[error("plan too large: {0}")]
    TooLarge(String),
    #[error(
        "construction failed in repetition {repetition}, round {round}, group {group} \
         (database {database}): expected {expected} stages, built {built}"
    )]
    Construction {
        repetition: usize,
        round: usize,
        group: usize,
        database: usize,
        expected: u64,
        built: u64,
    },
    #[error("construction ran out of symbols of message {message} (length {len})")]
    SlotOverflow { message: usize, len: usize },
    #[error("construction failed in round {round}, group {group}: side-information pool of message {message} exhausted")]
    PoolExhausted { round: usize, group: usize, message: usize },
    #[error("invalid plan at database {database}: {reason}")]
    Invalid { database: usize, reason: String },
    #[error("plan JSON: {0}")]
    Json(String),
}

/// A message symbol `(message, permuted slot)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Term {
    pub message: usize,
    pub slot: usize,
}

impl From<(usize, usize)> for Term {
    fn from((message, slot): (usize, usize)) -> Self {
        Self { message, slot }
    }
}

impl From<Term> for (usize, usize) {
    fn from(t: Term) -> Self {
        (t.message, t.slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    /// Carries one fresh desired symbol, possibly with side information.
    Desired,
    /// Undesired symbols only; side information for other databases.
    Undesired,
    /// A bare artificial-noise symbol.
    PureNoise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// Sorted by message; at most one term per message.
    pub terms: Vec<Term>,
    /// Index into the database's artificial-noise vector.
    pub noise_slot: usize,
    pub kind: QueryKind,
    /// Round `k` (number of terms); 0 for pure noise.
    pub round: usize,
    pub repetition: usize,
    /// Stage index within `(repetition, round)` at this database.
    pub stage: usize,
    /// Construction order at this database.
    pub seq: usize,
}

impl Query {
    pub fn is_pure_noise(&self) -> bool {
        self.terms.is_empty()
    }

    /// Message indices present in the sum.
    pub fn signature(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.message).collect()
    }

    pub fn term_of(&self, message: usize) -> Option<Term> {
        self.terms.iter().copied().find(|t| t.message == message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMeta {
    #[serde(rename = "M")]
    pub messages: usize,
    #[serde(rename = "N")]
    pub databases: usize,
    pub q: u64,
    pub mu: EavesdropProfile,
    pub n: Vec<usize>,
    pub nu: u64,
    pub t: Vec<u64>,
    pub key_len: Vec<u64>,
    /// Meaningful downloads per repetition.
    pub downloads: Vec<u64>,
    /// Message length `L`.
    #[serde(rename = "L")]
    pub message_len: u64,
    /// 0-based desired message index.
    pub desired: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabasePlan {
    pub queries: Vec<Query>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub schema_version: u32,
    pub meta: PlanMeta,
    /// `permutations[m][slot]` is the original index of the symbol at `slot`.
    pub permutations: Vec<Vec<usize>>,
    pub databases: Vec<DatabasePlan>,
}

impl QueryPlan {
    pub fn group_sequence(&self) -> Result<GroupSequence, PlanError> {
        Ok(GroupSequence::new(self.meta.messages, self.meta.databases, self.meta.n.clone())?)
    }

    pub fn field(&self) -> Result<algebra::PrimeField, PlanError> {
        Ok(algebra::PrimeField::new(self.meta.q)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, PlanError> {
        let plan: Self = serde_json::from_str(s).map_err(|e| PlanError::Json(e.to_string()))?;
        if plan.schema_version != PLAN_SCHEMA_VERSION {
            return Err(PlanError::Json(format!(
                "unsupported schema_version {}",
                plan.schema_version
            )));
        }
        Ok(plan)
    }
}

/// Knobs for [`build_plan_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Field modulus; defaults to the smallest prime above `max t_n`.
    pub field_q: Option<u64>,
    /// Fault injection: drop the undesired-only completion sums of rounds ≥ 2.
    pub skip_message_symmetry: bool,
}

pub fn build_plan(
    g: &GroupSequence,
    mu: &EavesdropProfile,
    desired: usize,
    seed: u64,
) -> Result<QueryPlan, PlanError> {
    build_plan_with(g, mu, desired, seed, BuildOptions::default())
}

/// Smallest prime strictly above every answer length.
pub fn default_field(dims: &PlanDimensions) -> u64 {
    let max_t = dims.t.iter().copied().max().unwrap_or(0);
    algebra::next_prime_at_least((max_t + 1).max(2))
}

/// Refuse plans with more than this many queries in total.
pub const MAX_PLAN_QUERIES: u64 = 5_000_000;

pub fn build_plan_with(
    g: &GroupSequence,
    mu: &EavesdropProfile,
    desired: usize,
    seed: u64,
    opts: BuildOptions,
) -> Result<QueryPlan, PlanError> {
    let m = g.messages();
    if desired >= m {
        return Err(PlanError::InvalidDesired { desired, messages: m });
    }
    let dims = rates::repetition_factor(g, mu)?;
    if dims.total_download() > MAX_PLAN_QUERIES {
        return Err(PlanError::TooLarge(format!(
            "{} downloads exceed the limit of {MAX_PLAN_QUERIES}",
            dims.total_download()
        )));
    }
    let max_t = dims.t.iter().copied().max().unwrap_or(0);
    let q = match opts.field_q {
        Some(q) => {
            algebra::PrimeField::new(q)?;
            if q <= max_t {
                return Err(PlanError::FieldTooSmall { q, max_t });
            }
            q
        }
        None => default_field(&dims),
    };

    let y = rates::stage_counts(g);
    let len = dims.message_len() as usize;
    let mut b = Builder {
        g,
        y: &y,
        desired,
        len,
        next_slot: vec![0; m],
        queries: vec![Vec::new(); g.databases()],
        rounds: Vec::new(),
    };
    for rep in 0..dims.nu as usize {
        b.repetition(rep)?;
    }
    if b.next_slot[desired] != len {
        return Err(PlanError::Invalid {
            database: 0,
            reason: format!("used {} desired symbols, expected L = {len}", b.next_slot[desired]),
        });
    }

    let mut queries = b.queries;
    for (db, list) in queries.iter_mut().enumerate() {
        for _ in 0..dims.key_len[db] {
            let seq = list.len();
            list.push(Query {
                terms: Vec::new(),
                noise_slot: 0,
                kind: QueryKind::PureNoise,
                round: 0,
                repetition: 0,
                stage: 0,
                seq,
            });
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(PERMUTATION_STREAM);
    let permutations = (0..m)
        .map(|_| {
            let mut p: Vec<usize> = (0..len).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();

    let mut plan = QueryPlan {
        schema_version: PLAN_SCHEMA_VERSION,
        meta: PlanMeta {
            messages: m,
            databases: g.databases(),
            q,
            mu: mu.clone(),
            n: g.seq().to_vec(),
            nu: dims.nu,
            t: dims.t.clone(),
            key_len: dims.key_len.clone(),
            downloads: dims.downloads.clone(),
            message_len: dims.message_len(),
            desired,
            seed,
        },
        permutations,
        databases: queries
            .into_iter()
            .map(|queries| DatabasePlan { queries })
            .collect(),
    };
    if opts.skip_message_symmetry {
        faults::drop_completion_sums(&mut plan);
    }
    shuffle_databases(&mut plan, seed);
    Ok(plan)
}

fn shuffle_databases(plan: &mut QueryPlan, seed: u64) {
    for (db, d) in plan.databases.iter_mut().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(SHUFFLE_STREAM + db as u64);
        d.queries.shuffle(&mut rng);
        for (pos, q) in d.queries.iter_mut().enumerate() {
            q.noise_slot = pos;
        }
    }
}

/// Undesired-only query indices of one stage, in lexicographic subset order.
type StageRecord = Vec<usize>;

struct Builder<'a> {
    g: &'a GroupSequence,
    y: &'a StageCounts,
    desired: usize,
    len: usize,
    next_slot: Vec<usize>,
    queries: Vec<Vec<Query>>,
    /// `rounds[k-1][db]`: stages of the current repetition.
    rounds: Vec<Vec<Vec<StageRecord>>>,
}

impl Builder<'_> {
    fn undesired(&self) -> Vec<usize> {
        (0..self.g.messages()).filter(|&m| m != self.desired).collect()
    }

    fn fresh(&mut self, message: usize) -> Result<Term, PlanError> {
        let slot = self.next_slot[message];
        if slot >= self.len {
            return Err(PlanError::SlotOverflow {
                message,
                len: self.len,
            });
        }
        self.next_slot[message] += 1;
        Ok(Term { message, slot })
    }

    /// Emits one stage of round `k` and records its undesired-only queries.
    fn stage(
        &mut self,
        db: usize,
        rep: usize,
        k: usize,
        sides: Vec<Vec<Term>>,
    ) -> Result<(), PlanError> {
        let stage = self.rounds[k - 1][db].len();
        let push = |b: &mut Self, mut terms: Vec<Term>, kind| {
            terms.sort();
            let list = &mut b.queries[db];
            let seq = list.len();
            list.push(Query {
                terms,
                noise_slot: 0,
                kind,
                round: k,
                repetition: rep,
                stage,
                seq,
            });
            seq
        };
        for mut side in sides {
            side.push(self.fresh(self.desired)?);
            push(self, side, QueryKind::Desired);
        }
        let undesired = self.undesired();
        let mut record = Vec::new();
        for subset in subsets::subsets(undesired.len(), k) {
            let terms = subset
                .iter()
                .map(|&i| self.fresh(undesired[i]))
                .collect::<Result<Vec<_>, _>>()?;
            record.push(push(self, terms, QueryKind::Undesired));
        }
        self.rounds[k - 1][db].push(record);
        Ok(())
    }

    fn repetition(&mut self, rep: usize) -> Result<(), PlanError> {
        let g = self.g;
        let m = g.messages();
        let active = g.active_databases();
        let n0 = g.seq()[0];
        self.rounds = vec![vec![Vec::new(); g.databases()]; m];
        let mut pools: Vec<VecDeque<Term>> = vec![VecDeque::new(); m];

        for k in 1..=m {
            for db in 0..active {
                let l = g.group_of(db).expect("active database has a group");
                if k == 1 {
                    if l == 0 {
                        for _ in 0..g.initial_stages() {
                            self.stage(db, rep, 1, vec![Vec::new()])?;
                        }
                    }
                } else if k > l {
                    if l >= 2 && k == l + 1 {
                        let extra = n0 as u64 * g.xi(l).unwrap_or(0);
                        // Each database draws from its own copy of the pool.
                        let mut pools = pools.clone();
                        for _ in 0..extra {
                            let mut sides = Vec::new();
                            let undesired = self.undesired();
                            for subset in subsets::subsets(undesired.len(), l) {
                                let mut side = Vec::with_capacity(l);
                                for &i in &subset {
                                    let msg = undesired[i];
                                    let t = pools[msg].pop_front().ok_or(PlanError::PoolExhausted {
                                        round: k,
                                        group: l,
                                        message: msg,
                                    })?;
                                    side.push(t);
                                }
                                sides.push(side);
                            }
                            self.stage(db, rep, k, sides)?;
                        }
                    }
                    for other in 0..active {
                        if other == db {
                            continue;
                        }
                        let sources = self.rounds[k - 2][other].clone();
                        for record in sources {
                            let sides = record
                                .iter()
                                .map(|&qi| self.queries[other][qi].terms.clone())
                                .collect();
                            self.stage(db, rep, k, sides)?;
                        }
                    }
                }
                let built = self.rounds[k - 1][db].len() as u64;
                let expected = self.y.get(l, k);
                if built != expected {
                    return Err(PlanError::Construction {
                        repetition: rep,
                        round: k,
                        group: l,
                        database: db,
                        expected,
                        built,
                    });
                }
            }
            if k == 1 {
                // Group-0 round-1 undesired singles, database-major.
                for db in g.group_databases(0) {
                    for record in &self.rounds[0][db] {
                        for &qi in record {
                            let t = self.queries[db][qi].terms[0];
                            pools[t.message].push_back(t);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Structure recomputed from a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStats {
    pub t: Vec<u64>,
    pub pure_noise: Vec<u64>,
    #[serde(rename = "L")]
    pub message_len: u64,
    pub total_download: u64,
    #[serde(with = "ratio::serde_exact")]
    pub rate: Rational,
    /// `stages[n][k-1]`: stages of round `k` at database `n`, all repetitions.
    pub stages: Vec<Vec<u64>>,
}

pub fn plan_stats(plan: &QueryPlan) -> PlanStats {
    let m = plan.meta.messages;
    let mut t = Vec::new();
    let mut pure_noise = Vec::new();
    let mut stages = Vec::new();
    let mut desired_slots = HashSet::new();
    for d in &plan.databases {
        t.push(d.queries.len() as u64);
        pure_noise.push(d.queries.iter().filter(|q| q.is_pure_noise()).count() as u64);
        let mut per_round = vec![HashSet::new(); m];
        for q in &d.queries {
            if q.round >= 1 && q.round <= m {
                per_round[q.round - 1].insert((q.repetition, q.stage));
            }
            if let Some(term) = q.term_of(plan.meta.desired) {
                desired_slots.insert(term.slot);
            }
        }
        stages.push(per_round.iter().map(|s| s.len() as u64).collect());
    }
    let total: u64 = t.iter().sum();
    let l = desired_slots.len() as u64;
    PlanStats {
        rate: if total == 0 {
            Rational::from_integer(0.into())
        } else {
            ratio::rat(l as i64, total as i64)
        },
        t,
        pure_noise,
        message_len: l,
        total_download: total,
        stages,
    }
}

/// Checks every structural invariant of a plan.
pub fn validate(plan: &QueryPlan) -> Result<(), PlanError> {
    let meta = &plan.meta;
    let m = meta.messages;
    let bad = |database: usize, reason: String| PlanError::Invalid { database, reason };
    let g = plan.group_sequence()?;
    let dims = rates::repetition_factor(&g, &meta.mu)?;
    if dims.t != meta.t || dims.key_len != meta.key_len || dims.nu != meta.nu {
        return Err(bad(0, "dimensions disagree with the group sequence".into()));
    }
    if plan.databases.len() != meta.databases {
        return Err(bad(0, "wrong number of databases".into()));
    }
    if meta.desired >= m {
        return Err(PlanError::InvalidDesired {
            desired: meta.desired,
            messages: m,
        });
    }
    let len = meta.message_len as usize;
    if plan.permutations.len() != m
        || plan.permutations.iter().any(|p| {
            let mut s = p.clone();
            s.sort_unstable();
            s != (0..len).collect::<Vec<_>>()
        })
    {
        return Err(bad(0, "permutations are not bijections on the message length".into()));
    }
    let max_t = meta.t.iter().copied().max().unwrap_or(0);
    algebra::PrimeField::new(meta.q)?;
    if meta.q <= max_t {
        return Err(PlanError::FieldTooSmall { q: meta.q, max_t });
    }

    let y = rates::stage_counts(&g);
    let mut undesired_sets: Vec<HashSet<Vec<Term>>> = Vec::new();
    for d in &plan.databases {
        undesired_sets.push(
            d.queries
                .iter()
                .filter(|q| q.kind == QueryKind::Undesired)
                .map(|q| q.terms.clone())
                .collect(),
        );
    }
    let mut desired_slots = HashSet::new();
    for (db, d) in plan.databases.iter().enumerate() {
        if d.queries.len() as u64 != meta.t[db] {
            return Err(bad(db, format!("{} queries, expected t = {}", d.queries.len(), meta.t[db])));
        }
        let noise = d.queries.iter().filter(|q| q.is_pure_noise()).count() as u64;
        if noise != meta.key_len[db] {
            return Err(bad(db, format!("{noise} pure-noise queries, expected {}", meta.key_len[db])));
        }
        let mut slots: Vec<usize> = d.queries.iter().map(|q| q.noise_slot).collect();
        slots.sort_unstable();
        if slots != (0..d.queries.len()).collect::<Vec<_>>() {
            return Err(bad(db, "noise slots are not a permutation of positions".into()));
        }
        let mut seen = HashSet::new();
        let mut stage_sets: HashMap<(usize, usize, usize), Vec<Vec<usize>>> = HashMap::new();
        for q in &d.queries {
            if q.terms.windows(2).any(|w| w[0].message >= w[1].message) {
                return Err(bad(db, format!("query {} repeats or misorders messages", q.seq)));
            }
            for t in &q.terms {
                if t.message >= m || t.slot >= len {
                    return Err(bad(db, format!("query {} has an out-of-range term", q.seq)));
                }
                if !seen.insert(*t) {
                    return Err(bad(db, format!("symbol ({}, {}) used twice", t.message, t.slot)));
                }
            }
            let has_desired = q.term_of(meta.desired).is_some();
            let expect_kind = match (q.terms.is_empty(), has_desired) {
                (true, _) => QueryKind::PureNoise,
                (false, true) => QueryKind::Desired,
                (false, false) => QueryKind::Undesired,
            };
            if q.kind != expect_kind || (!q.terms.is_empty() && q.round != q.terms.len()) {
                return Err(bad(db, format!("query {} has inconsistent kind or round", q.seq)));
            }
            if q.is_pure_noise() {
                continue;
            }
            stage_sets
                .entry((q.repetition, q.round, q.stage))
                .or_default()
                .push(q.signature());
            if let Some(dt) = q.term_of(meta.desired) {
                if !desired_slots.insert(dt.slot) {
                    return Err(bad(db, format!("desired slot {} reused", dt.slot)));
                }
                let side: Vec<Term> = q.terms.iter().copied().filter(|t| t.message != meta.desired).collect();
                if !side.is_empty() && !resolvable(&side, db, &undesired_sets) {
                    return Err(bad(
                        db,
                        format!("side information of query {} is not downloaded elsewhere", q.seq),
                    ));
                }
            }
        }
        let l = g.group_of(db);
        for k in 1..=m {
            let built = stage_sets.keys().filter(|key| key.1 == k).count() as u64;
            let expected = l.map_or(0, |l| y.get(l, k)) * meta.nu;
            if built != expected {
                return Err(PlanError::Construction {
                    repetition: meta.nu as usize,
                    round: k,
                    group: l.unwrap_or(usize::MAX),
                    database: db,
                    expected,
                    built,
                });
            }
        }
        let mut keys: Vec<_> = stage_sets.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let mut sigs = stage_sets.remove(&key).expect("key present");
            sigs.sort();
            if sigs != subsets::subsets(m, key.1) {
                return Err(bad(
                    db,
                    format!(
                        "stage {} of round {} in repetition {} does not cover every {}-subset once",
                        key.2, key.1, key.0, key.1
                    ),
                ));
            }
        }
    }
    if desired_slots.len() != len {
        return Err(bad(0, format!("{} desired symbols retrieved, expected {len}", desired_slots.len())));
    }
    Ok(())
}

/// A side sum is resolvable when another database downloads it as one
/// undesired query, or downloads each of its symbols alone.
fn resolvable(side: &[Term], db: usize, undesired: &[HashSet<Vec<Term>>]) -> bool {
    let elsewhere = |terms: &Vec<Term>| {
        undesired
            .iter()
            .enumerate()
            .any(|(other, set)| other != db && set.contains(terms))
    };
    elsewhere(&side.to_vec()) || side.iter().all(|t| elsewhere(&vec![*t]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    fn g(m: usize, n: usize, s: &[usize]) -> GroupSequence {
        GroupSequence::new(m, n, s.to_vec()).unwrap()
    }

    fn worked_example() -> QueryPlan {
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 2)]).unwrap();
        build_plan(&g(3, 2, &[1, 2, 2]), &mu, 0, 7).unwrap()
    }

    fn by_seq(plan: &QueryPlan, db: usize) -> Vec<Query> {
        let mut v = plan.databases[db].queries.clone();
        v.sort_by_key(|q| q.seq);
        v
    }

    #[test]
    fn worked_example_shape() {
        let p = worked_example();
        validate(&p).unwrap();
        assert_eq!(p.meta.t, vec![16, 18]);
        assert_eq!(p.meta.q, 19);
        let s = plan_stats(&p);
        assert_eq!(s.message_len, 12);
        assert_eq!(s.total_download, 34);
        assert_eq!(s.rate, rat(6, 17));
        assert_eq!(s.pure_noise, vec![4, 9]);
        assert_eq!(s.stages, vec![vec![3, 0, 3], vec![0, 3, 0]]);

        let db1 = by_seq(&p, 0);
        let sig: Vec<usize> = db1.iter().take(4).map(|q| q.terms.len()).collect();
        assert_eq!(sig, vec![1, 1, 1, 3]);
        // a2 + b1, a3 + c1, b2 + c2 at database 2
        let db2 = by_seq(&p, 1);
        let t = |m, s| Term { message: m, slot: s };
        assert_eq!(db2[0].terms, vec![t(0, 1), t(1, 0)]);
        assert_eq!(db2[1].terms, vec![t(0, 2), t(2, 0)]);
        assert_eq!(db2[2].terms, vec![t(1, 1), t(2, 1)]);
        assert_eq!(db1[3].terms, vec![t(0, 3), t(1, 1), t(2, 1)]);
    }

    #[test]
    fn m4_extra_stage_uses_round_one_singles() {
        let p = build_plan(&g(4, 2, &[1, 1, 2, 2]), &EavesdropProfile::zeros(2), 0, 1).unwrap();
        validate(&p).unwrap();
        let db2 = by_seq(&p, 1);
        let t = |m, s| Term { message: m, slot: s };
        assert_eq!(db2[0].terms, vec![t(0, 2), t(1, 0), t(2, 0)]);
        assert_eq!(db2[1].terms, vec![t(0, 3), t(1, 1), t(3, 0)]);
        assert_eq!(db2[2].terms, vec![t(0, 4), t(2, 1), t(3, 1)]);
        assert_eq!(db2[3].terms, vec![t(1, 2), t(2, 2), t(3, 2)]);
        assert_eq!(plan_stats(&p).t, vec![9, 4]);
    }

    #[test]
    fn m4_one_one_two_two_shape() {
        let p = build_plan(&g(4, 2, &[1, 2, 2, 2]), &EavesdropProfile::zeros(2), 0, 1).unwrap();
        validate(&p).unwrap();
        let lens = |db| by_seq(&p, db).iter().map(|q| q.terms.len()).collect::<Vec<_>>();
        assert_eq!(lens(0), vec![1, 1, 1, 1, 3, 3, 3, 3]);
        assert_eq!(lens(1), vec![2, 2, 2, 2, 2, 2, 4]);
    }

    #[test]
    fn trivial_scheme_uses_one_database() {
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 3), rat(1, 2)]).unwrap();
        let p = build_plan(&g(3, 3, &[1, 1, 1]), &mu, 2, 3).unwrap();
        validate(&p).unwrap();
        assert_eq!(p.meta.t, vec![4, 0, 0]);
        assert!(p.databases[1].queries.is_empty());
        assert_eq!(plan_stats(&p).message_len, 1);
    }

    #[test]
    fn builds_every_small_scheme() {
        for m in 1..=5 {
            for n in 1..=4 {
                for s in rates::monotone_sequences(m, n) {
                    let gs = g(m, n, &s);
                    let p = build_plan(&gs, &EavesdropProfile::zeros(n), m - 1, 11)
                        .unwrap_or_else(|e| panic!("{gs}: {e}"));
                    validate(&p).unwrap_or_else(|e| panic!("{gs}: {e}"));
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let p = worked_example();
        let back = QueryPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["meta"]["M"], 3);
        assert_eq!(v["meta"]["mu"][0], "1/4");
        assert!(v["databases"][0]["queries"][0]["noise_slot"].is_u64());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 2)]).unwrap();
        let gs = g(3, 2, &[1, 2, 2]);
        assert!(matches!(build_plan(&gs, &mu, 3, 0), Err(PlanError::InvalidDesired { .. })));
        let opts = BuildOptions {
            field_q: Some(17),
            ..Default::default()
        };
        assert!(matches!(
            build_plan_with(&gs, &mu, 0, 0, opts),
            Err(PlanError::FieldTooSmall { q: 17, max_t: 18 })
        ));
        let opts = BuildOptions {
            field_q: Some(21),
            ..Default::default()
        };
        assert!(build_plan_with(&gs, &mu, 0, 0, opts).is_err());
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(worked_example(), worked_example());
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 2)]).unwrap();
        let other = build_plan(&g(3, 2, &[1, 2, 2]), &mu, 0, 8).unwrap();
        assert_ne!(other.permutations, worked_example().permutations);
    }
}
