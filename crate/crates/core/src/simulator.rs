//! Executes query plans over GF(q) and audits them.
//!
//! Databases expand private keys into artificial noise with a Vandermonde MDS
//! code and add one noise symbol to every download. The user strips the noise
//! using the pure-noise downloads, cancels side information and undoes the
//! message permutation.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{self, AlgebraError, FieldMatrix, PrimeField};
use crate::planner::{self, BuildOptions, PlanError, QueryKind, QueryPlan, Term};
use crate::ratio::Rational;
use crate::rates::{EavesdropProfile, GroupSequence};
use crate::subsets;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Random observation sets drawn when exhaustive coverage exceeds the budget.
pub const SAMPLED_SETS: u64 = 10_000;

/// RNG streams derived from a key seed: database `n` keys on
/// `KEY_STREAM + n`, its eavesdropper draws on `TAP_STREAM + n`.
const KEY_STREAM: u64 = 1;
const TAP_STREAM: u64 = 1 << 20;
const STORE_STREAM: u64 = 1 << 40;
const AUDIT_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("database {database}: side information of the query at position {position} cannot be resolved")]
    Unresolvable { database: usize, position: usize },
    #[error("database {database} has {available} pure-noise downloads but a key of length {needed}")]
    MissingNoise {
        database: usize,
        available: usize,
        needed: usize,
    },
    #[error("desired symbol at slot {slot} was never retrieved")]
    MissingSymbol { slot: usize },
    #[error("mu_{database} * t_{database} = {value} is not an integer", database = .database + 1)]
    NonIntegralObservation { database: usize, value: String },
    #[error("brute-force oracle needs {work} evaluations, above the limit of {limit}")]
    OracleTooLarge { work: u128, limit: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// `M` messages of `L` field symbols each, replicated at every database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageStore {
    pub q: u64,
    pub messages: Vec<Vec<u64>>,
}

impl MessageStore {
    pub fn new(field: PrimeField, messages: Vec<Vec<u64>>) -> Result<Self, SimError> {
        let len = messages.first().map_or(0, Vec::len);
        for m in &messages {
            if m.len() != len {
                return Err(SimError::Dimension {
                    what: "message length",
                    expected: len,
                    got: m.len(),
                });
            }
        }
        Ok(Self {
            q: field.modulus(),
            messages: messages
                .into_iter()
                .map(|m| m.into_iter().map(|v| field.reduce(v)).collect())
                .collect(),
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, field: PrimeField, count: usize, len: usize) -> Self {
        let q = field.modulus();
        Self {
            q,
            messages: (0..count)
                .map(|_| (0..len).map(|_| rng.gen_range(0..q)).collect())
                .collect(),
        }
    }

    pub fn zeros(field: PrimeField, count: usize, len: usize) -> Self {
        Self {
            q: field.modulus(),
            messages: vec![vec![0; len]; count],
        }
    }

    /// Store matching a plan's `M`, `L` and field, drawn from `seed`.
    pub fn for_plan(plan: &QueryPlan, seed: u64) -> Result<Self, SimError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(STORE_STREAM);
        Ok(Self::random(
            &mut rng,
            plan.field()?,
            plan.meta.messages,
            plan.meta.message_len as usize,
        ))
    }
}

/// Keys and their MDS expansions, one independent stream per database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub keys: Vec<Vec<u64>>,
    pub noise: Vec<Vec<u64>>,
}

impl KeyMaterial {
    pub fn generate(plan: &QueryPlan, key_seed: u64) -> Result<Self, SimError> {
        let field = plan.field()?;
        let keys = (0..plan.meta.databases)
            .map(|db| {
                let mut rng = ChaCha20Rng::seed_from_u64(key_seed);
                rng.set_stream(KEY_STREAM + db as u64);
                (0..plan.meta.key_len[db])
                    .map(|_| rng.gen_range(0..field.modulus()))
                    .collect()
            })
            .collect();
        Self::from_keys(plan, keys)
    }

    pub fn from_keys(plan: &QueryPlan, keys: Vec<Vec<u64>>) -> Result<Self, SimError> {
        let field = plan.field()?;
        if keys.len() != plan.meta.databases {
            return Err(SimError::Dimension {
                what: "key count",
                expected: plan.meta.databases,
                got: keys.len(),
            });
        }
        let mut noise = Vec::with_capacity(keys.len());
        for (db, key) in keys.iter().enumerate() {
            let code = algebra::mds_generator(plan.meta.t[db] as usize, plan.meta.key_len[db] as usize, field)?;
            if key.len() != code.dimension() {
                return Err(SimError::Dimension {
                    what: "key length",
                    expected: code.dimension(),
                    got: key.len(),
                });
            }
            noise.push(code.encode(key)?);
        }
        Ok(Self { keys, noise })
    }
}

/// Positions the eavesdropper taps and the values seen there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EavesdropperView {
    pub observed: Vec<Vec<usize>>,
    pub values: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub desired: usize,
    pub keys: KeyMaterial,
    pub answers: Vec<Vec<u64>>,
    pub decoded: Vec<u64>,
    pub eav_view: EavesdropperView,
    /// Whether `decoded` equals the desired message.
    pub correct: bool,
}

/// `μ_n t_n` for every database.
pub fn observation_sizes(plan: &QueryPlan) -> Result<Vec<usize>, SimError> {
    plan.meta
        .mu
        .values()
        .iter()
        .zip(&plan.meta.t)
        .enumerate()
        .map(|(db, (mu, &t))| {
            let v = mu * Rational::from_integer(t.into());
            if !v.is_integer() {
                return Err(SimError::NonIntegralObservation {
                    database: db,
                    value: crate::ratio::to_exact_string(&v),
                });
            }
            Ok(usize::try_from(v.to_integer()).expect("fits usize"))
        })
        .collect()
}

fn check_store(plan: &QueryPlan, store: &MessageStore) -> Result<PrimeField, SimError> {
    let field = plan.field()?;
    if store.q != field.modulus() {
        return Err(AlgebraError::ModulusMismatch {
            left: store.q,
            right: field.modulus(),
        }
        .into());
    }
    if store.messages.len() != plan.meta.messages {
        return Err(SimError::Dimension {
            what: "message count",
            expected: plan.meta.messages,
            got: store.messages.len(),
        });
    }
    let len = plan.meta.message_len as usize;
    if let Some(bad) = store.messages.iter().find(|m| m.len() != len) {
        return Err(SimError::Dimension {
            what: "message length",
            expected: len,
            got: bad.len(),
        });
    }
    Ok(field)
}

/// Answer strings `A_n[j] = Σ terms + u_n[noise_slot]`.
pub fn answer_strings(plan: &QueryPlan, store: &MessageStore, keys: &KeyMaterial) -> Result<Vec<Vec<u64>>, SimError> {
    let field = check_store(plan, store)?;
    plan.databases
        .iter()
        .enumerate()
        .map(|(db, d)| {
            d.queries
                .iter()
                .map(|q| {
                    let noise = *keys.noise[db].get(q.noise_slot).ok_or(SimError::Dimension {
                        what: "noise slot",
                        expected: keys.noise[db].len(),
                        got: q.noise_slot,
                    })?;
                    Ok(q.terms.iter().fold(noise, |acc, t| {
                        let w = store.messages[t.message][plan.permutations[t.message][t.slot]];
                        field.add(acc, w)
                    }))
                })
                .collect()
        })
        .collect()
}

pub fn run_retrieval(plan: &QueryPlan, store: &MessageStore, key_seed: u64) -> Result<Transcript, SimError> {
    let keys = KeyMaterial::generate(plan, key_seed)?;
    run_with_keys(plan, store, keys, key_seed)
}

pub fn run_with_keys(
    plan: &QueryPlan,
    store: &MessageStore,
    keys: KeyMaterial,
    tap_seed: u64,
) -> Result<Transcript, SimError> {
    let answers = answer_strings(plan, store, &keys)?;
    let sizes = observation_sizes(plan)?;
    let mut observed = Vec::new();
    let mut values = Vec::new();
    for (db, a) in answers.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(tap_seed);
        rng.set_stream(TAP_STREAM + db as u64);
        let s = subsets::random_subset(&mut rng, a.len(), sizes[db]);
        values.push(s.iter().map(|&j| a[j]).collect());
        observed.push(s);
    }
    let decoded = decode(plan, &answers)?;
    let correct = decoded == store.messages[plan.meta.desired];
    Ok(Transcript {
        schema_version: REPORT_SCHEMA_VERSION,
        desired: plan.meta.desired,
        keys,
        answers,
        decoded,
        eav_view: EavesdropperView { observed, values },
        correct,
    })
}

/// Recovers the desired message from the answer strings.
pub fn decode(plan: &QueryPlan, answers: &[Vec<u64>]) -> Result<Vec<u64>, SimError> {
    let field = plan.field()?;
    let meta = &plan.meta;
    if answers.len() != meta.databases {
        return Err(SimError::Dimension {
            what: "answer strings",
            expected: meta.databases,
            got: answers.len(),
        });
    }
    // Strip the artificial noise.
    let mut clean = Vec::with_capacity(answers.len());
    for (db, d) in plan.databases.iter().enumerate() {
        let t = d.queries.len();
        if answers[db].len() != t {
            return Err(SimError::Dimension {
                what: "answer length",
                expected: t,
                got: answers[db].len(),
            });
        }
        let kappa = meta.key_len[db] as usize;
        let code = algebra::mds_generator(t, kappa, field)?;
        let mut pure: Vec<(usize, u64)> = d
            .queries
            .iter()
            .enumerate()
            .filter(|(_, q)| q.is_pure_noise())
            .map(|(pos, q)| (q.noise_slot, answers[db][pos]))
            .collect();
        if pure.len() < kappa {
            return Err(SimError::MissingNoise {
                database: db,
                available: pure.len(),
                needed: kappa,
            });
        }
        pure.sort_unstable();
        pure.truncate(kappa);
        let (slots, vals): (Vec<usize>, Vec<u64>) = pure.into_iter().unzip();
        let u = if kappa == 0 {
            vec![0; t]
        } else {
            code.reconstruct(&slots, &vals)?
        };
        clean.push(
            d.queries
                .iter()
                .enumerate()
                .map(|(pos, q)| field.sub(answers[db][pos], u[q.noise_slot]))
                .collect::<Vec<u64>>(),
        );
    }

    let mut known: HashMap<&[Term], Vec<(usize, u64)>> = HashMap::new();
    for (db, d) in plan.databases.iter().enumerate() {
        for (pos, q) in d.queries.iter().enumerate() {
            if q.kind == QueryKind::Undesired && !q.terms.is_empty() {
                known.entry(q.terms.as_slice()).or_default().push((db, clean[db][pos]));
            }
        }
    }
    let lookup = |terms: &[Term], db: usize| -> Option<u64> {
        known
            .get(terms)?
            .iter()
            .find(|(other, _)| *other != db)
            .map(|&(_, v)| v)
    };

    let len = meta.message_len as usize;
    let mut by_slot: Vec<Option<u64>> = vec![None; len];
    for (db, d) in plan.databases.iter().enumerate() {
        for (pos, q) in d.queries.iter().enumerate() {
            let Some(dt) = q.term_of(meta.desired) else {
                continue;
            };
            let side: Vec<Term> = q.terms.iter().copied().filter(|t| t.message != meta.desired).collect();
            let sub = if side.is_empty() {
                Some(0)
            } else {
                lookup(&side, db).or_else(|| {
                    side.iter()
                        .map(|t| lookup(std::slice::from_ref(t), db))
                        .try_fold(0, |acc, v| v.map(|v| field.add(acc, v)))
                })
            };
            let sub = sub.ok_or(SimError::Unresolvable { database: db, position: pos })?;
            if dt.slot >= len {
                return Err(SimError::MissingSymbol { slot: dt.slot });
            }
            by_slot[dt.slot] = Some(field.sub(clean[db][pos], sub));
        }
    }
    let perm = &plan.permutations[meta.desired];
    let mut out = vec![0; len];
    for (slot, v) in by_slot.into_iter().enumerate() {
        out[perm[slot]] = v.ok_or(SimError::MissingSymbol { slot })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSecurity {
    pub database: usize,
    pub t: usize,
    pub observed: usize,
    pub key_len: usize,
    pub tested_sets: u64,
    pub exhaustive: bool,
    /// First observation set whose key submatrix is rank deficient.
    pub failing_set: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub verdict: Verdict,
    pub databases: Vec<DatabaseSecurity>,
}

/// Checks that every tested set of `μ_n t_n` observed positions sees a
/// full-rank slice of the key generator, so the observations are uniform
/// whatever the messages.
pub fn audit_security(plan: &QueryPlan, budget: u128) -> Result<SecurityReport, SimError> {
    let field = plan.field()?;
    let sizes = observation_sizes(plan)?;
    let mut out = Vec::new();
    for (db, d) in plan.databases.iter().enumerate() {
        let t = d.queries.len();
        let obs = sizes[db];
        let kappa = plan.meta.key_len[db] as usize;
        let code = algebra::mds_generator(t, kappa, field)?;
        let rows: Vec<usize> = d.queries.iter().map(|q| q.noise_slot).collect();
        let mut report = DatabaseSecurity {
            database: db,
            t,
            observed: obs,
            key_len: kappa,
            tested_sets: 0,
            exhaustive: true,
            failing_set: None,
        };
        if obs == 0 {
            out.push(report);
            continue;
        }
        let check = |set: &[usize], report: &mut DatabaseSecurity| -> Result<bool, SimError> {
            report.tested_sets += 1;
            let picked: Vec<usize> = set.iter().map(|&j| rows[j]).collect();
            let ok = kappa >= set.len() && full_rank(code.generator(), &picked)?;
            if !ok && report.failing_set.is_none() {
                report.failing_set = Some(set.to_vec());
            }
            Ok(ok)
        };
        if subsets::count(t, obs) <= budget {
            let mut err = None;
            subsets::for_each_subset(t, obs, |s| {
                if err.is_none() && report.failing_set.is_none() {
                    if let Err(e) = check(s, &mut report) {
                        err = Some(e);
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        } else {
            report.exhaustive = false;
            for start in 0..=t - obs {
                let s: Vec<usize> = (start..start + obs).collect();
                check(&s, &mut report)?;
            }
            let pure: Vec<usize> = (0..t).filter(|&j| d.queries[j].is_pure_noise()).collect();
            let other: Vec<usize> = (0..t).filter(|&j| !d.queries[j].is_pure_noise()).collect();
            if pure.len() >= obs {
                let base = &pure[..obs];
                check(base, &mut report)?;
                for i in 0..obs {
                    for &o in &other {
                        let mut s = base.to_vec();
                        s[i] = o;
                        s.sort_unstable();
                        check(&s, &mut report)?;
                    }
                }
            }
            let mut rng = ChaCha20Rng::seed_from_u64(plan.meta.seed);
            rng.set_stream(AUDIT_STREAM + db as u64);
            for _ in 0..SAMPLED_SETS {
                let s = subsets::random_subset(&mut rng, t, obs);
                check(&s, &mut report)?;
            }
        }
        out.push(report);
    }
    let verdict = Verdict::from_bool(out.iter().all(|r| r.failing_set.is_none()));
    Ok(SecurityReport {
        verdict,
        databases: out,
    })
}

fn full_rank(g: &FieldMatrix, rows: &[usize]) -> Result<bool, SimError> {
    Ok(algebra::submatrix_rank(g, rows)? == rows.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub verdict: Verdict,
    pub desired_checked: usize,
    /// Human-readable description of the first difference found.
    pub first_difference: Option<String>,
}

type SignatureCounts = Vec<BTreeMap<Vec<usize>, usize>>;

fn signatures(plan: &QueryPlan) -> SignatureCounts {
    plan.databases
        .iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for q in &d.queries {
                *m.entry(q.signature()).or_insert(0) += 1;
            }
            m
        })
        .collect()
}

fn slot_reuse(plan: &QueryPlan) -> Option<String> {
    for (db, d) in plan.databases.iter().enumerate() {
        let mut seen = HashSet::new();
        for q in &d.queries {
            for t in &q.terms {
                if !seen.insert(*t) {
                    return Some(format!(
                        "database {}: symbol {} of message {} downloaded twice",
                        db + 1,
                        t.slot + 1,
                        t.message + 1
                    ));
                }
            }
        }
    }
    None
}

fn describe(sig: &[usize]) -> String {
    if sig.is_empty() {
        "pure noise".into()
    } else {
        let parts: Vec<String> = sig.iter().map(|m| format!("W{}", m + 1)).collect();
        parts.join("+")
    }
}

fn compare_signatures(reference: &SignatureCounts, other: &SignatureCounts, desired: usize) -> Option<String> {
    for (db, (a, b)) in reference.iter().zip(other).enumerate() {
        if a == b {
            continue;
        }
        let keys: HashSet<&Vec<usize>> = a.keys().chain(b.keys()).collect();
        let mut keys: Vec<_> = keys.into_iter().collect();
        keys.sort();
        for k in keys {
            let (x, y) = (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0));
            if x != y {
                return Some(format!(
                    "database {}: {} appears {x} times for W1 but {y} times for W{}",
                    db + 1,
                    describe(k),
                    desired + 1
                ));
            }
        }
    }
    None
}

/// Builds the plan for every desired index and compares per-database
/// multisets of query signatures.
pub fn audit_privacy(
    g: &GroupSequence,
    mu: &EavesdropProfile,
    seed: u64,
    opts: BuildOptions,
) -> Result<PrivacyReport, SimError> {
    let plans = (0..g.messages())
        .map(|i| planner::build_plan_with(g, mu, i, seed, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(privacy_of(&plans, None))
}

/// Privacy audit of a stored plan: its own signatures must match freshly
/// built plans for every desired index.
pub fn audit_privacy_plan(plan: &QueryPlan) -> Result<PrivacyReport, SimError> {
    let g = plan.group_sequence()?;
    let opts = BuildOptions {
        field_q: Some(plan.meta.q),
        skip_message_symmetry: false,
    };
    let plans = (0..g.messages())
        .map(|i| planner::build_plan_with(&g, &plan.meta.mu, i, plan.meta.seed, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(privacy_of(&plans, Some(plan)))
}

fn privacy_of(plans: &[QueryPlan], extra: Option<&QueryPlan>) -> PrivacyReport {
    let reference = signatures(&plans[0]);
    let mut first_difference = None;
    for p in plans.iter().chain(extra) {
        if let Some(d) = slot_reuse(p) {
            first_difference = Some(d);
            break;
        }
        if let Some(d) = compare_signatures(&reference, &signatures(p), p.meta.desired) {
            first_difference = Some(d);
            break;
        }
    }
    PrivacyReport {
        verdict: Verdict::from_bool(first_difference.is_none()),
        desired_checked: plans.len(),
        first_difference,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodabilityReport {
    pub verdict: Verdict,
    pub trials: usize,
    pub successes: usize,
    pub first_failure: Option<String>,
}

/// Runs `trials` retrievals on fresh random messages and keys.
pub fn audit_decodability(plan: &QueryPlan, trials: usize, seed: u64) -> Result<DecodabilityReport, SimError> {
    let field = plan.field()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(STORE_STREAM);
    let mut successes = 0;
    let mut first_failure = None;
    for trial in 0..trials {
        let store = MessageStore::random(&mut rng, field, plan.meta.messages, plan.meta.message_len as usize);
        let key_seed: u64 = rng.gen();
        match run_retrieval(plan, &store, key_seed) {
            Ok(tr) if tr.correct => successes += 1,
            Ok(tr) => {
                if first_failure.is_none() {
                    let idx = tr
                        .decoded
                        .iter()
                        .zip(&store.messages[plan.meta.desired])
                        .position(|(a, b)| a != b)
                        .unwrap_or(0);
                    first_failure = Some(format!("trial {trial}: symbol {} decoded incorrectly", idx + 1));
                }
            }
            Err(e) => {
                if first_failure.is_none() {
                    first_failure = Some(format!("trial {trial}: {e}"));
                }
            }
        }
    }
    Ok(DecodabilityReport {
        verdict: Verdict::from_bool(successes == trials),
        trials,
        successes,
        first_failure,
    })
}

/// Outcome of exhaustive enumeration over messages and keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub verdict: Verdict,
    pub sets_checked: u64,
    pub message_assignments: u128,
    /// `(database, observed positions)` where the view depends on the messages.
    pub leaking_set: Option<(usize, Vec<usize>)>,
}

/// For every database and every observation set of size `μ_n t_n`,
/// enumerates all message and key assignments and checks the distribution
/// of the observed symbols is the same for every message assignment.
pub fn leakage_oracle(plan: &QueryPlan, limit: u128) -> Result<LeakageReport, SimError> {
    let field = plan.field()?;
    let q = field.modulus() as u128;
    let m = plan.meta.messages;
    let len = plan.meta.message_len as usize;
    let sizes = observation_sizes(plan)?;
    let symbols = m * len;
    let assignments = q.checked_pow(symbols as u32).unwrap_or(u128::MAX);
    let mut work: u128 = 0;
    for (db, d) in plan.databases.iter().enumerate() {
        let keys = q.saturating_pow(plan.meta.key_len[db] as u32);
        let sets = subsets::count(d.queries.len(), sizes[db]);
        work = work.saturating_add(sets.saturating_mul(assignments).saturating_mul(keys));
    }
    if work > limit {
        return Err(SimError::OracleTooLarge { work, limit });
    }

    let mut sets_checked = 0;
    for (db, d) in plan.databases.iter().enumerate() {
        let t = d.queries.len();
        let kappa = plan.meta.key_len[db] as usize;
        let code = algebra::mds_generator(t, kappa, field)?;
        let all_keys = enumerate_vectors(field.modulus(), kappa);
        let noise_of_key: Vec<Vec<u64>> = all_keys
            .iter()
            .map(|k| code.encode(k))
            .collect::<Result<_, _>>()?;
        let mut leak = None;
        subsets::for_each_subset(t, sizes[db], |set| {
            if leak.is_some() || set.is_empty() {
                return;
            }
            sets_checked += 1;
            let mut reference: Option<BTreeMap<Vec<u64>, u64>> = None;
            for w in 0..assignments {
                let store = assignment(w, field.modulus(), m, len);
                let mut hist = BTreeMap::new();
                for noise in &noise_of_key {
                    let z: Vec<u64> = set
                        .iter()
                        .map(|&j| {
                            let qy = &d.queries[j];
                            qy.terms.iter().fold(noise[qy.noise_slot], |acc, tm| {
                                field.add(acc, store[tm.message][plan.permutations[tm.message][tm.slot]])
                            })
                        })
                        .collect();
                    *hist.entry(z).or_insert(0u64) += 1;
                }
                match &reference {
                    None => reference = Some(hist),
                    Some(r) if *r != hist => {
                        leak = Some((db, set.to_vec()));
                        return;
                    }
                    Some(_) => {}
                }
            }
        });
        if let Some(l) = leak {
            return Ok(LeakageReport {
                verdict: Verdict::Fail,
                sets_checked,
                message_assignments: assignments,
                leaking_set: Some(l),
            });
        }
    }
    Ok(LeakageReport {
        verdict: Verdict::Pass,
        sets_checked,
        message_assignments: assignments,
        leaking_set: None,
    })
}

fn enumerate_vectors(q: u64, len: usize) -> Vec<Vec<u64>> {
    let total = q.pow(len as u32);
    (0..total)
        .map(|mut x| {
            (0..len)
                .map(|_| {
                    let d = x % q;
                    x /= q;
                    d
                })
                .collect()
        })
        .collect()
}

fn assignment(mut index: u128, q: u64, messages: usize, len: usize) -> Vec<Vec<u64>> {
    (0..messages)
        .map(|_| {
            (0..len)
                .map(|_| {
                    let d = (index % q as u128) as u64;
                    index /= q as u128;
                    d
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_plan, faults};
    use crate::ratio::rat;

    fn worked_example() -> QueryPlan {
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 2)]).unwrap();
        build_plan(&GroupSequence::new(3, 2, vec![1, 2, 2]).unwrap(), &mu, 0, 7).unwrap()
    }

    #[test]
    fn worked_example_round_trip() {
        let p = worked_example();
        let store = MessageStore::for_plan(&p, 1).unwrap();
        let tr = run_retrieval(&p, &store, 2).unwrap();
        assert!(tr.correct);
        assert_eq!(tr.decoded.len(), 12);
        assert_eq!(tr.eav_view.observed[0].len(), 4);
        assert_eq!(tr.eav_view.observed[1].len(), 9);
        assert_eq!(tr, run_retrieval(&p, &store, 2).unwrap());
    }

    #[test]
    fn zero_messages_and_keys_give_zero_answers() {
        let p = worked_example();
        let field = p.field().unwrap();
        let store = MessageStore::zeros(field, 3, 12);
        let keys = KeyMaterial::from_keys(&p, vec![vec![0; 4], vec![0; 9]]).unwrap();
        let tr = run_with_keys(&p, &store, keys, 0).unwrap();
        assert!(tr.answers.iter().flatten().all(|&a| a == 0));
        assert_eq!(tr.decoded, vec![0; 12]);
    }

    #[test]
    fn perturbed_noise_symbol_changes_output() {
        let p = worked_example();
        let store = MessageStore::for_plan(&p, 5).unwrap();
        let tr = run_retrieval(&p, &store, 6).unwrap();
        let pos = p.databases[0].queries.iter().position(|q| q.is_pure_noise()).unwrap();
        let mut answers = tr.answers.clone();
        answers[0][pos] = (answers[0][pos] + 1) % p.meta.q;
        assert_ne!(decode(&p, &answers).unwrap(), tr.decoded);
    }

    #[test]
    fn worked_example_audits() {
        let p = worked_example();
        let sec = audit_security(&p, 10_000).unwrap();
        assert!(sec.verdict.passed());
        assert!(sec.databases[0].exhaustive);
        assert_eq!(sec.databases[0].tested_sets, 1820);
        assert!(!sec.databases[1].exhaustive);
        assert!(sec.databases[1].tested_sets >= 10_000);
        let dec = audit_decodability(&p, 20, 3).unwrap();
        assert_eq!(dec.successes, 20);
        assert!(audit_privacy_plan(&p).unwrap().verdict.passed());
    }

    #[test]
    fn faults_are_caught() {
        let p = worked_example();
        let short = faults::short_key(&p, 1).unwrap();
        let sec = audit_security(&short, 10_000).unwrap();
        assert_eq!(sec.verdict, Verdict::Fail);
        assert!(sec.databases[1].failing_set.is_some());

        let rewired = faults::rewire_side_information(&p).unwrap();
        let dec = audit_decodability(&rewired, 5, 1).unwrap();
        assert_eq!(dec.verdict, Verdict::Fail);
        assert!(dec.first_failure.unwrap().contains("cannot be resolved"));

        let g = p.group_sequence().unwrap();
        let opts = BuildOptions {
            skip_message_symmetry: true,
            ..Default::default()
        };
        let priv_report = audit_privacy(&g, &p.meta.mu, 7, opts).unwrap();
        assert_eq!(priv_report.verdict, Verdict::Fail);
    }

    #[test]
    fn zero_mu_security_is_vacuous() {
        let g = GroupSequence::new(2, 2, vec![2, 2]).unwrap();
        let p = build_plan(&g, &EavesdropProfile::zeros(2), 1, 0).unwrap();
        let sec = audit_security(&p, 10).unwrap();
        assert!(sec.verdict.passed());
        assert!(sec.databases.iter().all(|d| d.tested_sets == 0));
        let store = MessageStore::for_plan(&p, 0).unwrap();
        assert!(run_retrieval(&p, &store, 0).unwrap().correct);
    }

    #[test]
    fn single_message_privacy_is_trivial() {
        let g = GroupSequence::new(1, 2, vec![2]).unwrap();
        let mu = EavesdropProfile::new(vec![rat(1, 2), rat(1, 2)]).unwrap();
        assert!(audit_privacy(&g, &mu, 0, BuildOptions::default()).unwrap().verdict.passed());
    }

    #[test]
    fn tiny_leakage_oracle() {
        let g = GroupSequence::new(2, 2, vec![1, 2]).unwrap();
        let mu = EavesdropProfile::new(vec![rat(1, 2), rat(1, 2)]).unwrap();
        let opts = BuildOptions {
            field_q: Some(5),
            ..Default::default()
        };
        let p = planner::build_plan_with(&g, &mu, 0, 3, opts).unwrap();
        assert_eq!(p.meta.t, vec![4, 2]);
        let r = leakage_oracle(&p, 10_000_000).unwrap();
        assert!(r.verdict.passed(), "{r:?}");
        let short = faults::short_key(&p, 0).unwrap();
        assert_eq!(leakage_oracle(&short, 10_000_000).unwrap().verdict, Verdict::Fail);
    }
}
