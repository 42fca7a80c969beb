//! Deliberately broken plans for exercising the audits.

use std::collections::HashSet;

use super::{QueryKind, QueryPlan, Term};

/// Turns every undesired-only sum of round 2 or later into a pure-noise
/// download, so stages no longer cover all message subsets.
pub fn drop_completion_sums(plan: &mut QueryPlan) {
    for d in &mut plan.databases {
        for q in &mut d.queries {
            if q.kind == QueryKind::Undesired && q.round >= 2 {
                q.terms.clear();
                q.kind = QueryKind::PureNoise;
                q.round = 0;
            }
        }
    }
}

/// Shrinks the key of database `db` by one symbol while keeping its answer
/// length, so `μ_n t_n` observations exceed the key dimension.
pub fn short_key(plan: &QueryPlan, db: usize) -> Option<QueryPlan> {
    let mut p = plan.clone();
    let k = p.meta.key_len.get_mut(db)?;
    *k = k.checked_sub(1)?;
    Some(p)
}

/// Redirects the side information of the first desired query that uses a
/// single undesired symbol to a symbol the user never downloads alone.
pub fn rewire_side_information(plan: &QueryPlan) -> Option<QueryPlan> {
    let desired = plan.meta.desired;
    let singles: HashSet<Term> = plan
        .databases
        .iter()
        .flat_map(|d| d.queries.iter())
        .filter(|q| q.kind == QueryKind::Undesired && q.terms.len() == 1)
        .map(|q| q.terms[0])
        .collect();
    let mut p = plan.clone();
    for db in 0..p.databases.len() {
        let mut order: Vec<usize> = (0..p.databases[db].queries.len()).collect();
        order.sort_by_key(|&i| p.databases[db].queries[i].seq);
        for i in order {
            let q = &p.databases[db].queries[i];
            if q.kind != QueryKind::Desired || q.terms.len() != 2 {
                continue;
            }
            let side = *q.terms.iter().find(|t| t.message != desired)?;
            let used: HashSet<Term> = p.databases[db]
                .queries
                .iter()
                .flat_map(|q| q.terms.iter().copied())
                .collect();
            let candidates = (0..p.meta.message_len as usize)
                .map(|slot| Term {
                    message: side.message,
                    slot,
                })
                .filter(|t| *t != side && !singles.contains(t));
            let replacement = candidates
                .clone()
                .find(|t| !used.contains(t))
                .or_else(|| candidates.clone().next())?;
            let q = &mut p.databases[db].queries[i];
            for t in &mut q.terms {
                if *t == side {
                    *t = replacement;
                }
            }
            return Some(p);
        }
    }
    None
}
