//! Markdown rendering of a plan, one column per active database.

use std::fmt;

use super::{Query, QueryPlan, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanTable {
    pub markdown: String,
}

impl fmt::Display for PlanTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.markdown)
    }
}

fn message_label(m: usize) -> String {
    if m < 20 {
        char::from(b'a' + m as u8).to_string()
    } else {
        format!("m{}_", m + 1)
    }
}

fn noise_label(db: usize) -> String {
    const LETTERS: [char; 6] = ['u', 'v', 'w', 'x', 'y', 'z'];
    match LETTERS.get(db) {
        Some(c) => c.to_string(),
        None => format!("k{}_", db + 1),
    }
}

fn term_label(t: &Term) -> String {
    format!("{}{}", message_label(t.message), t.slot + 1)
}

fn cell(q: &Query, db: usize) -> String {
    let noise = format!("{}{}", noise_label(db), q.noise_slot + 1);
    if q.is_pure_noise() {
        return noise;
    }
    let mut parts: Vec<String> = q.terms.iter().map(term_label).collect();
    parts.push(noise);
    parts.join("+")
}

/// Rows are grouped by repetition and round in construction order; the last
/// row lists each database's pure-noise downloads.
pub fn plan_to_table(plan: &QueryPlan) -> PlanTable {
    let columns: Vec<usize> = (0..plan.databases.len())
        .filter(|&db| !plan.databases[db].queries.is_empty())
        .collect();
    let sorted: Vec<Vec<&Query>> = columns
        .iter()
        .map(|&db| {
            let mut v: Vec<&Query> = plan.databases[db].queries.iter().collect();
            v.sort_by_key(|q| q.seq);
            v
        })
        .collect();
    let mut out = String::from("| rep | round |");
    for &db in &columns {
        out.push_str(&format!(" DB {} |", db + 1));
    }
    out.push_str("\n|---|---|");
    for _ in &columns {
        out.push_str("---|");
    }
    out.push('\n');
    for rep in 0..plan.meta.nu as usize {
        for round in 1..=plan.meta.messages {
            let cells: Vec<Vec<String>> = sorted
                .iter()
                .zip(&columns)
                .map(|(qs, &db)| {
                    qs.iter()
                        .filter(|q| !q.is_pure_noise() && q.repetition == rep && q.round == round)
                        .map(|q| cell(q, db))
                        .collect()
                })
                .collect();
            let height = cells.iter().map(Vec::len).max().unwrap_or(0);
            for line in 0..height {
                let (r, k) = if line == 0 {
                    ((rep + 1).to_string(), round.to_string())
                } else {
                    (String::new(), String::new())
                };
                out.push_str(&format!("| {r} | {k} |"));
                for c in &cells {
                    out.push_str(&format!(" {} |", c.get(line).map_or("", String::as_str)));
                }
                out.push('\n');
            }
        }
    }
    let noise: Vec<String> = sorted
        .iter()
        .zip(&columns)
        .map(|(qs, &db)| {
            qs.iter()
                .filter(|q| q.is_pure_noise())
                .map(|q| cell(q, db))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect();
    if noise.iter().any(|s| !s.is_empty()) {
        out.push_str("| noise | |");
        for s in noise {
            out.push_str(&format!(" {s} |"));
        }
        out.push('\n');
    }
    PlanTable { markdown: out }
}

#[cfg(test)]
mod tests {
    use super::super::build_plan;
    use super::*;
    use crate::ratio::rat;
    use crate::rates::{EavesdropProfile, GroupSequence};

    #[test]
    fn example_rendering() {
        let mu = EavesdropProfile::new(vec![rat(1, 4), rat(1, 2)]).unwrap();
        let g = GroupSequence::new(3, 2, vec![1, 2, 2]).unwrap();
        let t = plan_to_table(&build_plan(&g, &mu, 0, 7).unwrap()).markdown;
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "| rep | round | DB 1 | DB 2 |");
        // 3 repetitions × (3 + 3 + 1) lines, header, rule, noise row
        assert_eq!(lines.len(), 2 + 21 + 1);
        assert!(lines[2].starts_with("| 1 | 1 | a1+u"));
        assert!(lines[5].contains("a2+b1+v"));
        assert!(lines[8].contains("a4+b2+c2+u"));
        assert_eq!(lines.last().unwrap().matches('u').count(), 4);
        assert_eq!(lines.last().unwrap().matches('v').count(), 9);
    }

    #[test]
    fn trivial_plan_has_one_column() {
        let g = GroupSequence::new(2, 3, vec![1, 1]).unwrap();
        let t = plan_to_table(&build_plan(&g, &EavesdropProfile::zeros(3), 0, 0).unwrap()).markdown;
        assert_eq!(t.lines().next().unwrap(), "| rep | round | DB 1 |");
    }
}
