use std::collections::BTreeMap;

use serde::Serialize;

use super::external::VoteTable;
use crate::error::{invalid, Result};
use crate::ingest::Label;

/// A single model's hard vote: the larger probability, CN on a tie.
pub fn hard_vote(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Ad
    } else {
        Label::Cn
    }
}

/// How a pooled vote was decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteOutcome {
    pub label: Label,
    pub votes: [usize; 2],
    /// Mean of the pooled probability vectors.
    pub mean_probs: [f64; 2],
}

/// Sum of `xs` that does not depend on the order they arrive in.
fn order_free_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

/// Majority of hard votes; a count tie goes to the class with the larger
/// mean probability and a remaining tie to CN.
pub fn vote(probs: &[[f64; 2]]) -> Result<VoteOutcome> {
    if probs.is_empty() {
        return Err(invalid!("majority vote needs at least one vote"));
    }
    let mut votes = [0usize; 2];
    for &p in probs {
        votes[hard_vote(p).index()] += 1;
    }
    let n = probs.len() as f64;
    let mean_probs = [0, 1].map(|c| order_free_sum(probs.iter().map(|p| p[c]).collect()) / n);
    let label = if votes[1] != votes[0] {
        if votes[1] > votes[0] {
            Label::Ad
        } else {
            Label::Cn
        }
    } else {
        hard_vote(mean_probs)
    };
    Ok(VoteOutcome {
        label,
        votes,
        mean_probs,
    })
}

/// Votes every speaker in the table independently.
pub fn majority_vote(table: &VoteTable) -> Result<BTreeMap<String, VoteOutcome>> {
    table
        .iter()
        .map(|(s, v)| {
            Ok((
                s.clone(),
                vote(v).map_err(|e| invalid!("speaker {s}: {e}"))?,
            ))
        })
        .collect()
}
