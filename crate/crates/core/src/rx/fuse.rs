//! Grouping by asynchronous-bit runs, fragment fusion and majority voting.

use serde::{Deserialize, Serialize};

use super::decode::{DecodedPart, Direction};
use super::RxError;
use crate::frame::AbState;

/// Prefix and suffix overlaid into one payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fused {
    pub bits: Vec<u8>,
    /// The overlap disagreed; the prefix was kept there.
    pub flagged: bool,
    pub overlap: usize,
}

/// Overlay a payload prefix and suffix. Where they overlap and disagree the
/// prefix (forward) value is kept and the result is flagged.
pub fn fuse_pair(prefix: &[u8], suffix: &[u8], payload_bits: usize) -> Result<Fused, RxError> {
    if prefix.len() + suffix.len() < payload_bits
        || prefix.len() > payload_bits
        || suffix.len() > payload_bits
    {
        return Err(RxError::UnfusablePair {
            prefix: prefix.len(),
            suffix: suffix.len(),
            payload_bits,
        });
    }
    let start = payload_bits - suffix.len();
    let mut bits = prefix.to_vec();
    let mut flagged = false;
    for (i, &b) in suffix.iter().enumerate() {
        let pos = start + i;
        if pos < prefix.len() {
            flagged |= prefix[pos] != b;
        } else {
            bits.push(b);
        }
    }
    Ok(Fused {
        bits,
        flagged,
        overlap: prefix.len() - start.min(prefix.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote {
    pub bits: Vec<Option<u8>>,
    /// Positions decided by the tie rule.
    pub ties: usize,
    /// Positions where samples disagreed.
    pub disagreements: usize,
}

/// Per-position majority over partial samples. Ties go to the earliest
/// sample covering the position.
pub fn majority_vote(samples: &[Vec<Option<u8>>]) -> Vote {
    let len = samples.iter().map(Vec::len).max().unwrap_or(0);
    let mut bits = Vec::with_capacity(len);
    let (mut ties, mut disagreements) = (0, 0);
    for pos in 0..len {
        let mut counts = [0usize; 2];
        let mut first = None;
        for s in samples {
            if let Some(Some(b)) = s.get(pos) {
                counts[*b as usize] += 1;
                first.get_or_insert(*b);
            }
        }
        if counts[0] > 0 && counts[1] > 0 {
            disagreements += 1;
        }
        bits.push(match counts[0].cmp(&counts[1]) {
            std::cmp::Ordering::Greater => Some(0),
            std::cmp::Ordering::Less => Some(1),
            std::cmp::Ordering::Equal => {
                if first.is_some() {
                    ties += 1;
                }
                first
            }
        });
    }
    Vote {
        bits,
        ties,
        disagreements,
    }
}

/// Payload recovered from one group of parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveredPayload {
    pub ab_state: AbState,
    pub bits: Vec<u8>,
    pub first_frame: usize,
    pub last_frame: usize,
    pub samples: usize,
    /// No single part held the whole payload.
    pub fused: bool,
    /// Disagreeing samples or a tie decided some position.
    pub flagged: bool,
}

/// Split a frame-ordered part sequence into groups believed to come from one
/// packet: runs of equal Ab state, further split where complete payloads from
/// different frames disagree.
pub fn group_parts(parts: &[DecodedPart]) -> Vec<Vec<DecodedPart>> {
    let mut groups: Vec<Vec<DecodedPart>> = Vec::new();
    for part in parts {
        let same_run = groups
            .last()
            .is_some_and(|g| g[0].ab_state == part.ab_state);
        let conflict = same_run
            && part.complete
            && groups
                .last()
                .expect("same_run implies a group")
                .iter()
                .any(|q| {
                    q.complete && q.frame_index != part.frame_index && q.fragment != part.fragment
                });
        if same_run && !conflict {
            groups.last_mut().expect("checked").push(part.clone());
        } else {
            groups.push(vec![part.clone()]);
        }
    }
    groups
}

/// Recover a group's payload. Without fusion only complete parts count.
pub fn recover_group(
    group: &[DecodedPart],
    payload_bits: usize,
    fusion: bool,
) -> Option<RecoveredPayload> {
    let mut used: Vec<&DecodedPart> = group.iter().filter(|p| fusion || p.complete).collect();
    if used.is_empty() {
        return None;
    }
    // earliest frame first, forward before backward within a frame
    used.sort_by_key(|p| (p.frame_index, p.direction != Direction::Forward));
    let samples: Vec<Vec<Option<u8>>> = used.iter().map(|p| p.positioned(payload_bits)).collect();
    let vote = majority_vote(&samples);
    let bits: Option<Vec<u8>> = vote.bits.into_iter().collect();
    let bits = bits.filter(|b| b.len() == payload_bits)?;
    Some(RecoveredPayload {
        ab_state: group[0].ab_state,
        bits,
        first_frame: group
            .iter()
            .map(|p| p.frame_index)
            .min()
            .expect("non-empty"),
        last_frame: group
            .iter()
            .map(|p| p.frame_index)
            .max()
            .expect("non-empty"),
        samples: used.len(),
        fused: !used.iter().any(|p| p.complete),
        flagged: vote.ties > 0 || vote.disagreements > 0,
    })
}
