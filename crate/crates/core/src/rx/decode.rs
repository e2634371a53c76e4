//! Per-frame forward/backward decoding around detected start frames.

use serde::{Deserialize, Serialize};

use crate::chips::Chip;
use crate::frame::{AbState, FrameStructure};
use crate::rll::{decode_codeword, find_pattern, RllScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// A payload fragment read from one frame.
///
/// Forward fragments are payload prefixes, backward fragments payload suffixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedPart {
    pub frame_index: usize,
    pub direction: Direction,
    pub ab_state: AbState,
    pub fragment: Vec<u8>,
    pub complete: bool,
    /// Chip offset of the SF this part was read from.
    pub sf_chip: usize,
    /// Reading stopped at an invalid codeword.
    pub truncated: bool,
}

impl DecodedPart {
    /// Fragment placed in payload coordinates.
    pub fn positioned(&self, payload_bits: usize) -> Vec<Option<u8>> {
        let mut out = vec![None; payload_bits];
        let k = self.fragment.len().min(payload_bits);
        match self.direction {
            Direction::Forward => {
                for (o, &b) in out.iter_mut().zip(&self.fragment[..k]) {
                    *o = Some(b);
                }
            }
            Direction::Backward => {
                for (o, &b) in out[payload_bits - k..]
                    .iter_mut()
                    .zip(&self.fragment[self.fragment.len() - k..])
                {
                    *o = Some(b);
                }
            }
        }
        out
    }
}

/// Exact-match preamble positions.
pub fn find_sf(chips: &[Chip], scheme: RllScheme) -> Vec<usize> {
    find_pattern(chips, scheme.preamble())
}

/// Read payload fragments around every SF in one frame's chips.
///
/// Forward parts follow each SF. A backward part is read only before the
/// first SF; before later SFs it would repeat the preceding forward part.
pub fn decode_frame(
    chips: &[Chip],
    frame_index: usize,
    scheme: RllScheme,
    version: FrameStructure,
    payload_bits: usize,
) -> Vec<DecodedPart> {
    let positions = find_sf(chips, scheme);
    let mut parts = Vec::new();
    if let Some(&first) = positions.first() {
        if let Some(p) = read_backward(chips, first, frame_index, scheme, version, payload_bits) {
            parts.push(p);
        }
    }
    for &p in &positions {
        if let Some(p) = read_forward(chips, p, frame_index, scheme, version, payload_bits) {
            parts.push(p);
        }
    }
    parts
}

fn codewords_for(scheme: RllScheme, payload_bits: usize) -> usize {
    payload_bits / scheme.block_bits()
}

fn read_forward(
    chips: &[Chip],
    sf: usize,
    frame_index: usize,
    scheme: RllScheme,
    version: FrameStructure,
    payload_bits: usize,
) -> Option<DecodedPart> {
    let ab_len = version.ab_chips();
    let cw = scheme.codeword_chips();
    let ab_at = sf + scheme.preamble().len();
    let ab = AbState::from_chips(chips.get(ab_at..ab_at + ab_len)?, version)?;
    let data_at = ab_at + ab_len;
    let mut fragment = Vec::with_capacity(payload_bits);
    let mut truncated = false;
    for k in 0..codewords_for(scheme, payload_bits) {
        let Some(word) = chips.get(data_at + k * cw..data_at + (k + 1) * cw) else {
            break;
        };
        if !decode_codeword(scheme, word, &mut fragment) {
            truncated = true;
            break;
        }
    }
    fragment.truncate(payload_bits);
    if fragment.is_empty() {
        return None;
    }
    let complete = fragment.len() == payload_bits;
    if complete {
        let tail = data_at + codewords_for(scheme, payload_bits) * cw;
        if let Some(t) = chips.get(tail..tail + ab_len) {
            if AbState::from_chips(t, version) != Some(ab) {
                return None;
            }
        }
    }
    Some(DecodedPart {
        frame_index,
        direction: Direction::Forward,
        ab_state: ab,
        fragment,
        complete,
        sf_chip: sf,
        truncated,
    })
}

fn read_backward(
    chips: &[Chip],
    sf: usize,
    frame_index: usize,
    scheme: RllScheme,
    version: FrameStructure,
    payload_bits: usize,
) -> Option<DecodedPart> {
    let ab_len = version.ab_chips();
    let cw = scheme.codeword_chips();
    let end = sf.checked_sub(ab_len)?;
    let ab = AbState::from_chips(&chips[end..sf], version)?;
    let n_words = codewords_for(scheme, payload_bits);
    let mut words: Vec<Vec<u8>> = Vec::new();
    let mut truncated = false;
    for k in 0..n_words {
        let Some(start) = end.checked_sub((k + 1) * cw) else {
            break;
        };
        let mut bits = Vec::with_capacity(scheme.block_bits());
        if !decode_codeword(scheme, &chips[start..start + cw], &mut bits) {
            truncated = true;
            break;
        }
        words.push(bits);
    }
    let fragment: Vec<u8> = words.iter().rev().flatten().copied().collect();
    if fragment.is_empty() {
        return None;
    }
    let complete = words.len() == n_words;
    if complete {
        let head = end - n_words * cw;
        if let Some(s) = head.checked_sub(ab_len) {
            if AbState::from_chips(&chips[s..head], version) != Some(ab) {
                return None;
            }
        }
    }
    Some(DecodedPart {
        frame_index,
        direction: Direction::Backward,
        ab_state: ab,
        fragment,
        complete,
        sf_chip: sf,
        truncated,
    })
}
