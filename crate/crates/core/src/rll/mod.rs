//! Run-length-limited line codes: Manchester, 4B6B and 8B10B.
//!
//! Each scheme has a fixed data-rate efficiency, a start-frame (SF) preamble
//! chosen so that it never appears inside coded data, and a codebook. The
//! 4B6B and 8B10B codebooks are read from the text tables in `data/`.

mod codebook;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chips::Chip;
use crate::scalar::Scalar;

use codebook::{chips_value, eight_b_ten_b, four_b_six_b};
pub use codebook::{parse_table, TableRow};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RllError {
    #[error("{scheme} payload of {len} bits is not a multiple of the {block_bits}-bit block size")]
    LengthNotMultiple {
        scheme: RllScheme,
        block_bits: usize,
        len: usize,
    },
    #[error("{scheme} chip count {len} is not a multiple of the {codeword_chips}-chip codeword")]
    ChipCountNotMultiple {
        scheme: RllScheme,
        codeword_chips: usize,
        len: usize,
    },
    #[error("{scheme}: invalid codeword at symbol {position}")]
    InvalidCodeword { scheme: RllScheme, position: usize },
    #[error("bit value {value} at index {index} is not 0 or 1")]
    NotBinary { index: usize, value: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RllScheme {
    #[serde(rename = "manchester")]
    Manchester,
    #[serde(rename = "4b6b")]
    FourB6B,
    #[serde(rename = "8b10b")]
    EightB10B,
}

const MANCHESTER_SF: [Chip; 6] = [0, 1, 1, 1, 0, 0];
const FOUR_B_SIX_B_SF: [Chip; 10] = [0, 0, 1, 1, 1, 1, 1, 0, 0, 0];
const EIGHT_B_TEN_B_SF: [Chip; 19] = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];

impl RllScheme {
    pub const ALL: [RllScheme; 3] = [
        RllScheme::Manchester,
        RllScheme::FourB6B,
        RllScheme::EightB10B,
    ];

    /// Data bits per codeword.
    pub const fn block_bits(self) -> usize {
        match self {
            RllScheme::Manchester => 1,
            RllScheme::FourB6B => 4,
            RllScheme::EightB10B => 8,
        }
    }

    /// Chips per codeword.
    pub const fn codeword_chips(self) -> usize {
        match self {
            RllScheme::Manchester => 2,
            RllScheme::FourB6B => 6,
            RllScheme::EightB10B => 10,
        }
    }

    /// Data-rate efficiency η = data bits / chips.
    pub fn efficiency<T: Scalar>(self) -> T {
        T::from_ratio(self.block_bits() as i64, self.codeword_chips() as i64)
    }

    /// Start-frame chip pattern.
    pub fn preamble(self) -> &'static [Chip] {
        match self {
            RllScheme::Manchester => &MANCHESTER_SF,
            RllScheme::FourB6B => &FOUR_B_SIX_B_SF,
            RllScheme::EightB10B => &EIGHT_B_TEN_B_SF,
        }
    }

    /// Largest |ones - zeros| over a whole encoded stream.
    pub const fn disparity_bound(self) -> usize {
        match self {
            RllScheme::Manchester | RllScheme::FourB6B => 0,
            RllScheme::EightB10B => 2,
        }
    }

    /// Longest run of identical chips inside concatenated codewords.
    pub const fn max_data_run(self) -> usize {
        match self {
            RllScheme::Manchester => 2,
            RllScheme::FourB6B => 4,
            RllScheme::EightB10B => 5,
        }
    }

    pub fn encoded_chips(self, payload_bits: usize) -> usize {
        payload_bits / self.block_bits() * self.codeword_chips()
    }

    pub const fn name(self) -> &'static str {
        match self {
            RllScheme::Manchester => "manchester",
            RllScheme::FourB6B => "4b6b",
            RllScheme::EightB10B => "8b10b",
        }
    }
}

impl fmt::Display for RllScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RllScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "manchester" => Ok(RllScheme::Manchester),
            "4b6b" => Ok(RllScheme::FourB6B),
            "8b10b" => Ok(RllScheme::EightB10B),
            other => Err(format!(
                "unknown RLL scheme {other:?} (expected manchester, 4b6b or 8b10b)"
            )),
        }
    }
}

pub fn efficiency<T: Scalar>(scheme: RllScheme) -> T {
    scheme.efficiency()
}

pub fn preamble(scheme: RllScheme) -> &'static [Chip] {
    scheme.preamble()
}

/// Manchester symbol for one bit: 1 → `10`, 0 → `01`.
#[inline]
pub const fn manchester_pair(bit: u8) -> [Chip; 2] {
    if bit == 1 {
        [1, 0]
    } else {
        [0, 1]
    }
}

/// Inverse of [`manchester_pair`]; `None` for `00` and `11`.
#[inline]
pub fn manchester_bit(pair: &[Chip]) -> Option<u8> {
    match pair {
        [1, 0] => Some(1),
        [0, 1] => Some(0),
        _ => None,
    }
}

fn check_binary(bits: &[u8]) -> Result<(), RllError> {
    match bits.iter().position(|&b| b > 1) {
        Some(index) => Err(RllError::NotBinary {
            index,
            value: bits[index],
        }),
        None => Ok(()),
    }
}

fn block_value(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn push_value_bits(value: u8, width: usize, out: &mut Vec<u8>) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1);
    }
}

/// Stateful 8B10B encoder tracking running disparity (starts at RD-).
#[derive(Debug, Clone, Copy, Default)]
pub struct EightB10BEncoder {
    rd_positive: bool,
}

impl EightB10BEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn running_disparity_positive(&self) -> bool {
        self.rd_positive
    }

    pub fn encode_byte(&mut self, byte: u8, out: &mut Vec<Chip>) {
        let t = eight_b_ten_b();
        let low = (byte & 0x1f) as usize;
        let high = (byte >> 5) as usize;

        let six = &t.six[low][self.rd_positive as usize];
        out.extend_from_slice(six);
        if disparity(six) != 0 {
            self.rd_positive = !self.rd_positive;
        }

        let use_alt = high == 7
            && ((!self.rd_positive && matches!(low, 17 | 18 | 20))
                || (self.rd_positive && matches!(low, 11 | 13 | 14)));
        let four = if use_alt {
            &t.four_alt7[self.rd_positive as usize]
        } else {
            &t.four[high][self.rd_positive as usize]
        };
        out.extend_from_slice(four);
        if disparity(four) != 0 {
            self.rd_positive = !self.rd_positive;
        }
    }
}

fn disparity(chips: &[Chip]) -> i32 {
    chips.iter().map(|&c| if c == 1 { 1 } else { -1 }).sum()
}

/// RLL-encode a payload. Bits are grouped into blocks most significant bit
/// first.
pub fn encode_rll(bits: &[u8], scheme: RllScheme) -> Result<Vec<Chip>, RllError> {
    check_binary(bits)?;
    let block_bits = scheme.block_bits();
    if !bits.len().is_multiple_of(block_bits) {
        return Err(RllError::LengthNotMultiple {
            scheme,
            block_bits,
            len: bits.len(),
        });
    }
    let mut out = Vec::with_capacity(scheme.encoded_chips(bits.len()));
    match scheme {
        RllScheme::Manchester => {
            for &b in bits {
                out.extend_from_slice(&manchester_pair(b));
            }
        }
        RllScheme::FourB6B => {
            let t = four_b_six_b();
            for block in bits.chunks(4) {
                out.extend_from_slice(&t.encode[block_value(block)]);
            }
        }
        RllScheme::EightB10B => {
            let mut enc = EightB10BEncoder::new();
            for block in bits.chunks(8) {
                enc.encode_byte(block_value(block) as u8, &mut out);
            }
        }
    }
    Ok(out)
}

/// Decode a single codeword into its data bits, appending to `out`.
/// Returns `false` when the chips match no codebook entry.
pub fn decode_codeword(scheme: RllScheme, codeword: &[Chip], out: &mut Vec<u8>) -> bool {
    debug_assert_eq!(codeword.len(), scheme.codeword_chips());
    if codeword.iter().any(|&c| c > 1) {
        return false;
    }
    match scheme {
        RllScheme::Manchester => match manchester_bit(codeword) {
            Some(b) => {
                out.push(b);
                true
            }
            None => false,
        },
        RllScheme::FourB6B => match four_b_six_b().decode[chips_value(codeword)] {
            Some(nibble) => {
                push_value_bits(nibble, 4, out);
                true
            }
            None => false,
        },
        RllScheme::EightB10B => {
            let t = eight_b_ten_b();
            match (
                t.decode6[chips_value(&codeword[..6])],
                t.decode4[chips_value(&codeword[6..])],
            ) {
                (Some(low), Some(high)) => {
                    push_value_bits((high << 5) | low, 8, out);
                    true
                }
                _ => false,
            }
        }
    }
}

/// Inverse of [`encode_rll`]. Running disparity is not policed on decode; any
/// codeword from either disparity column is accepted.
pub fn decode_rll(chips: &[Chip], scheme: RllScheme) -> Result<Vec<u8>, RllError> {
    let cw = scheme.codeword_chips();
    if !chips.len().is_multiple_of(cw) {
        return Err(RllError::ChipCountNotMultiple {
            scheme,
            codeword_chips: cw,
            len: chips.len(),
        });
    }
    let mut out = Vec::with_capacity(chips.len() / cw * scheme.block_bits());
    for (position, block) in chips.chunks(cw).enumerate() {
        if !decode_codeword(scheme, block, &mut out) {
            return Err(RllError::InvalidCodeword { scheme, position });
        }
    }
    Ok(out)
}

/// All codewords a scheme can emit (both disparity columns for 8B10B).
pub fn all_codewords(scheme: RllScheme) -> Vec<Vec<Chip>> {
    match scheme {
        RllScheme::Manchester => vec![manchester_pair(0).to_vec(), manchester_pair(1).to_vec()],
        RllScheme::FourB6B => four_b_six_b().encode.iter().map(|c| c.to_vec()).collect(),
        RllScheme::EightB10B => {
            let mut set = std::collections::BTreeSet::new();
            for byte in 0..=255u8 {
                for rd_positive in [false, true] {
                    let mut enc = EightB10BEncoder { rd_positive };
                    let mut out = Vec::new();
                    enc.encode_byte(byte, &mut out);
                    set.insert(out);
                }
            }
            set.into_iter().collect()
        }
    }
}

/// Positions where `pattern` occurs exactly in `haystack`.
pub fn find_pattern(haystack: &[Chip], pattern: &[Chip]) -> Vec<usize> {
    if pattern.is_empty() || haystack.len() < pattern.len() {
        return Vec::new();
    }
    haystack
        .windows(pattern.len())
        .enumerate()
        .filter(|(_, w)| *w == pattern)
        .map(|(i, _)| i)
        .collect()
}
