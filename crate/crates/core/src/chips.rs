//! Timed binary optical state sequences and their on-disk encodings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single OOK state: 1 = LED on, 0 = LED off.
pub type Chip = u8;

/// Magic prefix of the packed binary chip-stream format.
pub const PACKED_MAGIC: &[u8; 8] = b"OCCCHIP1";

#[derive(Debug, Error)]
pub enum ChipFormatError {
    #[error("chip value {value} at index {index} is not 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("unexpected character {found:?} at offset {offset} in ASCII chip data")]
    BadAscii { offset: usize, found: char },
    #[error("clock rate must be finite and positive, got {0}")]
    BadClock(f64),
    #[error("not a packed chip stream (bad magic)")]
    BadMagic,
    #[error("packed chip stream truncated: expected {expected} payload bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary chip sequence clocked at `clock_hz` chips per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipStream {
    chips: Vec<Chip>,
    clock_hz: f64,
}

impl ChipStream {
    pub fn new(chips: Vec<Chip>, clock_hz: f64) -> Result<Self, ChipFormatError> {
        if !(clock_hz.is_finite() && clock_hz > 0.0) {
            return Err(ChipFormatError::BadClock(clock_hz));
        }
        if let Some((index, &value)) = chips.iter().enumerate().find(|(_, &c)| c > 1) {
            return Err(ChipFormatError::NotBinary { index, value });
        }
        Ok(Self { chips, clock_hz })
    }

    pub fn chips(&self) -> &[Chip] {
        &self.chips
    }

    pub fn into_chips(self) -> Vec<Chip> {
        self.chips
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_hz
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chip_period_s(&self) -> f64 {
        1.0 / self.clock_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.chips.len() as f64 / self.clock_hz
    }

    /// Fraction of chips that are on.
    pub fn duty_cycle(&self) -> f64 {
        if self.chips.is_empty() {
            return 0.0;
        }
        self.ones() as f64 / self.chips.len() as f64
    }

    pub fn ones(&self) -> usize {
        self.chips.iter().filter(|&&c| c == 1).count()
    }

    pub fn to_ascii(&self) -> String {
        to_ascii(&self.chips)
    }

    pub fn from_ascii(text: &str, clock_hz: f64) -> Result<Self, ChipFormatError> {
        Self::new(parse_ascii(text)?, clock_hz)
    }

    /// Packed layout: magic, `clock_hz` as f64 LE, chip count as u64 LE,
    /// then the chips eight per byte, first chip in the most significant bit.
    pub fn write_packed<W: Write>(&self, mut w: W) -> Result<(), ChipFormatError> {
        w.write_all(PACKED_MAGIC)?;
        w.write_all(&self.clock_hz.to_le_bytes())?;
        w.write_all(&(self.chips.len() as u64).to_le_bytes())?;
        w.write_all(&pack_msb_first(&self.chips))?;
        Ok(())
    }

    pub fn read_packed<R: Read>(mut r: R) -> Result<Self, ChipFormatError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != PACKED_MAGIC {
            return Err(ChipFormatError::BadMagic);
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let clock_hz = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expected = count.div_ceil(8);
        if body.len() < expected {
            return Err(ChipFormatError::Truncated {
                expected,
                found: body.len(),
            });
        }
        Self::new(unpack_msb_first(&body, count), clock_hz)
    }
}

pub fn to_ascii(chips: &[Chip]) -> String {
    chips
        .iter()
        .map(|&c| if c == 0 { '0' } else { '1' })
        .collect()
}

/// Parse `0`/`1` characters; ASCII whitespace is ignored.
pub fn parse_ascii(text: &str) -> Result<Vec<Chip>, ChipFormatError> {
    let mut out = Vec::with_capacity(text.len());
    for (offset, ch) in text.char_indices() {
        match ch {
            '0' => out.push(0),
            '1' => out.push(1),
            c if c.is_ascii_whitespace() => {}
            found => return Err(ChipFormatError::BadAscii { offset, found }),
        }
    }
    Ok(out)
}

/// Pack binary values eight per byte, most significant bit first. The last
/// byte is zero-padded.
pub fn pack_msb_first(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        })
        .collect()
}

pub fn unpack_msb_first(bytes: &[u8], count: usize) -> Vec<u8> {
    (0..count)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect()
}

/// Expand bytes into bits, most significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    unpack_msb_first(bytes, bytes.len() * 8)
}
