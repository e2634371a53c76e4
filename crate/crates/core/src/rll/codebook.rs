//! Codebooks loaded from the plain-text tables under `data/`.

use std::sync::OnceLock;

use crate::chips::Chip;

pub(crate) const FOUR_B_SIX_B_TABLE: &str = include_str!("../../data/4b6b.txt");
pub(crate) const FIVE_B_SIX_B_TABLE: &str = include_str!("../../data/8b10b_5b6b.txt");
pub(crate) const THREE_B_FOUR_B_TABLE: &str = include_str!("../../data/8b10b_3b4b.txt");

/// One parsed table line: label (if any), input bits, and one or two codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub label: Option<String>,
    pub input: Vec<u8>,
    pub codewords: Vec<Vec<Chip>>,
}

/// Parse a codebook table. Lines starting with `#` and blank lines are skipped.
/// Fields are whitespace separated; a leading field starting with `D.` is a
/// label, the next field is the input bits, the rest are codewords.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split_whitespace().collect();
        let label = if fields.first().is_some_and(|f| f.starts_with("D.")) {
            Some(fields.remove(0).to_string())
        } else {
            None
        };
        if fields.len() < 2 {
            return Err(format!("line {}: expected input and codeword", lineno + 1));
        }
        let bits = |s: &str| -> Result<Vec<u8>, String> {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(format!("line {}: bad digit {other:?}", lineno + 1)),
                })
                .collect()
        };
        let input = bits(fields[0])?;
        let codewords = fields[1..]
            .iter()
            .map(|f| bits(f))
            .collect::<Result<_, _>>()?;
        rows.push(TableRow {
            label,
            input,
            codewords,
        });
    }
    Ok(rows)
}

fn bits_value(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

pub(crate) fn chips_value(chips: &[Chip]) -> usize {
    bits_value(chips)
}

pub(crate) struct FourBSixB {
    pub encode: [[Chip; 6]; 16],
    pub decode: [Option<u8>; 64],
}

pub(crate) struct EightBTenB {
    /// `[value][rd]` with rd 0 = RD-, 1 = RD+; abcdei order.
    pub six: [[[Chip; 6]; 2]; 32],
    /// `[value][rd]`, fghj order; index 7 is the primary D.x.P7.
    pub four: [[[Chip; 4]; 2]; 8],
    pub four_alt7: [[Chip; 4]; 2],
    pub decode6: [Option<u8>; 64],
    pub decode4: [Option<u8>; 16],
}

fn to_array<const N: usize>(v: &[Chip]) -> [Chip; N] {
    v.try_into().expect("codeword width checked by caller")
}

fn load_four_b_six_b() -> FourBSixB {
    let rows = parse_table(FOUR_B_SIX_B_TABLE).expect("4b6b table parses");
    assert_eq!(rows.len(), 16, "4b6b table must list 16 nibbles");
    let mut encode = [[0; 6]; 16];
    let mut decode = [None; 64];
    for row in rows {
        assert!(row.input.len() == 4 && row.codewords.len() == 1 && row.codewords[0].len() == 6);
        let nibble = bits_value(&row.input);
        encode[nibble] = to_array(&row.codewords[0]);
        let slot = &mut decode[chips_value(&row.codewords[0])];
        assert!(slot.is_none(), "duplicate 4b6b codeword");
        *slot = Some(nibble as u8);
    }
    FourBSixB { encode, decode }
}

fn load_eight_b_ten_b() -> EightBTenB {
    let six_rows = parse_table(FIVE_B_SIX_B_TABLE).expect("5b6b table parses");
    let four_rows = parse_table(THREE_B_FOUR_B_TABLE).expect("3b4b table parses");
    assert_eq!(six_rows.len(), 32);
    assert_eq!(four_rows.len(), 9);

    let mut six = [[[0; 6]; 2]; 32];
    let mut decode6 = [None; 64];
    for row in six_rows {
        assert!(row.input.len() == 5 && row.codewords.len() == 2);
        let v = bits_value(&row.input);
        for (rd, cw) in row.codewords.iter().enumerate() {
            six[v][rd] = to_array(cw);
            decode6[chips_value(cw)] = Some(v as u8);
        }
    }

    let mut four = [[[0; 4]; 2]; 8];
    let mut four_alt7 = [[0; 4]; 2];
    let mut decode4 = [None; 16];
    for row in four_rows {
        assert!(row.input.len() == 3 && row.codewords.len() == 2);
        let v = bits_value(&row.input);
        let alt = row.label.as_deref() == Some("D.x.A7");
        for (rd, cw) in row.codewords.iter().enumerate() {
            if alt {
                four_alt7[rd] = to_array(cw);
            } else {
                four[v][rd] = to_array(cw);
            }
            decode4[chips_value(cw)] = Some(v as u8);
        }
    }
    EightBTenB {
        six,
        four,
        four_alt7,
        decode6,
        decode4,
    }
}

pub(crate) fn four_b_six_b() -> &'static FourBSixB {
    static TABLE: OnceLock<FourBSixB> = OnceLock::new();
    TABLE.get_or_init(load_four_b_six_b)
}

pub(crate) fn eight_b_ten_b() -> &'static EightBTenB {
    static TABLE: OnceLock<EightBTenB> = OnceLock::new();
    TABLE.get_or_init(load_eight_b_ten_b)
}
