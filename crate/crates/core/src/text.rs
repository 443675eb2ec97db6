//! Character classification shared by the phonology and control modules.

/// Assigned CJK unified ideograph ranges (URO and extensions A through J,
/// Unicode 17).
/// Compatibility ideographs are not included.
const CJK_UNIFIED: &[(u32, u32)] = &[
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0x20000, 0x2A6DF),
    (0x2A700, 0x2B81D),
    (0x2B820, 0x2CEAD),
    (0x2CEB0, 0x2EBE0),
    (0x2EBF0, 0x2EE5D),
    (0x30000, 0x3134A),
    (0x31350, 0x33479),
];

pub fn is_cjk_ideograph(c: char) -> bool {
    let cp = c as u32;
    CJK_UNIFIED.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Counts CJK unified ideographs; punctuation, whitespace, Latin letters and
/// digits are not counted.
pub fn count_cjk(text: &str) -> usize {
    text.chars().filter(|&c| is_cjk_ideograph(c)).count()
}
