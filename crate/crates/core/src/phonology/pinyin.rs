//! Numbered-pinyin syllable parsing (`guang1`, `lv4`, `le5`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PhonologyError;

/// Mandarin lexical tone. `Neutral` is the unstressed fifth tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tone {
    T1,
    T2,
    T3,
    T4,
    #[serde(rename = "N", alias = "T5", alias = "T0")]
    Neutral,
}

impl Tone {
    pub const LEXICAL: [Tone; 4] = [Tone::T1, Tone::T2, Tone::T3, Tone::T4];

    pub fn from_digit(d: u8) -> Option<Tone> {
        match d {
            1 => Some(Tone::T1),
            2 => Some(Tone::T2),
            3 => Some(Tone::T3),
            4 => Some(Tone::T4),
            0 | 5 => Some(Tone::Neutral),
            _ => None,
        }
    }

    pub fn digit(self) -> u8 {
        match self {
            Tone::T1 => 1,
            Tone::T2 => 2,
            Tone::T3 => 3,
            Tone::T4 => 4,
            Tone::Neutral => 5,
        }
    }

    pub fn is_neutral(self) -> bool {
        self == Tone::Neutral
    }
}

impl fmt::Display for Tone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tone::Neutral => f.write_str("N"),
            t => write!(f, "T{}", t.digit()),
        }
    }
}

impl FromStr for Tone {
    type Err = PhonologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T1" | "1" => Ok(Tone::T1),
            "T2" | "2" => Ok(Tone::T2),
            "T3" | "3" => Ok(Tone::T3),
            "T4" | "4" => Ok(Tone::T4),
            "N" | "T5" | "T0" | "5" | "0" => Ok(Tone::Neutral),
            _ => Err(PhonologyError::Tone(s.to_string())),
        }
    }
}

/// Standard pinyin final inventory, in normalized spelling (`ü` kept, `iou`,
/// `uei`, `uen` contracted to `iu`, `ui`, `un`). The apical vowel of
/// `zhi`/`si` is spelled `i`.
pub const FINALS: &[&str] = &[
    "a", "o", "e", "ê", "er", "ai", "ei", "ao", "ou", "an", "en", "ang", "eng", "ong", "i", "ia",
    "io", "ie", "iao", "iu", "ian", "in", "iang", "ing", "iong", "u", "ua", "uo", "uai", "ui",
    "uan", "un", "uang", "ueng", "ü", "üe", "üan", "ün",
];

const INITIALS: &[&str] = &[
    "zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x", "r",
    "z", "c", "s",
];

/// One reading of a character: initial (possibly empty), final and tone.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pronunciation {
    initial: String,
    rime: String,
    tone: Tone,
}

impl Pronunciation {
    pub fn initial(&self) -> &str {
        &self.initial
    }

    /// The pinyin final.
    pub fn rime(&self) -> &str {
        &self.rime
    }

    pub fn tone(&self) -> Tone {
        self.tone
    }
}

impl fmt::Display for Pronunciation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.initial, self.rime, self.tone.digit())
    }
}

impl FromStr for Pronunciation {
    type Err = PhonologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_syllable(s)
    }
}

/// Parses one numbered-pinyin syllable. A trailing digit 1–4 is the tone,
/// 5, 0 or no digit is neutral. `v`, `u:` and `ü` are accepted for ü.
pub fn parse_syllable(raw: &str) -> Result<Pronunciation, PhonologyError> {
    let bad = || PhonologyError::Syllable(raw.to_string());
    let lower = raw.trim().to_lowercase();
    let (body, tone) = match lower.chars().last() {
        Some(c) if c.is_ascii_digit() => {
            let tone = Tone::from_digit(c as u8 - b'0').ok_or_else(bad)?;
            (&lower[..lower.len() - 1], tone)
        }
        Some(_) => (lower.as_str(), Tone::Neutral),
        None => return Err(bad()),
    };
    let body = body.replace("u:", "ü").replace('v', "ü");
    if body.is_empty() {
        return Err(bad());
    }

    let (initial, rest) = if let Some(r) = body.strip_prefix('y') {
        let rime = if r.starts_with('i') {
            r.to_string()
        } else if let Some(u) = r.strip_prefix('u').or_else(|| r.strip_prefix('ü')) {
            format!("ü{u}")
        } else if r == "ou" {
            "iu".to_string()
        } else {
            format!("i{r}")
        };
        (String::new(), rime)
    } else if let Some(r) = body.strip_prefix('w') {
        let rime = match r {
            "u" => "u".to_string(),
            "ei" => "ui".to_string(),
            "en" => "un".to_string(),
            _ => format!("u{r}"),
        };
        (String::new(), rime)
    } else {
        let init = INITIALS
            .iter()
            .find(|i| body.starts_with(**i) && body.len() > i.len())
            .copied()
            .unwrap_or("");
        let mut rime = body[init.len()..].to_string();
        if matches!(init, "j" | "q" | "x") && rime.starts_with('u') {
            rime = format!("ü{}", &rime[1..]);
        }
        if rime == "ue" {
            rime = "üe".to_string();
        }
        (init.to_string(), rime)
    };

    if !FINALS.contains(&rest.as_str()) {
        return Err(bad());
    }
    Ok(Pronunciation {
        initial,
        rime: rest,
        tone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> (String, String, Tone) {
        let p = parse_syllable(s).unwrap();
        (p.initial().into(), p.rime().into(), p.tone())
    }

    #[test]
    fn initials_and_finals() {
        assert_eq!(split("guang1"), ("g".into(), "uang".into(), Tone::T1));
        assert_eq!(split("xiang3"), ("x".into(), "iang".into(), Tone::T3));
        assert_eq!(split("shi1"), ("sh".into(), "i".into(), Tone::T1));
        assert_eq!(split("zhuang4"), ("zh".into(), "uang".into(), Tone::T4));
        assert_eq!(split("le5"), ("l".into(), "e".into(), Tone::Neutral));
        assert_eq!(split("de"), ("d".into(), "e".into(), Tone::Neutral));
        assert_eq!(split("er2"), ("".into(), "er".into(), Tone::T2));
        assert_eq!(split("ang2"), ("".into(), "ang".into(), Tone::T2));
    }

    #[test]
    fn y_w_and_umlaut_spellings() {
        assert_eq!(split("yi1").1, "i");
        assert_eq!(split("ying2").1, "ing");
        assert_eq!(split("ya4").1, "ia");
        assert_eq!(split("you3").1, "iu");
        assert_eq!(split("yong3").1, "iong");
        assert_eq!(split("yu2").1, "ü");
        assert_eq!(split("yuan2").1, "üan");
        assert_eq!(split("yue4").1, "üe");
        assert_eq!(split("yun2").1, "ün");
        assert_eq!(split("wu3").1, "u");
        assert_eq!(split("wei4").1, "ui");
        assert_eq!(split("wen2").1, "un");
        assert_eq!(split("weng1").1, "ueng");
        assert_eq!(split("ju1"), ("j".into(), "ü".into(), Tone::T1));
        assert_eq!(split("quan2").1, "üan");
        assert_eq!(split("lv4"), ("l".into(), "ü".into(), Tone::T4));
        assert_eq!(split("nu:3").1, "ü");
        assert_eq!(split("lüe4").1, "üe");
        assert_eq!(split("lve4").1, "üe");
        assert_eq!(split("nue4").1, "üe");
        assert_eq!(split("LV4").1, "ü");
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "7", "xyz1", "guang9", "zh1", "m2", "ng2", "hm"] {
            assert!(parse_syllable(s).is_err(), "{s}");
        }
    }

    #[test]
    fn display_round_trip() {
        for s in ["guang1", "shi1", "le5", "lü4", "er2"] {
            let p = parse_syllable(s).unwrap();
            assert_eq!(parse_syllable(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn tone_text_forms() {
        for t in [Tone::T1, Tone::T2, Tone::T3, Tone::T4, Tone::Neutral] {
            assert_eq!(t.to_string().parse::<Tone>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<Tone>(&json).unwrap(), t);
        }
        assert_eq!(serde_json::to_string(&Tone::Neutral).unwrap(), "\"N\"");
        assert!("T6".parse::<Tone>().is_err());
    }
}
