//! The thirteen traditional rhyme categories over pinyin finals.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use super::lexicon::Lexicon;
use super::pinyin::FINALS;
use super::{DataFile, PhonologyError};

const BUNDLED_RHYMES: &str = include_str!("../../data/rhymes.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhymeClass {
    name: String,
    finals: BTreeSet<String>,
}

impl RhymeClass {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn finals(&self) -> &BTreeSet<String> {
        &self.finals
    }

    pub fn contains(&self, rime: &str) -> bool {
        self.finals.contains(rime)
    }
}

/// A partition of the final inventory into named classes.
#[derive(Debug, Clone)]
pub struct RhymeTable {
    classes: Vec<RhymeClass>,
    by_final: HashMap<String, usize>,
}

impl RhymeTable {
    /// Parses `class<TAB>final[,final…]` lines and checks that the classes
    /// partition [`FINALS`].
    pub fn parse(text: &str) -> Result<Self, PhonologyError> {
        let mut classes = Vec::new();
        let mut by_final = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim_end_matches('\r');
            if l.trim().is_empty() || l.starts_with('#') {
                continue;
            }
            let err = |msg: String| PhonologyError::Data {
                file: DataFile::Rhymes,
                line,
                msg,
            };
            let (name, finals) = l
                .split_once('\t')
                .ok_or_else(|| err("missing tab".into()))?;
            let name = name.trim();
            if name.is_empty() || classes.iter().any(|c: &RhymeClass| c.name == name) {
                return Err(err(format!("empty or duplicate class name {name:?}")));
            }
            let mut set = BTreeSet::new();
            for f in finals.split(',').map(str::trim) {
                let f = f.replace('v', "ü");
                if !FINALS.contains(&f.as_str()) {
                    return Err(err(format!("{f:?} is not a pinyin final")));
                }
                if by_final.insert(f.clone(), classes.len()).is_some() {
                    return Err(err(format!("final {f:?} appears in two classes")));
                }
                set.insert(f);
            }
            classes.push(RhymeClass {
                name: name.to_string(),
                finals: set,
            });
        }
        let missing: Vec<&str> = FINALS
            .iter()
            .copied()
            .filter(|f| !by_final.contains_key(*f))
            .collect();
        if !missing.is_empty() {
            return Err(PhonologyError::Data {
                file: DataFile::Rhymes,
                line: 0,
                msg: format!("finals not covered: {}", missing.join(",")),
            });
        }
        Ok(RhymeTable { classes, by_final })
    }

    pub fn from_file(path: &Path) -> Result<Self, PhonologyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PhonologyError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_RHYMES).expect("bundled rhyme table is valid")
    }

    pub fn classes(&self) -> &[RhymeClass] {
        &self.classes
    }

    pub fn by_name(&self, name: &str) -> Result<&RhymeClass, PhonologyError> {
        self.classes
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| PhonologyError::UnknownClass(name.to_string()))
    }

    pub fn class_of_final(&self, rime: &str) -> Option<&RhymeClass> {
        self.by_final.get(rime).map(|&i| &self.classes[i])
    }

    /// Class of the most common reading of `ch`.
    pub fn class_of(&self, ch: char, lex: &Lexicon) -> Result<&RhymeClass, PhonologyError> {
        let p = lex.primary(ch)?;
        Ok(self
            .class_of_final(p.rime())
            .expect("table covers every final"))
    }
}

pub fn rhyme_class_of<'t>(
    ch: char,
    lex: &Lexicon,
    table: &'t RhymeTable,
) -> Result<&'t RhymeClass, PhonologyError> {
    table.class_of(ch, lex)
}

/// Up to `limit` characters whose primary reading falls in `cls`, in
/// codepoint order.
pub fn rhyming_candidates(cls: &RhymeClass, lex: &Lexicon, limit: usize) -> Vec<char> {
    lex.iter()
        .filter(|(_, prons)| cls.contains(prons[0].rime()))
        .map(|(c, _)| c)
        .take(limit)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_partition() {
        let t = RhymeTable::bundled();
        assert_eq!(t.classes().len(), 13);
        let mut all = BTreeSet::new();
        for c in t.classes() {
            for f in c.finals() {
                assert!(all.insert(f.clone()), "{f} twice");
            }
        }
        let inv: BTreeSet<String> = FINALS.iter().map(|s| s.to_string()).collect();
        assert_eq!(all, inv);
    }

    #[test]
    fn class_examples() {
        let lex = Lexicon::bundled();
        let t = RhymeTable::bundled();
        let guang = rhyme_class_of('光', &lex, &t).unwrap();
        assert_eq!(guang, rhyme_class_of('想', &lex, &t).unwrap());
        assert_eq!(guang.name(), "江阳");
        let shi = rhyme_class_of('诗', &lex, &t).unwrap();
        assert!(shi.contains("i"));
        assert_eq!(
            rhyme_class_of('\u{E000}', &lex, &t).unwrap_err(),
            PhonologyError::UnknownChar('\u{E000}')
        );
    }

    #[test]
    fn candidates() {
        let lex = Lexicon::bundled();
        let t = RhymeTable::bundled();
        let cls = t.class_of('光', &lex).unwrap();
        let five = rhyming_candidates(cls, &lex, 5);
        assert_eq!(five.len(), 5);
        assert!(five.windows(2).all(|w| w[0] < w[1]));
        for c in &five {
            assert_eq!(t.class_of(*c, &lex).unwrap(), cls);
        }
        assert_eq!(rhyming_candidates(cls, &lex, 1).len(), 1);

        let tiny = Lexicon::parse("天\ttian1\n", "").unwrap();
        assert!(rhyming_candidates(cls, &tiny, 5).is_empty());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(RhymeTable::parse("a\ta\n").is_err());
        assert!(RhymeTable::parse("x\ta,zz\n").is_err());
        let dup = format!("{}\nextra\ta\n", BUNDLED_RHYMES);
        assert!(RhymeTable::parse(&dup).is_err());
        assert!(matches!(
            RhymeTable::bundled().by_name("nope"),
            Err(PhonologyError::UnknownClass(_))
        ));
    }
}
