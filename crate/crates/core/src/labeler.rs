//! Keyword rules that split positive reports into atypical and typical cases.
//!
//! Severity adjectives ("mild", "severe", ...) match whole tokens only.
//! Change-in-time stems ("improve", "worsen", ...) also match when followed
//! by one of the lexicon's inflection suffixes, so "worsened" and
//! "improvement" are recognized. A report with no hits is typical.
//!
//! The lexicon is stored as a small sectioned text file:
//!
//! ```text
//! # comment
//! [severity.atypical]
//! mild
//! [severity.typical]
//! severe
//! [change.atypical]
//! improve
//! [change.typical]
//! worsen
//! [suffixes]
//! ed
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../data/default.lex");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subcategory {
    Atypical,
    Typical,
}

impl Subcategory {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcategory::Atypical => "atypical",
            Subcategory::Typical => "typical",
        }
    }
}

impl fmt::Display for Subcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atypical" => Ok(Subcategory::Atypical),
            "typical" => Ok(Subcategory::Typical),
            _ => Err(Error::InvalidInput(format!("unknown subcategory `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Severity,
    Change,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub stem: String,
    pub surface: String,
    pub position: usize,
    pub polarity: Subcategory,
    pub dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineLabel {
    pub subcategory: Subcategory,
    pub hits: Vec<KeywordHit>,
}

impl FineLabel {
    /// A label with no supporting keyword hits, as read from a dataset file.
    pub fn bare(subcategory: Subcategory) -> Self {
        FineLabel {
            subcategory,
            hits: Vec::new(),
        }
    }
}

/// How a report with both atypical and typical hits is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictPolicy {
    /// The keyword appearing last in the text decides.
    #[default]
    LastHit,
    /// Any typical keyword makes the report typical.
    TypicalWins,
}

const SECTIONS: [&str; 5] = [
    "severity.atypical",
    "severity.typical",
    "change.atypical",
    "change.typical",
    "suffixes",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub severity_atypical: Vec<String>,
    pub severity_typical: Vec<String>,
    pub change_atypical: Vec<String>,
    pub change_typical: Vec<String>,
    /// Inflections accepted after a change stem; the bare stem always matches.
    pub suffixes: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_named(text, "<lexicon>")
    }

    fn parse_named(text: &str, name: &str) -> Result<Self> {
        let mut sections: [Vec<String>; 5] = Default::default();
        let mut current: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let header = header.trim();
                let pos = SECTIONS
                    .iter()
                    .position(|s| *s == header)
                    .ok_or_else(|| Error::parse(name, idx + 1, format!("unknown section [{header}]")))?;
                current = Some(pos);
                continue;
            }
            let section = current.ok_or_else(|| Error::parse(name, idx + 1, "entry before any section header"))?;
            if line.chars().any(char::is_whitespace) {
                return Err(Error::parse(
                    name,
                    idx + 1,
                    format!("entry `{line}` contains whitespace"),
                ));
            }
            sections[section].push(line.to_lowercase());
        }
        let [severity_atypical, severity_typical, change_atypical, change_typical, suffixes] = sections;
        let lex = Lexicon {
            severity_atypical,
            severity_typical,
            change_atypical,
            change_typical,
            suffixes,
        };
        lex.validate()?;
        Ok(lex)
    }

    pub fn validate(&self) -> Result<()> {
        let sets = [
            ("severity.atypical", &self.severity_atypical),
            ("severity.typical", &self.severity_typical),
            ("change.atypical", &self.change_atypical),
            ("change.typical", &self.change_typical),
        ];
        for (i, (name_a, a)) in sets.iter().enumerate() {
            let a: BTreeSet<&String> = a.iter().collect();
            for (name_b, b) in &sets[i + 1..] {
                if let Some(shared) = b.iter().find(|w| a.contains(w)) {
                    return Err(Error::Config(format!(
                        "keyword `{shared}` appears in both [{name_a}] and [{name_b}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_named(&text, &path.display().to_string())
    }

    /// Canonical text form. `Lexicon::parse(&lex.to_text())` returns `lex`,
    /// and canonical files survive a load/save cycle byte for byte.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# riskmod keyword lexicon\n");
        let lists = [
            &self.severity_atypical,
            &self.severity_typical,
            &self.change_atypical,
            &self.change_typical,
            &self.suffixes,
        ];
        for (name, entries) in SECTIONS.iter().zip(lists) {
            out.push('[');
            out.push_str(name);
            out.push_str("]\n");
            for e in entries {
                out.push_str(e);
                out.push('\n');
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    fn severity(&self, token: &str) -> Option<(&str, Subcategory)> {
        fn find<'a>(set: &'a [String], token: &str) -> Option<&'a str> {
            set.iter().find(|w| w.as_str() == token).map(String::as_str)
        }
        find(&self.severity_atypical, token)
            .map(|w| (w, Subcategory::Atypical))
            .or_else(|| find(&self.severity_typical, token).map(|w| (w, Subcategory::Typical)))
    }

    fn change(&self, token: &str) -> Option<(&str, Subcategory)> {
        let candidates = self
            .change_atypical
            .iter()
            .map(|s| (s, Subcategory::Atypical))
            .chain(self.change_typical.iter().map(|s| (s, Subcategory::Typical)));
        candidates
            .filter(|(stem, _)| {
                token
                    .strip_prefix(stem.as_str())
                    .is_some_and(|rest| rest.is_empty() || self.suffixes.iter().any(|suf| suf == rest))
            })
            .max_by_key(|(stem, _)| stem.len())
            .map(|(stem, pol)| (stem.as_str(), pol))
    }
}

/// Lower-cased word tokens. Hyphenated compounds stay whole; every other
/// non-alphanumeric character separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|t| t.trim_matches('-'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn match_keywords<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<KeywordHit> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(position, token)| {
            let token = token.as_ref();
            let (stem, polarity, dimension) = match lexicon.severity(token) {
                Some((stem, pol)) => (stem, pol, Dimension::Severity),
                None => {
                    let (stem, pol) = lexicon.change(token)?;
                    (stem, pol, Dimension::Change)
                }
            };
            Some(KeywordHit {
                stem: stem.to_string(),
                surface: token.to_string(),
                position,
                polarity,
                dimension,
            })
        })
        .collect()
}

pub fn classify_fine(hits: Vec<KeywordHit>, policy: ConflictPolicy) -> FineLabel {
    let subcategory = match policy {
        ConflictPolicy::LastHit => hits.last().map_or(Subcategory::Typical, |h| h.polarity),
        ConflictPolicy::TypicalWins => {
            if !hits.is_empty() && hits.iter().all(|h| h.polarity == Subcategory::Atypical) {
                Subcategory::Atypical
            } else {
                Subcategory::Typical
            }
        }
    };
    FineLabel { subcategory, hits }
}

/// Labels a report with the default conflict policy.
pub fn label_report(text: &str, lexicon: &Lexicon) -> FineLabel {
    label_report_with(text, lexicon, ConflictPolicy::default())
}

pub fn label_report_with(text: &str, lexicon: &Lexicon, policy: ConflictPolicy) -> FineLabel {
    classify_fine(match_keywords(&tokenize(text), lexicon), policy)
}
