//! Word lists backing the corruption operations: antonyms for keyword
//! replacement, stopwords for keyword eligibility, verb morphology and the
//! closed negation classes for polarity flips.
//!
//! A default copy of every list is compiled into the crate; callers can load
//! replacements from a directory holding files with the same names.

use eib_core::error::{CoreError, Result};
use std::collections::{HashMap, HashSet};
use std::path::Path;

const BUNDLED_ANTONYMS: &str = include_str!("../data/antonyms.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUNDLED_VERBS: &str = include_str!("../data/verbs.tsv");
const BUNDLED_NEGATION: &str = include_str!("../data/negation.tsv");

/// Inflections of one verb. The gerund is recognized but never targeted by
/// negation, since do-support does not apply to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbForms {
    pub base: String,
    pub third: String,
    pub past: String,
    pub gerund: String,
}

/// Which column of the verb table a surface token matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbForm {
    Base,
    Third,
    Past,
}

#[derive(Debug)]
pub struct Lexicon {
    antonyms: HashMap<String, Vec<String>>,
    stopwords: HashSet<String>,
    verbs: Vec<VerbForms>,
    verb_index: HashMap<String, (usize, VerbForm)>,
    gerunds: HashSet<String>,
    aux: HashSet<String>,
    neg: HashSet<String>,
    contractions: HashMap<String, String>,
}

impl Lexicon {
    /// The compiled-in word lists.
    pub fn bundled() -> Self {
        Self::parse(
            BUNDLED_ANTONYMS,
            BUNDLED_STOPWORDS,
            BUNDLED_VERBS,
            BUNDLED_NEGATION,
            "<bundled>",
        )
        .expect("bundled lexicon data must be valid")
    }

    /// Loads `antonyms.tsv`, `stopwords.txt`, `verbs.tsv` and `negation.tsv`
    /// from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            if !path.exists() {
                return Err(CoreError::MissingInput(path));
            }
            Ok(std::fs::read_to_string(path)?)
        };
        Self::parse(
            &read("antonyms.tsv")?,
            &read("stopwords.txt")?,
            &read("verbs.tsv")?,
            &read("negation.tsv")?,
            &dir.display().to_string(),
        )
    }

    fn parse(
        antonyms_src: &str,
        stopwords_src: &str,
        verbs_src: &str,
        negation_src: &str,
        origin: &str,
    ) -> Result<Self> {
        let schema = |line: usize, msg: String| CoreError::Schema {
            path: origin.to_string(),
            line,
            msg,
        };

        let mut antonyms: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in data_lines(antonyms_src) {
            let mut parts = line.split('\t');
            let (lemma, ant) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a.trim().to_lowercase(), b.trim().to_lowercase()),
                _ => return Err(schema(i, format!("antonym line needs two columns: {line:?}"))),
            };
            if lemma.is_empty() || ant.is_empty() {
                return Err(schema(i, "empty antonym field".into()));
            }
            if lemma == ant {
                return Err(schema(i, format!("self-antonym {lemma:?}")));
            }
            if ant.chars().any(char::is_whitespace) {
                return Err(schema(i, format!("antonym {ant:?} is not a single token")));
            }
            antonyms.entry(lemma).or_default().push(ant);
        }

        let stopwords = data_lines(stopwords_src)
            .map(|(_, l)| l.trim().to_lowercase())
            .collect();

        let mut verbs = Vec::new();
        let mut verb_index = HashMap::new();
        let mut gerunds = HashSet::new();
        for (i, line) in data_lines(verbs_src) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(schema(i, format!("verb line needs four columns: {line:?}")));
            }
            let forms = VerbForms {
                base: cols[0].trim().to_lowercase(),
                third: cols[1].trim().to_lowercase(),
                past: cols[2].trim().to_lowercase(),
                gerund: cols[3].trim().to_lowercase(),
            };
            let idx = verbs.len();
            // Base wins when a surface form is ambiguous (e.g. "put" as base
            // and past), so insertion order matters below.
            for (form, tag) in [
                (&forms.past, VerbForm::Past),
                (&forms.third, VerbForm::Third),
                (&forms.base, VerbForm::Base),
            ] {
                verb_index.insert(form.clone(), (idx, tag));
            }
            gerunds.insert(forms.gerund.clone());
            verbs.push(forms);
        }

        let mut aux = HashSet::new();
        let mut neg = HashSet::new();
        let mut contractions = HashMap::new();
        for (i, line) in data_lines(negation_src) {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["aux", w] => {
                    aux.insert(w.trim().to_lowercase());
                }
                ["neg", w] => {
                    neg.insert(w.trim().to_lowercase());
                }
                ["contraction", from, to] => {
                    contractions.insert(from.trim().to_lowercase(), to.trim().to_lowercase());
                }
                _ => return Err(schema(i, format!("unrecognized negation line: {line:?}"))),
            }
        }

        Ok(Self {
            antonyms,
            stopwords,
            verbs,
            verb_index,
            gerunds,
            aux,
            neg,
            contractions,
        })
    }

    pub fn antonyms_of(&self, token: &str) -> Option<&[String]> {
        self.antonyms
            .get(&token.to_lowercase())
            .map(Vec::as_slice)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(&token.to_lowercase())
    }

    /// A keyword is a non-stopword token with at least one antonym entry.
    pub fn is_keyword(&self, token: &str) -> bool {
        !self.is_stopword(token) && self.antonyms_of(token).is_some()
    }

    pub fn verb_lookup(&self, token: &str) -> Option<(&VerbForms, VerbForm)> {
        self.verb_index
            .get(&token.to_lowercase())
            .map(|&(idx, form)| (&self.verbs[idx], form))
    }

    pub fn is_gerund(&self, token: &str) -> bool {
        self.gerunds.contains(&token.to_lowercase())
    }

    pub fn is_aux(&self, token: &str) -> bool {
        self.aux.contains(&token.to_lowercase())
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.neg.contains(&token.to_lowercase())
    }

    pub fn positive_form(&self, contraction: &str) -> Option<&str> {
        self.contractions
            .get(&contraction.to_lowercase())
            .map(String::as_str)
    }
}

fn data_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}
