//! The five text corruption operations.
//!
//! Each operation either changes its input or reports a flagged no-op so the
//! record builder can try a different one; a no-op never reaches the final
//! corpus. Randomized choices are kept in thin wrappers around deterministic
//! cores, which the unit tests exercise directly.
//!
//! Sentence lists are rebuilt through [`ExplanationText::from_sentences`],
//! which re-detects boundaries. A sentence with no terminal punctuation can
//! merge with its successor under reordering or insertion; operations whose
//! contract fixes the sentence structure detect that and no-op instead of
//! silently breaking the contract.

use crate::lexicon::{Lexicon, VerbForm};
use eib_core::error::{CoreError, Result};
use eib_core::text::ExplanationText;
use eib_core::tokenizer::{detokenize, word_tokenize};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

/// Fraction of eligible keywords swapped by the replacement operation.
pub const KEYWORD_FRACTION: f64 = 0.15;
/// Largest span duplicated by the repetition operation.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpOutcome {
    Changed(ExplanationText),
    /// The operation could not apply to this input; the builder resamples.
    NoOp,
}

impl OpOutcome {
    pub fn changed(self) -> Option<ExplanationText> {
        match self {
            OpOutcome::Changed(e) => Some(e),
            OpOutcome::NoOp => None,
        }
    }
}

fn capitalize_like(word: &str, pattern: &str) -> String {
    if pattern.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = word.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

fn rebuild(sentences: &[String]) -> ExplanationText {
    ExplanationText::from_sentences(sentences)
        .expect("corruption output is non-empty by construction")
}

fn replace_sentence(e: &ExplanationText, idx: usize, tokens: &[String]) -> ExplanationText {
    let mut sentences = e.sentences().to_vec();
    sentences[idx] = detokenize(tokens);
    rebuild(&sentences)
}

/// Duplicates `tokens[pos..pos + n]` of sentence `sentence` immediately after
/// its occurrence.
pub fn repeat_ngram(e: &ExplanationText, sentence: usize, pos: usize, n: usize) -> ExplanationText {
    let mut tokens = word_tokenize(&e.sentences()[sentence]);
    assert!(n >= 1 && pos + n <= tokens.len(), "span out of bounds");
    let span: Vec<String> = tokens[pos..pos + n].to_vec();
    tokens.splice(pos + n..pos + n, span);
    replace_sentence(e, sentence, &tokens)
}

/// Duplicates one whole sentence immediately after itself.
pub fn repeat_sentence(e: &ExplanationText, idx: usize) -> ExplanationText {
    let mut sentences = e.sentences().to_vec();
    sentences.insert(idx + 1, sentences[idx].clone());
    rebuild(&sentences)
}

/// With equal probability duplicates a random short span inside one sentence
/// or a whole sentence. Token count strictly increases either way.
pub fn corrupt_repetition(e: &ExplanationText, rng: &mut impl Rng) -> OpOutcome {
    let idx = rng.gen_range(0..e.sentences().len());
    if rng.gen_bool(0.5) {
        OpOutcome::Changed(repeat_sentence(e, idx))
    } else {
        let len = word_tokenize(&e.sentences()[idx]).len();
        let n = rng.gen_range(1..=MAX_NGRAM).min(len);
        let pos = rng.gen_range(0..=len - n);
        OpOutcome::Changed(repeat_ngram(e, idx, pos, n))
    }
}

/// Indices of tokens eligible for antonym replacement: non-stopword tokens
/// with a lexicon entry.
pub fn keyword_indices(tokens: &[String], lex: &Lexicon) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lex.is_keyword(t))
        .map(|(i, _)| i)
        .collect()
}

/// How many of `k` keywords get replaced: a ceiling, so at least one whenever
/// any keyword is eligible.
pub fn swap_count(k: usize) -> usize {
    (KEYWORD_FRACTION * k as f64).ceil() as usize
}

/// Either swaps a fraction of one sentence's keywords for antonyms, or swaps
/// one whole sentence for a sentence drawn from another explanation in
/// `pool`. Falls back to the other mode when the drawn one cannot apply.
pub fn corrupt_replacement(
    e: &ExplanationText,
    pool: &[ExplanationText],
    lex: &Lexicon,
    rng: &mut impl Rng,
) -> OpOutcome {
    let idx = rng.gen_range(0..e.sentences().len());
    let antonym_first = rng.gen_bool(0.5);
    let order = if antonym_first {
        [Mode::Antonym, Mode::Sentence]
    } else {
        [Mode::Sentence, Mode::Antonym]
    };
    for mode in order {
        let out = match mode {
            Mode::Antonym => antonym_swap(e, idx, lex, rng),
            Mode::Sentence => sentence_swap(e, idx, pool, rng),
        };
        if let Some(changed) = out {
            return OpOutcome::Changed(changed);
        }
    }
    OpOutcome::NoOp
}

#[derive(Clone, Copy)]
enum Mode {
    Antonym,
    Sentence,
}

fn antonym_swap(
    e: &ExplanationText,
    idx: usize,
    lex: &Lexicon,
    rng: &mut impl Rng,
) -> Option<ExplanationText> {
    let mut tokens = word_tokenize(&e.sentences()[idx]);
    let eligible = keyword_indices(&tokens, lex);
    if eligible.is_empty() {
        return None;
    }
    let picks = rand::seq::index::sample(rng, eligible.len(), swap_count(eligible.len()));
    for p in picks.iter() {
        let ti = eligible[p];
        let options = lex.antonyms_of(&tokens[ti]).expect("keyword has entries");
        let ant = options.choose(rng).expect("entry lists are non-empty");
        tokens[ti] = capitalize_like(ant, &tokens[ti]);
    }
    Some(replace_sentence(e, idx, &tokens))
}

fn sentence_swap(
    e: &ExplanationText,
    idx: usize,
    pool: &[ExplanationText],
    rng: &mut impl Rng,
) -> Option<ExplanationText> {
    let candidates: Vec<&String> = pool
        .iter()
        .filter(|p| p.text() != e.text())
        .flat_map(|p| p.sentences())
        .filter(|s| **s != e.sentences()[idx])
        .collect();
    if candidates.is_empty() {
        return None;
    }
    // A candidate without terminal punctuation can merge with the next
    // sentence on rebuild; retry a few draws before giving up on this mode.
    for _ in 0..8 {
        let pick = (*candidates.choose(rng).unwrap()).clone();
        let mut sentences = e.sentences().to_vec();
        sentences[idx] = pick;
        let out = rebuild(&sentences);
        if out.sentences().len() == e.sentences().len() {
            return Some(out);
        }
    }
    None
}

/// Flips the polarity of the verb at `idx`, returning the edited token list
/// and the index a second flip would target to undo the first.
///
/// The rules, in the order tried:
/// 1. a negative contraction rewrites to its positive counterpart, with the
///    do-forms collapsing onto the following verb ("doesn't make" becomes
///    "makes");
/// 2. a verb governed by a preceding negation token drops it, undoing
///    do-support when the negation came from rule 5 or 6 ("does not make"
///    becomes "makes");
/// 3. an auxiliary or copula followed by a negation token drops that token;
/// 4. an auxiliary or copula takes "not" directly after it, as does a main
///    verb directly preceded by an auxiliary ("will rain" becomes "will not
///    rain");
/// 5. an inflected main verb takes do-support carrying its tense ("makes"
///    becomes "does not make", "made" becomes "did not make");
/// 6. a bare main verb takes plain "do not".
pub fn flip_verb_at(
    tokens: &[String],
    idx: usize,
    lex: &Lexicon,
) -> Option<(Vec<String>, usize)> {
    let tok = tokens[idx].as_str();
    let lower = tok.to_lowercase();

    if let Some(pos_form) = lex.positive_form(&lower) {
        let mut out = tokens.to_vec();
        if matches!(pos_form, "do" | "does" | "did") && idx + 1 < tokens.len() {
            if let Some((forms, VerbForm::Base)) = lex.verb_lookup(&tokens[idx + 1]) {
                let inflected = match pos_form {
                    "does" => forms.third.clone(),
                    "did" => forms.past.clone(),
                    _ => forms.base.clone(),
                };
                out.remove(idx);
                out[idx] = capitalize_like(&inflected, tok);
                return Some((out, idx));
            }
        }
        out[idx] = capitalize_like(pos_form, tok);
        return Some((out, idx));
    }

    if idx > 0 && lex.is_negation(&tokens[idx - 1]) {
        let mut out = tokens.to_vec();
        let do_form = idx >= 2
            && matches!(tokens[idx - 2].to_lowercase().as_str(), "do" | "does" | "did");
        if do_form {
            if let Some((forms, VerbForm::Base)) = lex.verb_lookup(&lower) {
                let inflected = match tokens[idx - 2].to_lowercase().as_str() {
                    "does" => forms.third.clone(),
                    "did" => forms.past.clone(),
                    _ => forms.base.clone(),
                };
                out.drain(idx - 2..idx);
                out[idx - 2] = capitalize_like(&inflected, &tokens[idx - 2]);
                return Some((out, idx - 2));
            }
        }
        out.remove(idx - 1);
        return Some((out, idx - 1));
    }

    if lex.is_aux(&lower) {
        let mut out = tokens.to_vec();
        if idx + 1 < tokens.len() && lex.is_negation(&tokens[idx + 1]) {
            out.remove(idx + 1);
        } else {
            out.insert(idx + 1, "not".to_string());
        }
        return Some((out, idx));
    }

    if let Some((forms, form)) = lex.verb_lookup(&lower) {
        let mut out = tokens.to_vec();
        if idx > 0 && lex.is_aux(&tokens[idx - 1]) {
            out.insert(idx, "not".to_string());
            return Some((out, idx + 1));
        }
        let aux = match form {
            VerbForm::Third => "does",
            VerbForm::Past => "did",
            VerbForm::Base => "do",
        };
        out[idx] = forms.base.clone();
        out.insert(idx, "not".to_string());
        out.insert(idx, capitalize_like(aux, tok));
        return Some((out, idx + 2));
    }

    None
}

/// Adds or removes a negation around one randomly chosen verb. No-ops when
/// the text contains no recognizable verb.
pub fn corrupt_negation(e: &ExplanationText, lex: &Lexicon, rng: &mut impl Rng) -> OpOutcome {
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let tokenized: Vec<Vec<String>> = e
        .sentences()
        .iter()
        .map(|s| word_tokenize(s))
        .collect();
    for (si, tokens) in tokenized.iter().enumerate() {
        for (ti, tok) in tokens.iter().enumerate() {
            if lex.verb_lookup(tok).is_some()
                || lex.is_aux(tok)
                || lex.positive_form(tok).is_some()
            {
                candidates.push((si, ti));
            }
        }
    }
    let Some(&(si, ti)) = candidates.as_slice().choose(rng) else {
        return OpOutcome::NoOp;
    };
    match flip_verb_at(&tokenized[si], ti, lex) {
        Some((tokens, _)) => OpOutcome::Changed(replace_sentence(e, si, &tokens)),
        None => OpOutcome::NoOp,
    }
}

/// Reorders the sentences by a non-identity permutation. No-ops on
/// single-sentence input, when every reordering reads the same (duplicate
/// sentences), or when rebuilt boundaries would not preserve the multiset.
pub fn corrupt_shuffle(e: &ExplanationText, rng: &mut impl Rng) -> OpOutcome {
    let n = e.sentences().len();
    if n < 2 {
        return OpOutcome::NoOp;
    }
    for _ in 0..16 {
        let mut perm: Vec<usize> = (0..n).collect();
        while perm.iter().enumerate().all(|(i, &p)| i == p) {
            perm.shuffle(rng);
        }
        let sentences: Vec<String> = perm.iter().map(|&i| e.sentences()[i].clone()).collect();
        let out = rebuild(&sentences);
        if out.text() == e.text() {
            continue;
        }
        let mut before: Vec<&String> = e.sentences().iter().collect();
        let mut after: Vec<&String> = out.sentences().iter().collect();
        before.sort();
        after.sort();
        if before == after {
            return OpOutcome::Changed(out);
        }
    }
    OpOutcome::NoOp
}

/// Lowercased word tokens with punctuation-only tokens dropped; the overlap
/// universe for infilling retrieval.
pub fn content_token_set(text: &str) -> HashSet<String> {
    word_tokenize(text)
        .into_iter()
        .map(|t| t.to_lowercase())
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// The sentence from another explanation in `pool` most similar to `e` by
/// token-overlap Jaccard. Ties break toward the earliest pool position.
pub fn best_infill(e: &ExplanationText, pool: &[ExplanationText]) -> Option<String> {
    let target = content_token_set(e.text());
    let mut best: Option<(f64, &String)> = None;
    for p in pool.iter().filter(|p| p.text() != e.text()) {
        for s in p.sentences() {
            let score = jaccard(&content_token_set(s), &target);
            if best.map_or(true, |(b, _)| score > b) {
                best = Some((score, s));
            }
        }
    }
    best.map(|(_, s)| s.clone())
}

/// Inserts the most similar foreign sentence at a random boundary. Errors
/// when `pool` holds no explanation other than `e`; no-ops when rebuilt
/// boundaries would not grow the sentence count by exactly one.
pub fn corrupt_infilling(
    e: &ExplanationText,
    pool: &[ExplanationText],
    rng: &mut impl Rng,
) -> Result<OpOutcome> {
    let Some(pick) = best_infill(e, pool) else {
        return Err(CoreError::Config(
            "infilling pool holds no explanation other than the input".into(),
        ));
    };
    let at = rng.gen_range(0..=e.sentences().len());
    let mut sentences = e.sentences().to_vec();
    sentences.insert(at, pick);
    let out = rebuild(&sentences);
    if out.sentences().len() != e.sentences().len() + 1 {
        return Ok(OpOutcome::NoOp);
    }
    Ok(OpOutcome::Changed(out))
}
