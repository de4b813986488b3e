//! Prompt templates: a pattern with `{context}` and `{output}` placeholders
//! plus an optional trailing connective.
//!
//! Rendering lowercases the first letter of the inserted context, because the
//! templates splice the sample's context into the middle of a sentence
//! ("Question is the mother finished ..."). The output is inserted verbatim.
//! Both fields are whitespace-normalized so ragged source data cannot leak
//! double spaces into prompts.

use eib_core::error::{CoreError, Result};
use eib_core::text::{normalize_ws, TaskSample};
use serde::{Deserialize, Serialize};

const CONTEXT_SLOT: &str = "{context}";
const OUTPUT_SLOT: &str = "{output}";

/// Connectives a template may append after the rendered pattern. Patterns
/// that carry their own connective (say a trailing "because.") use no suffix.
pub const ALLOWED_SUFFIXES: &[&str] = &["because", "Why?"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub name: String,
    pub pattern: String,
    pub suffix: Option<String>,
}

impl PromptTemplate {
    pub fn new(name: &str, pattern: &str, suffix: Option<&str>) -> Result<Self> {
        let t = Self {
            name: name.to_string(),
            pattern: pattern.to_string(),
            suffix: suffix.map(str::to_string),
        };
        t.validate()?;
        Ok(t)
    }

    /// Looks up one of the built-in templates by name.
    pub fn builtin(name: &str) -> Result<Self> {
        BUILTINS
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(n, pattern, suffix)| Self {
                name: (*n).to_string(),
                pattern: (*pattern).to_string(),
                suffix: suffix.map(str::to_string),
            })
            .ok_or_else(|| {
                CoreError::Config(format!(
                    "unknown template `{name}` (built-ins: {})",
                    builtin_names().join(", ")
                ))
            })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(CoreError::Config("template name is empty".into()));
        }
        for slot in [CONTEXT_SLOT, OUTPUT_SLOT] {
            match self.pattern.matches(slot).count() {
                1 => {}
                n => {
                    return Err(CoreError::Config(format!(
                        "template `{}` must contain {slot} exactly once, found {n}",
                        self.name
                    )))
                }
            }
        }
        if let Some(s) = &self.suffix {
            if !ALLOWED_SUFFIXES.contains(&s.as_str()) {
                return Err(CoreError::Config(format!(
                    "template `{}` has unsupported suffix `{s}`",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Renders the prompt for one sample.
    pub fn format(&self, sample: &TaskSample) -> Result<String> {
        self.validate()?;
        sample.validate()?;
        let context = lowercase_first(&normalize_ws(&sample.context));
        let output = normalize_ws(&sample.output);

        // Splice by position instead of string replacement so that field
        // text containing a literal placeholder cannot be re-substituted.
        let c = self.pattern.find(CONTEXT_SLOT).expect("validated");
        let o = self.pattern.find(OUTPUT_SLOT).expect("validated");
        let mut out = String::with_capacity(self.pattern.len() + context.len() + output.len());
        if c < o {
            out.push_str(&self.pattern[..c]);
            out.push_str(&context);
            out.push_str(&self.pattern[c + CONTEXT_SLOT.len()..o]);
            out.push_str(&output);
            out.push_str(&self.pattern[o + OUTPUT_SLOT.len()..]);
        } else {
            out.push_str(&self.pattern[..o]);
            out.push_str(&output);
            out.push_str(&self.pattern[o + OUTPUT_SLOT.len()..c]);
            out.push_str(&context);
            out.push_str(&self.pattern[c + CONTEXT_SLOT.len()..]);
        }
        if let Some(s) = &self.suffix {
            out.push(' ');
            out.push_str(s);
        }
        Ok(out)
    }

}

type BuiltinRow = (&'static str, &'static str, Option<&'static str>);

const BUILTINS: &[BuiltinRow] = &[
    (
        "qa_because",
        "Let's explain question and answer. Question is {context} Answer is {output}",
        Some("because"),
    ),
    (
        "qa_why",
        "Let's explain question and answer. Question is {context} Answer is {output}",
        Some("Why?"),
    ),
    (
        "qa_statement_because",
        "The question is {context} The answer is {output} because.",
        None,
    ),
    (
        "nli_because",
        "Let's explain statement and answer. Statement is {context} Answer is {output}",
        Some("because"),
    ),
    (
        "nli_why",
        "Let's explain statement and answer. Statement is {context} Answer is {output}",
        Some("Why?"),
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _, _)| *n).collect()
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}
