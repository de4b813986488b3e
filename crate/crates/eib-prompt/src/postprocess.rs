//! Cleanup applied to raw backend completions before they become
//! explanation candidates.
//!
//! Three fixed steps, in order: drop an echoed copy of the prompt, cut at the
//! first blank line (models tend to start a fresh paragraph when they are
//! done), and drop one duplicated leading connective ("... because" followed
//! by a completion that starts with "because" again). The rules are frozen by
//! the tests; anything fancier belongs in the backend that misbehaves.

use eib_core::text::normalize_ws;

/// Cleans one raw completion. `connective` is the lowercased final word of
/// the prompt, when the template has one worth deduplicating.
pub fn clean_completion(prompt: &str, connective: Option<&str>, raw: &str) -> String {
    let mut text = raw.trim_start();

    let prompt_trimmed = prompt.trim();
    if !prompt_trimmed.is_empty() {
        if let Some(rest) = text.strip_prefix(prompt_trimmed) {
            text = rest.trim_start();
        }
    }

    let first_paragraph = match find_blank_line(text) {
        Some(cut) => &text[..cut],
        None => text,
    };
    let mut cleaned = normalize_ws(first_paragraph);

    if let Some(conn) = connective {
        if let Some(first) = cleaned.split_whitespace().next() {
            let bare: String = first
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect();
            if bare == conn {
                cleaned = cleaned[first.len()..].trim_start().to_string();
            }
        }
    }
    cleaned
}

/// The connective worth deduplicating for a given prompt: `because` or `why`
/// when the prompt ends with one of them, `None` otherwise. Arbitrary final
/// words are not treated as connectives; stripping those would eat real
/// content whenever a completion legitimately starts with the same word.
pub fn prompt_connective(prompt: &str) -> Option<String> {
    let last = prompt.split_whitespace().last()?;
    let bare: String = last
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    if bare == "because" || bare == "why" {
        Some(bare)
    } else {
        None
    }
}

/// Byte offset of the first blank line (a line that is empty after
/// trimming), or `None` if every line has content.
fn find_blank_line(text: &str) -> Option<usize> {
    let mut offset = 0;
    let mut seen_content = false;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() && seen_content {
            return Some(offset);
        }
        if !line.trim().is_empty() {
            seen_content = true;
        }
        offset += line.len();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROMPT: &str = "The question is is water wet? The answer is yes because.";

    #[test]
    fn echoed_prompts_are_stripped() {
        let raw = format!("{PROMPT} water sticks to things");
        assert_eq!(
            clean_completion(PROMPT, Some("because"), &raw),
            "water sticks to things"
        );
    }

    #[test]
    fn truncates_at_the_first_blank_line() {
        let raw = "water sticks to things.\n\nThe question is something else.";
        assert_eq!(
            clean_completion(PROMPT, None, raw),
            "water sticks to things."
        );
        let raw = "one line\nstill the same paragraph.\n   \nnew paragraph";
        assert_eq!(
            clean_completion(PROMPT, None, raw),
            "one line still the same paragraph."
        );
    }

    #[test]
    fn duplicated_leading_connective_is_dropped_once() {
        assert_eq!(
            clean_completion(PROMPT, Some("because"), "because water sticks"),
            "water sticks"
        );
        assert_eq!(
            clean_completion(PROMPT, Some("because"), "Because, water sticks"),
            "water sticks"
        );
        // Only the first duplicate goes; a repeated connective further in is
        // content, not echo.
        assert_eq!(
            clean_completion(PROMPT, Some("because"), "because because it rains"),
            "because it rains"
        );
    }

    #[test]
    fn unrelated_first_words_are_kept() {
        assert_eq!(
            clean_completion(PROMPT, Some("because"), "rain is because of clouds"),
            "rain is because of clouds"
        );
        assert_eq!(
            clean_completion(PROMPT, Some("why"), "Why not ask again"),
            "not ask again"
        );
    }

    #[test]
    fn whitespace_is_normalized() {
        assert_eq!(
            clean_completion(PROMPT, None, "  water \t sticks \n to things "),
            "water sticks to things"
        );
    }

    #[test]
    fn connectives_come_only_from_because_and_why_tails() {
        assert_eq!(prompt_connective("Answer is X because"), Some("because".into()));
        assert_eq!(prompt_connective("Answer is X because."), Some("because".into()));
        assert_eq!(prompt_connective("Answer is X Why?"), Some("why".into()));
        assert_eq!(prompt_connective("The answer is no"), None);
        assert_eq!(prompt_connective("  "), None);
    }

    #[test]
    fn pure_echo_or_noise_collapses_to_empty() {
        assert_eq!(clean_completion(PROMPT, Some("because"), PROMPT), "");
        assert_eq!(clean_completion(PROMPT, None, "   \n\n  "), "");
        assert_eq!(clean_completion(PROMPT, Some("because"), "because"), "");
    }
}
