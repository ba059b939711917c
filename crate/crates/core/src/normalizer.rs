//! Turns raw completions into comparable FQN predictions.

use crate::backend::CompletionResult;

/// Stands in for a failed completion. Never equal to any gold FQN.
pub const FAILURE_MARKER: &str = "...";

/// Text some completion front ends show instead of an empty completion.
const NO_COMPLETION_TEXT: &str = "No completions were found";

const QUOTES: &[char] = &[
    '"', '\'', '`', '\u{201C}', '\u{201D}', '\u{2018}', '\u{2019}',
];
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub raw: String,
    pub normalized: String,
    pub failed: bool,
}

impl Prediction {
    pub fn from_result(result: &CompletionResult) -> Self {
        Self::from_raw(extract_prediction(result))
    }

    pub fn from_raw(raw: String) -> Self {
        let normalized = normalize_fqn(&raw);
        Prediction {
            failed: normalized == FAILURE_MARKER,
            raw,
            normalized,
        }
    }
}

/// First line of the completion, trimmed; the failure marker for no completion.
pub fn extract_prediction(result: &CompletionResult) -> String {
    match result.raw() {
        None => FAILURE_MARKER.to_string(),
        Some(text) => {
            let first = text.lines().next().unwrap_or("").trim();
            if first == NO_COMPLETION_TEXT {
                FAILURE_MARKER.to_string()
            } else {
                first.to_string()
            }
        }
    }
}

/// Applies the post-processing rules, in order:
///
/// 1. drop quote marks,
/// 2. empty the contents of matched `()`, `[]` and `<>` pairs,
/// 3. turn `#` and `$` delimiters into dots,
/// 4. collapse runs of dots,
/// 5. trim whitespace and trailing sentence punctuation.
///
/// An empty result becomes [`FAILURE_MARKER`]. Total and idempotent.
pub fn normalize_fqn(raw: &str) -> String {
    let unquoted: String = raw.chars().filter(|c| !QUOTES.contains(c)).collect();
    let emptied = empty_brackets(unquoted.trim());
    let dotted: String = emptied
        .chars()
        .map(|c| if c == '#' || c == '$' { '.' } else { c })
        .collect();
    let mut collapsed = String::with_capacity(dotted.len());
    for c in dotted.chars() {
        if c == '.' && collapsed.ends_with('.') {
            continue;
        }
        collapsed.push(c);
    }
    let trimmed = collapsed
        .trim_start()
        .trim_end_matches(|c: char| c.is_whitespace() || TRAILING_PUNCT.contains(&c));
    if trimmed.is_empty() {
        FAILURE_MARKER.to_string()
    } else {
        trimmed.to_string()
    }
}

fn closer_for(open: char) -> Option<char> {
    match open {
        '(' => Some(')'),
        '[' => Some(']'),
        '<' => Some('>'),
        _ => None,
    }
}

/// Removes everything strictly inside outermost matched bracket pairs.
/// Unmatched brackets are ordinary characters.
fn empty_brackets(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut partner = vec![None; chars.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        if closer_for(c).is_some() {
            stack.push(i);
        } else if matches!(c, ')' | ']' | '>') {
            // pop to the nearest opener of the same type; openers skipped over
            // stay unmatched
            if let Some(pos) = stack.iter().rposition(|&o| closer_for(chars[o]) == Some(c)) {
                let open = stack[pos];
                stack.truncate(pos);
                partner[open] = Some(i);
            }
        }
    }
    let mut out = String::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        out.push(chars[i]);
        if let Some(close) = partner[i] {
            out.push(chars[close]);
            i = close + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Exact, case-sensitive match; the failure marker never matches.
pub fn is_correct(prediction: &str, gold: &str) -> bool {
    prediction != FAILURE_MARKER && prediction == gold
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixture_table() {
        let cases = [
            ("java.util.List<String>", "java.util.List<>"),
            ("javax.swing#JFrame", "javax.swing.JFrame"),
            ("\"java.io.File\"", "java.io.File"),
            ("java.util.Map$Entry", "java.util.Map.Entry"),
            ("java.util.Map<String, List<Integer>>", "java.util.Map<>"),
            (
                "java.io.BufferedReader.readLine(x, y)",
                "java.io.BufferedReader.readLine()",
            ),
            ("java.lang.String[3]", "java.lang.String[]"),
            ("\"java.io.File\".", "java.io.File"),
            ("java..io.File", "java.io.File"),
            ("java.sql.Date,", "java.sql.Date"),
            ("", FAILURE_MARKER),
            ("\"\"", FAILURE_MARKER),
            ("...", FAILURE_MARKER),
            ("[Ljava.lang.String;", "[Ljava.lang.String"),
        ];
        for (raw, expected) in cases {
            assert_eq!(normalize_fqn(raw), expected, "raw {raw:?}");
        }
    }

    #[test]
    fn unmatched_brackets_kept() {
        assert_eq!(normalize_fqn("foo(bar"), "foo(bar");
        assert_eq!(normalize_fqn("(<)>"), "()>");
    }

    #[test]
    fn extraction_takes_first_line() {
        let r = CompletionResult::text(" \"java.io.File\"\npublic void x() {}");
        assert_eq!(extract_prediction(&r), "\"java.io.File\"");
        let r = CompletionResult::text("  java.util.List<String>  ");
        assert_eq!(extract_prediction(&r), "java.util.List<String>");
        assert_eq!(
            extract_prediction(&CompletionResult::none()),
            FAILURE_MARKER
        );
        let r = CompletionResult::text("No completions were found");
        assert_eq!(extract_prediction(&r), FAILURE_MARKER);
    }

    #[test]
    fn correctness() {
        assert!(is_correct("java.io.File", "java.io.File"));
        assert!(!is_correct(
            "com.google.gwt.http.client.Cookies",
            "com.google.gwt.user.client.Cookies"
        ));
        assert!(!is_correct(FAILURE_MARKER, FAILURE_MARKER));
        assert!(!is_correct("java.io.file", "java.io.File"));
    }

    #[test]
    fn failed_flag_tracks_marker() {
        let p = Prediction::from_result(&CompletionResult::none());
        assert!(p.failed);
        assert_eq!(p.normalized, FAILURE_MARKER);
        let p = Prediction::from_raw("\"java.io.File\"".into());
        assert!(!p.failed);
    }

    proptest! {
        #[test]
        fn idempotent(s in "[a-zA-Z.#$<>()\\[\\]\"', ;:!?`]{0,40}") {
            let once = normalize_fqn(&s);
            prop_assert_eq!(normalize_fqn(&once), once);
        }

        #[test]
        fn output_has_no_forbidden_chars(s in "\\PC{0,40}") {
            let out = normalize_fqn(&s);
            if out != FAILURE_MARKER {
                prop_assert!(!out.contains(['#', '$']));
                prop_assert!(!out.contains(QUOTES));
                prop_assert!(!out.contains(".."));
            }
        }
    }
}
