//! Prompt templates and parsers for the structured replies they request.
//!
//! Template bodies ship as text files under `templates/` and are compiled in.
//! Slots are written `{name}`; rendering is single-pass, so braces inside
//! bound values (code, literals) are never re-expanded.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::ChatMessage;
use crate::literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    UtgenFailing,
    RandomUtInput,
    RandomUtOutput,
    NoUtFeedback,
    UtFeedback,
    Corruption,
    Rationalization,
    CodeFix,
}

impl TemplateName {
    pub const ALL: [TemplateName; 8] = [
        TemplateName::UtgenFailing,
        TemplateName::RandomUtInput,
        TemplateName::RandomUtOutput,
        TemplateName::NoUtFeedback,
        TemplateName::UtFeedback,
        TemplateName::Corruption,
        TemplateName::Rationalization,
        TemplateName::CodeFix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::UtgenFailing => "utgen_failing",
            TemplateName::RandomUtInput => "random_ut_input",
            TemplateName::RandomUtOutput => "random_ut_output",
            TemplateName::NoUtFeedback => "no_ut_feedback",
            TemplateName::UtFeedback => "ut_feedback",
            TemplateName::Corruption => "corruption",
            TemplateName::Rationalization => "rationalization",
            TemplateName::CodeFix => "code_fix",
        }
    }

    pub fn body(self) -> &'static str {
        let raw = match self {
            TemplateName::UtgenFailing => include_str!("../templates/utgen_failing.txt"),
            TemplateName::RandomUtInput => include_str!("../templates/random_ut_input.txt"),
            TemplateName::RandomUtOutput => include_str!("../templates/random_ut_output.txt"),
            TemplateName::NoUtFeedback => include_str!("../templates/no_ut_feedback.txt"),
            TemplateName::UtFeedback => include_str!("../templates/ut_feedback.txt"),
            TemplateName::Corruption => include_str!("../templates/corruption.txt"),
            TemplateName::Rationalization => include_str!("../templates/rationalization.txt"),
            TemplateName::CodeFix => include_str!("../templates/code_fix.txt"),
        };
        raw.strip_suffix('\n').unwrap_or(raw)
    }

    /// Slot names in order of first appearance.
    pub fn slots(self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for (_, name, _) in slot_spans(self.body()) {
            if !out.contains(&name) {
                out.push(name);
            }
        }
        out
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(start, name, end)` for every `{slot}` in `body`.
fn slot_spans(body: &str) -> Vec<(usize, &str, usize)> {
    let bytes = body.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &body[i + 1..];
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
                .count();
            if len > 0 && rest.as_bytes().get(len) == Some(&b'}') {
                spans.push((i, &rest[..len], i + len + 2));
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    spans
}

/// Slot values for a render call.
#[derive(Debug, Clone, Default)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, slot: &str, value: impl Into<String>) -> Self {
        self.0.insert(slot.to_string(), value.into());
        self
    }

    pub fn get(&self, slot: &str) -> Option<&str> {
        self.0.get(slot).map(String::as_str)
    }
}

/// Fills every slot of the template body.
pub fn render_text(name: TemplateName, bindings: &Bindings) -> Result<String> {
    let body = name.body();
    let mut out = String::with_capacity(body.len() * 2);
    let mut last = 0;
    for (start, slot, end) in slot_spans(body) {
        let value = bindings.get(slot).ok_or_else(|| Error::MissingSlot {
            template: name.to_string(),
            slot: slot.to_string(),
        })?;
        out.push_str(&body[last..start]);
        out.push_str(value);
        last = end;
    }
    out.push_str(&body[last..]);
    Ok(out)
}

/// Renders a template as a single user message.
pub fn render(name: TemplateName, bindings: &Bindings) -> Result<Vec<ChatMessage>> {
    Ok(vec![ChatMessage::user(render_text(name, bindings)?)])
}

// ---------------------------------------------------------------------------
// Reply parsing

/// Structured content of a UT-generation reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedUtResponse {
    pub hypothesis: Option<String>,
    pub error_pattern: Option<String>,
    pub args: Vec<String>,
    pub output: Option<String>,
    pub raw: String,
}

const ARGUMENTS_MARK: &str = "Arguments:";
const OUTPUT_MARK: &str = "Output:";

pub const CORRECT_SENTINEL: &str = "The above code is correct.";
pub const WRONG_SENTINEL: &str = "The above code is wrong, please fix it.";

/// Strips markdown wrappers (backtick fences, inline code, bold) around a value.
fn strip_delimiters(text: &str) -> &str {
    let mut t = text.trim();
    loop {
        let before = t;
        if let Some(inner) = t.strip_prefix("```").and_then(|s| s.strip_suffix("```")) {
            let inner = inner.strip_prefix("python").unwrap_or(inner);
            t = inner.trim();
        } else if let Some(inner) = t.strip_prefix("**").and_then(|s| s.strip_suffix("**")) {
            t = inner.trim();
        } else if t.len() >= 2 && t.starts_with('`') && t.ends_with('`') {
            t = t[1..t.len() - 1].trim();
        }
        if t == before {
            return t;
        }
    }
}

/// Byte offset just past the last occurrence of `mark`.
fn after_last(text: &str, mark: &str) -> Option<usize> {
    text.rfind(mark).map(|i| i + mark.len())
}

/// Parses the argument list of the last `Arguments:` line.
pub fn parse_arguments(completion: &str, entry_point: &str) -> Result<Vec<String>> {
    let start = after_last(completion, ARGUMENTS_MARK)
        .ok_or_else(|| Error::Parse("no `Arguments:` line".into()))?;
    let rest = completion[start..].trim_start();
    let rest = rest.trim_start_matches(['`', '*', ' ']);
    let call = rest.strip_prefix(entry_point).ok_or_else(|| {
        let got: String = rest.chars().take(40).collect();
        Error::Parse(format!("expected a call to `{entry_point}`, found `{got}`"))
    })?;
    let open = call.len() - call.trim_start().len();
    if !call[open..].starts_with('(') {
        return Err(Error::Parse(format!(
            "entry point mismatch: `{entry_point}` is not followed by `(`"
        )));
    }
    let close = literal::matching_close(call, open)?;
    literal::split_top_level(&call[open + 1..close])
}

/// Value of the last `Output:` line, with markdown delimiters removed.
pub fn parse_output(completion: &str) -> Option<String> {
    let start = after_last(completion, OUTPUT_MARK)?;
    let rest = &completion[start..];
    let line = rest.lines().next().unwrap_or("").trim();
    let value = if line.is_empty() || line == "```" || line == "```python" {
        // value on the following line(s), possibly fenced
        let body: Vec<&str> = rest
            .lines()
            .skip(1)
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("```"))
            .take(1)
            .collect();
        body.first().copied()?
    } else {
        line
    };
    let value = strip_delimiters(value);
    (!value.is_empty()).then(|| value.to_string())
}

fn section_between(text: &str, start_mark: &str, end_marks: &[&str]) -> Option<String> {
    let start = text.find(start_mark)? + start_mark.len();
    let rest = &text[start..];
    let end = end_marks
        .iter()
        .filter_map(|m| rest.find(m))
        .min()
        .unwrap_or(rest.len());
    let section = rest[..end].trim();
    (!section.is_empty()).then(|| section.to_string())
}

/// Parses a reply in the UT-generation format.
pub fn parse_unit_test(completion: &str, entry_point: &str) -> Result<ParsedUtResponse> {
    let args = parse_arguments(completion, entry_point)?;
    Ok(ParsedUtResponse {
        hypothesis: section_between(completion, "## Hypothesis", &["Error Pattern:", "## Unit Test"]),
        error_pattern: section_between(completion, "Error Pattern:", &["\n\n", "## Unit Test"]),
        args,
        output: parse_output(completion),
        raw: completion.to_string(),
    })
}

/// Body of the last fenced code block, else the suffix starting at
/// `def <entry_point>`.
pub fn parse_code_block(completion: &str, entry_point: &str) -> Result<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in completion.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(body), true) => {
                blocks.push(body.join("\n"));
                current = None;
            }
            (Some(body), false) => body.push(line),
            (None, false) => {}
        }
    }
    if let Some(code) = blocks.into_iter().rev().find(|b| !b.trim().is_empty()) {
        return Ok(code);
    }
    let needle = format!("def {entry_point}");
    match completion.find(&needle) {
        Some(i) => Ok(completion[i..].trim_end().to_string()),
        None => Err(Error::Parse("no code found in completion".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritiqueVerdict {
    Correct,
    Wrong,
    /// Neither sentinel present; callers treat this as still wrong.
    Unclear,
}

/// Verdict of the last sentinel sentence in a self-critique.
pub fn critique_verdict(completion: &str) -> CritiqueVerdict {
    match (completion.rfind(CORRECT_SENTINEL), completion.rfind(WRONG_SENTINEL)) {
        (Some(c), Some(w)) if c > w => CritiqueVerdict::Correct,
        (Some(_), None) => CritiqueVerdict::Correct,
        (_, Some(_)) => CritiqueVerdict::Wrong,
        (None, None) => CritiqueVerdict::Unclear,
    }
}

pub fn is_declared_correct(completion: &str) -> bool {
    critique_verdict(completion) == CritiqueVerdict::Correct
}

/// Reasoning under the last `### Reasoning` header, or the whole reply.
pub fn parse_reasoning(completion: &str) -> String {
    match after_last(completion, "### Reasoning") {
        Some(i) => completion[i..].trim().to_string(),
        None => completion.trim().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_bindings() -> Bindings {
        Bindings::new()
            .set("signature", "next_smallest_pld(num: int) -> int")
            .set(
                "description",
                "Write a function to find the next smallest palindrome of a specified integer.",
            )
            .set("code", "def next_smallest_pld(num):\n    return num")
            .set("entry_point", "next_smallest_pld")
    }

    #[test]
    fn utgen_prompt_marks_code_incorrect() {
        let text = render_text(TemplateName::UtgenFailing, &fig1_bindings()).unwrap();
        assert!(text.contains("The code solution I have provided to you is **incorrect**"));
        assert!(text.contains("Arguments: next_smallest_pld(<all arguments>)"));
        assert!(!text.contains('{'));
    }

    #[test]
    fn feedback_prompts() {
        let fb = Bindings::new()
            .set("wrong_testcase_input", "f(1)")
            .set("wrong_testcase_output", "2")
            .set("wrong_testcase_expected", "3");
        let text = render_text(TemplateName::UtFeedback, &fb).unwrap();
        assert!(text.starts_with("The above code is incorrect and does not pass the testcase."));
        assert!(text.ends_with("Expected: 3"));

        let text = render_text(
            TemplateName::NoUtFeedback,
            &Bindings::new().set("description", "d").set("code", "c"),
        )
        .unwrap();
        assert!(text.trim_end().ends_with("please fix it.\""));
    }

    #[test]
    fn missing_slot_is_named() {
        let err = render_text(TemplateName::UtFeedback, &Bindings::new()).unwrap_err();
        match err {
            Error::MissingSlot { template, slot } => {
                assert_eq!(template, "ut_feedback");
                assert_eq!(slot, "wrong_testcase_input");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn braces_in_values_are_not_expanded() {
        let b = fig1_bindings().set("code", "def f():\n    return {entry_point}");
        let text = render_text(TemplateName::UtgenFailing, &b).unwrap();
        assert!(text.contains("return {entry_point}"));
    }

    #[test]
    fn slot_inventory() {
        assert_eq!(
            TemplateName::UtFeedback.slots(),
            vec!["wrong_testcase_input", "wrong_testcase_output", "wrong_testcase_expected"]
        );
        assert!(!TemplateName::RandomUtInput.slots().contains(&"code"));
        assert!(TemplateName::CodeFix.slots().contains(&"feedback"));
    }

    #[test]
    fn parses_fig1_reply() {
        let reply = "## Hypothesis\n\nThe code returns the input.\n\nError Pattern: palindromes that need a carry\n\n## Unit Test\n\n### Input Arguments\n\nPick 123.\nArguments: next_smallest_pld(123)\n\n### Output\n\nThe next palindrome is 131.\n\nOutput: 131";
        let parsed = parse_unit_test(reply, "next_smallest_pld").unwrap();
        assert_eq!(parsed.args, vec!["123"]);
        assert_eq!(parsed.output.as_deref(), Some("131"));
        assert_eq!(parsed.hypothesis.as_deref(), Some("The code returns the input."));
        assert_eq!(
            parsed.error_pattern.as_deref(),
            Some("palindromes that need a carry")
        );
    }

    #[test]
    fn nested_commas_survive() {
        let parsed =
            parse_unit_test("Arguments: g([1, (2, 3)], 'a,b')\nOutput: None", "g").unwrap();
        assert_eq!(parsed.args, vec!["[1, (2, 3)]", "'a,b'"]);
        assert_eq!(parsed.output.as_deref(), Some("None"));
    }

    #[test]
    fn inputs_only_reply() {
        let parsed = parse_unit_test("reasoning...\nArguments: f(5)", "f").unwrap();
        assert_eq!(parsed.args, vec!["5"]);
        assert!(parsed.output.is_none());
    }

    #[test]
    fn last_occurrence_wins_and_delimiters_strip() {
        let reply = "Arguments: f(1)\nOutput: 1\nActually:\nArguments: `f(2, [3])`\nOutput: `[4]`";
        let parsed = parse_unit_test(reply, "f").unwrap();
        assert_eq!(parsed.args, vec!["2", "[3]"]);
        assert_eq!(parsed.output.as_deref(), Some("[4]"));
        assert_eq!(parse_output("Output:\n```\n{'a': 1}\n```").as_deref(), Some("{'a': 1}"));
        assert_eq!(parse_output("Output: **True**").as_deref(), Some("True"));
    }

    #[test]
    fn multiline_arguments() {
        let parsed = parse_unit_test("Arguments: f([1,\n 2,\n 3], 4)\nOutput: 0", "f").unwrap();
        assert_eq!(parsed.args, vec!["[1,\n 2,\n 3]", "4"]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_unit_test("no marker here", "f").is_err());
        assert!(parse_unit_test("Arguments: g(1)", "f").is_err());
        assert!(parse_unit_test("Arguments: f([1, 2)", "f").is_err());
        assert!(parse_unit_test("Arguments: f", "f").is_err());
        assert_eq!(parse_unit_test("Arguments: f()", "f").unwrap().args, Vec::<String>::new());
    }

    #[test]
    fn code_blocks() {
        assert_eq!(
            parse_code_block("text\n```python\ndef f():\n    return 1\n```\n", "f").unwrap(),
            "def f():\n    return 1"
        );
        assert_eq!(
            parse_code_block("Here it is:\ndef f(x):\n    return x\n", "f").unwrap(),
            "def f(x):\n    return x"
        );
        let two = "```python\ndef f(): return 1\n```\nbetter:\n```python\ndef f(): return 2\n```";
        assert_eq!(parse_code_block(two, "f").unwrap(), "def f(): return 2");
        assert!(parse_code_block("no code", "f").is_err());
    }

    #[test]
    fn sentinels() {
        assert!(is_declared_correct("Feedback: fine.\nThe above code is correct."));
        assert!(!is_declared_correct("Feedback: bad.\nThe above code is wrong, please fix it."));
        assert_eq!(critique_verdict("no idea"), CritiqueVerdict::Unclear);
        assert!(!is_declared_correct("no idea"));
        assert!(!is_declared_correct(
            "The above code is correct. Hmm, no. The above code is wrong, please fix it."
        ));
    }

    #[test]
    fn reasoning_section() {
        assert_eq!(parse_reasoning("junk\n### Reasoning\n\nstep 1\nstep 2\n"), "step 1\nstep 2");
        assert_eq!(parse_reasoning("  plain  "), "plain");
    }
}
