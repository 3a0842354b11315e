use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

// {"answer": <string or bare word>, "confidence": <number>} with either quote style,
// keys in either order
static ANSWER_FIRST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"\{\s*["']answer["']\s*:\s*(?:"(?P<dq>[^"]*)"|'(?P<sq>[^']*)'|(?P<bare>[^,}'"]+?))\s*,\s*["']confidence["']\s*:\s*["']?(?P<conf>[-+]?\d+(?:\.\d+)?)\s*%?["']?\s*\}"#,
    )
    .unwrap()
});
static CONFIDENCE_FIRST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"\{\s*["']confidence["']\s*:\s*["']?(?P<conf>[-+]?\d+(?:\.\d+)?)\s*%?["']?\s*,\s*["']answer["']\s*:\s*(?:"(?P<dq>[^"]*)"|'(?P<sq>[^']*)'|(?P<bare>[^,}'"]+?))\s*\}"#,
    )
    .unwrap()
});

/// Extract `(category index, confidence)` from the first answer object in a
/// chat response. Category matching ignores case and surrounding whitespace;
/// the confidence is clamped to `[0, 100]`.
pub fn parse_llm_response(raw: &str, categories: &[String]) -> Result<(usize, f64)> {
    let caps = [&*ANSWER_FIRST, &*CONFIDENCE_FIRST]
        .iter()
        .filter_map(|re| re.captures(raw))
        .min_by_key(|c| c.get(0).map_or(usize::MAX, |m| m.start()))
        .ok_or_else(|| Error::ResponseParse(format!("no answer object in {:?}", truncate(raw, 200))))?;

    let answer = ["dq", "sq", "bare"]
        .iter()
        .find_map(|k| caps.name(k))
        .map(|m| m.as_str().trim())
        .unwrap_or_default();
    let confidence: f64 = caps["conf"]
        .parse()
        .map_err(|_| Error::ResponseParse(format!("bad confidence {:?}", &caps["conf"])))?;

    let wanted = answer.to_lowercase();
    let label = categories
        .iter()
        .position(|c| c.trim().to_lowercase() == wanted)
        .ok_or_else(|| Error::UnknownCategory {
            got: answer.to_string(),
            candidates: categories.to_vec(),
        })?;
    Ok((label, confidence.clamp(0.0, 100.0)))
}

/// The response shape the prompts ask for.
pub fn render_response(category: &str, confidence: f64) -> String {
    let answer = serde_json::to_string(category).expect("string serializes");
    format!("[{{\"answer\": {answer}, \"confidence\": {confidence}}}]")
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cats(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn plain_object() {
        let c = cats(&["pos", "neg"]);
        assert_eq!(parse_llm_response(r#"[{"answer":"pos","confidence":90}]"#, &c).unwrap(), (0, 90.0));
    }

    #[test]
    fn surrounding_prose_and_case() {
        let c = cats(&["Neural Networks", "Theory"]);
        let raw = "Sure! Based on the abstract:\n[{'answer': 'theory', 'confidence': 72.5}]\nHope this helps.";
        assert_eq!(parse_llm_response(raw, &c).unwrap(), (1, 72.5));
        let raw = r#"here: {"confidence": "64", "answer": "neural networks"} and also {"answer":"Theory","confidence":99}"#;
        assert_eq!(parse_llm_response(raw, &c).unwrap(), (0, 64.0));
    }

    #[test]
    fn clamps_confidence() {
        let c = cats(&["a", "b"]);
        assert_eq!(parse_llm_response(r#"[{"answer":"b","confidence":150}]"#, &c).unwrap(), (1, 100.0));
        assert_eq!(parse_llm_response(r#"[{"answer":"b","confidence":-3}]"#, &c).unwrap(), (1, 0.0));
    }

    #[test]
    fn errors() {
        let c = cats(&["a", "b"]);
        assert!(matches!(parse_llm_response("I think it is a.", &c), Err(Error::ResponseParse(_))));
        match parse_llm_response(r#"[{"answer":"z","confidence":10}]"#, &c) {
            Err(Error::UnknownCategory { got, candidates }) => {
                assert_eq!(got, "z");
                assert_eq!(candidates, c);
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(
            names in proptest::collection::btree_set("[A-Za-z][A-Za-z _-]{0,15}[A-Za-z]", 1..6),
            pick in any::<prop::sample::Index>(),
            conf in 0.0f64..=100.0,
        ) {
            let c: Vec<String> = names.into_iter().collect();
            // names differing only in case would be ambiguous
            let mut lower: Vec<String> = c.iter().map(|s| s.to_lowercase()).collect();
            lower.sort();
            lower.dedup();
            prop_assume!(lower.len() == c.len());
            let k = pick.index(c.len());
            let (label, parsed) = parse_llm_response(&render_response(&c[k], conf), &c).unwrap();
            prop_assert_eq!(label, k);
            prop_assert_eq!(parsed, conf);
        }
    }
}
