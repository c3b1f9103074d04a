//! Strict extraction of a JSON triple array from free-form model output.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no balanced JSON array in response")]
    NoArray,
    #[error("malformed JSON array: {0}")]
    Malformed(String),
    #[error("element {index} has the wrong shape: {reason}")]
    WrongShape { index: usize, reason: String },
}

/// Byte range of the first balanced `[...]` span, ignoring brackets inside
/// JSON string literals.
pub fn find_balanced_array(raw: &str) -> Option<(usize, usize)> {
    let start = raw.find('[')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in raw.as_bytes().iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, i + 1));
                }
            }
            _ => {}
        }
    }
    None
}

/// Parse the first balanced JSON array in `raw` into triples. Every element
/// must be an object with non-empty string `subject`, `predicate` and
/// `object` fields.
pub fn parse_valid_json(raw: &str) -> Result<Vec<RawTriple>, ParseError> {
    let (start, end) = find_balanced_array(raw).ok_or(ParseError::NoArray)?;
    let value: Value =
        serde_json::from_str(&raw[start..end]).map_err(|e| ParseError::Malformed(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| ParseError::Malformed("not an array".into()))?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let shape = |reason: String| ParseError::WrongShape { index, reason };
            let obj = item
                .as_object()
                .ok_or_else(|| shape("not an object".into()))?;
            let field = |name: &str| -> Result<String, ParseError> {
                let v = obj
                    .get(name)
                    .ok_or_else(|| shape(format!("missing \"{name}\"")))?;
                let s = v
                    .as_str()
                    .ok_or_else(|| shape(format!("\"{name}\" is not a string")))?
                    .trim();
                if s.is_empty() {
                    return Err(shape(format!("\"{name}\" is empty")));
                }
                Ok(s.to_string())
            };
            Ok(RawTriple {
                subject: field("subject")?,
                predicate: field("predicate")?,
                object: field("object")?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed() {
        let t = parse_valid_json(r#"[{"subject":"x","predicate":"y","object":"z"}]"#).unwrap();
        assert_eq!(
            t,
            vec![RawTriple {
                subject: "x".into(),
                predicate: "y".into(),
                object: "z".into()
            }]
        );
    }

    #[test]
    fn prose_around_array() {
        let raw = r#"Sure! Here are the triples: [{"subject":"a","predicate":"b","object":"c"}] Hope this helps."#;
        assert_eq!(find_balanced_array(raw), Some((28, 74)));
        assert_eq!(parse_valid_json(raw).unwrap().len(), 1);
    }

    #[test]
    fn brackets_inside_strings() {
        let raw = r#"```json
[{"subject":"a [x]","predicate":"b]","object":"c"}]
```"#;
        let t = parse_valid_json(raw).unwrap();
        assert_eq!(t[0].subject, "a [x]");
        assert_eq!(t[0].predicate, "b]");
    }

    #[test]
    fn error_variants() {
        assert_eq!(parse_valid_json("no json here"), Err(ParseError::NoArray));
        assert_eq!(
            parse_valid_json("[{\"subject\": 1"),
            Err(ParseError::NoArray)
        );
        assert!(matches!(
            parse_valid_json("[1, 2,]"),
            Err(ParseError::Malformed(_))
        ));
        assert!(matches!(
            parse_valid_json(r#"[{"subject":"x"}]"#),
            Err(ParseError::WrongShape { index: 0, .. })
        ));
        assert!(matches!(
            parse_valid_json(r#"[{"subject":"x","predicate":" ","object":"z"}]"#),
            Err(ParseError::WrongShape { .. })
        ));
        assert!(matches!(
            parse_valid_json(r#"["x"]"#),
            Err(ParseError::WrongShape { .. })
        ));
    }

    #[test]
    fn empty_array_is_ok() {
        assert_eq!(parse_valid_json("Nothing here: []"), Ok(vec![]));
    }
}
