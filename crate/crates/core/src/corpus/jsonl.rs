use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Caption, CorpusError, JudgmentRecord, Result, TripletRecord};

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses one record per non-blank line. Line numbers in errors are 1-based.
fn parse_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn parse_captions(text: &str) -> Result<Vec<Caption>> {
    let mut seen = HashSet::new();
    let mut captions = Vec::new();
    for (_, caption) in parse_lines::<Caption>(text)? {
        if !seen.insert(caption.caption_id.clone()) {
            return Err(CorpusError::Duplicate {
                kind: "caption",
                id: caption.caption_id,
            });
        }
        captions.push(caption);
    }
    Ok(captions)
}

/// Loads captions from a JSON Lines file of `{caption_id, image_id, text}`.
pub fn load_captions(path: impl AsRef<Path>) -> Result<Vec<Caption>> {
    parse_captions(&read_to_string(path.as_ref())?)
}

pub fn parse_judgments(text: &str) -> Result<Vec<JudgmentRecord>> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, record) in parse_lines::<JudgmentRecord>(text)? {
        let record = record.finalize().map_err(|e| CorpusError::Parse {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(record.candidate.caption_id.clone()) {
            return Err(CorpusError::Duplicate {
                kind: "caption",
                id: record.candidate.caption_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Loads judgment records and normalizes the mean rater score onto `[0, 1]`.
pub fn load_judgments(path: impl AsRef<Path>) -> Result<Vec<JudgmentRecord>> {
    parse_judgments(&read_to_string(path.as_ref())?)
}

pub fn parse_triplets(text: &str) -> Result<Vec<TripletRecord>> {
    parse_lines::<TripletRecord>(text)?
        .into_iter()
        .map(|(line, t)| {
            t.validate().map_err(|e| CorpusError::Parse {
                line,
                message: e.to_string(),
            })?;
            Ok(t)
        })
        .collect()
}

pub fn load_triplets(path: impl AsRef<Path>) -> Result<Vec<TripletRecord>> {
    parse_triplets(&read_to_string(path.as_ref())?)
}

/// Writes `records` as JSON Lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: impl IntoIterator<Item = T>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for record in records {
        let line = serde_json::to_string(&record).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Choice;

    #[test]
    fn caption_line_is_tokenized() {
        let caps = parse_captions(r#"{"caption_id":"c1","image_id":"i1","text":"A dog runs."}"#).unwrap();
        assert_eq!(caps.len(), 1);
        assert_eq!(caps[0].tokens, vec!["a", "dog", "runs", "."]);
        assert_eq!(caps[0].text, "A dog runs.");
    }

    #[test]
    fn empty_input_is_empty_set() {
        assert!(parse_captions("").unwrap().is_empty());
        assert!(parse_judgments("\n\n").unwrap().is_empty());
    }

    #[test]
    fn truncated_third_line_reports_line_three() {
        let text = concat!(
            r#"{"caption_id":"c1","image_id":"i1","text":"a dog"}"#,
            "\n",
            r#"{"caption_id":"c2","image_id":"i1","text":"a cat"}"#,
            "\n",
            r#"{"caption_id":"c3","image_id":"i1","te"#,
            "\n"
        );
        match parse_captions(text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_caption_id_is_rejected() {
        let text = concat!(
            r#"{"caption_id":"c1","image_id":"i1","text":"a dog"}"#,
            "\n",
            r#"{"caption_id":"c1","image_id":"i2","text":"a cat"}"#
        );
        assert!(matches!(parse_captions(text), Err(CorpusError::Duplicate { .. })));
    }

    #[test]
    fn empty_text_is_a_parse_error() {
        let text = r#"{"caption_id":"c1","image_id":"i1","text":"  "}"#;
        assert!(matches!(parse_captions(text), Err(CorpusError::Parse { line: 1, .. })));
    }

    #[test]
    fn judgment_normalized_on_load() {
        let text = r#"{"image_id":"i1","candidate":{"caption_id":"c1","image_id":"i1","text":"a dog"},"references":[],"raw_scores":[2,3,4],"scale":[1,5]}"#;
        let recs = parse_judgments(text).unwrap();
        assert_eq!(recs[0].normalized, 0.5);
        assert_eq!(recs[0].system, None);
    }

    #[test]
    fn out_of_scale_rating_reports_line() {
        let text = r#"{"image_id":"i1","candidate":{"caption_id":"c1","image_id":"i1","text":"a dog"},"raw_scores":[6],"scale":[1,5]}"#;
        assert!(matches!(parse_judgments(text), Err(CorpusError::Parse { line: 1, .. })));
    }

    #[test]
    fn triplet_round_trips() {
        let text = r#"{"image_id":"i1","references_A":[{"caption_id":"r1","image_id":"i1","text":"a dog"}],"candidate_B":{"caption_id":"b","image_id":"i1","text":"a dog runs"},"candidate_C":{"caption_id":"c","image_id":"i1","text":"a cat"},"human_choice":"B"}"#;
        let t = parse_triplets(text).unwrap();
        assert_eq!(t[0].human_choice, Choice::B);
        let again = serde_json::to_string(&t[0]).unwrap();
        assert_eq!(parse_triplets(&again).unwrap(), t);
    }

    #[test]
    fn triplet_without_references_is_rejected() {
        let text = r#"{"image_id":"i1","references_A":[],"candidate_B":{"caption_id":"b","image_id":"i1","text":"x"},"candidate_C":{"caption_id":"c","image_id":"i1","text":"y"},"human_choice":"C"}"#;
        assert!(parse_triplets(text).is_err());
    }
}
