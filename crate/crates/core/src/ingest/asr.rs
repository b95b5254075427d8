use serde::{Deserialize, Serialize};

use super::{Label, SessionRecord, Utterance, WordToken};
use crate::error::{invalid, Error, Result};

#[derive(Deserialize)]
struct AsrFile {
    speaker_id: String,
    label: Option<String>,
    utterances: Vec<AsrUtterance>,
}

#[derive(Deserialize, Serialize)]
struct AsrUtterance {
    words: Vec<WordToken>,
}

#[derive(Serialize)]
struct AsrFileOut<'a> {
    speaker_id: &'a str,
    label: Option<Label>,
    utterances: Vec<AsrUtterance>,
}

/// One row of a diarization segmentation file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Segment {
    pub speaker: String,
    pub begin_ms: u64,
    pub end_ms: u64,
}

/// Parses an ASR session file. When `segmentation` is given, utterance
/// boundaries are taken from the rows whose `speaker` equals the session's
/// `speaker_id`: each word goes to the last segment beginning at or before
/// its start time (words preceding every segment go to the first), and
/// segments that receive no words are dropped.
pub fn parse_asr_session(asr_json: &[u8], segmentation: Option<&[u8]>) -> Result<SessionRecord> {
    let file: AsrFile = serde_json::from_slice(asr_json).map_err(|e| {
        Error::parse(
            "ASR JSON",
            format!("byte {}", byte_offset(asr_json, e.line(), e.column())),
            e.to_string(),
        )
    })?;
    let label = file.label.as_deref().map(str::parse).transpose()?;

    let mut groups: Vec<Vec<WordToken>> = Vec::with_capacity(file.utterances.len());
    let mut flat_index = 0usize;
    for (u, utt) in file.utterances.into_iter().enumerate() {
        if utt.words.is_empty() {
            return Err(invalid!("utterance {u} has no words"));
        }
        let mut words = Vec::with_capacity(utt.words.len());
        for mut w in utt.words {
            w.text = w.text.trim().to_lowercase();
            w.check(&format!("word {flat_index} (utterance {u})"))?;
            words.push(w);
            flat_index += 1;
        }
        groups.push(words);
    }
    if flat_index == 0 {
        return Err(invalid!("session {:?} is empty", file.speaker_id));
    }

    if let Some(seg) = segmentation {
        let segments: Vec<Segment> = parse_segmentation(seg)?
            .into_iter()
            .filter(|s| s.speaker == file.speaker_id)
            .collect();
        if segments.is_empty() {
            return Err(invalid!(
                "segmentation has no rows for speaker {:?}",
                file.speaker_id
            ));
        }
        groups = regroup(groups.into_iter().flatten().collect(), &segments);
    }

    let utterances = groups
        .into_iter()
        .enumerate()
        .map(|(i, words)| Utterance::new(i, words))
        .collect::<Result<Vec<_>>>()?;
    SessionRecord::new(file.speaker_id, label, utterances)
}

fn regroup(mut words: Vec<WordToken>, segments: &[Segment]) -> Vec<Vec<WordToken>> {
    words.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut groups: Vec<Vec<WordToken>> = vec![Vec::new(); segments.len()];
    for w in words {
        let seg = segments
            .iter()
            .rposition(|s| s.begin_ms as f64 / 1000.0 <= w.start_s)
            .unwrap_or(0);
        groups[seg].push(w);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Parses a `speaker,begin_ms,end_ms` CSV. Rows are returned sorted by
/// speaker and begin time; segments of one speaker may not overlap.
pub fn parse_segmentation(csv_bytes: &[u8]) -> Result<Vec<Segment>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("segmentation CSV", "line 1", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["speaker", "begin_ms", "end_ms"] {
        return Err(Error::parse(
            "segmentation CSV",
            "line 1",
            "expected header speaker,begin_ms,end_ms",
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<Segment>().enumerate() {
        let row = rec.map_err(|e| {
            Error::parse("segmentation CSV", format!("line {}", i + 2), e.to_string())
        })?;
        if row.end_ms < row.begin_ms {
            return Err(invalid!(
                "segmentation line {}: end_ms {} before begin_ms {}",
                i + 2,
                row.end_ms,
                row.begin_ms
            ));
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| (&a.speaker, a.begin_ms).cmp(&(&b.speaker, b.begin_ms)));
    for pair in rows.windows(2) {
        if pair[0].speaker == pair[1].speaker && pair[1].begin_ms < pair[0].end_ms {
            return Err(invalid!(
                "segmentation: overlapping segments for speaker {:?} at {} ms",
                pair[1].speaker,
                pair[1].begin_ms
            ));
        }
    }
    Ok(rows)
}

/// Serializes a session to the canonical ASR JSON schema.
pub fn to_asr_json(session: &SessionRecord) -> String {
    let out = AsrFileOut {
        speaker_id: &session.speaker_id,
        label: session.label,
        utterances: session
            .utterances()
            .iter()
            .map(|u| AsrUtterance {
                words: u.words().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string(&out).expect("session serialization is infallible")
}

/// serde_json reports 1-based line/column; convert to a 0-based byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in bytes.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_WORDS: &str = r#"{"speaker_id":"s01","label":"AD","utterances":[{"words":[
        {"text":"The","start_s":0.0,"end_s":0.2,"confidence":0.9},
        {"text":"boy","start_s":0.3,"end_s":0.6,"confidence":0.8}]}]}"#;

    #[test]
    fn minimal_session() {
        let s = parse_asr_session(TWO_WORDS.as_bytes(), None).unwrap();
        assert_eq!(s.speaker_id, "s01");
        assert_eq!(s.label, Some(Label::Ad));
        assert_eq!(s.utterances().len(), 1);
        assert_eq!(s.utterances()[0].words().len(), 2);
        assert_eq!(s.utterances()[0].words()[0].text, "the");
    }

    #[test]
    fn segmentation_splits_utterances() {
        let seg = b"speaker,begin_ms,end_ms\ns01,0,250\ns01,250,1000\nINV,0,5000\n";
        let s = parse_asr_session(TWO_WORDS.as_bytes(), Some(seg)).unwrap();
        assert_eq!(s.utterances().len(), 2);
        assert_eq!(s.utterances()[0].words()[0].text, "the");
        assert_eq!(s.utterances()[1].words()[0].text, "boy");
        assert_eq!(s.utterances()[1].index(), 1);
    }

    #[test]
    fn segmentation_without_matching_speaker() {
        let seg = b"speaker,begin_ms,end_ms\nINV,0,5000\n";
        let err = parse_asr_session(TWO_WORDS.as_bytes(), Some(seg)).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn overlapping_segments_rejected() {
        let seg = b"speaker,begin_ms,end_ms\ns01,0,300\ns01,250,1000\n";
        assert!(parse_segmentation(seg).is_err());
    }

    #[test]
    fn end_before_start_names_word() {
        let json = r#"{"speaker_id":"s","label":null,"utterances":[{"words":[
            {"text":"a","start_s":0.0,"end_s":0.05,"confidence":0.9},
            {"text":"b","start_s":0.2,"end_s":0.1,"confidence":0.9}]}]}"#;
        let err = parse_asr_session(json.as_bytes(), None).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("word 1"), "{err}");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let json = b"{\"speaker_id\": \"s\",\n \"label\": nul}";
        let err = parse_asr_session(json, None).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("byte ")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_session_rejected() {
        let json = br#"{"speaker_id":"s","label":null,"utterances":[]}"#;
        assert!(parse_asr_session(json, None).unwrap_err().is_validation());
    }

    #[test]
    fn overlap_tolerance() {
        let ok = r#"{"speaker_id":"s","label":null,"utterances":[{"words":[
            {"text":"a","start_s":0.0,"end_s":0.5,"confidence":0.9},
            {"text":"b","start_s":0.495,"end_s":0.7,"confidence":0.9}]}]}"#;
        assert!(parse_asr_session(ok.as_bytes(), None).is_ok());
        let bad = ok.replace("0.495", "0.480");
        assert!(parse_asr_session(bad.as_bytes(), None).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let s = parse_asr_session(TWO_WORDS.as_bytes(), None).unwrap();
        let again = parse_asr_session(to_asr_json(&s).as_bytes(), None).unwrap();
        assert_eq!(s, again);
    }
}
