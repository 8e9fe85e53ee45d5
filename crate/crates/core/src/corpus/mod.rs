//! Plenary-protocol ingestion.
//!
//! Two XML dialects are supported:
//!
//! * **modern**: Bundestag Open Data (`<dbtplenarprotokoll>`). Metadata comes
//!   from the root attributes `wahlperiode`, `sitzung-nr`, `sitzung-datum`
//!   (falling back to `<wahlperiode>`, `<sitzungsnr>`, `<datum date=..>`).
//!   Every `<redner>` starts a speech; a bare `<name>` inside a `<rede>`
//!   (the presiding officer) starts a speech with unknown party. Text is
//!   taken from `<p>` paragraphs; `<kommentar>` interjections are dropped.
//! * **legacy**: improved markup with speaker milestones. The root carries
//!   `id`, `date`, `session`, `period` attributes (or `<DATE>`, `<SESSION>`,
//!   `<PERIOD>` children). Running text is interleaved with
//!   `<SPEAKER name=".." party=".."/>` markers (or `<SPEAKER party="..">Name</SPEAKER>`);
//!   each sentence belongs to the most recent marker.
//!
//! Sample files for both live in `fixtures/corpus/`.

mod party;
mod segment;
mod stats;

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use party::{normalize_party, PartyId};
pub use segment::segment_sentences;
pub use stats::{corpus_stats, CorpusStats, YearStats};

pub const UNKNOWN_SPEAKER: &str = "Unknown";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("missing metadata: {0}")]
    MissingMetadata(&'static str),
    #[error("inconsistent sentence rows: {0}")]
    InvalidRows(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Modern,
    Legacy,
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "modern" => Ok(Dialect::Modern),
            "legacy" => Ok(Dialect::Legacy),
            other => Err(format!("unknown dialect {other:?}")),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Modern => "modern",
            Dialect::Legacy => "legacy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub index_in_speech: usize,
    pub global_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Speech {
    pub speaker_name: String,
    pub party: PartyId,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub source_id: String,
    pub date: NaiveDate,
    pub session_number: u32,
    pub legislative_period: u32,
    pub speeches: Vec<Speech>,
}

impl Protocol {
    pub fn year(&self) -> i32 {
        self.date.year()
    }

    pub fn sentence_count(&self) -> usize {
        self.speeches.iter().map(|s| s.sentences.len()).sum()
    }
}

/// Guesses the dialect from the root element name.
pub fn detect_dialect(xml: &[u8]) -> Dialect {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => {
                return if e.local_name().as_ref() == b"dbtplenarprotokoll" {
                    Dialect::Modern
                } else {
                    Dialect::Legacy
                };
            }
            Ok(Event::Eof) | Err(_) => return Dialect::Legacy,
            _ => {}
        }
        buf.clear();
    }
}

/// Parses one protocol document.
pub fn parse_protocol(xml: &[u8], dialect: Dialect) -> Result<Protocol, CorpusError> {
    let events = read_events(xml)?;
    match dialect {
        Dialect::Modern => parse_modern(&events),
        Dialect::Legacy => parse_legacy(&events),
    }
}

/// Owned, well-formedness-checked XML events.
#[derive(Debug)]
enum XmlEvent {
    Start(String, Vec<(String, String)>),
    End(String),
    Text(String),
}

fn read_events(xml: &[u8]) -> Result<Vec<XmlEvent>, CorpusError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut events = Vec::new();
    let mut depth = 0usize;
    let mut saw_root = false;
    let malformed = |e: &dyn fmt::Display, pos: u64| {
        CorpusError::MalformedXml(format!("at byte {pos}: {e}"))
    };

    loop {
        let ev = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed(&e, reader.buffer_position()))?;
        match ev {
            Event::Start(e) => {
                if depth == 0 && saw_root {
                    return Err(CorpusError::MalformedXml("multiple root elements".into()));
                }
                saw_root = true;
                depth += 1;
                events.push(XmlEvent::Start(element_name(&e), attributes(&e)?));
            }
            Event::Empty(e) => {
                if depth == 0 && saw_root {
                    return Err(CorpusError::MalformedXml("multiple root elements".into()));
                }
                saw_root = true;
                let name = element_name(&e);
                events.push(XmlEvent::Start(name.clone(), attributes(&e)?));
                events.push(XmlEvent::End(name));
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                events.push(XmlEvent::End(name));
            }
            Event::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|e| malformed(&e, reader.buffer_position()))?;
                events.push(XmlEvent::Text(text.into_owned()));
            }
            Event::CData(t) => {
                events.push(XmlEvent::Text(String::from_utf8_lossy(&t).into_owned()));
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_root {
        return Err(CorpusError::MalformedXml("no root element".into()));
    }
    if depth != 0 {
        return Err(CorpusError::MalformedXml(format!(
            "unexpected end of document with {depth} unclosed element(s)"
        )));
    }
    Ok(events)
}

fn element_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).into_owned()
}

fn attributes(e: &BytesStart<'_>) -> Result<Vec<(String, String)>, CorpusError> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(|err| CorpusError::MalformedXml(err.to_string()))?;
            let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
            let value = a
                .unescape_value()
                .map_err(|err| CorpusError::MalformedXml(err.to_string()))?
                .into_owned();
            Ok((key, value))
        })
        .collect()
}

fn attr<'a>(attrs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    attrs
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key))
        .map(|(_, v)| v.as_str())
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    NaiveDate::parse_from_str(raw, "%d.%m.%Y")
        .or_else(|_| NaiveDate::parse_from_str(raw, "%Y-%m-%d"))
        .ok()
}

#[derive(Default)]
struct Metadata {
    id: Option<String>,
    date: Option<String>,
    session: Option<String>,
    period: Option<String>,
}

impl Metadata {
    fn finish(self, prefix: &str) -> Result<(String, NaiveDate, u32, u32), CorpusError> {
        let date = self
            .date
            .as_deref()
            .and_then(parse_date)
            .ok_or(CorpusError::MissingMetadata("date"))?;
        let session = self
            .session
            .as_deref()
            .and_then(|s| s.trim().parse::<u32>().ok())
            .filter(|s| *s >= 1)
            .ok_or(CorpusError::MissingMetadata("session"))?;
        let period = self
            .period
            .as_deref()
            .and_then(|s| s.trim().parse::<u32>().ok())
            .ok_or(CorpusError::MissingMetadata("period"))?;
        let id = self
            .id
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{prefix}-{period:02}-{session:03}"));
        Ok((id, date, session, period))
    }
}

/// A speech under construction: speaker plus raw paragraphs.
struct PendingSpeech {
    speaker: String,
    party: PartyId,
    paragraphs: Vec<String>,
}

fn finish_speeches(pending: Vec<PendingSpeech>) -> Vec<Speech> {
    let mut global = 0;
    let mut speeches = Vec::new();
    for p in pending {
        let mut sentences = Vec::new();
        for para in &p.paragraphs {
            for text in segment_sentences(para) {
                sentences.push(Sentence { text, index_in_speech: sentences.len(), global_index: global });
                global += 1;
            }
        }
        if !sentences.is_empty() {
            speeches.push(Speech { speaker_name: p.speaker, party: p.party, sentences });
        }
    }
    speeches
}

fn parse_modern(events: &[XmlEvent]) -> Result<Protocol, CorpusError> {
    let mut meta = Metadata::default();
    let mut pending: Vec<PendingSpeech> = Vec::new();

    let mut in_rede = false;
    let mut redner: Option<Vec<(String, String)>> = None;
    let mut redner_field: Option<String> = None;
    let mut paragraph: Option<String> = None;
    let mut skip_depth = 0usize;
    let mut officer: Option<String> = None;
    let mut meta_field: Option<&'static str> = None;
    let mut meta_buf = String::new();

    for ev in events {
        match ev {
            XmlEvent::Start(name, attrs) => {
                match name.as_str() {
                    "dbtplenarprotokoll" => {
                        meta.period = attr(attrs, "wahlperiode").map(str::to_string);
                        meta.session = attr(attrs, "sitzung-nr").map(str::to_string);
                        meta.date = attr(attrs, "sitzung-datum").map(str::to_string);
                    }
                    "datum" if meta.date.is_none() => {
                        meta.date = attr(attrs, "date").map(str::to_string);
                    }
                    "wahlperiode" if !in_rede && meta.period.is_none() => {
                        meta_field = Some("period");
                        meta_buf.clear();
                    }
                    "sitzungsnr" if !in_rede && meta.session.is_none() => {
                        meta_field = Some("session");
                        meta_buf.clear();
                    }
                    "rede" => in_rede = true,
                    "redner" if in_rede => {
                        redner = Some(Vec::new());
                    }
                    "kommentar" => skip_depth += 1,
                    "p" if in_rede => {
                        if attr(attrs, "klasse") == Some("redner") {
                            skip_depth += 1;
                        } else if skip_depth == 0 {
                            paragraph = Some(String::new());
                        }
                    }
                    "name" if in_rede && redner.is_none() && skip_depth == 0 => {
                        officer = Some(String::new());
                    }
                    field if redner.is_some() => redner_field = Some(field.to_string()),
                    _ => {}
                }
            }
            XmlEvent::Text(text) => {
                if let (Some(fields), Some(field)) = (redner.as_mut(), redner_field.as_ref()) {
                    fields.push((field.clone(), text.clone()));
                } else if let Some(buf) = officer.as_mut() {
                    buf.push_str(text);
                } else if meta_field.is_some() {
                    meta_buf.push_str(text);
                } else if skip_depth == 0 {
                    if let Some(buf) = paragraph.as_mut() {
                        buf.push_str(text);
                    }
                }
            }
            XmlEvent::End(name) => {
                match name.as_str() {
                    "wahlperiode" | "sitzungsnr" if meta_field.is_some() => {
                        let value = Some(meta_buf.trim().to_string());
                        match meta_field.take() {
                            Some("period") => meta.period = value,
                            _ => meta.session = value,
                        }
                    }
                    "redner" if redner.is_some() => {
                        let fields = redner.take().unwrap_or_default();
                        redner_field = None;
                        let get = |k: &str| {
                            fields
                                .iter()
                                .filter(|(f, _)| f == k)
                                .map(|(_, v)| v.trim())
                                .collect::<Vec<_>>()
                                .join(" ")
                        };
                        let speaker = ["titel", "vorname", "namenszusatz", "nachname"]
                            .iter()
                            .map(|k| get(k))
                            .filter(|s| !s.is_empty())
                            .collect::<Vec<_>>()
                            .join(" ");
                        let fraktion = get("fraktion");
                        let party = if fraktion.is_empty() {
                            PartyId::Unknown
                        } else {
                            normalize_party(&fraktion)
                        };
                        pending.push(PendingSpeech {
                            speaker: if speaker.is_empty() { UNKNOWN_SPEAKER.to_string() } else { speaker },
                            party,
                            paragraphs: Vec::new(),
                        });
                    }
                    "kommentar" => skip_depth = skip_depth.saturating_sub(1),
                    "p" if in_rede => {
                        if let Some(text) = paragraph.take() {
                            if let Some(current) = pending.last_mut() {
                                current.paragraphs.push(text);
                            }
                        } else {
                            skip_depth = skip_depth.saturating_sub(1);
                        }
                    }
                    "name" if officer.is_some() => {
                        let raw = officer.take().unwrap_or_default();
                        let speaker = raw.trim().trim_end_matches(':').trim().to_string();
                        pending.push(PendingSpeech {
                            speaker: if speaker.is_empty() { UNKNOWN_SPEAKER.to_string() } else { speaker },
                            party: PartyId::Unknown,
                            paragraphs: Vec::new(),
                        });
                    }
                    "rede" => {
                        in_rede = false;
                        // a new <rede> never continues the previous speaker
                        pending.push(PendingSpeech {
                            speaker: UNKNOWN_SPEAKER.to_string(),
                            party: PartyId::Unknown,
                            paragraphs: Vec::new(),
                        });
                    }
                    _ => {
                        if redner.is_some() {
                            redner_field = None;
                        }
                    }
                }
            }
        }
    }

    let (source_id, date, session_number, legislative_period) = meta.finish("BT")?;
    Ok(Protocol {
        source_id,
        date,
        session_number,
        legislative_period,
        speeches: finish_speeches(pending),
    })
}

/// One item of a legacy transcript: a speaker milestone or a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawItem {
    Marker { speaker: String, party: PartyId },
    Sentence(String),
}

/// A sentence with its speaker attribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedSentence {
    pub sentence: Sentence,
    pub speech_index: usize,
    pub speaker: String,
    pub party: PartyId,
}

/// Attributes every sentence to the most recent preceding speaker marker.
///
/// Each marker opens a new speech. Sentences before the first marker form a
/// speech of [`UNKNOWN_SPEAKER`].
pub fn assign_speakers(items: &[RawItem]) -> Vec<AttributedSentence> {
    let mut out = Vec::new();
    let mut speaker = UNKNOWN_SPEAKER.to_string();
    let mut party = PartyId::Unknown;
    let mut speech_index = 0usize;
    let mut in_speech = 0usize;
    let mut any_in_current = false;

    for item in items {
        match item {
            RawItem::Marker { speaker: s, party: p } => {
                if any_in_current {
                    speech_index += 1;
                }
                speaker = s.clone();
                party = *p;
                in_speech = 0;
                any_in_current = false;
            }
            RawItem::Sentence(text) => {
                out.push(AttributedSentence {
                    sentence: Sentence {
                        text: text.clone(),
                        index_in_speech: in_speech,
                        global_index: out.len(),
                    },
                    speech_index,
                    speaker: speaker.clone(),
                    party,
                });
                in_speech += 1;
                any_in_current = true;
            }
        }
    }
    out
}

fn parse_legacy(events: &[XmlEvent]) -> Result<Protocol, CorpusError> {
    let mut meta = Metadata::default();
    let mut items: Vec<RawItem> = Vec::new();
    let mut chunk = String::new();
    let mut depth = 0usize;
    let mut meta_field: Option<&'static str> = None;
    let mut meta_buf = String::new();
    let mut speaker_open: Option<(String, Option<String>)> = None;

    let flush = |chunk: &mut String, items: &mut Vec<RawItem>| {
        items.extend(segment_sentences(chunk).into_iter().map(RawItem::Sentence));
        chunk.clear();
    };

    for ev in events {
        match ev {
            XmlEvent::Start(name, attrs) => {
                depth += 1;
                let upper = name.to_ascii_uppercase();
                if depth == 1 {
                    meta.id = attr(attrs, "id").map(str::to_string);
                    meta.date = attr(attrs, "date").map(str::to_string);
                    meta.session = attr(attrs, "session").map(str::to_string);
                    meta.period = attr(attrs, "period").map(str::to_string);
                    continue;
                }
                match upper.as_str() {
                    "SPEAKER" => {
                        flush(&mut chunk, &mut items);
                        let name = attr(attrs, "name").unwrap_or("").to_string();
                        speaker_open = Some((name, attr(attrs, "party").map(str::to_string)));
                    }
                    "DATE" | "SESSION" | "PERIOD" | "ID" => {
                        meta_field = Some(match upper.as_str() {
                            "DATE" => "date",
                            "SESSION" => "session",
                            "PERIOD" => "period",
                            _ => "id",
                        });
                        meta_buf.clear();
                    }
                    _ => {}
                }
            }
            XmlEvent::Text(text) => {
                if let Some((name, _)) = speaker_open.as_mut() {
                    name.push_str(text);
                } else if meta_field.is_some() {
                    meta_buf.push_str(text);
                } else {
                    chunk.push_str(text);
                    chunk.push(' ');
                }
            }
            XmlEvent::End(name) => {
                depth = depth.saturating_sub(1);
                match name.to_ascii_uppercase().as_str() {
                    "SPEAKER" => {
                        if let Some((name, party)) = speaker_open.take() {
                            let name = name.trim().trim_end_matches(':').trim().to_string();
                            items.push(RawItem::Marker {
                                speaker: if name.is_empty() { UNKNOWN_SPEAKER.to_string() } else { name },
                                party: party.as_deref().map_or(PartyId::Unknown, normalize_party),
                            });
                        }
                    }
                    "DATE" | "SESSION" | "PERIOD" | "ID" if meta_field.is_some() => {
                        let value = meta_buf.trim().to_string();
                        let slot = match meta_field.take() {
                            Some("date") => &mut meta.date,
                            Some("session") => &mut meta.session,
                            Some("period") => &mut meta.period,
                            _ => &mut meta.id,
                        };
                        if slot.is_none() {
                            *slot = Some(value);
                        }
                    }
                    // paragraph-like elements do not let sentences run across them
                    "P" | "TEXT" | "BODY" | "DIV" => flush(&mut chunk, &mut items),
                    _ => {}
                }
            }
        }
    }
    flush(&mut chunk, &mut items);

    let (source_id, date, session_number, legislative_period) = meta.finish("RT")?;
    let attributed = assign_speakers(&items);
    let mut speeches: Vec<Speech> = Vec::new();
    for a in attributed {
        if speeches.len() <= a.speech_index {
            speeches.push(Speech { speaker_name: a.speaker.clone(), party: a.party, sentences: Vec::new() });
        }
        speeches[a.speech_index].sentences.push(a.sentence);
    }
    Ok(Protocol { source_id, date, session_number, legislative_period, speeches })
}

/// One line of the protocol JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub protocol_id: String,
    pub date: NaiveDate,
    pub session: u32,
    pub period: u32,
    pub speech_idx: usize,
    pub sentence_idx: usize,
    pub global_idx: usize,
    pub speaker: String,
    pub party: PartyId,
    pub text: String,
}

pub fn protocol_rows(protocol: &Protocol) -> Vec<SentenceRow> {
    protocol
        .speeches
        .iter()
        .enumerate()
        .flat_map(|(speech_idx, speech)| {
            speech.sentences.iter().map(move |s| SentenceRow {
                protocol_id: protocol.source_id.clone(),
                date: protocol.date,
                session: protocol.session_number,
                period: protocol.legislative_period,
                speech_idx,
                sentence_idx: s.index_in_speech,
                global_idx: s.global_index,
                speaker: speech.speaker_name.clone(),
                party: speech.party,
                text: s.text.clone(),
            })
        })
        .collect()
}

/// Rebuilds protocols from JSONL rows, preserving first-appearance order.
pub fn protocols_from_rows(rows: &[SentenceRow]) -> Result<Vec<Protocol>, CorpusError> {
    let mut protocols: Vec<Protocol> = Vec::new();
    for row in rows {
        let idx = match protocols.iter().rposition(|p| p.source_id == row.protocol_id) {
            Some(i) => i,
            None => {
                protocols.push(Protocol {
                    source_id: row.protocol_id.clone(),
                    date: row.date,
                    session_number: row.session,
                    legislative_period: row.period,
                    speeches: Vec::new(),
                });
                protocols.len() - 1
            }
        };
        let p = &mut protocols[idx];
        if row.speech_idx == p.speeches.len() {
            p.speeches.push(Speech {
                speaker_name: row.speaker.clone(),
                party: row.party,
                sentences: Vec::new(),
            });
        } else if row.speech_idx + 1 != p.speeches.len() {
            return Err(CorpusError::InvalidRows(format!(
                "{}: speech {} out of order",
                row.protocol_id, row.speech_idx
            )));
        }
        let speech = p.speeches.last_mut().expect("speech pushed above");
        if row.sentence_idx != speech.sentences.len() {
            return Err(CorpusError::InvalidRows(format!(
                "{}: sentence {} of speech {} out of order",
                row.protocol_id, row.sentence_idx, row.speech_idx
            )));
        }
        speech.sentences.push(Sentence {
            text: row.text.clone(),
            index_in_speech: row.sentence_idx,
            global_index: row.global_idx,
        });
    }
    Ok(protocols)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODERN: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<dbtplenarprotokoll wahlperiode="20" sitzung-nr="12" sitzung-datum="13.01.2022">
  <sitzungsverlauf>
    <rede id="ID2012001">
      <p klasse="redner"><redner id="1"><name><titel>Dr.</titel><vorname>Anna</vorname><nachname>Beispiel</nachname><fraktion>SPD</fraktion></name></redner>Dr. Anna Beispiel (SPD):</p>
      <p klasse="J_1">Die Flüchtlinge brauchen Schutz. Wir helfen.</p>
      <kommentar>(Beifall bei der SPD)</kommentar>
    </rede>
  </sitzungsverlauf>
</dbtplenarprotokoll>"#;

    #[test]
    fn modern_minimal() {
        let p = parse_protocol(MODERN.as_bytes(), Dialect::Modern).unwrap();
        assert_eq!(p.date, NaiveDate::from_ymd_opt(2022, 1, 13).unwrap());
        assert_eq!(p.session_number, 12);
        assert_eq!(p.legislative_period, 20);
        assert_eq!(p.source_id, "BT-20-012");
        assert_eq!(p.speeches.len(), 1);
        let s = &p.speeches[0];
        assert_eq!(s.speaker_name, "Dr. Anna Beispiel");
        assert_eq!(s.party, PartyId::SPD);
        assert_eq!(s.sentences.len(), 2);
        assert_eq!(s.sentences[1].text, "Wir helfen.");
    }

    #[test]
    fn speaker_without_party_is_unknown() {
        let xml = MODERN.replace("<fraktion>SPD</fraktion>", "");
        let p = parse_protocol(xml.as_bytes(), Dialect::Modern).unwrap();
        assert_eq!(p.speeches[0].party, PartyId::Unknown);
        assert_eq!(p.speeches[0].speaker_name, "Dr. Anna Beispiel");
    }

    #[test]
    fn truncated_is_malformed() {
        let cut = &MODERN.as_bytes()[..MODERN.len() / 2];
        assert!(matches!(
            parse_protocol(cut, Dialect::Modern),
            Err(CorpusError::MalformedXml(_))
        ));
        assert!(matches!(
            parse_protocol(b"", Dialect::Legacy),
            Err(CorpusError::MalformedXml(_))
        ));
    }

    #[test]
    fn missing_date() {
        let xml = MODERN.replace(r#" sitzung-datum="13.01.2022""#, "");
        assert!(matches!(
            parse_protocol(xml.as_bytes(), Dialect::Modern),
            Err(CorpusError::MissingMetadata("date"))
        ));
    }

    #[test]
    fn legacy_markers() {
        let xml = r#"<PROTOCOL id="RT-x" date="1890-02-20" session="3" period="8">
            <TEXT>Die Sitzung ist eröffnet.
            <SPEAKER name="Bebel" party="SPD"/>
            Meine Herren! Die Ausländer arbeiten hart.
            <SPEAKER>von Kardorff</SPEAKER>
            Das sehe ich anders.</TEXT></PROTOCOL>"#;
        let p = parse_protocol(xml.as_bytes(), Dialect::Legacy).unwrap();
        assert_eq!(p.source_id, "RT-x");
        assert_eq!(p.speeches.len(), 3);
        assert_eq!(p.speeches[0].speaker_name, UNKNOWN_SPEAKER);
        assert_eq!(p.speeches[1].speaker_name, "Bebel");
        assert_eq!(p.speeches[1].party, PartyId::SPD);
        assert_eq!(p.speeches[1].sentences.len(), 2);
        assert_eq!(p.speeches[2].party, PartyId::Unknown);
        let globals: Vec<_> = p
            .speeches
            .iter()
            .flat_map(|s| s.sentences.iter().map(|x| x.global_index))
            .collect();
        assert_eq!(globals, vec![0, 1, 2, 3]);
        assert_eq!(detect_dialect(xml.as_bytes()), Dialect::Legacy);
        assert_eq!(detect_dialect(MODERN.as_bytes()), Dialect::Modern);
    }

    fn marker(name: &str) -> RawItem {
        RawItem::Marker { speaker: name.into(), party: PartyId::Unknown }
    }

    fn sentences(n: usize) -> Vec<RawItem> {
        (0..n).map(|i| RawItem::Sentence(format!("s{i}"))).collect()
    }

    #[test]
    fn assign_speakers_rule() {
        let mut items = vec![marker("S1")];
        let all = sentences(8);
        items.extend(all[..5].iter().cloned());
        items.push(marker("S2"));
        items.extend(all[5..].iter().cloned());
        let out = assign_speakers(&items);
        assert_eq!(out.len(), 8);
        assert!(out[..5].iter().all(|a| a.speaker == "S1"));
        assert!(out[5..].iter().all(|a| a.speaker == "S2"));
        assert_eq!(out[5].sentence.index_in_speech, 0);

        let out = assign_speakers(&sentences(3));
        assert!(out.iter().all(|a| a.speaker == UNKNOWN_SPEAKER));

        let mut items = vec![marker("S1")];
        items.extend(sentences(4));
        assert!(assign_speakers(&items).iter().all(|a| a.speaker == "S1"));
    }

    #[test]
    fn rows_round_trip() {
        let p = parse_protocol(MODERN.as_bytes(), Dialect::Modern).unwrap();
        let rows = protocol_rows(&p);
        assert_eq!(protocols_from_rows(&rows).unwrap(), vec![p]);
    }
}
