//! Append-only journal of human judgments with periodic snapshots.
//!
//! Every accepted write is one JSON line, fsynced before the call returns.
//! The in-memory [`State`] is a pure fold over the journal, so replaying the
//! journal from scratch yields the same state as loading the latest snapshot
//! and replaying the tail.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use solidarity_core::evaluation::{majority_vote, GoldRecord, RaterLabels, Vote};
use solidarity_core::taxonomy::{FineLabel, HighLevel};
use thiserror::Error;

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("journal line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("snapshot is at revision {snapshot} but the journal ends at {journal}")]
    SnapshotAhead { snapshot: u64, journal: u64 },
    #[error("{annotator} already labeled {instance}")]
    Duplicate { instance: String, annotator: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    VoteTie,
    ModelDisagreement,
    AnnotatorDisagreement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub rev: u64,
    pub instance_id: String,
    pub annotator_id: String,
    pub label: FineLabel,
    /// Revision of the record this one replaces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<u64>,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationRecord {
    pub rev: u64,
    pub instance_id: String,
    pub trigger: Trigger,
    /// `None` only flags the instance for review.
    pub resolution: Option<FineLabel>,
    pub resolver: String,
    #[serde(default)]
    pub note: String,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub rev: u64,
    pub instance_id: String,
    pub annotator_id: String,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    Annotation(AnnotationRecord),
    Adjudication(AdjudicationRecord),
    Skip(SkipRecord),
}

impl Entry {
    pub fn rev(&self) -> u64 {
        match self {
            Entry::Annotation(r) => r.rev,
            Entry::Adjudication(r) => r.rev,
            Entry::Skip(r) => r.rev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusSource {
    Majority,
    Adjudication,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consensus {
    pub label: Option<FineLabel>,
    pub source: Option<ConsensusSource>,
    pub tie: bool,
    pub votes: usize,
}

/// One line of the consensus gold export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLine {
    pub instance_id: String,
    pub fine_label: FineLabel,
    pub high: HighLevel,
    pub source: ConsensusSource,
    pub votes: usize,
}

/// Current view of the journal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    pub rev: u64,
    /// instance → annotator → latest record.
    pub annotations: BTreeMap<String, BTreeMap<String, AnnotationRecord>>,
    /// instance → adjudications in journal order.
    pub adjudications: BTreeMap<String, Vec<AdjudicationRecord>>,
    /// annotator → skipped instances.
    pub skips: BTreeMap<String, BTreeSet<String>>,
    pub superseded: u64,
}

impl State {
    fn apply(&mut self, entry: Entry) {
        self.rev = entry.rev();
        match entry {
            Entry::Annotation(r) => {
                let slot = self.annotations.entry(r.instance_id.clone()).or_default();
                if slot.insert(r.annotator_id.clone(), r).is_some() {
                    self.superseded += 1;
                }
            }
            Entry::Adjudication(r) => self.adjudications.entry(r.instance_id.clone()).or_default().push(r),
            Entry::Skip(r) => {
                self.skips.entry(r.annotator_id).or_default().insert(r.instance_id);
            }
        }
    }

    pub fn labels(&self, instance: &str) -> BTreeMap<String, FineLabel> {
        self.annotations
            .get(instance)
            .map(|m| m.iter().map(|(a, r)| (a.clone(), r.label)).collect())
            .unwrap_or_default()
    }

    pub fn annotation_count(&self, instance: &str) -> usize {
        self.annotations.get(instance).map_or(0, BTreeMap::len)
    }

    pub fn has_labeled(&self, instance: &str, annotator: &str) -> bool {
        self.annotations.get(instance).is_some_and(|m| m.contains_key(annotator))
    }

    pub fn has_skipped(&self, instance: &str, annotator: &str) -> bool {
        self.skips.get(annotator).is_some_and(|s| s.contains(instance))
    }

    /// Latest adjudication that carries a resolution.
    pub fn resolution(&self, instance: &str) -> Option<&AdjudicationRecord> {
        self.adjudications.get(instance)?.iter().rev().find(|a| a.resolution.is_some())
    }

    /// Majority vote over current labels; a resolution overrides it.
    pub fn consensus(&self, instance: &str) -> Consensus {
        let votes: Vec<FineLabel> = self.labels(instance).into_values().collect();
        let vote = if votes.is_empty() { None } else { Some(majority_vote(&votes)) };
        let tie = matches!(vote, Some(Vote::Tie));
        if let Some(adj) = self.resolution(instance) {
            return Consensus {
                label: adj.resolution,
                source: Some(ConsensusSource::Adjudication),
                tie,
                votes: votes.len(),
            };
        }
        match vote {
            Some(Vote::Winner(l)) => Consensus {
                label: Some(l),
                source: Some(ConsensusSource::Majority),
                tie,
                votes: votes.len(),
            },
            _ => Consensus { label: None, source: None, tie, votes: votes.len() },
        }
    }

    pub fn rater_labels(&self) -> RaterLabels {
        let mut out: RaterLabels = BTreeMap::new();
        for (inst, by) in &self.annotations {
            for (annotator, r) in by {
                out.entry(annotator.clone()).or_default().insert(inst.clone(), r.label);
            }
        }
        out
    }

    /// Current per-annotator records, sorted by instance then annotator.
    pub fn gold_records(&self) -> Vec<GoldRecord> {
        self.annotations
            .iter()
            .flat_map(|(inst, by)| {
                by.iter().map(|(a, r)| GoldRecord {
                    instance_id: inst.clone(),
                    annotator_id: a.clone(),
                    fine_label: r.label,
                })
            })
            .collect()
    }

    /// Consensus label of every decided instance, sorted by id. Unresolved
    /// ties are left out.
    pub fn export_gold(&self) -> Vec<GoldLine> {
        let ids: BTreeSet<&String> = self.annotations.keys().chain(self.adjudications.keys()).collect();
        ids.into_iter()
            .filter_map(|id| {
                let c = self.consensus(id);
                let label = c.label?;
                Some(GoldLine {
                    instance_id: id.clone(),
                    fine_label: label,
                    high: label.high(),
                    source: c.source?,
                    votes: c.votes,
                })
            })
            .collect()
    }

    /// Instances awaiting a human decision: unresolved ties and flags raised
    /// after the latest resolution.
    pub fn pending_adjudications(&self) -> Vec<(String, Trigger)> {
        let ids: BTreeSet<&String> = self.annotations.keys().chain(self.adjudications.keys()).collect();
        let mut out = Vec::new();
        for id in ids {
            let history = self.adjudications.get(id).map(Vec::as_slice).unwrap_or_default();
            let resolved_at = history.iter().rposition(|a| a.resolution.is_some());
            let flag = history
                .iter()
                .enumerate()
                .rev()
                .find(|(i, a)| a.resolution.is_none() && resolved_at.is_none_or(|r| *i > r));
            if let Some((_, a)) = flag {
                out.push((id.clone(), a.trigger));
            } else if resolved_at.is_none() && self.consensus(id).tie {
                out.push((id.clone(), Trigger::VoteTie));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Recovery {
    pub snapshot_rev: u64,
    pub replayed: u64,
    /// Bytes of an unterminated final line that were cut off.
    pub truncated_bytes: u64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    state: State,
}

pub struct GoldStore {
    dir: PathBuf,
    journal: File,
    len: u64,
    state: State,
    snapshot_every: u64,
    since_snapshot: u64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Parses journal bytes. An unterminated last line is reported as torn, a
/// malformed terminated line is corruption.
pub fn parse_journal(bytes: &[u8]) -> Result<(Vec<Entry>, u64), StoreError> {
    let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let torn = (bytes.len() - complete) as u64;
    let mut entries = Vec::new();
    for (i, line) in bytes[..complete].split(|b| *b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let entry: Entry = serde_json::from_slice(line)
            .map_err(|e| StoreError::Corrupt { line: i + 1, message: e.to_string() })?;
        let expected = entries.last().map_or(entry.rev(), |p: &Entry| p.rev() + 1);
        if entry.rev() != expected {
            return Err(StoreError::Corrupt {
                line: i + 1,
                message: format!("revision {} follows {}", entry.rev(), expected - 1),
            });
        }
        entries.push(entry);
    }
    Ok((entries, torn))
}

/// Folds a whole journal into a state, ignoring any snapshot.
pub fn replay(entries: &[Entry]) -> State {
    let mut state = State::default();
    for e in entries {
        state.apply(e.clone());
    }
    state
}

/// Replays the journal in `dir` without touching any file; a torn final
/// line is ignored. Safe to call while a service is writing.
pub fn load_state(dir: &Path) -> Result<State, StoreError> {
    let jpath = dir.join(JOURNAL_FILE);
    let bytes = match std::fs::read(&jpath) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io(&jpath)(e)),
    };
    Ok(replay(&parse_journal(&bytes)?.0))
}

impl GoldStore {
    /// Opens or creates the store in `dir`, cutting off a torn final line.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<(GoldStore, Recovery), StoreError> {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let jpath = dir.join(JOURNAL_FILE);
        let mut journal = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&jpath)
            .map_err(io(&jpath))?;
        let mut bytes = Vec::new();
        journal.read_to_end(&mut bytes).map_err(io(&jpath))?;
        let (entries, torn) = parse_journal(&bytes)?;
        let mut len = bytes.len() as u64;
        if torn > 0 {
            len -= torn;
            journal.set_len(len).map_err(io(&jpath))?;
            journal.sync_all().map_err(io(&jpath))?;
            tracing::warn!(bytes = torn, "cut off torn journal tail");
        }
        journal.seek(SeekFrom::End(0)).map_err(io(&jpath))?;

        let spath = dir.join(SNAPSHOT_FILE);
        let mut state = match std::fs::read(&spath) {
            Ok(b) => serde_json::from_slice::<Snapshot>(&b)
                .map_err(|e| StoreError::Corrupt { line: 0, message: format!("snapshot: {e}") })?
                .state,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => State::default(),
            Err(e) => return Err(io(&spath)(e)),
        };
        let journal_rev = entries.last().map_or(0, Entry::rev);
        if state.rev > journal_rev {
            return Err(StoreError::SnapshotAhead { snapshot: state.rev, journal: journal_rev });
        }
        let snapshot_rev = state.rev;
        let mut replayed = 0;
        for e in entries.into_iter().filter(|e| e.rev() > snapshot_rev) {
            state.apply(e);
            replayed += 1;
        }
        let store = GoldStore {
            dir: dir.to_path_buf(),
            journal,
            len,
            state,
            snapshot_every: snapshot_every.max(1),
            since_snapshot: replayed,
        };
        Ok((store, Recovery { snapshot_rev, replayed, truncated_bytes: torn }))
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn append(&mut self, entry: Entry) -> Result<(), StoreError> {
        let jpath = self.dir.join(JOURNAL_FILE);
        let mut line = serde_json::to_vec(&entry).expect("entry serializes");
        line.push(b'\n');
        let written = self.journal.write_all(&line).and_then(|_| self.journal.sync_data());
        if let Err(e) = written {
            // leave no partial line behind for the next append
            let _ = self.journal.set_len(self.len);
            return Err(io(&jpath)(e));
        }
        self.len += line.len() as u64;
        self.state.apply(entry);
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            if let Err(e) = self.snapshot() {
                tracing::warn!(error = %e, "snapshot failed; journal remains authoritative");
            }
        }
        Ok(())
    }

    /// Records a label. Without `supersede`, a second label from the same
    /// annotator is refused.
    pub fn annotate(
        &mut self,
        instance_id: &str,
        annotator_id: &str,
        label: FineLabel,
        supersede: bool,
    ) -> Result<AnnotationRecord, StoreError> {
        let previous = self.state.annotations.get(instance_id).and_then(|m| m.get(annotator_id));
        if previous.is_some() && !supersede {
            return Err(StoreError::Duplicate {
                instance: instance_id.to_string(),
                annotator: annotator_id.to_string(),
            });
        }
        let record = AnnotationRecord {
            rev: self.state.rev + 1,
            instance_id: instance_id.to_string(),
            annotator_id: annotator_id.to_string(),
            label,
            supersedes: previous.map(|p| p.rev),
            at_ms: now_ms(),
        };
        self.append(Entry::Annotation(record.clone()))?;
        Ok(record)
    }

    pub fn adjudicate(
        &mut self,
        instance_id: &str,
        trigger: Trigger,
        resolution: Option<FineLabel>,
        resolver: &str,
        note: &str,
    ) -> Result<AdjudicationRecord, StoreError> {
        let record = AdjudicationRecord {
            rev: self.state.rev + 1,
            instance_id: instance_id.to_string(),
            trigger,
            resolution,
            resolver: resolver.to_string(),
            note: note.to_string(),
            at_ms: now_ms(),
        };
        self.append(Entry::Adjudication(record.clone()))?;
        Ok(record)
    }

    pub fn skip(&mut self, instance_id: &str, annotator_id: &str) -> Result<SkipRecord, StoreError> {
        let record = SkipRecord {
            rev: self.state.rev + 1,
            instance_id: instance_id.to_string(),
            annotator_id: annotator_id.to_string(),
            at_ms: now_ms(),
        };
        self.append(Entry::Skip(record.clone()))?;
        Ok(record)
    }

    /// Writes the current state to the snapshot file atomically.
    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        let spath = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let bytes = serde_json::to_vec(&Snapshot { state: self.state.clone() }).expect("state serializes");
        let mut f = File::create(&tmp).map_err(io(&tmp))?;
        f.write_all(&bytes).and_then(|_| f.sync_all()).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &spath).map_err(io(&spath))?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        self.since_snapshot = 0;
        Ok(())
    }

    /// Reads every journal entry from disk.
    pub fn read_journal(&self) -> Result<Vec<Entry>, StoreError> {
        let jpath = self.dir.join(JOURNAL_FILE);
        let bytes = std::fs::read(&jpath).map_err(io(&jpath))?;
        Ok(parse_journal(&bytes)?.0)
    }
}
