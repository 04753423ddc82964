use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Execution,
    OutputSupervision,
    ScopeSupervision,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Training,
        Phase::Execution,
        Phase::OutputSupervision,
        Phase::ScopeSupervision,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Training => "training",
            Phase::Execution => "execution",
            Phase::OutputSupervision => "output_supervision",
            Phase::ScopeSupervision => "scope_supervision",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceEntry {
    pub phase: Phase,
    pub wall_time_seconds: f64,
    pub peak_memory_bytes: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_joules: Option<f64>,
}

impl ResourceEntry {
    pub fn new(phase: Phase, wall_time_seconds: f64, peak_memory_bytes: i64) -> Self {
        ResourceEntry {
            phase,
            wall_time_seconds,
            peak_memory_bytes,
            energy_joules: None,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.wall_time_seconds.is_finite() && self.wall_time_seconds >= 0.0) {
            return Err(format!("wall_time_seconds {} is negative", self.wall_time_seconds));
        }
        if self.peak_memory_bytes < 0 {
            return Err(format!("peak_memory_bytes {} is negative", self.peak_memory_bytes));
        }
        if let Some(e) = self.energy_joules {
            if !(e.is_finite() && e >= 0.0) {
                return Err(format!("energy_joules {e} is negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResourceLog {
    pub entries: Vec<ResourceEntry>,
}

impl ResourceLog {
    pub fn new(entries: Vec<ResourceEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            e.validate()
                .map_err(|m| Error::Schema(format!("resource log entry {}: {m}", i + 1)))?;
        }
        Ok(ResourceLog { entries })
    }

    pub fn for_phase(&self, phase: Phase) -> impl Iterator<Item = &ResourceEntry> {
        self.entries.iter().filter(move |e| e.phase == phase)
    }

    /// Parses JSON Lines; blank lines are skipped.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ResourceEntry = serde_json::from_str(line)
                .map_err(|e| Error::parse(format!("resource log line {}", n + 1), e.to_string()))?;
            entries.push(entry);
        }
        ResourceLog::new(entries)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }
}

pub fn load_resource_log(path: &Path) -> Result<ResourceLog> {
    ResourceLog::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_wall_time_is_schema_error() {
        let text = r#"{"phase":"training","wall_time_seconds":-1,"peak_memory_bytes":10}"#;
        assert!(matches!(ResourceLog::from_jsonl(text), Err(Error::Schema(_))));
    }

    #[test]
    fn negative_memory_is_schema_error() {
        let text = r#"{"phase":"execution","wall_time_seconds":1,"peak_memory_bytes":-5}"#;
        assert!(matches!(ResourceLog::from_jsonl(text), Err(Error::Schema(_))));
    }

    #[test]
    fn unknown_phase_is_parse_error() {
        let text = r#"{"phase":"inference","wall_time_seconds":1,"peak_memory_bytes":5}"#;
        assert!(matches!(ResourceLog::from_jsonl(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let text = "{\"phase\":\"training\",\"wall_time_seconds\":2.0,\"peak_memory_bytes\":1073741824,\"energy_joules\":40.5}\n\n\
                    {\"phase\":\"scope_supervision\",\"wall_time_seconds\":0.25,\"peak_memory_bytes\":0}\n";
        let log = ResourceLog::from_jsonl(text).unwrap();
        assert_eq!(log.entries.len(), 2);
        assert_eq!(log.for_phase(Phase::Training).count(), 1);
        assert_eq!(ResourceLog::from_jsonl(&log.to_jsonl()).unwrap(), log);
    }
}
