//! Run records: one JSON object per line describing a finished job.

use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::evolve::{evolve, EvolveConfig, EvolveError, EvolveResult, SolverOrder, TrajectoryRow};
use crate::fitness::PerformanceProfile;

use super::ttp_format::{parse_instance, write_instance_string, ParseError, WriteOptions};

/// Bumped whenever the record layout changes.
pub const RUN_RECORD_SCHEMA_VERSION: u32 = 1;

/// Everything needed to inspect a job and to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: EvolveConfig,
    pub trajectory: Vec<TrajectoryRow>,
    pub final_profile: PerformanceProfile,
    pub actual_ranking: SolverOrder,
    pub success: Option<bool>,
    pub iterations: usize,
    pub stopped_by_wall_time: bool,
    pub wall_time_secs: f64,
    /// The evolved instance in the benchmark text format.
    pub instance: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: unsupported schema version {version}")]
    Version { line: usize, version: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("embedded instance: {0}")]
    Instance(#[from] ParseError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

impl RunRecord {
    pub fn new(config: &EvolveConfig, result: &EvolveResult, wall_time: Duration) -> Self {
        RunRecord {
            schema_version: RUN_RECORD_SCHEMA_VERSION,
            config: config.clone(),
            trajectory: result.trajectory.clone(),
            final_profile: result.final_profile.clone(),
            actual_ranking: result.actual_ranking.clone(),
            success: result.success,
            iterations: result.iterations,
            stopped_by_wall_time: result.stopped_by_wall_time,
            wall_time_secs: wall_time.as_secs_f64(),
            instance: write_instance_string(&result.instance, WriteOptions::default()),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialise")
    }

    pub fn from_json_line(line: &str) -> Result<Self, RecordError> {
        let record: RunRecord =
            serde_json::from_str(line).map_err(|source| RecordError::Json { line: 1, source })?;
        if record.schema_version != RUN_RECORD_SCHEMA_VERSION {
            return Err(RecordError::Version {
                line: 1,
                version: record.schema_version,
            });
        }
        Ok(record)
    }

    /// Re-runs the job from the stored configuration.
    pub fn replay(&self) -> Result<EvolveResult, RecordError> {
        Ok(evolve(&self.config)?)
    }

    /// Whether `result` is the outcome stored in this record, bit for bit.
    pub fn matches(&self, result: &EvolveResult) -> Result<bool, RecordError> {
        let instance = parse_instance(&self.instance)?;
        Ok(instance == result.instance
            && self.trajectory == result.trajectory
            && self.final_profile == result.final_profile
            && self.actual_ranking == result.actual_ranking
            && self.success == result.success
            && self.iterations == result.iterations)
    }
}

/// Appends records to a JSON-lines file.
pub fn append_records(path: impl AsRef<Path>, records: &[RunRecord]) -> std::io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    for record in records {
        writeln!(file, "{}", record.to_json_line())?;
    }
    Ok(())
}

/// Reads every record of a JSON-lines stream; blank lines are skipped.
pub fn read_records(reader: impl BufRead) -> Result<Vec<RunRecord>, RecordError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = RunRecord::from_json_line(&line).map_err(|e| match e {
            RecordError::Json { source, .. } => RecordError::Json {
                line: i + 1,
                source,
            },
            RecordError::Version { version, .. } => RecordError::Version {
                line: i + 1,
                version,
            },
            other => other,
        })?;
        records.push(record);
    }
    Ok(records)
}
