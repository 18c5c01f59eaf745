//! File formats: benchmark instances, run records and CSV tables.

mod record;
mod ttp_format;

use std::io::Write;

use crate::features::{schema, FeatureVector};
use crate::fitness::PerformanceProfile;
use crate::solvers::SolverId;

pub use record::{append_records, read_records, RecordError, RunRecord, RUN_RECORD_SCHEMA_VERSION};
pub use ttp_format::{
    parse_instance, read_instance, write_instance, write_instance_string, ParseError, ReadError,
    WriteOptions,
};

/// Writes feature vectors as CSV: an `instance` column followed by the schema.
pub fn write_features_csv(writer: impl Write, rows: &[FeatureVector]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(std::iter::once("instance").chain(schema().iter().map(String::as_str)))?;
    for row in rows {
        out.write_record(
            std::iter::once(row.instance.clone()).chain(row.values.iter().map(f64::to_string)),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a score matrix as CSV with one row per solver and one column per run.
pub fn write_profile_csv(
    writer: impl Write,
    portfolio: &[SolverId],
    profile: &PerformanceProfile,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let runs = profile.runs();
    let header = ["solver".to_string(), "median".to_string()]
        .into_iter()
        .chain((1..=runs).map(|r| format!("run{r}")));
    out.write_record(header)?;
    for (id, (row, median)) in portfolio
        .iter()
        .zip(profile.scores.iter().zip(&profile.medians))
    {
        out.write_record(
            [id.to_string(), median.to_string()]
                .into_iter()
                .chain(row.iter().map(f64::to_string)),
        )?;
    }
    out.flush()?;
    Ok(())
}
