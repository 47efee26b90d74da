//! Count CSV and run-metadata sidecar.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CountRecord, RunConfig, RNG_ID, SEED_DERIVATION};
use crate::error::{Error, Result};
use crate::states::{prepare_with_impurity, Outcome, PauliAxis};

pub const COUNTS_HEADER: [&str; 6] = [
    "prep_axis",
    "prep_outcome",
    "analysis_axis",
    "analysis_outcome",
    "counts",
    "shots",
];

pub fn write_counts_csv<W: Write>(records: &[CountRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COUNTS_HEADER)?;
    for r in records {
        w.write_record([
            r.prep_axis.index().to_string(),
            r.prep_outcome.to_string(),
            r.analysis_axis.index().to_string(),
            r.analysis_outcome.to_string(),
            r.counts.to_string(),
            r.shots.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_axis(s: &str) -> std::result::Result<PauliAxis, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "x" => Ok(PauliAxis::X),
        "2" | "y" => Ok(PauliAxis::Y),
        "3" | "z" => Ok(PauliAxis::Z),
        other => Err(format!("expected axis 1, 2 or 3, got {other:?}")),
    }
}

fn parse_outcome(s: &str) -> std::result::Result<Outcome, String> {
    match s.trim() {
        "+1" | "1" | "+" => Ok(Outcome::Plus),
        "-1" | "-" => Ok(Outcome::Minus),
        other => Err(format!("expected outcome +1 or -1, got {other:?}")),
    }
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

/// Reads a count CSV. Rows are numbered from 1 for the first data row;
/// columns by header name.
pub fn read_counts_csv<R: Read>(input: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 6];
    for (k, name) in COUNTS_HEADER.iter().enumerate() {
        index[k] = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::MalformedCounts {
                row: 0,
                column: name.to_string(),
                message: "missing column in header".into(),
            })?;
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(index[k]).ok_or_else(|| Error::MalformedCounts {
                row,
                column: COUNTS_HEADER[k].to_string(),
                message: "missing field".into(),
            })
        };
        let wrap = |k: usize, e: String| Error::MalformedCounts {
            row,
            column: COUNTS_HEADER[k].to_string(),
            message: e,
        };
        let record = CountRecord {
            prep_axis: parse_axis(field(0)?).map_err(|e| wrap(0, e))?,
            prep_outcome: parse_outcome(field(1)?).map_err(|e| wrap(1, e))?,
            analysis_axis: parse_axis(field(2)?).map_err(|e| wrap(2, e))?,
            analysis_outcome: parse_outcome(field(3)?).map_err(|e| wrap(3, e))?,
            counts: parse_count(field(4)?).map_err(|e| wrap(4, e))?,
            shots: parse_count(field(5)?).map_err(|e| wrap(5, e))?,
        };
        if record.counts > record.shots {
            return Err(wrap(
                4,
                format!("counts {} exceed shots {}", record.counts, record.shots),
            ));
        }
        out.push(record);
    }
    Ok(out)
}

/// Expected relative detection rate of one preparation under the loss model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionEntry {
    pub prep_axis: PauliAxis,
    pub prep_outcome: Outcome,
    pub transmissivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub rng: String,
    pub seed_derivation: String,
    /// Present when the loss model is enabled. Only rescales rates; the
    /// counts themselves are conditional on detection.
    pub transmission: Option<Vec<TransmissionEntry>>,
    pub version: String,
}

impl RunMetadata {
    pub fn for_run(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let transmission = if cfg.include_loss_model {
            let mut v = Vec::new();
            for &axis in PauliAxis::first(cfg.n_measurements) {
                for a in Outcome::ALL {
                    let rho = prepare_with_impurity(axis, a, &cfg.prep)?;
                    v.push(TransmissionEntry {
                        prep_axis: axis,
                        prep_outcome: a,
                        transmissivity: cfg.channel.transmissivity(rho.op()),
                    });
                }
            }
            Some(v)
        } else {
            None
        };
        Ok(Self {
            config: *cfg,
            rng: RNG_ID.to_string(),
            seed_derivation: SEED_DERIVATION.to_string(),
            transmission,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn write_metadata(meta: &RunMetadata, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::simulate_counts;

    #[test]
    fn csv_round_trip() {
        let recs = simulate_counts(&RunConfig::new(500, 9, 0.4)).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("prep_axis,prep_outcome,analysis_axis,analysis_outcome,counts,shots\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn bad_field_reports_row_and_column() {
        let text = "prep_axis,prep_outcome,analysis_axis,analysis_outcome,counts,shots\n1,+1,3,+1,10,20\n1,+1,3,-1,ten,20\n";
        match read_counts_csv(text.as_bytes()) {
            Err(Error::MalformedCounts { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "counts");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_column() {
        let text = "prep_axis,prep_outcome,analysis_axis,counts,shots\n";
        assert!(matches!(
            read_counts_csv(text.as_bytes()),
            Err(Error::MalformedCounts { row: 0, .. })
        ));
    }

    #[test]
    fn metadata_round_trip() {
        let mut cfg = RunConfig::new(10, 1, 0.1);
        cfg.include_loss_model = true;
        let meta = RunMetadata::for_run(&cfg).unwrap();
        assert_eq!(meta.transmission.as_ref().unwrap().len(), 6);
        let dir = std::env::temp_dir().join(format!("meta-{}.json", std::process::id()));
        write_metadata(&meta, &dir).unwrap();
        assert_eq!(read_metadata(&dir).unwrap(), meta);
        std::fs::remove_file(dir).ok();
    }
}
