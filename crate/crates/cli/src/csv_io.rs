//! Gas-record CSV files.
//!
//! Columns: `sample_id,timestamp,ch4,c2h6,c2h4,c2h2,h2,co,co2,n2,o2,
//! level1_label,level2_label`. Timestamps and labels may be empty;
//! `level2_label` is empty for Normal samples.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use bushing_core::datagen::LabeledRecord;
use bushing_core::features::{FaultClass, GasRecord, Level1Label, Level2Label};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 13] = [
    "sample_id",
    "timestamp",
    "ch4",
    "c2h6",
    "c2h4",
    "c2h2",
    "h2",
    "co",
    "co2",
    "n2",
    "o2",
    "level1_label",
    "level2_label",
];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    sample_id: String,
    timestamp: Option<i64>,
    ch4: f64,
    c2h6: f64,
    c2h4: f64,
    c2h2: f64,
    h2: f64,
    co: f64,
    co2: f64,
    n2: f64,
    o2: f64,
    level1_label: Option<String>,
    level2_label: Option<String>,
}

/// One parsed line; `class` is `None` when the labels are blank.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub record: GasRecord,
    pub class: Option<FaultClass>,
}

fn parse_class(line: usize, l1: Option<&str>, l2: Option<&str>) -> Result<Option<FaultClass>> {
    let l1 = l1.map(str::trim).filter(|s| !s.is_empty());
    let l2 = l2.map(str::trim).filter(|s| !s.is_empty());
    let bad = |msg: String| CliError::Csv { line, message: msg };
    let Some(l1) = l1 else {
        return match l2 {
            None => Ok(None),
            Some(_) => Err(bad("level2_label without level1_label".into())),
        };
    };
    let l1: Level1Label = l1.parse().map_err(|e| bad(format!("{e}")))?;
    let l2: Option<Level2Label> = l2
        .map(str::parse)
        .transpose()
        .map_err(|e| bad(format!("{e}")))?;
    FaultClass::from_labels(l1, l2).map(Some).ok_or_else(|| {
        bad(format!(
            "inconsistent labels {l1} / {}",
            l2.map_or("", |l| l.name())
        ))
    })
}

/// Reads every row, validating concentrations and labels.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<CsvRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Csv {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::Csv {
            line,
            message: e.to_string(),
        })?;
        let class = parse_class(
            line,
            row.level1_label.as_deref(),
            row.level2_label.as_deref(),
        )?;
        let record = GasRecord::from_gases(
            row.sample_id,
            row.timestamp,
            [
                row.ch4, row.c2h6, row.c2h4, row.c2h2, row.h2, row.co, row.co2, row.n2, row.o2,
            ],
        );
        record.validate().map_err(|e| CliError::Csv {
            line,
            message: e.to_string(),
        })?;
        out.push(CsvRecord { record, class });
    }
    Ok(out)
}

/// Reads a file whose rows must all be labeled.
pub fn read_labeled(path: &Path) -> Result<Vec<LabeledRecord>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_records(file)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.class {
            Some(class) => Ok(LabeledRecord {
                record: r.record,
                class,
            }),
            None => Err(CliError::Csv {
                line: i + 2,
                message: "missing label".into(),
            }),
        })
        .collect()
}

pub fn write_records<W: Write>(writer: W, records: &[LabeledRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        let g = &r.record;
        wtr.serialize(Row {
            sample_id: g.sample_id.clone(),
            timestamp: g.timestamp,
            ch4: g.ch4,
            c2h6: g.c2h6,
            c2h4: g.c2h4,
            c2h2: g.c2h2,
            h2: g.h2,
            co: g.co,
            co2: g.co2,
            n2: g.n2,
            o2: g.o2,
            level1_label: Some(r.class.level1().name().to_string()),
            level2_label: r.class.level2().map(|l| l.name().to_string()),
        })?;
    }
    if records.is_empty() {
        wtr.write_record(HEADER)?;
    }
    wtr.flush()
        .map_err(|e| CliError::io(std::path::Path::new("<csv>"), e))?;
    Ok(())
}

pub fn write_labeled(path: &Path, records: &[LabeledRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_records(file, records)
}
