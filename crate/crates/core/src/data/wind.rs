//! Hourly wind records: a canonical CSV layout, a lag-feature loader, and a
//! converter for the semicolon-delimited station exports published by the
//! Brazilian meteorological institute (INMET).
//!
//! # Canonical layout
//!
//! ```text
//! timestamp,wind_dir_deg,precip_mm,pressure_mb,temp_c,dew_point_c,humidity_pct,gust_ms,wind_speed_ms
//! 2020-01-01T00:00:00,90,0.2,1013.2,25.1,18.3,71,4.2,2.1
//! ```
//!
//! Timestamps are ISO-8601 and must be strictly increasing; directions are
//! degrees in `[0, 360]` with 360 treated as 0; any other field may be empty
//! to mark a missing measurement.
//!
//! # Regression task
//!
//! [`load_wind_csv`] turns consecutive-hour record pairs into supervised
//! units: the response is the direction at hour `t` and the nine covariates
//! are taken from hour `t − 1` (the direction as a cosine/sine pair plus the
//! seven meteorological measurements).  A pair is kept only when the earlier
//! record is complete and the later one has a direction; everything else is
//! dropped with a log message, never silently imputed.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use super::{Dataset, Provenance};
use crate::circular::Angle;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Canonical column names, in file order.
pub const WIND_COLUMNS: [&str; 9] = [
    "timestamp",
    "wind_dir_deg",
    "precip_mm",
    "pressure_mb",
    "temp_c",
    "dew_point_c",
    "humidity_pct",
    "gust_ms",
    "wind_speed_ms",
];

/// Covariate names produced by [`load_wind_csv`].
pub fn wind_feature_names() -> Vec<String> {
    [
        "cos_dir_prev",
        "sin_dir_prev",
        "precip_prev",
        "pressure_prev",
        "temp_prev",
        "dew_point_prev",
        "humidity_prev",
        "gust_prev",
        "wind_speed_prev",
    ]
    .into_iter()
    .map(str::to_string)
    .collect()
}

/// One parsed canonical record.
struct WindRecord {
    timestamp: NaiveDateTime,
    direction_deg: Option<f64>,
    /// precip, pressure, temp, dew point, humidity, gust, speed
    values: [Option<f64>; 7],
}

impl WindRecord {
    fn is_complete(&self) -> bool {
        self.direction_deg.is_some() && self.values.iter().all(Option::is_some)
    }
}

/// Loads a canonical wind CSV and assembles the lag-1-hour regression task.
pub fn load_wind_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = WIND_COLUMNS.to_vec();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Data(format!(
            "{} does not use the canonical wind layout; expected columns {expected:?}, found {got:?}",
            path.display()
        )));
    }

    let mut records: Vec<WindRecord> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != WIND_COLUMNS.len() {
            return Err(Error::MalformedRow {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    WIND_COLUMNS.len(),
                    record.len()
                ),
            });
        }
        let timestamp = NaiveDateTime::parse_from_str(record[0].trim(), "%Y-%m-%dT%H:%M:%S")
            .map_err(|e| Error::MalformedRow {
                line,
                message: format!("bad timestamp `{}`: {e}", &record[0]),
            })?;
        if let Some(prev) = records.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::Data(format!(
                    "timestamps must be strictly increasing; line {line} has {timestamp} after {}",
                    prev.timestamp
                )));
            }
        }
        let parse_opt = |field: &str| -> Result<Option<f64>> {
            let field = field.trim();
            if field.is_empty() {
                return Ok(None);
            }
            let v: f64 = field.parse().map_err(|_| Error::MalformedRow {
                line,
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("non-finite value {v}"),
                });
            }
            Ok(Some(v))
        };
        let direction_deg = match parse_opt(&record[1])? {
            Some(d) if !(0.0..=360.0).contains(&d) => {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("wind direction {d} is outside [0, 360] degrees"),
                });
            }
            other => other,
        };
        let mut values = [None; 7];
        for (k, slot) in values.iter_mut().enumerate() {
            *slot = parse_opt(&record[2 + k])?;
        }
        records.push(WindRecord {
            timestamp,
            direction_deg,
            values,
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<Angle> = Vec::new();
    let mut dropped_gap = 0usize;
    let mut dropped_missing = 0usize;
    for pair in records.windows(2) {
        let (prev, curr) = (&pair[0], &pair[1]);
        if curr.timestamp - prev.timestamp != TimeDelta::hours(1) {
            dropped_gap += 1;
            continue;
        }
        let (Some(prev_dir), Some(curr_dir)) = (prev.direction_deg, curr.direction_deg) else {
            dropped_missing += 1;
            continue;
        };
        if !prev.is_complete() {
            dropped_missing += 1;
            continue;
        }
        let prev_angle = Angle::from_degrees(prev_dir);
        let mut row = Vec::with_capacity(9);
        row.push(prev_angle.cos());
        row.push(prev_angle.sin());
        row.extend(prev.values.iter().map(|v| v.expect("checked complete")));
        rows.push(row);
        y.push(Angle::from_degrees(curr_dir));
    }
    if dropped_gap + dropped_missing > 0 {
        log::info!(
            "wind loader dropped {dropped_gap} pairs with timestamp gaps and {dropped_missing} with missing measurements ({} kept)",
            rows.len()
        );
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "{} yields no usable consecutive-hour record pairs",
            path.display()
        )));
    }
    Ok(Dataset {
        x: Matrix::from_rows(rows)?,
        y,
        feature_names: wind_feature_names(),
        provenance: Provenance::Wind {
            source: path.display().to_string(),
        },
    })
}

/// Summary of one INMET conversion run.
#[derive(Clone, Debug)]
pub struct InmetStats {
    /// Data lines read after the header.
    pub rows_read: usize,
    /// Canonical records written.
    pub rows_written: usize,
    /// Canonical cells left empty (sentinels, blanks, or unparseable text).
    pub missing_values: usize,
    /// How each canonical column was matched: `(canonical, source header)`.
    pub columns: Vec<(String, String)>,
}

/// Uppercases and strips the accents that appear in INMET headers, so
/// matching is robust to capitalisation and encoding quirks.
fn fold_header(field: &str) -> String {
    field
        .chars()
        .flat_map(char::to_uppercase)
        .map(|c| match c {
            'À' | 'Á' | 'Â' | 'Ã' | 'Ä' => 'A',
            'È' | 'É' | 'Ê' | 'Ë' => 'E',
            'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
            'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' => 'O',
            'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
            'Ç' => 'C',
            'Ñ' => 'N',
            other => other,
        })
        .collect()
}

/// Reads a file as UTF-8, falling back to Latin-1 (the encoding of many
/// INMET exports) when the bytes are not valid UTF-8.
fn read_text_lossy(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        // Latin-1 maps each byte to the Unicode code point with the same value
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}

fn pick<F: Fn(&str) -> bool>(folded: &[String], predicate: F) -> Option<usize> {
    folded.iter().position(|f| predicate(f))
}

/// Maps each canonical column to an index in the INMET header, using
/// accent-folded substring matching with fixed precedence rules.
fn match_inmet_columns(header: &[String]) -> Result<Vec<(String, usize)>> {
    let folded: Vec<String> = header.iter().map(|h| fold_header(h)).collect();
    let date = pick(&folded, |f| f.contains("DATA"));
    let hour = pick(&folded, |f| f.contains("HORA") && f.contains("UTC"))
        .or_else(|| pick(&folded, |f| f.trim_start().starts_with("HORA")));
    let direction = pick(&folded, |f| f.contains("DIRECAO"));
    let precip = pick(&folded, |f| f.contains("PRECIPITACAO"));
    let pressure = pick(&folded, |f| f.contains("PRESSAO") && f.contains("ESTACAO"))
        .or_else(|| pick(&folded, |f| f.contains("PRESSAO")));
    let temp = pick(&folded, |f| f.contains("TEMPERATURA DO AR"))
        .or_else(|| pick(&folded, |f| f.contains("BULBO")))
        .or_else(|| {
            pick(&folded, |f| {
                f.contains("TEMPERATURA") && !f.contains("ORVALHO")
            })
        });
    let dew = pick(&folded, |f| {
        f.contains("ORVALHO") && !f.contains("MAX") && !f.contains("MIN")
    })
    .or_else(|| pick(&folded, |f| f.contains("ORVALHO")));
    let humidity = pick(&folded, |f| f.contains("UMIDADE RELATIVA DO AR"))
        .or_else(|| pick(&folded, |f| f.contains("UMIDADE")));
    let gust = pick(&folded, |f| f.contains("RAJADA"));
    let speed = pick(&folded, |f| f.contains("VELOCIDADE"));

    let wanted = [
        ("date", date),
        ("hour", hour),
        ("wind_dir_deg", direction),
        ("precip_mm", precip),
        ("pressure_mb", pressure),
        ("temp_c", temp),
        ("dew_point_c", dew),
        ("humidity_pct", humidity),
        ("gust_ms", gust),
        ("wind_speed_ms", speed),
    ];
    let missing: Vec<&str> = wanted
        .iter()
        .filter(|(_, idx)| idx.is_none())
        .map(|(name, _)| *name)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "could not locate INMET columns for: {}",
            missing.join(", ")
        )));
    }
    Ok(wanted
        .into_iter()
        .map(|(name, idx)| (name.to_string(), idx.expect("checked above")))
        .collect())
}

/// Parses the INMET date column; station exports use several layouts.
fn parse_inmet_date(field: &str, line: u64) -> Result<NaiveDate> {
    let field = field.trim();
    for fmt in ["%Y-%m-%d", "%Y/%m/%d", "%d/%m/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(field, fmt) {
            return Ok(d);
        }
    }
    Err(Error::MalformedRow {
        line,
        message: format!("unrecognised date `{field}`"),
    })
}

/// Parses the INMET hour column (`"0000 UTC"`, `"00:00"`, `"0"`, …) by
/// extracting its digits: the last two are minutes when four are present.
fn parse_inmet_hour(field: &str, line: u64) -> Result<(u32, u32)> {
    let digits: String = field.chars().filter(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || digits.len() > 4 {
        return Err(Error::MalformedRow {
            line,
            message: format!("unrecognised hour `{field}`"),
        });
    }
    let (hour, minute) = if digits.len() <= 2 {
        (digits.parse::<u32>().expect("digits only"), 0)
    } else {
        let split = digits.len() - 2;
        (
            digits[..split].parse::<u32>().expect("digits only"),
            digits[split..].parse::<u32>().expect("digits only"),
        )
    };
    if hour > 23 || minute > 59 {
        return Err(Error::MalformedRow {
            line,
            message: format!("hour `{field}` is out of range"),
        });
    }
    Ok((hour, minute))
}

/// Converts an INMET station export into the canonical wind layout.
///
/// Handles semicolon delimiters, decimal commas, `-9999` missing-value
/// sentinels, Latin-1 or UTF-8 encoding, and a free-form metadata preamble
/// before the header line.  Unparseable or out-of-range measurements become
/// missing values (counted in the returned stats) rather than errors, since
/// the canonical loader is the place where strictness pays off.
pub fn convert_inmet<P: AsRef<Path>, Q: AsRef<Path>>(input: P, output: Q) -> Result<InmetStats> {
    let input = input.as_ref();
    let text = read_text_lossy(input)?;
    let lines: Vec<&str> = text.lines().collect();

    // the header is the first line mentioning both a date and an hour column
    let header_idx = lines
        .iter()
        .position(|l| {
            let folded = fold_header(l);
            folded.contains("DATA") && folded.contains("HORA")
        })
        .ok_or_else(|| {
            Error::Data(format!(
                "{} has no header line with date and hour columns",
                input.display()
            ))
        })?;
    let header: Vec<String> = lines[header_idx]
        .split(';')
        .map(|f| f.trim().to_string())
        .collect();
    let columns = match_inmet_columns(&header)?;
    let index_of = |name: &str| -> usize {
        columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, idx)| idx)
            .expect("all canonical columns were matched")
    };

    let mut wtr = csv::Writer::from_path(output.as_ref())?;
    wtr.write_record(WIND_COLUMNS)?;

    let mut stats = InmetStats {
        rows_read: 0,
        rows_written: 0,
        missing_values: 0,
        columns: columns
            .iter()
            .map(|(name, idx)| (name.clone(), header[*idx].clone()))
            .collect(),
    };

    let value_columns = [
        "wind_dir_deg",
        "precip_mm",
        "pressure_mb",
        "temp_c",
        "dew_point_c",
        "humidity_pct",
        "gust_ms",
        "wind_speed_ms",
    ];
    let value_indices: Vec<usize> = value_columns.iter().map(|n| index_of(n)).collect();
    let date_idx = index_of("date");
    let hour_idx = index_of("hour");

    for (offset, raw) in lines[header_idx + 1..].iter().enumerate() {
        let line_no = (header_idx + 2 + offset) as u64;
        if raw.trim().is_empty() {
            continue;
        }
        stats.rows_read += 1;
        let fields: Vec<&str> = raw.split(';').collect();
        let get = |idx: usize| fields.get(idx).copied().unwrap_or("");

        let date = parse_inmet_date(get(date_idx), line_no)?;
        let (hour, minute) = parse_inmet_hour(get(hour_idx), line_no)?;
        let timestamp = date
            .and_hms_opt(hour, minute, 0)
            .expect("validated hour and minute");

        let mut record: Vec<String> = Vec::with_capacity(WIND_COLUMNS.len());
        record.push(timestamp.format("%Y-%m-%dT%H:%M:%S").to_string());
        for (slot, &idx) in value_columns.iter().zip(&value_indices) {
            let raw_value = get(idx).trim().replace(',', ".");
            let mut parsed = if raw_value.is_empty() {
                None
            } else {
                raw_value.parse::<f64>().ok()
            };
            // INMET marks missing measurements with large negative sentinels
            if matches!(parsed, Some(v) if v <= -9990.0 || !v.is_finite()) {
                parsed = None;
            }
            if *slot == "wind_dir_deg" {
                if let Some(d) = parsed {
                    if !(0.0..=360.0).contains(&d) {
                        log::warn!(
                            "line {line_no}: wind direction {d} outside [0, 360]; treated as missing"
                        );
                        parsed = None;
                    }
                }
            }
            match parsed {
                Some(v) => record.push(format!("{v}")),
                None => {
                    stats.missing_values += 1;
                    record.push(String::new());
                }
            }
        }
        wtr.write_record(&record)?;
        stats.rows_written += 1;
    }
    wtr.flush()?;
    if stats.rows_written == 0 {
        return Err(Error::Data(format!(
            "{} contains no data rows after the header",
            input.display()
        )));
    }
    log::info!(
        "converted {} INMET rows ({} missing cells) from {}",
        stats.rows_written,
        stats.missing_values,
        input.display()
    );
    Ok(stats)
}
