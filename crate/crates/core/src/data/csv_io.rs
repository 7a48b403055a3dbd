//! CSV ingestion and export of pile-driving records.
//!
//! Header, exactly: `pile_size_mm,pile_length_m,hammer_weight_ton,drop_height_m,
//! distance_m,sensor_location,sensor_direction[,ppv_mm_s]`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::record::{Feature, PileDrivingRecord, SensorDirection, SensorLocation, N_FEATURES};
use crate::error::{Error, Result};

pub const PPV_COLUMN: &str = "ppv_mm_s";

pub fn header(with_ppv: bool) -> Vec<&'static str> {
    let mut h: Vec<&'static str> = Feature::ALL.iter().map(|f| f.column()).collect();
    if with_ppv {
        h.push(PPV_COLUMN);
    }
    h
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<PileDrivingRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_records(file, &path.display().to_string())
}

/// Parses records from any reader; `source` labels error messages.
pub fn read_records<R: Read>(reader: R, source: &str) -> Result<Vec<PileDrivingRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| Error::Csv {
        path: source.into(),
        source: e,
    };
    let invalid = |row: usize, column: &str, message: String| Error::Validation {
        path: source.to_string(),
        row,
        column: column.to_string(),
        message,
    };

    let found: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let with_ppv = found.len() == N_FEATURES + 1;
    let expected = header(with_ppv);
    for (i, want) in expected.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(invalid(0, want, format!("header column {} is `{got}`, expected `{want}`", i + 1)))
            }
            None => return Err(invalid(0, want, "missing column".into())),
        }
    }
    if found.len() > expected.len() {
        return Err(invalid(0, &found[expected.len()], "unexpected extra column".into()));
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(csv_err)?;
        let number = |col: usize| -> Result<f64> {
            let name = expected[col];
            let cell = rec.get(col).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| invalid(row, name, format!("`{cell}` is not a number")))
        };
        let mut f = [0.0; N_FEATURES];
        for (col, slot) in f.iter_mut().enumerate() {
            *slot = number(col)?;
        }
        for feat in &Feature::ALL[..5] {
            let v = f[feat.index()];
            if v <= 0.0 {
                return Err(invalid(row, feat.column(), format!("must be positive, got {v}")));
            }
        }
        let code = |feat: Feature| -> Result<i64> {
            let v = f[feat.index()];
            if v.fract() != 0.0 || !(1.0..=3.0).contains(&v) {
                return Err(invalid(row, feat.column(), format!("code {v} is not one of 1, 2, 3")));
            }
            Ok(v as i64)
        };
        let sensor_location = SensorLocation::from_code(code(Feature::SensorLocation)?).expect("checked");
        let sensor_direction = SensorDirection::from_code(code(Feature::SensorDirection)?).expect("checked");
        let ppv = if with_ppv {
            let p = number(N_FEATURES)?;
            if p <= 0.0 {
                return Err(invalid(row, PPV_COLUMN, format!("must be positive, got {p}")));
            }
            Some(p)
        } else {
            None
        };
        out.push(PileDrivingRecord {
            pile_size: f[0],
            pile_length: f[1],
            hammer_weight: f[2],
            drop_height: f[3],
            distance: f[4],
            sensor_location,
            sensor_direction,
            ppv,
        });
    }
    Ok(out)
}

/// Writes records; the ppv column is included only when every record has one.
pub fn write_records<W: Write>(writer: W, records: &[PileDrivingRecord]) -> Result<()> {
    let with_ppv = !records.is_empty() && records.iter().all(|r| r.ppv.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        source: e,
    };
    w.write_record(header(with_ppv)).map_err(wrap)?;
    for r in records {
        let f = r.features();
        let mut cells: Vec<String> = f[..5].iter().map(|v| v.to_string()).collect();
        cells.push(r.sensor_location.code().to_string());
        cells.push(r.sensor_direction.code().to_string());
        if with_ppv {
            cells.push(r.ppv.expect("checked").to_string());
        }
        w.write_record(&cells).map_err(wrap)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, records: &[PileDrivingRecord]) -> Result<()> {
    write_records(File::create(path)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "pile_size_mm,pile_length_m,hammer_weight_ton,drop_height_m,distance_m,sensor_location,sensor_direction,ppv_mm_s";

    fn parse(body: &str) -> Result<Vec<PileDrivingRecord>> {
        read_records(body.as_bytes(), "test.csv")
    }

    #[test]
    fn three_rows() {
        let text = format!(
            "{HEADER}\n300,18,4.2,0.5,3,1,2,6.03\n600,24,8,0.35,20,3,1,0.9\n250,10,3,0.3,80,2,3,0.127\n"
        );
        let recs = parse(&text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].sensor_direction, SensorDirection::Transverse);
        assert_eq!(recs[2].ppv, Some(0.127));
    }

    #[test]
    fn prediction_only_file() {
        let h = header(false).join(",");
        let recs = parse(&format!("{h}\n300,18,4.2,0.5,3,1,2\n")).unwrap();
        assert_eq!(recs[0].ppv, None);
    }

    #[test]
    fn location_code_out_of_range_names_row() {
        let err = parse(&format!("{HEADER}\n300,18,4.2,0.5,3,1,2,6\n300,18,4.2,0.5,3,4,2,6\n")).unwrap_err();
        match err {
            Error::Validation { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "sensor_location");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn negative_distance() {
        let err = parse(&format!("{HEADER}\n300,18,4.2,0.5,-5,1,2,6\n")).unwrap_err();
        assert!(matches!(err, Error::Validation { row: 1, ref column, .. } if column == "distance_m"), "{err}");
    }

    #[test]
    fn non_numeric_cell() {
        let err = parse(&format!("{HEADER}\n300,abc,4.2,0.5,5,1,2,6\n")).unwrap_err();
        assert!(err.to_string().contains("pile_length_m"), "{err}");
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn missing_and_misnamed_columns() {
        assert!(parse("pile_size_mm,pile_length_m\n1,2\n").is_err());
        let bad = HEADER.replace("distance_m", "dist");
        let err = parse(&format!("{bad}\n300,18,4.2,0.5,5,1,2,6\n")).unwrap_err();
        assert!(err.to_string().contains("distance_m"), "{err}");
    }

    #[test]
    fn non_positive_ppv() {
        assert!(parse(&format!("{HEADER}\n300,18,4.2,0.5,5,1,2,0\n")).is_err());
    }

    #[test]
    fn write_then_read() {
        let recs = crate::data::generate_synthetic(20, &Default::default());
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(HEADER));
        assert_eq!(read_records(buf.as_slice(), "mem").unwrap(), recs);
    }
}
