//! Measurement CSV: `theta_offset_rad,z_mean_m,z_stddev_m,frames`, with
//! `#` lines ignored.

use std::io::Read;

use cowvad_core::MeasurementSample;

use crate::output::{Cell, Table};

pub const COLUMNS: [&str; 4] = ["theta_offset_rad", "z_mean_m", "z_stddev_m", "frames"];

#[derive(Debug, thiserror::Error)]
pub enum MeasurementError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header `{}`, found `{found}`", COLUMNS.join(","))]
    Header { found: String },
    #[error("record {record}: {message}")]
    Record { record: usize, message: String },
}

pub fn to_table(samples: &[MeasurementSample]) -> Table {
    let mut t = Table::new(&COLUMNS);
    for s in samples {
        t.push(vec![
            s.theta_offset.into(),
            s.z_mean.into(),
            s.z_stddev.into(),
            Cell::from(s.frame_count),
        ]);
    }
    t
}

pub fn read_measurements<R: Read>(input: R) -> Result<Vec<MeasurementSample>, MeasurementError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(MeasurementError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let bad = |message: String| MeasurementError::Record { record: i + 1, message };
        let num = |j: usize| {
            record[j]
                .parse::<f64>()
                .map_err(|_| bad(format!("{}: cannot parse `{}`", COLUMNS[j], &record[j])))
        };
        let sample = MeasurementSample {
            theta_offset: num(0)?,
            z_mean: num(1)?,
            z_stddev: num(2)?,
            frame_count: record[3]
                .parse::<u32>()
                .map_err(|_| bad(format!("frames: cannot parse `{}`", &record[3])))?,
        };
        sample.validate().map_err(|e| bad(e.to_string()))?;
        out.push(sample);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_header_and_bad_records() {
        assert!(matches!(
            read_measurements("a,b,c,d\n".as_bytes()),
            Err(MeasurementError::Header { .. })
        ));
        let text = "theta_offset_rad,z_mean_m,z_stddev_m,frames\n0,1e-6,1e-7,500\n0,1e-6,-1,500\n";
        let e = read_measurements(text.as_bytes()).unwrap_err();
        assert!(e.to_string().starts_with("record 2:"), "{e}");
        let text = "theta_offset_rad,z_mean_m,z_stddev_m,frames\n0,1e-6,1e-7,0\n";
        assert!(read_measurements(text.as_bytes()).is_err());
    }

    #[test]
    fn skips_comments() {
        let text = "# seed = 3\ntheta_offset_rad,z_mean_m,z_stddev_m,frames\n# note\n1e-3,-2e-6,0,12\n";
        let s = read_measurements(text.as_bytes()).unwrap();
        assert_eq!(
            s,
            [MeasurementSample {
                theta_offset: 1e-3,
                z_mean: -2e-6,
                z_stddev: 0.0,
                frame_count: 12
            }]
        );
    }
}
