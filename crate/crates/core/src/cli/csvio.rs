//! Trajectory CSV: header `t,u0,…,u{N-1}`, one row per node, LF line ends,
//! numbers printed with 17 significant digits.

use std::io::{Read, Write};

use thiserror::Error;

use crate::quadrature::{TimeGrid, Trajectory};
use crate::space::OrderInterval;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed trajectory csv: {0}")]
    Format(String),
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CsvError::Io(io),
                _ => unreachable!(),
            }
        } else {
            CsvError::Format(e.to_string())
        }
    }
}

/// `%.17g`: shortest of fixed and exponent notation, trailing zeros dropped.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_trajectory<W: Write>(u: &Trajectory, out: W) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..u.truncation()).map(|k| format!("u{k}")));
    w.write_record(&header)?;
    for (j, row) in u.values().iter().enumerate() {
        let mut rec = vec![format_g17(u.grid().node(j))];
        rec.extend(row.iter().map(|&v| format_g17(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory; coordinates past the file's columns come from the
/// lower end of `envelope`.
pub fn read_trajectory<R: Read>(input: R, envelope: OrderInterval) -> Result<Trajectory, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    let n = header.len().saturating_sub(1);
    if n == 0 || &header[0] != "t" || (0..n).any(|k| header[k + 1] != format!("u{k}")) {
        return Err(CsvError::Format("header must be t,u0,u1,...".into()));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CsvError::Format(format!("row {}: {e}", line + 1)))?;
        nodes.push(parsed[0]);
        values.push(parsed[1..].to_vec());
    }
    let grid = TimeGrid::new(nodes).map_err(|e| CsvError::Format(e.to_string()))?;
    Trajectory::new(grid, values, envelope).map_err(|e| CsvError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::CoeffVec;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(0.00390625), "0.00390625");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456789.0), "123456789");
    }

    #[test]
    fn g17_round_trips() {
        for x in [1.0 / 3.0, -7.123e-300, 6.02e23, f64::MAX, f64::MIN_POSITIVE, 0.1 + 0.2] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip() {
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let env = OrderInterval::new(CoeffVec::zero(), CoeffVec::zero()).unwrap();
        let u = Trajectory::new(grid, vec![vec![0.0, 1.0 / 3.0], vec![0.1, 2.0], vec![0.2, -1e-9], vec![0.3, 4.0]], env.clone())
            .unwrap();
        let mut buf = Vec::new();
        write_trajectory(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,u0,u1\n0,0,0.33333333333333331\n"));
        assert!(!text.contains('\r'));
        let back = read_trajectory(buf.as_slice(), env).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid(), u.grid());
    }
}
