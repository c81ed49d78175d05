//! Trajectory CSV: `t, r, p_r, u, q_1..q_n, v_1..v_n, phi_i_j (i < j < n),
//! energy, casimir`, one row per sample, every number printed with 17
//! significant digits so that a round trip is exact.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use super::write_atomic;
use crate::dynamics::Sample;
use crate::monopole::{vertical_len, vertical_pairs, AdjointVector};

pub fn header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "r", "p_r", "u"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=n).map(|i| format!("q_{i}")));
    h.extend((1..=n).map(|i| format!("v_{i}")));
    h.extend(vertical_pairs(n).map(|(i, j)| format!("phi_{}_{}", i + 1, j + 1)));
    h.push("energy".into());
    h.push("casimir".into());
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_bytes(n: usize, samples: &[Sample]) -> Result<Vec<u8>, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(n)).map_err(|e| e.to_string())?;
    for s in samples {
        let mut row = vec![fmt(s.t), fmt(s.r), fmt(s.pr), fmt(s.u)];
        row.extend(s.q.iter().map(|&x| fmt(x)));
        row.extend(s.v.iter().map(|&x| fmt(x)));
        row.extend(s.phi.coeffs().into_iter().map(fmt));
        row.push(fmt(s.energy));
        row.push(fmt(s.casimir));
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

/// Writes the CSV atomically.
pub fn export_csv(n: usize, samples: &[Sample], path: &Path) -> Result<(), String> {
    let bytes = to_bytes(n, samples)?;
    write_atomic(path, |f| f.write_all(&bytes))
}

/// Parses a CSV produced by [`export_csv`], returning `n` and the samples.
pub fn parse_csv(text: &str) -> Result<(usize, Vec<Sample>), String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let head: Vec<String> = rdr.headers().map_err(|e| format!("CSV header: {e}"))?.iter().map(String::from).collect();
    let n = head.iter().filter(|h| h.starts_with("q_")).count();
    if n < 2 || head != header(n) {
        return Err("CSV header does not match the trajectory layout".into());
    }
    let m = vertical_len(n);
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("CSV row {}: {e}", line + 1))?;
        let vals = rec
            .iter()
            .enumerate()
            .map(|(col, s)| s.trim().parse::<f64>().map_err(|e| format!("CSV row {} column {}: {e}", line + 1, head[col])))
            .collect::<Result<Vec<f64>, String>>()?;
        if vals.len() != head.len() {
            return Err(format!("CSV row {}: expected {} fields, found {}", line + 1, head.len(), vals.len()));
        }
        let phi = AdjointVector::from_coeffs(n, &vals[4 + 2 * n..4 + 2 * n + m]).map_err(|e| e.to_string())?;
        samples.push(Sample {
            t: vals[0],
            r: vals[1],
            pr: vals[2],
            u: vals[3],
            q: DVector::from_column_slice(&vals[4..4 + n]),
            v: DVector::from_column_slice(&vals[4 + n..4 + 2 * n]),
            phi,
            energy: vals[4 + 2 * n + m],
            casimir: vals[5 + 2 * n + m],
        });
    }
    if samples.is_empty() {
        return Err("CSV contains no samples".into());
    }
    Ok((n, samples))
}

pub fn import_csv(path: &Path) -> Result<(usize, Vec<Sample>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            header(4).join(","),
            "t,r,p_r,u,q_1,q_2,q_3,q_4,v_1,v_2,v_3,v_4,phi_1_2,phi_1_3,phi_2_3,energy,casimir"
        );
        assert_eq!(header(2).len(), 4 + 4 + 2);
    }

    #[test]
    fn round_trip_is_exact() {
        let n = 4;
        let sample = Sample {
            t: 0.1,
            r: std::f64::consts::PI,
            pr: -1.0 / 3.0,
            u: 1e-300,
            q: DVector::from_vec(vec![0.1, 0.2, f64::MIN_POSITIVE, -7.0]),
            v: DVector::from_vec(vec![1.0 / 7.0, -0.0, 3e10, 2.0]),
            phi: AdjointVector::from_coeffs(n, &[0.3, -1.0 / 9.0, 5e-17]).unwrap(),
            energy: -0.5,
            casimir: 0.123_456_789_012_345_67,
        };
        let bytes = to_bytes(n, &[sample.clone(), sample.clone()]).unwrap();
        let (m, back) = parse_csv(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(m, n);
        assert_eq!(back.len(), 2);
        let a = &back[0];
        assert_eq!(a.t.to_bits(), sample.t.to_bits());
        assert_eq!(a.u.to_bits(), sample.u.to_bits());
        assert_eq!(a.q, sample.q);
        assert_eq!(a.v, sample.v);
        assert_eq!(a.phi, sample.phi);
        assert_eq!(a.casimir.to_bits(), sample.casimir.to_bits());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
        let good = header(2).join(",");
        assert!(parse_csv(&format!("{good}\n")).is_err());
        assert!(parse_csv(&format!("{good}\n1,2,3\n")).is_err());
    }
}
