use std::io::{Read, Write};

use super::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Point};
use crate::scalar::Real;

/// Writes `coord_0,...,coord_k,weight`.
pub fn write_measure_csv<T: Real, W: Write>(m: &DiscreteMeasure<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = m.spec.coord_len();
    let mut header: Vec<String> = (0..k).map(|i| format!("coord_{i}")).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    for (p, wt) in m.points.iter().zip(&m.weights) {
        let mut rec: Vec<String> = p.coords.iter().map(|c| format!("{c:e}")).collect();
        rec.push(format!("{wt:e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a measure file and validates every row against `spec`.
pub fn read_measure_csv<T: Real, R: Read>(spec: &ManifoldSpec<T>, input: R) -> Result<DiscreteMeasure<T>> {
    let mut r = csv::Reader::from_reader(input);
    let k = spec.coord_len();
    let headers = r.headers()?.clone();
    let expected: Vec<String> = (0..k).map(|i| format!("coord_{i}")).chain(["weight".to_string()]).collect();
    if headers.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidInput(format!(
            "measure header {:?} does not match {} ({expected:?})",
            headers.iter().collect::<Vec<_>>(),
            spec
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?;
        points.push(Point::new(vals[..k].iter().map(|&c| T::lit(c)).collect()));
        weights.push(T::lit(vals[k]));
    }
    DiscreteMeasure::from_samples(spec, points, Some(weights))
}
