//! Plain CSV writers: comma separated, `\n` line endings, 17 significant
//! digits so values round-trip through text.

use std::fmt::Write as _;

use crate::grid::{GridFunction1D, GridFunction2D};

/// Shortest text that parses back to the same `f64`, capped at 17
/// significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let plain = format!("{x}");
    if plain.len() <= 24 {
        return plain;
    }
    format!("{x:e}")
}

/// `x,value` rows.
pub fn grid_1d(g: &GridFunction1D) -> String {
    let mut out = String::from("x,value\n");
    for (k, v) in g.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_f64(g.x(k)), fmt_f64(*v));
    }
    out
}

/// `t,s,value` rows, row-major in `t`.
pub fn grid_2d(g: &GridFunction2D) -> String {
    let mut out = String::from("t,s,value\n");
    let step = g.step();
    for i in 0..=g.nt() {
        let t = fmt_f64(i as f64 * step);
        for j in 0..=g.ns() {
            let _ = writeln!(out, "{},{},{}", t, fmt_f64(j as f64 * step), fmt_f64(g.get(i, j)));
        }
    }
    out
}

/// One row of a statistics report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub statistic: String,
    pub value: f64,
    pub se: Option<f64>,
    pub n: usize,
    pub seed_set: String,
}

/// `statistic,value,se,n,seed_set` rows; a missing standard error is left empty.
pub fn report(rows: &[ReportRow]) -> String {
    let mut out = String::from("statistic,value,se,n,seed_set\n");
    for r in rows {
        let se = r.se.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.statistic, fmt_f64(r.value), se, r.n, r.seed_set);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 1.0, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(2.0), "2");
    }

    #[test]
    fn grid_rows_have_headers() {
        let g = GridFunction1D::new(0.0, 0.5, vec![1.0, 2.0]).unwrap();
        assert_eq!(grid_1d(&g), "x,value\n0,1\n0.5,2\n");
        let s = GridFunction2D::from_fn(1.0, 1, 1, |t, s| t + s);
        assert_eq!(grid_2d(&s), "t,s,value\n0,0,0\n0,1,1\n1,0,1\n1,1,2\n");
    }

    #[test]
    fn report_leaves_missing_se_empty() {
        let rows = [ReportRow { statistic: "ks".into(), value: 0.01, se: None, n: 10, seed_set: "1".into() }];
        assert_eq!(report(&rows), "statistic,value,se,n,seed_set\nks,0.01,,10,1\n");
    }
}
