//! CSV and PGM renderings of analysis results. Grid outputs carry the
//! `(row, col)` of every variable `v = row·cols + col`.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{HistogramRow, Unateness};
use crate::formats::to_pgm;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn decimal(q: &BigRational) -> String {
    format!("{}", q.to_f64().unwrap_or(f64::NAN))
}

/// `k,count,proportion`; counts are exact, proportions are decimal.
pub fn histogram_csv(rows: &[HistogramRow]) -> String {
    let mut w = writer();
    w.write_record(["k", "count", "proportion"]).unwrap();
    for r in rows {
        w.write_record([r.k.to_string(), r.count.to_string(), decimal(&r.proportion)]).unwrap();
    }
    finish(w)
}

/// `var,row,col,marginal`.
pub fn marginals_csv(values: &[BigRational], cols: usize) -> String {
    let mut w = writer();
    w.write_record(["var", "row", "col", "marginal"]).unwrap();
    for (v, q) in values.iter().enumerate() {
        w.write_record([v.to_string(), (v / cols).to_string(), (v % cols).to_string(), decimal(q)]).unwrap();
    }
    finish(w)
}

/// `var,row,col,unateness` with labels `pos`, `neg`, `unused`, `none`.
pub fn unateness_csv(labels: &[Unateness], cols: usize) -> String {
    let mut w = writer();
    w.write_record(["var", "row", "col", "unateness"]).unwrap();
    for (v, u) in labels.iter().enumerate() {
        w.write_record([v.to_string(), (v / cols).to_string(), (v % cols).to_string(), u.label().to_string()]).unwrap();
    }
    finish(w)
}

/// Marginals as a greymap, rescaled for display.
pub fn marginals_pgm(values: &[BigRational], rows: usize, cols: usize) -> String {
    let v: Vec<f64> = values.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
    to_pgm(&v, rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn csv_layouts() {
        let half = BigRational::new(1.into(), 2.into());
        let rows = vec![HistogramRow { k: 1, count: BigUint::from(2u8), proportion: half.clone() }];
        assert_eq!(histogram_csv(&rows), "k,count,proportion\n1,2,0.5\n");
        let m = marginals_csv(&[half.clone(), half.clone(), half], 2);
        assert_eq!(m.lines().nth(3), Some("2,1,0,0.5"));
        let u = unateness_csv(&[Unateness::PosUnate, Unateness::NonUnate], 1);
        assert_eq!(u, "var,row,col,unateness\n0,0,0,pos\n1,1,0,none\n");
    }
}
