//! CSV exports for RDMs, heatmaps and RSA tables.

use std::io::Write;

use crate::alignment::layers::RsaRow;
use crate::numeric::Matrix;
use crate::scalar::Real;

/// Nine significant digits in scientific notation.
pub fn format_sig9<T: Real>(v: T) -> String {
    format!("{:.8e}", v.as_f64())
}

/// Long-form `i,j,value` CSV; `labels` name the rows/columns (indices if `None`).
pub fn write_matrix_csv<T: Real, W: Write>(
    out: &mut W,
    m: &Matrix<T>,
    labels: Option<&[usize]>,
) -> std::io::Result<()> {
    writeln!(out, "i,j,value")?;
    let label = |k: usize| labels.map_or(k, |l| l[k]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            writeln!(out, "{},{},{}", label(i), label(j), format_sig9(m[(i, j)]))?;
        }
    }
    Ok(())
}

pub fn write_rsa_csv<T: Real, W: Write>(out: &mut W, rows: &[RsaRow<T>]) -> std::io::Result<()> {
    writeln!(out, "region,layer,similarity")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.region, r.layer, format_sig9(r.similarity))?;
    }
    Ok(())
}
