//! CSV emitters. Numbers are written with 17 significant digits in
//! scientific notation; every file starts with a header row.

use std::io::{self, Write};

use super::{CollisionReport, Histogram, LocalTimeEstimate, OccupationReport, ResidualReport};
use crate::sim::PathSample;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

/// Columns `t, x_1..x_d, cell`.
pub fn write_path<W: Write>(w: &mut W, path: &PathSample) -> io::Result<()> {
    let d = path.dim();
    let mut head = vec!["t".to_string()];
    head.extend((1..=d).map(|i| format!("x_{i}")));
    head.push("cell".into());
    row(w, &head)?;
    for ((t, x), cell) in path.times().iter().zip(path.iter_states()).zip(path.cells()) {
        let mut f = vec![num(*t)];
        f.extend(x.iter().map(|&v| num(v)));
        f.push(cell.to_string());
        row(w, &f)?;
    }
    Ok(())
}

/// Columns `cell, fraction, std_error, reference`; the reference is empty when
/// no quadrature value is attached under the cell name.
pub fn write_occupation<W: Write>(w: &mut W, report: &OccupationReport) -> io::Result<()> {
    row(w, &["cell".into(), "fraction".into(), "std_error".into(), "reference".into()])?;
    for (cell, avg) in &report.theta_tau {
        let key = cell.to_string();
        let reference = report.reference_values.get(&key).map(|&v| num(v)).unwrap_or_default();
        row(w, &[key, num(avg.mean), num(avg.std_error), reference])?;
    }
    Ok(())
}

/// One row per rank, one column per name.
pub fn write_rank_occupancy<W: Write>(w: &mut W, report: &OccupationReport) -> io::Result<()> {
    let d = report.theta_ki.nrows();
    let mut head = vec!["rank".to_string()];
    head.extend((1..=d).map(|i| format!("name_{i}")));
    row(w, &head)?;
    for k in 0..d {
        let mut f = vec![(k + 1).to_string()];
        f.extend((0..d).map(|i| num(report.theta_ki[(k, i)])));
        row(w, &f)?;
    }
    Ok(())
}

/// Columns `name, mean, std_error, reference` for named test functions.
pub fn write_ergodic<W: Write>(w: &mut W, report: &OccupationReport) -> io::Result<()> {
    row(w, &["function".into(), "mean".into(), "std_error".into(), "reference".into()])?;
    for (name, avg) in &report.ergodic_averages {
        let reference = report.reference_values.get(name).map(|&v| num(v)).unwrap_or_default();
        row(w, &[name.clone(), num(avg.mean), num(avg.std_error), reference])?;
    }
    Ok(())
}

/// Columns `t, L_k...` for the given estimates, which must share the sample grid.
pub fn write_local_times<W: Write>(w: &mut W, times: &[f64], est: &[LocalTimeEstimate]) -> io::Result<()> {
    let mut head = vec!["t".to_string()];
    head.extend(est.iter().map(|e| format!("L_{}", e.k)));
    row(w, &head)?;
    for (m, t) in times.iter().enumerate() {
        let mut f = vec![num(*t)];
        f.extend(est.iter().map(|e| num(e.values[m])));
        row(w, &f)?;
    }
    Ok(())
}

/// Columns `t, residual_1..residual_d, telescoped`.
pub fn write_residuals<W: Write>(w: &mut W, times: &[f64], r: &ResidualReport) -> io::Result<()> {
    let d = r.series.len();
    let mut head = vec!["t".to_string()];
    head.extend((1..=d).map(|k| format!("residual_{k}")));
    head.push("telescoped".into());
    row(w, &head)?;
    for (m, t) in times.iter().enumerate() {
        let mut f = vec![num(*t)];
        f.extend(r.series.iter().map(|s| num(s[m])));
        f.push(num(r.series.iter().map(|s| s[m]).sum()));
        row(w, &f)?;
    }
    Ok(())
}

/// Columns `eps, pair_fraction, triple_fraction`, then the exact-tie count.
pub fn write_collisions<W: Write>(w: &mut W, r: &CollisionReport) -> io::Result<()> {
    row(w, &["eps".into(), "pair_fraction".into(), "triple_fraction".into()])?;
    for rung in &r.ladder {
        row(w, &[num(rung.eps), num(rung.pair_fraction), num(rung.triple_fraction)])?;
    }
    Ok(())
}

/// Columns `lo, hi, empirical, theoretical`; `theoretical` is the bin average
/// of the reference density when one is given.
pub fn write_histogram<W: Write>(w: &mut W, h: &Histogram, reference: Option<&dyn Fn(f64, f64) -> f64>) -> io::Result<()> {
    row(w, &["lo".into(), "hi".into(), "empirical".into(), "theoretical".into()])?;
    for (e, dens) in h.edges.windows(2).zip(h.density()) {
        let theory = reference.map(|f| num(f(e[0], e[1]))).unwrap_or_default();
        row(w, &[num(e[0]), num(e[1]), num(dens), theory])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_csv_layout() {
        let p = PathSample::from_parts(3, vec![0.0, 0.1], vec![0.2, 0.5, 0.3, 0.5, 0.3, 0.2]);
        let mut buf = Vec::new();
        write_path(&mut buf, &p).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2,x_3,cell");
        assert!(lines[1].ends_with(",231"));
        assert!(lines[2].ends_with(",123"));
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
