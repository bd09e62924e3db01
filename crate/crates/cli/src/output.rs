//! CSV and markdown writers.
//!
//! Every cell becomes three columns: the value, its tolerance (an error
//! bound, or one standard error for simulated values) and the method.
//! Numbers use the shortest representation that round-trips (scientific
//! notation for very small or large magnitudes), so the bytes depend only
//! on the values.

use std::io::Write;

use ssct::tables::{Cell, Table};

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

fn triple(c: Option<&Cell>) -> [String; 3] {
    match c {
        Some(c) => [num(c.value), num(c.tolerance), c.method.to_string()],
        None => [String::new(), String::new(), String::new()],
    }
}

fn header(first: &str, names: &[String]) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for n in names {
        h.extend([n.clone(), format!("{n}_tol"), format!("{n}_method")]);
    }
    h
}

/// One row per metric, three columns per scenario.
pub fn table_csv<W: Write>(t: &Table, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header("metric", &t.scenarios))?;
    for row in &t.rows {
        let mut rec = vec![row.metric.clone()];
        for c in &row.cells {
            rec.extend(triple(c.as_ref()));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per evaluated point, three columns per metric.
pub fn sweep_csv<W: Write>(
    param: &str,
    metrics: &[String],
    points: &[(f64, Vec<Option<Cell>>)],
    w: W,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(param, metrics))?;
    for (x, cells) in points {
        let mut rec = vec![num(*x)];
        for c in cells {
            rec.extend(triple(c.as_ref()));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Five significant digits.
pub fn short(x: f64) -> String {
    if x.is_nan() {
        return "-".into();
    }
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        let digits = if x == 0.0 { 0 } else { (4 - x.abs().log10().floor() as i32).max(0) as usize };
        let s = format!("{x:.digits$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.4e}")
    }
}

fn cell_text(c: Option<&Cell>) -> String {
    match c {
        None => String::new(),
        Some(c) if c.tolerance > 0.0 => format!("{} ± {} ({})", short(c.value), short(c.tolerance), c.method),
        Some(c) => format!("{} ({})", short(c.value), c.method),
    }
}

pub fn table_markdown(t: &Table) -> String {
    let mut s = format!("**{}**\n\n| metric |", t.title);
    for n in &t.scenarios {
        s.push_str(&format!(" {n} |"));
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(t.scenarios.len()));
    s.push('\n');
    for row in &t.rows {
        s.push_str(&format!("| {} |", row.metric));
        for c in &row.cells {
            s.push_str(&format!(" {} |", cell_text(c.as_ref())));
        }
        s.push('\n');
    }
    s
}

pub fn sweep_markdown(param: &str, metrics: &[String], points: &[(f64, Vec<Option<Cell>>)]) -> String {
    let mut s = format!("| {param} |");
    for m in metrics {
        s.push_str(&format!(" {m} |"));
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(metrics.len()));
    s.push('\n');
    for (x, cells) in points {
        s.push_str(&format!("| {} |", num(*x)));
        for c in cells {
            s.push_str(&format!(" {} |", cell_text(c.as_ref())));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssct::performance::Method;

    fn sample() -> Table {
        let mut t = Table::new("demo", vec!["0 dB".into(), "a,b".into()]);
        t.push("alpha", vec![Some(Cell::new(0.011, 1e-12, Method::Exact)), None]);
        t.push("beta", vec![Some(Cell::new(0.5, f64::NAN, Method::Grid)), Some(Cell::input(3.0))]);
        t
    }

    #[test]
    fn csv_layout_and_quoting() {
        let mut buf = Vec::new();
        table_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "metric,0 dB,0 dB_tol,0 dB_method,\"a,b\",\"a,b_tol\",\"a,b_method\"");
        assert_eq!(lines[1], "alpha,0.011,1e-12,exact,,,");
        assert_eq!(lines[2], "beta,0.5,,grid,3.0,0.0,input");
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(0.0113303), "0.01133");
        assert_eq!(short(26.916), "26.916");
        assert_eq!(short(4450.0), "4450");
        assert_eq!(short(1e-12), "1.0000e-12");
    }

    #[test]
    fn markdown_has_one_line_per_metric() {
        let md = table_markdown(&sample());
        assert_eq!(md.lines().count(), 2 + 2 + 2);
        assert!(md.contains("0.011 ± 1.0000e-12 (exact)"));
    }
}
