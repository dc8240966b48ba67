//! Descriptive statistics over frame columns.

use serde::Serialize;

use super::Frame;

/// Per-column summary. `n` counts non-missing cells; `sd` uses the n-1
/// denominator. All-missing columns report `n = 0` and missing stats.
#[derive(Clone, Debug, Serialize)]
pub struct ColumnStats {
    pub column: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn descriptive_stats(frame: &Frame) -> Vec<ColumnStats> {
    frame
        .column_names()
        .map(|name| {
            let series = frame.column(name).expect("name comes from the frame");
            let values: Vec<f64> = series.iter().flatten().copied().collect();
            let n = values.len();
            if n == 0 {
                return ColumnStats {
                    column: name.to_string(),
                    n: 0,
                    mean: None,
                    sd: None,
                    min: None,
                    max: None,
                };
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                Some((ss / (n as f64 - 1.0)).sqrt())
            } else {
                None
            };
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnStats {
                column: name.to_string(),
                n,
                mean: Some(mean),
                sd,
                min: Some(min),
                max: Some(max),
            }
        })
        .collect()
}

/// 3-decimal fixed formatting, switching to scientific notation with a
/// two-decimal mantissa above 10^6 (e.g. `2.33E+08`).
pub fn format_stat_value(v: f64) -> String {
    if v.abs() > 1e6 {
        let exp = v.abs().log10().floor() as i32;
        let mantissa = v / 10f64.powi(exp);
        format!("{mantissa:.2}E+{exp:02}")
    } else {
        format!("{v:.3}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_stat_value).unwrap_or_default()
}

/// Plain-text stats table.
pub fn stats_to_text(stats: &[ColumnStats]) -> String {
    let header = ["Variable", "Obs", "Mean", "Std. Dev.", "Min", "Max"];
    let mut rows: Vec<[String; 6]> = vec![header.map(String::from)];
    for s in stats {
        rows.push([
            s.column.clone(),
            s.n.to_string(),
            cell(s.mean),
            cell(s.sd),
            cell(s.min),
            cell(s.max),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        for (j, c) in row.iter().enumerate() {
            if j == 0 {
                out.push_str(&format!("{:<w$}", c, w = widths[0]));
            } else {
                out.push_str(&format!("  {:>w$}", c, w = widths[j]));
            }
        }
        out.push('\n');
    }
    out
}

/// Machine-readable stats (unrounded values).
pub fn stats_to_json(stats: &[ColumnStats]) -> String {
    serde_json::to_string_pretty(stats).expect("stats serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Day;

    fn frame_with(values: &[Option<f64>]) -> Frame {
        let dates: Vec<Day> = (0..values.len())
            .map(|i| Day::from_ymd(2020, 1, 1).unwrap().offset(i as i32))
            .collect();
        let mut f = Frame::new(dates);
        f.insert_column("x", values.to_vec(), "test").unwrap();
        f
    }

    #[test]
    fn min_max_bracket() {
        let f = frame_with(&[Some(5005.0), Some(67547.0)]);
        let s = &descriptive_stats(&f)[0];
        assert_eq!(s.min, Some(5005.0));
        assert_eq!(s.max, Some(67547.0));
    }

    #[test]
    fn constant_column_has_zero_sd() {
        let f = frame_with(&[Some(3.0), Some(3.0), Some(3.0)]);
        assert_eq!(descriptive_stats(&f)[0].sd, Some(0.0));
    }

    #[test]
    fn sample_sd_uses_n_minus_one() {
        let f = frame_with(&[Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
        let s = &descriptive_stats(&f)[0];
        assert_eq!(s.mean, Some(2.5));
        assert!((s.sd.unwrap() - 1.2909944487358056).abs() < 1e-12);
    }

    #[test]
    fn missing_cells_are_not_counted() {
        let f = frame_with(&[Some(1.0), None, Some(3.0)]);
        let s = &descriptive_stats(&f)[0];
        assert_eq!(s.n, 2);
        assert_eq!(s.mean, Some(2.0));
    }

    #[test]
    fn all_missing_column_reports_missing_stats() {
        let f = frame_with(&[None, None]);
        let s = &descriptive_stats(&f)[0];
        assert_eq!(s.n, 0);
        assert!(s.mean.is_none() && s.min.is_none());
    }

    #[test]
    fn rendering_marks_large_values_scientific() {
        assert_eq!(format_stat_value(270196.6), "270196.600");
        assert_eq!(format_stat_value(233000000.0), "2.33E+08");
        assert_eq!(format_stat_value(-42081.6), "-42081.600");
        assert_eq!(format_stat_value(2600000.0), "2.60E+06");
    }
}
