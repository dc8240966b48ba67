//! Date-indexed daily panel of named series with per-cell missingness.

mod date;
mod recipe;
mod stats;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};

pub use date::Day;
pub use recipe::{construct_variables, standard_recipes, Expr, VariableRecipe};
pub use stats::{descriptive_stats, format_stat_value, stats_to_json, stats_to_text, ColumnStats};

/// One column: a value or a missing marker per row.
pub type Series = Vec<Option<f64>>;

/// Fill policy applied per column by [`align_daily`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fill {
    /// Carry the last observed value onto subsequent missing days.
    ForwardFill,
    /// Leave missing cells missing.
    Strict,
}

/// A date-indexed panel. All columns have the same length as the date index;
/// dates are strictly increasing. Frames are immutable in spirit: operations
/// return new frames and never mutate shared data.
#[derive(Clone, Debug)]
pub struct Frame {
    dates: Vec<Day>,
    columns: IndexMap<String, Series>,
    meta: IndexMap<String, String>,
    warnings: Vec<String>,
}

impl Frame {
    pub fn new(dates: Vec<Day>) -> Frame {
        Frame {
            dates,
            columns: IndexMap::new(),
            meta: IndexMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[Day] {
        &self.dates
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(|s| s.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&Series> {
        self.columns
            .get(name)
            .ok_or_else(|| Error::Construction(format!("column '{name}' not found")))
    }

    /// Column provenance string, if recorded.
    pub fn provenance(&self, name: &str) -> Option<&str> {
        self.meta.get(name).map(|s| s.as_str())
    }

    /// Warnings accumulated while building this frame (e.g. out-of-range
    /// percent inputs). Never fatal.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub(crate) fn push_warning(&mut self, w: String) {
        self.warnings.push(w);
    }

    pub fn insert_column(
        &mut self,
        name: impl Into<String>,
        series: Series,
        provenance: impl Into<String>,
    ) -> Result<()> {
        if series.len() != self.dates.len() {
            return Err(Error::Argument(format!(
                "column length {} does not match {} dates",
                series.len(),
                self.dates.len()
            )));
        }
        let name = name.into();
        self.meta.insert(name.clone(), provenance.into());
        self.columns.insert(name, series);
        Ok(())
    }

    /// Row index of a date, if present.
    pub fn position(&self, day: Day) -> Option<usize> {
        self.dates.binary_search(&day).ok()
    }

    /// True when the date index covers consecutive calendar days.
    pub fn is_daily_contiguous(&self) -> bool {
        self.dates.windows(2).all(|w| w[0].succ() == w[1])
    }

    /// Load a CSV file: UTF-8, header row, first column `date`
    /// (`YYYY-MM-DD` or `DD.MM.YYYY`), `.` decimal separator, empty cell =
    /// missing. `schema` maps input header names to column names in the
    /// returned frame; with an empty schema every non-date column is ingested
    /// under its own header. Rows are sorted by date; duplicate dates are
    /// rejected.
    pub fn load_csv(path: impl AsRef<Path>, schema: &IndexMap<String, String>) -> Result<Frame> {
        let file = std::fs::File::open(path.as_ref())?;
        Frame::read_csv(file, schema)
    }

    pub fn read_csv(reader: impl Read, schema: &IndexMap<String, String>) -> Result<Frame> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() {
            return Err(Error::Schema("file has no columns".into()));
        }

        // (input index, output name) for every ingested column
        let mut picks: Vec<(usize, String)> = Vec::new();
        if schema.is_empty() {
            for (i, h) in headers.iter().enumerate().skip(1) {
                picks.push((i, h.clone()));
            }
        } else {
            for (input, output) in schema {
                let idx = headers
                    .iter()
                    .position(|h| h == input)
                    .ok_or_else(|| Error::Schema(format!("declared column '{input}' not in file")))?;
                if idx == 0 {
                    return Err(Error::Schema(format!(
                        "'{input}' is the date column; it cannot be ingested as a series"
                    )));
                }
                picks.push((idx, output.clone()));
            }
        }

        let mut rows: BTreeMap<Day, Vec<Option<f64>>> = BTreeMap::new();
        for (recno, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Schema(format!("malformed record: {e}")))?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(recno + 2);
            let raw_date = record.get(0).unwrap_or("");
            let day = Day::parse(raw_date).map_err(|_| Error::Parse {
                row: line,
                column: headers[0].clone(),
                message: format!("unparseable date '{raw_date}'"),
            })?;
            let mut vals = Vec::with_capacity(picks.len());
            for (idx, name) in &picks {
                let cell = record.get(*idx).unwrap_or("").trim();
                if cell.is_empty() {
                    vals.push(None);
                } else {
                    let v: f64 = cell.parse().map_err(|_| Error::Parse {
                        row: line,
                        column: name.clone(),
                        message: format!("unparseable number '{cell}'"),
                    })?;
                    vals.push(Some(v));
                }
            }
            if rows.insert(day, vals).is_some() {
                return Err(Error::Schema(format!("duplicate date {day}")));
            }
        }

        let mut frame = Frame::new(rows.keys().copied().collect());
        for (j, (_, name)) in picks.iter().enumerate() {
            let series: Series = rows.values().map(|v| v[j]).collect();
            frame.insert_column(name.clone(), series, "loaded from csv")?;
        }
        Ok(frame)
    }

    /// Write the frame back out in the same dialect `load_csv` reads.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec!["date".to_string()];
        header.extend(self.columns.keys().cloned());
        w.write_record(&header)
            .map_err(|e| Error::Schema(e.to_string()))?;
        for (i, day) in self.dates.iter().enumerate() {
            let mut rec = vec![day.to_string()];
            for series in self.columns.values() {
                rec.push(match series[i] {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&rec).map_err(|e| Error::Schema(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Merge frames onto a gap-free daily calendar over `[start, end]`.
///
/// Per column, `Fill::ForwardFill` copies the last observed value onto later
/// missing days (seeding from the most recent observation at or before
/// `start`, so no look-ahead is involved); `Fill::Strict` leaves gaps.
/// Leading missing cells before a column's first observation stay missing.
pub fn align_daily(
    frames: &[Frame],
    start: Day,
    end: Day,
    fill: &IndexMap<String, Fill>,
    default_fill: Fill,
) -> Result<Frame> {
    if start > end {
        return Err(Error::Argument(format!("start {start} is after end {end}")));
    }
    for f in frames {
        if f.is_empty() {
            return Err(Error::Argument("cannot align an empty frame".into()));
        }
    }
    let n = start.days_until(end) as usize + 1;
    let dates: Vec<Day> = (0..n).map(|i| start.offset(i as i32)).collect();
    let mut out = Frame::new(dates);

    for f in frames {
        for (name, series) in &f.columns {
            if out.columns.contains_key(name) {
                return Err(Error::Schema(format!(
                    "column '{name}' appears in more than one input frame"
                )));
            }
            let policy = fill.get(name).copied().unwrap_or(default_fill);
            let mut aligned: Series = vec![None; n];
            let mut carry: Option<f64> = None;
            for (i, day) in f.dates.iter().enumerate() {
                let offset = start.days_until(*day);
                if offset < 0 {
                    // remember pre-range observations so forward fill can seed
                    if series[i].is_some() {
                        carry = series[i];
                    }
                    continue;
                }
                if offset as usize >= n {
                    break;
                }
                if series[i].is_some() {
                    aligned[offset as usize] = series[i];
                }
            }
            if policy == Fill::ForwardFill {
                for cell in aligned.iter_mut() {
                    match cell {
                        Some(v) => carry = Some(*v),
                        None => *cell = carry,
                    }
                }
            }
            if aligned.iter().all(|c| c.is_none()) {
                return Err(Error::Alignment(name.clone()));
            }
            let prov = f
                .provenance(name)
                .unwrap_or("aligned")
                .to_string();
            out.insert_column(name.clone(), aligned, prov)?;
        }
        out.warnings.extend(f.warnings.iter().cloned());
    }
    Ok(out)
}

/// Shift a series forward by `k` rows, introducing `k` leading missings.
pub fn lag(series: &[Option<f64>], k: usize) -> Result<Series> {
    if k >= series.len() {
        return Err(Error::Argument(format!(
            "lag {k} is not smaller than series length {}",
            series.len()
        )));
    }
    let mut out: Series = vec![None; k];
    out.extend_from_slice(&series[..series.len() - k]);
    Ok(out)
}

/// k-th difference `x_t - x_{t-k}`, with `k` leading missings.
pub fn diff(series: &[Option<f64>], k: usize) -> Result<Series> {
    if k == 0 {
        return Err(Error::Argument("difference order must be positive".into()));
    }
    if k >= series.len() {
        return Err(Error::Argument(format!(
            "difference order {k} is not smaller than series length {}",
            series.len()
        )));
    }
    let mut out: Series = vec![None; k];
    for t in k..series.len() {
        out.push(match (series[t], series[t - k]) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> Day {
        Day::parse(s).unwrap()
    }

    fn schema_all() -> IndexMap<String, String> {
        IndexMap::new()
    }

    #[test]
    fn load_two_rows() {
        let csv = "date,btc_price\n2019-12-04,7252.0\n2019-12-05,7448.0\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.column("btc_price").unwrap()[0], Some(7252.0));
        assert_eq!(f.column("btc_price").unwrap()[1], Some(7448.0));
    }

    #[test]
    fn empty_cell_is_missing() {
        let csv = "date,x\n2020-01-01,1.5\n2020-01-02,\n2020-01-03,2.5\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        assert_eq!(f.column("x").unwrap()[1], None);
    }

    #[test]
    fn rows_out_of_order_match_sorted_input() {
        let shuffled = "date,x\n2020-01-02,2\n2020-01-01,1\n";
        let sorted = "date,x\n2020-01-01,1\n2020-01-02,2\n";
        let a = Frame::read_csv(shuffled.as_bytes(), &schema_all()).unwrap();
        let b = Frame::read_csv(sorted.as_bytes(), &schema_all()).unwrap();
        assert_eq!(a.dates(), b.dates());
        assert_eq!(a.column("x").unwrap(), b.column("x").unwrap());
    }

    #[test]
    fn duplicate_date_rejected() {
        let csv = "date,x\n2020-01-01,1\n2020-01-01,2\n";
        let err = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn parse_error_carries_location() {
        let csv = "date,x\n2020-01-01,1\n2020-01-02,oops\n";
        match Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3); // file line, header is line 1
                assert_eq!(column, "x");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn schema_renames_and_requires_columns() {
        let csv = "date,BTC / USD Close\n2020-01-01,9000\n";
        let mut schema = IndexMap::new();
        schema.insert("BTC / USD Close".to_string(), "btc_price".to_string());
        let f = Frame::read_csv(csv.as_bytes(), &schema).unwrap();
        assert!(f.has_column("btc_price"));

        let mut bad = IndexMap::new();
        bad.insert("absent".to_string(), "x".to_string());
        assert!(matches!(
            Frame::read_csv(csv.as_bytes(), &bad).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn align_forward_fills_weekends() {
        // stock index missing Saturday/Sunday; weekend rows carry Friday close
        let csv = "date,idx\n2020-01-03,100\n2020-01-06,103\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let out = align_daily(
            &[f],
            day("2020-01-03"),
            day("2020-01-06"),
            &IndexMap::new(),
            Fill::ForwardFill,
        )
        .unwrap();
        assert_eq!(out.len(), 4);
        let idx = out.column("idx").unwrap();
        assert_eq!(idx, &vec![Some(100.0), Some(100.0), Some(100.0), Some(103.0)]);
        assert!(out.is_daily_contiguous());
    }

    #[test]
    fn align_monthly_cpi_carries_until_next_release() {
        let csv = "date,cpiaucsl\n2020-01-01,255.868\n2020-02-01,258.0\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let out = align_daily(
            &[f],
            day("2020-01-01"),
            day("2020-01-31"),
            &IndexMap::new(),
            Fill::ForwardFill,
        )
        .unwrap();
        assert_eq!(out.len(), 31);
        assert!(out
            .column("cpiaucsl")
            .unwrap()
            .iter()
            .all(|c| *c == Some(255.868)));
    }

    #[test]
    fn align_row_count_is_calendar_span() {
        let csv = "date,x\n2020-01-05,1\n2020-03-01,2\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let out = align_daily(
            &[f],
            day("2020-01-01"),
            day("2020-12-31"),
            &IndexMap::new(),
            Fill::Strict,
        )
        .unwrap();
        assert_eq!(out.len(), 366); // 2020 is a leap year
    }

    #[test]
    fn align_strict_leaves_gaps_and_identity_on_daily() {
        let csv = "date,x\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        for policy in [Fill::Strict, Fill::ForwardFill] {
            let out = align_daily(
                &[f.clone()],
                day("2020-01-01"),
                day("2020-01-03"),
                &IndexMap::new(),
                policy,
            )
            .unwrap();
            assert_eq!(out.column("x").unwrap(), f.column("x").unwrap());
        }
    }

    #[test]
    fn align_errors_on_all_missing_column() {
        let csv = "date,x\n2021-01-01,1\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let err = align_daily(
            &[f],
            day("2020-01-01"),
            day("2020-01-31"),
            &IndexMap::new(),
            Fill::ForwardFill,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Alignment(ref c) if c == "x"), "{err}");
    }

    #[test]
    fn leading_missing_stays_missing() {
        let csv = "date,x\n2020-01-03,7\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let out = align_daily(
            &[f],
            day("2020-01-01"),
            day("2020-01-04"),
            &IndexMap::new(),
            Fill::ForwardFill,
        )
        .unwrap();
        assert_eq!(
            out.column("x").unwrap(),
            &vec![None, None, Some(7.0), Some(7.0)]
        );
    }

    #[test]
    fn lag_basics() {
        let s: Series = vec![Some(1.0), Some(2.0), Some(3.0)];
        assert_eq!(lag(&s, 1).unwrap(), vec![None, Some(1.0), Some(2.0)]);
        assert_eq!(lag(&s, 0).unwrap(), s);
        assert!(lag(&s, 3).is_err());
    }

    #[test]
    fn diff_basics() {
        let s: Series = vec![Some(5.0), Some(9.0), Some(4.0)];
        assert_eq!(diff(&s, 1).unwrap(), vec![None, Some(4.0), Some(-5.0)]);
        let c: Series = vec![Some(2.0); 5];
        assert!(diff(&c, 1).unwrap()[1..].iter().all(|v| *v == Some(0.0)));
        assert!(diff(&s, 0).is_err());
    }

    #[test]
    fn roundtrip_write_then_load() {
        let csv = "date,a,b\n2020-01-01,1.25,\n2020-01-02,-3.5,0.001\n";
        let f = Frame::read_csv(csv.as_bytes(), &schema_all()).unwrap();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        f.write_csv(tmp.path()).unwrap();
        let g = Frame::load_csv(tmp.path(), &schema_all()).unwrap();
        assert_eq!(f.dates(), g.dates());
        for name in ["a", "b"] {
            assert_eq!(f.column(name).unwrap(), g.column(name).unwrap());
        }
    }
}
