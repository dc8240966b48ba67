//! Constructed variables: deterministic recipes evaluated over a frame.

use std::fmt;

use super::{Day, Frame, Series};
use crate::error::{Error, Result};

/// Expression over input columns. Arithmetic over missing cells yields
/// missing; indicators and the trend are defined on every row.
#[derive(Clone, Debug)]
pub enum Expr {
    Col(String),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// 1.0 on dates at or after the switch day, else 0.0.
    OnOrAfter(Day),
    /// 1.0 on `[start, end)`, else 0.0.
    Between(Day, Day),
    /// Row index 0, 1, 2, ...
    Trend,
}

impl Expr {
    pub fn col(name: &str) -> Expr {
        Expr::Col(name.to_string())
    }

    fn referenced(&self, out: &mut Vec<String>) {
        match self {
            Expr::Col(c) => out.push(c.clone()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.referenced(out);
                b.referenced(out);
            }
            _ => {}
        }
    }

    fn eval(&self, frame: &Frame, row: usize) -> Result<Option<f64>> {
        Ok(match self {
            Expr::Col(c) => frame.column(c)?[row],
            Expr::Const(v) => Some(*v),
            Expr::Add(a, b) => binary(a.eval(frame, row)?, b.eval(frame, row)?, |x, y| x + y),
            Expr::Sub(a, b) => binary(a.eval(frame, row)?, b.eval(frame, row)?, |x, y| x - y),
            Expr::Mul(a, b) => binary(a.eval(frame, row)?, b.eval(frame, row)?, |x, y| x * y),
            Expr::OnOrAfter(day) => Some(if frame.dates()[row] >= *day { 1.0 } else { 0.0 }),
            Expr::Between(start, end) => {
                let d = frame.dates()[row];
                Some(if d >= *start && d < *end { 1.0 } else { 0.0 })
            }
            Expr::Trend => Some(row as f64),
        })
    }
}

fn binary(a: Option<f64>, b: Option<f64>, op: impl Fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(op(x, y)),
        _ => None,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Col(c) => write!(f, "{c}"),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::OnOrAfter(d) => write!(f, "1[date >= {d}]"),
            Expr::Between(a, b) => write!(f, "1[{a} <= date < {b}]"),
            Expr::Trend => write!(f, "trend"),
        }
    }
}

/// A named constructed column: a pure function of its declared inputs,
/// recomputable bit-identically.
#[derive(Clone, Debug)]
pub struct VariableRecipe {
    pub name: String,
    pub inputs: Vec<String>,
    pub expr: Expr,
    /// Inputs expected to be percentages on [0, 100]; out-of-range values are
    /// flagged with a warning and used as-is.
    pub percent_inputs: Vec<String>,
}

impl VariableRecipe {
    pub fn new(name: &str, inputs: &[&str], expr: Expr) -> VariableRecipe {
        VariableRecipe {
            name: name.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            expr,
            percent_inputs: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut refs = Vec::new();
        self.expr.referenced(&mut refs);
        for r in &refs {
            if !self.inputs.contains(r) {
                return Err(Error::Construction(format!(
                    "recipe '{}' references undeclared input '{r}'",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Append constructed columns to `raw`. Recipes are applied in order, so a
/// recipe may use the outputs of earlier ones. Re-applying the same recipes
/// recomputes identical columns (idempotent).
pub fn construct_variables(raw: &Frame, recipes: &[VariableRecipe]) -> Result<Frame> {
    let mut frame = raw.clone();
    for recipe in recipes {
        recipe.validate()?;
        for input in &recipe.inputs {
            if !frame.has_column(input) {
                return Err(Error::Construction(format!(
                    "recipe '{}' needs column '{input}', which is absent",
                    recipe.name
                )));
            }
        }
        for pct in &recipe.percent_inputs {
            let series = frame.column(pct)?;
            let bad = series
                .iter()
                .filter(|c| matches!(c, Some(v) if !(0.0..=100.0).contains(v)))
                .count();
            if bad > 0 {
                frame.push_warning(format!(
                    "{bad} value(s) of '{pct}' fall outside [0, 100]; used as-is in '{}'",
                    recipe.name
                ));
            }
        }
        let mut series: Series = Vec::with_capacity(frame.len());
        for row in 0..frame.len() {
            series.push(recipe.expr.eval(&frame, row)?);
        }
        frame.insert_column(
            recipe.name.clone(),
            series,
            format!("constructed: {}", recipe.expr),
        )?;
    }
    Ok(frame)
}

/// The stock recipe set: whale netflows, the exchange-adjusted on-chain
/// transaction volume, regime dummies with their trend interactions, and the
/// trend itself.
///
/// Switch dates: 2020-11-20 and 2022-11-08. "Before the date" reads as
/// exclusive of the date itself, so each dummy changes value on the switch
/// day.
pub fn standard_recipes() -> Vec<VariableRecipe> {
    let d1 = Day::from_ymd(2020, 11, 20).unwrap();
    let d2 = Day::from_ymd(2022, 11, 8).unwrap();
    let mut on_chain = VariableRecipe::new(
        "on_chain_btc_transactions",
        &["tokens_transferred_total", "fund_flow_ratio"],
        Expr::Mul(
            Box::new(Expr::col("tokens_transferred_total")),
            Box::new(Expr::Sub(
                Box::new(Expr::Const(1.0)),
                Box::new(Expr::Mul(
                    Box::new(Expr::Const(0.01)),
                    Box::new(Expr::col("fund_flow_ratio")),
                )),
            )),
        ),
    );
    on_chain.percent_inputs = vec!["fund_flow_ratio".to_string()];

    vec![
        VariableRecipe::new(
            "bank_whale_netflow",
            &["bank_inflow_top10", "bank_outflow_top10"],
            Expr::Sub(
                Box::new(Expr::col("bank_inflow_top10")),
                Box::new(Expr::col("bank_outflow_top10")),
            ),
        ),
        VariableRecipe::new(
            "exchange_whale_netflow",
            &["exchange_inflow_top10", "exchange_outflow_top10"],
            Expr::Sub(
                Box::new(Expr::col("exchange_inflow_top10")),
                Box::new(Expr::col("exchange_outflow_top10")),
            ),
        ),
        on_chain,
        VariableRecipe::new("dummy1", &[], Expr::OnOrAfter(d1)),
        VariableRecipe::new("dummy2", &[], Expr::OnOrAfter(d2)),
        VariableRecipe::new("dummy3", &[], Expr::Between(d1, d2)),
        VariableRecipe::new("trend", &[], Expr::Trend),
        VariableRecipe::new(
            "timedummy1",
            &["dummy1", "trend"],
            Expr::Mul(Box::new(Expr::col("dummy1")), Box::new(Expr::col("trend"))),
        ),
        VariableRecipe::new(
            "timedummy2",
            &["dummy2", "trend"],
            Expr::Mul(Box::new(Expr::col("dummy2")), Box::new(Expr::col("trend"))),
        ),
        VariableRecipe::new(
            "timedummy3",
            &["dummy3", "trend"],
            Expr::Mul(Box::new(Expr::col("dummy3")), Box::new(Expr::col("trend"))),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_frame(dates: &[&str]) -> Frame {
        Frame::new(dates.iter().map(|d| Day::parse(d).unwrap()).collect())
    }

    fn filled(n: usize, v: f64) -> Series {
        vec![Some(v); n]
    }

    fn raw_inputs(dates: &[&str]) -> Frame {
        let n = dates.len();
        let mut f = base_frame(dates);
        f.insert_column("bank_inflow_top10", filled(n, 500.0), "test").unwrap();
        f.insert_column("bank_outflow_top10", filled(n, 500.0), "test").unwrap();
        f.insert_column("exchange_inflow_top10", filled(n, 120.0), "test").unwrap();
        f.insert_column("exchange_outflow_top10", filled(n, 80.0), "test").unwrap();
        f.insert_column("tokens_transferred_total", filled(n, 300000.0), "test").unwrap();
        f.insert_column("fund_flow_ratio", filled(n, 10.0), "test").unwrap();
        f
    }

    #[test]
    fn whale_netflow_of_symmetric_flows_is_zero() {
        let f = raw_inputs(&["2020-01-01", "2020-01-02"]);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert_eq!(out.column("bank_whale_netflow").unwrap()[0], Some(0.0));
        assert_eq!(out.column("exchange_whale_netflow").unwrap()[0], Some(40.0));
    }

    #[test]
    fn on_chain_volume_scales_by_complement_of_ratio() {
        let f = raw_inputs(&["2020-01-01"]);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert_eq!(
            out.column("on_chain_btc_transactions").unwrap()[0],
            Some(270000.0)
        );
    }

    #[test]
    fn dummy_switch_dates() {
        let f = raw_inputs(&["2020-11-19", "2020-11-20", "2022-11-07", "2022-11-08"]);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        let d1 = out.column("dummy1").unwrap();
        let d2 = out.column("dummy2").unwrap();
        let d3 = out.column("dummy3").unwrap();
        assert_eq!(d1, &vec![Some(0.0), Some(1.0), Some(1.0), Some(1.0)]);
        assert_eq!(d2, &vec![Some(0.0), Some(0.0), Some(0.0), Some(1.0)]);
        assert_eq!(d3, &vec![Some(0.0), Some(1.0), Some(1.0), Some(0.0)]);
    }

    #[test]
    fn trend_and_interactions() {
        let f = raw_inputs(&["2020-11-19", "2020-11-20", "2020-11-21"]);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert_eq!(
            out.column("trend").unwrap(),
            &vec![Some(0.0), Some(1.0), Some(2.0)]
        );
        assert_eq!(
            out.column("timedummy1").unwrap(),
            &vec![Some(0.0), Some(1.0), Some(2.0)]
        );
    }

    #[test]
    fn missing_input_gives_missing_output() {
        let mut f = raw_inputs(&["2020-01-01", "2020-01-02"]);
        f.insert_column(
            "bank_inflow_top10",
            vec![Some(500.0), None],
            "test",
        )
        .unwrap();
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert_eq!(out.column("bank_whale_netflow").unwrap()[1], None);
    }

    #[test]
    fn absent_input_column_is_an_error() {
        let f = base_frame(&["2020-01-01"]);
        let r = VariableRecipe::new("x", &["nope"], Expr::col("nope"));
        assert!(matches!(
            construct_variables(&f, &[r]).unwrap_err(),
            Error::Construction(_)
        ));
    }

    #[test]
    fn out_of_range_ratio_warns_but_computes() {
        let mut f = raw_inputs(&["2020-01-01"]);
        f.insert_column("fund_flow_ratio", vec![Some(120.0)], "test").unwrap();
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert_eq!(
            out.column("on_chain_btc_transactions").unwrap()[0],
            Some(300000.0 * (1.0 - 1.2))
        );
        assert!(out.warnings().iter().any(|w| w.contains("fund_flow_ratio")));
    }

    #[test]
    fn reapplying_recipes_changes_nothing() {
        let f = raw_inputs(&["2020-11-19", "2020-11-20", "2022-11-08"]);
        let once = construct_variables(&f, &standard_recipes()).unwrap();
        let twice = construct_variables(&once, &standard_recipes()).unwrap();
        for name in once.column_names() {
            assert_eq!(once.column(name).unwrap(), twice.column(name).unwrap());
        }
    }

    #[test]
    fn dummy_identity_holds_over_the_sample() {
        // before the second switch date dummy3 equals dummy1; on and after it
        // dummy3 is 0 and dummy2 is 1
        let days = [
            "2020-01-01",
            "2020-11-20",
            "2021-06-01",
            "2022-11-07",
            "2022-11-08",
            "2023-01-01",
        ];
        let f = raw_inputs(&days);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        let cut = Day::parse("2022-11-08").unwrap();
        for (i, d) in out.dates().iter().enumerate() {
            let d1 = out.column("dummy1").unwrap()[i].unwrap();
            let d2 = out.column("dummy2").unwrap()[i].unwrap();
            let d3 = out.column("dummy3").unwrap()[i].unwrap();
            if *d < cut {
                assert_eq!(d3, d1);
            } else {
                assert_eq!(d3, 0.0);
                assert_eq!(d2, 1.0);
            }
        }
    }

    #[test]
    fn recipes_are_recorded_as_constructed() {
        let f = raw_inputs(&["2020-01-01"]);
        let out = construct_variables(&f, &standard_recipes()).unwrap();
        assert!(out
            .provenance("bank_whale_netflow")
            .unwrap()
            .starts_with("constructed:"));
    }
}
