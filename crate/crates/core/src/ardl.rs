//! ARDL(p, q_1..q_k) estimation in levels, AIC grid lag selection, and the
//! exact reparametrization to error-correction form with long-run
//! coefficients and delta-method standard errors.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::frame::{Day, Frame};
use crate::regress::{self, stars, CovKind, OlsFit};
use crate::unitroot::Det;

/// Hard cap on the lag-selection grid.
const MAX_GRID: usize = 5_000_000;

/// Threshold below which `1 - sum(phi)` counts as a unit root and long-run
/// coefficients are undefined.
const UNIT_ROOT_TOL: f64 = 1e-6;

/// Lag structure of an ARDL model: `p` dependent-variable lags, `q[j]` lags
/// for the j-th endogenous regressor, deterministic terms, and exogenous
/// variables that enter contemporaneously only.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ArdlSpec {
    pub p: usize,
    pub q: Vec<usize>,
    pub det: Det,
    pub exog: Vec<String>,
}

impl ArdlSpec {
    fn validate(&self, x_names: &[String]) -> Result<()> {
        if self.p < 1 {
            return Err(Error::Argument("p must be at least 1".into()));
        }
        if self.q.len() != x_names.len() {
            return Err(Error::Argument(format!(
                "{} lag orders for {} endogenous regressors",
                self.q.len(),
                x_names.len()
            )));
        }
        if self.exog.iter().any(|z| x_names.contains(z)) {
            return Err(Error::Argument(
                "exogenous set overlaps endogenous regressors".into(),
            ));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.p.max(self.q.iter().copied().max().unwrap_or(0))
    }

    fn n_det(&self) -> usize {
        match self.det {
            Det::None => 0,
            Det::Const => 1,
            Det::ConstTrend => 2,
        }
    }

    /// Total design columns: det + p + sum(q_j + 1) + |exog|.
    pub fn n_columns(&self) -> usize {
        self.n_det() + self.p + self.q.iter().map(|q| q + 1).sum::<usize>() + self.exog.len()
    }
}

/// An estimated levels model.
#[derive(Clone, Debug)]
pub struct ArdlFit {
    pub spec: ArdlSpec,
    pub y_name: String,
    pub x_names: Vec<String>,
    pub ols: OlsFit,
    /// Effective date range after lag trimming.
    pub sample: (Day, Day),
    first_row: usize,
    frame_rows: usize,
}

impl ArdlFit {
    /// Sum of the dependent-variable lag coefficients.
    pub fn sum_phi(&self) -> f64 {
        (0..self.spec.p)
            .map(|i| {
                let idx = self
                    .ols
                    .index_of(&format!("{}.l{}", self.y_name, i + 1))
                    .expect("phi column");
                self.ols.coef[idx]
            })
            .sum()
    }

    /// Sum of the distributed-lag coefficients of regressor `j`.
    pub fn sum_beta(&self, j: usize) -> f64 {
        (0..=self.spec.q[j])
            .map(|i| {
                let idx = self
                    .ols
                    .index_of(&format!("{}.l{}", self.x_names[j], i))
                    .expect("beta column");
                self.ols.coef[idx]
            })
            .sum()
    }
}

struct DesignData {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
    first_row: usize,
}

/// Index of the first frame row from which every involved column is dense,
/// enforcing no interior gaps afterwards.
fn dense_start(frame: &Frame, involved: &[&str]) -> Result<usize> {
    let n = frame.len();
    let mut first = 0usize;
    for name in involved {
        let series = frame.column(name)?;
        let start = series
            .iter()
            .position(|c| c.is_some())
            .ok_or_else(|| Error::Alignment((*name).to_string()))?;
        first = first.max(start);
    }
    for name in involved {
        let series = frame.column(name)?;
        let gaps: Vec<String> = (first..n)
            .filter(|&t| series[t].is_none())
            .take(5)
            .map(|t| frame.dates()[t].to_string())
            .collect();
        if !gaps.is_empty() {
            return Err(Error::DataGap {
                column: (*name).to_string(),
                dates: gaps,
            });
        }
    }
    Ok(first)
}

fn value(frame: &Frame, name: &str, t: usize) -> f64 {
    frame.column(name).expect("checked")[t].expect("dense by construction")
}

/// Build the levels design over rows `trim_start + max_trim .. n`.
fn build_levels_design(
    frame: &Frame,
    y_name: &str,
    x_names: &[String],
    spec: &ArdlSpec,
    trim: usize,
    first: usize,
) -> Result<DesignData> {
    let n = frame.len();
    let start = first + trim;
    if start >= n {
        return Err(Error::InsufficientData(format!(
            "no rows left after trimming {trim} lags"
        )));
    }
    let rows = n - start;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();

    match spec.det {
        Det::None => {}
        Det::Const => {
            cols.push(vec![1.0; rows]);
            names.push("const".into());
        }
        Det::ConstTrend => {
            cols.push(vec![1.0; rows]);
            names.push("const".into());
            cols.push((start..n).map(|t| t as f64).collect());
            names.push("trend".into());
        }
    }
    for i in 1..=spec.p {
        cols.push((start..n).map(|t| value(frame, y_name, t - i)).collect());
        names.push(format!("{y_name}.l{i}"));
    }
    for (j, xn) in x_names.iter().enumerate() {
        for i in 0..=spec.q[j] {
            cols.push((start..n).map(|t| value(frame, xn, t - i)).collect());
            names.push(format!("{xn}.l{i}"));
        }
    }
    for z in &spec.exog {
        cols.push((start..n).map(|t| value(frame, z, t)).collect());
        names.push(z.clone());
    }

    let k = cols.len();
    let x = DMatrix::from_fn(rows, k, |r, c| cols[c][r]);
    let y = DVector::from_fn(rows, |r, _| value(frame, y_name, start + r));
    Ok(DesignData {
        x,
        y,
        names,
        first_row: start,
    })
}

/// Fit the levels model: y_t on deterministics, its own lags 1..p, each
/// regressor at lags 0..q_j, and exogenous variables contemporaneously.
pub fn fit_ardl(frame: &Frame, y_name: &str, x_names: &[String], spec: &ArdlSpec) -> Result<ArdlFit> {
    spec.validate(x_names)?;
    let mut involved: Vec<&str> = vec![y_name];
    involved.extend(x_names.iter().map(|s| s.as_str()));
    involved.extend(spec.exog.iter().map(|s| s.as_str()));
    let first = dense_start(frame, &involved)?;

    let design = build_levels_design(frame, y_name, x_names, spec, spec.max_lag(), first)?;
    let rows = design.x.nrows();
    if rows < 10 + design.x.ncols() {
        return Err(Error::InsufficientData(format!(
            "{rows} effective observations for {} columns",
            design.x.ncols()
        )));
    }
    let ols = regress::ols_fit(design.x, design.y, design.names)?;
    let sample = (
        frame.dates()[design.first_row],
        frame.dates()[frame.len() - 1],
    );
    Ok(ArdlFit {
        spec: spec.clone(),
        y_name: y_name.to_string(),
        x_names: x_names.to_vec(),
        ols,
        sample,
        first_row: design.first_row,
        frame_rows: frame.len(),
    })
}

// ---------------------------------------------------------------------------
// Lag selection
// ---------------------------------------------------------------------------

/// Exhaustive AIC grid over p in 1..=p_max and q_j in 0..=q_max, all
/// candidates fit on the common sample trimmed at (p_max, q_max). Ties break
/// toward the smallest parameter count, then the lexicographically smallest
/// (p, q). Candidates whose design is rank deficient are skipped.
pub fn select_lags(
    frame: &Frame,
    y_name: &str,
    x_names: &[String],
    p_max: usize,
    q_max: usize,
    det: Det,
    exog: &[String],
) -> Result<ArdlSpec> {
    if p_max < 1 {
        return Err(Error::Argument("p_max must be at least 1".into()));
    }
    let k = x_names.len();
    let grid = p_max
        .checked_mul((q_max + 1).checked_pow(k as u32).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    if grid > MAX_GRID {
        return Err(Error::Selection(format!(
            "lag grid has {grid} candidates (> {MAX_GRID}); lower p_max/q_max or drop regressors"
        )));
    }

    let gram = SelectionGram::build(frame, y_name, x_names, p_max, q_max, det, exog)?;

    let best = (0..grid)
        .into_par_iter()
        .filter_map(|idx| {
            let (p, q) = decode_candidate(idx, p_max, q_max, k);
            gram.candidate_aic(p, &q).map(|(aic, params)| Candidate {
                aic,
                params,
                p,
                q,
            })
        })
        .min_by(|a, b| a.order_key().partial_cmp(&b.order_key()).unwrap());

    match best {
        Some(c) => Ok(ArdlSpec {
            p: c.p,
            q: c.q,
            det,
            exog: exog.to_vec(),
        }),
        None => Err(Error::Selection(
            "every candidate in the lag grid is rank deficient".into(),
        )),
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    aic: f64,
    params: usize,
    p: usize,
    q: Vec<usize>,
}

impl Candidate {
    fn order_key(&self) -> (f64, usize, usize, Vec<usize>) {
        (self.aic, self.params, self.p, self.q.clone())
    }
}

fn decode_candidate(idx: usize, _p_max: usize, q_max: usize, k: usize) -> (usize, Vec<usize>) {
    let mut rest = idx;
    let p = rest % _p_max + 1;
    rest /= _p_max;
    let mut q = vec![0usize; k];
    for qj in q.iter_mut() {
        *qj = rest % (q_max + 1);
        rest /= q_max + 1;
    }
    (p, q)
}

/// Precomputed sufficient statistics for the grid: the Gram matrix of the
/// maximal design on the common sample. Each candidate's RSS is a Cholesky
/// solve on the submatrix of its columns, so the grid costs O(k^3) per
/// candidate instead of a fresh decomposition of the full data. The winning
/// spec is refit through the SVD path by the caller.
struct SelectionGram {
    g: DMatrix<f64>,
    gy: DVector<f64>,
    yy: f64,
    rows: usize,
    det_cols: usize,
    p_max: usize,
    q_max: usize,
    k: usize,
    n_exog: usize,
}

impl SelectionGram {
    fn build(
        frame: &Frame,
        y_name: &str,
        x_names: &[String],
        p_max: usize,
        q_max: usize,
        det: Det,
        exog: &[String],
    ) -> Result<SelectionGram> {
        let mut involved: Vec<&str> = vec![y_name];
        involved.extend(x_names.iter().map(|s| s.as_str()));
        involved.extend(exog.iter().map(|s| s.as_str()));
        let first = dense_start(frame, &involved)?;

        let full = ArdlSpec {
            p: p_max,
            q: vec![q_max; x_names.len()],
            det,
            exog: exog.to_vec(),
        };
        let design = build_levels_design(frame, y_name, x_names, &full, p_max.max(q_max), first)?;
        let rows = design.x.nrows();
        if rows < 10 + design.x.ncols() {
            return Err(Error::InsufficientData(format!(
                "{rows} common-sample observations for {} grid columns",
                design.x.ncols()
            )));
        }

        // equilibrate columns; RSS of any column subset is unchanged
        let mut xs = design.x;
        for j in 0..xs.ncols() {
            let norm = xs.column(j).norm();
            if norm > 0.0 {
                xs.column_mut(j).unscale_mut(norm);
            }
        }
        let g = xs.transpose() * &xs;
        let gy = xs.transpose() * &design.y;
        let yy = design.y.dot(&design.y);
        Ok(SelectionGram {
            g,
            gy,
            yy,
            rows,
            det_cols: full.n_det(),
            p_max,
            q_max,
            k: x_names.len(),
            n_exog: exog.len(),
        })
    }

    /// Column indices (into the maximal design) used by candidate (p, q).
    fn columns(&self, p: usize, q: &[usize]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.det_cols).collect();
        let y_base = self.det_cols;
        idx.extend(y_base..y_base + p);
        let mut x_base = y_base + self.p_max;
        for qj in q {
            idx.extend(x_base..x_base + qj + 1);
            x_base += self.q_max + 1;
        }
        idx.extend(x_base..x_base + self.n_exog);
        idx
    }

    /// Full-sample AIC of candidate (p, q), or None when rank deficient.
    fn candidate_aic(&self, p: usize, q: &[usize]) -> Option<(f64, usize)> {
        let cols = self.columns(p, q);
        let m = cols.len();
        if self.rows <= m {
            return None;
        }
        // Cholesky of G[cols, cols] with forward substitution of gy[cols]
        let mut l = vec![0.0f64; m * m];
        let mut w = vec![0.0f64; m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = self.g[(cols[i], cols[j])];
                for t in 0..j {
                    s -= l[i * m + t] * l[j * m + t];
                }
                if i == j {
                    if s <= 1e-12 {
                        return None;
                    }
                    l[i * m + i] = s.sqrt();
                } else {
                    l[i * m + j] = s / l[j * m + j];
                }
            }
            let mut s = self.gy[cols[i]];
            for t in 0..i {
                s -= l[i * m + t] * w[t];
            }
            w[i] = s / l[i * m + i];
        }
        let rss = (self.yy - w.iter().map(|v| v * v).sum::<f64>()).max(1e-300);
        let n = self.rows as f64;
        let loglik = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (rss / n).ln() + 1.0);
        Some((-2.0 * loglik + 2.0 * m as f64, m))
    }
}

// ---------------------------------------------------------------------------
// Error-correction form
// ---------------------------------------------------------------------------

/// Row identity in a rendered coefficient table.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub enum RowKind {
    /// Long-run coefficient of an endogenous regressor.
    LongRun { var: String },
    /// The error-correction term, labeled "<y> (-1)".
    ErrorCorrection,
    /// Lagged difference of the dependent variable.
    DiffDep { lag: usize },
    /// Difference of a regressor; lag 0 is contemporaneous.
    Diff { var: String, lag: usize },
    /// Contemporaneous level of a regressor selected with q = 0.
    Level { var: String },
    /// Exogenous contemporaneous variable.
    Exog { var: String },
    Trend,
    Const,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ReportRow {
    pub kind: RowKind,
    pub value: f64,
    pub se: f64,
    pub p: f64,
    pub stars: &'static str,
}

/// The re-estimated error-correction regression: algebraically equivalent to
/// the levels fit, with the long-run block read off the lagged levels.
#[derive(Clone, Debug)]
pub struct EcmFit {
    pub spec: ArdlSpec,
    pub y_name: String,
    pub x_names: Vec<String>,
    /// Speed of adjustment: the coefficient on y_{t-1}.
    pub alpha: f64,
    /// Long-run coefficient per endogenous regressor.
    pub theta: Vec<f64>,
    /// Delta-method standard errors of theta from the robust covariance.
    pub theta_se: Vec<f64>,
    /// The ECM regression itself.
    pub ols: OlsFit,
    /// HC1 standard errors for every ECM coefficient.
    pub robust_se: Vec<f64>,
    /// Classical standard errors (the bounds t-statistic uses these).
    pub classical_se: Vec<f64>,
    /// Indices of the levels block: y_{t-1} first, then one level column per
    /// endogenous regressor.
    pub levels_idx: Vec<usize>,
    pub sample: (Day, Day),
}

/// Re-estimate the fitted levels model in error-correction form on the same
/// sample.
///
/// Per regressor with q_j >= 1 the design carries x_{j,t-1} plus
/// contemporaneous and lagged differences; a regressor selected with q_j = 0
/// contributes only its contemporaneous level, which doubles as its
/// long-run column (the t-1 dating would enlarge the column span and break
/// the exact reparametrization).
pub fn to_ecm(frame: &Frame, fit: &ArdlFit) -> Result<EcmFit> {
    let one_minus_sum_phi = 1.0 - fit.sum_phi();
    if one_minus_sum_phi.abs() <= UNIT_ROOT_TOL {
        return Err(Error::NoErrorCorrection(one_minus_sum_phi));
    }

    let spec = &fit.spec;
    let y_name = &fit.y_name;
    let n = fit.frame_rows;
    let start = fit.first_row;
    let rows = n - start;

    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    match spec.det {
        Det::None => {}
        Det::Const => {
            cols.push(vec![1.0; rows]);
            names.push("const".into());
        }
        Det::ConstTrend => {
            cols.push(vec![1.0; rows]);
            names.push("const".into());
            cols.push((start..n).map(|t| t as f64).collect());
            names.push("trend".into());
        }
    }

    let mut levels_idx = Vec::with_capacity(1 + fit.x_names.len());
    levels_idx.push(cols.len());
    cols.push((start..n).map(|t| value(frame, y_name, t - 1)).collect());
    names.push(format!("{y_name}.l1"));

    for (j, xn) in fit.x_names.iter().enumerate() {
        levels_idx.push(cols.len());
        if spec.q[j] >= 1 {
            cols.push((start..n).map(|t| value(frame, xn, t - 1)).collect());
            names.push(format!("{xn}.l1"));
        } else {
            cols.push((start..n).map(|t| value(frame, xn, t)).collect());
            names.push(format!("{xn}.l0"));
        }
    }

    for i in 1..spec.p {
        cols.push(
            (start..n)
                .map(|t| value(frame, y_name, t - i) - value(frame, y_name, t - i - 1))
                .collect(),
        );
        names.push(format!("d.{y_name}.l{i}"));
    }
    for (j, xn) in fit.x_names.iter().enumerate() {
        if spec.q[j] >= 1 {
            for i in 0..spec.q[j] {
                cols.push(
                    (start..n)
                        .map(|t| value(frame, xn, t - i) - value(frame, xn, t - i - 1))
                        .collect(),
                );
                names.push(format!("d.{xn}.l{i}"));
            }
        }
    }
    for z in &spec.exog {
        cols.push((start..n).map(|t| value(frame, z, t)).collect());
        names.push(z.clone());
    }

    let k = cols.len();
    let x = DMatrix::from_fn(rows, k, |r, c| cols[c][r]);
    let dy = DVector::from_fn(rows, |r, _| {
        value(frame, y_name, start + r) - value(frame, y_name, start + r - 1)
    });
    let ols = regress::ols_fit(x, dy, names)?;

    let (robust_cov, robust_se) = regress::covariance(&ols, CovKind::RobustHc1);
    let (_, classical_se) = regress::covariance(&ols, CovKind::Classical);

    let alpha = ols.coef[levels_idx[0]];
    let mut theta = Vec::with_capacity(fit.x_names.len());
    let mut theta_se = Vec::with_capacity(fit.x_names.len());
    let a_idx = levels_idx[0];
    let a = alpha;
    for j in 0..fit.x_names.len() {
        let b_idx = levels_idx[j + 1];
        let b = ols.coef[b_idx];
        theta.push(-b / a);
        // delta method on (a, b): grad = (b/a^2, -1/a)
        let ga = b / (a * a);
        let gb = -1.0 / a;
        let var = ga * ga * robust_cov[(a_idx, a_idx)]
            + 2.0 * ga * gb * robust_cov[(a_idx, b_idx)]
            + gb * gb * robust_cov[(b_idx, b_idx)];
        theta_se.push(var.max(0.0).sqrt());
    }

    Ok(EcmFit {
        spec: spec.clone(),
        y_name: y_name.clone(),
        x_names: fit.x_names.clone(),
        alpha,
        theta,
        theta_se,
        ols,
        robust_se,
        classical_se,
        levels_idx,
        sample: fit.sample,
    })
}

fn two_sided_p(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof).expect("dof > 0");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Long-run rows: one theta per endogenous regressor plus the
/// error-correction term.
pub fn long_run_table(ecm: &EcmFit) -> Vec<ReportRow> {
    let dof = ecm.ols.dof() as f64;
    let mut rows = Vec::new();
    for j in 0..ecm.x_names.len() {
        let se = ecm.theta_se[j];
        let t = if se > 0.0 { ecm.theta[j] / se } else { 0.0 };
        let p = two_sided_p(t, dof);
        rows.push(ReportRow {
            kind: RowKind::LongRun {
                var: ecm.x_names[j].clone(),
            },
            value: ecm.theta[j],
            se,
            p,
            stars: stars(p),
        });
    }
    let a_idx = ecm.levels_idx[0];
    let se = ecm.robust_se[a_idx];
    let t = if se > 0.0 { ecm.alpha / se } else { 0.0 };
    let p = two_sided_p(t, dof);
    rows.push(ReportRow {
        kind: RowKind::ErrorCorrection,
        value: ecm.alpha,
        se,
        p,
        stars: stars(p),
    });
    rows
}

/// Short-run rows: lagged differences of the dependent variable, regressor
/// differences with lag suffixes, exogenous and deterministic terms. Stars
/// come from robust standard errors.
pub fn short_run_table(ecm: &EcmFit) -> Vec<ReportRow> {
    let dof = ecm.ols.dof() as f64;
    let mut rows = Vec::new();
    let mut push = |kind: RowKind, idx: usize| {
        let value = ecm.ols.coef[idx];
        let se = ecm.robust_se[idx];
        let t = if se > 0.0 { value / se } else { 0.0 };
        let p = two_sided_p(t, dof);
        rows.push(ReportRow {
            kind,
            value,
            se,
            p,
            stars: stars(p),
        });
    };

    for i in 1..ecm.spec.p {
        let idx = ecm
            .ols
            .index_of(&format!("d.{}.l{}", ecm.y_name, i))
            .expect("ecm dy column");
        push(RowKind::DiffDep { lag: i }, idx);
    }
    for (j, xn) in ecm.x_names.iter().enumerate() {
        if ecm.spec.q[j] >= 1 {
            for i in 0..ecm.spec.q[j] {
                let idx = ecm
                    .ols
                    .index_of(&format!("d.{xn}.l{i}"))
                    .expect("ecm dx column");
                push(RowKind::Diff { var: xn.clone(), lag: i }, idx);
            }
        } else {
            let idx = ecm.ols.index_of(&format!("{xn}.l0")).expect("level column");
            push(RowKind::Level { var: xn.clone() }, idx);
        }
    }
    for z in &ecm.spec.exog {
        let idx = ecm.ols.index_of(z).expect("exog column");
        push(RowKind::Exog { var: z.clone() }, idx);
    }
    if ecm.spec.det == Det::ConstTrend {
        let idx = ecm.ols.index_of("trend").expect("trend column");
        push(RowKind::Trend, idx);
    }
    if ecm.spec.det != Det::None {
        let idx = ecm.ols.index_of("const").expect("const column");
        push(RowKind::Const, idx);
    }
    rows
}
