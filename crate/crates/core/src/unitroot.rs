//! Augmented Dickey-Fuller and Phillips-Perron unit-root tests, plus an
//! integration-order classifier that enforces the I(2) exclusion rule.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::regress::{self, CovKind};

/// Deterministic terms in a test or model regression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Det {
    None,
    Const,
    ConstTrend,
}

/// Lag choice for the ADF regression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LagSelection {
    /// Minimize AIC over 0..=max_lag on a common sample, then refit.
    Aic,
    /// Use exactly this many augmentation lags.
    Fixed(usize),
}

/// Position of a statistic relative to the tabulated 1/5/10% critical values.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum PValueBand {
    /// p below the smallest tabulated level.
    Below(f64),
    /// p between two tabulated levels.
    Between(f64, f64),
    /// p above the largest tabulated level.
    Above(f64),
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct UnitRootResult {
    pub series_name: String,
    pub stat: f64,
    pub det: Det,
    /// ADF: augmentation lags used. PP: Bartlett bandwidth used.
    pub lags_or_bandwidth: usize,
    pub pvalue_band: PValueBand,
    pub reject_5pct: bool,
    /// MacKinnon critical values at 1%, 5%, 10% for `det` and the effective
    /// sample size.
    pub crit: [f64; 3],
}

/// MacKinnon (2010) response-surface constants for the Dickey-Fuller t
/// distribution: cv = b0 + b1/n + b2/n^2 + b3/n^3, rows are 1%, 5%, 10%.
const TAU_NC: [[f64; 4]; 3] = [
    [-2.56574, -2.2358, -3.627, 0.0],
    [-1.94100, -0.2686, -3.365, 31.223],
    [-1.61682, 0.2656, -2.714, 25.364],
];
const TAU_C: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const TAU_CT: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

/// Critical values (1%, 5%, 10%) for effective sample size `n`.
pub fn mackinnon_crit(det: Det, n: usize) -> [f64; 3] {
    let table = match det {
        Det::None => &TAU_NC,
        Det::Const => &TAU_C,
        Det::ConstTrend => &TAU_CT,
    };
    let n = n as f64;
    let mut out = [0.0; 3];
    for (i, row) in table.iter().enumerate() {
        out[i] = row[0] + row[1] / n + row[2] / (n * n) + row[3] / (n * n * n);
    }
    out
}

fn band_from_crit(stat: f64, crit: [f64; 3]) -> PValueBand {
    // crit[0] = 1% (most negative), crit[2] = 10%
    if stat < crit[0] {
        PValueBand::Below(0.01)
    } else if stat < crit[1] {
        PValueBand::Between(0.01, 0.05)
    } else if stat < crit[2] {
        PValueBand::Between(0.05, 0.10)
    } else {
        PValueBand::Above(0.10)
    }
}

/// Schwert's rule of thumb for the maximum augmentation lag.
pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

fn check_series(x: &[f64], needed: usize, name: &str) -> Result<()> {
    if x.len() < needed {
        return Err(Error::InsufficientData(format!(
            "series '{name}' has {} observations, need at least {needed}",
            x.len()
        )));
    }
    let first = x[0];
    if x.iter().all(|v| *v == first) {
        return Err(Error::Degenerate(format!("series '{name}' is constant")));
    }
    Ok(())
}

fn det_columns(det: Det, rows: usize) -> (Vec<Vec<f64>>, Vec<String>) {
    match det {
        Det::None => (vec![], vec![]),
        Det::Const => (vec![vec![1.0; rows]], vec!["const".into()]),
        Det::ConstTrend => (
            vec![vec![1.0; rows], (0..rows).map(|t| t as f64).collect()],
            vec!["const".into(), "trend".into()],
        ),
    }
}

/// Build and fit the ADF regression with `lags` augmentation terms, starting
/// the sample at index `start` of the difference series (start >= lags).
fn fit_adf_regression(x: &[f64], det: Det, lags: usize, start: usize) -> Result<regress::OlsFit> {
    let n = x.len();
    let dx: Vec<f64> = (1..n).map(|t| x[t] - x[t - 1]).collect();
    let rows = dx.len() - start;
    let (dets, mut det_names) = det_columns(det, rows);

    // x_{t-1} first so its coefficient index is stable
    let mut cols: Vec<Vec<f64>> = vec![(start..dx.len()).map(|t| x[t]).collect()];
    let mut names = vec!["level.l1".to_string()];
    for (c, nm) in dets.into_iter().zip(det_names.drain(..)) {
        cols.push(c);
        names.push(nm);
    }
    for i in 1..=lags {
        cols.push((start..dx.len()).map(|t| dx[t - i]).collect());
        names.push(format!("d.l{i}"));
    }

    let k = cols.len();
    let design = DMatrix::from_fn(rows, k, |r, c| cols[c][r]);
    let y = DVector::from_fn(rows, |r, _| dx[start + r]);
    regress::ols_fit(design, y, names)
}

fn adf_stat(fit: &regress::OlsFit) -> f64 {
    let (_, se) = regress::covariance(fit, CovKind::Classical);
    fit.coef[0] / se[0]
}

/// Augmented Dickey-Fuller test: the t-ratio on the lagged level in a
/// regression of the first difference on the level, deterministic terms and
/// lagged differences.
pub fn adf_test(
    x: &[f64],
    det: Det,
    max_lag: usize,
    selection: LagSelection,
    name: &str,
) -> Result<UnitRootResult> {
    check_series(x, max_lag + 11, name)?;
    let lags = match selection {
        LagSelection::Fixed(l) => {
            if l > max_lag {
                return Err(Error::Argument(format!(
                    "fixed lag {l} exceeds max_lag {max_lag}"
                )));
            }
            l
        }
        LagSelection::Aic => select_adf_lag(x, det, max_lag)?,
    };
    let fit = fit_adf_regression(x, det, lags, lags)?;
    let stat = adf_stat(&fit);
    let crit = mackinnon_crit(det, fit.n);
    Ok(UnitRootResult {
        series_name: name.to_string(),
        stat,
        det,
        lags_or_bandwidth: lags,
        pvalue_band: band_from_crit(stat, crit),
        reject_5pct: stat < crit[1],
        crit,
    })
}

/// AIC lag choice on the common sample trimmed at `max_lag`.
///
/// All candidates share one design whose columns are ordered so that the
/// candidate with `l` lags uses a leading prefix; the residual sum of squares
/// of every prefix falls out of a single Cholesky pass over the Gram matrix.
/// Only the AIC ranking is taken from this path, the chosen lag is refit
/// through the SVD path.
fn select_adf_lag(x: &[f64], det: Det, max_lag: usize) -> Result<usize> {
    let n = x.len();
    let dx: Vec<f64> = (1..n).map(|t| x[t] - x[t - 1]).collect();
    let start = max_lag;
    let rows = dx.len() - start;
    let (dets, _) = det_columns(det, rows);

    let mut cols: Vec<Vec<f64>> = vec![(start..dx.len()).map(|t| x[t]).collect()];
    cols.extend(dets);
    let base = cols.len();
    for i in 1..=max_lag {
        cols.push((start..dx.len()).map(|t| dx[t - i]).collect());
    }
    let y: Vec<f64> = (start..dx.len()).map(|t| dx[t]).collect();

    let rss = nested_prefix_rss(&cols, &y)?;
    let nf = rows as f64;
    let mut best = (f64::INFINITY, 0usize);
    for l in 0..=max_lag {
        let k = base + l;
        let r = rss[k - 1].max(1e-300);
        let aic = nf * (r / nf).ln() + 2.0 * k as f64;
        if aic < best.0 {
            best = (aic, l);
        }
    }
    Ok(best.1)
}

/// RSS of the regression of `y` on the first m columns, for every m, via one
/// Cholesky factorization of the equilibrated Gram matrix.
fn nested_prefix_rss(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = cols.len();
    let rows = y.len();
    if rows <= k {
        return Err(Error::InsufficientData(format!(
            "{rows} rows for {k} columns in lag selection"
        )));
    }
    let mut scaled: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in cols {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = if norm > 0.0 { norm } else { 1.0 };
        scaled.push(c.iter().map(|v| v / s).collect());
    }
    let mut g = vec![vec![0.0; k]; k];
    let mut gy = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let dot: f64 = scaled[i].iter().zip(&scaled[j]).map(|(a, b)| a * b).sum();
            g[i][j] = dot;
            g[j][i] = dot;
        }
        gy[i] = scaled[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    let yy: f64 = y.iter().map(|v| v * v).sum();

    // in-place Cholesky with forward substitution of X'y
    let mut l = vec![vec![0.0; k]; k];
    let mut w = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m];
            }
            if i == j {
                if s <= 1e-14 {
                    return Err(Error::Collinear {
                        columns: vec![format!("lag-selection column {i}")],
                    });
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
        let mut s = gy[i];
        for m in 0..i {
            s -= l[i][m] * w[m];
        }
        w[i] = s / l[i][i];
    }
    let mut out = Vec::with_capacity(k);
    let mut acc = 0.0;
    for wi in &w {
        acc += wi * wi;
        out.push((yy - acc).max(0.0));
    }
    Ok(out)
}

/// Bartlett-kernel long-run variance of `u` with the given bandwidth.
fn bartlett_long_run_variance(u: &[f64], bandwidth: usize) -> f64 {
    let n = u.len() as f64;
    let gamma0: f64 = u.iter().map(|v| v * v).sum::<f64>() / n;
    let mut lam2 = gamma0;
    for j in 1..=bandwidth {
        if j >= u.len() {
            break;
        }
        let gj: f64 = (j..u.len()).map(|t| u[t] * u[t - j]).sum::<f64>() / n;
        lam2 += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * gj;
    }
    lam2
}

/// Phillips-Perron Z-tau test: the Dickey-Fuller regression without lag
/// augmentation, corrected nonparametrically with a Bartlett-kernel long-run
/// variance. `bandwidth = None` uses floor(4 (n/100)^{2/9}).
pub fn pp_test(x: &[f64], det: Det, bandwidth: Option<usize>, name: &str) -> Result<UnitRootResult> {
    check_series(x, 12, name)?;
    let fit = fit_adf_regression(x, det, 0, 0)?;
    let n_eff = fit.n;
    let q = bandwidth
        .unwrap_or_else(|| (4.0 * (n_eff as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize);

    let u: Vec<f64> = fit.resid.iter().copied().collect();
    let gamma0: f64 = u.iter().map(|v| v * v).sum::<f64>() / n_eff as f64;
    if gamma0 <= 0.0 {
        return Err(Error::Degenerate(format!(
            "series '{name}' leaves no residual variance"
        )));
    }
    let lam2 = bartlett_long_run_variance(&u, q).max(1e-300);

    let (_, se) = regress::covariance(&fit, CovKind::Classical);
    let t_gamma = fit.coef[0] / se[0];
    let s = fit.sigma2.sqrt();
    let stat = (gamma0 / lam2).sqrt() * t_gamma
        - 0.5 * (lam2 - gamma0) / lam2.sqrt() * (n_eff as f64 * se[0] / s);

    let crit = mackinnon_crit(det, n_eff);
    Ok(UnitRootResult {
        series_name: name.to_string(),
        stat,
        det,
        lags_or_bandwidth: q,
        pvalue_band: band_from_crit(stat, crit),
        reject_5pct: stat < crit[1],
        crit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum IntegrationOrder {
    I0,
    I1,
    I2Plus,
}

impl std::fmt::Display for IntegrationOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntegrationOrder::I0 => write!(f, "I(0)"),
            IntegrationOrder::I1 => write!(f, "I(1)"),
            IntegrationOrder::I2Plus => write!(f, "I(2)+"),
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct IntegrationVerdict {
    pub order: IntegrationOrder,
    pub level_adf: UnitRootResult,
    pub level_pp: UnitRootResult,
    pub diff_adf: Option<UnitRootResult>,
    pub diff_pp: Option<UnitRootResult>,
    /// ADF/PP disagreements; the ADF verdict is taken.
    pub warnings: Vec<String>,
}

/// Classify a series as I(0), I(1) or I(2)+ from paired ADF and PP tests at
/// the 5% level. Both tests must agree; on disagreement the ADF verdict is
/// taken and a warning recorded. Differences are tested with a constant
/// (a trend in levels is a drift in differences).
pub fn classify_integration(x: &[f64], det: Det, name: &str) -> Result<IntegrationVerdict> {
    let max_lag = schwert_max_lag(x.len());
    let level_adf = adf_test(x, det, max_lag, LagSelection::Aic, name)?;
    let level_pp = pp_test(x, det, None, name)?;
    let mut warnings = Vec::new();
    if level_adf.reject_5pct != level_pp.reject_5pct {
        warnings.push(format!(
            "'{name}': ADF and PP disagree on the level (ADF reject={}, PP reject={}); ADF verdict taken",
            level_adf.reject_5pct, level_pp.reject_5pct
        ));
    }
    if level_adf.reject_5pct {
        return Ok(IntegrationVerdict {
            order: IntegrationOrder::I0,
            level_adf,
            level_pp,
            diff_adf: None,
            diff_pp: None,
            warnings,
        });
    }

    let dx: Vec<f64> = (1..x.len()).map(|t| x[t] - x[t - 1]).collect();
    let diff_det = match det {
        Det::ConstTrend => Det::Const,
        other => other,
    };
    let diff_name = format!("d.{name}");
    let diff_adf = adf_test(
        &dx,
        diff_det,
        schwert_max_lag(dx.len()),
        LagSelection::Aic,
        &diff_name,
    )?;
    let diff_pp = pp_test(&dx, diff_det, None, &diff_name)?;
    if diff_adf.reject_5pct != diff_pp.reject_5pct {
        warnings.push(format!(
            "'{name}': ADF and PP disagree on the first difference (ADF reject={}, PP reject={}); ADF verdict taken",
            diff_adf.reject_5pct, diff_pp.reject_5pct
        ));
    }
    let order = if diff_adf.reject_5pct {
        IntegrationOrder::I1
    } else {
        IntegrationOrder::I2Plus
    };
    Ok(IntegrationVerdict {
        order,
        level_adf,
        level_pp,
        diff_adf: Some(diff_adf),
        diff_pp: Some(diff_pp),
        warnings,
    })
}
