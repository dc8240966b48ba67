//! Numerically stable OLS with classical and HC1 robust covariance,
//! information criteria and Wald tests.
//!
//! Fits go through a singular value decomposition of the column-equilibrated
//! design, never through explicit normal-equation inversion. Rank deficiency
//! is detected on the singular-value ratio and reported with the names of the
//! dependent columns.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// Singular-value ratio below which the design is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Variance floor that keeps the Gaussian log-likelihood finite on
/// saturated fits.
const SIGMA2_FLOOR: f64 = 1e-300;

/// Coefficient covariance estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovKind {
    Classical,
    /// White covariance with the n/(n-k) degrees-of-freedom correction.
    RobustHc1,
}

/// An estimated least-squares fit. Owns its design so that restricted refits
/// and auxiliary regressions can reuse it.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub regressor_names: Vec<String>,
    pub coef: DVector<f64>,
    pub resid: DVector<f64>,
    /// Residual variance with the n-k denominator.
    pub sigma2: f64,
    pub xtx_inv: DMatrix<f64>,
    pub n: usize,
    pub k: usize,
    /// Gaussian log-likelihood at the MLE variance (RSS/n).
    pub loglik: f64,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl OlsFit {
    pub fn rss(&self) -> f64 {
        self.resid.dot(&self.resid)
    }

    pub fn fitted(&self) -> DVector<f64> {
        &self.y - &self.resid
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn dof(&self) -> usize {
        self.n - self.k
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.regressor_names.iter().position(|n| n == name)
    }
}

/// Least-squares fit of `y` on the columns of `x`.
pub fn ols_fit(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<OlsFit> {
    let (n, k) = (x.nrows(), x.ncols());
    assert_eq!(names.len(), k, "one name per design column");
    if y.len() != n {
        return Err(Error::Argument(format!(
            "response length {} does not match {} design rows",
            y.len(),
            n
        )));
    }
    if k == 0 {
        return Err(Error::Argument("empty design".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regressors"
        )));
    }

    // Column equilibration: mixed units (prices vs index points vs dummies)
    // otherwise dominate the singular spectrum.
    let mut scale = DVector::from_element(k, 1.0);
    let mut xs = x.clone();
    for j in 0..k {
        let norm = x.column(j).norm();
        if norm > 0.0 {
            scale[j] = norm;
            xs.column_mut(j).unscale_mut(norm);
        }
    }

    let svd = xs.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < RANK_TOL {
        return Err(Error::Collinear {
            columns: dependent_columns(&svd, &names, smax),
        });
    }

    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    // b = D^{-1} V S^{-1} U' y
    let mut uty = u.transpose() * &y;
    for i in 0..k {
        uty[i] /= svd.singular_values[i];
    }
    let mut coef = vt.transpose() * uty;
    for j in 0..k {
        coef[j] /= scale[j];
    }

    let resid = &y - &x * &coef;
    let rss = resid.dot(&resid);
    let sigma2 = rss / (n - k) as f64;
    let sigma2_mle = (rss / n as f64).max(SIGMA2_FLOOR);
    let loglik = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2_mle.ln() + 1.0);

    // (X'X)^{-1} = D^{-1} V S^{-2} V' D^{-1}
    let mut vs = vt.transpose();
    for i in 0..k {
        let s = svd.singular_values[i];
        vs.column_mut(i).unscale_mut(s * s);
    }
    let mut xtx_inv = vs * vt;
    for r in 0..k {
        for c in 0..k {
            xtx_inv[(r, c)] /= scale[r] * scale[c];
        }
    }

    Ok(OlsFit {
        regressor_names: names,
        coef,
        resid,
        sigma2,
        xtx_inv,
        n,
        k,
        loglik,
        x,
        y,
    })
}

fn dependent_columns(
    svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    names: &[String],
    smax: f64,
) -> Vec<String> {
    let mut cols = Vec::new();
    if let Some(vt) = svd.v_t.as_ref() {
        for i in 0..svd.singular_values.len() {
            if svd.singular_values[i] < RANK_TOL * smax.max(1.0) {
                for j in 0..names.len() {
                    let w = vt[(i, j)].abs();
                    if w > 0.25 && !cols.contains(&names[j]) {
                        cols.push(names[j].clone());
                    }
                }
            }
        }
    }
    if cols.is_empty() {
        cols = names.to_vec();
    }
    cols
}

/// Coefficient covariance and standard errors.
pub fn covariance(fit: &OlsFit, kind: CovKind) -> (DMatrix<f64>, Vec<f64>) {
    let cov = match kind {
        CovKind::Classical => &fit.xtx_inv * fit.sigma2,
        CovKind::RobustHc1 => {
            // (X'X)^{-1} X' diag(e^2) X (X'X)^{-1} scaled by n/(n-k)
            let mut xe = fit.x.clone();
            for i in 0..fit.n {
                let e = fit.resid[i];
                xe.row_mut(i).scale_mut(e);
            }
            let meat = xe.transpose() * xe;
            let scale = fit.n as f64 / (fit.n - fit.k) as f64;
            (&fit.xtx_inv * meat * &fit.xtx_inv) * scale
        }
    };
    let se = (0..fit.k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    (cov, se)
}

/// Akaike and Schwarz criteria: `-2 loglik + 2k` and `-2 loglik + k ln n`.
pub fn information_criteria(fit: &OlsFit) -> (f64, f64) {
    let aic = -2.0 * fit.loglik + 2.0 * fit.k as f64;
    let bic = -2.0 * fit.loglik + fit.k as f64 * (fit.n as f64).ln();
    (aic, bic)
}

#[derive(Clone, Copy, Debug)]
pub struct WaldF {
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
}

/// F test of the joint null that the coefficients at `restriction` are zero,
/// computed by refitting without the restricted columns.
pub fn wald_f(fit: &OlsFit, restriction: &[usize]) -> Result<WaldF> {
    if restriction.is_empty() {
        return Err(Error::Argument("empty restriction set".into()));
    }
    if restriction.iter().any(|&j| j >= fit.k) {
        return Err(Error::Argument("restriction index out of range".into()));
    }
    let mut sorted = restriction.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let m = sorted.len();

    let keep: Vec<usize> = (0..fit.k).filter(|j| !sorted.contains(j)).collect();
    let rss_u = fit.rss();
    let rss_r = if keep.is_empty() {
        fit.y.dot(&fit.y)
    } else {
        let xr = fit.x.select_columns(keep.iter());
        let names_r: Vec<String> = keep.iter().map(|&j| fit.regressor_names[j].clone()).collect();
        ols_fit(xr, fit.y.clone(), names_r)?.rss()
    };

    let df1 = m;
    let df2 = fit.n - fit.k;
    let denom = rss_u / df2 as f64;
    let f = if denom > 0.0 {
        ((rss_r - rss_u).max(0.0) / m as f64) / denom
    } else {
        f64::INFINITY
    };
    let p = if f.is_finite() {
        let dist = FisherSnedecor::new(df1 as f64, df2 as f64)
            .map_err(|e| Error::Argument(format!("F distribution: {e}")))?;
        1.0 - dist.cdf(f)
    } else {
        0.0
    };
    Ok(WaldF { f, df1, df2, p })
}

/// Coefficient t-ratios and two-sided Student-t p-values.
pub fn t_stats(fit: &OlsFit, se: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dof = fit.dof() as f64;
    let dist = StudentsT::new(0.0, 1.0, dof).expect("dof > 0");
    let mut ts = Vec::with_capacity(fit.k);
    let mut ps = Vec::with_capacity(fit.k);
    for j in 0..fit.k {
        let c = fit.coef[j];
        let t = if se[j] > 0.0 {
            c / se[j]
        } else if c == 0.0 {
            0.0
        } else {
            f64::INFINITY * c.signum()
        };
        let p = if t.is_finite() {
            2.0 * (1.0 - dist.cdf(t.abs()))
        } else {
            0.0
        };
        ts.push(t);
        ps.push(p);
    }
    (ts, ps)
}

/// Significance stars: `***` p<0.01, `**` p<0.05, `*` p<0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}
