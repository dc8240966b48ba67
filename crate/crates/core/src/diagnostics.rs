//! Residual and stability diagnostics: Breusch-Godfrey and Durbin's
//! alternative tests for serial correlation, the Breusch-Pagan/Cook-Weisberg
//! heteroscedasticity test, Jarque-Bera normality, and the CUSUM recursive
//! stability test.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::regress::{self, OlsFit};

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TestStat {
    pub stat: f64,
    pub dof: usize,
    pub p: f64,
}

fn chi2_p(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof > 0");
    1.0 - dist.cdf(stat)
}

/// Auxiliary design for the serial-correlation tests: the original regressors
/// plus `order` lags of the residuals, zero-padded before the sample start.
fn autocorr_aux(fit: &OlsFit, order: usize) -> Result<(DMatrix<f64>, DVector<f64>, Vec<String>)> {
    if order < 1 {
        return Err(Error::Argument("lag order must be at least 1".into()));
    }
    if fit.n <= fit.k + order + 5 {
        return Err(Error::InsufficientData(format!(
            "n - k - order = {} is too small",
            fit.n as i64 - fit.k as i64 - order as i64
        )));
    }
    let n = fit.n;
    let k = fit.k;
    let mut x = DMatrix::zeros(n, k + order);
    x.view_mut((0, 0), (n, k)).copy_from(fit.design());
    for l in 1..=order {
        for t in l..n {
            x[(t, k + l - 1)] = fit.resid[t - l];
        }
    }
    let mut names = fit.regressor_names.clone();
    for l in 1..=order {
        names.push(format!("resid.l{l}"));
    }
    Ok((x, fit.resid.clone(), names))
}

fn centered_tss(fit: &OlsFit, v: &DVector<f64>) -> f64 {
    let has_const = fit
        .regressor_names
        .iter()
        .any(|n| n == "const");
    if has_const {
        let mean = v.mean();
        v.iter().map(|e| (e - mean) * (e - mean)).sum()
    } else {
        v.dot(v)
    }
}

/// Breusch-Godfrey LM test for residual autocorrelation up to `order`:
/// n R-squared of the auxiliary regression, chi-squared with `order` degrees
/// of freedom.
pub fn breusch_godfrey(fit: &OlsFit, order: usize) -> Result<TestStat> {
    let (x, e, names) = autocorr_aux(fit, order)?;
    let tss = centered_tss(fit, &e);
    if tss <= 0.0 {
        return Ok(TestStat {
            stat: 0.0,
            dof: order,
            p: 1.0,
        });
    }
    let aux = regress::ols_fit(x, e, names)?;
    let r2 = (1.0 - aux.rss() / tss).max(0.0);
    let stat = fit.n as f64 * r2;
    Ok(TestStat {
        stat,
        dof: order,
        p: chi2_p(stat, order),
    })
}

/// Durbin's alternative test: the Wald F statistic on the residual-lag block
/// of the same auxiliary regression, F(order, n - k - order).
pub fn durbin_alternative(fit: &OlsFit, order: usize) -> Result<TestStat> {
    let (x, e, names) = autocorr_aux(fit, order)?;
    if centered_tss(fit, &e) <= 0.0 {
        return Ok(TestStat {
            stat: 0.0,
            dof: order,
            p: 1.0,
        });
    }
    let aux = regress::ols_fit(x, e, names)?;
    let restriction: Vec<usize> = (fit.k..fit.k + order).collect();
    let w = regress::wald_f(&aux, &restriction)?;
    Ok(TestStat {
        stat: w.f,
        dof: order,
        p: w.p,
    })
}

/// Breusch-Pagan / Cook-Weisberg heteroscedasticity test against the fitted
/// values: squared residuals scaled by RSS/n are regressed on the fitted
/// values and the explained sum of squares over two is chi-squared(1).
pub fn breusch_pagan(fit: &OlsFit) -> Result<TestStat> {
    let n = fit.n;
    let rss = fit.rss();
    if rss <= 0.0 {
        return Err(Error::Degenerate(
            "residual variance is zero, nothing to test".into(),
        ));
    }
    let sigma2_mle = rss / n as f64;
    let g = DVector::from_fn(n, |i, _| fit.resid[i] * fit.resid[i] / sigma2_mle);
    let fitted = fit.fitted();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { fitted[i] });
    let aux = regress::ols_fit(x, g.clone(), vec!["const".into(), "fitted".into()])?;
    let gbar = g.mean();
    let tss: f64 = g.iter().map(|v| (v - gbar) * (v - gbar)).sum();
    let ess = (tss - aux.rss()).max(0.0);
    let stat = ess / 2.0;
    Ok(TestStat {
        stat,
        dof: 1,
        p: chi2_p(stat, 1),
    })
}

/// Jarque-Bera normality test: n/6 (skew^2 + (kurtosis - 3)^2 / 4),
/// chi-squared with two degrees of freedom.
pub fn normality_test(resid: &[f64]) -> Result<TestStat> {
    let n = resid.len();
    if n < 20 {
        return Err(Error::InsufficientData(format!(
            "{n} residuals, need at least 20"
        )));
    }
    let nf = n as f64;
    let mean = resid.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for v in resid {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Ok(TestStat {
            stat: 0.0,
            dof: 2,
            p: 1.0,
        });
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let stat = nf / 6.0 * (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
    Ok(TestStat {
        stat,
        dof: 2,
        p: chi2_p(stat, 2),
    })
}

/// Brown-Durbin-Evans 5% boundary slope constant.
const CUSUM_A_5PCT: f64 = 0.948;

#[derive(Clone, Debug, serde::Serialize)]
pub struct CusumResult {
    /// Cumulative sums of standardized recursive residuals, one entry per
    /// observation after the initialization window.
    pub path: Vec<f64>,
    /// 5% significance boundary (positive branch); the negative branch is its
    /// mirror image.
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub stable: bool,
}

/// CUSUM parameter-stability test from standardized recursive residuals.
pub fn cusum(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<CusumResult> {
    let n = x.nrows();
    let k = x.ncols();
    if n <= k + 10 {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regressors is too short for recursion"
        )));
    }

    // initialize on the first k rows
    let x0 = x.view((0, 0), (k, k)).into_owned();
    let y0 = y.rows(0, k).into_owned();
    let xtx = x0.transpose() * &x0;
    let mut p = xtx.clone().try_inverse().ok_or_else(|| Error::Collinear {
        columns: vec!["recursive initialization window".into()],
    })?;
    let mut b = &p * (x0.transpose() * y0);

    let mut w = Vec::with_capacity(n - k);
    for t in k..n {
        let xt = x.row(t).transpose();
        let px = &p * &xt;
        let f = 1.0 + xt.dot(&px);
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Collinear {
                columns: vec![format!("recursive window ending at row {t}")],
            });
        }
        let err = y[t] - xt.dot(&b);
        w.push(err / f.sqrt());
        // Sherman-Morrison update of (X'X)^{-1} and the coefficients
        let gain = &px / f;
        b += &gain * err;
        p -= &gain * px.transpose();
    }

    let m = w.len() as f64;
    let wbar = w.iter().sum::<f64>() / m;
    let sigma = (w.iter().map(|v| (v - wbar) * (v - wbar)).sum::<f64>() / (m - 1.0)).sqrt();

    let sqrt_mk = m.sqrt();
    let mut path = Vec::with_capacity(w.len());
    let mut upper = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for (s, wi) in w.iter().enumerate() {
        acc += wi;
        path.push(if sigma > 1e-14 { acc / sigma } else { 0.0 });
        upper.push(CUSUM_A_5PCT * (sqrt_mk + 2.0 * (s + 1) as f64 / sqrt_mk));
    }
    let lower: Vec<f64> = upper.iter().map(|b| -b).collect();
    let stable = path
        .iter()
        .zip(&upper)
        .all(|(p, b)| p.abs() < *b);
    Ok(CusumResult {
        path,
        upper,
        lower,
        stable,
    })
}

/// Convenience wrapper running the CUSUM over a fit's own design.
pub fn cusum_fit(fit: &OlsFit) -> Result<CusumResult> {
    cusum(fit.design(), fit.response())
}

/// The full diagnostic block the pipeline reports per model.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DiagnosticsReport {
    /// Breusch-Godfrey at each tested order.
    pub bg_lm: Vec<(usize, TestStat)>,
    pub durbin_alt: TestStat,
    pub breusch_pagan: TestStat,
    pub normality: TestStat,
    pub cusum_stable: bool,
    #[serde(skip)]
    pub cusum: CusumResult,
}

/// Run the whole battery on a fit. `bg_orders` defaults to 1..=4 when empty.
pub fn run_battery(fit: &OlsFit, bg_orders: &[usize]) -> Result<DiagnosticsReport> {
    let orders: Vec<usize> = if bg_orders.is_empty() {
        vec![1, 2, 3, 4]
    } else {
        bg_orders.to_vec()
    };
    let mut bg_lm = Vec::new();
    for &o in &orders {
        bg_lm.push((o, breusch_godfrey(fit, o)?));
    }
    let durbin_alt = durbin_alternative(fit, orders[0])?;
    let bp = breusch_pagan(fit)?;
    let resid: Vec<f64> = fit.resid.iter().copied().collect();
    let normality = normality_test(&resid)?;
    let cusum = cusum_fit(fit)?;
    Ok(DiagnosticsReport {
        bg_lm,
        durbin_alt,
        breusch_pagan: bp,
        normality,
        cusum_stable: cusum.stable,
        cusum,
    })
}
