//! Monte Carlo harness: run a named experiment over independent seeds and
//! summarize rejection rates and statistic quantiles.
//!
//! Replications execute in parallel; results are indexed by replication so
//! aggregation is order-independent and parallel runs agree with serial ones
//! bit for bit.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Outcome of one replication: the experiment's statistic and its rejection
/// flags at the 10%, 5% and 1% levels.
#[derive(Clone, Copy, Debug)]
pub struct RepOutcome {
    pub stat: f64,
    pub reject_10: bool,
    pub reject_5: bool,
    pub reject_1: bool,
}

/// One Monte Carlo experiment behind a common interface; implementations are
/// registered by name in [`super::experiments::registry`] and selected at
/// runtime from the command line.
pub trait Experiment: Sync + Send {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Replication count the experiment is calibrated for.
    fn default_reps(&self) -> usize;
    /// Run one replication with the given seed.
    fn replicate(&self, seed: u64) -> Result<RepOutcome>;
}

/// Quantile probabilities reported by every summary.
pub const QUANTILES: [f64; 9] = [0.01, 0.025, 0.05, 0.10, 0.50, 0.90, 0.95, 0.975, 0.99];

#[derive(Clone, Debug, serde::Serialize)]
pub struct McSummary {
    pub experiment: String,
    pub reps: usize,
    pub base_seed: u64,
    /// Replications that returned an estimation error (counted, not fatal
    /// unless more than 5% fail).
    pub failures: usize,
    /// Rejection rates at the 10%, 5% and 1% levels.
    pub rejection: [f64; 3],
    pub stat_mean: f64,
    /// Empirical quantiles of the statistic at [`QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
}

impl McSummary {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(q, _)| (q - p).abs() < 1e-12)
            .map(|(_, v)| *v)
    }

    /// CSV rows in the shape (experiment, level, rate, reps, seed).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,level,rate,reps,seed\n");
        for (level, rate) in [(0.10, self.rejection[0]), (0.05, self.rejection[1]), (0.01, self.rejection[2])] {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.experiment, level, rate, self.reps, self.base_seed
            ));
        }
        out
    }
}

/// Run `reps` independent replications with seeds `base_seed + i`.
pub fn monte_carlo(exp: &dyn Experiment, reps: usize, base_seed: u64) -> Result<McSummary> {
    if reps < 100 {
        return Err(Error::Argument(format!(
            "need at least 100 replications, got {reps}"
        )));
    }
    // seeds are distinct by construction; guard against overflow wrap
    if base_seed.checked_add(reps as u64).is_none() {
        return Err(Error::Argument("seed range overflows".into()));
    }

    let outcomes: Vec<Result<RepOutcome>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| exp.replicate(base_seed + i))
        .collect();

    let mut stats = Vec::with_capacity(reps);
    let mut rej = [0usize; 3];
    let mut failures = 0usize;
    for out in &outcomes {
        match out {
            Ok(o) => {
                stats.push(o.stat);
                rej[0] += o.reject_10 as usize;
                rej[1] += o.reject_5 as usize;
                rej[2] += o.reject_1 as usize;
            }
            Err(_) => failures += 1,
        }
    }
    if failures * 20 > reps {
        return Err(Error::Selection(format!(
            "{failures} of {reps} replications failed in '{}'",
            exp.name()
        )));
    }
    let done = stats.len().max(1) as f64;
    stats.sort_by(|a, b| a.total_cmp(b));
    let quantiles = QUANTILES
        .iter()
        .map(|&p| (p, empirical_quantile(&stats, p)))
        .collect();
    Ok(McSummary {
        experiment: exp.name().to_string(),
        reps,
        base_seed,
        failures,
        rejection: [
            rej[0] as f64 / done,
            rej[1] as f64 / done,
            rej[2] as f64 / done,
        ],
        stat_mean: stats.iter().sum::<f64>() / done,
        quantiles,
    })
}

fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = p * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let w = idx - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SeedRng;

    /// Statistic: one standard normal draw; rejects on |z| beyond the
    /// two-sided normal critical values.
    struct NormalDraw;

    impl Experiment for NormalDraw {
        fn name(&self) -> &'static str {
            "normal_draw"
        }
        fn description(&self) -> &'static str {
            "one standard normal draw per replication"
        }
        fn default_reps(&self) -> usize {
            1000
        }
        fn replicate(&self, seed: u64) -> Result<RepOutcome> {
            let z = SeedRng::new(seed).gaussian();
            Ok(RepOutcome {
                stat: z,
                reject_10: z.abs() > 1.6449,
                reject_5: z.abs() > 1.9600,
                reject_1: z.abs() > 2.5758,
            })
        }
    }

    #[test]
    fn sizes_match_nominal_levels() {
        let s = monte_carlo(&NormalDraw, 20_000, 1).unwrap();
        assert!((s.rejection[0] - 0.10).abs() < 0.01, "{:?}", s.rejection);
        assert!((s.rejection[1] - 0.05).abs() < 0.008, "{:?}", s.rejection);
        assert!((s.rejection[2] - 0.01).abs() < 0.005, "{:?}", s.rejection);
        assert!((s.quantile(0.975).unwrap() - 1.96).abs() < 0.05);
    }

    #[test]
    fn deterministic_given_base_seed() {
        let a = monte_carlo(&NormalDraw, 500, 9).unwrap();
        let b = monte_carlo(&NormalDraw, 500, 9).unwrap();
        assert_eq!(a.stat_mean.to_bits(), b.stat_mean.to_bits());
        assert_eq!(a.rejection, b.rejection);
    }

    #[test]
    fn too_few_reps_rejected() {
        assert!(monte_carlo(&NormalDraw, 99, 1).is_err());
    }

    /// An experiment that fails on a fixed share of seeds.
    struct Flaky(u64);

    impl Experiment for Flaky {
        fn name(&self) -> &'static str {
            "flaky"
        }
        fn description(&self) -> &'static str {
            "fails when seed % modulus == 0"
        }
        fn default_reps(&self) -> usize {
            100
        }
        fn replicate(&self, seed: u64) -> Result<RepOutcome> {
            if seed % self.0 == 0 {
                return Err(Error::Degenerate("synthetic failure".into()));
            }
            Ok(RepOutcome {
                stat: 0.0,
                reject_10: false,
                reject_5: false,
                reject_1: false,
            })
        }
    }

    #[test]
    fn sparse_failures_are_counted_not_fatal() {
        let s = monte_carlo(&Flaky(100), 1000, 1).unwrap();
        assert_eq!(s.failures, 10);
    }

    #[test]
    fn heavy_failures_abort() {
        assert!(monte_carlo(&Flaky(2), 1000, 1).is_err());
    }

    #[test]
    fn csv_shape() {
        let s = monte_carlo(&NormalDraw, 200, 3).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("experiment,level,rate,reps,seed\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("normal_draw,0.05,"));
    }
}
