//! Named experiments with CSV and JSON outputs.
//!
//! Every run is deterministic given its configuration: rows are computed in
//! parallel, keyed by `N` and sorted before writing, and wall-clock timings are
//! only recorded when `precision.timing` is set.

pub mod config;
pub mod runners;

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::diophantine::RealTarget;
use crate::error::Result;

pub use config::{
    AlphaSpec, Experiment, ExperimentConfig, ObservableSpec, Overrides, Params, Precision, Schedule,
};
pub use runners::{
    run_dioph_scan, run_egorov, run_perturbed, run_perturbed_slow, run_que_kronecker,
    run_slow_convergence, DiophScanReport, EgorovReport, FitSummary, PerturbedReport,
    QueKronReport, SlowLevel, SlowReport,
};

/// Whether `1, α₁, α₂` are rationally independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UniquelyErgodic,
    NonUniquelyErgodic,
    Undetermined,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::UniquelyErgodic => "uniquely ergodic",
            Regime::NonUniquelyErgodic => "non-UE regime",
            Regime::Undetermined => "undetermined",
        }
    }
}

/// Decides the regime for rational and quadratic coordinates: a rational
/// coordinate, or two surds from the same quadratic field, give a rational
/// relation; surds from different fields do not.
pub fn regime(a: &RealTarget, b: &RealTarget) -> Regime {
    match (a.closed_form(), b.closed_form()) {
        (RealTarget::Rational(_), _) | (_, RealTarget::Rational(_)) => Regime::NonUniquelyErgodic,
        (RealTarget::Quadratic { d: d1, .. }, RealTarget::Quadratic { d: d2, .. }) => {
            match (squarefree_part(&d1), squarefree_part(&d2)) {
                (Some(x), Some(y)) if x == y => Regime::NonUniquelyErgodic,
                (Some(_), Some(_)) => Regime::UniquelyErgodic,
                _ => Regime::Undetermined,
            }
        }
        _ => Regime::Undetermined,
    }
}

// Trial division; None when d is too large to factor this way.
fn squarefree_part(d: &BigInt) -> Option<u64> {
    let mut d = d.to_u64().filter(|&x| x > 0 && x < 1 << 40)?;
    let mut out = 1u64;
    let mut p = 2u64;
    while p * p <= d {
        let mut e = 0;
        while d % p == 0 {
            d /= p;
            e += 1;
        }
        if e % 2 == 1 {
            out *= p;
        }
        p += 1;
    }
    Some(out * d)
}

/// What a run writes: the primary artifact and an optional JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// CSV for sweeps and defect tables, JSON for reports.
    pub primary: String,
    pub primary_is_csv: bool,
    pub summary: Option<String>,
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let timing = cfg.precision.timing;
    Ok(match cfg.experiment {
        Experiment::QueKron => {
            let r = run_que_kronecker(cfg)?;
            RunOutput {
                primary: r.sweep.to_csv(timing),
                primary_is_csv: true,
                summary: Some(pretty(&r)?),
            }
        }
        Experiment::Perturbed => {
            let r = run_perturbed(cfg)?;
            RunOutput {
                primary: r.sweep.to_csv(timing),
                primary_is_csv: true,
                summary: Some(pretty(&r)?),
            }
        }
        Experiment::Egorov => {
            let r = run_egorov(cfg)?;
            RunOutput {
                primary: r.to_csv(),
                primary_is_csv: true,
                summary: Some(pretty(&r)?),
            }
        }
        Experiment::SlowConv => RunOutput {
            primary: pretty(&run_slow_convergence(cfg)?)?,
            primary_is_csv: false,
            summary: None,
        },
        Experiment::PerturbedSlow => RunOutput {
            primary: pretty(&run_perturbed_slow(cfg)?)?,
            primary_is_csv: false,
            summary: None,
        },
        Experiment::DiophScan => RunOutput {
            primary: pretty(&run_dioph_scan(cfg)?)?,
            primary_is_csv: false,
            summary: None,
        },
    })
}

fn pretty<T: Serialize>(x: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(x)? + "\n")
}

/// `out.csv` gets its summary at `out.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

/// Writes the primary artifact to `out` and the summary beside it.
pub fn write_output(output: &RunOutput, out: &Path) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, &output.primary)?;
    if let Some(s) = &output.summary {
        std::fs::write(summary_path(out), s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::TrigPolynomial;

    fn quick(e: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(e);
        cfg.params.calibration_dims = vec![16, 32, 64];
        cfg
    }

    #[test]
    fn regimes() {
        let s = |d| RealTarget::sqrt(d);
        assert_eq!(regime(&s(2), &s(3)), Regime::UniquelyErgodic);
        assert_eq!(regime(&s(2), &s(8)), Regime::NonUniquelyErgodic);
        assert_eq!(
            regime(&s(2), &RealTarget::rational(1, 3).unwrap()),
            Regime::NonUniquelyErgodic
        );
        assert_eq!(squarefree_part(&BigInt::from(72)), Some(2));
        assert_eq!(Regime::NonUniquelyErgodic.label(), "non-UE regime");
    }

    #[test]
    fn que_kron_threshold_and_determinism() {
        let mut cfg = quick(Experiment::QueKron);
        cfg.schedule = Some(Schedule::Range { min: 2, max: 60 });
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        let r = run_que_kronecker(&cfg).unwrap();
        // N = 6 is resonant for (1,1) yet vanishes in the structured basis
        assert_eq!(r.zero_threshold, Some(4));
        let six = &r.sweep.rows[4];
        assert!(six.n == 6 && six.resonant_count == 1 && six.raw_max == 0.0);
        assert_eq!(r.regime, Regime::UniquelyErgodic);
        assert!(a.primary.lines().any(|l| l.starts_with("# claim:")));
        assert!(a.primary.contains(crate::spectra::CSV_HEADER));
    }

    #[test]
    fn rational_alpha_is_labelled() {
        let mut cfg = quick(Experiment::QueKron);
        cfg.alpha = (
            AlphaSpec::Rational { num: 1, den: 2 },
            AlphaSpec::Sqrt { d: 3 },
        );
        cfg.schedule = Some(Schedule::Range { min: 2, max: 30 });
        let r = run_que_kronecker(&cfg).unwrap();
        assert_eq!(r.regime, Regime::NonUniquelyErgodic);
        assert!(r
            .sweep
            .provenance
            .iter()
            .any(|l| l.contains("non-UE regime")));
        // e_(1,1) resonates at every even N
        assert!(r
            .sweep
            .rows
            .iter()
            .filter(|row| row.n % 2 == 0)
            .any(|row| !row.exact_zero));
    }

    #[test]
    fn zero_potential_reduces_to_kronecker() {
        let mut cfg = quick(Experiment::Perturbed);
        cfg.potential = None;
        cfg.observable = ObservableSpec::Smooth {
            center: [0, 0],
            decay: 1.0,
            radius: 6,
        };
        cfg.schedule = Some(Schedule::List {
            values: vec![16, 24, 32],
        });
        let p = run_perturbed(&cfg).unwrap();
        assert!(p.calibration.warning);
        let mut q = cfg.clone();
        q.experiment = Experiment::QueKron;
        let k = run_que_kronecker(&q).unwrap();
        assert_eq!(p.sweep.rows, k.sweep.rows);
        assert!(p.conjugation.iter().all(|d| d.matrix_element == 0.0));
    }

    #[test]
    fn slow_convergence_levels() {
        let r = run_slow_convergence(&quick(Experiment::SlowConv)).unwrap();
        assert_eq!(r.quotients, vec!["1", "3", "3", "221"]);
        assert_eq!(r.levels.len(), 3);
        assert!(r.levels.iter().all(|l| l.identity_holds));
        assert_eq!(r.levels[2].status, "constructed, not simulated");
        for l in &r.levels[..2] {
            assert_eq!(l.status, "simulated");
            assert!(l.shift_defect.unwrap() <= runners::SHIFT_TOL);
            assert!(l.ratio.unwrap() >= 0.3, "{l:?}");
        }
    }

    #[test]
    fn perturbed_slow_with_zero_potential_matches() {
        let mut cfg = quick(Experiment::PerturbedSlow);
        cfg.potential = Some(TrigPolynomial::zero());
        let p = run_perturbed_slow(&cfg).unwrap();
        let s = run_slow_convergence(&quick(Experiment::SlowConv)).unwrap();
        for (x, y) in p.levels.iter().zip(&s.levels) {
            assert_eq!(x.ratio, y.ratio);
            assert_eq!(x.consistency.unwrap_or(0.0), 0.0);
        }
    }

    #[test]
    fn dioph_scan_regression() {
        let mut cfg = quick(Experiment::DiophScan);
        cfg.params.gamma = 4.0;
        let r = run_dioph_scan(&cfg).unwrap();
        assert!((r.scan.c_estimate - 0.146264369941972342).abs() < 1e-12);
        assert_eq!(r.scan.worst_witness, (-1, -1, 3));
    }

    #[test]
    fn output_files() {
        let dir = std::env::temp_dir().join(format!("qtorus-out-{}", std::process::id()));
        let out = RunOutput {
            primary: "a\n".into(),
            primary_is_csv: true,
            summary: Some("{}".into()),
        };
        let path = dir.join("x.csv");
        write_output(&out, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a\n");
        assert_eq!(
            std::fs::read_to_string(dir.join("x.summary.json")).unwrap(),
            "{}"
        );
        std::fs::remove_dir_all(dir).unwrap();
    }
}
