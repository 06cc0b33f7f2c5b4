//! JSON experiment configuration.
//!
//! Precedence, lowest first: the preset for the experiment, the fields present
//! in the JSON document, then command-line overrides ([`Overrides`]).

use std::path::PathBuf;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diophantine::{construct_beta, BetaConstruction, Growth, RealTarget};
use crate::error::{Error, Result};
use crate::observables::{
    gaussian_family, slow_convergence_observable, SmoothTruncation, TrigPolynomial,
};
use crate::weyl::WeylIndex;

/// Largest `N` any experiment may schedule (direct-summation DFT range).
pub const MAX_SCHEDULED_DIM: usize = 4096;

/// Denominators `d` with `e^{−d}` below this are left to the tail bound.
const SLOW_TERM_CUTOFF: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QueKron,
    SlowConv,
    Perturbed,
    PerturbedSlow,
    Egorov,
    DiophScan,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::QueKron,
        Experiment::SlowConv,
        Experiment::Perturbed,
        Experiment::PerturbedSlow,
        Experiment::Egorov,
        Experiment::DiophScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::QueKron => "que-kron",
            Experiment::SlowConv => "slow-conv",
            Experiment::Perturbed => "perturbed",
            Experiment::PerturbedSlow => "perturbed-slow",
            Experiment::Egorov => "egorov",
            Experiment::DiophScan => "dioph-scan",
        }
    }
}

/// One coordinate of `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSpec {
    Sqrt {
        d: u64,
    },
    Rational {
        num: i64,
        den: i64,
    },
    /// `(p + q√d)/r`.
    Quadratic {
        p: i64,
        q: i64,
        d: i64,
        r: i64,
    },
    ContinuedFraction {
        prefix: Vec<i64>,
        period: Vec<i64>,
    },
    /// The number built by the slow-convergence construction for `g`.
    Beta {
        growth: Growth,
    },
}

impl AlphaSpec {
    /// The exact target; `Beta` is built with `levels` levels.
    pub fn resolve(&self, levels: usize) -> Result<(RealTarget, Option<BetaConstruction>)> {
        let big = |xs: &[i64]| xs.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        Ok(match self {
            AlphaSpec::Sqrt { d } => (RealTarget::sqrt(*d), None),
            AlphaSpec::Rational { num, den } => (RealTarget::rational(*num, *den)?, None),
            AlphaSpec::Quadratic { p, q, d, r } => (
                RealTarget::quadratic(
                    BigInt::from(*p),
                    BigInt::from(*q),
                    BigInt::from(*d),
                    BigInt::from(*r),
                )?,
                None,
            ),
            AlphaSpec::ContinuedFraction { prefix, period } => (
                RealTarget::continued_fraction(big(prefix), big(period))?,
                None,
            ),
            AlphaSpec::Beta { growth } => {
                let g = *growth;
                let c = construct_beta(move |y| g.inverse_log(y), levels)?;
                (c.target.clone(), Some(c))
            }
        })
    }
}

/// The observable `f` whose matrix elements are measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Monomial {
        n1: i64,
        n2: i64,
    },
    /// `f̂(n) = e^{−decay·‖n − center‖_∞}`, truncated with a certified tail.
    Smooth {
        center: [i64; 2],
        decay: f64,
        radius: i64,
    },
    Polynomial {
        coeffs: TrigPolynomial,
    },
    /// `terms` seeded random coefficients with `‖n‖_∞ ≤ radius`.
    Random {
        terms: usize,
        radius: i64,
    },
    /// `Σ e^{−d_n} e(d_n q)` over the denominators of the `β` construction.
    SlowConvergence,
}

impl ObservableSpec {
    pub fn resolve(
        &self,
        seed: u64,
        construction: Option<&BetaConstruction>,
    ) -> Result<SmoothTruncation> {
        match self {
            ObservableSpec::Monomial { n1, n2 } => {
                Ok(TrigPolynomial::monomial(WeylIndex::new(*n1, *n2)).into())
            }
            ObservableSpec::Smooth {
                center,
                decay,
                radius,
            } => gaussian_family(WeylIndex::new(center[0], center[1]), *decay, *radius),
            ObservableSpec::Polynomial { coeffs } => Ok(coeffs.clone().into()),
            ObservableSpec::Random { terms, radius } => {
                Ok(random_polynomial(seed, *terms, *radius).into())
            }
            ObservableSpec::SlowConvergence => {
                let c = construction.ok_or_else(|| Error::Config {
                    field: "observable".into(),
                    message: "slow_convergence needs a beta coordinate in alpha".into(),
                })?;
                let ds: Vec<u64> = c
                    .convergents
                    .iter()
                    .filter_map(|cv| u64::try_from(&cv.d).ok())
                    .filter(|&d| d <= SLOW_TERM_CUTOFF)
                    .collect();
                Ok(slow_convergence_observable(&ds))
            }
        }
    }
}

/// Seeded random trigonometric polynomial with coefficients in the unit square.
pub fn random_polynomial(seed: u64, terms: usize, radius: i64) -> TrigPolynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TrigPolynomial::from_terms((0..terms).map(|_| {
        let n = WeylIndex::new(
            rng.random_range(-radius..=radius),
            rng.random_range(-radius..=radius),
        );
        (
            n,
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        )
    }))
}

/// The `N` values of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    List {
        values: Vec<usize>,
    },
    /// Every integer in `[min, max]`.
    Range {
        min: usize,
        max: usize,
    },
    /// `round(min·(max/min)^{k/(steps−1)})`, duplicates removed.
    Geometric {
        min: usize,
        max: usize,
        steps: usize,
    },
    /// `N = round(R^exponent)` for integer `R` in `[r_min, r_max]`.
    Algebraic {
        r_min: usize,
        r_max: usize,
        exponent: f64,
    },
}

impl Schedule {
    pub fn values(&self) -> Result<Vec<usize>> {
        let bad = |m: &str| Error::Config {
            field: "schedule".into(),
            message: m.into(),
        };
        let mut out = match self {
            Schedule::List { values } => {
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("values must be strictly increasing"));
                }
                values.clone()
            }
            Schedule::Range { min, max } => (*min..=*max).collect(),
            Schedule::Geometric { min, max, steps } => {
                if *steps < 2 || min >= max || *min == 0 {
                    return Err(bad("geometric schedule needs 0 < min < max and steps >= 2"));
                }
                let ratio = *max as f64 / *min as f64;
                (0..*steps)
                    .map(|k| {
                        (*min as f64 * ratio.powf(k as f64 / (*steps - 1) as f64)).round() as usize
                    })
                    .collect()
            }
            Schedule::Algebraic {
                r_min,
                r_max,
                exponent,
            } => {
                if !(*exponent > 0.0) {
                    return Err(bad("exponent must be positive"));
                }
                (*r_min..=*r_max)
                    .map(|r| (r as f64).powf(*exponent).round() as usize)
                    .collect()
            }
        };
        out.dedup();
        if out.is_empty() {
            return Err(bad("schedule is empty"));
        }
        if out[0] == 0 {
            return Err(bad("N must be >= 1"));
        }
        if let Some(&n) = out.iter().find(|&&n| n > MAX_SCHEDULED_DIM) {
            return Err(bad(&format!("N = {n} exceeds {MAX_SCHEDULED_DIM}")));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Precision {
    /// Frequency limit passed to quantization.
    pub max_frequency: i64,
    /// Grid size for shear re-expansion; chosen from the data when absent.
    pub sampling_size: Option<usize>,
    /// Write wall-clock seconds into CSV rows (breaks byte-identical reruns).
    pub timing: bool,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            max_frequency: 64,
            sampling_size: None,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Exponent of the diophantine scan.
    pub gamma: f64,
    /// Scan range `‖n‖_∞ ≤ scan_n_max`.
    pub scan_n_max: i64,
    /// Levels of the `β` construction.
    pub levels: usize,
    /// Levels with `N` above this are constructed but not simulated.
    pub max_simulated: usize,
    /// Dimensions for the shear sign calibration.
    pub calibration_dims: Vec<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            gamma: 2.0,
            scan_n_max: 200,
            levels: 3,
            max_simulated: 4096,
            calibration_dims: vec![32, 64, 128, 256],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub alpha: (AlphaSpec, AlphaSpec),
    /// Shear profile `V(p)`; absent means `V = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<TrigPolynomial>,
    pub observable: ObservableSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Largest dimension for dense cross-checks.
    #[serde(default = "default_max_dense")]
    pub max_dense: usize,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub params: Params,
}

fn default_max_dense() -> usize {
    64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    experiment: Option<Experiment>,
    alpha: Option<(AlphaSpec, AlphaSpec)>,
    potential: Option<TrigPolynomial>,
    observable: Option<ObservableSpec>,
    schedule: Option<Schedule>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    max_dense: Option<usize>,
    precision: Option<Precision>,
    params: Option<Params>,
}

/// Command-line overrides; `None` leaves the configured value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub n_steps: Option<usize>,
    pub seed: Option<u64>,
    pub max_dense: Option<usize>,
}

fn sqrt_pair() -> (AlphaSpec, AlphaSpec) {
    (AlphaSpec::Sqrt { d: 2 }, AlphaSpec::Sqrt { d: 3 })
}

fn cosine_potential() -> TrigPolynomial {
    TrigPolynomial::cosine(1, 2.0)
}

fn smooth_observable() -> ObservableSpec {
    ObservableSpec::Smooth {
        center: [0, 0],
        decay: 1.0,
        radius: 30,
    }
}

impl ExperimentConfig {
    /// Defaults reproducing the reference run of each experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            alpha: sqrt_pair(),
            potential: None,
            observable: ObservableSpec::Monomial { n1: 1, n2: 1 },
            schedule: None,
            out: None,
            seed: 0,
            max_dense: default_max_dense(),
            precision: Precision::default(),
            params: Params::default(),
        };
        let slow_alpha = (
            AlphaSpec::Sqrt { d: 2 },
            AlphaSpec::Beta {
                growth: Growth::Power(1),
            },
        );
        match experiment {
            Experiment::QueKron => ExperimentConfig {
                schedule: Some(Schedule::Range { min: 2, max: 400 }),
                ..base
            },
            Experiment::SlowConv => ExperimentConfig {
                alpha: slow_alpha,
                observable: ObservableSpec::SlowConvergence,
                ..base
            },
            Experiment::Perturbed => ExperimentConfig {
                potential: Some(cosine_potential()),
                observable: smooth_observable(),
                schedule: Some(Schedule::Geometric {
                    min: 32,
                    max: 512,
                    steps: 9,
                }),
                ..base
            },
            Experiment::PerturbedSlow => ExperimentConfig {
                alpha: slow_alpha,
                potential: Some(cosine_potential()),
                observable: ObservableSpec::SlowConvergence,
                ..base
            },
            Experiment::Egorov => ExperimentConfig {
                potential: Some(cosine_potential()),
                observable: ObservableSpec::Random {
                    terms: 6,
                    radius: 3,
                },
                schedule: Some(Schedule::Geometric {
                    min: 32,
                    max: 512,
                    steps: 5,
                }),
                ..base
            },
            Experiment::DiophScan => base,
        }
    }

    /// Parses a JSON document; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Layers a possibly partial JSON document over the preset of
    /// `experiment`. Present top-level fields replace the preset's; missing
    /// fields inside `precision` and `params` take their defaults.
    pub fn load(experiment: Experiment, text: &str) -> Result<Self> {
        let p: PartialConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if let Some(e) = p.experiment.filter(|&e| e != experiment) {
            return Err(Error::Config {
                field: "experiment".into(),
                message: format!("config is for `{}`, not `{}`", e.name(), experiment.name()),
            });
        }
        let base = ExperimentConfig::preset(experiment);
        let cfg = ExperimentConfig {
            experiment,
            alpha: p.alpha.unwrap_or(base.alpha),
            potential: p.potential.or(base.potential),
            observable: p.observable.unwrap_or(base.observable),
            schedule: p.schedule.or(base.schedule),
            out: p.out.or(base.out),
            seed: p.seed.unwrap_or(base.seed),
            max_dense: p.max_dense.unwrap_or(base.max_dense),
            precision: p.precision.unwrap_or(base.precision),
            params: p.params.unwrap_or(base.params),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, m: &str| {
            Err(Error::Config {
                field: field.into(),
                message: m.into(),
            })
        };
        if let Some(s) = &self.schedule {
            s.values()?;
        }
        let needs_schedule = matches!(
            self.experiment,
            Experiment::QueKron | Experiment::Perturbed | Experiment::Egorov
        );
        if needs_schedule && self.schedule.is_none() {
            return bad("schedule", "this experiment sweeps N and needs a schedule");
        }
        if let Some(v) = &self.potential {
            if !v.is_p_only() || v.mean().norm() > 1e-14 || !v.is_real(1e-12) {
                return bad("potential", "V must be a real mean-zero function of p");
            }
        }
        if self.params.levels == 0 {
            return bad("params.levels", "need at least one level");
        }
        if self.params.calibration_dims.len() < 2 {
            return bad("params.calibration_dims", "need at least two dimensions");
        }
        if let Some(k) = self.precision.sampling_size {
            if !k.is_power_of_two() {
                return bad("precision.sampling_size", "must be a power of two");
            }
        }
        Ok(())
    }

    /// Applies command-line overrides. `--n-steps` selects a geometric
    /// schedule; `--n-min`/`--n-max` alone adjust the bounds of the current one.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.max_dense {
            self.max_dense = m;
        }
        if o.n_min.is_some() || o.n_max.is_some() || o.n_steps.is_some() {
            let current = self.schedule.as_ref().and_then(|s| s.values().ok());
            let lo = o
                .n_min
                .or_else(|| current.as_ref().map(|v| v[0]))
                .unwrap_or(2);
            let hi = o
                .n_max
                .or_else(|| current.as_ref().and_then(|v| v.last().copied()))
                .unwrap_or(lo);
            let steps = o.n_steps.or(match &self.schedule {
                Some(Schedule::Geometric { steps, .. }) => Some(*steps),
                _ => None,
            });
            self.schedule = Some(match steps {
                Some(steps) => Schedule::Geometric {
                    min: lo,
                    max: hi,
                    steps,
                },
                None => Schedule::Range { min: lo, max: hi },
            });
        }
        self.validate()
    }

    pub fn dims(&self) -> Result<Vec<usize>> {
        self.schedule
            .as_ref()
            .ok_or_else(|| Error::Config {
                field: "schedule".into(),
                message: "missing".into(),
            })?
            .values()
    }
}
