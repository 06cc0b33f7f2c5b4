use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use super::{regime, Regime};
use crate::diophantine::{
    diophantine_scan, BetaConstruction, BetaLevel, DiophantineReport, Growth, RealTarget,
};
use crate::error::{Error, Result};
use crate::observables::{
    compose_shear, compose_translation_rational, compose_translation_real, quantize_truncation,
    SmoothTruncation, TrigPolynomial,
};
use crate::phase::RootTable;
use crate::propagators::{
    calibrate_sign, egorov_defect, h_series, kronecker, perturbed, sampling_size,
    shear_from_profile, Inverse, Propagator, SignCalibration,
};
use crate::spectra::{
    fit_log_log, que_remainder, rate_fit, resonant_count, LogLogFit, MatrixElementSweep,
    RateOutcome, SweepRow,
};
use crate::weyl::{
    eigenbasis_monomial, joint_eigenbasis, weyl_expectation, weyl_operator, EigenBasis, WeylIndex,
};

/// Tolerance for `|⟨T_N(0,d)ψ,ψ⟩| = 1` on the joint eigenbasis.
pub const SHIFT_TOL: f64 = 1e-10;

const PROBE: WeylIndex = WeylIndex::new(0, 1);

/// A rate fit, or the reason none was possible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub outcome: Option<RateOutcome>,
    pub note: Option<String>,
}

impl FitSummary {
    fn of(sweep: &MatrixElementSweep) -> Self {
        match rate_fit(sweep) {
            Ok(o) => FitSummary {
                outcome: Some(o),
                note: None,
            },
            Err(e) => FitSummary {
                outcome: None,
                note: Some(e.to_string()),
            },
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self.outcome {
            Some(RateOutcome::Fit { fit, .. }) => Some(fit.slope),
            _ => None,
        }
    }
}

fn claim(e: Experiment) -> &'static str {
    match e {
        Experiment::QueKron => {
            "Kronecker map: matrix elements of polynomial observables vanish exactly for large N; smooth observables decay at a diophantine rate"
        }
        Experiment::SlowConv => "Kronecker map: along the constructed levels the remainder stays >> 1/g(N)",
        Experiment::Perturbed => "perturbed Kronecker map: remainders decay like N^-2",
        Experiment::PerturbedSlow => "perturbed Kronecker map: along the constructed levels the remainder stays >> 1/g(N)",
        Experiment::Egorov => {
            "Egorov defects: exact for translations, N^-2 in matrix elements for shears, N^-1 or better for the perturbed map"
        }
        Experiment::DiophScan => "finite diophantine scan of min |n.alpha + k| ||n||^gamma",
    }
}

fn json<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).unwrap_or_else(|_| "?".into())
}

/// `#`-comment lines describing a run.
pub fn provenance(cfg: &ExperimentConfig, alpha: &(RealTarget, RealTarget)) -> Vec<String> {
    let mut lines = vec![
        format!("experiment: {}", cfg.experiment.name()),
        format!("claim: {}", claim(cfg.experiment)),
        format!(
            "alpha: ({}, {}) spec {}",
            alpha.0,
            alpha.1,
            json(&cfg.alpha)
        ),
        format!(
            "potential: {}",
            cfg.potential.as_ref().map_or("none".into(), json)
        ),
        format!("observable: {}", json(&cfg.observable)),
    ];
    if let Some(s) = &cfg.schedule {
        lines.push(format!("schedule: {}", json(s)));
    }
    lines.push(format!("seed: {}", cfg.seed));
    lines.push(format!("code: qtorus {}", env!("CARGO_PKG_VERSION")));
    lines
}

struct Resolved {
    alpha: (RealTarget, RealTarget),
    construction: Option<BetaConstruction>,
    f: SmoothTruncation,
    v: TrigPolynomial,
}

fn resolve(cfg: &ExperimentConfig) -> Result<Resolved> {
    cfg.validate()?;
    let (a0, c0) = cfg.alpha.0.resolve(cfg.params.levels)?;
    let (a1, c1) = cfg.alpha.1.resolve(cfg.params.levels)?;
    let construction = c1.or(c0);
    let f = cfg.observable.resolve(cfg.seed, construction.as_ref())?;
    Ok(Resolved {
        alpha: (a0, a1),
        construction,
        f,
        v: cfg.potential.clone().unwrap_or_else(TrigPolynomial::zero),
    })
}

fn shear_grid(cfg: &ExperimentConfig, f: &TrigPolynomial, h: &TrigPolynomial) -> usize {
    cfg.precision
        .sampling_size
        .unwrap_or_else(|| sampling_size(f, h))
}

fn sweep_rows<F>(dims: &[usize], timing: bool, row: F) -> Result<Vec<SweepRow>>
where
    F: Fn(usize) -> Result<SweepRow> + Sync,
{
    let mut rows = dims
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let mut r = row(n)?;
            r.seconds = if timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

fn row_from(n: usize, a: WeylIndex, rem: crate::spectra::Remainder, resonant: usize) -> SweepRow {
    SweepRow {
        n,
        a1: a.n1,
        a2: a.n2,
        remainder_max: rem.max,
        remainder_mean: rem.mean,
        exact_zero: rem.exact_zero,
        resonant_count: resonant,
        seconds: 0.0,
        raw_max: rem.raw_max,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueKronReport {
    pub sweep: MatrixElementSweep,
    pub regime: Regime,
    /// First `N` of the sweep beyond which every remainder is exactly zero
    /// (polynomial observables only).
    pub zero_threshold: Option<usize>,
    pub rate: FitSummary,
}

pub fn run_que_kronecker(cfg: &ExperimentConfig) -> Result<QueKronReport> {
    let r = resolve(cfg)?;
    let dims = cfg.dims()?;
    let rows = sweep_rows(&dims, cfg.precision.timing, |n| {
        let k = kronecker(&r.alpha, n)?;
        let rem = que_remainder(&k.eigenbasis(), &r.f, cfg.precision.max_frequency)?;
        Ok(row_from(n, k.a, rem, resonant_count(&r.f, k.a, n)))
    })?;
    let reg = regime(&r.alpha.0, &r.alpha.1);
    let mut provenance = provenance(cfg, &r.alpha);
    provenance.push(format!("regime: {}", reg.label()));
    let sweep = MatrixElementSweep {
        alpha: format!("({}, {})", r.alpha.0, r.alpha.1),
        observable: json(&cfg.observable),
        provenance,
        rows,
    };
    let polynomial = r.f.tail_bound == 0.0;
    let zero_threshold = if polynomial {
        sweep.zero_threshold()
    } else {
        None
    };
    let rate = FitSummary::of(&sweep);
    Ok(QueKronReport {
        sweep,
        regime: reg,
        zero_threshold,
        rate,
    })
}

/// The defect `⟨U_h Op(f) U_h⁻¹ ψ^τ_j, ψ^τ_j⟩ − ⟨Op(f∘Φ_h) ψ^τ_j, ψ^τ_j⟩` at one `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationDefect {
    pub n: usize,
    pub matrix_element: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedReport {
    pub calibration: SignCalibration,
    pub sweep: MatrixElementSweep,
    /// The same observable in the unperturbed Kronecker eigenbasis.
    pub kronecker_rows: Vec<SweepRow>,
    pub rate: FitSummary,
    pub conjugation: Vec<ConjugationDefect>,
    pub conjugation_fit: Option<LogLogFit>,
}

fn calibrate(cfg: &ExperimentConfig, v: &TrigPolynomial) -> Result<SignCalibration> {
    calibrate_sign(
        v,
        &TrigPolynomial::monomial(PROBE),
        &cfg.params.calibration_dims,
    )
}

pub fn run_perturbed(cfg: &ExperimentConfig) -> Result<PerturbedReport> {
    let r = resolve(cfg)?;
    let dims = cfg.dims()?;
    let calibration = calibrate(cfg, &r.v)?;
    let h = h_series(&r.v, &r.alpha.0, None)?;
    let fcirc = compose_shear(&r.f.poly, &h.h, shear_grid(cfg, &r.f.poly, &h.h))?;
    let maxf = cfg.precision.max_frequency;

    let per_n = dims
        .par_iter()
        .map(|&n| -> Result<(SweepRow, SweepRow, ConjugationDefect)> {
            let start = Instant::now();
            let p = perturbed(&r.alpha, &r.v, n, calibration.sign)?;
            let kb = p.kron.eigenbasis();
            let rem = que_remainder(&p.transport(kb.clone())?, &r.f, maxf)?;
            let res = resonant_count(&r.f, p.kron.a, n);
            let mut row = row_from(n, p.kron.a, rem, res);
            let kron_row = row_from(n, p.kron.a, que_remainder(&kb, &r.f, maxf)?, res);
            let rec = egorov_defect(&Inverse(&p.conj), &r.f, &fcirc, Some(&kb), false, 0)?;
            let defect = ConjugationDefect {
                n,
                matrix_element: rec.matrix_element.unwrap_or(0.0),
                budget: rec.budget,
            };
            row.seconds = if cfg.precision.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            Ok((row, kron_row, defect))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut kronecker_rows = Vec::new();
    let mut conjugation = Vec::new();
    for (a, b, c) in per_n {
        rows.push(a);
        kronecker_rows.push(b);
        conjugation.push(c);
    }

    let mut provenance = provenance(cfg, &r.alpha);
    provenance.push(format!(
        "calibrated shear sign: {} (slopes +1: {:.3}, -1: {:.3})",
        calibration.sign, calibration.slope_plus, calibration.slope_minus
    ));
    let mut sweep = MatrixElementSweep {
        alpha: format!("({}, {})", r.alpha.0, r.alpha.1),
        observable: json(&cfg.observable),
        provenance,
        rows,
    };
    sweep.sort();
    let rate = FitSummary::of(&sweep);
    let xs: Vec<f64> = conjugation.iter().map(|d| d.n as f64).collect();
    let ys: Vec<f64> = conjugation.iter().map(|d| d.matrix_element).collect();
    let conjugation_fit = fit_log_log(&xs, &ys);
    Ok(PerturbedReport {
        calibration,
        sweep,
        kronecker_rows,
        rate,
        conjugation,
        conjugation_fit,
    })
}

/// One level of the slow-convergence construction and, when small enough,
/// its simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowLevel {
    pub level: BetaLevel,
    /// `d_n·b = c_n·N`, checked in exact integers.
    pub identity_holds: bool,
    /// `"simulated"` or `"constructed, not simulated"`.
    pub status: String,
    pub a: Option<i64>,
    /// `max_j ||⟨T_N(0,d_n)ψ_j,ψ_j⟩| − 1|` over the joint eigenbasis.
    pub shift_defect: Option<f64>,
    /// `min_j |⟨Op_N(f)ψ_j,ψ_j⟩ − ∫f|` minus the truncation tail.
    pub min_remainder: Option<f64>,
    pub max_remainder: Option<f64>,
    pub g_of_n: Option<f64>,
    /// `min_remainder·g(N)`.
    pub ratio: Option<f64>,
    /// `|1 − e^{−2d}/(1 − e^{−d})|`.
    pub proof_constant: f64,
    /// Perturbed runs: `max_j` of the difference between the perturbed and
    /// unperturbed centred matrix elements.
    pub consistency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowReport {
    pub provenance: Vec<String>,
    pub growth: Growth,
    pub quotients: Vec<String>,
    pub calibration: Option<SignCalibration>,
    pub levels: Vec<SlowLevel>,
}

impl SlowReport {
    /// Smallest `ratio` over the simulated levels.
    pub fn min_ratio(&self) -> Option<f64> {
        self.levels.iter().filter_map(|l| l.ratio).reduce(f64::min)
    }
}

pub fn run_slow_convergence(cfg: &ExperimentConfig) -> Result<SlowReport> {
    slow_levels(cfg, false)
}

pub fn run_perturbed_slow(cfg: &ExperimentConfig) -> Result<SlowReport> {
    slow_levels(cfg, true)
}

fn slow_levels(cfg: &ExperimentConfig, perturb: bool) -> Result<SlowReport> {
    let r = resolve(cfg)?;
    let growth = match &cfg.alpha.1 {
        super::config::AlphaSpec::Beta { growth } => *growth,
        _ => {
            return Err(Error::Config {
                field: "alpha".into(),
                message: "the second coordinate must be a beta construction".into(),
            })
        }
    };
    let construction = r
        .construction
        .as_ref()
        .expect("beta coordinate resolves to a construction");
    let calibration = if perturb {
        Some(calibrate(cfg, &r.v)?)
    } else {
        None
    };
    let h = if perturb {
        Some(h_series(&r.v, &r.alpha.0, None)?.h)
    } else {
        None
    };
    let ftilde = match &h {
        Some(h) => {
            let mut ft = compose_shear(
                &r.f.poly,
                &h.scale(Complex64::new(-1.0, 0.0)),
                shear_grid(cfg, &r.f.poly, h),
            )?;
            ft.tail_bound += r.f.tail_bound;
            Some(ft)
        }
        None => None,
    };

    let mut levels = Vec::new();
    for lv in &construction.levels {
        let big_n = &lv.big_n;
        let identity_holds = &lv.d * &lv.shift_b == &lv.c * big_n;
        if !(&lv.d * &lv.shift_b).is_multiple_of(big_n) {
            return Err(Error::NotCommuting(format!(
                "level {}: d_n b is not divisible by N",
                lv.n
            )));
        }
        let d = lv.d.to_f64().unwrap_or(f64::INFINITY);
        let proof_constant = (1.0 - (-2.0 * d).exp() / (1.0 - (-d).exp())).abs();
        let mut out = SlowLevel {
            level: lv.clone(),
            identity_holds,
            status: "constructed, not simulated".into(),
            a: None,
            shift_defect: None,
            min_remainder: None,
            max_remainder: None,
            g_of_n: None,
            ratio: None,
            proof_constant,
            consistency: None,
        };
        if let Some(n) = big_n.to_usize().filter(|&n| n <= cfg.params.max_simulated) {
            simulate_level(
                cfg,
                &r,
                growth,
                lv,
                n,
                h.as_ref().zip(calibration.as_ref().map(|c| c.sign)),
                ftilde.as_ref(),
                &mut out,
            )?;
        }
        levels.push(out);
    }
    let mut provenance = provenance(cfg, &r.alpha);
    provenance.push(format!(
        "construction quotients: {:?}",
        construction
            .quotients
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
    ));
    Ok(SlowReport {
        provenance,
        growth,
        quotients: construction
            .quotients
            .iter()
            .map(BigInt::to_string)
            .collect(),
        calibration,
        levels,
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate_level(
    cfg: &ExperimentConfig,
    r: &Resolved,
    growth: Growth,
    lv: &BetaLevel,
    n: usize,
    shear: Option<(&TrigPolynomial, i32)>,
    ftilde: Option<&SmoothTruncation>,
    out: &mut SlowLevel,
) -> Result<()> {
    let nn = n as i64;
    let d = lv.d.to_i64().ok_or_else(|| Error::Overflow("d_n".into()))?;
    let b = lv
        .shift_b
        .mod_floor(&BigInt::from(nn))
        .to_i64()
        .expect("reduced mod N");
    let a = r
        .alpha
        .0
        .round_times(nn)
        .to_i64()
        .ok_or_else(|| Error::Overflow("round(N alpha_1)".into()))?;
    let shift = WeylIndex::new(0, d);
    let basis = joint_eigenbasis(
        &weyl_operator(shift, n),
        &weyl_operator(WeylIndex::new(-b, a), n),
    )?;
    let table = RootTable::new(n);
    let shift_defect = basis
        .vectors
        .iter()
        .map(|v| (weyl_expectation(shift, v.entries(), &table).norm() - 1.0).abs())
        .fold(0.0, f64::max);

    let maxf = cfg.precision.max_frequency;
    // re-expanded observables are quantized at their own support
    let centred =
        |basis: &EigenBasis, f: &SmoothTruncation, limit: i64| -> Result<Vec<Complex64>> {
            let op = quantize_truncation(f, n, limit)?;
            let mean = op.mean();
            Ok(basis
                .vectors
                .par_iter()
                .map(|v| op.expectation_unchecked(v.entries()) - mean)
                .collect())
        };
    let plain = centred(&basis, &r.f, maxf)?;
    let (values, tail) = match (shear, ftilde) {
        (Some((h, sign)), Some(ft)) => {
            let conj = shear_from_profile(h, n, -sign)?;
            let vectors = basis
                .vectors
                .par_iter()
                .map(|v| conj.apply_inverse(v))
                .collect::<Result<Vec<_>>>()?;
            let moved = EigenBasis {
                vectors,
                ..basis.clone()
            };
            let values = centred(&moved, ft, maxf.max(ft.poly.support_radius()))?;
            let consistency = values
                .iter()
                .zip(&plain)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            out.consistency = Some(consistency);
            (values, ft.tail_bound)
        }
        _ => (plain, r.f.tail_bound),
    };
    let mags: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min) - tail;
    let max = mags.iter().copied().fold(0.0, f64::max) + tail;
    let g = growth.eval(n as f64);
    out.status = "simulated".into();
    out.a = Some(a);
    out.shift_defect = Some(shift_defect);
    out.min_remainder = Some(min);
    out.max_remainder = Some(max);
    out.g_of_n = Some(g);
    out.ratio = Some(min * g);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgorovRow {
    pub map: String,
    pub n: usize,
    pub operator_norm: Option<f64>,
    pub matrix_element: Option<f64>,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgorovReport {
    pub provenance: Vec<String>,
    pub calibration: SignCalibration,
    pub rows: Vec<EgorovRow>,
    /// Largest Kronecker defect, operator norm or matrix element.
    pub kronecker_max: f64,
    pub shear_fit: Option<LogLogFit>,
    pub perturbed_fit: Option<LogLogFit>,
}

pub const EGOROV_HEADER: &str = "N,map,operator_norm,matrix_element,budget";

impl EgorovReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for l in &self.provenance {
            let _ = writeln!(s, "# {l}");
        }
        let _ = writeln!(s, "{EGOROV_HEADER}");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e}",
                r.n,
                r.map,
                opt(r.operator_norm),
                opt(r.matrix_element),
                r.budget
            );
        }
        s
    }
}

pub fn run_egorov(cfg: &ExperimentConfig) -> Result<EgorovReport> {
    let r = resolve(cfg)?;
    let dims = cfg.dims()?;
    let calibration = calibrate(cfg, &r.v)?;
    let probe: SmoothTruncation = TrigPolynomial::monomial(PROBE).into();
    let probe_circ = compose_shear(&probe.poly, &r.v, shear_grid(cfg, &probe.poly, &r.v))?;
    let alpha_f = (r.alpha.0.to_f64(), r.alpha.1.to_f64());
    let translated = compose_translation_real(&r.f.poly, alpha_f);
    let f_circ_map = compose_shear(&translated, &r.v, shear_grid(cfg, &translated, &r.v))?;
    let per_n = dims
        .par_iter()
        .map(|&n| -> Result<[EgorovRow; 3]> {
            let dense = n <= cfg.max_dense;
            // a fixed basis that diagonalizes none of the propagators
            let pb = eigenbasis_monomial(&weyl_operator(WeylIndex::new(1, 1), n));
            let k = kronecker(&r.alpha, n)?;
            let fk: SmoothTruncation = compose_translation_rational(&r.f.poly, k.a, n).into();
            let kr = egorov_defect(&k, &r.f, &fk, Some(&pb), dense, cfg.max_dense)?;

            let s = shear_from_profile(&r.v, n, calibration.sign)?;
            let sr = egorov_defect(&s, &probe, &probe_circ, Some(&pb), dense, cfg.max_dense)?;

            let p = perturbed(&r.alpha, &r.v, n, calibration.sign)?;
            let pr = egorov_defect(&p, &r.f, &f_circ_map, Some(&pb), dense, cfg.max_dense)?;
            let row = |map: &str, rec: crate::propagators::DefectRecord| EgorovRow {
                map: map.into(),
                n,
                operator_norm: rec.operator_norm,
                matrix_element: rec.matrix_element,
                budget: rec.budget,
            };
            Ok([row("kronecker", kr), row("shear", sr), row("perturbed", pr)])
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<EgorovRow> = per_n.into_iter().flatten().collect();
    let fit_of = |map: &str| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.map == map)
            .map(|r| (r.n as f64, r.matrix_element.unwrap_or(0.0)))
            .unzip();
        fit_log_log(&xs, &ys)
    };
    let kronecker_max = rows
        .iter()
        .filter(|r| r.map == "kronecker")
        .flat_map(|r| [r.operator_norm, r.matrix_element])
        .flatten()
        .fold(0.0, f64::max);
    let mut provenance = provenance(cfg, &r.alpha);
    provenance.push(format!("calibrated shear sign: {}", calibration.sign));
    Ok(EgorovReport {
        provenance,
        shear_fit: fit_of("shear"),
        perturbed_fit: fit_of("perturbed"),
        calibration,
        rows,
        kronecker_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophScanReport {
    pub provenance: Vec<String>,
    pub regime: Regime,
    pub scan: DiophantineReport,
}

pub fn run_dioph_scan(cfg: &ExperimentConfig) -> Result<DiophScanReport> {
    let r = resolve(cfg)?;
    let scan = diophantine_scan(&r.alpha, cfg.params.gamma, cfg.params.scan_n_max)?;
    let mut provenance = provenance(cfg, &r.alpha);
    provenance.push(format!(
        "gamma: {}, n_max: {}",
        cfg.params.gamma, cfg.params.scan_n_max
    ));
    Ok(DiophScanReport {
        provenance,
        regime: regime(&r.alpha.0, &r.alpha.1),
        scan,
    })
}
