//! End-to-end pipeline, parameter sweeps and δ̃_w steering.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    characteristic_polynomial, derive_coefficients, CharPoly, DerivedCoefficients,
};
use crate::error::{Error, Result};
use crate::meanfield::{mean_fields, PhysicalConfig};
use crate::params::{hz_to_rad, rad_to_hz, ModeParams};
use crate::stability::{
    first_order_roots, min_detuning, roots_for, routh_hurwitz, solve_roots, stability_boundary,
    zero_order_roots, PerturbativeRoots, RootReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: ModeParams,
    pub coefficients: DerivedCoefficients,
    pub polynomial: CharPoly,
    pub roots: RootReport,
    pub rh_failing_row: Option<usize>,
    pub rh_degenerate: bool,
    pub perturbative: Option<PerturbativeRoots>,
    /// Why the perturbative block is missing, when it is.
    pub perturbative_error: Option<String>,
    /// Physical arm detuning bound, Hz (divided by R_z for MSI).
    pub min_detuning_hz: Option<f64>,
    pub output_power_w: Option<f64>,
    pub stable: bool,
}

pub fn analyze(params: &ModeParams, physical: Option<&PhysicalConfig>) -> Result<AnalysisReport> {
    let coefficients = derive_coefficients(params)?;
    let polynomial = characteristic_polynomial(&coefficients)?;
    let roots = solve_roots(&polynomial)?;
    let rh = routh_hurwitz(&polynomial);

    let (perturbative, perturbative_error) =
        match zero_order_roots(&coefficients).and_then(|z| first_order_roots(&coefficients, &z)) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let min_detuning_hz = min_detuning(&coefficients)
        .ok()
        .map(|d| rad_to_hz(d / delta_scale(params)));
    let output_power_w = match physical {
        Some(cfg) => Some(mean_fields(cfg, params)?.i_out),
        None => None,
    };
    Ok(AnalysisReport {
        params: *params,
        coefficients,
        polynomial,
        stable: roots.stable,
        roots,
        rh_failing_row: rh.failing_row,
        rh_degenerate: rh.degenerate,
        perturbative,
        perturbative_error,
        min_detuning_hz,
        output_power_w,
    })
}

/// Ratio of the effective detuning to the physical one.
pub fn delta_scale(params: &ModeParams) -> f64 {
    match params.topology {
        crate::params::Topology::Msi => params.r_z,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    DeltaHz,
    GammaWHz,
    GammaSHz,
    DeltaWHz,
    DeltaSHz,
    CirculatingPowerW,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::DeltaHz,
        SweepParam::GammaWHz,
        SweepParam::GammaSHz,
        SweepParam::DeltaWHz,
        SweepParam::DeltaSHz,
        SweepParam::CirculatingPowerW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::DeltaHz => "delta_hz",
            SweepParam::GammaWHz => "gamma_w_hz",
            SweepParam::GammaSHz => "gamma_s_hz",
            SweepParam::DeltaWHz => "delta_w_hz",
            SweepParam::DeltaSHz => "delta_s_hz",
            SweepParam::CirculatingPowerW => "circulating_power_w",
        }
    }

    /// `params` with this parameter set to `value` (Hz or W).
    pub fn apply(self, params: &ModeParams, value: f64) -> ModeParams {
        let mut p = *params;
        match self {
            SweepParam::DeltaHz => p.delta_arm = hz_to_rad(value),
            SweepParam::GammaWHz => p.gamma_w = hz_to_rad(value),
            SweepParam::GammaSHz => p.gamma_s = hz_to_rad(value),
            SweepParam::DeltaWHz => p.delta_w = hz_to_rad(value),
            SweepParam::DeltaSHz => p.delta_s = hz_to_rad(value),
            SweepParam::CirculatingPowerW => p.circ_power = value,
        }
        p
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidValue {
                key: "param".into(),
                message: format!(
                    "unknown sweep parameter `{s}` (expected one of {})",
                    SweepParam::ALL.map(|p| p.name()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// rad/s; NaN when the point could not be evaluated.
    pub max_real: f64,
    pub stable: bool,
    pub rh_stable: bool,
    /// The perturbative closed forms are unavailable at this point
    /// (complex p or double resonance).
    pub perturbative_degenerate: bool,
    pub error: Option<String>,
}

fn sweep_point(params: &ModeParams, value: f64) -> SweepRow {
    let eval = || -> Result<(RootReport, bool)> {
        let coefs = derive_coefficients(params)?;
        let report = solve_roots(&characteristic_polynomial(&coefs)?)?;
        Ok((report, zero_order_roots(&coefs).is_err()))
    };
    match eval() {
        Ok((r, degenerate)) => SweepRow {
            value,
            max_real: r.max_real,
            stable: r.stable,
            rh_stable: r.rh_stable,
            perturbative_degenerate: degenerate,
            error: None,
        },
        Err(e) => SweepRow {
            value,
            max_real: f64::NAN,
            stable: false,
            rh_stable: false,
            perturbative_degenerate: true,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates `steps` evenly spaced values from `from` to `to`; a single step
/// evaluates `from`.
pub fn sweep(
    params: &ModeParams,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<SweepRow>> {
    if steps == 0 {
        return Err(Error::InvalidValue {
            key: "steps".into(),
            message: "must be at least 1".into(),
        });
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidValue {
            key: "from".into(),
            message: "sweep bounds must be finite".into(),
        });
    }
    let values = crate::dynamics::linear_grid(from, to, steps);
    Ok(values
        .par_iter()
        .map(|&v| sweep_point(&param.apply(params, v), v))
        .collect())
}

pub const SWEEP_CSV_HEADER: &str = "value,max_real,stable,rh_stable,perturbative_degenerate";

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:?},{:?},{},{},{}",
            r.value, r.max_real, r.stable, r.rh_stable, r.perturbative_degenerate
        )?;
    }
    Ok(())
}

/// δ̃_w + δ₁ − Δ as a function of the δ_w input.
fn steering_residual(params: &ModeParams, delta_w: f64, offset: f64) -> Result<f64> {
    let mut p = *params;
    p.delta_w = delta_w;
    let coefs = derive_coefficients(&p)?;
    let zero = zero_order_roots(&coefs)?;
    Ok(coefs.td_w + zero.delta1 - offset)
}

/// Adjusts the δ_w input so that the computed δ̃_w equals −δ₁ + Δ, where
/// `offset` is Δ in rad/s.
pub fn steer_delta_w(params: &ModeParams, offset: f64) -> Result<ModeParams> {
    let steer_err = |msg: String| Error::Steering(msg);
    let f = |x: f64| steering_residual(params, x, offset).map_err(|e| steer_err(e.to_string()));

    let coefs = derive_coefficients(params).map_err(|e| steer_err(e.to_string()))?;
    let delta1 = zero_order_roots(&coefs)
        .map_err(|e| steer_err(e.to_string()))?
        .delta1;
    // δ̃_w ≈ δ_w to leading order, so start from the target itself.
    let x0 = -delta1 + offset;
    let f0 = f(x0)?;
    if f0 == 0.0 {
        let mut p = *params;
        p.delta_w = x0;
        return Ok(p);
    }
    let mut h = 1e-3 * x0.abs().max(params.gamma_w);
    let (mut lo, mut hi) = (x0, x0);
    let mut bracket = None;
    for _ in 0..80 {
        let (a, b) = (x0 - h, x0 + h);
        for x in [a, b] {
            if let Ok(fx) = f(x) {
                if fx.signum() != f0.signum() {
                    bracket = Some(if x < x0 { (x, x0) } else { (x0, x) });
                    break;
                }
            }
        }
        if bracket.is_some() {
            break;
        }
        h *= 1.6;
        lo = a;
        hi = b;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        steer_err(format!(
            "no sign change of the steering residual for delta_w in [{:.4}, {:.4}] Hz",
            rad_to_hz(lo),
            rad_to_hz(hi)
        ))
    })?;
    let mut fa = f(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 || (b - a).abs() <= 1e-13 * m.abs().max(1.0) {
            a = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut p = *params;
    p.delta_w = 0.5 * (a + b);
    Ok(p)
}

/// Smallest arm detuning (rad/s) at which the exact verdict first changes
/// from its value at δ = 0, found by an upward scan over `steps` cells of
/// (0, `delta_max`] and then bisection. `None` if it never changes.
pub fn first_verdict_change(
    params: &ModeParams,
    delta_max: f64,
    steps: usize,
) -> Result<Option<f64>> {
    let verdict = |d: f64| roots_for(&params.with_delta_arm(d)).map(|r| r.stable);
    let start = verdict(0.0)?;
    let mut lower = 0.0;
    for k in 1..=steps {
        let d = delta_max * k as f64 / steps as f64;
        if verdict(d)? != start {
            return stability_boundary(params, [lower, d]).map(Some);
        }
        lower = d;
    }
    Ok(None)
}
