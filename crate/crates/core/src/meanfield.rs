//! Effective mode parameters and mean fields from the mirror-level
//! description of the interferometer.
//!
//! aLIGO: Fabry-Perot arms with input transmittance `T` give the arm
//! bandwidth γ_T = T²/4τ (τ = L/c). A recycling mirror of amplitude
//! reflectivity R and round-trip phase φ turns it into
//!
//! ```text
//! Γ = γ − iδ = γ_T (1 + R e^{iφ}) / (1 − R e^{iφ})
//! ```
//!
//! Michelson / Michelson-Sagnac: in the long-wave limit the mode rates are
//! Γ = (1 − r̃)/(r̃ τ′) with τ′ = 2(L + l)/c and r̃ = R e^{iφ} (R_z ± iT_z).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ConfigDoc, ModeParams, Topology, HBAR, SPEED_OF_LIGHT};

/// Relative threshold for every denominator guard in this module.
const SINGULAR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub topology: Topology,
    /// Amplitude transmittance of the arm input mirrors (aLIGO only).
    pub t_arm: f64,
    /// Amplitude reflectivity of the power-recycling mirror.
    pub r_w: f64,
    /// Amplitude reflectivity of the signal-recycling mirror.
    pub r_s: f64,
    /// Round-trip phase of the power-recycling cavity, rad.
    pub phi_w: f64,
    pub phi_s: f64,
    pub arm_length: f64,
    /// Beam splitter to recycling mirror distance.
    pub recycling_length: f64,
    /// Distance from the arm mirror to the membrane (MSI only).
    pub membrane_distance: f64,
    /// Pump power entering through the power-recycling mirror, W.
    pub pump_power: f64,
    pub omega0: f64,
    pub delta_arm: f64,
    pub r_z: f64,
    pub mass: f64,
}

impl PhysicalConfig {
    /// One-way (aLIGO) or round-trip (Michelson, MSI) light time used by the
    /// coupled-mode equations.
    pub fn tau(&self) -> f64 {
        match self.topology {
            Topology::Aligo => self.arm_length / SPEED_OF_LIGHT,
            Topology::Michelson | Topology::Msi => {
                2.0 * (self.arm_length + self.membrane_distance) / SPEED_OF_LIGHT
            }
        }
    }

    /// Arm bandwidth γ_T = T²/4τ.
    pub fn gamma_t(&self) -> f64 {
        self.t_arm * self.t_arm / (4.0 * self.tau())
    }

    /// Transmittance of a lossless mirror with amplitude reflectivity `r`.
    pub fn lossless_transmittance(r: f64) -> f64 {
        (1.0 - r * r).max(0.0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |key: &str, v: f64| -> Result<()> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    key: key.into(),
                    message: format!("must lie in (0, 1), got {v}"),
                })
            }
        };
        let positive = |key: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    key: key.into(),
                    message: format!("must be > 0, got {v}"),
                })
            }
        };
        if self.topology == Topology::Aligo {
            unit_open("t_arm", self.t_arm)?;
        }
        if !(0.0..1.0).contains(&self.r_w) {
            return Err(Error::InvalidValue {
                key: "r_w".into(),
                message: format!("must lie in [0, 1), got {}", self.r_w),
            });
        }
        if !(0.0..1.0).contains(&self.r_s) {
            return Err(Error::InvalidValue {
                key: "r_s".into(),
                message: format!("must lie in [0, 1), got {}", self.r_s),
            });
        }
        positive("arm_length_m", self.arm_length)?;
        positive("mass_kg", self.mass)?;
        positive("wavelength_nm", self.omega0)?;
        if !(self.pump_power.is_finite() && self.pump_power >= 0.0) {
            return Err(Error::InvalidValue {
                key: "pump_power_w".into(),
                message: format!("must be >= 0, got {}", self.pump_power),
            });
        }
        if !(self.recycling_length.is_finite() && self.recycling_length >= 0.0) {
            return Err(Error::InvalidValue {
                key: "recycling_length_m".into(),
                message: format!("must be >= 0, got {}", self.recycling_length),
            });
        }
        if self.recycling_length >= self.arm_length / 100.0 {
            log::warn!(
                "recycling length {} m is not small compared with the arm length {} m",
                self.recycling_length,
                self.arm_length
            );
        }
        match self.topology {
            Topology::Msi => unit_open("rz", self.r_z),
            _ if self.r_z != 1.0 => Err(Error::InvalidValue {
                key: "rz".into(),
                message: format!(
                    "{} topology requires rz = 1, got {}",
                    self.topology, self.r_z
                ),
            }),
            _ => Ok(()),
        }
    }

    /// Effective mode parameters for the configured topology, with the
    /// circulating power taken from the mean fields.
    pub fn mode_params(&self) -> Result<ModeParams> {
        match self.topology {
            Topology::Aligo => aligo_mode_params(self),
            Topology::Michelson => michelson_mode_params(self),
            Topology::Msi => msi_mode_params(self),
        }
    }
}

/// Mean amplitudes normalized so that ħω₀|E|² is a power in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFields {
    pub e_plus: Complex64,
    pub e_minus: Complex64,
    pub i_plus: f64,
    pub i_minus: f64,
    /// Mean power leaving through the signal-recycling mirror.
    pub i_out: f64,
}

impl MeanFields {
    /// Mean fields implied by mode-level parameters alone: E₊ is taken real
    /// with ħω₀|E₊|² = I₊ and E₋ = ξE₊.
    pub fn from_mode_params(params: &ModeParams) -> Self {
        let e_plus = Complex64::new((params.circ_power / (HBAR * params.omega0)).sqrt(), 0.0);
        let xi = coupling_ratio(params.effective_delta(), params.gamma_s, params.delta_s);
        let e_minus = xi * e_plus;
        Self::assemble(e_plus, e_minus, params.omega0, params.gamma_s, params.tau())
    }

    fn assemble(
        e_plus: Complex64,
        e_minus: Complex64,
        omega0: f64,
        gamma_s: f64,
        tau: f64,
    ) -> Self {
        let i_plus = HBAR * omega0 * e_plus.norm_sqr();
        let i_minus = HBAR * omega0 * e_minus.norm_sqr();
        Self {
            e_plus,
            e_minus,
            i_plus,
            i_minus,
            i_out: 2.0 * gamma_s * tau * i_minus,
        }
    }
}

/// ξ = iδ/(γ_s − iδ_s), the ratio E₋/E₊ of the mean fields.
pub fn coupling_ratio(delta: f64, gamma_s: f64, delta_s: f64) -> Complex64 {
    Complex64::new(0.0, delta) / Complex64::new(gamma_s, -delta_s)
}

/// γ, δ of one recycled mode of the aLIGO topology.
fn recycled_arm_mode(gamma_t: f64, r: f64, phi: f64) -> Result<(f64, f64)> {
    let theta2 = Complex64::from_polar(1.0, phi);
    let den = Complex64::new(1.0, 0.0) - r * theta2;
    if den.norm() < SINGULAR_REL {
        return Err(Error::Singular {
            context: "recycling cavity 1 - R Θ²",
            magnitude: den.norm(),
        });
    }
    let den2 = den.norm_sqr();
    let gamma = gamma_t * (1.0 - r * r) / den2;
    // R(Θ² − Θ*²) = 2iR sin φ; δ is minus the imaginary part of Γ.
    let delta = -gamma_t * 2.0 * r * phi.sin() / den2;
    Ok((gamma, delta))
}

/// e^{iα} = Θ|1 − RΘ²| / (1 − RΘ²) with Θ = e^{iφ/2}.
fn pump_phase(r: f64, phi: f64) -> Complex64 {
    let theta = Complex64::from_polar(1.0, phi / 2.0);
    let den = Complex64::new(1.0, 0.0) - r * theta * theta;
    theta * den.norm() / den
}

pub fn aligo_mode_params(cfg: &PhysicalConfig) -> Result<ModeParams> {
    if cfg.topology != Topology::Aligo {
        return Err(Error::Topology(format!(
            "aligo_mode_params called for {} topology",
            cfg.topology
        )));
    }
    cfg.validate()?;
    let gamma_t = cfg.gamma_t();
    let (gamma_w, delta_w) = recycled_arm_mode(gamma_t, cfg.r_w, cfg.phi_w)?;
    let (gamma_s, delta_s) = recycled_arm_mode(gamma_t, cfg.r_s, cfg.phi_s)?;
    finish_mode_params(cfg, gamma_w, gamma_s, delta_w, delta_s)
}

/// Long-wave rate Γ = (1 − r̃)/(r̃ τ′).
fn long_wave_rate(r_tilde: Complex64, tau: f64, key: &str) -> Result<(f64, f64)> {
    if r_tilde.norm() < SINGULAR_REL {
        return Err(Error::InvalidValue {
            key: key.into(),
            message: "recycling mirror reflectivity must be nonzero".into(),
        });
    }
    let g = (Complex64::new(1.0, 0.0) - r_tilde) / (r_tilde * tau);
    if g.re <= 0.0 {
        return Err(Error::InvalidValue {
            key: key.into(),
            message: format!("long-wave decay rate is not positive ({:e} rad/s); phase outside the approximation", g.re),
        });
    }
    Ok((g.re, -g.im))
}

fn membrane_mode_params(cfg: &PhysicalConfig, r_z: f64) -> Result<ModeParams> {
    let tau = cfg.tau();
    let t_z = PhysicalConfig::lossless_transmittance(r_z);
    let r_w = Complex64::from_polar(cfg.r_w, cfg.phi_w) * Complex64::new(r_z, t_z);
    let r_s = Complex64::from_polar(cfg.r_s, cfg.phi_s) * Complex64::new(r_z, -t_z);
    let (gamma_w, delta_w) = long_wave_rate(r_w, tau, "r_w")?;
    let (gamma_s, delta_s) = long_wave_rate(r_s, tau, "r_s")?;
    finish_mode_params(cfg, gamma_w, gamma_s, delta_w, delta_s)
}

pub fn msi_mode_params(cfg: &PhysicalConfig) -> Result<ModeParams> {
    if cfg.topology != Topology::Msi {
        return Err(Error::Topology(format!(
            "msi_mode_params called for {} topology; use the aligo or michelson path",
            cfg.topology
        )));
    }
    cfg.validate()?;
    membrane_mode_params(cfg, cfg.r_z)
}

pub fn michelson_mode_params(cfg: &PhysicalConfig) -> Result<ModeParams> {
    if cfg.topology != Topology::Michelson {
        return Err(Error::Topology(format!(
            "michelson_mode_params called for {} topology",
            cfg.topology
        )));
    }
    cfg.validate()?;
    membrane_mode_params(cfg, 1.0)
}

fn finish_mode_params(
    cfg: &PhysicalConfig,
    gamma_w: f64,
    gamma_s: f64,
    delta_w: f64,
    delta_s: f64,
) -> Result<ModeParams> {
    let mut params = ModeParams {
        topology: cfg.topology,
        gamma_w,
        gamma_s,
        delta_w,
        delta_s,
        delta_arm: cfg.delta_arm,
        mass: cfg.mass,
        arm_length: cfg.arm_length,
        circ_power: 0.0,
        omega0: cfg.omega0,
        r_z: cfg.r_z,
    };
    params.circ_power = mean_fields(cfg, &params)?.i_plus;
    Ok(params)
}

/// Steady-state mean fields for a pump through the power-recycling mirror
/// and no pump at the dark port.
pub fn mean_fields(cfg: &PhysicalConfig, params: &ModeParams) -> Result<MeanFields> {
    let tau = cfg.tau();
    let delta = params.effective_delta();
    let gw = Complex64::new(params.gamma_w, -params.delta_w);
    let gs = Complex64::new(params.gamma_s, -params.delta_s);
    let den = gs * gw + delta * delta;
    let scale = (gs * gw).norm().max(delta * delta);
    if den.norm() < SINGULAR_REL * scale {
        return Err(Error::Singular {
            context: "Γ_s Γ_w + δ²",
            magnitude: den.norm(),
        });
    }
    let a_p = (cfg.pump_power / (HBAR * cfg.omega0)).sqrt();
    let drive = (params.gamma_w / tau).sqrt() * a_p * pump_phase(cfg.r_w, cfg.phi_w);
    let e_plus = drive * gs / den;
    let e_minus = drive * Complex64::new(0.0, delta) / den;
    Ok(MeanFields::assemble(
        e_plus,
        e_minus,
        cfg.omega0,
        params.gamma_s,
        tau,
    ))
}

/// Parse a mirror-level config document.
pub fn load_physical_config(text: &str) -> Result<PhysicalConfig> {
    let doc = ConfigDoc::parse(text)?;
    let angular = doc.opt_bool("frequencies_are_angular")?.unwrap_or(false);
    let topology = doc.topology()?;
    let t_arm = match topology {
        Topology::Aligo => doc.f64("t_arm")?,
        _ => doc.opt_f64("t_arm")?.unwrap_or(0.0),
    };
    let cfg = PhysicalConfig {
        topology,
        t_arm,
        r_w: doc.f64("r_w")?,
        r_s: doc.f64("r_s")?,
        phi_w: doc.f64("phi_w_rad")?,
        phi_s: doc.f64("phi_s_rad")?,
        arm_length: doc.f64("arm_length_m")?,
        recycling_length: doc.opt_f64("recycling_length_m")?.unwrap_or(0.0),
        membrane_distance: doc.opt_f64("membrane_distance_m")?.unwrap_or(0.0),
        pump_power: doc.f64("pump_power_w")?,
        omega0: doc.omega0()?,
        delta_arm: doc.rate("delta_hz", angular)?,
        r_z: doc.r_z(topology)?,
        mass: doc.f64("mass_kg")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// True when the document describes mirrors rather than mode rates.
pub fn is_physical_config(text: &str) -> bool {
    ConfigDoc::parse(text)
        .map(|d| d.has("r_w") || d.has("t_arm"))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::params::{wavelength_nm_to_omega0, Preset};

    fn aligo_cfg() -> PhysicalConfig {
        PhysicalConfig {
            topology: Topology::Aligo,
            t_arm: 0.1,
            r_w: 0.9,
            r_s: 0.8,
            phi_w: 0.1,
            phi_s: -0.3,
            arm_length: 4000.0,
            recycling_length: 10.0,
            membrane_distance: 0.0,
            pump_power: 10.0,
            omega0: wavelength_nm_to_omega0(1064.0),
            delta_arm: 2.0 * PI * 1.0,
            r_z: 1.0,
            mass: 40.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn no_signal_mirror_leaves_bare_arm() {
        let cfg = PhysicalConfig {
            r_s: 0.0,
            phi_s: 1.234,
            ..aligo_cfg()
        };
        let p = aligo_mode_params(&cfg).unwrap();
        assert!(rel(p.gamma_s, cfg.gamma_t()) < 1e-15);
        assert_eq!(p.delta_s, 0.0);
    }

    #[test]
    fn resonant_recycling_narrows_the_mode() {
        let r = 0.999;
        let cfg = PhysicalConfig {
            r_w: r,
            phi_w: 0.0,
            ..aligo_cfg()
        };
        let p = aligo_mode_params(&cfg).unwrap();
        let expected = cfg.gamma_t() * (1.0 - r * r) / ((1.0 - r) * (1.0 - r));
        assert!(rel(p.gamma_w, expected) < 1e-12);
        assert!(p.gamma_w > 1000.0 * cfg.gamma_t());
        assert_eq!(p.delta_w, 0.0);
    }

    #[test]
    fn closed_form_matches_direct_complex_evaluation() {
        let cfg = PhysicalConfig {
            t_arm: 0.01,
            r_w: 0.9,
            phi_w: 0.1,
            ..aligo_cfg()
        };
        let p = aligo_mode_params(&cfg).unwrap();
        // Γ = γ_T (1 + RΘ²)/(1 − RΘ²), split directly.
        let theta2 = Complex64::from_polar(1.0, cfg.phi_w);
        let one = Complex64::new(1.0, 0.0);
        let g = cfg.gamma_t() * (one + cfg.r_w * theta2) / (one - cfg.r_w * theta2);
        assert!(rel(p.gamma_w, g.re) < 1e-13);
        assert!(rel(p.delta_w, -g.im) < 1e-13);
    }

    #[test]
    fn degenerate_cavity_is_rejected() {
        // R → 1 on resonance with R forced to 1 by construction of the guard.
        let err = recycled_arm_mode(1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn balanced_arms_have_dark_port() {
        let cfg = PhysicalConfig {
            delta_arm: 0.0,
            ..aligo_cfg()
        };
        let p = aligo_mode_params(&cfg).unwrap();
        let mf = mean_fields(&cfg, &p).unwrap();
        assert_eq!(mf.e_minus, Complex64::new(0.0, 0.0));
        assert_eq!(mf.i_out, 0.0);
        assert!(mf.i_plus > 0.0);
    }

    #[test]
    fn antisymmetric_field_is_xi_times_symmetric() {
        let cfg = aligo_cfg();
        let p = aligo_mode_params(&cfg).unwrap();
        let mf = mean_fields(&cfg, &p).unwrap();
        let xi = Complex64::new(0.0, cfg.delta_arm) / Complex64::new(p.gamma_s, -p.delta_s);
        let ratio = mf.e_minus / mf.e_plus;
        assert!((ratio - xi).norm() <= 1e-12 * xi.norm());
        assert!(rel(mf.i_plus, p.circ_power) < 1e-15);
    }

    #[test]
    fn output_power_for_equal_decay_preset() {
        let p = Preset::AligoEqual.params();
        let mf = MeanFields::from_mode_params(&p);
        let xi2 = p.delta_arm.powi(2) / (p.gamma_s.powi(2) + p.delta_s.powi(2));
        assert!(rel(mf.i_minus, xi2 * p.circ_power) < 1e-12);
        assert!(rel(mf.i_out, 2.0 * p.gamma_s * p.tau() * mf.i_minus) < 1e-15);
        assert!(mf.i_out > 0.003 && mf.i_out < 0.3, "i_out = {}", mf.i_out);
    }

    fn msi_cfg(r_z: f64) -> PhysicalConfig {
        PhysicalConfig {
            topology: Topology::Msi,
            t_arm: 0.0,
            r_w: 0.99999,
            r_s: 0.99999,
            phi_w: 0.0,
            phi_s: 0.0,
            arm_length: 0.087,
            recycling_length: 0.0,
            membrane_distance: 0.0,
            pump_power: 1e-3,
            omega0: wavelength_nm_to_omega0(1064.0),
            delta_arm: 2.0 * PI * 5e3,
            r_z,
            mass: 1e-10,
        }
    }

    #[test]
    fn msi_requires_partial_membrane() {
        let cfg = msi_cfg(1.0);
        assert!(msi_mode_params(&cfg).is_err());
    }

    #[test]
    fn msi_symmetric_recycling_gives_equal_decay() {
        // Membrane phase must be compensated to keep Γ in the long-wave regime.
        let r_z = 0.17f64.sqrt();
        let mut cfg = msi_cfg(r_z);
        let theta = PhysicalConfig::lossless_transmittance(r_z).atan2(r_z);
        cfg.phi_w = -theta;
        cfg.phi_s = theta;
        let p = msi_mode_params(&cfg).unwrap();
        assert!(rel(p.gamma_w, p.gamma_s) < 1e-12);
        assert!(p.gamma_w > 0.0);
    }

    #[test]
    fn msi_reduces_to_michelson() {
        let mut cfg = msi_cfg(1.0 - 1e-12);
        cfg.phi_w = 1e-5;
        cfg.phi_s = -2e-5;
        cfg.r_w = 0.9999;
        let m = msi_mode_params(&cfg).unwrap();
        let tau = cfg.tau();
        // Exact forms γ = (cos φ′ − R)/(Rτ), δ = sin φ′/(Rτ), with the
        // membrane phase θ folded into φ′ = φ ± θ.
        let theta = PhysicalConfig::lossless_transmittance(cfg.r_z).atan2(cfg.r_z);
        for (r, phi, g, d) in [
            (cfg.r_w, cfg.phi_w + theta, m.gamma_w, m.delta_w),
            (cfg.r_s, cfg.phi_s - theta, m.gamma_s, m.delta_s),
        ] {
            let g0 = (phi.cos() - r) / (r * tau);
            let d0 = phi.sin() / (r * tau);
            assert!(rel(g, g0) < 1e-6, "{g} vs {g0}");
            assert!(
                (d - d0).abs() < 1e-6 * g0.abs().max(d0.abs()),
                "{d} vs {d0}"
            );
        }
        let mich = michelson_mode_params(&PhysicalConfig {
            topology: Topology::Michelson,
            r_z: 1.0,
            ..cfg
        })
        .unwrap();
        assert!(rel(mich.gamma_w, m.gamma_w) < 1e-6);
    }

    #[test]
    fn msi_long_wave_agrees_with_unsimplified_rate() {
        let r_z = 0.17f64.sqrt();
        let t_z = PhysicalConfig::lossless_transmittance(r_z);
        let mut cfg = msi_cfg(r_z);
        let theta = t_z.atan2(r_z);
        cfg.phi_w = -theta + 2e-5;
        cfg.phi_s = theta - 1e-5;
        let p = msi_mode_params(&cfg).unwrap();
        let tau = cfg.tau();
        assert!(cfg.delta_arm * tau < 1e-3);
        let r_w = Complex64::from_polar(cfg.r_w, cfg.phi_w);
        let cos_dt = (cfg.delta_arm * tau).cos();
        let one = Complex64::new(1.0, 0.0);
        let full = (one - r_w * Complex64::new(cos_dt * r_z, t_z))
            / (r_w * tau * Complex64::new(r_z, t_z));
        assert!(
            rel(p.gamma_w, full.re) < 0.01,
            "{} vs {}",
            p.gamma_w,
            full.re
        );
        assert!(rel(p.delta_w, -full.im) < 0.01);
    }

    #[test]
    fn mode_params_continuous_in_phase() {
        let cfg = aligo_cfg();
        let a = aligo_mode_params(&cfg).unwrap();
        let b = aligo_mode_params(&PhysicalConfig {
            phi_w: cfg.phi_w + 1e-9,
            ..cfg
        })
        .unwrap();
        assert!(rel(b.gamma_w, a.gamma_w) < 1e-7);
        assert!(rel(b.delta_w, a.delta_w) < 1e-7);
    }

    #[test]
    fn physical_config_document() {
        let text = r#"
topology = "aligo"
t_arm = 0.1
r_w = 0.9
r_s = 0.8
phi_w_rad = 0.1
phi_s_rad = -0.3
arm_length_m = 4000
recycling_length_m = 10
pump_power_w = 10
delta_hz = 1.0
mass_kg = 40
"#;
        assert!(is_physical_config(text));
        let cfg = load_physical_config(text).unwrap();
        assert_eq!(cfg, aligo_cfg());
        let bad = text.replace("r_w = 0.9", "r_w = 1.5");
        assert!(load_physical_config(&bad)
            .unwrap_err()
            .to_string()
            .contains("r_w"));
    }
}
