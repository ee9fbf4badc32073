//! Mode-level interferometer parameters, presets and the flat config format.
//!
//! A config document is TOML with flat keys:
//!
//! ```toml
//! topology = "aligo"          # aligo | michelson | msi
//! gamma_w_hz = 1.5
//! gamma_s_hz = 0.3
//! delta_w_hz = -23.0
//! delta_s_hz = 42.4
//! delta_hz = 1.51
//! mass_kg = 40.0
//! arm_length_m = 4000.0
//! circulating_power_w = 24000.0
//! wavelength_nm = 1064.0      # optional
//! rz = 1.0                    # optional, amplitude reflectivity of the membrane
//! frequencies_are_angular = false   # optional
//! ```
//!
//! Frequencies are ordinary frequencies unless `frequencies_are_angular` is
//! set, in which case the `*_hz` keys hold rad/s values verbatim.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const DEFAULT_WAVELENGTH_NM: f64 = 1064.0;

/// Ordinary frequency in Hz to angular frequency in rad/s.
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

pub fn wavelength_nm_to_omega0(nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (nm * 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Fabry-Perot arms with power and signal recycling.
    Aligo,
    /// Plain Michelson with power and signal recycling.
    Michelson,
    /// Michelson-Sagnac with a partially reflective membrane.
    Msi,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Aligo => "aligo",
            Topology::Michelson => "michelson",
            Topology::Msi => "msi",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aligo" => Ok(Topology::Aligo),
            "michelson" => Ok(Topology::Michelson),
            "msi" => Ok(Topology::Msi),
            other => Err(Error::InvalidValue {
                key: "topology".into(),
                message: format!("unknown topology `{other}` (expected aligo, michelson or msi)"),
            }),
        }
    }
}

/// The six-parameter model consumed by the characteristic equation, plus the
/// scale quantities needed to form the spring strength. All rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub topology: Topology,
    /// Decay rate of the symmetric (power-recycled) mode.
    pub gamma_w: f64,
    /// Decay rate of the antisymmetric (signal-recycled) mode.
    pub gamma_s: f64,
    pub delta_w: f64,
    pub delta_s: f64,
    /// Arm detuning, equal and opposite in the two arms.
    pub delta_arm: f64,
    /// Mirror (aLIGO/Michelson) or membrane (MSI) mass in kg.
    pub mass: f64,
    pub arm_length: f64,
    /// Power circulating in the symmetric mode, W.
    pub circ_power: f64,
    /// Laser angular frequency.
    pub omega0: f64,
    /// Amplitude reflectivity of the middle mirror; 1 outside MSI.
    pub r_z: f64,
}

impl ModeParams {
    /// Reduced mass of the antisymmetric coordinate.
    pub fn reduced_mass(&self) -> f64 {
        match self.topology {
            Topology::Msi => self.mass,
            Topology::Aligo | Topology::Michelson => self.mass / 2.0,
        }
    }

    pub fn wave_number(&self) -> f64 {
        self.omega0 / SPEED_OF_LIGHT
    }

    /// One-way light travel time along the arm.
    pub fn tau(&self) -> f64 {
        self.arm_length / SPEED_OF_LIGHT
    }

    /// Arm detuning as it enters the characteristic equation. For MSI the
    /// coupling is reduced by the membrane reflectivity (δ² → R_z²δ²).
    pub fn effective_delta(&self) -> f64 {
        match self.topology {
            Topology::Msi => self.r_z * self.delta_arm,
            _ => self.delta_arm,
        }
    }

    /// Spring strength J₊ = k I₊ / (L μ), including the R_z² factor for MSI.
    pub fn spring_strength(&self) -> f64 {
        let j = self.wave_number() * self.circ_power / (self.arm_length * self.reduced_mass());
        match self.topology {
            Topology::Msi => self.r_z * self.r_z * j,
            _ => j,
        }
    }

    pub fn with_delta_arm(mut self, delta_arm: f64) -> Self {
        self.delta_arm = delta_arm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    key: key.into(),
                    message: format!("must be > 0, got {v}"),
                })
            }
        }
        fn finite(key: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    key: key.into(),
                    message: format!("must be finite, got {v}"),
                })
            }
        }

        positive("gamma_w_hz", self.gamma_w)?;
        positive("gamma_s_hz", self.gamma_s)?;
        finite("delta_w_hz", self.delta_w)?;
        finite("delta_s_hz", self.delta_s)?;
        finite("delta_hz", self.delta_arm)?;
        positive("mass_kg", self.mass)?;
        positive("arm_length_m", self.arm_length)?;
        if !(self.circ_power.is_finite() && self.circ_power >= 0.0) {
            return Err(Error::InvalidValue {
                key: "circulating_power_w".into(),
                message: format!("must be >= 0, got {}", self.circ_power),
            });
        }
        positive("wavelength_nm", self.omega0)?;
        if !(self.r_z > 0.0 && self.r_z <= 1.0) {
            return Err(Error::InvalidValue {
                key: "rz".into(),
                message: format!("must lie in (0, 1], got {}", self.r_z),
            });
        }
        match self.topology {
            Topology::Msi if self.r_z >= 1.0 => Err(Error::InvalidValue {
                key: "rz".into(),
                message:
                    "msi topology requires rz < 1; use aligo or michelson for a full reflector"
                        .into(),
            }),
            Topology::Aligo | Topology::Michelson if self.r_z != 1.0 => Err(Error::InvalidValue {
                key: "rz".into(),
                message: format!(
                    "{} topology requires rz = 1, got {}",
                    self.topology, self.r_z
                ),
            }),
            _ => Ok(()),
        }
    }

    /// Serialize to the flat config format. Values are written in rad/s with
    /// `frequencies_are_angular = true` so that reloading is exact.
    pub fn to_config_string(&self) -> String {
        let mut t = Table::new();
        t.insert(
            "topology".into(),
            Value::String(self.topology.as_str().into()),
        );
        t.insert("frequencies_are_angular".into(), Value::Boolean(true));
        t.insert("gamma_w_hz".into(), Value::Float(self.gamma_w));
        t.insert("gamma_s_hz".into(), Value::Float(self.gamma_s));
        t.insert("delta_w_hz".into(), Value::Float(self.delta_w));
        t.insert("delta_s_hz".into(), Value::Float(self.delta_s));
        t.insert("delta_hz".into(), Value::Float(self.delta_arm));
        t.insert("mass_kg".into(), Value::Float(self.mass));
        t.insert("arm_length_m".into(), Value::Float(self.arm_length));
        t.insert("circulating_power_w".into(), Value::Float(self.circ_power));
        t.insert("omega0_rad_s".into(), Value::Float(self.omega0));
        t.insert("rz".into(), Value::Float(self.r_z));
        toml::to_string(&t).expect("flat table always serializes")
    }
}

/// Flat key/value view of a parsed config document.
pub(crate) struct ConfigDoc {
    table: Table,
}

impl ConfigDoc {
    pub(crate) fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        Ok(Self { table })
    }

    pub(crate) fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub(crate) fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(Error::InvalidValue {
                key: key.into(),
                message: format!("expected a number, got {}", other.type_str()),
            }),
        }
    }

    pub(crate) fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| Error::MissingKey(key.into()))
    }

    pub(crate) fn opt_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(Error::InvalidValue {
                key: key.into(),
                message: format!("expected true or false, got {}", other.type_str()),
            }),
        }
    }

    pub(crate) fn topology(&self) -> Result<Topology> {
        match self.table.get("topology") {
            None => Err(Error::MissingKey("topology".into())),
            Some(Value::String(s)) => s.parse(),
            Some(other) => Err(Error::InvalidValue {
                key: "topology".into(),
                message: format!("expected a string, got {}", other.type_str()),
            }),
        }
    }

    /// Reads a frequency-like key and converts it to rad/s.
    pub(crate) fn rate(&self, key: &str, angular: bool) -> Result<f64> {
        let v = self.f64(key)?;
        Ok(if angular { v } else { hz_to_rad(v) })
    }

    pub(crate) fn omega0(&self) -> Result<f64> {
        let nm = self.opt_f64("wavelength_nm")?;
        let omega = self.opt_f64("omega0_rad_s")?;
        match (nm, omega) {
            (Some(_), Some(_)) => Err(Error::InvalidValue {
                key: "wavelength_nm".into(),
                message: "give either wavelength_nm or omega0_rad_s, not both".into(),
            }),
            (Some(nm), None) => {
                if nm.is_finite() && nm > 0.0 {
                    Ok(wavelength_nm_to_omega0(nm))
                } else {
                    Err(Error::InvalidValue {
                        key: "wavelength_nm".into(),
                        message: format!("must be > 0, got {nm}"),
                    })
                }
            }
            (None, Some(w)) => Ok(w),
            (None, None) => Ok(wavelength_nm_to_omega0(DEFAULT_WAVELENGTH_NM)),
        }
    }

    pub(crate) fn r_z(&self, topology: Topology) -> Result<f64> {
        match (self.opt_f64("rz")?, topology) {
            (Some(r), _) => Ok(r),
            (None, Topology::Msi) => Err(Error::MissingKey("rz".into())),
            (None, _) => Ok(1.0),
        }
    }
}

/// Parse a mode-level config document.
pub fn load_config(text: &str) -> Result<ModeParams> {
    let doc = ConfigDoc::parse(text)?;
    let angular = doc.opt_bool("frequencies_are_angular")?.unwrap_or(false);
    let topology = doc.topology()?;
    let params = ModeParams {
        topology,
        gamma_w: doc.rate("gamma_w_hz", angular)?,
        gamma_s: doc.rate("gamma_s_hz", angular)?,
        delta_w: doc.rate("delta_w_hz", angular)?,
        delta_s: doc.rate("delta_s_hz", angular)?,
        delta_arm: doc.rate("delta_hz", angular)?,
        mass: doc.f64("mass_kg")?,
        arm_length: doc.f64("arm_length_m")?,
        circ_power: doc.f64("circulating_power_w")?,
        omega0: doc.omega0()?,
        r_z: doc.r_z(topology)?,
    };
    params.validate()?;
    Ok(params)
}

/// Parameter sets from the aLIGO and Michelson-Sagnac tables. The `-equal`
/// variants use the bracketed equal-decay values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Aligo,
    AligoEqual,
    Msi,
    MsiEqual,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Aligo,
        Preset::AligoEqual,
        Preset::Msi,
        Preset::MsiEqual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Aligo => "aligo",
            Preset::AligoEqual => "aligo-equal",
            Preset::Msi => "msi",
            Preset::MsiEqual => "msi-equal",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Aligo => "aLIGO, unequal decay rates (1.5 / 0.3 Hz), arm detuning 1.51 Hz",
            Preset::AligoEqual => "aLIGO, equal decay rates (3.0 Hz), arm detuning 4.6 Hz",
            Preset::Msi => "Michelson-Sagnac, unequal decay rates (5 / 1 kHz), arm detuning 5 kHz",
            Preset::MsiEqual => "Michelson-Sagnac, equal decay rates (10 kHz), arm detuning 15 kHz",
        }
    }

    /// Table values in Hz (γ_w, γ_s, δ_w, δ_s, δ).
    fn rates_hz(self) -> [f64; 5] {
        match self {
            Preset::Aligo => [1.5, 0.3, -23.0, 42.4, 1.51],
            Preset::AligoEqual => [3.0, 3.0, -23.0, 42.4, 4.6],
            Preset::Msi => [5.0e3, 1.0e3, -77.2e3, 141.0e3, 5.0e3],
            Preset::MsiEqual => [10.0e3, 10.0e3, -77.2e3, 141.0e3, 15.0e3],
        }
    }

    // The MSI circulating power 0.318 W happens to look like 1/π.
    #[allow(clippy::approx_constant)]
    pub fn params(self) -> ModeParams {
        let [gw, gs, dw, ds, d] = self.rates_hz().map(hz_to_rad);
        let omega0 = wavelength_nm_to_omega0(DEFAULT_WAVELENGTH_NM);
        match self {
            Preset::Aligo | Preset::AligoEqual => ModeParams {
                topology: Topology::Aligo,
                gamma_w: gw,
                gamma_s: gs,
                delta_w: dw,
                delta_s: ds,
                delta_arm: d,
                mass: 40.0,
                arm_length: 4000.0,
                circ_power: 24.0e3,
                omega0,
                r_z: 1.0,
            },
            Preset::Msi | Preset::MsiEqual => ModeParams {
                topology: Topology::Msi,
                gamma_w: gw,
                gamma_s: gs,
                delta_w: dw,
                delta_s: ds,
                delta_arm: d,
                mass: 1.0e-10,
                arm_length: 0.087,
                circ_power: 0.318,
                omega0,
                r_z: 0.17f64.sqrt(),
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.into()))
    }
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Result<ModeParams> {
    Ok(name.parse::<Preset>()?.params())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALIGO_DOC: &str = r#"
topology = "aligo"
gamma_w_hz = 1.5
gamma_s_hz = 0.3
delta_w_hz = -23.0
delta_s_hz = 42.4
delta_hz = 1.51
mass_kg = 40
arm_length_m = 4000
circulating_power_w = 24000
"#;

    #[test]
    fn hz_keys_are_scaled_by_two_pi() {
        let p = load_config(ALIGO_DOC).unwrap();
        assert_eq!(p.gamma_w, 2.0 * PI * 1.5);
        assert_eq!(p.delta_w, 2.0 * PI * -23.0);
        assert_eq!(p.r_z, 1.0);
        assert_eq!(p, Preset::Aligo.params());
    }

    #[test]
    fn angular_flag_skips_conversion() {
        let doc = format!("{ALIGO_DOC}\nfrequencies_are_angular = true\n");
        let p = load_config(&doc).unwrap();
        assert_eq!(p.gamma_w, 1.5);
        assert_eq!(p.delta_arm, 1.51);
    }

    #[test]
    fn negative_mass_names_key() {
        let doc = ALIGO_DOC.replace("mass_kg = 40", "mass_kg = -1");
        let err = load_config(&doc).unwrap_err();
        assert!(err.to_string().contains("mass_kg"), "{err}");
    }

    #[test]
    fn missing_and_non_numeric_keys_are_named() {
        let doc = ALIGO_DOC.replace("delta_hz = 1.51\n", "");
        assert!(matches!(load_config(&doc), Err(Error::MissingKey(k)) if k == "delta_hz"));

        let doc = ALIGO_DOC.replace("gamma_s_hz = 0.3", "gamma_s_hz = \"fast\"");
        let err = load_config(&doc).unwrap_err();
        assert!(err.to_string().contains("gamma_s_hz"), "{err}");
    }

    #[test]
    fn topology_constrains_rz() {
        let doc = format!("{ALIGO_DOC}rz = 0.5\n");
        assert!(load_config(&doc).unwrap_err().to_string().contains("rz"));

        let doc = ALIGO_DOC.replace("\"aligo\"", "\"msi\"");
        assert!(matches!(load_config(&doc), Err(Error::MissingKey(k)) if k == "rz"));
        let doc = format!("{doc}rz = 1.0\n");
        assert!(load_config(&doc).unwrap_err().to_string().contains("rz"));
    }

    #[test]
    fn wavelength_override() {
        let doc = format!("{ALIGO_DOC}wavelength_nm = 532\n");
        let p = load_config(&doc).unwrap();
        assert!((p.omega0 / Preset::Aligo.params().omega0 - 1064.0 / 532.0).abs() < 1e-14);
    }

    #[test]
    fn preset_tables() {
        let p = preset("aligo").unwrap();
        assert_eq!(p.gamma_w, hz_to_rad(1.5));
        assert_eq!(p.gamma_s, hz_to_rad(0.3));
        assert_eq!(p.delta_w, hz_to_rad(-23.0));
        assert_eq!(p.delta_s, hz_to_rad(42.4));
        assert_eq!(p.delta_arm, hz_to_rad(1.51));
        assert_eq!((p.mass, p.arm_length, p.circ_power), (40.0, 4000.0, 24.0e3));

        let e = preset("aligo-equal").unwrap();
        assert_eq!(e.gamma_w, hz_to_rad(3.0));
        assert_eq!(e.gamma_s, hz_to_rad(3.0));
        assert_eq!(e.delta_arm, hz_to_rad(4.6));
        assert_eq!(e.delta_w, p.delta_w);

        let m = preset("msi").unwrap();
        assert_eq!(m.topology, Topology::Msi);
        assert_eq!(m.delta_s, hz_to_rad(141.0e3));
        assert!((m.r_z * m.r_z - 0.17).abs() < 1e-15);
        assert_eq!(m.reduced_mass(), m.mass);
        assert_eq!(p.reduced_mass(), 20.0);

        assert!(matches!(preset("ligo"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn all_presets_are_valid() {
        for p in Preset::ALL {
            p.params().validate().unwrap();
        }
    }

    #[test]
    fn config_round_trip_is_exact() {
        for p in Preset::ALL {
            let params = p.params();
            let back = load_config(&params.to_config_string()).unwrap();
            assert_eq!(back, params);
        }
    }
}
