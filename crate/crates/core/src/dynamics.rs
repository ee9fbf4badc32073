//! Coupled-mode coefficients, the characteristic polynomial and the
//! mechanical susceptibility of the antisymmetric mode.
//!
//! With z₊ fixed the system has four optical amplitudes and one mechanical
//! coordinate. Diagonalizing the optical part gives two normal modes with
//! complex eigenvalues λ± and the characteristic equation
//!
//! ```text
//! λ² + ℐ₁[1 + α₁(λ + γ̃_s)] / ((λ + γ̃_s)² + δ̃_s²)
//!    + ℐ₂[1 + α₂(λ + γ̃_w)] / ((λ + γ̃_w)² + δ̃_w²) = 0
//! ```
//!
//! which, cleared of denominators, is the degree-6 polynomial [`CharPoly`].
//! The `w` tilde quantities come from λ₊ and the `s` ones from λ₋: as δ → 0,
//! λ₊ → −(γ_w − iδ_w).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModeParams;
use crate::poly;

/// Relative imaginary residue tolerated in an expanded coefficient.
const REALNESS_TOL: f64 = 1e-8;
/// Below this |Q(−iΩ)| a susceptibility sample is flagged singular.
const SUSCEPTIBILITY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    /// Γ₊ = (Γ_w + Γ_s)/2 with Γ_{w,s} = γ_{w,s} − iδ_{w,s}.
    pub gamma_plus_cap: Complex64,
    /// Γ₋ = (Γ_w − Γ_s)/2.
    pub gamma_minus_cap: Complex64,
    /// Δ = iδ/Γ₋.
    pub big_delta: Complex64,
    pub kappa: Complex64,
    pub xi: Complex64,
    /// d = 1 + κ².
    pub d: Complex64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub tg_w: f64,
    pub tg_s: f64,
    pub td_w: f64,
    pub td_s: f64,
    /// J₊ = k I₊/(L μ), s⁻³.
    pub j_plus: f64,
    pub phi_coef: Complex64,
    pub psi_coef: Complex64,
    pub i1: f64,
    pub i2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// ℐ₁α₁, finite even where α₁ is not (δ̃_s = 0).
    pub i1_alpha1: f64,
    pub i2_alpha2: f64,
    /// Bare decay rates of the input parameters, kept for the γ̃ ≈ γ estimates.
    pub gamma_w: f64,
    pub gamma_s: f64,
    /// Arm detuning as it enters the equations (R_z δ for MSI).
    pub delta: f64,
    pub reduced_mass: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den != 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(num)
    }
}

pub fn derive_coefficients(params: &ModeParams) -> Result<DerivedCoefficients> {
    params.validate()?;
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let delta = params.effective_delta();
    let j_plus = params.spring_strength();

    let gw = Complex64::new(params.gamma_w, -params.delta_w);
    let gs = Complex64::new(params.gamma_s, -params.delta_s);
    let gamma_plus_cap = (gw + gs) / 2.0;
    let gamma_minus_cap = (gw - gs) / 2.0;
    if gamma_minus_cap.norm() <= 1e-12 * gamma_plus_cap.norm() {
        return Err(Error::DegenerateModes);
    }

    let big_delta = i * delta / gamma_minus_cap;
    let one_plus = one + big_delta * big_delta;
    if one_plus.arg().abs() > std::f64::consts::PI - 1e-9 {
        return Err(Error::BranchCut(one_plus.arg()));
    }
    let root = one_plus.sqrt();
    let lambda_plus = -(gamma_plus_cap + gamma_minus_cap * root);
    let lambda_minus = -(gamma_plus_cap - gamma_minus_cap * root);
    let kappa = big_delta / (one + root);
    let xi = i * delta / gs;
    let d = one + kappa * kappa;

    let phi_coef = (one + xi.conj() * kappa) * (one + kappa * xi) * d.conj();
    let psi_coef = (xi.conj() - kappa) * (xi - kappa) * d.conj();

    let tg_w = -lambda_plus.re;
    let td_w = lambda_plus.im;
    let tg_s = -lambda_minus.re;
    let td_s = lambda_minus.im;

    let d2 = d.norm_sqr();
    let i1 = 2.0 * j_plus * td_s * phi_coef.re / d2;
    let i1_alpha1 = 2.0 * j_plus * phi_coef.im / d2;
    let i2 = 2.0 * j_plus * td_w * psi_coef.re / d2;
    let i2_alpha2 = 2.0 * j_plus * psi_coef.im / d2;

    Ok(DerivedCoefficients {
        gamma_plus_cap,
        gamma_minus_cap,
        big_delta,
        kappa,
        xi,
        d,
        lambda_plus,
        lambda_minus,
        tg_w,
        tg_s,
        td_w,
        td_s,
        j_plus,
        phi_coef,
        psi_coef,
        i1,
        i2,
        alpha1: ratio_or_zero(phi_coef.im, td_s * phi_coef.re),
        alpha2: ratio_or_zero(psi_coef.im, td_w * psi_coef.re),
        i1_alpha1,
        i2_alpha2,
        gamma_w: params.gamma_w,
        gamma_s: params.gamma_s,
        delta,
        reduced_mass: params.reduced_mass(),
    })
}

impl DerivedCoefficients {
    /// (λ + γ̃_s)² + δ̃_s², ascending.
    pub fn quad_s(&self) -> [f64; 3] {
        poly::shifted_quadratic(self.tg_s, self.td_s)
    }

    pub fn quad_w(&self) -> [f64; 3] {
        poly::shifted_quadratic(self.tg_w, self.td_w)
    }

    /// ℐ₁[1 + α₁(λ + γ̃_s)], ascending.
    pub fn spring_s(&self) -> [f64; 2] {
        [self.i1 + self.i1_alpha1 * self.tg_s, self.i1_alpha1]
    }

    pub fn spring_w(&self) -> [f64; 2] {
        [self.i2 + self.i2_alpha2 * self.tg_w, self.i2_alpha2]
    }

    /// Q(λ): the characteristic function before clearing denominators.
    pub fn dynamic_function(&self, lambda: Complex64) -> Complex64 {
        let qs = poly::eval_complex(&self.quad_s(), lambda);
        let qw = poly::eval_complex(&self.quad_w(), lambda);
        lambda * lambda
            + poly::eval_complex(&self.spring_s(), lambda) / qs
            + poly::eval_complex(&self.spring_w(), lambda) / qw
    }

    /// Pieces of the characteristic polynomial split as D₁⁽⁰⁾D₂⁽⁰⁾ + D⁽¹⁾.
    pub fn factored(&self) -> FactoredPoly {
        let qs = self.quad_s();
        let qw = self.quad_w();
        let d1_zero = poly::add(&poly::mul(&[0.0, 0.0, 1.0], &qs), &self.spring_s());
        let d_first = poly::mul(&qs, &self.spring_w());
        FactoredPoly {
            d1_zero,
            d2_zero: qw,
            d_first,
        }
    }
}

/// The characteristic polynomial split into its zero-order product and the
/// first-order correction, all ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredPoly {
    /// λ²[(λ + γ̃_s)² + δ̃_s²] + ℐ₁[1 + α₁(λ + γ̃_s)]
    pub d1_zero: Vec<f64>,
    /// (λ + γ̃_w)² + δ̃_w²
    pub d2_zero: [f64; 3],
    /// [(λ + γ̃_s)² + δ̃_s²] ℐ₂[1 + α₂(λ + γ̃_w)]
    pub d_first: Vec<f64>,
}

impl FactoredPoly {
    /// D₁⁽⁰⁾D₂⁽⁰⁾ alone.
    pub fn zero_order(&self) -> CharPoly {
        CharPoly::from_slice(&poly::mul(&self.d1_zero, &self.d2_zero))
    }
}

/// Real degree-6 characteristic polynomial, ascending (`coeffs[6]` leads).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub coeffs: [f64; 7],
}

impl CharPoly {
    pub fn new(coeffs: [f64; 7]) -> Self {
        Self { coeffs }
    }

    /// Pads or truncates to degree 6.
    pub fn from_slice(c: &[f64]) -> Self {
        let mut coeffs = [0.0; 7];
        for (dst, &src) in coeffs.iter_mut().zip(c) {
            *dst = src;
        }
        Self { coeffs }
    }

    /// Monic polynomial with the given six roots.
    pub fn from_roots(roots: &[Complex64; 6]) -> Self {
        Self::from_slice(&poly::from_roots(roots))
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        poly::eval_complex(&self.coeffs, lambda)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[6]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn normalized(&self) -> Self {
        let lead = self.leading();
        Self {
            coeffs: self.coeffs.map(|c| c / lead),
        }
    }
}

/// c₀..c₆ of P(λ) = λ²Q_sQ_w + spring_s·Q_w + spring_w·Q_s.
///
/// The expansion runs in complex arithmetic over the conjugate-pair form
/// Q_s = (λ − λ₋)(λ − λ₋*) and spring_s = −2J₊ Im[φ̃ (λ − λ₋*)] with
/// φ̃ = φ/|d|², so any loss of conjugate symmetry shows up as an imaginary
/// residue.
pub fn characteristic_polynomial(coefs: &DerivedCoefficients) -> Result<CharPoly> {
    let c = |re: f64| Complex64::new(re, 0.0);
    let pair = |l: Complex64| cmul(&[-l, c(1.0)], &[-l.conj(), c(1.0)]);
    let d2 = coefs.d.norm_sqr();
    // −iJ[w(λ − l*) − w*(λ − l)] = 2J[δ̃ Re w + Im w (λ + γ̃)] for l = −γ̃ + iδ̃.
    let spring = |w: Complex64, l: Complex64| {
        let i = Complex64::i();
        let lin = [
            -i * (w * (-l.conj()) - w.conj() * (-l)),
            -i * (w - w.conj()),
        ];
        lin.map(|x| x * coefs.j_plus)
    };
    let qs = pair(coefs.lambda_minus);
    let qw = pair(coefs.lambda_plus);
    let ks = spring(coefs.phi_coef / d2, coefs.lambda_minus);
    let kw = spring(coefs.psi_coef / d2, coefs.lambda_plus);

    let lam2 = [c(0.0), c(0.0), c(1.0)];
    let main = cmul(&cmul(&lam2, &qs), &qw);
    let total = cadd(&cadd(&main, &cmul(&ks, &qw)), &cmul(&kw, &qs));

    let mut coeffs = [0.0; 7];
    for (k, z) in total.iter().enumerate() {
        if z.im.abs() > REALNESS_TOL * z.norm().max(f64::MIN_POSITIVE)
            && z.im.abs() > f64::EPSILON * scale_of(&total)
        {
            return Err(Error::NonRealCoefficient {
                index: k,
                residue: z.im / z.norm(),
            });
        }
        coeffs[k] = z.re;
    }
    Ok(CharPoly { coeffs }.normalized())
}

fn scale_of(c: &[Complex64]) -> f64 {
    c.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn cmul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn cadd(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    let zero = Complex64::new(0.0, 0.0);
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(zero) + b.get(k).copied().unwrap_or(zero))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilitySample {
    /// Spectral frequency Ω, rad/s.
    pub omega: f64,
    /// Response of z₋ to an external force, m/N.
    pub chi: Complex64,
    pub chi_abs: f64,
    /// |Q(−iΩ)| fell below the floor; `chi` is not meaningful.
    pub singular: bool,
}

/// χ(Ω) = 1/(μ Q(−iΩ)), so that without optical spring χ = −1/(μΩ²).
pub fn susceptibility(
    coefs: &DerivedCoefficients,
    params: &ModeParams,
    omega_grid: &[f64],
) -> Result<Vec<SusceptibilitySample>> {
    if omega_grid.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidValue {
            key: "omega_grid".into(),
            message: "frequencies must be positive".into(),
        });
    }
    if omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidValue {
            key: "omega_grid".into(),
            message: "grid must be strictly increasing".into(),
        });
    }
    let mu = params.reduced_mass();
    Ok(omega_grid
        .par_iter()
        .map(|&omega| {
            let q = coefs.dynamic_function(Complex64::new(0.0, -omega));
            if q.norm() < SUSCEPTIBILITY_FLOOR || !q.is_finite() {
                SusceptibilitySample {
                    omega,
                    chi: Complex64::new(f64::NAN, f64::NAN),
                    chi_abs: f64::NAN,
                    singular: true,
                }
            } else {
                let chi = 1.0 / (mu * q);
                SusceptibilitySample {
                    omega,
                    chi,
                    chi_abs: chi.norm(),
                    singular: false,
                }
            }
        })
        .collect())
}

/// `n` points evenly spaced from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Indices of interior local maxima of `values`. A flat top counts once, at
/// its first index.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    let mut k = 1;
    while k + 1 < n {
        if values[k] > values[k - 1] {
            let mut end = k;
            while end + 1 < n && values[end + 1] == values[k] {
                end += 1;
            }
            if end + 1 < n && values[end + 1] < values[k] {
                out.push(k);
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    out
}

pub const SUSCEPTIBILITY_CSV_HEADER: &str = "omega_rad_s,chi_re,chi_im,chi_abs";

/// CSV with shortest round-trip decimal formatting.
pub fn write_susceptibility_csv<W: std::io::Write>(
    samples: &[SusceptibilitySample],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{SUSCEPTIBILITY_CSV_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?}",
            s.omega, s.chi.re, s.chi.im, s.chi_abs
        )?;
    }
    Ok(())
}
