//! Stability verdicts: numeric roots, the Routh–Hurwitz tableau, the
//! perturbative closed forms and the minimal-detuning estimate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    characteristic_polynomial, derive_coefficients, CharPoly, DerivedCoefficients,
};
use crate::error::{Error, Result};
use crate::params::ModeParams;
use crate::poly;

pub const MAX_ITERATIONS: usize = 500;
/// Normalized residual every reported root must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Real parts below this fraction of the largest root modulus are reported
/// as exactly zero (marginal, hence unstable).
const MARGINAL_REL: f64 = 1e-12;
const DOUBLE_RESONANCE_P: f64 = 1e-6;

/// Serializes complex numbers as `{re, im}` objects.
pub mod complex_objects {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Obj {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let objs: Vec<Obj> = v.iter().map(|z| Obj { re: z.re, im: z.im }).collect();
        objs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let objs = Vec::<Obj>::deserialize(d)?;
        Ok(objs
            .into_iter()
            .map(|o| Complex64::new(o.re, o.im))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    /// Sorted by descending real part, then ascending imaginary part.
    #[serde(with = "complex_objects")]
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub max_real: f64,
    pub stable: bool,
    pub rh_stable: bool,
}

impl RootReport {
    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Roots with non-negative imaginary part, least damped first.
    pub fn upper_roots(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.roots.iter().copied().filter(|z| z.im > 0.0).collect();
        v.sort_by(|a, b| b.re.total_cmp(&a.re));
        v
    }
}

fn normalized_residual(c: &[f64], z: Complex64) -> f64 {
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    poly::eval_complex(c, z).norm() / (z.norm().max(1.0).powi(6) * scale)
}

/// Simultaneous Aberth–Ehrlich iteration on a degree-n polynomial
/// (ascending, nonzero leading coefficient). Returns the iterates and
/// whether every root met the rounding-level stopping rule.
fn aberth(c: &[f64]) -> (Vec<Complex64>, usize, bool) {
    let n = c.len() - 1;
    let lead = c[n];
    // Fujiwara bound for the root modulus.
    let bound = (1..=n)
        .map(|k| {
            let r = (c[n - k] / lead).abs();
            if k == n {
                (r / 2.0).powf(1.0 / k as f64)
            } else {
                r.powf(1.0 / k as f64)
            }
        })
        .fold(0.0f64, f64::max)
        * 2.0;
    if bound == 0.0 {
        return (vec![Complex64::new(0.0, 0.0); n], 0, true);
    }
    // Work on q(μ) = P(sμ)/(c_n sⁿ) so the roots have modulus ≲ 1.
    let q: Vec<f64> = (0..=n)
        .map(|k| c[k] / lead * bound.powi(k as i32 - n as i32))
        .collect();
    let abs_q: Vec<f64> = q.iter().map(|x| x.abs()).collect();

    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|d| !d) {
        iterations += 1;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (p, dp) = poly::eval_with_derivative(&q, z[k]);
            let roundoff = 8.0 * n as f64 * f64::EPSILON * poly::eval(&abs_q, z[k].norm());
            if p.norm() <= roundoff {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| 1.0 / (z[k] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                if step.norm() <= f64::EPSILON * z[k].norm() {
                    done[k] = true;
                }
            } else {
                // Perturb off a stationary point of q.
                z[k] += Complex64::new(1e-3, 1e-3);
            }
        }
    }
    let converged = done.iter().all(|&d| d);
    (
        z.into_iter().map(|x| x * bound).collect(),
        iterations,
        converged,
    )
}

/// Averages each root with the conjugate of its nearest partner so that the
/// set is exactly conjugate-closed.
fn symmetrize(roots: &mut [Complex64], scale: f64) {
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut open: Vec<usize> = (0..roots.len()).collect();
    while !open.is_empty() {
        let (pos, &i) = open
            .iter()
            .enumerate()
            .max_by(|a, b| roots[*a.1].im.total_cmp(&roots[*b.1].im))
            .unwrap();
        if roots[i].im <= tol {
            for &k in &open {
                roots[k].im = 0.0;
            }
            break;
        }
        open.swap_remove(pos);
        let target = roots[i].conj();
        let Some((jpos, &j)) = open.iter().enumerate().min_by(|a, b| {
            (roots[*a.1] - target)
                .norm()
                .total_cmp(&(roots[*b.1] - target).norm())
        }) else {
            roots[i].im = 0.0;
            break;
        };
        open.swap_remove(jpos);
        let avg = (roots[i] + roots[j].conj()) / 2.0;
        roots[i] = avg;
        roots[j] = avg.conj();
    }
}

/// All six roots of `poly` with residuals and both stability verdicts.
pub fn solve_roots(poly: &CharPoly) -> Result<RootReport> {
    let c = &poly.coeffs;
    if c[6] == 0.0 || c.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidValue {
            key: "coeffs".into(),
            message: "polynomial must have finite coefficients and nonzero c6".into(),
        });
    }
    let (mut roots, iterations, converged) = aberth(c);
    let residual_ok = |r: &[Complex64]| r.iter().all(|&z| normalized_residual(c, z) < RESIDUAL_TOL);
    if !converged && !residual_ok(&roots) {
        return Err(Error::NoConvergence {
            iterations,
            best: roots,
        });
    }

    let scale = roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    symmetrize(&mut roots, scale);
    for z in roots.iter_mut() {
        if z.re.abs() <= MARGINAL_REL * scale {
            z.re = 0.0;
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let residuals: Vec<f64> = roots.iter().map(|&z| normalized_residual(c, z)).collect();
    if residuals.iter().any(|&r| r.is_nan() || r >= RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            iterations,
            best: roots,
        });
    }
    let max_real = roots[0].re;
    Ok(RootReport {
        residuals,
        max_real,
        stable: max_real < 0.0,
        rh_stable: routh_hurwitz(poly).stable,
        roots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouthHurwitz {
    pub stable: bool,
    /// Index (0 = leading row) of the first row whose pivot is not positive.
    pub failing_row: Option<usize>,
    /// A zero pivot was replaced by ε, or a whole row vanished.
    pub degenerate: bool,
}

pub fn routh_hurwitz(poly: &CharPoly) -> RouthHurwitz {
    let sign = if poly.leading() < 0.0 { -1.0 } else { 1.0 };
    let n = 6;
    // Positive rescaling of λ leaves the verdict unchanged and tames the
    // coefficient range.
    let lead = poly.leading() * sign;
    let s = (1..=n)
        .map(|k| {
            (poly.coeffs[n - k] * sign / lead)
                .abs()
                .powf(1.0 / k as f64)
        })
        .fold(0.0f64, f64::max);
    let s = if s > 0.0 { s } else { 1.0 };
    let mut desc: Vec<f64> = (0..=n)
        .map(|k| poly.coeffs[n - k] * sign / lead / s.powi(k as i32))
        .collect();
    let max = desc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for x in desc.iter_mut() {
        *x /= max;
    }
    // An entry counts as zero when it is lost in the cancellation that
    // produced it: |x| ≤ tol·(|a| + |p b / c|). Coefficients are zero only
    // when exactly zero.
    let zero_tol = 1e-10;
    let eps = 1e-30;

    let width = n / 2 + 1;
    let pick = |off: usize| -> Vec<f64> {
        (0..width)
            .map(|j| desc.get(2 * j + off).copied().unwrap_or(0.0))
            .collect()
    };
    let mut rows: Vec<Vec<f64>> = vec![pick(0), pick(1)];
    let mut refs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).collect())
        .collect();
    let is_zero = |x: f64, reference: f64| x.abs() <= zero_tol * reference;
    let mut degenerate = false;

    for r in 1..=n {
        if rows[r].iter().zip(&refs[r]).all(|(&x, &m)| is_zero(x, m)) {
            return RouthHurwitz {
                stable: false,
                failing_row: Some(r),
                degenerate: true,
            };
        }
        if is_zero(rows[r][0], refs[r][0]) {
            rows[r][0] = eps;
            degenerate = true;
        }
        if r == n {
            break;
        }
        let (prev, cur) = (&rows[r - 1], &rows[r]);
        let (next, next_ref): (Vec<f64>, Vec<f64>) = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).copied().unwrap_or(0.0);
                let b = prev[0] * cur.get(j + 1).copied().unwrap_or(0.0) / cur[0];
                (a - b, a.abs() + b.abs())
            })
            .unzip();
        rows.push(next);
        refs.push(next_ref);
    }
    let failing_row = rows.iter().position(|row| row[0].is_nan() || row[0] <= 0.0);
    RouthHurwitz {
        stable: failing_row.is_none() && !degenerate,
        failing_row,
        degenerate,
    }
}

/// Closed-form zero- and first-order roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeRoots {
    pub p: f64,
    pub beta1: f64,
    pub gamma1: f64,
    pub delta1: f64,
    pub gamma3: f64,
    pub delta3: f64,
    /// λ₁,₂ = γ₁ ± iδ₁, λ₃,₄ = γ₃ ± iδ₃, λ₅,₆ = −γ̃_w ± iδ̃_w.
    #[serde(with = "complex_objects")]
    pub zero_order: Vec<Complex64>,
    pub b: Option<Complex64>,
    /// The branch nearest λ₁⁽⁰⁾ and the branch nearest its conjugate.
    #[serde(with = "complex_objects")]
    pub first_order: Vec<Complex64>,
    /// All four sign combinations of the first-order formula.
    #[serde(with = "complex_objects")]
    pub branches: Vec<Complex64>,
    /// |Im b| < 0.1 |Re b|.
    pub b_mostly_real: Option<bool>,
}

impl PerturbativeRoots {
    pub fn lambda1(&self) -> Complex64 {
        Complex64::new(self.gamma1, self.delta1)
    }

    pub fn first_order_stable(&self) -> Option<bool> {
        if self.first_order.is_empty() {
            None
        } else {
            Some(self.first_order.iter().all(|z| z.re < 0.0))
        }
    }
}

/// p² = 1 − 4ℐ₁(1 + α₁γ̃_s)/(γ̃_s² + δ̃_s²)².
pub fn p_squared(coefs: &DerivedCoefficients) -> f64 {
    let s = coefs.tg_s * coefs.tg_s + coefs.td_s * coefs.td_s;
    1.0 - 4.0 * (coefs.i1 + coefs.i1_alpha1 * coefs.tg_s) / (s * s)
}

pub fn zero_order_roots(coefs: &DerivedCoefficients) -> Result<PerturbativeRoots> {
    let p2 = p_squared(coefs);
    if p2 < 0.0 {
        return Err(Error::ComplexP(p2));
    }
    let p = p2.sqrt();
    if p <= DOUBLE_RESONANCE_P {
        return Err(Error::DoubleResonance(p));
    }
    let (tg, s) = (
        coefs.tg_s,
        coefs.tg_s * coefs.tg_s + coefs.td_s * coefs.td_s,
    );
    let beta1 = if coefs.alpha1.is_finite() {
        coefs.alpha1 * s / (4.0 * (1.0 + coefs.alpha1 * tg))
    } else {
        coefs.i1_alpha1 * s / (4.0 * (coefs.i1 + coefs.i1_alpha1 * tg))
    };
    let gamma1 = (tg * (1.0 - p) - (1.0 - p2) * beta1) / (2.0 * p);
    let gamma3 = -(tg * (1.0 + p) - (1.0 - p2) * beta1) / (2.0 * p);
    let delta1 = (s * (1.0 - p) / 2.0).sqrt();
    let delta3 = (s * (1.0 + p) / 2.0).sqrt();
    let c = Complex64::new;
    Ok(PerturbativeRoots {
        p,
        beta1,
        gamma1,
        delta1,
        gamma3,
        delta3,
        zero_order: vec![
            c(gamma1, delta1),
            c(gamma1, -delta1),
            c(gamma3, delta3),
            c(gamma3, -delta3),
            c(-coefs.tg_w, coefs.td_w),
            c(-coefs.tg_w, -coefs.td_w),
        ],
        b: None,
        first_order: Vec::new(),
        branches: Vec::new(),
        b_mostly_real: None,
    })
}

/// Completes `zero` with the first-order correction to λ₁,₂, valid near
/// δ̃_w² ≈ δ₁².
pub fn first_order_roots(
    coefs: &DerivedCoefficients,
    zero: &PerturbativeRoots,
) -> Result<PerturbativeRoots> {
    let l1 = zero.lambda1();
    let s = coefs.tg_s * coefs.tg_s + coefs.td_s * coefs.td_s;
    let denom = (l1 - zero.gamma3) * (l1 - zero.gamma3) + zero.delta3 * zero.delta3;
    if denom.norm() < 1e-12 * s {
        return Err(Error::Singular {
            context: "first-order denominator",
            magnitude: denom.norm(),
        });
    }
    let d_first = coefs.factored().d_first;
    let b = -poly::eval_complex(&d_first, l1) / denom;
    let mostly_real = b.im.abs() < 0.1 * b.re.abs() || b.norm() == 0.0;
    if !mostly_real {
        log::warn!("first-order constant b = {b} is not predominantly real");
    }

    let i = Complex64::i();
    let g = (zero.gamma1 + coefs.tg_w) / 2.0;
    let centre = (zero.gamma1 - coefs.tg_w) / 2.0;
    let inner = (b - zero.delta1 * zero.delta1 * (2.0 * g) * (2.0 * g)).sqrt();
    let base = Complex64::new(zero.delta1 * zero.delta1 - g * g, 0.0);
    let mut branches = Vec::with_capacity(4);
    for inner_sign in [1.0, -1.0] {
        let outer = (base + inner_sign * inner).sqrt();
        for outer_sign in [1.0, -1.0] {
            branches.push(centre + outer_sign * i * outer);
        }
    }
    let nearest = |target: Complex64, skip: Option<usize>| {
        (0..4)
            .filter(|&k| Some(k) != skip)
            .min_by(|&a, &b| {
                (branches[a] - target)
                    .norm()
                    .total_cmp(&(branches[b] - target).norm())
            })
            .unwrap()
    };
    let k1 = nearest(l1, None);
    let k2 = nearest(l1.conj(), Some(k1));

    let mut out = zero.clone();
    out.b = Some(b);
    out.b_mostly_real = Some(mostly_real);
    out.first_order = vec![branches[k1], branches[k2]];
    out.branches = branches;
    Ok(out)
}

/// Lower bound on the (effective) arm detuning for the design point
/// δ̃_w = −δ₁, with γ̃ approximated by the bare decay rates.
pub fn min_detuning(coefs: &DerivedCoefficients) -> Result<f64> {
    let p = p_squared(coefs).max(0.0).sqrt();
    min_detuning_formula(p, coefs.gamma_s, coefs.gamma_w)
}

pub fn min_detuning_formula(p: f64, gamma_s: f64, gamma_w: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::POutOfRange(p));
    }
    let sq2 = std::f64::consts::SQRT_2;
    let q = (1.0 - p).sqrt();
    let lead = gamma_s * (1.0 - p) / (2.0 * p) + gamma_w;
    let shape = (sq2 + q) / (2.0 * sq2 + q);
    let rhs = lead * lead * shape * shape * 4.0 * sq2 * p / (q * (1.0 + p) * (1.0 + p));
    Ok(rhs.sqrt())
}

/// Fixed-point refinement of [`min_detuning`] that recomputes p and uses γ̃
/// at each candidate detuning. Returns the effective detuning.
pub fn min_detuning_refined(params: &ModeParams, max_iter: usize) -> Result<f64> {
    let scale = params.effective_delta() / params.delta_arm;
    let scale = if scale.is_finite() && scale > 0.0 {
        scale
    } else {
        params.r_z
    };
    let mut coefs = derive_coefficients(params)?;
    let mut delta = min_detuning(&coefs)?;
    for _ in 0..max_iter {
        coefs = derive_coefficients(&params.with_delta_arm(delta / scale))?;
        let p = p_squared(&coefs).max(0.0).sqrt();
        let next = min_detuning_formula(p, coefs.tg_s, coefs.tg_w)?;
        let done = (next - delta).abs() <= 1e-9 * delta;
        delta = next;
        if done {
            break;
        }
    }
    Ok(delta)
}

pub fn roots_for(params: &ModeParams) -> Result<RootReport> {
    let coefs = derive_coefficients(params)?;
    solve_roots(&characteristic_polynomial(&coefs)?)
}

/// Bisection on the arm detuning for the change of the exact stability
/// verdict. Both ends and the result are physical δ in rad/s.
pub fn stability_boundary(params: &ModeParams, delta_range: [f64; 2]) -> Result<f64> {
    let [mut lo, mut hi] = delta_range;
    let verdict = |d: f64| roots_for(&params.with_delta_arm(d)).map(|r| r.stable);
    let v_lo = verdict(lo)?;
    if verdict(hi)? == v_lo {
        return Err(Error::Bracket { lo, hi });
    }
    while (hi - lo).abs() > 1e-6 * lo.abs().max(hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if verdict(mid)? == v_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
