use num_complex::Complex64;
use optospring::params::{hz_to_rad, load_config};
use optospring::*;
use proptest::prelude::*;

fn aligo_like() -> impl Strategy<Value = ModeParams> {
    (
        0.1f64..8.0,
        0.1f64..8.0,
        -60.0f64..-5.0,
        10.0f64..80.0,
        0.0f64..6.0,
        0.05f64..2.0,
    )
        .prop_map(|(gw, gs, dw, ds, d, power)| {
            let mut p = Preset::Aligo.params();
            p.gamma_w = hz_to_rad(gw);
            p.gamma_s = hz_to_rad(gs);
            p.delta_w = hz_to_rad(dw);
            p.delta_s = hz_to_rad(ds);
            p.delta_arm = hz_to_rad(d);
            p.circ_power *= power;
            p
        })
}

/// Monic polynomial whose roots are three left-half-plane conjugate pairs,
/// optionally with the first pair reflected into the right half plane.
fn root_sets() -> impl Strategy<Value = ([Complex64; 6], bool)> {
    (
        prop::array::uniform3((0.001f64..10.0, 0.0f64..10.0)),
        any::<bool>(),
    )
        .prop_map(|(pairs, flip)| {
            let mut roots = [Complex64::new(0.0, 0.0); 6];
            for (k, (re, im)) in pairs.iter().enumerate() {
                let sign = if flip && k == 0 { 1.0 } else { -1.0 };
                roots[2 * k] = Complex64::new(sign * re, *im);
                roots[2 * k + 1] = Complex64::new(sign * re, -im);
            }
            (roots, flip)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn routh_hurwitz_matches_construction((roots, flip) in root_sets()) {
        let poly = CharPoly::from_roots(&roots);
        let r = solve_roots(&poly).unwrap();
        let rh = routh_hurwitz(&poly);
        prop_assert_eq!(rh.stable, !flip);
        prop_assert_eq!(r.stable, !flip);
    }

    #[test]
    fn roots_are_conjugate_closed(p in aligo_like()) {
        let c = derive_coefficients(&p).unwrap();
        let r = solve_roots(&characteristic_polynomial(&c).unwrap()).unwrap();
        let scale = r.max_modulus();
        for z in &r.roots {
            let partner = r.roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(partner <= 1e-8 * scale);
        }
        prop_assert!(r.residuals.iter().all(|&x| x < 1e-8));
        let away = r.roots.iter().all(|z| z.re.abs() > 1e-6 * scale);
        if away {
            prop_assert_eq!(r.stable, r.rh_stable);
        }
    }

    #[test]
    fn coefficients_continuous_at_zero_detuning(p in aligo_like()) {
        let a = characteristic_polynomial(&derive_coefficients(&p.with_delta_arm(0.0)).unwrap()).unwrap();
        let b = characteristic_polynomial(&derive_coefficients(&p.with_delta_arm(1e-9)).unwrap()).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(1.0));
        }
        let c0 = derive_coefficients(&p.with_delta_arm(0.0)).unwrap();
        prop_assert_eq!(c0.i2, 0.0);
        prop_assert_eq!(c0.i2_alpha2, 0.0);
    }

    #[test]
    fn equal_decay_removes_alpha(p in aligo_like()) {
        let mut q = p;
        q.gamma_s = q.gamma_w;
        let c = derive_coefficients(&q).unwrap();
        prop_assert!(c.kappa.im.abs() <= 1e-12 * c.kappa.norm().max(1e-300));
        prop_assert!((c.alpha1 * c.td_s).abs() < 1e-12);
        prop_assert!((c.alpha2 * c.td_w).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip(p in aligo_like()) {
        let back = load_config(&p.to_config_string()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn susceptibility_without_spring_is_free_mass(p in aligo_like(), omega in 1.0f64..1e3) {
        let mut q = p;
        q.circ_power = 0.0;
        let c = derive_coefficients(&q).unwrap();
        let s = susceptibility(&c, &q, &[omega]).unwrap()[0];
        let expected = -1.0 / (q.reduced_mass() * omega * omega);
        prop_assert!((s.chi - expected).norm() <= 1e-12 * expected.abs());
    }
}
