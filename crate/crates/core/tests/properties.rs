use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use wlab_core::geometry::fundamental_forms;
use wlab_core::harness::{energy_report, EnergyReport};
use wlab_core::jets::Vec4;
use wlab_core::mobius::{Mat4, MobiusMap};
use wlab_core::quad::{extrapolate_limit, QuadConfig};
use wlab_core::surfaces::{enneper, veronese_stereographic};
use wlab_core::weierstrass::{weierstrass_immersion, WeierstrassData};

fn rotation(dim: usize, angles: &[f64]) -> Mat4 {
    let mut o: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    let mut n = 0;
    for a in 0..dim {
        for b in a + 1..dim {
            let (s, c) = angles[n % angles.len()].sin_cos();
            n += 1;
            for row in o.iter_mut() {
                let (x, y) = (row[a], row[b]);
                row[a] = c * x - s * y;
                row[b] = s * x + c * y;
            }
        }
    }
    o
}

fn vec4(v: [f64; 3]) -> Vec4 {
    [v[0], v[1], v[2], 0.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_form_matches_primitive_chain(
        c in prop::array::uniform3(-2.0f64..2.0),
        r in 0.3f64..2.0,
        angles in prop::array::uniform3(0.0f64..6.28),
        l in 0.2f64..3.0,
        t in prop::array::uniform3(-1.0f64..1.0),
        c2 in prop::array::uniform3(-2.0f64..2.0),
        x in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let m = MobiusMap::identity(3)
            .invert(vec4(c), r).unwrap()
            .orthogonal(rotation(3, &angles)).unwrap()
            .dilate(l).unwrap()
            .translate(vec4(t)).unwrap()
            .invert(vec4(c2), 1.0).unwrap();
        let x = vec4(x);
        // Stay away from the preimages of both inversion centers.
        let first = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt();
        prop_assume!(first > 0.1);
        if let (Ok(a), Ok(b)) = (m.apply(&x), m.apply_chain(&x)) {
            let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9 * scale, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn map_then_inverse_is_identity(
        c in prop::array::uniform3(-2.0f64..2.0),
        angles in prop::array::uniform3(0.0f64..6.28),
        l in 0.2f64..3.0,
        x in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let x = vec4(x);
        let d = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt();
        prop_assume!(d > 0.1);
        let m = MobiusMap::identity(3).invert(vec4(c), 1.0).unwrap()
            .orthogonal(rotation(3, &angles)).unwrap()
            .dilate(l).unwrap();
        let y = m.apply(&x).unwrap();
        let back = m.inverse().unwrap().apply(&y).unwrap();
        for i in 0..3 {
            prop_assert!((back[i] - x[i]).abs() <= 1e-9 * (1.0 + x[i].abs()));
        }
    }

    #[test]
    fn pointwise_identities_on_enneper(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let s = enneper();
        let cd = fundamental_forms(&s.eval(0, [x, y]).unwrap()).unwrap();
        let scale = cd.a_sq + cd.h_sq + 1e-300;
        prop_assert!(cd.h_sq <= 1e-20 * (1.0 + cd.a_sq));
        prop_assert!((cd.a_sq - (cd.h_sq - 2.0 * cd.k)).abs() <= 1e-10 * scale);
        prop_assert!((cd.a0_sq - (cd.a_sq - 0.5 * cd.h_sq)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn pointwise_identities_on_veronese(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let s = veronese_stereographic();
        let cd = fundamental_forms(&s.eval(0, [x, y]).unwrap()).unwrap();
        let scale = cd.a_sq + cd.h_sq;
        prop_assert!((cd.a_sq - (cd.h_sq - 2.0 * cd.k)).abs() <= 1e-10 * scale);
        prop_assert!((cd.a0_sq - (cd.a_sq - 0.5 * cd.h_sq)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn extrapolation_recovers_power_law(l in -10.0f64..10.0, c in 0.1f64..5.0, p in 0.5f64..3.0) {
        let rhos = [0.2f64, 0.1, 0.05, 0.025];
        let values: Vec<f64> = rhos.iter().map(|r| l + c * r.powf(p)).collect();
        let e = extrapolate_limit(&rhos, &values).unwrap();
        prop_assert!((e.limit - l).abs() <= 1e-8 * (1.0 + l.abs()));
        prop_assert!((e.rate.unwrap() - p).abs() <= 1e-8);
        prop_assert!(e.monotone);
    }
}

#[test]
fn report_roundtrips_through_json_and_csv() {
    let s = wlab_core::surfaces::round_sphere(1.5).unwrap();
    let r = energy_report(&s, &QuadConfig::with_tol(1e-8)).unwrap();
    assert!(r.passed());
    assert_eq!(EnergyReport::from_json(&r.to_json()).unwrap(), r);
    assert_eq!(EnergyReport::from_csv(&r.to_csv()).unwrap(), r);
    assert!((r.functionals.willmore.value - 4.0 * PI).abs() < 1e-7);
}

#[test]
fn weierstrass_identity_data_gives_minimal_surface_of_total_curvature_minus_four_pi() {
    let d = WeierstrassData::parse("z", "1", vec![], Complex64::new(0.0, 0.0)).unwrap();
    let s = weierstrass_immersion(d, 1e-12).unwrap().surface("g=z").unwrap();
    for (k, p) in s.sample_params(200) {
        let cd = fundamental_forms(&s.eval(k, p).unwrap()).unwrap();
        assert!(cd.h_sq.sqrt() <= 1e-9, "|H| = {}", cd.h_sq.sqrt());
    }
    let r = energy_report(&s, &QuadConfig::with_tol(1e-9)).unwrap();
    let a2 = r.functionals.a2.value;
    assert!((a2 / (8.0 * PI) - 1.0).abs() < 1e-6, "a2 = {a2}");
    assert!(r.passed(), "{:?}", r.checks);
}
