use ghostsim_core::fields::{decompose_parity, reflect_grid, ComplexField, GridSpec, ObjectMask, Parity, PhaseScreen, ZernikeMode};
use ghostsim_core::imaging::{image_entangled_analytic, relative_max_error, OpticalGeometry};
use ghostsim_core::interferometer::{background_r0, ModulationKernel};
use ghostsim_core::sources::{spdc_spectrum, SpdcParams};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = 32;

fn spec() -> GridSpec {
    GridSpec::new(N, 1e-5).unwrap()
}

fn geom() -> OpticalGeometry {
    OpticalGeometry::new(0.25, 0.4, 0.3, 0.3, 7.757e6).unwrap()
}

fn spdc(walkoff: f64) -> SpdcParams {
    SpdcParams {
        crystal_length: 1e-3,
        delay_mismatch: 2e-10,
        walkoff,
        k_pump: 1.55e7,
        omega0: 2.3e15,
        bandwidth: 1e13,
        n_nu: 9,
    }
}

fn grid_strategy() -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-3.0f64..3.0, N * N).prop_map(|v| Array2::from_shape_vec((N, N), v).unwrap())
}

fn amplitude_strategy() -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], N * N)
        .prop_map(|v| Array2::from_shape_vec((N, N), v).unwrap())
}

fn screen_strategy() -> impl Strategy<Value = PhaseScreen> {
    let modes = ZernikeMode::up_to_degree(4);
    prop::collection::vec(-2.0f64..2.0, modes.len())
        .prop_map(move |w| PhaseScreen::new(modes.iter().copied().zip(w).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflection_is_an_involution(re in grid_strategy(), im in grid_strategy()) {
        let values = Array2::from_shape_fn((N, N), |(i, j)| Complex64::new(re[[i, j]], im[[i, j]]));
        let f = ComplexField::new(spec(), values).unwrap();
        prop_assert_eq!(f.reflect().reflect(), f);
    }

    #[test]
    fn parity_parts_are_exact(phi in grid_strategy()) {
        let (even, odd) = decompose_parity(&phi);
        prop_assert_eq!(reflect_grid(&even), even.clone());
        prop_assert_eq!(reflect_grid(&odd), odd.mapv(|v| -v));
        let err = (&even + &odd - &phi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(err <= 4.0 * f64::EPSILON * 3.0);
    }

    #[test]
    fn screens_have_the_parity_of_their_modes(screen in screen_strategy()) {
        let even = ObjectMask::unit(spec()).with_screen(&screen.filtered(Parity::Even)).unwrap();
        let odd = ObjectMask::unit(spec()).with_screen(&screen.filtered(Parity::Odd)).unwrap();
        prop_assert_eq!(reflect_grid(even.phase()), even.phase().clone());
        prop_assert_eq!(reflect_grid(odd.phase()), odd.phase().mapv(|v| -v));
    }

    #[test]
    fn spectrum_is_bounded(q1 in -1e5f64..1e5, q2 in -1e5f64..1e5, nu in -1e13f64..1e13, m in -0.1f64..0.1) {
        prop_assert!(spdc_spectrum([q1, q2], nu, &spdc(m)).norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn analytic_image_factorizes(a in amplitude_strategy(), b in amplitude_strategy()) {
        let g1 = ObjectMask::from_amplitude(spec(), a).unwrap();
        let g2 = ObjectMask::from_amplitude(spec(), b).unwrap();
        let unit = ObjectMask::unit(spec());
        let p = spdc(0.0);
        let joint = image_entangled_analytic(&g1, &g2, &p, &geom()).unwrap();
        let left = image_entangled_analytic(&g1, &unit, &p, &geom()).unwrap();
        let right = image_entangled_analytic(&unit, &g2, &p, &geom()).unwrap();
        let product = &left.rates * &right.rates / joint.norm;
        prop_assert!(relative_max_error(&joint.rates, &product) <= 1e-12);
    }

    #[test]
    fn analytic_image_ignores_phase(a in amplitude_strategy(), s1 in screen_strategy(), s2 in screen_strategy()) {
        let g1 = ObjectMask::from_amplitude(spec(), a).unwrap();
        let g2 = ObjectMask::unit(spec());
        let p = spdc(0.0);
        let plain = image_entangled_analytic(&g1, &g2, &p, &geom()).unwrap();
        let phased = image_entangled_analytic(&g1.clone().with_screen(&s1).unwrap(), &g2.with_screen(&s2).unwrap(), &p, &geom()).unwrap();
        prop_assert_eq!(plain.rates, phased.rates);
    }

    #[test]
    fn background_is_phase_blind(a in amplitude_strategy(), s1 in screen_strategy(), s2 in screen_strategy()) {
        let g1 = ObjectMask::from_amplitude(spec(), a).unwrap();
        let g2 = ObjectMask::unit(spec());
        let plain = background_r0(&g1, &g2, &geom()).unwrap();
        let phased = background_r0(&g1.clone().with_screen(&s1).unwrap(), &g2.with_screen(&s2).unwrap(), &geom()).unwrap();
        prop_assert!((plain - phased).abs() <= 1e-12 * plain.abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn even_screens_leave_modulation_unchanged(
        a in amplitude_strategy(),
        s1 in screen_strategy(),
        s2 in screen_strategy(),
        tau in -2e-13f64..4e-13,
    ) {
        let g1 = ObjectMask::from_amplitude(spec(), a).unwrap();
        let g2 = ObjectMask::generate(spec(), &ghostsim_core::fields::MaskShape::Disk { radius: 1.2e-4, center: [0.0, 0.0] }).unwrap();
        prop_assume!(background_r0(&g1, &g2, &geom()).unwrap() > 0.0);
        let p = spdc(0.07);
        let reference = ModulationKernel::new(&g1, &g2, &p, &geom()).unwrap().w(tau);
        let e1 = g1.clone().with_screen(&s1.filtered(Parity::Even)).unwrap();
        let e2 = g2.clone().with_screen(&s2.filtered(Parity::Even)).unwrap();
        let w = ModulationKernel::new(&e1, &e2, &p, &geom()).unwrap().w(tau);
        prop_assert!((w - reference).norm() <= 1e-10);
        prop_assert!(w.norm() <= 1.0 + 1e-12);
    }
}
