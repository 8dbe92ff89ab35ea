mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ternary_ok::energy::{
    free_energy, long_range_unconstrained, segment_pair_integral, short_range, Tensions, WidthVector,
};
use ternary_ok::interaction::{
    build_blend, build_ohta, build_ren, canonicalize_gamma, f_from_gamma, gamma_from_f, Decomposition, GammaMatrix,
    VolumeFractions,
};
use ternary_ok::pattern::{enumerate_patterns, Pattern, Species, Transform};
use ternary_ok::phasediag::grid_cells;

use common::{random_pattern, random_widths, ren_params};

fn fractions() -> impl Strategy<Value = VolumeFractions> {
    (0.05f64..0.9, 0.05f64..0.9)
        .prop_filter("room for the third fraction", |(a, b)| a + b <= 0.95)
        .prop_map(|(a, b)| VolumeFractions::new(a, b, 1.0 - a - b).unwrap())
}

fn symmetric() -> impl Strategy<Value = GammaMatrix> {
    proptest::array::uniform6(-3.0f64..3.0).prop_map(|v| {
        GammaMatrix([[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]])
    })
}

fn config() -> impl Strategy<Value = (Pattern, Vec<f64>, VolumeFractions, u64)> {
    (fractions(), any::<u64>()).prop_map(|(omega, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pattern(&mut rng, 12);
        let w = random_widths(&p, &omega, &mut rng).into_vec();
        (p, w, omega, seed)
    })
}

#[test]
fn named_families_annihilate_fractions() {
    for (l, _) in grid_cells(10) {
        let omega = VolumeFractions::new(l[0], l[1], l[2]).unwrap();
        for g in [build_ohta(&omega, 1.0), build_ren(&omega, 1.0), build_blend(&omega, 1.0)] {
            let f = f_from_gamma(&g.unwrap(), &omega);
            let rows = f.row_sums().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(rows <= 1e-10 * f.frobenius_norm(), "{omega:?}");
        }
    }
}

#[test]
fn enumeration_count_is_monotone() {
    let counts: Vec<usize> = (3..=14).map(|l| enumerate_patterns(l).unwrap().len()).collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
}

/// `sum gamma_ij int int (G + c)(u_i - omega_i)(u_j - omega_j)` by layers.
fn shifted_kernel_long_range(p: &Pattern, w: &[f64], gamma: &GammaMatrix, omega: &VolumeFractions, c: f64) -> f64 {
    let mut edges = vec![0.0];
    for x in w {
        edges.push(edges.last().unwrap() + x);
    }
    let mut total = 0.0;
    for k in 0..p.len() {
        for l in 0..p.len() {
            let (i, j) = (p.species(k).index(), p.species(l).index());
            let g = segment_pair_integral(edges[k], edges[k + 1].min(1.0), edges[l], edges[l + 1].min(1.0)).unwrap();
            total += gamma.0[i][j] * (g + c * w[k] * w[l]);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            total -= gamma.0[i][j] * c * omega.get(i) * omega.get(j);
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma_f_round_trip(omega in fractions(), g in symmetric()) {
        let back = gamma_from_f(&f_from_gamma(&g, &omega), &omega);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((back.0[i][j] - g.0[i][j]).abs() <= 1e-14 * g.0[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn canonical_gamma_keeps_reduced_matrix(omega in fractions(), g in symmetric()) {
        let c = canonicalize_gamma(&g, &omega);
        let (a, b) = (g.reduce(), c.reduce());
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a.0[i][j] - b.0[i][j]).abs() <= 1e-13 * g.frobenius_norm().max(1.0));
            }
        }
        let cc = canonicalize_gamma(&c, &omega);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((cc.0[i][j] - c.0[i][j]).abs() <= 1e-13 * c.frobenius_norm().max(1.0));
            }
        }
    }

    #[test]
    fn admissible_triples_have_one_positive_coefficient_at_most(v in proptest::array::uniform3(-1.0f64..1.0)) {
        let d = Decomposition::new(v[0], v[1], v[2]);
        if d.is_psd(1e-9) {
            prop_assert!(d.positive_count() <= 1, "{d:?}");
        }
    }

    #[test]
    fn canonical_pattern_is_fixed_point(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pattern(&mut rng, 16);
        let c = p.canonicalize();
        prop_assert_eq!(c.pattern().canonicalize(), c.clone());
        prop_assert!(c.is_canonical());
    }

    #[test]
    fn energy_is_rotation_and_reflection_invariant((p, w, omega, seed) in config(), shift in 0usize..64, reflected: bool) {
        let params = ren_params(omega, Tensions::new(1.0, 0.8, 1.1), 1.0 + (seed % 97) as f64);
        let t = Transform { shift: shift % p.len(), reflected };
        let q = p.transformed(t);
        let e = free_energy(&p, &WidthVector::from_raw(w.clone()), &params).unwrap().total;
        let eq = free_energy(&q, &WidthVector::from_raw(t.apply(&w)), &params).unwrap().total;
        prop_assert!((e - eq).abs() <= 1e-12 * e.abs().max(1.0), "{e} vs {eq}");
    }

    #[test]
    fn constant_added_to_kernel_drops_out((p, w, omega, _seed) in config(), c in -5.0f64..5.0) {
        let gamma = build_ren(&omega, 3.0).unwrap();
        let lr = long_range_unconstrained(&p, &w, &gamma).unwrap();
        let shifted = shifted_kernel_long_range(&p, &w, &gamma, &omega, c);
        prop_assert!((lr - shifted).abs() <= 1e-10 * lr.abs().max(1.0), "{lr} vs {shifted}");
    }

    #[test]
    fn no_bc_interface_means_no_c23_dependence(
        omega in fractions(),
        others in proptest::collection::vec(any::<bool>(), 2..8),
        seed in any::<u64>(),
        c23 in 0.05f64..1.9,
    ) {
        // A separates every other layer, so B and C never touch.
        prop_assume!(others.contains(&true) && others.contains(&false));
        let layers: Vec<Species> = others
            .iter()
            .flat_map(|&b| [Species::A, if b { Species::B } else { Species::C }])
            .collect();
        let p = ternary_ok::pattern::validate(&layers).unwrap();
        let w = random_widths(&p, &omega, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = ren_params(omega, Tensions::new(1.0, 1.0, 1.0), 2.0);
        let b = ren_params(omega, Tensions::new(1.0, 1.0, c23), 2.0);
        prop_assert_eq!(free_energy(&p, &w, &a).unwrap().total, free_energy(&p, &w, &b).unwrap().total);
        prop_assert_eq!(short_range(&p, &a.tensions), short_range(&p, &b.tensions));
    }
}
