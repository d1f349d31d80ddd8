use approx::assert_relative_eq;
use dpcollapse_core::consts::{ANGSTROM, CARBON_MASS};
use dpcollapse_core::kernel::{delta_e_brute, delta_e_fast};
use dpcollapse_core::{BasisAtom, Lattice, SuperpositionConfig, Vec3};
use proptest::prelude::*;
use std::collections::BTreeMap;

const M: f64 = 2.0e-26;

/// Separation rounded to 1e-4 Å, plus the mass product bits.
type Key = ([i64; 3], u64);

fn key(r: Vec3, mass_product: f64) -> Key {
    let q = |x: f64| (x / (1e-4 * ANGSTROM)).round() as i64;
    ([q(r.0[0]), q(r.0[1]), q(r.0[2])], mass_product.to_bits())
}

fn pair_histogram(lat: &Lattice) -> BTreeMap<Key, u64> {
    let atoms = lat.atoms();
    let mut h = BTreeMap::new();
    for a in &atoms {
        for b in &atoms {
            *h.entry(key(a.position - b.position, a.mass * b.mass)).or_insert(0) += 1;
        }
    }
    h
}

fn domain_histogram(lat: &Lattice) -> BTreeMap<Key, u64> {
    let mut h = BTreeMap::new();
    for e in lat.distance_domain() {
        *h.entry(key(e.r, e.mass_product)).or_insert(0) += e.weight;
    }
    h
}

fn heteroatomic(n1: u64, n2: u64) -> Lattice {
    let a = 2.0 * ANGSTROM;
    Lattice::new(
        2,
        &[Vec3::xy(a, 0.0), Vec3::xy(0.3 * a, 0.9 * a)],
        vec![
            BasisAtom::point(Vec3::ZERO, M),
            BasisAtom::point(Vec3::xy(0.41 * a, 0.17 * a), 3.0 * M),
            BasisAtom::point(Vec3::xy(0.13 * a, 0.61 * a), M),
        ],
        &[n1, n2],
    )
    .unwrap()
}

#[test]
fn domain_reproduces_the_pair_multiset() {
    let cases = [
        Lattice::square(1, 1, ANGSTROM, M).unwrap(),
        Lattice::square(7, 3, ANGSTROM, M).unwrap(),
        Lattice::square(31, 32, ANGSTROM, M).unwrap(),
        Lattice::graphene_sheet(5, 9).unwrap(),
        Lattice::graphene_sheet(22, 22).unwrap(),
        Lattice::stacked_graphene(4, 5, 3, 3.35 * ANGSTROM).unwrap(),
        Lattice::simple_cubic(10, 10, 10, ANGSTROM, M).unwrap(),
        heteroatomic(9, 6),
    ];
    for lat in &cases {
        assert!(lat.n_atoms() <= 1000);
        assert_eq!(pair_histogram(lat), domain_histogram(lat), "{:?}", lat.extents());
    }
}

#[test]
fn graphene_carries_carbon_masses() {
    let lat = Lattice::graphene_sheet(3, 3).unwrap();
    assert!(lat.distance_domain().all(|e| e.mass_product == CARBON_MASS * CARBON_MASS));
}

fn lattice_strategy() -> impl Strategy<Value = Lattice> {
    prop_oneof![
        (1u64..12, 1u64..12).prop_map(|(a, b)| Lattice::square(a, b, ANGSTROM, M).unwrap()),
        (1u64..8, 1u64..8).prop_map(|(a, b)| Lattice::graphene_sheet(a, b).unwrap()),
        (1u64..4, 1u64..4, 1u64..4)
            .prop_map(|(a, b, c)| Lattice::stacked_graphene(a, b, c, 3.35 * ANGSTROM).unwrap()),
        (1u64..6, 1u64..6).prop_map(|(a, b)| heteroatomic(a, b)),
    ]
}

fn config(dx: f64, dy: f64, r0: f64) -> SuperpositionConfig {
    SuperpositionConfig::new(Vec3::xy(dx, dy), r0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_sum_to_n_squared(lat in lattice_strategy()) {
        let total: u64 = lat.distance_domain().map(|e| e.weight).sum();
        prop_assert_eq!(total, lat.n_atoms() * lat.n_atoms());
        prop_assert_eq!(lat.distance_domain().count() as u64, lat.domain_len());
    }

    #[test]
    fn domain_is_mirror_symmetric(lat in lattice_strategy()) {
        let h = domain_histogram(&lat);
        for ((r, m), w) in &h {
            let mirror = ([-r[0], -r[1], -r[2]], *m);
            prop_assert_eq!(h.get(&mirror), Some(w));
        }
    }

    #[test]
    fn delta_e_is_positive_and_even_in_d(
        lat in lattice_strategy(),
        dx in -200.0f64..200.0,
        dy in -200.0f64..200.0,
        log_r0 in -0.5f64..3.0,
    ) {
        prop_assume!(dx.hypot(dy) > 1e-3);
        let r0 = 10f64.powf(log_r0) * ANGSTROM;
        let plus = delta_e_fast(&lat, &config(dx * ANGSTROM, dy * ANGSTROM, r0), 1).unwrap();
        let minus = delta_e_fast(&lat, &config(-dx * ANGSTROM, -dy * ANGSTROM, r0), 1).unwrap();
        prop_assert!(plus.delta_e > 0.0);
        prop_assert!((plus.delta_e - minus.delta_e).abs() <= 1e-12 * plus.delta_e);
    }

    #[test]
    fn delta_e_decreases_with_smearing(
        lat in lattice_strategy(),
        d in 1.0f64..300.0,
        log_r0 in -0.5f64..3.0,
        step in 1.01f64..3.0,
    ) {
        let r0 = 10f64.powf(log_r0) * ANGSTROM;
        let narrow = delta_e_fast(&lat, &config(d * ANGSTROM, 0.0, r0), 1).unwrap();
        let wide = delta_e_fast(&lat, &config(d * ANGSTROM, 0.0, r0 * step), 1).unwrap();
        prop_assert!(wide.delta_e < narrow.delta_e);
    }

    #[test]
    fn fast_matches_brute_on_small_lattices(
        lat in lattice_strategy(),
        dx in -100.0f64..100.0,
        dy in -100.0f64..100.0,
        log_r0 in -0.5f64..5.0,
    ) {
        prop_assume!(dx.hypot(dy) > 1e-3);
        let c = config(dx * ANGSTROM, dy * ANGSTROM, 10f64.powf(log_r0) * ANGSTROM);
        let fast = delta_e_fast(&lat, &c, 1).unwrap();
        let brute = delta_e_brute(&lat, &c).unwrap();
        prop_assert!((fast.delta_e - brute.delta_e).abs() <= 1e-12 * brute.delta_e);
    }
}

#[test]
fn pair_radii_smear_beyond_r0() {
    let a = 2.0 * ANGSTROM;
    let make = |radius: f64| {
        Lattice::new(
            2,
            &[Vec3::xy(a, 0.0), Vec3::xy(0.0, a)],
            vec![BasisAtom {
                offset: Vec3::ZERO,
                mass: M,
                radius,
            }],
            &[6, 6],
        )
        .unwrap()
    };
    let c = config(50.0 * ANGSTROM, 0.0, ANGSTROM);
    let with_radius = delta_e_fast(&make(3.0 * ANGSTROM), &c, 1).unwrap().delta_e;
    // R_eff = sqrt(R0² + R²) = sqrt(10) Å for every pair.
    let equivalent = config(50.0 * ANGSTROM, 0.0, 10f64.sqrt() * ANGSTROM);
    let point = delta_e_fast(&make(0.0), &equivalent, 1).unwrap().delta_e;
    assert_relative_eq!(with_radius, point, max_relative = 1e-14);
    assert_relative_eq!(
        with_radius,
        delta_e_brute(&make(3.0 * ANGSTROM), &c).unwrap().delta_e,
        max_relative = 1e-12
    );
}
