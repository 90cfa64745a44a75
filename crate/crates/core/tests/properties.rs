//! Randomized invariants of energies, resistances, measures and solvers.

use std::sync::OnceLock;

use gasket_core::fractal::Address;
use gasket_core::io::{format_float, to_json};
use gasket_core::solver::{solve_schrodinger_direct, GreenOperator};
use gasket_core::{DirichletProblem, DiscreteFunction, Model, RadonMeasure, ResistanceTable, Word};
use proptest::prelude::*;

const LEVEL: usize = 4;

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| Model::sierpinski(LEVEL + 1))
}

fn table() -> &'static ResistanceTable {
    static TABLE: OnceLock<ResistanceTable> = OnceLock::new();
    TABLE.get_or_init(|| model().resistance_table(LEVEL).unwrap())
}

fn nv(n: usize) -> usize {
    model().level(n).unwrap().vertex_count()
}

fn function(n: usize) -> impl Strategy<Value = DiscreteFunction> {
    prop::collection::vec(-2.0f64..2.0, nv(n)).prop_map(move |v| DiscreteFunction::new(n, v))
}

fn energy(u: &DiscreteFunction) -> f64 {
    let e = model().graph_energy(u.level()).unwrap();
    e.energy(u, u).unwrap()
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..3, 0..=max_len).prop_map(Word::new)
}

fn measure() -> impl Strategy<Value = RadonMeasure> {
    let atom = (word(LEVEL - 1), 0usize..3, 0.0f64..2.0);
    let part = (word(2), 0.0f64..3.0);
    (prop::collection::vec(atom, 0..4), prop::collection::vec(part, 0..3)).prop_map(|(atoms, parts)| {
        let mut m = RadonMeasure::zero();
        for (w, a, mass) in atoms {
            m = m.with_atom(Address::new(w, a), mass);
        }
        for (w, c) in parts {
            m = m.with_part(w, c);
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_monotone_under_restriction(u in function(LEVEL), m in 0usize..LEVEL) {
        let coarse = u.restrict(model(), m).unwrap();
        prop_assert!(energy(&coarse) <= energy(&u) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn harmonic_extension_preserves_energy(u in function(LEVEL - 1)) {
        let fine = model().harmonic_extend(&u).unwrap();
        let (a, b) = (energy(&u), energy(&fine));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        prop_assert_eq!(&fine.values()[..u.len()], u.values());
    }

    #[test]
    fn unit_truncation_does_not_raise_energy(u in function(LEVEL)) {
        let clamped = DiscreteFunction::new(LEVEL, u.values().iter().map(|x| x.clamp(0.0, 1.0)).collect());
        prop_assert!(energy(&clamped) <= energy(&u) + 1e-12);
    }

    #[test]
    fn oscillation_is_bounded_by_resistance_and_energy(u in function(LEVEL), p in 0usize..123, q in 0usize..123) {
        let d = u.get(p) - u.get(q);
        prop_assert!(d * d <= table().resistance(p, q) * energy(&u) * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn resistance_is_a_metric(p in 0usize..123, q in 0usize..123, r in 0usize..123) {
        let t = table();
        prop_assert!((t.resistance(p, q) - t.resistance(q, p)).abs() < 1e-12);
        prop_assert!(t.resistance(p, q) <= t.resistance(p, r) + t.resistance(r, q) + 1e-12);
        if p == q {
            prop_assert!(t.resistance(p, q).abs() < 1e-12);
        } else {
            prop_assert!(t.resistance(p, q) > 0.0);
        }
    }

    #[test]
    fn resistance_is_level_independent(w in word(LEVEL - 1), a in 0usize..3, v in word(LEVEL - 1), b in 0usize..3) {
        let m = model();
        let p = m.hierarchy().canonicalize(&w, a).unwrap();
        let q = m.hierarchy().canonicalize(&v, b).unwrap();
        let r1 = m.effective_resistance(&p, &q, LEVEL - 1).unwrap();
        let r2 = m.effective_resistance(&p, &q, LEVEL + 1).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-10 * (1.0 + r1));
    }

    #[test]
    fn bumps_form_a_partition_of_unity(n in 0usize..LEVEL) {
        let m = model();
        let mut sum = vec![0.0; nv(LEVEL)];
        for v in 0..nv(n) {
            let p = m.level(n).unwrap().address(v);
            let h = m.bump(&p, n, LEVEL).unwrap();
            for (s, x) in sum.iter_mut().zip(h.values()) {
                *s += x;
            }
        }
        prop_assert!(sum.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn load_vectors_carry_the_total_mass(sigma in measure(), n in (LEVEL - 1)..=LEVEL) {
        let m = model();
        let load = sigma.load_vector(m, n).unwrap();
        let mass = sigma.total_mass(m);
        prop_assert!((load.total() - mass).abs() < 1e-12 * (1.0 + mass));
        prop_assert!(load.values.iter().all(|&x| x >= -1e-15));
    }

    #[test]
    fn vertex_sets_are_nested(n in 0usize..LEVEL) {
        let m = model();
        let (coarse, fine) = (m.level(n).unwrap(), m.level(n + 1).unwrap());
        for v in 0..coarse.vertex_count() {
            prop_assert_eq!(coarse.address(v), fine.address(v));
        }
    }

    #[test]
    fn green_kernel_is_symmetric_and_nonnegative(x in 0usize..123, y in 0usize..123) {
        let g = green();
        let (a, b) = (g.entry(x, y), g.entry(y, x));
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= -1e-15);
        if x < 3 || y < 3 {
            prop_assert!(a.abs() < 1e-15);
        }
    }

    #[test]
    fn solutions_are_linear_in_the_data(
        g1 in prop::array::uniform3(-1.0f64..1.0),
        g2 in prop::array::uniform3(-1.0f64..1.0),
        s1 in measure(),
        s2 in measure(),
        t in -2.0f64..2.0,
    ) {
        let m = model();
        let nu = RadonMeasure::self_similar();
        let solve = |g: Vec<f64>, s: RadonMeasure| {
            let p = DirichletProblem::on_boundary(m, LEVEL, g).unwrap().with_source(s).with_potential(nu.clone());
            solve_schrodinger_direct(m, &p).unwrap().function
        };
        let combined: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + t * b).collect();
        let lhs = solve(combined, s1.plus(&s2.scaled(t)));
        let (u1, u2) = (solve(g1.to_vec(), s1), solve(g2.to_vec(), s2));
        for v in 0..lhs.len() {
            prop_assert!((lhs.get(v) - u1.get(v) - t * u2.get(v)).abs() < 1e-9);
        }
    }

    #[test]
    fn floats_round_trip_through_json(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        let text = to_json(&serde_json::json!({"x": x})).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back["x"].as_f64().unwrap(), x);
    }
}

fn green() -> &'static GreenOperator<'static> {
    static GREEN: OnceLock<GreenOperator<'static>> = OnceLock::new();
    GREEN.get_or_init(|| GreenOperator::on_boundary(model(), LEVEL).unwrap())
}
