//! Cross-cutting property tests: independent finite-difference oracles for
//! the jet layer, randomized subspace identities, and regression pins for
//! the reduced structures of the knife-edge systems derived by hand from
//! the reduction equations.

use std::collections::BTreeMap;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dirac_kit::catalog::load;
use dirac_kit::report::{reduced_structure, AnalysisOptions};
use dirac_kit::{
    Chart, OneForm, PontryaginSection, ScalarField, Subspace, VectorField,
};

fn no_params() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

/// Independent central-difference gradient of a scalar field.
fn fd_gradient(f: &ScalarField, p: &[f64], h: f64) -> DVector<f64> {
    DVector::from_fn(p.len(), |i, _| {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[i] += h;
        b[i] -= h;
        (f.value(&a) - f.value(&b)) / (2.0 * h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Parsed expressions differentiate consistently with finite differences
    /// at random interior points.
    #[test]
    fn parsed_gradients_match_finite_differences(
        x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5,
    ) {
        let chart = Chart::new("m", &["x", "y", "z"], &[(-2.0, 2.0); 3]).unwrap();
        let f = ScalarField::parse(
            "sin(x)*y^2 - sqrt(4+z^2)/(1+x^2) + x*y*z",
            &chart,
            &no_params(),
        )
        .unwrap();
        let p = [x, y, z];
        let g = f.gradient(&p);
        let fd = fd_gradient(&f, &p, 4.0e-5);
        let scale = g.norm().max(1.0);
        prop_assert!((g - fd).norm() / scale < 1e-6);
    }

    /// Span/intersection dimensions obey the Grassmann identity and the
    /// double annihilator is the identity.
    #[test]
    fn subspace_identities(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let n = 2 + (rng.gen::<u64>() % 5) as usize;
        let ka = (rng.gen::<u64>() % (n as u64 + 1)) as usize;
        let kb = (rng.gen::<u64>() % (n as u64 + 1)) as usize;
        let mut vecs = |k: usize| -> Vec<DVector<f64>> {
            (0..k).map(|_| DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0)).collect()
        };
        let a = Subspace::span(n, &vecs(ka));
        let b = Subspace::span(n, &vecs(kb));
        prop_assert_eq!(
            a.sum(&b).unwrap().dim() + a.intersect(&b).unwrap().dim(),
            a.dim() + b.dim()
        );
        prop_assert!(a.annihilator().annihilator().equals(&a));
    }
}

/// The reduced structure of the knife edge under its full lifted symmetry,
/// derived by hand from the reduction equations: on invariant coordinates
/// `(u, v)` (momentum along and across the blade) the span is
/// `{(−(v/s) ∂v, du), (v ∂u, s dv)}`.
#[test]
fn knife_edge_reduced_structure_matches_hand_derivation() {
    let entry = load("chaplygin_skate", &no_params()).unwrap();
    let built = entry.actions.iter().find(|a| a.name == "SE2").unwrap();
    let options = AnalysisOptions { seed: 42, samples: 48, tol: 1e-9 };
    let (d_red, _, red_points) = reduced_structure(&entry, built, &options).unwrap();
    let chart = &built.quotient.reduced; // coords (p_x, p_y) = (u, v)
    let s = entry.params["s"];

    let expected = vec![
        PontryaginSection::new(
            VectorField::parse(&["0", &format!("-p_y/{s}")], chart, &no_params()).unwrap(),
            OneForm::parse(&["1", "0"], chart, &no_params()).unwrap(),
        )
        .unwrap(),
        PontryaginSection::new(
            VectorField::parse(&["p_y", "0"], chart, &no_params()).unwrap(),
            OneForm::parse(&["0", &format!("{s}")], chart, &no_params()).unwrap(),
        )
        .unwrap(),
    ];
    for q in red_points.iter().take(32) {
        let want = Subspace::span(4, &expected.iter().map(|e| e.at(q)).collect::<Vec<_>>());
        assert!(
            d_red.fiber(q).equals(&want),
            "reduced knife-edge span mismatch at {q:?}"
        );
    }
    // and it is closed (the graph of a genuine Poisson structure)
    assert!(d_red.is_closed(7, 24, 1e-7).unwrap().closed);
}

/// Same regression for the rotor variant: the reduced span on
/// `(p_phi, u, v)` is `{(0, dp_phi), (−(v/s) ∂v, du), (v ∂u, dp_phi + s dv)}`.
#[test]
fn rotor_knife_edge_reduced_structure_matches_hand_derivation() {
    let entry = load("skate_with_rotor", &no_params()).unwrap();
    let built = entry.actions.iter().find(|a| a.name == "S1xSE2").unwrap();
    let options = AnalysisOptions { seed: 42, samples: 48, tol: 1e-9 };
    let (d_red, _, red_points) = reduced_structure(&entry, built, &options).unwrap();
    let chart = &built.quotient.reduced; // coords (p_phi, p_x, p_y)
    let s = entry.params["s"];

    let expected = vec![
        PontryaginSection::new(
            VectorField::zero(chart),
            OneForm::parse(&["1", "0", "0"], chart, &no_params()).unwrap(),
        )
        .unwrap(),
        PontryaginSection::new(
            VectorField::parse(&["0", "0", &format!("-p_y/{s}")], chart, &no_params()).unwrap(),
            OneForm::parse(&["0", "1", "0"], chart, &no_params()).unwrap(),
        )
        .unwrap(),
        PontryaginSection::new(
            VectorField::parse(&["0", "p_y", "0"], chart, &no_params()).unwrap(),
            OneForm::parse(&["1", "0", &format!("{s}")], chart, &no_params()).unwrap(),
        )
        .unwrap(),
    ];
    for q in red_points.iter().take(24) {
        let want = Subspace::span(6, &expected.iter().map(|e| e.at(q)).collect::<Vec<_>>());
        assert!(
            d_red.fiber(q).equals(&want),
            "reduced rotor span mismatch at {q:?}"
        );
    }
}

/// The knife-edge reaction codistribution equals the full horizontal
/// annihilator under the lifted symmetry, and momentum conservation holds
/// only for the rotor shift among the rotor generators.
#[test]
fn knife_edge_reaction_and_conservation_verdicts() {
    let entry = load("skate_with_rotor", &no_params()).unwrap();
    let built = entry.actions.iter().find(|a| a.name == "S1xSE2").unwrap();
    let options = AnalysisOptions { seed: 42, samples: 24, tol: 1e-9 };
    let (_, dk, _) = reduced_structure(&entry, built, &options).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = entry.phase.m_chart.sample_many(12, &mut rng);
    for p in &pts {
        let r = dirac_kit::nonholonomic::reaction_space(&entry.phase, &dk, p);
        let h = entry.phase.horizontal_space(p);
        assert!(r.equals(&h.annihilator()), "reaction should fill the annihilator");
    }
    let verdicts: Vec<bool> = (0..4)
        .map(|i| {
            let mut xi = vec![0.0; 4];
            xi[i] = 1.0;
            dirac_kit::nonholonomic::conserved_criterion(
                &entry.phase,
                &built.lifted.action,
                &dk,
                &xi,
                &pts,
            )
            .unwrap()
        })
        .collect();
    assert_eq!(verdicts, vec![true, false, false, false]);
}
