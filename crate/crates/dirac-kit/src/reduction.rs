//! Symmetry actions given by Lie-algebra generator fields, invariant-
//! coordinate quotient charts, and Dirac reduction.
//!
//! Reduction pipeline: smooth spanning sections of `D ∩ K⊥` (the sections of
//! `D` whose form part kills every generator) are computed by a pointwise
//! kernel solve with pivots fixed over base samples; the survivors are pushed
//! through the quotient map and the form parts solved back through the slice.

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::dirac::{kernel_combinations, DiracStructure, PontryaginSection};
use crate::error::{Error, Result};
use crate::field::{lie_bracket, lie_derivative_one_form, OneForm, PointMap, ScalarField, VectorField};
use crate::subspace::Subspace;

/// A Lie algebra acting by generator vector fields on a chart. Structure
/// constants follow the anti-homomorphism convention
/// `[ξⁱ_M, ξʲ_M] = −Σ_l c^l_{ij} ξˡ_M`; all-zero constants mean abelian.
#[derive(Clone, Debug)]
pub struct SymmetryAction {
    chart: Chart,
    generators: Vec<VectorField>,
    structure_constants: Vec<Vec<Vec<f64>>>,
}

impl SymmetryAction {
    pub fn new(chart: &Chart, generators: Vec<VectorField>) -> Result<SymmetryAction> {
        let k = generators.len();
        Self::with_structure(chart, generators, vec![vec![vec![0.0; k]; k]; k])
    }

    pub fn with_structure(
        chart: &Chart,
        generators: Vec<VectorField>,
        structure_constants: Vec<Vec<Vec<f64>>>,
    ) -> Result<SymmetryAction> {
        for g in &generators {
            chart.ensure_same(g.chart())?;
        }
        let k = generators.len();
        if structure_constants.len() != k
            || structure_constants.iter().any(|m| m.len() != k || m.iter().any(|r| r.len() != k))
        {
            return Err(Error::Action("structure constants must be k×k×k".into()));
        }
        Ok(SymmetryAction { chart: chart.clone(), generators, structure_constants })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Span of the generator values at a point.
    pub fn vertical_space(&self, p: &[f64]) -> Subspace {
        let vals: Vec<DVector<f64>> = self.generators.iter().map(|g| g.at(p)).collect();
        Subspace::span(self.chart.dim(), &vals)
    }

    /// The infinitesimal generator of a Lie-algebra element.
    pub fn generator_of(&self, xi: &[f64]) -> VectorField {
        assert_eq!(xi.len(), self.dim());
        let mut acc = VectorField::zero(&self.chart);
        for (c, g) in xi.iter().zip(&self.generators) {
            acc = acc.add(&g.scale(*c));
        }
        acc
    }

    /// Pointwise linear independence of the generators plus the bracket
    /// relations `[ξⁱ_M, ξʲ_M] + Σ_l c^l_{ij} ξˡ_M = 0`.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        let k = self.dim();
        if k == 0 {
            return Ok(());
        }
        for p in points {
            if self.vertical_space(p).dim() != k {
                return Err(Error::Action(format!(
                    "generators are linearly dependent at {p:?}"
                )));
            }
        }
        for i in 0..k {
            for j in 0..k {
                let mut residual = lie_bracket(&self.generators[i], &self.generators[j])?;
                for l in 0..k {
                    let c = self.structure_constants[l][i][j];
                    if c != 0.0 {
                        residual = residual.add(&self.generators[l].scale(c));
                    }
                }
                for p in points {
                    let r = residual.at(p).norm();
                    if r > 1e-9 {
                        return Err(Error::Action(format!(
                            "bracket relation [{i},{j}] fails with residual {r:.3e} at {p:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A quotient chart: invariant coordinates realizing the orbit projection,
/// together with a slice picking one point per orbit.
#[derive(Clone, Debug)]
pub struct QuotientChart {
    pub reduced: Chart,
    /// The invariant coordinate functions on the upstairs chart, one per
    /// reduced coordinate.
    pub projection: Vec<ScalarField>,
    /// Map from reduced points to upstairs points with `π ∘ σ = id`.
    pub slice: PointMap,
}

impl QuotientChart {
    pub fn new(
        reduced: Chart,
        projection: Vec<ScalarField>,
        slice: PointMap,
    ) -> Result<QuotientChart> {
        if projection.len() != reduced.dim() {
            return Err(Error::DimensionMismatch {
                expected: reduced.dim(),
                found: projection.len(),
            });
        }
        reduced.ensure_same(slice.source())?;
        for f in &projection {
            slice.target().ensure_same(f.chart())?;
        }
        Ok(QuotientChart { reduced, projection, slice })
    }

    /// Checks `dπ(ξ) = 0`, `π∘σ = id`, and that `dπ` has full rank at slice
    /// points.
    pub fn validate(&self, action: &SymmetryAction, reduced_points: &[Vec<f64>]) -> Result<()> {
        let r = self.reduced.dim();
        for q in reduced_points {
            let m = self.slice.value(q);
            for (i, f) in self.projection.iter().enumerate() {
                let v = f.value(&m);
                if (v - q[i]).abs() > 1e-9 * q[i].abs().max(1.0) {
                    return Err(Error::Action(format!(
                        "slice is not a section of the projection at {q:?} (coordinate {i})"
                    )));
                }
                for g in action.generators() {
                    let d = f.gradient(&m).dot(&g.at(&m));
                    if d.abs() > 1e-9 {
                        return Err(Error::Action(format!(
                            "projection coordinate {i} is not invariant (dπ(ξ) = {d:.3e} at {m:?})"
                        )));
                    }
                }
            }
            let jac = DMatrix::from_fn(r, self.slice.target().dim(), |i, j| {
                self.projection[i].gradient(&m)[j]
            });
            if Subspace::from_columns(&jac.transpose(), 1e-9).dim() != r {
                return Err(Error::Degenerate {
                    what: "projection Jacobian rank".into(),
                    point: m,
                });
            }
        }
        Ok(())
    }
}

/// Result of the invariance test of a Dirac structure under an action.
#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub max_residual: f64,
    /// `(generator, section, point, residual)` of the first failure.
    pub witness: Option<(usize, usize, Vec<f64>, f64)>,
}

/// Tests `(£_ξ X, £_ξ α) ∈ D` for every generator and spanning section at
/// the given points.
pub fn check_dirac_invariance(
    d: &DiracStructure,
    action: &SymmetryAction,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<InvarianceReport> {
    d.chart().ensure_same(action.chart())?;
    let mut max_residual = 0.0f64;
    let mut witness = None;
    for (gi, g) in action.generators().iter().enumerate() {
        for (si, s) in d.sections().iter().enumerate() {
            let lx = lie_bracket(g, &s.vector)?;
            let la = lie_derivative_one_form(g, &s.form)?;
            let pair = PontryaginSection::new(lx, la)?;
            for p in points {
                let r = d.membership_residual_scaled(p, &pair.at(p));
                if r > max_residual {
                    max_residual = r;
                }
                if r > tol && witness.is_none() {
                    witness = Some((gi, si, p.clone(), r));
                }
            }
        }
    }
    Ok(InvarianceReport { invariant: witness.is_none(), max_residual, witness })
}

/// Smooth spanning sections of `D ∩ K⊥ = D ∩ (TM ⊕ V°)`.
#[derive(Clone, Debug)]
pub struct DCapKPerp {
    pub sections: Vec<PontryaginSection>,
    /// Rank of the generator-pairing system; section count is
    /// `#sections(D) − rank`.
    pub rank: usize,
}

/// Computes `D ∩ K⊥` by solving, for combinations of the spanning sections,
/// the conditions `α(ξ_M) = 0` for all generators. Fails hard when the
/// sampled rank of the condition system is not constant.
pub fn d_cap_k_perp(
    d: &DiracStructure,
    action: &SymmetryAction,
    base_points: &[Vec<f64>],
) -> Result<DCapKPerp> {
    d.chart().ensure_same(action.chart())?;
    if action.dim() == 0 {
        return Ok(DCapKPerp { sections: d.sections().to_vec(), rank: 0 });
    }
    let rows: Vec<Vec<ScalarField>> = action
        .generators()
        .iter()
        .map(|g| d.sections().iter().map(|s| s.form.apply(g)).collect())
        .collect();
    let samples: Vec<(Vec<f64>, DMatrix<f64>)> = base_points
        .iter()
        .map(|p| {
            let m = DMatrix::from_fn(rows.len(), d.sections().len(), |a, i| rows[a][i].value(p));
            (p.clone(), m)
        })
        .collect();
    let rank = crate::subspace::constant_rank("D ∩ K⊥ condition system", &samples, d.tol())?;
    let sections =
        kernel_combinations("D ∩ K⊥", &rows, d.sections(), base_points, d.tol())?;
    debug_assert_eq!(sections.len(), d.sections().len() - rank);
    Ok(DCapKPerp { sections, rank })
}

/// Pushes the sections of `D ∩ K⊥` through a quotient chart, producing the
/// reduced Dirac structure on the reduced chart.
pub fn reduce_dirac(
    d: &DiracStructure,
    action: &SymmetryAction,
    quotient: &QuotientChart,
    reduced_points: &[Vec<f64>],
) -> Result<DiracStructure> {
    let base_points: Vec<Vec<f64>> =
        reduced_points.iter().map(|q| quotient.slice.value(q)).collect();
    let dk = d_cap_k_perp(d, action, &base_points)?;
    reduce_sections(&dk.sections, d, action, quotient, reduced_points)
}

/// The pushdown step shared by full reduction and leaf reduction.
pub fn reduce_sections(
    sections: &[PontryaginSection],
    d: &DiracStructure,
    action: &SymmetryAction,
    quotient: &QuotientChart,
    reduced_points: &[Vec<f64>],
) -> Result<DiracStructure> {
    let n = d.chart().dim();
    let reduced = &quotient.reduced;
    let r = reduced.dim();
    let k = action.dim();
    if n != r + k {
        return Err(Error::DimensionMismatch { expected: n - k, found: r });
    }

    // dπ composed with the slice, as fields on the reduced chart.
    let dpi: Vec<Vec<ScalarField>> = (0..r)
        .map(|a| {
            (0..n)
                .map(|i| quotient.projection[a].partial(i).compose(&quotient.slice))
                .collect()
        })
        .collect();
    // slice Jacobian entries as fields on the reduced chart
    let dslice: Vec<Vec<ScalarField>> = (0..n)
        .map(|i| (0..r).map(|a| quotient.slice.comps()[i].partial(a)).collect())
        .collect();

    let mut pushed = Vec::new();
    for sec in sections {
        let x_comps: Vec<ScalarField> = (0..r)
            .map(|a| {
                let mut acc = ScalarField::zero(reduced);
                for i in 0..n {
                    acc = acc.add(&dpi[a][i].mul(&sec.vector.comps()[i].compose(&quotient.slice)));
                }
                acc
            })
            .collect();
        // ᾱ(∂_a) = α(∂_a σ); valid because α kills the vertical directions,
        // so any right inverse of dπ gives the same answer.
        let a_comps: Vec<ScalarField> = (0..r)
            .map(|a| {
                let mut acc = ScalarField::zero(reduced);
                for i in 0..n {
                    acc = acc.add(&dslice[i][a].mul(&sec.form.comps()[i].compose(&quotient.slice)));
                }
                acc
            })
            .collect();
        pushed.push(PontryaginSection::new(
            VectorField::new(reduced, x_comps)?,
            OneForm::new(reduced, a_comps)?,
        )?);
    }

    // Runtime check that a second right inverse of dπ gives the same form
    // parts: J_σ + Ξ C is another right inverse for any C since dπ Ξ = 0.
    for q in reduced_points.iter().take(3) {
        let m = quotient.slice.value(q);
        let jpi = DMatrix::from_fn(r, n, |a, i| quotient.projection[a].gradient(&m)[i]);
        let jsigma = DMatrix::from_fn(n, r, |i, a| quotient.slice.comps()[i].gradient(q)[a]);
        if k > 0 {
            let xi = DMatrix::from_fn(n, k, |i, g| action.generators()[g].at(&m)[i]);
            let c = DMatrix::from_fn(k, r, |i, j| ((i * 31 + j * 17) % 7) as f64 / 7.0 - 0.4);
            let alt = &jsigma + &xi * &c;
            // consistency of both right inverses
            let id_residual = (&jpi * &alt - DMatrix::<f64>::identity(r, r)).norm();
            if id_residual > 1e-7 {
                return Err(Error::Degenerate {
                    what: "slice is not a right inverse of the projection".into(),
                    point: m.clone(),
                });
            }
            for sec in sections {
                let alpha = sec.form.at(&m);
                let a1 = jsigma.transpose() * &alpha;
                let a2 = alt.transpose() * &alpha;
                if (&a1 - &a2).norm() > 1e-8 * a1.norm().max(1.0) {
                    return Err(Error::Action(format!(
                        "form part is not basic at {m:?}; it does not kill the vertical bundle"
                    )));
                }
            }
        }
    }

    // Select exactly dim(reduced) sections when the pushdown over-spans.
    let selected = if pushed.len() > r {
        let matrices: Vec<DMatrix<f64>> = reduced_points
            .iter()
            .take(8)
            .map(|q| {
                DMatrix::from_fn(2 * r, pushed.len(), |i, j| pushed[j].at(q)[i])
            })
            .collect();
        let pivots = crate::subspace::choose_pivots(&matrices, r)?;
        pivots.into_iter().map(|i| pushed[i].clone()).collect()
    } else {
        pushed
    };

    let out = DiracStructure::with_tol(reduced, selected, d.tol())?;
    out.check_lagrangian(reduced_points)?;
    Ok(out)
}

/// Cross-check of the reduced structure: every reduced section must lift to a
/// section of `D` (projectable vector plus pulled-back form), and every
/// `D ∩ K⊥` value must push into the reduced fiber.
pub fn verify_method_b(
    d: &DiracStructure,
    action: &SymmetryAction,
    quotient: &QuotientChart,
    d_red: &DiracStructure,
    reduced_points: &[Vec<f64>],
    tol: f64,
) -> Result<(bool, f64)> {
    let n = d.chart().dim();
    let r = quotient.reduced.dim();
    let k = action.dim();
    let base_points: Vec<Vec<f64>> =
        reduced_points.iter().map(|q| quotient.slice.value(q)).collect();
    let dk = d_cap_k_perp(d, action, &base_points)?;
    let mut max_residual = 0.0f64;

    for q in reduced_points {
        let m = quotient.slice.value(q);
        let jpi = DMatrix::from_fn(r, n, |a, i| quotient.projection[a].gradient(&m)[i]);
        let jsigma = DMatrix::from_fn(n, r, |i, a| quotient.slice.comps()[i].gradient(q)[a]);
        let fiber = d.fiber(&m);

        // Downstairs sections lift into D: X = J_σ X̄ + Ξ v for the best v.
        for sec in d_red.sections() {
            let xbar = sec.vector.at(q);
            let abar = sec.form.at(q);
            let alpha_up = jpi.transpose() * &abar;
            let x0 = &jsigma * &xbar;
            // minimize the fiber distance of ((x0 + Ξ v), α_up) over v
            let residual = if k == 0 {
                let mut pair = DVector::zeros(2 * n);
                pair.rows_mut(0, n).copy_from(&x0);
                pair.rows_mut(n, n).copy_from(&alpha_up);
                fiber.residual_of(&pair)
            } else {
                let xi = DMatrix::from_fn(n, k, |i, g| action.generators()[g].at(&m)[i]);
                // stack: pair(v) = b + M v with M touching only vector slots
                let mut b = DVector::zeros(2 * n);
                b.rows_mut(0, n).copy_from(&x0);
                b.rows_mut(n, n).copy_from(&alpha_up);
                let mut mm = DMatrix::zeros(2 * n, k);
                mm.view_mut((0, 0), (n, k)).copy_from(&xi);
                // project residual off the fiber: r(v) = (I − P)(b + M v)
                let pb = &b - fiber.project(&b);
                let pm = {
                    let mut out = DMatrix::zeros(2 * n, k);
                    for j in 0..k {
                        let col = mm.column(j).into_owned();
                        out.set_column(j, &(&col - fiber.project(&col)));
                    }
                    out
                };
                let svd = pm.clone().svd(true, true);
                let v = svd.solve(&(-&pb), 1e-12).unwrap_or_else(|_| DVector::zeros(k));
                let scale = b.norm().max(1.0);
                (&pb + &pm * v).norm() / scale
            };
            max_residual = max_residual.max(residual);
        }

        // Upstairs D ∩ K⊥ values push into the downstairs fiber.
        let red_fiber = d_red.fiber(q);
        let red_scale = d_red
            .sections()
            .iter()
            .map(|s| s.at(q).norm())
            .fold(1.0f64, f64::max);
        for sec in &dk.sections {
            let x = sec.vector.at(&m);
            let alpha = sec.form.at(&m);
            let mut pair = DVector::zeros(2 * r);
            pair.rows_mut(0, r).copy_from(&(&jpi * &x));
            pair.rows_mut(r, r).copy_from(&(jsigma.transpose() * &alpha));
            max_residual = max_residual.max(red_fiber.residual_scaled(&pair, red_scale));
        }
    }
    Ok((max_residual <= tol, max_residual))
}

/// Whether `[X, ξ_M] ∈ V` for every generator at all sampled points: the
/// criterion for `X` to split into an equivariant part plus a vertical part
/// and hence descend to the quotient.
pub fn is_descending_field(
    x: &VectorField,
    action: &SymmetryAction,
    points: &[Vec<f64>],
) -> Result<bool> {
    for g in action.generators() {
        let b = lie_bracket(x, g)?;
        for p in points {
            let v = action.vertical_space(p);
            let val = b.at(p);
            if val.norm() > 1e-12 && v.residual_of(&val) > 1e-8 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::graph_of_two_form_full;
    use crate::field::TwoForm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn vertical_space_of_translations() {
        let c = Chart::new("m", &["x", "y"], &[(-1.0, 1.0); 2]).unwrap();
        let a = SymmetryAction::new(&c, vec![VectorField::basis(&c, 0)]).unwrap();
        let v = a.vertical_space(&[0.3, 0.4]);
        assert_eq!(v.dim(), 1);
        let zero = SymmetryAction::new(&c, vec![]).unwrap();
        assert_eq!(zero.vertical_space(&[0.3, 0.4]).dim(), 0);
    }

    #[test]
    fn canonical_graph_invariance_and_counterexample() {
        let c = Chart::new("p2", &["x", "y"], &[(-2.0, 2.0); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = c.sample_many(16, &mut rng);

        // graph of dx∧dy is invariant under x-translation
        let omega = TwoForm::from_upper(&c, &[(0, 1, ScalarField::constant(&c, 1.0))]);
        let d = graph_of_two_form_full(&omega).unwrap();
        let a = SymmetryAction::new(&c, vec![VectorField::basis(&c, 0)]).unwrap();
        let rep = check_dirac_invariance(&d, &a, &pts, 1e-8).unwrap();
        assert!(rep.invariant);

        // graph of x·dx∧dy is not
        let omega_x =
            TwoForm::from_upper(&c, &[(0, 1, ScalarField::coordinate(&c, 0))]);
        let dx = graph_of_two_form_full(&omega_x).unwrap();
        let rep = check_dirac_invariance(&dx, &a, &pts, 1e-8).unwrap();
        assert!(!rep.invariant);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn trivial_action_leaves_d_cap_k_perp_equal_to_d() {
        let c = Chart::new("p2", &["x", "y"], &[(-2.0, 2.0); 2]).unwrap();
        let omega = TwoForm::from_upper(&c, &[(0, 1, ScalarField::constant(&c, 1.0))]);
        let d = graph_of_two_form_full(&omega).unwrap();
        let a = SymmetryAction::new(&c, vec![]).unwrap();
        let dk = d_cap_k_perp(&d, &a, &[vec![0.1, 0.2]]).unwrap();
        assert_eq!(dk.sections.len(), d.sections().len());
        assert_eq!(dk.rank, 0);
    }

    #[test]
    fn translation_reduction_of_canonical_form() {
        // (x, y, p_x, p_y), ω canonical, reduce by (x, y)-translations:
        // the reduced structure on (p_x, p_y) is the trivial bivector graph.
        let c = Chart::new("ph4", &["x", "y", "p_x", "p_y"], &[(-2.0, 2.0); 4]).unwrap();
        let omega = TwoForm::from_upper(
            &c,
            &[
                (0, 2, ScalarField::constant(&c, 1.0)),
                (1, 3, ScalarField::constant(&c, 1.0)),
            ],
        );
        let d = graph_of_two_form_full(&omega).unwrap();
        let action = SymmetryAction::new(
            &c,
            vec![VectorField::basis(&c, 0), VectorField::basis(&c, 1)],
        )
        .unwrap();
        let reduced = Chart::new("red", &["p_x", "p_y"], &[(-2.0, 2.0); 2]).unwrap();
        let projection = vec![ScalarField::coordinate(&c, 2), ScalarField::coordinate(&c, 3)];
        let slice = PointMap::parse(&reduced, &c, &["0", "0", "p_x", "p_y"], &no_params()).unwrap();
        let q = QuotientChart::new(reduced.clone(), projection, slice).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rpts = reduced.sample_many(12, &mut rng);
        q.validate(&action, &rpts).unwrap();
        let d_red = reduce_dirac(&d, &action, &q, &rpts).unwrap();
        for p in &rpts {
            let ch = d_red.characteristic_spaces(p);
            assert_eq!(ch.g1.dim(), 0);
            assert_eq!(ch.p1.dim(), 2);
        }
        // method agreement and closedness preservation
        let (ok, res) = verify_method_b(&d, &action, &q, &d_red, &rpts, 1e-8).unwrap();
        assert!(ok, "method disagreement {res:.3e}");
        assert!(d.is_closed(3, 12, 1e-8).unwrap().closed);
        assert!(d_red.is_closed(3, 12, 1e-8).unwrap().closed);
    }

    #[test]
    fn descending_field_examples() {
        let c = Chart::new("m", &["x", "y"], &[(-1.0, 1.0); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = c.sample_many(12, &mut rng);
        let a = SymmetryAction::new(&c, vec![VectorField::basis(&c, 1)]).unwrap();
        // a generator always descends
        assert!(is_descending_field(&a.generators()[0], &a, &pts).unwrap());
        // y ∂_x does not descend along ∂_y
        let ydx = VectorField::parse(&["y", "0"], &c, &no_params()).unwrap();
        assert!(!is_descending_field(&ydx, &a, &pts).unwrap());
    }

    #[test]
    fn non_abelian_structure_constants_are_checked() {
        // heading rotation + translations with the wrong constants fail
        let c = Chart::new("m", &["theta", "x", "y"], &[(-1.0, 1.0); 3]).unwrap();
        let rot = VectorField::parse(&["1", "-y", "x"], &c, &no_params()).unwrap();
        let gens = vec![rot, VectorField::basis(&c, 1), VectorField::basis(&c, 2)];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = c.sample_many(8, &mut rng);
        // abelian constants are wrong for se(2)
        let bad = SymmetryAction::new(&c, gens.clone()).unwrap();
        assert!(bad.validate(&pts).is_err());
        // correct anti-homomorphism constants: [ξ1, ξ2] = ξ3, [ξ1, ξ3] = −ξ2
        let k = 3;
        let mut cc = vec![vec![vec![0.0; k]; k]; k];
        cc[2][0][1] = 1.0;
        cc[2][1][0] = -1.0;
        cc[1][0][2] = -1.0;
        cc[1][2][0] = 1.0;
        let good = SymmetryAction::with_structure(&c, gens, cc).unwrap();
        good.validate(&pts).unwrap();
    }
}
