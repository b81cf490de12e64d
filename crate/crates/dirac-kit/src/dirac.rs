//! Dirac structures on a chart: spanned Lagrangian subbundles of the
//! Pontryagin bundle `TM ⊕ T*M`, with the symmetric pairing, Courant
//! brackets, characteristic distributions, closedness, the induced bracket on
//! admissible functions, implicit Hamiltonian solves, and restriction to
//! level-set submanifolds.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::{
    exterior_derivative, lie_bracket, lie_derivative_one_form, solve_field_system, OneForm,
    PointMap, ScalarField, TwoForm, VectorField,
};
use crate::subspace::Subspace;

/// A section of the Pontryagin bundle: a vector field paired with a 1-form
/// on the same chart.
#[derive(Clone, Debug)]
pub struct PontryaginSection {
    pub vector: VectorField,
    pub form: OneForm,
}

impl PontryaginSection {
    pub fn new(vector: VectorField, form: OneForm) -> Result<PontryaginSection> {
        vector.chart().ensure_same(form.chart())?;
        Ok(PontryaginSection { vector, form })
    }

    pub fn chart(&self) -> &Chart {
        self.vector.chart()
    }

    /// The stacked value `(X(m), α(m))` in the 2n-dimensional fiber.
    pub fn at(&self, p: &[f64]) -> DVector<f64> {
        let x = self.vector.at(p);
        let a = self.form.at(p);
        let n = x.len();
        DVector::from_fn(2 * n, |i, _| if i < n { x[i] } else { a[i - n] })
    }

    pub fn add(&self, o: &PontryaginSection) -> PontryaginSection {
        PontryaginSection {
            vector: self.vector.add(&o.vector),
            form: self.form.add(&o.form),
        }
    }

    pub fn scale_field(&self, f: &ScalarField) -> PontryaginSection {
        PontryaginSection {
            vector: self.vector.scale_field(f),
            form: self.form.scale_field(f),
        }
    }
}

/// The symmetric pairing `⟨(u, α), (v, β)⟩ = β(u) + α(v)` on a fiber.
pub fn pontryagin_pairing(
    u: &DVector<f64>,
    alpha: &DVector<f64>,
    v: &DVector<f64>,
    beta: &DVector<f64>,
) -> f64 {
    beta.dot(u) + alpha.dot(v)
}

/// The bracket on Pontryagin sections. With `skew` it is the skew-symmetric
/// variant `([X,Y], £_X β − i_Y dα − ½ d⟨a,b⟩)`; without, the truncated
/// bracket `([X,Y], £_X β − i_Y dα)` used for closedness.
pub fn courant_bracket(
    a: &PontryaginSection,
    b: &PontryaginSection,
    skew: bool,
) -> Result<PontryaginSection> {
    a.chart().ensure_same(b.chart())?;
    let vector = lie_bracket(&a.vector, &b.vector)?;
    let mut form = lie_derivative_one_form(&a.vector, &b.form)?
        .sub(&exterior_derivative(&a.form).interior(&b.vector));
    if skew {
        let pairing = b.form.apply(&a.vector).add(&a.form.apply(&b.vector));
        form = form.sub(&pairing.differential().scale(0.5));
    }
    PontryaginSection::new(vector, form)
}

/// The four characteristic subspaces of a Dirac fiber.
#[derive(Clone, Debug)]
pub struct CharacteristicSpaces {
    pub g0: Subspace,
    pub g1: Subspace,
    pub p0: Subspace,
    pub p1: Subspace,
    /// Set when a rank decision was within a factor of ten of the cutoff.
    pub rank_warning: bool,
}

/// Outcome of the sampled closedness test.
#[derive(Clone, Debug)]
pub struct ClosednessReport {
    pub closed: bool,
    pub max_residual: f64,
    /// `(section i, section j, point, residual)` for the first failure.
    pub witness: Option<(usize, usize, Vec<f64>, f64)>,
}

/// Solution data of the implicit equation `(X(m), dH(m)) ∈ D(m)`.
#[derive(Clone, Debug)]
pub struct HamiltonianSolution {
    pub x: DVector<f64>,
    /// Dimension of the solution coset (`dim G0(m)`); zero means unique.
    pub coset_dim: usize,
    /// `dH(X)(m)`, which vanishes for any solution.
    pub energy_residual: f64,
}

/// A level-set submanifold for restriction: a chart for the submanifold, an
/// embedding into the ambient chart, and the level functions that cut it out.
#[derive(Clone)]
pub struct LevelSet {
    pub chart: Chart,
    pub embedding: PointMap,
    pub level_functions: Vec<ScalarField>,
}

/// A Dirac structure presented by smooth spanning sections. The fiber rank
/// must equal the chart dimension at every sampled point and all pairings
/// between sections must vanish (Lagrangian condition); `check_lagrangian`
/// asserts both.
#[derive(Clone, Debug)]
pub struct DiracStructure {
    chart: Chart,
    sections: Vec<PontryaginSection>,
    tol: f64,
}

impl DiracStructure {
    pub fn new(chart: &Chart, sections: Vec<PontryaginSection>) -> Result<DiracStructure> {
        Self::with_tol(chart, sections, crate::subspace::DEFAULT_TOL)
    }

    pub fn with_tol(
        chart: &Chart,
        sections: Vec<PontryaginSection>,
        tol: f64,
    ) -> Result<DiracStructure> {
        if sections.is_empty() {
            return Err(Error::InvalidParameter("a Dirac structure needs sections".into()));
        }
        for s in &sections {
            chart.ensure_same(s.chart())?;
        }
        Ok(DiracStructure { chart: chart.clone(), sections, tol })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn sections(&self) -> &[PontryaginSection] {
        &self.sections
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The fiber `D(m)` as a subspace of the 2n-dimensional Pontryagin fiber.
    pub fn fiber(&self, p: &[f64]) -> Subspace {
        let cols: Vec<DVector<f64>> = self.sections.iter().map(|s| s.at(p)).collect();
        Subspace::span_with_tol(2 * self.chart.dim(), &cols, self.tol)
    }

    /// Relative distance of `(v, α)` from the fiber.
    pub fn membership_residual(&self, p: &[f64], pair: &DVector<f64>) -> f64 {
        self.fiber(p).residual_of(pair)
    }

    /// Fiber distance relative to the size of the spanning sections at `p`,
    /// so that pairs which are numerically zero do not register.
    pub fn membership_residual_scaled(&self, p: &[f64], pair: &DVector<f64>) -> f64 {
        let scale = self
            .sections
            .iter()
            .map(|s| s.at(p).norm())
            .fold(1.0f64, f64::max);
        self.fiber(p).residual_scaled(pair, scale)
    }

    /// Asserts rank `n` and pairwise isotropy at the given points.
    pub fn check_lagrangian(&self, points: &[Vec<f64>]) -> Result<f64> {
        let n = self.chart.dim();
        let mut max_pairing = 0.0f64;
        for p in points {
            let fiber = self.fiber(p);
            if fiber.dim() != n {
                return Err(Error::Degenerate {
                    what: format!("Dirac fiber of rank {} (expected {})", fiber.dim(), n),
                    point: p.clone(),
                });
            }
            let vals: Vec<DVector<f64>> = self.sections.iter().map(|s| s.at(p)).collect();
            let scale = vals.iter().map(|v| v.norm_squared()).fold(0.0, f64::max).max(1.0);
            for (i, a) in vals.iter().enumerate() {
                for b in vals.iter().skip(i) {
                    let (ua, aa) = split(a, n);
                    let (ub, ab) = split(b, n);
                    let pair = pontryagin_pairing(&ua, &aa, &ub, &ab).abs() / scale;
                    max_pairing = max_pairing.max(pair);
                }
            }
        }
        if max_pairing > 1e-9 {
            return Err(Error::Degenerate {
                what: format!("non-isotropic section pair (pairing {max_pairing:.3e})"),
                point: vec![],
            });
        }
        Ok(max_pairing)
    }

    /// Characteristic subspaces at a point: `G1`, `P1` are the projections
    /// of the fiber, `G0`, `P0` its intersections with the two summands.
    pub fn characteristic_spaces(&self, p: &[f64]) -> CharacteristicSpaces {
        let n = self.chart.dim();
        let vecs: Vec<DVector<f64>> = self.sections.iter().map(|s| s.vector.at(p)).collect();
        let forms: Vec<DVector<f64>> = self.sections.iter().map(|s| s.form.at(p)).collect();
        let g1 = Subspace::span_with_tol(n, &vecs, self.tol);
        let p1 = Subspace::span_with_tol(n, &forms, self.tol);
        let fiber = self.fiber(p);
        let tangent_block = {
            let mut cols = Vec::new();
            for i in 0..n {
                let mut v = DVector::zeros(2 * n);
                v[i] = 1.0;
                cols.push(v);
            }
            Subspace::span_with_tol(2 * n, &cols, self.tol)
        };
        let cotangent_block = {
            let mut cols = Vec::new();
            for i in 0..n {
                let mut v = DVector::zeros(2 * n);
                v[n + i] = 1.0;
                cols.push(v);
            }
            Subspace::span_with_tol(2 * n, &cols, self.tol)
        };
        let g0_pairs = fiber.intersect(&tangent_block).unwrap();
        let p0_pairs = fiber.intersect(&cotangent_block).unwrap();
        let g0 = project_block(&g0_pairs, 0, n, self.tol);
        let p0 = project_block(&p0_pairs, n, n, self.tol);
        // crude conditioning flag: fiber rank near the cutoff
        let rank_warning = {
            let m = DMatrix::from_columns(
                &self.sections.iter().map(|s| s.at(p)).collect::<Vec<_>>(),
            );
            let sv = m.svd(false, false).singular_values;
            let s0 = sv.max();
            sv.iter().any(|&s| s > self.tol * s0 && s < 10.0 * self.tol * s0)
        };
        CharacteristicSpaces { g0, g1, p0, p1, rank_warning }
    }

    /// Truncated-bracket closedness test over sampled points: brackets every
    /// ordered pair of spanning sections and checks membership of the value
    /// in the fiber.
    pub fn is_closed(&self, seed: u64, samples: usize, tol: f64) -> Result<ClosednessReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = self.chart.sample_many(samples, &mut rng);
        let mut max_residual = 0.0f64;
        let mut witness = None;
        for i in 0..self.sections.len() {
            for j in 0..self.sections.len() {
                let bracket = courant_bracket(&self.sections[i], &self.sections[j], false)?;
                for p in &points {
                    let value = bracket.at(p);
                    let r = self.membership_residual_scaled(p, &value);
                    if r > max_residual {
                        max_residual = r;
                    }
                    if r > tol && witness.is_none() {
                        witness = Some((i, j, p.clone(), r));
                    }
                }
            }
        }
        Ok(ClosednessReport { closed: witness.is_none(), max_residual, witness })
    }

    /// Solves `(X, α(m)) ∈ D(m)` for the minimum-norm `X`; errors when no
    /// solution exists (the covector is inadmissible at `m`).
    pub fn solve_for_vector(&self, p: &[f64], alpha: &DVector<f64>) -> Result<HamiltonianSolution> {
        let n = self.chart.dim();
        let s = self.sections.len();
        let form_matrix = DMatrix::from_fn(n, s, |i, j| self.sections[j].form.at(p)[i]);
        let vec_matrix = DMatrix::from_fn(n, s, |i, j| self.sections[j].vector.at(p)[i]);
        let svd = form_matrix.clone().svd(true, true);
        let coeffs = svd
            .solve(alpha, self.tol * svd.singular_values.max().max(1e-300))
            .map_err(|_| Error::Degenerate { what: "covector solve".into(), point: p.to_vec() })?;
        let residual = (&form_matrix * &coeffs - alpha).norm();
        let scale = alpha.norm().max(1.0);
        if residual > (self.tol * 10.0).max(1e-8) * scale {
            return Err(Error::Inadmissible { point: p.to_vec(), residual: residual / scale });
        }
        let x_any = &vec_matrix * &coeffs;
        // Reduce to the minimum-norm representative modulo G0(m).
        let ch = self.characteristic_spaces(p);
        let x = &x_any - ch.g0.project(&x_any);
        let energy_residual = alpha.dot(&x);
        Ok(HamiltonianSolution { x, coset_dim: ch.g0.dim(), energy_residual })
    }

    /// The induced bracket on admissible functions, `{f, g} = X_g[f]` where
    /// `(X_g, dg) ∈ D`. Also evaluates `−X_f[g]` and checks the two paths
    /// agree, which is insensitive to the solver's choice in the `G0` coset.
    pub fn poisson_bracket(&self, f: &ScalarField, g: &ScalarField, p: &[f64]) -> Result<f64> {
        self.chart.ensure_same(f.chart())?;
        self.chart.ensure_same(g.chart())?;
        let xg = self.solve_for_vector(p, &g.gradient(p))?;
        let xf = self.solve_for_vector(p, &f.gradient(p))?;
        let via_g = f.gradient(p).dot(&xg.x);
        let via_f = g.gradient(p).dot(&xf.x);
        let scale = via_g.abs().max(via_f.abs()).max(1.0);
        if (via_g + via_f).abs() > 1e-9 * scale {
            return Err(Error::Degenerate {
                what: format!("bracket not well defined ({via_g:.3e} vs {:.3e})", -via_f),
                point: p.to_vec(),
            });
        }
        Ok(via_g)
    }

    /// Restricts to a level-set submanifold, producing smooth spanning
    /// sections on the submanifold chart. Requires the sampled rank of the
    /// tangency conditions to be constant along the submanifold.
    pub fn restrict_to_level_set(
        &self,
        leaf: &LevelSet,
        base_points: &[Vec<f64>],
    ) -> Result<DiracStructure> {
        self.chart.ensure_same(leaf.embedding.target())?;
        leaf.chart.ensure_same(leaf.embedding.source())?;
        let n = self.chart.dim();
        let n_leaf = leaf.chart.dim();

        // Level functions must be constant along the embedding.
        for f in &leaf.level_functions {
            let v0 = f.value(&leaf.embedding.value(&base_points[0]));
            for p in base_points {
                let v = f.value(&leaf.embedding.value(p));
                if (v - v0).abs() > 1e-8 * v0.abs().max(1.0) {
                    return Err(Error::Degenerate {
                        what: "embedding leaves the level set".into(),
                        point: p.clone(),
                    });
                }
            }
        }

        // Tangency rows: df_a(X_i) for every section vector part.
        let rows: Vec<Vec<ScalarField>> = leaf
            .level_functions
            .iter()
            .map(|f| {
                let df = f.differential();
                self.sections.iter().map(|s| df.apply(&s.vector)).collect()
            })
            .collect();
        let ambient_points: Vec<Vec<f64>> =
            base_points.iter().map(|p| leaf.embedding.value(p)).collect();
        let combos = kernel_combinations("G1 ∩ TN", &rows, &self.sections, &ambient_points, self.tol)?;

        // Push each tangent combination down to the leaf chart:
        // the vector solves J_ι x̃ = X∘ι, the form is the pullback ι*α.
        let jac_fields: Vec<Vec<ScalarField>> = (0..n)
            .map(|a| (0..n_leaf).map(|i| leaf.embedding.comps()[a].partial(i)).collect())
            .collect();
        let mut new_sections = Vec::new();
        for sec in combos {
            // normal equations (JᵀJ) x̃ = Jᵀ (X ∘ ι), entries as fields on the leaf
            let comp_on_leaf: Vec<ScalarField> = (0..n)
                .map(|a| sec.vector.comps()[a].compose(&leaf.embedding))
                .collect();
            let mut gram = vec![vec![ScalarField::zero(&leaf.chart); n_leaf]; n_leaf];
            let mut rhs = vec![ScalarField::zero(&leaf.chart); n_leaf];
            for i in 0..n_leaf {
                for j in 0..n_leaf {
                    let mut acc = ScalarField::zero(&leaf.chart);
                    for a in 0..n {
                        acc = acc.add(&jac_fields[a][i].mul(&jac_fields[a][j]));
                    }
                    gram[i][j] = acc;
                }
                let mut acc = ScalarField::zero(&leaf.chart);
                for a in 0..n {
                    acc = acc.add(&jac_fields[a][i].mul(&comp_on_leaf[a]));
                }
                rhs[i] = acc;
            }
            let x_comps = solve_field_system(gram, rhs)?;
            let vector = VectorField::new(&leaf.chart, x_comps)?;
            let form = leaf.embedding.pullback_one_form(&sec.form)?;
            new_sections.push(PontryaginSection::new(vector, form)?);
        }
        DiracStructure::with_tol(&leaf.chart, new_sections, self.tol)
    }
}

fn split(pair: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>) {
    (pair.rows(0, n).into_owned(), pair.rows(n, n).into_owned())
}

fn project_block(pairs: &Subspace, offset: usize, n: usize, tol: f64) -> Subspace {
    let cols: Vec<DVector<f64>> = pairs
        .basis_vectors()
        .iter()
        .map(|v| v.rows(offset, n).into_owned())
        .collect();
    Subspace::span_with_tol(n, &cols, tol)
}

/// Smooth spanning sections of the pointwise kernel of a row system over the
/// given sections.
pub(crate) fn kernel_combinations(
    context: &str,
    rows: &[Vec<ScalarField>],
    sections: &[PontryaginSection],
    base_points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<PontryaginSection>> {
    if rows.is_empty() {
        return Ok(sections.to_vec());
    }
    let chart = sections[0].chart().clone();
    let frame = crate::frames::kernel_coefficient_fields(
        context,
        rows,
        sections.len(),
        &chart,
        base_points,
        tol,
    )?;
    let mut out = Vec::with_capacity(frame.combinations.len());
    for combo in &frame.combinations {
        let mut section = PontryaginSection::new(VectorField::zero(&chart), OneForm::zero(&chart))?;
        for (c, s) in combo.iter().zip(sections) {
            section = section.add(&s.scale_field(c));
        }
        out.push(section);
    }
    Ok(out)
}

/// Construction of a Dirac structure from a distribution with spanning
/// fields, a complementary codistribution with spanning forms, and a 2-form:
/// sections `(E_i, i_{E_i} ω)` plus `(0, φ_j)`.
pub fn graph_of_two_form(
    fields: &[VectorField],
    ann_forms: &[OneForm],
    omega: &TwoForm,
) -> Result<DiracStructure> {
    let chart = omega.chart().clone();
    let mut sections = Vec::new();
    for e in fields {
        chart.ensure_same(e.chart())?;
        sections.push(PontryaginSection::new(e.clone(), omega.interior(e))?);
    }
    for phi in ann_forms {
        chart.ensure_same(phi.chart())?;
        sections.push(PontryaginSection::new(VectorField::zero(&chart), phi.clone())?);
    }
    DiracStructure::new(&chart, sections)
}

/// The graph of a global 2-form over the coordinate frame.
pub fn graph_of_two_form_full(omega: &TwoForm) -> Result<DiracStructure> {
    let chart = omega.chart().clone();
    let frame: Vec<VectorField> = (0..chart.dim()).map(|i| VectorField::basis(&chart, i)).collect();
    graph_of_two_form(&frame, &[], omega)
}

/// Construction of a Dirac structure from a bivector: with `π` given by its
/// component matrix `π^{ab} = π(dx^a, dx^b)`, the sharp map sends
/// `α ↦ Σ_a α_a π^{a·}`. Sections are `(♯φ_j, φ_j)` over the supplied
/// coframe plus `(E_i, 0)` over the kernel distribution's fields.
pub fn graph_of_bivector(
    g_fields: &[VectorField],
    ann_forms: &[OneForm],
    pi: &TwoForm,
) -> Result<DiracStructure> {
    let chart = pi.chart().clone();
    let n = chart.dim();
    let mut sections = Vec::new();
    for phi in ann_forms {
        chart.ensure_same(phi.chart())?;
        let comps: Vec<ScalarField> = (0..n)
            .map(|i| {
                let mut acc = ScalarField::zero(&chart);
                for a in 0..n {
                    acc = acc.add(&phi.comps()[a].mul(&pi.comps()[a][i]));
                }
                acc
            })
            .collect();
        let sharp = VectorField::new(&chart, comps)?;
        sections.push(PontryaginSection::new(sharp, phi.clone())?);
    }
    for e in g_fields {
        chart.ensure_same(e.chart())?;
        sections.push(PontryaginSection::new(e.clone(), OneForm::zero(&chart))?);
    }
    DiracStructure::new(&chart, sections)
}

/// The graph of a global bivector over the coordinate coframe.
pub fn graph_of_bivector_full(pi: &TwoForm) -> Result<DiracStructure> {
    let chart = pi.chart().clone();
    let coframe: Vec<OneForm> = (0..chart.dim()).map(|i| OneForm::basis(&chart, i)).collect();
    graph_of_bivector(&[], &coframe, pi)
}

/// Rebuilds a Dirac fiber from its own induced flat map on `G1` and compares
/// with the original: the round-trip subspace, plus the kernel of the flat
/// map (which must be `G0`).
pub fn construction_round_trip(d: &DiracStructure, p: &[f64]) -> Result<(bool, bool)> {
    let n = d.chart().dim();
    let ch = d.characteristic_spaces(p);
    let fiber = d.fiber(p);
    // For each basis vector v of G1, find α with (v, α) in the fiber; the
    // class of α modulo G1° is the flat of v.
    let g1 = &ch.g1;
    let r = g1.dim();
    let mut flats: Vec<DVector<f64>> = Vec::with_capacity(r);
    let basis = fiber.basis();
    let top = DMatrix::from_fn(n, fiber.dim(), |i, j| basis[(i, j)]);
    let bottom = DMatrix::from_fn(n, fiber.dim(), |i, j| basis[(n + i, j)]);
    for v in g1.basis_vectors() {
        let svd = top.clone().svd(true, true);
        let c = svd
            .solve(&v, d.tol())
            .map_err(|_| Error::Degenerate { what: "flat map solve".into(), point: p.to_vec() })?;
        flats.push(&bottom * c);
    }
    // Rebuilt fiber: (v_i, flat_i) plus (0, G1°).
    let mut cols = Vec::new();
    for (v, a) in g1.basis_vectors().iter().zip(&flats) {
        let mut col = DVector::zeros(2 * n);
        col.rows_mut(0, n).copy_from(v);
        col.rows_mut(n, n).copy_from(a);
        cols.push(col);
    }
    for a in g1.annihilator().basis_vectors() {
        let mut col = DVector::zeros(2 * n);
        col.rows_mut(n, n).copy_from(&a);
        cols.push(col);
    }
    let rebuilt = Subspace::span_with_tol(2 * n, &cols, d.tol());
    let spans_match = rebuilt.equals(&fiber);

    // Kernel of flat equals G0, tested by rank-nullity on the flat matrix
    // with the G1°-ambiguity projected away.
    let g1ann = ch.g1.annihilator();
    let proj_flats: Vec<DVector<f64>> = flats.iter().map(|a| a - g1ann.project(a)).collect();
    let flat_matrix = if r > 0 {
        DMatrix::from_columns(&proj_flats)
    } else {
        DMatrix::zeros(n, 0)
    };
    let kernel_dim = r - Subspace::from_columns(&flat_matrix, d.tol()).dim();
    let kernel_matches = kernel_dim == ch.g0.dim();
    Ok((spans_match, kernel_matches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn canonical_plane() -> (Chart, DiracStructure) {
        let c = Chart::new("ph", &["x", "p_x"], &[(-2.0, 2.0); 2]).unwrap();
        let omega = TwoForm::from_upper(&c, &[(0, 1, ScalarField::constant(&c, 1.0))]);
        let d = graph_of_two_form_full(&omega).unwrap();
        (c, d)
    }

    #[test]
    fn pairing_examples() {
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let beta = DVector::from_vec(vec![0.0, 2.0]);
        let zero = DVector::zeros(2);
        // ⟨(v,0),(0,β)⟩ = β(v)
        assert_eq!(pontryagin_pairing(&v, &zero, &zero, &beta), beta.dot(&v));
        // ⟨(∂x, dy),(∂y, dx)⟩ = 2 on the plane
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let du = DVector::from_vec(vec![0.0, 1.0]);
        let w = DVector::from_vec(vec![0.0, 1.0]);
        let dw = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(pontryagin_pairing(&u, &du, &w, &dw), 2.0);
    }

    #[test]
    fn sections_of_a_dirac_structure_self_pair_to_zero() {
        let (c, d) = canonical_plane();
        let p = [0.7, -0.3];
        let n = c.dim();
        for s in d.sections() {
            let val = s.at(&p);
            let (u, a) = super::split(&val, n);
            assert!(pontryagin_pairing(&u, &a, &u, &a).abs() < 1e-14);
        }
        d.check_lagrangian(&[p.to_vec()]).unwrap();
    }

    #[test]
    fn canonical_graph_characteristics_and_bracket() {
        let (c, d) = canonical_plane();
        let p = [0.4, 1.1];
        let ch = d.characteristic_spaces(&p);
        assert_eq!(ch.g1.dim(), 2);
        assert_eq!(ch.p0.dim(), 0);
        assert_eq!(ch.g0.dim(), 0);
        // {x, p_x} = 1
        let x = ScalarField::coordinate(&c, 0);
        let px = ScalarField::coordinate(&c, 1);
        assert!((d.poisson_bracket(&x, &px, &p).unwrap() - 1.0).abs() < 1e-12);
        // {f, f} = 0
        let f = ScalarField::parse("x^2 + p_x", &c, &no_params()).unwrap();
        assert!(d.poisson_bracket(&f, &f, &p).unwrap().abs() < 1e-12);
        // closed
        assert!(d.is_closed(3, 16, 1e-8).unwrap().closed);
    }

    #[test]
    fn coordinate_delta_dirac_structure() {
        // D = Δ ⊕ Δ° for Δ = span{∂x, ∂y} in R³.
        let c = Chart::new("m", &["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
        let sections = vec![
            PontryaginSection::new(VectorField::basis(&c, 0), OneForm::zero(&c)).unwrap(),
            PontryaginSection::new(VectorField::basis(&c, 1), OneForm::zero(&c)).unwrap(),
            PontryaginSection::new(VectorField::zero(&c), OneForm::basis(&c, 2)).unwrap(),
        ];
        let d = DiracStructure::new(&c, sections).unwrap();
        let p = [0.1, 0.2, 0.3];
        let ch = d.characteristic_spaces(&p);
        assert_eq!(ch.g0.dim(), 2);
        assert_eq!(ch.g1.dim(), 2);
        assert_eq!(ch.p0.dim(), 1);
        assert_eq!(ch.p1.dim(), 1);
        assert!(ch.g0.equals(&ch.p1.annihilator()));
        assert!(ch.p0.equals(&ch.g1.annihilator()));
        let (round, kernel) = construction_round_trip(&d, &p).unwrap();
        assert!(round && kernel);
    }

    #[test]
    fn courant_bracket_trivial_cases() {
        let c = Chart::new("m", &["x", "y"], &[(-1.0, 1.0); 2]).unwrap();
        let a = PontryaginSection::new(VectorField::basis(&c, 0), OneForm::zero(&c)).unwrap();
        let b = PontryaginSection::new(VectorField::basis(&c, 1), OneForm::zero(&c)).unwrap();
        let br = courant_bracket(&a, &b, false).unwrap();
        assert!(br.at(&[0.3, 0.4]).norm() < 1e-14);
        let brs = courant_bracket(&a, &a, true).unwrap();
        assert!(brs.at(&[0.3, 0.4]).norm() < 1e-14);
    }

    #[test]
    fn bivector_graph_zero_sharp() {
        // sharp = 0 on the full coframe: D = {0} ⊕ T*M, so G0 = G1 = {0}.
        let c = Chart::new("m", &["x", "y"], &[(-1.0, 1.0); 2]).unwrap();
        let pi = TwoForm::zero(&c);
        let d = graph_of_bivector_full(&pi).unwrap();
        let ch = d.characteristic_spaces(&[0.2, 0.5]);
        assert_eq!(ch.g1.dim(), 0);
        assert_eq!(ch.p1.dim(), 2);
    }

    #[test]
    fn hamiltonian_solution_on_canonical_graph() {
        let (c, d) = canonical_plane();
        let h = ScalarField::parse("p_x^2/2", &c, &no_params()).unwrap();
        let p = [0.3, 0.8];
        let sol = d.solve_for_vector(&p, &h.gradient(&p)).unwrap();
        // X_H = p ∂_x
        assert!((sol.x[0] - 0.8).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
        assert_eq!(sol.coset_dim, 0);
        assert!(sol.energy_residual.abs() < 1e-12);
        // constant H gives X in G0 = {0}
        let h0 = ScalarField::constant(&c, 3.0);
        let sol0 = d.solve_for_vector(&p, &h0.gradient(&p)).unwrap();
        assert!(sol0.x.norm() < 1e-12);
    }

    #[test]
    fn restriction_of_canonical_graph_to_symplectic_plane() {
        // (x, y, p_x, p_y) with ω canonical; restrict to {y = 0, p_y = 0}.
        let c = Chart::new("ph4", &["x", "y", "p_x", "p_y"], &[(-2.0, 2.0); 4]).unwrap();
        let omega = TwoForm::from_upper(
            &c,
            &[
                (0, 2, ScalarField::constant(&c, 1.0)),
                (1, 3, ScalarField::constant(&c, 1.0)),
            ],
        );
        let d = graph_of_two_form_full(&omega).unwrap();
        let leaf_chart = Chart::new("pl", &["x", "p_x"], &[(-2.0, 2.0); 2]).unwrap();
        let embedding = PointMap::parse(&leaf_chart, &c, &["x", "0", "p_x", "0"], &no_params()).unwrap();
        let leaf = LevelSet {
            chart: leaf_chart.clone(),
            embedding,
            level_functions: vec![
                ScalarField::coordinate(&c, 1),
                ScalarField::coordinate(&c, 3),
            ],
        };
        let pts = vec![vec![0.3, 0.4], vec![-0.9, 0.7], vec![1.4, -0.2]];
        let dn = d.restrict_to_level_set(&leaf, &pts).unwrap();
        dn.check_lagrangian(&pts).unwrap();
        // result is the graph of the restricted symplectic form
        let omega_r = TwoForm::from_upper(&leaf_chart, &[(0, 1, ScalarField::constant(&leaf_chart, 1.0))]);
        let expected = graph_of_two_form_full(&omega_r).unwrap();
        for p in &pts {
            assert!(dn.fiber(p).equals(&expected.fiber(p)));
        }
    }
}
