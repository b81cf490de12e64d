//! Constrained mechanical systems in phase space: the constraint manifold as
//! a chart with an embedding into `T*Q`, the pulled-back symplectic form, the
//! horizontal distribution and its Dirac structure, momentum maps, the
//! reaction codistribution, the optimal distribution `U + V`, and leaf-level
//! reduction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::dirac::{graph_of_two_form, DiracStructure, LevelSet};
use crate::error::{Error, Result};
use crate::field::{
    lie_bracket, solve_field_system, OneForm, PointMap, ScalarField, TwoForm, VectorField,
};
use crate::frames::kernel_coefficient_fields;
use crate::reduction::{
    d_cap_k_perp, reduce_sections, DCapKPerp, QuotientChart, SymmetryAction,
};
use crate::subspace::Subspace;

/// A constrained mechanical system on a configuration chart: a kinetic
/// metric, a potential, and independent constraint 1-forms. `d_frame` spans
/// the constraint distribution (the joint kernel of the constraint forms).
///
/// The metric may be positive semidefinite as long as the Legendre map stays
/// injective on the constraint distribution; the standard knife-edge system
/// is of that kind.
#[derive(Clone)]
pub struct MechanicalSystem {
    pub q_chart: Chart,
    pub metric: Vec<Vec<ScalarField>>,
    pub potential: ScalarField,
    pub constraints: Vec<OneForm>,
    pub d_frame: Vec<VectorField>,
}

impl MechanicalSystem {
    pub fn new(
        q_chart: &Chart,
        metric: Vec<Vec<ScalarField>>,
        potential: ScalarField,
        constraints: Vec<OneForm>,
        d_frame: Option<Vec<VectorField>>,
        base_points: &[Vec<f64>],
        tol: f64,
    ) -> Result<MechanicalSystem> {
        let d = q_chart.dim();
        if metric.len() != d || metric.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: metric.len() });
        }
        let frame = match d_frame {
            Some(f) => f,
            None => {
                // generic frame: kernel of the constraint-coefficient matrix
                let rows: Vec<Vec<ScalarField>> = constraints
                    .iter()
                    .map(|phi| phi.comps().to_vec())
                    .collect();
                let frame = kernel_coefficient_fields(
                    "constraint distribution",
                    &rows,
                    d,
                    q_chart,
                    base_points,
                    tol,
                )?;
                frame
                    .combinations
                    .into_iter()
                    .map(|comps| VectorField::new(q_chart, comps))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let sys = MechanicalSystem {
            q_chart: q_chart.clone(),
            metric,
            potential,
            constraints,
            d_frame: frame,
        };
        sys.validate(base_points, tol)?;
        Ok(sys)
    }

    fn validate(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        let d = self.q_chart.dim();
        let k = self.constraints.len();
        if self.d_frame.len() != d - k {
            return Err(Error::DimensionMismatch { expected: d - k, found: self.d_frame.len() });
        }
        for q in points {
            let g = self.metric_at(q);
            let sym = (&g - g.transpose()).amax();
            if sym > 1e-12 * g.amax().max(1.0) {
                return Err(Error::Degenerate { what: "asymmetric metric".into(), point: q.clone() });
            }
            let eig = g.clone().symmetric_eigen();
            if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
                return Err(Error::Degenerate {
                    what: "indefinite kinetic metric".into(),
                    point: q.clone(),
                });
            }
            // constraint independence
            let cm = DMatrix::from_fn(k, d, |j, a| self.constraints[j].at(q)[a]);
            if k > 0 && Subspace::from_columns(&cm.transpose(), tol).dim() != k {
                return Err(Error::Degenerate {
                    what: "dependent constraint forms".into(),
                    point: q.clone(),
                });
            }
            // frame spans the kernel of the constraints
            for h in &self.d_frame {
                for phi in &self.constraints {
                    let v = phi.at(q).dot(&h.at(q));
                    if v.abs() > 1e-9 {
                        return Err(Error::Degenerate {
                            what: "frame leaves the constraint distribution".into(),
                            point: q.clone(),
                        });
                    }
                }
            }
            let fm = DMatrix::from_fn(d, d - k, |a, i| self.d_frame[i].at(q)[a]);
            if Subspace::from_columns(&fm, tol).dim() != d - k {
                return Err(Error::Degenerate {
                    what: "degenerate constraint-distribution frame".into(),
                    point: q.clone(),
                });
            }
            // Legendre map injective on the distribution
            let gb = &g * &fm;
            if Subspace::from_columns(&gb, tol).dim() != d - k {
                return Err(Error::Degenerate {
                    what: "Legendre map degenerate on the constraint distribution".into(),
                    point: q.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn metric_at(&self, q: &[f64]) -> DMatrix<f64> {
        let d = self.q_chart.dim();
        DMatrix::from_fn(d, d, |i, j| self.metric[i][j].value(q))
    }

    /// The Legendre transform on a tangent fiber: `p = g(q) v`.
    pub fn legendre(&self, q: &[f64], v: &DVector<f64>) -> DVector<f64> {
        self.metric_at(q) * v
    }

    /// Fiber inverse `v = g(q)⁻¹ p`; errors when the metric is singular.
    pub fn legendre_inverse(&self, q: &[f64], p: &DVector<f64>) -> Result<DVector<f64>> {
        self.metric_at(q)
            .lu()
            .solve(p)
            .ok_or_else(|| Error::Degenerate { what: "singular kinetic metric".into(), point: q.to_vec() })
    }
}

/// The constraint manifold realized as a chart: configuration coordinates
/// plus the kept momenta, an embedding into the `T*Q` chart expressing the
/// eliminated momenta, and the pulled-back 2-form with a horizontal frame.
#[derive(Clone)]
pub struct ConstraintPhase {
    pub system: MechanicalSystem,
    pub m_chart: Chart,
    pub tstarq_chart: Chart,
    pub embedding: PointMap,
    pub q_map: PointMap,
    pub eliminated: Vec<String>,
    pub omega_m: TwoForm,
    pub h_frame: Vec<VectorField>,
    pub h_ann: Vec<OneForm>,
    pub hamiltonian: ScalarField,
    tol: f64,
}

/// Options for building a constraint phase.
pub struct PhaseOptions {
    /// Names of the momenta expressed through the others (defaults to the
    /// best-conditioned block).
    pub eliminate: Option<Vec<String>>,
    /// Sampling intervals for the kept momenta (default `[-2, 2]`).
    pub momentum_ranges: BTreeMap<String, (f64, f64)>,
    /// Explicit horizontal frame on the constraint chart; constructed
    /// generically when absent.
    pub h_frame: Option<Vec<Vec<String>>>,
    pub params: BTreeMap<String, f64>,
    pub tol: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            eliminate: None,
            momentum_ranges: BTreeMap::new(),
            h_frame: None,
            params: BTreeMap::new(),
            tol: crate::subspace::DEFAULT_TOL,
        }
    }
}

/// Builds the constraint phase chart. The conditions cutting the momentum
/// fibers are the kernel of `Bᵀ g` (image of the Legendre map on the
/// constraint distribution); the chosen momenta are then expressed by a
/// pointwise linear solve whose jets propagate into every later object.
pub fn build_constraint_phase(
    system: &MechanicalSystem,
    q_base_points: &[Vec<f64>],
    options: &PhaseOptions,
) -> Result<ConstraintPhase> {
    let d = system.q_chart.dim();
    let k = system.constraints.len();
    let q_chart = &system.q_chart;
    let tol = options.tol;

    // T*Q chart: configuration coordinates then momenta.
    let momentum_names: Vec<String> =
        q_chart.coords().iter().map(|c| format!("p_{c}")).collect();
    let mut tq_coords: Vec<&str> = q_chart.coords().iter().map(|s| s.as_str()).collect();
    let tq_momenta: Vec<&str> = momentum_names.iter().map(|s| s.as_str()).collect();
    tq_coords.extend(tq_momenta.iter());
    let mut tq_ranges: Vec<(f64, f64)> = q_chart.ranges().to_vec();
    for name in &momentum_names {
        tq_ranges.push(*options.momentum_ranges.get(name).unwrap_or(&(-2.0, 2.0)));
    }
    let tstarq_chart = Chart::new(format!("T*{}", q_chart.name()), &tq_coords, &tq_ranges)?;

    // Momentum conditions C(q) p = 0 with rows spanning ker(Bᵀ g).
    let bg_rows: Vec<Vec<ScalarField>> = system
        .d_frame
        .iter()
        .map(|b| {
            (0..d)
                .map(|a| {
                    let mut acc = ScalarField::zero(q_chart);
                    for i in 0..d {
                        acc = acc.add(&b.comps()[i].mul(&system.metric[i][a]));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let cond = kernel_coefficient_fields(
        "momentum conditions",
        &bg_rows,
        d,
        q_chart,
        q_base_points,
        tol,
    )?;
    if cond.combinations.len() != k {
        return Err(Error::Degenerate {
            what: format!(
                "momentum condition count {} (expected {k})",
                cond.combinations.len()
            ),
            point: q_base_points[0].clone(),
        });
    }

    // Choose the eliminated momenta.
    let eliminated: Vec<String> = match &options.eliminate {
        Some(names) => {
            for n in names {
                if !momentum_names.contains(n) {
                    return Err(Error::InvalidParameter(format!("unknown momentum `{n}`")));
                }
            }
            names.clone()
        }
        None => {
            // best-conditioned k-column block of the condition matrix
            let mats: Vec<DMatrix<f64>> = q_base_points
                .iter()
                .map(|q| {
                    DMatrix::from_fn(k, d, |j, a| cond.combinations[j][a].value(q))
                })
                .collect();
            let idx = crate::subspace::choose_pivots(&mats, k)?;
            idx.into_iter().map(|a| momentum_names[a].clone()).collect()
        }
    };
    let elim_idx: Vec<usize> = eliminated
        .iter()
        .map(|n| momentum_names.iter().position(|m| m == n).unwrap())
        .collect();
    let kept_idx: Vec<usize> =
        (0..d).filter(|a| !elim_idx.contains(a)).collect();

    // Constraint chart: q coordinates plus kept momenta.
    let mut m_coords: Vec<&str> = q_chart.coords().iter().map(|s| s.as_str()).collect();
    let kept_names: Vec<&str> = kept_idx.iter().map(|&a| momentum_names[a].as_str()).collect();
    m_coords.extend(kept_names.iter());
    let mut m_ranges = q_chart.ranges().to_vec();
    for &a in &kept_idx {
        m_ranges.push(*options.momentum_ranges.get(&momentum_names[a]).unwrap_or(&(-2.0, 2.0)));
    }
    let m_chart = Chart::new(format!("{}|constrained", q_chart.name()), &m_coords, &m_ranges)?;

    // q-projection of the constraint chart.
    let q_map = PointMap::new(
        &m_chart,
        q_chart,
        (0..d).map(|i| ScalarField::coordinate(&m_chart, i)).collect(),
    )?;

    // Solve C_elim p_elim = −C_kept p_kept with field entries on the chart.
    let eliminated_fields: Vec<ScalarField> = if k == 0 {
        vec![]
    } else {
        let a_fields: Vec<Vec<ScalarField>> = (0..k)
            .map(|j| {
                elim_idx
                    .iter()
                    .map(|&e| cond.combinations[j][e].compose(&q_map))
                    .collect()
            })
            .collect();
        let b_fields: Vec<ScalarField> = (0..k)
            .map(|j| {
                let mut acc = ScalarField::zero(&m_chart);
                for (slot, &a) in kept_idx.iter().enumerate() {
                    let coeff = cond.combinations[j][a].compose(&q_map);
                    let p_field = ScalarField::coordinate(&m_chart, d + slot);
                    acc = acc.add(&coeff.mul(&p_field));
                }
                acc.neg()
            })
            .collect();
        solve_field_system(a_fields, b_fields)?
    };

    // Embedding into T*Q: coordinates, then momenta (kept are coordinates of
    // the constraint chart, eliminated are the solved fields).
    let mut embed_comps: Vec<ScalarField> =
        (0..d).map(|i| ScalarField::coordinate(&m_chart, i)).collect();
    for a in 0..d {
        if let Some(slot) = kept_idx.iter().position(|&ka| ka == a) {
            embed_comps.push(ScalarField::coordinate(&m_chart, d + slot));
        } else {
            let e = elim_idx.iter().position(|&ea| ea == a).unwrap();
            embed_comps.push(eliminated_fields[e].clone());
        }
    }
    let embedding = PointMap::new(&m_chart, &tstarq_chart, embed_comps)?;

    // Canonical 2-form on T*Q and its pullback.
    let canonical = {
        let entries: Vec<(usize, usize, ScalarField)> = (0..d)
            .map(|a| (a, d + a, ScalarField::constant(&tstarq_chart, 1.0)))
            .collect();
        TwoForm::from_upper(&tstarq_chart, &entries)
    };
    let omega_m = embedding.pullback_two_form(&canonical)?;

    // Horizontal frame: kernel of the pulled-back constraint forms.
    let h_ann: Vec<OneForm> = system
        .constraints
        .iter()
        .map(|phi| q_map.pullback_one_form(phi))
        .collect::<Result<Vec<_>>>()?;
    let n = m_chart.dim();
    let m_base: Vec<Vec<f64>> = {
        // base points on the constraint chart matching the q samples
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        m_chart.sample_many(q_base_points.len().max(8), &mut rng)
    };
    let h_frame: Vec<VectorField> = match &options.h_frame {
        Some(spec) => spec
            .iter()
            .map(|comps| {
                let refs: Vec<&str> = comps.iter().map(|s| s.as_str()).collect();
                VectorField::parse(&refs, &m_chart, &options.params)
            })
            .collect::<Result<Vec<_>>>()?,
        None => {
            let rows: Vec<Vec<ScalarField>> =
                h_ann.iter().map(|phi| phi.comps().to_vec()).collect();
            kernel_coefficient_fields("horizontal distribution", &rows, n, &m_chart, &m_base, tol)?
                .combinations
                .into_iter()
                .map(|comps| VectorField::new(&m_chart, comps))
                .collect::<Result<Vec<_>>>()?
        }
    };
    if h_frame.len() != n - k {
        return Err(Error::Degenerate {
            what: format!("horizontal frame of size {} (expected {})", h_frame.len(), n - k),
            point: m_base[0].clone(),
        });
    }
    for h in &h_frame {
        for phi in &h_ann {
            for p in &m_base {
                if phi.at(p).dot(&h.at(p)).abs() > 1e-9 {
                    return Err(Error::Degenerate {
                        what: "horizontal frame leaves the horizontal distribution".into(),
                        point: p.clone(),
                    });
                }
            }
        }
    }

    // Hamiltonian through the constrained Legendre data:
    // H = ½ (Bᵀp)ᵀ (BᵀgB)⁻¹ (Bᵀp) + potential.
    let hamiltonian = {
        let r = d - k;
        let bt_p: Vec<ScalarField> = (0..r)
            .map(|i| {
                let mut acc = ScalarField::zero(&m_chart);
                for a in 0..d {
                    let ba = system.d_frame[i].comps()[a].compose(&q_map);
                    acc = acc.add(&ba.mul(&embedding.comps()[d + a]));
                }
                acc
            })
            .collect();
        let mut btgb = vec![vec![ScalarField::zero(&m_chart); r]; r];
        for i in 0..r {
            for j in 0..r {
                let mut acc = ScalarField::zero(&m_chart);
                for a in 0..d {
                    for b in 0..d {
                        acc = acc.add(
                            &system.d_frame[i].comps()[a]
                                .compose(&q_map)
                                .mul(&system.metric[a][b].compose(&q_map))
                                .mul(&system.d_frame[j].comps()[b].compose(&q_map)),
                        );
                    }
                }
                btgb[i][j] = acc;
            }
        }
        let w = solve_field_system(btgb, bt_p.clone())?;
        let mut h = system.potential.compose(&q_map);
        for (wi, bi) in w.iter().zip(&bt_p) {
            h = h.add(&wi.mul(bi).scale(0.5));
        }
        h
    };

    let phase = ConstraintPhase {
        system: system.clone(),
        m_chart,
        tstarq_chart,
        embedding,
        q_map,
        eliminated,
        omega_m,
        h_frame,
        h_ann,
        hamiltonian,
        tol,
    };
    phase.check_membership(&m_base)?;
    phase.check_omega_h_nondegenerate(&m_base)?;
    Ok(phase)
}

impl ConstraintPhase {
    /// Embedded points satisfy the momentum conditions: the embedded
    /// momentum lies in the image of the Legendre map on the constraint
    /// distribution.
    fn check_membership(&self, points: &[Vec<f64>]) -> Result<()> {
        let d = self.system.q_chart.dim();
        for p in points {
            let e = self.embedding.value(p);
            let q = &e[..d];
            let mom = DVector::from_column_slice(&e[d..]);
            let g = self.system.metric_at(q);
            let r = self.system.d_frame.len();
            let fm = DMatrix::from_fn(d, r, |a, i| self.system.d_frame[i].at(q)[a]);
            let gb = &g * &fm;
            let img = Subspace::from_columns(&gb, self.tol);
            if img.residual_of(&mom) > 1e-8 {
                return Err(Error::Degenerate {
                    what: "embedded momentum violates the constraints".into(),
                    point: p.clone(),
                });
            }
        }
        Ok(())
    }

    fn check_omega_h_nondegenerate(&self, points: &[Vec<f64>]) -> Result<()> {
        let r = self.h_frame.len();
        for p in points {
            let m = DMatrix::from_fn(r, r, |i, j| {
                self.omega_m.contract(&self.h_frame[i], &self.h_frame[j]).value(p)
            });
            let svd = m.svd(false, false);
            let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let smax = svd.singular_values.max();
            if smin <= self.tol * smax.max(1.0) {
                return Err(Error::Degenerate {
                    what: "2-form degenerate on the horizontal distribution".into(),
                    point: p.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The horizontal fiber at a point.
    pub fn horizontal_space(&self, p: &[f64]) -> Subspace {
        let n = self.m_chart.dim();
        let vals: Vec<DVector<f64>> = self.h_frame.iter().map(|h| h.at(p)).collect();
        Subspace::span_with_tol(n, &vals, self.tol)
    }

    /// The Dirac structure of the constrained system: sections
    /// `(H_i, i_{H_i} ω_M)` over the horizontal frame plus `(0, β_j)` over
    /// the pulled-back constraint forms.
    pub fn dirac_structure(&self) -> Result<DiracStructure> {
        graph_of_two_form(&self.h_frame, &self.h_ann, &self.omega_m)
    }

    /// `U(m) = (V ∩ H)^ω ∩ H`, the horizontal annihilator of the vertical
    /// bundle.
    pub fn horizontal_annihilator(
        &self,
        action: &SymmetryAction,
        p: &[f64],
    ) -> Result<Subspace> {
        let h = self.horizontal_space(p);
        let v = action.vertical_space(p);
        let vh = v.intersect(&h)?;
        let omega = self.omega_m.at(p);
        vh.orthogonal_wrt_form(&omega, &h)
    }
}

/// A symmetry arising as the lift of a configuration-space action: generator
/// fields on the constraint chart plus the matching generators on the
/// configuration chart (used by the momentum map).
#[derive(Clone)]
pub struct LiftedAction {
    pub action: SymmetryAction,
    pub q_generators: Vec<VectorField>,
}

impl LiftedAction {
    /// The momentum component `J^ξ(p) = ⟨p, ξ_Q(q)⟩` restricted to the
    /// constraint chart.
    pub fn momentum_field(&self, phase: &ConstraintPhase, xi: &[f64]) -> ScalarField {
        let d = phase.system.q_chart.dim();
        let mut xi_q = VectorField::zero(&phase.system.q_chart);
        for (c, g) in xi.iter().zip(&self.q_generators) {
            xi_q = xi_q.add(&g.scale(*c));
        }
        let mut acc = ScalarField::zero(&phase.m_chart);
        for a in 0..d {
            let p_a = phase.embedding.comps()[d + a].clone();
            let xa = xi_q.comps()[a].compose(&phase.q_map);
            acc = acc.add(&p_a.mul(&xa));
        }
        acc
    }

    /// Maximum residual of `i_{ξ_M} ω_M − dJ^ξ` over the sampled points and
    /// the basis generators.
    pub fn momentum_consistency(&self, phase: &ConstraintPhase, points: &[Vec<f64>]) -> f64 {
        let k = self.action.dim();
        let mut worst = 0.0f64;
        for g in 0..k {
            let mut xi = vec![0.0; k];
            xi[g] = 1.0;
            let j = self.momentum_field(phase, &xi);
            let lhs = phase.omega_m.interior(&self.action.generators()[g]);
            let rhs = j.differential();
            for p in points {
                let r = (lhs.at(p) - rhs.at(p)).norm();
                worst = worst.max(r);
            }
        }
        worst
    }
}

/// The fiber of the bundle of Lie-algebra elements whose generators are both
/// vertical and horizontal at `p`: `{ξ : ξ_M(p) ∈ (V ∩ H)(p)}` as a subspace
/// of the coefficient space.
pub fn g_h_fiber(
    phase: &ConstraintPhase,
    action: &SymmetryAction,
    p: &[f64],
) -> Result<Subspace> {
    let k = action.dim();
    let n = phase.m_chart.dim();
    let h = phase.horizontal_space(p);
    let v = action.vertical_space(p);
    let w = v.intersect(&h)?;
    let lambda = DMatrix::from_fn(n, k, |i, g| action.generators()[g].at(p)[i]);
    // c such that Λc ∈ W: kernel of (I − P_W) Λ
    let mut proj = DMatrix::zeros(n, k);
    for j in 0..k {
        let col = lambda.column(j).into_owned();
        proj.set_column(j, &(&col - w.project(&col)));
    }
    Ok(crate::subspace::kernel_of(&proj, phase.tol))
}

/// A section of the vertical-horizontal Lie algebra bundle, written through
/// coefficient fields against the chosen basis.
#[derive(Clone)]
pub struct GhSection {
    pub coeffs: Vec<ScalarField>,
}

impl GhSection {
    pub fn parse(
        coeffs: &[&str],
        chart: &Chart,
        params: &BTreeMap<String, f64>,
    ) -> Result<GhSection> {
        Ok(GhSection {
            coeffs: coeffs
                .iter()
                .map(|src| ScalarField::parse(src, chart, params))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// The associated vertical-horizontal vector field `Σ f_i ξⁱ_M`.
    pub fn field(&self, action: &SymmetryAction) -> VectorField {
        let mut acc = VectorField::zero(action.chart());
        for (f, g) in self.coeffs.iter().zip(action.generators()) {
            acc = acc.add(&g.scale_field(f));
        }
        acc
    }

    /// The momentum 1-form `Σ f_i dJ^{ξⁱ}`, which equals `i_𝝃 ω_M`.
    pub fn momentum_one_form(
        &self,
        phase: &ConstraintPhase,
        lifted: &LiftedAction,
    ) -> OneForm {
        let k = lifted.action.dim();
        let mut acc = OneForm::zero(&phase.m_chart);
        for g in 0..k {
            let mut xi = vec![0.0; k];
            xi[g] = 1.0;
            let dj = lifted.momentum_field(phase, &xi).differential();
            acc = acc.add(&dj.scale_field(&self.coeffs[g]));
        }
        acc
    }
}

/// The momentum-balance residual `dJ^{ξ}(X_h) − J^{X_h[ξ]}` at a point, for
/// the flow of the implicit Hamiltonian solution of `h`.
pub fn noether_residual(
    d: &DiracStructure,
    phase: &ConstraintPhase,
    lifted: &LiftedAction,
    section: &GhSection,
    h: &ScalarField,
    p: &[f64],
) -> Result<f64> {
    let k = lifted.action.dim();
    let sol = d.solve_for_vector(p, &h.gradient(p))?;
    // J^{ξ} as a field, differentiated along X_h
    let mut j_field = ScalarField::zero(&phase.m_chart);
    let mut j_shift = 0.0;
    for g in 0..k {
        let mut xi = vec![0.0; k];
        xi[g] = 1.0;
        let jg = lifted.momentum_field(phase, &xi);
        j_field = j_field.add(&jg.mul(&section.coeffs[g]));
        // J^{X[ξ]} = Σ X[f_i] J^{ξⁱ}
        j_shift += section.coeffs[g].gradient(p).dot(&sol.x) * jg.value(p);
    }
    Ok(j_field.gradient(p).dot(&sol.x) - j_shift)
}

/// The reaction codistribution at a point: the horizontal-annihilator parts
/// `α − i_X ω_M` of the `D ∩ K⊥` sections.
pub fn reaction_space(
    phase: &ConstraintPhase,
    dk: &DCapKPerp,
    p: &[f64],
) -> Subspace {
    let n = phase.m_chart.dim();
    let vals: Vec<DVector<f64>> = dk
        .sections
        .iter()
        .map(|s| s.form.at(p) - phase.omega_m.interior(&s.vector).at(p))
        .collect();
    Subspace::span_with_tol(n, &vals, phase.tol)
}

/// Whether `ξ_M` lies in `V ∩ R°` at every point: the criterion for the
/// momentum component of a fixed algebra element to be conserved by every
/// invariant Hamiltonian.
pub fn conserved_criterion(
    phase: &ConstraintPhase,
    action: &SymmetryAction,
    dk: &DCapKPerp,
    xi: &[f64],
    points: &[Vec<f64>],
) -> Result<bool> {
    let field = action.generator_of(xi);
    for p in points {
        let val = field.at(p);
        let v = action.vertical_space(p);
        if val.norm() > 1e-12 && v.residual_of(&val) > 1e-8 {
            return Ok(false);
        }
        let r = reaction_space(phase, dk, p);
        for beta in r.basis_vectors() {
            if beta.dot(&val).abs() > 1e-8 * val.norm().max(1.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smooth fields spanning the optimal distribution `U + V`: the vector parts
/// of `D ∩ K⊥` plus the generators.
pub fn optimal_distribution_fields(
    dk: &DCapKPerp,
    action: &SymmetryAction,
) -> Vec<VectorField> {
    let mut fields: Vec<VectorField> = dk.sections.iter().map(|s| s.vector.clone()).collect();
    fields.extend(action.generators().iter().cloned());
    fields
}

/// The fiber of `U + V` at a point.
pub fn optimal_distribution(
    phase: &ConstraintPhase,
    dk: &DCapKPerp,
    action: &SymmetryAction,
    p: &[f64],
) -> Subspace {
    let n = phase.m_chart.dim();
    let vals: Vec<DVector<f64>> = optimal_distribution_fields(dk, action)
        .iter()
        .map(|f| f.at(p))
        .collect();
    Subspace::span_with_tol(n, &vals, phase.tol)
}

/// Involutivity report for a spanned distribution.
#[derive(Clone, Debug)]
pub struct InvolutivityReport {
    pub involutive: bool,
    pub max_residual: f64,
    pub witness: Option<(usize, usize, Vec<f64>, f64)>,
}

/// Brackets all pairs of the spanning fields and checks membership of the
/// values in the spanned fiber at each point.
pub fn is_involutive(
    fields: &[VectorField],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<InvolutivityReport> {
    let mut max_residual = 0.0f64;
    let mut witness = None;
    if fields.is_empty() {
        return Ok(InvolutivityReport { involutive: true, max_residual, witness });
    }
    let n = fields[0].chart().dim();
    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            let b = lie_bracket(&fields[i], &fields[j])?;
            for p in points {
                let values: Vec<_> = fields.iter().map(|f| f.at(p)).collect();
                let scale = values.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
                let span = Subspace::span(n, &values);
                let r = span.residual_scaled(&b.at(p), scale);
                if r > max_residual {
                    max_residual = r;
                }
                if r > tol && witness.is_none() {
                    witness = Some((i, j, p.clone(), r));
                }
            }
        }
    }
    Ok(InvolutivityReport { involutive: witness.is_none(), max_residual, witness })
}

/// Leaf data for optimal-level reduction: conserved functions cutting the
/// leaf, the leaf chart with its embedding, and the residual action with its
/// quotient on the leaf.
#[derive(Clone)]
pub struct LeafData {
    pub conserved: Vec<ScalarField>,
    pub chart: Chart,
    pub embedding: PointMap,
    pub action: SymmetryAction,
    pub quotient: QuotientChart,
}

/// Restricts the Dirac structure of the phase to the leaf cut out by the
/// conserved functions, then reduces by the residual action. The conserved
/// functions must annihilate the optimal distribution along the leaf.
pub fn leaf_reduce(
    phase: &ConstraintPhase,
    d: &DiracStructure,
    dk: &DCapKPerp,
    action: &SymmetryAction,
    leaf: &LeafData,
    reduced_points: &[Vec<f64>],
) -> Result<DiracStructure> {
    let leaf_points: Vec<Vec<f64>> =
        reduced_points.iter().map(|q| leaf.quotient.slice.value(q)).collect();
    let ambient_points: Vec<Vec<f64>> =
        leaf_points.iter().map(|p| leaf.embedding.value(p)).collect();

    // d(conserved) must annihilate U + V on the leaf.
    for f in &leaf.conserved {
        for p in &ambient_points {
            let df = f.gradient(p);
            let dg = optimal_distribution(phase, dk, action, p);
            for v in dg.basis_vectors() {
                if df.dot(&v).abs() > 1e-8 * df.norm().max(1.0) {
                    return Err(Error::Degenerate {
                        what: "conserved function does not annihilate the optimal distribution"
                            .into(),
                        point: p.clone(),
                    });
                }
            }
        }
    }

    let level = LevelSet {
        chart: leaf.chart.clone(),
        embedding: leaf.embedding.clone(),
        level_functions: leaf.conserved.clone(),
    };
    let d_leaf = d.restrict_to_level_set(&level, &leaf_points)?;
    let dk_leaf = d_cap_k_perp(&d_leaf, &leaf.action, &leaf_points)?;
    let reduced = reduce_sections(
        &dk_leaf.sections,
        &d_leaf,
        &leaf.action,
        &leaf.quotient,
        reduced_points,
    )?;
    Ok(reduced)
}

/// Extracts the 2-form matrix of a Dirac fiber that is the graph of a
/// 2-form (full `G1`): with section stacks `S` (vectors) and `A` (forms),
/// `Ω = S⁻ᵀ Aᵀ`.
pub fn two_form_of_graph(d: &DiracStructure, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = d.chart().dim();
    let fiber = d.fiber(p);
    if fiber.dim() != n {
        return Err(Error::Degenerate { what: "fiber rank".into(), point: p.to_vec() });
    }
    let basis = fiber.basis();
    let s = DMatrix::from_fn(n, n, |i, j| basis[(i, j)]);
    let a = DMatrix::from_fn(n, n, |i, j| basis[(n + i, j)]);
    let lu = s.transpose().lu();
    let omega = lu
        .solve(&a.transpose())
        .ok_or_else(|| Error::Degenerate { what: "graph extraction (G1 not full)".into(), point: p.to_vec() })?;
    let sym = (&omega + omega.transpose()).amax();
    if sym > 1e-7 * omega.amax().max(1.0) {
        return Err(Error::Degenerate {
            what: format!("extracted form not antisymmetric ({sym:.3e})"),
            point: p.to_vec(),
        });
    }
    Ok(omega)
}

/// Extracts the bivector matrix of a Dirac fiber that is the graph of a
/// bivector (full `P1`): `π^{ai}` with `♯α = Σ_a α_a π^{a·}`.
pub fn bivector_of_graph(d: &DiracStructure, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = d.chart().dim();
    let fiber = d.fiber(p);
    if fiber.dim() != n {
        return Err(Error::Degenerate { what: "fiber rank".into(), point: p.to_vec() });
    }
    let basis = fiber.basis();
    // Columns satisfy X_j = πᵀ α_j, i.e. S = πᵀ A, so Aᵀ π = Sᵀ.
    let at = DMatrix::from_fn(n, n, |i, j| basis[(n + j, i)]);
    let st = DMatrix::from_fn(n, n, |i, j| basis[(j, i)]);
    let pi = at
        .lu()
        .solve(&st)
        .ok_or_else(|| Error::Degenerate { what: "graph extraction (P1 not full)".into(), point: p.to_vec() })?;
    let sym = (&pi + pi.transpose()).amax();
    if sym > 1e-7 * pi.amax().max(1.0) {
        return Err(Error::Degenerate {
            what: format!("extracted bivector not antisymmetric ({sym:.3e})"),
            point: p.to_vec(),
        });
    }
    Ok(pi)
}

/// The projected horizontal fiber and the reduced-form value at a reduced
/// point: lifts of the arguments are solved in the vector parts of
/// `D ∩ K⊥`, and the value is `ω_M` of the lifts.
pub fn h_bar_space(
    dk: &DCapKPerp,
    quotient: &QuotientChart,
    q: &[f64],
) -> Subspace {
    let m = quotient.slice.value(q);
    let r = quotient.reduced.dim();
    let n = quotient.slice.target().dim();
    let jpi = DMatrix::from_fn(r, n, |a, i| quotient.projection[a].gradient(&m)[i]);
    let vals: Vec<DVector<f64>> =
        dk.sections.iter().map(|s| &jpi * s.vector.at(&m)).collect();
    Subspace::span(r, &vals)
}

pub fn omega_h_bar(
    phase: &ConstraintPhase,
    dk: &DCapKPerp,
    quotient: &QuotientChart,
    q: &[f64],
    xbar: &DVector<f64>,
    ybar: &DVector<f64>,
) -> Result<f64> {
    let m = quotient.slice.value(q);
    let r = quotient.reduced.dim();
    let n = quotient.slice.target().dim();
    let jpi = DMatrix::from_fn(r, n, |a, i| quotient.projection[a].gradient(&m)[i]);
    let u = DMatrix::from_fn(n, dk.sections.len(), |i, j| dk.sections[j].vector.at(&m)[i]);
    let pushed = &jpi * &u;
    let svd = pushed.clone().svd(true, true);
    let lift = |target: &DVector<f64>| -> Result<DVector<f64>> {
        let c = svd
            .solve(target, 1e-12)
            .map_err(|_| Error::Degenerate { what: "horizontal lift".into(), point: m.clone() })?;
        let residual = (&pushed * &c - target).norm();
        if residual > 1e-8 * target.norm().max(1.0) {
            return Err(Error::Degenerate {
                what: "argument not in the projected horizontal space".into(),
                point: m.clone(),
            });
        }
        Ok(&u * c)
    };
    let ux = lift(xbar)?;
    let uy = lift(ybar)?;
    let omega = phase.omega_m.at(&m);
    Ok(ux.dot(&(omega * uy)))
}
