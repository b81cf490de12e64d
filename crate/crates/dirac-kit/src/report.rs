//! The analysis pipeline: runs every check for one system and action, and
//! assembles a deterministic machine-readable report.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{expected_graph, expected_sections, BuiltAction, CatalogEntry, ReactionSpec};
use crate::dirac::DiracStructure;
use crate::error::{Error, Result};
use crate::nonholonomic::{
    conserved_criterion, is_involutive, leaf_reduce, noether_residual, omega_h_bar,
    optimal_distribution_fields, reaction_space, two_form_of_graph,
};
use crate::reduction::{check_dirac_invariance, d_cap_k_perp, reduce_sections, verify_method_b};
use crate::subspace::Subspace;

pub const SCHEMA: &str = "dirac-kit/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The check is expected to fail for this input and did.
    ExpectedFail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn pass(name: &str, residual: f64) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            status: Status::Pass,
            max_residual: Some(residual),
            witness: None,
            detail: None,
        }
    }

    pub fn fail(name: &str, residual: f64, detail: impl Into<String>) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            status: Status::Fail,
            max_residual: Some(residual),
            witness: None,
            detail: Some(detail.into()),
        }
    }

    pub fn skipped(name: &str, why: impl Into<String>) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            status: Status::Skipped,
            max_residual: None,
            witness: None,
            detail: Some(why.into()),
        }
    }

    pub fn of(name: &str, ok: bool, residual: f64, detail: impl Into<String>) -> CheckRecord {
        if ok {
            CheckRecord::pass(name, residual)
        } else {
            CheckRecord::fail(name, residual, detail)
        }
    }

    pub fn with_witness(mut self, point: &[f64]) -> CheckRecord {
        self.witness = Some(point.to_vec());
        self
    }

    pub fn ok(&self) -> bool {
        matches!(self.status, Status::Pass | Status::ExpectedFail | Status::Skipped)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionText {
    pub vector: Vec<String>,
    pub form: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledSection {
    pub vector: Vec<f64>,
    pub form: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Objects {
    /// Expected reduced span in expression form, when the entry carries one.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expected_reduced_span: Vec<SectionText>,
    /// Reduced-structure section values at the first sample point.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reduced_sections_at_base: Vec<SampledSection>,
    /// `D ∩ K⊥` section values at the first sample point upstairs.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub d_cap_k_perp_at_base: Vec<SampledSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    pub system: String,
    pub action: String,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub params: std::collections::BTreeMap<String, f64>,
    pub checks: Vec<CheckRecord>,
    pub objects: Objects,
}

impl AnalysisReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AnalysisOptions {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { seed: 42, samples: 128, tol: 1e-9 }
    }
}

/// Runs the full pipeline for one action of an entry: invariance, structure
/// invariants, reduction, the cross-check of the two reduction routes, the
/// momentum/reaction battery, leaf reduction when leaf data is present, and
/// the comparisons against the entry's reference expectations.
pub fn run_analysis(
    entry: &CatalogEntry,
    action_name: &str,
    options: &AnalysisOptions,
) -> Result<AnalysisReport> {
    let action = entry
        .actions
        .iter()
        .find(|a| a.name == action_name)
        .ok_or_else(|| Error::UnknownSystem(format!("{}/{}", entry.spec.name, action_name)))?;

    let mut checks: Vec<CheckRecord> = Vec::new();
    let mut objects = Objects::default();
    let d = &entry.dirac;
    let phase = &entry.phase;
    let m_chart = &phase.m_chart;
    let n = m_chart.dim();
    let k = action.lifted.action.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let m_points = m_chart.sample_many(options.samples, &mut rng);
    let red_points = action.quotient.reduced.sample_many(options.samples, &mut rng);
    let base_points: Vec<Vec<f64>> =
        red_points.iter().map(|q| action.quotient.slice.value(q)).collect();

    // --- action structure ---
    let structure = action
        .lifted
        .action
        .validate(&m_points[..m_points.len().min(16)])
        .and_then(|_| action.quotient.validate(&action.lifted.action, &red_points[..red_points.len().min(16)]));
    checks.push(match structure {
        Ok(()) => CheckRecord::pass("action-structure", 0.0),
        Err(e) => CheckRecord::fail("action-structure", f64::NAN, e.to_string()),
    });

    // --- invariance of D under the action ---
    let inv = check_dirac_invariance(d, &action.lifted.action, &m_points, 1e-8)?;
    checks.push(match inv.witness {
        None => CheckRecord::pass("dirac-invariance", inv.max_residual),
        Some((g, s, ref p, r)) => CheckRecord::fail(
            "dirac-invariance",
            inv.max_residual,
            format!("generator {g}, section {s}, residual {r:.3e}"),
        )
        .with_witness(p),
    });

    // --- structure invariants of D ---
    checks.push(match d.check_lagrangian(&m_points) {
        Ok(r) => CheckRecord::pass("lagrangian", r),
        Err(e) => CheckRecord::fail("lagrangian", f64::NAN, e.to_string()),
    });
    {
        let mut worst = 0.0f64;
        let mut char_ok = true;
        let mut g0_trivial = true;
        let mut p1_full = true;
        for p in m_points.iter().take(32) {
            let ch = d.characteristic_spaces(p);
            char_ok &= ch.g0.equals(&ch.p1.annihilator()) && ch.p0.equals(&ch.g1.annihilator());
            g0_trivial &= ch.g0.dim() == 0;
            p1_full &= ch.p1.dim() == n;
            worst = worst.max(0.0);
        }
        checks.push(CheckRecord::of(
            "characteristic-identities",
            char_ok,
            worst,
            "annihilator identities failed",
        ));
        checks.push(CheckRecord::of(
            "kernel-trivial-covectors-full",
            g0_trivial && p1_full,
            0.0,
            "constrained-system fiber shape violated",
        ));
    }

    // --- energy conservation for the built Hamiltonian ---
    {
        let mut worst = 0.0f64;
        let mut ok = true;
        for p in m_points.iter().take(options.samples) {
            match d.solve_for_vector(p, &phase.hamiltonian.gradient(p)) {
                Ok(sol) => worst = worst.max(sol.energy_residual.abs()),
                Err(e) => {
                    ok = false;
                    checks.push(CheckRecord::fail("energy-conservation", f64::NAN, e.to_string()));
                    break;
                }
            }
        }
        if ok {
            checks.push(CheckRecord::of(
                "energy-conservation",
                worst <= options.tol.max(1e-9),
                worst,
                "dH(X_H) exceeded tolerance",
            ));
        }
    }

    // --- reduction ---
    let dk = d_cap_k_perp(d, &action.lifted.action, &base_points)?;
    checks.push(CheckRecord::pass("d-cap-k-perp-rank", dk.rank as f64));
    objects.d_cap_k_perp_at_base = dk
        .sections
        .iter()
        .map(|s| SampledSection {
            vector: s.vector.at(&base_points[0]).as_slice().to_vec(),
            form: s.form.at(&base_points[0]).as_slice().to_vec(),
        })
        .collect();

    let d_red = reduce_sections(&dk.sections, d, &action.lifted.action, &action.quotient, &red_points)?;
    checks.push(match d_red.check_lagrangian(&red_points) {
        Ok(r) => CheckRecord::pass("reduced-lagrangian", r),
        Err(e) => CheckRecord::fail("reduced-lagrangian", f64::NAN, e.to_string()),
    });
    objects.reduced_sections_at_base = d_red
        .sections()
        .iter()
        .map(|s| SampledSection {
            vector: s.vector.at(&red_points[0]).as_slice().to_vec(),
            form: s.form.at(&red_points[0]).as_slice().to_vec(),
        })
        .collect();

    let (mb_ok, mb_res) = verify_method_b(
        d,
        &action.lifted.action,
        &action.quotient,
        &d_red,
        &red_points[..red_points.len().min(32)],
        1e-8,
    )?;
    checks.push(CheckRecord::of(
        "method-b-agreement",
        mb_ok,
        mb_res,
        "the two reduction routes disagree",
    ));

    // closedness preservation (only binding when the input is closed)
    {
        let input = d.is_closed(options.seed, 16, 1e-8)?;
        if input.closed {
            let reduced = d_red.is_closed(options.seed, 16, 1e-8)?;
            checks.push(CheckRecord::of(
                "closedness-preserved",
                reduced.closed,
                reduced.max_residual,
                "reduction broke closedness",
            ));
        } else {
            checks.push(CheckRecord::skipped(
                "closedness-preserved",
                "input structure is not closed",
            ));
        }
    }

    // --- momentum map consistency and the Noether battery ---
    if k > 0 {
        let res = action.lifted.momentum_consistency(phase, &m_points[..m_points.len().min(32)]);
        checks.push(CheckRecord::of(
            "momentum-map-consistency",
            res <= 1e-8,
            res,
            "i_ξ ω − dJ^ξ exceeded tolerance",
        ));
    }
    if !action.gh_sections.is_empty() {
        let mut worst = 0.0f64;
        for sec in &action.gh_sections {
            // the associated pair (𝝃, Σ f_i dJ^i) must be a section of D
            let field = sec.field(&action.lifted.action);
            let form = sec.momentum_one_form(phase, &action.lifted);
            for p in m_points.iter().take(32) {
                let mut pair = DVector::zeros(2 * n);
                pair.rows_mut(0, n).copy_from(&field.at(p));
                pair.rows_mut(n, n).copy_from(&form.at(p));
                worst = worst.max(d.membership_residual_scaled(p, &pair));
            }
        }
        checks.push(CheckRecord::of(
            "momentum-pair-in-structure",
            worst <= 1e-8,
            worst,
            "momentum 1-form pair left the structure",
        ));

        let mut worst = 0.0f64;
        for sec in &action.gh_sections {
            for p in m_points.iter().take(options.samples) {
                let r = noether_residual(d, phase, &action.lifted, sec, &phase.hamiltonian, p)?;
                worst = worst.max(r.abs());
            }
        }
        checks.push(CheckRecord::of(
            "momentum-balance",
            worst <= 1e-8,
            worst,
            "momentum balance residual exceeded tolerance",
        ));
    }

    // --- reaction codistribution ---
    if let Some(expected) = &action.expected.reaction {
        let mut ok = true;
        let mut detail = String::new();
        for p in m_points.iter().take(32) {
            let r = reaction_space(phase, &dk, p);
            let hit = match expected {
                ReactionSpec::Zero => r.dim() == 0,
                ReactionSpec::HorizontalAnnihilator => {
                    let h = phase.horizontal_space(p);
                    r.equals(&h.annihilator())
                }
                ReactionSpec::Span(rows) => {
                    let fields: Vec<crate::OneForm> = rows
                        .iter()
                        .map(|row| {
                            let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
                            crate::OneForm::parse(&refs, m_chart, &entry.params).unwrap()
                        })
                        .collect();
                    let want = Subspace::span(n, &fields.iter().map(|f| f.at(p)).collect::<Vec<_>>());
                    r.equals(&want)
                }
            };
            if !hit {
                ok = false;
                detail = format!("reaction span dim {} at {:?}", r.dim(), p);
                break;
            }
        }
        checks.push(CheckRecord::of("reaction-span", ok, 0.0, detail));
    }

    // --- optimal distribution ---
    let dg_fields = optimal_distribution_fields(&dk, &action.lifted.action);
    if let Some(expected_involutive) = action.expected.dg_involutive {
        let rep = is_involutive(&dg_fields, &m_points[..m_points.len().min(24)], 1e-8)?;
        let status = match (rep.involutive, expected_involutive) {
            (true, true) => Status::Pass,
            (false, false) => Status::ExpectedFail,
            _ => Status::Fail,
        };
        checks.push(CheckRecord {
            name: "optimal-distribution-involutive".into(),
            status,
            max_residual: Some(rep.max_residual),
            witness: rep.witness.map(|(_, _, p, _)| p),
            detail: Some(format!(
                "computed {}, reference {}",
                rep.involutive, expected_involutive
            )),
        });
    }
    if action.expected.dg_full_rank == Some(true) {
        let mut ok = true;
        for p in m_points.iter().take(24) {
            let span = Subspace::span(n, &dg_fields.iter().map(|f| f.at(p)).collect::<Vec<_>>());
            ok &= span.dim() == n;
        }
        checks.push(CheckRecord::of(
            "optimal-distribution-full",
            ok,
            0.0,
            "optimal distribution is not the whole tangent space",
        ));
    }
    for (i, expr) in action.expected.conserved_functions.iter().enumerate() {
        let f = crate::ScalarField::parse(expr, m_chart, &entry.params)?;
        let mut worst = 0.0f64;
        for p in m_points.iter().take(32) {
            let df = f.gradient(p);
            for field in &dg_fields {
                worst = worst.max(df.dot(&field.at(p)).abs() / df.norm().max(1.0));
            }
        }
        checks.push(CheckRecord::of(
            &format!("conserved-annihilates-{i}"),
            worst <= 1e-8,
            worst,
            "conserved function does not annihilate the optimal distribution",
        ));
    }
    {
        let mut all_ok = true;
        let mut detail = String::new();
        for (xi, expected) in &action.conserved_elements {
            let got = conserved_criterion(
                phase,
                &action.lifted.action,
                &dk,
                xi,
                &m_points[..m_points.len().min(24)],
            )?;
            if got != *expected {
                all_ok = false;
                detail = format!("element {xi:?}: computed {got}, reference {expected}");
                break;
            }
        }
        if !action.conserved_elements.is_empty() {
            checks.push(CheckRecord::of("conserved-criteria", all_ok, 0.0, detail));
        }
    }

    // --- reduced-form value ---
    if let Some(spec) = &action.expected.omega_h_bar {
        let xrefs: Vec<&str> = spec.x.iter().map(|s| s.as_str()).collect();
        let yrefs: Vec<&str> = spec.y.iter().map(|s| s.as_str()).collect();
        let xf = crate::VectorField::parse(&xrefs, &action.quotient.reduced, &entry.params)?;
        let yf = crate::VectorField::parse(&yrefs, &action.quotient.reduced, &entry.params)?;
        let vf = crate::ScalarField::parse(&spec.value, &action.quotient.reduced, &entry.params)?;
        let mut worst = 0.0f64;
        for q in red_points.iter().take(32) {
            let got = omega_h_bar(phase, &dk, &action.quotient, q, &xf.at(q), &yf.at(q))?;
            worst = worst.max((got - vf.value(q)).abs());
        }
        checks.push(CheckRecord::of(
            "reduced-form-value",
            worst <= options.tol.max(1e-9),
            worst,
            "reduced 2-form value mismatch",
        ));

        // the reduced form must agree with the form induced by the reduced
        // structure itself: find ᾱ with (x̄, ᾱ) in the fiber, evaluate ᾱ(ȳ)
        let mut worst2 = 0.0f64;
        for q in red_points.iter().take(16) {
            let got = omega_h_bar(phase, &dk, &action.quotient, q, &xf.at(q), &yf.at(q))?;
            let fiber = d_red.fiber(q);
            let r = action.quotient.reduced.dim();
            let basis = fiber.basis();
            let top = nalgebra::DMatrix::from_fn(r, fiber.dim(), |i, j| basis[(i, j)]);
            let bottom = nalgebra::DMatrix::from_fn(r, fiber.dim(), |i, j| basis[(r + i, j)]);
            let svd = top.clone().svd(true, true);
            let c = svd.solve(&xf.at(q), 1e-12).map_err(|_| Error::Degenerate {
                what: "reduced-form extraction".into(),
                point: q.clone(),
            })?;
            let alpha = &bottom * c;
            let value = alpha.dot(&yf.at(q));
            worst2 = worst2.max((got - value).abs());
        }
        checks.push(CheckRecord::of(
            "reduced-form-matches-structure",
            worst2 <= 1e-8,
            worst2,
            "form induced by the reduced structure disagrees",
        ));
    }

    // --- leaf reduction ---
    if let Some(leaf) = &action.leaf {
        let mut lrng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5eaf);
        let leaf_red_points = leaf.data.quotient.reduced.sample_many(options.samples.min(64), &mut lrng);
        match leaf_reduce(phase, d, &dk, &action.lifted.action, &leaf.data, &leaf_red_points) {
            Err(e) => checks.push(CheckRecord::fail("leaf-reduction", f64::NAN, e.to_string())),
            Ok(d_leaf_red) => {
                checks.push(match d_leaf_red.check_lagrangian(&leaf_red_points) {
                    Ok(r) => CheckRecord::pass("leaf-reduction", r),
                    Err(e) => CheckRecord::fail("leaf-reduction", f64::NAN, e.to_string()),
                });
                let expected = expected_sections(
                    &leaf.expected_span,
                    &leaf.data.quotient.reduced,
                    &entry.params,
                )?;
                let mut worst = 0.0f64;
                let mut ok = true;
                for q in leaf_red_points.iter().take(32) {
                    let want = Subspace::span(
                        2 * leaf.data.quotient.reduced.dim(),
                        &expected.iter().map(|s| s.at(q)).collect::<Vec<_>>(),
                    );
                    let got = d_leaf_red.fiber(q);
                    ok &= got.equals(&want);
                    for b in want.basis_vectors() {
                        worst = worst.max(got.residual_of(&b));
                    }
                }
                checks.push(CheckRecord::of(
                    "leaf-expected-span",
                    ok,
                    worst,
                    "leaf reduction does not match the reference span",
                ));
                // the reduced structure on the leaf is the graph of a
                // nondegenerate 2-form
                let mut nondeg = true;
                for q in leaf_red_points.iter().take(16) {
                    match two_form_of_graph(&d_leaf_red, q) {
                        Ok(m) => nondeg &= m.determinant().abs() > 1e-12,
                        Err(_) => nondeg = false,
                    }
                }
                checks.push(CheckRecord::of(
                    "leaf-graph-nondegenerate",
                    nondeg,
                    0.0,
                    "leaf structure is not the graph of a nondegenerate form",
                ));
            }
        }
    }

    // --- comparison against the reference reduced span ---
    if !action.expected.d_red_span.is_empty() {
        let expected =
            expected_sections(&action.expected.d_red_span, &action.quotient.reduced, &entry.params)?;
        let r = action.quotient.reduced.dim();
        let mut ok = true;
        let mut worst = 0.0f64;
        let mut witness = None;
        for q in red_points.iter().take(options.samples) {
            let want = Subspace::span(2 * r, &expected.iter().map(|s| s.at(q)).collect::<Vec<_>>());
            let got = d_red.fiber(q);
            let same = got.equals(&want);
            for b in want.basis_vectors() {
                worst = worst.max(got.residual_of(&b));
            }
            if !same && witness.is_none() {
                witness = Some(q.clone());
            }
            ok &= same;
        }
        let mut rec = CheckRecord::of(
            "expected-reduced-span",
            ok,
            worst,
            "computed reduced span differs from the reference span \
             (see the decisions ledger discussion of this entry)",
        );
        if let Some(w) = witness {
            rec = rec.with_witness(&w);
        }
        checks.push(rec);
        objects.expected_reduced_span = action
            .expected
            .d_red_span
            .iter()
            .map(|s| SectionText { vector: s.vector.clone(), form: s.form.clone() })
            .collect();
    }
    if let Some(graph) = &action.expected.graph {
        let reference = expected_graph(graph, &action.quotient.reduced, &entry.params)?;
        let r = action.quotient.reduced.dim();
        let mut ok = true;
        let mut worst = 0.0f64;
        for q in red_points.iter().take(options.samples) {
            let want = reference.fiber(q);
            let got = d_red.fiber(q);
            ok &= got.equals(&want);
            for b in want.basis_vectors() {
                worst = worst.max(got.residual_of(&b));
            }
            let _ = r;
        }
        checks.push(CheckRecord::of(
            "expected-reduced-graph",
            ok,
            worst,
            "computed reduced structure is not the reference graph",
        ));
    }

    Ok(AnalysisReport {
        schema: SCHEMA,
        system: entry.spec.name.clone(),
        action: action.name.clone(),
        seed: options.seed,
        samples: options.samples,
        tol: options.tol,
        params: entry.params.clone(),
        checks,
        objects,
    })
}

/// Exit-code mapping shared by the command-line surface: 0 all pass, 1 check
/// failure, 2 input error, 3 rank or degeneracy abort.
pub fn exit_code_for(result: &Result<AnalysisReport>) -> i32 {
    match result {
        Ok(report) => {
            if report.all_ok() {
                0
            } else {
                1
            }
        }
        Err(Error::RankInstability { .. }) | Err(Error::Degenerate { .. }) => 3,
        Err(_) => 2,
    }
}

/// Convenience accessor used by the verification layer.
pub fn reduced_structure(
    entry: &CatalogEntry,
    action: &BuiltAction,
    options: &AnalysisOptions,
) -> Result<(DiracStructure, crate::reduction::DCapKPerp, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let _ = entry.phase.m_chart.sample_many(options.samples, &mut rng);
    let red_points = action.quotient.reduced.sample_many(options.samples, &mut rng);
    let base_points: Vec<Vec<f64>> =
        red_points.iter().map(|q| action.quotient.slice.value(q)).collect();
    let dk = d_cap_k_perp(&entry.dirac, &action.lifted.action, &base_points)?;
    let d_red = reduce_sections(
        &dk.sections,
        &entry.dirac,
        &action.lifted.action,
        &action.quotient,
        &red_points,
    )?;
    Ok((d_red, dk, red_points))
}
