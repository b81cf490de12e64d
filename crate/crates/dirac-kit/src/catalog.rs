//! Built-in benchmark systems with reference expectations, plus the
//! declarative description format they share with user-supplied systems.
//!
//! Each system is stored as a [`SystemSpec`] whose function entries are
//! expression strings; building a spec produces live charts, fields, the
//! constraint phase, and symmetry data. Reference expectations come from the
//! published treatments of these systems and are compared against the
//! pipeline output by the verification layer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::dirac::{DiracStructure, PontryaginSection};
use crate::error::{Error, Result};
use crate::field::{OneForm, PointMap, ScalarField, TwoForm, VectorField};
use crate::nonholonomic::{
    build_constraint_phase, ConstraintPhase, GhSection, LeafData, LiftedAction, MechanicalSystem,
    PhaseOptions,
};
use crate::reduction::{QuotientChart, SymmetryAction};

pub const SYSTEM_NAMES: [&str; 5] = [
    "constrained_particle",
    "vertical_disk",
    "chaplygin_skate",
    "skate_with_rotor",
    "heisenberg_particle",
];

/// A section given by component expressions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SectionSpec {
    pub vector: Vec<String>,
    pub form: Vec<String>,
}

/// Reference reduced structure presented as the graph of a form or bivector,
/// given by the strictly-upper entries `(coord_i, coord_j, expression)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum GraphSpec {
    TwoForm(Vec<(String, String, String)>),
    Bivector(Vec<(String, String, String)>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OmegaHBarSpec {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub value: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum ReactionSpec {
    /// Equal to the full annihilator of the horizontal distribution.
    HorizontalAnnihilator,
    Zero,
    Span(Vec<Vec<String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuotientSpec {
    pub coords: Vec<String>,
    pub ranges: Vec<(f64, f64)>,
    pub projection: Vec<String>,
    pub slice: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LeafSpec {
    pub conserved: Vec<String>,
    pub coords: Vec<String>,
    pub ranges: Vec<(f64, f64)>,
    pub embedding: Vec<String>,
    pub generators: Vec<Vec<String>>,
    #[serde(default)]
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    pub quotient: QuotientSpec,
    pub expected_span: Vec<SectionSpec>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ActionExpected {
    #[serde(default)]
    pub d_red_span: Vec<SectionSpec>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub omega_h_bar: Option<OmegaHBarSpec>,
    #[serde(default)]
    pub reaction: Option<ReactionSpec>,
    #[serde(default)]
    pub dg_involutive: Option<bool>,
    #[serde(default)]
    pub dg_full_rank: Option<bool>,
    #[serde(default)]
    pub conserved_functions: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ActionSpec {
    pub name: String,
    /// Generator component expressions on the constraint chart.
    pub generators: Vec<Vec<String>>,
    /// Generator component expressions on the configuration chart.
    pub q_generators: Vec<Vec<String>>,
    /// Sparse structure constants `(l, i, j, c)` meaning `c^l_{ij} = c`
    /// (the transpose pair is filled automatically).
    #[serde(default)]
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    pub quotient: QuotientSpec,
    #[serde(default)]
    pub expected: ActionExpected,
    #[serde(default)]
    pub gh_sections: Vec<Vec<String>>,
    /// Algebra elements paired with the expected universal-conservation
    /// verdict.
    #[serde(default)]
    pub conserved_elements: Vec<(Vec<f64>, bool)>,
    #[serde(default)]
    pub leaf: Option<LeafSpec>,
}

/// A full declarative system description; also the custom-configuration
/// document format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub chart: Vec<String>,
    #[serde(rename = "box")]
    pub ranges: Vec<(f64, f64)>,
    pub metric: Vec<Vec<String>>,
    pub potential: String,
    pub constraints: Vec<Vec<String>>,
    #[serde(default)]
    pub constraint_frame: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub eliminate: Option<Vec<String>>,
    #[serde(default)]
    pub momentum_ranges: BTreeMap<String, (f64, f64)>,
    #[serde(default)]
    pub horizontal_frame: Option<Vec<Vec<String>>>,
    /// Closed-form Hamiltonian to compare against the built one, if any.
    #[serde(default)]
    pub hamiltonian: Option<String>,
    pub actions: Vec<ActionSpec>,
}

/// A built catalog entry: live objects for one system.
pub struct CatalogEntry {
    pub spec: SystemSpec,
    pub params: BTreeMap<String, f64>,
    pub system: MechanicalSystem,
    pub phase: ConstraintPhase,
    pub dirac: DiracStructure,
    pub actions: Vec<BuiltAction>,
}

pub struct BuiltAction {
    pub name: String,
    pub lifted: LiftedAction,
    pub quotient: QuotientChart,
    pub expected: ActionExpected,
    pub gh_sections: Vec<GhSection>,
    pub conserved_elements: Vec<(Vec<f64>, bool)>,
    pub leaf: Option<BuiltLeaf>,
}

pub struct BuiltLeaf {
    pub data: LeafData,
    pub expected_span: Vec<SectionSpec>,
}

fn dense_constants(k: usize, sparse: &[(usize, usize, usize, f64)]) -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; k]; k]; k];
    for &(l, i, j, v) in sparse {
        c[l][i][j] = v;
        c[l][j][i] = -v;
    }
    c
}

fn parse_sections(
    specs: &[SectionSpec],
    chart: &Chart,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<PontryaginSection>> {
    specs
        .iter()
        .map(|s| {
            let v: Vec<&str> = s.vector.iter().map(|x| x.as_str()).collect();
            let f: Vec<&str> = s.form.iter().map(|x| x.as_str()).collect();
            PontryaginSection::new(
                VectorField::parse(&v, chart, params)?,
                OneForm::parse(&f, chart, params)?,
            )
        })
        .collect()
}

/// Builds the live expected span on a chart.
pub fn expected_sections(
    specs: &[SectionSpec],
    chart: &Chart,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<PontryaginSection>> {
    parse_sections(specs, chart, params)
}

/// Builds a reference graph structure on a chart.
pub fn expected_graph(
    spec: &GraphSpec,
    chart: &Chart,
    params: &BTreeMap<String, f64>,
) -> Result<DiracStructure> {
    let entries = |list: &Vec<(String, String, String)>| -> Result<TwoForm> {
        let mut upper = Vec::new();
        for (ci, cj, expr) in list {
            let i = chart
                .coord_index(ci)
                .ok_or_else(|| Error::InvalidParameter(format!("no coordinate `{ci}`")))?;
            let j = chart
                .coord_index(cj)
                .ok_or_else(|| Error::InvalidParameter(format!("no coordinate `{cj}`")))?;
            upper.push((i, j, ScalarField::parse(expr, chart, params)?));
        }
        Ok(TwoForm::from_upper(chart, &upper))
    };
    match spec {
        GraphSpec::TwoForm(list) => crate::dirac::graph_of_two_form_full(&entries(list)?),
        GraphSpec::Bivector(list) => crate::dirac::graph_of_bivector_full(&entries(list)?),
    }
}

fn build_quotient(
    spec: &QuotientSpec,
    name: &str,
    m_chart: &Chart,
    params: &BTreeMap<String, f64>,
) -> Result<QuotientChart> {
    let coords: Vec<&str> = spec.coords.iter().map(|s| s.as_str()).collect();
    let reduced = Chart::new(name, &coords, &spec.ranges)?;
    let projection = spec
        .projection
        .iter()
        .map(|src| ScalarField::parse(src, m_chart, params))
        .collect::<Result<Vec<_>>>()?;
    let slice_comps: Vec<&str> = spec.slice.iter().map(|s| s.as_str()).collect();
    let slice = PointMap::parse(&reduced, m_chart, &slice_comps, params)?;
    QuotientChart::new(reduced, projection, slice)
}

/// Builds a live entry from a declarative description.
pub fn build(spec: &SystemSpec, overrides: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let mut params = spec.params.clone();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(Error::InvalidParameter(format!("unknown parameter `{k}`")));
        }
        params.insert(k.clone(), *v);
    }
    for (k, v) in &params {
        if *v <= 0.0 {
            return Err(Error::InvalidParameter(format!("parameter `{k}` must be positive")));
        }
    }

    let coords: Vec<&str> = spec.chart.iter().map(|s| s.as_str()).collect();
    let q_chart = Chart::new(format!("{}-q", spec.name), &coords, &spec.ranges)?;
    let metric = spec
        .metric
        .iter()
        .map(|row| {
            row.iter()
                .map(|src| ScalarField::parse(src, &q_chart, &params))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let potential = ScalarField::parse(&spec.potential, &q_chart, &params)?;
    let constraints = spec
        .constraints
        .iter()
        .map(|row| {
            let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
            OneForm::parse(&refs, &q_chart, &params)
        })
        .collect::<Result<Vec<_>>>()?;
    let d_frame = match &spec.constraint_frame {
        Some(rows) => Some(
            rows.iter()
                .map(|row| {
                    let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
                    VectorField::parse(&refs, &q_chart, &params)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let q_points = q_chart.sample_many(12, &mut rng);
    let system = MechanicalSystem::new(
        &q_chart,
        metric,
        potential,
        constraints,
        d_frame,
        &q_points,
        crate::subspace::DEFAULT_TOL,
    )?;

    let options = PhaseOptions {
        eliminate: spec.eliminate.clone(),
        momentum_ranges: spec.momentum_ranges.clone(),
        h_frame: spec.horizontal_frame.clone(),
        params: params.clone(),
        tol: crate::subspace::DEFAULT_TOL,
    };
    let phase = build_constraint_phase(&system, &q_points, &options)?;
    let dirac = phase.dirac_structure()?;

    let mut actions = Vec::new();
    for aspec in &spec.actions {
        let k = aspec.generators.len();
        let generators = aspec
            .generators
            .iter()
            .map(|row| {
                let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
                VectorField::parse(&refs, &phase.m_chart, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        let action = SymmetryAction::with_structure(
            &phase.m_chart,
            generators,
            dense_constants(k, &aspec.structure_constants),
        )?;
        let q_generators = aspec
            .q_generators
            .iter()
            .map(|row| {
                let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
                VectorField::parse(&refs, &q_chart, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        let quotient = build_quotient(
            &aspec.quotient,
            &format!("{}-{}-red", spec.name, aspec.name),
            &phase.m_chart,
            &params,
        )?;
        let gh_sections = aspec
            .gh_sections
            .iter()
            .map(|coeffs| {
                let refs: Vec<&str> = coeffs.iter().map(|s| s.as_str()).collect();
                GhSection::parse(&refs, &phase.m_chart, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        let leaf = match &aspec.leaf {
            None => None,
            Some(lspec) => {
                let lcoords: Vec<&str> = lspec.coords.iter().map(|s| s.as_str()).collect();
                let lchart =
                    Chart::new(format!("{}-{}-leaf", spec.name, aspec.name), &lcoords, &lspec.ranges)?;
                let emb: Vec<&str> = lspec.embedding.iter().map(|s| s.as_str()).collect();
                let embedding = PointMap::parse(&lchart, &phase.m_chart, &emb, &params)?;
                let lgens = lspec
                    .generators
                    .iter()
                    .map(|row| {
                        let refs: Vec<&str> = row.iter().map(|s| s.as_str()).collect();
                        VectorField::parse(&refs, &lchart, &params)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let laction = SymmetryAction::with_structure(
                    &lchart,
                    lgens,
                    dense_constants(lspec.generators.len(), &lspec.structure_constants),
                )?;
                let lquotient = build_quotient(
                    &lspec.quotient,
                    &format!("{}-{}-leaf-red", spec.name, aspec.name),
                    &lchart,
                    &params,
                )?;
                let conserved = lspec
                    .conserved
                    .iter()
                    .map(|src| ScalarField::parse(src, &phase.m_chart, &params))
                    .collect::<Result<Vec<_>>>()?;
                Some(BuiltLeaf {
                    data: LeafData {
                        conserved,
                        chart: lchart,
                        embedding,
                        action: laction,
                        quotient: lquotient,
                    },
                    expected_span: lspec.expected_span.clone(),
                })
            }
        };
        actions.push(BuiltAction {
            name: aspec.name.clone(),
            lifted: LiftedAction { action, q_generators },
            quotient,
            expected: aspec.expected.clone(),
            gh_sections,
            conserved_elements: aspec.conserved_elements.clone(),
            leaf,
        });
    }

    Ok(CatalogEntry { spec: spec.clone(), params, system, phase, dirac, actions })
}

/// Loads a built-in system by name with parameter overrides.
pub fn load(name: &str, overrides: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    build(&spec_of(name)?, overrides)
}

/// The declarative description of a built-in system.
pub fn spec_of(name: &str) -> Result<SystemSpec> {
    let json = match name {
        "constrained_particle" => CONSTRAINED_PARTICLE,
        "vertical_disk" => VERTICAL_DISK,
        "chaplygin_skate" => CHAPLYGIN_SKATE,
        "skate_with_rotor" => SKATE_WITH_ROTOR,
        "heisenberg_particle" => HEISENBERG_PARTICLE,
        _ => return Err(Error::UnknownSystem(name.to_string())),
    };
    Ok(serde_json::from_str(json)?)
}

const CONSTRAINED_PARTICLE: &str = r#"{
  "name": "constrained_particle",
  "params": { "mu_level": 1.0 },
  "chart": ["x", "y", "z"],
  "box": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
  "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
  "potential": "0",
  "constraints": [["-y","0","1"]],
  "constraint_frame": [["1","0","y"],["0","1","0"]],
  "eliminate": ["p_z"],
  "horizontal_frame": [
    ["1","0","y","0","0"],
    ["0","1","0","0","0"],
    ["0","0","0","1","0"],
    ["0","0","0","0","1"]
  ],
  "hamiltonian": "((1+y^2)*p_x^2+p_y^2)/2",
  "actions": [
    {
      "name": "R2",
      "generators": [["1","0","0","0","0"],["0","0","1","0","0"]],
      "q_generators": [["1","0","0"],["0","0","1"]],
      "quotient": {
        "coords": ["y","p_y","p_x"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["y","p_y","p_x"],
        "slice": ["0","y","0","p_x","p_y"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","1","0"], "form": ["-1","0","0"] },
          { "vector": ["0","0","0"], "form": ["y*p_x","0","1+y^2"] },
          { "vector": ["1+y^2","0","-y*p_x"], "form": ["0","1+y^2","0"] }
        ],
        "graph": { "Bivector": [
          ["y", "p_y", "-1"],
          ["p_y", "p_x", "-y*p_x/(1+y^2)"]
        ]},
        "omega_h_bar": {
          "x": ["0","1","0"],
          "y": ["1+y^2","0","-y*p_x"],
          "value": "-(1+y^2)"
        },
        "reaction": "HorizontalAnnihilator",
        "dg_involutive": true,
        "conserved_functions": ["sqrt(1+y^2)*p_x"]
      },
      "gh_sections": [["1","y"], ["p_y","y*p_y"]],
      "conserved_elements": [[[1.0, 0.0], false], [[0.0, 1.0], false]],
      "leaf": {
        "conserved": ["sqrt(1+y^2)*p_x"],
        "coords": ["x","y","z","p_y"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
        "embedding": ["x","y","z","mu_level/sqrt(1+y^2)","p_y"],
        "generators": [["1","0","0","0"],["0","0","1","0"]],
        "quotient": {
          "coords": ["y","p_y"],
          "ranges": [[-2.0, 2.0], [-2.0, 2.0]],
          "projection": ["y","p_y"],
          "slice": ["0","y","0","p_y"]
        },
        "expected_span": [
          { "vector": ["0","1"], "form": ["-1","0"] },
          { "vector": ["1+y^2","0"], "form": ["0","1+y^2"] }
        ]
      }
    }
  ]
}"#;

const VERTICAL_DISK: &str = r#"{
  "name": "vertical_disk",
  "params": { "mu": 1.0, "I": 1.0, "J": 1.0, "R": 1.0, "rho_level": 1.0 },
  "chart": ["x", "y", "theta", "phi"],
  "box": [[-2.0, 2.0], [-2.0, 2.0], [0.0, 6.283185307179586], [0.0, 6.283185307179586]],
  "metric": [
    ["mu","0","0","0"],
    ["0","mu","0","0"],
    ["0","0","I","0"],
    ["0","0","0","J"]
  ],
  "potential": "0",
  "constraints": [
    ["1","0","-R*cos(phi)","0"],
    ["0","1","-R*sin(phi)","0"]
  ],
  "constraint_frame": [
    ["R*cos(phi)","R*sin(phi)","1","0"],
    ["0","0","0","1"]
  ],
  "eliminate": ["p_x","p_y"],
  "horizontal_frame": [
    ["0","0","0","1","0","0"],
    ["R*cos(phi)","R*sin(phi)","1","0","0","0"],
    ["0","0","0","0","1","0"],
    ["0","0","0","0","0","1"]
  ],
  "hamiltonian": "(1+mu*R^2/I)*p_theta^2/(2*I)+p_phi^2/(2*J)",
  "actions": [
    {
      "name": "R2",
      "generators": [
        ["1","0","0","0","0","0"],
        ["0","1","0","0","0","0"]
      ],
      "q_generators": [["1","0","0","0"],["0","1","0","0"]],
      "quotient": {
        "coords": ["theta","phi","p_theta","p_phi"],
        "ranges": [[0.0, 6.283185307179586], [0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["theta","phi","p_theta","p_phi"],
        "slice": ["0","0","theta","phi","p_theta","p_phi"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","1","0","0"], "form": ["0","0","0","1"] },
          { "vector": ["0","0","1","0"], "form": ["-(1+mu*R^2/I)","0","0","0"] },
          { "vector": ["0","0","0","1"], "form": ["0","-1","0","0"] },
          { "vector": ["1","0","0","0"], "form": ["0","0","1+mu*R^2/I","0"] }
        ],
        "graph": { "TwoForm": [
          ["theta", "p_theta", "1+mu*R^2/I"],
          ["phi", "p_phi", "1"]
        ]},
        "dg_involutive": true,
        "dg_full_rank": true
      },
      "conserved_elements": [[[1.0, 0.0], false], [[0.0, 1.0], false]]
    },
    {
      "name": "SE2",
      "generators": [
        ["-y","x","0","1","0","0"],
        ["1","0","0","0","0","0"],
        ["0","1","0","0","0","0"]
      ],
      "q_generators": [["-y","x","0","1"],["1","0","0","0"],["0","1","0","0"]],
      "structure_constants": [[2, 0, 1, 1.0], [1, 0, 2, -1.0]],
      "quotient": {
        "coords": ["theta","p_theta","p_phi"],
        "ranges": [[0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["theta","p_theta","p_phi"],
        "slice": ["0","0","theta","0","p_theta","p_phi"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","0","0"], "form": ["0","0","1"] },
          { "vector": ["0","1","0"], "form": ["-(1+mu*R^2/I)","0","0"] },
          { "vector": ["1","0","0"], "form": ["0","1+mu*R^2/I","0"] }
        ],
        "graph": { "Bivector": [
          ["theta", "p_theta", "-I/(mu*R^2+I)"]
        ]},
        "omega_h_bar": {
          "x": ["1","0","0"],
          "y": ["0","1","0"],
          "value": "1+mu*R^2/I"
        },
        "dg_involutive": true,
        "conserved_functions": ["p_phi"]
      },
      "gh_sections": [["1","y","-x"]],
      "leaf": {
        "conserved": ["p_phi"],
        "coords": ["x","y","theta","phi","p_theta"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0], [0.0, 6.283185307179586], [0.0, 6.283185307179586], [-2.0, 2.0]],
        "embedding": ["x","y","theta","phi","p_theta","rho_level"],
        "generators": [
          ["-y","x","0","1","0"],
          ["1","0","0","0","0"],
          ["0","1","0","0","0"]
        ],
        "structure_constants": [[2, 0, 1, 1.0], [1, 0, 2, -1.0]],
        "quotient": {
          "coords": ["theta","p_theta"],
          "ranges": [[0.0, 6.283185307179586], [-2.0, 2.0]],
          "projection": ["theta","p_theta"],
          "slice": ["0","0","theta","0","p_theta"]
        },
        "expected_span": [
          { "vector": ["1","0"], "form": ["0","1+mu*R^2/I"] },
          { "vector": ["0","1"], "form": ["-(1+mu*R^2/I)","0"] }
        ]
      }
    },
    {
      "name": "S1xR2",
      "generators": [
        ["0","0","1","0","0","0"],
        ["1","0","0","0","0","0"],
        ["0","1","0","0","0","0"]
      ],
      "q_generators": [["0","0","1","0"],["1","0","0","0"],["0","1","0","0"]],
      "quotient": {
        "coords": ["phi","p_phi","p_theta"],
        "ranges": [[0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["phi","p_phi","p_theta"],
        "slice": ["0","0","0","phi","p_theta","p_phi"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["1","0","0"], "form": ["0","1","0"] },
          { "vector": ["0","1","0"], "form": ["-1","0","0"] },
          { "vector": ["0","0","0"], "form": ["0","0","1"] }
        ],
        "graph": { "Bivector": [
          ["phi", "p_phi", "-1"]
        ]},
        "omega_h_bar": {
          "x": ["1","0","0"],
          "y": ["0","1","0"],
          "value": "1"
        },
        "reaction": { "Span": [["mu*R/I*p_theta*sin(phi)","-mu*R/I*p_theta*cos(phi)","0","0","0","0"]] },
        "dg_involutive": true,
        "conserved_functions": ["p_theta"]
      },
      "gh_sections": [["1","R*cos(phi)","R*sin(phi)"]],
      "conserved_elements": [[[1.0, 0.0, 0.0], true], [[0.0, 1.0, 0.0], false], [[0.0, 0.0, 1.0], false]]
    },
    {
      "name": "SE2xS1",
      "generators": [
        ["-y","x","0","1","0","0"],
        ["1","0","0","0","0","0"],
        ["0","1","0","0","0","0"],
        ["0","0","1","0","0","0"]
      ],
      "q_generators": [["-y","x","0","1"],["1","0","0","0"],["0","1","0","0"],["0","0","1","0"]],
      "structure_constants": [[2, 0, 1, 1.0], [1, 0, 2, -1.0]],
      "quotient": {
        "coords": ["p_theta","p_phi"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["p_theta","p_phi"],
        "slice": ["0","0","0","0","p_theta","p_phi"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","0"], "form": ["1","0"] },
          { "vector": ["0","0"], "form": ["0","1"] }
        ],
        "dg_involutive": true
      },
      "gh_sections": [["1","y","-x","0"], ["0","R*cos(phi)","R*sin(phi)","1"]]
    }
  ]
}"#;

const CHAPLYGIN_SKATE: &str = r#"{
  "name": "chaplygin_skate",
  "params": { "m": 1.0, "s": 1.0 },
  "chart": ["theta", "x", "y"],
  "box": [[0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
  "metric": [
    ["m*s^2","-m*s*sin(theta)","m*s*cos(theta)"],
    ["-m*s*sin(theta)","m","0"],
    ["m*s*cos(theta)","0","m"]
  ],
  "potential": "0",
  "constraints": [["0","sin(theta)","-cos(theta)"]],
  "constraint_frame": [
    ["1","0","0"],
    ["0","cos(theta)","sin(theta)"]
  ],
  "eliminate": ["p_theta"],
  "horizontal_frame": [
    ["0","cos(theta)","sin(theta)","0","0"],
    ["1","0","0","0","0"],
    ["0","0","0","1","0"],
    ["0","0","0","0","1"]
  ],
  "hamiltonian": "(p_x^2+p_y^2)/(2*m)",
  "actions": [
    {
      "name": "SE2",
      "generators": [
        ["1","-y","x","-p_y","p_x"],
        ["0","1","0","0","0"],
        ["0","0","1","0","0"]
      ],
      "q_generators": [["1","-y","x"],["0","1","0"],["0","0","1"]],
      "structure_constants": [[2, 0, 1, 1.0], [1, 0, 2, -1.0]],
      "quotient": {
        "coords": ["p_x","p_y"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["cos(theta)*p_x+sin(theta)*p_y","-sin(theta)*p_x+cos(theta)*p_y"],
        "slice": ["0","0","0","p_x","p_y"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","0"], "form": ["1","0"] },
          { "vector": ["0","0"], "form": ["0","1"] }
        ]
      },
      "gh_sections": [["1","y","-x"], ["0","cos(theta)","sin(theta)"]]
    },
    {
      "name": "R2",
      "generators": [
        ["0","1","0","0","0"],
        ["0","0","1","0","0"]
      ],
      "q_generators": [["0","1","0"],["0","0","1"]],
      "quotient": {
        "coords": ["theta","p_x","p_y"],
        "ranges": [[0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["theta","p_x","p_y"],
        "slice": ["theta","0","0","p_x","p_y"]
      },
      "expected": {
        "dg_involutive": false
      }
    }
  ]
}"#;

const SKATE_WITH_ROTOR: &str = r#"{
  "name": "skate_with_rotor",
  "params": { "m": 1.0, "s": 1.0, "J": 1.0 },
  "chart": ["phi", "theta", "x", "y"],
  "box": [[0.0, 6.283185307179586], [0.0, 6.283185307179586], [-2.0, 2.0], [-2.0, 2.0]],
  "metric": [
    ["J","J","0","0"],
    ["J","m*s^2+J","-m*s*sin(theta)","m*s*cos(theta)"],
    ["0","-m*s*sin(theta)","m","0"],
    ["0","m*s*cos(theta)","0","m"]
  ],
  "potential": "0",
  "constraints": [["0","0","sin(theta)","-cos(theta)"]],
  "constraint_frame": [
    ["1","0","0","0"],
    ["0","1","0","0"],
    ["0","0","cos(theta)","sin(theta)"]
  ],
  "eliminate": ["p_theta"],
  "horizontal_frame": [
    ["1","0","0","0","0","0","0"],
    ["0","1","0","0","0","0","0"],
    ["0","0","cos(theta)","sin(theta)","0","0","0"],
    ["0","0","0","0","1","0","0"],
    ["0","0","0","0","0","1","0"],
    ["0","0","0","0","0","0","1"]
  ],
  "actions": [
    {
      "name": "S1xSE2",
      "generators": [
        ["1","0","0","0","0","0","0"],
        ["0","1","-y","x","0","-p_y","p_x"],
        ["0","0","1","0","0","0","0"],
        ["0","0","0","1","0","0","0"]
      ],
      "q_generators": [["1","0","0","0"],["0","1","-y","x"],["0","0","1","0"],["0","0","0","1"]],
      "structure_constants": [[3, 1, 2, 1.0], [2, 1, 3, -1.0]],
      "quotient": {
        "coords": ["p_phi","p_x","p_y"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["p_phi","cos(theta)*p_x+sin(theta)*p_y","-sin(theta)*p_x+cos(theta)*p_y"],
        "slice": ["0","0","0","0","p_phi","p_x","p_y"]
      },
      "expected": {
        "d_red_span": [
          { "vector": ["0","0","0"], "form": ["1","0","0"] },
          { "vector": ["0","0","0"], "form": ["0","1","0"] },
          { "vector": ["0","0","0"], "form": ["0","0","1"] }
        ],
        "reaction": "Zero",
        "conserved_functions": ["p_phi"]
      },
      "gh_sections": [["1","0","0","0"], ["0","1","y","-x"], ["0","0","cos(theta)","sin(theta)"]],
      "conserved_elements": [
        [[1.0, 0.0, 0.0, 0.0], true],
        [[0.0, 1.0, 0.0, 0.0], true],
        [[0.0, 0.0, 1.0, 0.0], true],
        [[0.0, 0.0, 0.0, 1.0], true]
      ]
    }
  ]
}"#;

const HEISENBERG_PARTICLE: &str = r#"{
  "name": "heisenberg_particle",
  "params": {},
  "chart": ["x", "y", "z"],
  "box": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
  "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
  "potential": "0",
  "constraints": [["-y","x","1"]],
  "constraint_frame": [["1","0","y"],["0","-1","x"]],
  "eliminate": ["p_z"],
  "horizontal_frame": [
    ["1","0","y","0","0"],
    ["0","-1","x","0","0"],
    ["0","0","0","1","0"],
    ["0","0","0","0","1"]
  ],
  "hamiltonian": "(p_x^2+p_y^2+(y*p_x-x*p_y)^2)/2",
  "actions": [
    {
      "name": "R1",
      "generators": [["0","0","1","0","0"]],
      "q_generators": [["0","0","1"]],
      "quotient": {
        "coords": ["x","y","p_x","p_y"],
        "ranges": [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
        "projection": ["x","y","p_x","p_y"],
        "slice": ["x","y","0","p_x","p_y"]
      },
      "expected": {
        "graph": { "TwoForm": [
          ["x", "y", "y*p_x-x*p_y"],
          ["x", "p_x", "1+y^2"],
          ["x", "p_y", "-x*y"],
          ["y", "p_x", "-x*y"],
          ["y", "p_y", "1+x^2"]
        ]},
        "dg_involutive": true,
        "dg_full_rank": true
      },
      "conserved_elements": [[[1.0], false]]
    }
  ]
}"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtin_specs_parse_and_build() {
        for name in SYSTEM_NAMES {
            let entry = load(name, &BTreeMap::new()).unwrap_or_else(|e| {
                panic!("building `{name}` failed: {e}");
            });
            assert!(!entry.actions.is_empty(), "{name} has no actions");
        }
    }

    #[test]
    fn unknown_names_and_bad_parameters_are_rejected() {
        assert!(matches!(
            load("rolling_banana", &BTreeMap::new()),
            Err(Error::UnknownSystem(_))
        ));
        let mut bad = BTreeMap::new();
        bad.insert("mu".to_string(), -1.0);
        assert!(load("vertical_disk", &bad).is_err());
        let mut unknown = BTreeMap::new();
        unknown.insert("k".to_string(), 1.0);
        assert!(load("vertical_disk", &unknown).is_err());
    }

    #[test]
    fn disk_poisson_factor_with_unit_parameters() {
        // I/(mu R^2 + I) = 1/2 at unit parameters, visible in the expected
        // bivector entry of the SE2 reduction.
        let entry = load("vertical_disk", &BTreeMap::new()).unwrap();
        let action = entry.actions.iter().find(|a| a.name == "SE2").unwrap();
        let graph = action.expected.graph.as_ref().unwrap();
        let chart = &action.quotient.reduced;
        let d = expected_graph(graph, chart, &entry.params).unwrap();
        // the section over dθ carries the sharp value −(1/2) ∂p_theta
        let p = vec![0.3, 0.7, -0.4];
        let fiber = d.fiber(&p);
        let mut probe = nalgebra::DVector::zeros(6);
        // (X, dθ) with X = -1/2 ∂p_theta
        probe[1] = -0.5;
        probe[3] = 1.0;
        assert!(fiber.residual_of(&probe) < 1e-9);
    }

    #[test]
    fn heisenberg_expected_form_determinant() {
        let entry = load("heisenberg_particle", &BTreeMap::new()).unwrap();
        let action = &entry.actions[0];
        if let Some(GraphSpec::TwoForm(list)) = &action.expected.graph {
            let chart = &action.quotient.reduced;
            let mut upper = Vec::new();
            for (ci, cj, expr) in list {
                let i = chart.coord_index(ci).unwrap();
                let j = chart.coord_index(cj).unwrap();
                upper.push((i, j, ScalarField::parse(expr, chart, &entry.params).unwrap()));
            }
            let omega = TwoForm::from_upper(chart, &upper);
            let p = vec![0.7, -0.4, 1.1, 0.2];
            let det = omega.at(&p).determinant();
            let want = (1.0 + 0.7f64.powi(2) + 0.4f64.powi(2)).powi(2);
            assert!((det - want).abs() < 1e-10 * want);
        } else {
            panic!("expected a 2-form graph");
        }
    }

    #[test]
    fn particle_legendre_is_identity_and_skate_momentum_matches() {
        let entry = load("constrained_particle", &BTreeMap::new()).unwrap();
        let q = vec![0.2, -0.3, 0.9];
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let p = entry.system.legendre(&q, &v);
        assert!((p - &v).norm() < 1e-14);

        // knife edge: p_theta = m s^2 v_theta + m s (v_y cosθ − v_x sinθ)
        let skate = load("chaplygin_skate", &BTreeMap::new()).unwrap();
        let q = vec![0.8, 0.1, -0.2]; // (theta, x, y)
        let v = nalgebra::DVector::from_vec(vec![0.7, -0.4, 0.9]);
        let p = skate.system.legendre(&q, &v);
        let want = 0.7 + (0.9 * q[0].cos() + 0.4 * q[0].sin());
        assert!((p[0] - want).abs() < 1e-12);
    }
}
