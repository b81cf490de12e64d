//! Reading and writing the declarative system format.
//!
//! User-supplied systems use exactly the same JSON document as the built-in
//! catalog entries, so a catalog entry can be serialized and re-loaded
//! without loss.

use std::collections::BTreeMap;
use std::path::Path;

use crate::catalog::{build, CatalogEntry, SystemSpec};
use crate::error::Result;

/// Parses a system document from JSON text.
pub fn from_json(text: &str) -> Result<SystemSpec> {
    Ok(serde_json::from_str(text)?)
}

pub fn to_json(spec: &SystemSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(spec)?)
}

pub fn load_file(path: &Path) -> Result<SystemSpec> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Builds a live entry from a document, with optional parameter overrides.
pub fn build_spec(spec: &SystemSpec, overrides: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    build(spec, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{spec_of, SYSTEM_NAMES};

    #[test]
    fn catalog_entries_round_trip_through_the_config_format() {
        for name in SYSTEM_NAMES {
            let spec = spec_of(name).unwrap();
            let text = to_json(&spec).unwrap();
            let back = from_json(&text).unwrap();
            assert_eq!(spec, back, "round trip changed `{name}`");
            // and the re-parsed document still builds
            build_spec(&back, &BTreeMap::new()).unwrap();
        }
    }

    #[test]
    fn unconstrained_custom_system_reduces_to_the_canonical_pipeline() {
        // No constraints: the phase chart is all of the cotangent chart and
        // the Dirac structure is the graph of the canonical form.
        let text = r#"{
            "name": "free_particle_1d",
            "chart": ["x"],
            "box": [[-2.0, 2.0]],
            "metric": [["1"]],
            "potential": "0",
            "constraints": [],
            "actions": [
                {
                    "name": "trivial",
                    "generators": [],
                    "q_generators": [],
                    "quotient": {
                        "coords": ["x", "p_x"],
                        "ranges": [[-2.0, 2.0], [-2.0, 2.0]],
                        "projection": ["x", "p_x"],
                        "slice": ["x", "p_x"]
                    }
                }
            ]
        }"#;
        let spec = from_json(text).unwrap();
        let entry = build_spec(&spec, &BTreeMap::new()).unwrap();
        let d = &entry.dirac;
        let p = vec![0.4, -0.9];
        let x = crate::ScalarField::coordinate(&entry.phase.m_chart, 0);
        let px = crate::ScalarField::coordinate(&entry.phase.m_chart, 1);
        let bracket = d.poisson_bracket(&x, &px, &p).unwrap();
        assert!((bracket - 1.0).abs() < 1e-12);
    }
}
