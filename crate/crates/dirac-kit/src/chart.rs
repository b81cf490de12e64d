//! Coordinate charts with sampling boxes.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type Predicate = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

struct ChartData {
    name: String,
    coords: Vec<String>,
    ranges: Vec<(f64, f64)>,
    excluded: Vec<Predicate>,
}

/// A named chart: ordered coordinates plus a closed sampling box per
/// coordinate. Every field in the crate lives on exactly one chart; charts
/// compare by name and coordinate list.
#[derive(Clone)]
pub struct Chart(Arc<ChartData>);

impl Chart {
    pub fn new(
        name: impl Into<String>,
        coords: &[&str],
        ranges: &[(f64, f64)],
    ) -> Result<Chart> {
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        if coords.len() != ranges.len() || coords.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: coords.len(),
                found: ranges.len(),
            });
        }
        for &(lo, hi) in ranges {
            if !(hi > lo) {
                return Err(Error::InvalidParameter(format!(
                    "sampling interval [{lo}, {hi}] must have positive length"
                )));
            }
        }
        Ok(Chart(Arc::new(ChartData {
            name: name.into(),
            coords,
            ranges: ranges.to_vec(),
            excluded: Vec::new(),
        })))
    }

    /// Attaches scalar predicates whose zero sets are avoided when sampling.
    pub fn with_excluded(
        &self,
        preds: Vec<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    ) -> Chart {
        Chart(Arc::new(ChartData {
            name: self.0.name.clone(),
            coords: self.0.coords.clone(),
            ranges: self.0.ranges.clone(),
            excluded: preds,
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn dim(&self) -> usize {
        self.0.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.0.coords
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.0.ranges
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.0.coords.iter().position(|c| c == name)
    }

    pub fn same_as(&self, other: &Chart) -> bool {
        self.0.name == other.0.name && self.0.coords == other.0.coords
    }

    pub fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch {
                expected: self.0.name.clone(),
                found: other.0.name.clone(),
            })
        }
    }

    /// Draws one point uniformly from the sampling box, redrawing while the
    /// point is within 1e-3 of an excluded predicate's zero set.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        'outer: for _ in 0..10_000 {
            let p: Vec<f64> = self
                .0
                .ranges
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect();
            for pred in &self.0.excluded {
                if pred(&p).abs() <= 1e-3 {
                    continue 'outer;
                }
            }
            return p;
        }
        panic!("sampling failed: excluded predicates reject the whole box");
    }

    pub fn sample_many(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart({} : {:?})", self.0.name, self.0.coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn samples_stay_in_box_and_are_deterministic() {
        let c = Chart::new("m", &["x", "y"], &[(-2.0, 2.0), (0.0, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts = c.sample_many(32, &mut rng);
        for p in &pts {
            assert!(p[0] >= -2.0 && p[0] <= 2.0 && p[1] >= 0.0 && p[1] <= 1.0);
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(pts, c.sample_many(32, &mut rng2));
    }

    #[test]
    fn excluded_zero_sets_are_avoided() {
        let c = Chart::new("m", &["x"], &[(-1.0, 1.0)])
            .unwrap()
            .with_excluded(vec![Arc::new(|p: &[f64]| p[0])]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in c.sample_many(256, &mut rng) {
            assert!(p[0].abs() > 1e-3);
        }
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(Chart::new("m", &["x"], &[(1.0, 1.0)]).is_err());
    }
}
