//! Tolerance-aware linear algebra on tangent and cotangent fibers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative singular-value cutoff for rank decisions. Every
/// constant-rank hypothesis in the pipeline becomes a sampled-rank assertion
/// against this threshold (overridable per analysis).
pub const DEFAULT_TOL: f64 = 1e-9;

/// Singular values and left singular vectors, sorted descending.
fn sorted_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<_> = idx.iter().map(|&i| u.column(i).into_owned()).collect();
    let um = DMatrix::from_columns(&cols);
    (sv, um)
}

fn rank_of(sv: &[f64], tol: f64) -> usize {
    match sv.first() {
        None => 0,
        Some(&s0) if s0 <= 0.0 => 0,
        Some(&s0) => sv.iter().filter(|&&s| s > tol * s0).count(),
    }
}

/// The span of a set of fiber vectors, held as an orthonormal basis computed
/// at a relative singular-value threshold.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>, // ambient × rank, orthonormal columns
    tol: f64,
}

impl Subspace {
    pub fn span(ambient: usize, vectors: &[DVector<f64>]) -> Subspace {
        Subspace::span_with_tol(ambient, vectors, DEFAULT_TOL)
    }

    pub fn span_with_tol(ambient: usize, vectors: &[DVector<f64>], tol: f64) -> Subspace {
        for v in vectors {
            assert_eq!(v.len(), ambient, "vector length must equal ambient dimension");
        }
        if vectors.is_empty() {
            return Subspace { ambient, basis: DMatrix::zeros(ambient, 0), tol };
        }
        let m = DMatrix::from_columns(vectors);
        let (sv, u) = sorted_svd(&m);
        let rank = rank_of(&sv, tol);
        Subspace { ambient, basis: u.columns(0, rank).into_owned(), tol }
    }

    pub fn from_columns(m: &DMatrix<f64>, tol: f64) -> Subspace {
        let cols: Vec<DVector<f64>> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
        Subspace::span_with_tol(m.nrows(), &cols, tol)
    }

    pub fn zero(ambient: usize) -> Subspace {
        Subspace { ambient, basis: DMatrix::zeros(ambient, 0), tol: DEFAULT_TOL }
    }

    pub fn full(ambient: usize) -> Subspace {
        Subspace { ambient, basis: DMatrix::identity(ambient, ambient), tol: DEFAULT_TOL }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Distance from `v` to the subspace, relative to `|v|`.
    pub fn residual_of(&self, v: &DVector<f64>) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        (v - self.project(v)).norm() / n
    }

    /// Distance from `v` to the subspace relative to an external scale, so
    /// that vectors which are themselves numerical noise below the scale do
    /// not register as violations.
    pub fn residual_scaled(&self, v: &DVector<f64>, scale: f64) -> f64 {
        let denom = v.norm().max(scale).max(1e-300);
        (v - self.project(v)).norm() / denom
    }

    pub fn contains_vector(&self, v: &DVector<f64>) -> bool {
        self.residual_of(v) <= self.tol
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let mut vs = self.basis_vectors();
        vs.extend(other.basis_vectors());
        Ok(Subspace::span_with_tol(self.ambient, &vs, self.tol.max(other.tol)))
    }

    /// Intersection by principal angles. The dimension is pinned to the
    /// Grassmann identity `dim A + dim B − dim(A+B)` so that identity holds
    /// exactly as integers.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let target = (self.dim() + other.dim()).saturating_sub(self.sum(other)?.dim());
        if target == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        let c = self.basis.transpose() * &other.basis;
        let svd = c.clone().svd(true, false);
        let u = svd.u.expect("u requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap()
        });
        let cols: Vec<DVector<f64>> = idx[..target]
            .iter()
            .map(|&i| &self.basis * u.column(i).into_owned())
            .collect();
        let basis = DMatrix::from_columns(&cols);
        Ok(Subspace { ambient: self.ambient, basis, tol: self.tol.max(other.tol) })
    }

    /// Orthogonal complement; identifies the dual fiber with the same
    /// numeric coordinates, so it serves as the annihilator.
    pub fn annihilator(&self) -> Subspace {
        let r = self.dim();
        let n = self.ambient;
        if r == 0 {
            return Subspace { ambient: n, basis: DMatrix::identity(n, n), tol: self.tol };
        }
        if r == n {
            return Subspace { ambient: n, basis: DMatrix::zeros(n, 0), tol: self.tol };
        }
        // Extend the orthonormal basis and keep the new directions.
        let mut cols: Vec<DVector<f64>> = self.basis_vectors();
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            let mut w = e.clone();
            for c in &cols {
                w -= c * c.dot(&e);
            }
            // re-orthogonalize once for stability
            for c in &cols {
                let d = c.dot(&w);
                w -= c * d;
            }
            let norm = w.norm();
            if norm > 1e-8 {
                cols.push(w / norm);
                if cols.len() == n {
                    break;
                }
            }
        }
        let comp: Vec<DVector<f64>> = cols[r..].to_vec();
        Subspace { ambient: n, basis: DMatrix::from_columns(&comp), tol: self.tol }
    }

    /// `{v ∈ within : ω(v, a) = 0 for all a ∈ self}` for an antisymmetric
    /// matrix `ω` on the fiber.
    pub fn orthogonal_wrt_form(
        &self,
        omega: &DMatrix<f64>,
        within: &Subspace,
    ) -> Result<Subspace> {
        self.check_ambient(within)?;
        if omega.nrows() != self.ambient || omega.ncols() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: omega.nrows(),
            });
        }
        if self.dim() == 0 {
            return Ok(within.clone());
        }
        // v must satisfy (Qᵀ ω) v = 0 where Q spans self; ω(v, a) = −ω(a, v).
        let m = self.basis.transpose() * omega;
        let kernel = kernel_of(&m, self.tol);
        kernel.intersect(within)
    }

    /// Dimension-and-containment equality: `dim A = dim B = dim(A + B)`.
    pub fn equals(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient
            && self.dim() == other.dim()
            && self.sum(other).map(|s| s.dim() == self.dim()).unwrap_or(false)
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient == other.ambient {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.ambient, found: other.ambient })
        }
    }
}

/// Right kernel of a matrix at a relative threshold: the annihilator of its
/// row space.
pub fn kernel_of(m: &DMatrix<f64>, tol: f64) -> Subspace {
    Subspace::from_columns(&m.transpose(), tol).annihilator()
}

/// Ranks of a matrix-valued sample set, with a hard error when they differ.
pub fn constant_rank(
    context: &str,
    samples: &[(Vec<f64>, DMatrix<f64>)],
    tol: f64,
) -> Result<usize> {
    let mut first: Option<(usize, &Vec<f64>)> = None;
    for (p, m) in samples {
        let (sv, _) = sorted_svd(m);
        let r = rank_of(&sv, tol);
        match first {
            None => first = Some((r, p)),
            Some((r0, p0)) if r0 != r => {
                return Err(Error::RankInstability {
                    context: context.into(),
                    rank_a: r0,
                    point_a: p0.clone(),
                    rank_b: r,
                    point_b: p.clone(),
                })
            }
            _ => {}
        }
    }
    Ok(first.map(|(r, _)| r).unwrap_or(0))
}

/// Chooses a column subset of size `rank` that stays well conditioned across
/// all sampled matrices. Exhaustive over subsets when feasible (the frames
/// here are small), greedy otherwise; deterministic either way.
pub fn choose_pivots(samples: &[DMatrix<f64>], rank: usize) -> Result<Vec<usize>> {
    let ncols = samples[0].ncols();
    assert!(rank <= ncols);
    if rank == 0 {
        return Ok(vec![]);
    }
    let score = |subset: &[usize]| -> f64 {
        let mut worst = f64::INFINITY;
        for m in samples {
            let cols: Vec<DVector<f64>> =
                subset.iter().map(|&j| m.column(j).into_owned()).collect();
            let sub = DMatrix::from_columns(&cols);
            let svd = sub.svd(false, false);
            let smin = svd
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            worst = worst.min(smin);
        }
        worst
    };

    let n_subsets: u128 = {
        let mut acc: u128 = 1;
        for i in 0..rank {
            acc = acc * (ncols - i) as u128 / (i + 1) as u128;
        }
        acc
    };
    if n_subsets <= 4096 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut subset: Vec<usize> = (0..rank).collect();
        loop {
            let s = score(&subset);
            if best.as_ref().map(|(b, _)| s > *b).unwrap_or(true) {
                best = Some((s, subset.clone()));
            }
            // next combination in lexicographic order
            let mut i = rank;
            loop {
                if i == 0 {
                    return best
                        .filter(|(s, _)| *s > 0.0)
                        .map(|(_, v)| v)
                        .ok_or_else(|| Error::Degenerate {
                            what: "pivot selection (all column subsets singular)".into(),
                            point: vec![],
                        });
                }
                i -= 1;
                if subset[i] != i + ncols - rank {
                    subset[i] += 1;
                    for j in (i + 1)..rank {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    } else {
        // Greedy on the stacked matrix.
        let stacked = {
            let total_rows: usize = samples.iter().map(|m| m.nrows()).sum();
            let mut m = DMatrix::zeros(total_rows, ncols);
            let mut row = 0;
            for s in samples {
                m.view_mut((row, 0), (s.nrows(), s.ncols())).copy_from(s);
                row += s.nrows();
            }
            m
        };
        let mut chosen: Vec<usize> = vec![];
        let mut basis: Vec<DVector<f64>> = vec![];
        for _ in 0..rank {
            let mut best = (0usize, -1.0f64);
            for j in 0..ncols {
                if chosen.contains(&j) {
                    continue;
                }
                let mut w = stacked.column(j).into_owned();
                for b in &basis {
                    let d = b.dot(&w);
                    w -= b * d;
                }
                if w.norm() > best.1 {
                    best = (j, w.norm());
                }
            }
            chosen.push(best.0);
            let mut w = stacked.column(best.0).into_owned();
            for b in &basis {
                let d = b.dot(&w);
                w -= b * d;
            }
            basis.push(&w / w.norm());
        }
        chosen.sort_unstable();
        Ok(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn coordinate_intersections() {
        let a = Subspace::span(3, &[e(3, 0), e(3, 1)]);
        let b = Subspace::span(3, &[e(3, 1), e(3, 2)]);
        let i = a.intersect(&b).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.contains_vector(&e(3, 1)));
        let aa = a.intersect(&a).unwrap();
        assert!(aa.equals(&a));
    }

    #[test]
    fn annihilator_examples() {
        let a = Subspace::span(3, &[e(3, 0), e(3, 1)]);
        let ann = a.annihilator();
        assert_eq!(ann.dim(), 1);
        assert!(ann.contains_vector(&e(3, 2)));
        assert_eq!(Subspace::full(4).annihilator().dim(), 0);
        assert!(a.annihilator().annihilator().equals(&a));
    }

    #[test]
    fn equality_under_scaling_and_noise() {
        let a = Subspace::span(2, &[e(2, 0)]);
        let b = Subspace::span(2, &[2.0 * e(2, 0)]);
        assert!(a.equals(&b));
        let c = Subspace::span(2, &[e(2, 0) + 1e-12 * e(2, 1)]);
        assert!(a.equals(&c));
        let d = Subspace::span(2, &[e(2, 1)]);
        assert!(!a.equals(&d));
    }

    #[test]
    fn symplectic_orthogonal() {
        // canonical ω on (x, p): span{∂x}^ω = span{∂x}
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let a = Subspace::span(2, &[e(2, 0)]);
        let o = a.orthogonal_wrt_form(&omega, &Subspace::full(2)).unwrap();
        assert_eq!(o.dim(), 1);
        assert!(o.contains_vector(&e(2, 0)));
        // A = {0} gives back `within`
        let z = Subspace::zero(2);
        assert!(z.orthogonal_wrt_form(&omega, &Subspace::full(2)).unwrap().equals(&Subspace::full(2)));
    }

    #[test]
    fn grassmann_identity_on_random_subspaces() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = 6;
            let ka = rng.gen_range(0..=n);
            let kb = rng.gen_range(0..=n);
            let rand_vecs = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<DVector<f64>> {
                (0..k)
                    .map(|_| DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0))
                    .collect()
            };
            let a = Subspace::span(n, &rand_vecs(ka, &mut rng));
            let b = Subspace::span(n, &rand_vecs(kb, &mut rng));
            let s = a.sum(&b).unwrap().dim();
            let i = a.intersect(&b).unwrap().dim();
            assert_eq!(s + i, a.dim() + b.dim());
            assert!(a.annihilator().annihilator().equals(&a));
        }
    }

    #[test]
    fn nondegenerate_form_double_orthogonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let omega = DMatrix::from_row_slice(
            n,
            n,
            &[
                0.0, 1.0, 0.3, 0.0, //
                -1.0, 0.0, 0.0, -0.2, //
                -0.3, 0.0, 0.0, 1.0, //
                0.0, 0.2, -1.0, 0.0,
            ],
        );
        for _ in 0..50 {
            let k = rng.gen_range(1..n);
            let vs: Vec<DVector<f64>> = (0..k)
                .map(|_| DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0))
                .collect();
            let a = Subspace::span(n, &vs);
            let o = a.orthogonal_wrt_form(&omega, &Subspace::full(n)).unwrap();
            let oo = o.orthogonal_wrt_form(&omega, &Subspace::full(n)).unwrap();
            assert!(oo.equals(&a));
        }
    }
}
