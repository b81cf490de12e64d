//! Second-order jets: value, gradient, and Hessian of a scalar quantity at a
//! point, propagated through arithmetic by the chain rule.
//!
//! Fields built from derivatives of other fields lose one jet order; their
//! Hessian slot is zero. Operations that only need first derivatives of such
//! composites remain exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A truncated Taylor expansion of order two in `n` chart coordinates.
#[derive(Clone, Debug)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn outer_sym(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() + b * a.transpose()
}

impl Jet2 {
    pub fn constant(n: usize, value: f64) -> Self {
        Jet2 {
            value,
            gradient: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        }
    }

    /// The jet of the `i`-th coordinate function.
    pub fn coordinate(n: usize, i: usize, value: f64) -> Self {
        let mut gradient = DVector::zeros(n);
        gradient[i] = 1.0;
        Jet2 {
            value,
            gradient,
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            gradient: &self.gradient + &o.gradient,
            hessian: &self.hessian + &o.hessian,
        }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            gradient: &self.gradient - &o.gradient,
            hessian: &self.hessian - &o.hessian,
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            gradient: -&self.gradient,
            hessian: -&self.hessian,
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: c * self.value,
            gradient: c * &self.gradient,
            hessian: c * &self.hessian,
        }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value * o.value,
            gradient: o.value * &self.gradient + self.value * &o.gradient,
            hessian: o.value * &self.hessian
                + self.value * &o.hessian
                + outer_sym(&self.gradient, &o.gradient),
        }
    }

    pub fn recip(&self) -> Jet2 {
        let v = 1.0 / self.value;
        let v2 = v * v;
        Jet2 {
            value: v,
            gradient: -v2 * &self.gradient,
            hessian: -v2 * &self.hessian
                + (2.0 * v2 * v) * &self.gradient * self.gradient.transpose(),
        }
    }

    pub fn div(&self, o: &Jet2) -> Jet2 {
        self.mul(&o.recip())
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = (self.value.sin(), self.value.cos());
        Jet2 {
            value: s,
            gradient: c * &self.gradient,
            hessian: c * &self.hessian - s * &self.gradient * self.gradient.transpose(),
        }
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = (self.value.sin(), self.value.cos());
        Jet2 {
            value: c,
            gradient: -s * &self.gradient,
            hessian: -s * &self.hessian - c * &self.gradient * self.gradient.transpose(),
        }
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.value.sqrt();
        let inv2s = 0.5 / s;
        Jet2 {
            value: s,
            gradient: inv2s * &self.gradient,
            hessian: inv2s * &self.hessian
                - (0.25 / (s * s * s)) * &self.gradient * self.gradient.transpose(),
        }
    }

    pub fn powi(&self, k: i32) -> Jet2 {
        let n = self.dim();
        if k == 0 {
            return Jet2::constant(n, 1.0);
        }
        let mut base = if k < 0 { self.recip() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Jet2::constant(n, 1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// Solves `A x = b` where the entries of `A` and `b` are jets, propagating
/// first and second derivatives through the solution.
///
/// Differentiating `A x = b` gives `A x' = b' - A' x` and
/// `A x'' = b'' - A'' x - A' x' - (A')ᵀ-paired terms`, all reusing one LU
/// factorization of the value matrix.
pub fn jet_solve(a: &[Vec<Jet2>], b: &[Jet2]) -> Result<Vec<Jet2>> {
    let k = b.len();
    assert!(k > 0 && a.len() == k && a.iter().all(|r| r.len() == k));
    let n = b[0].dim();

    let a0 = DMatrix::from_fn(k, k, |i, j| a[i][j].value);
    let b0 = DVector::from_fn(k, |i, _| b[i].value);
    let lu = a0.lu();
    let x0 = lu.solve(&b0).ok_or_else(|| Error::Degenerate {
        what: "linear system (singular value matrix)".into(),
        point: vec![],
    })?;

    // Gradient: one solve per coordinate direction.
    let mut xg: Vec<DVector<f64>> = Vec::with_capacity(n);
    for d in 0..n {
        let ad = DMatrix::from_fn(k, k, |i, j| a[i][j].gradient[d]);
        let rhs = DVector::from_fn(k, |i, _| b[i].gradient[d]) - &ad * &x0;
        xg.push(lu.solve(&rhs).ok_or_else(|| Error::Degenerate {
            what: "linear system (singular value matrix)".into(),
            point: vec![],
        })?);
    }

    // Hessian: one solve per unordered pair of directions.
    let mut xh: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); k];
    for d in 0..n {
        let ad = DMatrix::from_fn(k, k, |i, j| a[i][j].gradient[d]);
        for e in d..n {
            let ae = DMatrix::from_fn(k, k, |i, j| a[i][j].gradient[e]);
            let ade = DMatrix::from_fn(k, k, |i, j| a[i][j].hessian[(d, e)]);
            let rhs = DVector::from_fn(k, |i, _| b[i].hessian[(d, e)])
                - &ade * &x0
                - &ad * &xg[e]
                - &ae * &xg[d];
            let sol = lu.solve(&rhs).ok_or_else(|| Error::Degenerate {
                what: "linear system (singular value matrix)".into(),
                point: vec![],
            })?;
            for i in 0..k {
                xh[i][(d, e)] = sol[i];
                xh[i][(e, d)] = sol[i];
            }
        }
    }

    Ok((0..k)
        .map(|i| Jet2 {
            value: x0[i],
            gradient: DVector::from_fn(n, |d, _| xg[d][i]),
            hessian: xh[i].clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_jet(v: &[f64]) -> Jet2 {
        Jet2::coordinate(v.len(), 0, v[0])
    }
    fn y_jet(v: &[f64]) -> Jet2 {
        Jet2::coordinate(v.len(), 1, v[1])
    }

    #[test]
    fn product_rule() {
        let p = [1.3, -0.7];
        let f = x_jet(&p).mul(&y_jet(&p)); // xy
        assert!((f.value - 1.3 * -0.7).abs() < 1e-15);
        assert!((f.gradient[0] - -0.7).abs() < 1e-15);
        assert!((f.gradient[1] - 1.3).abs() < 1e-15);
        assert!((f.hessian[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((f.hessian[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn trig_and_sqrt_second_derivatives() {
        let p = [0.4, 0.9];
        let g = x_jet(&p).mul(&x_jet(&p)).add(&y_jet(&p)); // x^2 + y
        let f = g.sqrt();
        let exact = (p[0] * p[0] + p[1]).sqrt();
        assert!((f.value - exact).abs() < 1e-14);
        // d2/dx2 sqrt(x^2+y) = 1/s - x^2/s^3
        let s = exact;
        let h_xx = 1.0 / s - p[0] * p[0] / (s * s * s);
        assert!((f.hessian[(0, 0)] - h_xx).abs() < 1e-12);

        let t = x_jet(&p).sin().mul(&y_jet(&p).cos());
        let h_xy = -p[0].cos() * p[1].sin();
        assert!((t.hessian[(0, 1)] - h_xy).abs() < 1e-12);
    }

    #[test]
    fn integer_powers_including_negative() {
        let p = [1.7, 0.0];
        let f = x_jet(&p).powi(-2);
        assert!((f.value - p[0].powi(-2)).abs() < 1e-14);
        assert!((f.gradient[0] - -2.0 * p[0].powi(-3)).abs() < 1e-12);
        assert!((f.hessian[(0, 0)] - 6.0 * p[0].powi(-4)).abs() < 1e-12);
    }

    #[test]
    fn jet_solve_matches_hand_solution() {
        // A = [[1, x], [0, 1]], b = (y, x) => x2 = x, x1 = y - x^2.
        let p = [0.8, -1.1];
        let n = 2;
        let one = Jet2::constant(n, 1.0);
        let zero = Jet2::constant(n, 0.0);
        let x = x_jet(&p);
        let y = y_jet(&p);
        let a = vec![vec![one.clone(), x.clone()], vec![zero, one]];
        let b = vec![y, x.clone()];
        let sol = jet_solve(&a, &b).unwrap();
        let want = p[1] - p[0] * p[0];
        assert!((sol[0].value - want).abs() < 1e-14);
        assert!((sol[0].gradient[0] - -2.0 * p[0]).abs() < 1e-12);
        assert!((sol[0].hessian[(0, 0)] - -2.0).abs() < 1e-12);
        assert!((sol[1].value - p[0]).abs() < 1e-14);
    }
}
