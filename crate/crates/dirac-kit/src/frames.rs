//! Smooth kernel frames: given a matrix of coefficient fields with constant
//! sampled rank, produce coefficient-field vectors spanning its pointwise
//! kernel.
//!
//! Pivot columns are fixed once from base samples (chosen for conditioning
//! across all of them); each free column then yields one kernel element
//! `e_j + Σ_p c_p e_p` whose pivot coefficients solve the normal equations of
//! the row system pointwise, with jets carried through the solve.

use nalgebra::DMatrix;

use crate::chart::Chart;
use crate::error::Result;
use crate::field::{solve_field_system, ScalarField};
use crate::subspace::{choose_pivots, constant_rank};

pub(crate) struct KernelFrame {
    /// One coefficient vector (length = number of columns) per kernel element.
    pub combinations: Vec<Vec<ScalarField>>,
    pub rank: usize,
}

pub(crate) fn kernel_coefficient_fields(
    context: &str,
    rows: &[Vec<ScalarField>],
    ncols: usize,
    chart: &Chart,
    base_points: &[Vec<f64>],
    tol: f64,
) -> Result<KernelFrame> {
    assert!(rows.iter().all(|r| r.len() == ncols));
    let identity = |j: usize| -> Vec<ScalarField> {
        (0..ncols)
            .map(|i| ScalarField::constant(chart, if i == j { 1.0 } else { 0.0 }))
            .collect()
    };
    if rows.is_empty() {
        return Ok(KernelFrame { combinations: (0..ncols).map(identity).collect(), rank: 0 });
    }
    let k = rows.len();
    let samples: Vec<(Vec<f64>, DMatrix<f64>)> = base_points
        .iter()
        .map(|p| (p.clone(), DMatrix::from_fn(k, ncols, |a, i| rows[a][i].value(p))))
        .collect();
    let rank = constant_rank(context, &samples, tol)?;
    if rank == 0 {
        return Ok(KernelFrame { combinations: (0..ncols).map(identity).collect(), rank: 0 });
    }
    let matrices: Vec<DMatrix<f64>> = samples.into_iter().map(|(_, m)| m).collect();
    let pivots = choose_pivots(&matrices, rank)?;
    let free: Vec<usize> = (0..ncols).filter(|i| !pivots.contains(i)).collect();

    // Normal equations of the pivot block: (L_Pᵀ L_P) c = −L_Pᵀ L e_j.
    let mut gram = vec![vec![ScalarField::zero(chart); rank]; rank];
    for (pi, &p) in pivots.iter().enumerate() {
        for (qi, &q) in pivots.iter().enumerate() {
            let mut acc = ScalarField::zero(chart);
            for row in rows {
                acc = acc.add(&row[p].mul(&row[q]));
            }
            gram[pi][qi] = acc;
        }
    }

    let mut combinations = Vec::with_capacity(free.len());
    for &j in &free {
        let mut rhs = vec![ScalarField::zero(chart); rank];
        for (pi, &p) in pivots.iter().enumerate() {
            let mut acc = ScalarField::zero(chart);
            for row in rows {
                acc = acc.add(&row[p].mul(&row[j]));
            }
            rhs[pi] = acc.neg();
        }
        let coeffs = solve_field_system(gram.clone(), rhs)?;
        let mut combo = identity(j);
        for (pi, &p) in pivots.iter().enumerate() {
            combo[p] = coeffs[pi].clone();
        }
        combinations.push(combo);
    }
    Ok(KernelFrame { combinations, rank })
}
