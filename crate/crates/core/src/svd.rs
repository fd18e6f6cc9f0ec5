//! Singular value decomposition with optional magnetization-sector blocking.
//!
//! When every row and column of a matrix carries a conserved charge (total σᶻ
//! of the sites to the left of a cut), the matrix is block diagonal and each
//! block is decomposed on its own. Singular triplets from all blocks are then
//! merged into one list sorted by descending singular value. Ties keep block
//! order (ascending charge) and, inside a block, the solver's order.

use std::collections::BTreeMap;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::mps::MpsError;

struct Sector {
    charge: Option<i32>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    u: Mat<C64>,
    s: Vec<f64>,
    v: Mat<C64>,
}

pub(crate) struct Decomposition {
    nrows: usize,
    ncols: usize,
    sectors: Vec<Sector>,
    // (sector, index within sector), sorted by descending singular value
    order: Vec<(usize, usize)>,
    values: Vec<f64>,
}

/// Factors of a (possibly truncated) decomposition `M ≈ U diag(S) Vh`.
pub(crate) struct Factors {
    pub u: Mat<C64>,
    pub s: Vec<f64>,
    pub vh: Mat<C64>,
    pub charges: Option<Vec<i32>>,
}

fn thin_svd(m: MatRef<'_, C64>) -> Result<(Mat<C64>, Vec<f64>, Mat<C64>), MpsError> {
    let svd = m.thin_svd().map_err(|e| MpsError::SvdFailed(format!("{e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(MpsError::SvdFailed("non-finite singular value".into()));
    }
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Decomposes `m`. With `charges = Some((row_q, col_q))` only entries whose
/// row and column charges agree are considered; all others are assumed zero.
pub(crate) fn decompose(
    m: MatRef<'_, C64>,
    charges: Option<(&[i32], &[i32])>,
) -> Result<Decomposition, MpsError> {
    let (nrows, ncols) = (m.nrows(), m.ncols());
    let mut sectors = Vec::new();
    match charges {
        None => {
            let (u, s, v) = thin_svd(m)?;
            sectors.push(Sector {
                charge: None,
                rows: (0..nrows).collect(),
                cols: (0..ncols).collect(),
                u,
                s,
                v,
            });
        }
        Some((row_q, col_q)) => {
            debug_assert_eq!(row_q.len(), nrows);
            debug_assert_eq!(col_q.len(), ncols);
            let mut row_groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
            for (r, &q) in row_q.iter().enumerate() {
                row_groups.entry(q).or_default().push(r);
            }
            let mut col_groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
            for (c, &q) in col_q.iter().enumerate() {
                col_groups.entry(q).or_default().push(c);
            }
            for (q, rows) in row_groups {
                let Some(cols) = col_groups.remove(&q) else { continue };
                let block = Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
                let (u, s, v) = thin_svd(block.as_ref())?;
                sectors.push(Sector { charge: Some(q), rows, cols, u, s, v });
            }
        }
    }

    let mut order: Vec<(usize, usize)> = sectors
        .iter()
        .enumerate()
        .flat_map(|(b, sec)| (0..sec.s.len()).map(move |k| (b, k)))
        .collect();
    // stable: ties keep sector then solver order
    order.sort_by(|a, b| {
        let sa = sectors[a.0].s[a.1];
        let sb = sectors[b.0].s[b.1];
        sb.partial_cmp(&sa).expect("finite singular values")
    });
    let values = order.iter().map(|&(b, k)| sectors[b].s[k]).collect();
    Ok(Decomposition { nrows, ncols, sectors, order, values })
}

impl Decomposition {
    /// All singular values, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Leading `keep` singular triplets as dense factors.
    pub fn factors(&self, keep: usize) -> Factors {
        let keep = keep.min(self.order.len());
        let mut u = Mat::<C64>::zeros(self.nrows, keep);
        let mut vh = Mat::<C64>::zeros(keep, self.ncols);
        let mut s = Vec::with_capacity(keep);
        let blocked = self.sectors.iter().all(|sec| sec.charge.is_some());
        let mut charges = Vec::with_capacity(keep);
        for (j, &(b, k)) in self.order.iter().take(keep).enumerate() {
            let sec = &self.sectors[b];
            for (i, &r) in sec.rows.iter().enumerate() {
                u[(r, j)] = sec.u[(i, k)];
            }
            for (i, &c) in sec.cols.iter().enumerate() {
                vh[(j, c)] = sec.v[(i, k)].conj();
            }
            s.push(sec.s[k]);
            if let Some(q) = sec.charge {
                charges.push(q);
            }
        }
        Factors { u, s, vh, charges: blocked.then_some(charges) }
    }
}
