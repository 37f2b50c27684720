//! Minimal sparse-matrix plumbing: CSR storage with forward/adjoint
//! matrix-vector products, and a dense-Hessenberg GMRES used for the
//! irreversible solves (preconditioned by the reversible factorization).

use crate::error::{Result, SipError};

/// Compressed sparse row matrix with `u32` column indices.
#[derive(Debug, Clone)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists, preserving the given entry
    /// order. Rows built with the diagonal appended last as the negated
    /// running sum of the preceding entries therefore sum to zero exactly.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of columns.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of one row as `(columns, values)` slices.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            y[i] = acc;
        }
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.fill(0.0);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (&c, &v) in cols.iter().zip(vals) {
                y[c as usize] += v * xi;
            }
        }
    }

    /// Per-row sums (diagnostic; generator rows must sum to zero exactly).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    /// Solution vector.
    pub x: Vec<f64>,
    /// Arnoldi iterations performed.
    pub iterations: usize,
    /// Relative residual in the preconditioned norm at termination.
    pub rel_residual: f64,
}

/// Full-memory GMRES with left preconditioning and Givens rotations.
///
/// Solves `A x = b` where `apply` computes `A v` and `precond` applies the
/// preconditioner in place. Terminates when the preconditioned relative
/// residual drops below `tol` or after `max_iter` iterations (an error).
pub fn gmres<A, P>(
    apply: A,
    precond: P,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&mut [f64]),
{
    let n = rhs.len();
    let mut pb = rhs.to_vec();
    precond(&mut pb);
    let beta0 = norm2(&pb);
    if beta0 == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![pb.iter().map(|v| v / beta0).collect()];
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta0];
    let mut completed = 0usize;
    let mut rel = 1.0;

    for j in 0..max_iter {
        let mut w = vec![0.0; n];
        apply(&basis[j], &mut w);
        precond(&mut w);
        // modified Gram-Schmidt
        let mut hcol = Vec::with_capacity(j + 2);
        for basis_i in basis.iter().take(j + 1) {
            let hij = dot(&w, basis_i);
            hcol.push(hij);
            for (wk, bk) in w.iter_mut().zip(basis_i) {
                *wk -= hij * bk;
            }
        }
        let hlast = norm2(&w);
        hcol.push(hlast);
        for (i, &(c, s)) in rotations.iter().enumerate() {
            let tmp = c * hcol[i] + s * hcol[i + 1];
            hcol[i + 1] = -s * hcol[i] + c * hcol[i + 1];
            hcol[i] = tmp;
        }
        let denom = (hcol[j] * hcol[j] + hcol[j + 1] * hcol[j + 1]).sqrt();
        if denom == 0.0 {
            return Err(SipError::SolverFailure(
                "GMRES breakdown: zero Hessenberg column".into(),
            ));
        }
        let (c, s) = (hcol[j] / denom, hcol[j + 1] / denom);
        rotations.push((c, s));
        hcol[j] = denom;
        let gj = g[j];
        g.push(-s * gj);
        g[j] = c * gj;
        hess.push(hcol);
        completed = j + 1;
        rel = g[j + 1].abs() / beta0;
        if rel < tol {
            break;
        }
        if j + 1 == max_iter {
            return Err(SipError::SolverFailure(format!(
                "GMRES did not converge in {max_iter} iterations (rel residual {rel:e})"
            )));
        }
        for wk in w.iter_mut() {
            *wk /= hlast;
        }
        basis.push(w);
    }

    // back-substitution on the triangularized Hessenberg system
    let k = completed;
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
            acc -= hess[l][i] * yl;
        }
        y[i] = acc / hess[i][i];
    }
    let mut x = vec![0.0; n];
    for (l, yl) in y.iter().enumerate() {
        for (xk, bk) in x.iter_mut().zip(&basis[l]) {
            *xk += yl * bk;
        }
    }
    Ok(GmresOutcome {
        x,
        iterations: k,
        rel_residual: rel,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_products() {
        // [[2, -1, 0], [1, 0, 3]]
        let a = Csr::from_rows(
            3,
            vec![vec![(0, 2.0), (1, -1.0)], vec![(2, 3.0), (0, 1.0)]],
        );
        assert_eq!(a.nnz(), 4);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![0.0, 10.0]);
        let mut yt = vec![0.0; 3];
        a.matvec_transpose(&[1.0, 1.0], &mut yt);
        assert_eq!(yt, vec![3.0, -1.0, 3.0]);
    }

    #[test]
    fn csr_preserves_entry_order() {
        let a = Csr::from_rows(2, vec![vec![(1, 1.0), (0, 5.0), (1, 2.0)]]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.row(0).0, &[1, 0, 1]);
        let mut y = vec![0.0];
        a.matvec(&[10.0, 1.0], &mut y);
        assert_eq!(y[0], 53.0);
    }

    #[test]
    fn gmres_solves_small_system() {
        // unpreconditioned 3x3 system
        let a = Csr::from_rows(
            3,
            vec![
                vec![(0, 4.0), (1, 1.0)],
                vec![(0, 1.0), (1, 3.0), (2, 1.0)],
                vec![(1, 1.0), (2, 5.0)],
            ],
        );
        let rhs = [6.0, 10.0, 16.0];
        let out = gmres(
            |x, y| a.matvec(x, y),
            |_| {},
            &rhs,
            1e-14,
            50,
        )
        .unwrap();
        assert!(out.rel_residual < 1e-14);
        assert!(out.iterations <= 3);
        let mut check = vec![0.0; 3];
        a.matvec(&out.x, &mut check);
        for (c, r) in check.iter().zip(rhs) {
            assert!((c - r).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_reports_non_convergence() {
        // Krylov space exhausted before tolerance on purpose: 1 iteration cap
        let a = Csr::from_rows(2, vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 3.0), (1, 1.0)]]);
        let err = gmres(|x, y| a.matvec(x, y), |_| {}, &[1.0, 2.0], 1e-16, 1);
        assert!(err.is_err());
    }
}
