//! Textbook linear-algebra oracles, independent of the library's solvers.

use nalgebra::{DMatrix, SymmetricEigen};

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Solves `(XᵀX + λI) g = Xᵀs` by accumulating the normal equations row by row.
pub fn ridge_normal_equations(x: &DMatrix<f64>, s: &[f64], lambda: f64) -> Vec<f64> {
    let cols = x.ncols();
    let mut a = vec![vec![0.0; cols]; cols];
    let mut b = vec![0.0; cols];
    for t in 0..x.nrows() {
        for i in 0..cols {
            b[i] += x[(t, i)] * s[t];
            for j in 0..cols {
                a[i][j] += x[(t, i)] * x[(t, j)];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    gauss_solve(a, b)
}

pub struct WhitenSvd {
    /// Canonical correlations, descending.
    pub rho: Vec<f64>,
    /// Directions as columns, normalized to unit variance.
    pub wx: DMatrix<f64>,
    pub ws: DMatrix<f64>,
}

/// CCA by explicit whitening and SVD of `Cxx^-1/2 Cxs Css^-1/2`, with the
/// same diagonal loading `shrinkage * trace / d` on both covariances.
pub fn whiten_svd(x: &DMatrix<f64>, s: &DMatrix<f64>, shrinkage: f64) -> WhitenSvd {
    let n = x.nrows() as f64;
    let center = |m: &DMatrix<f64>| {
        let mut m = m.clone();
        for mut c in m.column_iter_mut() {
            let mu = c.mean();
            c.add_scalar_mut(-mu);
        }
        m
    };
    let (xc, sc) = (center(x), center(s));
    let load = |c: DMatrix<f64>| {
        let g = shrinkage * c.trace() / c.nrows() as f64;
        let d = c.nrows();
        c + DMatrix::identity(d, d) * g
    };
    let cxx = load(xc.tr_mul(&xc) / n);
    let css = load(sc.tr_mul(&sc) / n);
    let cxs = xc.tr_mul(&sc) / n;
    let inv_sqrt = |c: DMatrix<f64>| {
        let e = SymmetricEigen::new(c);
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    };
    let (ix, is) = (inv_sqrt(cxx), inv_sqrt(css));
    let svd = (&ix * cxs * &is).svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let k = order.len();
    let mut wx = DMatrix::zeros(x.ncols(), k);
    let mut ws = DMatrix::zeros(s.ncols(), k);
    for (col, &i) in order.iter().enumerate() {
        wx.set_column(col, &(&ix * u.column(i)));
        ws.set_column(col, &(&is * vt.row(i).transpose()));
    }
    WhitenSvd {
        rho: order.iter().map(|&i| svd.singular_values[i]).collect(),
        wx,
        ws,
    }
}
