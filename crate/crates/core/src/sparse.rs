//! Compressed sparse row matrices, ILU(0) and Jacobi preconditioners, and
//! right-preconditioned BiCGSTAB.

/// Square CSR matrix with sorted column indices in every row.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Builds the matrix from rows of `(column, value)` pairs; columns are
    /// sorted and duplicates summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            for (c, v) in row {
                if col.len() > *row_ptr.last().unwrap() && *col.last().unwrap() == c {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    fn diag_positions(&self) -> Option<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                let row = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
                row.binary_search(&i).ok().map(|k| self.row_ptr[i] + k)
            })
            .collect()
    }
}

pub trait Preconditioner {
    /// Writes an approximation of `A^{-1} r` into `z`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &Csr) -> Option<Self> {
        let pos = a.diag_positions()?;
        let inv_diag = pos
            .iter()
            .map(|&k| {
                let d = a.val[k];
                if d != 0.0 {
                    Some(1.0 / d)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of `A`.
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Returns `None` if a diagonal entry is missing or a pivot vanishes.
    pub fn new(a: &Csr) -> Option<Self> {
        let mut lu = a.clone();
        let diag = a.diag_positions()?;
        for i in 0..lu.n {
            let end = lu.row_ptr[i + 1];
            for kk in lu.row_ptr[i]..diag[i] {
                let k = lu.col[kk];
                let pivot = lu.val[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return None;
                }
                lu.val[kk] /= pivot;
                let factor = lu.val[kk];
                // Subtract factor * U[k, j] for j > k present in row i.
                let mut p = diag[k] + 1;
                let k_end = lu.row_ptr[k + 1];
                let mut q = kk + 1;
                while p < k_end && q < end {
                    match lu.col[p].cmp(&lu.col[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            lu.val[q] -= factor * lu.val[p];
                            p += 1;
                            q += 1;
                        }
                    }
                }
            }
            if lu.val[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Self { lu, diag })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let a = &self.lu;
        for i in 0..a.n {
            let mut s = r[i];
            for k in a.row_ptr[i]..self.diag[i] {
                s -= a.val[k] * z[a.col[k]];
            }
            z[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..a.row_ptr[i + 1] {
                s -= a.val[k] * z[a.col[k]];
            }
            z[i] = s / a.val[self.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(a: &Csr, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Solves `A x = b` starting from `x`, stopping when
/// `|b - A x| <= rtol |b|` or after `max_iter` iterations. Convergence of
/// the recursive residual is confirmed against the true residual, and the
/// iteration restarts from the current iterate when the two have drifted.
pub fn bicgstab<P: Preconditioner>(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    m: &P,
    rtol: f64,
    max_iter: usize,
) -> KrylovStats {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    true_residual(a, b, x, &mut r);
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while it < max_iter {
        if rel <= rtol {
            true_residual(a, b, x, &mut r);
            rel = norm(&r) / bnorm;
            if rel <= rtol {
                return KrylovStats {
                    iterations: it,
                    relative_residual: rel,
                    converged: true,
                };
            }
        }
        let rho_new = dot(&r_hat, &r);
        if rel <= rtol || rho_new == 0.0 || omega == 0.0 {
            // Breakdown or drift: restart with the current residual as
            // shadow vector.
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|x| *x = 0.0);
            p.iter_mut().for_each(|x| *x = 0.0);
            it += 1;
            continue;
        }
        it += 1;
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut p_hat);
        a.mul_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        // r now holds s = r - alpha v.
        for i in 0..n {
            r[i] -= alpha * v[i];
            x[i] += alpha * p_hat[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= rtol {
            continue;
        }
        m.apply(&r, &mut s_hat);
        a.mul_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            break;
        }
    }
    true_residual(a, b, x, &mut r);
    rel = norm(&r) / bnorm;
    KrylovStats {
        iterations: it,
        relative_residual: rel,
        converged: rel <= rtol,
    }
}
