//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

/// Relative floor used to declare a symmetric matrix positive definite.
pub const PD_RELATIVE_TOL: f64 = 1e-10;

/// All eigenvalues of a square matrix (real Schur form, complex pairs included).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Eigenvalues of a square matrix computed block by block.
///
/// Rows and columns are grouped into the strongly connected components of
/// the sparsity pattern (`i -> j` when `m[(i, j)] != 0`). In that order the
/// matrix is block triangular, so its spectrum is the union of the diagonal
/// blocks' spectra. Eigenvalues repeated across blocks then come out exact
/// instead of being split by a defective coupling.
pub fn block_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let mut out = Vec::with_capacity(m.nrows());
    for comp in strong_components(m) {
        let block = DMatrix::from_fn(comp.len(), comp.len(), |a, b| m[(comp[a], comp[b])]);
        out.extend(eigenvalues(&block));
    }
    out
}

/// Strongly connected components of the nonzero pattern (Tarjan).
fn strong_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        m: &'a DMatrix<f64>,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for w in 0..self.m.ncols() {
                if w == v || self.m[(v, w)] == 0.0 {
                    continue;
                }
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut comp = Vec::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                self.out.push(comp);
            }
        }
    }
    let n = m.nrows();
    let mut t = Tarjan {
        m,
        index: alloc::vec![None; n],
        low: alloc::vec![0; n],
        on_stack: alloc::vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

/// `(M + M^T) / 2`.
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, sorted ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(symmetric_part(m));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

pub fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).last().copied().unwrap_or(f64::NAN)
}

/// Scale-aware positive-definiteness test on the symmetric part:
/// `min_eig > PD_RELATIVE_TOL * max(1, spectral radius)`.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let eig = symmetric_eigenvalues(m);
    let (Some(&lo), Some(&hi)) = (eig.first(), eig.last()) else {
        return false;
    };
    let scale = libm::fmax(1.0, libm::fmax(libm::fabs(lo), libm::fabs(hi)));
    lo > PD_RELATIVE_TOL * scale
}

/// Euclidean norm of a slice.
pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Largest absolute entry of a slice (0 for an empty slice, NaN if any entry is NaN).
pub fn norm_inf(x: &[f64]) -> f64 {
    let mut out = 0.0f64;
    for &v in x {
        if v.is_nan() {
            return f64::NAN;
        }
        out = libm::fmax(out, libm::fabs(v));
    }
    out
}
