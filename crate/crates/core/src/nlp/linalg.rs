//! Sparse symmetric linear algebra for the interior-point KKT systems.
//!
//! The KKT matrices produced by collocation transcriptions are symmetric
//! indefinite with an almost-banded pattern once variables and constraint
//! rows are interleaved along the time axis, plus a thin dense border from
//! interface-time variables. With inertia-controlled regularization the
//! systems are quasi-definite, so an up-looking simplicial LDL^T without
//! numerical pivoting factors them stably; iterative refinement guards the
//! occasional ill-conditioned solve.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("zero or non-finite pivot at column {0}")]
    BadPivot(usize),
}

/// Stable slot handle returned by [`SymCscBuilder::add`]. Writing a value to
/// the slot accumulates into the matching CSC entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot(pub usize);

/// Builder for a symmetric matrix stored as the upper triangle in CSC form.
///
/// Entries are registered once to fix the pattern; duplicate coordinates
/// share a single stored entry and accumulate. The builder is used to lay
/// out the KKT pattern once per NLP structure, after which only the values
/// change between factorizations.
#[derive(Debug, Default)]
pub struct SymCscBuilder {
    n: usize,
    coords: Vec<(usize, usize)>,
}

impl SymCscBuilder {
    pub fn new(n: usize) -> Self {
        SymCscBuilder {
            n,
            coords: Vec::new(),
        }
    }

    /// Register entry (r, c); the coordinate is folded into the upper
    /// triangle. Returns a slot for numeric fill.
    pub fn add(&mut self, r: usize, c: usize) -> Slot {
        debug_assert!(r < self.n && c < self.n);
        let (row, col) = if r <= c { (r, c) } else { (c, r) };
        self.coords.push((row, col));
        Slot(self.coords.len() - 1)
    }

    pub fn finish(self) -> SymCsc {
        let n = self.n;
        // Sort coordinate ids column-major, then row; unify duplicates.
        let mut order: Vec<usize> = (0..self.coords.len()).collect();
        order.sort_by_key(|&k| (self.coords[k].1, self.coords[k].0));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut slot_map = vec![0usize; self.coords.len()];
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c) = self.coords[k];
            if last != Some((r, c)) {
                row_idx.push(r);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
            slot_map[k] = row_idx.len() - 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let nnz = row_idx.len();
        SymCsc {
            n,
            col_ptr,
            row_idx,
            values: vec![0.0; nnz],
            slot_map,
        }
    }
}

/// Symmetric matrix, upper triangle in compressed sparse column form.
#[derive(Debug, Clone)]
pub struct SymCsc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    slot_map: Vec<usize>,
}

impl SymCsc {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn clear_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add_value(&mut self, slot: Slot, v: f64) {
        self.values[self.slot_map[slot.0]] += v;
    }

    /// y = A x with the full (mirrored) symmetric matrix.
    pub fn sym_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            let xc = x[c];
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let a = self.values[p];
                y[r] += a * xc;
                if r != c {
                    y[c] += a * x[r];
                }
            }
        }
    }
}

/// Elimination tree and column counts, reusable across numeric refactors of
/// matrices with the same pattern.
#[derive(Debug)]
pub struct SymbolicLdl {
    n: usize,
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
}

impl SymbolicLdl {
    pub fn analyze(a: &SymCsc) -> Self {
        let n = a.n;
        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let mut i = a.row_idx[p];
                while i < k && flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as isize;
                    }
                    l_nz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            l_col_ptr[i + 1] = l_col_ptr[i] + l_nz[i];
        }
        SymbolicLdl {
            n,
            parent,
            l_col_ptr,
        }
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }
}

/// Numeric LDL^T factor: unit lower-triangular L (strict part stored by
/// columns) and diagonal D.
#[derive(Debug)]
pub struct LdlFactor {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Up-looking factorization. Fails on an exactly zero or non-finite
    /// pivot; sign statistics of D are left to the caller for inertia
    /// control.
    pub fn factor(a: &SymCsc, sym: &SymbolicLdl) -> Result<LdlFactor, FactorError> {
        let n = a.n;
        let mut l_row_idx = vec![0usize; sym.factor_nnz()];
        let mut l_values = vec![0.0f64; sym.factor_nnz()];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_next = sym.l_col_ptr[..n].to_vec();

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            for p in a.col_ptr[k]..a.col_ptr[k + 1] {
                let mut i = a.row_idx[p];
                y[i] += a.values[p];
                let mut len = 0usize;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = sym.parent[i] as usize;
                }
                // Reverse the path so the final pattern is topological.
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let p_end = l_next[i];
                for p in sym.l_col_ptr[i]..p_end {
                    y[l_row_idx[p]] -= l_values[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                l_row_idx[p_end] = k;
                l_values[p_end] = lki;
                l_next[i] += 1;
            }
            if dk == 0.0 || !dk.is_finite() {
                return Err(FactorError::BadPivot(k));
            }
            d[k] = dk;
        }
        Ok(LdlFactor {
            n,
            l_col_ptr: sym.l_col_ptr.clone(),
            l_row_idx,
            l_values,
            d,
        })
    }

    /// Counts of (positive, negative, near-zero) pivots; near-zero is
    /// relative to the largest pivot magnitude.
    pub fn inertia(&self) -> (usize, usize, usize) {
        let dmax = self.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = 1e-14 * dmax.max(1.0);
        let mut pos = 0;
        let mut neg = 0;
        let mut zero = 0;
        for &v in &self.d {
            if v.abs() <= tiny {
                zero += 1;
            } else if v > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        (pos, neg, zero)
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        // forward: L y = b
        for j in 0..n {
            let bj = b[j];
            if bj != 0.0 {
                for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                    b[self.l_row_idx[p]] -= self.l_values[p] * bj;
                }
            }
        }
        // diagonal
        for j in 0..n {
            b[j] /= self.d[j];
        }
        // backward: L^T x = y
        for j in (0..n).rev() {
            let mut s = b[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                s -= self.l_values[p] * b[self.l_row_idx[p]];
            }
            b[j] = s;
        }
    }

    /// Solve with a fixed number of iterative-refinement sweeps; returns the
    /// final residual infinity norm.
    pub fn solve_refined(&self, a: &SymCsc, b: &[f64], x: &mut [f64], sweeps: usize) -> f64 {
        let n = self.n;
        x.copy_from_slice(b);
        self.solve(x);
        let mut resid = vec![0.0; n];
        let mut corr = vec![0.0; n];
        let mut rnorm = 0.0f64;
        for _ in 0..sweeps {
            a.sym_matvec(x, &mut resid);
            rnorm = 0.0;
            for i in 0..n {
                resid[i] = b[i] - resid[i];
                rnorm = rnorm.max(resid[i].abs());
            }
            let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if rnorm <= 1e-13 * bnorm {
                break;
            }
            corr.copy_from_slice(&resid);
            self.solve(&mut corr);
            for i in 0..n {
                x[i] += corr[i];
            }
        }
        rnorm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_to_sym(mat: &[&[f64]]) -> SymCsc {
        let n = mat.len();
        let mut b = SymCscBuilder::new(n);
        let mut slots = Vec::new();
        for i in 0..n {
            for j in i..n {
                if mat[i][j] != 0.0 {
                    slots.push((b.add(i, j), mat[i][j]));
                }
            }
        }
        let mut a = b.finish();
        for (s, v) in slots {
            a.add_value(s, v);
        }
        a
    }

    #[test]
    fn factor_solves_small_spd_system() {
        let a = dense_to_sym(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let sym = SymbolicLdl::analyze(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        let r = f.solve_refined(&a, &b, &mut x, 2);
        assert!(r < 1e-12);
        let mut back = vec![0.0; 3];
        a.sym_matvec(&x, &mut back);
        for i in 0..3 {
            assert_relative_eq!(back[i], b[i], epsilon = 1e-12);
        }
        assert_eq!(f.inertia(), (3, 0, 0));
    }

    #[test]
    fn factor_reports_indefinite_inertia() {
        // Saddle-point matrix [I J^T; J -d] with one equality row.
        let a = dense_to_sym(&[
            &[1.0, 0.0, 1.0],
            &[0.0, 1.0, 1.0],
            &[1.0, 1.0, -1e-8],
        ]);
        let sym = SymbolicLdl::analyze(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let (pos, neg, zero) = f.inertia();
        assert_eq!((pos, neg, zero), (2, 1, 0));
    }

    #[test]
    fn duplicate_slots_accumulate() {
        let mut b = SymCscBuilder::new(2);
        let s1 = b.add(0, 1);
        let s2 = b.add(1, 0);
        let d0 = b.add(0, 0);
        let d1 = b.add(1, 1);
        let mut a = b.finish();
        assert_eq!(a.nnz(), 3);
        a.add_value(s1, 0.5);
        a.add_value(s2, 0.25);
        a.add_value(d0, 2.0);
        a.add_value(d1, 2.0);
        let mut y = vec![0.0; 2];
        a.sym_matvec(&[1.0, 1.0], &mut y);
        assert_relative_eq!(y[0], 2.75);
        assert_relative_eq!(y[1], 2.75);
    }

    #[test]
    fn random_indefinite_square_roundtrip() {
        // Quasi-definite 20x20: diag blocks +I (12) and -I (8) plus random
        // symmetric noise on the coupling.
        let n = 20;
        let mut seed = 123456789u64;
        let mut rnd = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = if i < 12 { 2.0 } else { -2.0 };
        }
        for i in 0..12 {
            for j in 12..n {
                let v = rnd() * 0.3;
                dense[i][j] = v;
                dense[j][i] = v;
            }
        }
        let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
        let a = dense_to_sym(&rows);
        let sym = SymbolicLdl::analyze(&a);
        let f = LdlFactor::factor(&a, &sym).unwrap();
        let (pos, neg, _) = f.inertia();
        assert_eq!((pos, neg), (12, 8));
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let r = f.solve_refined(&a, &b, &mut x, 3);
        assert!(r < 1e-10, "residual {}", r);
    }
}
