//! Dense complex linear algebra sized for small joint Hilbert spaces.
//!
//! Matrices are row-major and never exceed a few dozen rows in practice,
//! so every kernel is a plain dense loop. Tensor products follow the
//! "first factor most significant" flat-index convention throughout.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl CMat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            entries: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Rank-one projector onto basis vector `k`.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        debug_assert!(k < dim);
        let mut m = CMat::zeros(dim, dim);
        m[(k, k)] = Complex64::ONE;
        m
    }

    /// Build entry-wise from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = CMat::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Trace (square matrices only; callers guarantee shape).
    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Main diagonal.
    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    /// Scale by a real factor.
    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e *= s;
        }
        out
    }

    /// Scale by a complex factor.
    pub fn scale_c(&self, s: Complex64) -> CMat {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e *= s;
        }
        out
    }

    /// Kronecker product, `self` as the most significant factor.
    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for a in 0..self.rows {
            for b in 0..self.cols {
                let s = self[(a, b)];
                if s == Complex64::ZERO {
                    continue;
                }
                for c in 0..other.rows {
                    for d in 0..other.cols {
                        out[(a * other.rows + c, b * other.cols + d)] = s * other[(c, d)];
                    }
                }
            }
        }
        out
    }

    /// `u * self * u.dagger()`.
    pub fn conjugate_by(&self, u: &CMat) -> CMat {
        &(u * self) * &u.dagger()
    }

    /// Largest absolute deviation from Hermiticity, max_ij |m_ij - conj(m_ji)|.
    pub fn herm_defect(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entry-wise absolute difference to another matrix of equal shape.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (e, r) in out.entries.iter_mut().zip(&rhs.entries) {
            *e += r;
        }
        out
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (e, r) in out.entries.iter_mut().zip(&rhs.entries) {
            *e -= r;
        }
        out
    }
}

impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        // ikj loop order keeps both operands in row-major streaming access.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let e = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", e.re, e.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Tensor-factor structure of a flat Hilbert-space index.
///
/// `dims[0]` is the most significant digit of the flat index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorLayout {
    dims: Vec<usize>,
}

impl FactorLayout {
    /// Layout over the given factor dimensions (each at least 2).
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Spec(
                "factor layout needs at least one factor".into(),
            ));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Spec(format!(
                "factor dimensions must be at least 2, got {d}"
            )));
        }
        Ok(FactorLayout { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    /// Product of all factor dimensions.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Layout of `self` tensored with `other` (self most significant).
    pub fn concat(&self, other: &FactorLayout) -> FactorLayout {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        FactorLayout { dims }
    }

    /// Split a flat index into per-factor digits.
    pub fn decompose(&self, mut flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.total_dim());
        let mut digits = vec![0usize; self.dims.len()];
        for (slot, &d) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        digits
    }

    /// Flatten per-factor digits back into a flat index.
    pub fn compose(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        let mut flat = 0usize;
        for (&g, &d) in digits.iter().zip(&self.dims) {
            debug_assert!(g < d);
            flat = flat * d + g;
        }
        flat
    }
}

/// `Re tr(a b)` without materializing the product matrix.
pub fn real_trace_product(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.cols(), b.rows());
    assert_eq!(a.rows(), b.cols());
    let mut acc = 0.0f64;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let x = a[(i, k)];
            if x != Complex64::ZERO {
                acc += (x * b[(k, i)]).re;
            }
        }
    }
    acc
}

/// Permutation matrix sending basis vector `s` to basis vector `map(s)`.
///
/// `map` must be a bijection on `0..dim`; the result is then unitary.
pub fn permutation_matrix(dim: usize, map: impl Fn(usize) -> usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for s in 0..dim {
        let t = map(s);
        assert!(t < dim, "permutation target out of range");
        m[(t, s)] = Complex64::ONE;
    }
    m
}

/// Trace out all factors not listed in `keep`, preserving factor order.
///
/// `keep` must be strictly increasing, nonempty, and in range.
pub fn partial_trace(rho: &CMat, layout: &FactorLayout, keep: &[usize]) -> Result<CMat> {
    let n = layout.total_dim();
    if rho.rows() != n || rho.cols() != n {
        return Err(Error::Dimension(format!(
            "state is {}x{} but layout implies dimension {n}",
            rho.rows(),
            rho.cols()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Spec(
            "partial trace must keep at least one factor".into(),
        ));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= layout.num_factors() {
        return Err(Error::Spec(format!(
            "kept factors {keep:?} must be strictly increasing and below {}",
            layout.num_factors()
        )));
    }

    let dims = layout.dims();
    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();

    // Enumerate flat offsets contributed by each group of factors.
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[f]);
            for &o in &offs {
                for v in 0..dims[f] {
                    next.push(o + v * strides[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let kept_offs = offsets(keep);
    let traced_offs = offsets(&traced);

    let k = kept_offs.len();
    let mut out = CMat::zeros(k, k);
    for (i, &oi) in kept_offs.iter().enumerate() {
        for (j, &oj) in kept_offs.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for &ot in &traced_offs {
                acc += rho[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order together with the matrix whose
/// columns are the matching orthonormal eigenvectors, each rotated so its
/// largest-magnitude component is real and positive. The input must be
/// Hermitian within [`tol::HERM_INPUT`].
pub fn herm_eigen(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.herm_defect();
    if defect > tol::HERM_INPUT {
        return Err(Error::NotHermitian {
            defect,
            tol: tol::HERM_INPUT,
        });
    }

    let n = h.rows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = dm.symmetric_eigen();

    // The backend returns eigenpairs in no particular order; sort ascending,
    // breaking exact ties by original position so the result is reproducible.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    for (slot, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // Fix the global phase: largest-magnitude component real positive.
        let mut pivot = 0usize;
        let mut best = 0.0f64;
        for (r, e) in col.iter().enumerate() {
            let mag = e.norm();
            if mag > best {
                best = mag;
                pivot = r;
            }
        }
        let phase = if best > 0.0 {
            col[pivot].conj() / best
        } else {
            Complex64::ONE
        };
        for r in 0..n {
            vectors[(r, slot)] = col[r] * phase;
        }
    }
    Ok((values, vectors))
}

/// Evolve `rho` under Hermitian generator `h` for time `t`:
/// `U rho U.dagger()` with `U = exp(-i h t)`.
pub fn evolve_unitary(rho: &CMat, h: &CMat, t: f64) -> Result<CMat> {
    if rho.rows() != h.rows() || rho.cols() != h.cols() {
        return Err(Error::Dimension(format!(
            "state is {}x{} but generator is {}x{}",
            rho.rows(),
            rho.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let (values, vectors) = herm_eigen(h)?;
    let n = h.rows();
    // U = V diag(exp(-i lambda t)) V^dagger, assembled column-scaled.
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    let u = &scaled * &vectors.dagger();
    Ok(rho.conjugate_by(&u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat2(a: [[Complex64; 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| a[i][j])
    }

    #[test]
    fn kron_matches_hand_expansion() {
        let a = mat2([[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]]);
        let b = mat2([[c(0.0, 1.0), c(0.0, 0.0)], [c(0.0, 0.0), c(5.0, 0.0)]]);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(0, 0)], c(0.0, 1.0));
        assert_eq!(k[(1, 1)], c(5.0, 0.0));
        assert_eq!(k[(0, 2)], c(0.0, 2.0));
        assert_eq!(k[(3, 3)], c(20.0, 0.0));
        assert_eq!(k[(2, 1)], c(0.0, 0.0));
    }

    #[test]
    fn partial_trace_recovers_product_factors() {
        let rho_a = mat2([[c(0.7, 0.0), c(0.1, 0.2)], [c(0.1, -0.2), c(0.3, 0.0)]]);
        let rho_b = mat2([[c(0.4, 0.0), c(0.0, -0.1)], [c(0.0, 0.1), c(0.6, 0.0)]]);
        let joint = rho_a.kron(&rho_b);
        let layout = FactorLayout::new(vec![2, 2]).unwrap();
        let back_a = partial_trace(&joint, &layout, &[0]).unwrap();
        let back_b = partial_trace(&joint, &layout, &[1]).unwrap();
        assert!(back_a.max_abs_diff(&rho_a) < 1e-14);
        assert!(back_b.max_abs_diff(&rho_b) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let mut bell = CMat::zeros(4, 4);
        for &i in &[0usize, 3] {
            for &j in &[0usize, 3] {
                bell[(i, j)] = c(0.5, 0.0);
            }
        }
        let layout = FactorLayout::new(vec![2, 2]).unwrap();
        let red = partial_trace(&bell, &layout, &[1]).unwrap();
        assert!(red.max_abs_diff(&CMat::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_keeps_middle_factor_of_three() {
        let a = CMat::from_real_diag(&[0.2, 0.8]);
        let b = mat2([[c(0.9, 0.0), c(0.1, 0.1)], [c(0.1, -0.1), c(0.1, 0.0)]]);
        let d = CMat::from_real_diag(&[0.5, 0.3, 0.2]);
        let joint = a.kron(&b).kron(&d);
        let layout = FactorLayout::new(vec![2, 2, 3]).unwrap();
        let mid = partial_trace(&joint, &layout, &[1]).unwrap();
        assert!(mid.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_factor_lists() {
        let layout = FactorLayout::new(vec![2, 2]).unwrap();
        let rho = CMat::identity(4).scale(0.25);
        assert!(partial_trace(&rho, &layout, &[]).is_err());
        assert!(partial_trace(&rho, &layout, &[1, 0]).is_err());
        assert!(partial_trace(&rho, &layout, &[2]).is_err());
    }

    #[test]
    fn layout_compose_decompose_round_trip() {
        let layout = FactorLayout::new(vec![2, 3, 4]).unwrap();
        for flat in 0..layout.total_dim() {
            let digits = layout.decompose(flat);
            assert_eq!(layout.compose(&digits), flat);
        }
        assert_eq!(layout.decompose(23), vec![1, 2, 3]);
    }

    #[test]
    fn layout_rejects_degenerate_factors() {
        assert!(FactorLayout::new(vec![]).is_err());
        assert!(FactorLayout::new(vec![2, 1]).is_err());
    }

    #[test]
    fn permutation_matrix_is_unitary_and_maps_basis() {
        let p = permutation_matrix(3, |s| (s + 1) % 3);
        assert_eq!(p[(1, 0)], c(1.0, 0.0));
        assert_eq!(p[(2, 1)], c(1.0, 0.0));
        assert_eq!(p[(0, 2)], c(1.0, 0.0));
        let should_be_id = &p * &p.dagger();
        assert!(should_be_id.max_abs_diff(&CMat::identity(3)) < 1e-15);
    }

    #[test]
    fn herm_eigen_sorts_ascending_and_fixes_phase() {
        let h = CMat::from_real_diag(&[3.0, -1.0, 2.0]);
        let (vals, vecs) = herm_eigen(&h).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        // Eigenvectors of a diagonal matrix are basis vectors with the
        // positive-real phase convention.
        assert_abs_diff_eq!(vecs[(1, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(2, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(0, 2)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn herm_eigen_rejects_non_hermitian_input() {
        let mut m = CMat::identity(2);
        m[(0, 1)] = c(0.5, 0.0);
        let err = herm_eigen(&m).unwrap_err();
        match err {
            crate::error::Error::NotHermitian { defect, .. } => {
                assert_abs_diff_eq!(defect, 0.5, epsilon = 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn resonant_half_period_swaps_populations() {
        // Two-level system with coupling element g/2 and detuning delta:
        // after t = pi / sqrt(g^2 + delta^2) the excited population is
        // exactly g^2 / (g^2 + delta^2).
        let (g, delta) = (3.0f64, 4.0f64);
        let h = mat2([
            [c(0.0, 0.0), c(g / 2.0, 0.0)],
            [c(g / 2.0, 0.0), c(delta, 0.0)],
        ]);
        let rho0 = CMat::from_real_diag(&[1.0, 0.0]);
        let t = std::f64::consts::PI / (g * g + delta * delta).sqrt();
        let rho_t = evolve_unitary(&rho0, &h, t).unwrap();
        let expected = g * g / (g * g + delta * delta);
        assert_abs_diff_eq!(rho_t[(1, 1)].re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_t.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn evolution_preserves_purity_and_hermiticity() {
        let h = mat2([[c(1.0, 0.0), c(0.3, 0.7)], [c(0.3, -0.7), c(-2.0, 0.0)]]);
        let psi = mat2([[c(0.36, 0.0), c(0.48, 0.0)], [c(0.48, 0.0), c(0.64, 0.0)]]);
        let rho_t = evolve_unitary(&psi, &h, 1.7).unwrap();
        assert!(rho_t.herm_defect() < 1e-13);
        let purity = (&rho_t * &rho_t).trace().re;
        assert_abs_diff_eq!(purity, 1.0, epsilon = 1e-12);
    }

    fn herm_strategy(max_dim: usize) -> impl Strategy<Value = CMat> {
        (2..=max_dim).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |raw| {
                let a = CMat::from_fn(n, n, |i, j| {
                    let (re, im) = raw[i * n + j];
                    c(re, im)
                });
                (&a + &a.dagger()).scale(0.5)
            })
        })
    }

    proptest! {
        #[test]
        fn kron_mixed_product_property(
            raw_a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            raw_b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            raw_c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            raw_d in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        ) {
            let build = |raw: &[(f64, f64)], n: usize| {
                CMat::from_fn(n, n, |i, j| c(raw[i * n + j].0, raw[i * n + j].1))
            };
            let (a, b) = (build(&raw_a, 2), build(&raw_b, 3));
            let (cc, d) = (build(&raw_c, 2), build(&raw_d, 3));
            let lhs = &a.kron(&b) * &cc.kron(&d);
            let rhs = (&a * &cc).kron(&(&b * &d));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn partial_trace_preserves_trace(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
        ) {
            let m = CMat::from_fn(6, 6, |i, j| c(raw[i * 6 + j].0, raw[i * 6 + j].1));
            let layout = FactorLayout::new(vec![2, 3]).unwrap();
            for keep in [&[0usize][..], &[1][..]] {
                let red = partial_trace(&m, &layout, keep).unwrap();
                prop_assert!((red.trace() - m.trace()).norm() < 1e-12);
            }
        }

        #[test]
        fn herm_eigen_reconstructs_ordered_and_phase_fixed(h in herm_strategy(6)) {
            let (vals, vecs) = herm_eigen(&h).unwrap();
            let n = h.rows();
            // Ascending order.
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            // Reconstruction.
            let rebuilt = CMat::from_real_diag(&vals).conjugate_by(&vecs);
            prop_assert!(rebuilt.max_abs_diff(&h) < 1e-10);
            // Orthonormal columns.
            let gram = &vecs.dagger() * &vecs;
            prop_assert!(gram.max_abs_diff(&CMat::identity(n)) < 1e-10);
            // Phase convention: the dominant component of each column is
            // real and nonnegative.
            for col in 0..n {
                let mut best = 0.0f64;
                let mut pivot = 0usize;
                for r in 0..n {
                    if vecs[(r, col)].norm() > best {
                        best = vecs[(r, col)].norm();
                        pivot = r;
                    }
                }
                prop_assert!(vecs[(pivot, col)].im.abs() < 1e-10);
                prop_assert!(vecs[(pivot, col)].re >= 0.0);
            }
        }

        #[test]
        fn evolution_is_trace_and_spectrum_preserving(h in herm_strategy(5)) {
            let n = h.rows();
            let rho = CMat::identity(n).scale(1.0 / n as f64);
            let rho_t = evolve_unitary(&rho, &h, 0.9).unwrap();
            // The maximally mixed state is invariant under any unitary.
            prop_assert!(rho_t.max_abs_diff(&rho) < 1e-12);
        }
    }
}
