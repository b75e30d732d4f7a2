//! Small dense complex linear algebra.
//!
//! Everything here targets matrices of dimension at most a few dozen: the
//! reshaped amplitude tensors of few-party states, single-party operators and
//! 2×2 reduced blocks. Robustness wins over asymptotics, so the SVD is a
//! one-sided Jacobi iteration and the Hermitian eigensolver is cyclic Jacobi.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_EPS: f64 = 1e-15;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row slices. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        assert!(columns.iter().all(|c| c.len() == rows), "column length mismatch");
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * k).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Max-abs entry of `M†M − I`.
    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.cols))
    }

    /// Max-abs entry of `M − M†`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
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

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:+.6}{:+.6}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Full singular value decomposition `m = u · diag(s) · v†`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    /// Descending, nonnegative. Length `min(rows, cols)`.
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    /// `u · diag(s) · v†`, padded to the input shape.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        ComplexMatrix::from_fn(m, n, |i, j| {
            self.s
                .iter()
                .enumerate()
                .map(|(k, &sk)| self.u[(i, k)] * sk * self.v[(j, k)].conj())
                .sum()
        })
    }
}

fn check_input(m: &ComplexMatrix) -> Result<()> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !m.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

pub(crate) fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalizes `v` against `basis` (two Gram-Schmidt passes) and returns
/// the normalized remainder, or `None` if too little of `v` survives.
fn orthonormalize_against(basis: &[Vec<C64>], mut v: Vec<C64>) -> Option<Vec<C64>> {
    let start = norm(&v);
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = vdot(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let n = norm(&v);
    if n < 1e-6 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// Extends an orthonormal family to a basis of `C^dim` with standard vectors.
fn complete_basis(basis: &mut Vec<Vec<C64>>, dim: usize) {
    let mut e = 0;
    while basis.len() < dim && e < dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[e] = C64::new(1.0, 0.0);
        if let Some(w) = orthonormalize_against(basis, v) {
            basis.push(w);
        }
        e += 1;
    }
    debug_assert_eq!(basis.len(), dim);
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    check_input(m)?;
    if m.rows >= m.cols {
        Ok(svd_tall(m))
    } else {
        let t = svd_tall(&m.adjoint());
        Ok(SvdResult { u: t.v, s: t.s, v: t.u })
    }
}

fn svd_tall(a: &ComplexMatrix) -> SvdResult {
    let (m, n) = (a.rows, a.cols);
    // Work column-major: cols[j] is column j of the rotated matrix.
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<C64>> = ComplexMatrix::identity(n).data.chunks(n).map(|r| r.to_vec()).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = vdot(&w[p], &w[q]);
                let g = gamma.norm();
                if g <= JACOBI_EPS * (alpha * beta).sqrt() || g < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, phase, c, s);
                rotate_pair(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = w.iter().map(|col| norm(col)).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));

    let mut s = Vec::with_capacity(n);
    let mut vcols = Vec::with_capacity(n);
    // Left singular vectors for nonzero singular values; `None` marks a zero
    // (or numerically lost) direction to be completed afterwards.
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut slots: Vec<Option<usize>> = Vec::with_capacity(n);
    for &(j, sj) in &order {
        s.push(sj);
        vcols.push(v[j].clone());
        let col = if sj > 0.0 {
            orthonormalize_against(&basis, w[j].iter().map(|z| z / sj).collect())
        } else {
            None
        };
        slots.push(col.map(|c| {
            basis.push(c);
            basis.len() - 1
        }));
    }
    let known = basis.len();
    complete_basis(&mut basis, m);
    let mut extra = (known..m).map(|k| basis[k].clone());
    let mut full: Vec<Vec<C64>> = slots
        .iter()
        .map(|slot| match slot {
            Some(k) => basis[*k].clone(),
            None => extra.next().expect("basis completion"),
        })
        .collect();
    full.extend(extra);

    SvdResult {
        u: ComplexMatrix::from_columns(m, &full),
        s,
        v: ComplexMatrix::from_columns(n, &vcols),
    }
}

fn rotate_pair(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *xp;
        let b = *xq * phase;
        *xp = a * c - b * s;
        *xq = a * s + b * c;
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unitary matrix of
/// eigenvectors (as columns).
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_input(m)?;
    if !m.is_square() {
        return Err(Error::Shape(format!("eig_hermitian needs a square matrix, got {}x{}", m.rows, m.cols)));
    }
    let herm = m.hermiticity_residual();
    if herm > 1e-10 {
        return Err(Error::InvalidInput(format!("matrix is not Hermitian (residual {herm:e})")));
    }
    let n = m.rows;
    let mut a = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);
    let frob: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * frob || off < f64::MIN_POSITIVE {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b < f64::MIN_POSITIVE {
                    continue;
                }
                let dq = (apq / b).conj();
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let j = [
                    [C64::new(c, 0.0), C64::new(s, 0.0)],
                    [-dq * s, dq * c],
                ];
                // a <- J† a J ; v <- v J
                for i in 0..n {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = x * j[0][0] + y * j[1][0];
                    a[(i, q)] = x * j[0][1] + y * j[1][1];
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = x * j[0][0] + y * j[1][0];
                    v[(i, q)] = x * j[0][1] + y * j[1][1];
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = j[0][0].conj() * x + j[1][0].conj() * y;
                    a[(q, k)] = j[0][1].conj() * x + j[1][1].conj() * y;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<(usize, f64)> = (0..n).map(|i| (i, a[(i, i)].re)).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let values = order.iter().map(|o| o.1).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k].0)]);
    Ok((values, vecs))
}

/// Builds `V · diag(f(λ)) · V†` from an eigendecomposition.
fn spectral_map(values: &[f64], vecs: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = values.len();
    let fv: Vec<f64> = values.iter().map(|&x| f(x)).collect();
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| vecs[(i, k)] * fv[k] * vecs[(j, k)].conj()).sum()
    })
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eig_hermitian(m)?;
    Ok(spectral_map(&vals, &vecs, |x| x.max(0.0).sqrt()))
}

/// Inverse square root of a positive-definite Hermitian matrix.
pub fn inv_sqrt_pd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eig_hermitian(m)?;
    if vals.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidInput("matrix is not positive definite".into()));
    }
    Ok(spectral_map(&vals, &vecs, |x| 1.0 / x.sqrt()))
}

/// Polar decomposition `m = u · p` with `u` unitary and `p ⪰ 0`.
///
/// For rank-deficient input the unitary factor is completed from the SVD,
/// preferring the right null vectors themselves so that a positive
/// semidefinite input yields `u = 1`.
pub fn polar(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_input(m)?;
    if !m.is_square() {
        return Err(Error::Shape(format!("polar needs a square matrix, got {}x{}", m.rows, m.cols)));
    }
    let n = m.rows;
    let d = svd(m)?;
    let smax = d.s[0];
    let rank = d.s.iter().take_while(|&&x| x > smax * 1e-13 && x > 0.0).count();
    let mut ucols: Vec<Vec<C64>> = (0..rank).map(|k| d.u.column(k)).collect();
    for k in rank..n {
        if let Some(c) = orthonormalize_against(&ucols, d.v.column(k)) {
            ucols.push(c);
        }
    }
    complete_basis(&mut ucols, n);
    let u_full = ComplexMatrix::from_columns(n, &ucols);
    let u = &u_full * &d.v.adjoint();
    let p = ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| d.v[(i, k)] * d.s[k] * d.v[(j, k)].conj()).sum()
    });
    Ok((u, p))
}

/// Seeded random stream. Each `(seed, stream)` pair names an independent,
/// reproducible sequence; [`RandomSource::child`] derives nested streams so
/// work items can be scheduled in any order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Independent source for work item `index` beneath this one.
    pub fn child(&self, index: u64) -> Self {
        Self { seed: splitmix64(self.seed ^ splitmix64(self.stream)), stream: index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniformly distributed unit vector in `C^dim`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unitary drawn with a caller-owned generator.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let g = ginibre(rng, dim, dim);
        // Gram-Schmidt QR keeps diag(R) positive, which is exactly the phase
        // fix that makes Q Haar distributed.
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(dim);
        for j in 0..dim {
            match orthonormalize_against(&q, g.column(j)) {
                Some(c) => q.push(c),
                None => break,
            }
        }
        if q.len() == dim {
            return ComplexMatrix::from_columns(dim, &q);
        }
    }
}

/// Haar-random unitary, reproducible per `(seed, stream)`.
pub fn random_unitary(dim: usize, src: RandomSource) -> ComplexMatrix {
    haar_unitary(&mut src.rng(), dim)
}

pub fn instrument_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_outcomes: usize) -> Vec<ComplexMatrix> {
    assert!(dim >= 1 && n_outcomes >= 1);
    let qs: Vec<ComplexMatrix> = (0..n_outcomes)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            &g * &g.adjoint()
        })
        .collect();
    let total = qs.iter().skip(1).fold(qs[0].clone(), |acc, q| acc.add(q));
    let s_inv_half = inv_sqrt_pd(&total).expect("sum of Wishart matrices is positive definite");
    qs.iter()
        .map(|q| {
            let p = &(&s_inv_half * q) * &s_inv_half;
            let p = p.add(&p.adjoint()).scale(C64::new(0.5, 0.0));
            let root = sqrt_psd(&p).expect("normalized effect is Hermitian");
            &haar_unitary(rng, dim) * &root
        })
        .collect()
}

/// Random measurement instrument `{M_i}` with `Σ M_i†M_i = 1`.
///
/// Effects are `P_i = S^{-1/2} Q_i S^{-1/2}` for Wishart `Q_i` and
/// `S = Σ Q_i`; operators are `M_i = V_i √P_i` with Haar `V_i`.
pub fn random_instrument(dim: usize, n_outcomes: usize, src: RandomSource) -> Vec<ComplexMatrix> {
    instrument_with(&mut src.rng(), dim, n_outcomes)
}

/// Max-abs entry of `Σ M_i†M_i − 1`.
pub fn completeness_residual(ms: &[ComplexMatrix]) -> f64 {
    let Some(first) = ms.first() else { return f64::INFINITY };
    let d = first.cols();
    let sum = ms
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, m| acc.add(&(&m.adjoint() * m)));
    sum.max_abs_diff(&ComplexMatrix::identity(d))
}
