//! Dense pure states of `p` parties with arbitrary local dimensions.
//!
//! Amplitudes are stored row-major over the tensor index with party 0 the
//! slowest-varying axis, so `|i₀ i₁ … i_{p−1}⟩` lives at
//! `Σ_k i_k · Π_{l>k} d_l`. States are kept unnormalized until
//! [`PureState::normalize`] is called.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::linalg::{self, ComplexMatrix};
use crate::{Error, Result};

/// Largest number of amplitudes accepted (twelve qubits).
pub const MAX_AMPLITUDES: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

/// One branch of a local measurement: its probability and the normalized
/// post-measurement state.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub probability: f64,
    pub state: PureState,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Shape("a state needs at least one party".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::Shape(format!("local dimension {d} < 2")));
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&t| t <= MAX_AMPLITUDES)
        .ok_or_else(|| Error::Shape(format!("dims {dims:?} exceed {MAX_AMPLITUDES} amplitudes")))?;
    Ok(total)
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amps.len() != total {
            return Err(Error::Shape(format!(
                "{} amplitudes for dims {dims:?} (expected {total})",
                amps.len()
            )));
        }
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        Ok(Self { dims, amps })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let total = check_dims(&dims)?;
        Ok(Self { dims, amps: vec![C64::new(0.0, 0.0); total] })
    }

    /// Computational basis ket `|idx⟩`.
    pub fn basis(dims: Vec<usize>, idx: &[usize]) -> Result<Self> {
        let mut s = Self::zeros(dims)?;
        let flat = s.flat_index(idx)?;
        s.amps[flat] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
    pub fn ghz(n: usize) -> Self {
        let mut s = Self::zeros(vec![2; n]).expect("qubit dims");
        s.amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
        let last = s.amps.len() - 1;
        s.amps[last] = C64::new(FRAC_1_SQRT_2, 0.0);
        s
    }

    /// Equal superposition of the `n` single-excitation kets.
    pub fn w(n: usize) -> Self {
        let mut s = Self::zeros(vec![2; n]).expect("qubit dims");
        let a = 1.0 / (n as f64).sqrt();
        for k in 0..n {
            s.amps[1 << (n - 1 - k)] = C64::new(a, 0.0);
        }
        s
    }

    /// Haar-uniform random pure state.
    pub fn random<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<Self> {
        let total = check_dims(&dims)?;
        Ok(Self { dims, amps: linalg::random_unit_vector(rng, total) })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_three_qubit(&self) -> bool {
        self.dims == [2, 2, 2]
    }

    pub(crate) fn require_three_qubit(&self) -> Result<()> {
        if self.is_three_qubit() {
            Ok(())
        } else {
            Err(Error::Shape(format!("expected three qubits, got dims {:?}", self.dims)))
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(Error::Shape(format!("index {idx:?} for {} parties", self.dims.len())));
        }
        let mut flat = 0;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            if i >= d {
                return Err(Error::Shape(format!("index {idx:?} out of range for dims {:?}", self.dims)));
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }

    /// Amplitude at a multi-index. Panics when out of range.
    pub fn amp(&self, idx: &[usize]) -> C64 {
        self.amps[self.flat_index(idx).expect("index in range")]
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n <= 1e-14 {
            return Err(Error::ZeroState);
        }
        Ok(Self { dims: self.dims.clone(), amps: self.amps.iter().map(|z| z / n).collect() })
    }

    /// Normalizes, logging a warning when the input norm was off by more
    /// than 1e-6. Used at measure entry points.
    pub(crate) fn normalized_for(&self, what: &str) -> Result<Self> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-6 {
            log::warn!("{what}: input state has norm {n}; normalizing");
        }
        self.normalize()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(linalg::vdot(&self.amps, &other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Self) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    /// Applies `m` to one party's axis (`1 ⊗ … ⊗ m ⊗ … ⊗ 1`). The result is
    /// not renormalized.
    pub fn apply_local(&self, party: usize, m: &ComplexMatrix) -> Result<Self> {
        let d = *self
            .dims
            .get(party)
            .ok_or_else(|| Error::Shape(format!("party {party} out of range")))?;
        if m.rows() != d || m.cols() != d {
            return Err(Error::Shape(format!(
                "operator {}x{} on party {party} of dimension {d}",
                m.rows(),
                m.cols()
            )));
        }
        let inner: usize = self.dims[party + 1..].iter().product();
        let outer: usize = self.dims[..party].iter().product();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut col = vec![C64::new(0.0, 0.0); d];
        for o in 0..outer {
            for r in 0..inner {
                let base = o * d * inner + r;
                for (a, slot) in col.iter_mut().enumerate() {
                    *slot = self.amps[base + a * inner];
                }
                for a in 0..d {
                    out[base + a * inner] = (0..d).map(|b| m[(a, b)] * col[b]).sum();
                }
            }
        }
        Ok(Self { dims: self.dims.clone(), amps: out })
    }

    /// Validates a bipartition given by its left parties and returns the
    /// sorted left and right party lists.
    pub fn split_parties(&self, left: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        let p = self.dims.len();
        let mut l = left.to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() != left.len() {
            return Err(Error::Shape(format!("duplicate parties in {left:?}")));
        }
        if l.is_empty() || l.len() >= p || l.iter().any(|&k| k >= p) {
            return Err(Error::Shape(format!(
                "{left:?} is not a nonempty proper subset of {p} parties"
            )));
        }
        let r = (0..p).filter(|k| !l.contains(k)).collect();
        Ok((l, r))
    }

    /// Reshapes the amplitude tensor into a matrix whose rows run over the
    /// `left` parties and whose columns run over the rest (both in
    /// ascending party order, row-major within each side).
    pub fn bipartite_matrix(&self, left: &[usize]) -> Result<ComplexMatrix> {
        let (l, r) = self.split_parties(left)?;
        let rows: usize = l.iter().map(|&k| self.dims[k]).product();
        let cols: usize = r.iter().map(|&k| self.dims[k]).product();
        let mut m = ComplexMatrix::zeros(rows, cols);
        for (flat, &a) in self.amps.iter().enumerate() {
            let idx = self.multi_index(flat);
            let row = l.iter().fold(0, |acc, &k| acc * self.dims[k] + idx[k]);
            let col = r.iter().fold(0, |acc, &k| acc * self.dims[k] + idx[k]);
            m[(row, col)] = a;
        }
        Ok(m)
    }

    /// Reduced density matrix on `parties` (trace over the complement).
    pub fn reduced_density(&self, parties: &[usize]) -> Result<ComplexMatrix> {
        let m = self.bipartite_matrix(parties)?;
        Ok(&m * &m.adjoint())
    }

    /// Tensor product of local vectors, each normalized first.
    pub fn product(factors: &[Vec<C64>]) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        check_dims(&dims)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for f in factors {
            let n = linalg::norm(f);
            if n <= 1e-14 {
                return Err(Error::ZeroState);
            }
            amps = amps
                .iter()
                .flat_map(|&a| f.iter().map(move |&b| a * b / n))
                .collect();
        }
        Ok(Self { dims, amps })
    }
}

/// Free-function form of [`PureState::product`].
pub fn product_state(factors: &[Vec<C64>]) -> Result<PureState> {
    PureState::product(factors)
}
