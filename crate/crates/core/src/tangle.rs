//! Three-tangle of three-qubit pure states.
//!
//! The primary route is the Cayley hyperdeterminant of the amplitude cube
//! `a_ijk`:
//!
//! ```text
//! d₁ = a²₀₀₀a²₁₁₁ + a²₀₀₁a²₁₁₀ + a²₀₁₀a²₁₀₁ + a²₁₀₀a²₀₁₁
//! d₂ = a₀₀₀a₁₁₁a₀₁₁a₁₀₀ + a₀₀₀a₁₁₁a₁₀₁a₀₁₀ + a₀₀₀a₁₁₁a₁₁₀a₀₀₁
//!    + a₀₁₁a₁₀₀a₁₀₁a₀₁₀ + a₀₁₁a₁₀₀a₁₁₀a₀₀₁ + a₁₀₁a₀₁₀a₁₁₀a₀₀₁
//! d₃ = a₀₀₀a₁₁₀a₁₀₁a₀₁₁ + a₁₁₁a₀₀₁a₀₁₀a₁₀₀
//! τ  = 4 |d₁ − 2d₂ + 4d₃|
//! ```
//!
//! The second route goes through concurrences,
//! `τ = C²_{A(BC)} − C²_{AB} − C²_{AC}`, and is kept as an independent check.

use num_complex::Complex64 as C64;

use crate::linalg::{self, ComplexMatrix};
use crate::state::PureState;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangleResult {
    pub tau: f64,
}

/// `d₁ − 2d₂ + 4d₃` for the (normalized) amplitudes of `s`.
pub fn hyperdeterminant(s: &PureState) -> Result<C64> {
    s.require_three_qubit()?;
    let a = s.amps();
    let [a000, a001, a010, a011, a100, a101, a110, a111] = [a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]];
    let d1 = a000 * a000 * a111 * a111
        + a001 * a001 * a110 * a110
        + a010 * a010 * a101 * a101
        + a100 * a100 * a011 * a011;
    let d2 = a000 * a111 * a011 * a100
        + a000 * a111 * a101 * a010
        + a000 * a111 * a110 * a001
        + a011 * a100 * a101 * a010
        + a011 * a100 * a110 * a001
        + a101 * a010 * a110 * a001;
    let d3 = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100;
    Ok(d1 - 2.0 * d2 + 4.0 * d3)
}

pub fn three_tangle(s: &PureState) -> Result<TangleResult> {
    s.require_three_qubit()?;
    let s = s.normalized_for("three_tangle")?;
    let tau = 4.0 * hyperdeterminant(&s)?.norm();
    Ok(TangleResult { tau: tau.min(1.0) })
}

/// Concurrence of the two-qubit state `Σ_i |v_i⟩⟨v_i|` given by a (not
/// necessarily orthogonal) ensemble of subnormalized vectors. The `l_i` of
/// Wootters' formula are the singular values of `T_ij = v_iᵀ (σ_y⊗σ_y) v_j`.
pub fn concurrence_from_ensemble(vectors: &[[C64; 4]]) -> Result<f64> {
    let flip = |v: &[C64; 4]| [-v[3], v[2], v[1], -v[0]];
    let n = vectors.len();
    let t = ComplexMatrix::from_fn(n, n, |i, j| {
        let fj = flip(&vectors[j]);
        (0..4).map(|k| vectors[i][k] * fj[k]).sum()
    });
    let l = linalg::svd(&t)?.s;
    let c = l[0] - l[1..].iter().sum::<f64>();
    Ok(c.max(0.0))
}

/// Three-tangle via `C²_{A(BC)} − C²_{AB} − C²_{AC}`.
pub fn tangle_ckw(s: &PureState) -> Result<f64> {
    s.require_three_qubit()?;
    let s = s.normalized_for("tangle_ckw")?;
    let a = s.amps();
    let rho_a = s.reduced_density(&[0])?;
    let det = (rho_a[(0, 0)] * rho_a[(1, 1)] - rho_a[(0, 1)] * rho_a[(1, 0)]).re;
    let c2_a_bc = 4.0 * det;
    // ρ_AB = Σ_c |ψ_{··c}⟩⟨ψ_{··c}|, ρ_AC = Σ_b |ψ_{·b·}⟩⟨ψ_{·b·}|
    let ab: Vec<[C64; 4]> = (0..2).map(|c| std::array::from_fn(|ij| a[2 * ij + c])).collect();
    let ac: Vec<[C64; 4]> = (0..2)
        .map(|b| std::array::from_fn(|ik| a[4 * (ik >> 1) + 2 * b + (ik & 1)]))
        .collect();
    let c_ab = concurrence_from_ensemble(&ab)?;
    let c_ac = concurrence_from_ensemble(&ac)?;
    Ok(c2_a_bc - c_ab * c_ab - c_ac * c_ac)
}
