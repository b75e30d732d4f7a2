//! The W-closure measure `E(ψ, S_W)` for three qubits and the ε-sequence
//! showing that the GHZ closure is dense.
//!
//! Every state in the closure of the W class is, in some local product basis
//! `{|0'⟩, |1'⟩}^{⊗3}`, supported on `{|0'0'0'⟩, |1'0'0'⟩, |0'1'0'⟩,
//! |0'0'1'⟩}`. Conversely every such state has vanishing hyperdeterminant and
//! is a limit of W-class states. For a fixed basis the best overlap with that
//! four-dimensional span is the orthogonal projection, so
//!
//! ```text
//! E(ψ, S_W) = min over local bases of  Σ_{≥2 excitations} |⟨i'j'k'|ψ⟩|²
//! ```
//!
//! The minimization runs over three single-qubit bases. With two bases
//! fixed, the objective is `const + ⟨1'|H|1'⟩` for a 2×2 positive matrix `H`
//! built from the remaining amplitudes, so the free basis is solved exactly
//! by an eigenvector of `H`. Alternating these exact updates from many starts
//! gives a monotone descent.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::linalg;
use crate::par;
use crate::product_opt::{MeasureResult, OptConfig, AGREEMENT_TOL};
use crate::state::PureState;
use crate::{Error, Result};

/// Local reference directions for the three qubits, as Bloch angles of the
/// unexcited vector `|0'_j⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`. The excited
/// vector `|1'_j⟩` is the antipode. All angles zero is the computational
/// basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WBasisParam {
    pub theta: [f64; 3],
    pub phi: [f64; 3],
}

impl WBasisParam {
    pub fn computational() -> Self {
        Self { theta: [0.0; 3], phi: [0.0; 3] }
    }

    fn bases(&self) -> [LocalBasis; 3] {
        std::array::from_fn(|j| LocalBasis::from_angles(self.theta[j], self.phi[j]))
    }

    fn from_bases(b: &[LocalBasis; 3]) -> Self {
        let mut p = Self::computational();
        for (j, basis) in b.iter().enumerate() {
            let (t, f) = basis.angles();
            p.theta[j] = t;
            p.phi[j] = f;
        }
        p
    }

    /// Weight of `s` on the two- and three-excitation kets of this basis.
    pub fn excitation_weight(&self, s: &PureState) -> Result<f64> {
        s.require_three_qubit()?;
        Ok(high_weight(&rotated_coeffs(s.amps(), &self.bases())))
    }
}

/// Orthonormal qubit basis `(|0'⟩, |1'⟩)`.
#[derive(Clone, Copy, Debug)]
struct LocalBasis {
    ground: [C64; 2],
    excited: [C64; 2],
}

impl LocalBasis {
    fn from_ground(g: [C64; 2]) -> Self {
        Self { ground: g, excited: [-g[1].conj(), g[0].conj()] }
    }

    fn from_angles(theta: f64, phi: f64) -> Self {
        Self::from_ground([C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)])
    }

    fn angles(&self) -> (f64, f64) {
        let theta = 2.0 * self.ground[0].norm().clamp(0.0, 1.0).acos();
        let phi = if self.ground[1].norm() < 1e-15 {
            0.0
        } else {
            (self.ground[1].arg() - self.ground[0].arg()).rem_euclid(2.0 * PI)
        };
        (theta, phi)
    }

    fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let v = linalg::random_unit_vector(rng, 2);
        Self::from_ground([v[0], v[1]])
    }

    /// Coordinates `(⟨0'|x⟩, ⟨1'|x⟩)`.
    fn project(&self, x: [C64; 2]) -> [C64; 2] {
        [
            self.ground[0].conj() * x[0] + self.ground[1].conj() * x[1],
            self.excited[0].conj() * x[0] + self.excited[1].conj() * x[1],
        ]
    }
}

/// Coefficients `c[i'j'k']` of `amps` (three qubits, flat index `4i+2j+k`).
fn rotated_coeffs(amps: &[C64], b: &[LocalBasis; 3]) -> [C64; 8] {
    let mut c: [C64; 8] = std::array::from_fn(|i| amps[i]);
    for (party, basis) in b.iter().enumerate() {
        let stride = 4 >> party;
        for flat in 0..8 {
            if flat & stride == 0 {
                let out = basis.project([c[flat], c[flat | stride]]);
                c[flat] = out[0];
                c[flat | stride] = out[1];
            }
        }
    }
    c
}

fn high_weight(c: &[C64; 8]) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(i, _)| i.count_ones() >= 2)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Eigenvector of `[[a, b], [b*, d]]` for its smaller eigenvalue, with that
/// eigenvalue.
fn min_eigvec(a: f64, b: C64, d: f64) -> ([C64; 2], f64) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let lam = mean - r;
    if b.norm() <= 1e-300 {
        let v = if a <= d { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] };
        return (v, a.min(d));
    }
    // Two algebraically equivalent null vectors of H − λ; keep the larger.
    let v1 = [b, C64::new(lam - a, 0.0)];
    let v2 = [C64::new(lam - d, 0.0), b.conj()];
    let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    ([v[0] / n, v[1] / n], lam)
}

/// Exact minimization over the basis of `party` with the others fixed.
/// Returns the updated basis and the objective value it achieves.
fn solve_party(amps: &[C64], bases: &[LocalBasis; 3], party: usize) -> (LocalBasis, f64) {
    // Rotate every party except `party`; keep `party` in the computational basis.
    let mut partial = *bases;
    partial[party] = LocalBasis { ground: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)], excited: [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] };
    let c = rotated_coeffs(amps, &partial);
    let stride = 4 >> party;
    let (mut h00, mut h01, mut h11, mut constant) = (0.0, C64::new(0.0, 0.0), 0.0, 0.0);
    for flat in 0..8 {
        if flat & stride != 0 {
            continue;
        }
        let others = (flat as u32).count_ones();
        let x0 = c[flat];
        let x1 = c[flat | stride];
        match others {
            1 => {
                h00 += x0.norm_sqr();
                h11 += x1.norm_sqr();
                h01 += x0 * x1.conj();
            }
            2 => constant += x0.norm_sqr() + x1.norm_sqr(),
            _ => {}
        }
    }
    // The excited vector minimizes ⟨1'|H|1'⟩.
    let (e, lam) = min_eigvec(h00, h01, h11);
    let basis = LocalBasis { ground: [-e[1].conj(), e[0].conj()], excited: e };
    (basis, constant + lam.max(0.0))
}

struct WStart {
    weight: f64,
    bases: [LocalBasis; 3],
    iterations: usize,
    converged: bool,
}

fn run_w_start(s: &PureState, cfg: &OptConfig, i: usize) -> WStart {
    let mut bases = if i == 0 {
        WBasisParam::computational().bases()
    } else {
        let mut rng = cfg.start_source(i).rng();
        std::array::from_fn(|_| LocalBasis::random(&mut rng))
    };
    let mut prev = high_weight(&rotated_coeffs(s.amps(), &bases));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        for party in 0..3 {
            let (b, _) = solve_party(s.amps(), &bases, party);
            bases[party] = b;
        }
        let cur = high_weight(&rotated_coeffs(s.amps(), &bases));
        let gain = prev - cur;
        prev = cur.min(prev);
        if gain.abs() < cfg.conv_tol {
            converged = true;
            break;
        }
    }
    WStart { weight: prev, bases, iterations, converged }
}

/// Number of starts used by [`e_w`] for a given configuration.
pub fn w_starts(cfg: &OptConfig) -> usize {
    2 * cfg.n_starts
}

/// `E(s, S_W)` with the optimal local basis.
pub fn e_w_detailed(s: &PureState, cfg: &OptConfig) -> Result<(MeasureResult, WBasisParam)> {
    cfg.validate()?;
    s.require_three_qubit()?;
    let s = s.normalized_for("e_w")?;
    let starts = par::map(w_starts(cfg), cfg.parallel, |i| run_w_start(&s, cfg, i));
    let best_idx = starts
        .iter()
        .enumerate()
        .fold(0, |b, (i, o)| if o.weight < starts[b].weight { i } else { b });
    let best = &starts[best_idx];
    let agreeing = starts.iter().filter(|o| o.weight <= best.weight + AGREEMENT_TOL).count();
    if !best.converged {
        log::debug!("e_w: best start did not converge in {} sweeps", cfg.max_iters);
    }

    // Witness: projection onto the ≤1-excitation span, back in the
    // computational basis.
    let c = rotated_coeffs(s.amps(), &best.bases);
    let mut low = [C64::new(0.0, 0.0); 8];
    for (flat, z) in c.iter().enumerate() {
        if flat.count_ones() <= 1 {
            low[flat] = *z;
        }
    }
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    for (flat, z) in low.iter().enumerate() {
        if *z == C64::new(0.0, 0.0) {
            continue;
        }
        for (out, slot) in amps.iter_mut().enumerate() {
            let mut w = *z;
            for party in 0..3 {
                let stride = 4 >> party;
                let basis = &best.bases[party];
                let v = if flat & stride == 0 { basis.ground } else { basis.excited };
                w *= v[usize::from(out & stride != 0)];
            }
            *slot += w;
        }
    }
    let witness = match PureState::new(vec![2, 2, 2], amps)?.normalize() {
        Ok(w) => w,
        // No weight below two excitations: any basis ket of the span will do.
        Err(Error::ZeroState) => PureState::basis(vec![2, 2, 2], &[0, 0, 0])?,
        Err(e) => return Err(e),
    };
    let e = 1.0 - s.overlap_sqr(&witness)?;
    let result = MeasureResult::new(e.min(best.weight.max(0.0)).max(0.0), witness, agreeing, best.iterations, best.converged);
    Ok((result, WBasisParam::from_bases(&best.bases)))
}

/// `E(s, S_W)` for a three-qubit state.
pub fn e_w(s: &PureState, cfg: &OptConfig) -> Result<MeasureResult> {
    e_w_detailed(s, cfg).map(|r| r.0)
}

/// `E(s, S_GHZ)`. The GHZ closure is the whole state space, so this is
/// identically zero.
pub fn e_ghz_set(s: &PureState) -> Result<f64> {
    s.require_three_qubit()?;
    Ok(0.0)
}

/// Parameters of `φ(ε) ∝ (|γ₁γ₂γ₃⟩ − |α₁α₂α₃⟩)/ε` with `|γ_j⟩ = |α_j⟩ + ε|β_j⟩`.
#[derive(Clone, Debug)]
pub struct GhzSequenceParam {
    pub epsilon: f64,
    pub alphas: [[C64; 2]; 3],
    pub betas: [[C64; 2]; 3],
}

impl GhzSequenceParam {
    /// `α_j = |0⟩`, `β_j = |1⟩`, whose limit is the W state.
    pub fn standard(epsilon: f64) -> Self {
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        Self { epsilon, alphas: [zero; 3], betas: [one; 3] }
    }

    /// The ε → 0 limit `|β₁α₂α₃⟩ + |α₁β₂α₃⟩ + |α₁α₂β₃⟩`, normalized.
    pub fn limit_state(&self) -> Result<PureState> {
        let mut amps = vec![C64::new(0.0, 0.0); 8];
        for j in 0..3 {
            let vs: [[C64; 2]; 3] = std::array::from_fn(|k| if k == j { self.betas[k] } else { self.alphas[k] });
            add_product(&mut amps, &vs, C64::new(1.0, 0.0));
        }
        PureState::new(vec![2, 2, 2], amps)?.normalize()
    }
}

fn add_product(amps: &mut [C64], vs: &[[C64; 2]; 3], coeff: C64) {
    for (flat, a) in amps.iter_mut().enumerate() {
        *a += coeff * vs[0][flat >> 2] * vs[1][(flat >> 1) & 1] * vs[2][flat & 1];
    }
}

/// GHZ-class state `φ(ε)`, normalized.
pub fn ghz_eps_state(p: &GhzSequenceParam) -> Result<PureState> {
    if p.epsilon.is_nan() || p.epsilon <= 0.0 {
        return Err(Error::Domain(format!("epsilon must be positive, got {}", p.epsilon)));
    }
    for j in 0..3 {
        let (a, b) = (&p.alphas[j], &p.betas[j]);
        let na = linalg::norm(a);
        let nb = linalg::norm(b);
        if na < 1e-14 || nb < 1e-14 || linalg::vdot(a, b).norm() >= na * nb * (1.0 - 1e-12) {
            return Err(Error::Domain(format!("beta_{j} must be nonzero and not parallel to alpha_{j}")));
        }
    }
    let eps = p.epsilon;
    let gammas: [[C64; 2]; 3] = std::array::from_fn(|j| [p.alphas[j][0] + p.betas[j][0] * eps, p.alphas[j][1] + p.betas[j][1] * eps]);
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    add_product(&mut amps, &gammas, C64::new(1.0 / eps, 0.0));
    add_product(&mut amps, &p.alphas, C64::new(-1.0 / eps, 0.0));
    PureState::new(vec![2, 2, 2], amps)?.normalize()
}
