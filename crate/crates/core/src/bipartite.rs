//! Schmidt decomposition across a bipartition and the closed-form measures
//! for bounded Schmidt rank.
//!
//! For a cut `L|R` the set `S_k` of states with Schmidt rank at most `k` is
//! SLOCC invariant, and
//!
//! ```text
//! E(ψ, S_k) = 1 − (λ↓₁ + … + λ↓_k)
//! ```
//!
//! where `λ↓` are the Schmidt coefficients (squared singular values of the
//! reshaped amplitude matrix) in decreasing order. The maximum overlap is
//! attained by truncating the Schmidt sum to its `k` largest terms. With
//! `k = 1` and three qubits this yields the cut measures `S_{A-BC}`,
//! `S_{B-AC}` and `S_{AB-C}`.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::linalg;
use crate::state::PureState;
use crate::{Error, Result};

/// Coefficients below this are treated as zero when counting Schmidt rank.
pub const SCHMIDT_RANK_TOL: f64 = 1e-8;

/// A bipartition of the parties into a nonempty proper subset and its
/// complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cut {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Cut {
    pub fn new(left: &[usize], n_parties: usize) -> Result<Self> {
        let mut l = left.to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() != left.len() || l.is_empty() || l.len() >= n_parties || l.iter().any(|&k| k >= n_parties) {
            return Err(Error::Shape(format!(
                "{left:?} is not a nonempty proper subset of {n_parties} parties"
            )));
        }
        let right = (0..n_parties).filter(|k| !l.contains(k)).collect();
        Ok(Self { left: l, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn n_parties(&self) -> usize {
        self.left.len() + self.right.len()
    }

    fn check(&self, s: &PureState) -> Result<()> {
        if self.n_parties() != s.n_parties() {
            return Err(Error::Shape(format!("cut {self} on a {}-party state", s.n_parties())));
        }
        Ok(())
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |v: &[usize]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(if v.iter().any(|&k| k > 9) { "." } else { "" });
        write!(f, "{}|{}", side(&self.left), side(&self.right))
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Schmidt coefficients λ↓, descending, summing to one. One entry per
    /// term of the full decomposition (`min(d_L, d_R)` entries, trailing
    /// zeros included).
    pub lambdas: Vec<f64>,
    pub left_basis: Vec<Vec<C64>>,
    pub right_basis: Vec<Vec<C64>>,
}

impl SchmidtDecomposition {
    /// Number of coefficients above [`SCHMIDT_RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.lambdas.iter().filter(|&&l| l > SCHMIDT_RANK_TOL).count()
    }

    /// `λ↓₁ + … + λ↓_k`.
    pub fn head_sum(&self, k: usize) -> f64 {
        self.lambdas.iter().take(k).sum()
    }

    /// `Σ_{i<k} √λ_i |l_i⟩⊗|r_i⟩` laid back out over the original parties.
    pub fn truncated_state(&self, dims: &[usize], cut: &Cut, k: usize) -> Result<PureState> {
        let rows = self.left_basis.first().map_or(0, |v| v.len());
        let cols = self.right_basis.first().map_or(0, |v| v.len());
        let mut m = vec![C64::new(0.0, 0.0); rows * cols];
        for i in 0..k.min(self.lambdas.len()) {
            let w = self.lambdas[i].sqrt();
            for (a, la) in self.left_basis[i].iter().enumerate() {
                for (b, rb) in self.right_basis[i].iter().enumerate() {
                    m[a * cols + b] += la * rb * w;
                }
            }
        }
        embed(dims, cut, cols, &m)
    }
}

/// Inverse of [`PureState::bipartite_matrix`]: scatters a row-major
/// `rows × cols` matrix back onto the tensor layout.
fn embed(dims: &[usize], cut: &Cut, cols: usize, m: &[C64]) -> Result<PureState> {
    let mut s = PureState::zeros(dims.to_vec())?;
    for flat in 0..s.len() {
        let idx = s.multi_index(flat);
        let row = cut.left.iter().fold(0, |acc, &k| acc * dims[k] + idx[k]);
        let col = cut.right.iter().fold(0, |acc, &k| acc * dims[k] + idx[k]);
        s.amps_mut()[flat] = m[row * cols + col];
    }
    Ok(s)
}

pub fn schmidt(s: &PureState, cut: &Cut) -> Result<SchmidtDecomposition> {
    cut.check(s)?;
    let m = s.bipartite_matrix(&cut.left)?;
    let d = linalg::svd(&m)?;
    let total: f64 = d.s.iter().map(|x| x * x).sum();
    if total <= 1e-28 {
        return Err(Error::ZeroState);
    }
    let lambdas = d.s.iter().map(|x| x * x / total).collect();
    let r = d.s.len();
    Ok(SchmidtDecomposition {
        lambdas,
        left_basis: (0..r).map(|i| d.u.column(i)).collect(),
        right_basis: (0..r).map(|i| d.v.column(i).iter().map(|z| z.conj()).collect()).collect(),
    })
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("Schmidt rank bound k must be at least 1".into()));
    }
    Ok(())
}

/// `E(ψ, S_k) = 1 − Σ_{i≤k} λ↓_i` across `cut`.
pub fn e_rank_k(s: &PureState, cut: &Cut, k: usize) -> Result<f64> {
    check_k(k)?;
    let sd = schmidt(s, cut)?;
    Ok(e_from_schmidt(&sd, k))
}

pub(crate) fn e_from_schmidt(sd: &SchmidtDecomposition, k: usize) -> f64 {
    if k >= sd.lambdas.len() {
        return 0.0;
    }
    (1.0 - sd.head_sum(k)).clamp(0.0, 1.0)
}

/// The closest state of Schmidt rank at most `k`: the normalized truncation
/// to the `k` largest Schmidt terms. Ties keep the lowest SVD index.
pub fn closest_rank_k(s: &PureState, cut: &Cut, k: usize) -> Result<PureState> {
    check_k(k)?;
    let sd = schmidt(s, cut)?;
    sd.truncated_state(s.dims(), cut, k)?.normalize()
}

/// `d = √(2(1 − √(1 − E)))`.
pub fn d_from_e(e: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&e) || e.is_nan() {
        return Err(Error::Domain(format!("E = {e} outside [0, 1]")));
    }
    let e = e.clamp(0.0, 1.0);
    // 1 − √(1 − E) written without cancellation near E = 0.
    let gap = e / (1.0 + (1.0 - e).sqrt());
    Ok((2.0 * gap).sqrt())
}

/// Inverse of [`d_from_e`]: `E = 1 − (1 − d²/2)²`.
pub fn e_from_d(d: f64) -> Result<f64> {
    let max = std::f64::consts::SQRT_2;
    if !(-1e-12..=max + 1e-12).contains(&d) || d.is_nan() {
        return Err(Error::Domain(format!("d = {d} outside [0, √2]")));
    }
    let h = d.clamp(0.0, max).powi(2) / 2.0;
    Ok((h * (2.0 - h)).clamp(0.0, 1.0))
}

/// Bipartite LOCC criterion: `ψ` can be converted into the ensemble
/// `{(p_i, ψ_i)}` iff `E(ψ, S_k) ≥ Σ p_i E(ψ_i, S_k)` for every `k`.
pub fn locc_convertible(initial: &PureState, targets: &[(f64, PureState)], cut: &Cut) -> Result<bool> {
    let p_total: f64 = targets.iter().map(|t| t.0).sum();
    if targets.is_empty() || targets.iter().any(|t| t.0 < 0.0) || (p_total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("target probabilities must be nonnegative and sum to 1".into()));
    }
    let from = schmidt(&initial.normalize()?, cut)?;
    let to = targets
        .iter()
        .map(|(p, s)| Ok((*p, schmidt(&s.normalize()?, cut)?)))
        .collect::<Result<Vec<_>>>()?;
    let kmax = from.lambdas.len();
    Ok((1..=kmax).all(|k| {
        let avg: f64 = to.iter().map(|(p, sd)| p * e_from_schmidt(sd, k)).sum();
        e_from_schmidt(&from, k) >= avg - 1e-12
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, ginibre, RandomSource};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn psi_t1() -> PureState {
        let mut s = PureState::zeros(vec![2, 2, 2]).unwrap();
        s.amps_mut()[0] = c(3.0);
        s.amps_mut()[7] = c(1.0);
        s.normalize().unwrap()
    }

    /// Diagonal two-qutrit state with the given Schmidt coefficients.
    fn diag_state(lambdas: &[f64]) -> PureState {
        let d = lambdas.len();
        let mut s = PureState::zeros(vec![d, d]).unwrap();
        for (i, l) in lambdas.iter().enumerate() {
            s.amps_mut()[i * d + i] = c(l.sqrt());
        }
        s
    }

    #[test]
    fn schmidt_examples() {
        let a = Cut::new(&[0], 3).unwrap();
        let sd = schmidt(&psi_t1(), &a).unwrap();
        assert!((sd.lambdas[0] - 0.9).abs() < 1e-14 && (sd.lambdas[1] - 0.1).abs() < 1e-14);

        let prod = PureState::basis(vec![2, 2, 2], &[0, 1, 0]).unwrap();
        let sd = schmidt(&prod, &a).unwrap();
        assert!((sd.lambdas[0] - 1.0).abs() < 1e-15);
        assert_eq!(sd.rank(), 1);

        let sd = schmidt(&PureState::w(3), &a).unwrap();
        assert!((sd.lambdas[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((sd.lambdas[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn schmidt_reconstructs() {
        let mut rng = RandomSource::new(21).rng();
        for dims in [vec![2, 2, 2], vec![3, 2, 2], vec![2, 4]] {
            let s = PureState::random(dims.clone(), &mut rng).unwrap();
            let cut = Cut::new(&[dims.len() - 1], dims.len()).unwrap();
            let sd = schmidt(&s, &cut).unwrap();
            let sum: f64 = sd.lambdas.iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
            let back = sd.truncated_state(&dims, &cut, usize::MAX).unwrap();
            let err = back.amps().iter().zip(s.amps()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn invalid_cuts() {
        assert!(Cut::new(&[], 3).is_err());
        assert!(Cut::new(&[0, 1, 2], 3).is_err());
        assert!(Cut::new(&[3], 3).is_err());
        let cut = Cut::new(&[0], 2).unwrap();
        assert!(matches!(schmidt(&psi_t1(), &cut), Err(Error::Shape(_))));
        assert_eq!(Cut::new(&[2, 0], 3).unwrap().to_string(), "02|1");
    }

    #[test]
    fn e_rank_k_examples() {
        let s = diag_state(&[0.5, 0.3, 0.2]);
        let cut = Cut::new(&[0], 2).unwrap();
        assert!((e_rank_k(&s, &cut, 1).unwrap() - 0.5).abs() < 1e-14);
        assert!((e_rank_k(&s, &cut, 2).unwrap() - 0.2).abs() < 1e-14);
        assert_eq!(e_rank_k(&s, &cut, 3).unwrap(), 0.0);
        assert!(matches!(e_rank_k(&s, &cut, 0), Err(Error::Domain(_))));

        let ab_c = Cut::new(&[0, 1], 3).unwrap();
        assert!((e_rank_k(&psi_t1(), &ab_c, 1).unwrap() - 0.1).abs() < 1e-14);

        let bell = PureState::ghz(2);
        assert!((e_rank_k(&bell, &Cut::new(&[0], 2).unwrap(), 1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn closest_rank_k_examples() {
        let cut = Cut::new(&[0], 3).unwrap();
        let s = psi_t1();
        let full = closest_rank_k(&s, &cut, 2).unwrap();
        assert!((s.overlap_sqr(&full).unwrap() - 1.0).abs() < 1e-12);

        let phi = closest_rank_k(&s, &cut, 1).unwrap();
        let ket = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        assert!((phi.overlap_sqr(&ket).unwrap() - 1.0).abs() < 1e-12);

        let q = diag_state(&[0.5, 0.3, 0.2]);
        let cut2 = Cut::new(&[0], 2).unwrap();
        let phi = closest_rank_k(&q, &cut2, 2).unwrap();
        assert!((q.overlap_sqr(&phi).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(schmidt(&phi, &cut2).unwrap().rank(), 2);
    }

    #[test]
    fn degenerate_tie_break_is_deterministic() {
        let q = diag_state(&[0.4, 0.3, 0.3]);
        let cut = Cut::new(&[0], 2).unwrap();
        let a = closest_rank_k(&q, &cut, 2).unwrap();
        let b = closest_rank_k(&q, &cut, 2).unwrap();
        assert_eq!(a, b);
        assert!((q.overlap_sqr(&a).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn d_e_examples() {
        assert_eq!(d_from_e(0.0).unwrap(), 0.0);
        assert!((d_from_e(1.0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((d_from_e(0.75).unwrap() - 1.0).abs() < 1e-12);
        assert!(d_from_e(1.5).is_err());
        assert!(d_from_e(-0.1).is_err());
        assert!(e_from_d(2.0).is_err());
        assert!((e_from_d(1.0).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rank_k_matches_reduced_spectrum() {
        let mut rng = RandomSource::new(31).rng();
        for t in 0..200 {
            let dl = 2 + t % 3;
            let dr = 2 + (t / 3) % 3;
            let s = PureState::random(vec![dl, dr], &mut rng).unwrap();
            let cut = Cut::new(&[0], 2).unwrap();
            let side = if t % 2 == 0 { vec![0] } else { vec![1] };
            let (ev, _) = eig_hermitian(&s.reduced_density(&side).unwrap()).unwrap();
            for k in 1..=dl.min(dr) {
                let oracle = 1.0 - ev.iter().take(k).sum::<f64>();
                assert!((e_rank_k(&s, &cut, k).unwrap() - oracle.max(0.0)).abs() < 1e-10);
            }
            let chain: Vec<f64> = (1..=dl.min(dr)).map(|k| e_rank_k(&s, &cut, k).unwrap()).collect();
            assert!(chain.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn overlap_bound_holds_for_random_rank_k_states() {
        let mut rng = RandomSource::new(41).rng();
        for t in 0..200 {
            let d = 3 + t % 2;
            let k = 1 + t % (d - 1);
            let psi = PureState::random(vec![d, d], &mut rng).unwrap();
            let a = &ginibre(&mut rng, d, k) * &ginibre(&mut rng, k, d);
            let phi = PureState::new(vec![d, d], a.data().to_vec()).unwrap().normalize().unwrap();
            let cut = Cut::new(&[0], 2).unwrap();
            let bound = schmidt(&psi, &cut).unwrap().head_sum(k);
            assert!(psi.overlap_sqr(&phi).unwrap() <= bound + 1e-9);
        }
    }

    #[test]
    fn convertibility_examples() {
        let cut = Cut::new(&[0], 2).unwrap();
        let bell = PureState::ghz(2);
        let prod = PureState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert!(locc_convertible(&bell, &[(1.0, prod.clone())], &cut).unwrap());
        assert!(!locc_convertible(&prod, &[(1.0, bell.clone())], &cut).unwrap());
        // Nielsen majorization: (0.5,0.3,0.2) → (0.6,0.3,0.1) allowed, reverse not.
        let a = diag_state(&[0.5, 0.3, 0.2]);
        let b = diag_state(&[0.6, 0.3, 0.1]);
        assert!(locc_convertible(&a, &[(1.0, b.clone())], &cut).unwrap());
        assert!(!locc_convertible(&b, &[(1.0, a.clone())], &cut).unwrap());
        // Incomparable pair: (0.5,0.25,0.25) vs (0.4,0.4,0.2).
        let x = diag_state(&[0.5, 0.25, 0.25]);
        let y = diag_state(&[0.4, 0.4, 0.2]);
        assert!(!locc_convertible(&x, &[(1.0, y.clone())], &cut).unwrap());
        assert!(!locc_convertible(&y, &[(1.0, x)], &cut).unwrap());
    }
}
