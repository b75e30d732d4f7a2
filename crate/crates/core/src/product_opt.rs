//! Nearest product state by multi-start alternating maximization.
//!
//! With all factors but one held fixed, the overlap `|⟨φ₁⊗…⊗φ_p|ψ⟩|` is
//! maximized by setting the free factor to the normalized contraction of
//! `ψ` against the conjugates of the others. Sweeping over parties never
//! decreases the objective, so each start converges to a local maximum;
//! independent random starts guard against poor local extrema.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::bipartite::d_from_e;
use crate::linalg::{self, RandomSource};
use crate::par;
use crate::state::PureState;
use crate::{Error, Result};

/// Starts whose objective lies within this of the best count as agreeing.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub conv_tol: f64,
    pub seed: u64,
    /// Run starts on the rayon pool (no effect without the `parallel`
    /// feature).
    pub parallel: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { n_starts: 32, max_iters: 500, conv_tol: 1e-12, seed: 0, parallel: true }
    }
}

impl OptConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_starts(self, n_starts: usize) -> Self {
        Self { n_starts, ..self }
    }

    pub fn sequential(self) -> Self {
        Self { parallel: false, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidInput("n_starts must be at least 1".into()));
        }
        if self.conv_tol.is_nan() || self.conv_tol <= 0.0 {
            return Err(Error::InvalidInput("conv_tol must be positive".into()));
        }
        Ok(())
    }

    /// Random stream for start `i`.
    pub fn start_source(&self, i: usize) -> RandomSource {
        RandomSource::new(self.seed).with_stream(i as u64)
    }
}

/// Value of a geometric measure together with the optimizing state.
#[derive(Clone, Debug)]
pub struct MeasureResult {
    pub e_value: f64,
    pub d_value: f64,
    /// A member of the target set attaining (or estimating) the maximum
    /// overlap.
    pub witness: PureState,
    pub starts_agreeing: usize,
    pub iterations: usize,
    /// False when the best start hit `max_iters` before converging.
    pub converged: bool,
}

impl MeasureResult {
    pub(crate) fn new(e_value: f64, witness: PureState, starts_agreeing: usize, iterations: usize, converged: bool) -> Self {
        let e_value = e_value.clamp(0.0, 1.0);
        let d_value = d_from_e(e_value).expect("clamped into [0,1]");
        Self { e_value, d_value, witness, starts_agreeing, iterations, converged }
    }

    /// Closed-form result: no optimization involved.
    pub(crate) fn exact(e_value: f64, witness: PureState) -> Self {
        Self::new(e_value, witness, 1, 0, true)
    }
}

/// Contraction of `s` with the conjugates of every factor except `party`.
fn environment(s: &PureState, factors: &[Vec<C64>], party: usize) -> Vec<C64> {
    let dims = s.dims();
    let mut out = vec![C64::new(0.0, 0.0); dims[party]];
    let mut idx = vec![0usize; dims.len()];
    for &a in s.amps() {
        let mut w = a;
        for (k, f) in factors.iter().enumerate() {
            if k != party {
                w *= f[idx[k]].conj();
            }
        }
        out[idx[party]] += w;
        // odometer, last party fastest
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// `|⟨φ₁⊗…⊗φ_p|s⟩|²` for unit factors.
pub fn product_overlap_sqr(s: &PureState, factors: &[Vec<C64>]) -> f64 {
    let env = environment(s, factors, 0);
    linalg::vdot(&factors[0], &env).norm_sqr()
}

/// One alternating pass over all parties, updating `factors` in place.
/// Returns the squared overlap after the pass. A factor whose environment
/// vanishes is redrawn at random from `rng`.
pub fn sweep_once<R: Rng + ?Sized>(s: &PureState, factors: &mut [Vec<C64>], rng: &mut R) -> f64 {
    let mut last = 0.0;
    for party in 0..factors.len() {
        let env = environment(s, factors, party);
        let n = linalg::norm(&env);
        if n < 1e-300 {
            factors[party] = linalg::random_unit_vector(rng, env.len());
            last = 0.0;
            continue;
        }
        factors[party] = env.iter().map(|z| z / n).collect();
        last = n * n;
    }
    last
}

struct StartOutcome {
    overlap: f64,
    factors: Vec<Vec<C64>>,
    iterations: usize,
    converged: bool,
}

fn run_start(s: &PureState, cfg: &OptConfig, i: usize) -> StartOutcome {
    let mut rng = cfg.start_source(i).rng();
    let mut factors: Vec<Vec<C64>> = s.dims().iter().map(|&d| linalg::random_unit_vector(&mut rng, d)).collect();
    let mut prev = product_overlap_sqr(s, &factors);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let cur = sweep_once(s, &mut factors, &mut rng);
        let gain = cur - prev;
        prev = cur;
        if gain.abs() < cfg.conv_tol {
            converged = true;
            break;
        }
    }
    StartOutcome { overlap: prev, factors, iterations, converged }
}

/// Estimates `E(s, S_product)` and returns the best product state found.
///
/// The estimate can only err upward (a missed global maximum leaves a
/// smaller overlap), so the reported value is an upper bound on the exact
/// measure up to rounding.
pub fn nearest_product(s: &PureState, cfg: &OptConfig) -> Result<MeasureResult> {
    cfg.validate()?;
    let s = s.normalized_for("nearest_product")?;
    let starts = par::map(cfg.n_starts, cfg.parallel, |i| run_start(&s, cfg, i));
    let best_idx = starts
        .iter()
        .enumerate()
        .fold(0, |b, (i, o)| if o.overlap > starts[b].overlap { i } else { b });
    let best = &starts[best_idx];
    let agreeing = starts.iter().filter(|o| o.overlap >= best.overlap - AGREEMENT_TOL).count();
    if !best.converged {
        log::warn!("nearest_product: best start did not converge in {} sweeps", cfg.max_iters);
    }
    let witness = PureState::product(&best.factors)?;
    Ok(MeasureResult::new(1.0 - best.overlap, witness, agreeing, best.iterations, best.converged))
}

/// Squared overlaps reached by every start, in start order. Diagnostic for
/// multi-start stability.
pub fn start_overlaps(s: &PureState, cfg: &OptConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let s = s.normalized_for("start_overlaps")?;
    Ok(par::map(cfg.n_starts, cfg.parallel, |i| run_start(&s, cfg, i).overlap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::{e_rank_k, Cut};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn psi_t1() -> PureState {
        let mut s = PureState::zeros(vec![2, 2, 2]).unwrap();
        s.amps_mut()[0] = c(3.0);
        s.amps_mut()[7] = c(1.0);
        s.normalize().unwrap()
    }

    fn phi_t2() -> PureState {
        let beta = [c(1.0 / 5f64.sqrt()), c(2.0 / 5f64.sqrt())];
        let mut s = PureState::zeros(vec![2, 2, 2]).unwrap();
        for (flat, a) in s.amps_mut().iter_mut().enumerate() {
            *a = -beta[flat >> 2] * beta[(flat >> 1) & 1] * beta[flat & 1];
        }
        s.amps_mut()[0] += c(1.0);
        s.normalize().unwrap()
    }

    /// Brute-force grid over two Bloch angles per qubit. Independent of the
    /// alternating update.
    fn grid_max_overlap(s: &PureState, n: usize) -> f64 {
        let qubit = |t: f64, p: f64| vec![c((t / 2.0).cos()), C64::from_polar((t / 2.0).sin(), p)];
        let grid: Vec<Vec<C64>> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (PI * i as f64 / (n - 1) as f64, 2.0 * PI * j as f64 / n as f64)))
            .map(|(t, p)| qubit(t, p))
            .collect();
        let mut best: f64 = 0.0;
        // Global phase freedom lets the first qubit's azimuth be fixed at 0.
        for a in grid.iter().step_by(n) {
            for b in &grid {
                for v in &grid {
                    let f = [a.clone(), b.clone(), v.clone()];
                    best = best.max(product_overlap_sqr(s, &f));
                }
            }
        }
        best
    }

    #[test]
    fn ghz_matches_grid_oracle() {
        let g = PureState::ghz(3);
        let oracle = 1.0 - grid_max_overlap(&g, 24);
        assert!((oracle - 0.5).abs() < 1e-9, "grid oracle {oracle}");
        let r = nearest_product(&g, &OptConfig::default()).unwrap();
        assert!((r.e_value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn table_states() {
        let cfg = OptConfig::default();
        let r = nearest_product(&psi_t1(), &cfg).unwrap();
        assert!((r.e_value - 0.1).abs() < 1e-9);
        let r = nearest_product(&phi_t2(), &cfg).unwrap();
        assert!((r.e_value - 0.5143).abs() < 5e-5, "{}", r.e_value);
        let oracle = 1.0 - grid_max_overlap(&phi_t2(), 30);
        assert!(r.e_value <= oracle + 1e-12);
    }

    #[test]
    fn witness_is_product_and_consistent() {
        let r = nearest_product(&phi_t2(), &OptConfig::default()).unwrap();
        for k in 0..3 {
            let cut = Cut::new(&[k], 3).unwrap();
            assert!(e_rank_k(&r.witness, &cut, 1).unwrap() < 1e-12);
        }
        let ov = phi_t2().overlap_sqr(&r.witness).unwrap();
        assert!((1.0 - ov - r.e_value).abs() < 1e-12);
        assert!((r.d_value - d_from_e(r.e_value).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sweep_fixed_point() {
        let s = psi_t1();
        let mut f = vec![vec![c(1.0), c(0.0)]; 3];
        let mut rng = RandomSource::new(0).rng();
        let ov = sweep_once(&s, &mut f, &mut rng);
        assert!((ov - 0.9).abs() < 1e-12);
        for v in &f {
            assert!((v[0] - c(1.0)).norm() < 1e-12 && v[1].norm() < 1e-12);
        }
    }

    #[test]
    fn product_input_converges_to_one() {
        let mut rng = RandomSource::new(3).rng();
        let target: Vec<Vec<C64>> = (0..3).map(|_| linalg::random_unit_vector(&mut rng, 2)).collect();
        let s = PureState::product(&target).unwrap();
        let mut f: Vec<Vec<C64>> = (0..3).map(|_| linalg::random_unit_vector(&mut rng, 2)).collect();
        let mut ov = 0.0;
        for _ in 0..5 {
            ov = sweep_once(&s, &mut f, &mut rng);
        }
        assert!((ov - 1.0).abs() < 1e-12);
        let r = nearest_product(&s, &OptConfig::default()).unwrap();
        assert!(r.e_value < 1e-9);
    }

    #[test]
    fn ghz_trace_is_monotone() {
        let s = PureState::ghz(3);
        let plus = vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)];
        let mut f = vec![plus; 3];
        let mut rng = RandomSource::new(0).rng();
        let mut prev = product_overlap_sqr(&s, &f);
        for _ in 0..50 {
            let cur = sweep_once(&s, &mut f, &mut rng);
            assert!(cur >= prev - 1e-14);
            prev = cur;
        }
    }

    #[test]
    fn zero_environment_restarts_factor() {
        // |000⟩ against start |1⟩|1⟩|1⟩: every environment vanishes at first.
        let s = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let mut f = vec![vec![c(0.0), c(1.0)]; 3];
        let mut rng = RandomSource::new(1).rng();
        for _ in 0..20 {
            sweep_once(&s, &mut f, &mut rng);
        }
        assert!((product_overlap_sqr(&s, &f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bipartite_cross_check() {
        let mut rng = RandomSource::new(77).rng();
        for t in 0..30 {
            let dims = vec![2 + t % 3, 2 + (t / 3) % 3];
            let s = PureState::random(dims, &mut rng).unwrap();
            let exact = e_rank_k(&s, &Cut::new(&[0], 2).unwrap(), 1).unwrap();
            let r = nearest_product(&s, &OptConfig::default().with_seed(t as u64)).unwrap();
            assert!((r.e_value - exact).abs() < 1e-6, "trial {t}: {} vs {exact}", r.e_value);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = OptConfig::default().with_seed(5);
        let a = nearest_product(&phi_t2(), &cfg).unwrap();
        let b = nearest_product(&phi_t2(), &cfg.clone().sequential()).unwrap();
        assert_eq!(a.e_value.to_bits(), b.e_value.to_bits());
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn config_validation() {
        assert!(nearest_product(&psi_t1(), &OptConfig::default().with_starts(0)).is_err());
        let bad = OptConfig { conv_tol: 0.0, ..OptConfig::default() };
        assert!(nearest_product(&psi_t1(), &bad).is_err());
    }
}
