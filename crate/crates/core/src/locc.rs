//! Local instruments, SLOCC action, and randomized checks that a measure is
//! nonincreasing on average under local measurements.
//!
//! A single-party instrument `{M_i}` with `Σ M_i†M_i = 1` maps `ψ` to
//! outcome `i` with probability `p_i = ‖(M_i⊗1)ψ‖²` and post-measurement
//! state `ψ_i = (M_i⊗1)ψ/√p_i`. An entanglement monotone satisfies
//! `E(ψ) ≥ Σ_i p_i E(ψ_i)`; the fuzz harness samples random states, parties
//! and instruments and records the margin of that inequality.

use rand::Rng;

use crate::classify::{self, SISetId};
use crate::linalg::{self, ComplexMatrix, RandomSource};
use crate::par;
use crate::product_opt::OptConfig;
use crate::state::{MeasurementOutcome, PureState};
use crate::{Error, Result};

/// Margin tolerance for measures with a closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Margin tolerance for optimized measures (their estimates err upward).
pub const OPTIMIZED_TOL: f64 = 5e-4;
/// Start multiplier used when re-running a trial that looked like a violation.
pub const RETRY_FACTOR: usize = 4;

/// Outcomes with probability below this are dropped.
const MIN_PROBABILITY: f64 = 1e-14;

pub fn apply_instrument(s: &PureState, party: usize, ms: &[ComplexMatrix]) -> Result<Vec<MeasurementOutcome>> {
    let d = *s
        .dims()
        .get(party)
        .ok_or_else(|| Error::Shape(format!("party {party} out of range")))?;
    if ms.is_empty() {
        return Err(Error::InvalidInstrument(f64::INFINITY));
    }
    if let Some(m) = ms.iter().find(|m| m.rows() != d || m.cols() != d) {
        return Err(Error::Shape(format!("{}x{} operator on a party of dimension {d}", m.rows(), m.cols())));
    }
    let residual = linalg::completeness_residual(ms);
    if residual > 1e-8 {
        return Err(Error::InvalidInstrument(residual));
    }
    let s = s.normalized_for("apply_instrument")?;
    let mut out = Vec::with_capacity(ms.len());
    for m in ms {
        let branch = s.apply_local(party, m)?;
        let p = branch.norm().powi(2);
        if p < MIN_PROBABILITY {
            continue;
        }
        out.push(MeasurementOutcome { probability: p, state: branch.normalize()? });
    }
    Ok(out)
}

/// `(A₁ ⊗ … ⊗ A_p) ψ`, normalized.
pub fn slocc_apply(s: &PureState, ops: &[ComplexMatrix]) -> Result<PureState> {
    if ops.len() != s.n_parties() {
        return Err(Error::Shape(format!("{} operators for {} parties", ops.len(), s.n_parties())));
    }
    let mut out = s.normalized_for("slocc_apply")?;
    for (party, op) in ops.iter().enumerate() {
        out = out.apply_local(party, op)?;
    }
    if out.norm() < 1e-14 {
        return Err(Error::Annihilated);
    }
    out.normalize()
}

/// Random invertible local operator `U · diag(e^{x₁}, …) · V` with Haar
/// `U`, `V` and `x_k` uniform in `[−spread, spread]`, so the condition
/// number is at most `e^{2·spread}`.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, dim: usize, spread: f64) -> ComplexMatrix {
    let u = linalg::haar_unitary(rng, dim);
    let v = linalg::haar_unitary(rng, dim);
    let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-spread..=spread).exp()).collect();
    &(&u * &ComplexMatrix::from_diag(&d)) * &v
}

#[derive(Clone, Debug, Default)]
pub struct FuzzReport {
    pub trials: usize,
    /// Trials whose margin stayed below `−tolerance` after the retry.
    pub violations: usize,
    /// Minimum over trials of `E(ψ) − Σ p_i E(ψ_i)` (after retries).
    pub worst_margin: f64,
    /// Indices of trials that needed a retry; trial `t` is reproduced by
    /// stream `t` under the report's base source.
    pub flagged: Vec<u64>,
    pub tolerance: f64,
    /// Largest `|Σ p_i − 1|` seen.
    pub max_probability_error: f64,
}

struct Trial {
    margin: f64,
    flagged: bool,
    prob_error: f64,
}

/// Fuzzes an arbitrary state function. `f` receives the state and the
/// optimizer configuration to use (a fresh seed per trial, more starts on
/// retry).
pub fn fuzz_with<F>(f: F, dims: &[usize], trials: usize, src: RandomSource, cfg: &OptConfig, tolerance: f64, retry: bool) -> Result<FuzzReport>
where
    F: Fn(&PureState, &OptConfig) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let run = |t: usize| -> Result<Trial> {
        let trial_src = src.child(t as u64);
        let mut rng = trial_src.rng();
        let s = PureState::random(dims.to_vec(), &mut rng)?;
        let party = rng.random_range(0..dims.len());
        let n_out = rng.random_range(2..=4);
        let ms = linalg::instrument_with(&mut rng, dims[party], n_out);
        let outcomes = apply_instrument(&s, party, &ms)?;
        let prob_error = (outcomes.iter().map(|o| o.probability).sum::<f64>() - 1.0).abs();

        // Values of f on ψ followed by each outcome.
        let values_with = |c: &OptConfig| -> Result<Vec<f64>> {
            std::iter::once(&s).chain(outcomes.iter().map(|o| &o.state)).map(|x| f(x, c)).collect()
        };
        let margin_of = |v: &[f64]| v[0] - outcomes.iter().zip(&v[1..]).map(|(o, e)| o.probability * e).sum::<f64>();
        let inner = OptConfig { seed: trial_src.child(0).seed, parallel: false, ..cfg.clone() };
        let mut values = values_with(&inner)?;
        let mut margin = margin_of(&values);
        let mut flagged = false;
        if retry && margin < -tolerance {
            flagged = true;
            // Optimized values only err upward, so keep the smaller estimate
            // of every term.
            let more = OptConfig { n_starts: cfg.n_starts * RETRY_FACTOR, seed: trial_src.child(1).seed, ..inner };
            for (v, w) in values.iter_mut().zip(values_with(&more)?) {
                *v = v.min(w);
            }
            margin = margin_of(&values);
        }
        Ok(Trial { margin, flagged, prob_error })
    };
    let results = par::map(trials, cfg.parallel, run);
    let mut report = FuzzReport { trials, worst_margin: f64::INFINITY, tolerance, ..Default::default() };
    for (t, r) in results.into_iter().enumerate() {
        let r = r?;
        report.worst_margin = report.worst_margin.min(r.margin);
        report.max_probability_error = report.max_probability_error.max(r.prob_error);
        if r.flagged {
            report.flagged.push(t as u64);
        }
        if r.margin < -tolerance {
            report.violations += 1;
        }
    }
    if !report.flagged.is_empty() {
        log::info!("fuzz: {} trial(s) re-optimized: {:?}", report.flagged.len(), report.flagged);
    }
    Ok(report)
}

/// Monotonicity fuzzing of the geometric measure for `measure` on states
/// with local dimensions `dims`.
pub fn monotonicity_fuzz(measure: &SISetId, dims: &[usize], trials: usize, src: RandomSource, cfg: &OptConfig) -> Result<FuzzReport> {
    measure.check_dims(dims)?;
    let tol = if measure.is_closed_form() { CLOSED_FORM_TOL } else { OPTIMIZED_TOL };
    fuzz_with(
        |s, c| classify::measure(s, measure, c).map(|r| r.e_value),
        dims,
        trials,
        src,
        cfg,
        tol,
        !measure.is_closed_form(),
    )
}

/// Weight on the last computational basis ket, `|⟨d−1…d−1|ψ⟩|²`. Not a
/// monotone: a local measurement can concentrate weight there. Used to check
/// that the fuzz harness detects violations.
pub fn corner_weight(s: &PureState) -> f64 {
    let n = s.norm();
    s.amps().last().map_or(0.0, |a| a.norm_sqr() / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Cut;
    use crate::wclass::e_w;
    use num_complex::Complex64 as C64;

    #[test]
    fn apply_instrument_examples() {
        let g = PureState::ghz(3);
        let u = linalg::random_unitary(2, RandomSource::new(3));
        let out = apply_instrument(&g, 1, std::slice::from_ref(&u)).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        assert!((out[0].state.overlap_sqr(&g.apply_local(1, &u).unwrap()).unwrap() - 1.0).abs() < 1e-12);

        let z = [ComplexMatrix::from_diag(&[1.0, 0.0]), ComplexMatrix::from_diag(&[0.0, 1.0])];
        let out = apply_instrument(&g, 0, &z).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0].probability - 0.5).abs() < 1e-15 && (out[1].probability - 0.5).abs() < 1e-15);
        assert_eq!(out[0].state, PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap());
        assert_eq!(out[1].state, PureState::basis(vec![2, 2, 2], &[1, 1, 1]).unwrap());

        let twice = [ComplexMatrix::identity(2), ComplexMatrix::identity(2)];
        assert!(matches!(apply_instrument(&g, 0, &twice), Err(Error::InvalidInstrument(_))));
    }

    #[test]
    fn zero_probability_outcomes_are_dropped() {
        let s = PureState::basis(vec![2, 2], &[0, 1]).unwrap();
        let z = [ComplexMatrix::from_diag(&[1.0, 0.0]), ComplexMatrix::from_diag(&[0.0, 1.0])];
        let out = apply_instrument(&s, 0, &z).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slocc_apply_examples() {
        let g = PureState::ghz(3);
        let id = vec![ComplexMatrix::identity(2); 3];
        assert_eq!(slocc_apply(&g, &id).unwrap(), g);

        let eps = 0.3;
        let ops = vec![ComplexMatrix::from_diag(&[1.0, eps]), ComplexMatrix::identity(2), ComplexMatrix::identity(2)];
        let out = slocc_apply(&g, &ops).unwrap();
        let n = (1.0 + eps * eps).sqrt();
        assert!((out.amps()[0] - C64::new(1.0 / n, 0.0)).norm() < 1e-15);
        assert!((out.amps()[7] - C64::new(eps / n, 0.0)).norm() < 1e-15);

        let kill = vec![ComplexMatrix::from_diag(&[0.0, 1.0]), ComplexMatrix::identity(2), ComplexMatrix::identity(2)];
        let zero = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        assert!(matches!(slocc_apply(&zero, &kill), Err(Error::Annihilated)));
        assert!(slocc_apply(&zero, &kill[..2]).is_err());
    }

    #[test]
    fn closed_form_cut_measure_is_monotone() {
        let cut = SISetId::Cut(Cut::new(&[0], 3).unwrap());
        let r = monotonicity_fuzz(&cut, &[2, 2, 2], 300, RandomSource::new(1), &OptConfig::default()).unwrap();
        assert_eq!(r.violations, 0, "worst margin {}", r.worst_margin);
        assert!(r.max_probability_error < 1e-10);
    }

    #[test]
    fn non_monotone_control_is_caught() {
        let f = |s: &PureState, _: &OptConfig| Ok(corner_weight(s));
        let r = fuzz_with(f, &[2, 2, 2], 300, RandomSource::new(2), &OptConfig::default(), CLOSED_FORM_TOL, false).unwrap();
        assert!(r.violations > 0);
    }

    #[test]
    fn product_inputs_have_zero_margin() {
        let f = |s: &PureState, _: &OptConfig| crate::bipartite::e_rank_k(s, &Cut::new(&[0], 3).unwrap(), 1);
        let s = PureState::basis(vec![2, 2, 2], &[0, 1, 0]).unwrap();
        let ms = linalg::random_instrument(2, 3, RandomSource::new(4));
        let out = apply_instrument(&s, 0, &ms).unwrap();
        let before = f(&s, &OptConfig::default()).unwrap();
        let after: f64 = out.iter().map(|o| o.probability * f(&o.state, &OptConfig::default()).unwrap()).sum();
        assert_eq!(before, 0.0);
        assert!(after.abs() < 1e-15);
    }

    #[test]
    fn w_closure_is_stochastically_invariant() {
        let mut rng = RandomSource::new(5).rng();
        let cfg = OptConfig::default();
        for _ in 0..10 {
            let ops: Vec<_> = (0..3).map(|_| random_invertible(&mut rng, 2, 1.0)).collect();
            let s = slocc_apply(&PureState::w(3), &ops).unwrap();
            assert!(e_w(&s, &cfg).unwrap().e_value < 1e-6);
        }
    }

    #[test]
    fn random_invertible_is_well_conditioned() {
        let mut rng = RandomSource::new(6).rng();
        for _ in 0..20 {
            let a = random_invertible(&mut rng, 2, 1.0);
            let s = linalg::svd(&a).unwrap().s;
            assert!(s[0] / s[1] <= (2.0f64).exp() + 1e-9);
        }
    }
}
