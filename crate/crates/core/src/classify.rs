//! Three-qubit SLOCC classes and the dispatcher from SI-set identifiers to
//! measure implementations.

use std::fmt;
use std::str::FromStr;

use crate::bipartite::{self, Cut};
use crate::linalg;
use crate::product_opt::{self, MeasureResult, OptConfig};
use crate::state::PureState;
use crate::tangle;
use crate::wclass;
use crate::{Error, Result};

/// Default threshold on reduced-density eigenvalues for counting rank.
pub const RANK_TOL: f64 = 1e-8;
/// Default threshold on the three-tangle separating GHZ from W.
pub const TAU_TOL: f64 = 1e-8;
/// Optimizer slack allowed in nesting checks and union cross-checks.
pub const NESTING_SLACK: f64 = 5e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SloccClass {
    /// Fully separable, `A-B-C`.
    Separable,
    /// `A` separable from an entangled `BC`.
    ABc,
    /// `C` separable from an entangled `AB`.
    AbC,
    /// `B` separable from an entangled `AC`.
    BAc,
    W,
    Ghz,
}

impl SloccClass {
    pub const ALL: [SloccClass; 6] = [Self::Separable, Self::ABc, Self::AbC, Self::BAc, Self::W, Self::Ghz];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Separable => "A-B-C",
            Self::ABc => "A-BC",
            Self::AbC => "AB-C",
            Self::BAc => "B-AC",
            Self::W => "W",
            Self::Ghz => "GHZ",
        }
    }

    /// A normalized member of the class.
    pub fn representative(&self) -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell_on = |pair: [usize; 2]| {
            let mut s = PureState::zeros(vec![2, 2, 2]).unwrap();
            s.amps_mut()[0] = h.into();
            let both = (4 >> pair[0]) | (4 >> pair[1]);
            s.amps_mut()[both] = h.into();
            s
        };
        match self {
            Self::Separable => PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap(),
            Self::ABc => bell_on([1, 2]),
            Self::AbC => bell_on([0, 1]),
            Self::BAc => bell_on([0, 2]),
            Self::W => PureState::w(3),
            Self::Ghz => PureState::ghz(3),
        }
    }
}

impl fmt::Display for SloccClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SloccClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown SLOCC class {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub class: SloccClass,
    /// Ranks of the single-party reduced density matrices.
    pub local_ranks: [usize; 3],
    pub tau: f64,
    /// True when the rank pattern was inconsistent with a pure three-qubit
    /// state or a threshold decision was within a factor 100 of its
    /// tolerance.
    pub borderline: bool,
}

pub fn classify_detailed(s: &PureState, rank_tol: f64, tau_tol: f64) -> Result<Classification> {
    s.require_three_qubit()?;
    let s = s.normalized_for("slocc_class")?;
    let mut ranks = [0usize; 3];
    let mut borderline = false;
    for (k, slot) in ranks.iter_mut().enumerate() {
        let (vals, _) = linalg::eig_hermitian(&s.reduced_density(&[k])?)?;
        *slot = vals.iter().filter(|&&l| l > rank_tol).count();
        borderline |= vals.iter().any(|&l| l > rank_tol && l <= 100.0 * rank_tol);
    }
    let tau = tangle::three_tangle(&s)?.tau;
    let class = match ranks {
        [1, 1, 1] => SloccClass::Separable,
        [1, 2, 2] => SloccClass::ABc,
        [2, 1, 2] => SloccClass::BAc,
        [2, 2, 1] => SloccClass::AbC,
        [2, 2, 2] => {
            borderline |= tau > tau_tol && tau <= 100.0 * tau_tol;
            if tau > tau_tol {
                SloccClass::Ghz
            } else {
                SloccClass::W
            }
        }
        _ => {
            // A single entangled party is impossible for a pure state; fall
            // back to the most degenerate class.
            borderline = true;
            SloccClass::Separable
        }
    };
    if borderline {
        log::warn!("slocc_class: borderline state (ranks {ranks:?}, tau {tau:e}) classified as {class}");
    }
    Ok(Classification { class, local_ranks: ranks, tau, borderline })
}

pub fn slocc_class(s: &PureState, rank_tol: f64, tau_tol: f64) -> Result<SloccClass> {
    classify_detailed(s, rank_tol, tau_tol).map(|c| c.class)
}

/// An SLOCC-invariant set selecting which geometric measure to compute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SISetId {
    /// Fully separable states.
    Product,
    /// States that are product across a cut (Schmidt rank one).
    Cut(Cut),
    /// Schmidt rank at most `k` across a cut.
    RankK(Cut, usize),
    /// Closure of the three-qubit W class.
    WClosure,
    /// Closure of the three-qubit GHZ class (the whole space).
    GhzClosure,
    /// Union of member sets; the measure is the minimum over members.
    Union(Vec<SISetId>),
}

impl SISetId {
    pub fn union(members: Vec<SISetId>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("union of no sets".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(Error::InvalidInput(format!("duplicate union member {m}")));
            }
        }
        Ok(Self::Union(members))
    }

    /// Whether the measure is evaluated exactly (no optimizer).
    pub fn is_closed_form(&self) -> bool {
        match self {
            Self::Product | Self::WClosure => false,
            Self::Cut(_) | Self::RankK(..) | Self::GhzClosure => true,
            Self::Union(ms) => ms.iter().all(|m| m.is_closed_form()),
        }
    }

    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        match self {
            Self::Product => Ok(()),
            Self::Cut(c) | Self::RankK(c, _) if c.n_parties() == dims.len() => Ok(()),
            Self::Cut(c) | Self::RankK(c, _) => {
                Err(Error::Shape(format!("cut {c} on {} parties", dims.len())))
            }
            Self::WClosure | Self::GhzClosure if dims == [2, 2, 2] => Ok(()),
            Self::WClosure | Self::GhzClosure => Err(Error::Shape(format!("{self} needs three qubits, got dims {dims:?}"))),
            Self::Union(ms) => ms.iter().try_for_each(|m| m.check_dims(dims)),
        }
    }

    /// Parses the command-line grammar: `product`, `w`, `ghz`,
    /// `cut:<left>`, `rank:<left>:<k>`, `union:<spec>,<spec>,…`. The left
    /// side of a cut lists party digits (`0`, `01`, `0|12`) or, for more
    /// than ten parties, dot-separated indices (`0.11`).
    pub fn parse(spec: &str, n_parties: usize) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("union:") {
            let members = rest
                .split(',')
                .map(|m| Self::parse(m, n_parties))
                .collect::<Result<Vec<_>>>()?;
            return Self::union(members);
        }
        if let Some(rest) = spec.strip_prefix("cut:") {
            return Ok(Self::Cut(parse_cut(rest, n_parties)?));
        }
        if let Some(rest) = spec.strip_prefix("rank:") {
            let (left, k) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("rank spec {spec:?} needs rank:<cut>:<k>")))?;
            let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad rank bound {k:?}")))?;
            if k == 0 {
                return Err(Error::Parse("rank bound must be at least 1".into()));
            }
            return Ok(Self::RankK(parse_cut(left, n_parties)?, k));
        }
        match spec.to_ascii_lowercase().as_str() {
            "product" => Ok(Self::Product),
            "w" => Ok(Self::WClosure),
            "ghz" => Ok(Self::GhzClosure),
            _ => Err(Error::Parse(format!("unknown set spec {spec:?}"))),
        }
    }
}

/// Parses a cut given by its left parties, with or without a `cut:` prefix.
pub fn parse_cut(spec: &str, n_parties: usize) -> Result<Cut> {
    let spec = spec.trim();
    Cut::new(&parse_parties(spec.strip_prefix("cut:").unwrap_or(spec))?, n_parties)
}

fn parse_parties(s: &str) -> Result<Vec<usize>> {
    let left = s.split('|').next().unwrap_or("");
    let bad = || Error::Parse(format!("bad party list {s:?}"));
    if left.is_empty() {
        return Err(bad());
    }
    if left.contains('.') {
        left.split('.').map(|p| p.parse().map_err(|_| bad())).collect()
    } else {
        left.chars().map(|ch| ch.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect()
    }
}

impl fmt::Display for SISetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left = |c: &Cut| {
            let sep = if c.left().iter().any(|&k| k > 9) { "." } else { "" };
            c.left().iter().map(|k| k.to_string()).collect::<Vec<_>>().join(sep)
        };
        match self {
            Self::Product => f.write_str("product"),
            Self::Cut(c) => write!(f, "cut:{}", left(c)),
            Self::RankK(c, k) => write!(f, "rank:{}:{k}", left(c)),
            Self::WClosure => f.write_str("w"),
            Self::GhzClosure => f.write_str("ghz"),
            Self::Union(ms) => {
                let parts: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
                write!(f, "union:{}", parts.join(","))
            }
        }
    }
}

/// `E(s, S)` and the optimizing witness for the set `set_id`.
pub fn measure(s: &PureState, set_id: &SISetId, cfg: &OptConfig) -> Result<MeasureResult> {
    set_id.check_dims(s.dims())?;
    match set_id {
        SISetId::Product => product_opt::nearest_product(s, cfg),
        SISetId::Cut(cut) => rank_k_result(s, cut, 1),
        SISetId::RankK(cut, k) => rank_k_result(s, cut, *k),
        SISetId::WClosure => wclass::e_w(s, cfg),
        SISetId::GhzClosure => {
            let s = s.normalized_for("measure")?;
            Ok(MeasureResult::exact(wclass::e_ghz_set(&s)?, s))
        }
        SISetId::Union(members) => {
            let mut best: Option<MeasureResult> = None;
            for m in members {
                let r = measure(s, m, cfg)?;
                if best.as_ref().is_none_or(|b| r.e_value < b.e_value) {
                    best = Some(r);
                }
            }
            best.ok_or_else(|| Error::InvalidInput("union of no sets".into()))
        }
    }
}

fn rank_k_result(s: &PureState, cut: &Cut, k: usize) -> Result<MeasureResult> {
    if k == 0 {
        return Err(Error::Domain("rank bound must be at least 1".into()));
    }
    let sd = bipartite::schmidt(s, cut)?;
    let witness = sd.truncated_state(s.dims(), cut, k)?.normalize()?;
    Ok(MeasureResult::exact(bipartite::e_from_schmidt(&sd, k), witness))
}

/// The three single-qubit cuts `A|BC`, `B|AC`, `C|AB`.
pub fn three_qubit_cuts() -> [Cut; 3] {
    std::array::from_fn(|k| Cut::new(&[k], 3).expect("valid cut"))
}

#[derive(Clone, Debug)]
pub struct NestingReport {
    pub product: f64,
    /// `(cut, E(ψ, S_cut))` for the three single-party cuts.
    pub cuts: Vec<(Cut, f64)>,
    pub w: f64,
    pub ghz: f64,
    /// `E_product ≥ E_cut ≥ 0` for every cut and `E_product ≥ E_W`, within
    /// [`NESTING_SLACK`].
    pub holds: bool,
}

/// Checks the ordering implied by set inclusion: the product set lies
/// inside every other SI set, so its measure is the largest.
pub fn nesting_check(s: &PureState, cfg: &OptConfig) -> Result<NestingReport> {
    s.require_three_qubit()?;
    let product = measure(s, &SISetId::Product, cfg)?.e_value;
    let cuts = three_qubit_cuts()
        .into_iter()
        .map(|c| {
            let e = measure(s, &SISetId::Cut(c.clone()), cfg)?.e_value;
            Ok((c, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = measure(s, &SISetId::WClosure, cfg)?.e_value;
    let ghz = measure(s, &SISetId::GhzClosure, cfg)?.e_value;
    let holds = cuts.iter().all(|(_, e)| product >= e - NESTING_SLACK && *e >= 0.0)
        && product >= w - NESTING_SLACK
        && ghz == 0.0;
    Ok(NestingReport { product, cuts, w, ghz, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RandomSource;
    use crate::locc::{random_invertible, slocc_apply};
    use num_complex::Complex64 as C64;

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

    #[test]
    fn class_examples() {
        let cls = |s: &PureState| slocc_class(s, RANK_TOL, TAU_TOL).unwrap();
        assert_eq!(cls(&PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap()), SloccClass::Separable);
        assert_eq!(cls(&SloccClass::ABc.representative()), SloccClass::ABc);
        assert_eq!(cls(&PureState::ghz(3)), SloccClass::Ghz);
        assert_eq!(cls(&PureState::w(3)), SloccClass::W);
        for k in SloccClass::ALL {
            assert_eq!(cls(&k.representative()), k);
        }
        assert!(slocc_class(&PureState::ghz(2), RANK_TOL, TAU_TOL).is_err());
    }

    #[test]
    fn class_labels_round_trip() {
        for k in SloccClass::ALL {
            assert_eq!(k.label().parse::<SloccClass>().unwrap(), k);
        }
    }

    #[test]
    fn class_survives_invertible_slocc() {
        let mut rng = RandomSource::new(10).rng();
        for k in SloccClass::ALL {
            for _ in 0..20 {
                let ops: Vec<_> = (0..3).map(|_| random_invertible(&mut rng, 2, 1.0)).collect();
                let s = slocc_apply(&k.representative(), &ops).unwrap();
                assert_eq!(slocc_class(&s, RANK_TOL, TAU_TOL).unwrap(), k);
            }
        }
    }

    #[test]
    fn table_psi_column() {
        let cfg = OptConfig::default();
        let sets = [
            SISetId::Product,
            SISetId::parse("cut:01", 3).unwrap(),
            SISetId::parse("cut:1", 3).unwrap(),
            SISetId::parse("cut:0", 3).unwrap(),
        ];
        for set in &sets {
            let e = measure(&psi_t1(), set, &cfg).unwrap().e_value;
            assert!((e - 0.1).abs() < 1e-9, "{set}: {e}");
        }
        let e = measure(&psi_t1(), &SISetId::WClosure, &cfg).unwrap().e_value;
        assert!((e - 0.09).abs() < 5e-3);
    }

    #[test]
    fn union_takes_minimum() {
        let cfg = OptConfig::default();
        let u = SISetId::parse("union:cut:0,cut:01", 3).unwrap();
        let e = measure(&phi_t2(), &u, &cfg).unwrap().e_value;
        assert!((e - 0.3643).abs() < 1e-4);
        let mixed = SISetId::parse("union:product,w", 3).unwrap();
        let e = measure(&phi_t2(), &mixed, &cfg).unwrap().e_value;
        let w = measure(&phi_t2(), &SISetId::WClosure, &cfg).unwrap().e_value;
        assert_eq!(e, w);
        assert!(SISetId::parse("union:cut:0,cut:0", 3).is_err());
        assert!(SISetId::union(vec![]).is_err());
    }

    /// Independent route for a union of cut sets: optimize directly over
    /// states that are product across some cut by regrouping the tensor into
    /// two parties and running the alternating optimizer.
    #[test]
    fn union_min_rule_matches_direct_optimization() {
        let mut rng = RandomSource::new(13).rng();
        let cfg = OptConfig::default();
        let cuts = three_qubit_cuts();
        let u = SISetId::union(cuts.iter().cloned().map(SISetId::Cut).collect()).unwrap();
        for _ in 0..20 {
            let s = PureState::random(vec![2, 2, 2], &mut rng).unwrap();
            let direct = cuts
                .iter()
                .map(|cut| {
                    let m = s.bipartite_matrix(cut.left()).unwrap();
                    let two = PureState::new(vec![m.rows(), m.cols()], m.data().to_vec()).unwrap();
                    product_opt::nearest_product(&two, &cfg).unwrap().e_value
                })
                .fold(f64::INFINITY, f64::min);
            let via_union = measure(&s, &u, &cfg).unwrap().e_value;
            assert!((direct - via_union).abs() < NESTING_SLACK);
        }
    }

    #[test]
    fn dispatcher_matches_closed_form_bitwise() {
        let mut rng = RandomSource::new(14).rng();
        for _ in 0..20 {
            let s = PureState::random(vec![2, 2, 2], &mut rng).unwrap();
            for cut in three_qubit_cuts() {
                let a = measure(&s, &SISetId::RankK(cut.clone(), 1), &OptConfig::default()).unwrap().e_value;
                let b = bipartite::e_rank_k(&s, &cut, 1).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn incompatible_sets_rejected() {
        let q = PureState::basis(vec![3, 3], &[0, 0]).unwrap();
        assert!(matches!(measure(&q, &SISetId::WClosure, &OptConfig::default()), Err(Error::Shape(_))));
        assert!(SISetId::parse("cut:5", 3).is_err());
        assert!(SISetId::parse("rank:0:0", 3).is_err());
        assert!(SISetId::parse("bogus", 3).is_err());
        let cut3 = SISetId::parse("cut:0", 3).unwrap();
        assert!(measure(&q, &cut3, &OptConfig::default()).is_err());
    }

    #[test]
    fn spec_round_trip() {
        for spec in ["product", "w", "ghz", "cut:0", "cut:12", "rank:0:2", "union:cut:0,cut:2"] {
            assert_eq!(SISetId::parse(spec, 3).unwrap().to_string(), spec);
        }
        assert_eq!(SISetId::parse("cut:0|12", 3).unwrap().to_string(), "cut:0");
        assert_eq!(SISetId::parse("cut:0.11", 12).unwrap().to_string(), "cut:0.11");
    }

    #[test]
    fn nesting_examples() {
        let cfg = OptConfig::default();
        let r = nesting_check(&psi_t1(), &cfg).unwrap();
        assert!(r.holds);
        let r = nesting_check(&phi_t2(), &cfg).unwrap();
        assert!(r.holds);
        assert!(r.product > r.cuts[0].1 && r.cuts[0].1 > r.w);
        let r = nesting_check(&PureState::basis(vec![2, 2, 2], &[1, 0, 1]).unwrap(), &cfg).unwrap();
        assert!(r.holds && r.product < 1e-9 && r.w < 1e-9 && r.cuts.iter().all(|c| c.1 < 1e-12));
    }
}
