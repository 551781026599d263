//! Executable statements of the counting bounds and identities: exceptional
//! sets, bound checkers, the sampling search for a size-preserving quotient,
//! and the instrumented end-to-end reduction runner.
//!
//! Every inequality is compared in exact arithmetic (big rationals, or
//! integer cross-multiplication where the denominators are known); no
//! floating point is used anywhere in the checkers.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde_json::json;

use crate::ambient::{AmbientSpace, PointSet};
use crate::grassmann::{
    enumerate_grassmannian_with_budget, sample_uniform_subspace, Subspace, DEFAULT_ENUM_BUDGET,
};
use crate::projections::{flatten_points, quotient_map_new, DirectionCounter, QuotientMap};
use crate::SeededRng;

/// Default number of sampled subspaces before the search gives up.
pub const DEFAULT_MAX_TRIALS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    LargeESC,
    FullDimLargeESC,
    RadialConjecture,
    WeakProjBound,
    Lemma31,
    ExpectationIdentity,
    MarkovFraction,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::LargeESC => "LargeESC",
            TheoremId::FullDimLargeESC => "FullDimLargeESC",
            TheoremId::RadialConjecture => "RadialConjecture",
            TheoremId::WeakProjBound => "WeakProjBound",
            TheoremId::Lemma31 => "Lemma31",
            TheoremId::ExpectationIdentity => "ExpectationIdentity",
            TheoremId::MarkovFraction => "MarkovFraction",
        }
    }

    pub const ALL: [TheoremId; 7] = [
        TheoremId::LargeESC,
        TheoremId::FullDimLargeESC,
        TheoremId::RadialConjecture,
        TheoremId::WeakProjBound,
        TheoremId::Lemma31,
        TheoremId::ExpectationIdentity,
        TheoremId::MarkovFraction,
    ];
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<TheoremId, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "largeesc" => Ok(TheoremId::LargeESC),
            "fulldimlargeesc" | "fulldim" => Ok(TheoremId::FullDimLargeESC),
            "radialconjecture" | "radial" => Ok(TheoremId::RadialConjecture),
            "weakprojbound" | "weakbound" => Ok(TheoremId::WeakProjBound),
            "lemma31" => Ok(TheoremId::Lemma31),
            "expectationidentity" | "expectation" => Ok(TheoremId::ExpectationIdentity),
            "markovfraction" | "markov" => Ok(TheoremId::MarkovFraction),
            _ => Err(format!("unknown theorem id: {}", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoremError {
    InvalidRange(String),
    PreconditionViolated(String),
    TrialsExhausted { max_trials: u32 },
    ContainmentFailure { witness: String },
    Grassmann(crate::grassmann::GrassmannError),
}

impl fmt::Display for TheoremError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoremError::InvalidRange(msg) => write!(f, "invalid range: {}", msg),
            TheoremError::PreconditionViolated(msg) => {
                write!(f, "precondition violated: {}", msg)
            }
            TheoremError::TrialsExhausted { max_trials } => {
                write!(f, "no suitable subspace found in {} trials", max_trials)
            }
            TheoremError::ContainmentFailure { witness } => {
                write!(f, "projected exceptional point escapes the target exceptional set: {}", witness)
            }
            TheoremError::Grassmann(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for TheoremError {}

impl From<crate::grassmann::GrassmannError> for TheoremError {
    fn from(e: crate::grassmann::GrassmannError) -> TheoremError {
        TheoremError::Grassmann(e)
    }
}

/// Outcome of checking one bound or identity on one instance.
///
/// `holds` is meaningful only when `preconditions_met`; skipped instances
/// keep lhs/rhs/holds unset and are counted separately by the runner.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub q: u32,
    pub n: usize,
    pub k: Option<usize>,
    pub set_size: usize,
    /// Second set size for the two-set subspace search.
    pub set_size_b: Option<usize>,
    /// M or C, serialized exactly ("2", "3/2").
    pub param: Option<String>,
    pub preconditions_met: bool,
    pub lhs: Option<BigRational>,
    pub rhs: Option<BigRational>,
    pub holds: Option<bool>,
    pub seed: Option<u64>,
}

impl BoundReport {
    fn skeleton(theorem: TheoremId, space: &AmbientSpace, size: usize) -> BoundReport {
        BoundReport {
            theorem,
            q: space.q(),
            n: space.n(),
            k: None,
            set_size: size,
            set_size_b: None,
            param: None,
            preconditions_met: false,
            lhs: None,
            rhs: None,
            holds: None,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> BoundReport {
        self.seed = Some(seed);
        self
    }

    /// True when the instance ran and the bound failed: the signal every
    /// experiment aggregates (expected to stay at zero).
    pub fn is_violation(&self) -> bool {
        self.preconditions_met && self.holds == Some(false)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "theorem_id": self.theorem.as_str(),
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "set_size": self.set_size,
            "set_size_b": self.set_size_b,
            "m_or_c": self.param,
            "preconditions_met": self.preconditions_met,
            "lhs": self.lhs.as_ref().map(rational_string),
            "rhs": self.rhs.as_ref().map(rational_string),
            "holds": self.holds,
            "seed": self.seed,
        })
    }

    pub fn csv_header() -> &'static str {
        "theorem_id,q,n,k,set_size,set_size_b,m_or_c,preconditions_met,lhs,rhs,holds,seed"
    }

    pub fn to_csv_row(&self) -> String {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.theorem.as_str(),
            self.q,
            self.n,
            opt(&self.k),
            self.set_size,
            opt(&self.set_size_b),
            self.param.clone().unwrap_or_default(),
            self.preconditions_met,
            opt(&self.lhs.as_ref().map(rational_string)),
            opt(&self.rhs.as_ref().map(rational_string)),
            opt(&self.holds),
            opt(&self.seed),
        )
    }
}

/// Exact "numerator/denominator" form, reduced.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn rat_u(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn rat_u64(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Largest count admitted by `size <= t` (or `size < t` when strict);
/// `None` when no nonnegative count qualifies.
fn count_cutoff(threshold: &BigRational, strict: bool) -> Option<usize> {
    let bound: BigInt = if strict {
        threshold.ceil().to_integer() - 1
    } else {
        threshold.floor().to_integer()
    };
    if bound.is_negative() {
        return None;
    }
    Some(bound.to_usize().unwrap_or(usize::MAX))
}

/// The centers y whose radial image of E is at most (or strictly below) the
/// threshold. The sweep covers every y in the space, including points of E.
pub fn exceptional_set(e: &PointSet, threshold: &BigRational, strict: bool) -> PointSet {
    let space = e.space().clone();
    let mut out = PointSet::new(space.clone());
    let Some(cutoff) = count_cutoff(threshold, strict) else {
        return out;
    };
    let coords = flatten_points(e);
    let mut counter = DirectionCounter::new(&space);
    let mut y = vec![0; space.n()];
    for idx in 0..space.size() {
        space.decode_into(idx, &mut y);
        if counter.count(&space, &coords, &y) <= cutoff {
            out.insert(idx);
        }
    }
    out
}

/// #{y : |pi^y(E)| < |E|/C} < q|E|/(C-1), for 1 < C < |E|.
pub fn check_weak_bound(e: &PointSet, c: &BigRational) -> BoundReport {
    let space = e.space();
    let mut report = BoundReport::skeleton(TheoremId::WeakProjBound, space, e.len());
    report.param = Some(rational_string(c));
    let size = rat_u(e.len());
    if !(c > &BigRational::one() && c < &size) {
        return report;
    }
    report.preconditions_met = true;
    let threshold = &size / c;
    let lhs = rat_u(exceptional_set(e, &threshold, true).len());
    let rhs = rat_u64(space.q() as u64) * &size / (c - BigRational::one());
    report.holds = Some(lhs < rhs);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// #{y : |pi^y(E)| <= M} < 12 q^{n-1} M / |E|, for |E| >= 6q^{n-1} and
/// positive M <= q^{n-1}/4. (M = 0 zeroes the right-hand side, so the strict
/// comparison needs M >= 1.)
pub fn check_large_esc(e: &PointSet, m: u64) -> BoundReport {
    let space = e.space();
    let mut report = BoundReport::skeleton(TheoremId::LargeESC, space, e.len());
    report.param = Some(m.to_string());
    if space.n() < 1 || m < 1 {
        return report;
    }
    let qn1 = space.pow_q(space.n() - 1) as u128;
    if (e.len() as u128) < 6 * qn1 || 4 * m as u128 > qn1 {
        return report;
    }
    report.preconditions_met = true;
    let threshold = rat_u64(m);
    let lhs = rat_u(exceptional_set(e, &threshold, false).len());
    let rhs = rat_u64(12) * rat_u(qn1 as usize) * rat_u64(m) / rat_u(e.len());
    report.holds = Some(lhs < rhs);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// #{y : |pi^y(E)| <= M} < 300 q^k M / |E|, for |E| >= 30q^k and M <= q^k/4,
/// k in {0, ..., n-1}.
///
/// The set is only required to fit in the space (|E| <= q^n); see the
/// experiment runner's parameter grids for the ranges actually exercised.
pub fn check_full_dim(e: &PointSet, m: u64, k: usize) -> BoundReport {
    let space = e.space();
    let mut report = BoundReport::skeleton(TheoremId::FullDimLargeESC, space, e.len());
    report.param = Some(m.to_string());
    report.k = Some(k);
    if k + 1 > space.n() || m < 1 {
        return report;
    }
    let qk = space.pow_q(k) as u128;
    if (e.len() as u128) < 30 * qk || 4 * m as u128 > qk {
        return report;
    }
    report.preconditions_met = true;
    let threshold = rat_u64(m);
    let lhs = rat_u(exceptional_set(e, &threshold, false).len());
    let rhs = rat_u64(300) * rat_u(qk as usize) * rat_u64(m) / rat_u(e.len());
    report.holds = Some(lhs < rhs);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// #{y : |pi^y(E)| < |E|/50} <= 10 q^k, for q^{k-1} < |E| <= q^k,
/// k in {1, ..., n-1}.
pub fn check_radial_conjecture(e: &PointSet, k: usize) -> BoundReport {
    let space = e.space();
    let mut report = BoundReport::skeleton(TheoremId::RadialConjecture, space, e.len());
    report.k = Some(k);
    if k < 1 || k + 1 > space.n() {
        return report;
    }
    let size = e.len();
    if size <= space.pow_q(k - 1) || size > space.pow_q(k) {
        return report;
    }
    report.preconditions_met = true;
    let threshold = rat_u(size) / rat_u64(50);
    let lhs = rat_u(exceptional_set(e, &threshold, true).len());
    let rhs = rat_u64(10) * rat_u(space.pow_q(k));
    report.holds = Some(lhs <= rhs);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// Expected number of same-fiber pairs over a uniformly random subspace of
/// dimension n-k-1: (q^{n-k-1} - 1)/(q^n - 1) * C(m, 2).
pub fn collision_expectation(
    n: usize,
    k: usize,
    q: u32,
    m: usize,
) -> Result<BigRational, TheoremError> {
    if k + 1 > n {
        return Err(TheoremError::InvalidRange(format!("k={} out of range for n={}", k, n)));
    }
    let qq = BigUint::from(q);
    if BigUint::from(m) > qq.pow(n as u32) {
        return Err(TheoremError::InvalidRange(format!("m={} exceeds q^n", m)));
    }
    let pairs = BigInt::from(m) * BigInt::from(m.saturating_sub(1)) / BigInt::from(2);
    let num = BigInt::from(qq.pow((n - k - 1) as u32)) - BigInt::one();
    let den = BigInt::from(BigUint::from(q).pow(n as u32)) - BigInt::one();
    Ok(BigRational::new(num * pairs, den))
}

/// Same-fiber pair count at most four times its expectation, compared
/// exactly: c (q^n - 1) <= 2 (q^dim - 1) m (m - 1).
pub fn markov_condition(qm: &QuotientMap, x: &PointSet) -> bool {
    let space = qm.source();
    let c = qm.collision_count_u128(x);
    let m = x.len() as u128;
    let qn_minus_1 = (space.size() - 1) as u128;
    let qdim_minus_1 = (space.pow_q(qm.gamma().dim()) - 1) as u128;
    c * qn_minus_1 <= 2 * qdim_minus_1 * m * (m.saturating_sub(1))
}

/// Shared machinery for averaging collision counts over the whole
/// Grassmannian of (n-k-1)-dimensional subspaces: the maps are enumerated
/// once and reused across many sets X.
pub struct CollisionScan {
    space: AmbientSpace,
    k: usize,
    maps: Vec<QuotientMap>,
    /// Source-index -> target-index table per map, when within budget.
    tables: Option<Vec<Vec<u32>>>,
    target_size: usize,
}

/// One pass over every gamma for a fixed set X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanStats {
    pub gamma_count: u64,
    pub total_collisions: u128,
    pub markov_satisfied: u64,
}

impl CollisionScan {
    pub fn new(space: &AmbientSpace, k: usize) -> Result<CollisionScan, TheoremError> {
        CollisionScan::with_budget(space, k, DEFAULT_ENUM_BUDGET)
    }

    pub fn with_budget(
        space: &AmbientSpace,
        k: usize,
        budget: u64,
    ) -> Result<CollisionScan, TheoremError> {
        let n = space.n();
        if k + 1 > n {
            return Err(TheoremError::InvalidRange(format!("k={} out of range for n={}", k, n)));
        }
        let gamma_dim = n - k - 1;
        let maps: Vec<QuotientMap> = enumerate_grassmannian_with_budget(space, gamma_dim, budget)?
            .map(quotient_map_new)
            .collect();
        let target_size = space.pow_q(k + 1);
        let table_entries = maps.len().saturating_mul(space.size());
        let tables = if table_entries <= 20_000_000 {
            Some(maps.iter().map(|qm| qm.apply_table()).collect())
        } else {
            None
        };
        Ok(CollisionScan { space: space.clone(), k, maps, tables, target_size })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma_count(&self) -> u64 {
        self.maps.len() as u64
    }

    pub fn maps(&self) -> &[QuotientMap] {
        &self.maps
    }

    /// Collision count and Markov tally for X against every gamma.
    pub fn scan(&self, x: &PointSet) -> ScanStats {
        assert!(x.space() == &self.space, "set lives in a different space");
        let xi: Vec<u32> = x.iter_indices().map(|i| i as u32).collect();
        let m = xi.len() as u128;
        // Exact Markov threshold by cross-multiplication:
        // c * (q^n - 1) <= 2 (q^{n-k-1} - 1) m (m-1).
        let qn_minus_1 = (self.space.size() - 1) as u128;
        let gamma_dim = self.space.n() - self.k - 1;
        let markov_rhs = 2 * (self.space.pow_q(gamma_dim) - 1) as u128 * m * m.saturating_sub(1);

        let mut counts = vec![0u32; self.target_size];
        let mut ws = vec![0u32; xi.len()];
        let mut stats =
            ScanStats { gamma_count: self.gamma_count(), total_collisions: 0, markov_satisfied: 0 };
        for (g, qm) in self.maps.iter().enumerate() {
            if let Some(tables) = &self.tables {
                let table = &tables[g];
                for (w, &i) in ws.iter_mut().zip(&xi) {
                    *w = table[i as usize];
                }
            } else {
                for (w, &i) in ws.iter_mut().zip(&xi) {
                    *w = qm.apply_index(i as usize) as u32;
                }
            }
            let mut coll = 0u64;
            for &w in &ws {
                coll += counts[w as usize] as u64;
                counts[w as usize] += 1;
            }
            for &w in &ws {
                counts[w as usize] = 0;
            }
            stats.total_collisions += coll as u128;
            if (coll as u128) * qn_minus_1 <= markov_rhs {
                stats.markov_satisfied += 1;
            }
        }
        stats
    }
}

/// The exact Grassmannian average of the collision count equals the
/// closed-form expectation, with zero tolerance.
pub fn check_expectation_identity(x: &PointSet, k: usize) -> Result<BoundReport, TheoremError> {
    let scan = CollisionScan::new(x.space(), k)?;
    Ok(expectation_identity_with_scan(&scan, x))
}

pub fn expectation_identity_with_scan(scan: &CollisionScan, x: &PointSet) -> BoundReport {
    let stats = scan.scan(x);
    let mut report = BoundReport::skeleton(TheoremId::ExpectationIdentity, x.space(), x.len());
    report.k = Some(scan.k());
    report.preconditions_met = true;
    let lhs = BigRational::new(
        BigInt::from(stats.total_collisions),
        BigInt::from(stats.gamma_count),
    );
    let rhs = collision_expectation(x.space().n(), scan.k(), x.space().q(), x.len())
        .expect("scan construction validated the range");
    report.holds = Some(lhs == rhs);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// At least three quarters of all gammas satisfy the collision bound.
pub fn check_markov_fraction(x: &PointSet, k: usize) -> Result<BoundReport, TheoremError> {
    let scan = CollisionScan::new(x.space(), k)?;
    Ok(markov_fraction_with_scan(&scan, x))
}

pub fn markov_fraction_with_scan(scan: &CollisionScan, x: &PointSet) -> BoundReport {
    let stats = scan.scan(x);
    let mut report = BoundReport::skeleton(TheoremId::MarkovFraction, x.space(), x.len());
    report.k = Some(scan.k());
    report.preconditions_met = true;
    let lhs = rat_u64(stats.markov_satisfied);
    let rhs = BigRational::new(BigInt::from(3 * stats.gamma_count), BigInt::from(4));
    // 4 * satisfied >= 3 * gamma_count, exactly.
    report.holds = Some(4 * stats.markov_satisfied >= 3 * stats.gamma_count);
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report
}

/// Samples (n-k-1)-dimensional subspaces until one satisfies the collision
/// bound for both sets; no preconditions checked, no conclusions asserted.
fn search_markov_gamma(
    a: &PointSet,
    b: &PointSet,
    k: usize,
    rng: &mut SeededRng,
    max_trials: u32,
) -> Result<(QuotientMap, u32), TheoremError> {
    let space = a.space();
    let gamma_dim = space.n() - k - 1;
    for trial in 1..=max_trials {
        let gamma = sample_uniform_subspace(space, gamma_dim, rng)
            .map_err(TheoremError::Grassmann)?;
        let qm = quotient_map_new(gamma);
        if markov_condition(&qm, a) && markov_condition(&qm, b) {
            return Ok((qm, trial));
        }
    }
    Err(TheoremError::TrialsExhausted { max_trials })
}

/// Finds an (n-k-1)-dimensional subspace whose quotient keeps at least a
/// fifth of both A and B, for |A| < q^{k+1} and |B| < q^{k+1}.
///
/// The search tests the cheap collision bound rather than the projected
/// sizes; under the size preconditions the accepted gamma then provably
/// satisfies both conclusions, which are asserted before returning. Each
/// trial succeeds with probability at least 1/2.
pub fn find_good_subspace(
    a: &PointSet,
    b: &PointSet,
    k: usize,
    rng: &mut SeededRng,
    max_trials: u32,
) -> Result<(Subspace, u32), TheoremError> {
    let space = a.space();
    if b.space() != space {
        return Err(TheoremError::InvalidRange("A and B live in different spaces".into()));
    }
    if k + 1 > space.n() {
        return Err(TheoremError::InvalidRange(format!(
            "k={} out of range for n={}",
            k,
            space.n()
        )));
    }
    let cap = space.pow_q(k + 1);
    if a.len() >= cap || b.len() >= cap {
        return Err(TheoremError::PreconditionViolated(format!(
            "need |A| and |B| below q^(k+1) = {}; got {} and {}",
            cap,
            a.len(),
            b.len()
        )));
    }
    let (qm, trials) = search_markov_gamma(a, b, k, rng, max_trials)?;
    let proj_a = qm.project_set(a).len();
    let proj_b = qm.project_set(b).len();
    assert!(
        5 * proj_a >= a.len(),
        "accepted gamma fails the 1/5 size bound for A ({} of {}); this is a bug",
        proj_a,
        a.len()
    );
    assert!(
        5 * proj_b >= b.len(),
        "accepted gamma fails the 1/5 size bound for B ({} of {}); this is a bug",
        proj_b,
        b.len()
    );
    Ok((qm.gamma().clone(), trials))
}

/// Two-set subspace search wrapped as a checkable report: holds when the
/// search succeeded within budget (lhs = trials used, rhs = the budget).
pub fn check_lemma31(
    a: &PointSet,
    b: &PointSet,
    k: usize,
    rng: &mut SeededRng,
    max_trials: u32,
) -> BoundReport {
    let mut report = BoundReport::skeleton(TheoremId::Lemma31, a.space(), a.len());
    report.set_size_b = Some(b.len());
    report.k = Some(k);
    match find_good_subspace(a, b, k, rng, max_trials) {
        Ok((_, trials)) => {
            report.preconditions_met = true;
            report.lhs = Some(rat_u64(trials as u64));
            report.rhs = Some(rat_u64(max_trials as u64));
            report.holds = Some(true);
        }
        Err(TheoremError::TrialsExhausted { .. }) => {
            report.preconditions_met = true;
            report.lhs = Some(rat_u64(max_trials as u64));
            report.rhs = Some(rat_u64(max_trials as u64));
            report.holds = Some(false);
        }
        Err(_) => {}
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Exceptional-count bound with explicit threshold M at level k.
    FullDim { m: u64, k: usize },
    /// Fractional-threshold bound at level k.
    Conjecture { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckCmp {
    Lt,
    Le,
    Ge,
}

impl CheckCmp {
    fn eval(&self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            CheckCmp::Lt => lhs < rhs,
            CheckCmp::Le => lhs <= rhs,
            CheckCmp::Ge => lhs >= rhs,
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            CheckCmp::Lt => "<",
            CheckCmp::Le => "<=",
            CheckCmp::Ge => ">=",
        }
    }
}

/// One verified size relation in a pipeline trace.
#[derive(Debug, Clone)]
pub struct TraceCheck {
    pub name: &'static str,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub cmp: CheckCmp,
    pub ok: bool,
}

/// Every intermediate cardinality and size relation from one end-to-end run
/// of the reduction argument.
#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub mode: PipelineMode,
    pub q: u32,
    pub n: usize,
    pub e_size: usize,
    /// The radial-size threshold defining T.
    pub threshold: BigRational,
    pub t_size: usize,
    pub gamma: Subspace,
    pub trials: u32,
    pub proj_e_size: usize,
    pub proj_t_size: usize,
    /// pi(T) lay inside the target exceptional set (guaranteed: a violation
    /// aborts the run instead).
    pub containment_ok: bool,
    /// #{w in the target : |pi^w(pi(E))| <= threshold}.
    pub target_exceptional_size: usize,
    pub branch: Option<&'static str>,
    pub checks: Vec<TraceCheck>,
}

impl PipelineTrace {
    pub fn all_ok(&self) -> bool {
        self.containment_ok && self.checks.iter().all(|c| c.ok)
    }

    pub fn check(&self, name: &str) -> Option<&TraceCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (mode, m, k) = match self.mode {
            PipelineMode::FullDim { m, k } => ("fulldim", Some(m), k),
            PipelineMode::Conjecture { k } => ("conjecture", None, k),
        };
        json!({
            "mode": mode,
            "q": self.q,
            "n": self.n,
            "k": k,
            "m": m,
            "threshold": rational_string(&self.threshold),
            "e_size": self.e_size,
            "t_size": self.t_size,
            "gamma": self.gamma.to_string(),
            "trials": self.trials,
            "proj_e_size": self.proj_e_size,
            "proj_t_size": self.proj_t_size,
            "containment_ok": self.containment_ok,
            "target_exceptional_size": self.target_exceptional_size,
            "branch": self.branch,
            "all_ok": self.all_ok(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "lhs": rational_string(&c.lhs),
                "cmp": c.cmp.symbol(),
                "rhs": rational_string(&c.rhs),
                "ok": c.ok,
            })).collect::<Vec<_>>(),
        })
    }
}

fn push_check(
    checks: &mut Vec<TraceCheck>,
    name: &'static str,
    lhs: BigRational,
    cmp: CheckCmp,
    rhs: BigRational,
) {
    let ok = cmp.eval(&lhs, &rhs);
    checks.push(TraceCheck { name, lhs, rhs, cmp, ok });
}

/// Runs the reduction argument as computation: compute the exceptional set T,
/// search for a quotient preserving a fifth of both E and T, project, verify
/// that pi(T) lands inside the target's exceptional set point by point, and
/// record every intermediate cardinality.
pub fn reduction_pipeline(
    e: &PointSet,
    mode: PipelineMode,
    rng: &mut SeededRng,
    max_trials: u32,
) -> Result<PipelineTrace, TheoremError> {
    let space = e.space();
    let n = space.n();
    let (k, threshold) = match mode {
        PipelineMode::FullDim { m, k } => {
            if k + 1 > n {
                return Err(TheoremError::PreconditionViolated(format!(
                    "k={} out of range for n={}",
                    k, n
                )));
            }
            let qk = space.pow_q(k) as u128;
            if (e.len() as u128) < 30 * qk {
                return Err(TheoremError::PreconditionViolated(format!(
                    "need |E| >= 30 q^k = {}",
                    30 * qk
                )));
            }
            if m < 1 || 4 * m as u128 > qk {
                return Err(TheoremError::PreconditionViolated(format!(
                    "need 1 <= M <= q^k / 4 = {}/4",
                    qk
                )));
            }
            (k, rat_u64(m))
        }
        PipelineMode::Conjecture { k } => {
            if k < 1 || k + 1 > n {
                return Err(TheoremError::PreconditionViolated(format!(
                    "k={} out of range for n={}",
                    k, n
                )));
            }
            if e.len() <= space.pow_q(k - 1) || e.len() > space.pow_q(k) {
                return Err(TheoremError::PreconditionViolated(format!(
                    "need q^(k-1) < |E| <= q^k, got |E| = {}",
                    e.len()
                )));
            }
            (k, rat_u(e.len()) / rat_u64(50))
        }
    };

    // (1) The small-projection centers, per the strict threshold.
    let t = exceptional_set(e, &threshold, true);

    let mut checks = Vec::new();
    let mut branch = None;
    let qk = rat_u(space.pow_q(k));
    let qk1 = rat_u(space.pow_q(k + 1).min(space.size() * space.q() as usize));

    if let PipelineMode::Conjecture { .. } = mode {
        // Weak-bound consequence: |T| < q^{k+1}/49.
        push_check(
            &mut checks,
            "weak_t_bound",
            rat_u(t.len()),
            CheckCmp::Lt,
            &qk1 / rat_u64(49),
        );
        if rat_u(t.len()) >= qk1 {
            return Err(TheoremError::PreconditionViolated(format!(
                "|T| = {} is not below q^(k+1); the two-set search does not apply",
                t.len()
            )));
        }
    }

    // (2) Search for a gamma passing the collision bound for both E and T.
    let (qm, trials) = search_markov_gamma(e, &t, k, rng, max_trials)?;

    // (3) Project both sets.
    let proj_e = qm.project_set(e);
    let proj_t = qm.project_set(&t);
    push_check(
        &mut checks,
        "proj_e_fifth",
        rat_u(5 * proj_e.len()),
        CheckCmp::Ge,
        rat_u(e.len()),
    );
    push_check(
        &mut checks,
        "proj_t_fifth",
        rat_u(5 * proj_t.len()),
        CheckCmp::Ge,
        rat_u(t.len()),
    );

    // (4) The target exceptional set at the same threshold (non-strict)
    // must contain pi(T), point by point.
    let target_exceptional = exceptional_set(&proj_e, &threshold, false);
    for w in proj_t.iter_indices() {
        if !target_exceptional.contains(w) {
            return Err(TheoremError::ContainmentFailure {
                witness: format!("{:?}", qm.target().index_point(w)),
            });
        }
    }
    push_check(
        &mut checks,
        "proj_t_within_exceptional",
        rat_u(proj_t.len()),
        CheckCmp::Le,
        rat_u(target_exceptional.len()),
    );

    // (5) The terminal bound for the mode.
    match mode {
        PipelineMode::FullDim { m, k } => {
            let rhs = rat_u64(300) * rat_u(space.pow_q(k)) * rat_u64(m) / rat_u(e.len());
            push_check(&mut checks, "theorem_bound", rat_u(t.len()), CheckCmp::Lt, rhs);
        }
        PipelineMode::Conjecture { k } => {
            if rat_u(e.len()) >= rat_u64(5) * rat_u(space.pow_q(k - 1)) {
                branch = Some("projected_window");
                push_check(
                    &mut checks,
                    "proj_e_window_low",
                    rat_u(space.pow_q(k - 1)),
                    CheckCmp::Lt,
                    rat_u(proj_e.len()),
                );
                push_check(
                    &mut checks,
                    "proj_e_window_high",
                    rat_u(proj_e.len()),
                    CheckCmp::Le,
                    qk.clone(),
                );
                push_check(
                    &mut checks,
                    "terminal_radial",
                    rat_u(proj_t.len()),
                    CheckCmp::Le,
                    rat_u64(10) * qk.clone(),
                );
            } else {
                branch = Some("small_set");
                push_check(
                    &mut checks,
                    "small_e_t_bound",
                    rat_u(t.len()),
                    CheckCmp::Le,
                    &qk / rat_u64(2),
                );
            }
            push_check(
                &mut checks,
                "theorem_bound",
                rat_u(t.len()),
                CheckCmp::Le,
                rat_u64(10) * qk.clone(),
            );
        }
    }

    Ok(PipelineTrace {
        mode,
        q: space.q(),
        n,
        e_size: e.len(),
        threshold,
        t_size: t.len(),
        gamma: qm.gamma().clone(),
        trials,
        proj_e_size: proj_e.len(),
        proj_t_size: proj_t.len(),
        containment_ok: true,
        target_exceptional_size: target_exceptional.len(),
        branch,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::random_subset;
    use crate::gf::field_new;
    use crate::grassmann::enumerate_grassmannian;
    use rand::SeedableRng;

    fn space(q: u32, n: usize) -> AmbientSpace {
        AmbientSpace::new(field_new(q).unwrap(), n).unwrap()
    }

    fn x_axis_line(s: &AmbientSpace) -> PointSet {
        let mut e = PointSet::new(s.clone());
        for c in 0..s.q() as u8 {
            let mut p = s.zero_point();
            p[0] = c;
            e.insert_point(&p).unwrap();
        }
        e
    }

    #[test]
    fn exceptional_set_line_example() {
        // E = x-axis in F_3^2: its three points see one direction each,
        // off-line centers see three.
        let s = space(3, 2);
        let e = x_axis_line(&s);
        let exc = exceptional_set(&e, &rat_u(1), false);
        assert_eq!(exc.len(), 3);
        let pts: Vec<_> = exc.iter_points().collect();
        assert_eq!(pts, vec![vec![0, 0], vec![1, 0], vec![2, 0]]);
    }

    #[test]
    fn exceptional_set_extremes() {
        let s = space(3, 2);
        let e = x_axis_line(&s);
        let max_dirs = (s.size() - 1) / (s.q() as usize - 1);
        assert_eq!(exceptional_set(&e, &rat_u(max_dirs), false).len(), s.size());
        assert!(exceptional_set(&e, &BigRational::zero(), true).is_empty());
    }

    #[test]
    fn exceptional_set_monotone_in_threshold() {
        let s = space(4, 2);
        let mut rng = SeededRng::seed_from_u64(5);
        let e = random_subset(&s, 7, &mut rng).unwrap();
        let small = exceptional_set(&e, &rat_u(2), false);
        let large = exceptional_set(&e, &rat_u(4), false);
        for i in small.iter_indices() {
            assert!(large.contains(i));
        }
    }

    #[test]
    fn weak_bound_line_example() {
        let s = space(3, 2);
        let e = x_axis_line(&s);
        let report = check_weak_bound(&e, &rat_u64(2));
        assert!(report.preconditions_met);
        assert_eq!(report.lhs, Some(rat_u(3)));
        assert_eq!(report.rhs, Some(rat_u(9)));
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn weak_bound_preconditions() {
        let s = space(3, 2);
        let e = x_axis_line(&s);
        // C >= |E|
        assert!(!check_weak_bound(&e, &rat_u(3)).preconditions_met);
        assert!(!check_weak_bound(&e, &rat_u64(1)).preconditions_met);
        // |E| = 1 leaves no C in (1, 1).
        let mut single = PointSet::new(s.clone());
        single.insert(0);
        assert!(!check_weak_bound(&single, &rat_u64(2)).preconditions_met);
    }

    #[test]
    fn large_esc_m_zero_holds_trivially() {
        let s = space(3, 2);
        let mut rng = SeededRng::seed_from_u64(1);
        let e = random_subset(&s, 18, &mut rng).unwrap(); // 6 q^{n-1} = 18
        let report = check_large_esc(&e, 0);
        assert!(report.preconditions_met);
        assert_eq!(report.lhs, Some(BigRational::zero()));
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn large_esc_small_set_is_skipped() {
        let s = space(3, 2);
        let mut rng = SeededRng::seed_from_u64(1);
        let e = random_subset(&s, 5, &mut rng).unwrap();
        assert!(!check_large_esc(&e, 1).preconditions_met);
    }

    #[test]
    fn full_dim_preconditions() {
        let s = space(5, 3);
        let mut rng = SeededRng::seed_from_u64(2);
        // Needs |E| >= 30 q^2 = 750 > 125: empty range, reported faithfully.
        let e = random_subset(&s, 100, &mut rng).unwrap();
        assert!(!check_full_dim(&e, 1, 2).preconditions_met);
        // M = 0 qualifies whenever the size floor is met.
        let s = space(7, 3);
        let e = random_subset(&s, 210, &mut rng).unwrap();
        let report = check_full_dim(&e, 0, 1);
        assert!(report.preconditions_met);
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn radial_conjecture_line_is_trivial() {
        // Threshold 3/50 < 1, so no center qualifies.
        let s = space(3, 2);
        let e = x_axis_line(&s);
        let report = check_radial_conjecture(&e, 1);
        assert!(report.preconditions_met);
        assert_eq!(report.lhs, Some(BigRational::zero()));
        assert_eq!(report.rhs, Some(rat_u(30)));
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn radial_conjecture_size_window() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(3);
        let e = random_subset(&s, 10, &mut rng).unwrap();
        assert!(!check_radial_conjecture(&e, 1).preconditions_met); // |E| > q^k
        let e = random_subset(&s, 9, &mut rng).unwrap();
        assert!(check_radial_conjecture(&e, 1).preconditions_met);
    }

    #[test]
    fn collision_expectation_examples() {
        assert_eq!(collision_expectation(3, 1, 3, 0).unwrap(), BigRational::zero());
        assert_eq!(collision_expectation(3, 1, 3, 1).unwrap(), BigRational::zero());
        // Zero-dimensional gamma projects injectively.
        assert_eq!(collision_expectation(2, 1, 5, 20).unwrap(), BigRational::zero());
        // n=2, k=0, q=2, m=4: (2-1)/(4-1) * 6 = 2.
        assert_eq!(collision_expectation(2, 0, 2, 4).unwrap(), rat_u(2));
        assert!(collision_expectation(2, 2, 3, 1).is_err());
    }

    #[test]
    fn expectation_identity_exhaustive_gammas() {
        // Exhaustive average over the three lines of F_2^2 equals the
        // closed form for the full plane.
        let s = space(2, 2);
        let full = PointSet::full(s.clone());
        let report = check_expectation_identity(&full, 0).unwrap();
        assert_eq!(report.lhs, Some(rat_u(2)));
        assert_eq!(report.holds, Some(true));

        let empty = PointSet::new(s);
        let report = check_expectation_identity(&empty, 0).unwrap();
        assert_eq!(report.lhs, Some(BigRational::zero()));
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn expectation_identity_random_sets() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(17);
        for k in 0..3 {
            for _ in 0..5 {
                let m = rand::Rng::gen_range(&mut rng, 0..=27);
                let x = random_subset(&s, m, &mut rng).unwrap();
                let report = check_expectation_identity(&x, k).unwrap();
                assert_eq!(report.holds, Some(true), "k={} m={}", k, m);
            }
        }
    }

    #[test]
    fn markov_condition_examples() {
        let s = space(2, 2);
        let full = PointSet::full(s.clone());
        let empty = PointSet::new(s.clone());
        for gamma in enumerate_grassmannian(&s, 1).unwrap() {
            let qm = quotient_map_new(gamma);
            assert!(markov_condition(&qm, &full)); // 2 <= 8
            assert!(markov_condition(&qm, &empty));
        }
        // k = n-1: gamma = {0}, collisions always zero.
        let qm = quotient_map_new(Subspace::zero(s.clone()));
        assert!(markov_condition(&qm, &full));
    }

    #[test]
    fn markov_fraction_examples() {
        let s = space(2, 2);
        let full = PointSet::full(s.clone());
        let report = check_markov_fraction(&full, 0).unwrap();
        assert_eq!(report.lhs, Some(rat_u(3)));
        assert_eq!(report.holds, Some(true));

        let empty = PointSet::new(s);
        let report = check_markov_fraction(&empty, 0).unwrap();
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn find_good_subspace_identity_case() {
        // k = n-1 forces gamma = {0}: bijective projection, first trial.
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(23);
        let a = random_subset(&s, 8, &mut rng).unwrap();
        let b = random_subset(&s, 5, &mut rng).unwrap();
        let (gamma, trials) = find_good_subspace(&a, &b, 2, &mut rng, 16).unwrap();
        assert_eq!(gamma, Subspace::zero(s));
        assert_eq!(trials, 1);
    }

    #[test]
    fn find_good_subspace_empty_sets() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(29);
        let empty = PointSet::new(s.clone());
        let (_, trials) = find_good_subspace(&empty, &empty, 1, &mut rng, 16).unwrap();
        assert_eq!(trials, 1);
    }

    #[test]
    fn find_good_subspace_preconditions() {
        let s = space(3, 3);
        let mut rng = SeededRng::seed_from_u64(31);
        let a = random_subset(&s, 9, &mut rng).unwrap(); // q^{k+1} = 9 for k = 1
        let b = PointSet::new(s.clone());
        assert!(matches!(
            find_good_subspace(&a, &b, 1, &mut rng, 16),
            Err(TheoremError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn find_good_subspace_small_monte_carlo() {
        let s = space(3, 3);
        let mut total_trials = 0u32;
        for i in 0..100 {
            let mut rng = SeededRng::seed_from_u64(1000 + i);
            let a = random_subset(&s, 8, &mut rng).unwrap();
            let b = random_subset(&s, 8, &mut rng).unwrap();
            let (_, trials) = find_good_subspace(&a, &b, 1, &mut rng, 64).unwrap();
            total_trials += trials;
        }
        assert!(total_trials as f64 / 100.0 <= 2.5);
    }

    #[test]
    fn pipeline_full_dim_smoke() {
        let s = space(8, 3);
        let mut rng = SeededRng::seed_from_u64(37);
        let e = random_subset(&s, 240, &mut rng).unwrap();
        let trace =
            reduction_pipeline(&e, PipelineMode::FullDim { m: 2, k: 1 }, &mut rng, 64).unwrap();
        assert!(trace.all_ok(), "{:?}", trace.checks);
        assert!(trace.containment_ok);
        assert_eq!(trace.e_size, 240);
        assert!(5 * trace.proj_e_size >= trace.e_size);
        assert!(5 * trace.proj_t_size >= trace.t_size);
    }

    #[test]
    fn pipeline_identity_mode_preserves_sizes() {
        // k = n-1: gamma = {0}, projections are bijections.
        let s = space(4, 2);
        let mut rng = SeededRng::seed_from_u64(41);
        let e = random_subset(&s, 16, &mut rng).unwrap();
        let trace =
            reduction_pipeline(&e, PipelineMode::Conjecture { k: 1 }, &mut rng, 64).unwrap();
        assert_eq!(trace.proj_e_size, trace.e_size);
        assert_eq!(trace.proj_t_size, trace.t_size);
        assert!(trace.all_ok());
    }

    #[test]
    fn pipeline_rejects_bad_modes() {
        let s = space(3, 2);
        let e = PointSet::new(s.clone());
        let mut rng = SeededRng::seed_from_u64(43);
        assert!(matches!(
            reduction_pipeline(&e, PipelineMode::Conjecture { k: 1 }, &mut rng, 8),
            Err(TheoremError::PreconditionViolated(_))
        ));
        assert!(matches!(
            reduction_pipeline(&e, PipelineMode::FullDim { m: 1, k: 5 }, &mut rng, 8),
            Err(TheoremError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn report_json_and_csv_shape() {
        let s = space(3, 2);
        let e = x_axis_line(&s);
        let report = check_weak_bound(&e, &rat_u64(2)).with_seed(7);
        let v = report.to_json();
        assert_eq!(v["theorem_id"], "WeakProjBound");
        assert_eq!(v["lhs"], "3/1");
        assert_eq!(v["rhs"], "9/1");
        assert_eq!(v["holds"], true);
        assert_eq!(v["seed"], 7);
        let row = report.to_csv_row();
        assert_eq!(row.split(',').count(), BoundReport::csv_header().split(',').count());
    }

    #[test]
    fn theorem_id_roundtrip() {
        for id in TheoremId::ALL {
            let parsed: TheoremId = id.as_str().parse().unwrap();
            assert_eq!(parsed, id);
        }
        assert_eq!("weak-bound".parse::<TheoremId>().unwrap(), TheoremId::WeakProjBound);
        assert!("nope".parse::<TheoremId>().is_err());
    }
}
