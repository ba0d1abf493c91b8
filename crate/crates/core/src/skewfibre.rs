//! Finite-fibre circle homeomorphisms `G(i, x) = (i + 1, g_i(x))` on
//! `Z_n × T¹`, their step function `Psi^(m)` and rotation number `rho_ff`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{bracket_from_displacement, rho_bracket, CircleMapLift, LiftedPoint, RotationEstimate};
use crate::error::{Error, Result};

/// `n` lifts; lift `i` maps fibre `i` to fibre `i + 1 mod n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRecord", into = "SystemRecord")]
pub struct FiniteFibreSystem {
    lifts: Vec<CircleMapLift>,
}

#[derive(Serialize, Deserialize)]
struct SystemRecord {
    n: usize,
    lifts: Vec<CircleMapLift>,
}

impl TryFrom<SystemRecord> for FiniteFibreSystem {
    type Error = Error;

    fn try_from(rec: SystemRecord) -> Result<Self> {
        if rec.n != rec.lifts.len() {
            return Err(Error::InvalidParameter(format!(
                "system declares n = {} but lists {} lifts",
                rec.n,
                rec.lifts.len()
            )));
        }
        FiniteFibreSystem::new(rec.lifts)
    }
}

impl From<FiniteFibreSystem> for SystemRecord {
    fn from(sys: FiniteFibreSystem) -> Self {
        SystemRecord { n: sys.lifts.len(), lifts: sys.lifts }
    }
}

impl FiniteFibreSystem {
    pub fn new(lifts: Vec<CircleMapLift>) -> Result<Self> {
        if lifts.is_empty() {
            return Err(Error::InvalidParameter("a finite-fibre system needs n >= 1 lifts".into()));
        }
        for lift in &lifts {
            lift.check_structure()?;
        }
        Ok(FiniteFibreSystem { lifts })
    }

    pub fn n(&self) -> usize {
        self.lifts.len()
    }

    pub fn lifts(&self) -> &[CircleMapLift] {
        &self.lifts
    }

    fn lift(&self, i: usize) -> &CircleMapLift {
        &self.lifts[i % self.lifts.len()]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::FibreIndex { index: i, n: self.n() });
        }
        Ok(())
    }

    /// `g_{i+len-1} ∘ … ∘ g_i` as a single lift.
    pub fn chain_from(&self, i: usize, len: usize) -> CircleMapLift {
        CircleMapLift::compose((0..len).map(|k| self.lift(i + k).clone()).collect())
    }

    /// The first-return lift `g_{n-1} ∘ … ∘ g_0` on fibre 0.
    pub fn return_lift(&self) -> CircleMapLift {
        self.chain_from(0, self.n())
    }

    /// Adds an integer to lift `i`.
    pub fn with_shift(&self, i: usize, p: i64) -> Result<Self> {
        self.check_index(i)?;
        let mut lifts = self.lifts.clone();
        lifts[i] = lifts[i].shifted(p);
        Ok(FiniteFibreSystem { lifts })
    }
}

fn advance(sys: &FiniteFibreSystem, i: usize, start: LiftedPoint, m: u64) -> LiftedPoint {
    let n = sys.n();
    let mut p = start;
    let mut fibre = i;
    for _ in 0..m {
        p.apply(&sys.lifts[fibre]);
        fibre += 1;
        if fibre == n {
            fibre = 0;
        }
    }
    p
}

/// `Psi^(m)(i, x)`: real displacement of `(i, x)` after `m` steps.
pub fn step_psi(sys: &FiniteFibreSystem, i: usize, x: f64, m: u64) -> Result<f64> {
    sys.check_index(i)?;
    if m == 0 {
        return Ok(0.0);
    }
    let origin = LiftedPoint::new(x);
    Ok(advance(sys, i, origin, m).displacement_from(&origin))
}

/// `rho_ff` through the return lift on fibre 0: its rotation bracket after
/// `cycles` iterations, divided by `n`. The raw lift value is returned.
pub fn rho_ff(sys: &FiniteFibreSystem, cycles: u64) -> Result<RotationEstimate> {
    rho_ff_from(sys, 0, 0.0, cycles)
}

/// As [`rho_ff`] but starting from fibre `i` at `x`.
pub fn rho_ff_from(sys: &FiniteFibreSystem, i: usize, x: f64, cycles: u64) -> Result<RotationEstimate> {
    sys.check_index(i)?;
    let est = rho_bracket(&sys.chain_from(i, sys.n()), x, cycles)?;
    Ok(est.scaled(1.0 / sys.n() as f64))
}

/// `Psi^(m)(i, x) / m` cross-check. `m` is rounded down to a multiple of
/// `n`, where the bound `|Psi^(an) - a n rho_ff| < 1` holds.
pub fn rho_ff_by_steps(sys: &FiniteFibreSystem, i: usize, x: f64, m: u64) -> Result<RotationEstimate> {
    sys.check_index(i)?;
    let n = sys.n() as u64;
    let used = m - m % n;
    if used == 0 {
        return Err(Error::InvalidParameter(format!("need at least n = {n} steps (got {m})")));
    }
    let origin = LiftedPoint::new(x);
    let disp = advance(sys, i, origin, used).displacement_from(&origin);
    Ok(bracket_from_displacement(disp, used))
}

/// Worst deviations observed while sampling both parts of the step lemma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLemmaReport {
    pub samples: usize,
    /// `max |Psi^(m)(i, x + k) - Psi^(m)(i, x)|`.
    pub periodicity_residual: f64,
    /// `max |Psi^(m)(i, x) - Psi^(m)(i, x')|`.
    pub spread: f64,
    pub violations: usize,
}

impl StepLemmaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const PERIODICITY_TOL: f64 = 1e-10;
pub const SPREAD_TOL: f64 = 1e-9;

/// Samples `(i, x, x', k, m)` with `m <= max_steps` and checks that
/// `Psi^(m)` is 1-periodic in `x` and varies by at most 1 across `x`.
pub fn check_step_lemma(
    sys: &FiniteFibreSystem,
    samples: usize,
    max_steps: u64,
    seed: u64,
) -> StepLemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = StepLemmaReport { samples, periodicity_residual: 0.0, spread: 0.0, violations: 0 };
    for _ in 0..samples {
        let i = rng.gen_range(0..sys.n());
        let x: f64 = rng.gen_range(-4.0..4.0);
        let x2: f64 = rng.gen_range(-4.0..4.0);
        let k = rng.gen_range(-8i64..=8) as f64;
        let m = rng.gen_range(1..=max_steps.max(1));
        let psi = step_psi(sys, i, x, m).expect("index sampled in range");
        let shifted = step_psi(sys, i, x + k, m).expect("index sampled in range");
        let other = step_psi(sys, i, x2, m).expect("index sampled in range");
        let residual = (shifted - psi).abs();
        let spread = (other - psi).abs();
        report.periodicity_residual = report.periodicity_residual.max(residual);
        report.spread = report.spread.max(spread);
        if residual > PERIODICITY_TOL || spread > 1.0 + SPREAD_TOL {
            report.violations += 1;
        }
    }
    report
}

/// Constant `C` with `Psi^(m+r) <= Psi^(m) + Psi^(r) + C` for all `m, r, i, x`.
///
/// Padding `r` by `s = -r mod n` gives
/// `C = 2 + max_s (sup Psi^(s) - inf Psi^(s))`, sup and inf taken over all
/// fibres and points. Both are estimated on `grid` points per fibre and
/// widened by the grid step, which bounds `Psi^(s)` between grid points
/// because `G^s` is increasing.
pub fn subadditive_constant(sys: &FiniteFibreSystem, grid: usize) -> f64 {
    let n = sys.n();
    let h = 1.0 / grid.max(1) as f64;
    let mut worst: f64 = 0.0;
    for s in 1..n as u64 {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for j in 0..n {
            for g in 0..grid.max(1) {
                let psi = step_psi(sys, j, g as f64 * h, s).expect("index in range");
                hi = hi.max(psi);
                lo = lo.min(psi);
            }
        }
        worst = worst.max(hi - lo + 2.0 * h);
    }
    2.0 + worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub samples: usize,
    pub constant: f64,
    /// `max (Psi^(m+r) - Psi^(m) - Psi^(r))` over the samples.
    pub worst_excess: f64,
    pub violations: usize,
}

/// Samples random `(m, r, i, x)` against [`subadditive_constant`].
pub fn check_subadditivity(
    sys: &FiniteFibreSystem,
    samples: usize,
    max_steps: u64,
    grid: usize,
    seed: u64,
) -> SubadditivityReport {
    let constant = subadditive_constant(sys, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let m = rng.gen_range(0..=max_steps);
        let r = rng.gen_range(0..=max_steps);
        let i = rng.gen_range(0..sys.n());
        let x: f64 = rng.gen_range(-2.0..2.0);
        let joint = step_psi(sys, i, x, m + r).expect("index in range");
        let a = step_psi(sys, i, x, m).expect("index in range");
        let b = step_psi(sys, i, x, r).expect("index in range");
        let excess = joint - a - b;
        worst_excess = worst_excess.max(excess);
        if excess > constant + SPREAD_TOL {
            violations += 1;
        }
    }
    SubadditivityReport { samples, constant, worst_excess, violations }
}

/// Comparison of `rho_ff(G^m)` with `m rho_ff(G)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub m: u64,
    pub power: RotationEstimate,
    pub base: RotationEstimate,
    pub difference: f64,
    /// Sum of the half-widths of both sides.
    pub tolerance: f64,
}

impl PowerReport {
    pub fn passed(&self) -> bool {
        self.difference.abs() <= self.tolerance
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `rho_ff(G^m)`: `G^m` moves fibre `i` to `i + m`, so fibre 0 returns after
/// `L = n / gcd(n, m)` applications. The composite of those `m L` lifts has
/// rotation number `L rho_ff(G^m)`.
pub fn rho_ff_power(sys: &FiniteFibreSystem, m: u64, cycles: u64) -> Result<RotationEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("power must be >= 1".into()));
    }
    let n = sys.n() as u64;
    let period = n / gcd(n, m);
    let chain = sys.chain_from(0, (m * period) as usize);
    Ok(rho_bracket(&chain, 0.0, cycles)?.scaled(1.0 / period as f64))
}

pub fn power_rho_check(sys: &FiniteFibreSystem, m: u64, cycles: u64) -> Result<PowerReport> {
    let power = rho_ff_power(sys, m, cycles)?;
    let base = rho_ff(sys, cycles)?;
    let mf = m as f64;
    Ok(PowerReport {
        m,
        power,
        base,
        difference: power.value - mf * base.value,
        tolerance: power.half_width() + mf * base.half_width(),
    })
}

/// Conjugates by `H(i, x) = (i, h_i(x))`: lift `i` becomes `h_{i+1}⁻¹ ∘ g_i ∘ h_i`.
///
/// Each `h_i` must have an exact inverse (rigid or piecewise-linear) and
/// satisfy `h_i(0) ∈ [0, 1)`.
pub fn conjugate_system(sys: &FiniteFibreSystem, hs: &[CircleMapLift]) -> Result<FiniteFibreSystem> {
    let n = sys.n();
    if hs.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} conjugating maps, got {}",
            hs.len()
        )));
    }
    let mut inverses = Vec::with_capacity(n);
    for (index, h) in hs.iter().enumerate() {
        let reject = |reason: String| Error::InvalidConjugacy { index, reason };
        h.check_structure().map_err(|e| reject(e.to_string()))?;
        let h0 = h.eval(0.0);
        if !(0.0..1.0).contains(&h0) {
            return Err(reject(format!("h(0) = {h0} is outside [0, 1)")));
        }
        inverses.push(h.inverse().map_err(|e| reject(e.to_string()))?);
    }
    let lifts = (0..n)
        .map(|i| {
            CircleMapLift::compose(vec![
                hs[i].clone(),
                sys.lifts[i].clone(),
                inverses[(i + 1) % n].clone(),
            ])
        })
        .collect();
    Ok(FiniteFibreSystem { lifts })
}
