//! Rational approximants of a fibred map over continued-fraction
//! convergents `p/q` of the base rotation, and the finite-fibre rotation
//! number `(1/2πq) Σ_j arg ρ₁⁽ⁿ⁾(θ̃ + j p/q)` of their linear parts.

use std::fmt::Write as _;

use serde::Serialize;

use crate::circle::CircleMapLift;
use crate::error::{Error, Result};
use crate::holo::{rho_t, Coefficient, FibredPolyMap, VANISH_TOL};
use crate::numeric::{circular_distance, mod1, pairwise_sum, principal_step, MAX_UNWRAP_STEP, TAU};
use crate::skewfibre::FiniteFibreSystem;

/// Denominators beyond this exceed what a double resolves.
pub const MAX_DENOMINATOR: i64 = 100_000_000;

/// `|ρ₁|` log-sum tolerance per orbit point for the normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Largest `|∫ log|ρ₁||` accepted as indifferent.
pub const INDIFFERENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub p: i64,
    pub q: i64,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Why a continued-fraction expansion stopped before `count` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `alpha` equals the last convergent in double precision.
    Exact,
    /// The next denominator exceeds [`MAX_DENOMINATOR`].
    DenominatorLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergentExpansion {
    pub convergents: Vec<Convergent>,
    pub terminated: Option<Termination>,
}

/// Continued-fraction convergents `p/q` of `alpha ∈ (0, 1)`, skipping the
/// trivial `0/1`.
pub fn convergents(alpha: f64, count: usize) -> Result<ConvergentExpansion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaRange(alpha));
    }
    let (mut p_prev, mut p) = (1i64, 0i64);
    let (mut q_prev, mut q) = (0i64, 1i64);
    let mut rest = alpha;
    let mut out = Vec::with_capacity(count);
    let mut terminated = None;
    while out.len() < count {
        if rest == 0.0 {
            terminated = Some(Termination::Exact);
            break;
        }
        let y = 1.0 / rest;
        let a = y.floor();
        rest = y - a;
        if a > MAX_DENOMINATOR as f64 {
            terminated = Some(Termination::DenominatorLimit);
            break;
        }
        let a = a as i64;
        let (p_next, q_next) = (a * p + p_prev, a * q + q_prev);
        if q_next > MAX_DENOMINATOR {
            terminated = Some(Termination::DenominatorLimit);
            break;
        }
        (p_prev, p, q_prev, q) = (p, p_next, q, q_next);
        out.push(Convergent { p, q });
        if p as f64 / q as f64 == alpha {
            terminated = Some(Termination::Exact);
            break;
        }
    }
    if terminated.is_none() && rest == 0.0 {
        terminated = Some(Termination::Exact);
    }
    Ok(ConvergentExpansion { convergents: out, terminated })
}

/// Linear part of `F` over the rational base `p/q`, renormalized in modulus
/// so that the log-moduli along the periodic orbit of `anchor` sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteApproximant {
    pub base: Convergent,
    pub anchor: f64,
    pub map: FibredPolyMap,
    /// Positive factor `e^{-S/q}` applied to `ρ₁`.
    pub correction: f64,
}

impl FiniteApproximant {
    /// Orbit `θ̃ + j p/q mod 1`, `j = 0..q`.
    pub fn orbit(&self) -> Vec<f64> {
        orbit_points(self.anchor, self.base)
    }

    /// `Σ_j log|ρ₁⁽ⁿ⁾(θ_j)|`; zero by construction.
    pub fn normalization_residual(&self) -> f64 {
        let rho1 = self.map.linear_coefficient();
        pairwise_sum(&self.orbit().iter().map(|&t| rho1.eval(t).norm().ln()).collect::<Vec<_>>())
    }
}

fn orbit_points(anchor: f64, c: Convergent) -> Vec<f64> {
    (0..c.q)
        .map(|j| mod1(anchor + ((j * c.p).rem_euclid(c.q)) as f64 / c.q as f64))
        .collect()
}

/// `ρ₁⁽ⁿ⁾ = e^{-S/q} ρ₁` with `S = Σ_{j<q} log|ρ₁(θ̃ + j p/q)|`; higher
/// coefficients are kept.
pub fn build_approximant(map: &FibredPolyMap, c: Convergent, anchor: f64) -> Result<FiniteApproximant> {
    if c.q < 1 {
        return Err(Error::InvalidParameter(format!("convergent denominator {} < 1", c.q)));
    }
    let anchor = mod1(anchor);
    let rho1 = map.linear_coefficient();
    let mut logs = Vec::with_capacity(c.q as usize);
    for t in orbit_points(anchor, c) {
        let v = rho1.eval(t);
        if !(v.norm() > VANISH_TOL) {
            return Err(Error::Vanishing { theta: t });
        }
        logs.push(v.norm().ln());
    }
    let s = pairwise_sum(&logs);
    let correction = (-s / c.q as f64).exp();
    Ok(FiniteApproximant {
        base: c,
        anchor,
        map: map.with_base(c.value(), rho1.scaled(correction)),
        correction,
    })
}

/// Minimum samples along the unit path used to carry the argument branch.
const PATH_SAMPLES: usize = 1024;
const MAX_BISECTIONS: u32 = 30;

fn carry_phase(coef: &Coefficient, t0: f64, t1: f64, phase0: f64, depth: u32) -> Result<f64> {
    let v0 = coef.eval(t0);
    let v1 = coef.eval(t1);
    if !(v1.norm() > VANISH_TOL) {
        return Err(Error::Vanishing { theta: mod1(t1) });
    }
    let step = principal_step(v0.arg(), v1.arg());
    if step.abs() <= 0.25 * MAX_UNWRAP_STEP {
        return Ok(phase0 + step);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::UnwrapAmbiguity { theta: mod1(t1), step });
    }
    let mid = 0.5 * (t0 + t1);
    let pm = carry_phase(coef, t0, mid, phase0, depth + 1)?;
    carry_phase(coef, mid, t1, pm, depth + 1)
}

/// Continuous branch of `arg ρ₁⁽ⁿ⁾ / 2π` at the orbit points, in orbit
/// order. The branch starts principal at the anchor and is carried along
/// `[θ̃, θ̃ + 1]`, refining where the phase moves fast.
pub fn chain_angles(a: &FiniteApproximant) -> Result<Vec<f64>> {
    let coef = a.map.linear_coefficient();
    let q = a.base.q as usize;
    let sub = PATH_SAMPLES.div_ceil(q).max(1);
    let h = 1.0 / (q * sub) as f64;
    let start = coef.eval(a.anchor);
    if !(start.norm() > VANISH_TOL) {
        return Err(Error::Vanishing { theta: a.anchor });
    }
    // phase at anchor + k/q, k = 0..=q
    let mut by_offset = Vec::with_capacity(q + 1);
    let mut phase = start.arg();
    by_offset.push(phase);
    for k in 0..q {
        for s in 0..sub {
            let t0 = a.anchor + (k * sub + s) as f64 * h;
            phase = carry_phase(coef, t0, t0 + h, phase, 0)?;
        }
        by_offset.push(phase);
    }
    let degree = ((by_offset[q] - by_offset[0]) / TAU).round() as i64;
    if degree != 0 {
        return Err(Error::NonzeroDegree { degree });
    }
    let (p, qi) = (a.base.p, a.base.q);
    Ok((0..qi)
        .map(|j| by_offset[(j * p).rem_euclid(qi) as usize] / TAU)
        .collect())
}

/// Finite-fibre rotation number of the linear chain (lift value).
pub fn rho_ff_chain(a: &FiniteApproximant) -> Result<f64> {
    let angles = chain_angles(a)?;
    Ok(pairwise_sum(&angles) / angles.len() as f64)
}

/// The `q`-fibre system of rigid rotations by the chain angles.
pub fn angular_system(a: &FiniteApproximant) -> Result<FiniteFibreSystem> {
    FiniteFibreSystem::new(chain_angles(a)?.into_iter().map(CircleMapLift::rigid).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub p: i64,
    pub q: i64,
    pub rho_ff: f64,
    pub circ_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub anchor: f64,
    pub rho_t: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    /// `q,rho_ff,circ_dist` with a header line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["q", "rho_ff", "circ_dist"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.q.to_string(), r.rho_ff.to_string(), r.circ_dist.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

impl std::fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        writeln!(s, "rho_T = {}", self.rho_t)?;
        for r in &self.rows {
            writeln!(s, "{:>8}/{:<8} {:>22} {:>12.3e}", r.p, r.q, r.rho_ff, r.circ_dist)?;
        }
        f.write_str(&s)
    }
}

/// Riemann-sum rotation numbers along `convergents`, each compared with
/// `rho_t(F)` (computed on `grid` panels) in circular distance.
pub fn riemann_convergence(
    map: &FibredPolyMap,
    convergents: &[Convergent],
    anchor: f64,
    grid: usize,
) -> Result<ConvergenceTable> {
    map.check_indifferent(INDIFFERENCE_TOL, grid)?;
    let target = rho_t(map, grid)?;
    let mut rows = Vec::with_capacity(convergents.len());
    for &c in convergents {
        let a = build_approximant(map, c, anchor)?;
        let value = rho_ff_chain(&a)?;
        rows.push(ConvergenceRow { p: c.p, q: c.q, rho_ff: value, circ_dist: circular_distance(value, target) });
    }
    Ok(ConvergenceTable { anchor: mod1(anchor), rho_t: target, rows })
}
