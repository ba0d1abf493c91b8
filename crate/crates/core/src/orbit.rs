//! Argument-advance estimator: follow one orbit `(θ_k, z_k)` near the
//! invariant curve and average the per-step rotation of `z` about 0.
//!
//! Increments are taken on the principal branch, which is only a faithful
//! lift to the universal cover of `C \ {0}` while no single step turns by
//! half a revolution or more. Steps within `margin` of a half turn abort.

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::{RotationEstimate, SLACK_PER_STEP};
use crate::error::{Error, Result};
use crate::holo::{eval_fibre, FibredPolyMap};
use crate::numeric::{mod1, pairwise_sum, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitConfig {
    pub r_min: f64,
    pub r_max: f64,
    /// Excluded band below a half turn, in turns. Zero disables the check.
    pub margin: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig { r_min: 1e-12, r_max: 1.0, margin: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub theta: f64,
    pub re: f64,
    pub im: f64,
    /// Accumulated advance in turns after `k` steps.
    pub cumulative: f64,
}

/// Averaged turn per step, with value in `(-1/2, 1/2]`-per-step convention.
pub fn arg_advance(map: &FibredPolyMap, theta0: f64, z0: Complex64, m: usize, cfg: &OrbitConfig) -> Result<RotationEstimate> {
    run(map, theta0, z0, m, cfg, None)
}

/// As [`arg_advance`], also returning the orbit trace (`m + 1` rows).
pub fn arg_advance_traced(
    map: &FibredPolyMap,
    theta0: f64,
    z0: Complex64,
    m: usize,
    cfg: &OrbitConfig,
) -> Result<(RotationEstimate, Vec<TraceRow>)> {
    let mut trace = Vec::with_capacity(m + 1);
    let est = run(map, theta0, z0, m, cfg, Some(&mut trace))?;
    Ok((est, trace))
}

fn run(
    map: &FibredPolyMap,
    theta0: f64,
    z0: Complex64,
    m: usize,
    cfg: &OrbitConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<RotationEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("arg_advance needs m >= 1".into()));
    }
    if !(cfg.margin >= 0.0 && cfg.margin < 0.5) || !(cfg.r_min > 0.0 && cfg.r_min < cfg.r_max) {
        return Err(Error::InvalidParameter(format!("bad orbit configuration {cfg:?}")));
    }
    let check = |step: usize, z: Complex64| -> Result<()> {
        let r = z.norm();
        if !(r >= cfg.r_min && r <= cfg.r_max) {
            return Err(Error::OrbitEscape { step, modulus: r, r_min: cfg.r_min, r_max: cfg.r_max });
        }
        Ok(())
    };
    check(0, z0)?;
    let limit = 0.5 - cfg.margin;
    let alpha = map.alpha();
    let mut z = z0;
    let mut turns = Vec::with_capacity(m);
    let mut cumulative = 0.0;
    if let Some(t) = trace.as_deref_mut() {
        t.push(TraceRow { k: 0, theta: mod1(theta0), re: z.re, im: z.im, cumulative });
    }
    for k in 0..m {
        let theta = mod1(theta0 + k as f64 * alpha);
        let next = eval_fibre(map, theta, z);
        check(k + 1, next)?;
        let turn = (next / z).arg() / TAU;
        if cfg.margin > 0.0 && turn.abs() >= limit {
            return Err(Error::BranchAmbiguity { step: k + 1, turns: turn });
        }
        turns.push(turn);
        z = next;
        if let Some(t) = trace.as_deref_mut() {
            cumulative += turn;
            t.push(TraceRow { k: k + 1, theta: mod1(theta + alpha), re: z.re, im: z.im, cumulative });
        }
    }
    let mf = m as f64;
    let value = pairwise_sum(&turns) / mf;
    let half = (1.0 + SLACK_PER_STEP * mf) / mf;
    Ok(RotationEstimate { value, lower: value - half, upper: value + half, iterations: m as u64 })
}

/// Orbit trace as CSV `k,theta,re,im,cumulative`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::{Coefficient, TrigPoly, GOLDEN};

    fn rigid(beta: f64) -> FibredPolyMap {
        FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &TrigPoly::zero())).unwrap()
    }

    #[test]
    fn quarter_turns() {
        let e = arg_advance(&rigid(0.25), 0.0, Complex64::new(0.1, 0.0), 1000, &OrbitConfig::default()).unwrap();
        assert!((e.value - 0.25).abs() < 1e-14);
        assert!(e.contains(0.25));
    }

    #[test]
    fn three_quarter_turns_read_negative() {
        let e = arg_advance(&rigid(0.75), 0.0, Complex64::new(0.1, 0.0), 1000, &OrbitConfig::default()).unwrap();
        assert!((e.value + 0.25).abs() < 1e-14);
        assert!((mod1(e.value) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn near_half_turn_is_ambiguous() {
        let err = arg_advance(&rigid(0.48), 0.0, Complex64::new(0.1, 0.0), 10, &OrbitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BranchAmbiguity { step: 1, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn escape_is_reported() {
        let grow = FibredPolyMap::linear(GOLDEN, Coefficient::constant(Complex64::new(0.0, 2.0))).unwrap();
        let err = arg_advance(&grow, 0.0, Complex64::new(0.1, 0.0), 100, &OrbitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::OrbitEscape { step: 4, .. }));
        assert!(arg_advance(&grow, 0.0, Complex64::new(0.0, 0.0), 1, &OrbitConfig::default()).is_err());
    }

    #[test]
    fn trace_shape() {
        let (e, rows) =
            arg_advance_traced(&rigid(0.1), 0.2, Complex64::new(0.1, 0.0), 5, &OrbitConfig::default()).unwrap();
        assert_eq!(rows.len(), 6);
        assert!((rows[5].cumulative - 0.5).abs() < 1e-14);
        assert!((e.value - 0.1).abs() < 1e-14);
        let csv = trace_csv(&rows);
        assert!(csv.starts_with("k,theta,re,im,cumulative\n0,0.2,0.1,0"));
    }
}
