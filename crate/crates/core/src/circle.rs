//! Lifts of orientation-preserving circle homeomorphisms and their
//! rotation numbers.
//!
//! A lift is a continuous increasing map `F: R -> R` with `F(x + 1) = F(x) + 1`.
//! Points are iterated as an integer part plus a fraction in `[0, 1)`, so long
//! orbits do not lose resolution as the integer part grows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{split, TAU};

/// Tolerance used when comparing node values and periodicity residuals.
pub const NODE_TOL: f64 = 1e-12;

/// Closed-form lift families.
///
/// `sine_family` is `F(x) = x + beta + epsilon / (2 pi) * sin(2 pi k x)`, whose
/// derivative `1 + epsilon k cos(2 pi k x)` is positive iff `|epsilon k| < 1`.
/// `piecewise_linear` interpolates `nodes` over `[0, 1]` and extends by
/// `F(x + 1) = F(x) + 1`. `composite` applies `parts` left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircleMapLift {
    Rigid { beta: f64 },
    SineFamily { beta: f64, epsilon: f64, k: u32 },
    PiecewiseLinear { nodes: Vec<[f64; 2]> },
    Composite { parts: Vec<CircleMapLift> },
}

impl CircleMapLift {
    pub fn rigid(beta: f64) -> Self {
        CircleMapLift::Rigid { beta }
    }

    pub fn identity() -> Self {
        CircleMapLift::Rigid { beta: 0.0 }
    }

    pub fn sine(beta: f64, epsilon: f64, k: u32) -> Self {
        CircleMapLift::SineFamily { beta, epsilon, k }
    }

    /// Piecewise-linear lift through `nodes`; checked structurally.
    pub fn piecewise_linear(nodes: Vec<[f64; 2]>) -> Result<Self> {
        let lift = CircleMapLift::PiecewiseLinear { nodes };
        lift.check_structure()?;
        Ok(lift)
    }

    /// `parts[last] ∘ … ∘ parts[0]`.
    pub fn compose(parts: Vec<CircleMapLift>) -> Self {
        CircleMapLift::Composite { parts }
    }

    /// The lift `F + p`.
    pub fn shifted(&self, p: i64) -> Self {
        CircleMapLift::compose(vec![self.clone(), CircleMapLift::rigid(p as f64)])
    }

    /// Analytic parameter checks. Grid sampling is done by [`validate_lift`].
    pub fn check_structure(&self) -> Result<()> {
        match self {
            CircleMapLift::Rigid { beta } => {
                if !beta.is_finite() {
                    return Err(Error::InvalidLift(format!("rigid shift {beta} is not finite")));
                }
            }
            CircleMapLift::SineFamily { beta, epsilon, k } => {
                if !beta.is_finite() || !epsilon.is_finite() {
                    return Err(Error::InvalidLift("sine family parameters must be finite".into()));
                }
                if *k == 0 {
                    return Err(Error::InvalidLift("sine family needs k >= 1".into()));
                }
                if (epsilon * *k as f64).abs() >= 1.0 {
                    return Err(Error::InvalidLift(format!(
                        "sine family not monotone: |epsilon k| = {} >= 1",
                        (epsilon * *k as f64).abs()
                    )));
                }
            }
            CircleMapLift::PiecewiseLinear { nodes } => check_nodes(nodes)?,
            CircleMapLift::Composite { parts } => {
                for part in parts {
                    part.check_structure()?;
                }
            }
        }
        Ok(())
    }

    /// Evaluates the lift at a point of `[0, 1)`, returning the image split
    /// into integer and fractional parts.
    pub fn eval_reduced(&self, frac: f64) -> (i64, f64) {
        match self {
            CircleMapLift::Rigid { beta } => {
                let (bi, bf) = split(*beta);
                let (n, f) = split(frac + bf);
                (bi + n, f)
            }
            CircleMapLift::SineFamily { beta, epsilon, k } => {
                let (bi, bf) = split(*beta);
                let wobble = epsilon / TAU * (TAU * *k as f64 * frac).sin();
                let (n, f) = split(frac + bf + wobble);
                (bi + n, f)
            }
            CircleMapLift::PiecewiseLinear { nodes } => split(interpolate(nodes, frac)),
            CircleMapLift::Composite { parts } => {
                let mut whole = 0;
                let mut f = frac;
                for part in parts {
                    let (n, g) = part.eval_reduced(f);
                    whole += n;
                    f = g;
                }
                (whole, f)
            }
        }
    }

    /// `F(x)` for any real `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut p = LiftedPoint::new(x);
        p.apply(self);
        p.value()
    }

    /// Exact inverse for rigid, piecewise-linear and composites of those.
    pub fn inverse(&self) -> Result<Self> {
        match self {
            CircleMapLift::Rigid { beta } => Ok(CircleMapLift::rigid(-beta)),
            CircleMapLift::SineFamily { .. } => Err(Error::InvalidLift(
                "sine family lifts have no closed-form inverse".into(),
            )),
            CircleMapLift::PiecewiseLinear { nodes } => {
                check_nodes(nodes)?;
                Ok(CircleMapLift::PiecewiseLinear { nodes: invert_nodes(nodes) })
            }
            CircleMapLift::Composite { parts } => {
                let inv: Result<Vec<_>> = parts.iter().rev().map(|p| p.inverse()).collect();
                Ok(CircleMapLift::Composite { parts: inv? })
            }
        }
    }

    /// Seeded random piecewise-linear homeomorphism with `interior` breakpoints
    /// and `F(0)` in `[0, 1)`.
    pub fn random_pl<R: Rng + ?Sized>(rng: &mut R, interior: usize) -> Self {
        let mut xs: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.05..0.95)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut weights: Vec<f64> = (0..=xs.len()).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let start: f64 = rng.gen_range(0.0..1.0);
        let mut nodes = Vec::with_capacity(xs.len() + 2);
        nodes.push([0.0, start]);
        let mut y = start;
        for (x, w) in xs.iter().zip(&weights) {
            y += w;
            nodes.push([*x, y]);
        }
        nodes.push([1.0, start + 1.0]);
        CircleMapLift::PiecewiseLinear { nodes }
    }
}

fn check_nodes(nodes: &[[f64; 2]]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidLift("piecewise-linear lift needs at least two nodes".into()));
    }
    if nodes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidLift("node coordinates must be finite".into()));
    }
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    if first[0] != 0.0 || last[0] != 1.0 {
        return Err(Error::InvalidLift("nodes must span x = 0 to x = 1".into()));
    }
    for w in nodes.windows(2) {
        if w[1][0] <= w[0][0] {
            return Err(Error::InvalidLift(format!("node abscissae not increasing at x = {}", w[1][0])));
        }
        if w[1][1] <= w[0][1] {
            return Err(Error::InvalidLift(format!("node values not increasing at x = {}", w[1][0])));
        }
    }
    if (last[1] - first[1] - 1.0).abs() > NODE_TOL {
        return Err(Error::InvalidLift(format!(
            "F(1) - F(0) = {} instead of 1",
            last[1] - first[1]
        )));
    }
    Ok(())
}

fn interpolate(nodes: &[[f64; 2]], frac: f64) -> f64 {
    let j = nodes.partition_point(|n| n[0] <= frac).clamp(1, nodes.len() - 1) - 1;
    let [x0, y0] = nodes[j];
    let [x1, y1] = nodes[j + 1];
    y0 + (frac - x0) * (y1 - y0) / (x1 - x0)
}

fn invert_nodes(nodes: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let start = nodes[0][1];
    let swapped: Vec<[f64; 2]> = nodes.iter().map(|&[x, y]| [y, x]).collect();
    // inverse on [start, start + 1), extended periodically
    let inv = |t: f64| -> f64 {
        let (k, _) = split(t - start);
        let s = t - k as f64;
        interpolate(&swapped, s) + k as f64
    };
    let mut breaks: Vec<f64> = nodes[..nodes.len() - 1]
        .iter()
        .map(|n| split(n[1]).1)
        .filter(|t| *t > NODE_TOL && *t < 1.0 - NODE_TOL)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= NODE_TOL);
    let y0 = inv(0.0);
    let mut out = Vec::with_capacity(breaks.len() + 2);
    out.push([0.0, y0]);
    out.extend(breaks.into_iter().map(|t| [t, inv(t)]));
    out.push([1.0, y0 + 1.0]);
    out
}

/// A real number held as `whole + frac` with `frac` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedPoint {
    pub whole: i64,
    pub frac: f64,
}

impl LiftedPoint {
    pub fn new(x: f64) -> Self {
        let (whole, frac) = split(x);
        LiftedPoint { whole, frac }
    }

    #[inline]
    pub fn apply(&mut self, lift: &CircleMapLift) {
        let (n, f) = lift.eval_reduced(self.frac);
        self.whole += n;
        self.frac = f;
    }

    pub fn value(&self) -> f64 {
        self.whole as f64 + self.frac
    }

    /// `self - origin`, computed without forming large reals first.
    pub fn displacement_from(&self, origin: &LiftedPoint) -> f64 {
        (self.whole - origin.whole) as f64 + (self.frac - origin.frac)
    }
}

/// Rotation number value with a bracket known to contain the true limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: u64,
}

impl RotationEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn overlaps(&self, other: &RotationEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    /// Multiplies value and bracket by a positive factor.
    pub fn scaled(&self, factor: f64) -> RotationEstimate {
        debug_assert!(factor > 0.0);
        RotationEstimate {
            value: self.value * factor,
            lower: self.lower * factor,
            upper: self.upper * factor,
            iterations: self.iterations,
        }
    }
}

/// Result of sampling a lift on an equispaced grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub grid_size: usize,
    /// `max |F(x + 1) - F(x) - 1|` over the grid.
    pub periodicity_residual: f64,
    /// Smallest `F(x_{j+1}) - F(x_j)` over consecutive grid points.
    pub min_increment: f64,
}

impl ValidationReport {
    pub fn periodic(&self) -> bool {
        self.periodicity_residual <= NODE_TOL
    }

    pub fn monotone(&self) -> bool {
        self.min_increment > 0.0
    }

    /// Passing is necessary, not sufficient: behaviour between grid points
    /// is not inspected.
    pub fn passed(&self) -> bool {
        self.periodic() && self.monotone()
    }
}

/// Structural checks followed by grid sampling of periodicity and monotonicity.
pub fn validate_lift(lift: &CircleMapLift, grid_size: usize) -> Result<ValidationReport> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!("grid_size must be >= 2 (got {grid_size})")));
    }
    lift.check_structure()?;
    let values: Vec<f64> = (0..=grid_size)
        .map(|j| lift.eval(j as f64 / grid_size as f64))
        .collect();
    let periodicity_residual = (0..grid_size)
        .map(|j| {
            let x = j as f64 / grid_size as f64;
            (lift.eval(x + 1.0) - values[j] - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let min_increment = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(ValidationReport { grid_size, periodicity_residual, min_increment })
}

/// `F^m(x)`; `m = 0` returns `x`.
pub fn iterate_lift(lift: &CircleMapLift, x: f64, m: u64) -> f64 {
    if m == 0 {
        return x;
    }
    let mut p = LiftedPoint::new(x);
    for _ in 0..m {
        p.apply(lift);
    }
    p.value()
}

/// Floating slack added to `|F^m(x) - x - m rho| < 1`, per iteration.
pub const SLACK_PER_STEP: f64 = 10.0 * f64::EPSILON;

/// Bracket built from a displacement `F^m(x) - x` after `m` steps.
pub fn bracket_from_displacement(displacement: f64, m: u64) -> RotationEstimate {
    let mf = m as f64;
    let value = displacement / mf;
    let half = (1.0 + SLACK_PER_STEP * mf) / mf;
    RotationEstimate { value, lower: value - half, upper: value + half, iterations: m }
}

/// `(F^m(x) - x) / m` with the classical bracket `± 1/m`, widened by
/// `10 eps` per step of accumulated rounding.
pub fn rho_bracket(lift: &CircleMapLift, x: f64, m: u64) -> Result<RotationEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("rho_bracket needs m >= 1".into()));
    }
    lift.check_structure()?;
    let origin = LiftedPoint::new(x);
    let mut p = origin;
    for _ in 0..m {
        p.apply(lift);
    }
    Ok(bracket_from_displacement(p.displacement_from(&origin), m))
}

/// `h⁻¹ ∘ F ∘ h` for an invertible `h`.
pub fn conjugate_lift(lift: &CircleMapLift, h: &CircleMapLift) -> Result<CircleMapLift> {
    Ok(CircleMapLift::compose(vec![h.clone(), lift.clone(), h.inverse()?]))
}
