//! Fibred holomorphic maps `(θ, z) ↦ (θ + α, Σ_k ρ_k(θ) z^k)` over an
//! irrational rotation, and the fibred rotation number of the invariant
//! curve `z = 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{even_panels, mod1, simpson_unit, unwrap_phases, TAU};

/// Golden-mean rotation `(√5 - 1) / 2`, the default base.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `|ρ(θ)|` below this counts as vanishing.
pub const VANISH_TOL: f64 = 1e-12;

/// Finite sum `Σ c_k e^{2πikθ}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Harmonic>", into = "Vec<Harmonic>")]
pub struct TrigPoly {
    harmonics: BTreeMap<i32, Complex64>,
}

/// One serialized term `(re + i im) e^{2πikθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: i32,
    pub re: f64,
    pub im: f64,
}

impl From<Vec<Harmonic>> for TrigPoly {
    fn from(terms: Vec<Harmonic>) -> Self {
        TrigPoly::from_terms(terms.into_iter().map(|h| (h.k, Complex64::new(h.re, h.im))))
    }
}

impl From<TrigPoly> for Vec<Harmonic> {
    fn from(p: TrigPoly) -> Self {
        p.harmonics
            .into_iter()
            .map(|(k, c)| Harmonic { k, re: c.re, im: c.im })
            .collect()
    }
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn constant(c: Complex64) -> Self {
        TrigPoly::from_terms([(0, c)])
    }

    /// Sums repeated frequencies and drops exact zeros.
    pub fn from_terms<I: IntoIterator<Item = (i32, Complex64)>>(terms: I) -> Self {
        let mut harmonics = BTreeMap::new();
        for (k, c) in terms {
            *harmonics.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        harmonics.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        TrigPoly { harmonics }
    }

    /// `amp · cos(2π k θ)`.
    pub fn cos(amp: f64, k: i32) -> Self {
        let half = Complex64::new(amp / 2.0, 0.0);
        TrigPoly::from_terms([(k, half), (-k, half)])
    }

    /// `amp · sin(2π k θ)`.
    pub fn sin(amp: f64, k: i32) -> Self {
        let half = Complex64::new(0.0, -amp / 2.0);
        TrigPoly::from_terms([(k, half), (-k, -half)])
    }

    pub fn coefficient(&self, k: i32) -> Complex64 {
        self.harmonics.get(&k).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.harmonics.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.harmonics
            .iter()
            .map(|(&k, &c)| c * Complex64::from_polar(1.0, TAU * k as f64 * theta))
            .sum()
    }

    /// `θ ↦ p(θ + shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        TrigPoly::from_terms(
            self.terms()
                .map(|(k, c)| (k, c * Complex64::from_polar(1.0, TAU * k as f64 * shift))),
        )
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        TrigPoly::from_terms(self.terms().map(|(k, c)| (k, c * s)))
    }

    pub fn add(&self, other: &TrigPoly) -> Self {
        TrigPoly::from_terms(self.terms().chain(other.terms()))
    }

    pub fn mul(&self, other: &TrigPoly) -> Self {
        TrigPoly::from_terms(
            self.terms()
                .flat_map(|(j, a)| other.terms().map(move |(k, b)| (j + k, a * b))),
        )
    }

    pub fn powi(&self, e: u32) -> Self {
        (0..e).fold(TrigPoly::constant(Complex64::new(1.0, 0.0)), |acc, _| acc.mul(self))
    }
}

/// Fibre coefficient `ρ(θ) = N(θ) / D(θ) · exp(E(θ))` with trig-polynomial
/// numerator, optional denominator and optional exponent.
///
/// The plain trig-polynomial case is `D = 1, E = 0`. The quotient and
/// exponential factors make the family closed under the fibre-linear
/// conjugacies `ρ ↦ ρ(θ) c(θ)^k / c(θ + α)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficient {
    pub harmonics: TrigPoly,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<TrigPoly>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<TrigPoly>,
}

impl From<TrigPoly> for Coefficient {
    fn from(p: TrigPoly) -> Self {
        Coefficient { harmonics: p, denominator: None, exponent: None }
    }
}

impl Coefficient {
    pub fn constant(c: Complex64) -> Self {
        TrigPoly::constant(c).into()
    }

    /// `exp(E(θ))`.
    pub fn exp(exponent: TrigPoly) -> Self {
        Coefficient {
            harmonics: TrigPoly::constant(Complex64::new(1.0, 0.0)),
            denominator: None,
            exponent: Some(exponent),
        }
    }

    /// `exp(2πi (beta + phase(θ)))` for a real-valued `phase`.
    pub fn unit_phase(beta: f64, phase: &TrigPoly) -> Self {
        let e = TrigPoly::constant(Complex64::new(beta, 0.0)).add(phase);
        Coefficient::exp(e.scaled(Complex64::new(0.0, TAU)))
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        let mut v = self.harmonics.eval(theta);
        if let Some(d) = &self.denominator {
            v /= d.eval(theta);
        }
        if let Some(e) = &self.exponent {
            v *= e.eval(theta).exp();
        }
        v
    }

    pub fn translated(&self, shift: f64) -> Self {
        Coefficient {
            harmonics: self.harmonics.translated(shift),
            denominator: self.denominator.as_ref().map(|d| d.translated(shift)),
            exponent: self.exponent.as_ref().map(|e| e.translated(shift)),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Coefficient { harmonics: self.harmonics.scaled(Complex64::new(s, 0.0)), ..self.clone() }
    }

    pub fn mul(&self, other: &Coefficient) -> Self {
        let denominator = match (&self.denominator, &other.denominator) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => Some(a.mul(b)),
        };
        let exponent = match (&self.exponent, &other.exponent) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => Some(a.add(b)),
        };
        Coefficient { harmonics: self.harmonics.mul(&other.harmonics), denominator, exponent }
    }

    pub fn powi(&self, e: u32) -> Self {
        Coefficient {
            harmonics: self.harmonics.powi(e),
            denominator: self.denominator.as_ref().map(|d| d.powi(e)),
            exponent: self.exponent.as_ref().map(|x| x.scaled(Complex64::new(e as f64, 0.0))),
        }
    }

    pub fn recip(&self) -> Self {
        Coefficient {
            harmonics: self
                .denominator
                .clone()
                .unwrap_or_else(|| TrigPoly::constant(Complex64::new(1.0, 0.0))),
            denominator: Some(self.harmonics.clone()),
            exponent: self.exponent.as_ref().map(|x| x.scaled(Complex64::new(-1.0, 0.0))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.harmonics.is_zero()
    }
}

/// Fibred polynomial map over `θ ↦ θ + alpha`; `coeffs[d - 1]` multiplies `z^d`.
///
/// `alpha` is meant to be irrational; floats cannot express that, so it is
/// only range-checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRecord", into = "MapRecord")]
pub struct FibredPolyMap {
    alpha: f64,
    coeffs: Vec<Coefficient>,
}

#[derive(Serialize, Deserialize)]
struct MapRecord {
    alpha: f64,
    coeffs: Vec<DegreeRecord>,
}

#[derive(Serialize, Deserialize)]
struct DegreeRecord {
    degree: usize,
    #[serde(flatten)]
    coefficient: Coefficient,
}

impl TryFrom<MapRecord> for FibredPolyMap {
    type Error = Error;

    fn try_from(rec: MapRecord) -> Result<Self> {
        let top = rec.coeffs.iter().map(|c| c.degree).max().unwrap_or(0);
        let mut coeffs = vec![Coefficient::from(TrigPoly::zero()); top];
        for c in rec.coeffs {
            if c.degree == 0 {
                return Err(Error::InvalidParameter(
                    "degree 0 is fixed to zero (invariant curve f(0) = 0)".into(),
                ));
            }
            coeffs[c.degree - 1] = c.coefficient;
        }
        FibredPolyMap::new(rec.alpha, coeffs)
    }
}

impl From<FibredPolyMap> for MapRecord {
    fn from(m: FibredPolyMap) -> Self {
        MapRecord {
            alpha: m.alpha,
            coeffs: m
                .coeffs
                .into_iter()
                .enumerate()
                .filter(|(d, c)| *d == 0 || !c.is_zero())
                .map(|(d, coefficient)| DegreeRecord { degree: d + 1, coefficient })
                .collect(),
        }
    }
}

impl FibredPolyMap {
    pub fn new(alpha: f64, coeffs: Vec<Coefficient>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaRange(alpha));
        }
        if coeffs.is_empty() || coeffs[0].is_zero() {
            return Err(Error::InvalidParameter("the linear coefficient must be present".into()));
        }
        Ok(FibredPolyMap { alpha, coeffs })
    }

    pub fn linear(alpha: f64, rho1: Coefficient) -> Result<Self> {
        FibredPolyMap::new(alpha, vec![rho1])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &[Coefficient] {
        &self.coeffs
    }

    pub fn linear_coefficient(&self) -> &Coefficient {
        &self.coeffs[0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Same fibre maps over a different base rotation. Rationals allowed.
    pub(crate) fn with_base(&self, alpha: f64, rho1: Coefficient) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = rho1;
        FibredPolyMap { alpha, coeffs }
    }

    /// Range, non-vanishing and zero-degree checks on `grid` points.
    pub fn validate(&self, grid: usize) -> Result<()> {
        let degree = winding_degree(self, grid)?;
        if degree != 0 {
            return Err(Error::NonzeroDegree { degree });
        }
        Ok(())
    }

    /// `validate` plus `|indifference_defect| <= tol`.
    pub fn check_indifferent(&self, tol: f64, grid: usize) -> Result<f64> {
        self.validate(grid)?;
        let defect = indifference_defect(self, grid)?;
        if defect.abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "invariant curve not indifferent: defect {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(defect)
    }
}

/// `f_θ(z) = Σ ρ_k(θ) z^k` by Horner's rule.
pub fn eval_fibre(map: &FibredPolyMap, theta: f64, z: Complex64) -> Complex64 {
    map.coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c.eval(theta)) * z)
}

fn samples(coef: &Coefficient, panels: usize) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let thetas: Vec<f64> = (0..=panels).map(|j| j as f64 / panels as f64).collect();
    let values: Vec<Complex64> = thetas.iter().map(|&t| coef.eval(t)).collect();
    if let Some(j) = values.iter().position(|v| !(v.norm() > VANISH_TOL)) {
        return Err(Error::Vanishing { theta: thetas[j] });
    }
    Ok((thetas, values))
}

/// Continuous argument of `coef` at `j / panels`, `j = 0..=panels`.
pub fn unwrapped_phase(coef: &Coefficient, panels: usize) -> Result<Vec<f64>> {
    let (thetas, values) = samples(coef, panels)?;
    let wrapped: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    unwrap_phases(&thetas, &wrapped)
}

/// Winding number of `θ ↦ coef(θ)` around 0.
pub fn coefficient_degree(coef: &Coefficient, grid: usize) -> Result<i64> {
    let phase = unwrapped_phase(coef, grid.max(2))?;
    Ok(((phase[phase.len() - 1] - phase[0]) / TAU).round() as i64)
}

/// Winding degree of `θ ↦ ρ₁(θ)`.
pub fn winding_degree(map: &FibredPolyMap, grid: usize) -> Result<i64> {
    coefficient_degree(map.linear_coefficient(), grid)
}

/// `∫ log|ρ₁(θ)| dθ` by composite Simpson; zero for an indifferent curve.
pub fn indifference_defect(map: &FibredPolyMap, grid: usize) -> Result<f64> {
    let panels = even_panels(grid);
    let (_, values) = samples(map.linear_coefficient(), panels)?;
    let logs: Vec<f64> = values.iter().map(|v| v.norm().ln()).collect();
    simpson_unit(&logs)
}

/// Fibred rotation number `(1/2π) ∫ arg ρ₁(θ) dθ` reduced to `[0, 1)`.
///
/// Only the phase enters; the log-modulus is reported by
/// [`indifference_defect`].
pub fn rho_t(map: &FibredPolyMap, grid: usize) -> Result<f64> {
    Ok(mod1(rho_t_lift(map, grid)?))
}

/// As [`rho_t`] without the final reduction; the branch at `θ = 0` is the
/// principal one.
pub fn rho_t_lift(map: &FibredPolyMap, grid: usize) -> Result<f64> {
    let panels = even_panels(grid);
    let phase = unwrapped_phase(map.linear_coefficient(), panels)?;
    let degree = ((phase[panels] - phase[0]) / TAU).round() as i64;
    if degree != 0 {
        return Err(Error::NonzeroDegree { degree });
    }
    Ok(simpson_unit(&phase)? / TAU)
}

/// Conjugates by `h_θ(z) = c(θ) z`: `ρ_k ↦ ρ_k(θ) c(θ)^k / c(θ + α)`.
///
/// The conjugacy is fibre-linear, so the polynomial degree is preserved and
/// nothing is truncated.
pub fn conjugate_linear_part(map: &FibredPolyMap, c: &Coefficient, grid: usize) -> Result<FibredPolyMap> {
    let degree = coefficient_degree(c, grid)?;
    if degree != 0 {
        return Err(Error::NonzeroDegree { degree });
    }
    let shifted_inv = c.translated(map.alpha).recip();
    let coeffs = map
        .coeffs
        .iter()
        .enumerate()
        .map(|(d, rho)| rho.mul(&c.powi(d as u32 + 1)).mul(&shifted_inv))
        .collect();
    Ok(FibredPolyMap { alpha: map.alpha, coeffs })
}
