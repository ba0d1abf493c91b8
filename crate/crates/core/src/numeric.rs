//! Small numerical kernels shared by the estimators: mod-1 arithmetic,
//! pairwise summation, composite Simpson on periodic samples and phase
//! unwrapping.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * PI;

/// Splits `y` into `(floor(y), y - floor(y))` with the fractional part in `[0, 1)`.
#[inline]
pub fn split(y: f64) -> (i64, f64) {
    let n = y.floor();
    let mut f = y - n;
    let mut n = n as i64;
    if f >= 1.0 {
        f -= 1.0;
        n += 1;
    }
    (n, f)
}

/// Representative of `x` mod 1 in `[0, 1)`.
#[inline]
pub fn mod1(x: f64) -> f64 {
    split(x).1
}

/// Distance on the circle R/Z: `min(|a - b|, 1 - |a - b|)` after reduction.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = mod1(a - b);
    d.min(1.0 - d)
}

/// Pairwise (cascade) summation; deterministic order for a given slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Composite Simpson rule over `[0, 1]` from `panels + 1` equispaced samples.
///
/// `samples[j]` is the integrand at `j / panels`; `panels` must be even and
/// positive.
pub fn simpson_unit(samples: &[f64]) -> Result<f64> {
    let panels = samples.len().saturating_sub(1);
    if panels < 2 || panels % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "Simpson needs an even, positive panel count (got {panels})"
        )));
    }
    let h = 1.0 / panels as f64;
    let weighted: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let w = if j == 0 || j == panels {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * v
        })
        .collect();
    Ok(pairwise_sum(&weighted) * h / 3.0)
}

/// Rounds a requested grid up to the next even panel count (minimum 2).
pub fn even_panels(grid: usize) -> usize {
    let g = grid.max(2);
    g + g % 2
}

/// Principal-branch increment `arg(b / a)` in `(-pi, pi]`.
#[inline]
pub fn principal_step(from: f64, to: f64) -> f64 {
    let mut d = (to - from) % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// Largest principal increment accepted between neighbouring samples.
///
/// Increments beyond this are treated as unresolved by the grid.
pub const MAX_UNWRAP_STEP: f64 = 0.9 * PI;

/// Unwraps wrapped phases sampled at `thetas`, starting from `phases[0]`.
pub fn unwrap_phases(thetas: &[f64], phases: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(thetas.len(), phases.len());
    let mut out = Vec::with_capacity(phases.len());
    let Some(&first) = phases.first() else {
        return Ok(out);
    };
    out.push(first);
    let mut acc = first;
    for j in 1..phases.len() {
        let step = principal_step(phases[j - 1], phases[j]);
        if step.abs() > MAX_UNWRAP_STEP {
            return Err(Error::UnwrapAmbiguity { theta: thetas[j], step });
        }
        acc += step;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_keeps_fraction_in_unit_interval() {
        assert_eq!(split(2.5), (2, 0.5));
        assert_eq!(split(-0.25), (-1, 0.75));
        let (n, f) = split(-1e-17);
        assert!((0.0..1.0).contains(&f));
        assert_eq!(n as f64 + f, 0.0);
    }

    #[test]
    fn circular_distance_wraps() {
        assert!((circular_distance(0.95, 0.05) - 0.1).abs() < 1e-12);
        assert!((circular_distance(-0.25, 0.75)).abs() < 1e-12);
        assert!((circular_distance(0.2, 0.7) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 10;
        let s: Vec<f64> = (0..=n).map(|j| (j as f64 / n as f64).powi(3)).collect();
        assert!((simpson_unit(&s).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simpson_rejects_odd_panels() {
        assert!(simpson_unit(&[0.0, 1.0, 2.0]).is_ok());
        assert!(simpson_unit(&[0.0, 1.0]).is_err());
        assert!(simpson_unit(&[0.0, 1.0, 2.0, 3.0]).is_err());
        assert!(simpson_unit(&[1.0]).is_err());
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let wrapped = [0.0, 1.0, 2.0, 3.0, -3.0, -2.0];
        let t: Vec<f64> = (0..wrapped.len()).map(|j| j as f64).collect();
        let u = unwrap_phases(&t, &wrapped).unwrap();
        assert!((u[4] - (TAU - 3.0)).abs() < 1e-12);
        assert!(u.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unwrap_flags_coarse_grid() {
        let t = [0.0, 0.5];
        assert!(matches!(
            unwrap_phases(&t, &[0.0, 3.0]),
            Err(Error::UnwrapAmbiguity { .. })
        ));
    }
}
