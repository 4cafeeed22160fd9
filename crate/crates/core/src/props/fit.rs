//! Least-squares machinery for the effective-property curves: univariate
//! polynomials, the non-negative Darcy–Forchheimer fit, and the bivariate
//! heat-transfer surface with cross-validated degree selection.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Dense polynomial in one variable, coefficients low → high degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly1 {
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn constant(v: f64) -> Self {
        Self { coeffs: vec![v] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value of d/dx at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
    }
}

/// Solve min ‖A·x − b‖₂ via SVD, failing on rank deficiency.
fn lstsq(a: DMatrix<f64>, b: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let ncols = a.ncols();
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * (ncols as f64);
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(Error::Fit(format!("{what}: rank-deficient system")));
    }
    svd.solve(&b, tol)
        .map_err(|e| Error::Fit(format!("{what}: {e}")))
}

/// Least-squares polynomial of the given degree through `(x, y)` points.
pub fn polyfit(points: &[(f64, f64)], degree: usize) -> Result<Poly1> {
    if points.len() < degree + 1 {
        return Err(Error::Fit(format!(
            "polynomial of degree {degree} needs at least {} points, got {}",
            degree + 1,
            points.len()
        )));
    }
    let a = DMatrix::from_fn(points.len(), degree + 1, |r, c| points[r].0.powi(c as i32));
    let b = DVector::from_fn(points.len(), |r, _| points[r].1);
    let sol = lstsq(a, b, "polyfit")?;
    Ok(Poly1 { coeffs: sol.iter().copied().collect() })
}

/// A fitted scalar property curve plus its worst-case relative misfit
/// over the input points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarPropertyFit {
    pub poly: Poly1,
    pub max_rel_dev: f64,
}

/// Fit one effective-property curve (default quadratic) and report how
/// far the fit strays from the samples.
pub fn fit_scalar_property(points: &[(f64, f64)], degree: usize) -> Result<ScalarPropertyFit> {
    let poly = polyfit(points, degree)?;
    let mut max_rel_dev = 0.0_f64;
    for &(x, y) in points {
        let scale = y.abs().max(1e-300);
        max_rel_dev = max_rel_dev.max((poly.eval(x) - y).abs() / scale);
    }
    Ok(ScalarPropertyFit { poly, max_rel_dev })
}

/// Result of the pressure-gradient fit Δp/L = αU + βU².
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DarcyForchheimerFit {
    /// Viscous resistance [Pa·s/m²].
    pub alpha: f64,
    /// Inertial resistance [Pa·s²/m³].
    pub beta: f64,
    /// Euclidean norm of the unweighted residual [Pa/m].
    pub residual: f64,
    /// True when the unconstrained optimum had a negative coefficient
    /// that was clamped to zero.
    pub clamped: bool,
}

/// Non-negative least squares for the two-term porous drag law.
///
/// Samples are `(U, Δp/L)` pairs. Residuals are weighted by `1/(Δp/L)`,
/// i.e. relative error — measurement noise on pressure drops is
/// multiplicative, and relative weighting keeps the small-velocity Darcy
/// points from being drowned out by the large inertial ones. With both
/// coefficients free this is a 2×2 solve; a negative coefficient falls
/// back to the best single-term fit, clamped at zero.
pub fn fit_darcy_forchheimer(samples: &[(f64, f64)]) -> Result<DarcyForchheimerFit> {
    let mut distinct: Vec<f64> = Vec::new();
    for &(u, dp) in samples {
        if !(u > 0.0) {
            return Err(Error::InvalidInput(format!("velocities must be positive, got {u}")));
        }
        if !(dp > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pressure gradients must be positive, got {dp}"
            )));
        }
        if !distinct.iter().any(|&v| v == u) {
            distinct.push(u);
        }
    }
    if distinct.len() < 3 {
        return Err(Error::Fit(format!(
            "Darcy–Forchheimer fit needs at least 3 distinct velocities, got {}",
            distinct.len()
        )));
    }

    // Weighted normal equations for the 2-variable problem.
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, dp) in samples {
        let w = 1.0 / dp;
        let (c1, c2) = (u * w, u * u * w);
        s11 += c1 * c1;
        s12 += c1 * c2;
        s22 += c2 * c2;
        r1 += c1 * dp * w;
        r2 += c2 * dp * w;
    }
    let det = s11 * s22 - s12 * s12;
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::Fit("Darcy–Forchheimer fit: singular normal equations".into()));
    }
    let mut alpha = (s22 * r1 - s12 * r2) / det;
    let mut beta = (s11 * r2 - s12 * r1) / det;
    let mut clamped = false;

    if alpha < 0.0 || beta < 0.0 {
        clamped = true;
        // Best single-coefficient fits with the other clamped to zero.
        let a_only = (r1 / s11).max(0.0);
        let b_only = (r2 / s22).max(0.0);
        let cost = |a: f64, b: f64| {
            samples
                .iter()
                .map(|&(u, dp)| {
                    let r = (a * u + b * u * u - dp) / dp;
                    r * r
                })
                .sum::<f64>()
        };
        if cost(a_only, 0.0) <= cost(0.0, b_only) {
            alpha = a_only;
            beta = 0.0;
        } else {
            alpha = 0.0;
            beta = b_only;
        }
    }

    let residual = samples
        .iter()
        .map(|&(u, dp)| {
            let r = alpha * u + beta * u * u - dp;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok(DarcyForchheimerFit { alpha, beta, residual, clamped })
}

/// Bivariate polynomial surface in (γ̂, |U|). The velocity coordinate is
/// affinely mapped onto [0, 1] before powers are taken, which both
/// conditions the fit and encodes the validity interval; evaluation
/// outside it clamps to the nearest edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BivariatePoly {
    pub deg_g: usize,
    pub deg_u: usize,
    pub u_lo: f64,
    pub u_hi: f64,
    /// `coeffs[i * (deg_u + 1) + j]` multiplies γ̂^i · t^j.
    pub coeffs: Vec<f64>,
}

/// Value and partial derivatives of a surface evaluation; `clamped_u` is
/// set when |U| fell outside the validity interval (the U-derivative is
/// zero there — the clamped surface is flat in that direction).
#[derive(Debug, Clone, Copy)]
pub struct SurfaceEval {
    pub value: f64,
    pub d_gamma: f64,
    pub d_u: f64,
    pub clamped_u: bool,
}

impl BivariatePoly {
    fn t_of_u(&self, u: f64) -> (f64, bool) {
        let t = (u - self.u_lo) / (self.u_hi - self.u_lo);
        if t < 0.0 {
            (0.0, true)
        } else if t > 1.0 {
            (1.0, true)
        } else {
            (t, false)
        }
    }

    pub fn eval(&self, gamma: f64, u: f64) -> SurfaceEval {
        let (t, clamped_u) = self.t_of_u(u);
        let nu = self.deg_u + 1;
        // Power tables up to the surface degrees (small: ≤ 4 × 3 terms).
        let gpow: Vec<f64> = (0..=self.deg_g as i32).map(|i| gamma.powi(i)).collect();
        let tpow: Vec<f64> = (0..=self.deg_u as i32).map(|j| t.powi(j)).collect();
        let mut value = 0.0;
        let mut d_gamma = 0.0;
        let mut d_t = 0.0;
        for i in 0..=self.deg_g {
            for j in 0..=self.deg_u {
                let c = self.coeffs[i * nu + j];
                value += c * gpow[i] * tpow[j];
                if i > 0 {
                    d_gamma += c * i as f64 * gpow[i - 1] * tpow[j];
                }
                if j > 0 {
                    d_t += c * gpow[i] * j as f64 * tpow[j - 1];
                }
            }
        }
        let d_u = if clamped_u { 0.0 } else { d_t / (self.u_hi - self.u_lo) };
        SurfaceEval { value, d_gamma, d_u, clamped_u }
    }
}

fn design_row(gamma: f64, t: f64, deg_g: usize, deg_u: usize, out: &mut Vec<f64>) {
    out.clear();
    let mut gp = 1.0;
    for _ in 0..=deg_g {
        let mut tp = 1.0;
        for _ in 0..=deg_u {
            out.push(gp * tp);
            tp *= t;
        }
        gp *= gamma;
    }
}

fn fit_degree(
    pts: &[(f64, f64, f64)], // (γ̂, t, value)
    deg_g: usize,
    deg_u: usize,
    extra_rows: &[(f64, f64, f64, f64)], // (γ̂, t, target, weight) penalty rows
) -> Result<Vec<f64>> {
    let ncoef = (deg_g + 1) * (deg_u + 1);
    let nrows = pts.len() + extra_rows.len();
    let mut a = DMatrix::zeros(nrows, ncoef);
    let mut b = DVector::zeros(nrows);
    let mut row = Vec::with_capacity(ncoef);
    for (r, &(g, t, v)) in pts.iter().enumerate() {
        design_row(g, t, deg_g, deg_u, &mut row);
        for (c, &x) in row.iter().enumerate() {
            a[(r, c)] = x;
        }
        b[r] = v;
    }
    for (k, &(g, t, v, w)) in extra_rows.iter().enumerate() {
        let r = pts.len() + k;
        design_row(g, t, deg_g, deg_u, &mut row);
        for (c, &x) in row.iter().enumerate() {
            a[(r, c)] = w * x;
        }
        b[r] = w * v;
    }
    let sol = lstsq(a, b, "surface fit")?;
    Ok(sol.iter().copied().collect())
}

/// Candidate (γ̂-degree, U-degree) pairs tried by cross-validation, in
/// increasing coefficient count; ties go to the simpler surface.
pub const H_SURFACE_CANDIDATES: [(usize, usize); 4] = [(1, 1), (2, 1), (2, 2), (3, 2)];

const CV_FOLDS: usize = 5;
const POSITIVITY_GRID: usize = 50;

/// Fit the heat-transfer surface h*(γ̂, |U|).
///
/// Degree selection is 5-fold cross-validation over
/// [`H_SURFACE_CANDIDATES`] with deterministic round-robin folds. The
/// winning surface must be positive on a 50×50 grid spanning the data
/// box; if it is not, the fit is repeated with increasingly heavy
/// penalty rows pinning the violating points to a positive floor, and a
/// surface that still goes negative is rejected with the offending
/// locations in the error.
pub fn fit_h_surface(samples: &[(f64, f64, f64)]) -> Result<BivariatePoly> {
    let n = samples.len();
    let gammas: Vec<f64> = {
        let mut g: Vec<f64> = samples.iter().map(|s| s.0).collect();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup();
        g
    };
    let us: Vec<f64> = {
        let mut u: Vec<f64> = samples.iter().map(|s| s.1).collect();
        u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        u.dedup();
        u
    };
    if gammas.len() < 4 || us.len() < 4 {
        return Err(Error::Fit(format!(
            "h* surface needs ≥ 4 thickness and ≥ 4 velocity levels, got {}×{}",
            gammas.len(),
            us.len()
        )));
    }
    let (u_lo, u_hi) = (us[0], *us.last().unwrap());
    if !(u_hi > u_lo) {
        return Err(Error::Fit("h* surface: degenerate velocity range".into()));
    }
    let pts: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|&(g, u, h)| (g, (u - u_lo) / (u_hi - u_lo), h))
        .collect();

    let mut best: Option<(f64, (usize, usize))> = None;
    for &(dg, du) in &H_SURFACE_CANDIDATES {
        if (dg + 1) * (du + 1) >= n {
            continue;
        }
        let mut sse = 0.0;
        let mut ok = true;
        for fold in 0..CV_FOLDS {
            let train: Vec<(f64, f64, f64)> = pts
                .iter()
                .enumerate()
                .filter(|(i, _)| i % CV_FOLDS != fold)
                .map(|(_, &p)| p)
                .collect();
            match fit_degree(&train, dg, du, &[]) {
                Ok(coeffs) => {
                    let probe = BivariatePoly { deg_g: dg, deg_u: du, u_lo: 0.0, u_hi: 1.0, coeffs };
                    for (i, &(g, t, v)) in pts.iter().enumerate() {
                        if i % CV_FOLDS == fold {
                            let e = probe.eval(g, t).value - v;
                            sse += e * e;
                        }
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.map_or(true, |(s, _)| sse < s) {
            best = Some((sse, (dg, du)));
        }
    }
    let (_, (deg_g, deg_u)) =
        best.ok_or_else(|| Error::Fit("h* surface: no candidate degree fits the data".into()))?;

    // Fit on everything, then enforce positivity.
    let floor = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min) * 1e-3;
    let mut extra: Vec<(f64, f64, f64, f64)> = Vec::new();
    let g_lo = gammas[0];
    let g_hi = *gammas.last().unwrap();
    for round in 0..8 {
        let coeffs = fit_degree(&pts, deg_g, deg_u, &extra)?;
        let poly = BivariatePoly { deg_g, deg_u, u_lo, u_hi, coeffs };
        let mut violations = Vec::new();
        for i in 0..POSITIVITY_GRID {
            let g = g_lo + (g_hi - g_lo) * i as f64 / (POSITIVITY_GRID - 1) as f64;
            for j in 0..POSITIVITY_GRID {
                let t = j as f64 / (POSITIVITY_GRID - 1) as f64;
                let u = u_lo + (u_hi - u_lo) * t;
                if poly.eval(g, u).value <= 0.0 {
                    violations.push((g, t));
                }
            }
        }
        if violations.is_empty() {
            return Ok(poly);
        }
        if round == 7 {
            let sample: Vec<String> = violations
                .iter()
                .take(5)
                .map(|(g, t)| format!("(γ̂={g:.3}, U={:.4})", u_lo + (u_hi - u_lo) * t))
                .collect();
            return Err(Error::Fit(format!(
                "h* surface stays non-positive at {} grid points after positivity refit, e.g. {}",
                violations.len(),
                sample.join(", ")
            )));
        }
        let weight = 10.0_f64.powi(round as i32 + 1);
        for (g, t) in violations {
            extra.push((g, t, floor, weight));
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Deterministic standard normals: ChaCha-seeded uniforms through a
    // Box–Muller transform.
    fn normals(seed: u64, n: usize) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect()
    }

    #[test]
    fn quadratic_through_three_points_is_exact() {
        let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x;
        let pts: Vec<(f64, f64)> = [0.0, 1.0, 2.0].iter().map(|&x| (x, f(x))).collect();
        let fit = fit_scalar_property(&pts, 2).unwrap();
        assert!((fit.poly.coeffs[0] - 2.0).abs() < 1e-12);
        assert!((fit.poly.coeffs[1] + 3.0).abs() < 1e-12);
        assert!((fit.poly.coeffs[2] - 0.5).abs() < 1e-12);
        assert!(fit.max_rel_dev < 1e-12);
        // derivative: f'(x) = -3 + x
        assert!((fit.poly.deriv(2.0) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_or_degenerate_polyfit_fails() {
        assert!(polyfit(&[(0.0, 1.0), (1.0, 2.0)], 2).is_err());
        // three points, two distinct abscissae → rank deficient
        assert!(polyfit(&[(0.0, 1.0), (0.0, 1.5), (1.0, 2.0)], 2).is_err());
    }

    fn df_design() -> Vec<f64> {
        let mut u = vec![0.1; 7];
        u.extend(std::iter::repeat(20.0).take(6));
        u.extend(std::iter::repeat(40.0).take(7));
        u
    }

    #[test]
    fn darcy_forchheimer_exact_recovery() {
        let (alpha, beta) = (1e5, 1e4);
        let samples: Vec<(f64, f64)> =
            df_design().iter().map(|&u| (u, alpha * u + beta * u * u)).collect();
        let fit = fit_darcy_forchheimer(&samples).unwrap();
        assert!((fit.alpha - alpha).abs() / alpha < 1e-10);
        assert!((fit.beta - beta).abs() / beta < 1e-10);
        assert!(!fit.clamped);
    }

    #[test]
    fn darcy_forchheimer_survives_multiplicative_noise() {
        let (alpha, beta) = (1e5, 1e4);
        let us = df_design();
        for seed in 0..100u64 {
            let noise = normals(seed, us.len());
            let samples: Vec<(f64, f64)> = us
                .iter()
                .zip(&noise)
                .map(|(&u, &n)| (u, (alpha * u + beta * u * u) * (1.0 + 0.01 * n)))
                .collect();
            let fit = fit_darcy_forchheimer(&samples).unwrap();
            assert!(
                (fit.alpha - alpha).abs() / alpha < 0.02,
                "seed {seed}: alpha {} off by {:.3}%",
                fit.alpha,
                100.0 * (fit.alpha - alpha).abs() / alpha
            );
            assert!(
                (fit.beta - beta).abs() / beta < 0.02,
                "seed {seed}: beta {} off by {:.3}%",
                fit.beta,
                100.0 * (fit.beta - beta).abs() / beta
            );
        }
    }

    #[test]
    fn pure_darcy_data_yields_negligible_beta() {
        let alpha = 1e5;
        let samples: Vec<(f64, f64)> = df_design().iter().map(|&u| (u, alpha * u)).collect();
        let fit = fit_darcy_forchheimer(&samples).unwrap();
        let u_max = 40.0;
        assert!(fit.beta <= 1e-6 * fit.alpha * u_max, "beta = {}", fit.beta);
        assert!((fit.alpha - alpha).abs() / alpha < 1e-10);
    }

    #[test]
    fn all_equal_velocities_are_rejected() {
        let samples = vec![(1.0, 2.0); 5];
        let err = fit_darcy_forchheimer(&samples).unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
        let two = vec![(1.0, 2.0), (2.0, 5.0), (1.0, 2.1)];
        assert!(fit_darcy_forchheimer(&two).is_err());
    }

    #[test]
    fn concave_drag_data_clamps_beta_to_zero() {
        // Δp/L ∝ √U: strongly sub-linear growth drives the unconstrained
        // quadratic coefficient negative.
        let samples: Vec<(f64, f64)> =
            df_design().iter().map(|&u| (u, 1e4 * u.sqrt())).collect();
        let fit = fit_darcy_forchheimer(&samples).unwrap();
        assert!(fit.clamped);
        assert_eq!(fit.beta, 0.0);
        assert!(fit.alpha > 0.0);
    }

    fn grid_samples<F: Fn(f64, f64) -> f64>(
        ngamma: usize,
        nu: usize,
        u_lo: f64,
        u_hi: f64,
        f: F,
    ) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..ngamma {
            let g = i as f64 / (ngamma - 1) as f64;
            for j in 0..nu {
                let u = u_lo + (u_hi - u_lo) * j as f64 / (nu - 1) as f64;
                out.push((g, u, f(g, u)));
            }
        }
        out
    }

    #[test]
    fn in_class_surface_is_recovered_exactly() {
        // Degree (2,1) target, linear in normalized velocity.
        let (u_lo, u_hi) = (0.01, 0.12);
        let f = |g: f64, u: f64| {
            let t = (u - u_lo) / (u_hi - u_lo);
            1000.0 + 400.0 * g + 150.0 * g * g + 800.0 * t + 90.0 * g * t
        };
        let samples = grid_samples(10, 20, u_lo, u_hi, f);
        let poly = fit_h_surface(&samples).unwrap();
        for &(g, u, h) in &samples {
            assert!(
                (poly.eval(g, u).value - h).abs() / h < 1e-9,
                "misfit at ({g}, {u})"
            );
        }
    }

    #[test]
    fn monotone_synthetic_surface_fits_within_three_percent() {
        let (u_lo, u_hi) = (4.7e-4, 0.118);
        let f = |g: f64, u: f64| 400.0 + 2.2e4 * u.powf(0.6) * (1.0 + g);
        let samples = grid_samples(10, 20, u_lo, u_hi, f);
        let poly = fit_h_surface(&samples).unwrap();
        let (mut lo, mut hi, mut sse) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &(g, u, h) in &samples {
            lo = lo.min(h);
            hi = hi.max(h);
            let e = poly.eval(g, u).value - h;
            sse += e * e;
        }
        let rms = (sse / samples.len() as f64).sqrt();
        assert!(
            rms <= 0.03 * (hi - lo),
            "RMS {rms:.2} exceeds 3% of range {:.2}",
            hi - lo
        );
        // the surface must stay positive everywhere on the data box
        for i in 0..50 {
            for j in 0..50 {
                let g = i as f64 / 49.0;
                let u = u_lo + (u_hi - u_lo) * j as f64 / 49.0;
                assert!(poly.eval(g, u).value > 0.0);
            }
        }
    }

    #[test]
    fn evaluation_outside_velocity_box_clamps_and_flags() {
        let samples = grid_samples(5, 5, 0.1, 1.0, |g, u| 10.0 + g + u);
        let poly = fit_h_surface(&samples).unwrap();
        let inside = poly.eval(0.5, 1.0);
        let outside = poly.eval(0.5, 2.0);
        assert!(!inside.clamped_u);
        assert!(outside.clamped_u);
        assert!((outside.value - inside.value).abs() < 1e-9);
        assert_eq!(outside.d_u, 0.0);
        assert!(inside.d_u != 0.0);
    }

    #[test]
    fn surface_derivatives_match_finite_differences() {
        let samples = grid_samples(8, 8, 0.02, 0.9, |g, u| {
            50.0 + 20.0 * g - 7.0 * g * g + 30.0 * u + 11.0 * g * u
        });
        let poly = fit_h_surface(&samples).unwrap();
        let h = 1e-6;
        for &(g, u) in &[(0.3, 0.5), (0.7, 0.2), (0.0, 0.45), (0.9, 0.88)] {
            let e = poly.eval(g, u);
            let dg = (poly.eval(g + h, u).value - poly.eval(g - h, u).value) / (2.0 * h);
            let du = (poly.eval(g, u + h).value - poly.eval(g, u - h).value) / (2.0 * h);
            assert!((e.d_gamma - dg).abs() / dg.abs().max(1.0) < 1e-6);
            assert!((e.d_u - du).abs() / du.abs().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn too_few_levels_are_rejected() {
        let samples = grid_samples(3, 20, 0.1, 1.0, |g, u| 1.0 + g + u);
        assert!(fit_h_surface(&samples).is_err());
        let samples = grid_samples(10, 3, 0.1, 1.0, |g, u| 1.0 + g + u);
        assert!(fit_h_surface(&samples).is_err());
    }
}
