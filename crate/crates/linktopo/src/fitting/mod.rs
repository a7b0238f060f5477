//! Nonlinear least-squares fitting of the two stretched-exponential decay
//! models, parameter uncertainty, domain significance comparison, Pearson
//! correlation, and the critical distance.
//!
//! The similarity model is `sigma(d) = s_inf + (1 - s_inf) exp(-a1 d^a2)`
//! with the noise level held fixed, so `sigma(0) = 1` by construction. The
//! likelihood model is `lambda(d) = 1 + a3 exp(-a4 d^a5)`.

mod special;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use special::t_two_sided_p;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("too few points: {got} given, {needed} needed")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid point ({x}, {y}): {reason}")]
    InvalidPoint { x: f64, y: f64, reason: String },
    #[error("no start converged; best partial fit had sse {}", best.sse)]
    NonConvergence { best: Box<DecayFit> },
    #[error("model never crosses threshold {threshold}")]
    NoCrossing { threshold: f64 },
    #[error("correlation undefined: {0}")]
    ConstantSeries(String),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SimilarityDecay,
    LikelihoodDecay,
}

/// A fitted decay model: parameters, one-sigma errors from the Jacobian
/// covariance at the optimum, and residual statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: ModelKind,
    /// (a1, a2) for the similarity model, (a3, a4, a5) for likelihood.
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sse: f64,
    pub n_points: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Set when the fitted decay amplitude is indistinguishable from zero or
    /// the curvature is singular: there is no decay signal to interpret.
    pub degenerate: bool,
    /// The fixed noise level, for the similarity model.
    pub sigma_inf: Option<f64>,
}

impl DecayFit {
    /// Model value at distance `delta`.
    pub fn eval(&self, delta: f64) -> f64 {
        match self.model {
            ModelKind::SimilarityDecay => {
                let s = self.sigma_inf.unwrap_or(0.0);
                similarity_model(s, &self.params, delta)
            }
            ModelKind::LikelihoodDecay => likelihood_model(&self.params, delta),
        }
    }
}

pub fn similarity_model(sigma_inf: f64, p: &[f64], delta: f64) -> f64 {
    sigma_inf + (1.0 - sigma_inf) * (-p[0] * delta.powf(p[1])).exp()
}

pub fn likelihood_model(p: &[f64], delta: f64) -> f64 {
    1.0 + p[0] * (-p[1] * delta.powf(p[2])).exp()
}

/// Internal model descriptor: evaluation, analytic Jacobian row, and the
/// domain projection applied after every step.
struct Model {
    kind: ModelKind,
    sigma_inf: Option<f64>,
}

impl Model {
    fn n_params(&self) -> usize {
        match self.kind {
            ModelKind::SimilarityDecay => 2,
            ModelKind::LikelihoodDecay => 3,
        }
    }

    fn eval(&self, p: &[f64], delta: f64) -> f64 {
        match self.kind {
            ModelKind::SimilarityDecay => similarity_model(self.sigma_inf.unwrap(), p, delta),
            ModelKind::LikelihoodDecay => likelihood_model(p, delta),
        }
    }

    fn jacobian_row(&self, p: &[f64], delta: f64, out: &mut [f64]) {
        let ln_d = delta.ln();
        match self.kind {
            ModelKind::SimilarityDecay => {
                let pow = delta.powf(p[1]);
                let e = (-p[0] * pow).exp();
                let amp = 1.0 - self.sigma_inf.unwrap();
                out[0] = -amp * pow * e;
                out[1] = -amp * p[0] * pow * ln_d * e;
            }
            ModelKind::LikelihoodDecay => {
                let pow = delta.powf(p[2]);
                let e = (-p[1] * pow).exp();
                out[0] = e;
                out[1] = -p[0] * pow * e;
                out[2] = -p[0] * p[1] * pow * ln_d * e;
            }
        }
    }

    /// Amplitudes and rates stay non-negative; exponents stay positive.
    fn project(&self, p: &mut [f64]) {
        match self.kind {
            ModelKind::SimilarityDecay => {
                p[0] = p[0].max(0.0);
                p[1] = p[1].max(1e-8);
            }
            ModelKind::LikelihoodDecay => {
                p[0] = p[0].max(0.0);
                p[1] = p[1].max(0.0);
                p[2] = p[2].max(1e-8);
            }
        }
    }

    /// The multi-start grid.
    fn start_grid(&self) -> Vec<Vec<f64>> {
        match self.kind {
            ModelKind::SimilarityDecay => {
                let mut starts = Vec::new();
                for a1 in [0.5, 1.0, 2.0, 4.0] {
                    for a2 in [0.3, 0.6, 1.0, 1.5] {
                        starts.push(vec![a1, a2]);
                    }
                }
                starts
            }
            ModelKind::LikelihoodDecay => {
                let mut starts = Vec::new();
                for a3 in [10.0, 1e2, 1e3, 1e4] {
                    for a4 in [1e-3, 1e-2, 1e-1] {
                        for a5 in [1.0, 3.0, 5.0, 7.0] {
                            starts.push(vec![a3, a4, a5]);
                        }
                    }
                }
                starts
            }
        }
    }

    fn is_degenerate(&self, params: &[f64]) -> bool {
        match self.kind {
            ModelKind::SimilarityDecay => params[0] <= 1e-8,
            ModelKind::LikelihoodDecay => params[0] <= 1e-6,
        }
    }
}

const MAX_ITERATIONS: usize = 500;
const RELATIVE_SSE_TOL: f64 = 1e-12;

fn sse_of(model: &Model, p: &[f64], points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|(x, y)| {
            let r = y - model.eval(p, *x);
            r * r
        })
        .sum()
}

/// One damped least-squares descent from a single start. Returns the final
/// parameters, their sum of squared residuals, the gradient norm at the last
/// evaluation, and whether the relative-change criterion was met.
fn descend(model: &Model, points: &[(f64, f64)], start: &[f64]) -> (Vec<f64>, f64, f64, bool) {
    let np = model.n_params();
    let mut theta = start.to_vec();
    model.project(&mut theta);
    let mut sse = sse_of(model, &theta, points);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    let mut jac_row = vec![0.0; np];
    for _ in 0..MAX_ITERATIONS {
        if !sse.is_finite() {
            break;
        }
        // Normal equations J^T J and J^T r at theta.
        let mut a = vec![0.0; np * np];
        let mut g = vec![0.0; np];
        for (x, y) in points {
            model.jacobian_row(&theta, *x, &mut jac_row);
            let r = y - model.eval(&theta, *x);
            for i in 0..np {
                g[i] += jac_row[i] * r;
                for j in i..np {
                    a[i * np + j] += jac_row[i] * jac_row[j];
                }
            }
        }
        for i in 0..np {
            for j in 0..i {
                a[i * np + j] = a[j * np + i];
            }
        }
        grad_norm = g.iter().fold(0.0f64, |m, v| m.max(2.0 * v.abs()));

        // Damped step: (A + damping * diag(A)) step = g. Damping grows
        // tenfold on every uphill trial and shrinks tenfold on acceptance.
        let mut accepted = false;
        for _ in 0..28 {
            let mut damped = a.clone();
            for i in 0..np {
                let d = a[i * np + i];
                damped[i * np + i] += damping * if d > 0.0 { d } else { 1.0 };
            }
            if let Some(step) = solve(&damped, &g, np) {
                let mut cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
                model.project(&mut cand);
                let cand_sse = sse_of(model, &cand, points);
                if cand_sse.is_finite() && cand_sse < sse {
                    let rel = (sse - cand_sse) / sse.max(f64::MIN_POSITIVE);
                    theta = cand;
                    sse = cand_sse;
                    damping = (damping / 10.0).max(1e-14);
                    accepted = true;
                    if rel < RELATIVE_SSE_TOL || sse == 0.0 {
                        converged = true;
                    }
                    break;
                }
            }
            damping *= 10.0;
            if damping > 1e16 {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step at any damping: a minimum to solver precision,
            // possibly on the domain boundary.
            converged = sse.is_finite();
            break;
        }
    }
    (theta, sse, grad_norm, converged)
}

/// Gaussian elimination with partial pivoting for the small normal systems.
fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[pivot_row * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverts the (tiny) symmetric curvature matrix via column solves.
fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve(a, &e, n)?;
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

fn check_points(points: &[(f64, f64)], needed: usize) -> Result<(), FitError> {
    if points.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    for (x, y) in points {
        if !(x.is_finite() && y.is_finite()) || *x <= 0.0 {
            return Err(FitError::InvalidPoint {
                x: *x,
                y: *y,
                reason: "points need finite values and delta > 0".into(),
            });
        }
    }
    Ok(())
}

/// Multi-start damped least squares over `starts`; the best sum of squared
/// residuals among converged descents wins. Standard errors come from
/// `s^2 (J^T J)^-1` at the optimum.
pub fn nls_fit(
    kind: ModelKind,
    sigma_inf: Option<f64>,
    points: &[(f64, f64)],
    starts: &[Vec<f64>],
) -> Result<DecayFit, FitError> {
    let model = Model { kind, sigma_inf };
    let np = model.n_params();
    check_points(points, np + 1)?;

    let mut best: Option<(Vec<f64>, f64, f64, bool)> = None;
    for start in starts {
        let outcome = descend(&model, points, start);
        if !outcome.1.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(current) => (outcome.3, -outcome.1) > (current.3, -current.1),
        };
        if better {
            best = Some(outcome);
        }
    }
    let (params, sse, gradient_norm, converged) =
        best.ok_or_else(|| FitError::NonConvergence {
            best: Box::new(DecayFit {
                model: kind,
                params: starts.first().cloned().unwrap_or_default(),
                stderr: vec![f64::NAN; np],
                sse: f64::INFINITY,
                n_points: points.len(),
                converged: false,
                gradient_norm: f64::INFINITY,
                degenerate: true,
                sigma_inf,
            }),
        })?;

    // Covariance from the curvature at the optimum.
    let mut a = vec![0.0; np * np];
    let mut jac_row = vec![0.0; np];
    for (x, _) in points {
        model.jacobian_row(&params, *x, &mut jac_row);
        for i in 0..np {
            for j in 0..np {
                a[i * np + j] += jac_row[i] * jac_row[j];
            }
        }
    }
    let s2 = sse / (points.len() - np) as f64;
    let (stderr, singular) = match invert(&a, np) {
        Some(inv) => (
            (0..np)
                .map(|i| (s2 * inv[i * np + i]).max(0.0).sqrt())
                .collect(),
            false,
        ),
        None => (vec![f64::INFINITY; np], true),
    };

    let degenerate = singular || model.is_degenerate(&params);
    let fit = DecayFit {
        model: kind,
        params,
        stderr,
        sse,
        n_points: points.len(),
        converged,
        gradient_norm,
        degenerate,
        sigma_inf,
    };
    if !converged {
        return Err(FitError::NonConvergence { best: Box::new(fit) });
    }
    Ok(fit)
}

/// Fits (a1, a2) of the similarity decay with the noise level held fixed.
pub fn fit_similarity_decay(points: &[(f64, f64)], sigma_inf: f64) -> Result<DecayFit, FitError> {
    if !(0.0..1.0).contains(&sigma_inf) {
        return Err(FitError::Unsupported(format!(
            "sigma_inf = {sigma_inf} must be in [0, 1)"
        )));
    }
    let model = Model {
        kind: ModelKind::SimilarityDecay,
        sigma_inf: Some(sigma_inf),
    };
    nls_fit(
        ModelKind::SimilarityDecay,
        Some(sigma_inf),
        points,
        &model.start_grid(),
    )
}

/// Fits (a3, a4, a5) of the likelihood decay over its wide multi-start grid.
pub fn fit_likelihood_decay(points: &[(f64, f64)]) -> Result<DecayFit, FitError> {
    let model = Model {
        kind: ModelKind::LikelihoodDecay,
        sigma_inf: None,
    };
    nls_fit(ModelKind::LikelihoodDecay, None, points, &model.start_grid())
}

/// Sample Pearson correlation with a two-sided p-value from the t statistic
/// on n - 2 degrees of freedom.
pub fn pearson(points: &[(f64, f64)]) -> Result<(f64, f64), FitError> {
    let n = points.len();
    if n < 3 {
        return Err(FitError::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FitError::ConstantSeries("x and y must both vary".into()));
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        t_two_sided_p(t, df)
    };
    Ok((rho, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeStrength {
    /// The a1 intervals are disjoint.
    Alpha1Only,
    /// Both the a1 and a2 intervals are disjoint.
    Alpha1AndAlpha2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEdge {
    /// Domain with the smaller a1, i.e. the slower lexical decay.
    pub from: String,
    pub to: String,
    pub strength: EdgeStrength,
}

/// Pairwise significance graph over per-domain fits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignificanceGraph {
    pub edges: Vec<DomainEdge>,
}

/// Compares per-domain fits at +/- `k_sigma` standard errors (1.0 is the
/// 68.3% confidence level). An edge runs from the slower-decaying domain
/// (smaller a1) to the faster one when the a1 intervals are disjoint, and is
/// strengthened when the a2 intervals are disjoint too.
pub fn compare_domains(fits: &BTreeMap<String, DecayFit>, k_sigma: f64) -> SignificanceGraph {
    let mut edges = Vec::new();
    let entries: Vec<(&String, &DecayFit)> = fits.iter().collect();
    for (i, (name_a, fit_a)) in entries.iter().enumerate() {
        for (name_b, fit_b) in entries.iter().skip(i + 1) {
            let (slow, fast) = if fit_a.params[0] <= fit_b.params[0] {
                ((name_a, fit_a), (name_b, fit_b))
            } else {
                ((name_b, fit_b), (name_a, fit_a))
            };
            let disjoint = |idx: usize| -> bool {
                let (va, vb) = (slow.1.params[idx], fast.1.params[idx]);
                let (sa, sb) = (slow.1.stderr[idx], fast.1.stderr[idx]);
                if !(sa.is_finite() && sb.is_finite()) {
                    return false;
                }
                va + k_sigma * sa < vb - k_sigma * sb || vb + k_sigma * sb < va - k_sigma * sa
            };
            if disjoint(0) {
                let strength = if disjoint(1) {
                    EdgeStrength::Alpha1AndAlpha2
                } else {
                    EdgeStrength::Alpha1Only
                };
                edges.push(DomainEdge {
                    from: slow.0.to_string(),
                    to: fast.0.to_string(),
                    strength,
                });
            }
        }
    }
    SignificanceGraph { edges }
}

/// Distance at which the fitted likelihood decay crosses `threshold`,
/// found by bisection to 1e-9.
pub fn critical_distance(fit: &DecayFit, threshold: f64) -> Result<f64, FitError> {
    if fit.model != ModelKind::LikelihoodDecay {
        return Err(FitError::Unsupported(
            "critical distance is defined for the likelihood model".into(),
        ));
    }
    let lambda0 = fit.eval(0.0);
    if threshold > lambda0 || threshold <= 1.0 {
        return Err(FitError::NoCrossing { threshold });
    }
    if threshold == lambda0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while fit.eval(hi) >= threshold {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(FitError::NoCrossing { threshold });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if fit.eval(mid) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn similarity_points(a1: f64, a2: f64, s_inf: f64, deltas: &[f64]) -> Vec<(f64, f64)> {
        deltas
            .iter()
            .map(|d| (*d, similarity_model(s_inf, &[a1, a2], *d)))
            .collect()
    }

    fn likelihood_points(p: &[f64], deltas: &[f64]) -> Vec<(f64, f64)> {
        deltas.iter().map(|d| (*d, likelihood_model(p, *d))).collect()
    }

    #[test]
    fn noiseless_similarity_recovery_to_1e6() {
        let deltas = grid(0.5, 4.5, 30);
        let points = similarity_points(1.8, 0.6, 0.0318, &deltas);
        let fit = fit_similarity_decay(&points, 0.0318).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 1.8).abs() < 1e-6, "a1 {}", fit.params[0]);
        assert!((fit.params[1] - 0.6).abs() < 1e-6, "a2 {}", fit.params[1]);
        let sum_y2: f64 = points.iter().map(|(_, y)| y * y).sum();
        assert!(fit.sse <= 1e-18 * sum_y2, "sse {}", fit.sse);
    }

    #[test]
    fn noisy_similarity_recovery_within_five_percent() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let deltas: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..4.5)).collect();
        let mut points = similarity_points(1.8, 0.6, 0.0318, &deltas);
        for p in &mut points {
            // Box-Muller normal noise, sd 0.005.
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            p.1 += 0.005 * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
        let fit = fit_similarity_decay(&points, 0.0318).unwrap();
        assert!((fit.params[0] - 1.8).abs() / 1.8 < 0.05);
        assert!((fit.params[1] - 0.6).abs() / 0.6 < 0.05);
        assert!(fit.stderr.iter().all(|s| *s > 0.0 && s.is_finite()));
    }

    #[test]
    fn perturbing_converged_fit_by_stderr_increases_sse() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let deltas: Vec<f64> = (0..200).map(|_| rng.random_range(0.5..4.0)).collect();
        let mut points = similarity_points(1.5, 0.8, 0.05, &deltas);
        for p in &mut points {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            p.1 += 0.01 * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
        let fit = fit_similarity_decay(&points, 0.05).unwrap();
        let model = Model {
            kind: ModelKind::SimilarityDecay,
            sigma_inf: Some(0.05),
        };
        for i in 0..2 {
            for sign in [-1.0, 1.0] {
                let mut p = fit.params.clone();
                p[i] += sign * fit.stderr[i].max(1e-9);
                assert!(
                    sse_of(&model, &p, &points) > fit.sse,
                    "perturbing parameter {i} by {sign} stderr should not improve"
                );
            }
        }
    }

    #[test]
    fn noiseless_likelihood_recovery_to_1e4_relative() {
        let truth = [1000.0, 0.002, 5.5];
        let deltas = grid(0.5, 5.5, 40);
        let points = likelihood_points(&truth, &deltas);
        let fit = fit_likelihood_decay(&points).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.params.iter().zip(truth) {
            assert!(
                (got - want).abs() / want < 1e-4,
                "recovered {got} for {want}"
            );
        }
    }

    #[test]
    fn flat_likelihood_data_flags_degenerate() {
        let deltas = grid(0.5, 4.0, 20);
        let points: Vec<(f64, f64)> = deltas.iter().map(|d| (*d, 1.0)).collect();
        let fit = fit_likelihood_decay(&points).unwrap();
        assert!(fit.params[0].abs() < 1e-6, "a3 {}", fit.params[0]);
        assert!(fit.degenerate);
    }

    #[test]
    fn too_few_points_is_a_precondition_error() {
        let points = vec![(1.0, 2.0), (2.0, 1.5)];
        assert!(matches!(
            fit_likelihood_decay(&points),
            Err(FitError::TooFewPoints { needed: 4, got: 2 })
        ));
        assert!(matches!(
            fit_similarity_decay(&points, 0.0),
            Err(FitError::TooFewPoints { needed: 3, got: 2 })
        ));
        let bad = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.2), (3.0, 0.1)];
        assert!(matches!(
            fit_similarity_decay(&bad, 0.0),
            Err(FitError::InvalidPoint { .. })
        ));
    }

    #[test]
    fn pearson_perfect_anticorrelation() {
        let points: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 10.0 - 3.0 * i as f64)).collect();
        let (rho, p) = pearson(&points).unwrap();
        assert!((rho + 1.0).abs() < 1e-12);
        assert!(p < 1e-12);
    }

    #[test]
    fn pearson_matches_direct_definition_oracle() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let points: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-5.0..5.0)))
            .collect();
        let (rho, _) = pearson(&points).unwrap();
        // Direct definition: covariance over the product of standard
        // deviations.
        let n = points.len() as f64;
        let mx = points.iter().map(|(x, _)| x).sum::<f64>() / n;
        let my = points.iter().map(|(_, y)| y).sum::<f64>() / n;
        let cov = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let sx = (points.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
        let sy = (points.iter().map(|(_, y)| (y - my).powi(2)).sum::<f64>() / n).sqrt();
        assert!((rho - cov / (sx * sy)).abs() <= 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_series() {
        let points = vec![(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
        assert!(matches!(pearson(&points), Err(FitError::ConstantSeries(_))));
    }

    fn fig_table_fits() -> BTreeMap<String, DecayFit> {
        let mk = |a1: f64, se1: f64, a2: f64, se2: f64| DecayFit {
            model: ModelKind::SimilarityDecay,
            params: vec![a1, a2],
            stderr: vec![se1, se2],
            sse: 0.0,
            n_points: 60,
            converged: true,
            gradient_norm: 0.0,
            degenerate: false,
            sigma_inf: Some(0.0318),
        };
        let mut fits = BTreeMap::new();
        fits.insert("edu".to_string(), mk(1.11, 0.03, 0.87, 0.05));
        fits.insert("net".to_string(), mk(1.16, 0.04, 0.88, 0.05));
        fits.insert("gov".to_string(), mk(1.22, 0.07, 1.00, 0.09));
        fits.insert("org".to_string(), mk(1.38, 0.03, 0.93, 0.05));
        fits.insert("com".to_string(), mk(1.63, 0.04, 1.13, 0.05));
        fits
    }

    #[test]
    fn domain_comparison_on_published_table() {
        let graph = compare_domains(&fig_table_fits(), 1.0);
        let find = |a: &str, b: &str| {
            graph
                .edges
                .iter()
                .find(|e| e.from == a && e.to == b)
                .cloned()
        };
        // edu decays slower than com, significantly in both parameters.
        let edge = find("edu", "com").expect("edu -> com edge");
        assert_eq!(edge.strength, EdgeStrength::Alpha1AndAlpha2);
        // edu vs net intervals overlap: no edge either way.
        assert!(find("edu", "net").is_none());
        assert!(find("net", "edu").is_none());
        // Antisymmetry: never both directions.
        for e in &graph.edges {
            assert!(find(&e.to, &e.from).is_none());
        }
    }

    #[test]
    fn identical_fits_give_empty_graph() {
        let mut fits = fig_table_fits();
        let template = fits.get("edu").unwrap().clone();
        for fit in fits.values_mut() {
            *fit = template.clone();
        }
        assert!(compare_domains(&fits, 1.0).edges.is_empty());
    }

    #[test]
    fn critical_distance_on_published_parameters() {
        let fit = DecayFit {
            model: ModelKind::LikelihoodDecay,
            params: vec![1000.0, 0.002, 5.5],
            stderr: vec![0.0; 3],
            sse: 0.0,
            n_points: 300,
            converged: true,
            gradient_norm: 0.0,
            degenerate: false,
            sigma_inf: None,
        };
        let delta_star = critical_distance(&fit, 2.0).unwrap();
        // Closed-form oracle: (ln(a3 / (threshold - 1)) / a4)^(1/a5).
        let expected = ((1000.0f64 / 1.0).ln() / 0.002).powf(1.0 / 5.5);
        assert!((delta_star - expected).abs() < 1e-7);
        assert!((delta_star - 4.40).abs() < 0.01);
        assert!(delta_star > 4.0 && delta_star < 5.0);
        // Substituting back must reproduce the threshold.
        assert!((fit.eval(delta_star) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn critical_distance_boundary_and_no_crossing() {
        let mut fit = DecayFit {
            model: ModelKind::LikelihoodDecay,
            params: vec![1.0, 0.5, 2.0],
            stderr: vec![0.0; 3],
            sse: 0.0,
            n_points: 10,
            converged: true,
            gradient_norm: 0.0,
            degenerate: false,
            sigma_inf: None,
        };
        // lambda(0) = 1 + a3 = 2 exactly: the crossing sits at zero.
        assert_eq!(critical_distance(&fit, 2.0).unwrap(), 0.0);
        assert!(matches!(
            critical_distance(&fit, 2.0 + 1e-9),
            Err(FitError::NoCrossing { .. })
        ));
        fit.params = vec![5.0, 0.0, 2.0];
        // A zero rate never decays down to the threshold.
        assert!(matches!(
            critical_distance(&fit, 2.0),
            Err(FitError::NoCrossing { .. })
        ));
    }
}
