//! The bubble-height system: heights `b_j` solving
//!
//! ```text
//! (𝒢Λ)_j = (2/(n-2)) Λ_j^{(6-n)/(n-2)},   Λ_j = b_j^{(n-2)/2},
//! ```
//!
//! obtained by minimizing the functional
//!
//! ```text
//! Ĩ(Λ) = Σ_j H_j Λ_j² − Σ_{i≠j} G_ij Λ_i Λ_j − Σ_j Λ_j^{4/(n-2)}
//!       = Λᵀ𝒢Λ − Σ_j Λ_j^{4/(n-2)},
//! ```
//!
//! together with the spectral data `(P, σ̄_j, M)` of the height Hessian
//! that drives the amplitude dynamics.  Positive definiteness of `𝒢`
//! makes the quadratic part coercive and the minimizer interior; without
//! it the descent escapes the positive orthant.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::green::{serialize_matrix, GreenMatrix};
use crate::{Error, Result};

/// Solution of the height system with its spectral data.
#[derive(Debug, Clone, Serialize)]
pub struct BSolution {
    /// Heights `b_j > 0`.
    pub b: Vec<f64>,
    /// `Λ_j = b_j^{(n-2)/2}`.
    pub lambda: Vec<f64>,
    /// Analytic Hessian `D²I(b)` of the height functional in `b`.
    #[serde(serialize_with = "serialize_matrix")]
    pub hess_i: DMatrix<f64>,
    /// `M = D²I(b) + (2/(n-2))·Id`, from its own explicit entries.
    #[serde(serialize_with = "serialize_matrix")]
    pub m: DMatrix<f64>,
    /// Orthogonal matrix with the eigenvectors of `D²I(b)` as rows, so
    /// `D²I(b) = (2/(n-2)) Pᵀ diag(σ̄) P`.
    #[serde(serialize_with = "serialize_matrix")]
    pub p: DMatrix<f64>,
    /// `σ̄_j = (n-2)/2 · eig_j(D²I(b))`, ascending; all positive.
    pub sigma_bar: Vec<f64>,
    /// Max-norm residual of the height system at `Λ`.
    pub residual: f64,
}

fn dim_of(gm: &GreenMatrix) -> Result<u32> {
    let n = gm
        .q
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty configuration".into()))?
        .len() as u32;
    if n < 5 {
        return Err(Error::InvalidConfig(format!(
            "dimension must be >= 5, got {n}"
        )));
    }
    Ok(n)
}

fn check_lambda(gm: &GreenMatrix, lambda: &[f64]) -> Result<()> {
    if lambda.len() != gm.matrix.nrows() {
        return Err(Error::InvalidConfig(format!(
            "Lambda has {} components for a {}-point configuration",
            lambda.len(),
            gm.matrix.nrows()
        )));
    }
    if !lambda.iter().all(|&l| l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidConfig(
            "Lambda components must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// `Ĩ(Λ) = Λᵀ𝒢Λ − Σ Λ^{4/(n-2)}`.
pub fn functional(gm: &GreenMatrix, lambda: &[f64]) -> Result<f64> {
    let n = dim_of(gm)? as f64;
    check_lambda(gm, lambda)?;
    let q = 4.0 / (n - 2.0);
    let lv = DVector::from_column_slice(lambda);
    let quad = (&gm.matrix * &lv).dot(&lv);
    Ok(quad - lambda.iter().map(|l| l.powf(q)).sum::<f64>())
}

/// Analytic gradient `∇Ĩ(Λ) = 2𝒢Λ − (4/(n-2)) Λ^{(6-n)/(n-2)}`.
pub fn gradient(gm: &GreenMatrix, lambda: &[f64]) -> Result<Vec<f64>> {
    let n = dim_of(gm)? as f64;
    check_lambda(gm, lambda)?;
    let q = 4.0 / (n - 2.0);
    let lv = DVector::from_column_slice(lambda);
    let glam = &gm.matrix * &lv;
    Ok(lambda
        .iter()
        .enumerate()
        .map(|(j, &l)| 2.0 * glam[j] - q * l.powf(q - 1.0))
        .collect())
}

/// Analytic Hessian `D²Ĩ(Λ) = 2𝒢 − (4/(n-2))((6-n)/(n-2)) diag(Λ^{q-2})`.
pub fn hessian_lambda(gm: &GreenMatrix, lambda: &[f64]) -> Result<DMatrix<f64>> {
    let n = dim_of(gm)? as f64;
    check_lambda(gm, lambda)?;
    let q = 4.0 / (n - 2.0);
    let mut h = gm.matrix.clone() * 2.0;
    for (j, &l) in lambda.iter().enumerate() {
        h[(j, j)] -= q * (q - 1.0) * l.powf(q - 2.0);
    }
    Ok(h)
}

/// Max-norm residual of the height system
/// `(𝒢Λ)_j − (2/(n-2)) Λ_j^{(6-n)/(n-2)}`.
pub fn residual_ee(gm: &GreenMatrix, lambda: &[f64]) -> Result<f64> {
    let n = dim_of(gm)? as f64;
    check_lambda(gm, lambda)?;
    let lv = DVector::from_column_slice(lambda);
    let glam = &gm.matrix * &lv;
    let exp = (6.0 - n) / (n - 2.0);
    Ok(lambda
        .iter()
        .enumerate()
        .map(|(j, &l)| (glam[j] - 2.0 / (n - 2.0) * l.powf(exp)).abs())
        .fold(0.0f64, f64::max))
}

/// Decoupled initial guess: the `k=1` closed form per point, ignoring the
/// off-diagonal couplings (exact when `G ≡ 0` off-diagonal).
fn decoupled_init(n: f64, gm: &GreenMatrix) -> Vec<f64> {
    let k = gm.matrix.nrows();
    (0..k)
        .map(|j| {
            let h = gm.matrix[(j, j)];
            (2.0 / ((n - 2.0) * h)).powf((n - 2.0) / (2.0 * (n - 4.0)))
        })
        .collect()
}

enum Descent {
    Converged(Vec<f64>),
    Escaped,
    Stalled,
}

/// Damped Newton with Armijo backtracking on `Ĩ`, in log variables
/// `Λ = exp(ℓ)` (positivity without constraints).  Convergence:
/// `‖∇Ĩ‖_∞ < 1e-12`; at most 200 iterations.  Escape from the positive
/// orthant (components → 0 or → ∞) is reported rather than treated as an
/// error so the reciprocal positivity check can observe it.
fn minimize(gm: &GreenMatrix, from: &[f64], max_iter: usize) -> Result<Descent> {
    let k = from.len();
    let mut ell: Vec<f64> = from.iter().map(|l| l.ln()).collect();
    let mut lambda: Vec<f64> = from.to_vec();
    let mut value = functional(gm, &lambda)?;

    for _ in 0..max_iter {
        let grad = gradient(gm, &lambda)?;
        if grad.iter().all(|g| g.abs() < 1e-12) {
            return Ok(Descent::Converged(lambda));
        }
        // Once the iterate is safely inside the basin, finish with pure
        // Newton on ∇Ĩ = 0: the Armijo test cannot certify decreases
        // below the roundoff of Ĩ itself, while the gradient system stays
        // solvable to full precision.
        if grad.iter().all(|g| g.abs() < 1e-6) {
            return polish(gm, lambda);
        }
        // Gradient and Hessian in log variables.
        let gphi: Vec<f64> = grad.iter().zip(&lambda).map(|(g, l)| g * l).collect();
        let hlam = hessian_lambda(gm, &lambda)?;
        let mut hphi = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                hphi[(i, j)] = hlam[(i, j)] * lambda[i] * lambda[j];
            }
            hphi[(i, i)] += gphi[i];
        }
        // Newton direction if the local model is convex, otherwise a
        // Levenberg-damped solve, finally steepest descent.
        let rhs = DVector::from_iterator(k, gphi.iter().map(|g| -g));
        let mut dir: Option<DVector<f64>> = None;
        let trace = (0..k).map(|i| hphi[(i, i)].abs()).sum::<f64>().max(1e-300);
        let mut tau = 0.0;
        for _ in 0..12 {
            let mut damped = hphi.clone();
            for i in 0..k {
                damped[(i, i)] += tau;
            }
            if let Some(ch) = damped.cholesky() {
                dir = Some(ch.solve(&rhs));
                break;
            }
            tau = if tau == 0.0 { 1e-8 * trace } else { tau * 10.0 };
        }
        let dir = dir.unwrap_or_else(|| rhs.clone());
        let slope: f64 = dir.iter().zip(&gphi).map(|(d, g)| d * g).sum();
        let dir = if slope < 0.0 { dir } else { rhs };
        let slope: f64 = dir.iter().zip(&gphi).map(|(d, g)| d * g).sum();

        // Armijo backtracking.  Probes outside the exp-safe box are
        // rejected like any failed step; only an *accepted* iterate at
        // the box edge counts as escape from the positive orthant.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let ell_new: Vec<f64> = ell
                .iter()
                .zip(dir.iter())
                .map(|(e, d)| e + step * d)
                .collect();
            if ell_new.iter().any(|e| e.abs() > 60.0) {
                step *= 0.5;
                continue;
            }
            let lam_new: Vec<f64> = ell_new.iter().map(|e| e.exp()).collect();
            let val_new = functional(gm, &lam_new)?;
            if val_new <= value + 1e-4 * step * slope {
                ell = ell_new;
                lambda = lam_new;
                value = val_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Ok(Descent::Stalled);
        }
        if ell.iter().any(|e| e.abs() > 55.0) {
            // Λ below ~1e-24 or above ~1e24: the minimizing sequence left
            // every compact subset of the positive orthant.
            return Ok(Descent::Escaped);
        }
    }
    Ok(Descent::Stalled)
}

/// Quadratically convergent endgame: Newton's method for the root of
/// `∇Ĩ(Λ) = 0` in the original variables, step-halved if positivity would
/// be lost.
fn polish(gm: &GreenMatrix, mut lambda: Vec<f64>) -> Result<Descent> {
    let k = lambda.len();
    for _ in 0..40 {
        let grad = gradient(gm, &lambda)?;
        if grad.iter().all(|g| g.abs() < 1e-12) {
            return Ok(Descent::Converged(lambda));
        }
        let jac = hessian_lambda(gm, &lambda)?;
        let rhs = DVector::from_iterator(k, grad.iter().map(|g| -g));
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => return Ok(Descent::Stalled),
        };
        let mut t = 1.0;
        while lambda.iter().zip(step.iter()).any(|(l, s)| l + t * s <= 0.0) {
            t *= 0.5;
            if t < 1e-12 {
                return Ok(Descent::Stalled);
            }
        }
        for (l, s) in lambda.iter_mut().zip(step.iter()) {
            *l += t * s;
        }
    }
    Ok(Descent::Stalled)
}

/// Minimize `Ĩ` and assemble the full spectral data.  Refuses
/// configurations whose interaction matrix is not positive definite: the
/// functional is then unbounded below on the positive orthant and the
/// height system has no interior solution.
pub fn solve_heights(gm: &GreenMatrix) -> Result<BSolution> {
    solve_heights_from(gm, None)
}

/// As [`solve_heights`] but from a caller-supplied positive starting
/// point (used by the uniqueness checks).
pub fn solve_heights_from(gm: &GreenMatrix, start: Option<&[f64]>) -> Result<BSolution> {
    let nf = dim_of(gm)? as f64;
    if !gm.is_positive_definite {
        return Err(Error::InvalidConfig(
            "interaction matrix is not positive definite; the height functional \
             has no interior minimizer"
                .into(),
        ));
    }
    let init = match start {
        Some(s) => {
            check_lambda(gm, s)?;
            s.to_vec()
        }
        None => decoupled_init(nf, gm),
    };
    let lambda = match minimize(gm, &init, 200)? {
        Descent::Converged(l) => l,
        Descent::Escaped => {
            return Err(Error::Numerical(
                "height minimization escaped the positive orthant".into(),
            ))
        }
        Descent::Stalled => {
            return Err(Error::Numerical(
                "height minimization did not converge within 200 iterations".into(),
            ))
        }
    };

    let k = lambda.len();
    let b: Vec<f64> = lambda.iter().map(|l| l.powf(2.0 / (nf - 2.0))).collect();

    // Analytic Hessian D²I(b) of I(b) = Ĩ(Λ(b))/(n-2) in the b variables.
    let mut hess_i = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut diag = (nf - 3.0) * gm.matrix[(j, j)] * b[j].powf(nf - 4.0) - 2.0 / (nf - 2.0);
        for i in 0..k {
            if i != j {
                let g = -gm.matrix[(i, j)];
                diag -= (nf - 4.0) / 2.0
                    * g
                    * b[j].powf((nf - 6.0) / 2.0)
                    * b[i].powf((nf - 2.0) / 2.0);
                hess_i[(i, j)] = -(nf - 2.0) / 2.0 * g * (b[i] * b[j]).powf((nf - 4.0) / 2.0);
            }
        }
        hess_i[(j, j)] = diag;
    }

    // M from its own explicit entries (not via the identity with D²I).
    let mut m = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut diag = (nf - 3.0) * b[j].powf(nf - 4.0) * gm.matrix[(j, j)];
        for i in 0..k {
            if i != j {
                let g = -gm.matrix[(i, j)];
                diag -= (nf - 4.0) / 2.0
                    * b[j].powf((nf - 6.0) / 2.0)
                    * b[i].powf((nf - 2.0) / 2.0)
                    * g;
                m[(i, j)] = -(nf - 2.0) / 2.0 * (b[i] * b[j]).powf((nf - 4.0) / 2.0) * g;
            }
        }
        m[(j, j)] = diag;
    }

    // Cross-check the exact identity M = D²I(b) + (2/(n-2))·Id.
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for j in 0..k {
        for i in 0..k {
            let want = hess_i[(i, j)] + if i == j { 2.0 / (nf - 2.0) } else { 0.0 };
            if (m[(i, j)] - want).abs() > 1e-10 * scale {
                return Err(Error::Numerical(format!(
                    "M vs D²I identity violated at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    want
                )));
            }
        }
    }

    // Spectral data of D²I(b): eigenvalues ascending, eigenvector rows.
    let se = hess_i.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &c| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[c])
            .unwrap()
    });
    let mut p = DMatrix::<f64>::zeros(k, k);
    let mut sigma_bar = Vec::with_capacity(k);
    for (row, &idx) in order.iter().enumerate() {
        sigma_bar.push((nf - 2.0) / 2.0 * se.eigenvalues[idx]);
        for col in 0..k {
            p[(row, col)] = se.eigenvectors[(col, idx)];
        }
    }
    if sigma_bar[0] <= 0.0 {
        return Err(Error::Numerical(format!(
            "height Hessian is not positive definite at the minimizer: σ̄_min = {}",
            sigma_bar[0]
        )));
    }

    let residual = residual_ee(gm, &lambda)?;
    Ok(BSolution {
        b,
        lambda,
        hess_i,
        m,
        p,
        sigma_bar,
        residual,
    })
}

/// Whether the height system is solvable for this configuration — the
/// reciprocal of the positive-definiteness gate.  On non-PD inputs the
/// damped descent is run anyway to observe the minimizer escaping the
/// positive orthant.
pub fn positivity_reciprocal_check(gm: &GreenMatrix) -> bool {
    if gm.is_positive_definite {
        solve_heights(gm).is_ok()
    } else {
        let nf = match dim_of(gm) {
            Ok(n) => n as f64,
            Err(_) => return false,
        };
        // Diagnostic descent; expected outcome is Escaped (the iterates
        // leave every compact subset of the orthant, which can take many
        // small damped steps).  Either way the verdict is negative: the
        // functional is not coercive.
        let _ = minimize(gm, &decoupled_init(nf, gm), 5000);
        false
    }
}
