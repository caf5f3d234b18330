//! Radial spectral theory of the linearized operator
//! `L₀ = Δ + pU^{p-1}`: the unique negative eigenpair `(λ₀, Z₀)`, the
//! second (singular) kernel solution `Z̃` with Wronskian normalization
//! `Z̃′Z − Z̃Z′ = r^{1-n}`, the corrector `p₀` solving `L₀p₀ = q₀`, the
//! coercivity constant `λ_R` of the quadratic form on `B_{2R}` under the
//! `Z₀`-orthogonality constraint, the supersolution of the cut-off
//! operator `𝓛_M`, and the degree-1 spherical-harmonic mode operator.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::bubble::Dim;
use crate::grid::{RadialField, RadialGrid};
use crate::{linalg, quad, Error, Result};

/// The negative eigenpair of `L₀` in the convention `L₀φ + λφ = 0`, so
/// `lambda0 < 0` and `Z₀` decays like `r^{-(n-1)/2} e^{-√|λ₀| r}`.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    /// Discrete (finite-volume) eigenvalue; strictly negative.
    pub lambda0: f64,
    /// Next discrete eigenvalue, reported for the simplicity margin; the
    /// continuum edge sits at 0, so this is nonnegative up to truncation.
    pub lambda1: f64,
    /// Ground state, positive, normalized `ω_n ∫ Z₀² r^{n-1} dr = 1`.
    pub z0: RadialField,
    /// Independent shooting value of `λ₀` (bisection on the decaying
    /// tail); must agree with `lambda0` to 1e-4 relative.
    pub shooting_lambda0: f64,
    /// Slope of `log(φ r^{(n-1)/2})` over `r ∈ [3, 6.5]` of the shooting
    /// profile; tends to `-√|λ₀|`.
    pub tail_slope: f64,
}

/// The fundamental system `(Z_{n+1}, Z̃_{n+1})` of the radial kernel of
/// `L₀`, normalized so that `r^{n-1}(Z̃′Z − Z̃Z′) = wronskian_constant = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalSystem {
    /// Dilation kernel `Z_{n+1}` sampled on the grid.
    pub z: RadialField,
    /// Second solution: `~ r^{2-n}` near 0, nonzero constant at infinity.
    pub ztilde: RadialField,
    /// Analytic derivative of `ztilde` (from the reduction-of-order
    /// formula, not finite differences), for Wronskian checks.
    pub ztilde_prime: RadialField,
    /// Value of `r^{n-1}(Z̃′Z − Z̃Z′)`; fixed to 1 by construction.
    pub wronskian_constant: f64,
}

fn check_grid_dim(dim: &Dim, grid: &RadialGrid) -> Result<()> {
    if grid.dim() != dim.n {
        return Err(Error::InvalidConfig(format!(
            "grid dimension {} does not match operator dimension {}",
            grid.dim(),
            dim.n
        )));
    }
    Ok(())
}

/// Nonuniform three-point stencil: first and second derivative at the
/// middle node from values `(fm, f0, fp)` at gaps `hm` (left), `hp`
/// (right).
fn stencil3(hm: f64, hp: f64, fm: f64, f0: f64, fp: f64) -> (f64, f64) {
    let denom = hm * hp * (hm + hp);
    let d1 = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / denom;
    let d2 = 2.0 * (hm * fp + hp * fm - (hm + hp) * f0) / denom;
    (d1, d2)
}

/// Least-squares slope of `ys` against `xs`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

// ---------------------------------------------------------------------------
// Finite-volume pencil on a general grid
// ---------------------------------------------------------------------------

/// Finite-volume discretization of the quadratic form
/// `Q(φ,φ) = ∫ (φ′² − pU^{p-1}φ²) r^{n-1} dr` on the grid nodes:
/// `Q ≈ φᵀ(S − VB)φ` with `S` the face-flux stiffness matrix and `B` the
/// diagonal of hat-moment weights.  `main`/`off` are the tridiagonal of
/// `A = S − VB` over the retained unknowns.
struct Pencil {
    main: Vec<f64>,
    off: Vec<f64>,
    b: Vec<f64>,
}

/// Assemble the pencil over all nodes except the last (homogeneous
/// Dirichlet at the truncation radius, natural/Neumann at the first node).
fn assemble_pencil(dim: &Dim, grid: &RadialGrid) -> Pencil {
    let r = grid.nodes();
    let w = grid.weights();
    let nf = dim.n as f64;
    let m = r.len();
    let mu = m - 1; // unknowns
    let mut k = vec![0.0; mu];
    for (i, face) in k.iter_mut().enumerate() {
        let mid = 0.5 * (r[i] + r[i + 1]);
        *face = mid.powf(nf - 1.0) / (r[i + 1] - r[i]);
    }
    let mut main = vec![0.0; mu];
    let mut off = vec![0.0; mu.saturating_sub(1)];
    let mut b = vec![0.0; mu];
    for i in 0..mu {
        let stiff = if i > 0 { k[i - 1] } else { 0.0 } + k[i];
        b[i] = w[i];
        main[i] = stiff - dim.potential(r[i]) * b[i];
        if i + 1 < mu {
            off[i] = -k[i];
        }
    }
    Pencil { main, off, b }
}

/// `Q(φ,φ)` for a nodal field by the bilinear (face-flux) form.  The
/// field is treated as extended by zero past the last node, matching the
/// Dirichlet convention of [`assemble_pencil`].
pub fn q_form(dim: &Dim, phi: &RadialField) -> Result<f64> {
    check_grid_dim(dim, &phi.grid)?;
    let r = phi.grid.nodes();
    let w = phi.grid.weights();
    let v = &phi.values;
    let nf = dim.n as f64;
    let mut q = 0.0;
    for i in 0..r.len() - 1 {
        let mid = 0.5 * (r[i] + r[i + 1]);
        let k = mid.powf(nf - 1.0) / (r[i + 1] - r[i]);
        let d = v[i + 1] - v[i];
        q += k * d * d;
    }
    for i in 0..r.len() {
        q -= dim.potential(r[i]) * w[i] * v[i] * v[i];
    }
    Ok(q)
}

/// Discrete `L₀φ` consistent with [`q_form`]: interior nodes carry the
/// finite-volume Laplacian plus the potential; the two end nodes are set
/// to zero (their stencils are one-sided and excluded from residual
/// checks).
pub fn apply_l0(dim: &Dim, phi: &RadialField) -> Result<RadialField> {
    check_grid_dim(dim, &phi.grid)?;
    let r = phi.grid.nodes();
    let w = phi.grid.weights();
    let v = &phi.values;
    let nf = dim.n as f64;
    let m = r.len();
    let mut out = vec![0.0; m];
    let face = |i: usize| {
        let mid = 0.5 * (r[i] + r[i + 1]);
        mid.powf(nf - 1.0) / (r[i + 1] - r[i])
    };
    for i in 1..m - 1 {
        let s = face(i - 1) * (v[i] - v[i - 1]) + face(i) * (v[i] - v[i + 1]);
        out[i] = -s / w[i] + dim.potential(r[i]) * v[i];
    }
    RadialField::new(phi.grid.clone(), out)
}

// ---------------------------------------------------------------------------
// Negative eigenpair
// ---------------------------------------------------------------------------

/// Fixed-step RK4 shooting integration of `φ″ = (ν − pU^{p-1})φ −
/// (n-1)/r·φ′` from `r ≈ 0` with `φ(0) = 1`, `φ′(0) = 0`.  Returns the end
/// value (sign decides the bisection) and, when requested, the profile
/// samples on `r ∈ [3, 6.5]` for the tail-slope fit.
fn shoot(dim: &Dim, nu: f64, record: bool) -> (f64, Vec<(f64, f64)>) {
    let nf = dim.n as f64;
    let h = 1e-3;
    let nsteps = 30_000;
    let f = |r: f64, phi: f64, dphi: f64| -> (f64, f64) {
        let rr = r.max(1e-9);
        (
            dphi,
            (nu - dim.potential(rr)) * phi - (nf - 1.0) / rr * dphi,
        )
    };
    let mut r = 1e-6;
    let mut phi = 1.0;
    let mut dphi = 0.0;
    let mut window = Vec::new();
    for _ in 0..nsteps {
        let k1 = f(r, phi, dphi);
        let k2 = f(r + h / 2.0, phi + h / 2.0 * k1.0, dphi + h / 2.0 * k1.1);
        let k3 = f(r + h / 2.0, phi + h / 2.0 * k2.0, dphi + h / 2.0 * k2.1);
        let k4 = f(r + h, phi + h * k3.0, dphi + h * k3.1);
        phi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dphi += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        r += h;
        if record && (3.0..=6.5).contains(&r) && phi > 0.0 {
            window.push((r, phi));
        }
        if phi.abs() > 1e250 {
            break;
        }
    }
    (phi, window)
}

/// Shooting eigenvalue `ν = |λ₀|` by bisection on the sign of the escape
/// branch, plus the tail slope of `log(φ r^{(n-1)/2})` over `[3, 6.5]` at
/// the converged `ν`.
fn shooting_nu(dim: &Dim) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.05, 50.0);
    let (mut flo, _) = shoot(dim, lo, false);
    let (fhi, _) = shoot(dim, hi, false);
    if flo * fhi >= 0.0 {
        return Err(Error::Numerical(
            "shooting bracket does not straddle the negative eigenvalue".into(),
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (fm, _) = shoot(dim, mid, false);
        if fm * flo > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    let (_, window) = shoot(dim, nu, true);
    if window.len() < 100 {
        return Err(Error::Numerical(
            "shooting profile lost positivity inside the tail-fit window".into(),
        ));
    }
    let nf = dim.n as f64;
    let xs: Vec<f64> = window.iter().map(|&(r, _)| r).collect();
    let ys: Vec<f64> = window
        .iter()
        .map(|&(r, p)| (p * r.powf((nf - 1.0) / 2.0)).ln())
        .collect();
    Ok((nu, ls_slope(&xs, &ys)))
}

/// Lowest eigenpair of `L₀` on the given grid (3-point finite-volume
/// stencils, Neumann at the origin, Dirichlet at the truncation radius),
/// validated against the shooting value.
///
/// The ground vector comes from fixed-shift inverse iteration with the
/// shift strictly below `λ₀`: the shifted matrix is then a Stieltjes
/// M-matrix, whose Thomas solve involves no cancellation, so the iterate
/// stays componentwise positive all the way into the exponential tail.
pub fn negative_eigenpair(dim: &Dim, grid: &RadialGrid) -> Result<EigenPair> {
    check_grid_dim(dim, grid)?;
    let r = grid.nodes();
    let m = r.len();
    if m < 16 {
        return Err(Error::InvalidConfig(
            "eigenproblem grid needs at least 16 nodes".into(),
        ));
    }
    let rmax = r[m - 1];
    if rmax < 50.0 {
        return Err(Error::InvalidConfig(format!(
            "truncation radius {rmax} < 50 cannot resolve the eigenpair tail"
        )));
    }
    let pen = assemble_pencil(dim, grid);
    let mu = pen.main.len();
    // Symmetric standard form: d_i = main_i/b_i, e_i = off_i/√(b_i b_{i+1}).
    let d: Vec<f64> = pen
        .main
        .iter()
        .zip(&pen.b)
        .map(|(a, b)| a / b)
        .collect();
    let e: Vec<f64> = (0..mu - 1)
        .map(|i| pen.off[i] / (pen.b[i] * pen.b[i + 1]).sqrt())
        .collect();
    let lam0 = linalg::tridiag_eigenvalue(&d, &e, 0);
    let lam1 = linalg::tridiag_eigenvalue(&d, &e, 1);
    if lam0 >= 0.0 {
        return Err(Error::Numerical(
            "discretization resolved no negative eigenvalue".into(),
        ));
    }
    if lam1 - lam0 < 1e-3 * lam0.abs() {
        return Err(Error::Numerical(
            "lowest eigenvalue is not simple at this resolution".into(),
        ));
    }
    // Fixed-shift inverse iteration (M-matrix regime: sigma < lam0).
    let sigma = lam0 - 0.5 * lam0.abs();
    let dsh: Vec<f64> = d.iter().map(|x| x - sigma).collect();
    let mut y = vec![1.0; mu];
    let mut rho = 0.0;
    for _ in 0..120 {
        let wv = linalg::solve_tridiagonal(&e, &dsh, &e, &y)?;
        let norm = wv.iter().map(|x| x * x).sum::<f64>().sqrt();
        y = wv.iter().map(|x| x / norm).collect();
        let mut rho_new = 0.0;
        for i in 0..mu {
            rho_new += d[i] * y[i] * y[i];
            if i + 1 < mu {
                rho_new += 2.0 * e[i] * y[i] * y[i + 1];
            }
        }
        if (rho_new - rho).abs() < 1e-13 * rho_new.abs().max(1.0) {
            rho = rho_new;
            break;
        }
        rho = rho_new;
    }
    if y.iter().any(|&x| x <= 0.0) {
        return Err(Error::Numerical(
            "ground state lost positivity (iteration failure)".into(),
        ));
    }
    // Back to nodal values, normalized so ω_n ∫ Z₀² r^{n-1} dr = 1; the
    // standard-form vector is Euclidean-normalized, which already gives
    // Σ b z² = 1.
    let scale = dim.omega_n.sqrt();
    let mut z0_vals: Vec<f64> = y
        .iter()
        .zip(&pen.b)
        .map(|(yi, bi)| yi / bi.sqrt() / scale)
        .collect();
    z0_vals.push(0.0); // Dirichlet node
    let (nu, tail_slope) = shooting_nu(dim)?;
    if (rho + nu).abs() > 1e-4 * nu {
        return Err(Error::Numerical(format!(
            "discrete eigenvalue {rho} and shooting value {} disagree beyond 1e-4",
            -nu
        )));
    }
    Ok(EigenPair {
        lambda0: rho,
        lambda1: lam1,
        z0: RadialField::new(grid.clone(), z0_vals)?,
        shooting_lambda0: -nu,
        tail_slope,
    })
}

// ---------------------------------------------------------------------------
// Second kernel solution
// ---------------------------------------------------------------------------

/// Bracket the single positive zero of the dilation kernel by bisection
/// on the closed form (it sits at `r = 1` for every `n`, but the code
/// does not assume that).
fn dilation_zero(dim: &Dim) -> f64 {
    let (mut lo, mut hi) = (0.25, 4.0);
    debug_assert!(dim.dilation_kernel(lo) > 0.0 && dim.dilation_kernel(hi) < 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dim.dilation_kernel(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Second solution of `L₀φ = 0` by reduction of order
/// `Z̃ = Z·∫ ds/(s^{n-1}Z²)` on each side of the zero of `Z`, glued across
/// it by a short ODE integration; the Wronskian normalization
/// `Z̃′Z − Z̃Z′ = r^{1-n}` holds identically because the quadrature
/// constant enters both `Z̃` and `Z̃′` through the same formula.
pub fn second_solution(dim: &Dim, grid: &RadialGrid) -> Result<FundamentalSystem> {
    check_grid_dim(dim, grid)?;
    let r = grid.nodes();
    let m = r.len();
    let nf = dim.n as f64;
    if r[0] <= 0.0 {
        return Err(Error::InvalidConfig(
            "second solution is singular at r = 0: grid must start at r > 0".into(),
        ));
    }
    let r_star = dilation_zero(dim);
    if r[0] >= 0.5 * r_star || r[m - 1] <= 2.0 * r_star {
        return Err(Error::InvalidConfig(
            "grid misses the sign-change region of the dilation kernel".into(),
        ));
    }
    let band = 0.08 * r_star;
    let (r_lo, r_hi) = (r_star - band, r_star + band);
    let i_lo = r.partition_point(|&x| x < r_lo); // nodes [0, i_lo) inner
    let i_hi = r.partition_point(|&x| x <= r_hi); // nodes [i_hi, m) outer
    if i_lo == 0 || i_hi >= m {
        return Err(Error::InvalidConfig(
            "grid has no nodes on one side of the dilation-kernel zero".into(),
        ));
    }
    let integrand = |s: f64| {
        let z = dim.dilation_kernel(s);
        1.0 / (s.powf(nf - 1.0) * z * z)
    };
    // Anchors: the integration constants are free (they shift Z̃ by a
    // multiple of Z); anchor each branch at the node nearest r*/2 and 2r*.
    let nearest = |lo: usize, hi: usize, target: f64| -> usize {
        let mut best = lo;
        for i in lo..hi {
            if (r[i] - target).abs() < (r[best] - target).abs() {
                best = i;
            }
        }
        best
    };
    let a_in = nearest(0, i_lo, 0.5 * r_star);
    let a_out = nearest(i_hi, m, 2.0 * r_star) - i_hi;
    // Prefix integrals of 1/(s^{n-1}Z²) over the inner prefix and outer
    // suffix of the node list (one Gauss panel per segment), accumulated
    // outward from the anchor node of each branch: the integrand blows
    // up like s^{1-n} at the origin and like s^{n-3} at infinity, and
    // anchor-relative sums keep the roundoff of those large totals out
    // of the moderate-radius values.
    let mut p_in = vec![0.0; i_lo];
    for i in a_in + 1..i_lo {
        p_in[i] = p_in[i - 1] + quad::gl10(integrand, r[i - 1], r[i]);
    }
    for i in (0..a_in).rev() {
        p_in[i] = p_in[i + 1] - quad::gl10(integrand, r[i], r[i + 1]);
    }
    let n_out = m - i_hi;
    let mut p_out = vec![0.0; n_out];
    for i in a_out + 1..n_out {
        p_out[i] = p_out[i - 1] + quad::gl10(integrand, r[i_hi + i - 1], r[i_hi + i]);
    }
    for i in (0..a_out).rev() {
        p_out[i] = p_out[i + 1] - quad::gl10(integrand, r[i_hi + i], r[i_hi + i + 1]);
    }
    let mut zt = vec![0.0; m];
    let mut ztp = vec![0.0; m];
    let branch = |idx: usize, j: f64| -> (f64, f64) {
        let z = dim.dilation_kernel(r[idx]);
        let dz = dim.dilation_kernel_deriv(r[idx]);
        (z * j, dz * j + 1.0 / (r[idx].powf(nf - 1.0) * z))
    };
    for i in i_hi..m {
        let (v, dv) = branch(i, p_out[i - i_hi]);
        zt[i] = v;
        ztp[i] = dv;
    }
    // Glue: integrate the ODE from the first outer node down through the
    // band to the last inner node, then match the inner branch constant.
    let rhs = |rr: f64, y: (f64, f64)| -> (f64, f64) {
        (y.1, -dim.potential(rr) * y.0 - (nf - 1.0) / rr * y.1)
    };
    let mut pos = r[i_hi];
    let mut y = (zt[i_hi], ztp[i_hi]);
    for tgt_idx in (i_lo - 1..i_hi).rev() {
        let target = r[tgt_idx];
        let span = pos - target;
        let steps = (span / 1e-4).ceil().max(1.0) as usize;
        let h = -span / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(pos, y);
            let k2 = rhs(
                pos + h / 2.0,
                (y.0 + h / 2.0 * k1.0, y.1 + h / 2.0 * k1.1),
            );
            let k3 = rhs(
                pos + h / 2.0,
                (y.0 + h / 2.0 * k2.0, y.1 + h / 2.0 * k2.1),
            );
            let k4 = rhs(pos + h, (y.0 + h * k3.0, y.1 + h * k3.1));
            y = (
                y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            );
            pos += h;
        }
        pos = target;
        if tgt_idx >= i_lo {
            zt[tgt_idx] = y.0;
            ztp[tgt_idx] = y.1;
        }
    }
    // Inner branch constant from the glued value at the last inner node.
    let glue_idx = i_lo - 1;
    let a_minus = y.0 / dim.dilation_kernel(r[glue_idx]) - p_in[glue_idx];
    for i in 0..i_lo {
        let (v, dv) = branch(i, a_minus + p_in[i]);
        zt[i] = v;
        ztp[i] = dv;
    }
    // Wronskian validation across the whole grid.
    let mut wdev = 0.0f64;
    for i in 0..m {
        let z = dim.dilation_kernel(r[i]);
        let dz = dim.dilation_kernel_deriv(r[i]);
        let w = r[i].powf(nf - 1.0) * (ztp[i] * z - zt[i] * dz);
        wdev = wdev.max((w - 1.0).abs());
    }
    if wdev > 1e-8 {
        return Err(Error::Numerical(format!(
            "Wronskian normalization drifted by {wdev:.3e} (> 1e-8)"
        )));
    }
    Ok(FundamentalSystem {
        z: grid.sample(|s| dim.dilation_kernel(s)),
        ztilde: RadialField::new(grid.clone(), zt)?,
        ztilde_prime: RadialField::new(grid.clone(), ztp)?,
        wronskian_constant: 1.0,
    })
}

// ---------------------------------------------------------------------------
// Corrector p₀
// ---------------------------------------------------------------------------

/// Source term `q₀ = pU^{p-1} c₂ + c₁ Z_{n+1}`, orthogonal to `Z_{n+1}`
/// by the defining choice of `c₁`, `c₂`.
pub fn q0_source(dim: &Dim, r: f64) -> f64 {
    dim.potential(r) * dim.c2 + dim.c1 * dim.dilation_kernel(r)
}

/// Corrector `p₀` with `L₀ p₀ = q₀`, by variation of parameters over the
/// fundamental system:
/// `p₀ = Z̃ ∫₀^r Z q₀ s^{n-1} ds − Z ∫₀^r Z̃ q₀ s^{n-1} ds`
/// (the ordering realizing `L₀p₀ = +q₀` under the Wronskian convention
/// `r^{n-1}(Z̃′Z − Z̃Z′) = 1`; verified by residual).  The result is
/// independent of the free `Z`-multiple in `Z̃`: shifting `Z̃` by `cZ`
/// cancels exactly between the two terms.
pub fn corrector_p0(dim: &Dim, sys: &FundamentalSystem) -> Result<RadialField> {
    corrector_p0_pair(dim, sys).map(|(p0, _)| p0)
}

/// Corrector together with its radial derivative.  Differentiating the
/// variation-of-parameters form, the product-rule terms
/// `Z̃·(Zq₀r^{n-1}) − Z·(Z̃q₀r^{n-1})` cancel exactly, leaving
/// `p₀′ = Z̃′ F₂ − Z′ F₁` with the same cumulative integrals; the returned
/// derivative is therefore consistent with the values to quadrature
/// accuracy rather than by numerical differentiation.
pub fn corrector_p0_pair(
    dim: &Dim,
    sys: &FundamentalSystem,
) -> Result<(RadialField, RadialField)> {
    check_grid_dim(dim, &sys.z.grid)?;
    let r = sys.z.grid.nodes();
    let m = r.len();
    // Orthogonality gate ∫ q₀ Z r^{n-1} dr = 0 by independent quadrature.
    let nf = dim.n as f64;
    let orth = quad::integrate_to_infinity(
        |s| q0_source(dim, s) * dim.dilation_kernel(s) * s.powf(nf - 1.0),
        0.0,
        1e-12,
    );
    let orth_scale = quad::integrate_to_infinity(
        |s| (q0_source(dim, s) * dim.dilation_kernel(s) * s.powf(nf - 1.0)).abs(),
        0.0,
        1e-6,
    );
    if orth.abs() > 1e-8 * orth_scale {
        return Err(Error::Numerical(format!(
            "q₀ not orthogonal to the dilation kernel: {:.3e} relative",
            orth.abs() / orth_scale
        )));
    }
    // Cumulative trapezoids from a virtual origin node (both integrands
    // vanish linearly at r = 0).
    let g2: Vec<f64> = (0..m)
        .map(|i| sys.z.values[i] * q0_source(dim, r[i]) * r[i].powf(nf - 1.0))
        .collect();
    let g1: Vec<f64> = (0..m)
        .map(|i| sys.ztilde.values[i] * q0_source(dim, r[i]) * r[i].powf(nf - 1.0))
        .collect();
    let cumtrapz = |g: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; m];
        f[0] = 0.5 * r[0] * g[0];
        for i in 1..m {
            f[i] = f[i - 1] + 0.5 * (r[i] - r[i - 1]) * (g[i] + g[i - 1]);
        }
        f
    };
    let f2 = cumtrapz(&g2);
    let f1 = cumtrapz(&g1);
    let vals: Vec<f64> = (0..m)
        .map(|i| sys.ztilde.values[i] * f2[i] - sys.z.values[i] * f1[i])
        .collect();
    let dvals: Vec<f64> = (0..m)
        .map(|i| sys.ztilde_prime.values[i] * f2[i] - dim.dilation_kernel_deriv(r[i]) * f1[i])
        .collect();
    Ok((
        RadialField::new(sys.z.grid.clone(), vals)?,
        RadialField::new(sys.z.grid.clone(), dvals)?,
    ))
}

// ---------------------------------------------------------------------------
// Coercivity constant
// ---------------------------------------------------------------------------

/// Uniform-grid pencil matching the reference discretization: interior
/// nodes `r_i = i·h`, `i = 1..nsteps-1`, face coefficients at half nodes,
/// lumped mass `B_i = r_i^{n-1} h`.
struct UniformPencil {
    main: Vec<f64>,
    off: Vec<f64>,
    b: Vec<f64>,
    h: f64,
}

fn uniform_q_pencil(dim: &Dim, rdom: f64, nsteps: usize) -> UniformPencil {
    let nf = dim.n as f64;
    let h = rdom / nsteps as f64;
    let m = nsteps - 1;
    let k: Vec<f64> = (0..nsteps)
        .map(|i| ((i as f64 + 0.5) * h).powf(nf - 1.0))
        .collect();
    let mut main = vec![0.0; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        let r = (i + 1) as f64 * h;
        b[i] = r.powf(nf - 1.0) * h;
        main[i] = (k[i] + k[i + 1]) / h - dim.potential(r) * b[i];
    }
    let off: Vec<f64> = (1..m).map(|i| -k[i] / h).collect();
    UniformPencil { main, off, b, h }
}

fn pencil_rayleigh(p: &UniformPencil, w: &[f64]) -> f64 {
    let mut q = 0.0;
    for i in 0..w.len() {
        q += p.main[i] * w[i] * w[i];
        if i + 1 < w.len() {
            q += 2.0 * p.off[i] * w[i] * w[i + 1];
        }
    }
    q
}

fn b_normalize(p: &UniformPencil, w: &mut [f64]) {
    let s = w
        .iter()
        .zip(&p.b)
        .map(|(x, b)| b * x * x)
        .sum::<f64>()
        .sqrt();
    for x in w.iter_mut() {
        *x /= s;
    }
}

/// Lowest eigenvalue and B-normalized eigenvector of the pencil by
/// inverse iteration at a fixed shift strictly below the spectrum.
fn pencil_lowest(p: &UniformPencil, sigma: f64) -> Result<(f64, Vec<f64>)> {
    let m = p.main.len();
    let shifted: Vec<f64> = p
        .main
        .iter()
        .zip(&p.b)
        .map(|(a, b)| a - sigma * b)
        .collect();
    let mut v: Vec<f64> = (0..m).map(|i| (-((i + 1) as f64) * p.h).exp()).collect();
    b_normalize(p, &mut v);
    let mut lam = 0.0;
    for _ in 0..300 {
        let rhs: Vec<f64> = v.iter().zip(&p.b).map(|(x, b)| b * x).collect();
        let mut w = linalg::solve_tridiagonal(&p.off, &shifted, &p.off, &rhs)?;
        b_normalize(p, &mut w);
        let lam_new = pencil_rayleigh(p, &w);
        let done = (lam_new - lam).abs() < 1e-13 * lam_new.abs().max(1.0);
        lam = lam_new;
        v = w;
        if done {
            break;
        }
    }
    Ok((lam, v))
}

/// Shift below the whole spectrum of the Q-pencil: the potential is
/// bounded by `p·n(n-2)`, so `-1.2·p·n(n-2)` leaves the shifted matrix
/// positive definite (and an M-matrix).
fn spectrum_floor_shift(dim: &Dim) -> f64 {
    let nf = dim.n as f64;
    -1.2 * dim.p * nf * (nf - 2.0)
}

/// Minimum of `Q(φ,φ)/∫φ² r^{n-1}` over radial `φ ∈ H₀¹(B_{2R})` with
/// `∫ φ Z₀ r^{n-1} = 0`, by bordered inverse iteration at shift 0 on the
/// finite-volume pencil (`h = 1/400`).  `Z₀` is the ground state of a
/// larger reference domain restricted by linear interpolation.
pub fn coercivity_constant(dim: &Dim, big_r: f64) -> Result<f64> {
    if big_r < 10.0 {
        return Err(Error::InvalidConfig(format!(
            "coercivity radius must be >= 10, got {big_r}"
        )));
    }
    // Reference ground state on a domain comfortably containing B_2R.
    let rbig = if 2.0 * big_r <= 80.0 {
        80.0
    } else {
        2.0 * big_r + 10.0
    };
    let nbig = (rbig / 0.002).round() as usize;
    let big = uniform_q_pencil(dim, rbig, nbig);
    let (_, z_big) = pencil_lowest(&big, spectrum_floor_shift(dim))?;
    let hbig = rbig / nbig as f64;

    let rdom = 2.0 * big_r;
    let nst = (400.0 * rdom).round() as usize;
    let p = uniform_q_pencil(dim, rdom, nst);
    let m = p.main.len();
    // Restrict Z₀ (big-grid interior nodes at (j+1)·hbig) by linear
    // interpolation onto the coercivity nodes.
    let z: Vec<f64> = (0..m)
        .map(|i| {
            let r = (i + 1) as f64 * p.h;
            let pos = (r / hbig - 1.0).clamp(0.0, (z_big.len() - 1) as f64);
            let j = (pos.floor() as usize).min(z_big.len() - 2);
            let t = pos - j as f64;
            z_big[j] * (1.0 - t) + z_big[j + 1] * t
        })
        .collect();
    let c: Vec<f64> = z.iter().zip(&p.b).map(|(x, b)| b * x).collect();
    let a_inv_c = linalg::solve_tridiagonal_pivot(&p.off, &p.main, &p.off, &c)?;
    let c_ac: f64 = c.iter().zip(&a_inv_c).map(|(x, y)| x * y).sum();

    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut v: Vec<f64> = (0..m).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    let cv: f64 = c.iter().zip(&v).map(|(x, y)| x * y).sum();
    let cz: f64 = c.iter().zip(&z).map(|(x, y)| x * y).sum();
    for (vi, zi) in v.iter_mut().zip(&z) {
        *vi -= zi * cv / cz;
    }
    b_normalize(&p, &mut v);
    let mut lam: Option<f64> = None;
    for _ in 0..400 {
        let rhs: Vec<f64> = v.iter().zip(&p.b).map(|(x, b)| b * x).collect();
        let mut w = linalg::solve_tridiagonal_pivot(&p.off, &p.main, &p.off, &rhs)?;
        let mu: f64 = c.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>() / c_ac;
        for (wi, ai) in w.iter_mut().zip(&a_inv_c) {
            *wi -= mu * ai;
        }
        b_normalize(&p, &mut w);
        let lam_new = pencil_rayleigh(&p, &w);
        if let Some(l) = lam {
            if (lam_new - l).abs() < 1e-10 * lam_new.abs() {
                lam = Some(lam_new);
                break;
            }
        }
        lam = Some(lam_new);
        v = w;
    }
    let lam_r = lam.expect("at least one iteration ran");
    if lam_r < -1e-7 {
        return Err(Error::Numerical(format!(
            "constrained minimum {lam_r:.3e} is negative beyond tolerance"
        )));
    }
    Ok(lam_r)
}

/// The same minimum without the `Z₀`-orthogonality constraint: the
/// unconstrained ground state, which recovers `λ₀ < 0`.
pub fn coercivity_unconstrained(dim: &Dim, big_r: f64) -> Result<f64> {
    if big_r < 10.0 {
        return Err(Error::InvalidConfig(format!(
            "coercivity radius must be >= 10, got {big_r}"
        )));
    }
    let rdom = 2.0 * big_r;
    let nst = (400.0 * rdom).round() as usize;
    let p = uniform_q_pencil(dim, rdom, nst);
    let (lam, _) = pencil_lowest(&p, spectrum_floor_shift(dim))?;
    Ok(lam)
}

// ---------------------------------------------------------------------------
// Supersolution of the cut-off operator
// ---------------------------------------------------------------------------

/// Quintic smooth step: 0 for `s ≤ 0`, 1 for `s ≥ 1`, C² across both ends.
fn smoothstep(s: f64) -> f64 {
    let t = s.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Potential of the cut-off operator `𝓛_M = Δ + (1-χ_M) pU^{p-1}`: zero
/// inside `B_M`, the full linearization weight outside `B_{M+1}`, with a
/// quintic transition on `[M, M+1]`.
fn cutoff_potential(dim: &Dim, m_cut: f64, r: f64) -> f64 {
    dim.potential(r) * smoothstep(r - m_cut)
}

/// Supersolution `g` of `𝓛_M g + (1+r^a)^{-1} = 0` on `B_{2R}` with
/// `g(2R) = 0`, by the variation-of-parameters formula
/// `g(r) = g₂(r) ∫_r^{2R} dρ/(g₂² ρ^{n-1}) ∫₀^ρ g₂ s^{n-1}/(1+s^a) ds`,
/// where `g₂` solves the homogeneous equation with `g₂ ≡ 1` on `[0, M]`.
pub fn supersolution_g(dim: &Dim, a: f64, m_cut: f64, big_r: f64) -> Result<RadialField> {
    if !(a > 0.0 && a < 3.0) {
        return Err(Error::InvalidConfig(format!(
            "decay exponent a = {a} outside (0, 3)"
        )));
    }
    if !(m_cut >= 1.0) {
        return Err(Error::InvalidConfig("cut-off radius must be >= 1".into()));
    }
    let two_r = 2.0 * big_r;
    if two_r < m_cut + 6.0 {
        return Err(Error::InvalidConfig(
            "domain 2R must exceed the cut-off radius M by at least 6".into(),
        ));
    }
    let nf = dim.n as f64;
    const N_OUT: usize = 4000;
    const N_IN: usize = 400;
    let h_out = (two_r - m_cut) / (N_OUT - 1) as f64;
    // Homogeneous solution g₂ from (1, 0) at r = M, RK4 with substeps.
    let rhs = |r: f64, y: (f64, f64)| -> (f64, f64) {
        (
            y.1,
            -cutoff_potential(dim, m_cut, r) * y.0 - (nf - 1.0) / r * y.1,
        )
    };
    let mut g2 = vec![0.0; N_OUT];
    let mut dg2 = vec![0.0; N_OUT];
    let mut y = (1.0, 0.0);
    g2[0] = 1.0;
    let sub = 4usize;
    let h = h_out / sub as f64;
    let mut pos = m_cut;
    for i in 1..N_OUT {
        for _ in 0..sub {
            let k1 = rhs(pos, y);
            let k2 = rhs(pos + h / 2.0, (y.0 + h / 2.0 * k1.0, y.1 + h / 2.0 * k1.1));
            let k3 = rhs(pos + h / 2.0, (y.0 + h / 2.0 * k2.0, y.1 + h / 2.0 * k2.1));
            let k4 = rhs(pos + h, (y.0 + h * k3.0, y.1 + h * k3.1));
            y = (
                y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            );
            pos += h;
        }
        pos = m_cut + i as f64 * h_out;
        g2[i] = y.0;
        dg2[i] = y.1;
    }
    if g2.iter().any(|&x| x <= 0.0) {
        return Err(Error::Numerical(
            "homogeneous solution g₂ lost positivity".into(),
        ));
    }
    // Precondition: the decaying homogeneous solution still decays at
    // M+2, i.e. η = g₂′ − 1/(r^{n-1} g₂) < 0 there.
    let i2 = ((m_cut + 2.0 - m_cut) / h_out).ceil() as usize;
    let r2 = m_cut + i2 as f64 * h_out;
    let eta = dg2[i2] - 1.0 / (g2[i2] * r2.powf(nf - 1.0));
    if eta >= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "cut-off radius M = {m_cut} too small: g₁'(M+2) = {eta:.3e} >= 0"
        )));
    }
    // Full node list: [0, M) uniform then [M, 2R] uniform.
    let mut nodes: Vec<f64> = (0..N_IN - 1)
        .map(|j| m_cut * j as f64 / (N_IN - 1) as f64)
        .collect();
    nodes.extend((0..N_OUT).map(|i| m_cut + i as f64 * h_out));
    let mtot = nodes.len();
    let mut g2f = vec![1.0; mtot];
    g2f[(N_IN - 1)..].copy_from_slice(&g2);
    // inner(ρ) = ∫₀^ρ g₂ s^{n-1}/(1+s^a) ds  (trapezoid).
    let mut inner = vec![0.0; mtot];
    let f_in =
        |i: usize| g2f[i] * nodes[i].powf(nf - 1.0) / (1.0 + nodes[i].powf(a));
    for i in 1..mtot {
        inner[i] = inner[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (f_in(i) + f_in(i - 1));
    }
    // F(r) = ∫₀^r inner/(g₂² ρ^{n-1}) dρ, g = g₂·(F(2R) − F(r)).
    let outer_integrand =
        |i: usize| inner[i] / (g2f[i] * g2f[i] * nodes[i].max(1e-12).powf(nf - 1.0));
    let mut f_cum = vec![0.0; mtot];
    for i in 1..mtot {
        f_cum[i] = f_cum[i - 1]
            + 0.5 * (nodes[i] - nodes[i - 1]) * (outer_integrand(i) + outer_integrand(i - 1));
    }
    let f_end = f_cum[mtot - 1];
    let g: Vec<f64> = (0..mtot).map(|i| g2f[i] * (f_end - f_cum[i])).collect();
    let sup = g.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if g.iter().any(|&x| x < -1e-12 * sup) {
        return Err(Error::Numerical("supersolution lost positivity".into()));
    }
    if g[mtot - 1].abs() > 1e-10 * sup.max(1.0) {
        return Err(Error::Numerical(
            "boundary value g(2R) failed to vanish".into(),
        ));
    }
    // Residual spot checks of 𝓛_M g + (1+r^a)^{-1} = 0 at three radii.
    let probes = [0.25 * m_cut, m_cut + 1.5, (0.75 * two_r).min(15.0)];
    for target in probes {
        let mut i = nodes.partition_point(|&x| x < target);
        i = i.clamp(1, mtot - 2);
        let (hm, hp) = (nodes[i] - nodes[i - 1], nodes[i + 1] - nodes[i]);
        let (d1, d2) = stencil3(hm, hp, g[i - 1], g[i], g[i + 1]);
        let res = d2 + (nf - 1.0) / nodes[i] * d1
            + cutoff_potential(dim, m_cut, nodes[i]) * g[i]
            + 1.0 / (1.0 + nodes[i].powf(a));
        if res.abs() > 0.02 {
            return Err(Error::Numerical(format!(
                "supersolution residual {res:.3e} at r = {:.3} exceeds tolerance",
                nodes[i]
            )));
        }
    }
    RadialField::new(RadialGrid::from_nodes(dim.n, nodes)?, g)
}

// ---------------------------------------------------------------------------
// Mode operators
// ---------------------------------------------------------------------------

/// Degree-1 spherical-harmonic reduction of the linearized operator:
/// `𝓛₁[φ] = φ″ + (n-1)φ′/r − (n-1)φ/r² + pU^{p-1}φ`, whose radial kernel
/// is spanned by `U′(r)`.  End nodes of the output are set to zero.
pub fn mode_operator_l1(dim: &Dim, phi: &RadialField) -> Result<RadialField> {
    check_grid_dim(dim, &phi.grid)?;
    let r = phi.grid.nodes();
    let v = &phi.values;
    let m = r.len();
    if m < 3 {
        return Err(Error::InvalidConfig("mode operator needs >= 3 nodes".into()));
    }
    if r[0] == 0.0 && v[0].abs() > 1e-12 * phi.sup_abs() {
        return Err(Error::InvalidConfig(
            "degree-1 mode fields must vanish at r = 0".into(),
        ));
    }
    let nf = dim.n as f64;
    let mut out = vec![0.0; m];
    for i in 1..m - 1 {
        let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        let (d1, d2) = stencil3(hm, hp, v[i - 1], v[i], v[i + 1]);
        out[i] = d2 + (nf - 1.0) / r[i] * d1 - (nf - 1.0) / (r[i] * r[i]) * v[i]
            + dim.potential(r[i]) * v[i];
    }
    RadialField::new(phi.grid.clone(), out)
}

/// Eigenvalue of the spherical Laplacian on mode `ℓ`: `ℓ(n-2+ℓ)`, so
/// `λ_0 = 0` and `λ_1 = … = λ_n = n-1`.
pub fn spherical_mode_eigenvalue(n: u32, ell: u32) -> f64 {
    let (nf, l) = (n as f64, ell as f64);
    l * (nf - 2.0 + l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::Dim;

    fn dim(n: u32) -> Dim {
        Dim::new(n).unwrap()
    }

    /// Geometric grid reaching past r = 3000 with ratio 1+2e-4, fine
    /// enough for 1e-6-class finite-difference residuals of the kernel
    /// fields.
    fn corrector_grid(n: u32) -> RadialGrid {
        RadialGrid::geometric(n, 1e-3, 1.0 + 2e-4, 74_600).unwrap()
    }

    // ------------------------------------------------------------------
    // negative eigenpair
    // ------------------------------------------------------------------

    #[test]
    fn shooting_matches_frozen_values() {
        for (n, nu_ref) in [
            (5u32, 5.730285414517),
            (6, 6.761963352072),
            (7, 7.786934367385),
        ] {
            let (nu, _) = shooting_nu(&dim(n)).unwrap();
            assert!(
                ((nu - nu_ref) / nu_ref).abs() < 1e-9,
                "n={n}: shooting {nu} vs frozen {nu_ref}"
            );
        }
    }

    #[test]
    fn eigenpair_matches_frozen_and_shooting() {
        // Frozen values come from a lumped-mass (B = r^{n-1}h) reference
        // discretization; the hat-moment mass used here shifts the
        // discrete eigenvalue by O(1e-4), hence the 5e-4 window.  The
        // authoritative accuracy gate is the shooting cross-validation.
        for (n, fd_ref) in [(5u32, -5.730282642), (6, -6.76195637), (7, -7.786920239)] {
            let d = dim(n);
            let grid = RadialGrid::uniform(n, 100.0, 100_001).unwrap();
            let pair = negative_eigenpair(&d, &grid).unwrap();
            assert!(pair.lambda0 < 0.0);
            assert!(
                (pair.lambda0 - fd_ref).abs() < 5e-4,
                "n={n}: lambda0 {} vs frozen {fd_ref}",
                pair.lambda0
            );
            let rel = (pair.lambda0 - pair.shooting_lambda0).abs() / pair.shooting_lambda0.abs();
            assert!(rel < 1e-4, "n={n}: FD/shooting reldiff {rel}");
            // Simplicity: next eigenvalue is far away and nonnegative up
            // to truncation error.
            assert!(pair.lambda1 - pair.lambda0 > 0.5 * pair.lambda0.abs());
            assert!(pair.lambda1 > -0.01 * pair.lambda0.abs());
        }
    }

    #[test]
    fn ground_state_positive_normalized_with_exponential_tail() {
        let d = dim(5);
        let grid = RadialGrid::uniform(5, 100.0, 100_001).unwrap();
        let pair = negative_eigenpair(&d, &grid).unwrap();
        let z = &pair.z0;
        // Positivity everywhere except the Dirichlet end node.
        let m = z.len();
        assert!(z.values[..m - 1].iter().all(|&x| x > 0.0));
        // Normalization ω_n ∫ Z₀² = 1.
        let norm: f64 = z
            .grid
            .weights()
            .iter()
            .zip(&z.values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            * d.omega_n;
        assert!((norm - 1.0).abs() < 1e-12, "normalization {norm}");
        // Tail slope of the shooting profile.
        let kappa = pair.shooting_lambda0.abs().sqrt();
        assert!(
            (pair.tail_slope + kappa).abs() < 0.02 * kappa,
            "shooting tail slope {} vs -{kappa}",
            pair.tail_slope
        );
        // Tail slope of the discrete eigenvector itself on [4, 11]:
        // fit ln(Z₀ r^{(n-1)/2}).
        let r = z.grid.nodes();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..m {
            if (4.0..=11.0).contains(&r[i]) && z.values[i] > 0.0 {
                xs.push(r[i]);
                ys.push((z.values[i] * r[i].powf(2.0)).ln());
            }
        }
        let slope = ls_slope(&xs, &ys);
        assert!(
            (slope + kappa).abs() < 0.02 * kappa,
            "FD tail slope {slope} vs -{kappa}"
        );
    }

    #[test]
    fn eigenvalue_insensitive_to_truncation_doubling() {
        let d = dim(5);
        let g100 = RadialGrid::uniform(5, 100.0, 100_001).unwrap();
        let g200 = RadialGrid::uniform(5, 200.0, 200_001).unwrap();
        let l100 = negative_eigenpair(&d, &g100).unwrap().lambda0;
        let l200 = negative_eigenpair(&d, &g200).unwrap().lambda0;
        assert!(
            (l100 - l200).abs() < 1e-6,
            "truncation shift {}",
            (l100 - l200).abs()
        );
    }

    #[test]
    fn eigenpair_rejects_bad_grids() {
        let d = dim(5);
        let short = RadialGrid::uniform(5, 40.0, 4_001).unwrap();
        assert!(negative_eigenpair(&d, &short).is_err());
        let wrong_dim = RadialGrid::uniform(6, 100.0, 10_001).unwrap();
        assert!(negative_eigenpair(&d, &wrong_dim).is_err());
    }

    // ------------------------------------------------------------------
    // second solution
    // ------------------------------------------------------------------

    #[test]
    fn fundamental_system_frozen_values_and_invariants() {
        // Frozen far-field values of Z̃ at r = 3000 under the Wronskian
        // normalization r^{n-1}(Z̃'Z - Z̃Z') = 1; the limit equals
        // -1/((n-2)β), β = α(n-2)/2.
        for (n, zt_ref) in [
            (5u32, -0.02915545923),
            (6, -0.005208340278),
            (7, -0.0009397350778),
        ] {
            let d = dim(n);
            let grid = corrector_grid(n);
            let sys = second_solution(&d, &grid).unwrap();
            let got = sys.ztilde.interp(3000.0);
            assert!(
                ((got - zt_ref) / zt_ref).abs() < 5e-7,
                "n={n}: Ztilde(3000) {got} vs frozen {zt_ref}"
            );
            // Wronskian identity at 50 sample radii.
            let r = grid.nodes();
            let m = grid.len();
            let nf = n as f64;
            for s in 0..50 {
                let i = s * (m - 1) / 49;
                let z = d.dilation_kernel(r[i]);
                let dz = d.dilation_kernel_deriv(r[i]);
                let w = r[i].powf(nf - 1.0)
                    * (sys.ztilde_prime.values[i] * z - sys.ztilde.values[i] * dz);
                assert!(
                    (w - 1.0).abs() < 1e-8,
                    "n={n}: Wronskian at r={} is {w}",
                    r[i]
                );
            }
            // Flat nonzero limit: over the last decade the value varies
            // by less than 1% and stays away from zero.
            let lo = sys.ztilde.interp(r[m - 1] / 10.0);
            let hi = sys.ztilde.values[m - 1];
            assert!(hi.abs() > 1e-4);
            assert!(((lo - hi) / hi).abs() < 0.01, "n={n}: {lo} vs {hi}");
            // r^{n-2} Z̃ bounded near the origin with the predicted
            // coefficient -1/((n-2)β).
            let beta = d.alpha_n * (nf - 2.0) / 2.0;
            let coeff = sys.ztilde.values[0] * r[0].powf(nf - 2.0);
            let pred = -1.0 / ((nf - 2.0) * beta);
            assert!(
                ((coeff - pred) / pred).abs() < 1e-3,
                "n={n}: near-origin coefficient {coeff} vs {pred}"
            );
        }
    }

    #[test]
    fn second_solution_satisfies_its_ode() {
        // Finite-difference residual of L₀Z̃ = 0, relative to the size of
        // the individual terms, away from the r^{2-n} singularity.
        let d = dim(5);
        let grid = corrector_grid(5);
        let sys = second_solution(&d, &grid).unwrap();
        let r = grid.nodes();
        let v = &sys.ztilde.values;
        let mut worst = 0.0f64;
        for i in 1..grid.len() - 1 {
            if r[i] < 0.5 || r[i] > 8.0 {
                continue;
            }
            let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let (d1, d2) = stencil3(hm, hp, v[i - 1], v[i], v[i + 1]);
            let t1 = 4.0 / r[i] * d1;
            let t2 = d.potential(r[i]) * v[i];
            let res = d2 + t1 + t2;
            let scale = d2.abs() + t1.abs() + t2.abs() + 1e-300;
            worst = worst.max(res.abs() / scale);
        }
        assert!(worst < 1e-6, "relative ODE residual {worst}");
    }

    #[test]
    fn second_solution_rejects_bad_grids() {
        let d = dim(5);
        // Grid containing r = 0: the singular branch cannot be sampled.
        let with_origin = RadialGrid::uniform(5, 3000.0, 4001).unwrap();
        assert!(second_solution(&d, &with_origin).is_err());
        // Grid entirely past the sign change.
        let outer_only = RadialGrid::geometric(5, 2.0, 1.01, 500).unwrap();
        assert!(second_solution(&d, &outer_only).is_err());
        // Grid stopping before the sign change matters.
        let inner_only = RadialGrid::geometric(5, 1e-3, 1.01, 100).unwrap();
        assert!(second_solution(&d, &inner_only).is_err());
    }

    // ------------------------------------------------------------------
    // corrector
    // ------------------------------------------------------------------

    #[test]
    fn corrector_frozen_values_and_decay() {
        // (p₀(1), tail exponent of |p₀| on [50, 500], allowed bound on
        // sup_{[100,1000]} |r²p₀| / |r²p₀(10)|).  The n = 5 corrector
        // decays like r^{-1}, not r^{-2}: the Z-component of q₀ decays
        // too slowly in that dimension, so the ratio is unbounded there
        // and the O(r^{-2}) window check applies to n >= 6.
        let cases = [
            (5u32, 1332.117, -0.9742, None),
            (6, 7143.8083, -2.0000, Some(2.0)),
            (7, 64462.204, -1.9692, Some(2.0)),
        ];
        for (n, p0_at_1, slope_ref, ratio_bound) in cases {
            let d = dim(n);
            let grid = corrector_grid(n);
            let sys = second_solution(&d, &grid).unwrap();
            let p0 = corrector_p0(&d, &sys).unwrap();
            let got = p0.interp(1.0);
            assert!(
                ((got - p0_at_1) / p0_at_1).abs() < 2e-4,
                "n={n}: p0(1) = {got} vs frozen {p0_at_1}"
            );
            // Tail exponent fit.
            let r = grid.nodes();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..grid.len() {
                if (50.0..=500.0).contains(&r[i]) && p0.values[i] != 0.0 {
                    xs.push(r[i].ln());
                    ys.push(p0.values[i].abs().ln());
                }
            }
            let slope = ls_slope(&xs, &ys);
            assert!(
                (slope - slope_ref).abs() < 0.03,
                "n={n}: tail exponent {slope} vs frozen {slope_ref}"
            );
            // r²p₀ window ratio.
            let at10 = (p0.interp(10.0) * 100.0).abs();
            let mut sup = 0.0f64;
            for i in 0..grid.len() {
                if (100.0..=1000.0).contains(&r[i]) {
                    sup = sup.max((r[i] * r[i] * p0.values[i]).abs());
                }
            }
            match ratio_bound {
                Some(bound) => assert!(
                    sup / at10 < bound,
                    "n={n}: r²p₀ ratio {} exceeds {bound}",
                    sup / at10
                ),
                None => assert!(
                    sup / at10 > 50.0,
                    "n={n}: expected unbounded r²p₀ growth, ratio {}",
                    sup / at10
                ),
            }
        }
    }

    #[test]
    fn corrector_satisfies_its_ode() {
        for n in [5u32, 6] {
            let d = dim(n);
            let grid = corrector_grid(n);
            let sys = second_solution(&d, &grid).unwrap();
            let p0 = corrector_p0(&d, &sys).unwrap();
            let r = grid.nodes();
            let v = &p0.values;
            let nf = n as f64;
            let mut worst = 0.0f64;
            for i in 1..grid.len() - 1 {
                if r[i] < 0.3 || r[i] > 5.0 {
                    continue;
                }
                let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
                let (d1, d2) = stencil3(hm, hp, v[i - 1], v[i], v[i + 1]);
                let t1 = (nf - 1.0) / r[i] * d1;
                let t2 = d.potential(r[i]) * v[i];
                let rhs = q0_source(&d, r[i]);
                let res = d2 + t1 + t2 - rhs;
                let scale = d2.abs() + t1.abs() + t2.abs() + rhs.abs();
                worst = worst.max(res.abs() / scale);
            }
            assert!(worst < 1e-6, "n={n}: relative residual {worst}");
        }
    }

    #[test]
    fn corrector_derivative_matches_difference_quotients() {
        for n in [5u32, 7] {
            let d = dim(n);
            let grid = corrector_grid(n);
            let sys = second_solution(&d, &grid).unwrap();
            let (p0, dp0) = corrector_p0_pair(&d, &sys).unwrap();
            let r = grid.nodes();
            let (v, dv) = (&p0.values, &dp0.values);
            let mut worst = 0.0f64;
            for i in 1..grid.len() - 1 {
                if r[i] < 0.3 || r[i] > 50.0 {
                    continue;
                }
                let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
                let (d1, _) = stencil3(hm, hp, v[i - 1], v[i], v[i + 1]);
                // Normalize by the field scale: near interior extrema of
                // p₀ the quotient's own truncation (∝ h²p₀‴) dominates any
                // pointwise-relative comparison against p₀′ ≈ 0.
                worst = worst.max((d1 - dv[i]).abs() / (1.0 + v[i].abs() + dv[i].abs()));
            }
            assert!(worst < 1e-6, "n={n}: derivative mismatch {worst}");
        }
    }

    #[test]
    fn corrector_orthogonality_gate() {
        let d = dim(5);
        let grid = corrector_grid(5);
        let sys = second_solution(&d, &grid).unwrap();
        // Direct check of ∫ q₀ Z r^{n-1} dr = 0 over the whole half-line
        // (the grid-truncated integral keeps an O(1/r_max) tail, so the
        // cancellation must be verified on [0, ∞)).
        let num = quad::integrate_to_infinity(
            |r| q0_source(&d, r) * d.dilation_kernel(r) * r.powi(4),
            0.0,
            1e-12,
        );
        let den = quad::integrate_to_infinity(
            |r| (q0_source(&d, r) * d.dilation_kernel(r) * r.powi(4)).abs(),
            0.0,
            1e-6,
        );
        assert!(
            (num / den).abs() < 1e-8,
            "orthogonality defect {}",
            num / den
        );
        // A corrupted constant must be refused.
        let mut bad = d.clone();
        bad.c1 *= 1.01;
        assert!(corrector_p0(&bad, &sys).is_err());
    }

    // ------------------------------------------------------------------
    // coercivity
    // ------------------------------------------------------------------

    #[test]
    fn coercivity_frozen_values_and_scaling() {
        let d = dim(5);
        let frozen = [
            (10.0, 1.3890011e-3),
            (20.0, 1.5530502e-4),
            (40.0, 1.8863764e-5),
        ];
        let mut products = Vec::new();
        for (big_r, lam_ref) in frozen {
            let lam = coercivity_constant(&d, big_r).unwrap();
            assert!(lam >= 0.0, "R={big_r}: negative coercivity {lam}");
            assert!(
                ((lam - lam_ref) / lam_ref).abs() < 1e-5,
                "R={big_r}: lambda_R {lam} vs frozen {lam_ref}"
            );
            products.push(lam * big_r.powi(3));
        }
        let maxp = products.iter().cloned().fold(f64::MIN, f64::max);
        let minp = products.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            maxp / minp < 2.0,
            "lambda_R R^(n-2) spread {maxp}/{minp} exceeds factor 2"
        );
    }

    #[test]
    fn unconstrained_minimum_recovers_lambda0() {
        let d = dim(5);
        let lam = coercivity_unconstrained(&d, 10.0).unwrap();
        assert!(
            (-5.76..-5.70).contains(&lam),
            "unconstrained minimum {lam} should sit near lambda0"
        );
    }

    #[test]
    fn coercivity_rejects_small_radius() {
        assert!(coercivity_constant(&dim(5), 5.0).is_err());
    }

    // ------------------------------------------------------------------
    // supersolution
    // ------------------------------------------------------------------

    #[test]
    fn supersolution_frozen_sups_and_growth_law() {
        let d = dim(5);
        let g20 = supersolution_g(&d, 1.5, 8.0, 20.0).unwrap();
        let g40 = supersolution_g(&d, 1.5, 8.0, 40.0).unwrap();
        let s20 = g20.sup_abs();
        let s40 = g40.sup_abs();
        assert!(((s20 - 2.93477) / 2.93477).abs() < 1e-3, "sup at R=20: {s20}");
        assert!(((s40 - 4.55117) / 4.55117).abs() < 1e-3, "sup at R=40: {s40}");
        let ratio = s40 / s20;
        assert!((ratio - 1.5508).abs() < 0.02, "ratio {ratio}");
        // Growth law sup g ≍ R^{2-a}: ratio within 30% of 2^{1/2}.
        let predicted = 2.0f64.powf(2.0 - 1.5);
        assert!(
            (ratio / predicted - 1.0).abs() < 0.30,
            "ratio {ratio} vs R^(2-a) prediction {predicted}"
        );
        // Boundary and positivity.
        let last = *g20.values.last().unwrap();
        assert!(last.abs() <= 1e-10 * s20);
        assert!(g20.values.iter().all(|&x| x >= -1e-12 * s20));
    }

    #[test]
    fn supersolution_bounded_for_strong_decay() {
        // a > 2: g·(1+r)^{a-2} stays bounded uniformly in R.
        let d = dim(5);
        let a = 2.5;
        let weigh = |g: &RadialField| -> f64 {
            g.grid
                .nodes()
                .iter()
                .zip(&g.values)
                .map(|(&r, &v)| v * (1.0 + r).powf(a - 2.0))
                .fold(0.0f64, f64::max)
        };
        let g20 = supersolution_g(&d, a, 8.0, 20.0).unwrap();
        let g40 = supersolution_g(&d, a, 8.0, 40.0).unwrap();
        let (w20, w40) = (weigh(&g20), weigh(&g40));
        assert!(
            w40 / w20 < 1.3,
            "weighted sup grew with R: {w20} -> {w40}"
        );
        let ratio = g40.sup_abs() / g20.sup_abs();
        assert!((0.8..1.3).contains(&ratio), "sup ratio {ratio}");
    }

    #[test]
    fn supersolution_rejects_bad_parameters() {
        let d = dim(5);
        for a in [0.0, -1.0, 3.0, 3.5] {
            assert!(supersolution_g(&d, a, 8.0, 20.0).is_err(), "a = {a}");
        }
        // Domain too small relative to the cut-off.
        assert!(supersolution_g(&d, 1.5, 8.0, 6.0).is_err());
    }

    // ------------------------------------------------------------------
    // mode operators and quadratic forms
    // ------------------------------------------------------------------

    #[test]
    fn translation_gradient_spans_mode_one_kernel() {
        // 𝓛₁U' = 0.  Two finite-difference regimes bound the check: the
        // centrifugal (n-1)/r² term amplifies stencil truncation near
        // the origin and nodal roundoff in the far tail (both like
        // 1/r·h² resp. (r/h)²ε), so the relative residual is measured on
        // an h chosen to balance the two, and the absolute residual away
        // from the origin on a finer grid.
        let d = dim(5);
        let nf = 5.0f64;
        // Relative residual, h = 3e-4.
        let grid = RadialGrid::uniform(5, 20.0, 66_668).unwrap();
        let phi = grid.sample(|r| d.gradient(r));
        let out = mode_operator_l1(&d, &phi).unwrap();
        let r = grid.nodes();
        let mut worst_rel = 0.0f64;
        for i in 1..out.len() - 1 {
            let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let (d1, d2) =
                stencil3(hm, hp, phi.values[i - 1], phi.values[i], phi.values[i + 1]);
            let scale = d2.abs()
                + ((nf - 1.0) / r[i] * d1).abs()
                + ((nf - 1.0) / (r[i] * r[i]) * phi.values[i]).abs()
                + (d.potential(r[i]) * phi.values[i]).abs();
            worst_rel = worst_rel.max(out.values[i].abs() / scale);
        }
        assert!(
            worst_rel < 1e-6,
            "mode-1 kernel relative residual {worst_rel}"
        );
        // Absolute residual on r >= 1, h = 1e-4.
        let fine = RadialGrid::uniform(5, 20.0, 200_001).unwrap();
        let phif = fine.sample(|r| d.gradient(r));
        let outf = mode_operator_l1(&d, &phif).unwrap();
        let rf = fine.nodes();
        let mut worst_abs = 0.0f64;
        for i in 1..outf.len() - 1 {
            if rf[i] >= 1.0 {
                worst_abs = worst_abs.max(outf.values[i].abs());
            }
        }
        assert!(
            worst_abs < 1e-6,
            "mode-1 kernel absolute residual {worst_abs} on r >= 1"
        );
    }

    #[test]
    fn spherical_eigenvalues_match_closed_form() {
        for n in [5u32, 6, 7] {
            assert_eq!(spherical_mode_eigenvalue(n, 0), 0.0);
            assert_eq!(spherical_mode_eigenvalue(n, 1), (n - 1) as f64);
        }
        assert_eq!(spherical_mode_eigenvalue(5, 2), 10.0);
        assert_eq!(spherical_mode_eigenvalue(7, 2), 14.0);
    }

    #[test]
    fn mode_operator_rejects_nonvanishing_origin() {
        let d = dim(5);
        let grid = RadialGrid::uniform(5, 10.0, 101).unwrap();
        let phi = grid.sample(|_| 1.0);
        assert!(mode_operator_l1(&d, &phi).is_err());
    }

    #[test]
    fn quadratic_form_matches_integration_by_parts() {
        // Q(φ,φ) computed by the bilinear form equals -∫ φ L₀φ for
        // compactly supported φ: the two expressions are assembled from
        // the same faces, so this pins the plumbing to roundoff.
        let d = dim(5);
        let grid = RadialGrid::uniform(5, 20.0, 8_001).unwrap();
        let r = grid.nodes().to_vec();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for case in 0..10 {
            let r0 = 2.0 + 10.0 * rng.gen::<f64>();
            let width = 1.0 + 3.0 * rng.gen::<f64>();
            let c1 = 2.0 * rng.gen::<f64>() - 1.0;
            let c2 = 2.0 * rng.gen::<f64>() - 1.0;
            let vals: Vec<f64> = r
                .iter()
                .map(|&x| {
                    let t = (x - r0) / width;
                    if t.abs() >= 1.0 {
                        0.0
                    } else {
                        let bump = (std::f64::consts::FRAC_PI_2 * t).cos().powi(2);
                        bump * (c1 + c2 * t)
                    }
                })
                .collect();
            let phi = RadialField::new(grid.clone(), vals).unwrap();
            let q = q_form(&d, &phi).unwrap();
            let l0phi = apply_l0(&d, &phi).unwrap();
            let ibp: f64 = -grid
                .weights()
                .iter()
                .zip(&phi.values)
                .zip(&l0phi.values)
                .map(|((w, p), l)| w * p * l)
                .sum::<f64>();
            let scale = q.abs().max(1.0);
            assert!(
                (q - ibp).abs() < 1e-8 * scale,
                "case {case}: Q = {q}, -∫φL₀φ = {ibp}"
            );
        }
    }

    #[test]
    fn mode_one_form_is_positive_under_kernel_substitution() {
        // Q₁(φ,φ) = ∫ |ψ′|² (U′)² r^{n-1} dr under φ = U′ψ: evaluate both
        // sides by quadrature for random smooth φ vanishing at both ends
        // and check agreement and nonnegativity.
        let d = dim(5);
        let nf = 5.0f64;
        let alpha = d.alpha_n;
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for case in 0..5 {
            let c: Vec<f64> = (0..4).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
            // φ = Σ c_k r^{2k+1} e^{-r²}: vanishes at 0 and decays fast.
            let phi = |r: f64| -> f64 {
                let e = (-r * r).exp();
                (0..4).map(|k| c[k] * r.powi(2 * k as i32 + 1)).sum::<f64>() * e
            };
            let dphi = |r: f64| -> f64 {
                let e = (-r * r).exp();
                let s: f64 = (0..4)
                    .map(|k| {
                        let kk = 2 * k as i32 + 1;
                        c[k] * (kk as f64 * r.powi(kk - 1) - 2.0 * r.powi(kk + 1))
                    })
                    .sum();
                s * e
            };
            let du = |r: f64| d.gradient(r);
            let d2u = |r: f64| {
                -alpha
                    * (nf - 2.0)
                    * (1.0 + (1.0 - nf) * r * r)
                    * (1.0 + r * r).powf(-(nf + 2.0) / 2.0)
            };
            // Direct mode-1 quadratic form.
            let q_direct = quad::integrate_to_infinity(
                |r| {
                    if r == 0.0 {
                        return 0.0;
                    }
                    let w = r.powf(nf - 1.0);
                    (dphi(r).powi(2) + (nf - 1.0) / (r * r) * phi(r).powi(2)
                        - d.potential(r) * phi(r).powi(2))
                        * w
                },
                0.0,
                1e-12,
            );
            // Substituted form: ψ = φ/U′, Q₁ = ∫ ψ′² U′² r^{n-1}.
            let q_sub = quad::integrate_to_infinity(
                |r| {
                    if r == 0.0 {
                        return 0.0;
                    }
                    let psi_prime = (dphi(r) * du(r) - phi(r) * d2u(r)) / (du(r) * du(r));
                    psi_prime * psi_prime * du(r) * du(r) * r.powf(nf - 1.0)
                },
                0.0,
                1e-12,
            );
            let scale = q_sub.abs().max(q_direct.abs()).max(1e-12);
            assert!(
                ((q_direct - q_sub) / scale).abs() < 1e-8,
                "case {case}: direct {q_direct} vs substituted {q_sub}"
            );
            assert!(q_sub >= -1e-12 * scale, "case {case}: negative form {q_sub}");
        }
    }
}
