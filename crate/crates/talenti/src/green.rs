//! Green's function of the ball by the method of images, the Robin
//! function, and the bubble-interaction matrix 𝒢(q).
//!
//! Conventions: the fundamental solution is normalized as
//! `Γ(z) = α_n |z|^{2-n}` (the same `α_n` selected by the bubble residual
//! check), so the Robin function of the unit ball at the center equals
//! `α_n` exactly.  For the ball `B_R`,
//!
//! ```text
//! G(x,y) = Γ(x−y) − Γ((|y|/R)(x − R²y/|y|²)),
//! H(x,x) = α_n ((R² − |x|²)/R)^{2-n}.
//! ```
//!
//! A half-space reflection formula is included as a cross-check utility.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bubble;
use crate::{Error, Result};

/// Ball domain `B_R ⊂ R^n`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BallDomain {
    pub n: u32,
    pub r: f64,
}

impl BallDomain {
    pub fn new(n: u32, r: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be >= 5, got {n}"
            )));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidConfig(format!("radius must be > 0, got {r}")));
        }
        Ok(Self { n, r })
    }

    fn check_interior(&self, x: &[f64], strict: bool) -> Result<()> {
        if x.len() != self.n as usize {
            return Err(Error::InvalidConfig(format!(
                "point has {} coordinates, domain dimension is {}",
                x.len(),
                self.n
            )));
        }
        let nx = norm(x);
        if nx > self.r || (strict && nx >= self.r) {
            return Err(Error::InvalidConfig(format!(
                "point with |x| = {nx} is not interior to the ball of radius {}",
                self.r
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Squared image distance `|x|²|y|²/R² − 2x·y + R²` — the symmetric form of
/// `((|y|/R)|x − R²y/|y|²|)²`, regular as `y → 0`.
fn image_sq(dom: &BallDomain, x: &[f64], y: &[f64]) -> f64 {
    let r2 = dom.r * dom.r;
    dot(x, x) * dot(y, y) / r2 - 2.0 * dot(x, y) + r2
}

/// `Γ(z) = α_n |z|^{2-n}` evaluated at distance `d`.
fn gamma_dist(n: u32, d: f64) -> f64 {
    bubble::alpha_n::<f64>(n) * d.powi(2 - n as i32)
}

/// Dirichlet Green's function of `B_R` by the method of images.
pub fn green_ball(dom: &BallDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    dom.check_interior(x, false)?;
    dom.check_interior(y, false)?;
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::InvalidConfig(
            "Green's function is singular at x = y".into(),
        ));
    }
    let img = image_sq(dom, x, y).sqrt();
    Ok(gamma_dist(dom.n, d) - gamma_dist(dom.n, img))
}

/// Regular part `H(x,y) = Γ(image distance)`; harmonic in each variable.
pub fn regular_part(dom: &BallDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    dom.check_interior(x, false)?;
    dom.check_interior(y, false)?;
    Ok(gamma_dist(dom.n, image_sq(dom, x, y).sqrt()))
}

/// Robin function `H(x,x) = α_n ((R²−|x|²)/R)^{2-n}`; diverges like
/// `dist(x, ∂B_R)^{2-n}` at the boundary.
pub fn robin(dom: &BallDomain, x: &[f64]) -> Result<f64> {
    dom.check_interior(x, true)?;
    let w = (dom.r * dom.r - dot(x, x)) / dom.r;
    Ok(bubble::alpha_n::<f64>(dom.n) * w.powi(2 - dom.n as i32))
}

/// `∇_x H(x,y)` from the image formula (partial gradient in the first
/// argument).
pub fn grad_regular_part(dom: &BallDomain, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    dom.check_interior(x, false)?;
    dom.check_interior(y, false)?;
    let n = dom.n as i32;
    let m = image_sq(dom, x, y);
    let scale = bubble::alpha_n::<f64>(dom.n) * (2.0 - n as f64) * m.powf(-(n as f64) / 2.0);
    let yy = dot(y, y) / (dom.r * dom.r);
    Ok(x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| scale * (xi * yy - yi))
        .collect())
}

/// `∇_x G(x,y)`.
pub fn grad_green_ball(dom: &BallDomain, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::InvalidConfig(
            "Green's function is singular at x = y".into(),
        ));
    }
    let n = dom.n as i32;
    let alpha = bubble::alpha_n::<f64>(dom.n);
    let gh = grad_regular_part(dom, x, y)?;
    let scale = alpha * (2.0 - n as f64) * d.powi(-n);
    Ok(x
        .iter()
        .zip(y)
        .zip(gh)
        .map(|((&xi, &yi), h)| scale * (xi - yi) - h)
        .collect())
}

/// Green's function of the half-space `{x_n > 0}` by reflection
/// (cross-check utility; same `Γ` convention).
pub fn green_half_space(n: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != n as usize || y.len() != n as usize {
        return Err(Error::InvalidConfig("coordinate count mismatch".into()));
    }
    if !(x[n as usize - 1] > 0.0 && y[n as usize - 1] > 0.0) {
        return Err(Error::InvalidConfig(
            "points must lie in the open half-space x_n > 0".into(),
        ));
    }
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::InvalidConfig(
            "Green's function is singular at x = y".into(),
        ));
    }
    let mut yr = y.to_vec();
    yr[n as usize - 1] = -yr[n as usize - 1];
    Ok(gamma_dist(n, d) - gamma_dist(n, dist(x, &yr)))
}

/// Robin function of the half-space: `H(x,x) = α_n (2 x_n)^{2-n}`.
pub fn robin_half_space(n: u32, x: &[f64]) -> Result<f64> {
    if !(x[n as usize - 1] > 0.0) {
        return Err(Error::InvalidConfig(
            "point must lie in the open half-space x_n > 0".into(),
        ));
    }
    Ok(bubble::alpha_n::<f64>(n) * (2.0 * x[n as usize - 1]).powi(2 - n as i32))
}

/// The `k×k` interaction matrix with diagonal `H(q_j,q_j)` and off-diagonal
/// `−G(q_i,q_j)`, together with its spectral data and positivity verdict.
#[derive(Debug, Clone, Serialize)]
pub struct GreenMatrix {
    pub q: Vec<Vec<f64>>,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: DMatrix<f64>,
    /// Eigenvalues sorted ascending.
    pub eigen: Vec<f64>,
    pub is_positive_definite: bool,
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut rows = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        rows.serialize_element(&row)?;
    }
    rows.end()
}

/// Assemble 𝒢(q) for `k` pairwise-distinct interior points.
///
/// Positivity is decided by the smallest eigenvalue of the symmetric matrix
/// against the threshold `1e-12·‖𝒢‖` (spectral norm).
pub fn interaction_matrix(dom: &BallDomain, q: &[Vec<f64>]) -> Result<GreenMatrix> {
    let k = q.len();
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one point".into()));
    }
    for (i, qi) in q.iter().enumerate() {
        dom.check_interior(qi, true)?;
        for qj in &q[..i] {
            if dist(qi, qj) < 1e-12 {
                return Err(Error::InvalidConfig(
                    "degenerate configuration: coincident points".into(),
                ));
            }
        }
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = robin(dom, &q[i])?;
        for j in 0..i {
            let g = -green_ball(dom, &q[i], &q[j])?;
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
    }
    let mut eigen: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eigen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let norm = eigen.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let is_positive_definite = eigen[0] > 1e-12 * norm;
    Ok(GreenMatrix {
        q: q.to_vec(),
        matrix: m,
        eigen,
        is_positive_definite,
    })
}
