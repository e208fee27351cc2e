//! Complex geometrical optics solutions e^{ζ·x}(A + R): the ζ geometry,
//! amplitude vectors, the Faddeev-multiplier remainder solver, the X^b_ζ
//! norms and the scans built on them.

mod assemble;
mod norms;
mod scan;
mod solver;

pub use assemble::{assemble_v2, assemble_w1, V2Assembly, W1Assembly};
pub use norms::{
    carleman_ratio, discrete_symbol, faddeev_multiplier, xdotnorm, xnorm, xnorm_for_symbol, ynorm,
    CarlemanProbe,
};
pub use scan::{
    decay_scan, decay_scan_csv, direction_at, level_means, DecayRow, DecayScanConfig, LevelMean,
};
pub use solver::{faddeev_solve, solve_remainder, CgoSolution, SolverOptions};

use crate::fields::{FieldError, C64, I};
use crate::operators::p_symbol;

#[derive(Debug, thiserror::Error)]
pub enum CgoError {
    #[error("s = {0} violates s ≥ 1")]
    InvalidS(f64),
    #[error("ρ must be nonzero for this construction")]
    ZeroRho,
    #[error("η₁ seed is parallel to ρ")]
    ParallelSeed,
    #[error("frame vectors are not orthonormal and orthogonal to ρ")]
    BadFrame,
    #[error("ρ = {0:?} is not on the frequency lattice")]
    NotOnLattice([f64; 3]),
    #[error(
        "remainder iteration diverged at s = {s}, η₁ = {eta1:?} (update ratios {history:?}); increase s"
    )]
    Diverged { s: f64, eta1: [f64; 3], history: Vec<f64> },
    #[error("decoupled components of the remainder are nonzero: relative size {0:e}")]
    DecouplingViolation(f64),
    #[error("zero denominator: the probe field vanishes")]
    ZeroDenominator,
    #[error("compensation system is singular")]
    SingularCompensation,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which of the two complex frequencies a solution uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Zeta {
    One,
    Two,
}

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Hermitian length of a complex 3-vector.
pub fn cnorm(z: [C64; 3]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Bilinear product z·w (no conjugation).
pub fn cdot(z: [C64; 3], w: [C64; 3]) -> C64 {
    z[0] * w[0] + z[1] * w[1] + z[2] * w[2]
}

/// Geometry of a CGO pair: the frame {ρ̂, η₁, η₂}, the scale s and the
/// complex frequencies ζ₁, ζ₂ with ζ·ζ = −k² and ζ₁ + ζ₂ = iρ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CgoDirection {
    pub rho: V3,
    /// Unit vector completing the right-handed frame, η₁∧η₂ (equals ρ/|ρ| for ρ ≠ 0).
    pub rho_hat: V3,
    pub eta1: V3,
    pub eta2: V3,
    pub s: f64,
    pub k: f64,
    /// τ = (s² + |ρ|²/4)^{1/2} = |Re ζ|.
    pub tau: f64,
    pub zeta1: [C64; 3],
    pub zeta2: [C64; 3],
}

impl CgoDirection {
    /// Builds ζ₁, ζ₂ from a prescribed orthonormal pair (η₁, η₂) orthogonal to ρ.
    /// This also covers ρ = 0.
    pub fn with_frame(rho: V3, eta1: V3, eta2: V3, s: f64, k: f64) -> Result<Self, CgoError> {
        if !(s >= 1.0 && s.is_finite()) {
            return Err(CgoError::InvalidS(s));
        }
        let tol = 1e-12;
        let rn = norm(rho);
        let ok = (norm(eta1) - 1.0).abs() < tol
            && (norm(eta2) - 1.0).abs() < tol
            && dot(eta1, eta2).abs() < tol
            && dot(rho, eta1).abs() <= tol * rn.max(1.0)
            && dot(rho, eta2).abs() <= tol * rn.max(1.0);
        if !ok {
            return Err(CgoError::BadFrame);
        }
        let tau = (s * s + 0.25 * rn * rn).sqrt();
        let sig = (s * s + k * k).sqrt();
        let z = |sign: f64| -> [C64; 3] {
            std::array::from_fn(|a| C64::new(sign * tau * eta1[a], 0.5 * rho[a] + sign * sig * eta2[a]))
        };
        Ok(Self {
            rho,
            rho_hat: cross(eta1, eta2),
            eta1,
            eta2,
            s,
            k,
            tau,
            zeta1: z(-1.0),
            zeta2: z(1.0),
        })
    }

    pub fn zeta(&self, which: Zeta) -> [C64; 3] {
        match which {
            Zeta::One => self.zeta1,
            Zeta::Two => self.zeta2,
        }
    }

    /// |Re ζ|, the growth rate of e^{ζ·x}.
    pub fn re_zeta(&self, which: Zeta) -> V3 {
        let z = self.zeta(which);
        [z[0].re, z[1].re, z[2].re]
    }

    pub fn im_zeta(&self, which: Zeta) -> V3 {
        let z = self.zeta(which);
        [z[0].im, z[1].im, z[2].im]
    }
}

/// ζ₁ = −τη₁ + i(ρ/2 − (s²+k²)^{1/2}η₂) and ζ₂ = τη₁ + i(ρ/2 + (s²+k²)^{1/2}η₂),
/// with η₁ the normalized part of the seed orthogonal to ρ and η₂ = ρ∧η₁/|ρ|.
pub fn make_directions(rho: V3, eta1_seed: V3, s: f64, k: f64) -> Result<CgoDirection, CgoError> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(CgoError::InvalidS(s));
    }
    let rn = norm(rho);
    if rn == 0.0 {
        return Err(CgoError::ZeroRho);
    }
    let rho_hat = scale(rho, 1.0 / rn);
    let perp = {
        let p = dot(eta1_seed, rho_hat);
        [eta1_seed[0] - p * rho_hat[0], eta1_seed[1] - p * rho_hat[1], eta1_seed[2] - p * rho_hat[2]]
    };
    let pn = norm(perp);
    if pn <= 1e-12 * norm(eta1_seed).max(f64::MIN_POSITIVE) {
        return Err(CgoError::ParallelSeed);
    }
    let eta1 = scale(perp, 1.0 / pn);
    let eta2 = cross(rho_hat, eta1);
    CgoDirection::with_frame(rho, eta1, eta2, s, k)
}

/// An orthonormal pair spanning the plane orthogonal to ρ (any pair when ρ = 0).
pub fn orthogonal_frame(rho: V3) -> (V3, V3) {
    let rn = norm(rho);
    let r = if rn == 0.0 { [0.0, 0.0, 1.0] } else { scale(rho, 1.0 / rn) };
    // Pick the coordinate axis least aligned with ρ as the seed.
    let axis = (0..3).min_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs())).unwrap();
    let mut seed = [0.0; 3];
    seed[axis] = 1.0;
    let p = dot(seed, r);
    let e1 = {
        let v = [seed[0] - p * r[0], seed[1] - p * r[1], seed[2] - p * r[2]];
        scale(v, 1.0 / norm(v))
    };
    (e1, cross(r, e1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeVariant {
    /// a = η₁, b = 0.
    A,
    /// a = 0, b = η₂∧ρ̂.
    B,
}

impl std::str::FromStr for AmplitudeVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            other => Err(format!("unknown amplitude variant '{other}' (expected a or b)")),
        }
    }
}

impl std::fmt::Display for AmplitudeVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::A => "a",
            Self::B => "b",
        })
    }
}

/// Constant amplitudes of the two CGO solutions and their large-s limits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AmplitudeChoice {
    pub variant: AmplitudeVariant,
    pub a: V3,
    pub b: V3,
    pub a_zeta1: [C64; 8],
    pub a_zeta2: [C64; 8],
    pub b_zeta2: [C64; 8],
    pub a1_limit: [C64; 8],
    pub b2_limit: [C64; 8],
}

fn c3(v: V3) -> [C64; 3] {
    v.map(|x| C64::new(x, 0.0))
}

fn pack(s1: C64, v2: [C64; 3], v3: [C64; 3], s4: C64) -> [C64; 8] {
    [s1, v2[0], v2[1], v2[2], v3[0], v3[1], v3[2], s4]
}

pub fn amplitudes(dir: &CgoDirection, variant: AmplitudeVariant) -> AmplitudeChoice {
    let (a, b) = match variant {
        AmplitudeVariant::A => (dir.eta1, [0.0; 3]),
        AmplitudeVariant::B => ([0.0; 3], cross(dir.eta2, dir.rho_hat)),
    };
    let (ca, cb) = (c3(a), c3(b));
    let k = C64::new(dir.k, 0.0);
    let n1 = 2f64.sqrt() / cnorm(dir.zeta1);
    let n2 = 2f64.sqrt() / cnorm(dir.zeta2);
    let a_zeta1 = pack(
        cdot(dir.zeta1, ca) * n1,
        ca.map(|x| I * k * x * n1),
        cb.map(|x| I * k * x * n1),
        cdot(dir.zeta1, cb) * n1,
    );
    let zero = C64::new(0.0, 0.0);
    let a_zeta2 = pack(zero, ca.map(|x| -x * n2), cb.map(|x| -x * n2), zero);
    let mut b_zeta2 = p_symbol(dir.zeta2, &a_zeta2);
    for (j, v) in b_zeta2.iter_mut().enumerate() {
        *v -= k * a_zeta2[j];
    }
    let one = C64::new(1.0, 0.0);
    let (a1_limit, b2_limit) = match variant {
        AmplitudeVariant::A => (
            pack(-one, [zero; 3], [zero; 3], zero),
            pack(-I, [zero; 3], c3(cross(dir.eta1, dir.eta2)), zero),
        ),
        AmplitudeVariant::B => (
            pack(zero, [zero; 3], [zero; 3], -one),
            pack(zero, c3(scale(dir.rho_hat, -1.0)), [zero; 3], -I),
        ),
    };
    AmplitudeChoice { variant, a, b, a_zeta1, a_zeta2, b_zeta2, a1_limit, b2_limit }
}

impl AmplitudeChoice {
    /// The two scalar conditions iζ₁·A₂ + kA₁ and iζ₁·A₃ + kA₄ (both zero by construction).
    pub fn vanishing_conditions(&self, dir: &CgoDirection) -> (C64, C64) {
        let a = &self.a_zeta1;
        let k = dir.k;
        let z = dir.zeta1;
        (
            I * cdot(z, [a[1], a[2], a[3]]) + k * a[0],
            I * cdot(z, [a[4], a[5], a[6]]) + k * a[7],
        )
    }

    /// |A_ζ₁ − A₁| + |B_ζ₂ − B₂| in the Euclidean norm.
    pub fn limit_gap(&self) -> f64 {
        let d = |x: &[C64; 8], y: &[C64; 8]| {
            x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
        };
        d(&self.a_zeta1, &self.a1_limit) + d(&self.b_zeta2, &self.b2_limit)
    }
}
