//! Electromagnetic parameter phantoms (μ, ε, σ) and the symbols derived
//! from them: γ, α, β, κ, k, θ and the diagonal of D.

use crate::fields::{spectral_gradient, Grid3, ScalarField, VectorField, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MaterialError {
    #[error("bump #{index} on {target:?} drives the parameter to {value} below its floor {floor}")]
    PositivityFloor { index: usize, target: Target, value: f64, floor: f64 },
    #[error("bump #{index} reaches radius {reach} beyond r_omega = {r_omega}")]
    SupportExceeded { index: usize, reach: f64, r_omega: f64 },
    #[error("invalid bump #{index}: {reason}")]
    InvalidBump { index: usize, reason: &'static str },
    #[error("invalid nested radii: need 0 < r_omega < r_omega' < r_omega'' < 0.4 L")]
    InvalidRadii,
    #[error("invalid background: {0}")]
    InvalidBackground(&'static str),
    #[error("Re γ = {0} is not positive")]
    NonPositiveGamma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Mu,
    Eps,
    Sigma,
}

/// One smooth compactly supported bump added to a background parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub target: Target,
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
    /// Exponent q of the profile exp(−q t²/(1 − t²)).
    pub order: f64,
}

impl Bump {
    pub fn new(target: Target, center: [f64; 3], radius: f64, amplitude: f64) -> Self {
        Self { target, center, radius, amplitude, order: 1.0 }
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    /// Distance from the origin of the farthest supported point.
    pub fn reach(&self) -> f64 {
        norm3(self.center) + self.radius
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        self.amplitude * bump_profile(norm3(d) / self.radius, self.order)
    }
}

/// C^∞ profile with value 1 at t = 0 and support t < 1.
pub fn bump_profile(t: f64, order: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    let t2 = t * t;
    (-order * t2 / (1.0 - t2)).exp()
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Radii of the nested balls Ω ⊂ Ω′ ⊂ Ω″, in absolute length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub r_omega: f64,
    pub r_omega_prime: f64,
    pub r_omega_dblprime: f64,
}

impl Radii {
    pub fn default_for(grid: Grid3) -> Self {
        let l = grid.box_length();
        Self { r_omega: 0.20 * l, r_omega_prime: 0.28 * l, r_omega_dblprime: 0.36 * l }
    }

    pub fn validate(&self, grid: Grid3) -> Result<(), MaterialError> {
        let ok = self.r_omega > 0.0
            && self.r_omega < self.r_omega_prime
            && self.r_omega_prime < self.r_omega_dblprime
            && self.r_omega_dblprime < 0.4 * grid.box_length();
        if ok {
            Ok(())
        } else {
            Err(MaterialError::InvalidRadii)
        }
    }
}

/// Description of a phantom: background constants plus bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    /// Lower bounds for μ and ε, as fractions of the background values.
    pub floor_fraction: f64,
    pub radii: Option<Radii>,
    pub bumps: Vec<Bump>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self { omega: 1.0, eps0: 1.0, mu0: 1.0, floor_fraction: 0.1, radii: None, bumps: Vec::new() }
    }
}

impl PhantomSpec {
    pub fn background(omega: f64, eps0: f64, mu0: f64) -> Self {
        Self { omega, eps0, mu0, ..Self::default() }
    }

    pub fn with_bump(mut self, b: Bump) -> Self {
        self.bumps.push(b);
        self
    }
}

/// Parameter fields of one phantom on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSet {
    pub grid: Grid3,
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub mu: ScalarField,
    pub eps: ScalarField,
    pub sigma: ScalarField,
    pub radii: Radii,
    /// Largest distance from the origin reached by any bump (0 for background).
    pub support_radius: f64,
    pub spec: PhantomSpec,
}

pub fn build_phantom(spec: &PhantomSpec, grid: Grid3) -> Result<MaterialSet, MaterialError> {
    if !(spec.omega > 0.0 && spec.eps0 > 0.0 && spec.mu0 > 0.0) {
        return Err(MaterialError::InvalidBackground("ω, ε₀ and μ₀ must be positive"));
    }
    if !(spec.floor_fraction > 0.0 && spec.floor_fraction < 1.0) {
        return Err(MaterialError::InvalidBackground("floor fraction must lie in (0, 1)"));
    }
    let radii = spec.radii.unwrap_or_else(|| Radii::default_for(grid));
    radii.validate(grid)?;

    let mut support_radius: f64 = 0.0;
    for (index, b) in spec.bumps.iter().enumerate() {
        if !(b.radius > 0.0 && b.radius.is_finite()) {
            return Err(MaterialError::InvalidBump { index, reason: "radius must be positive" });
        }
        if !(b.order > 0.0 && b.order.is_finite()) {
            return Err(MaterialError::InvalidBump { index, reason: "order must be positive" });
        }
        if !b.amplitude.is_finite() || b.center.iter().any(|c| !c.is_finite()) {
            return Err(MaterialError::InvalidBump { index, reason: "non-finite entries" });
        }
        if b.reach() > radii.r_omega {
            return Err(MaterialError::SupportExceeded { index, reach: b.reach(), r_omega: radii.r_omega });
        }
        support_radius = support_radius.max(b.reach());
    }

    // Worst case: every negative bump of a target overlapping at its peak.
    for target in [Target::Mu, Target::Eps, Target::Sigma] {
        let (base, floor) = match target {
            Target::Mu => (spec.mu0, spec.floor_fraction * spec.mu0),
            Target::Eps => (spec.eps0, spec.floor_fraction * spec.eps0),
            Target::Sigma => (0.0, 0.0),
        };
        let mut value = base;
        for (index, b) in spec.bumps.iter().enumerate() {
            if b.target == target && b.amplitude < 0.0 {
                value += b.amplitude;
                if value < floor {
                    return Err(MaterialError::PositivityFloor { index, target, value, floor });
                }
            }
        }
    }

    let field = |target: Target, base: f64| {
        ScalarField::from_real_fn(grid, |x| {
            base + spec.bumps.iter().filter(|b| b.target == target).map(|b| b.value(x)).sum::<f64>()
        })
    };
    Ok(MaterialSet {
        grid,
        omega: spec.omega,
        eps0: spec.eps0,
        mu0: spec.mu0,
        mu: field(Target::Mu, spec.mu0),
        eps: field(Target::Eps, spec.eps0),
        sigma: field(Target::Sigma, 0.0),
        radii,
        support_radius,
        spec: spec.clone(),
    })
}

/// Every symbol of the operator algebra, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMaterialFields {
    pub grid: Grid3,
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub k: f64,
    pub radii: Radii,
    pub support_radius: f64,
    pub gamma: ScalarField,
    pub mu: ScalarField,
    /// γ^{1/2} (principal branch), the second and fourth diagonal blocks of D.
    pub sqrt_gamma: ScalarField,
    /// μ^{1/2}, the first and third diagonal blocks of D.
    pub sqrt_mu: ScalarField,
    pub alpha: VectorField,
    pub beta: VectorField,
    pub kappa: ScalarField,
    pub theta: ScalarField,
    pub div_alpha: ScalarField,
    pub div_beta: ScalarField,
    /// Symmetrized Jacobians, entries (xx, yy, zz, xy, xz, yz).
    pub sym_grad_alpha: [ScalarField; 6],
    pub sym_grad_beta: [ScalarField; 6],
    pub grad_kappa: VectorField,
    pub lipschitz_a: f64,
}

impl DerivedMaterialFields {
    /// Diagonal entries (μ^{1/2}, γ^{1/2}, μ^{1/2}, γ^{1/2}) of D.
    pub fn d_diag(&self) -> [&ScalarField; 4] {
        [&self.sqrt_mu, &self.sqrt_gamma, &self.sqrt_mu, &self.sqrt_gamma]
    }

    /// True when the phantom is the homogeneous background.
    pub fn is_background(&self) -> bool {
        self.support_radius == 0.0
    }
}

fn log_gradient(f: &ScalarField) -> VectorField {
    spectral_gradient(&f.map(|v| v.ln()))
}

fn sym_jacobian(v: &VectorField) -> [ScalarField; 6] {
    let j: Vec<VectorField> = v.c.iter().map(spectral_gradient).collect();
    // j[b].c[a] = ∂_a v_b
    let sym = |a: usize, b: usize| j[b].c[a].zip_map(&j[a].c[b], |p, q| 0.5 * (p + q));
    [sym(0, 0), sym(1, 1), sym(2, 2), sym(0, 1), sym(0, 2), sym(1, 2)]
}

fn divergence_from_sym(s: &[ScalarField; 6]) -> ScalarField {
    &(&s[0] + &s[1]) + &s[2]
}

pub fn derive(ms: &MaterialSet) -> Result<DerivedMaterialFields, MaterialError> {
    let grid = ms.grid;
    let omega = ms.omega;
    let gamma = ms.eps.zip_map(&ms.sigma, |e, s| e + C64::new(0.0, s.re / omega));
    if let Some(v) = gamma.data().iter().map(|g| g.re).find(|&re| re <= 0.0) {
        return Err(MaterialError::NonPositiveGamma(v));
    }
    let sqrt_gamma = gamma.map(|g| g.sqrt());
    let sqrt_mu = ms.mu.map(|m| m.sqrt());
    let alpha = log_gradient(&gamma);
    let beta = log_gradient(&ms.mu);
    let kappa = sqrt_gamma.zip_map(&sqrt_mu, |g, h| omega * g * h);
    let k = omega * (ms.eps0 * ms.mu0).sqrt();
    let background = ms.eps0 * ms.mu0;
    let theta = gamma.zip_map(&ms.mu, |g, m| omega * omega * (g * m - background));
    let sym_grad_alpha = sym_jacobian(&alpha);
    let sym_grad_beta = sym_jacobian(&beta);
    let div_alpha = divergence_from_sym(&sym_grad_alpha);
    let div_beta = divergence_from_sym(&sym_grad_beta);
    let grad_kappa = spectral_gradient(&kappa);
    let mut d = DerivedMaterialFields {
        grid,
        omega,
        eps0: ms.eps0,
        mu0: ms.mu0,
        k,
        radii: ms.radii,
        support_radius: ms.support_radius,
        gamma,
        mu: ms.mu.clone(),
        sqrt_gamma,
        sqrt_mu,
        alpha,
        beta,
        kappa,
        theta,
        div_alpha,
        div_beta,
        sym_grad_alpha,
        sym_grad_beta,
        grad_kappa,
        lipschitz_a: 0.0,
    };
    d.lipschitz_a = estimate_lipschitz_a(&d);
    Ok(d)
}

/// Margin above 1 kept by [`estimate_lipschitz_a`].
pub const LIPSCHITZ_MARGIN: f64 = 0.01;

/// A = max(1 + δ_A, ‖α‖∞, ‖β‖∞).
pub fn estimate_lipschitz_a(d: &DerivedMaterialFields) -> f64 {
    (1.0 + LIPSCHITZ_MARGIN).max(d.alpha.max_abs()).max(d.beta.max_abs())
}
