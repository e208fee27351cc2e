//! The limit scattering functional t(ρ) = ⟨(Q₂ − Q₁)A₁e^{iρ·x}, B₂⟩, the
//! parameter-difference equations it encodes, their Schrödinger-system form,
//! and the remainder decomposition of the full pairing.

use crate::cgo::{
    amplitudes, assemble_v2, direction_at, solve_remainder, AmplitudeVariant, CgoDirection, CgoError,
    SolverOptions, Zeta,
};
use crate::fields::{
    spectral_divergence, spectral_laplacian, Field8, FieldError, Grid3, ScalarField, Spectrum, VectorField, C64,
    I,
};
use crate::materials::{DerivedMaterialFields, PhantomSpec};
use crate::operators::{q_bilinear_modulated, q_strong_apply, PotentialKind, WeakPotential};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum ScatteringError {
    #[error("phantoms disagree on {0}")]
    Mismatch(&'static str),
    #[error("ρ = {0:?} is not on the frequency lattice")]
    NotOnLattice([f64; 3]),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Cgo(#[from] CgoError),
}

fn check_pair(d1: &DerivedMaterialFields, d2: &DerivedMaterialFields) -> Result<Grid3, ScatteringError> {
    d1.grid.check_same(&d2.grid)?;
    if d1.omega != d2.omega {
        return Err(ScatteringError::Mismatch("ω"));
    }
    if d1.eps0 != d2.eps0 || d1.mu0 != d2.mu0 {
        return Err(ScatteringError::Mismatch("background ε₀, μ₀"));
    }
    Ok(d1.grid)
}

/// Q₂ − Q₁ for the potential of 𝒫𝒫′.
pub fn potential_difference(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> Result<WeakPotential, ScatteringError> {
    check_pair(d1, d2)?;
    let q1 = WeakPotential::new(PotentialKind::Q, d1);
    let q2 = WeakPotential::new(PotentialKind::Q, d2);
    Ok(q2.difference(&q1)?)
}

/// The large-s limits (A₁, B₂) for a lattice ρ. For ρ = 0 the frame is the
/// one returned by [`crate::cgo::orthogonal_frame`].
pub fn limit_amplitudes(variant: AmplitudeVariant, rho: [f64; 3]) -> ([C64; 8], [C64; 8]) {
    let dir = direction_at(rho, 0.0, 1.0, 0.0).expect("orthonormal frame");
    let a = amplitudes(&dir, variant);
    (a.a1_limit, a.b2_limit)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScatteringSample {
    /// ρ in lattice units.
    pub rho: [i64; 3],
    pub variant: AmplitudeVariant,
    pub t: C64,
}

fn t_with(dq: &WeakPotential, variant: AmplitudeVariant, rho: [i64; 3]) -> Result<C64, ScatteringError> {
    let grid = dq.grid();
    let (a1, b2) = limit_amplitudes(variant, grid.lattice_vector(rho));
    Ok(q_bilinear_modulated(dq, &Field8::constant(grid, &a1), &Field8::constant(grid, &b2), rho)?)
}

/// t(ρ) = ⟨(Q₂ − Q₁)A₁e^{iρ·x}, B₂⟩ from the weak form of Q.
pub fn limit_functional(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
    variant: AmplitudeVariant,
    rho: [i64; 3],
) -> Result<ScatteringSample, ScatteringError> {
    let dq = potential_difference(d1, d2)?;
    Ok(ScatteringSample { rho, variant, t: t_with(&dq, variant, rho)? })
}

/// Lattice points m with |m| ≤ radius, in lexicographic order.
pub fn lattice_ball(radius: f64) -> Vec<[i64; 3]> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                if ((a * a + b * b + c * c) as f64) <= radius * radius {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// t(ρ) over all lattice ρ with |m| ≤ `radius`, in [`lattice_ball`] order.
/// A₁ is the same for every ρ, so F = (Q₂ − Q₁)A₁ in strong form is a fixed
/// field and t(ρ) = Σ_j B₂,j(ρ)·∫F_j e^{iρ·x}, read off from the spectra of F.
pub fn scatter_scan(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
    variant: AmplitudeVariant,
    radius: f64,
) -> Result<Vec<ScatteringSample>, ScatteringError> {
    let dq = potential_difference(d1, d2)?;
    let grid = dq.grid();
    let (a1, _) = limit_amplitudes(variant, [0.0; 3]);
    let f = q_strong_apply(&dq, &Field8::constant(grid, &a1));
    let spectra: Vec<Spectrum> = (0..8).map(|j| Spectrum::forward(f.component(j))).collect();
    let vol = grid.volume();
    lattice_ball(radius)
        .par_iter()
        .map(|&rho| {
            let (a, b2) = limit_amplitudes(variant, grid.lattice_vector(rho));
            let t = if a == a1 {
                let neg = [-rho[0], -rho[1], -rho[2]];
                (0..8).map(|j| b2[j] * spectra[j].at(neg)).sum::<C64>() * vol
            } else {
                t_with(&dq, variant, rho)?
            };
            Ok(ScatteringSample { rho, variant, t })
        })
        .collect()
}

pub fn max_abs_t(samples: &[ScatteringSample]) -> f64 {
    samples.iter().map(|s| s.t.norm()).fold(0.0, f64::max)
}

pub fn scatter_csv(samples: &[ScatteringSample]) -> String {
    let mut out = String::from("rho_x,rho_y,rho_z,variant,re_t,im_t\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{:.17e},{:.17e}\n",
            s.rho[0], s.rho[1], s.rho[2], s.variant, s.t.re, s.t.im
        ));
    }
    out
}

fn gradient_residual(
    x1: &VectorField,
    x2: &VectorField,
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> ScalarField {
    let diff = x2 - x1;
    let sum = x2 + x1;
    let theta = &d2.theta - &d1.theta;
    let div = spectral_divergence(&diff);
    diff.dot(&sum).zip_map(&theta, |p, t| p - 4.0 * t).zip_map(&div, |p, d| p + 2.0 * d)
}

/// (α₂ − α₁)·(α₂ + α₁) − 4(θ₂ − θ₁) + 2∇·(α₂ − α₁).
pub fn residual_alpha_field(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> Result<ScalarField, ScatteringError> {
    check_pair(d1, d2)?;
    Ok(gradient_residual(&d1.alpha, &d2.alpha, d1, d2))
}

/// (β₂ − β₁)·(β₂ + β₁) − 4(θ₂ − θ₁) + 2∇·(β₂ − β₁).
pub fn residual_beta_field(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> Result<ScalarField, ScatteringError> {
    check_pair(d1, d2)?;
    Ok(gradient_residual(&d1.beta, &d2.beta, d1, d2))
}

/// ∫ f e^{iρ·x} dx for lattice ρ.
pub fn fourier_pairing(f: &ScalarField, rho: [i64; 3]) -> C64 {
    f.mul_pointwise(&ScalarField::plane_wave(f.grid(), rho)).integral()
}

/// Coefficients of the system
/// −Δf + Vf + af + bg = 0, −Δg + Wg + cg + df = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessCoefficients {
    pub v: ScalarField,
    pub w: ScalarField,
    pub a: ScalarField,
    pub b: ScalarField,
    pub c: ScalarField,
    pub d: ScalarField,
    /// Smoothed indicator of Ω: 1 on the union of both phantom supports, 0 for r ≥ r_Ω.
    pub indicator: ScalarField,
}

/// Smoothed 𝟙_Ω for a pair: 1 for r ≤ max(support, 0.8 r_Ω), 0 for r ≥ r_Ω.
pub fn omega_indicator(d1: &DerivedMaterialFields, d2: &DerivedMaterialFields) -> ScalarField {
    let grid = d1.grid;
    let r_out = d1.radii.r_omega.min(d2.radii.r_omega);
    let r_in = d1.support_radius.max(d2.support_radius).max(0.8 * r_out);
    if r_in >= r_out {
        return ScalarField::from_real_fn(grid, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r <= r_out { 1.0 } else { 0.0 }
        });
    }
    crate::fields::radial_cutoff(grid, r_in, r_out)
}

pub fn assemble_uniqueness_coeffs(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> Result<UniquenessCoefficients, ScatteringError> {
    check_pair(d1, d2)?;
    let w2 = d1.omega * d1.omega;
    let (g1, g2) = (&d1.sqrt_gamma, &d2.sqrt_gamma);
    let (h1, h2) = (&d1.sqrt_mu, &d2.sqrt_mu);
    let gs = g1 + g2;
    let hs = h1 + h2;
    let gg = g1.mul_pointwise(g2);
    let hh = h1.mul_pointwise(h2);
    let ind = omega_indicator(d1, d2);
    let v = spectral_laplacian(&gs).zip_map(&gs, |l, s| l / s);
    let w = spectral_laplacian(&hs).zip_map(&hs, |l, s| l / s);
    let a = gg.mul_pointwise(&(&d1.mu + &d2.mu)).mul_pointwise(&ind).scale(C64::new(w2, 0.0));
    let b = gg
        .mul_pointwise(&(&d1.gamma + &d2.gamma))
        .mul_pointwise(&hs.zip_map(&gs, |h, g| h / g))
        .mul_pointwise(&ind)
        .scale(C64::new(w2, 0.0));
    let c = hh.mul_pointwise(&(&d1.gamma + &d2.gamma)).mul_pointwise(&ind).scale(C64::new(w2, 0.0));
    let d = hh
        .mul_pointwise(&(&d1.mu + &d2.mu))
        .mul_pointwise(&gs.zip_map(&hs, |g, h| g / h))
        .mul_pointwise(&ind)
        .scale(C64::new(w2, 0.0));
    Ok(UniquenessCoefficients { v, w, a, b, c, d, indicator: ind })
}

/// Left sides (−Δf + Vf + af + bg, −Δg + Wg + cg + df) as fields.
pub fn schrodinger_system_fields(
    f: &ScalarField,
    g: &ScalarField,
    k: &UniquenessCoefficients,
) -> Result<(ScalarField, ScalarField), ScatteringError> {
    f.grid().check_same(&g.grid())?;
    f.grid().check_same(&k.v.grid())?;
    let first = &(&(&k.v + &k.a).mul_pointwise(f) + &k.b.mul_pointwise(g)) - &spectral_laplacian(f);
    let second = &(&(&k.w + &k.c).mul_pointwise(g) + &k.d.mul_pointwise(f)) - &spectral_laplacian(g);
    Ok((first, second))
}

/// L² norms of the two left sides.
pub fn schrodinger_system_residual(
    f: &ScalarField,
    g: &ScalarField,
    k: &UniquenessCoefficients,
) -> Result<(f64, f64), ScatteringError> {
    let (a, b) = schrodinger_system_fields(f, g, k)?;
    Ok((a.norm_l2(), b.norm_l2()))
}

/// Comparison of the Schrödinger form with the gradient form of the
/// parameter-difference equations. With g_j = γ_j^{1/2}, h_j = μ_j^{1/2}:
/// first left side = −g₁g₂/(2(g₁+g₂))·r_α and second = −h₁h₂/(2(h₁+h₂))·r_β
/// wherever 𝟙_Ω = 1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EquivalenceResidual {
    /// ‖first + g₁g₂/(2(g₁+g₂))·r_α‖ / ‖g₁g₂/(2(g₁+g₂))·r_α‖.
    pub gamma: f64,
    pub mu: f64,
    /// ‖first‖ and ‖r_α‖ (absolute).
    pub gamma_schrodinger: f64,
    pub gamma_gradient: f64,
    pub mu_schrodinger: f64,
    pub mu_gradient: f64,
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn equivalence_residual(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
) -> Result<EquivalenceResidual, ScatteringError> {
    let coeffs = assemble_uniqueness_coeffs(d1, d2)?;
    let f = &d2.sqrt_gamma - &d1.sqrt_gamma;
    let g = &d2.sqrt_mu - &d1.sqrt_mu;
    let (s_gamma, s_mu) = schrodinger_system_fields(&f, &g, &coeffs)?;
    let r_alpha = residual_alpha_field(d1, d2)?;
    let r_beta = residual_beta_field(d1, d2)?;
    let factor = |x1: &ScalarField, x2: &ScalarField| {
        let prod = x1.mul_pointwise(x2);
        let sum = x1 + x2;
        prod.zip_map(&sum, |p, s| p / (2.0 * s))
    };
    let pred_gamma = factor(&d1.sqrt_gamma, &d2.sqrt_gamma).mul_pointwise(&r_alpha);
    let pred_mu = factor(&d1.sqrt_mu, &d2.sqrt_mu).mul_pointwise(&r_beta);
    Ok(EquivalenceResidual {
        gamma: relative((&s_gamma + &pred_gamma).norm_l2(), pred_gamma.norm_l2()),
        mu: relative((&s_mu + &pred_mu).norm_l2(), pred_mu.norm_l2()),
        gamma_schrodinger: s_gamma.norm_l2(),
        gamma_gradient: r_alpha.norm_l2(),
        mu_schrodinger: s_mu.norm_l2(),
        mu_gradient: r_beta.norm_l2(),
    })
}

/// Pairings of the full CGO pair against Q₂ − Q₁, with U = A_ζ₁ + R_ζ₁ and
/// W = B_ζ₂ + S_ζ₂ in factored form.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IdentityCheck {
    pub rho: [i64; 3],
    pub s: f64,
    /// ⟨(Q₂ − Q₁)w₁, v₂⟩ = ⟨(Q₂ − Q₁)U, e^{iρ·x}W⟩.
    pub full_pairing: C64,
    /// t(ρ).
    pub t: C64,
    /// −t(ρ), the left side of the decomposition.
    pub lhs: C64,
    /// ⟨(Q₂−Q₁)U, e^{iρ·x}(W − B₂)⟩.
    pub rhs_remainder: C64,
    /// ⟨(Q₂−Q₁)B₂, e^{iρ·x}(U − A₁)⟩.
    pub rhs_amplitude: C64,
    /// rhs_remainder + rhs_amplitude.
    pub rhs: C64,
    /// |rhs − (full_pairing − t)| / max(|rhs|, |full_pairing − t|).
    pub decomposition_gap: f64,
}

/// Solves w₁ against Q₁ and w₂ against Q̃₂, assembles v₂, and evaluates the
/// full pairing and both sides of the remainder decomposition. The
/// decomposition right side equals ⟨(Q₂−Q₁)w₁, v₂⟩ − t(ρ) by bilinearity and
/// symmetry; the two sides are computed from separate pairings.
pub fn full_identity_check(
    d1: &DerivedMaterialFields,
    d2: &DerivedMaterialFields,
    dir: &CgoDirection,
    variant: AmplitudeVariant,
    opts: &SolverOptions,
) -> Result<IdentityCheck, ScatteringError> {
    let grid = check_pair(d1, d2)?;
    let rho = grid.lattice_of(dir.rho).ok_or(ScatteringError::NotOnLattice(dir.rho))?;
    let amp = amplitudes(dir, variant);
    let q1 = WeakPotential::new(PotentialKind::Q, d1);
    let qt2 = WeakPotential::new(PotentialKind::Qtilde, d2);
    let w1 = solve_remainder(&q1, &amp.a_zeta1, dir, Zeta::One, opts)?;
    let w2 = solve_remainder(&qt2, &amp.a_zeta2, dir, Zeta::Two, opts)?;
    let v2 = assemble_v2(&w2, d2)?;
    let dq = potential_difference(d1, d2)?;

    let konst = |a: &[C64; 8]| Field8::constant(grid, a);
    let u = &konst(&amp.a_zeta1) + &w1.remainder;
    let w = &konst(&v2.b) + &v2.s;
    let a1 = konst(&amp.a1_limit);
    let b2 = konst(&amp.b2_limit);

    let full_pairing = q_bilinear_modulated(&dq, &u, &w, rho)?;
    let t = q_bilinear_modulated(&dq, &a1, &b2, rho)?;
    let rhs_remainder = q_bilinear_modulated(&dq, &u, &(&w - &b2), rho)?;
    let rhs_amplitude = q_bilinear_modulated(&dq, &b2, &(&u - &a1), rho)?;
    let rhs = rhs_remainder + rhs_amplitude;
    let expected = full_pairing - t;
    let scale = rhs.norm().max(expected.norm());
    Ok(IdentityCheck {
        rho,
        s: dir.s,
        full_pairing,
        t,
        lhs: -t,
        rhs_remainder,
        rhs_amplitude,
        rhs,
        decomposition_gap: relative((rhs - expected).norm(), scale),
    })
}

/// t(ρ) computed from the gradient-form residual field: (i/4)∫r e^{iρ·x}.
pub fn t_from_residual(r: &ScalarField, rho: [i64; 3]) -> C64 {
    0.25 * I * fourier_pairing(r, rho)
}

/// A named phantom of a [`Corpus`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorpusPhantom {
    pub name: String,
    pub spec: PhantomSpec,
}

/// A phantom pair with its recorded contrast and oracle value.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorpusPair {
    pub name: String,
    pub first: String,
    pub second: String,
    /// max |γ₂ − γ₁| over the grid.
    pub gamma_contrast: f64,
    /// max |t_a(ρ)| over the detection ball, from the independent oracle.
    pub oracle_max_abs_t_a: f64,
}

/// Phantoms, pairs and the detection threshold, stored as JSON.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Corpus {
    pub n: usize,
    pub length: f64,
    /// Radius of the ρ ball in lattice units.
    pub ball_radius: f64,
    /// Pairs with contrast at least this are required to be detected.
    pub contrast_floor: f64,
    /// Detection threshold on max |t_a|.
    pub detection_threshold: f64,
    pub phantoms: Vec<CorpusPhantom>,
    pub pairs: Vec<CorpusPair>,
}

impl Corpus {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes") + "\n"
    }

    pub fn grid(&self) -> Result<Grid3, FieldError> {
        Grid3::new(self.n, self.length)
    }

    pub fn phantom(&self, name: &str) -> Option<&PhantomSpec> {
        self.phantoms.iter().find(|p| p.name == name).map(|p| &p.spec)
    }

    /// The specs of a pair, in order.
    pub fn pair_specs(&self, pair: &CorpusPair) -> Option<(&PhantomSpec, &PhantomSpec)> {
        Some((self.phantom(&pair.first)?, self.phantom(&pair.second)?))
    }
}
