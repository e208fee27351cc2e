use super::norms::discrete_symbol;
use super::{CgoError, CgoSolution, Zeta};
use crate::fields::{Field8, Spectrum, C64};
use crate::materials::DerivedMaterialFields;
use crate::operators::{apply_p_shifted, apply_v, apply_vt, p_symbol, q_strong_apply, WeakPotential, PotentialKind};

/// w₁ = e^{ζ₁·x}(A + R) in factored form together with v = 𝒫₁′w₁ = e^{ζ₁·x}V.
#[derive(Debug, Clone, PartialEq)]
pub struct W1Assembly {
    pub zeta: [C64; 3],
    /// A + R.
    pub factor: Field8,
    /// (P(iζ₁) + k)A, the constant part of V.
    pub constant_part: [C64; 8],
    /// V = (P(iζ₁) + k)A + (P(i(∇ + ζ₁)) + k)R − V₁ᵀ(A + R).
    pub v: Field8,
    /// ‖V₁‖ + ‖V₄‖ over r ≤ r_Ω′.
    pub v14_norm: f64,
    /// ‖V₂‖ + ‖V₃‖ over r ≤ r_Ω′.
    pub v23_norm: f64,
}

impl W1Assembly {
    pub fn vanishing_ratio(&self) -> f64 {
        self.v14_norm / self.v23_norm
    }
}

fn ball_norms(v: &Field8, r_max: f64) -> (f64, f64) {
    let grid = v.grid();
    let keep = |i: usize| grid.radius(i) <= r_max;
    let vec_norm = |f: &crate::fields::VectorField| {
        f.c.iter().map(|c| c.norm_l2_where(keep).powi(2)).sum::<f64>().sqrt()
    };
    (
        v.s1.norm_l2_where(keep) + v.s4.norm_l2_where(keep),
        vec_norm(&v.v2) + vec_norm(&v.v3),
    )
}

pub fn assemble_w1(sol: &CgoSolution, d1: &DerivedMaterialFields) -> W1Assembly {
    let grid = sol.remainder.grid();
    let zeta = sol.direction.zeta(sol.which);
    let k = C64::new(d1.k, 0.0);
    let a = &sol.amplitude;
    let mut constant_part = p_symbol(zeta, a);
    for (j, c) in constant_part.iter_mut().enumerate() {
        *c += k * a[j];
    }
    let r = &sol.remainder;
    let factor = &Field8::constant(grid, a) + r;
    let shifted = &apply_p_shifted(zeta, r) + &r.scale(k);
    let v = &(&Field8::constant(grid, &constant_part) + &shifted) - &apply_vt(&factor, d1);
    let (v14_norm, v23_norm) = ball_norms(&v, d1.radii.r_omega_prime);
    W1Assembly { zeta, factor, constant_part, v, v14_norm, v23_norm }
}

/// v₂ = 𝒫₂w₂ = e^{ζ₂·x}(B + S) built from the Q̃₂ solution w₂ = e^{ζ₂·x}(A + R).
#[derive(Debug, Clone, PartialEq)]
pub struct V2Assembly {
    pub zeta: [C64; 3],
    /// B = (P(iζ₂) − k)A.
    pub b: [C64; 8],
    /// S = P(i(∇ + ζ₂))R − kR + V₂(A + R).
    pub s: Field8,
    /// (‖R₁‖ + ‖R₄‖) / ‖R‖.
    pub decoupling: f64,
    /// ‖(−Δ − 2ζ₂·∇ + Q₂)S + Q₂B‖ / ‖Q₂B‖ over r ≤ r_Ω′.
    pub s_residual: f64,
}

/// Largest relative size of R₁, R₄ accepted by [`assemble_v2`].
pub const DECOUPLING_LIMIT: f64 = 1e-8;

pub fn assemble_v2(sol_w2: &CgoSolution, d2: &DerivedMaterialFields) -> Result<V2Assembly, CgoError> {
    let grid = sol_w2.remainder.grid();
    let zeta = sol_w2.direction.zeta(sol_w2.which);
    let r = &sol_w2.remainder;
    let total = r.norm_l2();
    let decoupling = if total == 0.0 { 0.0 } else { (r.s1.norm_l2() + r.s4.norm_l2()) / total };
    if decoupling > DECOUPLING_LIMIT {
        return Err(CgoError::DecouplingViolation(decoupling));
    }
    let k = C64::new(d2.k, 0.0);
    let a = &sol_w2.amplitude;
    let mut b = p_symbol(zeta, a);
    for (j, c) in b.iter_mut().enumerate() {
        *c -= k * a[j];
    }
    let factor = &Field8::constant(grid, a) + r;
    let s = &(&apply_p_shifted(zeta, r) - &r.scale(k)) + &apply_v(&factor, d2);

    let q2 = WeakPotential::new(PotentialKind::Q, d2);
    let symbol = discrete_symbol(grid, zeta);
    let ls = s.map_components(|c| Spectrum::forward(c).multiply(|i| symbol[i]).inverse());
    let qb = q_strong_apply(&q2, &Field8::constant(grid, &b));
    let eq = &(&ls + &q_strong_apply(&q2, &s)) + &qb;
    let r_max = d2.radii.r_omega_prime;
    let keep = |i: usize| grid.radius(i) <= r_max;
    let den = qb.norm_l2_where(keep);
    let num = eq.norm_l2_where(keep);
    let s_residual = if den == 0.0 { num } else { num / den };
    debug_assert_eq!(sol_w2.which, Zeta::Two);
    Ok(V2Assembly { zeta, b, s, decoupling, s_residual })
}
