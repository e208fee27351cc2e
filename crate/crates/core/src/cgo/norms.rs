use super::{cnorm, CgoDirection, CgoError, Zeta};
use crate::fields::{Field8, Grid3, ScalarField, Spectrum, C64, I};
use crate::operators::{q_strong_apply, WeakPotential};

fn symbol_at(zeta: [C64; 3], xi: [f64; 3]) -> C64 {
    let xx = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    C64::new(xx, 0.0) - 2.0 * I * (zeta[0] * xi[0] + zeta[1] * xi[1] + zeta[2] * xi[2])
}

/// p_ζ(ξ) = |ξ|² − 2iζ·ξ.
pub fn faddeev_multiplier(dir: &CgoDirection, which: Zeta, xi: [f64; 3]) -> C64 {
    symbol_at(dir.zeta(which), xi)
}

/// Symbol of the grid operator −Δ − 2ζ·∇ at every lattice mode.
pub fn discrete_symbol(grid: Grid3, zeta: [C64; 3]) -> Vec<C64> {
    (0..grid.len()).map(|idx| symbol_at(zeta, grid.xi(idx))).collect()
}

/// (Σ_j ‖weight(ξ)^b ŵ_j‖²)^{1/2} for an explicit weight per mode.
pub fn xnorm_for_symbol(w: &Field8, weight: &[f64], b: f64) -> f64 {
    let powered: Vec<f64> = weight.iter().map(|&x| x.powf(2.0 * b)).collect();
    (0..8)
        .map(|j| Spectrum::forward(w.component(j)).weighted_energy(|idx| powered[idx]))
        .sum::<f64>()
        .sqrt()
}

fn inhomogeneous_weight(grid: Grid3, zeta: [C64; 3]) -> Vec<f64> {
    let zn = cnorm(zeta);
    discrete_symbol(grid, zeta).iter().map(|p| zn + p.norm()).collect()
}

/// ‖w‖_{X^b_ζ}: weight (|ζ| + |p_ζ|)^b.
pub fn xnorm(w: &Field8, dir: &CgoDirection, which: Zeta, b: f64) -> f64 {
    xnorm_for_symbol(w, &inhomogeneous_weight(w.grid(), dir.zeta(which)), b)
}

/// ‖w‖_{Ẋ^b_ζ}: weight |p_ζ|^b, with |p_ζ| floored at `reg_floor`·|ζ| as in
/// the Faddeev solver (only matters for b < 0).
pub fn xdotnorm(w: &Field8, dir: &CgoDirection, which: Zeta, b: f64, reg_floor: f64) -> f64 {
    let zeta = dir.zeta(which);
    let floor = reg_floor * cnorm(zeta);
    let weight: Vec<f64> = discrete_symbol(w.grid(), zeta)
        .iter()
        .map(|p| if b < 0.0 { p.norm().max(floor) } else { p.norm() })
        .collect();
    xnorm_for_symbol(w, &weight, b)
}

/// Parameters of the auxiliary multiplier
/// m(ξ) = (M⁻¹||ξ|² − τ²|² + M⁻¹τ²|ξ₃|² + Mτ²)^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CarlemanProbe {
    pub m: f64,
    pub tau: f64,
    pub r_support: f64,
}

impl CarlemanProbe {
    pub fn multiplier(&self, xi: [f64; 3]) -> f64 {
        let xx = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let t2 = self.tau * self.tau;
        ((xx - t2).powi(2) / self.m + t2 * xi[2] * xi[2] / self.m + self.m * t2).sqrt()
    }

    /// The regime τ > 8MR in which the auxiliary estimate is stated.
    pub fn in_regime(&self) -> bool {
        self.m > 0.0 && self.tau > 8.0 * self.m * self.r_support
    }
}

/// ‖u‖_{Y^b} = ‖m^b û‖_{L²}.
pub fn ynorm(u: &ScalarField, probe: &CarlemanProbe, b: f64) -> f64 {
    let grid = u.grid();
    Spectrum::forward(u).weighted_energy(|idx| probe.multiplier(grid.xi(idx)).powf(2.0 * b)).sqrt()
}

/// ‖u‖_{X^{1/2}} / ‖(−Δ + 2ζ·∇ + Q)u‖_{X^{−1/2}}, with both weights built
/// from the symbol |ξ|² + 2iζ·ξ of the operator itself.
pub fn carleman_ratio(
    u: &Field8,
    dir: &CgoDirection,
    which: Zeta,
    q: &WeakPotential,
) -> Result<f64, CgoError> {
    let grid = u.grid();
    let zeta = dir.zeta(which);
    let neg = zeta.map(|z| -z);
    let symbol = discrete_symbol(grid, neg);
    let zn = cnorm(zeta);
    let weight: Vec<f64> = symbol.iter().map(|p| zn + p.norm()).collect();
    let qu = q_strong_apply(q, u);
    let lu = Field8::from_components(
        (0..8)
            .map(|j| {
                let s = Spectrum::forward(u.component(j));
                let applied = s.multiply(|idx| symbol[idx]).inverse();
                &applied + qu.component(j)
            })
            .collect(),
    );
    let num = xnorm_for_symbol(u, &weight, 0.5);
    let den = xnorm_for_symbol(&lu, &weight, -0.5);
    if num == 0.0 || den == 0.0 {
        return Err(CgoError::ZeroDenominator);
    }
    Ok(num / den)
}
