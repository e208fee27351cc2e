use super::norms::{discrete_symbol, xnorm, xnorm_for_symbol};
use super::{cnorm, CgoDirection, CgoError, Zeta};
use crate::fields::{radial_cutoff, Field8, Grid3, ScalarField, Spectrum, C64};
use crate::operators::{q_strong_apply, WeakPotential};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions {
    /// Relative update ‖R_{j+1} − R_j‖/‖R_{j+1}‖ at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Modes with |p_ζ| < reg_floor·|ζ| are treated as characteristic.
    pub reg_floor: f64,
    /// Outer radius, as a fraction of L, of the shell where the compensating
    /// source ramps up from zero (it vanishes inside r_Ω″).
    pub compensation_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, reg_floor: 1e-6, compensation_radius: 0.43 }
    }
}

/// Componentwise F⁻¹[f̂/p̃_ζ], with |p_ζ| floored at reg_floor·|ζ| (phase
/// kept; the ξ = 0 mode uses reg_floor·|ζ|). Returns the solution and the
/// number of floored modes.
pub fn faddeev_solve(f: &Field8, dir: &CgoDirection, which: Zeta, reg_floor: f64) -> (Field8, usize) {
    let grid = f.grid();
    let zeta = dir.zeta(which);
    let floor = reg_floor * cnorm(zeta);
    let mut count = 0;
    let symbol: Vec<C64> = discrete_symbol(grid, zeta)
        .into_iter()
        .map(|p| {
            let a = p.norm();
            if a >= floor {
                p
            } else {
                count += 1;
                if a == 0.0 {
                    C64::new(floor, 0.0)
                } else {
                    p * (floor / a)
                }
            }
        })
        .collect();
    let out = f.map_components(|c| Spectrum::forward(c).multiply(|idx| 1.0 / symbol[idx]).inverse());
    (out, count)
}

/// A remainder solving (−Δ − 2ζ·∇ + Q)R = −QA inside r_Ω″.
#[derive(Debug, Clone, PartialEq)]
pub struct CgoSolution {
    pub direction: CgoDirection,
    pub which: Zeta,
    /// The constant amplitude A.
    pub amplitude: [C64; 8],
    /// Torus remainder; exact solution inside r_Ω″.
    pub remainder: Field8,
    /// χ·R with χ = 1 on r ≤ r_Ω′ and χ = 0 for r ≥ r_Ω″.
    pub localized: Field8,
    pub iterations: usize,
    /// Ratios ‖R_{j+1} − R_j‖ / ‖R_j − R_{j−1}‖ from the second iteration on.
    pub contraction_history: Vec<f64>,
    pub converged: bool,
    /// ‖R‖_{X^{1/2}_ζ} of the torus remainder.
    pub xnorm_half: f64,
    /// ‖χR‖_{X^{1/2}_ζ}.
    pub xnorm_half_localized: f64,
    /// ‖QA‖_{X^{−1/2}_ζ}.
    pub qa_norm: f64,
    /// ‖p R̂ + (Q(A+R))^ − ŝ‖_{X^{−1/2}} / ‖QA‖_{X^{−1/2}}, with s the compensating source.
    pub substitution_residual: f64,
    /// Lattice modes excluded from the inverse (characteristic modes).
    pub excluded_modes: Vec<[i64; 3]>,
}

impl CgoSolution {
    pub fn max_contraction(&self) -> f64 {
        self.contraction_history.iter().copied().fold(0.0, f64::max)
    }

    /// Largest |R| on grid points with r ≥ r_out, for the localized remainder.
    pub fn exterior_max(&self, r_out: f64) -> f64 {
        let grid = self.localized.grid();
        (0..grid.len())
            .filter(|&i| grid.radius(i) >= r_out)
            .map(|i| self.localized.at(i).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Solves Cλ = f̂(B) for the compensating source s = c(x)·Σ_b λ_b e^{iξ_b·x},
/// which matches f̂ on the excluded modes B.
struct Compensation {
    modes: Vec<[i64; 3]>,
    indices: Vec<usize>,
    lu: Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    waves: Vec<ScalarField>,
}

impl Compensation {
    fn new(grid: Grid3, indices: Vec<usize>, r_in: f64, r_out: f64) -> Result<Self, CgoError> {
        let inner = radial_cutoff(grid, r_in, r_out);
        let cutoff = inner.map(|v| C64::new(1.0, 0.0) - v);
        let modes: Vec<[i64; 3]> = indices.iter().map(|&i| grid.mode(i)).collect();
        let waves = modes.iter().map(|&m| ScalarField::plane_wave(grid, m).mul_pointwise(&cutoff)).collect();
        let chat = Spectrum::forward(&cutoff);
        let nb = modes.len();
        let lu = if nb == 0 {
            None
        } else {
            let mat = DMatrix::from_fn(nb, nb, |a, b| {
                let d = [modes[a][0] - modes[b][0], modes[a][1] - modes[b][1], modes[a][2] - modes[b][2]];
                chat.at(d)
            });
            let lu = mat.lu();
            if !lu.is_invertible() {
                return Err(CgoError::SingularCompensation);
            }
            Some(lu)
        };
        Ok(Self { modes, indices, lu, waves })
    }

    /// Source spectrum for one component, given the spectrum of Q(A+R).
    fn source(&self, f: &Spectrum) -> Result<Spectrum, CgoError> {
        let grid = f.grid();
        let Some(lu) = &self.lu else {
            return Ok(Spectrum::zeros(grid));
        };
        let rhs = DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| f.coef()[i]));
        let lambda = lu.solve(&rhs).ok_or(CgoError::SingularCompensation)?;
        let mut s = ScalarField::zeros(grid);
        for (b, wave) in self.waves.iter().enumerate() {
            s.add_assign_scaled(wave, lambda[b]);
        }
        Ok(Spectrum::forward(&s))
    }
}

struct Step {
    next: Field8,
    /// Spectra of Q(A + R) and of the compensating source, per component.
    f_spec: Vec<Spectrum>,
    s_spec: Vec<Spectrum>,
}

fn step(
    q: &WeakPotential,
    amp: &Field8,
    r: &Field8,
    symbol: &[C64],
    excluded: &[bool],
    comp: &Compensation,
) -> Result<Step, CgoError> {
    let f = q_strong_apply(q, &(amp + r));
    let mut next = Vec::with_capacity(8);
    let mut f_spec = Vec::with_capacity(8);
    let mut s_spec = Vec::with_capacity(8);
    for j in 0..8 {
        let fs = Spectrum::forward(f.component(j));
        let ss = comp.source(&fs)?;
        let coef: Vec<C64> = (0..symbol.len())
            .map(|idx| if excluded[idx] { C64::new(0.0, 0.0) } else { (ss.coef()[idx] - fs.coef()[idx]) / symbol[idx] })
            .collect();
        next.push(Spectrum::from_coefficients(f.grid(), coef).inverse());
        f_spec.push(fs);
        s_spec.push(ss);
    }
    Ok(Step { next: Field8::from_components(next), f_spec, s_spec })
}

/// Fixed-point solve of (−Δ − 2ζ·∇ + Q)R = −QA + s, where s is a source
/// supported outside r_Ω″ that absorbs the equation on the characteristic
/// modes (there the inverse of −Δ − 2ζ·∇ does not exist).
pub fn solve_remainder(
    q: &WeakPotential,
    rhs_amp: &[C64; 8],
    dir: &CgoDirection,
    which: Zeta,
    opts: &SolverOptions,
) -> Result<CgoSolution, CgoError> {
    let grid = q.grid();
    let zeta = dir.zeta(which);
    let symbol = discrete_symbol(grid, zeta);
    let floor = opts.reg_floor * cnorm(zeta);
    let excluded: Vec<bool> = symbol.iter().enumerate().map(|(i, p)| i == 0 || p.norm() < floor).collect();
    let indices: Vec<usize> = (0..grid.len()).filter(|&i| excluded[i]).collect();
    let radii = q.radii;
    let comp = Compensation::new(
        grid,
        indices,
        radii.r_omega_dblprime,
        opts.compensation_radius * grid.box_length(),
    )?;
    let amp = Field8::constant(grid, rhs_amp);

    let mut r = Field8::zeros(grid);
    let mut history = Vec::new();
    let mut prev_update: Option<f64> = None;
    let mut above_one = 0;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let st = step(q, &amp, &r, &symbol, &excluded, &comp)?;
        let update = (&st.next - &r).norm_l2();
        let size = st.next.norm_l2();
        if let Some(prev) = prev_update {
            let ratio = if prev == 0.0 { 0.0 } else { update / prev };
            history.push(ratio);
            above_one = if ratio >= 1.0 { above_one + 1 } else { 0 };
            if above_one >= 3 || !st.next.is_finite() {
                return Err(CgoError::Diverged { s: dir.s, eta1: dir.eta1, history });
            }
        }
        r = st.next;
        prev_update = Some(update);
        if update == 0.0 || update <= opts.tol * size {
            converged = true;
            break;
        }
    }

    // Residual of the defining equation at the accepted remainder.
    let st = step(q, &amp, &r, &symbol, &excluded, &comp)?;
    let zn = cnorm(zeta);
    let weight: Vec<f64> = symbol.iter().map(|p| zn + p.norm()).collect();
    let residual = Field8::from_components(
        (0..8)
            .map(|j| {
                let rs = Spectrum::forward(r.component(j));
                let coef = (0..grid.len())
                    .map(|i| symbol[i] * rs.coef()[i] + st.f_spec[j].coef()[i] - st.s_spec[j].coef()[i])
                    .collect();
                Spectrum::from_coefficients(grid, coef).inverse()
            })
            .collect(),
    );
    let qa = q_strong_apply(q, &amp);
    let qa_norm = xnorm_for_symbol(&qa, &weight, -0.5);
    let res_norm = xnorm_for_symbol(&residual, &weight, -0.5);
    let substitution_residual = if qa_norm == 0.0 { res_norm } else { res_norm / qa_norm };

    let chi = radial_cutoff(grid, radii.r_omega_prime, radii.r_omega_dblprime);
    let localized = r.map_components(|c| c.mul_pointwise(&chi));
    Ok(CgoSolution {
        direction: *dir,
        which,
        amplitude: *rhs_amp,
        xnorm_half: xnorm(&r, dir, which, 0.5),
        xnorm_half_localized: xnorm(&localized, dir, which, 0.5),
        remainder: r,
        localized,
        iterations,
        contraction_history: history,
        converged,
        qa_norm,
        substitution_residual,
        excluded_modes: comp.modes.clone(),
    })
}
