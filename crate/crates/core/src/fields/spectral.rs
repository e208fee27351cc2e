use super::{Field8, FieldError, Grid3, ScalarField, VectorField, C64, I};
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized in-place 3D DFT (x fastest), built from 1D passes.
fn fft3(data: &mut [C64], n: usize, inverse: bool) {
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    plan.process(data);
    let mut lines = vec![C64::new(0.0, 0.0); data.len()];
    for stride in [n, n * n] {
        // Gather every line along the strided axis into contiguous storage.
        let mut pos = 0;
        for outer in 0..n {
            for inner in 0..n {
                let base = if stride == n { inner + n * n * outer } else { inner + n * outer };
                for t in 0..n {
                    lines[pos] = data[base + stride * t];
                    pos += 1;
                }
            }
        }
        plan.process(&mut lines);
        pos = 0;
        for outer in 0..n {
            for inner in 0..n {
                let base = if stride == n { inner + n * n * outer } else { inner + n * outer };
                for t in 0..n {
                    data[base + stride * t] = lines[pos];
                    pos += 1;
                }
            }
        }
    }
}

/// Fourier coefficients ĉ_m of a grid function, normalized so that
/// f(x) = Σ_m ĉ_m e^{iξ_m·x} at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid3,
    coef: Vec<C64>,
}

impl Spectrum {
    pub fn forward(f: &ScalarField) -> Self {
        let grid = f.grid();
        let mut coef = f.data().to_vec();
        fft3(&mut coef, grid.n(), false);
        let scale = 1.0 / grid.len() as f64;
        for (idx, c) in coef.iter_mut().enumerate() {
            *c *= scale * parity(grid, idx);
        }
        Self { grid, coef }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self { grid, coef: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coefficients(grid: Grid3, coef: Vec<C64>) -> Self {
        assert_eq!(coef.len(), grid.len(), "coefficient count does not match grid");
        Self { grid, coef }
    }

    pub fn inverse(&self) -> ScalarField {
        let mut data: Vec<C64> =
            self.coef.iter().enumerate().map(|(idx, &c)| c * parity(self.grid, idx)).collect();
        fft3(&mut data, self.grid.n(), true);
        ScalarField::from_vec(self.grid, data)
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn coef(&self) -> &[C64] {
        &self.coef
    }

    pub fn coef_mut(&mut self) -> &mut [C64] {
        &mut self.coef
    }

    pub fn at(&self, m: [i64; 3]) -> C64 {
        self.coef[self.grid.mode_index(m)]
    }

    /// Multiplies every coefficient by `f(flat_index)`.
    pub fn multiply(&self, f: impl Fn(usize) -> C64) -> Self {
        let coef = self.coef.iter().enumerate().map(|(idx, &c)| c * f(idx)).collect();
        Self { grid: self.grid, coef }
    }

    /// Σ_m |ĉ_m|² w(m), scaled by the box volume (Parseval).
    pub fn weighted_energy(&self, w: impl Fn(usize) -> f64) -> f64 {
        self.grid.volume()
            * self.coef.iter().enumerate().map(|(idx, c)| c.norm_sqr() * w(idx)).sum::<f64>()
    }
}

/// (−1)^{m_x+m_y+m_z}: converts DFT coefficients on x_j = −L/2 + jL/n to
/// coefficients of e^{iξ·x}.
#[inline]
fn parity(grid: Grid3, idx: usize) -> f64 {
    let [i, j, k] = grid.unravel(idx);
    if (i + j + k) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn spectral_gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let s = Spectrum::forward(f);
    let comp = |a: usize| s.multiply(|idx| I * grid.xi(idx)[a]).inverse();
    VectorField::new(comp(0), comp(1), comp(2))
}

pub fn spectral_divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let s: Vec<Spectrum> = v.c.iter().map(Spectrum::forward).collect();
    let coef = (0..grid.len())
        .map(|idx| {
            let xi = grid.xi(idx);
            I * (xi[0] * s[0].coef[idx] + xi[1] * s[1].coef[idx] + xi[2] * s[2].coef[idx])
        })
        .collect();
    Spectrum::from_coefficients(grid, coef).inverse()
}

pub fn spectral_curl(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let s: Vec<Spectrum> = v.c.iter().map(Spectrum::forward).collect();
    let comp = |a: usize| {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let coef = (0..grid.len())
            .map(|idx| {
                let xi = grid.xi(idx);
                I * (xi[b] * s[c].coef[idx] - xi[c] * s[b].coef[idx])
            })
            .collect();
        Spectrum::from_coefficients(grid, coef).inverse()
    };
    VectorField::new(comp(0), comp(1), comp(2))
}

pub fn spectral_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    Spectrum::forward(f)
        .multiply(|idx| {
            let xi = grid.xi(idx);
            C64::new(-(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0)
        })
        .inverse()
}

/// Truncates to the 2/3 band: keeps modes with 3|m_a| < n on every axis.
pub fn truncate_two_thirds(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n = grid.n() as i64;
    let s = Spectrum::forward(f);
    s.multiply(|idx| {
        let m = grid.mode(idx);
        if m.iter().all(|&v| 3 * v.abs() < n) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .inverse()
}

/// Pointwise product after 2/3-rule truncation of both factors.
pub fn dealiased_product(f: &ScalarField, g: &ScalarField) -> Result<ScalarField, FieldError> {
    f.grid().check_same(&g.grid())?;
    Ok(truncate_two_thirds(f).mul_pointwise(&truncate_two_thirds(g)))
}

/// Bilinear L² pairing ∫ Σ_j u_j v_j dx (no conjugation).
pub fn inner_product_l2(u: &Field8, v: &Field8) -> Result<C64, FieldError> {
    u.grid().check_same(&v.grid())?;
    Ok((0..8).map(|j| u.component(j).mul_pointwise(v.component(j)).integral()).sum())
}

/// Random field whose Fourier coefficients are supported on |m_a| ≤ band,
/// with independent uniform real and imaginary parts in [−1, 1] damped by
/// 1/(1 + |m|²).
pub fn random_band_limited<R: rand::Rng + ?Sized>(grid: Grid3, band: i64, rng: &mut R) -> ScalarField {
    let mut s = Spectrum::zeros(grid);
    for m0 in -band..=band {
        for m1 in -band..=band {
            for m2 in -band..=band {
                let m = [m0, m1, m2];
                let damp = 1.0 / (1.0 + (m0 * m0 + m1 * m1 + m2 * m2) as f64);
                let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp;
                s.coef[grid.mode_index(m)] = c;
            }
        }
    }
    s.inverse()
}

/// Random 8-vector with every component drawn by [`random_band_limited`].
pub fn random_field8<R: rand::Rng + ?Sized>(grid: Grid3, band: i64, rng: &mut R) -> Field8 {
    Field8::from_components((0..8).map(|_| random_band_limited(grid, band, rng)).collect())
}
