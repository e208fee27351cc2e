//! Periodic-box grids, complex scalar/vector/8-vector fields and the
//! spectral calculus acting on them.

mod io;
mod spectral;

pub use io::{read_components, read_field8, read_scalar, write_field8, write_scalar, write_vector};
pub use spectral::{
    dealiased_product, inner_product_l2, spectral_curl, spectral_divergence, spectral_gradient,
    spectral_laplacian, truncate_two_thirds, random_band_limited, random_field8, Spectrum,
};

use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

pub type C64 = Complex64;

/// Imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("grid size n = {0} must be a power of two and at least 8")]
    InvalidSize(usize),
    #[error("box length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a field file (bad magic)")]
    BadMagic,
    #[error("unsupported component count {0}")]
    UnsupportedComponents(u32),
    #[error("header dimensions overflow: n = {0}")]
    DimensionOverflow(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("expected {expected} components, file holds {found}")]
    ComponentCount { expected: usize, found: usize },
}

/// Uniform periodic grid with `n` points per axis on the box [−L/2, L/2)³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
}

impl Grid3 {
    pub fn new(n: usize, box_length: f64) -> Result<Self, FieldError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(FieldError::InvalidSize(n));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(FieldError::InvalidLength(box_length));
        }
        Ok(Self { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Lattice spacing 2π/L of the frequency grid.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    /// Flat index with x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    /// Signed lattice index in [−n/2, n/2) for storage index `j`.
    #[inline]
    pub fn folded(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j >= n / 2 {
            j - n
        } else {
            j
        }
    }

    /// Signed lattice triple of a flat spectral index.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.folded(i), self.folded(j), self.folded(k)]
    }

    /// Flat spectral index of a signed lattice triple (wrapped periodically).
    pub fn mode_index(&self, m: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |v: i64| v.rem_euclid(n) as usize;
        self.index(w(m[0]), w(m[1]), w(m[2]))
    }

    /// True when `m` lies strictly inside the resolved band (no Nyquist component).
    pub fn in_band(&self, m: [i64; 3]) -> bool {
        let h = (self.n / 2) as i64;
        m.iter().all(|&v| v > -h && v < h)
    }

    /// Frequency vector ξ = (2π/L)·m of a flat spectral index.
    pub fn xi(&self, idx: usize) -> [f64; 3] {
        let m = self.mode(idx);
        let d = self.dxi();
        [d * m[0] as f64, d * m[1] as f64, d * m[2] as f64]
    }

    /// Lattice triple for a physical frequency vector, if it lies on the lattice.
    pub fn lattice_of(&self, xi: [f64; 3]) -> Option<[i64; 3]> {
        let d = self.dxi();
        let mut m = [0i64; 3];
        for a in 0..3 {
            let v = xi[a] / d;
            let r = v.round();
            if (v - r).abs() > 1e-9 * (1.0 + v.abs()) {
                return None;
            }
            m[a] = r as i64;
        }
        Some(m)
    }

    pub fn lattice_vector(&self, m: [i64; 3]) -> [f64; 3] {
        let d = self.dxi();
        [d * m[0] as f64, d * m[1] as f64, d * m[2] as f64]
    }

    pub fn check_same(&self, other: &Grid3) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}

/// Complex samples of a scalar function on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    data: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self { grid, data: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: Grid3, value: C64) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: Grid3, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), grid.len(), "sample count does not match grid");
        Self { grid, data }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> C64) -> Self {
        let data = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self { grid, data }
    }

    pub fn from_real_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// The lattice mode e^{iξ·x} with ξ = (2π/L)·m.
    pub fn plane_wave(grid: Grid3, m: [i64; 3]) -> Self {
        let xi = grid.lattice_vector(m);
        Self::from_fn(grid, |x| {
            let ph = xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2];
            C64::new(ph.cos(), ph.sin())
        })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, data }
    }

    /// Pointwise product without dealiasing (coefficient algebra).
    pub fn mul_pointwise(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add_assign_scaled(&mut self, other: &Self, c: C64) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
    }

    /// Grid quadrature of the bilinear pairing ∫ f g dx (no conjugation).
    pub fn integral(&self) -> C64 {
        self.data.iter().sum::<C64>() * self.grid.cell_volume()
    }

    /// L² norm over the box.
    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// L² norm over grid points selected by `keep`.
    pub fn norm_l2_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let s: f64 =
            self.data.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<C64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: C64) -> ScalarField {
        self.scale(rhs)
    }
}

/// Three scalar components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Self {
        assert!(x.grid == y.grid && y.grid == z.grid, "components live on different grids");
        Self { c: [x, y, z] }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self::new(ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn constant(grid: Grid3, v: [C64; 3]) -> Self {
        Self::new(
            ScalarField::constant(grid, v[0]),
            ScalarField::constant(grid, v[1]),
            ScalarField::constant(grid, v[2]),
        )
    }

    pub fn grid(&self) -> Grid3 {
        self.c[0].grid()
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::new(f(&self.c[0]), f(&self.c[1]), f(&self.c[2]))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_components(|c| c.scale(s))
    }

    /// Pointwise bilinear dot product.
    pub fn dot(&self, other: &Self) -> ScalarField {
        let mut out = self.c[0].mul_pointwise(&other.c[0]);
        for a in 1..3 {
            out = &out + &self.c[a].mul_pointwise(&other.c[a]);
        }
        out
    }

    /// Pointwise cross product.
    pub fn cross(&self, other: &Self) -> Self {
        let p = |a: usize, b: usize| self.c[a].mul_pointwise(&other.c[b]);
        Self::new(&p(1, 2) - &p(2, 1), &p(2, 0) - &p(0, 2), &p(0, 1) - &p(1, 0))
    }

    pub fn norm_l2(&self) -> f64 {
        self.c.iter().map(|c| c.norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let g = self.grid();
        (0..g.len())
            .map(|i| self.c.iter().map(|c| c.data()[i].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField::new(&self.c[0] + &rhs.c[0], &self.c[1] + &rhs.c[1], &self.c[2] + &rhs.c[2])
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField::new(&self.c[0] - &rhs.c[0], &self.c[1] - &rhs.c[1], &self.c[2] - &rhs.c[2])
    }
}

/// The 8-vector w = (w₁, w₂, w₃, w₄) with scalar w₁, w₄ and 3-vectors w₂, w₃.
#[derive(Debug, Clone, PartialEq)]
pub struct Field8 {
    pub s1: ScalarField,
    pub v2: VectorField,
    pub v3: VectorField,
    pub s4: ScalarField,
}

impl Field8 {
    pub fn new(s1: ScalarField, v2: VectorField, v3: VectorField, s4: ScalarField) -> Self {
        let g = s1.grid();
        assert!(
            v2.grid() == g && v3.grid() == g && s4.grid() == g,
            "components live on different grids"
        );
        Self { s1, v2, v3, s4 }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self::new(
            ScalarField::zeros(grid),
            VectorField::zeros(grid),
            VectorField::zeros(grid),
            ScalarField::zeros(grid),
        )
    }

    /// Constant extension of an 8-vector.
    pub fn constant(grid: Grid3, a: &[C64; 8]) -> Self {
        Self::from_components((0..8).map(|j| ScalarField::constant(grid, a[j])).collect())
    }

    /// Builds from eight scalar components in the order (w₁, w₂ˣʸᶻ, w₃ˣʸᶻ, w₄).
    pub fn from_components(mut c: Vec<ScalarField>) -> Self {
        assert_eq!(c.len(), 8, "an 8-vector needs eight components");
        let s4 = c.pop().unwrap();
        let v3z = c.pop().unwrap();
        let v3y = c.pop().unwrap();
        let v3x = c.pop().unwrap();
        let v2z = c.pop().unwrap();
        let v2y = c.pop().unwrap();
        let v2x = c.pop().unwrap();
        let s1 = c.pop().unwrap();
        Self::new(s1, VectorField::new(v2x, v2y, v2z), VectorField::new(v3x, v3y, v3z), s4)
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        let [a, b, c] = self.v2.c;
        let [d, e, f] = self.v3.c;
        vec![self.s1, a, b, c, d, e, f, self.s4]
    }

    pub fn grid(&self) -> Grid3 {
        self.s1.grid()
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        match j {
            0 => &self.s1,
            1..=3 => &self.v2.c[j - 1],
            4..=6 => &self.v3.c[j - 4],
            7 => &self.s4,
            _ => panic!("8-vector component index {j} out of range"),
        }
    }

    pub fn component_mut(&mut self, j: usize) -> &mut ScalarField {
        match j {
            0 => &mut self.s1,
            1..=3 => &mut self.v2.c[j - 1],
            4..=6 => &mut self.v3.c[j - 4],
            7 => &mut self.s4,
            _ => panic!("8-vector component index {j} out of range"),
        }
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::from_components((0..8).map(|j| f(self.component(j))).collect())
    }

    pub fn zip_components(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self::from_components((0..8).map(|j| f(self.component(j), other.component(j))).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_components(|c| c.scale(s))
    }

    /// Value of all eight components at one grid point.
    pub fn at(&self, idx: usize) -> [C64; 8] {
        std::array::from_fn(|j| self.component(j).data()[idx])
    }

    pub fn norm_l2(&self) -> f64 {
        (0..8).map(|j| self.component(j).norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    pub fn norm_l2_where(&self, keep: impl Fn(usize) -> bool + Copy) -> f64 {
        (0..8).map(|j| self.component(j).norm_l2_where(keep).powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..8).map(|j| self.component(j).max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        (0..8).all(|j| self.component(j).is_finite())
    }
}

impl Add for &Field8 {
    type Output = Field8;
    fn add(self, rhs: &Field8) -> Field8 {
        self.zip_components(rhs, |a, b| a + b)
    }
}

impl Sub for &Field8 {
    type Output = Field8;
    fn sub(self, rhs: &Field8) -> Field8 {
        self.zip_components(rhs, |a, b| a - b)
    }
}

/// Smooth step: 1 for t ≤ 0, 0 for t ≥ 1, C^∞ in between.
pub fn smooth_step_down(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let a = f(1.0 - t);
    a / (a + f(t))
}

/// Radial cutoff equal to 1 for r ≤ r_in and 0 for r ≥ r_out.
pub fn radial_cutoff(grid: Grid3, r_in: f64, r_out: f64) -> ScalarField {
    ScalarField::from_real_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        smooth_step_down((r - r_in) / (r_out - r_in))
    })
}
