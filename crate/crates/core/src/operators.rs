//! The 8×8 operator algebra acting on [`Field8`]: the first-order operator
//! P(i∇), the potential V, the factors 𝒫 and 𝒫′, the weak potentials Q and
//! Q̃, and the Maxwell dictionary.

use crate::fields::{
    spectral_curl, spectral_divergence, spectral_gradient, truncate_two_thirds, Field8, FieldError,
    Grid3, ScalarField, VectorField, C64, I,
};
use crate::materials::{DerivedMaterialFields, Radii};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// P(i∇)w = i(∇·w₂, ∇w₁ + ∇∧w₃, −∇∧w₂ + ∇w₄, ∇·w₃).
pub fn apply_p(w: &Field8) -> Field8 {
    let g1 = spectral_gradient(&w.s1);
    let g4 = spectral_gradient(&w.s4);
    let c2 = spectral_curl(&w.v2);
    let c3 = spectral_curl(&w.v3);
    Field8::new(
        spectral_divergence(&w.v2).scale(I),
        (&g1 + &c3).scale(I),
        (&g4 - &c2).scale(I),
        spectral_divergence(&w.v3).scale(I),
    )
}

/// Pointwise action of the symbol P(iζ) on a field: i(ζ·w₂, ζw₁ + ζ∧w₃, −ζ∧w₂ + ζw₄, ζ·w₃).
pub fn apply_p_symbol(zeta: [C64; 3], w: &Field8) -> Field8 {
    let grid = w.grid();
    let z = VectorField::constant(grid, zeta);
    let zs = |s: &ScalarField| z.map_components(|c| c.mul_pointwise(s));
    Field8::new(
        z.dot(&w.v2).scale(I),
        (&zs(&w.s1) + &z.cross(&w.v3)).scale(I),
        (&zs(&w.s4) - &z.cross(&w.v2)).scale(I),
        z.dot(&w.v3).scale(I),
    )
}

/// P(iζ) applied to a constant 8-vector.
pub fn p_symbol(zeta: [C64; 3], a: &[C64; 8]) -> [C64; 8] {
    let w2 = [a[1], a[2], a[3]];
    let w3 = [a[4], a[5], a[6]];
    let dot = |u: [C64; 3], v: [C64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = |u: [C64; 3], v: [C64; 3]| {
        [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
    };
    let z3 = cross(zeta, w3);
    let z2 = cross(zeta, w2);
    [
        I * dot(zeta, w2),
        I * (zeta[0] * a[0] + z3[0]),
        I * (zeta[1] * a[0] + z3[1]),
        I * (zeta[2] * a[0] + z3[2]),
        I * (zeta[0] * a[7] - z2[0]),
        I * (zeta[1] * a[7] - z2[1]),
        I * (zeta[2] * a[7] - z2[2]),
        I * dot(zeta, w3),
    ]
}

/// P(i(∇ + ζ))w for a field in the factored representation e^{ζ·x}w.
pub fn apply_p_shifted(zeta: [C64; 3], w: &Field8) -> Field8 {
    &apply_p(w) + &apply_p_symbol(zeta, w)
}

/// The first-order part M = (P(i∇)D)D⁻¹ for (a, b) = (α, β); (a, b) = (β, α) gives Mᵀ.
fn apply_m(w: &Field8, a: &VectorField, b: &VectorField) -> Field8 {
    let half_i = 0.5 * I;
    let times = |v: &VectorField, s: &ScalarField| v.map_components(|c| c.mul_pointwise(s));
    Field8::new(
        a.dot(&w.v2).scale(half_i),
        (&times(b, &w.s1) - &b.cross(&w.v3)).scale(half_i),
        (&a.cross(&w.v2) + &times(a, &w.s4)).scale(half_i),
        b.dot(&w.v3).scale(half_i),
    )
}

fn k_minus_kappa(w: &Field8, d: &DerivedMaterialFields) -> Field8 {
    let factor = d.kappa.map(|kap| d.k - kap);
    w.map_components(|c| c.mul_pointwise(&factor))
}

/// V w = (k − κ)w + (i/2)(α·w₂, βw₁ − β∧w₃, α∧w₂ + αw₄, β·w₃).
pub fn apply_v(w: &Field8, d: &DerivedMaterialFields) -> Field8 {
    &k_minus_kappa(w, d) + &apply_m(w, &d.alpha, &d.beta)
}

/// Vᵀ w = (k − κ)w + (i/2)(β·w₂, αw₁ − α∧w₃, β∧w₂ + βw₄, α·w₃).
pub fn apply_vt(w: &Field8, d: &DerivedMaterialFields) -> Field8 {
    &k_minus_kappa(w, d) + &apply_m(w, &d.beta, &d.alpha)
}

/// 𝒫w = (P(i∇) − k + V)w.
pub fn apply_pcal(w: &Field8, d: &DerivedMaterialFields) -> Field8 {
    let pw = &apply_p(w) - &w.scale(re(d.k));
    &pw + &apply_v(w, d)
}

/// 𝒫′w = (P(i∇) + k − Vᵀ)w.
pub fn apply_pcal_prime(w: &Field8, d: &DerivedMaterialFields) -> Field8 {
    let pw = &apply_p(w) + &w.scale(re(d.k));
    &pw - &apply_vt(w, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PotentialKind {
    /// The potential of 𝒫𝒫′ = −(Δ + k²) + Q.
    Q,
    /// The potential of 𝒫′𝒫 = −(Δ + k²) + Q̃.
    Qtilde,
}

/// Groups of terms in the weak potential, used for sign-mutation controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QTerm {
    /// Zeroth-order coefficient of the (w₁, w₃) block.
    Scalar13,
    /// Gradient coefficient of the (w₁, w₃) block.
    Gradient13,
    Scalar42,
    Gradient42,
    /// The κ coupling term.
    Kappa,
}

/// Q or Q̃ written in block form. For each block (1,3) and (4,2) the form reads
/// ∫ c[u_s φ_s + u_v·φ_v] + g·[∇(u_s φ_s − u_v·φ_v) + ∇·(u_v φ_vᵀ + φ_v u_vᵀ)],
/// plus the κ coupling term of the kind.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakPotential {
    pub kind: PotentialKind,
    pub c13: ScalarField,
    pub g13: VectorField,
    pub div_g13: ScalarField,
    pub sym_g13: [ScalarField; 6],
    pub c42: ScalarField,
    pub g42: VectorField,
    pub div_g42: ScalarField,
    pub sym_g42: [ScalarField; 6],
    pub kappa: ScalarField,
    pub grad_kappa: VectorField,
    /// Nested radii of the phantom the potential was built from.
    pub radii: Radii,
}

fn scaled6(s: &[ScalarField; 6], c: C64) -> [ScalarField; 6] {
    std::array::from_fn(|j| s[j].scale(c))
}

fn sub6(a: &[ScalarField; 6], b: &[ScalarField; 6]) -> [ScalarField; 6] {
    std::array::from_fn(|j| &a[j] - &b[j])
}

impl WeakPotential {
    pub fn new(kind: PotentialKind, d: &DerivedMaterialFields) -> Self {
        let c = |v: &VectorField| {
            let vv = v.dot(v);
            vv.zip_map(&d.theta, |p, t| 0.25 * p - t)
        };
        let (c_alpha, c_beta) = (c(&d.alpha), c(&d.beta));
        let (h, mh) = (re(0.5), re(-0.5));
        match kind {
            PotentialKind::Q => Self {
                kind,
                c13: c_alpha,
                g13: d.alpha.scale(mh),
                div_g13: d.div_alpha.scale(mh),
                sym_g13: scaled6(&d.sym_grad_alpha, mh),
                c42: c_beta,
                g42: d.beta.scale(mh),
                div_g42: d.div_beta.scale(mh),
                sym_g42: scaled6(&d.sym_grad_beta, mh),
                kappa: d.kappa.clone(),
                grad_kappa: d.grad_kappa.clone(),
                radii: d.radii,
            },
            PotentialKind::Qtilde => Self {
                kind,
                c13: c_beta,
                g13: d.beta.scale(h),
                div_g13: d.div_beta.scale(h),
                sym_g13: scaled6(&d.sym_grad_beta, h),
                c42: c_alpha,
                g42: d.alpha.scale(h),
                div_g42: d.div_alpha.scale(h),
                sym_g42: scaled6(&d.sym_grad_alpha, h),
                kappa: d.kappa.clone(),
                grad_kappa: d.grad_kappa.clone(),
                radii: d.radii,
            },
        }
    }

    /// The difference potential `self − other`, built coefficient by coefficient.
    pub fn difference(&self, other: &Self) -> Result<Self, FieldError> {
        self.c13.grid().check_same(&other.c13.grid())?;
        assert_eq!(self.kind, other.kind, "difference of potentials of different kinds");
        Ok(Self {
            kind: self.kind,
            c13: &self.c13 - &other.c13,
            g13: &self.g13 - &other.g13,
            div_g13: &self.div_g13 - &other.div_g13,
            sym_g13: sub6(&self.sym_g13, &other.sym_g13),
            c42: &self.c42 - &other.c42,
            g42: &self.g42 - &other.g42,
            div_g42: &self.div_g42 - &other.div_g42,
            sym_g42: sub6(&self.sym_g42, &other.sym_g42),
            kappa: &self.kappa - &other.kappa,
            grad_kappa: &self.grad_kappa - &other.grad_kappa,
            radii: self.radii,
        })
    }

    /// Flips the sign of one group of terms (negative control).
    pub fn negate_term(mut self, term: QTerm) -> Self {
        let m = re(-1.0);
        match term {
            QTerm::Scalar13 => self.c13 = self.c13.scale(m),
            QTerm::Scalar42 => self.c42 = self.c42.scale(m),
            QTerm::Gradient13 => {
                self.g13 = self.g13.scale(m);
                self.div_g13 = self.div_g13.scale(m);
                self.sym_g13 = scaled6(&self.sym_g13, m);
            }
            QTerm::Gradient42 => {
                self.g42 = self.g42.scale(m);
                self.div_g42 = self.div_g42.scale(m);
                self.sym_g42 = scaled6(&self.sym_g42, m);
            }
            QTerm::Kappa => {
                self.kappa = self.kappa.scale(m);
                self.grad_kappa = self.grad_kappa.scale(m);
            }
        }
        self
    }

    pub fn grid(&self) -> Grid3 {
        self.c13.grid()
    }
}

/// Products of dealiased components, optionally modulated by a lattice mode.
struct Products {
    w: Vec<ScalarField>,
    phi: Vec<ScalarField>,
    phase: Option<ScalarField>,
}

impl Products {
    fn new(w: &Field8, phi: &Field8, phase: Option<ScalarField>) -> Self {
        let t = |f: &Field8| (0..8).map(|j| truncate_two_thirds(f.component(j))).collect();
        Self { w: t(w), phi: t(phi), phase }
    }

    fn p(&self, i: usize, j: usize) -> ScalarField {
        let mut out = self.w[i].mul_pointwise(&self.phi[j]);
        if let Some(ph) = &self.phase {
            out = out.mul_pointwise(ph);
        }
        out
    }
}

fn integrate(coef: &ScalarField, f: &ScalarField) -> C64 {
    coef.mul_pointwise(f).integral()
}

fn integrate_vec(coef: &VectorField, f: &VectorField) -> C64 {
    (0..3).map(|a| integrate(&coef.c[a], &f.c[a])).sum()
}

/// One block of the weak form: scalar slot `s`, vector slot starting at `v`.
fn block_form(pr: &Products, s: usize, v: usize, c: &ScalarField, g: &VectorField) -> C64 {
    let ss = pr.p(s, s);
    let mut vv = pr.p(v, v);
    for a in 1..3 {
        vv = &vv + &pr.p(v + a, v + a);
    }
    // Row-wise divergence of the symmetric matrix u φᵀ + φ uᵀ.
    let rows: Vec<ScalarField> = (0..3)
        .map(|a| {
            let row = VectorField::new(
                &pr.p(v + a, v) + &pr.p(v, v + a),
                &pr.p(v + a, v + 1) + &pr.p(v + 1, v + a),
                &pr.p(v + a, v + 2) + &pr.p(v + 2, v + a),
            );
            spectral_divergence(&row)
        })
        .collect();
    let grad = spectral_gradient(&(&ss - &vv));
    let bracket = VectorField::new(&grad.c[0] + &rows[0], &grad.c[1] + &rows[1], &grad.c[2] + &rows[2]);
    integrate(c, &(&ss + &vv)) + integrate_vec(g, &bracket)
}

fn kappa_form(q: &WeakPotential, pr: &Products) -> C64 {
    let field = match q.kind {
        PotentialKind::Q => {
            let j = |a: usize| &(&pr.p(0, 1 + a) + &pr.p(1 + a, 0)) + &(&pr.p(4 + a, 7) + &pr.p(7, 4 + a));
            spectral_divergence(&VectorField::new(j(0), j(1), j(2))).scale(-2.0 * I)
        }
        PotentialKind::Qtilde => {
            // (w₃∧φ₂ − w₂∧φ₃)_a
            let k = |a: usize| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let w3p2 = &pr.p(4 + b, 1 + c) - &pr.p(4 + c, 1 + b);
                let w2p3 = &pr.p(1 + b, 4 + c) - &pr.p(1 + c, 4 + b);
                &w3p2 - &w2p3
            };
            spectral_divergence(&VectorField::new(k(0), k(1), k(2))).scale(2.0 * I)
        }
    };
    integrate(&q.kappa, &field)
}

fn bilinear(q: &WeakPotential, w: &Field8, phi: &Field8, phase: Option<ScalarField>) -> Result<C64, FieldError> {
    q.grid().check_same(&w.grid())?;
    w.grid().check_same(&phi.grid())?;
    let pr = Products::new(w, phi, phase);
    Ok(block_form(&pr, 0, 4, &q.c13, &q.g13) + block_form(&pr, 7, 1, &q.c42, &q.g42) + kappa_form(q, &pr))
}

/// ⟨Qw, φ⟩ evaluated from the weak display with spectral derivatives and
/// dealiased products.
pub fn q_bilinear(q: &WeakPotential, w: &Field8, phi: &Field8) -> Result<C64, FieldError> {
    bilinear(q, w, phi, None)
}

/// ⟨Q e^{ζ₁·x}U, e^{ζ₂·x}W⟩ with ζ₁ + ζ₂ = iρ: every product is formed as
/// e^{iρ·x}·(U_i W_j). `rho_lattice` is ρ in lattice units.
pub fn q_bilinear_modulated(
    q: &WeakPotential,
    u: &Field8,
    w: &Field8,
    rho_lattice: [i64; 3],
) -> Result<C64, FieldError> {
    let phase = ScalarField::plane_wave(q.grid(), rho_lattice);
    bilinear(q, u, w, Some(phase))
}

fn sym_times(s: &[ScalarField; 6], v: &VectorField) -> VectorField {
    // entries (xx, yy, zz, xy, xz, yz)
    let m = |a: usize, b: usize| -> &ScalarField {
        match (a.min(b), a.max(b)) {
            (0, 0) => &s[0],
            (1, 1) => &s[1],
            (2, 2) => &s[2],
            (0, 1) => &s[3],
            (0, 2) => &s[4],
            _ => &s[5],
        }
    };
    let row = |a: usize| {
        let mut out = m(a, 0).mul_pointwise(&v.c[0]);
        out = &out + &m(a, 1).mul_pointwise(&v.c[1]);
        &out + &m(a, 2).mul_pointwise(&v.c[2])
    };
    VectorField::new(row(0), row(1), row(2))
}

fn times(v: &VectorField, s: &ScalarField) -> VectorField {
    v.map_components(|c| c.mul_pointwise(s))
}

/// Strong form of a weak potential: the field F with ⟨F, φ⟩ = ⟨Qw, φ⟩.
pub fn q_strong_apply(q: &WeakPotential, w: &Field8) -> Field8 {
    let scalar_part = |c: &ScalarField, div_g: &ScalarField, f: &ScalarField| {
        c.zip_map(div_g, |c, d| c - d).mul_pointwise(f)
    };
    let vector_part = |c: &ScalarField, div_g: &ScalarField, sym: &[ScalarField; 6], f: &VectorField| {
        let diag = c.zip_map(div_g, |c, d| c + d);
        &times(f, &diag) - &sym_times(sym, f).scale(re(2.0))
    };
    let mut s1 = scalar_part(&q.c13, &q.div_g13, &w.s1);
    let mut v3 = vector_part(&q.c13, &q.div_g13, &q.sym_g13, &w.v3);
    let mut s4 = scalar_part(&q.c42, &q.div_g42, &w.s4);
    let mut v2 = vector_part(&q.c42, &q.div_g42, &q.sym_g42, &w.v2);
    let gk = &q.grad_kappa;
    let two_i = 2.0 * I;
    match q.kind {
        PotentialKind::Q => {
            s1 = &s1 + &gk.dot(&w.v2).scale(two_i);
            v2 = &v2 + &times(gk, &w.s1).scale(two_i);
            v3 = &v3 + &times(gk, &w.s4).scale(two_i);
            s4 = &s4 + &gk.dot(&w.v3).scale(two_i);
        }
        PotentialKind::Qtilde => {
            v2 = &v2 - &gk.cross(&w.v3).scale(two_i);
            v3 = &v3 + &gk.cross(&w.v2).scale(two_i);
        }
    }
    Field8::new(s1, v2, v3, s4)
}

/// Σ_j ∫∇w_j·∇φ_j − k²∫w·φ, the constant-coefficient part of the factorization.
fn helmholtz_form(w: &Field8, phi: &Field8, k: f64) -> (C64, C64) {
    let mut grad = C64::new(0.0, 0.0);
    let mut mass = C64::new(0.0, 0.0);
    for j in 0..8 {
        let gw = spectral_gradient(w.component(j));
        let gp = spectral_gradient(phi.component(j));
        grad += gw.dot(&gp).integral();
        mass += w.component(j).mul_pointwise(phi.component(j)).integral();
    }
    (grad, -k * k * mass)
}

/// Terms of the factorization identity ⟨Fw, Fφ⟩ + Σ∫∇w·∇φ − k²∫w·φ + ⟨Qw,φ⟩ = 0,
/// with F = 𝒫′ for Q and F = 𝒫 for Q̃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationTerms {
    pub first_order: C64,
    pub gradient: C64,
    pub mass: C64,
    pub potential: C64,
}

impl FactorizationTerms {
    pub fn residual(&self) -> f64 {
        let scale = [self.first_order, self.gradient, self.mass, self.potential]
            .iter()
            .map(|z| z.norm())
            .fold(f64::MIN_POSITIVE, f64::max);
        (self.first_order + self.gradient + self.mass + self.potential).norm() / scale
    }
}

pub fn factorization_terms(
    q: &WeakPotential,
    d: &DerivedMaterialFields,
    w: &Field8,
    phi: &Field8,
) -> Result<FactorizationTerms, FieldError> {
    let op = |f: &Field8| match q.kind {
        PotentialKind::Q => apply_pcal_prime(f, d),
        PotentialKind::Qtilde => apply_pcal(f, d),
    };
    let first_order = crate::fields::inner_product_l2(&op(w), &op(phi))?;
    let (gradient, mass) = helmholtz_form(w, phi, d.k);
    let potential = q_bilinear(q, w, phi)?;
    Ok(FactorizationTerms { first_order, gradient, mass, potential })
}

/// Relative residual of the factorization identity for the given kind.
pub fn factorization_residual(
    d: &DerivedMaterialFields,
    w: &Field8,
    phi: &Field8,
    kind: PotentialKind,
) -> Result<f64, FieldError> {
    let q = WeakPotential::new(kind, d);
    Ok(factorization_terms(&q, d, w, phi)?.residual())
}

/// X = (Φ/(γμ^{1/2}), γ^{1/2}E, μ^{1/2}H, Ψ/(γ^{1/2}μ)) with
/// Φ = (i/ω)∇·(γE) and Ψ = (i/ω)∇·(μH).
pub fn rescale_to_field8(e: &VectorField, h: &VectorField, d: &DerivedMaterialFields) -> Field8 {
    let io = I / d.omega;
    let big_phi = spectral_divergence(&times(e, &d.gamma)).scale(io);
    let big_psi = spectral_divergence(&times(h, &d.mu)).scale(io);
    let den_phi = d.gamma.mul_pointwise(&d.sqrt_mu);
    let den_psi = d.sqrt_gamma.mul_pointwise(&d.mu);
    Field8::new(
        big_phi.zip_map(&den_phi, |a, b| a / b),
        times(e, &d.sqrt_gamma),
        times(h, &d.sqrt_mu),
        big_psi.zip_map(&den_psi, |a, b| a / b),
    )
}

/// L² norms of ∇∧E − iωμH and ∇∧H + iωγE.
pub fn maxwell_residual(e: &VectorField, h: &VectorField, d: &DerivedMaterialFields) -> (f64, f64) {
    let iw = I * d.omega;
    let faraday = &spectral_curl(e) - &times(h, &d.mu).scale(iw);
    let ampere = &spectral_curl(h) + &times(e, &d.gamma).scale(iw);
    (faraday.norm_l2(), ampere.norm_l2())
}

/// Frequency at which the lattice mode m propagates in the background medium.
pub fn vacuum_omega(grid: Grid3, m: [i64; 3], eps0: f64, mu0: f64) -> f64 {
    let xi = grid.lattice_vector(m);
    (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt() / (eps0 * mu0).sqrt()
}

/// E = p e^{iξ·x} and the H given by Faraday's law at frequency ω,
/// H = (ξ∧p)/(ωμ₀) e^{iξ·x}. At ω = `vacuum_omega` this is a background
/// solution with H = (ε₀/μ₀)^{1/2}(d∧p)e^{ikd·x}.
pub fn plane_wave_fields(
    grid: Grid3,
    m: [i64; 3],
    p: [f64; 3],
    omega: f64,
    mu0: f64,
) -> (VectorField, VectorField) {
    let xi = grid.lattice_vector(m);
    let wave = ScalarField::plane_wave(grid, m);
    let q = [xi[1] * p[2] - xi[2] * p[1], xi[2] * p[0] - xi[0] * p[2], xi[0] * p[1] - xi[1] * p[0]];
    let e = VectorField::new(wave.scale(re(p[0])), wave.scale(re(p[1])), wave.scale(re(p[2])));
    let s = 1.0 / (omega * mu0);
    let h = VectorField::new(wave.scale(re(q[0] * s)), wave.scale(re(q[1] * s)), wave.scale(re(q[2] * s)));
    (e, h)
}
