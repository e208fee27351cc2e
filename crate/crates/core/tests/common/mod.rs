//! Shared fixtures: the corpus and an independent oracle for the scattering
//! functional built from closed-form derivatives of the bump profiles and a
//! direct (FFT-free) Fourier sum.
#![allow(dead_code)]

use maxcgo::fields::{Grid3, C64};
use maxcgo::materials::{build_phantom, derive, Bump, DerivedMaterialFields, PhantomSpec, Target};
use maxcgo::scattering::{lattice_ball, Corpus, CorpusPair, CorpusPhantom};
use std::f64::consts::TAU;

pub const CORPUS_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/corpus.json");

pub fn corpus() -> Corpus {
    let text = std::fs::read_to_string(CORPUS_PATH).expect("corpus file");
    Corpus::from_json(&text).expect("corpus parses")
}

pub fn derived(spec: &PhantomSpec, grid: Grid3) -> DerivedMaterialFields {
    derive(&build_phantom(spec, grid).expect("valid phantom")).expect("derivable phantom")
}

pub fn corpus_pair(c: &Corpus, name: &str) -> (DerivedMaterialFields, DerivedMaterialFields) {
    let grid = c.grid().unwrap();
    let pair = c.pairs.iter().find(|p| p.name == name).expect("pair in corpus");
    let (a, b) = c.pair_specs(pair).expect("pair members exist");
    (derived(a, grid), derived(b, grid))
}

fn bump(target: Target, center: [f64; 3], radius: f64, amplitude: f64) -> Bump {
    Bump::new(target, center, radius, amplitude).with_order(3.0)
}

/// Phantom definitions of the corpus. The file stores these together with
/// the oracle values; the `corpus` test checks the two stay in sync.
pub fn corpus_phantoms() -> Vec<CorpusPhantom> {
    // Centers sit on grid nodes (h = 1/32) so the sampled contrast equals
    // the bump amplitude.
    let h = 1.0 / 32.0;
    let mu = bump(Target::Mu, [0.0, 0.0, 0.0], 0.18, 0.05);
    let eps = bump(Target::Eps, [0.0, h, 0.0], 0.16, 0.05);
    let eps_c = bump(Target::Eps, [0.0, 0.0, h], 0.16, 0.04);
    let sigma = bump(Target::Sigma, [h, 0.0, 0.0], 0.15, 0.05);
    let mu_neg = bump(Target::Mu, [0.0, h, 0.0], 0.15, -0.03);
    let eps_off = bump(Target::Eps, [h, 0.0, -h], 0.14, 0.06);
    let base = PhantomSpec::default;
    vec![
        CorpusPhantom { name: "mu".into(), spec: base().with_bump(mu.clone()) },
        CorpusPhantom { name: "mu_eps".into(), spec: base().with_bump(mu).with_bump(eps) },
        CorpusPhantom { name: "eps".into(), spec: base().with_bump(eps_c.clone()) },
        CorpusPhantom { name: "eps_sigma".into(), spec: base().with_bump(eps_c).with_bump(sigma) },
        CorpusPhantom { name: "mixed".into(), spec: base().with_bump(mu_neg).with_bump(eps_off) },
    ]
}

/// (name, first, second) of every corpus pair.
pub const CORPUS_PAIRS: [(&str, &str, &str); 5] = [
    ("eps_contrast", "mu", "mu_eps"),
    ("sigma_contrast", "eps", "eps_sigma"),
    ("mixed_contrast", "mu", "mixed"),
    ("equal_mu", "mu", "mu"),
    ("equal_mixed", "mixed", "mixed"),
];

pub const BALL_RADIUS: f64 = 8.0;
pub const CONTRAST_FLOOR: f64 = 0.05;
/// Detection threshold as a fraction of the smallest oracle value among the
/// pairs that must be detected.
pub const THRESHOLD_FRACTION: f64 = 0.5;

/// Radial profile p(t) = exp(−q t²/(1 − t²)) and its first two derivatives.
fn profile(t: f64, q: f64) -> (f64, f64, f64) {
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - t * t;
    let p = (-q * t * t / u).exp();
    let g1 = -2.0 * q * t / (u * u);
    let g2 = -2.0 * q * (1.0 + 3.0 * t * t) / (u * u * u);
    (p, p * g1, p * (g1 * g1 + g2))
}

/// Value, gradient and Laplacian of one bump at x.
fn bump_jet(b: &Bump, x: [f64; 3]) -> (f64, [f64; 3], f64) {
    let d = [x[0] - b.center[0], x[1] - b.center[1], x[2] - b.center[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let (p, p1, p2) = profile(r / b.radius, b.order);
    let a = b.amplitude;
    let f1 = a * p1 / b.radius;
    let f2 = a * p2 / (b.radius * b.radius);
    if r == 0.0 {
        return (a * p, [0.0; 3], 3.0 * f2);
    }
    (a * p, d.map(|c| f1 * c / r), f2 + 2.0 * f1 / r)
}

/// Closed-form α = ∇log γ, ∇·α and θ at x.
fn alpha_jet(spec: &PhantomSpec, x: [f64; 3]) -> ([C64; 3], C64, C64) {
    let mut gamma = C64::new(spec.eps0, 0.0);
    let mut grad = [C64::new(0.0, 0.0); 3];
    let mut lap = C64::new(0.0, 0.0);
    let mut mu = spec.mu0;
    for b in &spec.bumps {
        let (v, g, l) = bump_jet(b, x);
        let unit = match b.target {
            Target::Eps => C64::new(1.0, 0.0),
            Target::Sigma => C64::new(0.0, 1.0 / spec.omega),
            Target::Mu => {
                mu += v;
                continue;
            }
        };
        gamma += unit * v;
        for a in 0..3 {
            grad[a] += unit * g[a];
        }
        lap += unit * l;
    }
    let alpha = grad.map(|g| g / gamma);
    let grad_sq: C64 = grad.iter().map(|g| g * g).sum();
    let div = lap / gamma - grad_sq / (gamma * gamma);
    let theta = spec.omega * spec.omega * (gamma * mu - spec.eps0 * spec.mu0);
    (alpha, div, theta)
}

/// Gradient-form residual r_α sampled on the grid from closed-form derivatives.
pub fn oracle_residual_alpha(grid: Grid3, s1: &PhantomSpec, s2: &PhantomSpec) -> Vec<C64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let (a1, d1, t1) = alpha_jet(s1, x);
            let (a2, d2, t2) = alpha_jet(s2, x);
            let dot: C64 = (0..3).map(|k| (a2[k] - a1[k]) * (a2[k] + a1[k])).sum();
            dot - 4.0 * (t2 - t1) + 2.0 * (d2 - d1)
        })
        .collect()
}

/// (i/4) Σ r(x) e^{iρ·x} h³ for every ρ, by direct summation.
pub fn oracle_t(grid: Grid3, r: &[C64], rhos: &[[i64; 3]]) -> Vec<C64> {
    let n = grid.n();
    let h3 = grid.cell_volume();
    let dk = TAU / grid.box_length();
    rhos.iter()
        .map(|rho| {
            let table = |m: i64| -> Vec<C64> {
                (0..n).map(|j| C64::from_polar(1.0, dk * m as f64 * grid.coord(j))).collect()
            };
            let (ex, ey, ez) = (table(rho[0]), table(rho[1]), table(rho[2]));
            let mut sum = C64::new(0.0, 0.0);
            for k in 0..n {
                for j in 0..n {
                    let eyz = ey[j] * ez[k];
                    for i in 0..n {
                        sum += r[grid.index(i, j, k)] * ex[i] * eyz;
                    }
                }
            }
            0.25 * C64::new(0.0, 1.0) * sum * h3
        })
        .collect()
}

pub fn oracle_max_abs_t_a(grid: Grid3, s1: &PhantomSpec, s2: &PhantomSpec, ball_radius: f64) -> f64 {
    let r = oracle_residual_alpha(grid, s1, s2);
    oracle_t(grid, &r, &lattice_ball(ball_radius)).iter().map(|t| t.norm()).fold(0.0, f64::max)
}

pub fn gamma_contrast(a: &DerivedMaterialFields, b: &DerivedMaterialFields) -> f64 {
    (&b.gamma - &a.gamma).max_abs()
}

/// Builds the corpus from [`corpus_phantoms`] and [`CORPUS_PAIRS`], running
/// the oracle for every pair.
pub fn build_corpus(n: usize, length: f64) -> Corpus {
    let grid = Grid3::new(n, length).unwrap();
    let phantoms = corpus_phantoms();
    let find = |name: &str| &phantoms.iter().find(|p| p.name == name).unwrap().spec;
    let pairs: Vec<CorpusPair> = CORPUS_PAIRS
        .iter()
        .map(|&(name, a, b)| {
            let (sa, sb) = (find(a), find(b));
            CorpusPair {
                name: name.into(),
                first: a.into(),
                second: b.into(),
                gamma_contrast: gamma_contrast(&derived(sa, grid), &derived(sb, grid)),
                oracle_max_abs_t_a: oracle_max_abs_t_a(grid, sa, sb, BALL_RADIUS),
            }
        })
        .collect();
    let smallest = pairs
        .iter()
        .filter(|p| p.gamma_contrast >= CONTRAST_FLOOR)
        .map(|p| p.oracle_max_abs_t_a)
        .fold(f64::INFINITY, f64::min);
    Corpus {
        n,
        length,
        ball_radius: BALL_RADIUS,
        contrast_floor: CONTRAST_FLOOR,
        detection_threshold: THRESHOLD_FRACTION * smallest,
        phantoms,
        pairs,
    }
}
