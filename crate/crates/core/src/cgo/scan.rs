use super::assemble::assemble_v2;
use super::solver::{solve_remainder, SolverOptions};
use super::{amplitudes, orthogonal_frame, AmplitudeVariant, CgoDirection, CgoError, Zeta};
use crate::materials::DerivedMaterialFields;
use crate::operators::{PotentialKind, WeakPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayScanConfig {
    pub rho: [f64; 3],
    pub variant: AmplitudeVariant,
    /// Lower ends λ of the sampling intervals s ∈ [λ, 2λ].
    pub levels: Vec<f64>,
    pub samples_per_level: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

/// One (s, η₁) sample: squared norms ‖χR_ζ₁‖²_{X^{1/2}}, ‖Q₁A_ζ₁‖²_{X^{−1/2}}
/// and ‖S_ζ₂‖²_{X^{1/2}}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DecayRow {
    pub level: f64,
    pub sample_index: usize,
    pub s: f64,
    pub eta1: [f64; 3],
    pub r_norm_sq: f64,
    pub qa_norm_sq: f64,
    pub s_norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LevelMean {
    pub level: f64,
    pub r_norm_sq: f64,
    pub qa_norm_sq: f64,
    pub s_norm_sq: f64,
}

/// Direction with η₁ at angle φ in the plane orthogonal to ρ.
pub fn direction_at(rho: [f64; 3], phi: f64, s: f64, k: f64) -> Result<CgoDirection, CgoError> {
    let (e1, e2) = orthogonal_frame(rho);
    let (c, sn) = (phi.cos(), phi.sin());
    let eta1 = std::array::from_fn(|a| c * e1[a] + sn * e2[a]);
    let eta2 = std::array::from_fn(|a| -sn * e1[a] + c * e2[a]);
    CgoDirection::with_frame(rho, eta1, eta2, s, k)
}

fn sample_rng(seed: u64, level: usize, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | idx as u64);
    rng
}

fn sample(
    d: &DerivedMaterialFields,
    q1: &WeakPotential,
    q2: &WeakPotential,
    cfg: &DecayScanConfig,
    level: usize,
    idx: usize,
) -> Result<DecayRow, CgoError> {
    let lambda = cfg.levels[level];
    let mut rng = sample_rng(cfg.seed, level, idx);
    let s = rng.gen_range(lambda..=2.0 * lambda);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let dir = direction_at(cfg.rho, phi, s, d.k)?;
    let amp = amplitudes(&dir, cfg.variant);
    let w1 = solve_remainder(q1, &amp.a_zeta1, &dir, Zeta::One, &cfg.solver)?;
    let w2 = solve_remainder(q2, &amp.a_zeta2, &dir, Zeta::Two, &cfg.solver)?;
    let v2 = assemble_v2(&w2, d)?;
    Ok(DecayRow {
        level: lambda,
        sample_index: idx,
        s,
        eta1: dir.eta1,
        r_norm_sq: w1.xnorm_half_localized.powi(2),
        qa_norm_sq: w1.qa_norm.powi(2),
        s_norm_sq: super::xnorm(&v2.s, &dir, Zeta::Two, 0.5).powi(2),
    })
}

/// Averaged decay table: for each level λ, `samples_per_level` draws of
/// s ∈ [λ, 2λ] and η₁ on the circle orthogonal to ρ. Each draw has its own
/// seeded stream, so the table does not depend on the thread count.
pub fn decay_scan(d: &DerivedMaterialFields, cfg: &DecayScanConfig) -> Result<Vec<DecayRow>, CgoError> {
    let q1 = WeakPotential::new(PotentialKind::Q, d);
    let q2 = WeakPotential::new(PotentialKind::Qtilde, d);
    let jobs: Vec<(usize, usize)> = (0..cfg.levels.len())
        .flat_map(|l| (0..cfg.samples_per_level).map(move |i| (l, i)))
        .collect();
    jobs.par_iter().map(|&(l, i)| sample(d, &q1, &q2, cfg, l, i)).collect()
}

pub fn level_means(rows: &[DecayRow]) -> Vec<LevelMean> {
    let mut out: Vec<(LevelMean, usize)> = Vec::new();
    for r in rows {
        let pos = match out.iter().position(|(m, _)| m.level == r.level) {
            Some(p) => p,
            None => {
                out.push((LevelMean { level: r.level, r_norm_sq: 0.0, qa_norm_sq: 0.0, s_norm_sq: 0.0 }, 0));
                out.len() - 1
            }
        };
        let (m, n) = &mut out[pos];
        m.r_norm_sq += r.r_norm_sq;
        m.qa_norm_sq += r.qa_norm_sq;
        m.s_norm_sq += r.s_norm_sq;
        *n += 1;
    }
    out.into_iter()
        .map(|(mut m, n)| {
            let n = n as f64;
            m.r_norm_sq /= n;
            m.qa_norm_sq /= n;
            m.s_norm_sq /= n;
            m
        })
        .collect()
}

pub fn decay_scan_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("level,sample_index,s,eta1_x,eta1_y,eta1_z,r_norm_sq,qa_norm_sq,s_norm_sq\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.level, r.sample_index, r.s, r.eta1[0], r.eta1[1], r.eta1[2], r.r_norm_sq, r.qa_norm_sq, r.s_norm_sq
        ));
    }
    out
}
