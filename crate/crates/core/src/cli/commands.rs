use super::checks::{checks_csv, operator_suite};
use super::{CliError, Command, CommandReport, RunContext};
use crate::cgo::{
    amplitudes, assemble_v2, assemble_w1, decay_scan, decay_scan_csv, level_means, make_directions, solve_remainder,
    AmplitudeVariant, CgoError, DecayScanConfig, Zeta,
};
use crate::fields::{Grid3, ScalarField};
use crate::materials::{build_phantom, derive, DerivedMaterialFields, MaterialSet};
use crate::operators::{PotentialKind, WeakPotential};
use crate::scattering::{
    assemble_uniqueness_coeffs, equivalence_residual, max_abs_t, residual_alpha_field, residual_beta_field,
    scatter_csv, scatter_scan, t_from_residual,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub(super) fn dispatch(cmd: Command, ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    match cmd {
        Command::Phantom => phantom(ctx),
        Command::CheckOps => check_ops(ctx),
        Command::CgoSolve => cgo_solve(ctx),
        Command::DecayScan => decay(ctx),
        Command::ScatterScan => scatter(ctx),
        Command::Uniqueness => uniqueness(ctx),
    }
}

struct Pair {
    grid: Grid3,
    sets: [MaterialSet; 2],
    derived: [DerivedMaterialFields; 2],
    /// The two phantoms are the same specification.
    equal: bool,
}

fn load_pair(ctx: &RunContext) -> Result<Pair, CliError> {
    let grid = ctx.config.grid()?;
    let s1 = build_phantom(&ctx.config.phantom(1), grid)?;
    let s2 = build_phantom(&ctx.config.phantom(2), grid)?;
    let equal = s1.spec == s2.spec;
    ctx.log(format!("grid n = {}, L = {}; phantoms {}", grid.n(), grid.box_length(), if equal { "equal" } else { "distinct" }));
    let d1 = derive(&s1)?;
    let d2 = derive(&s2)?;
    Ok(Pair { grid, sets: [s1, s2], derived: [d1, d2], equal })
}

fn real_range(f: &ScalarField) -> [f64; 2] {
    f.data().iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v.re), hi.max(v.re)])
}

fn phantom(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let count = if pair.equal { 1 } else { 2 };
    let mut summary = Vec::new();
    for j in 0..count {
        let (m, d) = (&pair.sets[j], &pair.derived[j]);
        let p = format!("phantom{}", j + 1);
        ctx.write_scalar(&format!("{p}_mu.cgo"), &m.mu)?;
        ctx.write_scalar(&format!("{p}_eps.cgo"), &m.eps)?;
        ctx.write_scalar(&format!("{p}_sigma.cgo"), &m.sigma)?;
        ctx.write_scalar(&format!("{p}_gamma.cgo"), &d.gamma)?;
        ctx.write_vector(&format!("{p}_alpha.cgo"), &d.alpha)?;
        ctx.write_vector(&format!("{p}_beta.cgo"), &d.beta)?;
        ctx.write_scalar(&format!("{p}_kappa.cgo"), &d.kappa)?;
        ctx.write_scalar(&format!("{p}_theta.cgo"), &d.theta)?;
        summary.push(json!({
            "phantom": j + 1,
            "support_radius": d.support_radius,
            "radii": d.radii,
            "k": d.k,
            "lipschitz_a": d.lipschitz_a,
            "mu_range": real_range(&m.mu),
            "eps_range": real_range(&m.eps),
            "sigma_range": real_range(&m.sigma),
        }));
    }
    Ok(CommandReport { summary: json!({ "grid_n": pair.grid.n(), "phantoms": summary }), failures: Vec::new() })
}

fn check_ops(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let count = if pair.equal { 1 } else { 2 };
    let mut all = Vec::new();
    for j in 0..count {
        let mut checks = operator_suite(&pair.derived[j], ctx.config.samples, &ctx.config.thresholds, &mut rng);
        if count == 2 {
            for c in &mut checks {
                c.name = format!("phantom{}_{}", j + 1, c.name);
            }
        }
        all.extend(checks);
    }
    for c in &all {
        ctx.log(format!("{:<32} {:.3e} {}", c.name, c.value, if c.passed() { "pass" } else { "FAIL" }));
    }
    ctx.write_text("checks.csv", &checks_csv(&all))?;
    let failures = all.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
    Ok(CommandReport { summary: json!({ "checks": all }), failures })
}

fn solve_label(variant: AmplitudeVariant, s: f64) -> String {
    format!("{variant}_s{s}")
}

fn cgo_solve(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let [d1, d2] = &pair.derived;
    let cfg = ctx.config.clone();
    let rho = pair.grid.lattice_vector(cfg.direction.rho);
    let q1 = WeakPotential::new(PotentialKind::Q, d1);
    let qt2 = WeakPotential::new(PotentialKind::Qtilde, d2);
    let r_out = d1.radii.r_omega_dblprime.max(d2.radii.r_omega_dblprime);
    let t = &cfg.thresholds;
    let mut csv = String::from(
        "variant,s,iterations_1,max_contraction_1,substitution_1,exterior_1,xnorm_1,\
         iterations_2,max_contraction_2,substitution_2,exterior_2,decoupling,vanishing_ratio,s_residual\n",
    );
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &variant in &cfg.direction.variants {
        for &s in &cfg.direction.s_values {
            let dir = make_directions(rho, cfg.direction.eta1_seed, s, d1.k)?;
            let amp = amplitudes(&dir, variant);
            let label = solve_label(variant, s);
            ctx.log(format!("solving {label}"));
            let w1 = solve_remainder(&q1, &amp.a_zeta1, &dir, Zeta::One, &cfg.solver)?;
            let w2 = solve_remainder(&qt2, &amp.a_zeta2, &dir, Zeta::Two, &cfg.solver)?;
            for w in [&w1, &w2] {
                if !w.converged {
                    return Err(CgoError::Diverged { s, eta1: dir.eta1, history: w.contraction_history.clone() }.into());
                }
            }
            let v2 = assemble_v2(&w2, d2)?;
            let a1 = assemble_w1(&w1, d1);
            ctx.write_field8(&format!("remainder_zeta1_{label}.cgo"), &w1.remainder)?;
            ctx.write_field8(&format!("remainder_zeta2_{label}.cgo"), &w2.remainder)?;
            ctx.write_field8(&format!("s_zeta2_{label}.cgo"), &v2.s)?;
            let (ext1, ext2) = (w1.exterior_max(r_out), w2.exterior_max(r_out));
            let vanishing = a1.vanishing_ratio();
            csv.push_str(&format!(
                "{variant},{s},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                w1.iterations,
                w1.max_contraction(),
                w1.substitution_residual,
                ext1,
                w1.xnorm_half,
                w2.iterations,
                w2.max_contraction(),
                w2.substitution_residual,
                ext2,
                v2.decoupling,
                vanishing,
                v2.s_residual,
            ));
            for (name, bad) in [
                ("substitution_1", w1.substitution_residual >= 10.0 * cfg.solver.tol),
                ("substitution_2", w2.substitution_residual >= 10.0 * cfg.solver.tol),
                ("exterior_1", ext1 >= 1e-12),
                ("exterior_2", ext2 >= 1e-12),
                ("decoupling", v2.decoupling >= t.decoupling),
            ] {
                if bad {
                    failures.push(format!("{label}:{name}"));
                }
            }
            rows.push(json!({
                "variant": variant,
                "s": s,
                "eta1": dir.eta1,
                "iterations": [w1.iterations, w2.iterations],
                "max_contraction": [w1.max_contraction(), w2.max_contraction()],
                "substitution_residual": [w1.substitution_residual, w2.substitution_residual],
                "exterior_max": [ext1, ext2],
                "excluded_modes": [w1.excluded_modes.len(), w2.excluded_modes.len()],
                "decoupling": v2.decoupling,
                "vanishing_ratio": vanishing,
                "vanishing_within_threshold": vanishing < t.vanishing,
                "s_residual": v2.s_residual,
            }));
        }
    }
    ctx.write_text("diagnostics.csv", &csv)?;
    Ok(CommandReport { summary: json!({ "rho": cfg.direction.rho, "solves": rows }), failures })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn decay(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let d = &pair.derived[0];
    let cfg = ctx.config.clone();
    let mut summary = Vec::new();
    for &variant in &cfg.direction.variants {
        let scan = DecayScanConfig {
            rho: pair.grid.lattice_vector(cfg.direction.rho),
            variant,
            levels: cfg.decay.levels.clone(),
            samples_per_level: cfg.decay.samples,
            seed: cfg.seed,
            solver: cfg.solver.clone(),
        };
        ctx.log(format!("decay scan, variant {variant}"));
        let rows = decay_scan(d, &scan)?;
        let means = level_means(&rows);
        ctx.write_text(&format!("decay_{variant}.csv"), &decay_scan_csv(&rows))?;
        let mut table = String::from("level,r_norm_sq,qa_norm_sq,s_norm_sq\n");
        for m in &means {
            table.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", m.level, m.r_norm_sq, m.qa_norm_sq, m.s_norm_sq));
        }
        ctx.write_text(&format!("decay_means_{variant}.csv"), &table)?;
        let r: Vec<f64> = means.iter().map(|m| m.r_norm_sq).collect();
        let s: Vec<f64> = means.iter().map(|m| m.s_norm_sq).collect();
        summary.push(json!({
            "variant": variant,
            "means": means,
            "r_strictly_decreasing": strictly_decreasing(&r),
            "s_strictly_decreasing": strictly_decreasing(&s),
        }));
    }
    Ok(CommandReport { summary: json!({ "scans": summary }), failures: Vec::new() })
}

/// Agreement floor, relative to the largest |t| of the scan, below which a
/// sample counts as zero on both paths.
const CROSS_CHECK_FLOOR: f64 = 1e-9;

fn scatter(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let [d1, d2] = &pair.derived;
    let cfg = ctx.config.clone();
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for &variant in &cfg.scatter.variants {
        ctx.log(format!("scatter scan, variant {variant}, radius {}", cfg.scatter.radius));
        let samples = scatter_scan(d1, d2, variant, cfg.scatter.radius)?;
        ctx.write_text(&format!("scatter_{variant}.csv"), &scatter_csv(&samples))?;
        let max_t = max_abs_t(&samples);
        let residual = match variant {
            AmplitudeVariant::A => residual_alpha_field(d1, d2)?,
            AmplitudeVariant::B => residual_beta_field(d1, d2)?,
        };
        let floor = CROSS_CHECK_FLOOR * max_t;
        let cross = samples
            .iter()
            .map(|smp| {
                let other = t_from_residual(&residual, smp.rho);
                let scale = smp.t.norm().max(other.norm());
                if scale <= floor {
                    0.0
                } else {
                    (smp.t - other).norm() / scale
                }
            })
            .fold(0.0, f64::max);
        if pair.equal && max_t >= cfg.thresholds.equal_pair {
            failures.push(format!("equal_pair_{variant}"));
        }
        if cross >= 1e-6 {
            failures.push(format!("cross_check_{variant}"));
        }
        summary.push(json!({
            "variant": variant,
            "samples": samples.len(),
            "max_abs_t": max_t,
            "cross_check_max_relative": cross,
        }));
    }
    Ok(CommandReport { summary: json!({ "equal_pair": pair.equal, "scans": summary }), failures })
}

fn uniqueness(ctx: &mut RunContext) -> Result<CommandReport, CliError> {
    let pair = load_pair(ctx)?;
    let [d1, d2] = &pair.derived;
    let chain = ctx.config.thresholds.chain;
    let k = assemble_uniqueness_coeffs(d1, d2)?;
    for (name, f) in [
        ("coeff_v", &k.v),
        ("coeff_w", &k.w),
        ("coeff_a", &k.a),
        ("coeff_b", &k.b),
        ("coeff_c", &k.c),
        ("coeff_d", &k.d),
        ("omega_indicator", &k.indicator),
    ] {
        ctx.write_scalar(&format!("{name}.cgo"), f)?;
    }
    let r_alpha = residual_alpha_field(d1, d2)?;
    let r_beta = residual_beta_field(d1, d2)?;
    ctx.write_scalar("residual_alpha.cgo", &r_alpha)?;
    ctx.write_scalar("residual_beta.cgo", &r_beta)?;
    let f = &d2.sqrt_gamma - &d1.sqrt_gamma;
    let g = &d2.sqrt_mu - &d1.sqrt_mu;
    ctx.write_scalar("f.cgo", &f)?;
    ctx.write_scalar("g.cgo", &g)?;
    let eq = equivalence_residual(d1, d2)?;
    let gamma_zero = (eq.gamma_gradient < chain, eq.gamma_schrodinger < chain);
    let mu_zero = (eq.mu_gradient < chain, eq.mu_schrodinger < chain);
    let mut report = String::from("branch,gradient_norm,schrodinger_norm,relative_equivalence,gradient_zero,schrodinger_zero,consistent\n");
    for (name, grad, schr, rel, z) in [
        ("gamma", eq.gamma_gradient, eq.gamma_schrodinger, eq.gamma, gamma_zero),
        ("mu", eq.mu_gradient, eq.mu_schrodinger, eq.mu, mu_zero),
    ] {
        report.push_str(&format!("{name},{grad:.6e},{schr:.6e},{rel:.6e},{},{},{}\n", z.0, z.1, z.0 == z.1));
    }
    ctx.write_text("chain.csv", &report)?;
    let mut failures = Vec::new();
    if gamma_zero.0 != gamma_zero.1 {
        failures.push("chain_gamma".to_string());
    }
    if mu_zero.0 != mu_zero.1 {
        failures.push("chain_mu".to_string());
    }
    let f_norm = f.norm_l2();
    let g_norm = g.norm_l2();
    let t0 = t_from_residual(&r_alpha, [0, 0, 0]);
    Ok(CommandReport {
        summary: json!({
            "equal_pair": pair.equal,
            "equivalence": eq,
            "f_norm": f_norm,
            "g_norm": g_norm,
            "t_a_at_zero": [t0.re, t0.im],
            "indicator_integral": k.indicator.integral().re,
        }),
        failures,
    })
}
