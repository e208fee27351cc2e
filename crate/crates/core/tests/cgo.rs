use maxcgo::cgo::*;
use maxcgo::fields::*;
use maxcgo::materials::{build_phantom, derive, Bump, DerivedMaterialFields, PhantomSpec, Target};
use maxcgo::operators::{p_symbol, q_strong_apply, PotentialKind, WeakPotential};
use proptest::prelude::*;

fn mu_bump(n: usize, amplitude: f64, radius: f64) -> DerivedMaterialFields {
    let spec = PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.0; 3], radius, amplitude).with_order(3.0));
    derive(&build_phantom(&spec, Grid3::new(n, 1.0).unwrap()).unwrap()).unwrap()
}

fn eps_bump(n: usize) -> DerivedMaterialFields {
    let spec = PhantomSpec::default()
        .with_bump(Bump::new(Target::Eps, [0.0; 3], 0.16, 0.05).with_order(3.0))
        .with_bump(Bump::new(Target::Sigma, [0.0; 3], 0.15, 0.05).with_order(3.0));
    derive(&build_phantom(&spec, Grid3::new(n, 1.0).unwrap()).unwrap()).unwrap()
}

fn direction(d: &DerivedMaterialFields, s: f64) -> CgoDirection {
    make_directions(d.grid.lattice_vector([1, 0, 0]), [0.0, 1.0, 0.0], s, d.k).unwrap()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

proptest! {
    #[test]
    fn complex_frequencies_satisfy_the_cgo_algebra(
        rho in prop::array::uniform3(-20.0f64..20.0),
        seed in prop::array::uniform3(-1.0f64..1.0),
        s in 1.0f64..64.0,
        k in 0.1f64..3.0,
    ) {
        prop_assume!(dot(rho, rho) > 1e-2);
        let d = match make_directions(rho, seed, s, k) {
            Ok(d) => d,
            Err(CgoError::ParallelSeed) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let scale = 1.0 + s * s + dot(rho, rho);
        for which in [Zeta::One, Zeta::Two] {
            let z = d.zeta(which);
            let (re, im) = (d.re_zeta(which), d.im_zeta(which));
            prop_assert!((cdot(z, z) + k * k).norm() < 1e-13 * scale);
            prop_assert!(dot(re, im).abs() < 1e-13 * scale);
            prop_assert!((dot(re, re) - dot(im, im) + k * k).abs() < 1e-13 * scale);
            prop_assert!((cnorm(z) - (2.0 * s * s + k * k + 0.5 * dot(rho, rho)).sqrt()).abs() < 1e-12 * scale);
        }
        for a in 0..3 {
            prop_assert!((d.zeta1[a] + d.zeta2[a] - C64::new(0.0, rho[a])).norm() < 1e-13 * scale);
        }
        prop_assert!((dot(d.eta1, rho)).abs() < 1e-12 * scale);
        prop_assert!((dot(d.rho_hat, rho) - dot(rho, rho).sqrt()).abs() < 1e-12 * scale);
    }
}

#[test]
fn invalid_directions_are_rejected() {
    assert!(matches!(make_directions([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.5, 1.0), Err(CgoError::InvalidS(_))));
    assert!(matches!(make_directions([0.0; 3], [0.0, 1.0, 0.0], 2.0, 1.0), Err(CgoError::ZeroRho)));
    assert!(matches!(make_directions([1.0, 0.0, 0.0], [2.0, 0.0, 0.0], 2.0, 1.0), Err(CgoError::ParallelSeed)));
    let bad = CgoDirection::with_frame([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0, 1.0);
    assert!(matches!(bad, Err(CgoError::BadFrame)));
    let zero = CgoDirection::with_frame([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0, 1.0).unwrap();
    assert_eq!(zero.rho_hat, [0.0, 0.0, 1.0]);
}

#[test]
fn direction_at_rotates_eta1_in_the_plane_orthogonal_to_rho() {
    let rho = [0.0, 0.0, 6.0];
    let a = direction_at(rho, 0.0, 4.0, 1.0).unwrap();
    let b = direction_at(rho, std::f64::consts::FRAC_PI_2, 4.0, 1.0).unwrap();
    assert!((dot(a.eta2, b.eta1) - 1.0).abs() < 1e-14);
    assert!(dot(a.eta1, rho).abs() < 1e-14 && dot(b.eta1, rho).abs() < 1e-14);
    let (e1, e2) = orthogonal_frame([1.0, 2.0, 3.0]);
    assert!(dot(e1, e2).abs() < 1e-15 && dot(e1, [1.0, 2.0, 3.0]).abs() < 1e-14);
    assert_eq!("b".parse::<AmplitudeVariant>().unwrap(), AmplitudeVariant::B);
    assert!("c".parse::<AmplitudeVariant>().is_err());
}

#[test]
fn amplitudes_satisfy_the_vanishing_conditions_and_converge_to_their_limits() {
    let rho = [6.0, 0.0, 0.0];
    for variant in [AmplitudeVariant::A, AmplitudeVariant::B] {
        let mut gaps = Vec::new();
        for s in [4.0, 16.0, 64.0, 256.0] {
            let dir = make_directions(rho, [0.0, 1.0, 0.0], s, 1.0).unwrap();
            let amp = amplitudes(&dir, variant);
            let (c1, c4) = amp.vanishing_conditions(&dir);
            assert!(c1.norm() < 1e-14 && c4.norm() < 1e-14);
            assert_eq!((amp.a_zeta2[0], amp.a_zeta2[7]), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
            let mut b = p_symbol(dir.zeta2, &amp.a_zeta2);
            for (j, v) in b.iter_mut().enumerate() {
                *v -= dir.k * amp.a_zeta2[j];
            }
            assert_eq!(b, amp.b_zeta2);
            gaps.push(amp.limit_gap());
        }
        assert!(gaps.windows(2).all(|w| w[1] < 0.5 * w[0]), "{variant}: {gaps:?}");
        assert!(gaps[3] < 2e-2, "{variant}: {gaps:?}");
    }
}

#[test]
fn faddeev_solve_inverts_the_conjugated_laplacian() {
    let g = Grid3::new(16, 1.0).unwrap();
    let dir = make_directions(g.lattice_vector([1, 0, 0]), [0.0, 1.0, 0.0], 3.0, 1.0).unwrap();
    let f = Field8::from_components(
        (0..8).map(|j| ScalarField::plane_wave(g, [1 + j as i64 % 3, 2, -1]).scale(C64::new(1.0, j as f64))).collect(),
    );
    let (u, floored) = faddeev_solve(&f, &dir, Zeta::One, 1e-6);
    assert!(floored >= 1);
    let zeta = dir.zeta1;
    let applied = u.map_components(|c| {
        let grad = spectral_gradient(c);
        let z_grad = &(&grad.c[0].scale(zeta[0]) + &grad.c[1].scale(zeta[1])) + &grad.c[2].scale(zeta[2]);
        &spectral_laplacian(c).scale(C64::new(-1.0, 0.0)) - &z_grad.scale(C64::new(2.0, 0.0))
    });
    assert!((&applied - &f).max_abs() < 1e-12 * f.max_abs());
    let xi = g.lattice_vector([1, 2, -1]);
    let p = faddeev_multiplier(&dir, Zeta::One, xi);
    let expect = dot(xi, xi) - 2.0 * C64::new(0.0, 1.0) * (zeta[0] * xi[0] + zeta[1] * xi[1] + zeta[2] * xi[2]);
    assert!((p - expect).norm() < 1e-12);
}

#[test]
fn xnorm_of_a_plane_wave_is_its_weight() {
    let g = Grid3::new(16, 1.0).unwrap();
    let dir = make_directions(g.lattice_vector([1, 0, 0]), [0.0, 0.0, 1.0], 5.0, 1.0).unwrap();
    let m = [2, -1, 3];
    let mut w = Field8::zeros(g);
    w.s1 = ScalarField::plane_wave(g, m);
    let p = faddeev_multiplier(&dir, Zeta::Two, g.lattice_vector(m));
    for b in [-0.5, 0.5, 1.0] {
        let expect = (cnorm(dir.zeta2) + p.norm()).powf(b);
        assert!((xnorm(&w, &dir, Zeta::Two, b) - expect).abs() < 1e-12 * expect);
        let dotted = p.norm().powf(b);
        assert!((xdotnorm(&w, &dir, Zeta::Two, b, 1e-6) - dotted).abs() < 1e-12 * dotted);
    }
    let probe = CarlemanProbe { m: 1.0, tau: 10.0, r_support: 0.5 };
    assert!(probe.in_regime());
    assert!(!CarlemanProbe { m: 1.0, tau: 3.0, r_support: 0.5 }.in_regime());
    let f = ScalarField::plane_wave(g, m);
    let expect = probe.multiplier(g.lattice_vector(m));
    assert!((ynorm(&f, &probe, 1.0) - expect).abs() < 1e-12 * expect);
}

#[test]
fn background_remainder_is_zero() {
    let spec = PhantomSpec::default();
    let d = derive(&build_phantom(&spec, Grid3::new(16, 1.0).unwrap()).unwrap()).unwrap();
    let dir = direction(&d, 4.0);
    let amp = amplitudes(&dir, AmplitudeVariant::A);
    let q = WeakPotential::new(PotentialKind::Q, &d);
    let sol = solve_remainder(&q, &amp.a_zeta1, &dir, Zeta::One, &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.remainder.max_abs(), 0.0);
    assert_eq!(sol.iterations, 1);
    assert!(sol.excluded_modes.contains(&[0, 0, 0]));
    assert!(sol.excluded_modes.contains(&[-1, 0, 0]));
}

/// Checks (−Δ − 2ζ·∇ + Q)R + QA = 0 inside r_Ω″ with spectral derivatives
/// applied directly to the returned remainder.
fn interior_equation_residual(d: &DerivedMaterialFields, kind: PotentialKind, which: Zeta, s: f64) -> f64 {
    let dir = direction(d, s);
    let amp = amplitudes(&dir, AmplitudeVariant::A);
    let a = if which == Zeta::One { amp.a_zeta1 } else { amp.a_zeta2 };
    let q = WeakPotential::new(kind, d);
    let sol = solve_remainder(&q, &a, &dir, which, &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    let zeta = dir.zeta(which);
    let r = &sol.remainder;
    let lr = r.map_components(|c| {
        let grad = spectral_gradient(c);
        let z_grad = &(&grad.c[0].scale(zeta[0]) + &grad.c[1].scale(zeta[1])) + &grad.c[2].scale(zeta[2]);
        &spectral_laplacian(c).scale(C64::new(-1.0, 0.0)) - &z_grad.scale(C64::new(2.0, 0.0))
    });
    let total = &Field8::constant(d.grid, &a) + r;
    let eq = &lr + &q_strong_apply(&q, &total);
    let qa = q_strong_apply(&q, &Field8::constant(d.grid, &a));
    let grid = d.grid;
    let inside = |i: usize| grid.radius(i) < d.radii.r_omega_dblprime;
    eq.norm_l2_where(inside) / qa.norm_l2_where(inside)
}

#[test]
fn remainder_solves_its_equation_inside_the_largest_ball() {
    let d = mu_bump(32, 0.05, 0.18);
    assert!(interior_equation_residual(&d, PotentialKind::Q, Zeta::One, 8.0) < 1e-9);
    let e = eps_bump(32);
    assert!(interior_equation_residual(&e, PotentialKind::Qtilde, Zeta::Two, 8.0) < 1e-9);
}

#[test]
fn weak_bump_solve_contracts_and_localizes() {
    let d = mu_bump(32, 0.05, 0.18);
    let dir = direction(&d, 8.0);
    let amp = amplitudes(&dir, AmplitudeVariant::B);
    let opts = SolverOptions::default();
    let sol = solve_remainder(&WeakPotential::new(PotentialKind::Q, &d), &amp.a_zeta1, &dir, Zeta::One, &opts).unwrap();
    assert!(sol.converged && sol.iterations <= 10);
    assert!(sol.max_contraction() < 0.5);
    assert!(sol.substitution_residual < 10.0 * opts.tol);
    assert_eq!(sol.exterior_max(d.radii.r_omega_dblprime), 0.0);
    assert!(sol.xnorm_half > 0.0 && sol.qa_norm > 0.0);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let d = mu_bump(16, 0.05, 0.18);
    let dir = direction(&d, 8.0);
    let amp = amplitudes(&dir, AmplitudeVariant::A);
    let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
    let sol = solve_remainder(&WeakPotential::new(PotentialKind::Q, &d), &amp.a_zeta1, &dir, Zeta::One, &opts).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iterations, 2);
}

#[test]
fn strong_potential_at_small_s_diverges() {
    let d = mu_bump(32, 5.0, 0.15);
    let dir = direction(&d, 1.0);
    let amp = amplitudes(&dir, AmplitudeVariant::A);
    let err = solve_remainder(&WeakPotential::new(PotentialKind::Q, &d), &amp.a_zeta1, &dir, Zeta::One, &SolverOptions::default())
        .unwrap_err();
    match err {
        CgoError::Diverged { s, history, .. } => {
            assert_eq!(s, 1.0);
            assert!(history.iter().rev().take(3).all(|&r| r >= 1.0));
        }
        other => panic!("expected divergence, got {other}"),
    }
}

#[test]
fn second_solution_decouples_and_assembles() {
    let d = eps_bump(32);
    let dir = direction(&d, 8.0);
    for variant in [AmplitudeVariant::A, AmplitudeVariant::B] {
        let amp = amplitudes(&dir, variant);
        let q = WeakPotential::new(PotentialKind::Qtilde, &d);
        let sol = solve_remainder(&q, &amp.a_zeta2, &dir, Zeta::Two, &SolverOptions::default()).unwrap();
        let v2 = assemble_v2(&sol, &d).unwrap();
        assert_eq!(v2.decoupling, 0.0);
        assert_eq!(v2.b, amp.b_zeta2);
        // Aliasing of products at n = 32 (measured 4e-3 to 7e-3).
        assert!(v2.s_residual < 2e-2, "{variant}: {}", v2.s_residual);
    }
}

#[test]
fn first_solution_has_small_scalar_components() {
    let d = mu_bump(32, 0.05, 0.18);
    let q = WeakPotential::new(PotentialKind::Q, &d);
    let mut ratios = Vec::new();
    for s in [4.0, 16.0] {
        let dir = direction(&d, s);
        let amp = amplitudes(&dir, AmplitudeVariant::A);
        let sol = solve_remainder(&q, &amp.a_zeta1, &dir, Zeta::One, &SolverOptions::default()).unwrap();
        let w1 = assemble_w1(&sol, &d);
        assert!(w1.constant_part[0].norm() < 1e-14 && w1.constant_part[7].norm() < 1e-14);
        ratios.push(w1.vanishing_ratio());
    }
    assert!(ratios[0] < 1e-4 && ratios[1] < ratios[0], "{ratios:?}");
}

#[test]
fn carleman_ratio_rejects_zero_fields_and_is_scale_invariant() {
    let d = mu_bump(16, 0.05, 0.18);
    let q = WeakPotential::new(PotentialKind::Q, &d);
    let dir = direction(&d, 8.0);
    assert!(matches!(carleman_ratio(&Field8::zeros(d.grid), &dir, Zeta::One, &q), Err(CgoError::ZeroDenominator)));
    let chi = radial_cutoff(d.grid, 0.2, 0.3);
    let u = Field8::constant(d.grid, &[C64::new(1.0, 0.5); 8]).map_components(|c| c.mul_pointwise(&chi));
    let r1 = carleman_ratio(&u, &dir, Zeta::One, &q).unwrap();
    let r2 = carleman_ratio(&u.scale(C64::new(0.0, 3.0)), &dir, Zeta::One, &q).unwrap();
    assert!((r1 - r2).abs() < 1e-12 * r1);
}

#[test]
fn decay_scan_is_seeded_and_averaged_per_level() {
    let d = mu_bump(16, 0.05, 0.18);
    let cfg = DecayScanConfig {
        rho: d.grid.lattice_vector([1, 0, 0]),
        variant: AmplitudeVariant::A,
        levels: vec![2.0, 4.0],
        samples_per_level: 2,
        seed: 11,
        solver: SolverOptions::default(),
    };
    let rows = decay_scan(&d, &cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows, decay_scan(&d, &cfg).unwrap());
    for r in &rows {
        assert!(r.s >= r.level && r.s <= 2.0 * r.level);
    }
    let means = level_means(&rows);
    assert_eq!(means.len(), 2);
    let expect = 0.5 * (rows[0].r_norm_sq + rows[1].r_norm_sq);
    assert!((means[0].r_norm_sq - expect).abs() < 1e-15 * expect);
    let csv = decay_scan_csv(&rows);
    assert!(csv.starts_with("level,sample_index,s,eta1_x,eta1_y,eta1_z,"));
    assert_eq!(csv.lines().count(), 5);
}
