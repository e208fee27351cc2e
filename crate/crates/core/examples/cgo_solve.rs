//! Solves the CGO remainder for both amplitude variants and reports the
//! solver diagnostics and the vanishing of the limit amplitude.
use maxcgo::cgo::{amplitudes, assemble_w1, make_directions, solve_remainder, AmplitudeVariant, SolverOptions, Zeta};
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};
use maxcgo::operators::{PotentialKind, WeakPotential};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let spec = PhantomSpec::default()
        .with_bump(Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0))
        .with_bump(Bump::new(Target::Eps, [0.0, 0.03, 0.0], 0.16, 0.05).with_order(3.0));
    let d = derive(&build_phantom(&spec, grid)?)?;
    let q = WeakPotential::new(PotentialKind::Q, &d);
    let rho = grid.lattice_vector([1, 0, 0]);
    for s in [4.0, 16.0] {
        let dir = make_directions(rho, [0.0, 1.0, 0.0], s, d.k)?;
        for variant in [AmplitudeVariant::A, AmplitudeVariant::B] {
            let amp = amplitudes(&dir, variant);
            let sol = solve_remainder(&q, &amp.a_zeta1, &dir, Zeta::One, &SolverOptions::default())?;
            let w1 = assemble_w1(&sol, &d);
            println!(
                "s = {s:>4} variant {variant}: {} iterations, contraction {:.3}, |R| = {:.3e}, vanishing ratio {:.3e}",
                sol.iterations,
                sol.max_contraction(),
                sol.xnorm_half_localized,
                w1.vanishing_ratio()
            );
        }
    }
    Ok(())
}
