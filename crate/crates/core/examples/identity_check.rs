//! Full CGO pairing against the limit functional: the remainder terms shrink
//! as s grows.
use maxcgo::cgo::{direction_at, AmplitudeVariant, SolverOptions};
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};
use maxcgo::scattering::full_identity_check;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let base = PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0));
    let other = base.clone().with_bump(Bump::new(Target::Eps, [0.0, 0.03, 0.0], 0.16, 0.05).with_order(3.0));
    let d1 = derive(&build_phantom(&base, grid)?)?;
    let d2 = derive(&build_phantom(&other, grid)?)?;
    let rho = grid.lattice_vector([1, 0, 0]);
    for s in [4.0, 8.0, 16.0, 32.0] {
        let dir = direction_at(rho, 0.0, s, d1.k)?;
        let c = full_identity_check(&d1, &d2, &dir, AmplitudeVariant::B, &SolverOptions::default())?;
        println!(
            "s = {s:>4}: t = {:.4e}, full pairing = {:.4e}, remainder {:.3e}, decomposition gap {:.1e}",
            c.t.norm(),
            c.full_pairing.norm(),
            c.rhs.norm(),
            c.decomposition_gap
        );
    }
    Ok(())
}
