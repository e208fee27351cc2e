//! Runs the operator invariant suite on a background medium and on a
//! permeability bump.
use maxcgo::cli::checks::operator_suite;
use maxcgo::cli::config::Thresholds;
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let bump = Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0);
    for (label, spec) in [
        ("background", PhantomSpec::default()),
        ("mu bump", PhantomSpec::default().with_bump(bump)),
    ] {
        let d = derive(&build_phantom(&spec, grid)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        println!("{label}:");
        for c in operator_suite(&d, 2, &Thresholds::default(), &mut rng) {
            println!("  {:<28} {:>12.4e}  {}", c.name, c.value, if c.passed() { "ok" } else { "FAIL" });
        }
    }
    Ok(())
}
