//! Scattering functional t(rho) over a lattice ball for a pair that differs
//! by a permittivity bump, and for an identical pair.
use maxcgo::cgo::AmplitudeVariant;
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};
use maxcgo::scattering::{max_abs_t, scatter_scan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let base = PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0));
    let other = base.clone().with_bump(Bump::new(Target::Eps, [0.0, 0.03, 0.0], 0.16, 0.05).with_order(3.0));
    let d1 = derive(&build_phantom(&base, grid)?)?;
    let d2 = derive(&build_phantom(&other, grid)?)?;
    for variant in [AmplitudeVariant::A, AmplitudeVariant::B] {
        let scan = scatter_scan(&d1, &d2, variant, 4.0)?;
        let same = scatter_scan(&d1, &d1, variant, 4.0)?;
        println!(
            "variant {variant}: {} samples, max |t| = {:.4e}, identical pair max |t| = {:.1e}",
            scan.len(),
            max_abs_t(&scan),
            max_abs_t(&same)
        );
        for s in scan.iter().filter(|s| s.rho.iter().map(|m| m.abs()).sum::<i64>() <= 1) {
            println!("  rho {:?}: t = {:.4e} {:+.4e}i", s.rho, s.t.re, s.t.im);
        }
    }
    Ok(())
}
