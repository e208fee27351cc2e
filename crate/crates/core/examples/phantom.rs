//! Builds a two-bump phantom, derives the Maxwell symbols and round-trips
//! them through CGO8F001 files.
use maxcgo::fields::{read_scalar, write_scalar, write_vector, Grid3};
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let spec = PhantomSpec { omega: 2.0, ..PhantomSpec::default() }
        .with_bump(Bump::new(Target::Mu, [0.03, 0.0, 0.0], 0.16, 0.05).with_order(3.0))
        .with_bump(Bump::new(Target::Eps, [0.0, 0.03, 0.0], 0.16, 0.1).with_order(3.0))
        .with_bump(Bump::new(Target::Sigma, [0.0, 0.0, 0.0], 0.12, 0.2).with_order(3.0));
    let ms = build_phantom(&spec, grid)?;
    let d = derive(&ms)?;
    println!("grid n = {}, h = {:.4}, k = {}", grid.n(), grid.spacing(), d.k);
    println!("support radius {:.3}, r_omega {:.3}", d.support_radius, d.radii.r_omega);
    println!("max |alpha| = {:.4e}, max |beta| = {:.4e}", d.alpha.max_abs(), d.beta.max_abs());
    println!("max |theta| = {:.4e}, Lipschitz bound {:.3}", d.theta.max_abs(), d.lipschitz_a);

    let dir = std::env::temp_dir().join("maxcgo-phantom-example");
    std::fs::create_dir_all(&dir)?;
    write_scalar(dir.join("gamma.cgo"), &d.gamma)?;
    write_vector(dir.join("alpha.cgo"), &d.alpha)?;
    let back = read_scalar(dir.join("gamma.cgo"))?;
    assert_eq!(back, d.gamma);
    println!("wrote {}", dir.display());
    Ok(())
}
