//! Averaged remainder norms over random CGO directions at increasing s.
use maxcgo::cgo::{decay_scan, level_means, AmplitudeVariant, DecayScanConfig, SolverOptions};
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let spec = PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0));
    let d = derive(&build_phantom(&spec, grid)?)?;
    let cfg = DecayScanConfig {
        rho: grid.lattice_vector([1, 0, 0]),
        variant: AmplitudeVariant::B,
        levels: vec![4.0, 8.0, 16.0],
        samples_per_level: 3,
        seed: 7,
        solver: SolverOptions::default(),
    };
    let rows = decay_scan(&d, &cfg)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "level", "|R|^2", "|QA|^2", "|S|^2");
    for m in level_means(&rows) {
        println!("{:>6} {:>12.4e} {:>12.4e} {:>12.4e}", m.level, m.r_norm_sq, m.qa_norm_sq, m.s_norm_sq);
    }
    Ok(())
}
