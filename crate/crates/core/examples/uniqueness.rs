//! Coefficients of the coupled Schrödinger system for a pair and the
//! equivalence between its residual and the gradient residuals.
use maxcgo::fields::Grid3;
use maxcgo::materials::{build_phantom, derive, Bump, PhantomSpec, Target};
use maxcgo::scattering::{assemble_uniqueness_coeffs, equivalence_residual};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid3::new(32, 1.0)?;
    let base = PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.0; 3], 0.18, 0.05).with_order(3.0));
    let pairs = [
        ("eps differs", base.clone().with_bump(Bump::new(Target::Eps, [0.0, 0.03, 0.0], 0.16, 0.05).with_order(3.0))),
        ("mu differs", PhantomSpec::default().with_bump(Bump::new(Target::Mu, [0.03, 0.0, 0.0], 0.15, 0.08).with_order(3.0))),
        ("identical", base.clone()),
    ];
    let d1 = derive(&build_phantom(&base, grid)?)?;
    for (label, spec) in pairs {
        let d2 = derive(&build_phantom(&spec, grid)?)?;
        let k = assemble_uniqueness_coeffs(&d1, &d2)?;
        let e = equivalence_residual(&d1, &d2)?;
        println!("{label}: |Omega| = {:.4}, max |a| = {:.3e}", k.indicator.integral().re, k.a.max_abs());
        println!("  gamma: schrodinger {:.3e}, gradient {:.3e}, mismatch {:.1e}", e.gamma_schrodinger, e.gamma_gradient, e.gamma);
        println!("  mu:    schrodinger {:.3e}, gradient {:.3e}, mismatch {:.1e}", e.mu_schrodinger, e.mu_gradient, e.mu);
    }
    Ok(())
}
