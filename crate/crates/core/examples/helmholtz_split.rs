//! Split of gradient-augmented noise into a potential and a weakly
//! divergence-free remainder.

use stochastic_stokes::fem::TaylorHood;
use stochastic_stokes::noise::{helmholtz_split_fem, orthogonality_residual, FemNoise, NoiseFamily, NoiseModel};
use stochastic_stokes::TorusMesh;

fn main() -> stochastic_stokes::Result<()> {
    let noise = NoiseModel {
        family: NoiseFamily::GradientAugmented,
        sigma0: 0.5,
        sigma1: 0.0,
        c: 1.0,
    };
    for n in [8, 16] {
        let th = TaylorHood::new(TorusMesh::new(1.0, n)?)?;
        let b = FemNoise::new(&th, noise)?.eval(&th, &vec![0.0; th.velocity_dim()])?;
        let split = helmholtz_split_fem(&th, &b)?;
        println!(
            "n = {n:>2}  |grad xi| = {:.5}  |eta| = {:.5}  max |(eta, grad q)| = {:.2e}",
            th.p1_h1_seminorm(&split.xi),
            th.velocity_l2(&split.eta),
            orthogonality_residual(&th, &b, &split.xi)
        );
    }
    Ok(())
}
