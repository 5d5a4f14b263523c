//! One Brownian path through the Fourier reference scheme.

use stochastic_stokes::model::{Forcing, InitialData, Model, SchemeKind};
use stochastic_stokes::noise::{BrownianDriver, NoiseFamily, NoiseModel};
use stochastic_stokes::scheme::run_spectral;
use stochastic_stokes::spectral::SpectralData;

fn main() -> stochastic_stokes::Result<()> {
    let model = Model {
        nu: 1.0,
        t: 0.5,
        l: 1.0,
        u0: InitialData::Shear { amplitude: 1.0 },
        forcing: Forcing::zero(),
        noise: NoiseModel {
            family: NoiseFamily::GradientAugmented,
            sigma0: 0.5,
            sigma1: 0.5,
            c: 1.0,
        },
    };
    let data = SpectralData::new(&model, 16)?;
    let driver = BrownianDriver::new(1, model.t, 1024)?;
    let tr = run_spectral(&data, SchemeKind::Modified, model.t, driver.fine_increments(), &[256, 512, 768], &mut |_| Ok(()))?;
    for (n, u) in &tr.checkpoints {
        println!("step {n:>4}  |u| = {:.5}", u.l2_norm());
    }
    let s = &tr.run.state;
    println!("|P(T)| = {:.5}  |R(T)| = {:.5}", s.pressure_sum.l2_norm(), s.pseudo_pressure_sum.l2_norm());
    println!("divergence defect {:.1e}", tr.run.diagnostics.max_divergence_residual);
    Ok(())
}
