//! Without noise the shear mode decays like exp(-4 pi^2 t).

use std::f64::consts::PI;

use stochastic_stokes::fem::TaylorHood;
use stochastic_stokes::model::{Forcing, InitialData, Model, SchemeKind};
use stochastic_stokes::noise::NoiseModel;
use stochastic_stokes::scheme::FemScheme;
use stochastic_stokes::TorusMesh;

fn main() -> stochastic_stokes::Result<()> {
    let model = Model {
        nu: 1.0,
        t: 0.1,
        l: 1.0,
        u0: InitialData::Shear { amplitude: 1.0 },
        forcing: Forcing::zero(),
        noise: NoiseModel::zero(),
    };
    let steps = 200;
    for n in [4, 8, 16] {
        let th = TaylorHood::new(TorusMesh::new(1.0, n)?)?;
        let scheme = FemScheme::new(&th, &model, SchemeKind::Standard, steps)?;
        let tr = scheme.run(&vec![0.0; steps], &[], &mut |_| Ok(()))?;
        let exact = (-4.0 * PI * PI * model.t).exp() / 2f64.sqrt();
        let computed = th.velocity_l2(&tr.state.u);
        println!("n = {n:>2}  |u_h(T)| = {computed:.6}  |u(T)| = {exact:.6}");
    }
    Ok(())
}
