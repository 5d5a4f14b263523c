//! Discrete inf-sup constants of the Taylor-Hood pair.

use stochastic_stokes::fem::{discrete_lbb_constant, TaylorHood};
use stochastic_stokes::TorusMesh;

fn main() -> stochastic_stokes::Result<()> {
    for n in [4, 8, 16] {
        let th = TaylorHood::new(TorusMesh::new(1.0, n)?)?;
        println!("n = {n:>2}  beta = {:.5}", discrete_lbb_constant(&th)?);
    }
    Ok(())
}
