//! Strong temporal rate of the spectral scheme on coupled paths.

use stochastic_stokes::harness::{converge_time, ExperimentConfig};

fn main() -> stochastic_stokes::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [discretization]
        M_list = [8, 16, 32, 64]
        M_ref = 1024
        N_modes = 16
        [experiment]
        samples = 40
        "#,
    )?;
    let report = converge_time(&cfg)?;
    for r in &report.reports {
        println!("M = {:>3}  e2 = {:.4e} +- {:.1e}", r.resolution.steps, r.velocity[0].value, r.velocity[0].se);
    }
    for f in &report.fits {
        if let Some(fit) = &f.fit {
            println!("{:<12} slope {:.3}  R2 {:.4}", f.name, fit.slope, fit.r2);
        }
    }
    Ok(())
}
