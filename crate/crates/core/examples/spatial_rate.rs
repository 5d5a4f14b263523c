//! Spatial rate of the modified scheme with gradient-augmented noise.

use stochastic_stokes::harness::{converge_space, ExperimentConfig};

fn main() -> stochastic_stokes::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [noise]
        family = "gradient-augmented"
        c = 1.0
        [discretization]
        scheme = "modified"
        M_list = [128]
        n_list = [4, 8, 16]
        M_ref = 128
        N_modes = 16
        [experiment]
        samples = 16
        q_list = [2]
        "#,
    )?;
    let report = converge_space(&cfg)?;
    for r in &report.reports {
        println!(
            "h = {:.4}  velocity {:.3e}  P {:.3e}  R {:.3e}",
            r.h, r.velocity[0].value, r.pressure_p[0].value, r.pressure_r[0].value
        );
    }
    for c in &report.checks {
        println!("{} {} = {:.3}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
    }
    Ok(())
}
