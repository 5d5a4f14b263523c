//! Time-averaged pressure errors of both schemes under step refinement.

use stochastic_stokes::harness::{compare_noise, ExperimentConfig};

fn main() -> stochastic_stokes::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [noise]
        family = "gradient-augmented"
        c = 1.0
        [discretization]
        M_list = [16, 32, 64]
        n_list = [8]
        M_ref = 1024
        N_modes = 16
        [experiment]
        samples = 16
        q_list = [2]
        "#,
    )?;
    let report = compare_noise(&cfg)?;
    for r in &report.reports {
        println!(
            "{:<8} M = {:>3}  err_P {:.4e}  err_R {:.4e}  k sum |grad r|^2 {:.4}",
            r.resolution.kind.name(),
            r.resolution.steps,
            r.pressure_p[0].value,
            r.pressure_r[0].value,
            r.mean_pseudo_pressure_gradient
        );
    }
    for c in &report.checks {
        println!("{} {} = {:.3}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
    }
    Ok(())
}
