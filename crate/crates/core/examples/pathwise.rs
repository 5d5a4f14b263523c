//! Quantiles of K = max_n |e^n| / k^gamma1 across a step ladder.

use stochastic_stokes::harness::stats::quantile_stability;
use stochastic_stokes::harness::{converge_time, ExperimentConfig};

fn main() -> stochastic_stokes::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [discretization]
        M_list = [8, 16, 32]
        M_ref = 512
        N_modes = 16
        [experiment]
        samples = 50
        gamma1 = 0.25
        "#,
    )?;
    let report = converge_time(&cfg)?;
    let stats: Vec<_> = report.reports.iter().map(|r| r.pathwise.clone()).collect();
    for s in &stats {
        let q: Vec<String> = s.quantiles.iter().map(|(p, v)| format!("{p:.2}:{v:.4}")).collect();
        println!("k = {:.5}  {}", s.k, q.join("  "));
    }
    println!("p95 ratio across the ladder {:.3}", quantile_stability(&stats));
    Ok(())
}
