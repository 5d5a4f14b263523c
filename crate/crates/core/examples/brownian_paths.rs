//! Coupled Brownian increments on nested time grids.

use stochastic_stokes::noise::{pairwise_sum, BrownianDriver};

fn main() -> stochastic_stokes::Result<()> {
    let d = BrownianDriver::with_stream(42, 0, 1.0, 1024)?;
    let fine = d.fine_increments();
    for m in [4, 16, 64] {
        let coarse = d.increments(m)?;
        let w = fine.len() / m;
        let exact = coarse.iter().enumerate().all(|(i, c)| *c == pairwise_sum(&fine[i * w..(i + 1) * w]));
        println!("M = {m:>3}  W(T) = {:+.6}  sums of fine increments match: {exact}", pairwise_sum(coarse));
    }
    let k = 1.0 / fine.len() as f64;
    let m2 = fine.iter().map(|w| w * w / k).sum::<f64>() / fine.len() as f64;
    println!("mean dW^2/k = {m2:.4}, checksum {:016x}", d.checksum());
    Ok(())
}
