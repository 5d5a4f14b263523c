use stochastic_stokes::TorusMesh;

fn main() -> stochastic_stokes::Result<()> {
    println!("{:>4} {:>10} {:>6} {:>6} {:>6} {:>8}", "n", "h", "V", "E", "F", "velocity");
    for n in [4, 8, 16, 32] {
        let m = TorusMesh::new(1.0, n)?;
        let d = m.dof_counts();
        println!(
            "{n:>4} {:>10.6} {:>6} {:>6} {:>6} {:>8}",
            m.h(),
            m.num_vertices(),
            m.num_edges(),
            m.num_triangles(),
            d.velocity
        );
    }
    Ok(())
}
