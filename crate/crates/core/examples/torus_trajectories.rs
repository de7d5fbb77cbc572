//! Samples horn-torus longitudes, densifies them with the interpolating
//! B-spline and prints their geometry.
//!
//! `cargo run --example torus_trajectories`

use embogen::sampler::{condition, norm, trajectories, Axis, GenerationSpec, LatentTrajectory, TorusGrid};

fn main() -> anyhow::Result<()> {
    let grid = TorusGrid::new(3.0, Axis::Ld3)?;
    println!("longitude 0 of the R=3 torus around LD3:");
    for (j, p) in grid.longitude(0)?.iter().enumerate() {
        println!("  {j:>2}  ({:>8.4}, {:>8.4}, {:>8.4})  |p| = {:.4}", p[0], p[1], p[2], norm(p));
    }

    let t = LatentTrajectory::from_torus(&grid, 0, 15)?;
    let rows = condition(&t, 0.5);
    println!("{} dense points, max norm {:.5}, last row {:?}", t.dense_points.len(), t.max_norm(), rows.last().unwrap());

    let spec = GenerationSpec::default();
    let all = trajectories(&spec)?;
    println!("{} trajectories for {} animations", all.len(), spec.animation_count());
    for r in &spec.radii {
        let group: Vec<_> = all.iter().filter(|t| t.radius == *r).collect();
        let lo = group.iter().map(|t| t.max_norm()).fold(f64::INFINITY, f64::min);
        let hi = group.iter().map(|t| t.max_norm()).fold(0.0, f64::max);
        println!(
            "R = {r}: {} trajectories of {} points, max norm in [{lo:.4}, {hi:.4}]",
            group.len(),
            group[0].dense_points.len()
        );
    }
    Ok(())
}
