//! Distance to a convex hull two ways: exact polygon geometry and the iterative projection.

use hull_lab::geometry::{convex_hull_2d, project_onto_hull, separate, PointSet};

fn main() -> anyhow::Result<()> {
    let ps = PointSet::from_2d(&[[0.0, 0.0], [2.0, 0.0], [1.5, 1.5], [0.0, 1.0], [1.0, 0.5]])?;
    let hull = convex_hull_2d(&ps)?;
    println!("vertices: {:?}", hull.vertices_2d());
    for q in [[1.0, 0.4], [3.0, 1.0], [-1.0, -1.0]] {
        let proj = project_onto_hull(&q, &ps, 1e-12)?;
        println!(
            "q = {q:?}: polygon {:.8}, Frank-Wolfe {:.8} after {} steps, nearest {:?}",
            hull.distance(&q),
            proj.distance,
            proj.iterations,
            proj.nearest
        );
        if !hull.contains(&q, 0.0) {
            let w = separate(&q, &ps, 1e-12)?;
            println!("  separating functional {:?} at level {:.6}", w.direction, w.threshold);
        }
    }
    Ok(())
}
