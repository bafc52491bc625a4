//! The embedded half-circle: injective on every scale, yet its midpoint image stays
//! a distance `lambda` away from the hull of its endpoint images.

use hull_lab::singularity::remark1_case;

fn main() {
    for lambda in [0.25, 0.5, 1.0, 2.0, 8.0] {
        let r = remark1_case(lambda);
        println!(
            "lambda = {lambda:5}  injective = {}  min pair distance = {:.3e}  midpoint off hull by {:.6}  dims {} -> {}",
            r.injective, r.min_pair_distance, r.violation, r.domain_dim, r.codomain_dim
        );
    }
}
