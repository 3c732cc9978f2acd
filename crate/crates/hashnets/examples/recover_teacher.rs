//! Gradient-descent recovery of the shared bucket vector.
//!
//! Run: cargo run --example recover_teacher
//!
//! Perturbs a teacher's bucket vector by 1% in a random direction and runs
//! full-batch gradient descent with the smoothness step 1/M0; the error
//! contracts linearly back to the ground truth.

use hashnets::activation::Activation;
use hashnets::hashednet::{gd_recover, perturbed_init, sample_dataset, TeacherSpec};
use hashnets::linalg::norm;
use hashnets::Rng;

fn main() {
    let (n, k, b, m) = (8, 3, 12, 20_000);
    let mut rng = Rng::new(5);
    let teacher = TeacherSpec::sample(n, k, b, Activation::Relu, &mut rng).unwrap();
    let samples = sample_dataset(&teacher, m, &mut rng.derive(1));
    let w0 = perturbed_init(&teacher.layer.w, 0.01, &mut rng.derive(2)).unwrap();

    let trace = gd_recover(&teacher, &samples, &w0, 500, None, Some(1e-9)).unwrap();
    let w_star = norm(&teacher.layer.w);
    println!(
        "n = {n}, k = {k}, B = {b}, m = {m}; step size 1/M0 = {:.4}",
        trace.step_size
    );
    println!("{:>6} {:>14} {:>10}", "step", "rel error", "ratio");
    for (t, e) in trace.errors_sq.iter().enumerate() {
        if t % 25 == 0 || t + 1 == trace.errors_sq.len() {
            let ratio = if t == 0 {
                String::from("-")
            } else {
                format!("{:.4}", trace.ratios[t - 1])
            };
            println!("{t:>6} {:>14.3e} {:>10}", e.sqrt() / w_star, ratio);
        }
    }
    println!(
        "\nrecovered to {:.2e} relative error in {} steps; error non-increasing in {:.1}% of steps",
        trace.final_error() / w_star,
        trace.errors_sq.len() - 1,
        100.0 * trace.monotone_fraction()
    );
}
