//! Hessian structure of one-hidden-layer hashed nets at the ground truth.
//!
//! Run: cargo run --example hessian_checks
//!
//! For a sampled teacher: the Gauss-Newton Hessian at w* is positive
//! definite (local strong convexity), its quadratic form coincides with the
//! fully-connected Hessian under lifting, and the lifted norm obeys the
//! bucket-load sandwich.

use hashnets::activation::Activation;
use hashnets::hashednet::{
    hessian_reduction_check, lift_vector, sample_dataset, spectrum_bounds, TeacherSpec,
};
use hashnets::linalg::{dot, sym_eig};
use hashnets::Rng;

fn main() {
    let (n, k, b, m) = (8, 3, 12, 20_000);
    let mut rng = Rng::new(3);
    let teacher = TeacherSpec::sample(n, k, b, Activation::Relu, &mut rng).unwrap();
    let samples = sample_dataset(&teacher, m, &mut rng.derive(1));

    let h = teacher.risk_hessian(&teacher.layer.w, &samples).unwrap();
    let eigs = sym_eig(&h).unwrap();
    println!("teacher: n = {n}, k = {k}, B = {b}, m = {m}");
    println!(
        "Hessian at w*: lambda_min = {:.4}, lambda_max = {:.4}",
        eigs.last().unwrap(),
        eigs[0]
    );

    let sp = spectrum_bounds(&teacher).unwrap();
    println!(
        "spectral params: kappa = {:.3}, lambda = {:.3}, rho(sigma_k) = {:.4}",
        sp.kappa, sp.lambda, sp.rho_sigma_k
    );
    println!(
        "formula levels (constants 1): m0 = {:.4e}, M0 = {:.4}, step 1/M0 = {:.4}",
        sp.m_lower,
        sp.m_upper,
        1.0 / sp.m_upper
    );

    let worst = hessian_reduction_check(&teacher, &samples, 100, &mut rng.derive(2)).unwrap();
    println!("hashed vs lifted fully-connected quadratic forms: max rel err {worst:.2e}");

    // lifted norm sandwich given the loads
    let loads = teacher.layer.bucket_loads();
    let ratio = (k * n) as f64 / b as f64;
    let mut arng = rng.derive(3);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..100 {
        let a = arng.gaussian_vec(b);
        let lifted = lift_vector(&a, teacher.layer.index_table());
        let r = dot(&lifted, &lifted) / dot(&a, &a);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    println!(
        "lift norm ratio ||lift(a)||^2 / ||a||^2 over 100 draws: [{lo:.2}, {hi:.2}], kn/B = {ratio}, loads in [{}, {}]",
        loads.min(),
        loads.max()
    );
}
