//! The conditional LR law G against chi-square(1), the maximally skew Cauchy
//! density and stable negativity probabilities.

use mixbound::stable_laws::{chi2_1_cdf, skew_cauchy_cdf_below_zero, skew_cauchy_pdf, stable_negativity, GLaw, StableSpec};

pub fn run_example() {
    let g = GLaw;
    println!("G cumulants: {:?}", g.cumulants());
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "G cdf", "chi2 cdf", "G pdf");
    for x in [0.1, 0.5, 1.0, 2.0, 3.84, 6.63] {
        println!("{x:>6.2} {:>10.5} {:>10.5} {:>10.5}", g.cdf(x), chi2_1_cdf(x), g.pdf(x));
    }
    println!("G 95% point {:.4} (chi2_1: 3.8415)", g.quantile(0.95));

    for x in [-2.0, 0.0, 1.0, 5.0, 100.0] {
        println!("skew-Cauchy f({x}) = {:.6}", skew_cauchy_pdf(x, 1.0).unwrap());
    }
    println!("P(X < 0) for beta = 1: {:.6}", skew_cauchy_cdf_below_zero(1.0).unwrap());
    for alpha in [1.2, 1.5, 1.8, 2.0] {
        println!("alpha = {alpha}: P(X < 0) = {:.4}", stable_negativity(StableSpec::new(alpha, 1.0).unwrap()).unwrap());
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
