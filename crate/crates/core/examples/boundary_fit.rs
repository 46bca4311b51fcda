//! Fitting the mixing weight: positivity criterion, exact maximum, LR and
//! the approximate statistics, activity rates.

use mixbound::generators::GeneratorPair;
use mixbound::inference::{activity_rates, approx_stats, fit_theta, positivity, HSample};
use mixbound::simlab::StreamKey;
use rand::Rng;

pub fn run_example() {
    let pair = GeneratorPair::gauss_cauchy();
    let mut rng = StreamKey::new(1, "example/fit").rng(0);
    for theta in [0.0, 0.05, 0.3] {
        let xs: Vec<f64> = (0..2000).map(|_| if rng.random::<f64>() < theta { pair.sample_f1(&mut rng) } else { pair.sample_f0(&mut rng) }).collect();
        let h = HSample::from_pair(&pair, &xs).unwrap();
        let f = fit_theta(&h, 1.0).unwrap();
        print!("true theta {theta:<5} positive={:<5} theta-hat={:.4} Lambda={:.4}", positivity(&h), f.theta_hat(), f.lambda);
        if f.positive {
            let a = approx_stats(&h).unwrap();
            let act = activity_rates(&h, f.theta_hat()).unwrap();
            print!(" R={:.4} Lambda~={:.4} max activity={:.4}", a.r, a.lambda_tilde, act.max_rate);
        }
        println!();
    }

    // extended model: theta may exceed 1
    let b = pair.theta_bounds().unwrap();
    let xs: Vec<f64> = (0..500).map(|_| pair.sample_f1(&mut rng)).collect();
    let h = HSample::from_pair(&pair, &xs).unwrap();
    let f = fit_theta(&h, b.theta_max).unwrap();
    println!("F1 data, extended fit on [0, {:.4}]: theta-hat = {:.4}", b.theta_max, f.theta_hat());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
