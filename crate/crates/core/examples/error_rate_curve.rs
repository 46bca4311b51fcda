//! P0(theta-hat > 0) against n next to the logarithmic theory.

use mixbound::simlab::{boundary_rate_experiment, default_workers, Engine, ExperimentConfig};

pub fn run_example() {
    let engine = Engine::new(default_workers()).unwrap();
    for pair in ["gauss_cauchy", "gauss_laplace", "gauss_powerphi(-0.75)", "uniform_shift"] {
        let cfg = ExperimentConfig { pair: Some(pair.into()), replicates: 2000, ..Default::default() };
        let curve = boundary_rate_experiment(&engine, &cfg, &[10, 100, 1000]).unwrap();
        for p in curve.points {
            println!("{pair:<22} n={:<6} p_hat={:.4} +- {:.4}  theory={:.4}", p.n, p.p_hat, p.se, p.theory);
        }
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
