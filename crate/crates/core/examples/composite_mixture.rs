//! The zeta_nu family, composite fits over (theta, nu) and tail equivalence
//! of Student-t scale pairs.

use mixbound::composite::{composite_fit, composite_rate_experiment, composite_rate_theory, tail_equivalence_experiment, ZetaFamily};
use mixbound::generators::GeneratorPair;
use mixbound::simlab::{default_workers, Engine, ExperimentConfig, StreamKey};
use rand::Rng;

pub fn run_example() {
    for nu in [0.5, 1.0, 1.5, 2.0] {
        let f = ZetaFamily::new(nu).unwrap();
        println!("nu={nu}: zeta(1)={:.5} zeta(5)={:.4e} K_nu={:.5} mass={:.8}", f.zeta(1.0), f.zeta(5.0), f.k_nu, f.total_mass());
    }

    let psi = ZetaFamily::new(1.0).unwrap();
    let mut rng = StreamKey::new(4, "example/composite").rng(0);
    let xs: Vec<f64> = (0..5000).map(|_| if rng.random::<f64>() < 0.02 { psi.sample(&mut rng) } else { rng.sample(rand_distr::StandardNormal) }).collect();
    let fit = composite_fit(&xs, 1.0).unwrap();
    println!("composite fit: theta-hat={:.4} nu-hat={:.4} Lambda={:.4}", fit.theta_hat, fit.nu_hat, fit.lambda);

    let engine = Engine::new(default_workers()).unwrap();
    for p in composite_rate_experiment(&engine, 1.0, &[1000], 2000, 4).unwrap() {
        println!("rate n={}: {:.4} +- {:.4} (theory {:.4})", p.n, p.p_hat, p.se, composite_rate_theory(1.0, p.n as f64));
    }

    let (a, b) = (GeneratorPair::gauss_t(3.0, 1.0).unwrap(), GeneratorPair::gauss_t(3.0, 2.0).unwrap());
    let cfg = ExperimentConfig { n_grid: Some(vec![1000, 10_000]), replicates: 20_000, target_conditioned: Some(50), ..Default::default() };
    for p in tail_equivalence_experiment(&engine, &a, &b, &cfg).unwrap().points {
        println!("t(3,1) vs t(3,2), n={}: median |L1-L2| = {:.4}", p.n, p.median_abs_diff);
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
