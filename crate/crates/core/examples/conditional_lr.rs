//! The likelihood-ratio statistic given theta-hat > 0: R is near uniform and
//! Lambda follows G rather than chi-square(1).

use mixbound::simlab::{conditional_lr_experiment, default_workers, Engine, ExperimentConfig};

pub fn run_example() {
    let engine = Engine::new(default_workers()).unwrap();
    let cfg = ExperimentConfig {
        pair: Some("gauss_cauchy".into()),
        n: 1000,
        replicates: 50_000,
        target_conditioned: Some(400),
        ..Default::default()
    };
    let r = conditional_lr_experiment(&engine, &cfg).unwrap();
    let s = &r.summary;
    println!("{} conditioned of {} replicates ({:?})", s.conditioned, s.replicates_used, s.status);
    println!("KS(R, U) = {:.4}; R >= 1 in {} cases", s.ks_r, s.r_ge_1);
    println!("kappa-hat = {:.4}; X2 vs G = {:.2}, vs chi2_1 = {:.2}", s.kappa_hat, s.x2_g, s.x2_chi2);
    println!("R histogram (40 bins): {:?}", r.hist_r.counts);
}

#[allow(dead_code)]
fn main() {
    run_example();
}
