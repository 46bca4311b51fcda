//! The generator catalog: density ratios, tail models and the bounds of the
//! extended parameter space.

use mixbound::generators::{builtin_pairs, mixture_log_density, GeneratorPair};

pub fn run_example() {
    for p in builtin_pairs() {
        let tail = match &p.tail_model {
            Some(t) => format!("beta0={:.4} beta1={} delta={} gamma={}", t.beta0, t.beta1, t.delta, t.gamma),
            None => "none".into(),
        };
        println!("{:<22} h(0.5)={:<10.5} rate(n=1e4)={:.4}  tail: {tail}", p.name, p.log_h(0.5).exp(), p.rate.theory(1e4));
    }

    let gc = GeneratorPair::gauss_cauchy();
    let b = gc.theta_bounds().unwrap();
    println!("gauss_cauchy: theta in [{}, {:.4}], h minimal at x = {:.4}", b.theta_min, b.theta_max, b.argmin_x);
    for theta in [0.5, 2.0, b.theta_max] {
        println!("  log f_theta(1) at theta = {theta:.4}: {:.4}", mixture_log_density(&gc, theta, 1.0).unwrap());
    }

    let t = GeneratorPair::from_name("gauss_t(3,2)").unwrap();
    println!("{}: log h(10) = {:.4}", t.name, t.log_h(10.0));
}

#[allow(dead_code)]
fn main() {
    run_example();
}
