//! Slowly varying functions, de Bruijn conjugates and the stabilizing
//! sequences A_n, B_n, T_n for the catalog tail models.

use mixbound::asymptotics::{de_bruijn_conjugate, error_rate_theory, stabilizing, stabilizing_with, CanonicalTail, Centering};
use mixbound::generators::GeneratorPair;

pub fn run_example() {
    for pair in [GeneratorPair::gauss_cauchy(), GeneratorPair::gauss_laplace()] {
        let p = pair.tail_model.unwrap();
        println!("{}", pair.name);
        println!("  {:>8} {:>12} {:>12} {:>12} {:>10}", "n", "A_n", "B_n", "T_n", "rate");
        for k in 3..=7 {
            let n = 10f64.powi(k);
            let s = stabilizing(&p, n).unwrap();
            println!("  {n:>8.0e} {:>12.4} {:>12.4} {:>12.4} {:>10.4}", s.a_n, s.b_n, s.t_n, error_rate_theory(&p, n));
        }
        let n = 1e6;
        let r = stabilizing_with(&p, n, Centering::Refined).unwrap();
        println!("  refined centering at 1e6: A_n = {:.4}; L-dagger(1e6) = {:.4e}", r.a_n, de_bruijn_conjugate(&p, n).unwrap());
    }

    let tail = CanonicalTail::new(GeneratorPair::gauss_cauchy().tail_model.unwrap()).unwrap();
    println!("canonical tail: x0 = {:.4}, mean = {:.4}, sf(1e6) = {:.4e}", tail.x0, tail.mean, tail.sf(1e6));
}

#[allow(dead_code)]
fn main() {
    run_example();
}
