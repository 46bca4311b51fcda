//! Top order statistics by exponential spacings and the joint law of the
//! sum and maximum for a canonical heavy tail.

use mixbound::asymptotics::{stabilizing, CanonicalTail, SlowVariationParams};
use mixbound::simlab::{default_workers, joint_limit_experiment, top_order_stats_sampler, Engine, ExperimentConfig, StreamKey};

pub fn run_example() {
    let params = SlowVariationParams::new(2.0, 0.0, 0.5, 0.0, 1.0).unwrap();
    let tail = CanonicalTail::new(params).unwrap();
    let mut rng = StreamKey::new(3, "example/os").rng(0);
    let n = 100_000_000;
    let top = top_order_stats_sampler(&tail, n, 5, &mut rng).unwrap();
    let b = stabilizing(&params, n as f64).unwrap();
    println!("top order statistics of 1e8 draws: {:?}", top.values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>());
    println!("B_n = {:.4e}, T_n = {:.4e}", b.b_n, b.t_n);

    let engine = Engine::new(default_workers()).unwrap();
    let cfg = ExperimentConfig { n_grid: Some(vec![10_000, 100_000]), replicates: 20_000, target_conditioned: Some(300), ..Default::default() };
    let r = joint_limit_experiment(&engine, &params, &cfg).unwrap();
    for p in r.points {
        println!(
            "n={:<7} KS(ratio)={:.4} KS(max)={:.4} P(mean>0 | max>2T)={:.3} median line dev={:.4}",
            p.n, p.ks_ratio, p.ks_max, p.p_pos_given_big_max, p.median_line_dev
        );
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
