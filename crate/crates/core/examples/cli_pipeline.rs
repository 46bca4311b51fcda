//! Driving the command-line front end from code: a table, a fit and a small
//! simulation written to an output directory with a manifest.

use mixbound::cli::main_with_args;

pub fn run_example() {
    let dir = std::env::temp_dir().join("mixbound-example-cli");
    let data = dir.join("x.csv");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&data, "x\n0.3\n-1.2\n4.1\n0.7\n-0.2\n").unwrap();
    let out = dir.display().to_string();
    let data = data.display().to_string();
    let runs: [&[&str]; 3] = [
        &["mixbound", "law", "table", "--law", "G", "--grid", "0.5:2:0.5"],
        &["mixbound", "fit", "--pair", "gauss_cauchy", "--data", &data],
        &["mixbound", "sim", "rate", "--pair", "gauss_cauchy", "--n-grid", "10,100", "--replicates", "500", "--out", &out],
    ];
    for args in runs {
        let code = main_with_args(args.iter().copied());
        println!("exit code {code}");
    }
    println!("{}", std::fs::read_to_string(dir.join("rate.csv")).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
