//! Every example runs to completion.

macro_rules! example {
    ($m:ident, $path:literal) => {
        #[allow(dead_code)]
        #[path = $path]
        mod $m;

        #[test]
        fn $m() {
            $m::run_example();
        }
    };
}

example!(catalog, "../examples/catalog.rs");
example!(stabilizing_sequences, "../examples/stabilizing_sequences.rs");
example!(limit_laws, "../examples/limit_laws.rs");
example!(boundary_fit, "../examples/boundary_fit.rs");
example!(error_rate_curve, "../examples/error_rate_curve.rs");
example!(conditional_lr, "../examples/conditional_lr.rs");
example!(joint_limit, "../examples/joint_limit.rs");
example!(composite_mixture, "../examples/composite_mixture.rs");
example!(cli_pipeline, "../examples/cli_pipeline.rs");
