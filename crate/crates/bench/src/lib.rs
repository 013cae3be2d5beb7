//! Benchmark fixtures shared by the criterion targets.

use maxstream_core::maxima::partial_max_process;
use maxstream_core::models::ProcessModel;
use maxstream_core::StepFunction;

/// Partial-maxima path of `n` unit-Fréchet-scaled moving maxima draws.
pub fn sample_max_path(n: usize, seed: u64) -> StepFunction {
    let model = ProcessModel::moving_maxima(vec![0.2, 0.3, 0.5]).expect("valid coefficients");
    let xs = model.generate(n, seed).expect("n > 0");
    partial_max_process(&xs, n as f64).expect("nonempty")
}

/// Step function with `k` jumps at `i / (k + 1)` and alternating levels.
pub fn zigzag(k: usize, amplitude: f64) -> StepFunction {
    let jumps = (1..=k)
        .map(|i| (i as f64 / (k + 1) as f64, if i % 2 == 0 { 0.0 } else { amplitude }))
        .collect();
    StepFunction::new(0.0, jumps).expect("increasing times")
}
