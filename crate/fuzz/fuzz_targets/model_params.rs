#![no_main]

use drawdown_cds::{JumpDiffusionModel, ScaleEvaluator};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 40 {
        return;
    }
    let f = |i: usize| f64::from_le_bytes(data[8 * i..8 * i + 8].try_into().unwrap());
    let Ok(model) = JumpDiffusionModel::new(f(0), f(1), f(2), f(3)) else {
        return;
    };
    let Ok(eval) = ScaleEvaluator::new(model, f(4).abs()) else {
        return;
    };
    for x in [0.0, 0.5, 1.0, 5.0] {
        let _ = eval.w(x);
        let _ = eval.z(x);
        let _ = eval.ratio_w_gap(x);
    }
});
