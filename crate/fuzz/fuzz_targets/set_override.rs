#![no_main]

use drawdown_cds::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut cfg = RunConfig::default();
    for line in text.lines() {
        let before = cfg;
        match cfg.apply_override(line) {
            Ok(()) => cfg.validate().expect("accepted override leaves a valid config"),
            Err(_) => assert_eq!(cfg, before, "rejected override mutated the config"),
        }
    }
});
