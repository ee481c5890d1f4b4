#![no_main]

use drawdown_cds::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::from_json_str(text) else {
        return;
    };
    // an accepted config re-serializes to an equal, still valid one
    let again = serde_json::to_string(&cfg).expect("serializes");
    let back = RunConfig::from_json_str(&again).expect("round trip parses");
    assert_eq!(cfg, back);
});
