#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = coexbal::coexec::PlanConfig::from_json(text) {
        let _ = coexbal::coexec::ExecutionPlan::from_config(&cfg);
    }
});
