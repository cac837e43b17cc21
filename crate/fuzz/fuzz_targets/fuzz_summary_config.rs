//! Fuzz the summary-JSON configuration reloader (the `config` echo written
//! into every summary.json): arbitrary bytes must yield `Ok` of a validated
//! configuration or a structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sapsim_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = ExperimentConfig::from_summary_json(data) {
        cfg.validate().expect("accepted summary config failed validation");
    }
});
