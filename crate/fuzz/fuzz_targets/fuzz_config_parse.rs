//! Fuzz the TOML experiment-configuration parser: any byte string must
//! produce `Ok` or a structured error, never a panic, and any accepted
//! configuration must survive its own validation.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sapsim_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
            // Parsing promises a validated config: re-validating and
            // building the system must both succeed.
            cfg.validate().expect("accepted config failed validation");
            let _ = cfg.build_spectrum().and_then(|spec| {
                cfg.build_family()?;
                cfg.build_drift()?;
                cfg.build_diffusion(&spec)?;
                cfg.initial_state()?;
                cfg.condition_inputs()
            });
        }
    }
});
