//! Fuzz the binary ensemble-dump decoder: arbitrary bytes must decode to a
//! structured error or a self-consistent ensemble, with no panics, no
//! overflow aborts, and no unbounded allocations (the decoder checks the
//! declared dimensions against the actual payload length first).

#![no_main]

use libfuzzer_sys::fuzz_target;
use sapsim_core::solver::decode_ensemble;

fuzz_target!(|data: &[u8]| {
    if let Ok(ens) = decode_ensemble(data) {
        // Anything accepted must satisfy the ensemble invariants.
        assert!(ens.n_paths() > 0 && ens.n_modes() > 0);
        assert_eq!(ens.grid().len(), ens.n_times());
        let _ = ens.state(0, 0);
    }
});
