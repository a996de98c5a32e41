#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: &str| {
    if let Ok(cfg) = ripcert_cli::parse_sweep_config(input) {
        assert_eq!(cfg.points().len(), cfg.rho_steps * cfg.phi_steps);
    }
});
