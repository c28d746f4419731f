#![no_main]

use fraclap_cli::{parse_pairs, RunConfig, KEYS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_pairs(text) {
        assert!(pairs.iter().all(|(k, _)| KEYS.iter().any(|(known, _)| known == k)));
    }
    if let Ok(cfg) = RunConfig::from_text(text) {
        assert!(!cfg.s.is_empty() && cfg.levels >= 1);
    }
});
