#![no_main]

use fraclap::solver::read_field;
use libfuzzer_sys::fuzz_target;

// The first byte picks the vertex count, the rest is the file.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let n = usize::from(n % 32);
    if let Ok(values) = read_field(text, n) {
        assert_eq!(values.len(), n);
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
