#![no_main]

use fraclap::fracfem::{read_triplets, write_triplets};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = read_triplets(text) {
        let again = read_triplets(&write_triplets(entries.iter().copied())).expect("written triplets parse");
        assert_eq!(again.len(), entries.len());
        for (a, b) in entries.iter().zip(&again) {
            assert_eq!((a.0, a.1, a.2.to_bits()), (b.0, b.1, b.2.to_bits()));
        }
    }
});
