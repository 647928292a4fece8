#![no_main]

use exponents::channel_file::parse_corpus_sizes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sizes) = parse_corpus_sizes(text) {
        assert!(sizes.iter().all(|&(n, m)| n > 0 && m > 0));
    }
});
