#![no_main]

use exponents::channel_file::parse_channel_source;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&seed, rest)) = data.split_first() else { return };
    let Ok(spec) = std::str::from_utf8(rest) else { return };
    if let Ok(w) = parse_channel_source(spec, u64::from(seed)) {
        assert!(w.inputs() > 0 && w.outputs() > 0);
    }
});
