#![no_main]

use exponents::channel_file::{parse_channel_file, ChannelFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((name, w)) = parse_channel_file(text) {
        let again = ChannelFile::from_channel(&w, name.clone()).to_json();
        let (name2, w2) = parse_channel_file(&again).expect("serialized channel parses");
        assert_eq!(name, name2);
        assert_eq!(w, w2);
    }
});
