#![no_main]

use exponents::curve::parse_curve_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_curve_csv(text) {
        let out = file.to_csv();
        let again = parse_curve_csv(&out).expect("written curve parses");
        assert_eq!(again.to_csv(), out);
    }
});
