#![no_main]

use libfuzzer_sys::fuzz_target;
use rhodopsin::experiments::parse_gamma_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rates) = parse_gamma_spec(text) {
        assert!(rates.iter().all(|g| g.is_finite() && *g >= 0.0));
        assert!(rates.windows(2).all(|w| w[0] < w[1]));
    }
});
