#![no_main]

use libfuzzer_sys::fuzz_target;
use rhodopsin::experiments::parse_windows;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(windows) = parse_windows(text) {
        for pair in windows.windows(2) {
            assert!(pair[0].1 <= pair[1].0);
        }
        assert!(windows.iter().all(|(a, b)| a < b));
    }
});
