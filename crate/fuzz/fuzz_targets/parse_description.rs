#![no_main]

use libfuzzer_sys::fuzz_target;
use minmod_cli::description::Description;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = Description::parse(text) {
            assert!((2..=3).contains(&e.exit_code()));
        }
    }
});
