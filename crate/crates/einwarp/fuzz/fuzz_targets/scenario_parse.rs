#![no_main]

use libfuzzer_sys::fuzz_target;

// Parsing an arbitrary scenario document must never panic; malformed input
// comes back as a structured error.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = einwarp::scenario::parse_scenario(text);
    }
});
