#![no_main]

use libfuzzer_sys::fuzz_target;

// Any scenario that parses must serialize to a document that parses back to
// an equal scenario.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(scenario) = einwarp::scenario::parse_scenario(text) else {
        return;
    };
    let json = serde_json::to_string(&scenario).expect("accepted scenarios serialize");
    let again = einwarp::scenario::parse_scenario(&json).expect("serialized scenario parses back");
    assert_eq!(scenario, again, "scenario roundtrip must be lossless");
});
