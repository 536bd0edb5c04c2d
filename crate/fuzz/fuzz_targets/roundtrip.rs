#![no_main]

use libfuzzer_sys::fuzz_target;
use minmod_cli::description::Description;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(desc) = Description::parse(text) else { return };
    let emitted = desc.to_json();
    let again = Description::parse(&emitted).expect("emitted description parses");
    assert_eq!(again.to_json(), emitted);
    let model = desc.model().expect("validated");
    assert_eq!(Description::from_model(&model).model().expect("validated"), model);
});
