#![no_main]

use libfuzzer_sys::fuzz_target;
use minmod_cli::description::Description;
use minmod_cli::pipeline::{run_pipeline, PipelineOptions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(desc) = Description::parse(text) else { return };
    let opts = PipelineOptions { truncation: 16, ..PipelineOptions::default() };
    if let Ok(report) = run_pipeline(&desc, &opts) {
        assert_eq!(run_pipeline(&desc, &opts).expect("rerun").to_json(), report.to_json());
    }
});
