#![no_main]

use fforge::pipeline::record::parse_sidecar;
use fforge::pipeline::RecordMeta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_sidecar(text);
    if let Ok(meta) = RecordMeta::from_sidecar(text) {
        let _ = meta.to_sidecar();
    }
});
