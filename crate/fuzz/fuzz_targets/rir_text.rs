#![no_main]

use fforge::room::RoomImpulseResponse;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rir) = RoomImpulseResponse::parse_text(text, 16000) {
        let again = RoomImpulseResponse::parse_text(&rir.to_text(), 16000).unwrap();
        assert_eq!(again, rir);
    }
});
