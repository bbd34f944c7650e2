#![no_main]

use fforge::AudioSignal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(sig) = AudioSignal::read_wav_from(std::io::Cursor::new(data)) {
        assert!(sig.samples.iter().all(|s| (-1.0..1.0).contains(s)));
    }
});
