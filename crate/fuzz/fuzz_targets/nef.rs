#![no_main]

use fforge::features::{FeatureRole, FeatureSequence};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(seq) = FeatureSequence::decode(data, FeatureRole::Clean) {
        assert_eq!(seq.encode(), data);
    }
});
