#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::capture::FrequencyVocabulary;
use rxhistory_core::compile::DenyList;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = DenyList::parse(text);
    let mut vocabulary = FrequencyVocabulary::default();
    let before = vocabulary.terms().len();
    if vocabulary.extend_from_text(text).is_err() {
        return;
    }
    assert!(vocabulary.terms().len() >= before);
});
