#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::compile::extract_strength;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((amount, units)) = extract_strength(text) {
        assert!(amount >= rust_decimal::Decimal::ZERO);
        assert!(!units.is_empty());
    }
});
