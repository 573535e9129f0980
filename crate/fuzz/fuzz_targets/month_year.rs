#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::capture::MonthYear;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = text.parse::<MonthYear>() {
        assert!((1..=12).contains(&d.month));
        assert_eq!(d.to_string().parse::<MonthYear>().unwrap(), d);
    }
});
