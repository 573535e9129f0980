#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_service::{encode_record, parse_record};

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(record) = parse_record(line) {
        let again = parse_record(&encode_record(&record)).unwrap();
        assert_eq!(again.record_id, record.record_id);
        assert_eq!(again.entry, record.entry);
    }
});
