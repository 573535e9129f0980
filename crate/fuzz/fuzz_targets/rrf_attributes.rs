#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::rrf::{parse_attributes, SourceDialect};

fuzz_target!(|data: &[u8]| {
    for dialect in [SourceDialect::Umls, SourceDialect::RxnormNative] {
        let (rows, report) = parse_attributes(data, dialect).unwrap();
        assert_eq!(rows.len(), report.rows);
        assert_eq!(report.rows + report.malformed_count, report.lines_read);
    }
});
