#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::capture::{reconstruct_common_form, validate_entry, MedicationHistoryEntry};
use rxhistory_core::compile::CompiledTerminology;

fuzz_target!(|data: &[u8]| {
    let Ok(entry) = serde_json::from_slice::<MedicationHistoryEntry>(data) else {
        return;
    };
    let _ = validate_entry(&entry);
    let empty = CompiledTerminology::new(Vec::new(), Vec::new(), Vec::new(), "empty").unwrap();
    let _ = reconstruct_common_form(&entry, &empty);
    let again: MedicationHistoryEntry = serde_json::from_str(&serde_json::to_string(&entry).unwrap()).unwrap();
    assert_eq!(again, entry);
});
