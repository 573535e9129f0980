#![no_main]

use libfuzzer_sys::fuzz_target;
use rxhistory_core::compile::CompiledTerminology;

// The four table files, separated by 0x1e.
fuzz_target!(|data: &[u8]| {
    let mut parts = data.splitn(4, |b| *b == 0x1e);
    let manifest = parts.next().unwrap_or_default();
    let meds = parts.next().unwrap_or_default();
    let common = parts.next().unwrap_or_default();
    let dose = parts.next().unwrap_or_default();
    if let Ok(t) = CompiledTerminology::from_readers(manifest, meds, common, dose) {
        for m in t.med_list() {
            let _ = t.common_forms(m.med_list_id);
            let _ = t.dose_units(m.med_list_id);
        }
    }
});
