mod common;

use proptest::prelude::*;

use common::{compile_fixture, id_of};
use rxhistory_core::capture::{
    med_entry, reconstruct_common_form, validate_entry, AmountInput, Level, MedicationHistoryEntry, MonthYear, Rule,
};
use rxhistory_core::compile::MedListId;

#[test]
fn every_fixture_form_maps_back_to_itself() {
    let t = compile_fixture().terminology;
    for f in t.med_list_common() {
        let name = &t.medication(f.med_list_id).unwrap().med_name;
        let e = med_entry(f.med_list_id, name, &f.dose_amt.to_string(), &f.dose_units, "01/2010");
        assert_eq!(validate_entry(&e), Ok(()));
        let m = reconstruct_common_form(&e, &t);
        assert_eq!(m.level, Level::FullForm, "{}", f.common_form);
        assert_eq!(m.matched_rxaui.as_deref(), Some(f.rxaui.as_str()));
        assert_eq!(m.matched_rxcui.as_deref(), Some(f.rxcui.as_str()));
    }
}

#[test]
fn abilify_ten_mg() {
    let t = compile_fixture().terminology;
    let id = id_of(&t, "Abilify");
    for (amt, units) in [("10", "MG"), ("10.0", "mg"), (" 10 ", " Mg ")] {
        let m = reconstruct_common_form(&med_entry(id, "Abilify", amt, units, "03/2011"), &t);
        assert_eq!(m.level, Level::FullForm, "{amt} {units}");
        let form = t
            .common_forms(id)
            .iter()
            .find(|f| f.common_form == "aripiprazole 10 MG [Abilify]")
            .unwrap();
        assert_eq!(m.matched_rxaui.as_deref(), Some(form.rxaui.as_str()));
    }
    let m = reconstruct_common_form(&med_entry(id, "Abilify", "7.50", "mg/ml", "03/2011"), &t);
    assert_eq!(m.level, Level::FullForm);
}

#[test]
fn partial_entries_fall_back_to_the_name() {
    let t = compile_fixture().terminology;
    let id = id_of(&t, "Zoloft");
    let med = t.medication(id).unwrap();
    for (amt, units) in [
        ("", ""),
        ("25", ""),
        ("", "MG"),
        ("30", "MG"),
        ("25", "Other Units"),
        ("ten", "MG"),
    ] {
        let m = reconstruct_common_form(&med_entry(id, "Zoloft", amt, units, "03/2011"), &t);
        assert_eq!(m.level, Level::NameOnly, "{amt:?} {units:?}");
        assert_eq!(m.matched_rxaui.as_deref(), Some(med.rxaui.as_str()));
    }
}

#[test]
fn free_text_and_unknown_ids_are_unmapped() {
    let t = compile_fixture().terminology;
    let free = MedicationHistoryEntry {
        med_name: "Grandma's tonic".into(),
        begin_date: Some("01/2001".into()),
        ..Default::default()
    };
    assert_eq!(validate_entry(&free), Ok(()));
    assert_eq!(reconstruct_common_form(&free, &t).level, Level::Unmapped);
    let bogus = med_entry(MedListId(4242), "x", "10", "MG", "01/2001");
    assert_eq!(reconstruct_common_form(&bogus, &t).level, Level::Unmapped);
}

#[test]
fn current_medication_cannot_have_an_end_date() {
    let e = MedicationHistoryEntry {
        current: true,
        end_date: Some("04/2011".into()),
        ..med_entry(MedListId(1), "Abilify", "10", "MG", "03/2011")
    };
    let v = validate_entry(&e).unwrap_err();
    assert_eq!(v.len(), 1);
    assert_eq!(
        (v[0].field.as_str(), v[0].rule),
        ("end_date", Rule::DisabledWhenCurrent)
    );
}

#[test]
fn entry_json_round_trip() {
    let e = MedicationHistoryEntry {
        patient_ref: "p-17".into(),
        frequency_code: Some("bid".into()),
        prescriber_note: Some("OTC".into()),
        ..med_entry(MedListId(11), "Zoloft", "50", "MG", "03/2011")
    };
    let json = serde_json::to_string(&e).unwrap();
    assert_eq!(serde_json::from_str::<MedicationHistoryEntry>(&json).unwrap(), e);
}

fn month_year() -> impl Strategy<Value = MonthYear> {
    (1000u16..=9999, 1u8..=12).prop_map(|(year, month)| MonthYear { year, month })
}

proptest! {
    #[test]
    fn month_year_round_trips(d in month_year()) {
        prop_assert_eq!(d.to_string().parse::<MonthYear>().unwrap(), d);
    }

    #[test]
    fn month_year_order_matches_chronology(a in month_year(), b in month_year()) {
        prop_assert_eq!(a < b, (a.year, a.month) < (b.year, b.month));
    }

    /// Any valid id maps at least to the name; adding data never lowers the level.
    #[test]
    fn mapping_floor_and_monotonicity(
        pick in any::<prop::sample::Index>(),
        amt in prop::option::of(prop_oneof!["[0-9]{1,3}(\\.[0-9]{1,2})?", "[a-z ]{0,4}"]),
        units in prop::option::of(prop_oneof!["MG|MG/ML|mg|ML|Other Units", "[A-Z/]{0,5}"]),
    ) {
        let t = compile_fixture().terminology;
        let med = pick.get(t.med_list());
        let bare = MedicationHistoryEntry {
            med_list_id: Some(med.med_list_id),
            med_name: med.med_name.clone(),
            begin_date: Some("01/2010".into()),
            ..Default::default()
        };
        let fuller = MedicationHistoryEntry {
            dose_amt: amt.map(AmountInput),
            dose_units: units,
            ..bare.clone()
        };
        let lo = reconstruct_common_form(&bare, &t);
        let hi = reconstruct_common_form(&fuller, &t);
        prop_assert_eq!(lo.level, Level::NameOnly);
        prop_assert!(hi.level >= lo.level);
        if hi.level == Level::FullForm {
            let rxaui = hi.matched_rxaui.clone().unwrap();
            let f = t.common_forms(med.med_list_id).iter().find(|f| f.rxaui == rxaui).unwrap();
            prop_assert_eq!(Some(f.dose_amt), fuller.dose_amt.as_ref().and_then(AmountInput::value));
        }
    }
}
