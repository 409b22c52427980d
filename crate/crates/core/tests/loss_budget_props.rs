use proptest::prelude::*;

use ipa_sim::loss_budget::*;

const NAMES: [&str; 4] = ["dwdm_c33", "dwdm_c35", "isolator", "circulator"];
const WAVELENGTHS: [u32; 3] = [405, 532, 780];

fn components() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(NAMES.to_vec()), 0..5)
}

#[test]
fn lower_bound_survives_addition() {
    let db = ComponentDb::builtin();
    let p = db
        .path("smf_g652d", 1.0, &["dwdm_c33", "isolator"])
        .unwrap();
    let l = path_loss(&p, 405).unwrap();
    assert!(l.lower_bound);
    assert_eq!(l.db, 13.0 + 33.0 + 78.0);
    assert_eq!(l.to_string(), ">124");
}

#[test]
fn boundary_counts_as_infeasible() {
    let mut comps = std::collections::BTreeMap::new();
    comps.insert(
        "att60".to_string(),
        RawComponent {
            description: String::new(),
            loss_db: [("405".to_string(), RawLoss::Exact(60.0))].into(),
        },
    );
    let mut db = ComponentDb::builtin();
    db.add_components(&comps, "budget.components").unwrap();
    let p = db.path("smf_g652d", 0.0, &["att60"]).unwrap();
    let m = countermeasure_margin(&p, 405, 1e-3, 1e-9).unwrap();
    assert_eq!(m.margin_db, 0.0);
    assert_eq!(m.verdict, Verdict::BoundaryInfeasible);
}

#[test]
fn unknown_wavelength_is_an_error() {
    let db = ComponentDb::builtin();
    let p = db.path("smf_g652d", 1.0, &["isolator"]).unwrap();
    assert!(matches!(
        path_loss(&p, 1550),
        Err(ipa_sim::Error::MissingWavelength { .. })
    ));
}

proptest! {
    #[test]
    fn losses_add_across_joined_paths(
        a in components(),
        b in components(),
        la in 0.0f64..5.0,
        lb in 0.0f64..5.0,
        w in prop::sample::select(WAVELENGTHS.to_vec()),
    ) {
        let db = ComponentDb::builtin();
        let pa = db.path("smf_g652d", la, &a).unwrap();
        let pb = db.path("smf_g652d", lb, &b).unwrap();
        let joined = pa.concat(&pb).unwrap();
        let (x, y, z) = (path_loss(&pa, w).unwrap(), path_loss(&pb, w).unwrap(), path_loss(&joined, w).unwrap());
        prop_assert!((z.db - (x.db + y.db)).abs() <= 1e-9 * z.db.max(1.0));
        prop_assert_eq!(z.lower_bound, x.lower_bound || y.lower_bound);
    }

    #[test]
    fn required_power_round_trips(
        a in components(),
        len in 0.0f64..3.0,
        target in 1e-12f64..1e-3,
        w in prop::sample::select(WAVELENGTHS.to_vec()),
    ) {
        let db = ComponentDb::builtin();
        let p = db.path("smf_g652d", len, &a).unwrap();
        let need = required_eve_power(&p, w, target).unwrap();
        let back = delivered_power(&p, w, need.watts).unwrap();
        prop_assert!((back / target - 1.0).abs() < 1e-9);
    }

    #[test]
    fn verdict_agrees_with_margin_sign(
        a in components(),
        len in 0.0f64..3.0,
        eve in 1e-6f64..1.0,
    ) {
        let db = ComponentDb::builtin();
        let p = db.path("smf_g652d", len, &a).unwrap();
        let m = countermeasure_margin(&p, 405, eve, 3e-9).unwrap();
        let need = required_eve_power(&p, 405, 3e-9).unwrap();
        prop_assert_eq!(m.verdict == Verdict::Feasible, m.margin_db < 0.0);
        if m.margin_db.abs() > 1e-9 {
            prop_assert_eq!(m.margin_db < 0.0, need.watts < eve);
        }
    }
}
