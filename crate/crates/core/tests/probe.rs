#[test]
fn probe_runs() {
    let v = carbm_core::probe();
    assert!(v.is_finite(), "{v}");
    println!("probe value {v}");
}
