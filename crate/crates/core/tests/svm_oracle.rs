mod support;

#[test]
fn smo_matches_brute_force_dual() {
    support::svm_dual::check_instances(10, 77).unwrap();
}
