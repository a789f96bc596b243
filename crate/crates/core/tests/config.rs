use n2f_core::config::*;
use n2f_core::formal::NamingKind;

#[test]
fn default_config_is_valid() {
    let c = RunConfig::default();
    c.validate().unwrap();
    assert_eq!(c.tasks.max_rejections, 10_000);
    assert_eq!(c.ranges.k, (2, 9));
}

#[test]
fn hash_tracks_content_but_not_endpoint() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.endpoint = Some("endpoint.toml".into());
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
    let mut c = a.clone();
    c.prompt.header.push('!');
    assert_ne!(a.hash(), c.hash());
    assert_ne!(a.prompt.hash(), c.prompt.hash());
}

#[test]
fn json_round_trip_and_partial_input() {
    let a = RunConfig::default();
    let text = serde_json::to_string(&a).unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), a);
    let partial: RunConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
    assert_eq!(partial.seed, 7);
    assert_eq!(partial.naming, NamingTables::default());
}

#[test]
fn broken_tables_fail_validation() {
    let mut c = RunConfig::default();
    c.naming.cross.insert("f0".into(), "filter_gt".into());
    assert!(c.validate().is_err());

    let mut c = RunConfig::default();
    c.naming.anomalous.remove("f3");
    assert!(c.naming.scheme(NamingKind::Anomalous).is_err());

    let mut c = RunConfig::default();
    c.tasks.max_rejections = 0;
    assert!(c.validate().is_err());
}
