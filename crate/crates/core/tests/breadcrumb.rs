mod common;

use common::*;
use oppsim::epidemic::{OneCopyConfig, OneCopyEpidemic};
use oppsim::mobccn::{MobCcnConfig, MobCcnNetwork, UtilityMemory};
use oppsim::ContentName;

fn mobccn_configs() -> Vec<MobCcnConfig> {
    let plain = MobCcnConfig::default();
    let mut tuned = plain;
    tuned.routing.memory = UtilityMemory::Current;
    tuned.avoid_breadcrumb_faces = true;
    vec![plain, tuned]
}

#[test]
fn three_node_chain() {
    let f = chain3();
    for cfg in mobccn_configs() {
        let mut net = MobCcnNetwork::new(f.n, &f.placement, cfg);
        let out = run(&mut net, &f, 0);
        // held at 0 until 0–1 meets again, held at 1 until 1–2 meets again
        assert_eq!(interest_hops(&out.log, 0), vec![(200.0, 0, 1), (300.0, 1, 2)]);
        // answered at once, parked at 1 until 0 is back
        assert_eq!(
            data_hops(&out.log, ContentName::new(0, 1)),
            vec![(300.0, 2, 1), (400.0, 1, 0)]
        );
        assert_eq!(out.report.delivered, 1);
        assert_eq!(out.report.hops, vec![2]);
        assert_eq!(out.report.delays, vec![300.0]);
        assert_eq!(out.report.duplicates, 0);
    }
}

#[test]
fn five_node_chain_reverses_exactly() {
    let f = chain5();
    for cfg in mobccn_configs() {
        let mut net = MobCcnNetwork::new(f.n, &f.placement, cfg);
        let out = run(&mut net, &f, 0);
        let ih = interest_hops(&out.log, 0);
        let dh = data_hops(&out.log, ContentName::new(0, 1));
        assert_eq!(ih, vec![(200.0, 0, 1), (300.0, 1, 2), (400.0, 2, 3), (500.0, 3, 4)]);
        assert_eq!(dh, vec![(500.0, 4, 3), (600.0, 3, 2), (700.0, 2, 1), (800.0, 1, 0)]);
        let mut back = path(&dh);
        back.reverse();
        assert_eq!(path(&ih), back);
        assert_eq!(out.report.hops, vec![4]);
        assert_eq!(out.report.delays, vec![700.0]);
    }
}

#[test]
fn one_copy_walk_returns_along_its_trail() {
    // with certain forwarding every contact hands the Interest on
    let f = chain5();
    let cfg = OneCopyConfig {
        forward_prob: 1.0,
        retransmission: false,
        caching: false,
    };
    let mut net = OneCopyEpidemic::new(f.n, &f.placement, cfg);
    let out = run(&mut net, &f, 0);
    let ih = interest_hops(&out.log, 0);
    let dh = data_hops(&out.log, ContentName::new(0, 1));
    let mut back = path(&dh);
    back.reverse();
    assert_eq!(path(&ih), back);
    assert_eq!(out.report.delivered, 1);
    assert_eq!(out.report.hops, vec![4]);
    assert_eq!(out.report.max_live_interest_copies, 1);
}
