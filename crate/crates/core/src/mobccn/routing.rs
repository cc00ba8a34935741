//! Utility computation, inter-contact-time estimation and Hello handling.
//!
//! A node's utility for a content type measures how quickly it can reach
//! that type. Direct utility is the inverse of the mean inter-contact time
//! with holders of the type. Indirect utility through a neighbour composes
//! the neighbour's advertised utility with the mean inter-contact time to that
//! neighbour. The node's own utility is the maximum over the direct value
//! and the per-neighbour values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MobCcnNode;
use crate::model::{ContentType, HelloRecord, NodeId, Packet};

/// How observed inter-contact gaps are folded into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IctEstimatorKind {
    /// Arithmetic mean of all gaps.
    Mean,
    /// Exponentially weighted mean; the weight applies to the newest gap.
    Ewma(f64),
}

/// Running inter-contact-time estimate per key (a node or a content type).
#[derive(Debug, Clone)]
pub struct IctEstimator<K: Ord + Copy> {
    kind: IctEstimatorKind,
    last_seen: BTreeMap<K, f64>,
    mean_ict: BTreeMap<K, f64>,
    samples: BTreeMap<K, u64>,
}

impl<K: Ord + Copy> IctEstimator<K> {
    pub fn new(kind: IctEstimatorKind) -> Self {
        IctEstimator {
            kind,
            last_seen: BTreeMap::new(),
            mean_ict: BTreeMap::new(),
            samples: BTreeMap::new(),
        }
    }

    /// Registers a contact with `key` at `now`. Zero-length gaps are ignored.
    pub fn record_contact(&mut self, key: K, now: f64) {
        if let Some(&prev) = self.last_seen.get(&key) {
            debug_assert!(now >= prev, "contacts must be recorded in time order");
            let gap = now - prev;
            if gap > 0.0 {
                let n = self.samples.entry(key).or_insert(0);
                *n += 1;
                let mean = self.mean_ict.entry(key).or_insert(gap);
                if *n > 1 {
                    *mean = match self.kind {
                        IctEstimatorKind::Mean => *mean + (gap - *mean) / *n as f64,
                        IctEstimatorKind::Ewma(w) => w * gap + (1.0 - w) * *mean,
                    };
                }
            }
        }
        self.last_seen.insert(key, now);
    }

    pub fn mean(&self, key: K) -> Option<f64> {
        self.mean_ict.get(&key).copied()
    }

    pub fn samples(&self, key: K) -> u64 {
        self.samples.get(&key).copied().unwrap_or(0)
    }

    pub fn last_seen(&self, key: K) -> Option<f64> {
        self.last_seen.get(&key).copied()
    }
}

/// Which values the own utility is a maximum over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UtilityMemory {
    /// Every value ever computed; the own utility never decreases.
    History,
    /// The current direct value and the current FIB values.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingParams {
    /// Ceiling on any utility (1/s); caps the zero-ICT singularity.
    pub u_cap: f64,
    /// ICT assumed before the first gap has been observed (s).
    pub ict_init: f64,
    pub estimator: IctEstimatorKind,
    pub memory: UtilityMemory,
}

impl Default for RoutingParams {
    fn default() -> Self {
        RoutingParams {
            u_cap: 1e6,
            ict_init: 1000.0,
            estimator: IctEstimatorKind::Mean,
            memory: UtilityMemory::History,
        }
    }
}

/// `1 / ict`, saturated at `u_cap`.
pub fn direct_utility(ict: f64, u_cap: f64) -> f64 {
    if ict <= 1.0 / u_cap {
        u_cap
    } else {
        1.0 / ict
    }
}

/// `1 / (1/u + ict)`; a zero advertised utility yields zero.
pub fn indirect_utility(u: f64, ict: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        1.0 / (1.0 / u + ict)
    }
}

pub fn overall_utility(direct: f64, indirects: impl IntoIterator<Item = f64>) -> f64 {
    indirects.into_iter().fold(direct.max(0.0), f64::max)
}

/// Direct utilities plus the node's own (advertised) utility per type.
#[derive(Debug, Clone, Default)]
pub struct UtilityTable {
    own: BTreeMap<ContentType, f64>,
    direct: BTreeMap<ContentType, f64>,
}

impl UtilityTable {
    pub fn own(&self, t: ContentType) -> f64 {
        self.own.get(&t).copied().unwrap_or(0.0)
    }

    pub fn direct(&self, t: ContentType) -> f64 {
        self.direct.get(&t).copied().unwrap_or(0.0)
    }

    pub fn set_direct(&mut self, t: ContentType, u: f64) {
        self.direct.insert(t, u);
        self.raise(t, u);
    }

    /// Folds a freshly computed value into the overall utility.
    pub fn raise(&mut self, t: ContentType, u: f64) {
        let cur = self.own.entry(t).or_insert(0.0);
        *cur = overall_utility(*cur, [u]);
    }

    /// Resets the own utility to the maximum of the direct value and `values`.
    pub fn recompute(&mut self, t: ContentType, values: impl IntoIterator<Item = f64>) {
        let u = overall_utility(self.direct(t), values);
        self.own.insert(t, u);
    }

    pub fn own_iter(&self) -> impl Iterator<Item = (ContentType, f64)> + '_ {
        self.own.iter().map(|(&t, &u)| (t, u))
    }
}

/// One record per type with positive own utility or local storage.
pub fn build_hello(node: &MobCcnNode) -> Packet {
    let stored = node.cs.types();
    let mut types: Vec<ContentType> = node
        .utility
        .own_iter()
        .filter(|(_, u)| *u > 0.0)
        .map(|(t, _)| t)
        .chain(stored.iter().copied())
        .collect();
    types.sort_unstable();
    types.dedup();
    let records = types
        .into_iter()
        .map(|t| HelloRecord {
            content_type: t,
            advertised_utility: node.utility.own(t),
            stored_locally: stored.contains(&t),
        })
        .collect();
    Packet::Hello { records }
}

/// Registers a contact-begin with `q` in the node-ICT estimator and, for every
/// type `q` stores, in the type-ICT estimator.
pub fn record_encounter(node: &mut MobCcnNode, hello_from_q: &Packet, q: NodeId, now: f64) {
    node.ict_nodes.record_contact(q, now);
    if let Packet::Hello { records } = hello_from_q {
        for r in records.iter().filter(|r| r.stored_locally) {
            node.ict_types.record_contact(r.content_type, now);
        }
    }
}

/// Applies a Hello from neighbour `q` to `node`. Returns the number of
/// records skipped as malformed.
pub fn process_hello(node: &mut MobCcnNode, hello: &Packet, q: NodeId, params: &RoutingParams) -> usize {
    let Packet::Hello { records } = hello else {
        return 0;
    };
    let mut skipped = 0;
    for r in records {
        let u_q = r.advertised_utility;
        if !u_q.is_finite() || u_q < 0.0 {
            skipped += 1;
            continue;
        }
        let t = r.content_type;
        node.cnu.set(t, q, u_q);
        node.fib.create(t, q);
        let value = if r.stored_locally {
            let ict = node.ict_types.mean(t).unwrap_or(params.ict_init);
            let d = direct_utility(ict, params.u_cap);
            node.utility.set_direct(t, d);
            d
        } else {
            let ict = node.ict_nodes.mean(q).unwrap_or(params.ict_init);
            indirect_utility(u_q, ict)
        };
        node.fib.update(t, q, value);
        match params.memory {
            UtilityMemory::History => node.utility.raise(t, value),
            UtilityMemory::Current => {
                let values = node
                    .fib
                    .find(t)
                    .into_iter()
                    .flat_map(|e| e.per_neighbor.values().copied());
                node.utility.recompute(t, values);
            }
        }
    }
    node.malformed_hello_records += skipped as u64;
    skipped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContentName;
    use proptest::prelude::*;

    fn hello(records: &[(u32, f64, bool)]) -> Packet {
        Packet::Hello {
            records: records
                .iter()
                .map(|&(t, u, s)| HelloRecord {
                    content_type: t,
                    advertised_utility: u,
                    stored_locally: s,
                })
                .collect(),
        }
    }

    #[test]
    fn ict_running_mean() {
        let mut e = IctEstimator::new(IctEstimatorKind::Mean);
        e.record_contact(NodeId(1), 100.0);
        assert_eq!(e.mean(NodeId(1)), None);
        assert_eq!(e.last_seen(NodeId(1)), Some(100.0));

        let mut e = IctEstimator::new(IctEstimatorKind::Mean);
        for t in [0.0, 100.0, 300.0] {
            e.record_contact(NodeId(1), t);
        }
        assert_eq!(e.mean(NodeId(1)), Some(150.0));
        assert_eq!(e.samples(NodeId(1)), 2);

        let mut e = IctEstimator::new(IctEstimatorKind::Mean);
        e.record_contact(NodeId(1), 0.0);
        e.record_contact(NodeId(1), 0.0);
        assert_eq!(e.mean(NodeId(1)), None);
        assert_eq!(e.samples(NodeId(1)), 0);
    }

    #[test]
    fn ict_ewma() {
        let mut e = IctEstimator::new(IctEstimatorKind::Ewma(0.5));
        for t in [0.0, 100.0, 400.0] {
            e.record_contact(7u32, t);
        }
        // first gap seeds the estimate, second is blended: 0.5*300 + 0.5*100
        assert_eq!(e.mean(7), Some(200.0));
    }

    #[test]
    fn utility_formulas() {
        assert_eq!(direct_utility(10000.0, 1e6), 1e-4);
        assert_eq!(direct_utility(0.0, 1e6), 1e6);
        assert_eq!(indirect_utility(0.5, 2.0), 0.25);
        assert_eq!(indirect_utility(0.0, 2.0), 0.0);
        assert_eq!(indirect_utility(0.5, 0.0), 0.5);
        assert_eq!(overall_utility(0.1, [0.05, 0.3]), 0.3);
        assert_eq!(overall_utility(0.1, []), 0.1);
        assert_eq!(overall_utility(0.0, [0.0]), 0.0);
    }

    #[test]
    fn never_encountered_type_has_zero_utility() {
        let node = MobCcnNode::new(NodeId(0), IctEstimatorKind::Mean);
        assert_eq!(node.utility.direct(4), 0.0);
        assert_eq!(node.utility.own(4), 0.0);
    }

    #[test]
    fn hello_records() {
        let mut node = MobCcnNode::new(NodeId(0), IctEstimatorKind::Mean);
        assert_eq!(build_hello(&node), hello(&[]));

        node.cs.insert(ContentName::new(2, 0), 1024);
        node.utility.set_direct(2, 5e5);
        assert_eq!(build_hello(&node), hello(&[(2, 5e5, true)]));

        let mut node = MobCcnNode::new(NodeId(0), IctEstimatorKind::Mean);
        node.utility.raise(1, 0.2);
        assert_eq!(build_hello(&node), hello(&[(1, 0.2, false)]));
    }

    #[test]
    fn first_contact_with_type_uses_bootstrap_ict() {
        let params = RoutingParams::default();
        let mut p = MobCcnNode::new(NodeId(0), params.estimator);
        let h = hello(&[(3, 0.5, true)]);
        record_encounter(&mut p, &h, NodeId(1), 10.0);
        process_hello(&mut p, &h, NodeId(1), &params);
        assert_eq!(p.fib.get(3, NodeId(1)), Some(1.0 / params.ict_init));
        assert_eq!(p.utility.direct(3), 1.0 / params.ict_init);
        assert_eq!(p.utility.own(3), 1.0 / params.ict_init);
        assert_eq!(p.cnu.get(3, NodeId(1)), Some(0.5));
    }

    #[test]
    fn indirect_through_neighbor() {
        let params = RoutingParams::default();
        let mut p = MobCcnNode::new(NodeId(0), params.estimator);
        let q = NodeId(1);
        let h = hello(&[(3, 0.5, false)]);
        for t in [0.0, 2.0] {
            record_encounter(&mut p, &h, q, t);
        }
        assert_eq!(p.ict_nodes.mean(q), Some(2.0));
        process_hello(&mut p, &h, q, &params);
        assert_eq!(p.fib.get(3, q), Some(0.25));
        assert_eq!(p.utility.own(3), 0.25);

        // a lower value through another neighbour leaves the max alone
        let r = NodeId(2);
        record_encounter(&mut p, &hello(&[]), r, 2.0);
        process_hello(&mut p, &hello(&[(3, 0.001, false)]), r, &params);
        assert!(p.fib.get(3, r).unwrap() < 0.25);
        assert_eq!(p.utility.own(3), 0.25);
    }

    #[test]
    fn current_memory_follows_the_fib() {
        let params = RoutingParams {
            memory: UtilityMemory::Current,
            ..RoutingParams::default()
        };
        let mut p = MobCcnNode::new(NodeId(0), params.estimator);
        let q = NodeId(1);
        for t in [0.0, 2.0] {
            record_encounter(&mut p, &hello(&[]), q, t);
        }
        process_hello(&mut p, &hello(&[(3, 0.5, false)]), q, &params);
        assert_eq!(p.utility.own(3), 0.25);
        // q's utility dropped: so does ours
        process_hello(&mut p, &hello(&[(3, 0.1, false)]), q, &params);
        assert_eq!(p.utility.own(3), 1.0 / (10.0 + 2.0));
    }

    #[test]
    fn malformed_records_are_skipped() {
        let params = RoutingParams::default();
        let mut p = MobCcnNode::new(NodeId(0), params.estimator);
        let skipped = process_hello(&mut p, &hello(&[(1, -0.5, false), (2, 0.1, false)]), NodeId(1), &params);
        assert_eq!(skipped, 1);
        assert_eq!(p.malformed_hello_records, 1);
        assert!(p.fib.find(1).is_none());
        assert!(p.fib.find(2).is_some());
    }

    proptest! {
        #[test]
        fn indirect_never_beats_neighbor(u in 0.0f64..10.0, t in 0.0f64..1e5) {
            prop_assert!(indirect_utility(u, t) <= u);
        }

        #[test]
        fn indirect_monotone(u in 1e-6f64..10.0, du in 0.0f64..10.0, t in 0.0f64..1e5, dt in 0.0f64..1e5) {
            prop_assert!(indirect_utility(u + du, t) >= indirect_utility(u, t));
            prop_assert!(indirect_utility(u, t + dt) <= indirect_utility(u, t));
        }

        #[test]
        fn utilities_bounded(ict in 0.0f64..1e6) {
            let d = direct_utility(ict, 1e6);
            prop_assert!((0.0..=1e6).contains(&d));
        }

        #[test]
        fn own_dominates_fib_after_hellos(
            hellos in proptest::collection::vec((0u32..4, 0u32..3, 0.0f64..1.0, any::<bool>()), 1..40)
        ) {
            let params = RoutingParams::default();
            let mut p = MobCcnNode::new(NodeId(0), params.estimator);
            for (i, (q, t, u, s)) in hellos.into_iter().enumerate() {
                let q = NodeId(q + 1);
                let h = hello(&[(t, u, s)]);
                record_encounter(&mut p, &h, q, i as f64 * 10.0);
                process_hello(&mut p, &h, q, &params);
                for (ty, entry) in p.fib.iter() {
                    for v in entry.per_neighbor.values() {
                        prop_assert!(p.utility.own(*ty) >= *v);
                        prop_assert!(*v >= 0.0 && *v <= params.u_cap);
                    }
                }
            }
        }

        #[test]
        fn repeated_hello_is_idempotent(u in 0.0f64..1.0, s in any::<bool>()) {
            let params = RoutingParams::default();
            let mut p = MobCcnNode::new(NodeId(0), params.estimator);
            let h = hello(&[(1, u, s), (2, u / 2.0, false)]);
            record_encounter(&mut p, &h, NodeId(1), 5.0);
            process_hello(&mut p, &h, NodeId(1), &params);
            let before = crate::tables::debug_dump(&p.cs, &p.pit, &p.fib, &p.cnu);
            let own_before: Vec<_> = p.utility.own_iter().collect();
            process_hello(&mut p, &h, NodeId(1), &params);
            prop_assert_eq!(before, crate::tables::debug_dump(&p.cs, &p.pit, &p.fib, &p.cnu));
            prop_assert_eq!(own_before, p.utility.own_iter().collect::<Vec<_>>());
        }
    }
}
