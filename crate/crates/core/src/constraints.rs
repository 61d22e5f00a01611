//! Hard-constraint structure of the 0-1 model: one variable per
//! (train, station, delay), one-hot groups forcing exactly one departure
//! delay per (train, station), and forbidden variable pairs encoding the
//! single-block, deadlock, minimum-passing and rolling-stock conditions.
//! Station capacity is not encoded; it is verified on candidate schedules.

use crate::model::{
    BlockId, Delay, DelayDomains, Minutes, ModelError, RailwayInstance, Schedule,
    UnavoidableDelays,
};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Dense bijection (train, station, delay) <-> variable index.
#[derive(Debug, Clone)]
pub struct VariableIndex {
    vars: Vec<(usize, BlockId, Delay)>,
    groups: Vec<VarGroup>,
    group_lookup: HashMap<(usize, BlockId), usize>,
}

#[derive(Debug, Clone)]
pub struct VarGroup {
    pub train: usize,
    pub station: BlockId,
    pub offset: usize,
    pub domain_min: Delay,
    pub len: usize,
}

impl VariableIndex {
    pub fn build(instance: &RailwayInstance, domains: &DelayDomains) -> Self {
        let mut vars = Vec::new();
        let mut groups = Vec::new();
        let mut group_lookup = HashMap::new();
        for j in 0..instance.trains.len() {
            for &s in instance.decision_stations(j) {
                let dom = domains.get(j, s);
                let offset = vars.len();
                for d in dom.iter() {
                    vars.push((j, s, d));
                }
                group_lookup.insert((j, s), groups.len());
                groups.push(VarGroup {
                    train: j,
                    station: s,
                    offset,
                    domain_min: dom.min,
                    len: dom.len(),
                });
            }
        }
        Self {
            vars,
            groups,
            group_lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn decode(&self, i: usize) -> (usize, BlockId, Delay) {
        self.vars[i]
    }

    /// Index of variable (train, station, delay); None when the delay is
    /// outside the domain.
    pub fn index_of(&self, train: usize, station: BlockId, delay: Delay) -> Option<usize> {
        let g = &self.groups[*self.group_lookup.get(&(train, station))?];
        if delay < g.domain_min || delay >= g.domain_min + g.len as Delay {
            return None;
        }
        Some(g.offset + (delay - g.domain_min) as usize)
    }

    pub fn groups(&self) -> &[VarGroup] {
        &self.groups
    }

    pub fn group_of(&self, train: usize, station: BlockId) -> Option<&VarGroup> {
        self.group_lookup.get(&(train, station)).map(|&g| &self.groups[g])
    }
}

/// Which dispatching condition produced a forbidden pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConditionTag {
    SingleBlock,
    Deadlock,
    MinPassing,
    RollingStock,
}

impl std::fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConditionTag::SingleBlock => "single-block",
            ConditionTag::Deadlock => "deadlock",
            ConditionTag::MinPassing => "min-passing",
            ConditionTag::RollingStock => "rolling-stock",
        };
        f.write_str(s)
    }
}

/// Station capacity data checked on candidate schedules.
#[derive(Debug, Clone)]
pub struct CapacityCheck {
    pub station: BlockId,
    pub capacity: u32,
    pub trains: Vec<usize>,
}

/// A capacity violation: more trains than tracks at one instant.
#[derive(Debug, Clone)]
pub struct CapacityViolation {
    pub station: BlockId,
    pub time: Minutes,
    pub trains: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    /// Variable indices of each one-hot group.
    pub one_hot_groups: Vec<Vec<usize>>,
    /// Unordered forbidden index pairs, stored as (low, high).
    pub forbidden_pairs: BTreeSet<(usize, usize)>,
    /// Originating condition(s) of each pair, for diagnostics.
    pub pair_tags: BTreeMap<(usize, usize), BTreeSet<ConditionTag>>,
    pub capacity_checks: Vec<CapacityCheck>,
}

impl ConstraintSet {
    fn add_pair(&mut self, a: usize, b: usize, tag: ConditionTag) {
        debug_assert_ne!(a, b);
        let key = (a.min(b), a.max(b));
        self.forbidden_pairs.insert(key);
        self.pair_tags.entry(key).or_default().insert(tag);
    }

    /// Human-readable listing of groups and pairs for debugging and goldens.
    pub fn render(&self, instance: &RailwayInstance, index: &VariableIndex) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "variables {} groups {} forbidden-pairs {}\n",
            index.len(),
            self.one_hot_groups.len(),
            self.forbidden_pairs.len()
        ));
        for group in index.groups() {
            out.push_str(&format!(
                "group train {} station {}: x[{}..{}]\n",
                instance.trains[group.train].id,
                group.station,
                group.offset,
                group.offset + group.len
            ));
        }
        for &(a, b) in &self.forbidden_pairs {
            let (ja, sa, da) = index.decode(a);
            let (jb, sb, db) = index.decode(b);
            let tags: Vec<String> = self.pair_tags[&(a, b)]
                .iter()
                .map(|t| t.to_string())
                .collect();
            out.push_str(&format!(
                "pair ({}, {}) = ({} @{} d={}, {} @{} d={}) [{}]\n",
                a,
                b,
                instance.trains[ja].id,
                sa,
                da,
                instance.trains[jb].id,
                sb,
                db,
                tags.join(",")
            ));
        }
        out
    }
}

/// One one-hot group per (train, decision station), of size d_max + 1.
pub fn gen_one_hot(index: &VariableIndex) -> Vec<Vec<usize>> {
    index
        .groups()
        .iter()
        .map(|g| (g.offset..g.offset + g.len).collect())
        .collect()
}

fn forbid_window(
    set: &mut ConstraintSet,
    index: &VariableIndex,
    domains: &DelayDomains,
    leader: (usize, BlockId),
    follower: (usize, BlockId),
    offset: Minutes,
    span: Minutes,
    tag: ConditionTag,
    use_filter: bool,
) {
    let Some(dom_a) = domains.try_get(leader.0, leader.1) else {
        return;
    };
    let Some(dom_b) = domains.try_get(follower.0, follower.1) else {
        return;
    };
    if use_filter
        && !RailwayInstance::windows_can_conflict(
            (dom_a.min, dom_a.max),
            (dom_b.min, dom_b.max),
            offset,
            span,
        )
    {
        return;
    }
    for d in dom_a.iter() {
        let lo = (d + offset).max(dom_b.min);
        let hi = (d + offset + span - 1).min(dom_b.max);
        for d2 in lo..=hi {
            let a = index.index_of(leader.0, leader.1, d).unwrap();
            let b = index.index_of(follower.0, follower.1, d2).unwrap();
            set.add_pair(a, b, tag);
        }
    }
}

/// Forbidden pairs from the single block occupation condition: two trains in
/// the same direction may not depart a shared station closer together than
/// the leader's headway over the following segment. Generated in both train
/// orders; pairs with empty delay windows vanish.
pub fn gen_single_block(
    instance: &RailwayInstance,
    domains: &DelayDomains,
    index: &VariableIndex,
    set: &mut ConstraintSet,
    use_filter: bool,
) {
    let n = instance.trains.len();
    for j in 0..n {
        for j2 in 0..n {
            if j == j2 || instance.trains[j].direction != instance.trains[j2].direction {
                continue;
            }
            let (_, truncated) = instance.common_path(j, j2);
            for &s in &truncated {
                if instance.next_station(j, s).is_err() {
                    continue;
                }
                let headway = instance.following_headway(j, s).unwrap();
                let offset = instance.timetable_offset(j, s, j2, s);
                forbid_window(
                    set,
                    index,
                    domains,
                    (j, s),
                    (j2, s),
                    offset,
                    headway,
                    ConditionTag::SingleBlock,
                    use_filter,
                );
            }
        }
    }
}

/// Forbidden pairs from the deadlock condition: with trains facing each
/// other over a station-to-station segment, the train leaving the far end
/// must wait out the full traversal of whichever train entered first. The
/// window span is the entering train's clearing time over the segment.
pub fn gen_deadlock(
    instance: &RailwayInstance,
    domains: &DelayDomains,
    index: &VariableIndex,
    set: &mut ConstraintSet,
    use_filter: bool,
) {
    let n = instance.trains.len();
    for j in 0..n {
        for j2 in 0..n {
            if j == j2 || instance.trains[j].direction == instance.trains[j2].direction {
                continue;
            }
            let (_, truncated) = instance.common_path(j, j2);
            for &s in &truncated {
                let Ok(next) = instance.next_station(j, s) else {
                    continue;
                };
                let clearing = instance.clearing_time(j, s).unwrap();
                let offset = instance.timetable_offset(j, s, j2, next);
                forbid_window(
                    set,
                    index,
                    domains,
                    (j, s),
                    (j2, next),
                    offset,
                    clearing,
                    ConditionTag::Deadlock,
                    use_filter,
                );
            }
        }
    }
}

/// Forbidden pairs from the minimum passing time condition: a train's delay
/// can shrink between consecutive stations by at most the segment's time
/// reserve.
pub fn gen_min_passing(
    instance: &RailwayInstance,
    domains: &DelayDomains,
    index: &VariableIndex,
    set: &mut ConstraintSet,
) {
    for j in 0..instance.trains.len() {
        for &s in instance.min_passing_stations(j) {
            let next = instance.next_station(j, s).unwrap();
            let reserve = instance.time_reserve(j, s).unwrap();
            let dom_a = domains.get(j, s);
            let dom_b = domains.get(j, next);
            for d in dom_a.iter() {
                // Forbidden follower delays: 0 ..= d - reserve - 1.
                let hi = (d - reserve - 1).min(dom_b.max);
                for d2 in dom_b.min..=hi {
                    let a = index.index_of(j, s, d).unwrap();
                    let b = index.index_of(j, next, d2).unwrap();
                    set.add_pair(a, b, ConditionTag::MinPassing);
                }
            }
        }
    }
}

/// Forbidden pairs from the rolling stock circulation condition at
/// terminals: the outgoing train of a turnover pair cannot depart before
/// the incoming one has arrived and been serviced.
pub fn gen_rolling_stock(
    instance: &RailwayInstance,
    domains: &DelayDomains,
    index: &VariableIndex,
    set: &mut ConstraintSet,
) {
    for pair in &instance.turnover_pairs {
        let penult = instance.penultimate_station(pair.from);
        let start = instance.station_route(pair.to)[0];
        let slack = instance.turnover_slack(pair);
        let dom_a = domains.get(pair.from, penult);
        let dom_b = domains.get(pair.to, start);
        for d in dom_a.iter() {
            // Forbidden outgoing delays: 0 ..= d - slack (inclusive; the
            // condition is a strict inequality).
            let hi = (d - slack).min(dom_b.max);
            for d2 in dom_b.min..=hi {
                let a = index.index_of(pair.from, penult, d).unwrap();
                let b = index.index_of(pair.to, start, d2).unwrap();
                set.add_pair(a, b, ConditionTag::RollingStock);
            }
        }
    }
}

fn capacity_checks(instance: &RailwayInstance) -> Vec<CapacityCheck> {
    instance
        .blocks
        .iter()
        .filter(|b| b.kind == crate::model::BlockKind::Station)
        .map(|b| CapacityCheck {
            station: b.id,
            capacity: b.capacity,
            trains: (0..instance.trains.len())
                .filter(|&j| instance.trains[j].route.contains(&b.id))
                .collect(),
        })
        .collect()
}

/// Generate the full constraint structure for an instance.
pub fn generate(
    instance: &RailwayInstance,
    d_u: &UnavoidableDelays,
) -> (DelayDomains, VariableIndex, ConstraintSet) {
    generate_with_filter(instance, d_u, true)
}

pub fn generate_with_filter(
    instance: &RailwayInstance,
    d_u: &UnavoidableDelays,
    use_filter: bool,
) -> (DelayDomains, VariableIndex, ConstraintSet) {
    let domains = DelayDomains::build(instance, d_u);
    let index = VariableIndex::build(instance, &domains);
    let mut set = ConstraintSet {
        one_hot_groups: gen_one_hot(&index),
        ..Default::default()
    };
    gen_single_block(instance, &domains, &index, &mut set, use_filter);
    gen_deadlock(instance, &domains, &index, &mut set, use_filter);
    gen_min_passing(instance, &domains, &index, &mut set);
    gen_rolling_stock(instance, &domains, &index, &mut set);
    set.capacity_checks = capacity_checks(instance);
    (domains, index, set)
}

/// Verify the capacity condition on a candidate schedule: at no instant may
/// a station hold more trains than it has tracks. Returns every violation,
/// reported at the instant the (capacity+1)-th train enters.
pub fn check_capacity(
    instance: &RailwayInstance,
    schedule: &Schedule,
) -> Result<Vec<CapacityViolation>, ModelError> {
    for &(j, s) in schedule.delays.keys() {
        if j >= instance.trains.len() {
            return Err(ModelError::ScheduleUnknownTrain(j));
        }
        if !instance.trains[j].route.contains(&s) {
            return Err(ModelError::NotOnStationRoute(
                instance.trains[j].id.clone(),
                s,
            ));
        }
    }
    let occupations = schedule.occupations(instance)?;
    let mut violations = Vec::new();
    for block in &instance.blocks {
        let cap = match block.kind {
            crate::model::BlockKind::Station => block.capacity,
            crate::model::BlockKind::Line => 1,
        };
        let mut events: Vec<(Minutes, i32, usize)> = Vec::new();
        for occ in occupations.iter().filter(|o| o.block == block.id) {
            if occ.leave > occ.enter {
                events.push((occ.enter, 1, occ.train));
                events.push((occ.leave, -1, occ.train));
            }
        }
        // Departures before arrivals at the same instant: half-open intervals.
        events.sort_by_key(|&(t, delta, _)| (t, delta));
        let mut inside: Vec<usize> = Vec::new();
        for (t, delta, train) in events {
            if delta > 0 {
                inside.push(train);
                if inside.len() as u32 > cap {
                    violations.push(CapacityViolation {
                        station: block.id,
                        time: t,
                        trains: inside.clone(),
                    });
                }
            } else {
                inside.retain(|&j| j != train);
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;
    use crate::model::DelayDomain;

    fn build(name: &str) -> (RailwayInstance, UnavoidableDelays, DelayDomains, VariableIndex, ConstraintSet) {
        let inst = fixtures::load(name).unwrap();
        let d_u = inst.unavoidable_delays();
        let (domains, index, set) = generate(&inst, &d_u);
        (inst, d_u, domains, index, set)
    }

    #[test]
    fn crossing_variables_and_groups() {
        let (_, _, _, index, set) = build("crossing");
        assert_eq!(index.len(), 4);
        assert_eq!(set.one_hot_groups, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn crossing_deadlock_pairs_are_equal_delays() {
        let (_, _, _, index, set) = build("crossing");
        // Departing simultaneously in either delay slot is forbidden.
        let a = (
            index.index_of(0, BlockId(1), 1).unwrap(),
            index.index_of(1, BlockId(3), 1).unwrap(),
        );
        let b = (
            index.index_of(0, BlockId(1), 2).unwrap(),
            index.index_of(1, BlockId(3), 2).unwrap(),
        );
        let expected: BTreeSet<(usize, usize)> =
            [(a.0.min(a.1), a.0.max(a.1)), (b.0.min(b.1), b.0.max(b.1))]
                .into_iter()
                .collect();
        assert_eq!(set.forbidden_pairs, expected);
    }

    #[test]
    fn crossing_has_no_min_passing_pairs() {
        let (inst, _, _, _, _) = build("crossing");
        for j in 0..inst.trains.len() {
            assert!(inst.min_passing_stations(j).is_empty());
        }
    }

    #[test]
    fn line216_counts() {
        let (_, _, _, index, set) = build("line216");
        assert_eq!(index.len(), 48);
        assert_eq!(set.one_hot_groups.len(), 6);
        for g in &set.one_hot_groups {
            assert_eq!(g.len(), 8);
        }
    }

    #[test]
    fn line191_counts() {
        let (_, _, _, index, set) = build("line191-reconstructed");
        assert_eq!(index.len(), 198);
        assert_eq!(set.one_hot_groups.len(), 18);
        // The Inter-City turnover produces rolling stock pairs.
        assert!(set
            .pair_tags
            .values()
            .any(|tags| tags.contains(&ConditionTag::RollingStock)));
    }

    #[test]
    fn line216_has_no_rolling_stock_pairs() {
        let (_, _, _, _, set) = build("line216");
        assert!(!set
            .pair_tags
            .values()
            .any(|tags| tags.contains(&ConditionTag::RollingStock)));
    }

    /// Independent re-derivation: every generated pair must violate the
    /// inequality form of its condition, and every delay combination that
    /// violates an inequality must be a generated pair.
    #[test]
    fn pairs_match_inequality_oracle() {
        for name in ["crossing", "line216", "line191-reconstructed"] {
            let (inst, _, domains, index, set) = build(name);
            let mut expected: BTreeSet<(usize, usize)> = BTreeSet::new();
            let n = inst.trains.len();
            // Single block + deadlock windows, in both orders.
            for j in 0..n {
                for j2 in 0..n {
                    if j == j2 {
                        continue;
                    }
                    let same_dir = inst.trains[j].direction == inst.trains[j2].direction;
                    let (_, truncated) = inst.common_path(j, j2);
                    for &s in &truncated {
                        let Ok(next) = inst.next_station(j, s) else { continue };
                        let (span, target) = if same_dir {
                            (inst.following_headway(j, s).unwrap(), s)
                        } else {
                            (inst.clearing_time(j, s).unwrap(), next)
                        };
                        let offset = inst.timetable_offset(j, s, j2, target);
                        let (Some(dom_a), Some(dom_b)) =
                            (domains.try_get(j, s), domains.try_get(j2, target))
                        else {
                            continue;
                        };
                        for d in dom_a.iter() {
                            for d2 in dom_b.iter() {
                                // Violation: follower departs inside the
                                // leader's occupation window.
                                if d2 >= d + offset && d2 < d + offset + span {
                                    let a = index.index_of(j, s, d).unwrap();
                                    let b = index.index_of(j2, target, d2).unwrap();
                                    expected.insert((a.min(b), a.max(b)));
                                }
                            }
                        }
                    }
                }
            }
            // Minimum passing windows.
            for j in 0..n {
                for &s in inst.min_passing_stations(j) {
                    let next = inst.next_station(j, s).unwrap();
                    let reserve = inst.time_reserve(j, s).unwrap();
                    let dom_a = domains.get(j, s);
                    let dom_b = domains.get(j, next);
                    for d in dom_a.iter() {
                        for d2 in dom_b.iter() {
                            if d2 < d - reserve {
                                let a = index.index_of(j, s, d).unwrap();
                                let b = index.index_of(j, next, d2).unwrap();
                                expected.insert((a.min(b), a.max(b)));
                            }
                        }
                    }
                }
            }
            // Rolling stock windows.
            for pair in &inst.turnover_pairs {
                let penult = inst.penultimate_station(pair.from);
                let start = inst.station_route(pair.to)[0];
                let slack = inst.turnover_slack(pair);
                let dom_a = domains.get(pair.from, penult);
                let dom_b = domains.get(pair.to, start);
                for d in dom_a.iter() {
                    for d2 in dom_b.iter() {
                        if !(d2 > d - slack) {
                            let a = index.index_of(pair.from, penult, d).unwrap();
                            let b = index.index_of(pair.to, start, d2).unwrap();
                            expected.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
            assert_eq!(set.forbidden_pairs, expected, "{name}");
        }
    }

    #[test]
    fn skip_filter_changes_nothing() {
        for name in ["crossing", "line216", "line191-reconstructed"] {
            let inst = fixtures::load(name).unwrap();
            let d_u = inst.unavoidable_delays();
            let (_, _, with) = generate_with_filter(&inst, &d_u, true);
            let (_, _, without) = generate_with_filter(&inst, &d_u, false);
            assert_eq!(with.forbidden_pairs, without.forbidden_pairs, "{name}");
        }
    }

    #[test]
    fn rolling_stock_empty_when_slack_exceeds_domains() {
        let (inst, d_u, _, _, _) = build("line191-reconstructed");
        // Rebuild with a huge minimum turnover slack by shrinking d_max:
        // with slack far above any reachable delay the window is empty.
        let mut modified = inst.clone();
        modified.turnover_pairs[0].min_turnover = -1000;
        let (_, _, set) = generate(&modified, &d_u);
        assert!(!set
            .pair_tags
            .values()
            .any(|tags| tags.contains(&ConditionTag::RollingStock)));
    }

    #[test]
    fn deadlock_skips_disjoint_routes() {
        // Trains whose reachable time windows never overlap produce no pairs:
        // in line191, KS101 and KS104 are hours apart.
        let (inst, _, _, index, set) = build("line191-reconstructed");
        let a = inst.train_index("KS101").unwrap();
        let b = inst.train_index("KS104").unwrap();
        for &(x, y) in &set.forbidden_pairs {
            let (jx, _, _) = index.decode(x);
            let (jy, _, _) = index.decode(y);
            assert!(
                !(jx == a && jy == b || jx == b && jy == a),
                "unexpected pair between far-apart trains"
            );
        }
    }

    #[test]
    fn capacity_single_train_clean() {
        let inst = fixtures::load("line216").unwrap();
        let schedule = Schedule::undisturbed(&inst);
        assert!(check_capacity(&inst, &schedule).unwrap().is_empty());
    }

    #[test]
    fn capacity_detects_constructed_overlap() {
        // Two trains overlapping one minute at a capacity-1 station.
        let text = "\
schema 1
name tiny

[blocks]
1 station 1
2 line 1
3 station 1

[trains]
A up 0 1 2 3
B up 0 1 2 3

[weights]
A 1.0
B 1.0

[timetable]
A 1 08:00 08:02 1
A 2 08:02 08:05 3
A 3 08:05 08:06 1
B 1 08:01 08:10 1
B 2 08:10 08:13 3
B 3 08:13 08:14 1

[d_max]
default 2

[penalties]
p_sum 2.0
p_pair 2.0
";
        let inst = crate::io::instance::parse_instance(text).unwrap();
        let schedule = Schedule::undisturbed(&inst);
        let violations = check_capacity(&inst, &schedule).unwrap();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].station, BlockId(1));
        assert_eq!(violations[0].trains.len(), 2);
    }

    #[test]
    fn capacity_rejects_unknown_schedule_keys() {
        let inst = fixtures::load("crossing").unwrap();
        let mut delays = std::collections::BTreeMap::new();
        delays.insert((7usize, BlockId(1)), 0i64);
        let schedule = Schedule::new(delays);
        assert!(check_capacity(&inst, &schedule).is_err());
    }

    #[test]
    fn domain_arithmetic() {
        let dom = DelayDomain { min: 4, max: 11 };
        assert_eq!(dom.len(), 8);
        assert!(dom.contains(4) && dom.contains(11) && !dom.contains(12));
    }
}
