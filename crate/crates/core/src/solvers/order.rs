//! Exact precedence-order solver.
//!
//! The delay variables form a difference-constraint system: the minimum
//! passing and turnover conditions are unconditional `d(v) >= d(u) + k`
//! edges, while each contending pair of trains on a shared segment
//! contributes a disjunction of two such edges (one per passing order).
//! Enumerating the order choices and propagating longest paths from the
//! primary-delay lower bounds yields the exact optimum of the discretized
//! model without any big-M integer programming.

use crate::model::{
    BlockId, Delay, DelayDomains, Minutes, RailwayInstance, Schedule, UnavoidableDelays,
};
use crate::solvers::SolveError;
use std::collections::BTreeMap;

/// One delay variable (train, decision station).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub train: usize,
    pub station: BlockId,
}

/// `d[to] >= d[from] + weight`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: i64,
}

/// How one side of a contention event can behave inside the delay box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideKind {
    /// Always satisfied; choosing it costs nothing.
    Vacuous,
    /// Satisfiable and potentially binding.
    Real,
    /// Unsatisfiable within the delay bounds.
    Impossible,
}

/// A contention between two trains over one shared segment. Side A is the
/// reference train passing first, side B the other train first; exactly one
/// side must hold in a feasible schedule.
#[derive(Debug, Clone)]
pub struct Event {
    pub a_node: usize,
    pub b_node: usize,
    /// Side A: `d[b] >= d[a] + k_fwd`.
    pub k_fwd: i64,
    /// Side B: `d[a] >= d[b] + k_rev`.
    pub k_rev: i64,
    pub a_kind: SideKind,
    pub b_kind: SideKind,
    /// Scheduled segment entry of each side, for heuristic urgency rules.
    pub a_entry_tt: Minutes,
    pub b_entry_tt: Minutes,
    /// Scheduled segment exit of each side.
    pub a_exit_tt: Minutes,
    pub b_exit_tt: Minutes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSide {
    AFirst,
    BFirst,
}

impl Event {
    pub fn edge(&self, side: EventSide) -> Edge {
        match side {
            EventSide::AFirst => Edge {
                from: self.a_node,
                to: self.b_node,
                weight: self.k_fwd,
            },
            EventSide::BFirst => Edge {
                from: self.b_node,
                to: self.a_node,
                weight: self.k_rev,
            },
        }
    }

    pub fn kind(&self, side: EventSide) -> SideKind {
        match side {
            EventSide::AFirst => self.a_kind,
            EventSide::BFirst => self.b_kind,
        }
    }

    /// Does the side's inequality hold under the given delays?
    pub fn holds(&self, side: EventSide, delays: &[i64]) -> bool {
        let e = self.edge(side);
        delays[e.to] >= delays[e.from] + e.weight
    }
}

/// The difference-constraint view of an instance.
#[derive(Debug, Clone)]
pub struct DisjunctiveModel {
    pub nodes: Vec<Node>,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    pub fixed: Vec<Edge>,
    pub events: Vec<Event>,
    node_lookup: BTreeMap<(usize, BlockId), usize>,
}

impl DisjunctiveModel {
    pub fn node(&self, train: usize, station: BlockId) -> usize {
        self.node_lookup[&(train, station)]
    }

    pub fn build(instance: &RailwayInstance, domains: &DelayDomains) -> Self {
        let mut nodes = Vec::new();
        let mut node_lookup = BTreeMap::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for j in 0..instance.trains.len() {
            for &s in instance.decision_stations(j) {
                node_lookup.insert((j, s), nodes.len());
                nodes.push(Node { train: j, station: s });
                let dom = domains.get(j, s);
                lower.push(dom.min);
                upper.push(dom.max);
            }
        }

        let mut fixed = Vec::new();
        for j in 0..instance.trains.len() {
            for &s in instance.min_passing_stations(j) {
                let next = instance.next_station(j, s).unwrap();
                let reserve = instance.time_reserve(j, s).unwrap();
                fixed.push(Edge {
                    from: node_lookup[&(j, s)],
                    to: node_lookup[&(j, next)],
                    weight: -reserve,
                });
            }
        }
        for pair in &instance.turnover_pairs {
            let penult = instance.penultimate_station(pair.from);
            let start = instance.station_route(pair.to)[0];
            let slack = instance.turnover_slack(pair);
            fixed.push(Edge {
                from: node_lookup[&(pair.from, penult)],
                to: node_lookup[&(pair.to, start)],
                weight: -slack + 1,
            });
        }

        let classify = |from: usize, to: usize, k: i64, lower: &[i64], upper: &[i64]| {
            if upper[from] + k <= lower[to] {
                SideKind::Vacuous
            } else if lower[from] + k > upper[to] {
                SideKind::Impossible
            } else {
                SideKind::Real
            }
        };

        let mut events = Vec::new();
        let n = instance.trains.len();
        for j in 0..n {
            for j2 in j + 1..n {
                let same_dir = instance.trains[j].direction == instance.trains[j2].direction;
                let (_, truncated) = instance.common_path(j, j2);
                for &s in &truncated {
                    let Ok(next) = instance.next_station(j, s) else {
                        continue;
                    };
                    let (target, span_a, span_b) = if same_dir {
                        if instance.next_station(j2, s).is_err() {
                            continue;
                        }
                        (
                            s,
                            instance.following_headway(j, s).unwrap(),
                            instance.following_headway(j2, s).unwrap(),
                        )
                    } else {
                        if instance.next_station(j2, next).is_err() {
                            continue;
                        }
                        (
                            next,
                            instance.clearing_time(j, s).unwrap(),
                            instance.clearing_time(j2, next).unwrap(),
                        )
                    };
                    if span_a <= 0 && span_b <= 0 {
                        continue;
                    }
                    let (Some(a_node), Some(b_node)) = (
                        node_lookup.get(&(j, s)).copied(),
                        node_lookup.get(&(j2, target)).copied(),
                    ) else {
                        continue;
                    };
                    let offset = instance.timetable_offset(j, s, j2, target);
                    let k_fwd = offset + span_a.max(1);
                    let k_rev = -offset + span_b.max(1);
                    let a_kind = classify(a_node, b_node, k_fwd, &lower, &upper);
                    let b_kind = classify(b_node, a_node, k_rev, &lower, &upper);
                    if a_kind == SideKind::Vacuous || b_kind == SideKind::Vacuous {
                        // One passing order is free of charge; the minimal
                        // delay assignment already realizes it.
                        continue;
                    }
                    let a_entry_tt = instance.timetable.t_out(j, s);
                    let b_entry_tt = instance.timetable.t_out(j2, target);
                    events.push(Event {
                        a_node,
                        b_node,
                        k_fwd,
                        k_rev,
                        a_kind,
                        b_kind,
                        a_entry_tt,
                        b_entry_tt,
                        a_exit_tt: a_entry_tt + instance.clearing_time(j, s).unwrap(),
                        b_exit_tt: b_entry_tt
                            + if same_dir {
                                instance.clearing_time(j2, s).unwrap()
                            } else {
                                instance.clearing_time(j2, target).unwrap()
                            },
                    });
                }
            }
        }

        Self {
            nodes,
            lower,
            upper,
            fixed,
            events,
            node_lookup,
        }
    }

    /// Longest-path fixed point: raise delays from `start` until every edge
    /// holds, or some delay exceeds its bound.
    pub fn propagate(&self, edges: &[Edge], start: &[i64]) -> Option<Vec<i64>> {
        let mut d = start.to_vec();
        for (i, &lb) in self.lower.iter().enumerate() {
            if d[i] < lb {
                d[i] = lb;
            }
        }
        loop {
            let mut changed = false;
            for e in edges {
                let need = d[e.from] + e.weight;
                if d[e.to] < need {
                    if need > self.upper[e.to] {
                        return None;
                    }
                    d[e.to] = need;
                    changed = true;
                }
            }
            if !changed {
                return Some(d);
            }
        }
    }

    pub fn schedule_from_delays(&self, delays: &[i64]) -> Schedule {
        let mut map = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            map.insert((node.train, node.station), delays[i]);
        }
        Schedule::new(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderObjective {
    /// Weighted sum of normalized secondary delays at penultimate stations.
    WeightedSum,
    /// Largest secondary delay at a penultimate station.
    MaxSecondary,
}

#[derive(Debug, Clone)]
pub struct OrderSolution {
    pub schedule: Schedule,
    pub delays: Vec<i64>,
    pub objective: f64,
    /// Chosen side per branchable event, aligned with `branch_events`.
    pub assignment: Vec<EventSide>,
    pub orders_tried: u64,
    pub orders_feasible: u64,
}

fn objective_value(
    instance: &RailwayInstance,
    d_u: &UnavoidableDelays,
    model: &DisjunctiveModel,
    delays: &[i64],
    objective: OrderObjective,
) -> f64 {
    let mut weighted = 0.0;
    let mut max_secondary: Delay = 0;
    for (j, t) in instance.trains.iter().enumerate() {
        let s = instance.penultimate_station(j);
        let node = model.node(j, s);
        let secondary = delays[node] - d_u.get(j, s);
        max_secondary = max_secondary.max(secondary);
        if instance.d_max[j] > 0 {
            weighted += t.weight * secondary as f64 / instance.d_max[j] as f64;
        }
    }
    match objective {
        OrderObjective::WeightedSum => weighted,
        OrderObjective::MaxSecondary => max_secondary as f64,
    }
}

const MAX_BRANCH_EVENTS: usize = 24;

/// Enumerate every passing order, propagate minimal consistent delays, and
/// return the feasible schedule minimizing the objective. Errors with
/// `Infeasible` when no order admits delays within the bounds.
pub fn exact_order_solver(
    instance: &RailwayInstance,
    objective: OrderObjective,
) -> Result<OrderSolution, SolveError> {
    let d_u = instance.unavoidable_delays();
    let domains = DelayDomains::build(instance, &d_u);
    let model = DisjunctiveModel::build(instance, &domains);

    // Events with exactly one possible side become fixed edges; events with
    // two possible sides are branched.
    let mut fixed = model.fixed.clone();
    let mut branch: Vec<&Event> = Vec::new();
    for event in &model.events {
        match (event.a_kind, event.b_kind) {
            (SideKind::Impossible, SideKind::Impossible) => {
                return Err(SolveError::Infeasible(
                    "a train pair cannot pass in either order within the delay bounds".into(),
                ))
            }
            (SideKind::Real, SideKind::Impossible) => fixed.push(event.edge(EventSide::AFirst)),
            (SideKind::Impossible, SideKind::Real) => fixed.push(event.edge(EventSide::BFirst)),
            (SideKind::Real, SideKind::Real) => branch.push(event),
            _ => unreachable!("vacuous events are dropped at construction"),
        }
    }
    if branch.len() > MAX_BRANCH_EVENTS {
        return Err(SolveError::SearchSpaceTooLarge(
            1u128 << branch.len().min(127),
            1u128 << MAX_BRANCH_EVENTS,
        ));
    }

    let mut best: Option<(f64, Vec<i64>, Vec<EventSide>)> = None;
    let mut tried = 0u64;
    let mut feasible = 0u64;
    let k = branch.len();
    let mut edges = fixed.clone();
    for mask in 0u64..1u64 << k {
        tried += 1;
        edges.truncate(fixed.len());
        let mut assignment = Vec::with_capacity(k);
        for (b, event) in branch.iter().enumerate() {
            let side = if mask >> b & 1 == 0 {
                EventSide::AFirst
            } else {
                EventSide::BFirst
            };
            assignment.push(side);
            edges.push(event.edge(side));
        }
        let Some(delays) = model.propagate(&edges, &model.lower) else {
            continue;
        };
        feasible += 1;
        let value = objective_value(instance, &d_u, &model, &delays, objective);
        let better = match &best {
            None => true,
            Some((bv, bd, _)) => {
                value < bv - 1e-12 || ((value - bv).abs() <= 1e-12 && delays < *bd)
            }
        };
        if better {
            best = Some((value, delays, assignment));
        }
    }

    let (objective, delays, assignment) = best.ok_or_else(|| {
        SolveError::Infeasible("no passing order admits delays within d_max".into())
    })?;
    Ok(OrderSolution {
        schedule: model.schedule_from_delays(&delays),
        delays,
        objective,
        assignment,
        orders_tried: tried,
        orders_feasible: feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;

    #[test]
    fn crossing_optimum_matches_qubo_ground() {
        let inst = fixtures::load("crossing").unwrap();
        let sol = exact_order_solver(&inst, OrderObjective::WeightedSum).unwrap();
        // Train 2 goes first: train 1 waits one extra minute.
        assert_eq!(sol.schedule.delay(0, BlockId(1)), 2);
        assert_eq!(sol.schedule.delay(1, BlockId(3)), 1);
        assert!((sol.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn line216_optimum() {
        let inst = fixtures::load("line216").unwrap();
        let d_u = inst.unavoidable_delays();
        let sol = exact_order_solver(&inst, OrderObjective::WeightedSum).unwrap();
        assert!((sol.objective - 8.5 / 7.0).abs() < 1e-9);
        assert_eq!(sol.schedule.max_secondary(&inst, &d_u), 4);
        assert_eq!(sol.schedule.secondary_sum(&inst, &d_u), 7);
    }

    #[test]
    fn line216_min_max_secondary_is_four() {
        let inst = fixtures::load("line216").unwrap();
        let sol = exact_order_solver(&inst, OrderObjective::MaxSecondary).unwrap();
        assert_eq!(sol.objective, 4.0);
    }

    #[test]
    fn single_train_runs_at_unavoidable_delays() {
        let text = "\
schema 1
name solo

[blocks]
1 station 2
2 line 1
3 station 2
4 line 1
5 station 2

[trains]
A up 6 1 2 3 4 5

[weights]
A 1.0

[timetable]
A 1 08:00 08:02 1
A 2 08:02 08:07 5
A 3 08:07 08:10 1
A 4 08:10 08:15 5
A 5 08:15 08:16 1

[d_max]
default 4

[penalties]
p_sum 2.0
p_pair 2.0
";
        let inst = crate::io::instance::parse_instance(text).unwrap();
        let d_u = inst.unavoidable_delays();
        let sol = exact_order_solver(&inst, OrderObjective::WeightedSum).unwrap();
        assert_eq!(sol.objective, 0.0);
        for &s in inst.decision_stations(0) {
            assert_eq!(sol.schedule.delay(0, s), d_u.get(0, s));
        }
    }

    #[test]
    fn infeasible_when_d_max_too_small() {
        let mut inst = fixtures::load("crossing").unwrap();
        inst.d_max = vec![0, 0];
        assert!(matches!(
            exact_order_solver(&inst, OrderObjective::WeightedSum),
            Err(SolveError::Infeasible(_))
        ));
    }

    #[test]
    fn line191_solves_without_branch_blowup() {
        let inst = fixtures::load("line191-reconstructed").unwrap();
        let sol = exact_order_solver(&inst, OrderObjective::WeightedSum).unwrap();
        assert!(sol.orders_tried <= 4096, "tried {}", sol.orders_tried);
        assert!(sol.objective >= 0.0);
        let d_u = inst.unavoidable_delays();
        // Every delay within bounds and above its primary floor.
        for ((j, s), &d) in &sol.schedule.delays {
            assert!(d >= d_u.get(*j, *s));
            assert!(d <= d_u.get(*j, *s) + inst.d_max[*j]);
        }
    }
}
