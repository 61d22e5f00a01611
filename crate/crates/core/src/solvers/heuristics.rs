//! Classical dispatching heuristics. All three resolve conflicts one at a
//! time and propagate the implied delays before looking for the next
//! conflict, so every decision sees the consequences of the previous ones.
//!
//! FCFS gives way to the train that arrives at the contested segment first,
//! FLFS to the train that would leave it first, and AMCC greedily picks the
//! precedence that keeps the current maximum secondary delay lowest.

use crate::constraints::check_capacity;
use crate::model::{RailwayInstance, Schedule, UnavoidableDelays};
use crate::solvers::order::{DisjunctiveModel, Edge, Event, EventSide, SideKind};
use crate::solvers::SolveError;
use crate::model::DelayDomains;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    Fcfs,
    Flfs,
    Amcc,
}

impl Heuristic {
    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Fcfs => "fcfs",
            Heuristic::Flfs => "flfs",
            Heuristic::Amcc => "amcc",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicSolution {
    pub schedule: Schedule,
    pub max_secondary: i64,
    pub secondary_sum: i64,
    pub objective: f64,
    pub decisions: usize,
}

/// A conflict still open under the current delays: neither passing order of
/// the event holds.
fn violated<'a>(events: &[&'a Event], delays: &[i64]) -> Vec<(usize, &'a Event)> {
    events
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.holds(EventSide::AFirst, delays) && !e.holds(EventSide::BFirst, delays))
        .map(|(i, &e)| (i, e))
        .collect()
}

/// Actual segment entry/exit times of both sides of an event.
fn event_times(event: &Event, delays: &[i64]) -> (i64, i64, i64, i64) {
    let a_entry = event.a_entry_tt + delays[event.a_node];
    let b_entry = event.b_entry_tt + delays[event.b_node];
    let a_exit = event.a_exit_tt + delays[event.a_node];
    let b_exit = event.b_exit_tt + delays[event.b_node];
    (a_entry, b_entry, a_exit, b_exit)
}

fn max_secondary_of(
    instance: &RailwayInstance,
    d_u: &UnavoidableDelays,
    model: &DisjunctiveModel,
    delays: &[i64],
) -> i64 {
    (0..instance.trains.len())
        .map(|j| {
            let s = instance.penultimate_station(j);
            delays[model.node(j, s)] - d_u.get(j, s)
        })
        .max()
        .unwrap_or(0)
}

pub fn dispatch(
    instance: &RailwayInstance,
    heuristic: Heuristic,
) -> Result<HeuristicSolution, SolveError> {
    let d_u = instance.unavoidable_delays();
    let domains = DelayDomains::build(instance, &d_u);
    let model = DisjunctiveModel::build(instance, &domains);

    let mut edges: Vec<Edge> = model.fixed.clone();
    // One-sided events are settled up front.
    let mut open: Vec<&Event> = Vec::new();
    for event in &model.events {
        match (event.a_kind, event.b_kind) {
            (SideKind::Impossible, SideKind::Impossible) => {
                return Err(SolveError::Infeasible(
                    "a train pair cannot pass in either order within the delay bounds".into(),
                ))
            }
            (SideKind::Real, SideKind::Impossible) => edges.push(event.edge(EventSide::AFirst)),
            (SideKind::Impossible, SideKind::Real) => edges.push(event.edge(EventSide::BFirst)),
            _ => open.push(event),
        }
    }

    let mut delays = model
        .propagate(&edges, &model.lower)
        .ok_or_else(|| SolveError::Infeasible("delay bounds too tight".into()))?;
    let mut decisions = 0usize;

    loop {
        let conflicts = violated(&open, &delays);
        if conflicts.is_empty() {
            break;
        }
        // Urgency: the conflict whose segment is reached first.
        let (event, preferred): (&Event, EventSide) = match heuristic {
            Heuristic::Fcfs | Heuristic::Flfs => {
                let (_, event) = conflicts
                    .iter()
                    .min_by_key(|(i, e)| {
                        let (a_entry, b_entry, _, _) = event_times(e, &delays);
                        (a_entry.min(b_entry), *i)
                    })
                    .copied()
                    .unwrap();
                let (a_entry, b_entry, a_exit, b_exit) = event_times(event, &delays);
                let a_wins = match heuristic {
                    // Way is given to the train that first arrives at, or
                    // first leaves, the contested section. Ties fall back to
                    // the timetable, then to the train order.
                    Heuristic::Fcfs => (a_entry, event.a_entry_tt) <= (b_entry, event.b_entry_tt),
                    Heuristic::Flfs => (a_exit, event.a_exit_tt) <= (b_exit, event.b_exit_tt),
                    Heuristic::Amcc => unreachable!(),
                };
                let preferred = if a_wins { EventSide::AFirst } else { EventSide::BFirst };
                (event, preferred)
            }
            Heuristic::Amcc => {
                // Try each side of each open conflict; keep the choice whose
                // propagation leaves the smallest current maximum secondary
                // delay.
                let mut best: Option<((i64, i64, usize), (&Event, EventSide))> = None;
                for (idx, event) in &conflicts {
                    for side in [EventSide::AFirst, EventSide::BFirst] {
                        if event.kind(side) == SideKind::Impossible {
                            continue;
                        }
                        let mut trial = edges.clone();
                        trial.push(event.edge(side));
                        if let Some(d) = model.propagate(&trial, &delays) {
                            let cost = max_secondary_of(instance, &d_u, &model, &d);
                            let (a_entry, b_entry, _, _) = event_times(event, &delays);
                            let key = (cost, a_entry.min(b_entry), *idx);
                            if best.as_ref().map(|(k, _)| key < *k).unwrap_or(true) {
                                best = Some((key, (event, side)));
                            }
                        }
                    }
                }
                best.map(|(_, pick)| pick)
                    .ok_or_else(|| SolveError::Infeasible("no resolvable conflict".into()))?
            }
        };
        let mut settled = false;
        for side in [preferred, opposite(preferred)] {
            if event.kind(side) == SideKind::Impossible {
                continue;
            }
            let mut trial = edges.clone();
            trial.push(event.edge(side));
            if let Some(d) = model.propagate(&trial, &delays) {
                edges = trial;
                delays = d;
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(SolveError::Infeasible(
                "conflict cannot be resolved within the delay bounds".into(),
            ));
        }
        decisions += 1;
    }

    let schedule = model.schedule_from_delays(&delays);
    let violations = check_capacity(instance, &schedule)?;
    if !violations.is_empty() {
        return Err(SolveError::CapacityViolated(violations.len()));
    }
    Ok(HeuristicSolution {
        max_secondary: schedule.max_secondary(instance, &d_u),
        secondary_sum: schedule.secondary_sum(instance, &d_u),
        objective: schedule.objective(instance, &d_u),
        schedule,
        decisions,
    })
}

fn opposite(side: EventSide) -> EventSide {
    match side {
        EventSide::AFirst => EventSide::BFirst,
        EventSide::BFirst => EventSide::AFirst,
    }
}

pub fn fcfs(instance: &RailwayInstance) -> Result<HeuristicSolution, SolveError> {
    dispatch(instance, Heuristic::Fcfs)
}

pub fn flfs(instance: &RailwayInstance) -> Result<HeuristicSolution, SolveError> {
    dispatch(instance, Heuristic::Flfs)
}

pub fn amcc(instance: &RailwayInstance) -> Result<HeuristicSolution, SolveError> {
    dispatch(instance, Heuristic::Amcc)
}
