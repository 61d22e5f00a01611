//! Instance document format: a line-oriented sectioned text file.
//!
//! ```text
//! schema 1
//! name line216
//!
//! [blocks]      # id kind capacity
//! [trains]      # id direction initial_delay route-blocks...
//! [weights]     # train weight
//! [timetable]   # train block arrive depart min_minutes
//! [d_max]       # `default N` or `train N`
//! [turnover]    # from to min_turnover_minutes
//! [penalties]   # p_sum / p_pair
//! ```
//!
//! Times are `HH:MM` (hours may exceed 23 for after-midnight entries).

use crate::model::{
    Block, BlockId, BlockKind, Direction, Minutes, RailwayInstance, Timetable, TimetableEntry,
    Train, TurnoverPair,
};
use std::collections::HashMap;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {0}: {1}")]
    At(usize, String),
    #[error("missing `{0}` section")]
    MissingSection(&'static str),
    #[error("unsupported schema version {0} (expected {1})")]
    Schema(u32, u32),
    #[error("validation: {0}")]
    Validation(#[from] crate::model::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::At(line, msg.into())
}

pub fn parse_time(s: &str) -> Option<Minutes> {
    let (h, m) = s.split_once(':')?;
    let h: i64 = h.parse().ok()?;
    let m: i64 = m.parse().ok()?;
    if !(0..60).contains(&m) || h < 0 {
        return None;
    }
    Some(h * 60 + m)
}

pub fn format_time(t: Minutes) -> String {
    format!("{:02}:{:02}", t / 60, t % 60)
}

/// Parse an instance document from text.
pub fn parse_instance(text: &str) -> Result<RailwayInstance, ParseError> {
    let mut schema = None;
    let mut name = String::from("unnamed");
    let mut section = String::new();

    let mut blocks: Vec<Block> = Vec::new();
    struct RawTrain {
        id: String,
        direction: Direction,
        initial_delay: i64,
        route: Vec<BlockId>,
        line: usize,
    }
    let mut raw_trains: Vec<RawTrain> = Vec::new();
    let mut weights: HashMap<String, f64> = HashMap::new();
    let mut timetable_rows: Vec<(String, BlockId, Minutes, Minutes, Minutes, usize)> = Vec::new();
    let mut d_max_default: Option<i64> = None;
    let mut d_max_per: HashMap<String, i64> = HashMap::new();
    let mut turnover_rows: Vec<(String, String, Minutes, usize)> = Vec::new();
    let mut p_sum = None;
    let mut p_pair = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw_line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let sec = rest
                .strip_suffix(']')
                .ok_or_else(|| err(lineno, "unterminated section header"))?;
            section = sec.trim().to_string();
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section.as_str() {
            "" => match fields[0] {
                "schema" => {
                    let v: u32 = fields
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, "schema expects an integer"))?;
                    schema = Some(v);
                }
                "name" => {
                    name = fields
                        .get(1)
                        .ok_or_else(|| err(lineno, "name expects a value"))?
                        .to_string();
                }
                other => return Err(err(lineno, format!("unexpected `{other}` before sections"))),
            },
            "blocks" => {
                if fields.len() != 3 {
                    return Err(err(lineno, "blocks row: expected `id kind capacity`"));
                }
                let id: u32 = fields[0]
                    .parse()
                    .map_err(|_| err(lineno, "block id must be an integer"))?;
                let kind = match fields[1] {
                    "station" => BlockKind::Station,
                    "line" => BlockKind::Line,
                    other => return Err(err(lineno, format!("unknown block kind `{other}`"))),
                };
                let capacity: u32 = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, "capacity must be an integer"))?;
                blocks.push(Block {
                    id: BlockId(id),
                    kind,
                    capacity,
                });
            }
            "trains" => {
                if fields.len() < 4 {
                    return Err(err(
                        lineno,
                        "trains row: expected `id direction initial_delay route...`",
                    ));
                }
                let direction = match fields[1] {
                    "up" => Direction::Up,
                    "down" => Direction::Down,
                    other => return Err(err(lineno, format!("unknown direction `{other}`"))),
                };
                let initial_delay: i64 = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, "initial delay must be an integer"))?;
                let route = fields[3..]
                    .iter()
                    .map(|f| f.parse().map(BlockId))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(lineno, "route entries must be block ids"))?;
                raw_trains.push(RawTrain {
                    id: fields[0].to_string(),
                    direction,
                    initial_delay,
                    route,
                    line: lineno,
                });
            }
            "weights" => {
                if fields.len() != 2 {
                    return Err(err(lineno, "weights row: expected `train weight`"));
                }
                let w: f64 = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, "weight must be a number"))?;
                weights.insert(fields[0].to_string(), w);
            }
            "timetable" => {
                if fields.len() != 5 {
                    return Err(err(
                        lineno,
                        "timetable row: expected `train block arrive depart min_minutes`",
                    ));
                }
                let block: u32 = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, "block id must be an integer"))?;
                let t_in = parse_time(fields[2])
                    .ok_or_else(|| err(lineno, "arrive must be HH:MM"))?;
                let t_out = parse_time(fields[3])
                    .ok_or_else(|| err(lineno, "depart must be HH:MM"))?;
                let p_min: i64 = fields[4]
                    .parse()
                    .map_err(|_| err(lineno, "min_minutes must be an integer"))?;
                timetable_rows.push((fields[0].to_string(), BlockId(block), t_in, t_out, p_min, lineno));
            }
            "d_max" => {
                if fields.len() != 2 {
                    return Err(err(lineno, "d_max row: expected `default N` or `train N`"));
                }
                let v: i64 = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, "d_max must be an integer"))?;
                if fields[0] == "default" {
                    d_max_default = Some(v);
                } else {
                    d_max_per.insert(fields[0].to_string(), v);
                }
            }
            "turnover" => {
                if fields.len() != 3 {
                    return Err(err(lineno, "turnover row: expected `from to minutes`"));
                }
                let minutes: i64 = fields[2]
                    .parse()
                    .map_err(|_| err(lineno, "turnover minutes must be an integer"))?;
                turnover_rows.push((fields[0].to_string(), fields[1].to_string(), minutes, lineno));
            }
            "penalties" => {
                if fields.len() != 2 {
                    return Err(err(lineno, "penalties row: expected `p_sum V` or `p_pair V`"));
                }
                let v: f64 = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, "penalty must be a number"))?;
                match fields[0] {
                    "p_sum" => p_sum = Some(v),
                    "p_pair" => p_pair = Some(v),
                    other => return Err(err(lineno, format!("unknown penalty `{other}`"))),
                }
            }
            other => return Err(err(lineno, format!("unknown section `{other}`"))),
        }
    }

    match schema {
        None => return Err(ParseError::MissingSection("schema")),
        Some(v) if v != SCHEMA_VERSION => return Err(ParseError::Schema(v, SCHEMA_VERSION)),
        _ => {}
    }
    if blocks.is_empty() {
        return Err(ParseError::MissingSection("blocks"));
    }
    if raw_trains.is_empty() {
        return Err(ParseError::MissingSection("trains"));
    }

    let mut trains = Vec::new();
    for raw in &raw_trains {
        let weight = *weights
            .get(&raw.id)
            .ok_or_else(|| err(raw.line, format!("train `{}` has no weight", raw.id)))?;
        trains.push(Train {
            id: raw.id.clone(),
            direction: raw.direction,
            weight,
            route: raw.route.clone(),
            initial_delay: raw.initial_delay,
        });
    }

    let mut timetable = Timetable::default();
    for (train_id, block, t_in, t_out, p_min, lineno) in &timetable_rows {
        let j = trains
            .iter()
            .position(|t| &t.id == train_id)
            .ok_or_else(|| err(*lineno, format!("timetable for unknown train `{train_id}`")))?;
        timetable.insert(
            j,
            *block,
            TimetableEntry {
                t_in: *t_in,
                t_out: *t_out,
                p_min: *p_min,
            },
        );
    }

    let d_max_default = d_max_default.ok_or(ParseError::MissingSection("d_max"))?;
    let d_max = trains
        .iter()
        .map(|t| d_max_per.get(&t.id).copied().unwrap_or(d_max_default))
        .collect();

    let mut turnover_pairs = Vec::new();
    for (from, to, minutes, lineno) in &turnover_rows {
        let f = trains
            .iter()
            .position(|t| &t.id == from)
            .ok_or_else(|| err(*lineno, format!("turnover for unknown train `{from}`")))?;
        let t = trains
            .iter()
            .position(|t| &t.id == to)
            .ok_or_else(|| err(*lineno, format!("turnover for unknown train `{to}`")))?;
        turnover_pairs.push(TurnoverPair {
            from: f,
            to: t,
            min_turnover: *minutes,
        });
    }

    let instance = RailwayInstance::new(
        name,
        blocks,
        trains,
        timetable,
        d_max,
        turnover_pairs,
        p_sum.ok_or(ParseError::MissingSection("penalties"))?,
        p_pair.ok_or(ParseError::MissingSection("penalties"))?,
    )?;
    Ok(instance)
}

/// Render an instance back to the document format. `parse(serialize(i))`
/// reproduces the instance.
pub fn serialize_instance(instance: &RailwayInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("schema {SCHEMA_VERSION}\n"));
    out.push_str(&format!("name {}\n\n", instance.name));

    out.push_str("[blocks]\n");
    for b in &instance.blocks {
        let kind = match b.kind {
            BlockKind::Station => "station",
            BlockKind::Line => "line",
        };
        out.push_str(&format!("{} {} {}\n", b.id, kind, b.capacity));
    }

    out.push_str("\n[trains]\n");
    for t in &instance.trains {
        let dir = match t.direction {
            Direction::Up => "up",
            Direction::Down => "down",
        };
        let route: Vec<String> = t.route.iter().map(|b| b.to_string()).collect();
        out.push_str(&format!(
            "{} {} {} {}\n",
            t.id,
            dir,
            t.initial_delay,
            route.join(" ")
        ));
    }

    out.push_str("\n[weights]\n");
    for t in &instance.trains {
        out.push_str(&format!("{} {}\n", t.id, t.weight));
    }

    out.push_str("\n[timetable]\n");
    for (j, t) in instance.trains.iter().enumerate() {
        for &m in &t.route {
            let e = instance.timetable.entry(j, m).unwrap();
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                t.id,
                m,
                format_time(e.t_in),
                format_time(e.t_out),
                e.p_min
            ));
        }
    }

    out.push_str("\n[d_max]\n");
    let first = instance.d_max[0];
    if instance.d_max.iter().all(|&v| v == first) {
        out.push_str(&format!("default {first}\n"));
    } else {
        out.push_str(&format!("default {first}\n"));
        for (j, t) in instance.trains.iter().enumerate() {
            if instance.d_max[j] != first {
                out.push_str(&format!("{} {}\n", t.id, instance.d_max[j]));
            }
        }
    }

    if !instance.turnover_pairs.is_empty() {
        out.push_str("\n[turnover]\n");
        for p in &instance.turnover_pairs {
            out.push_str(&format!(
                "{} {} {}\n",
                instance.trains[p.from].id, instance.trains[p.to].id, p.min_turnover
            ));
        }
    }

    out.push_str("\n[penalties]\n");
    out.push_str(&format!("p_sum {}\n", instance.p_sum));
    out.push_str(&format!("p_pair {}\n", instance.p_pair));
    out
}

/// Load an instance from a filesystem path, or by built-in fixture name.
pub fn load_instance(path: &str) -> Result<RailwayInstance, ParseError> {
    if std::path::Path::new(path).exists() {
        let text = std::fs::read_to_string(path)?;
        parse_instance(&text)
    } else if let Some(text) = super::fixtures::source(path) {
        parse_instance(text)
    } else {
        Err(ParseError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no such file or fixture: {path}"),
        )))
    }
}
