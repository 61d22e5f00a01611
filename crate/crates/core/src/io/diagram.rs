//! Train diagram emission: a distance-time table (CSV) and a static SVG
//! rendering with one polyline per train and highlighted block conflicts.

use crate::model::{BlockId, Minutes, ModelError, Occupation, RailwayInstance, Schedule};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct DiagramRow {
    pub train: usize,
    pub block: BlockId,
    pub t_in: Minutes,
    pub t_out: Minutes,
    pub is_station: bool,
}

/// A block held by too many trains at once.
#[derive(Debug, Clone)]
pub struct ConflictMarker {
    pub block: BlockId,
    pub from: Minutes,
    pub to: Minutes,
    pub trains: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DiagramData {
    pub rows: Vec<DiagramRow>,
    pub conflicts: Vec<ConflictMarker>,
}

impl DiagramData {
    pub fn from_schedule(
        instance: &RailwayInstance,
        schedule: &Schedule,
    ) -> Result<Self, ModelError> {
        let occupations = schedule.occupations(instance)?;
        let mut rows: Vec<DiagramRow> = occupations
            .iter()
            .map(|o| DiagramRow {
                train: o.train,
                block: o.block,
                t_in: o.enter,
                t_out: o.leave,
                is_station: o.is_station,
            })
            .collect();
        rows.sort_by_key(|r| (r.train, instance_position(instance, r.train, r.block)));
        Ok(Self {
            conflicts: find_conflicts(instance, &occupations),
            rows,
        })
    }

    pub fn to_csv(&self, instance: &RailwayInstance) -> String {
        let mut out = String::from("train,block,t_in,t_out,is_station\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                instance.trains[r.train].id, r.block, r.t_in, r.t_out, r.is_station
            ));
        }
        out
    }

    /// Static SVG: x is time in minutes, y the block position along the
    /// line; one polyline per train, conflict windows shaded.
    pub fn to_svg(&self, instance: &RailwayInstance) -> String {
        const COLORS: [&str; 8] = [
            "#c62828", "#1565c0", "#2e7d32", "#6a1b9a", "#ef6c00", "#00838f", "#4e342e", "#37474f",
        ];
        let blocks: Vec<BlockId> = instance.blocks.iter().map(|b| b.id).collect();
        let band = 34.0;
        let t_min = self.rows.iter().map(|r| r.t_in).min().unwrap_or(0) - 5;
        let t_max = self.rows.iter().map(|r| r.t_out).max().unwrap_or(60) + 5;
        let margin_left = 70.0;
        let margin_top = 30.0;
        let px_per_min = 9.0;
        let width = margin_left + (t_max - t_min) as f64 * px_per_min + 20.0;
        let height = margin_top + blocks.len() as f64 * band + 40.0;
        let x_of = |t: Minutes| margin_left + (t - t_min) as f64 * px_per_min;
        let y_of = |b: BlockId| {
            let pos = blocks.iter().position(|&x| x == b).unwrap_or(0);
            margin_top + pos as f64 * band + band / 2.0
        };

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        for &b in &blocks {
            let y = y_of(b);
            let station = instance.block(b).kind == crate::model::BlockKind::Station;
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                x_of(t_min),
                x_of(t_max),
                if station { "#9e9e9e" } else { "#e0e0e0" },
                if station { 2 } else { 1 },
            ));
            svg.push_str(&format!(
                "<text x=\"8\" y=\"{:.1}\" font-size=\"12\" font-family=\"sans-serif\">block {b}</text>\n",
                y + 4.0
            ));
        }
        // Hour ruler every 10 minutes.
        let mut t = t_min - t_min.rem_euclid(10) + 10;
        while t < t_max {
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#757575\" font-family=\"sans-serif\">{}</text>\n",
                x_of(t) - 12.0,
                margin_top - 10.0,
                super::instance::format_time(t)
            ));
            t += 10;
        }
        for marker in &self.conflicts {
            let y = y_of(marker.block);
            svg.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#ff1744\" fill-opacity=\"0.35\"/>\n",
                x_of(marker.from),
                y - band / 2.0 + 4.0,
                ((marker.to - marker.from) as f64 * px_per_min).max(3.0),
                band - 8.0,
            ));
        }
        let mut per_train: BTreeMap<usize, Vec<&DiagramRow>> = BTreeMap::new();
        for r in &self.rows {
            per_train.entry(r.train).or_default().push(r);
        }
        for (j, rows) in &per_train {
            let color = COLORS[j % COLORS.len()];
            let mut points = Vec::new();
            for r in rows.iter() {
                points.push(format!("{:.1},{:.1}", x_of(r.t_in), y_of(r.block)));
                points.push(format!("{:.1},{:.1}", x_of(r.t_out), y_of(r.block)));
            }
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                points.join(" ")
            ));
            if let Some(first) = rows.first() {
                svg.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{color}\" font-family=\"sans-serif\">{}</text>\n",
                    x_of(first.t_in),
                    y_of(first.block) - 8.0,
                    instance.trains[*j].id
                ));
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn instance_position(instance: &RailwayInstance, train: usize, block: BlockId) -> usize {
    instance.trains[train]
        .route
        .iter()
        .position(|&b| b == block)
        .unwrap_or(usize::MAX)
}

/// Sweep each block's occupations for intervals where more trains than the
/// block can hold are present at once.
fn find_conflicts(instance: &RailwayInstance, occupations: &[Occupation]) -> Vec<ConflictMarker> {
    let mut conflicts = Vec::new();
    for block in &instance.blocks {
        let cap = match block.kind {
            crate::model::BlockKind::Station => block.capacity,
            crate::model::BlockKind::Line => 1,
        } as usize;
        let mut events: Vec<(Minutes, i32, usize)> = Vec::new();
        for occ in occupations.iter().filter(|o| o.block == block.id) {
            if occ.leave > occ.enter {
                events.push((occ.enter, 1, occ.train));
                events.push((occ.leave, -1, occ.train));
            }
        }
        events.sort_by_key(|&(t, delta, _)| (t, delta));
        let mut inside: Vec<usize> = Vec::new();
        let mut over: Option<(Minutes, Vec<usize>)> = None;
        for (t, delta, train) in events {
            if delta > 0 {
                inside.push(train);
                if inside.len() > cap {
                    match &mut over {
                        None => over = Some((t, inside.clone())),
                        Some((_, trains)) => {
                            if !trains.contains(&train) {
                                trains.push(train);
                            }
                        }
                    }
                }
            } else {
                inside.retain(|&j| j != train);
                if inside.len() <= cap {
                    if let Some((from, trains)) = over.take() {
                        conflicts.push(ConflictMarker {
                            block: block.id,
                            from,
                            to: t,
                            trains,
                        });
                    }
                }
            }
        }
    }
    conflicts
}
