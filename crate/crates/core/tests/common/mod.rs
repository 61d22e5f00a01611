//! Shared test support: a seeded generator of small random single-track
//! instances (up to 3 trains, up to 3 decision stations, d_max <= 3).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use railqubo::model::{
    Block, BlockId, BlockKind, Direction, RailwayInstance, Timetable, TimetableEntry, Train,
};

pub fn random_small_instance(seed: u64) -> RailwayInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_stations = rng.gen_range(2..=4usize);
    let n_trains = rng.gen_range(1..=3usize);
    let d_max = rng.gen_range(1..=3i64);

    // Stations at odd ids, line blocks at even ids between them.
    let mut blocks = Vec::new();
    for k in 0..n_stations {
        blocks.push(Block {
            id: BlockId((2 * k + 1) as u32),
            kind: BlockKind::Station,
            capacity: rng.gen_range(2..=3),
        });
        if k + 1 < n_stations {
            blocks.push(Block {
                id: BlockId((2 * k + 2) as u32),
                kind: BlockKind::Line,
                capacity: 1,
            });
        }
    }
    let up_route: Vec<BlockId> = (1..=(2 * n_stations - 1) as u32).map(BlockId).collect();

    let weight_choices = [0.5, 0.9, 1.0, 1.5];
    let mut trains = Vec::new();
    let mut timetable = Timetable::default();
    for j in 0..n_trains {
        let direction = if rng.gen_bool(0.5) {
            Direction::Up
        } else {
            Direction::Down
        };
        let mut route = up_route.clone();
        if direction == Direction::Down {
            route.reverse();
        }
        let start = 480 + rng.gen_range(0..30) + j as i64 * rng.gen_range(0..12);
        let mut t = start;
        for (k, &m) in route.iter().enumerate() {
            let station = k % 2 == 0;
            let (p_tt, p_min) = if station {
                let dwell = rng.gen_range(1..=3i64);
                (dwell, 1)
            } else {
                let run = rng.gen_range(3..=8i64);
                let reserve = rng.gen_range(0..=1i64).min(run - 1);
                (run, run - reserve)
            };
            timetable.insert(
                j,
                m,
                TimetableEntry {
                    t_in: t,
                    t_out: t + p_tt,
                    p_min,
                },
            );
            t += p_tt;
        }
        trains.push(Train {
            id: format!("T{}", j + 1),
            direction,
            weight: weight_choices[rng.gen_range(0..weight_choices.len())],
            route,
            initial_delay: rng.gen_range(0..=4),
        });
    }

    let weight_sum: f64 = trains.iter().map(|t| t.weight).sum();
    let penalty = weight_sum + 1.0;
    RailwayInstance::new(
        format!("random-{seed}"),
        blocks,
        trains,
        timetable,
        vec![d_max; n_trains],
        Vec::new(),
        penalty,
        penalty,
    )
    .expect("generated instance must validate")
}
