//! Exact low-energy spectrum enumeration.
//!
//! Three spaces: the full 2^n cube (small n only), the one-hot-restricted
//! space (one bit per group, the product of the delay domain sizes), and
//! the restricted space widened by every single-bit perturbation, which
//! exposes the lowest infeasible levels.

use crate::qubo::QuboInstance;
use crate::solvers::SolveError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationMode {
    Full,
    OneHotRestricted,
    OneHotPlusSingleViolations,
}

#[derive(Debug, Clone)]
pub struct SpectrumLevel {
    pub energy: f64,
    pub degeneracy: u64,
    pub feasible_count: u64,
    /// Up to `rep_cap` configurations at this energy, in enumeration order.
    pub representatives: Vec<Vec<bool>>,
}

impl SpectrumLevel {
    pub fn feasible(&self) -> bool {
        self.feasible_count == self.degeneracy
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub levels: Vec<SpectrumLevel>,
}

impl Spectrum {
    pub fn ground(&self) -> &SpectrumLevel {
        &self.levels[0]
    }

    /// Lowest level whose configurations are all feasible.
    pub fn lowest_feasible(&self) -> Option<&SpectrumLevel> {
        self.levels.iter().find(|l| l.feasible_count > 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnumOptions {
    /// Full mode refuses instances with more bits than this.
    pub full_bit_cap: usize,
    /// Restricted modes refuse search spaces larger than this.
    pub restricted_cap: u128,
    /// Representatives kept per level.
    pub rep_cap: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self {
            full_bit_cap: 30,
            restricted_cap: 100_000_000,
            rep_cap: 16,
        }
    }
}

/// Accumulates (energy, config) observations into sorted levels, keeping
/// only the `limit` lowest. Energies within 1e-9 merge into one level.
struct LevelCollector {
    limit: usize,
    rep_cap: usize,
    levels: BTreeMap<i128, (u64, u64, Vec<Vec<bool>>)>,
}

const ENERGY_GRID: f64 = 1e-9;

impl LevelCollector {
    fn new(limit: usize, rep_cap: usize) -> Self {
        Self {
            limit,
            rep_cap,
            levels: BTreeMap::new(),
        }
    }

    fn key(energy: f64) -> i128 {
        (energy / ENERGY_GRID).round() as i128
    }

    fn worst_kept(&self) -> Option<i128> {
        if self.levels.len() < self.limit {
            None
        } else {
            self.levels.keys().next_back().copied()
        }
    }

    fn offer(&mut self, energy: f64, feasible: bool, config: impl FnOnce() -> Vec<bool>) {
        let key = Self::key(energy);
        if let Some(worst) = self.worst_kept() {
            if key > worst {
                return;
            }
        }
        let rep_cap = self.rep_cap;
        let entry = self.levels.entry(key).or_insert_with(|| (0, 0, Vec::new()));
        entry.0 += 1;
        if feasible {
            entry.1 += 1;
        }
        if entry.2.len() < rep_cap {
            entry.2.push(config());
        }
        if self.levels.len() > self.limit {
            self.levels.pop_last();
        }
    }

    fn finish(self) -> Spectrum {
        let levels = self
            .levels
            .into_iter()
            .map(|(key, (degeneracy, feasible_count, representatives))| SpectrumLevel {
                energy: key as f64 * ENERGY_GRID,
                degeneracy,
                feasible_count,
                representatives,
            })
            .collect();
        Spectrum { levels }
    }
}

/// Enumerate the requested space exactly and return the `limit` lowest
/// energy levels with exact degeneracies.
pub fn enumerate_spectrum(
    qubo: &QuboInstance,
    mode: EnumerationMode,
    limit: usize,
) -> Result<Spectrum, SolveError> {
    enumerate_spectrum_with(qubo, mode, limit, EnumOptions::default())
}

pub fn enumerate_spectrum_with(
    qubo: &QuboInstance,
    mode: EnumerationMode,
    limit: usize,
    options: EnumOptions,
) -> Result<Spectrum, SolveError> {
    match mode {
        EnumerationMode::Full => full_enumeration(qubo, limit, options),
        EnumerationMode::OneHotRestricted => restricted_enumeration(qubo, limit, options, false),
        EnumerationMode::OneHotPlusSingleViolations => {
            restricted_enumeration(qubo, limit, options, true)
        }
    }
}

fn full_enumeration(
    qubo: &QuboInstance,
    limit: usize,
    options: EnumOptions,
) -> Result<Spectrum, SolveError> {
    let n = qubo.n;
    if n > options.full_bit_cap {
        return Err(SolveError::TooManyBits(n, options.full_bit_cap));
    }
    let mut collector = LevelCollector::new(limit, options.rep_cap);
    let mut x = vec![false; n];
    let mut energy = 0.0;
    collector.offer(energy, qubo.is_feasible(&x), || x.clone());
    // Gray code walk: one bit flip per step, energy updated incrementally.
    for step in 1u64..1u64 << n {
        let bit = step.trailing_zeros() as usize;
        let mut delta = qubo.entry(bit, bit);
        for j in 0..n {
            if j != bit && x[j] {
                delta += 2.0 * qubo.entry(bit, j);
            }
        }
        if x[bit] {
            energy -= delta;
        } else {
            energy += delta;
        }
        x[bit] = !x[bit];
        collector.offer(energy, qubo.is_feasible(&x), || x.clone());
    }
    Ok(collector.finish())
}

/// Per-group tables for fast enumeration over one-hot configurations:
/// `diag[g][a]` is the diagonal contribution of picking choice `a` in group
/// `g`; `cross[g][h][a][b]` the pairwise contribution of picks `a` and `b`.
struct GroupTables {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    diag: Vec<Vec<f64>>,
    cross: Vec<Vec<Vec<f64>>>,
    cross_violates: Vec<Vec<Vec<bool>>>,
}

impl GroupTables {
    fn build(qubo: &QuboInstance) -> Self {
        let groups = &qubo.constraints.one_hot_groups;
        let g = groups.len();
        let sizes: Vec<usize> = groups.iter().map(|grp| grp.len()).collect();
        let offsets: Vec<usize> = groups.iter().map(|grp| grp[0]).collect();
        let diag: Vec<Vec<f64>> = groups
            .iter()
            .map(|grp| grp.iter().map(|&i| qubo.entry(i, i)).collect())
            .collect();
        let mut cross = vec![Vec::new(); g * g];
        let mut cross_violates = vec![Vec::new(); g * g];
        for ga in 0..g {
            for gb in ga + 1..g {
                let mut table = Vec::with_capacity(sizes[ga]);
                let mut viol = Vec::with_capacity(sizes[ga]);
                for &i in &groups[ga] {
                    let row: Vec<f64> = groups[gb]
                        .iter()
                        .map(|&j| 2.0 * qubo.entry(i, j))
                        .collect();
                    let vrow: Vec<bool> = groups[gb]
                        .iter()
                        .map(|&j| {
                            qubo.constraints
                                .forbidden_pairs
                                .contains(&(i.min(j), i.max(j)))
                        })
                        .collect();
                    table.push(row);
                    viol.push(vrow);
                }
                cross[ga * g + gb] = table;
                cross_violates[ga * g + gb] = viol;
            }
        }
        Self {
            sizes,
            offsets,
            diag,
            cross,
            cross_violates,
        }
    }

    fn group_count(&self) -> usize {
        self.sizes.len()
    }
}

fn restricted_space_size(sizes: &[usize]) -> u128 {
    sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128))
}

fn restricted_enumeration(
    qubo: &QuboInstance,
    limit: usize,
    options: EnumOptions,
    with_single_violations: bool,
) -> Result<Spectrum, SolveError> {
    let tables = GroupTables::build(qubo);
    let g = tables.group_count();
    if g == 0 {
        return Err(SolveError::NoVariables);
    }
    let mut space = restricted_space_size(&tables.sizes);
    if with_single_violations {
        // Each group can additionally be empty or doubly set.
        let extra: u128 = tables
            .sizes
            .iter()
            .map(|&s| 1 + (s * (s - 1) / 2) as u128)
            .sum();
        space = space.saturating_mul(extra.max(1));
    }
    if space > options.restricted_cap {
        return Err(SolveError::SearchSpaceTooLarge(space, options.restricted_cap));
    }

    let mut collector = LevelCollector::new(limit, options.rep_cap);

    // Pass 1: strict one-hot configurations. The matrix diagonal already
    // carries the one-hot reward, so the reported energy is plain x^T Q x.
    enumerate_choices(qubo, &tables, None, &mut |choices, energy, violations| {
        let feasible = violations == 0;
        collector.offer(energy, feasible, || {
            config_from_choices(qubo, &tables, choices, None)
        });
    });

    if with_single_violations {
        // Pass 2: exactly one group broken, either empty or with two bits.
        for broken in 0..g {
            let states = broken_states(&tables, broken);
            for state in states {
                enumerate_choices(
                    qubo,
                    &tables,
                    Some((broken, &state)),
                    &mut |choices, energy, _| {
                        collector.offer(energy, false, || {
                            config_from_choices(qubo, &tables, choices, Some((broken, &state)))
                        });
                    },
                );
            }
        }
    }
    Ok(collector.finish())
}

/// A broken group's state: no bit, or two distinct bits (local indices).
#[derive(Debug, Clone)]
enum BrokenState {
    Empty,
    Two(usize, usize),
}

fn broken_states(tables: &GroupTables, broken: usize) -> Vec<BrokenState> {
    let mut states = vec![BrokenState::Empty];
    let s = tables.sizes[broken];
    for a in 0..s {
        for b in a + 1..s {
            states.push(BrokenState::Two(a, b));
        }
    }
    states
}

/// Contribution of a broken group's state against choice `b` of group `gb`.
fn broken_cross(
    qubo: &QuboInstance,
    tables: &GroupTables,
    broken: usize,
    state: &BrokenState,
    gb: usize,
    b: usize,
) -> f64 {
    let (lo, hi, swap) = if broken < gb {
        (broken, gb, false)
    } else {
        (gb, broken, true)
    };
    let table = &tables.cross[lo * tables.group_count() + hi];
    let _ = qubo;
    match state {
        BrokenState::Empty => 0.0,
        BrokenState::Two(i, j) => {
            if swap {
                table[b][*i] + table[b][*j]
            } else {
                table[*i][b] + table[*j][b]
            }
        }
    }
}

/// Self-energy of a broken group's state (diagonals plus the intra-group
/// one-hot penalty of having two bits).
fn broken_self(qubo: &QuboInstance, tables: &GroupTables, broken: usize, state: &BrokenState) -> f64 {
    match state {
        BrokenState::Empty => 0.0,
        BrokenState::Two(a, b) => {
            let ia = tables.offsets[broken] + a;
            let ib = tables.offsets[broken] + b;
            tables.diag[broken][*a] + tables.diag[broken][*b] + 2.0 * qubo.entry(ia, ib)
        }
    }
}

/// Odometer walk over one choice per group (the broken group, when present,
/// is excluded from the odometer and contributes through its fixed state).
/// Calls `visit(choices, energy_above_minus_l, violation_count)` for every
/// configuration; the reported energy already includes every diagonal and
/// cross term but not the `-L` feasibility offset (handled by the caller).
fn enumerate_choices(
    qubo: &QuboInstance,
    tables: &GroupTables,
    broken: Option<(usize, &BrokenState)>,
    visit: &mut impl FnMut(&[usize], f64, u32),
) {
    let g = tables.group_count();
    let active: Vec<usize> = (0..g)
        .filter(|&i| broken.map(|(b, _)| b != i).unwrap_or(true))
        .collect();
    let k = active.len();
    let base = broken
        .map(|(b, state)| broken_self(qubo, tables, b, state))
        .unwrap_or(0.0);
    if k == 0 {
        visit(&[], base, 0);
        return;
    }
    let mut choices = vec![0usize; k];
    // prefix_energy[d] = energy of digits 0..d (plus base), prefix_viol the
    // violated-pair count among them.
    let mut prefix_energy = vec![0.0; k + 1];
    let mut prefix_viol = vec![0u32; k + 1];
    prefix_energy[0] = base;

    let digit_cost = |choices: &[usize], d: usize| -> (f64, u32) {
        let gd = active[d];
        let c = choices[d];
        let mut e = tables.diag[gd][c];
        let mut v = 0u32;
        if let Some((b, state)) = broken {
            e += broken_cross(qubo, tables, b, state, gd, c);
        }
        for (prev_pos, &gp) in active.iter().enumerate().take(d) {
            let (lo, hi, a_first) = if gp < gd { (gp, gd, true) } else { (gd, gp, false) };
            let table = &tables.cross[lo * tables.group_count() + hi];
            let viol = &tables.cross_violates[lo * tables.group_count() + hi];
            let (ia, ib) = if a_first {
                (choices[prev_pos], c)
            } else {
                (c, choices[prev_pos])
            };
            e += table[ia][ib];
            if viol[ia][ib] {
                v += 1;
            }
        }
        (e, v)
    };

    // Initialize prefixes for the all-zero odometer.
    for d in 0..k {
        let (e, v) = digit_cost(&choices, d);
        prefix_energy[d + 1] = prefix_energy[d] + e;
        prefix_viol[d + 1] = prefix_viol[d] + v;
    }
    loop {
        visit(&choices, prefix_energy[k], prefix_viol[k]);
        // Advance odometer, least significant digit last for locality.
        let mut d = k;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            choices[d] += 1;
            if choices[d] < tables.sizes[active[d]] {
                break;
            }
            choices[d] = 0;
        }
        for pos in d..k {
            let (e, v) = digit_cost(&choices, pos);
            prefix_energy[pos + 1] = prefix_energy[pos] + e;
            prefix_viol[pos + 1] = prefix_viol[pos] + v;
        }
    }
}

fn config_from_choices(
    qubo: &QuboInstance,
    tables: &GroupTables,
    choices: &[usize],
    broken: Option<(usize, &BrokenState)>,
) -> Vec<bool> {
    let mut x = vec![false; qubo.n];
    let g = tables.group_count();
    let active: Vec<usize> = (0..g)
        .filter(|&i| broken.map(|(b, _)| b != i).unwrap_or(true))
        .collect();
    for (pos, &grp) in active.iter().enumerate() {
        x[tables.offsets[grp] + choices[pos]] = true;
    }
    if let Some((b, state)) = broken {
        match state {
            BrokenState::Empty => {}
            BrokenState::Two(i, j) => {
                x[tables.offsets[b] + i] = true;
                x[tables.offsets[b] + j] = true;
            }
        }
    }
    x
}
