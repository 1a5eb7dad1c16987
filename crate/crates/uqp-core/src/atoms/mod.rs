//! Neutral-atom preparation pipeline: occupancy grids, rearrangement
//! planning and AWG move-command emission.
//!
//! Planning pairs surplus atoms with unfilled target sites by minimum-cost
//! bipartite matching under Manhattan distance. Atoms already sitting on
//! target sites never move. Because plan sources are occupied sites and
//! plan destinations are unoccupied target sites, the two sets are disjoint
//! and no move can collide with another; moves are emitted in row-major
//! destination order.

mod hungarian;
pub mod image;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use hungarian::min_cost_assignment;
pub use image::{detect, half_signal_threshold, spot_integral, synth_image, AtomImage};

use crate::rng::{at as rng_at, CounterRng};

/// Site occupancy of a rectangular trap array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomGrid {
    pub rows: usize,
    pub cols: usize,
    occupancy: Vec<bool>,
}

impl AtomGrid {
    pub fn new(rows: usize, cols: usize) -> AtomGrid {
        AtomGrid {
            rows,
            cols,
            occupancy: vec![false; rows * cols],
        }
    }

    /// Seeded random occupancy with per-site probability `fill`. When
    /// `min_atoms` is given, additional sites are filled in a seeded order
    /// until the count is reached (loading guarantee for the simulator).
    pub fn random(
        rows: usize,
        cols: usize,
        fill: f64,
        seed: u64,
        min_atoms: Option<usize>,
    ) -> AtomGrid {
        let mut grid = AtomGrid::new(rows, cols);
        let mut rng = CounterRng::new(seed);
        for site in 0..rows * cols {
            if rng.next_unit() < fill {
                grid.occupancy[site] = true;
            }
        }
        if let Some(min_atoms) = min_atoms {
            let mut count = grid.occupied_count();
            let mut counter = 0u64;
            while count < min_atoms && count < rows * cols {
                let site = (rng_at(seed ^ 0x4c4f_4144, counter) % (rows * cols) as u64) as usize;
                counter += 1;
                if !grid.occupancy[site] {
                    grid.occupancy[site] = true;
                    count += 1;
                }
            }
        }
        grid
    }

    fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.occupancy[self.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, occupied: bool) {
        let idx = self.index(row, col);
        self.occupancy[idx] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    /// Occupied sites in row-major order.
    pub fn occupied_sites(&self) -> Vec<Site> {
        (0..self.rows * self.cols)
            .filter(|i| self.occupancy[*i])
            .map(|i| (i / self.cols, i % self.cols))
            .collect()
    }
}

/// `(row, col)` site coordinates.
pub type Site = (usize, usize);

/// The set of sites that must be occupied after rearrangement.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetPattern {
    sites: BTreeSet<Site>,
}

impl TargetPattern {
    pub fn from_sites(sites: impl IntoIterator<Item = Site>) -> TargetPattern {
        TargetPattern {
            sites: sites.into_iter().collect(),
        }
    }

    /// Dense top-left rectangle pattern: the first `count` sites of a
    /// `cols`-wide grid in row-major order.
    pub fn dense_rect(count: usize, cols: usize) -> TargetPattern {
        assert!(cols > 0 || count == 0);
        TargetPattern {
            sites: (0..count).map(|i| (i / cols, i % cols)).collect(),
        }
    }

    /// Parse the text-grid format: `#` marks a required site, `.` a free
    /// one; blank lines are skipped.
    pub fn parse(text: &str) -> Result<TargetPattern, AtomError> {
        let mut sites = BTreeSet::new();
        for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            for (col, ch) in line.trim().chars().enumerate() {
                match ch {
                    '#' => {
                        sites.insert((row, col));
                    }
                    '.' => {}
                    other => return Err(AtomError::BadPatternChar { ch: other, row }),
                }
            }
        }
        Ok(TargetPattern { sites })
    }

    pub fn render(&self, rows: usize, cols: usize) -> String {
        let mut out = String::new();
        for row in 0..rows {
            for col in 0..cols {
                out.push(if self.sites.contains(&(row, col)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.sites.contains(&site)
    }

    /// Sites in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().copied()
    }
}

/// One pick-and-place move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MoveCommand {
    pub from: Site,
    pub to: Site,
}

impl MoveCommand {
    pub fn manhattan(&self) -> usize {
        self.from.0.abs_diff(self.to.0) + self.from.1.abs_diff(self.to.1)
    }
}

/// Ordered move sequence producing full target occupancy.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SortPlan {
    pub moves: Vec<MoveCommand>,
}

impl SortPlan {
    /// Total Manhattan distance of the plan.
    pub fn cost(&self) -> usize {
        self.moves.iter().map(MoveCommand::manhattan).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomError {
    #[error("{width}x{height} image does not divide into a {rows}x{cols} grid of square cells")]
    GeometryMismatch {
        width: usize,
        height: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{have} atoms loaded but the target needs {need}")]
    InsufficientAtoms { have: usize, need: usize },
    #[error("target site {site:?} outside the {rows}x{cols} grid")]
    TargetOutOfBounds { site: Site, rows: usize, cols: usize },
    #[error("move {index} is illegal: {from:?} -> {to:?}")]
    IllegalMove { index: usize, from: Site, to: Site },
    #[error("unexpected character `{ch}` in pattern row {row}")]
    BadPatternChar { ch: char, row: usize },
}

/// Plan the rearrangement of `grid` into `target`.
///
/// Atoms already on target sites stay fixed; the remaining atoms are
/// matched to unfilled target sites by minimum-cost assignment under
/// Manhattan distance.
pub fn plan_sort(grid: &AtomGrid, target: &TargetPattern) -> Result<SortPlan, AtomError> {
    for site in target.iter() {
        if site.0 >= grid.rows || site.1 >= grid.cols {
            return Err(AtomError::TargetOutOfBounds {
                site,
                rows: grid.rows,
                cols: grid.cols,
            });
        }
    }
    let have = grid.occupied_count();
    if have < target.len() {
        return Err(AtomError::InsufficientAtoms {
            have,
            need: target.len(),
        });
    }

    let unfilled: Vec<Site> = target
        .iter()
        .filter(|site| !grid.is_occupied(site.0, site.1))
        .collect();
    if unfilled.is_empty() {
        return Ok(SortPlan::default());
    }
    let movable: Vec<Site> = grid
        .occupied_sites()
        .into_iter()
        .filter(|site| !target.contains(*site))
        .collect();

    let cost: Vec<Vec<i64>> = unfilled
        .iter()
        .map(|dst| {
            movable
                .iter()
                .map(|src| (src.0.abs_diff(dst.0) + src.1.abs_diff(dst.1)) as i64)
                .collect()
        })
        .collect();
    let (assignment, _) = min_cost_assignment(&cost);

    // `unfilled` iterates in row-major order, so moves come out ordered by
    // destination already.
    let moves = assignment
        .iter()
        .zip(&unfilled)
        .map(|(src_idx, dst)| MoveCommand {
            from: movable[*src_idx],
            to: *dst,
        })
        .collect();
    Ok(SortPlan { moves })
}

/// Execute a plan move-by-move on a copy of `grid`, checking legality:
/// every move must start at an occupied site and end at an unoccupied one
/// at its execution time.
pub fn apply_plan(grid: &AtomGrid, plan: &SortPlan) -> Result<AtomGrid, AtomError> {
    let mut grid = grid.clone();
    for (index, mv) in plan.moves.iter().enumerate() {
        let legal = mv.from.0 < grid.rows
            && mv.from.1 < grid.cols
            && mv.to.0 < grid.rows
            && mv.to.1 < grid.cols
            && grid.is_occupied(mv.from.0, mv.from.1)
            && !grid.is_occupied(mv.to.0, mv.to.1);
        if !legal {
            return Err(AtomError::IllegalMove {
                index,
                from: mv.from,
                to: mv.to,
            });
        }
        grid.set(mv.from.0, mv.from.1, false);
        grid.set(mv.to.0, mv.to.1, true);
    }
    Ok(grid)
}

/// One AWG pick-and-place record: trap coordinates plus per-axis
/// frequency-ramp placeholders for the deflector drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AwgCommand {
    pub pickup: Site,
    pub drop: Site,
    pub row_ramp_mhz: (f64, f64),
    pub col_ramp_mhz: (f64, f64),
}

const AWG_BASE_MHZ: f64 = 80.0;
const AWG_SITE_SPACING_MHZ: f64 = 2.0;

fn site_freq(index: usize) -> f64 {
    AWG_BASE_MHZ + AWG_SITE_SPACING_MHZ * index as f64
}

/// Translate a plan into AWG command records, order preserved.
pub fn emit_moves(plan: &SortPlan) -> Vec<AwgCommand> {
    plan.moves
        .iter()
        .map(|mv| AwgCommand {
            pickup: mv.from,
            drop: mv.to,
            row_ramp_mhz: (site_freq(mv.from.0), site_freq(mv.to.0)),
            col_ramp_mhz: (site_freq(mv.from.1), site_freq(mv.to.1)),
        })
        .collect()
}

/// AWG records as JSON lines.
pub fn awg_records_jsonl(commands: &[AwgCommand]) -> String {
    let mut out = String::new();
    for command in commands {
        out.push_str(&serde_json::to_string(command).expect("AWG command serializes"));
        out.push('\n');
    }
    out
}

impl SortPlan {
    /// Moves as JSON lines, one `{"from":..,"to":..}` record per move.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for mv in &self.moves {
            out.push_str(&serde_json::to_string(mv).expect("move serializes"));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for MoveCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{}) -> ({},{})",
            self.from.0, self.from.1, self.to.0, self.to.1
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_from(rows: usize, cols: usize, occupied: &[Site]) -> AtomGrid {
        let mut grid = AtomGrid::new(rows, cols);
        for (r, c) in occupied {
            grid.set(*r, *c, true);
        }
        grid
    }

    #[test]
    fn atoms_already_on_target_produce_empty_plan() {
        let grid = grid_from(3, 3, &[(0, 0), (0, 1)]);
        let target = TargetPattern::from_sites([(0, 0), (0, 1)]);
        let plan = plan_sort(&grid, &target).unwrap();
        assert!(plan.moves.is_empty());
    }

    #[test]
    fn single_move_fills_the_gap() {
        // brute force over assignments confirms cost 1 is optimal here
        let grid = grid_from(2, 2, &[(0, 0), (1, 1)]);
        let target = TargetPattern::from_sites([(0, 0), (0, 1)]);
        let plan = plan_sort(&grid, &target).unwrap();
        assert_eq!(
            plan.moves,
            vec![MoveCommand {
                from: (1, 1),
                to: (0, 1)
            }]
        );
        assert_eq!(plan.cost(), 1);
    }

    #[test]
    fn insufficient_atoms_reported() {
        let grid = grid_from(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let target = TargetPattern::from_sites([(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(
            plan_sort(&grid, &target).unwrap_err(),
            AtomError::InsufficientAtoms { have: 3, need: 4 }
        );
    }

    #[test]
    fn out_of_bounds_target_rejected() {
        let grid = grid_from(2, 2, &[(0, 0)]);
        let target = TargetPattern::from_sites([(5, 0)]);
        assert!(matches!(
            plan_sort(&grid, &target).unwrap_err(),
            AtomError::TargetOutOfBounds { .. }
        ));
    }

    #[test]
    fn plan_fills_target_and_keeps_fixed_atoms() {
        let grid = grid_from(4, 4, &[(0, 0), (3, 3), (2, 1), (1, 3)]);
        let target = TargetPattern::from_sites([(0, 0), (0, 1), (0, 2)]);
        let plan = plan_sort(&grid, &target).unwrap();
        // (0,0) already on target: never a move source
        assert!(plan.moves.iter().all(|mv| mv.from != (0, 0)));
        let after = apply_plan(&grid, &plan).unwrap();
        for site in target.iter() {
            assert!(after.is_occupied(site.0, site.1));
        }
    }

    #[test]
    fn pattern_text_round_trip() {
        let text = "##.\n..#\n...\n";
        let pattern = TargetPattern::parse(text).unwrap();
        assert_eq!(pattern.len(), 3);
        assert!(pattern.contains((1, 2)));
        assert_eq!(pattern.render(3, 3), text);
        assert!(matches!(
            TargetPattern::parse("#x"),
            Err(AtomError::BadPatternChar { ch: 'x', .. })
        ));
    }

    #[test]
    fn emit_moves_preserves_order_and_endpoints() {
        assert!(emit_moves(&SortPlan::default()).is_empty());
        let plan = SortPlan {
            moves: vec![
                MoveCommand {
                    from: (2, 0),
                    to: (0, 0),
                },
                MoveCommand {
                    from: (1, 3),
                    to: (0, 1),
                },
            ],
        };
        let records = emit_moves(&plan);
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].pickup, (2, 0));
        assert_eq!(records[0].drop, (0, 0));
        assert_eq!(records[1].pickup, (1, 3));
        assert_eq!(records[1].drop, (0, 1));
        let jsonl = awg_records_jsonl(&records);
        assert_eq!(jsonl.lines().count(), 2);
        assert!(jsonl.lines().next().unwrap().contains("\"pickup\":[2,0]"));
        let plan_lines = plan.to_jsonl();
        assert_eq!(plan_lines.lines().count(), 2);
        assert!(plan_lines.lines().next().unwrap().contains("\"from\":[2,0]"));
    }

    /// Brute-force optimal assignment cost by dynamic programming over
    /// subsets of movable atoms. Independent of the Hungarian solver.
    pub(crate) fn brute_force_plan_cost(grid: &AtomGrid, target: &TargetPattern) -> Option<i64> {
        if grid.occupied_count() < target.len() {
            return None;
        }
        let unfilled: Vec<Site> = target
            .iter()
            .filter(|s| !grid.is_occupied(s.0, s.1))
            .collect();
        let movable: Vec<Site> = grid
            .occupied_sites()
            .into_iter()
            .filter(|s| !target.contains(*s))
            .collect();
        let k = unfilled.len();
        let m = movable.len();
        if k == 0 {
            return Some(0);
        }
        if m > 12 {
            return None; // keep the subset DP tractable in tests
        }
        const BIG: i64 = i64::MAX / 4;
        // dp[mask] = min cost of filling the first popcount(mask) targets
        // using exactly the atom subset `mask`
        let mut dp = vec![BIG; 1 << m];
        dp[0] = 0;
        for mask in 0..(1usize << m) {
            if dp[mask] == BIG {
                continue;
            }
            let filled = mask.count_ones() as usize;
            if filled >= k {
                continue;
            }
            let dst = unfilled[filled];
            for (j, src) in movable.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let step =
                        (src.0.abs_diff(dst.0) + src.1.abs_diff(dst.1)) as i64;
                    let next = mask | (1 << j);
                    dp[next] = dp[next].min(dp[mask] + step);
                }
            }
        }
        (0..(1usize << m))
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| dp[mask])
            .min()
    }

    #[test]
    fn plan_cost_is_optimal_on_small_grids() {
        let mut checked = 0;
        for case in 0u64..300 {
            let rows = 1 + (crate::rng::at(11, case) % 4) as usize;
            let cols = 1 + (crate::rng::at(12, case) % 4) as usize;
            let grid = AtomGrid::random(rows, cols, 0.5, crate::rng::at(13, case), None);
            let want = (crate::rng::at(14, case) % (grid.occupied_count() as u64 + 1)) as usize;
            let target = TargetPattern::from_sites(
                (0..rows * cols).map(|i| (i / cols, i % cols)).take(want),
            );
            let Some(optimal) = brute_force_plan_cost(&grid, &target) else {
                continue;
            };
            let plan = plan_sort(&grid, &target).unwrap();
            assert_eq!(plan.cost() as i64, optimal, "case {case}");
            checked += 1;
        }
        assert!(checked > 100, "only {checked} feasible cases");
    }

    #[test]
    fn adding_an_atom_never_raises_plan_cost() {
        for case in 0u64..200 {
            let grid = AtomGrid::random(4, 4, 0.4, crate::rng::at(21, case), None);
            let target = TargetPattern::dense_rect(
                (crate::rng::at(22, case) % 6) as usize,
                4,
            );
            let Ok(base) = plan_sort(&grid, &target) else {
                continue;
            };
            // add one atom at the first empty site
            let mut bigger = grid.clone();
            let Some(empty) = (0..16).map(|i| (i / 4, i % 4)).find(|s| !grid.is_occupied(s.0, s.1))
            else {
                continue;
            };
            bigger.set(empty.0, empty.1, true);
            let richer = plan_sort(&bigger, &target).unwrap();
            assert!(
                richer.cost() <= base.cost(),
                "case {case}: {} > {}",
                richer.cost(),
                base.cost()
            );
        }
    }

    prop_compose! {
        fn arb_grid_and_target()(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>(), frac in 0.2f64..0.9)
        -> (AtomGrid, TargetPattern) {
            let grid = AtomGrid::random(rows, cols, frac, seed, None);
            let want = (grid.occupied_count() as f64 * 0.8) as usize;
            (grid, TargetPattern::dense_rect(want, cols))
        }
    }

    proptest! {
        #[test]
        fn plans_execute_legally_to_full_occupancy((grid, target) in arb_grid_and_target()) {
            let plan = plan_sort(&grid, &target).unwrap();
            let after = apply_plan(&grid, &plan).unwrap();
            for site in target.iter() {
                prop_assert!(after.is_occupied(site.0, site.1));
            }
            // rearrangement conserves atoms
            prop_assert_eq!(after.occupied_count(), grid.occupied_count());
        }
    }
}
