//! Presentation-list pseudorandomization: two list orders per set, each
//! split into two blocks with near-equal per-category counts, and never
//! more than two consecutive items of the same experimental condition.
//! Fillers are exempt from the run constraint and break runs.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tsv;

use super::select::derive_seed;
use super::{CellLabel, StimulusSet};

#[derive(Debug, Clone)]
pub struct ListConfig {
    pub seed: u64,
    /// Sequencing attempts per list before giving up.
    pub max_attempts: u32,
    /// Longest permitted run of one experimental condition.
    pub max_run: usize,
}

impl Default for ListConfig {
    fn default() -> Self {
        ListConfig { seed: 1, max_attempts: 1000, max_run: 2 }
    }
}

/// One presentation slot. `condition` is `None` for fillers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListEntry {
    pub block: u8,
    pub position: u32,
    pub item_id: String,
    pub condition: Option<CellLabel>,
}

pub fn randomize_lists(
    set: &StimulusSet,
    fillers: &[String],
    cfg: &ListConfig,
) -> Result<[Vec<ListEntry>; 2]> {
    randomize_lists_ids(&set.ids_by_cell(), fillers, cfg)
}

/// Both lists contain every item; they differ in order. Per category the
/// two blocks of a list hold counts differing by at most one.
pub fn randomize_lists_ids(
    cells: &BTreeMap<CellLabel, Vec<String>>,
    fillers: &[String],
    cfg: &ListConfig,
) -> Result<[Vec<ListEntry>; 2]> {
    let mut categories: Vec<(Option<CellLabel>, Vec<String>)> = cells
        .iter()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(l, ids)| (Some(*l), ids.clone()))
        .collect();
    if !fillers.is_empty() {
        categories.push((None, fillers.to_vec()));
    }
    let total: usize = categories.iter().map(|(_, ids)| ids.len()).sum();
    if total == 0 {
        return Err(Error::InvalidInput("no items to randomize".into()));
    }
    // pigeonhole: a condition with m items needs ceil(m / max_run) - 1
    // separators from the other items
    for (label, ids) in &categories {
        if let Some(label) = label {
            let others = total - ids.len();
            if ids.len() > cfg.max_run * (others + 1) {
                return Err(Error::Infeasible(format!(
                    "condition {} has {} items but only {} other items to break runs",
                    label.as_str(),
                    ids.len(),
                    others
                )));
            }
        }
    }

    let mut lists: Vec<Vec<ListEntry>> = Vec::with_capacity(2);
    for list_no in 0..2u64 {
        let mut sequenced = None;
        for attempt in 0..cfg.max_attempts {
            let stream = list_no * 1_000_003 + attempt as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, stream));
            if let Some(entries) = try_sequence(&categories, cfg.max_run, &mut rng) {
                sequenced = Some(entries);
                break;
            }
        }
        let Some(entries) = sequenced else {
            return Err(Error::Infeasible(format!(
                "run-length constraint (max {}) not satisfied for list {} after {} attempts",
                cfg.max_run,
                list_no + 1,
                cfg.max_attempts
            )));
        };
        lists.push(entries);
    }
    let mut it = lists.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap()])
}

fn try_sequence(
    categories: &[(Option<CellLabel>, Vec<String>)],
    max_run: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<ListEntry>> {
    // split each category into the two blocks, counts differing by <= 1
    let mut blocks: [Vec<(Option<CellLabel>, VecDeque<String>)>; 2] = [Vec::new(), Vec::new()];
    for (label, ids) in categories {
        let mut ids = ids.clone();
        ids.shuffle(rng);
        let extra_to_first: bool = rng.random();
        let half = ids.len() / 2;
        let first_n = if ids.len() % 2 == 1 && extra_to_first { half + 1 } else { half };
        let rest = ids.split_off(first_n);
        blocks[0].push((*label, ids.into()));
        blocks[1].push((*label, rest.into()));
    }

    let mut entries = Vec::new();
    let mut position = 0u32;
    let mut last: Option<Option<CellLabel>> = None;
    let mut run_len = 0usize;
    for (block_no, block) in blocks.iter_mut().enumerate() {
        let mut remaining: usize = block.iter().map(|(_, q)| q.len()).sum();
        while remaining > 0 {
            let mut weight_total = 0usize;
            for (label, queue) in block.iter() {
                if queue.is_empty() {
                    continue;
                }
                let blocked =
                    label.is_some() && last == Some(*label) && run_len >= max_run;
                if !blocked {
                    weight_total += queue.len();
                }
            }
            if weight_total == 0 {
                return None; // stuck; caller retries with a fresh shuffle
            }
            let mut draw = rng.random_range(0..weight_total);
            let mut chosen = usize::MAX;
            for (ci, (label, queue)) in block.iter().enumerate() {
                if queue.is_empty() {
                    continue;
                }
                let blocked =
                    label.is_some() && last == Some(*label) && run_len >= max_run;
                if blocked {
                    continue;
                }
                if draw < queue.len() {
                    chosen = ci;
                    break;
                }
                draw -= queue.len();
            }
            let (label, queue) = &mut block[chosen];
            let item_id = queue.pop_front().expect("non-empty queue");
            if last == Some(*label) {
                run_len += 1;
            } else {
                last = Some(*label);
                run_len = 1;
            }
            position += 1;
            entries.push(ListEntry {
                block: block_no as u8 + 1,
                position,
                item_id,
                condition: *label,
            });
            remaining -= 1;
        }
    }
    Some(entries)
}

/// List rows: `block position item_id condition` (condition `filler` for
/// filler items).
pub fn write_list_tsv<W: Write>(entries: &[ListEntry], list_no: u8, mut w: W) -> Result<()> {
    writeln!(w, "#list\tlist={list_no}")?;
    for e in entries {
        tsv::check_no_tab(&e.item_id, "item_id")?;
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.block,
            e.position,
            e.item_id,
            e.condition.map_or("filler", CellLabel::as_str)
        )?;
    }
    Ok(())
}
