//! Greedy set cover and greedy packing.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Greedy set cover of `0..n_targets` by `sets` (each a list of target
/// indices). Picks the set covering the most uncovered targets, ties broken
/// by the lowest set index. Returns the chosen set indices in pick order, or
/// the first target no set contains.
pub fn greedy_set_cover(sets: &[Vec<u32>], n_targets: usize) -> Result<Vec<usize>, usize> {
    let mut coverable = vec![false; n_targets];
    for s in sets {
        for &t in s {
            coverable[t as usize] = true;
        }
    }
    if let Some(bad) = coverable.iter().position(|c| !c) {
        return Err(bad);
    }
    let mut covered = vec![false; n_targets];
    let mut remaining = n_targets;
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = sets
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(i, s)| (s.len(), Reverse(i)))
        .collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let Some((stale, Reverse(i))) = heap.pop() else {
            unreachable!("every target is coverable");
        };
        let gain = sets[i].iter().filter(|&&t| !covered[t as usize]).count();
        if gain == 0 {
            continue;
        }
        if gain < stale {
            heap.push((gain, Reverse(i)));
            continue;
        }
        for &t in &sets[i] {
            let t = t as usize;
            if !covered[t] {
                covered[t] = true;
                remaining -= 1;
            }
        }
        chosen.push(i);
    }
    Ok(chosen)
}

/// Greedy packing over `0..n` in index order: keep `p` unless it conflicts
/// with an already kept point. `conflicts(p)` lists every `q` that is not
/// separated from `p` (in either direction).
pub fn greedy_packing<I, F>(n: usize, mut conflicts: F) -> Vec<usize>
where
    F: FnMut(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    let mut kept = Vec::new();
    let mut is_kept = vec![false; n];
    for p in 0..n {
        if conflicts(p).into_iter().any(|q| q != p && is_kept[q]) {
            continue;
        }
        is_kept[p] = true;
        kept.push(p);
    }
    kept
}
