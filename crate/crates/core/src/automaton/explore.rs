//! Layered breadth-first exploration of a bounded integer state space.
//!
//! States are fixed-width integer vectors with per-coordinate ranges. Each
//! layer's successors are computed in parallel and merged in state order, so
//! discovery order (and thus every returned path) is the same as a plain
//! sequential BFS that tries actions in index order.

use std::collections::HashSet;

use rayon::prelude::*;

/// A deterministic-per-action transition system over bounded integer vectors.
pub(crate) trait TransitionSystem: Sync {
    fn ranges(&self) -> &[(i64, i64)];
    fn initial(&self) -> Vec<i64>;
    fn num_actions(&self) -> usize;
    /// Writes the successor of `state` under `action` into `out`; returns
    /// `false` when the action is disabled or leaves the ranges.
    fn apply(&self, state: &[i64], action: usize, out: &mut [i64]) -> bool;
    fn is_target(&self, state: &[i64]) -> bool;
}

/// Dense bitsets are used up to this many states.
const DENSE_LIMIT: u128 = 1 << 28;
/// Layers smaller than this are expanded on the calling thread.
const PAR_THRESHOLD: usize = 2048;

enum Seen {
    Dense(Vec<u64>),
    Packed(HashSet<u128>),
    Raw(HashSet<Box<[i64]>>),
}

struct Packer {
    lows: Vec<i64>,
    strides: Vec<u128>,
}

impl Packer {
    fn new(ranges: &[(i64, i64)]) -> (Self, Option<u128>) {
        let mut strides = Vec::with_capacity(ranges.len());
        let mut size: Option<u128> = Some(1);
        for &(lo, hi) in ranges {
            strides.push(size.unwrap_or(0));
            let span = (hi as i128 - lo as i128 + 1).max(0) as u128;
            size = size.and_then(|s| s.checked_mul(span));
        }
        let lows = ranges.iter().map(|r| r.0).collect();
        (Self { lows, strides }, size)
    }

    fn key(&self, state: &[i64]) -> u128 {
        state
            .iter()
            .zip(&self.lows)
            .zip(&self.strides)
            .map(|((&v, &lo), &stride)| (v as i128 - lo as i128) as u128 * stride)
            .sum()
    }
}

impl Seen {
    fn insert(&mut self, packer: &Packer, state: &[i64]) -> bool {
        match self {
            Seen::Dense(bits) => {
                let k = packer.key(state) as usize;
                let (word, bit) = (k / 64, 1u64 << (k % 64));
                let fresh = bits[word] & bit == 0;
                bits[word] |= bit;
                fresh
            }
            Seen::Packed(set) => set.insert(packer.key(state)),
            Seen::Raw(set) => set.insert(state.into()),
        }
    }
}

pub(crate) struct Exploration {
    /// Flat state storage, `width` entries per discovered state.
    pub states: Vec<i64>,
    pub width: usize,
    /// `(parent index, action)` per state; the initial state has none.
    pub parents: Vec<Option<(u32, u32)>>,
    /// Index of the first target state found.
    pub target: Option<usize>,
    /// Set when the state budget stopped the search early.
    pub truncated: bool,
    /// `(from, action, to)`, only when transitions were requested.
    pub transitions: Vec<(usize, usize, usize)>,
}

impl Exploration {
    pub fn state(&self, k: usize) -> &[i64] {
        &self.states[k * self.width..(k + 1) * self.width]
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    /// Actions along the BFS tree from the initial state to `k`.
    pub fn path_to(&self, mut k: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some((parent, action)) = self.parents[k] {
            path.push(action as usize);
            k = parent as usize;
        }
        path.reverse();
        path
    }
}

/// Explores from the initial state. With `stop_at_target` the search ends on
/// the first discovery of a target; with `transitions` every enabled
/// transition between discovered states is recorded (which needs a lookup
/// table and is meant for small systems). At most `max_states` states are
/// discovered.
pub(crate) fn explore<T: TransitionSystem>(
    sys: &T,
    max_states: usize,
    stop_at_target: bool,
    transitions: bool,
) -> Exploration {
    let ranges = sys.ranges();
    let width = ranges.len();
    let (packer, size) = Packer::new(ranges);
    let mut seen = match size {
        Some(s) if s <= DENSE_LIMIT => Seen::Dense(vec![0u64; (s as usize).div_ceil(64)]),
        Some(_) => Seen::Packed(HashSet::new()),
        None => Seen::Raw(HashSet::new()),
    };
    let mut index: std::collections::HashMap<Box<[i64]>, usize> = Default::default();

    let init = sys.initial();
    let mut ex = Exploration {
        states: init.clone(),
        width,
        parents: vec![None],
        target: None,
        truncated: false,
        transitions: Vec::new(),
    };
    seen.insert(&packer, &init);
    if transitions {
        index.insert(init.clone().into(), 0);
    }
    if sys.is_target(&init) {
        ex.target = Some(0);
        if stop_at_target {
            return ex;
        }
    }
    if max_states == 0 {
        ex.truncated = true;
        return ex;
    }

    let actions = sys.num_actions();
    let expand = |states: &[i64], k: usize| -> Vec<(u32, Vec<i64>)> {
        let cur = &states[k * width..(k + 1) * width];
        let mut out = Vec::new();
        let mut buf = vec![0i64; width];
        for a in 0..actions {
            if sys.apply(cur, a, &mut buf) {
                out.push((a as u32, buf.clone()));
            }
        }
        out
    };

    let mut lo = 0;
    while lo < ex.len() {
        let hi = ex.len();
        let succ: Vec<Vec<(u32, Vec<i64>)>> = if hi - lo >= PAR_THRESHOLD {
            (lo..hi)
                .into_par_iter()
                .map(|k| expand(&ex.states, k))
                .collect()
        } else {
            (lo..hi).map(|k| expand(&ex.states, k)).collect()
        };
        for (offset, list) in succ.into_iter().enumerate() {
            let from = lo + offset;
            for (action, next) in list {
                if seen.insert(&packer, &next) {
                    if ex.len() >= max_states {
                        ex.truncated = true;
                        return ex;
                    }
                    let to = ex.len();
                    ex.states.extend_from_slice(&next);
                    ex.parents.push(Some((from as u32, action)));
                    if transitions {
                        index.insert(next.clone().into(), to);
                        ex.transitions.push((from, action as usize, to));
                    }
                    if ex.target.is_none() && sys.is_target(&next) {
                        ex.target = Some(to);
                        if stop_at_target {
                            return ex;
                        }
                    }
                } else if transitions {
                    ex.transitions
                        .push((from, action as usize, index[next.as_slice()]));
                }
            }
        }
        lo = hi;
    }
    ex
}
