#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

/// Minimal forward evaluations to reverse `n` steps with `s` slots,
/// computed top-down. `None` when impossible.
pub struct Oracle {
    memo: HashMap<(usize, usize), Option<u64>>,
}

impl Oracle {
    pub fn new() -> Self {
        Oracle { memo: HashMap::new() }
    }

    pub fn cost(&mut self, n: usize, s: usize) -> Option<u64> {
        if n <= s + 1 {
            // tape the whole range: each step once
            return Some(n as u64);
        }
        if s == 0 {
            return None;
        }
        if let Some(&v) = self.memo.get(&(n, s)) {
            return v;
        }
        // checkpoint the start, advance k steps, reverse the tail with one
        // slot fewer, then restore the start and reverse the head
        let mut best: Option<u64> = None;
        for k in 1..n {
            let tail = self.cost(n - k, s - 1);
            let head = self.cost(k, s);
            if let (Some(t), Some(h)) = (tail, head) {
                let total = k as u64 + t + h;
                best = Some(best.map_or(total, |b| b.min(total)));
            }
        }
        self.memo.insert((n, s), best);
        best
    }

    /// `cost(n, s) / n` as an exact pair.
    pub fn ratio(&mut self, n: usize, s: usize) -> (u64, u64) {
        (self.cost(n, s).expect("feasible"), n as u64)
    }
}

/// `a/b <= c/d` for positive denominators.
pub fn ratio_le(a: (u64, u64), b: (u64, u64)) -> bool {
    (a.0 as u128) * (b.1 as u128) <= (b.0 as u128) * (a.1 as u128)
}

/// Cheapest reversal found by a shortest-path search over raw memory
/// states: up to `s + 1` stored states (the slots plus the working
/// register), where reversing step `k` needs state `k` stored and step `k`
/// executed from it while it stayed stored. Exponential; small `n` only.
pub fn brute_force_cost(n: usize, s: usize) -> Option<u64> {
    assert!(n <= 16);
    let cap = s + 1;
    // (stored mask, recorded mask, next step to reverse + 1)
    type Node = (u32, u32, usize);
    let start: Node = (1, 0, n);
    let mut dist: HashMap<Node, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0);
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, node))) = heap.pop() {
        if dist.get(&node).is_some_and(|&best| best < d) {
            continue;
        }
        let (stored, recorded, next) = node;
        if next == 0 {
            return Some(d);
        }
        let k = next - 1;
        let mut moves: Vec<(u64, Node)> = Vec::new();
        if recorded & (1 << k) != 0 {
            moves.push((0, (stored & !(1 << k), recorded & !(1 << k), k)));
        }
        for j in 0..=k {
            let bit = 1u32 << j;
            if stored & bit == 0 {
                continue;
            }
            moves.push((0, (stored & !bit, recorded & !bit, next)));
            if recorded & bit == 0 {
                moves.push((1, (stored, recorded | bit, next)));
            }
            if j < k {
                let up = bit << 1;
                moves.push((1, ((stored & !bit) | up, recorded & !bit, next)));
                if stored & up == 0 && (stored.count_ones() as usize) < cap {
                    moves.push((1, (stored | up, recorded | bit, next)));
                }
            }
        }
        for (c, to) in moves {
            let nd = d + c;
            if dist.get(&to).map_or(true, |&best| nd < best) {
                dist.insert(to, nd);
                heap.push(Reverse((nd, to)));
            }
        }
    }
    None
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Weights uniform in [-1, 1] and a forget-gate bias in [2, 3]; step-0
/// gradients stay well above finite-difference noise for 32 steps.
pub fn conditioned_cell(d: usize, n: usize, seed: u64) -> msckpt::harness::LstmCell {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |len: usize, lo: f64, hi: f64| (0..len).map(|_| rng.gen_range(lo..=hi)).collect::<Vec<f64>>();
    let weights = [
        uniform(2 * d * d, -1.0, 1.0),
        uniform(2 * d * d, -1.0, 1.0),
        uniform(2 * d * d, -1.0, 1.0),
        uniform(2 * d * d, -1.0, 1.0),
    ];
    let biases = [uniform(d, 2.0, 3.0), uniform(d, -0.5, 0.5), uniform(d, -0.5, 0.5), uniform(d, -0.5, 0.5)];
    let inputs = (0..n).map(|_| uniform(d, -1.0, 1.0)).collect();
    let target = uniform(d, -1.0, 1.0);
    msckpt::harness::LstmCell::new(d, weights, biases, inputs, target).unwrap()
}

/// Central differences with step 1e-6 of the loss with respect to every
/// entry of (h_0, c_0).
pub fn finite_difference(
    cell: &msckpt::harness::LstmCell,
    state: &msckpt::harness::LstmState,
) -> msckpt::harness::LstmState {
    const STEP: f64 = 1e-6;
    let loss_at = |s: &msckpt::harness::LstmState| cell.loss(&cell.unroll(s));
    let mut grad = msckpt::harness::LstmState::zeros(cell.hidden_size());
    for k in 0..cell.hidden_size() {
        for which in 0..2 {
            let mut plus = state.clone();
            let mut minus = state.clone();
            let (p, m, g) = if which == 0 {
                (&mut plus.h[k], &mut minus.h[k], &mut grad.h[k])
            } else {
                (&mut plus.c[k], &mut minus.c[k], &mut grad.c[k])
            };
            *p += STEP;
            *m -= STEP;
            *g = (loss_at(&plus) - loss_at(&minus)) / (2.0 * STEP);
        }
    }
    grad
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest elementwise relative error between the full-storage adjoint and
/// finite differences.
pub fn max_gradient_error(cell: &msckpt::harness::LstmCell, state: &msckpt::harness::LstmState) -> f64 {
    use msckpt::runtime::{execute_with, RuntimeOptions, Strategy};
    let run = execute_with(&RuntimeOptions::default(), &Strategy::FullStorage, cell, state, None).unwrap();
    let fd = finite_difference(cell, state);
    run.adjoint
        .h
        .iter()
        .chain(&run.adjoint.c)
        .zip(fd.h.iter().chain(&fd.c))
        .map(|(a, b)| relative_error(*a, *b))
        .fold(0.0, f64::max)
}
