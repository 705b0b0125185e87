//! Successive-cancellation likelihood evaluation.
//!
//! A binary tree over the received block: node (s, i) covers the
//! received symbols [i·2^s, (i+1)·2^s) and evaluates the synthesized
//! channel likelihoods W_{2^s}^{(k+1)}(y-range, decided inputs | g) for
//! its k-th input. Likelihood vectors are renormalized to sum one at
//! every node, which keeps probabilities out of the underflow range for
//! N ≤ 2^14 and leaves argmax decisions and likelihood ratios unchanged.
//!
//! Total work per block is O(N log N · q²): each node performs one O(q²)
//! convolution per even input and one O(q) product per odd input.

use crate::channel::Channel;
use crate::group::Group;

/// Callers must strictly alternate [`ScTree::next_root_likelihood`] and
/// [`ScTree::push_root_decision`], once per input index in order; the
/// cached child vectors are only valid under that schedule.
pub(crate) struct ScTree {
    group: Group,
    n: usize,
    /// leaf likelihood rows: leaf[j*q + g] = W(y_j | g)
    leaf: Vec<f64>,
    /// per level s in 1..=n: cached child likelihoods and bookkeeping
    levels: Vec<LevelState>,
}

struct LevelState {
    l1: Vec<f64>,
    l2: Vec<f64>,
    last_u: Vec<usize>,
    received: Vec<usize>,
}

impl ScTree {
    /// Builds the tree for one received block `y`.
    pub fn new(ch: &Channel, y: &[usize]) -> ScTree {
        let q = ch.input_size();
        let n = y.len().trailing_zeros() as usize;
        debug_assert_eq!(1 << n, y.len());
        let mut leaf = vec![0.0; y.len() * q];
        for (j, &yj) in y.iter().enumerate() {
            for g in 0..q {
                leaf[j * q + g] = ch.prob(g, yj);
            }
        }
        let levels = (1..=n)
            .map(|s| {
                let nodes = 1 << (n - s);
                LevelState {
                    l1: vec![0.0; nodes * q],
                    l2: vec![0.0; nodes * q],
                    last_u: vec![0; nodes],
                    received: vec![0; nodes],
                }
            })
            .collect();
        ScTree {
            group: ch.group().clone(),
            n,
            leaf,
            levels,
        }
    }

    /// Likelihood vector for the next undecided input of the root,
    /// normalized to sum 1 (all-zero if the block is impossible).
    pub fn next_root_likelihood(&mut self) -> Vec<f64> {
        self.next_likelihood(self.n, 0)
    }

    /// Feeds the decided value of the root's current input.
    pub fn push_root_decision(&mut self, u: usize) {
        self.push_decided(self.n, 0, u);
    }

    fn next_likelihood(&mut self, s: usize, i: usize) -> Vec<f64> {
        let q = self.group.order();
        if s == 0 {
            return self.leaf[i * q..(i + 1) * q].to_vec();
        }
        let (received, last_u) = {
            let st = &self.levels[s - 1];
            (st.received[i], st.last_u[i])
        };
        let mut out = vec![0.0; q];
        if received % 2 == 0 {
            let l1 = self.next_likelihood(s - 1, 2 * i);
            let l2 = self.next_likelihood(s - 1, 2 * i + 1);
            for g in 0..q {
                let mut acc = 0.0;
                for g2 in 0..q {
                    acc += l1[self.group.add(g, g2)] * l2[g2];
                }
                out[g] = acc;
            }
            let st = &mut self.levels[s - 1];
            st.l1[i * q..(i + 1) * q].copy_from_slice(&l1);
            st.l2[i * q..(i + 1) * q].copy_from_slice(&l2);
        } else {
            let st = &self.levels[s - 1];
            let l1 = &st.l1[i * q..(i + 1) * q];
            let l2 = &st.l2[i * q..(i + 1) * q];
            for g in 0..q {
                out[g] = l1[self.group.add(last_u, g)] * l2[g];
            }
        }
        let sum: f64 = out.iter().sum();
        if sum > 0.0 {
            for v in &mut out {
                *v /= sum;
            }
        }
        out
    }

    fn push_decided(&mut self, s: usize, i: usize, u: usize) {
        if s == 0 {
            return;
        }
        let st = &mut self.levels[s - 1];
        st.received[i] += 1;
        if st.received[i] % 2 == 1 {
            st.last_u[i] = u;
        } else {
            let pair = self.group.add(st.last_u[i], u);
            self.push_decided(s - 1, 2 * i, pair);
            self.push_decided(s - 1, 2 * i + 1, u);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams1;
    use crate::codec::GeneratorMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force W_N^{(i)}(y, u^{i-1} | g) by summing over the tail.
    fn brute_likelihood(ch: &Channel, y: &[usize], prior: &[usize], g: usize) -> f64 {
        let n = y.len().trailing_zeros() as usize;
        let gm = GeneratorMatrix::new(n).unwrap();
        let group = ch.group().clone();
        let q = group.order();
        let big_n = y.len();
        let tail = big_n - prior.len() - 1;
        let mut total = 0.0;
        let mut tail_vec = vec![0usize; tail];
        loop {
            let mut u: Vec<usize> = prior.to_vec();
            u.push(g);
            u.extend_from_slice(&tail_vec);
            let x = gm.encode(&group, &u).unwrap();
            let mut p = 1.0;
            for (j, &xj) in x.iter().enumerate() {
                p *= ch.prob(xj, y[j]);
            }
            total += p;
            // odometer over the tail
            let mut pos = 0;
            loop {
                if pos == tail {
                    let scale = (q as f64).powi(big_n as i32 - 1);
                    return total / scale;
                }
                tail_vec[pos] += 1;
                if tail_vec[pos] < q {
                    break;
                }
                tail_vec[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn tree_matches_brute_force() {
        let ch = Channel::channel1(ChannelParams1::new(0.4, 0.2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = 1 + rng.gen_range(0..2); // N in {2, 4}
            let big_n = 1 << n;
            let y: Vec<usize> = (0..big_n).map(|_| rng.gen_range(0..7)).collect();
            let i = rng.gen_range(0..big_n);
            let prior: Vec<usize> = (0..i).map(|_| rng.gen_range(0..4)).collect();

            let mut tree = ScTree::new(&ch, &y);
            for &u in &prior {
                tree.next_root_likelihood();
                tree.push_root_decision(u);
            }
            let got = tree.next_root_likelihood();

            let brute: Vec<f64> = (0..4)
                .map(|g| brute_likelihood(&ch, &y, &prior, g))
                .collect();
            let sum: f64 = brute.iter().sum();
            if sum == 0.0 {
                assert!(got.iter().all(|&v| v == 0.0));
                continue;
            }
            for g in 0..4 {
                assert!(
                    (got[g] - brute[g] / sum).abs() < 1e-12,
                    "mismatch at n={n} i={i}: {got:?} vs {brute:?}"
                );
            }
        }
    }

    #[test]
    fn tree_matches_brute_force_on_random_group_channel() {
        let group = Group::new(&[(2, 1), (3, 1)]).unwrap();
        let ch = Channel::random(group, 4, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..15 {
            let big_n = 4;
            let y: Vec<usize> = (0..big_n).map(|_| rng.gen_range(0..4)).collect();
            let i = rng.gen_range(0..big_n);
            let prior: Vec<usize> = (0..i).map(|_| rng.gen_range(0..6)).collect();

            let mut tree = ScTree::new(&ch, &y);
            for &u in &prior {
                tree.next_root_likelihood();
                tree.push_root_decision(u);
            }
            let got = tree.next_root_likelihood();
            let brute: Vec<f64> = (0..6)
                .map(|g| brute_likelihood(&ch, &y, &prior, g))
                .collect();
            let sum: f64 = brute.iter().sum();
            for g in 0..6 {
                assert!((got[g] - brute[g] / sum).abs() < 1e-12);
            }
        }
    }
}
