//! The ⁻/⁺ channel transforms, equivalent-output merging, and exact
//! synthesis of W^{b₁…bₙ}.
//!
//! The transforms follow the two-user combination x₁ = u₁+u₂, x₂ = u₂:
//!
//! ```text
//! W⁻(y₁,y₂|u₁)    = Σ_{u₂} (1/q) W(y₁|u₁+u₂) W(y₂|u₂)
//! W⁺(y₁,y₂,u₁|u₂) =        (1/q) W(y₁|u₁+u₂) W(y₂|u₂)
//! ```
//!
//! Output alphabets grow as M² and M²·q per step, so outputs whose
//! posterior columns are proportional are merged after every transform;
//! merging preserves every information functional exactly up to the merge
//! tolerance. Synthesis fails with [`PolarizeError::AlphabetCapExceeded`]
//! rather than silently approximating; an explicit greedy degrading merge
//! is available for callers that want a budgeted approximation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::Channel;
use crate::par;

/// Default L∞ tolerance for posterior-column equality when merging.
pub const MERGE_TOL: f64 = 1e-10;
/// Default pre-merge output alphabet cap.
pub const ALPHABET_CAP: usize = 200_000;
/// Default cap on exact-synthesis depth.
pub const MAX_SYNTH_DEPTH: usize = 20;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PolarizeError {
    #[error("pre-merge output alphabet would need {needed} symbols, cap is {cap}")]
    AlphabetCapExceeded { needed: usize, cap: usize },
    #[error("path length {len} exceeds synthesis depth cap {cap}")]
    PathTooDeep { len: usize, cap: usize },
    #[error("invalid path character {0:?} (expected '-' or '+')")]
    BadPathChar(char),
}

/// One step of the transform chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathBit {
    Minus,
    Plus,
}

/// A ⁻/⁺ string b₁…bₙ selecting one synthesized channel W^{b₁…bₙ};
/// b₁ is applied first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolarPath {
    bits: Vec<PathBit>,
}

impl PolarPath {
    pub fn new(bits: Vec<PathBit>) -> PolarPath {
        PolarPath { bits }
    }

    pub fn empty() -> PolarPath {
        PolarPath { bits: Vec::new() }
    }

    /// Path for spectrum row `k` of depth `n`: the binary expansion of
    /// `k` MSB first with minus = 0, plus = 1. Row k is the synthesized
    /// channel W_N^{(k+1)}.
    pub fn from_counter(k: usize, n: usize) -> PolarPath {
        let bits = (0..n)
            .map(|level| {
                if k >> (n - 1 - level) & 1 == 1 {
                    PathBit::Plus
                } else {
                    PathBit::Minus
                }
            })
            .collect();
        PolarPath { bits }
    }

    pub fn bits(&self) -> &[PathBit] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for PolarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(match b {
                PathBit::Minus => "-",
                PathBit::Plus => "+",
            })?;
        }
        Ok(())
    }
}

impl FromStr for PolarPath {
    type Err = PolarizeError;

    fn from_str(s: &str) -> Result<PolarPath, PolarizeError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '-' => Ok(PathBit::Minus),
                '+' => Ok(PathBit::Plus),
                other => Err(PolarizeError::BadPathChar(other)),
            })
            .collect::<Result<_, _>>()?;
        Ok(PolarPath { bits })
    }
}

/// Knobs for exact synthesis.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisOptions {
    /// Posterior L∞ tolerance for merging equivalent outputs.
    pub merge_tol: f64,
    /// Pre-merge output alphabet cap; exceeded means failure.
    pub alphabet_cap: usize,
    /// Depth cap for paths.
    pub depth_cap: usize,
    /// Optional output budget for the greedy degrading merge. `None`
    /// keeps synthesis exact.
    pub degrade_to: Option<usize>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            merge_tol: MERGE_TOL,
            alphabet_cap: ALPHABET_CAP,
            depth_cap: MAX_SYNTH_DEPTH,
            degrade_to: None,
        }
    }
}

/// One spectrum record: the path, its mutual information, all Z_d values
/// and the merged output count.
#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub path: PolarPath,
    pub info: f64,
    /// Z_d indexed by d; z[0] = 1.
    pub z: Vec<f64>,
    pub merged_outputs: usize,
}

/// W⁻: the first-user channel seen across a pair of uses. Output alphabet
/// is Y×Y flattened as y₁·M + y₂, not merged.
pub fn minus_transform(ch: &Channel) -> Channel {
    let q = ch.input_size();
    let m = ch.output_size();
    let group = ch.group().clone();
    let qf = q as f64;
    let mut rows = vec![vec![0.0; m * m]; q];
    for (u1, out) in rows.iter_mut().enumerate() {
        for u2 in 0..q {
            let r1 = ch.row(group.add(u1, u2));
            let r2 = ch.row(u2);
            for (y1, &p1) in r1.iter().enumerate() {
                if p1 == 0.0 {
                    continue;
                }
                let base = y1 * m;
                for (y2, &p2) in r2.iter().enumerate() {
                    out[base + y2] += p1 * p2 / qf;
                }
            }
        }
    }
    Channel::from_normalized(group, rows)
}

/// W⁺: the second-user channel with the first input revealed. Output
/// alphabet is Y×Y×G flattened as (y₁·M + y₂)·q + u₁, not merged.
pub fn plus_transform(ch: &Channel) -> Channel {
    let q = ch.input_size();
    let m = ch.output_size();
    let group = ch.group().clone();
    let qf = q as f64;
    let mut rows = vec![vec![0.0; m * m * q]; q];
    for (u2, out) in rows.iter_mut().enumerate() {
        let r2 = ch.row(u2);
        for u1 in 0..q {
            let r1 = ch.row(group.add(u1, u2));
            for (y1, &p1) in r1.iter().enumerate() {
                if p1 == 0.0 {
                    continue;
                }
                for (y2, &p2) in r2.iter().enumerate() {
                    out[(y1 * m + y2) * q + u1] = p1 * p2 / qf;
                }
            }
        }
    }
    Channel::from_normalized(group, rows)
}

/// Merges outputs whose posterior columns agree within `tol` in L∞ and
/// drops zero-probability outputs. Preserves I⁰ and every Z_d within
/// q·tol (exactly, when the merged columns are exactly proportional).
pub fn merge_outputs(ch: &Channel, tol: f64) -> Channel {
    let q = ch.input_size();
    let m = ch.output_size();
    // posterior column and mass per output
    let mut cols: Vec<(Vec<f64>, f64, usize)> = Vec::with_capacity(m);
    for y in 0..m {
        let mass: f64 = (0..q).map(|x| ch.prob(x, y)).sum();
        if mass == 0.0 {
            continue;
        }
        let post: Vec<f64> = (0..q).map(|x| ch.prob(x, y) / mass).collect();
        cols.push((post, mass, y));
    }
    cols.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("posteriors are finite"));

    let mut merged_rows: Vec<Vec<f64>> = vec![Vec::new(); q];
    let mut rep_post: Option<&[f64]> = None;
    let mut cluster_cols: Vec<usize> = Vec::new();
    let flush = |cluster: &[usize], rows: &mut Vec<Vec<f64>>| {
        if cluster.is_empty() {
            return;
        }
        for (x, row) in rows.iter_mut().enumerate() {
            row.push(cluster.iter().map(|&y| ch.prob(x, y)).sum());
        }
    };
    for (post, _, y) in &cols {
        let same = rep_post
            .map(|rep| post.iter().zip(rep).all(|(&a, &b)| (a - b).abs() <= tol))
            .unwrap_or(false);
        if !same {
            flush(&cluster_cols, &mut merged_rows);
            cluster_cols.clear();
            rep_post = Some(post);
        }
        cluster_cols.push(*y);
    }
    flush(&cluster_cols, &mut merged_rows);
    Channel::from_normalized(ch.group().clone(), merged_rows)
}

/// Greedy degrading merge: repeatedly merges the two outputs with the
/// closest posterior columns until at most `budget` outputs remain. This
/// is approximate; information can only decrease.
pub fn degrade_to_budget(ch: &Channel, budget: usize) -> Channel {
    let q = ch.input_size();
    let budget = budget.max(1);
    let mut cols: Vec<Vec<f64>> = (0..ch.output_size())
        .map(|y| (0..q).map(|x| ch.prob(x, y)).collect())
        .collect();
    while cols.len() > budget {
        let posts: Vec<(usize, Vec<f64>)> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mass: f64 = c.iter().sum();
                (
                    i,
                    c.iter()
                        .map(|&p| if mass > 0.0 { p / mass } else { 0.0 })
                        .collect(),
                )
            })
            .collect();
        let mut best = (0usize, 1usize, f64::INFINITY);
        for i in 0..posts.len() {
            for j in (i + 1)..posts.len() {
                let dist = posts[i]
                    .1
                    .iter()
                    .zip(&posts[j].1)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dist < best.2 {
                    best = (i, j, dist);
                }
            }
        }
        let (i, j, _) = best;
        let merged: Vec<f64> = cols[i].iter().zip(&cols[j]).map(|(&a, &b)| a + b).collect();
        cols[i] = merged;
        cols.swap_remove(j);
    }
    let rows: Vec<Vec<f64>> = (0..q)
        .map(|x| cols.iter().map(|c| c[x]).collect())
        .collect();
    Channel::from_normalized(ch.group().clone(), rows)
}

fn checked_minus(ch: &Channel, opts: &SynthesisOptions) -> Result<Channel, PolarizeError> {
    let needed = ch.output_size() * ch.output_size();
    if needed > opts.alphabet_cap {
        return Err(PolarizeError::AlphabetCapExceeded {
            needed,
            cap: opts.alphabet_cap,
        });
    }
    Ok(apply_budget(
        merge_outputs(&minus_transform(ch), opts.merge_tol),
        opts,
    ))
}

fn checked_plus(ch: &Channel, opts: &SynthesisOptions) -> Result<Channel, PolarizeError> {
    let needed = ch.output_size() * ch.output_size() * ch.input_size();
    if needed > opts.alphabet_cap {
        return Err(PolarizeError::AlphabetCapExceeded {
            needed,
            cap: opts.alphabet_cap,
        });
    }
    Ok(apply_budget(
        merge_outputs(&plus_transform(ch), opts.merge_tol),
        opts,
    ))
}

fn apply_budget(ch: Channel, opts: &SynthesisOptions) -> Channel {
    match opts.degrade_to {
        Some(budget) if ch.output_size() > budget => degrade_to_budget(&ch, budget),
        _ => ch,
    }
}

/// Exact synthesis of W^{b₁…bₙ}: fold of the transforms with merging
/// after every step; b₁ is applied first (outermost).
pub fn synthesize_path(
    ch: &Channel,
    path: &PolarPath,
    opts: &SynthesisOptions,
) -> Result<Channel, PolarizeError> {
    if path.len() > opts.depth_cap {
        return Err(PolarizeError::PathTooDeep {
            len: path.len(),
            cap: opts.depth_cap,
        });
    }
    let mut current = ch.clone();
    for bit in path.bits() {
        current = match bit {
            PathBit::Minus => checked_minus(&current, opts)?,
            PathBit::Plus => checked_plus(&current, opts)?,
        };
    }
    Ok(current)
}

/// All 2ⁿ synthesized channels of depth `n`, one [`SpectrumRow`] per path
/// in binary-counter order (minus = 0, plus = 1). Row k is W_N^{(k+1)}.
pub fn spectrum(
    ch: &Channel,
    n: usize,
    opts: &SynthesisOptions,
) -> Result<Vec<SpectrumRow>, PolarizeError> {
    if n > opts.depth_cap {
        return Err(PolarizeError::PathTooDeep {
            len: n,
            cap: opts.depth_cap,
        });
    }
    spectrum_rec(ch.clone(), n, Vec::with_capacity(n), opts)
}

fn spectrum_rec(
    ch: Channel,
    remaining: usize,
    prefix: Vec<PathBit>,
    opts: &SynthesisOptions,
) -> Result<Vec<SpectrumRow>, PolarizeError> {
    if remaining == 0 {
        return Ok(vec![SpectrumRow {
            path: PolarPath::new(prefix),
            info: ch.symmetric_capacity(),
            z: ch.z_all(),
            merged_outputs: ch.output_size(),
        }]);
    }
    // the two subtrees share nothing mutable and run in parallel
    let mut left_prefix = prefix.clone();
    left_prefix.push(PathBit::Minus);
    let mut right_prefix = prefix;
    right_prefix.push(PathBit::Plus);
    let (left, right) = par::join(
        {
            let ch = ch.clone();
            let opts = *opts;
            move || -> Result<Vec<SpectrumRow>, PolarizeError> {
                let w = checked_minus(&ch, &opts)?;
                spectrum_rec(w, remaining - 1, left_prefix, &opts)
            }
        },
        {
            let opts = *opts;
            move || -> Result<Vec<SpectrumRow>, PolarizeError> {
                let w = checked_plus(&ch, &opts)?;
                spectrum_rec(w, remaining - 1, right_prefix, &opts)
            }
        },
    );
    let mut rows = left?;
    rows.extend(right?);
    Ok(rows)
}

/// True when the two channels differ only by an output relabeling, with
/// per-entry tolerance `tol`. Columns are matched greedily; columns
/// closer than `tol` to several candidates are interchangeable, so a
/// greedy assignment suffices.
pub fn isomorphic_up_to_outputs(a: &Channel, b: &Channel, tol: f64) -> bool {
    if a.group() != b.group() || a.output_size() != b.output_size() {
        return false;
    }
    let q = a.input_size();
    let m = a.output_size();
    let col = |ch: &Channel, y: usize| -> Vec<f64> { (0..q).map(|x| ch.prob(x, y)).collect() };
    let mut used = vec![false; m];
    for ya in 0..m {
        let ca = col(a, ya);
        let matched = (0..m).find(|&yb| {
            !used[yb]
                && ca
                    .iter()
                    .zip(col(b, yb).iter())
                    .all(|(&x, &y)| (x - y).abs() <= tol)
        });
        match matched {
            Some(yb) => used[yb] = true,
            None => return false,
        }
    }
    true
}
