//! Code construction, the {0,1} generator-matrix encoder with dithering,
//! and transversal-restricted successive-cancellation decoding.
//!
//! The generator matrix is G_N = B_N·F^{⊗n} with B_N the bit-reversal
//! permutation; its entries select which message symbols are summed into
//! each code symbol, so encoding needs group addition only. Per-index
//! subgroups H(i) come from thresholding the Z_d profile of the
//! synthesized channel W_N^{(i)}; index i then carries log₂(|G|/|H(i)|)
//! bits through a transversal of H(i), offset by a seeded dither.

mod sc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Channel, ChannelError};
use crate::group::{Group, GroupError, GroupSpec, Subgroup, Transversal};
use crate::par;
use crate::polarize::{self, PolarPath, PolarizeError, SynthesisOptions};
use sc::ScTree;

/// Depth cap for generator matrices (N = 2^20).
pub const MAX_GENERATOR_DEPTH: usize = 20;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CodecError {
    #[error("depth {0} exceeds the generator cap {MAX_GENERATOR_DEPTH}")]
    DepthTooLarge(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("channel does not match the code config: {0}")]
    ConfigChannelMismatch(String),
    #[error("per-index quality table is missing index {0}")]
    MissingIndex(usize),
    #[error("Monte Carlo estimation needs at least 100 trials, got {0}")]
    TrialsTooFew(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Polarize(#[from] PolarizeError),
}

fn bit_reverse(i: usize, n: usize) -> usize {
    let mut out = 0;
    for b in 0..n {
        out |= (i >> b & 1) << (n - 1 - b);
    }
    out
}

/// The polar generator matrix B_N·F^{⊗n}, stored implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorMatrix {
    n: usize,
}

impl GeneratorMatrix {
    pub fn new(n: usize) -> Result<GeneratorMatrix, CodecError> {
        if n > MAX_GENERATOR_DEPTH {
            return Err(CodecError::DepthTooLarge(n));
        }
        Ok(GeneratorMatrix { n })
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    /// Entry (i, j): F^{⊗n}[rev(i)][j], which is 1 iff the bits of j are
    /// a subset of the bits of rev(i).
    pub fn entry(&self, i: usize, j: usize) -> bool {
        j & !bit_reverse(i, self.n) == 0
    }

    /// Dense {0,1} form, for rank checks and small examples.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let n = self.size();
        (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j) as u8).collect())
            .collect()
    }

    /// x = u·G_N with group addition, via the O(N log N) butterfly.
    pub fn encode(&self, group: &Group, u: &[usize]) -> Result<Vec<usize>, CodecError> {
        let n = self.size();
        if u.len() != n {
            return Err(CodecError::LengthMismatch {
                expected: n,
                got: u.len(),
            });
        }
        let mut w: Vec<usize> = (0..n).map(|j| u[bit_reverse(j, self.n)]).collect();
        fn rec(group: &Group, w: &mut [usize]) {
            if w.len() <= 1 {
                return;
            }
            let half = w.len() / 2;
            let (a, b) = w.split_at_mut(half);
            for k in 0..half {
                a[k] = group.add(a[k], b[k]);
            }
            rec(group, a);
            rec(group, b);
        }
        rec(group, &mut w);
        Ok(w)
    }

    /// Rank of the matrix over Z_p by Gaussian elimination.
    pub fn rank_mod(&self, p: u64) -> usize {
        let n = self.size();
        let p = p as u16;
        let mut m: Vec<Vec<u16>> = (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j) as u16).collect())
            .collect();
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot) = (rank..n).find(|&r| !m[r][col].is_multiple_of(p)) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = mod_inverse(m[rank][col] % p, p);
            for v in &mut m[rank] {
                *v = *v * inv % p;
            }
            for r in 0..n {
                if r != rank && !m[r][col].is_multiple_of(p) {
                    let f = m[r][col] % p;
                    let row = m[rank].clone();
                    for (v, &rv) in m[r].iter_mut().zip(&row) {
                        *v = (*v + p - f * rv % p) % p;
                    }
                }
            }
            rank += 1;
            if rank == n {
                break;
            }
        }
        rank
    }
}

fn mod_inverse(a: u16, p: u16) -> u16 {
    // p is a small prime; Fermat
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut exp = p as u64 - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    result as u16
}

/// Classification thresholds for the per-index Z_d profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub z_hi: f64,
    pub z_lo: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            z_hi: 0.9,
            z_lo: 0.1,
        }
    }
}

impl Thresholds {
    /// Blocklength-scaled thresholds: z_lo = min(0.1, 6.4/N). The index
    /// partition is defined with a tolerance that vanishes as N grows;
    /// a fixed z_lo admits a per-index residual error that stops shrinking
    /// and the block error rate of longer codes would stall.
    pub fn scaled(n: usize) -> Thresholds {
        Thresholds {
            z_hi: 0.9,
            z_lo: (6.4 / 2f64.powi(n as i32)).min(0.1),
        }
    }
}

/// H = ⟨{d : z_d > z_hi}⟩, enlarged by the strongest remaining offender
/// while any d ∉ H has z_d > z_lo. The result always satisfies
/// max_{d∉H} z_d ≤ z_lo; the worst case is H = G (a frozen index).
pub fn classify_index(group: &Group, z: &[f64], thresholds: Thresholds) -> Subgroup {
    let q = group.order();
    assert_eq!(z.len(), q, "need one z value per difference d");
    let mut gens: Vec<usize> = (1..q).filter(|&d| z[d] > thresholds.z_hi).collect();
    let mut h = group
        .generated_subgroup(&gens)
        .expect("differences are group elements");
    loop {
        let offender = (1..q)
            .filter(|&d| !h.contains(d) && z[d] > thresholds.z_lo)
            .max_by(|&a, &b| z[a].partial_cmp(&z[b]).expect("finite").then(b.cmp(&a)));
        match offender {
            Some(d) => {
                gens.push(d);
                h = group.generated_subgroup(&gens).expect("in range");
            }
            None => return h,
        }
    }
}

/// How per-index channel quality is obtained.
#[derive(Debug, Clone, Copy)]
pub enum QualityMethod {
    /// Exact synthesis of W_N^{(i)} through transform + merge.
    Exact(SynthesisOptions),
    /// Unbiased sampling of the likelihood-ratio square-root statistic.
    MonteCarlo { trials: usize, seed: u64 },
}

/// Per-index Z_d estimates; `std_err` present for Monte Carlo.
#[derive(Debug, Clone)]
pub struct IndexQuality {
    pub z: Vec<f64>,
    pub std_err: Option<Vec<f64>>,
}

/// Z_d profile of W_N^{(idx+1)}, the synthesized channel of spectrum row
/// `idx` (0-based; its path is the binary expansion of idx, minus = 0).
pub fn estimate_index_quality(
    ch: &Channel,
    n: usize,
    idx: usize,
    method: QualityMethod,
) -> Result<IndexQuality, CodecError> {
    let big_n = 1usize << n;
    if idx >= big_n {
        return Err(CodecError::MissingIndex(idx));
    }
    match method {
        QualityMethod::Exact(opts) => {
            let path = PolarPath::from_counter(idx, n);
            let synthesized = polarize::synthesize_path(ch, &path, &opts)?;
            Ok(IndexQuality {
                z: synthesized.z_all(),
                std_err: None,
            })
        }
        QualityMethod::MonteCarlo { trials, seed } => monte_carlo_quality(ch, n, idx, trials, seed),
    }
}

fn monte_carlo_quality(
    ch: &Channel,
    n: usize,
    idx: usize,
    trials: usize,
    seed: u64,
) -> Result<IndexQuality, CodecError> {
    if trials < 100 {
        return Err(CodecError::TrialsTooFew(trials));
    }
    let group = ch.group().clone();
    let q = group.order();
    let big_n = 1usize << n;
    let gm = GeneratorMatrix::new(n)?;

    let stats: Vec<Vec<f64>> = par::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64 + 1);
        let u: Vec<usize> = (0..big_n).map(|_| rng.gen_range(0..q)).collect();
        let x = gm.encode(&group, &u).expect("length matches");
        let y: Vec<usize> = x
            .iter()
            .map(|&xj| sample_output(ch, xj, &mut rng))
            .collect();
        let mut tree = ScTree::new(ch, &y);
        for &ui in &u[..idx] {
            tree.next_root_likelihood();
            tree.push_root_decision(ui);
        }
        let lik = tree.next_root_likelihood();
        let base = lik[u[idx]];
        (0..q)
            .map(|d| {
                if d == 0 {
                    1.0
                } else if base > 0.0 {
                    (lik[group.add(u[idx], d)] / base).sqrt()
                } else {
                    // impossible for sampled (u, y); keep the trial neutral
                    1.0
                }
            })
            .collect()
    });

    let tf = trials as f64;
    let mut z = vec![0.0; q];
    let mut sq = vec![0.0; q];
    for s in &stats {
        for (d, &v) in s.iter().enumerate() {
            z[d] += v;
            sq[d] += v * v;
        }
    }
    for v in &mut z {
        *v /= tf;
    }
    let std_err: Vec<f64> = (0..q)
        .map(|d| {
            let var = (sq[d] / tf - z[d] * z[d]).max(0.0) * tf / (tf - 1.0);
            (var / tf).sqrt()
        })
        .collect();
    Ok(IndexQuality {
        z,
        std_err: Some(std_err),
    })
}

pub(crate) fn sample_output(ch: &Channel, x: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut u: f64 = rng.gen();
    let row = ch.row(x);
    for (y, &p) in row.iter().enumerate() {
        if u < p {
            return y;
        }
        u -= p;
    }
    row.len() - 1
}

/// A constructed multilevel polar code: per-index subgroups, their
/// transversals, and the shared dither seed.
#[derive(Debug, Clone)]
pub struct CodeConfig {
    group: Group,
    n: usize,
    assignment: Vec<Subgroup>,
    transversals: Vec<Transversal>,
    dither_seed: u64,
    dither: Vec<usize>,
    rate: f64,
}

impl CodeConfig {
    pub fn new(
        group: Group,
        n: usize,
        assignment: Vec<Subgroup>,
        dither_seed: u64,
    ) -> Result<CodeConfig, CodecError> {
        let big_n = 1usize << n;
        if assignment.len() != big_n {
            return Err(CodecError::LengthMismatch {
                expected: big_n,
                got: assignment.len(),
            });
        }
        let q = group.order() as f64;
        let mut transversals = Vec::with_capacity(big_n);
        let mut rate = 0.0;
        for h in &assignment {
            if h.parent() != &group {
                return Err(CodecError::ConfigChannelMismatch(
                    "assignment subgroup belongs to a different group".into(),
                ));
            }
            rate += (q / h.order() as f64).log2();
            transversals.push(group.transversal_of(h)?);
        }
        rate /= big_n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(dither_seed);
        let dither = assignment
            .iter()
            .map(|h| h.members()[rng.gen_range(0..h.order())])
            .collect();
        Ok(CodeConfig {
            group,
            n,
            assignment,
            transversals,
            dither_seed,
            dither,
            rate,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn block_length(&self) -> usize {
        1 << self.n
    }

    /// Rate in bits per symbol: (1/N) Σ log₂(|G|/|H(i)|).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn assignment(&self) -> &[Subgroup] {
        &self.assignment
    }

    pub fn transversal(&self, idx: usize) -> &Transversal {
        &self.transversals[idx]
    }

    pub fn dither_seed(&self) -> u64 {
        self.dither_seed
    }

    /// The dither vector b, uniform over ⊕ H(i), regenerated from the
    /// stored seed so encoder and decoder share it without transmission.
    pub fn dither(&self) -> &[usize] {
        &self.dither
    }

    /// A uniform random message: v_i drawn from the transversal of H(i).
    pub fn random_message<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        self.transversals
            .iter()
            .map(|t| t.reps()[rng.gen_range(0..t.reps().len())])
            .collect()
    }

    /// Encodes a message v ∈ ⊕ T_{H(i)}: x = (v + b)·G_N.
    pub fn encode(&self, v: &[usize]) -> Result<Vec<usize>, CodecError> {
        let big_n = self.block_length();
        if v.len() != big_n {
            return Err(CodecError::LengthMismatch {
                expected: big_n,
                got: v.len(),
            });
        }
        let u: Vec<usize> = v
            .iter()
            .zip(&self.dither)
            .map(|(&vi, &bi)| self.group.add(vi, bi))
            .collect();
        GeneratorMatrix::new(self.n)?.encode(&self.group, &u)
    }
}

/// JSON form of a code config:
/// `{ "group": [[p,r],...], "n": …, "assignment": [[members],...],
///    "dither_seed": …, "rate": … }`.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct CodeConfigJson {
    pub group: GroupSpec,
    pub n: usize,
    pub assignment: Vec<Vec<usize>>,
    pub dither_seed: u64,
    pub rate: f64,
}

impl TryFrom<CodeConfigJson> for CodeConfig {
    type Error = CodecError;

    fn try_from(json: CodeConfigJson) -> Result<CodeConfig, CodecError> {
        let group = json.group.build()?;
        let assignment: Vec<Subgroup> = json
            .assignment
            .iter()
            .map(|members| Subgroup::new(&group, members))
            .collect::<Result<_, _>>()?;
        let cfg = CodeConfig::new(group, json.n, assignment, json.dither_seed)?;
        if (cfg.rate - json.rate).abs() > 1e-9 {
            return Err(CodecError::ConfigChannelMismatch(format!(
                "stored rate {} does not match the assignment rate {}",
                json.rate, cfg.rate
            )));
        }
        Ok(cfg)
    }
}

impl From<&CodeConfig> for CodeConfigJson {
    fn from(cfg: &CodeConfig) -> CodeConfigJson {
        CodeConfigJson {
            group: GroupSpec::from(&cfg.group),
            n: cfg.n,
            assignment: cfg
                .assignment
                .iter()
                .map(|h| h.members().to_vec())
                .collect(),
            dither_seed: cfg.dither_seed,
            rate: cfg.rate,
        }
    }
}

/// Construction options: quality source, thresholds, dither seed.
#[derive(Debug, Clone, Copy)]
pub struct ConstructOptions {
    pub method: QualityMethod,
    pub thresholds: Thresholds,
    pub dither_seed: u64,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            method: QualityMethod::Exact(SynthesisOptions::default()),
            thresholds: Thresholds::default(),
            dither_seed: 0,
        }
    }
}

/// A constructed code together with the per-index Z_d table it was built
/// from (the input to [`error_bound`]).
#[derive(Debug, Clone)]
pub struct Construction {
    pub config: CodeConfig,
    pub z_table: Vec<Vec<f64>>,
}

/// Builds the per-index assignment for blocklength 2^n over `ch`.
pub fn construct_code(
    ch: &Channel,
    n: usize,
    options: &ConstructOptions,
) -> Result<Construction, CodecError> {
    let big_n = 1usize << n;
    let group = ch.group().clone();
    let z_table: Vec<Vec<f64>> = match options.method {
        QualityMethod::Exact(opts) => polarize::spectrum(ch, n, &opts)?
            .into_iter()
            .map(|row| row.z)
            .collect(),
        QualityMethod::MonteCarlo { trials, seed } => {
            if trials < 100 {
                return Err(CodecError::TrialsTooFew(trials));
            }
            let out: Vec<Result<Vec<f64>, CodecError>> = par::map_indexed(big_n, |idx| {
                Ok(monte_carlo_quality(ch, n, idx, trials, seed.wrapping_add(idx as u64))?.z)
            });
            out.into_iter().collect::<Result<_, _>>()?
        }
    };
    let assignment: Vec<Subgroup> = z_table
        .iter()
        .map(|z| classify_index(&group, z, options.thresholds))
        .collect();
    let config = CodeConfig::new(group, n, assignment, options.dither_seed)?;
    Ok(Construction { config, z_table })
}

/// The union bound q²·Σ_i Σ_{d∉H(i)} Z_d(W_N^{(i)}) on block error
/// probability. May exceed 1.
pub fn error_bound(cfg: &CodeConfig, z_table: &[Vec<f64>]) -> Result<f64, CodecError> {
    let big_n = cfg.block_length();
    if z_table.len() != big_n {
        return Err(CodecError::MissingIndex(z_table.len()));
    }
    let q = cfg.group().order();
    let mut sum = 0.0;
    for (i, (h, z)) in cfg.assignment().iter().zip(z_table).enumerate() {
        if z.len() != q {
            return Err(CodecError::MissingIndex(i));
        }
        for (d, &zd) in z.iter().enumerate() {
            if !h.contains(d) {
                sum += zd;
            }
        }
    }
    Ok((q * q) as f64 * sum)
}

/// Successive-cancellation decoding: û_i = argmax over b_i + T_{H(i)} of
/// the synthesized-channel likelihood, ties toward the smallest element;
/// returns v̂ = û − b.
pub fn sc_decode(ch: &Channel, cfg: &CodeConfig, y: &[usize]) -> Result<Vec<usize>, CodecError> {
    if ch.group() != cfg.group() {
        return Err(CodecError::ConfigChannelMismatch(
            "channel group differs from config group".into(),
        ));
    }
    let big_n = cfg.block_length();
    if y.len() != big_n {
        return Err(CodecError::LengthMismatch {
            expected: big_n,
            got: y.len(),
        });
    }
    let m = ch.output_size();
    if let Some(&bad) = y.iter().find(|&&yj| yj >= m) {
        return Err(CodecError::ConfigChannelMismatch(format!(
            "received symbol {bad} outside the output alphabet of size {m}"
        )));
    }
    let group = cfg.group();
    let mut tree = ScTree::new(ch, y);
    let mut decoded = Vec::with_capacity(big_n);
    for (i, &bi) in cfg.dither().iter().enumerate() {
        let lik = tree.next_root_likelihood();
        let mut candidates: Vec<usize> = cfg
            .transversal(i)
            .reps()
            .iter()
            .map(|&t| group.add(bi, t))
            .collect();
        candidates.sort_unstable();
        let mut best = candidates[0];
        for &g in &candidates[1..] {
            if lik[g] > lik[best] {
                best = g;
            }
        }
        tree.push_root_decision(best);
        decoded.push(group.sub(best, bi));
    }
    Ok(decoded)
}
