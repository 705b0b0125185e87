//! Discrete memoryless channels over group input alphabets and the scalar
//! functionals defined on them: symmetric capacity I⁰, pairwise and
//! averaged Bhattacharyya affinities Z, the per-difference Z_d, the
//! subgroup aggregate Z^H, coset-conditional information I_H, the
//! variational distance D_d, and quotient channels W̄ over H/M.
//!
//! Probabilities are plain `f64` tables; rows are validated to sum to one
//! within [`ROW_SUM_TOL`] and then renormalized. 0·log 0 = 0 and
//! √(a·0) = 0 throughout. All logs are base 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{Group, GroupError, GroupSpec, Subgroup};

/// Accepted deviation of a row sum from 1 before a table is rejected.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ChannelError {
    #[error("table has wrong shape: expected {expected} rows, got {got}")]
    BadShape { expected: usize, got: usize },
    #[error("row {row} is not a probability distribution (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("Bhattacharyya distance requires two distinct symbols")]
    SameSymbol,
    #[error("subgroup does not belong to this channel's group")]
    NotASubgroup,
    #[error("M is not a maximal subgroup of H")]
    NotMaximal,
    #[error("element {0} is not a canonical transversal representative of H")]
    BadRepresentative(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Parameters (ε, λ) of the 4-ary two-level erasure channel; ε+λ ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams1 {
    pub eps: f64,
    pub lam: f64,
}

impl ChannelParams1 {
    pub fn new(eps: f64, lam: f64) -> Result<Self, ChannelError> {
        let ok =
            (0.0..=1.0).contains(&eps) && (0.0..=1.0).contains(&lam) && eps + lam <= 1.0 + 1e-12;
        if !ok {
            return Err(ChannelError::ParamOutOfRange(format!(
                "channel1 needs eps, lam in [0,1] with eps+lam <= 1, got ({eps}, {lam})"
            )));
        }
        Ok(ChannelParams1 { eps, lam })
    }
}

/// Parameters (γ, ε, λ) of the 6-ary three-level erasure channel; γ+ε+λ ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams2 {
    pub gam: f64,
    pub eps: f64,
    pub lam: f64,
}

impl ChannelParams2 {
    pub fn new(gam: f64, eps: f64, lam: f64) -> Result<Self, ChannelError> {
        let in01 = |v: f64| (0.0..=1.0).contains(&v);
        if !(in01(gam) && in01(eps) && in01(lam) && gam + eps + lam <= 1.0 + 1e-12) {
            return Err(ChannelError::ParamOutOfRange(format!(
                "channel2 needs gam, eps, lam in [0,1] with gam+eps+lam <= 1, got ({gam}, {eps}, {lam})"
            )));
        }
        Ok(ChannelParams2 { gam, eps, lam })
    }
}

/// The named standard channels.
#[derive(Debug, Clone)]
pub enum StandardChannel {
    Channel1(ChannelParams1),
    Channel2(ChannelParams2),
    Identity(Group),
    Useless(Group),
    QErasure {
        group: Group,
        e: f64,
    },
    Random {
        group: Group,
        outputs: usize,
        seed: u64,
    },
}

/// A q-input, M-output conditional probability table W(y|x) over a
/// [`Group`] input alphabet.
#[derive(Debug, Clone)]
pub struct Channel {
    group: Group,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl Channel {
    /// Validates and renormalizes a probability table.
    pub fn new(group: Group, rows: Vec<Vec<f64>>) -> Result<Channel, ChannelError> {
        Channel::with_labels(group, rows, None)
    }

    pub fn with_labels(
        group: Group,
        mut rows: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Channel, ChannelError> {
        let q = group.order();
        if rows.len() != q {
            return Err(ChannelError::BadShape {
                expected: q,
                got: rows.len(),
            });
        }
        let m = rows[0].len();
        if m == 0 {
            return Err(ChannelError::BadShape {
                expected: q,
                got: 0,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(ChannelError::BadShape {
                    expected: m,
                    got: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ChannelError::NotStochastic { row: i, sum });
            }
        }
        if let Some(ref l) = labels {
            if l.len() != m {
                return Err(ChannelError::BadShape {
                    expected: m,
                    got: l.len(),
                });
            }
        }
        for row in &mut rows {
            let sum: f64 = row.iter().sum();
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Channel {
            group,
            rows,
            labels,
        })
    }

    /// Builds a channel without re-validating; rows must already be
    /// normalized. Used by the transforms, which produce stochastic rows
    /// by construction.
    pub(crate) fn from_normalized(group: Group, rows: Vec<Vec<f64>>) -> Channel {
        Channel {
            group,
            rows,
            labels: None,
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    /// Input alphabet size q.
    pub fn input_size(&self) -> usize {
        self.group.order()
    }

    /// Output alphabet size M.
    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// W(y|x).
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    // ---- standard channels ------------------------------------------------

    /// Builds one of the named standard channels.
    pub fn standard(kind: StandardChannel) -> Result<Channel, ChannelError> {
        match kind {
            StandardChannel::Channel1(p) => Ok(Channel::channel1(p)),
            StandardChannel::Channel2(p) => Ok(Channel::channel2(p)),
            StandardChannel::Identity(group) => Ok(Channel::identity(group)),
            StandardChannel::Useless(group) => Ok(Channel::useless(group)),
            StandardChannel::QErasure { group, e } => Channel::q_erasure(group, e),
            StandardChannel::Random {
                group,
                outputs,
                seed,
            } => Channel::random(group, outputs, seed),
        }
    }

    /// The 4-ary channel with two erasure levels: identity mass 1−ε−λ,
    /// erasures E1/E2 of mass ε tied to the cosets of {0,2}, and a full
    /// erasure E3 of mass λ.
    pub fn channel1(params: ChannelParams1) -> Channel {
        let ChannelParams1 { eps, lam } = params;
        let group = Group::new(&[(2, 2)]).expect("Z4");
        let mut rows = vec![vec![0.0; 7]; 4];
        for x in 0..4 {
            rows[x][x] = 1.0 - eps - lam;
            rows[x][4 + x % 2] = eps;
            rows[x][6] = lam;
        }
        let labels = ["0", "1", "2", "3", "E1", "E2", "E3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Channel {
            group,
            rows,
            labels: Some(labels),
        }
    }

    /// The 6-ary channel with three erasure levels over Z2⊕Z3: erasures
    /// E1/E2/E3 of mass γ tied to the cosets of the order-2 subgroup,
    /// E4/E5 of mass ε tied to the cosets of the order-3 subgroup, and a
    /// full erasure E6 of mass λ.
    ///
    /// In the mixed-radix indexing the order-2 subgroup is {0,3} with
    /// cosets {0,3}, {1,4}, {2,5}, and the order-3 subgroup is {0,1,2}
    /// with cosets {0,1,2}, {3,4,5} (the images of {0,2,4} and {1,3,5}
    /// under the Chinese-remainder relabeling of Z6).
    pub fn channel2(params: ChannelParams2) -> Channel {
        let ChannelParams2 { gam, eps, lam } = params;
        let group = Group::new(&[(2, 1), (3, 1)]).expect("Z2+Z3");
        let mut rows = vec![vec![0.0; 12]; 6];
        for x in 0..6 {
            rows[x][x] = 1.0 - gam - eps - lam;
            rows[x][6 + x % 3] = gam; // coset of {0,3}: indices sharing the Z3 residue
            rows[x][9 + x / 3] = eps; // coset of {0,1,2}: indices sharing the Z2 residue
            rows[x][11] = lam;
        }
        let labels = [
            "0", "1", "2", "3", "4", "5", "E1", "E2", "E3", "E4", "E5", "E6",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        Channel {
            group,
            rows,
            labels: Some(labels),
        }
    }

    /// Noiseless channel: output equals input.
    pub fn identity(group: Group) -> Channel {
        let q = group.order();
        let rows = (0..q)
            .map(|x| {
                let mut row = vec![0.0; q];
                row[x] = 1.0;
                row
            })
            .collect();
        Channel {
            group,
            rows,
            labels: None,
        }
    }

    /// Channel with a single output: carries nothing.
    pub fn useless(group: Group) -> Channel {
        let q = group.order();
        Channel {
            group,
            rows: vec![vec![1.0]; q],
            labels: None,
        }
    }

    /// q-ary erasure channel: identity with probability 1−e, erasure
    /// symbol with probability e.
    pub fn q_erasure(group: Group, e: f64) -> Result<Channel, ChannelError> {
        if !(0.0..=1.0).contains(&e) {
            return Err(ChannelError::ParamOutOfRange(format!(
                "erasure probability must be in [0,1], got {e}"
            )));
        }
        let q = group.order();
        let rows = (0..q)
            .map(|x| {
                let mut row = vec![0.0; q + 1];
                row[x] = 1.0 - e;
                row[q] = e;
                row
            })
            .collect();
        Ok(Channel {
            group,
            rows,
            labels: None,
        })
    }

    /// Random channel with rows drawn uniformly from the probability
    /// simplex (normalized unit exponentials), reproducible by seed.
    pub fn random(group: Group, outputs: usize, seed: u64) -> Result<Channel, ChannelError> {
        if outputs == 0 {
            return Err(ChannelError::ParamOutOfRange(
                "output alphabet must be nonempty".into(),
            ));
        }
        let q = group.order();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..q)
            .map(|_| {
                let mut row: Vec<f64> = (0..outputs)
                    .map(|_| -f64::ln(1.0 - rng.gen::<f64>()))
                    .collect();
                let sum: f64 = row.iter().sum();
                for p in &mut row {
                    *p /= sum;
                }
                row
            })
            .collect();
        Ok(Channel {
            group,
            rows,
            labels: None,
        })
    }

    // ---- functionals -------------------------------------------------------

    /// Symmetric capacity I⁰(W) = I(X;Y) in bits, X uniform.
    pub fn symmetric_capacity(&self) -> f64 {
        let q = self.input_size() as f64;
        let m = self.output_size();
        let mut py = vec![0.0; m];
        for row in &self.rows {
            for (y, &p) in row.iter().enumerate() {
                py[y] += p / q;
            }
        }
        let mut info = 0.0;
        for row in &self.rows {
            for (y, &p) in row.iter().enumerate() {
                if p > 0.0 && py[y] > 0.0 {
                    info += p / q * (p / py[y]).log2();
                }
            }
        }
        info.max(0.0)
    }

    /// Bhattacharyya affinity Σ_y √(W(y|x)·W(y|x̃)) of two distinct inputs.
    pub fn pair_bhattacharyya(&self, x: usize, xt: usize) -> Result<f64, ChannelError> {
        if x == xt {
            return Err(ChannelError::SameSymbol);
        }
        Ok(self.pair_affinity(x, xt))
    }

    #[inline]
    fn pair_affinity(&self, x: usize, xt: usize) -> f64 {
        self.rows[x]
            .iter()
            .zip(&self.rows[xt])
            .map(|(&a, &b)| {
                if a > 0.0 && b > 0.0 {
                    (a * b).sqrt()
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Average Bhattacharyya distance Z(W) over all ordered distinct pairs.
    pub fn avg_bhattacharyya(&self) -> f64 {
        let q = self.input_size();
        let mut sum = 0.0;
        for x in 0..q {
            for xt in 0..q {
                if x != xt {
                    sum += self.pair_affinity(x, xt);
                }
            }
        }
        sum / (q * (q - 1)) as f64
    }

    /// Z_d(W) = (1/q) Σ_x Z(W_{x,x+d}); exactly 1 for d = 0.
    pub fn z_d(&self, d: usize) -> f64 {
        if d == 0 {
            return 1.0;
        }
        let q = self.input_size();
        let mut sum = 0.0;
        for x in 0..q {
            sum += self.pair_affinity(x, self.group.add(x, d));
        }
        sum / q as f64
    }

    /// All Z_d values indexed by d (Z_0 = 1).
    pub fn z_all(&self) -> Vec<f64> {
        (0..self.input_size()).map(|d| self.z_d(d)).collect()
    }

    /// Z^H(W) = Σ_{d∉H} Z_d(W); zero when H = G.
    pub fn z_aggregate(&self, h: &Subgroup) -> Result<f64, ChannelError> {
        if h.parent() != &self.group {
            return Err(ChannelError::NotASubgroup);
        }
        Ok((0..self.input_size())
            .filter(|&d| !h.contains(d))
            .map(|d| self.z_d(d))
            .sum())
    }

    /// max_{d∉H} Z_d(W); zero when H = G.
    pub fn z_max_outside(&self, h: &Subgroup) -> Result<f64, ChannelError> {
        if h.parent() != &self.group {
            return Err(ChannelError::NotASubgroup);
        }
        Ok((0..self.input_size())
            .filter(|&d| !h.contains(d))
            .map(|d| self.z_d(d))
            .fold(0.0, f64::max))
    }

    /// I_H(W) = I(X;Y|X̂) in bits, where X̂ is the coset of H containing X.
    /// Equals I⁰ for H = G and 0 for H = {0}.
    pub fn coset_conditional_info(&self, h: &Subgroup) -> Result<f64, ChannelError> {
        if h.parent() != &self.group {
            return Err(ChannelError::NotASubgroup);
        }
        let t = self.group.transversal_of(h)?;
        let m = self.output_size();
        let hsize = h.order() as f64;
        let mut info = 0.0;
        for &rep in t.reps() {
            // conditional output law inside this coset
            let mut py = vec![0.0; m];
            for &hm in h.members() {
                let x = self.group.add(rep, hm);
                for (y, &p) in self.rows[x].iter().enumerate() {
                    py[y] += p / hsize;
                }
            }
            let mut coset_info = 0.0;
            for &hm in h.members() {
                let x = self.group.add(rep, hm);
                for (y, &p) in self.rows[x].iter().enumerate() {
                    if p > 0.0 && py[y] > 0.0 {
                        coset_info += p / hsize * (p / py[y]).log2();
                    }
                }
            }
            info += coset_info / t.reps().len() as f64;
        }
        Ok(info.max(0.0))
    }

    /// Variational distance D_d(W) = (1/2q) Σ_x Σ_y |W(y|x) − W(y|x+d)|.
    pub fn variational_d(&self, d: usize) -> f64 {
        let q = self.input_size();
        let mut sum = 0.0;
        for x in 0..q {
            let xt = self.group.add(x, d);
            sum += self.rows[x]
                .iter()
                .zip(&self.rows[xt])
                .map(|(&a, &b)| (a - b).abs())
                .sum::<f64>();
        }
        sum / (2.0 * q as f64)
    }

    /// The quotient channel W̄ over the cosets of M inside t_H + H:
    /// W̄(y | j) = (1/|M|) Σ_{m∈M} W(y | t_H + j·γ + m), where γ is the
    /// smallest element of H∖M and input j enumerates the q̄ = |H|/|M|
    /// cosets as j·γ + M.
    pub fn quotient_channel(
        &self,
        h: &Subgroup,
        m: &Subgroup,
        t_h: usize,
    ) -> Result<Channel, ChannelError> {
        let map = self.quotient_map(h, m)?;
        let reps = self.group.transversal_of(h)?;
        if !reps.reps().contains(&t_h) {
            return Err(ChannelError::BadRepresentative(t_h));
        }
        let qbar = h.order() / m.order();
        let msize = m.order() as f64;
        let mut rows = vec![vec![0.0; self.output_size()]; qbar];
        for (j, row) in rows.iter_mut().enumerate() {
            let base = self.group.add(t_h, map.coset_rep(j));
            for &mm in m.members() {
                let x = self.group.add(base, mm);
                for (y, &p) in self.rows[x].iter().enumerate() {
                    row[y] += p / msize;
                }
            }
        }
        let group = Group::new(&[(qbar as u64, 1)])?;
        Ok(Channel {
            group,
            rows,
            labels: None,
        })
    }

    /// Coset indexing of H/M used by [`Channel::quotient_channel`]:
    /// maps an element of H to the index j of its coset j·γ + M.
    pub fn quotient_map(&self, h: &Subgroup, m: &Subgroup) -> Result<QuotientMap, ChannelError> {
        if h.parent() != &self.group || m.parent() != &self.group {
            return Err(ChannelError::NotASubgroup);
        }
        if !m.subset_of(h) || m.order() >= h.order() || !h.order().is_multiple_of(m.order()) {
            return Err(ChannelError::NotMaximal);
        }
        let qbar = h.order() / m.order();
        if !is_prime(qbar as u64) {
            return Err(ChannelError::NotMaximal);
        }
        let gamma = h
            .members()
            .iter()
            .copied()
            .find(|&x| !m.contains(x))
            .ok_or(ChannelError::NotMaximal)?;
        let q = self.group.order();
        let mut index_of = vec![usize::MAX; q];
        let mut rep = 0usize;
        for j in 0..qbar {
            for &mm in m.members() {
                index_of[self.group.add(rep, mm)] = j;
            }
            rep = self.group.add(rep, gamma);
        }
        Ok(QuotientMap {
            generator: gamma,
            index_of,
            reps: {
                let mut reps = Vec::with_capacity(qbar);
                let mut r = 0usize;
                for _ in 0..qbar {
                    reps.push(r);
                    r = self.group.add(r, gamma);
                }
                reps
            },
        })
    }
}

/// Indexing of the cosets of M in H by powers of a generator γ.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    generator: usize,
    index_of: Vec<usize>,
    reps: Vec<usize>,
}

impl QuotientMap {
    pub fn generator(&self) -> usize {
        self.generator
    }

    /// Index j of the coset j·γ + M containing `x` (an element of H).
    pub fn coset_index(&self, x: usize) -> Option<usize> {
        match self.index_of.get(x) {
            Some(&j) if j != usize::MAX => Some(j),
            _ => None,
        }
    }

    /// The representative j·γ of coset j.
    pub fn coset_rep(&self, j: usize) -> usize {
        self.reps[j]
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// JSON form of a channel:
/// `{ "group": [[p,r],...], "outputs": M, "labels": [...], "rows": [[...],...] }`.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ChannelJson {
    pub group: GroupSpec,
    pub outputs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = ChannelError;

    fn try_from(json: ChannelJson) -> Result<Channel, ChannelError> {
        let group = json.group.build()?;
        if json.rows.iter().any(|r| r.len() != json.outputs) {
            return Err(ChannelError::BadShape {
                expected: json.outputs,
                got: json.rows.first().map_or(0, |r| r.len()),
            });
        }
        Channel::with_labels(group, json.rows, json.labels)
    }
}

impl From<&Channel> for ChannelJson {
    fn from(ch: &Channel) -> ChannelJson {
        ChannelJson {
            group: GroupSpec::from(ch.group()),
            outputs: ch.output_size(),
            labels: ch.labels.clone(),
            rows: ch.rows.clone(),
        }
    }
}
