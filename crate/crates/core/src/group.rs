//! Finite Abelian groups G = ⊕ Z_{p^r}, their subgroup lattices and coset
//! transversals.
//!
//! Elements are indexed `0..q` in mixed-radix encoding over the factor
//! moduli, first factor most significant. All arithmetic is table driven;
//! groups are capped at order [`MAX_GROUP_ORDER`] so a subgroup fits in a
//! `u64` bitmask.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported group order.
pub const MAX_GROUP_ORDER: usize = 64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group spec is empty")]
    EmptySpec,
    #[error("factor {0} is not prime")]
    NonPrimeFactor(u64),
    #[error("factor exponent must be >= 1")]
    ZeroExponent,
    #[error("group order {0} exceeds cap {MAX_GROUP_ORDER}")]
    GroupTooLarge(usize),
    #[error("element index {0} out of range for group of order {1}")]
    IndexOutOfRange(usize, usize),
    #[error("set is not a subgroup of this group")]
    NotASubgroup,
    #[error("operation undefined for the trivial subgroup")]
    TrivialSubgroup,
    #[error("group is not a single-factor Z_{{p^r}} group")]
    NotPrimePowerGroup,
}

#[derive(Debug)]
struct GroupRepr {
    /// (prime, exponent) per direct-sum factor.
    factors: Vec<(u64, u32)>,
    /// p^r per factor.
    moduli: Vec<usize>,
    order: usize,
    add: Vec<u8>,
    neg: Vec<u8>,
}

/// A finite Abelian group ⊕ Z_{p_l^{r_l}}, cheap to clone and share.
#[derive(Clone)]
pub struct Group {
    repr: Arc<GroupRepr>,
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

impl Group {
    /// Builds the group from (prime, exponent) factor pairs.
    ///
    /// Element indexing is mixed radix with the first factor most
    /// significant, so `[(2,1),(3,1)]` maps index 5 to the tuple (1, 2).
    pub fn new(spec: &[(u64, u32)]) -> Result<Group, GroupError> {
        if spec.is_empty() {
            return Err(GroupError::EmptySpec);
        }
        let mut moduli = Vec::with_capacity(spec.len());
        let mut order: usize = 1;
        for &(p, r) in spec {
            if !is_prime(p) {
                return Err(GroupError::NonPrimeFactor(p));
            }
            if r == 0 {
                return Err(GroupError::ZeroExponent);
            }
            let m = (p as usize)
                .checked_pow(r)
                .ok_or(GroupError::GroupTooLarge(usize::MAX))?;
            order = order
                .checked_mul(m)
                .ok_or(GroupError::GroupTooLarge(usize::MAX))?;
            if order > MAX_GROUP_ORDER {
                return Err(GroupError::GroupTooLarge(order));
            }
            moduli.push(m);
        }
        let mut add = vec![0u8; order * order];
        let mut neg = vec![0u8; order];
        for a in 0..order {
            let ta = decompose(a, &moduli);
            let tn: Vec<usize> = ta.iter().zip(&moduli).map(|(&x, &m)| (m - x) % m).collect();
            neg[a] = compose(&tn, &moduli) as u8;
            for b in 0..order {
                let tb = decompose(b, &moduli);
                let ts: Vec<usize> = ta
                    .iter()
                    .zip(&tb)
                    .zip(&moduli)
                    .map(|((&x, &y), &m)| (x + y) % m)
                    .collect();
                add[a * order + b] = compose(&ts, &moduli) as u8;
            }
        }
        Ok(Group {
            repr: Arc::new(GroupRepr {
                factors: spec.to_vec(),
                moduli,
                order,
                add,
                neg,
            }),
        })
    }

    /// Group order q.
    pub fn order(&self) -> usize {
        self.repr.order
    }

    /// The (prime, exponent) factor pairs this group was built from.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.repr.factors
    }

    /// Group addition. Panics if an index is out of range.
    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let q = self.repr.order;
        assert!(a < q && b < q, "element index out of range");
        self.repr.add[a * q + b] as usize
    }

    /// Additive inverse. Panics if the index is out of range.
    #[inline]
    pub fn negate(&self, a: usize) -> usize {
        assert!(a < self.repr.order, "element index out of range");
        self.repr.neg[a] as usize
    }

    /// a - b in the group.
    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.negate(b))
    }

    /// Mixed-radix residue tuple of an element.
    pub fn decompose(&self, a: usize) -> Vec<usize> {
        decompose(a, &self.repr.moduli)
    }

    /// Smallest subgroup containing `gens`; ⟨∅⟩ = {0}.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Result<Subgroup, GroupError> {
        let q = self.order();
        for &g in gens {
            if g >= q {
                return Err(GroupError::IndexOutOfRange(g, q));
            }
        }
        let mut mask: u64 = 1; // identity
        let mut frontier = vec![0usize];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.add(x, g);
                if mask >> y & 1 == 0 {
                    mask |= 1 << y;
                    frontier.push(y);
                }
            }
        }
        Ok(Subgroup::from_mask(self.clone(), mask))
    }

    /// The full subgroup lattice, sorted by (order, member set).
    ///
    /// Enumerates closures of generator sets incrementally: every subgroup
    /// found so far is extended by each outside element until no new
    /// subgroup appears.
    pub fn all_subgroups(&self) -> Result<Vec<Subgroup>, GroupError> {
        let q = self.order();
        if q > MAX_GROUP_ORDER {
            return Err(GroupError::GroupTooLarge(q));
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert(1u64);
        let mut masks: Vec<u64> = vec![1];
        let mut i = 0;
        while i < masks.len() {
            let base = masks[i];
            for g in 1..q {
                if base >> g & 1 == 1 {
                    continue;
                }
                let ext = self.close_mask(base | (1 << g));
                if seen.insert(ext) {
                    masks.push(ext);
                }
            }
            i += 1;
        }
        let mut subgroups: Vec<Subgroup> = masks
            .into_iter()
            .map(|m| Subgroup::from_mask(self.clone(), m))
            .collect();
        subgroups.sort_by(|a, b| (a.order(), &a.members).cmp(&(b.order(), &b.members)));
        Ok(subgroups)
    }

    /// All maximal subgroups of `h`: M < h with nothing strictly between.
    pub fn maximal_subgroups(&self, h: &Subgroup) -> Result<Vec<Subgroup>, GroupError> {
        if h.order() < 2 {
            return Err(GroupError::TrivialSubgroup);
        }
        let lattice = self.all_subgroups()?;
        let below: Vec<&Subgroup> = lattice
            .iter()
            .filter(|s| s.mask != h.mask && s.mask & h.mask == s.mask)
            .collect();
        let maximal: Vec<Subgroup> = below
            .iter()
            .filter(|m| {
                !below
                    .iter()
                    .any(|k| k.mask != m.mask && k.mask & m.mask == m.mask && k.order() > m.order())
            })
            .map(|m| (*m).clone())
            .collect();
        Ok(maximal)
    }

    /// Canonical transversal of `h`: the minimal element of each coset, in
    /// increasing order. For Z_{p^r} and H_t = p^t·G this is {0,…,p^t−1}.
    pub fn transversal_of(&self, h: &Subgroup) -> Result<Transversal, GroupError> {
        if !self.same_group(&h.parent) {
            return Err(GroupError::NotASubgroup);
        }
        let q = self.order();
        let mut rep_of = vec![usize::MAX; q];
        let mut reps = Vec::with_capacity(q / h.order());
        for x in 0..q {
            if rep_of[x] != usize::MAX {
                continue;
            }
            reps.push(x);
            for &m in &h.members {
                rep_of[self.add(x, m)] = x;
            }
        }
        Ok(Transversal {
            subgroup: h.clone(),
            reps,
            rep_of,
        })
    }

    /// The chain H_t = p^t·G with K_t = H_t \ H_{t+1}, for single-factor
    /// Z_{p^r} groups only. K_r = {0}.
    pub fn prime_chain(&self) -> Result<Vec<(Subgroup, Vec<usize>)>, GroupError> {
        if self.repr.factors.len() != 1 {
            return Err(GroupError::NotPrimePowerGroup);
        }
        let (p, r) = self.repr.factors[0];
        let q = self.order();
        let mut chain = Vec::with_capacity(r as usize + 1);
        let mut masks = Vec::with_capacity(r as usize + 1);
        for t in 0..=r {
            let step = (p as usize).pow(t);
            let mut mask = 0u64;
            let mut x = 0usize;
            loop {
                mask |= 1 << x;
                x += step;
                if x >= q {
                    break;
                }
            }
            masks.push(mask);
        }
        for t in 0..=r as usize {
            let k_mask = if t + 1 < masks.len() {
                masks[t] & !masks[t + 1]
            } else {
                1 // K_r = {0}
            };
            let k: Vec<usize> = (0..q).filter(|&x| k_mask >> x & 1 == 1).collect();
            chain.push((Subgroup::from_mask(self.clone(), masks[t]), k));
        }
        Ok(chain)
    }

    /// The improper subgroup G itself.
    pub fn full_subgroup(&self) -> Subgroup {
        let mask = if self.order() == 64 {
            u64::MAX
        } else {
            (1u64 << self.order()) - 1
        };
        Subgroup::from_mask(self.clone(), mask)
    }

    /// The trivial subgroup {0}.
    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup::from_mask(self.clone(), 1)
    }

    fn close_mask(&self, seed: u64) -> u64 {
        let q = self.order();
        let mut mask = seed;
        loop {
            let mut grown = mask;
            for a in 0..q {
                if mask >> a & 1 == 0 {
                    continue;
                }
                for b in a..q {
                    if mask >> b & 1 == 1 {
                        grown |= 1 << self.add(a, b);
                    }
                }
            }
            if grown == mask {
                return mask;
            }
            mask = grown;
        }
    }

    fn same_group(&self, other: &Group) -> bool {
        Arc::ptr_eq(&self.repr, &other.repr) || self.repr.factors == other.repr.factors
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.same_group(other)
    }
}
impl Eq for Group {}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .repr
            .factors
            .iter()
            .map(|&(p, r)| {
                if r == 1 {
                    format!("Z{p}")
                } else {
                    format!("Z{}", (p as usize).pow(r))
                }
            })
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Serializable group spec: a JSON array of [p, r] pairs.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(transparent)]
pub struct GroupSpec(pub Vec<(u64, u32)>);

impl GroupSpec {
    pub fn build(&self) -> Result<Group, GroupError> {
        Group::new(&self.0)
    }
}

impl From<&Group> for GroupSpec {
    fn from(g: &Group) -> Self {
        GroupSpec(g.factors().to_vec())
    }
}

/// An add-closed subset of a [`Group`], stored as a sorted member list plus
/// a membership bitmask.
#[derive(Clone)]
pub struct Subgroup {
    parent: Group,
    members: Vec<usize>,
    mask: u64,
}

impl Subgroup {
    fn from_mask(parent: Group, mask: u64) -> Subgroup {
        let members = (0..parent.order())
            .filter(|&x| mask >> x & 1 == 1)
            .collect();
        Subgroup {
            parent,
            members,
            mask,
        }
    }

    /// Validates that `members` is closed under addition and contains 0.
    pub fn new(parent: &Group, members: &[usize]) -> Result<Subgroup, GroupError> {
        let q = parent.order();
        let mut mask = 0u64;
        for &m in members {
            if m >= q {
                return Err(GroupError::IndexOutOfRange(m, q));
            }
            mask |= 1 << m;
        }
        if mask & 1 == 0 || parent.close_mask(mask) != mask {
            return Err(GroupError::NotASubgroup);
        }
        Ok(Subgroup::from_mask(parent.clone(), mask))
    }

    pub fn parent(&self) -> &Group {
        &self.parent
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        x < self.parent.order() && self.mask >> x & 1 == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.parent.order()
    }

    /// True when `self` ⊆ `other`.
    pub fn subset_of(&self, other: &Subgroup) -> bool {
        self.mask & other.mask == self.mask
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.parent == other.parent && self.mask == other.mask
    }
}
impl Eq for Subgroup {}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.members
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// Canonical coset representatives of a subgroup: the minimal element of
/// each coset, with a per-element lookup of its representative.
#[derive(Clone, Debug)]
pub struct Transversal {
    subgroup: Subgroup,
    reps: Vec<usize>,
    rep_of: Vec<usize>,
}

impl Transversal {
    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    /// The canonical representative of the coset containing `x`.
    #[inline]
    pub fn rep_of(&self, x: usize) -> usize {
        self.rep_of[x]
    }

    /// Splits `x` as (rep, h) with x = rep + h and h in the subgroup.
    pub fn split(&self, x: usize) -> (usize, usize) {
        let rep = self.rep_of[x];
        (rep, self.subgroup.parent.sub(x, rep))
    }
}

fn decompose(mut a: usize, moduli: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; moduli.len()];
    for (i, &m) in moduli.iter().enumerate().rev() {
        out[i] = a % m;
        a /= m;
    }
    out
}

fn compose(tuple: &[usize], moduli: &[usize]) -> usize {
    let mut a = 0usize;
    for (&t, &m) in tuple.iter().zip(moduli) {
        a = a * m + t;
    }
    a
}
