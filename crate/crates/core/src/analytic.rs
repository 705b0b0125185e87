//! Closed-form parameter recursions for the two reference erasure
//! channels, their capacity formulas, fixed points of the one-step maps,
//! and the plateau-probability formulas for the 4-ary example.
//!
//! These recursions evolve (ε, λ) or (γ, ε, λ) instead of probability
//! tables, so profiles to depth 24 are cheap. They are the independent
//! oracle against which exact synthesis is validated.

use crate::channel::{ChannelParams1, ChannelParams2};
use crate::par;
use crate::polarize::{PathBit, PolarPath};

/// One-step maps whose fixed points the report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapName {
    Channel1Plus,
    Channel1Minus,
    Channel2Plus,
    Channel2Minus,
}

impl MapName {
    pub const ALL: [MapName; 4] = [
        MapName::Channel1Plus,
        MapName::Channel1Minus,
        MapName::Channel2Plus,
        MapName::Channel2Minus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MapName::Channel1Plus => "channel1_plus",
            MapName::Channel1Minus => "channel1_minus",
            MapName::Channel2Plus => "channel2_plus",
            MapName::Channel2Minus => "channel2_minus",
        }
    }
}

/// One transform step of the (ε, λ) recursion.
///
/// Plus: (ε² + 2ελ, λ²). Minus: (2ε − (ε² + 2ελ), 2λ − λ²).
pub fn channel1_step(p: ChannelParams1, bit: PathBit) -> ChannelParams1 {
    let ChannelParams1 { eps, lam } = p;
    let (eps, lam) = match bit {
        PathBit::Plus => (eps * eps + 2.0 * eps * lam, lam * lam),
        PathBit::Minus => (
            2.0 * eps - (eps * eps + 2.0 * eps * lam),
            2.0 * lam - lam * lam,
        ),
    };
    ChannelParams1 { eps, lam }
}

/// I(W) = 2 − ε − 2λ bits.
pub fn channel1_info(p: ChannelParams1) -> f64 {
    2.0 - p.eps - 2.0 * p.lam
}

/// Z_d values of the 4-ary channel shape, indexed by d: (1, λ, ε+λ, λ).
pub fn channel1_zd(p: ChannelParams1) -> [f64; 4] {
    [1.0, p.lam, p.eps + p.lam, p.lam]
}

/// One transform step of the (γ, ε, λ) recursion.
///
/// The minus step carries a 2γε cross term: a two-level erasure pair
/// mixing the two subgroup classes pins u₁ down to an intersection of
/// two complementary cosets of nothing — the pair is a full erasure — so
/// mass 2γε moves from both partial-erasure classes into λ. The term is
/// information-neutral (its info coefficients cancel), vanishes when
/// γ = 0 or ε = 0, and is required for the transformed channel to stay
/// a channel of this family; without it the parameter sum can leave the
/// simplex. Verified against exact synthesis in the transform-closure
/// tests.
pub fn channel2_step(p: ChannelParams2, bit: PathBit) -> ChannelParams2 {
    let ChannelParams2 { gam, eps, lam } = p;
    let (gam, eps, lam) = match bit {
        PathBit::Plus => (
            gam * gam + 2.0 * gam * lam,
            eps * eps + 2.0 * eps * lam,
            lam * lam,
        ),
        PathBit::Minus => (
            2.0 * gam - (gam * gam + 2.0 * gam * lam) - 2.0 * gam * eps,
            2.0 * eps - (eps * eps + 2.0 * eps * lam) - 2.0 * gam * eps,
            2.0 * lam - lam * lam + 2.0 * gam * eps,
        ),
    };
    ChannelParams2 { gam, eps, lam }
}

/// I(W) = log₂6 − γ·log₂2 − ε·log₂3 − λ·log₂6 bits.
pub fn channel2_info(p: ChannelParams2) -> f64 {
    let l6 = 6f64.log2();
    l6 - p.gam - p.eps * 3f64.log2() - p.lam * l6
}

/// Z_d values of the 6-ary channel shape over Z2⊕Z3 indexing:
/// d = 3 lies in the order-2 subgroup, d ∈ {1,2} in the order-3 one,
/// d ∈ {4,5} generates the whole group.
pub fn channel2_zd(p: ChannelParams2) -> [f64; 6] {
    let el = p.eps + p.lam;
    [1.0, el, el, p.gam + p.lam, p.lam, p.lam]
}

/// Parameters of every length-`n` path in binary-counter order
/// (minus = 0, plus = 1; b₁ is the most significant bit).
pub fn channel1_params_at(p: ChannelParams1, n: usize) -> Vec<ChannelParams1> {
    let mut level = vec![p];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for q in level {
            next.push(channel1_step(q, PathBit::Minus));
            next.push(channel1_step(q, PathBit::Plus));
        }
        level = next;
    }
    level
}

pub fn channel2_params_at(p: ChannelParams2, n: usize) -> Vec<ChannelParams2> {
    let mut level = vec![p];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for q in level {
            next.push(channel2_step(q, PathBit::Minus));
            next.push(channel2_step(q, PathBit::Plus));
        }
        level = next;
    }
    level
}

/// (path, info) for all 2ⁿ paths. Materializes paths; prefer
/// [`channel1_params_at`] for deep profiles.
pub fn channel1_profile(p: ChannelParams1, n: usize) -> Vec<(PolarPath, f64)> {
    channel1_params_at(p, n)
        .into_iter()
        .enumerate()
        .map(|(k, q)| (PolarPath::from_counter(k, n), channel1_info(q)))
        .collect()
}

pub fn channel2_profile(p: ChannelParams2, n: usize) -> Vec<(PolarPath, f64)> {
    channel2_params_at(p, n)
        .into_iter()
        .enumerate()
        .map(|(k, q)| (PolarPath::from_counter(k, n), channel2_info(q)))
        .collect()
}

/// Plateau probabilities (p₀, p₁, p₂) of the 4-ary example from the two
/// conserved processes: p₂ = 1−ε−λ = C/2, p₁ = I₄⁰ − (I₂+I₂′)⁰ and
/// p₀ = 1 − (I₄⁰ − (I₂+I₂′)⁰/2).
pub fn example1_fractions(p: ChannelParams1) -> (f64, f64, f64) {
    let i4 = channel1_info(p);
    let i22 = 2.0 - 2.0 * p.eps - 2.0 * p.lam; // I_2 + I_2' = 2(1 - eps - lam)
    let p2 = 1.0 - p.eps - p.lam;
    let p1 = i4 - i22;
    let p0 = 1.0 - (i4 - i22 / 2.0);
    (p0, p1, p2)
}

/// A fixed-point search report for one map.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub map: MapName,
    /// Every fixed point located by grid-seeded iteration, as parameter
    /// tuples; each has residual ≤ [`FIXED_POINT_RESIDUAL`].
    pub fixed_points: Vec<Vec<f64>>,
    /// The subset satisfying the parameter-domain constraints.
    pub admissible: Vec<Vec<f64>>,
    /// ‖map(p) − p‖∞ per fixed point.
    pub residuals: Vec<f64>,
}

/// Residual threshold below which an iterate counts as fixed.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-9;
/// Cluster radius for deduplicating converged iterates.
pub const FIXED_POINT_CLUSTER: f64 = 1e-6;

const GRID: usize = 101;
const MAX_ITERS: usize = 2000;

fn apply(map: MapName, p: &[f64]) -> Vec<f64> {
    match map {
        MapName::Channel1Plus | MapName::Channel1Minus => {
            let bit = if map == MapName::Channel1Plus {
                PathBit::Plus
            } else {
                PathBit::Minus
            };
            let q = channel1_step(
                ChannelParams1 {
                    eps: p[0],
                    lam: p[1],
                },
                bit,
            );
            vec![q.eps, q.lam]
        }
        MapName::Channel2Plus | MapName::Channel2Minus => {
            let bit = if map == MapName::Channel2Plus {
                PathBit::Plus
            } else {
                PathBit::Minus
            };
            let q = channel2_step(
                ChannelParams2 {
                    gam: p[0],
                    eps: p[1],
                    lam: p[2],
                },
                bit,
            );
            vec![q.gam, q.eps, q.lam]
        }
    }
}

fn in_domain(p: &[f64]) -> bool {
    let tol = 1e-9;
    p.iter().all(|&v| (-tol..=1.0 + tol).contains(&v)) && p.iter().sum::<f64>() <= 1.0 + tol
}

fn residual(map: MapName, p: &[f64]) -> f64 {
    apply(map, p)
        .iter()
        .zip(p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Locates the fixed points of one map by iterating from a parameter
/// grid (101 points per axis, restricted to the admissible simplex) and
/// clustering the converged iterates.
pub fn fixed_points(map: MapName) -> FixedPointReport {
    let dims = match map {
        MapName::Channel1Plus | MapName::Channel1Minus => 2,
        _ => 3,
    };
    let seeds: Vec<Vec<f64>> = if dims == 2 {
        let mut s = Vec::new();
        for i in 0..GRID {
            for j in 0..(GRID - i) {
                s.push(vec![i as f64 / 100.0, j as f64 / 100.0]);
            }
        }
        s
    } else {
        let mut s = Vec::new();
        for i in 0..GRID {
            for j in 0..(GRID - i) {
                for k in 0..(GRID - i - j) {
                    s.push(vec![i as f64 / 100.0, j as f64 / 100.0, k as f64 / 100.0]);
                }
            }
        }
        s
    };

    let converged: Vec<Option<Vec<f64>>> = par::map_indexed(seeds.len(), |idx| {
        let mut p = seeds[idx].clone();
        for _ in 0..MAX_ITERS {
            let next = apply(map, &p);
            // float drift along the unstable boundary manifold can escape
            // the simplex and blow up; such seeds find no fixed point
            if next.iter().any(|v| !v.is_finite() || v.abs() > 4.0) {
                return None;
            }
            let delta = next
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            p = next;
            if delta < 1e-15 {
                break;
            }
        }
        if residual(map, &p) <= FIXED_POINT_RESIDUAL {
            Some(p)
        } else {
            None
        }
    });

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for p in converged.into_iter().flatten() {
        let close = clusters.iter_mut().find(|c| {
            c.iter()
                .zip(&p)
                .all(|(a, b)| (a - b).abs() <= FIXED_POINT_CLUSTER)
        });
        match close {
            Some(c) => {
                if residual(map, &p) < residual(map, c) {
                    *c = p;
                }
            }
            None => clusters.push(p),
        }
    }
    clusters.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let residuals: Vec<f64> = clusters.iter().map(|c| residual(map, c)).collect();
    let admissible: Vec<Vec<f64>> = clusters.iter().filter(|c| in_domain(c)).cloned().collect();
    FixedPointReport {
        map,
        fixed_points: clusters,
        admissible,
        residuals,
    }
}
