//! Eventual covering, return-time sets and their finite intersections.
//!
//! All iteration here is stepwise interval-image iteration: `f^n(K)` is
//! computed as n exact image steps, never by composing the map, so the cost
//! per step is linear in the piece count regardless of n.

use crate::interval::Interval;
use crate::markov::MarkovPartition;
use crate::orbits::{periodic_points, PeriodicPoints};
use crate::plmap::{MapError, PLMap, PieceBudget};
use serde::{Deserialize, Serialize};

pub const DEFAULT_COVER_HORIZON: usize = 64;
pub const DEFAULT_RETURN_HORIZON: usize = 256;

/// Result of the covering scan: `first_n` is the least threshold N such that
/// `f^n(K) ⊇ L` for every n in `[N, horizon]`, when one exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringResult {
    pub k: Interval,
    pub l: Interval,
    pub horizon: usize,
    pub first_n: Option<usize>,
    /// Exact images f^0(K), f^1(K), ..., f^horizon(K).
    pub trajectory: Vec<Interval>,
}

pub fn eventually_covers(
    f: &PLMap,
    k: &Interval,
    l: &Interval,
    horizon: usize,
) -> Result<CoveringResult, MapError> {
    assert!(horizon >= 1);
    f.require_self_map()?;
    let mut trajectory = Vec::with_capacity(horizon + 1);
    trajectory.push(k.clone());
    let mut covers = Vec::with_capacity(horizon);
    let mut cur = k.clone();
    for _ in 1..=horizon {
        cur = f.image(&cur)?;
        trajectory.push(cur.clone());
        covers.push(cur.contains_interval(l));
    }
    // Least N with covers[n-1] for all n in [N, horizon].
    let first_n = if *covers.last().unwrap() {
        let mut n = horizon;
        while n > 1 && covers[n - 2] {
            n -= 1;
        }
        Some(n)
    } else {
        None
    };
    Ok(CoveringResult {
        k: k.clone(),
        l: l.clone(),
        horizon,
        first_n,
        trajectory,
    })
}

/// Forward return-time set: the n <= horizon with `f^n(U) ∩ V` nonempty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnTimeSet {
    pub u: Interval,
    pub v: Interval,
    pub horizon: usize,
    pub times: Vec<usize>,
    pub longest_run: usize,
    /// Least m with every n in [m, horizon] a return time, if any.
    pub cofinite_from: Option<usize>,
}

pub fn return_times(
    f: &PLMap,
    u: &Interval,
    v: &Interval,
    horizon: usize,
) -> Result<ReturnTimeSet, MapError> {
    assert!(horizon >= 1);
    f.require_self_map()?;
    let mut times = Vec::new();
    let mut cur = u.clone();
    for n in 1..=horizon {
        cur = f.image(&cur)?;
        if cur.intersects(v) {
            times.push(n);
        }
    }
    let longest_run = longest_consecutive_run(&times);
    let cofinite_from = cofinite_threshold(&times, horizon);
    Ok(ReturnTimeSet {
        u: u.clone(),
        v: v.clone(),
        horizon,
        times,
        longest_run,
        cofinite_from,
    })
}

fn longest_consecutive_run(times: &[usize]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<usize> = None;
    for &t in times {
        run = match prev {
            Some(p) if t == p + 1 => run + 1,
            _ => 1,
        };
        best = best.max(run);
        prev = Some(t);
    }
    best
}

fn cofinite_threshold(times: &[usize], horizon: usize) -> Option<usize> {
    if times.last() != Some(&horizon) {
        return None;
    }
    let set: std::collections::BTreeSet<usize> = times.iter().copied().collect();
    let mut m = horizon;
    while m > 1 && set.contains(&(m - 1)) {
        m -= 1;
    }
    Some(m)
}

/// Intersection of finitely many return-time sets within a horizon, with the
/// longest consecutive run inside the intersection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub pairs: Vec<(Interval, Interval)>,
    pub horizon: usize,
    pub per_pair: Vec<ReturnTimeSet>,
    pub intersection: Vec<usize>,
    pub longest_run: usize,
    pub nonempty: bool,
    /// Mixing context from the covering graph, when known: false flags a
    /// non-mixing map where an empty intersection is expected.
    pub mixing_evidence: Option<bool>,
}

pub fn furstenberg_intersection_check(
    f: &PLMap,
    pairs: &[(Interval, Interval)],
    horizon: usize,
    mixing_evidence: Option<bool>,
) -> Result<IntersectionReport, MapError> {
    assert!(!pairs.is_empty());
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        per_pair.push(return_times(f, u, v, horizon)?);
    }
    let mut intersection: Vec<usize> = per_pair[0].times.clone();
    for rt in &per_pair[1..] {
        let set: std::collections::BTreeSet<usize> = rt.times.iter().copied().collect();
        intersection.retain(|t| set.contains(t));
    }
    let longest_run = longest_consecutive_run(&intersection);
    Ok(IntersectionReport {
        pairs: pairs.to_vec(),
        horizon,
        per_pair,
        nonempty: !intersection.is_empty(),
        longest_run,
        intersection,
        mixing_evidence,
    })
}

/// Per-period presence of periodic points inside a window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodsInWindow {
    pub u: Interval,
    pub max_period: usize,
    /// present[m-1]: some least-period-m point lies in U.
    pub present: Vec<bool>,
    /// Least m <= max_period with a period-n point in U for every n in
    /// [m, max_period].
    pub threshold: Option<usize>,
}

/// Least m such that every period n in [m, M] is realized by a point inside
/// `u`; evidence for the dense-periods characterization at desk scale.
pub fn estimate_m_of_window(
    f: &PLMap,
    u: &Interval,
    max_period: usize,
    budget: &PieceBudget,
    markov: Option<&MarkovPartition>,
) -> Result<PeriodsInWindow, MapError> {
    assert!(max_period >= 1);
    let mut present = vec![false; max_period];
    for m in 1..=max_period {
        let pts: PeriodicPoints = periodic_points(f, m, budget, markov)?;
        let hit = pts
            .orbits
            .iter()
            .filter(|o| o.least_period == m)
            .any(|o| o.points.iter().any(|x| u.contains(x)))
            || pts
                .segments
                .iter()
                .any(|s| s.least_period == m && s.interval.intersects(u));
        present[m - 1] = hit;
    }
    let mut threshold = None;
    for m in (1..=max_period).rev() {
        if present[m - 1] {
            threshold = Some(m);
        } else {
            break;
        }
    }
    Ok(PeriodsInWindow {
        u: u.clone(),
        max_period,
        present,
        threshold,
    })
}
