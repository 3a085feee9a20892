//! Exact periodic-orbit solving, least-period classification and period
//! spectra.
//!
//! Two independent solving strategies are provided: direct fixed-point
//! solving on the composed iterate, and cylinder walks over a Markov
//! partition where each closed walk reduces to a single linear equation.
//! Tests compare the two point sets for exact agreement.

use crate::chaos::{self, ChaosError, Verdict};
use crate::interval::Interval;
use crate::markov::{detect_markov, MarkovPartition};
use crate::plmap::{FixedKind, MapError, PLMap, PieceBudget};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("classification unavailable: {0}")]
    ClassificationUnavailable(String),
}

/// Exact cycle with certified least period. `points` starts at the least
/// element of the cycle and follows orbit order; `witness` is the full
/// evaluation trace `p, f(p), ..., f^m(p) = p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub points: Vec<Rational>,
    pub least_period: usize,
    pub witness: Vec<Rational>,
}

/// Maximal interval on which `f^m` is the identity, with the least period of
/// its points certified at the midpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicSegment {
    pub interval: Interval,
    pub iterate: usize,
    pub least_period: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicPoints {
    /// Orbits of all fixed points of `f^m`, grouped; least periods divide m.
    pub orbits: Vec<PeriodicOrbit>,
    pub segments: Vec<PeriodicSegment>,
    /// Isolated solutions produced by more than one cylinder walk (cut
    /// landings); used to reconcile the trace formula exactly.
    pub boundary_duplicates: Vec<Rational>,
    /// Fixed points of `f^m` sitting on cuts that no closed walk realizes
    /// (their itineraries alternate between the incident cells). Found by the
    /// explicit cut scan; also part of trace reconciliation.
    pub cut_missed: Vec<Rational>,
}

fn group_into_orbits(
    f: &PLMap,
    points: &BTreeSet<Rational>,
    m: usize,
) -> Result<Vec<PeriodicOrbit>, MapError> {
    let mut remaining: BTreeSet<Rational> = points.clone();
    let mut orbits = Vec::new();
    while let Some(start) = remaining.iter().next().cloned() {
        // Trace the orbit; by minimality of the BTreeSet iteration the
        // representative is the least element of its cycle.
        let mut cycle = vec![start.clone()];
        let mut witness = vec![start.clone()];
        let mut x = start.clone();
        let mut least = None;
        for step in 1..=m {
            x = f.eval(&x)?;
            witness.push(x.clone());
            if x == start {
                least = Some(step);
                break;
            }
            cycle.push(x.clone());
        }
        let least = least.unwrap_or(m);
        for p in &cycle {
            remaining.remove(p);
        }
        orbits.push(PeriodicOrbit {
            points: cycle,
            least_period: least,
            witness,
        });
    }
    orbits.sort_by(|a, b| a.points[0].cmp(&b.points[0]));
    Ok(orbits)
}

/// Least d dividing m with `f^d` equal to the identity on the whole segment,
/// checked exactly from the nodes of the composed iterate.
fn segment_least_period(
    f: &PLMap,
    iv: &Interval,
    m: usize,
    budget: &PieceBudget,
) -> Result<usize, MapError> {
    for d in 1..=m {
        if m % d != 0 {
            continue;
        }
        let h = f.iterate(d, budget)?;
        if &h.eval(iv.lo())? != iv.lo() || &h.eval(iv.hi())? != iv.hi() {
            continue;
        }
        let mut identity_inside = true;
        for (x, y) in h.nodes() {
            if iv.interior_contains(x) && y != x {
                identity_inside = false;
                break;
            }
        }
        if identity_inside {
            return Ok(d);
        }
    }
    Ok(m)
}

/// Direct strategy: exact fixed points of the composed iterate.
fn solve_direct(f: &PLMap, m: usize, budget: &PieceBudget) -> Result<PeriodicPoints, MapError> {
    let fm = f.iterate(m, budget)?;
    let mut isolated: BTreeSet<Rational> = BTreeSet::new();
    let mut segments = Vec::new();
    for (iv, kind) in fm.fixed_points() {
        match kind {
            FixedKind::Isolated => {
                isolated.insert(iv.lo().clone());
            }
            FixedKind::Segment => segments.push(PeriodicSegment {
                least_period: segment_least_period(f, &iv, m, budget)?,
                interval: iv,
                iterate: m,
            }),
        }
    }
    // Segment endpoints are fixed points of f^m too; keep isolated points
    // that fall outside every segment.
    isolated.retain(|x| !segments.iter().any(|s| s.interval.contains(x)));
    Ok(PeriodicPoints {
        orbits: group_into_orbits(f, &isolated, m)?,
        segments,
        boundary_duplicates: Vec::new(),
        cut_missed: Vec::new(),
    })
}

/// Cylinder strategy: for each closed walk of length m through the covering
/// graph, compose the affine branch maps along the walk and solve one linear
/// equation, constraining the solution to the walk's cylinder.
fn solve_cylinders(
    f: &PLMap,
    p: &MarkovPartition,
    m: usize,
    budget: &PieceBudget,
) -> Result<PeriodicPoints, MapError> {
    let r = p.cell_count();
    // Affine branch on each cell.
    let mut branch = Vec::with_capacity(r);
    for i in 0..r {
        let cell = p.cell(i);
        let y0 = f.eval(cell.lo())?;
        let y1 = f.eval(cell.hi())?;
        let slope = (&y1 - &y0) / &cell.width();
        let offset = &y0 - &(&slope * cell.lo());
        branch.push((slope, offset));
    }
    let walk_bound = budget.max_pieces as u64;
    let mut walk_count: u64 = 0;

    let mut isolated: BTreeSet<Rational> = BTreeSet::new();
    let mut duplicates: Vec<Rational> = Vec::new();
    let mut segments: Vec<PeriodicSegment> = Vec::new();

    // Depth-first over walks; state: prefix composite g(x) = s x + o and the
    // feasible set {x in start cell : prefix_j(x) in cell_{w_j} for all j}.
    struct Frame {
        cell: usize,
        s: Rational,
        o: Rational,
        feasible: Interval,
    }
    for start in 0..r {
        let mut stack: Vec<(Frame, usize)> = vec![(
            Frame {
                cell: start,
                s: Rational::one(),
                o: Rational::zero(),
                feasible: p.cell(start),
            },
            0,
        )];
        while let Some((frame, depth)) = stack.pop() {
            if depth == m {
                if frame.cell != start {
                    continue;
                }
                walk_count += 1;
                if walk_count > walk_bound {
                    return Err(MapError::BudgetExceeded {
                        what: "cylinder walk count",
                        value: walk_count,
                        limit: walk_bound,
                    });
                }
                // Solve s x + o = x on the feasible set.
                let one = Rational::one();
                if frame.s == one {
                    if frame.o.is_zero() && !frame.feasible.is_degenerate() {
                        segments.push(PeriodicSegment {
                            least_period: segment_least_period(f, &frame.feasible, m, budget)?,
                            interval: frame.feasible,
                            iterate: m,
                        });
                    } else if frame.o.is_zero() {
                        let x = frame.feasible.lo().clone();
                        if !isolated.insert(x.clone()) {
                            duplicates.push(x);
                        }
                    }
                    continue;
                }
                let x = &frame.o / &(one - frame.s.clone());
                if frame.feasible.contains(&x) {
                    if !isolated.insert(x.clone()) {
                        duplicates.push(x);
                    }
                }
                continue;
            }
            let (bs, bo) = &branch[frame.cell];
            for next in 0..r {
                if !p.matrix[frame.cell][next] {
                    continue;
                }
                // New prefix: branch ∘ prefix.
                let s = bs * &frame.s;
                let o = bs * &frame.o + bo.clone();
                // Constrain: s x + o in cell_next.
                let cell_next = p.cell(next);
                let feas = if s.is_zero() {
                    if cell_next.contains(&o) {
                        Some(frame.feasible.clone())
                    } else {
                        None
                    }
                } else {
                    let a = (cell_next.lo() - &o) / &s;
                    let b = (cell_next.hi() - &o) / &s;
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    Interval::new(lo, hi).unwrap().intersect(&frame.feasible)
                };
                if let Some(feasible) = feas {
                    stack.push((
                        Frame {
                            cell: next,
                            s: s.clone(),
                            o: o.clone(),
                            feasible,
                        },
                        depth + 1,
                    ));
                }
            }
        }
    }
    // Merge overlapping segments and drop isolated points swallowed by them.
    segments.sort_by(|a, b| a.interval.lo().cmp(b.interval.lo()));
    let mut merged: Vec<PeriodicSegment> = Vec::new();
    for s in segments {
        match merged.last_mut() {
            Some(last) if s.interval.lo() <= last.interval.hi() => {
                if s.interval.hi() > last.interval.hi() {
                    last.interval =
                        Interval::new(last.interval.lo().clone(), s.interval.hi().clone()).unwrap();
                }
            }
            _ => merged.push(s),
        }
    }
    // Fixed points of f^m sitting exactly on cuts can evade every closed
    // walk when their itinerary alternates between the incident cells, so
    // cuts are scanned directly.
    let mut cut_missed = Vec::new();
    for c in &p.cuts {
        if &f.eval_iter(c, m)? == c
            && !isolated.contains(c)
            && !merged.iter().any(|s| s.interval.contains(c))
        {
            isolated.insert(c.clone());
            cut_missed.push(c.clone());
        }
    }
    isolated.retain(|x| !merged.iter().any(|s| s.interval.contains(x)));
    duplicates.retain(|x| !merged.iter().any(|s| s.interval.contains(x)));
    Ok(PeriodicPoints {
        orbits: group_into_orbits(f, &isolated, m)?,
        segments: merged,
        boundary_duplicates: duplicates,
        cut_missed,
    })
}

/// All fixed points of `f^m`, grouped into orbits with certified least
/// periods, plus identity segments. Prefers the cylinder strategy when a
/// Markov partition is supplied, falling back to direct solving.
pub fn periodic_points(
    f: &PLMap,
    m: usize,
    budget: &PieceBudget,
    markov: Option<&MarkovPartition>,
) -> Result<PeriodicPoints, MapError> {
    assert!(m >= 1);
    f.require_self_map()?;
    if let Some(p) = markov {
        match solve_cylinders(f, p, m, budget) {
            Ok(res) => return Ok(res),
            Err(MapError::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    solve_direct(f, m, budget)
}

/// Both strategies, for agreement tests.
pub fn periodic_points_both(
    f: &PLMap,
    m: usize,
    budget: &PieceBudget,
    p: &MarkovPartition,
) -> Result<(PeriodicPoints, PeriodicPoints), MapError> {
    Ok((solve_direct(f, m, budget)?, solve_cylinders(f, p, m, budget)?))
}

/// Presence and multiplicity of least periods up to a bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodSpectrum {
    pub map_name: String,
    pub max_checked: usize,
    pub present: BTreeSet<usize>,
    /// Number of distinct orbits per least period.
    pub counts: BTreeMap<usize, usize>,
    /// Periods realized by identity segments of some iterate.
    pub segment_flags: BTreeSet<usize>,
    /// checked[m-1]: whether period m was solved within budget.
    pub checked: Vec<bool>,
}

pub fn period_spectrum(
    f: &PLMap,
    max_period: usize,
    budget: &PieceBudget,
    markov: Option<&MarkovPartition>,
    map_name: &str,
) -> Result<PeriodSpectrum, MapError> {
    assert!(max_period >= 1);
    let mut present = BTreeSet::new();
    let mut counts = BTreeMap::new();
    let mut segment_flags = BTreeSet::new();
    let mut checked = vec![false; max_period];
    let mut budget_error = None;
    for m in 1..=max_period {
        match periodic_points(f, m, budget, markov) {
            Ok(pts) => {
                checked[m - 1] = true;
                let orbit_count = pts.orbits.iter().filter(|o| o.least_period == m).count();
                if orbit_count > 0 {
                    present.insert(m);
                    counts.insert(m, orbit_count);
                }
                for s in &pts.segments {
                    if s.least_period == m {
                        segment_flags.insert(m);
                    }
                }
            }
            Err(e @ MapError::BudgetExceeded { .. }) => {
                budget_error = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    let spectrum = PeriodSpectrum {
        map_name: map_name.to_string(),
        max_checked: max_period,
        present,
        counts,
        segment_flags,
        checked,
    };
    match budget_error {
        // Partial coverage is visible in `checked`; the budget error wins so
        // callers notice, carrying what was computed in its message.
        Some(MapError::BudgetExceeded { what, value, limit }) if spectrum.checked.iter().any(|c| !c) => {
            Err(MapError::BudgetExceeded { what, value, limit })
        }
        _ => Ok(spectrum),
    }
}

/// True iff presence of p (as a least period) forces presence of q under the
/// standard total order on periods: odd numbers >= 3 ascending, then their
/// doublings level by level, then powers of two descending.
pub fn sharkovsky_forces(p: usize, q: usize) -> bool {
    if p == q {
        return true;
    }
    let split = |n: usize| {
        let mut a = 0usize;
        let mut u = n;
        while u % 2 == 0 {
            u /= 2;
            a += 1;
        }
        (a, u)
    };
    let (pa, pu) = split(p);
    let (qa, qu) = split(q);
    match (pu > 1, qu > 1) {
        (true, true) => pa < qa || (pa == qa && pu < qu),
        (true, false) => true,
        (false, false) => pa > qa,
        (false, true) => false,
    }
}

/// Downward closure of the spectrum in the forcing order, restricted to the
/// checked bound.
pub fn sharkovsky_tail_check(spectrum: &PeriodSpectrum) -> bool {
    for &p in &spectrum.present {
        for q in 1..=spectrum.max_checked {
            if sharkovsky_forces(p, q) && !spectrum.present.contains(&q) {
                return false;
            }
        }
    }
    true
}

/// Report of the period-spectrum consequences of the fixed-point condition
/// trichotomy: moves-away maps must realize every period, all other
/// classified maps every even period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSpectrumReport {
    pub verdict: String,
    pub spectrum: PeriodSpectrum,
    pub expected_missing: Vec<usize>,
    pub odd_periods_present: Vec<usize>,
    pub pass: bool,
}

/// Checks the spectrum claims attached to the classification: COND1 predicts
/// all periods up to the bound; COND2 predicts all even periods plus some
/// odd period >= 3 (reported; required when the bound admits one); COND3
/// predicts all even periods and no odd period > 1.
pub fn verify_condition_spectrum(
    f: &PLMap,
    max_period: usize,
    budget: &PieceBudget,
    map_name: &str,
) -> Result<ConditionSpectrumReport, OrbitError> {
    let classification =
        chaos::classify_conditions(f).map_err(|e| match e {
            ChaosError::NoInteriorFixedPoint => {
                OrbitError::ClassificationUnavailable("no interior fixed point".into())
            }
            other => OrbitError::ClassificationUnavailable(other.to_string()),
        })?;
    if let Verdict::None { note } = &classification.verdict {
        return Err(OrbitError::ClassificationUnavailable(note.clone()));
    }
    let markov = detect_markov(f, 64).ok();
    let spectrum = period_spectrum(f, max_period, budget, markov.as_ref(), map_name)?;
    let odd_periods_present: Vec<usize> = spectrum
        .present
        .iter()
        .copied()
        .filter(|m| m % 2 == 1 && *m > 1)
        .collect();
    let mut expected_missing = Vec::new();
    let pass = match &classification.verdict {
        Verdict::Cond1 { .. } => {
            for m in 1..=max_period {
                if !spectrum.present.contains(&m) {
                    expected_missing.push(m);
                }
            }
            expected_missing.is_empty()
        }
        Verdict::Cond2 { .. } => {
            for m in (2..=max_period).step_by(2) {
                if !spectrum.present.contains(&m) {
                    expected_missing.push(m);
                }
            }
            let odd_ok = max_period < 3 || !odd_periods_present.is_empty();
            expected_missing.is_empty() && odd_ok && spectrum.present.contains(&1)
        }
        Verdict::Cond3 { .. } => {
            for m in (2..=max_period).step_by(2) {
                if !spectrum.present.contains(&m) {
                    expected_missing.push(m);
                }
            }
            expected_missing.is_empty()
                && odd_periods_present.is_empty()
                && spectrum.present.contains(&1)
        }
        Verdict::None { .. } => unreachable!(),
    };
    Ok(ConditionSpectrumReport {
        verdict: classification.verdict.name().to_string(),
        spectrum,
        expected_missing,
        odd_periods_present,
        pass,
    })
}
