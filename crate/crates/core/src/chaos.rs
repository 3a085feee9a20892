//! Fixed-point condition trichotomy, turbulence certificates, and the
//! invariant-interval dichotomy check.

use crate::interval::Interval;
use crate::markov::detect_markov;
use crate::plmap::{FixedKind, MapError, PLMap};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ChaosError {
    #[error("map has no interior fixed point")]
    NoInteriorFixedPoint,
    #[error("hypothesis failed: f^{s}(K) = {image} is not contained in K = {k}")]
    HypothesisFailed { s: usize, image: Interval, k: Interval },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Exact sign certificate for one affine piece-part on one side of the fixed
/// point: the endpoint values witness the inequality on the whole part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceSign {
    pub part: Interval,
    pub relation: SideRelation,
    pub endpoint_values: (Rational, Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideRelation {
    /// f >= z on this part (left of z).
    AtLeastFixed,
    /// f <= z on this part (right of z).
    AtMostFixed,
}

/// Verdict of the trichotomy. The three conditions are made mutually
/// exclusive by priority: the crossing condition is checked first, then the
/// moves-away condition, then the strict sandwich.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Verdict {
    /// Some c != z with f(c) <= c < z or z < c <= f(c).
    Cond1 { z: Rational, c: Rational },
    /// Some c != z with c < f(c) < z or z < f(c) < c.
    Cond2 { z: Rational, c_hat: Rational },
    /// Unique fixed point z; every other point maps across it.
    Cond3 { z: Rational, side_certs: Vec<PieceSign> },
    /// No verdict applies (reported, never guessed).
    None { note: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Cond1 { .. } => "COND1",
            Verdict::Cond2 { .. } => "COND2",
            Verdict::Cond3 { .. } => "COND3",
            Verdict::None { .. } => "NONE",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionClassification {
    pub fixed_points_interior: Vec<Rational>,
    pub verdict: Verdict,
}

/// Splits the pieces of `f` at `z` and returns the affine parts lying in
/// `[domain.lo, z]` and `[z, domain.hi]` respectively.
fn side_parts(f: &PLMap, z: &Rational) -> (Vec<Interval>, Vec<Interval>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for i in 0..f.piece_count() {
        let piece = Interval::new(f.nodes()[i].0.clone(), f.nodes()[i + 1].0.clone()).unwrap();
        if piece.hi() <= z {
            left.push(piece);
        } else if piece.lo() >= z {
            right.push(piece);
        } else {
            left.push(Interval::new(piece.lo().clone(), z.clone()).unwrap());
            right.push(Interval::new(z.clone(), piece.hi().clone()).unwrap());
        }
    }
    (left, right)
}

fn cond3_certificates(f: &PLMap, z: &Rational) -> Result<Option<Vec<PieceSign>>, MapError> {
    let (left, right) = side_parts(f, z);
    let mut certs = Vec::new();
    for part in left {
        let (v0, v1) = (f.eval(part.lo())?, f.eval(part.hi())?);
        if &v0 < z || &v1 < z {
            return Ok(None);
        }
        certs.push(PieceSign {
            part,
            relation: SideRelation::AtLeastFixed,
            endpoint_values: (v0, v1),
        });
    }
    for part in right {
        let (v0, v1) = (f.eval(part.lo())?, f.eval(part.hi())?);
        if &v0 > z || &v1 > z {
            return Ok(None);
        }
        certs.push(PieceSign {
            part,
            relation: SideRelation::AtMostFixed,
            endpoint_values: (v0, v1),
        });
    }
    Ok(Some(certs))
}

/// Solution interval of an affine inequality `lo_bound <= g(x)` style
/// condition on a closed part, where g(x) = f(x) - x restricted to one piece
/// is affine. Returns the closed solution interval within `part`, if any.
fn affine_leq_zero_on(f: &PLMap, part: &Interval, negate: bool) -> Option<Interval> {
    // g(x) = f(x) - x on `part` (affine there); solve g <= 0, or g >= 0 when
    // negate is set.
    let g0 = f.eval(part.lo()).ok()? - part.lo();
    let g1 = f.eval(part.hi()).ok()? - part.hi();
    let (g0, g1) = if negate { (-g0, -g1) } else { (g0, g1) };
    let zero = Rational::zero();
    match (g0 <= zero, g1 <= zero) {
        (true, true) => Some(part.clone()),
        (false, false) => None,
        (true, false) => {
            // Crossing point: g is affine with g(lo) <= 0 < g(hi).
            let t = &g0 / &(&g0 - &g1);
            let x = part.lo() + &(t * part.width());
            Interval::new(part.lo().clone(), x)
        }
        (false, true) => {
            let t = &g0 / &(&g0 - &g1);
            let x = part.lo() + &(t * part.width());
            Interval::new(x, part.hi().clone())
        }
    }
}

/// Leftmost witness c in `search` (a side of z) with f(c) <= c (left side)
/// or f(c) >= c (right side), excluding c == z.
fn cond1_witness(f: &PLMap, z: &Rational, left_side: bool) -> Option<Rational> {
    let (left, right) = side_parts(f, z);
    let parts = if left_side { left } else { right };
    for part in parts {
        if let Some(sol) = affine_leq_zero_on(f, &part, !left_side) {
            if left_side {
                // Need a point < z; the solution is within [.., z].
                if sol.lo() < z {
                    return Some(sol.lo().clone());
                }
            } else if sol.hi() > z {
                return Some(sol.hi().clone());
            }
        }
    }
    None
}

pub fn classify_conditions(f: &PLMap) -> Result<ConditionClassification, ChaosError> {
    f.require_self_map()?;
    let domain = f.domain();
    let fixed = f.fixed_points();
    if fixed.iter().any(|(_, k)| *k == FixedKind::Segment) {
        let interior: Vec<Rational> = Vec::new();
        return Ok(ConditionClassification {
            fixed_points_interior: interior,
            verdict: Verdict::None {
                note: "map has a fixed-point segment; the unique-fixed-point clause of the \
                       crossing condition is ambiguous here, so no verdict is claimed"
                    .into(),
            },
        });
    }
    let all_fixed: Vec<Rational> = fixed.iter().map(|(iv, _)| iv.lo().clone()).collect();
    let interior: Vec<Rational> = all_fixed
        .iter()
        .filter(|x| domain.interior_contains(x))
        .cloned()
        .collect();
    if interior.is_empty() {
        return Err(ChaosError::NoInteriorFixedPoint);
    }

    // Crossing condition first: unique fixed point, every point maps across.
    if all_fixed.len() == 1 {
        let z = &interior[0];
        if let Some(side_certs) = cond3_certificates(f, z)? {
            return Ok(ConditionClassification {
                fixed_points_interior: interior.clone(),
                verdict: Verdict::Cond3 {
                    z: z.clone(),
                    side_certs,
                },
            });
        }
    }

    // Moves-away condition, searched over interior fixed points ascending;
    // first witness wins.
    for z in &interior {
        for left in [true, false] {
            if let Some(c) = cond1_witness(f, z, left) {
                debug_assert!(&c != z);
                return Ok(ConditionClassification {
                    fixed_points_interior: interior.clone(),
                    verdict: Verdict::Cond1 {
                        z: z.clone(),
                        c,
                    },
                });
            }
        }
    }

    // Strict sandwich.
    for z in &interior {
        for left in [true, false] {
            if let Some(c_hat) = cond2_witness_strict(f, z, left) {
                return Ok(ConditionClassification {
                    fixed_points_interior: interior.clone(),
                    verdict: Verdict::Cond2 {
                        z: z.clone(),
                        c_hat,
                    },
                });
            }
        }
    }

    Ok(ConditionClassification {
        fixed_points_interior: interior,
        verdict: Verdict::None {
            note: "no witness found for any condition under any interior fixed point".into(),
        },
    })
}

/// Strict sandwich witness: a point with c < f(c) < z (left) or
/// z < f(c) < c (right), found by exact candidate testing on each piece.
fn cond2_witness_strict(f: &PLMap, z: &Rational, left_side: bool) -> Option<Rational> {
    let (left, right) = side_parts(f, z);
    let parts = if left_side { left } else { right };
    for part in parts {
        // Closed relaxations of the two inequalities on this part.
        let moves_toward = affine_leq_zero_on(f, &part, left_side);
        let stays_short = short_of_fixed(f, &part, z, left_side);
        let (Some(a), Some(b)) = (moves_toward, stays_short) else {
            continue;
        };
        let Some(cand) = a.intersect(&b) else {
            continue;
        };
        for c in [cand.midpoint(), cand.lo().clone(), cand.hi().clone()] {
            let v = match f.eval(&c) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let ok = if left_side {
                c < v && &v < z
            } else {
                z < &v && v < c
            };
            if ok && &c != z {
                return Some(c);
            }
        }
    }
    None
}

/// Closed solution of f(x) <= z (left side: f(x) < z relaxed) or f(x) >= z
/// on a part.
fn short_of_fixed(f: &PLMap, part: &Interval, z: &Rational, left_side: bool) -> Option<Interval> {
    let v0 = f.eval(part.lo()).ok()?;
    let v1 = f.eval(part.hi()).ok()?;
    let (g0, g1) = if left_side {
        (v0 - z, v1 - z)
    } else {
        (z - &v0, z - &v1)
    };
    let zero = Rational::zero();
    match (g0 <= zero, g1 <= zero) {
        (true, true) => Some(part.clone()),
        (false, false) => None,
        (true, false) => {
            let t = &g0 / &(&g0 - &g1);
            let x = part.lo() + &(t * part.width());
            Interval::new(part.lo().clone(), x)
        }
        (false, true) => {
            let t = &g0 / &(&g0 - &g1);
            let x = part.lo() + &(t * part.width());
            Interval::new(x, part.hi().clone())
        }
    }
}

/// One-host turbulence certificate: two essentially disjoint compact
/// intervals whose images each cover their union, exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurbulenceCertificate {
    pub j0: Interval,
    pub j1: Interval,
    pub image0: Interval,
    pub image1: Interval,
    /// Hull of j0 and j1; both images contain it.
    pub host: Interval,
}

impl TurbulenceCertificate {
    /// Exact re-verification against the map.
    pub fn verify(&self, f: &PLMap) -> Result<bool, MapError> {
        let union_hull = self.j0.hull(&self.j1);
        let i0 = f.image(&self.j0)?;
        let i1 = f.image(&self.j1)?;
        Ok(!self.j0.overlaps_interior(&self.j1)
            && i0.contains_interval(&union_hull)
            && i1.contains_interval(&union_hull)
            && i0 == self.image0
            && i1 == self.image1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TurbulenceOutcome {
    Found(TurbulenceCertificate),
    /// No certificate found. `exhaustive` is set only when the map is Markov
    /// and the complete cut-aligned search ran; for Markov maps that search
    /// is a decision procedure, so the flag certifies non-turbulence.
    NotFound { exhaustive: bool },
}

impl TurbulenceOutcome {
    pub fn found(&self) -> Option<&TurbulenceCertificate> {
        match self {
            TurbulenceOutcome::Found(c) => Some(c),
            TurbulenceOutcome::NotFound { .. } => None,
        }
    }
}

fn make_certificate(f: &PLMap, j0: Interval, j1: Interval) -> Result<Option<TurbulenceCertificate>, MapError> {
    let hull = j0.hull(&j1);
    let image0 = f.image(&j0)?;
    let image1 = f.image(&j1)?;
    if !j0.overlaps_interior(&j1)
        && image0.contains_interval(&hull)
        && image1.contains_interval(&hull)
        && !j0.is_degenerate()
        && !j1.is_degenerate()
    {
        Ok(Some(TurbulenceCertificate {
            j0,
            j1,
            image0,
            image1,
            host: hull,
        }))
    } else {
        Ok(None)
    }
}

/// Constructive search mirroring the moves-away proof: from a fixed point z
/// and a strict witness c on one side, take d = the extreme preimage of z
/// beyond c, then split [d, z] (or [z, d]) at an extreme value location.
/// Restricted to `window` when given.
fn constructive_turbulence(
    f: &PLMap,
    window: Option<&Interval>,
) -> Result<Option<TurbulenceCertificate>, MapError> {
    let domain = f.domain();
    let search = window.cloned().unwrap_or_else(|| domain.clone());
    let fixed = f.fixed_points();
    for (iv, kind) in &fixed {
        if *kind != FixedKind::Isolated {
            continue;
        }
        let z = iv.lo().clone();
        if !search.contains(&z) {
            continue;
        }
        // Left configuration: witness c < z with f(c) < c, then
        // d = max{x <= c : f(x) = z}, b = leftmost minimizer on [d, z].
        if let Some(cert) = one_side(f, &search, &z, true)? {
            return Ok(Some(cert));
        }
        if let Some(cert) = one_side(f, &search, &z, false)? {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

fn one_side(
    f: &PLMap,
    search: &Interval,
    z: &Rational,
    left: bool,
) -> Result<Option<TurbulenceCertificate>, MapError> {
    // Strict witness on the requested side, within the search window.
    let witness = strict_escape_witness(f, search, z, left);
    let Some(c) = witness else {
        return Ok(None);
    };
    let z_preimages = f.preimage(&Interval::point(z.clone()));
    let d = if left {
        z_preimages
            .iter()
            .filter(|iv| iv.lo() <= &c && iv.lo() >= search.lo())
            .map(|iv| iv.hi().clone().min(c.clone()))
            .max()
    } else {
        z_preimages
            .iter()
            .filter(|iv| iv.hi() >= &c && iv.hi() <= search.hi())
            .map(|iv| iv.lo().clone().max(c.clone()))
            .min()
    };
    let Some(d) = d else {
        return Ok(None);
    };
    let j = if left {
        Interval::new(d.clone(), z.clone())
    } else {
        Interval::new(z.clone(), d.clone())
    };
    let Some(j) = j else {
        return Ok(None);
    };
    if j.is_degenerate() {
        return Ok(None);
    }
    let img = f.image(&j)?;
    let reaches = if left { img.lo() <= &d } else { img.hi() >= &d };
    if !reaches {
        return Ok(None);
    }
    // Leftmost extreme-value location among endpoint and node candidates.
    let target = if left { img.lo().clone() } else { img.hi().clone() };
    let mut candidates: Vec<Rational> = vec![j.lo().clone()];
    for (x, _) in f.nodes() {
        if j.interior_contains(x) {
            candidates.push(x.clone());
        }
    }
    candidates.push(j.hi().clone());
    let b = candidates
        .into_iter()
        .find(|x| f.eval(x).map(|v| v == target).unwrap_or(false));
    let Some(b) = b else {
        return Ok(None);
    };
    if &b == j.lo() || &b == j.hi() {
        return Ok(None);
    }
    let j0 = Interval::new(j.lo().clone(), b.clone()).unwrap();
    let j1 = Interval::new(b, j.hi().clone()).unwrap();
    make_certificate(f, j0, j1)
}

/// Strict escape witness: point with f(x) < x on [search.lo, z) (left) or
/// f(x) > x on (z, search.hi] (right), tested exactly.
fn strict_escape_witness(f: &PLMap, search: &Interval, z: &Rational, left: bool) -> Option<Rational> {
    let side = if left {
        Interval::new(search.lo().clone(), z.clone())?
    } else {
        Interval::new(z.clone(), search.hi().clone())?
    };
    if side.is_degenerate() {
        return None;
    }
    let (lparts, rparts) = side_parts(f, z);
    let parts = if left { lparts } else { rparts };
    for part in parts {
        let Some(clipped) = part.intersect(&side) else {
            continue;
        };
        if clipped.is_degenerate() {
            continue;
        }
        if let Some(sol) = affine_leq_zero_on(f, &clipped, !left) {
            // Need strict inequality; test candidates exactly.
            for x in [sol.midpoint(), sol.lo().clone(), sol.hi().clone()] {
                if &x == z {
                    continue;
                }
                if let Ok(v) = f.eval(&x) {
                    if (left && v < x) || (!left && v > x) {
                        return Some(x);
                    }
                }
            }
        }
    }
    None
}

/// Exhaustive search for witness pairs aligned to a sorted grid that
/// contains every breakpoint of `f`. When the grid is the cut set of a
/// Markov partition this decides turbulence: any witness pair can be rounded
/// to cut-aligned intervals, splitting the cell containing the shared point
/// to one side or the other. For one-per-hull enumeration the first
/// witness pair in lexicographic index order is kept per (hull start, hull
/// end) pair.
fn aligned_turbulence_search(
    f: &PLMap,
    grid: &[Rational],
    first_only: bool,
) -> Result<Vec<TurbulenceCertificate>, MapError> {
    let n = grid.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    // f is affine between consecutive grid points, so segment images come
    // from the grid values alone.
    let values: Vec<Rational> = grid
        .iter()
        .map(|x| f.eval(x))
        .collect::<Result<_, _>>()?;
    let segs = n - 1;
    // span_lo[i][j], span_hi[i][j]: exact image bounds of [grid_i, grid_{j+1}].
    let mut span_lo = vec![vec![Rational::zero(); segs]; segs];
    let mut span_hi = vec![vec![Rational::zero(); segs]; segs];
    for i in 0..segs {
        let mut lo = values[i].clone().min(values[i + 1].clone());
        let mut hi = values[i].clone().max(values[i + 1].clone());
        for j in i..segs {
            if j > i {
                lo = lo.min(values[j + 1].clone());
                hi = hi.max(values[j + 1].clone());
            }
            span_lo[i][j] = lo.clone();
            span_hi[i][j] = hi.clone();
        }
    }
    let mut certs = Vec::new();
    // j0 = [grid_i, grid_j], j1 = [grid_k, grid_l] with i < j <= k < l.
    for i in 0..segs {
        for l in (i + 1)..=segs {
            let hull_lo = &grid[i];
            let hull_hi = &grid[l];
            let mut found_for_hull = false;
            for j in (i + 1)..=l.min(segs) {
                if found_for_hull && first_only {
                    break;
                }
                let ok0 = &span_lo[i][j - 1] <= hull_lo && &span_hi[i][j - 1] >= hull_hi;
                if !ok0 {
                    continue;
                }
                for k in j..l {
                    let ok1 = &span_lo[k][l - 1] <= hull_lo && &span_hi[k][l - 1] >= hull_hi;
                    if !ok1 {
                        continue;
                    }
                    let j0 = Interval::new(grid[i].clone(), grid[j].clone()).unwrap();
                    let j1 = Interval::new(grid[k].clone(), grid[l].clone()).unwrap();
                    if let Some(cert) = make_certificate(f, j0, j1)? {
                        certs.push(cert);
                        found_for_hull = true;
                        if first_only {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(certs)
}

/// Grid of candidate witness endpoints beyond the breakpoints: fixed points
/// of `f` and their per-piece preimages. Turbulence hulls run between a
/// fixed point and preimages of it, so this enrichment recovers witnesses
/// whose endpoints are not partition cuts.
fn enriched_grid(f: &PLMap, base: &[Rational]) -> Vec<Rational> {
    let mut grid: Vec<Rational> = base.to_vec();
    let mut fixed: Vec<Rational> = Vec::new();
    for (iv, kind) in f.fixed_points() {
        if kind == FixedKind::Isolated {
            fixed.push(iv.lo().clone());
        }
    }
    for z in &fixed {
        grid.push(z.clone());
        for iv in f.preimage(&Interval::point(z.clone())) {
            grid.push(iv.lo().clone());
            grid.push(iv.hi().clone());
        }
    }
    grid.sort();
    grid.dedup();
    grid
}

/// Default horizon for Markov detection inside the turbulence search.
const MARKOV_HORIZON: usize = 64;

pub fn find_turbulence(f: &PLMap) -> Result<TurbulenceOutcome, ChaosError> {
    f.require_self_map()?;
    if let Some(cert) = constructive_turbulence(f, None)? {
        return Ok(TurbulenceOutcome::Found(cert));
    }
    match detect_markov(f, MARKOV_HORIZON) {
        Ok(p) => {
            let certs = aligned_turbulence_search(f, &p.cuts, true)?;
            match certs.into_iter().next() {
                Some(c) => Ok(TurbulenceOutcome::Found(c)),
                None => Ok(TurbulenceOutcome::NotFound { exhaustive: true }),
            }
        }
        Err(_) => {
            // Best-effort search on the enriched grid; a hit is still an
            // exact certificate, a miss proves nothing.
            let base: Vec<Rational> = f.nodes().iter().map(|(x, _)| x.clone()).collect();
            let grid = enriched_grid(f, &base);
            let certs = aligned_turbulence_search(f, &grid, true)?;
            match certs.into_iter().next() {
                Some(c) => Ok(TurbulenceOutcome::Found(c)),
                None => Ok(TurbulenceOutcome::NotFound { exhaustive: false }),
            }
        }
    }
}

/// A double-turbulence certificate: two hosts sharing at most one point,
/// each carrying a one-host certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleTurbulenceCertificate {
    pub first: TurbulenceCertificate,
    pub second: TurbulenceCertificate,
}

impl DoubleTurbulenceCertificate {
    pub fn verify(&self, f: &PLMap) -> Result<bool, MapError> {
        Ok(self.first.verify(f)?
            && self.second.verify(f)?
            && !self.first.host.overlaps_interior(&self.second.host))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DoubleTurbulenceOutcome {
    Found(DoubleTurbulenceCertificate),
    NotFound { exhaustive: bool },
}

impl DoubleTurbulenceOutcome {
    pub fn found(&self) -> Option<&DoubleTurbulenceCertificate> {
        match self {
            DoubleTurbulenceOutcome::Found(c) => Some(c),
            DoubleTurbulenceOutcome::NotFound { .. } => None,
        }
    }
}

pub fn find_double_turbulence(f: &PLMap) -> Result<DoubleTurbulenceOutcome, ChaosError> {
    f.require_self_map()?;
    // A map that is not turbulent cannot be doubly turbulent, and for Markov
    // maps the cut-aligned search decides turbulence. That is the only sound
    // route to an exhaustive negative here: cut-aligned rounding can merge
    // two disjoint hosts into overlapping ones, so a failed pairing below is
    // not a proof.
    let markov = detect_markov(f, MARKOV_HORIZON).ok();
    if let Some(p) = &markov {
        if aligned_turbulence_search(f, &p.cuts, true)?.is_empty()
            && constructive_turbulence(f, None)?.is_none()
        {
            return Ok(DoubleTurbulenceOutcome::NotFound { exhaustive: true });
        }
    }
    // Witness hosts may end at fixed points or their preimages rather than
    // cuts, so pair search runs on the enriched grid.
    let base: Vec<Rational> = match &markov {
        Some(p) => p.cuts.clone(),
        None => f.nodes().iter().map(|(x, _)| x.clone()).collect(),
    };
    let grid = enriched_grid(f, &base);
    let certs = aligned_turbulence_search(f, &grid, true)?;
    for a in &certs {
        if let Some(b) = certs.iter().find(|b| a.host.hi() <= b.host.lo()) {
            return Ok(DoubleTurbulenceOutcome::Found(DoubleTurbulenceCertificate {
                first: a.clone(),
                second: b.clone(),
            }));
        }
    }
    // Constructive fallback around each interior fixed point.
    let domain = f.domain();
    for (iv, kind) in f.fixed_points() {
        if kind != FixedKind::Isolated || !domain.interior_contains(iv.lo()) {
            continue;
        }
        let z = iv.lo().clone();
        let left_window = Interval::new(domain.lo().clone(), z.clone()).unwrap();
        let right_window = Interval::new(z, domain.hi().clone()).unwrap();
        let left = constructive_turbulence(f, Some(&left_window))?;
        let right = constructive_turbulence(f, Some(&right_window))?;
        if let (Some(a), Some(b)) = (left, right) {
            if !a.host.overlaps_interior(&b.host) {
                return Ok(DoubleTurbulenceOutcome::Found(DoubleTurbulenceCertificate {
                    first: a,
                    second: b,
                }));
            }
        }
    }
    Ok(DoubleTurbulenceOutcome::NotFound { exhaustive: false })
}

/// Report for the invariant-interval dichotomy: given f^s(K) ⊆ K, the square
/// map must satisfy f²(K) = K and fix the closure of each complement
/// component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantIntervalReport {
    pub k: Interval,
    pub s: usize,
    pub fs_of_k: Interval,
    pub f2_of_k: Interval,
    pub k_invariant_under_square: bool,
    /// (complement component closure, its image under f², equal?)
    pub complements: Vec<(Interval, Interval, bool)>,
    pub pass: bool,
}

pub fn check_invariant_interval_dichotomy(f: &PLMap, k: &Interval, s: usize) -> Result<InvariantIntervalReport, ChaosError> {
    assert!(s >= 1);
    f.require_self_map()?;
    let domain = f.domain();
    if !domain.contains_interval(k) {
        return Err(ChaosError::Map(MapError::IntervalOutsideDomain {
            interval: k.clone(),
            domain,
        }));
    }
    let fs_of_k = f.image_iter(k, s)?;
    if !k.contains_interval(&fs_of_k) {
        return Err(ChaosError::HypothesisFailed {
            s,
            image: fs_of_k,
            k: k.clone(),
        });
    }
    let f2_of_k = f.image_iter(k, 2)?;
    let k_invariant = &f2_of_k == k;
    let mut complements = Vec::new();
    if domain.lo() < k.lo() {
        let left = Interval::new(domain.lo().clone(), k.lo().clone()).unwrap();
        let img = f.image_iter(&left, 2)?;
        let eq = img == left;
        complements.push((left, img, eq));
    }
    if k.hi() < domain.hi() {
        let right = Interval::new(k.hi().clone(), domain.hi().clone()).unwrap();
        let img = f.image_iter(&right, 2)?;
        let eq = img == right;
        complements.push((right, img, eq));
    }
    let pass = k_invariant && complements.iter().all(|(_, _, eq)| *eq);
    Ok(InvariantIntervalReport {
        k: k.clone(),
        s,
        fs_of_k,
        f2_of_k,
        k_invariant_under_square: k_invariant,
        complements,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::plmap::PieceBudget;

    fn map(name: &str) -> PLMap {
        corpus::builtin(name).unwrap().to_map().unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    /// Brute-force oracle for the trichotomy: dense grid plus per-piece exact
    /// witness search, used to freeze the verdicts below.
    fn oracle_has_cond1_witness(f: &PLMap, z: &Rational) -> bool {
        let grid = 2000i64;
        let d = f.domain();
        let w = d.width();
        (0..=grid).any(|i| {
            let x = d.lo() + &(&w * &q(i, grid));
            if &x == z {
                return false;
            }
            let v = f.eval(&x).unwrap();
            (v <= x && &x < z) || (z < &x && x <= v)
        })
    }

    #[test]
    fn tent_is_cond1_with_frozen_witness() {
        let t = map("tent");
        let c = classify_conditions(&t).unwrap();
        assert_eq!(c.fixed_points_interior, vec![q(2, 3)]);
        match &c.verdict {
            Verdict::Cond1 { z, c } => {
                assert_eq!(z, &q(2, 3));
                assert_eq!(c, &Rational::from_int(0));
                // Witness re-verifies: f(c) <= c < z.
                let v = t.eval(c).unwrap();
                assert!(&v <= c && c < z);
            }
            other => panic!("expected COND1, got {other:?}"),
        }
        assert!(oracle_has_cond1_witness(&t, &q(2, 3)));
    }

    #[test]
    fn remark4_is_cond3() {
        let f = map("remark4");
        let c = classify_conditions(&f).unwrap();
        match &c.verdict {
            Verdict::Cond3 { z, side_certs } => {
                assert_eq!(z, &q(1, 2));
                assert!(!side_certs.is_empty());
                for cert in side_certs {
                    let (v0, v1) = &cert.endpoint_values;
                    match cert.relation {
                        SideRelation::AtLeastFixed => assert!(v0 >= z && v1 >= z),
                        SideRelation::AtMostFixed => assert!(v0 <= z && v1 <= z),
                    }
                }
            }
            other => panic!("expected COND3, got {other:?}"),
        }
    }

    #[test]
    fn remark2_family_is_cond2() {
        for n in 2..=4 {
            let f = corpus::builtin(&format!("remark2:{n}")).unwrap().to_map().unwrap();
            let c = classify_conditions(&f).unwrap();
            match &c.verdict {
                Verdict::Cond2 { z, c_hat } => {
                    let v = f.eval(c_hat).unwrap();
                    assert!((c_hat < &v && &v < z) || (z < &v && &v < c_hat));
                    assert!(!oracle_has_cond1_witness(&f, z), "no COND1 witness may exist");
                }
                other => panic!("remark2:{n}: expected COND2, got {other:?}"),
            }
        }
    }

    #[test]
    fn example7_is_cond1() {
        let g = map("example7");
        let c = classify_conditions(&g).unwrap();
        match &c.verdict {
            Verdict::Cond1 { z, c } => {
                assert_eq!(z, &q(4, 3));
                assert_eq!(c, &Rational::from_int(0));
            }
            other => panic!("expected COND1, got {other:?}"),
        }
    }

    #[test]
    fn segment_maps_get_no_verdict() {
        let id = PLMap::identity(&Interval::ratio(0, 1, 1, 1));
        let c = classify_conditions(&id).unwrap();
        assert!(matches!(c.verdict, Verdict::None { .. }));
    }

    #[test]
    fn classification_is_deterministic() {
        let t = map("tent");
        let a = format!("{:?}", classify_conditions(&t).unwrap().verdict);
        let b = format!("{:?}", classify_conditions(&t).unwrap().verdict);
        assert_eq!(a, b);
    }

    #[test]
    fn cond3_structural_consequence_for_remark4() {
        // Image of each side lands in the other side, exactly.
        let f = map("remark4");
        let left = Interval::ratio(0, 1, 1, 2);
        let right = Interval::ratio(1, 2, 1, 1);
        assert!(right.contains_interval(&f.image(&left).unwrap()));
        assert!(left.contains_interval(&f.image(&right).unwrap()));
    }

    #[test]
    fn tent_turbulence_certificate_is_the_two_halves() {
        let t = map("tent");
        match find_turbulence(&t).unwrap() {
            TurbulenceOutcome::Found(cert) => {
                assert_eq!(cert.j0, Interval::ratio(0, 1, 1, 2));
                assert_eq!(cert.j1, Interval::ratio(1, 2, 1, 1));
                assert!(cert.verify(&t).unwrap());
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn remark2_maps_are_certified_not_turbulent() {
        for n in 2..=4 {
            let f = corpus::builtin(&format!("remark2:{n}")).unwrap().to_map().unwrap();
            match find_turbulence(&f).unwrap() {
                TurbulenceOutcome::NotFound { exhaustive } => {
                    assert!(exhaustive, "remark2:{n} search must be exhaustive");
                }
                TurbulenceOutcome::Found(c) => panic!("remark2:{n} wrongly turbulent: {c:?}"),
            }
        }
    }

    #[test]
    fn remark4_not_turbulent_but_square_doubly_turbulent() {
        let f = map("remark4");
        assert!(matches!(
            find_turbulence(&f).unwrap(),
            TurbulenceOutcome::NotFound { exhaustive: true }
        ));
        let f2 = f.iterate(2, &PieceBudget::default()).unwrap();
        match find_double_turbulence(&f2).unwrap() {
            DoubleTurbulenceOutcome::Found(cert) => {
                assert!(cert.verify(&f2).unwrap());
                let z = q(1, 2);
                assert!(cert.first.host.hi() <= &z);
                assert!(cert.second.host.lo() >= &z);
            }
            other => panic!("expected double certificate, got {other:?}"),
        }
    }

    #[test]
    fn tent_square_is_doubly_turbulent() {
        let t = map("tent");
        let t2 = t.iterate(2, &PieceBudget::default()).unwrap();
        let cert = match find_double_turbulence(&t2).unwrap() {
            DoubleTurbulenceOutcome::Found(c) => c,
            other => panic!("expected certificate, got {other:?}"),
        };
        assert!(cert.verify(&t2).unwrap());
    }

    #[test]
    fn remark2_squares_are_doubly_turbulent() {
        for n in 2..=4 {
            let f = corpus::builtin(&format!("remark2:{n}")).unwrap().to_map().unwrap();
            let f2 = f.iterate(2, &PieceBudget::default()).unwrap();
            match find_double_turbulence(&f2).unwrap() {
                DoubleTurbulenceOutcome::Found(cert) => assert!(cert.verify(&f2).unwrap()),
                other => panic!("remark2:{n} square: expected certificate, got {other:?}"),
            }
            assert!(matches!(
                find_double_turbulence(&f).unwrap(),
                DoubleTurbulenceOutcome::NotFound { .. }
            ));
        }
    }

    #[test]
    fn invariant_interval_dichotomy_examples() {
        let f = map("remark4");
        let k = Interval::ratio(0, 1, 1, 2);
        let report = check_invariant_interval_dichotomy(&f, &k, 2).unwrap();
        assert!(report.pass);
        assert_eq!(report.f2_of_k, k);
        assert_eq!(report.complements.len(), 1);
        assert_eq!(report.complements[0].0, Interval::ratio(1, 2, 1, 1));
        assert!(report.complements[0].2);

        let t = map("tent");
        assert!(matches!(
            check_invariant_interval_dichotomy(&t, &Interval::ratio(0, 1, 1, 2), 1),
            Err(ChaosError::HypothesisFailed { .. })
        ));

        // Pointwise-fixed segment: trivially invariant.
        let id = PLMap::identity(&Interval::ratio(0, 1, 1, 1));
        let report = check_invariant_interval_dichotomy(&id, &Interval::ratio(1, 4, 1, 2), 1).unwrap();
        assert!(report.pass);
    }
}
