//! Continuous piecewise-linear maps on compact rational intervals.
//!
//! A map is stored as its breakpoint nodes `(x_i, y_i)` with strictly
//! increasing `x_i`; the map is the unique continuous function affine on each
//! `[x_i, x_{i+1}]` through the nodes, so continuity is automatic from the
//! representation. All operations are exact.

use crate::interval::Interval;
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Caps on piece count and coefficient size for composition and iteration.
/// Exceeding a budget is a recoverable error so callers can switch strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceBudget {
    pub max_pieces: usize,
    /// Cap on the bit length of any node coordinate's numerator/denominator.
    pub max_bits: u64,
}

impl Default for PieceBudget {
    fn default() -> Self {
        PieceBudget {
            max_pieces: 1_000_000,
            max_bits: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("point {point} outside domain {domain}")]
    DomainError { point: Rational, domain: Interval },
    #[error("interval {interval} not contained in domain {domain}")]
    IntervalOutsideDomain { interval: Interval, domain: Interval },
    #[error("range of inner map {range} not contained in domain of outer map {domain}")]
    RangeMismatch { range: Interval, domain: Interval },
    #[error("budget exceeded: {what} ({value} > {limit})")]
    BudgetExceeded {
        what: &'static str,
        value: u64,
        limit: u64,
    },
    #[error("map is not a self-map: codomain bound {codomain} not contained in domain {domain}")]
    NotSelfMap { codomain: Interval, domain: Interval },
    #[error("invalid node list: {0}")]
    InvalidNodes(String),
}

/// Kind of solution set of `f(x) = x` on one affine piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedKind {
    Isolated,
    Segment,
}

/// Continuous piecewise-linear map given by its breakpoint nodes.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLMap {
    nodes: Vec<(Rational, Rational)>,
    codomain: Interval,
}

impl std::fmt::Debug for PLMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PLMap[{} pieces on {}]", self.piece_count(), self.domain())
    }
}

impl PLMap {
    /// Builds a map from nodes; the codomain bound defaults to the exact
    /// value range `[min y_i, max y_i]`.
    pub fn new(nodes: Vec<(Rational, Rational)>) -> Result<Self, MapError> {
        let range = Self::node_range(&nodes)?;
        Self::with_codomain(nodes, range)
    }

    /// Builds a map with an explicit codomain bound, which must contain the
    /// value range.
    pub fn with_codomain(
        nodes: Vec<(Rational, Rational)>,
        codomain: Interval,
    ) -> Result<Self, MapError> {
        let range = Self::node_range(&nodes)?;
        if !codomain.contains_interval(&range) {
            return Err(MapError::InvalidNodes(format!(
                "codomain bound {codomain} does not contain value range {range}"
            )));
        }
        Ok(PLMap { nodes, codomain })
    }

    fn node_range(nodes: &[(Rational, Rational)]) -> Result<Interval, MapError> {
        if nodes.len() < 2 {
            return Err(MapError::InvalidNodes("need at least two nodes".into()));
        }
        for w in nodes.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(MapError::InvalidNodes(format!(
                    "node abscissae must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        let mut lo = nodes[0].1.clone();
        let mut hi = nodes[0].1.clone();
        for (_, y) in &nodes[1..] {
            if *y < lo {
                lo = y.clone();
            }
            if *y > hi {
                hi = y.clone();
            }
        }
        Ok(Interval::new(lo, hi).unwrap())
    }

    /// Identity map on `domain`.
    pub fn identity(domain: &Interval) -> Self {
        PLMap::new(vec![
            (domain.lo().clone(), domain.lo().clone()),
            (domain.hi().clone(), domain.hi().clone()),
        ])
        .expect("identity nodes are valid")
    }

    pub fn nodes(&self) -> &[(Rational, Rational)] {
        &self.nodes
    }

    pub fn domain(&self) -> Interval {
        Interval::new(
            self.nodes.first().unwrap().0.clone(),
            self.nodes.last().unwrap().0.clone(),
        )
        .unwrap()
    }

    /// Declared codomain bound (contains the exact value range).
    pub fn codomain(&self) -> &Interval {
        &self.codomain
    }

    /// Exact value range `[min y_i, max y_i]`.
    pub fn range(&self) -> Interval {
        Self::node_range(&self.nodes).unwrap()
    }

    pub fn piece_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_self_map(&self) -> bool {
        self.domain().contains_interval(&self.codomain)
    }

    pub fn require_self_map(&self) -> Result<(), MapError> {
        if self.is_self_map() {
            Ok(())
        } else {
            Err(MapError::NotSelfMap {
                codomain: self.codomain.clone(),
                domain: self.domain(),
            })
        }
    }

    /// Slope of piece `i` (between nodes `i` and `i+1`).
    pub fn slope(&self, i: usize) -> Rational {
        let (x0, y0) = &self.nodes[i];
        let (x1, y1) = &self.nodes[i + 1];
        (y1 - y0) / (x1 - x0)
    }

    /// Number of maximal monotone laps.
    pub fn lap_count(&self) -> usize {
        let mut laps = 1;
        let mut prev: Option<std::cmp::Ordering> = None;
        for i in 0..self.piece_count() {
            let s = self.slope(i);
            let dir = s.cmp(&Rational::zero());
            if let Some(p) = prev {
                if dir != p {
                    laps += 1;
                }
            }
            prev = Some(dir);
        }
        laps
    }

    /// Index of a piece whose closed span contains `x`.
    fn piece_index(&self, x: &Rational) -> Result<usize, MapError> {
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(MapError::DomainError {
                point: x.clone(),
                domain,
            });
        }
        // Last node with abscissa <= x; at the right endpoint use the final piece.
        let idx = match self.nodes.binary_search_by(|(nx, _)| nx.cmp(x)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Ok(idx.min(self.nodes.len() - 2))
    }

    /// Exact evaluation. At a breakpoint both adjacent pieces agree with the
    /// stored node value.
    pub fn eval(&self, x: &Rational) -> Result<Rational, MapError> {
        let i = self.piece_index(x)?;
        let (x0, y0) = &self.nodes[i];
        if x == x0 {
            return Ok(y0.clone());
        }
        let (x1, y1) = &self.nodes[i + 1];
        if x == x1 {
            return Ok(y1.clone());
        }
        Ok(y0 + &((y1 - y0) / (x1 - x0) * (x - x0)))
    }

    /// n-fold evaluation `f^n(x)`; requires a self-map for n >= 2 in spirit
    /// but is checked pointwise, so partial orbits surface a DomainError.
    pub fn eval_iter(&self, x: &Rational, n: usize) -> Result<Rational, MapError> {
        let mut v = x.clone();
        for _ in 0..n {
            v = self.eval(&v)?;
        }
        Ok(v)
    }

    fn check_budget(nodes: &[(Rational, Rational)], budget: &PieceBudget) -> Result<(), MapError> {
        if nodes.len().saturating_sub(1) > budget.max_pieces {
            return Err(MapError::BudgetExceeded {
                what: "piece count",
                value: (nodes.len() - 1) as u64,
                limit: budget.max_pieces as u64,
            });
        }
        for (x, y) in nodes {
            let bits = x.bit_size().max(y.bit_size());
            if bits > budget.max_bits {
                return Err(MapError::BudgetExceeded {
                    what: "coefficient bits",
                    value: bits,
                    limit: budget.max_bits,
                });
            }
        }
        Ok(())
    }

    /// Exact composition `self ∘ g`: nodes at the breakpoints of `g` together
    /// with the `g`-preimages of the breakpoints of `self`, deduplicated by
    /// exact equality.
    pub fn compose(&self, g: &PLMap, budget: &PieceBudget) -> Result<PLMap, MapError> {
        let g_range = g.range();
        let f_domain = self.domain();
        if !f_domain.contains_interval(&g_range) {
            return Err(MapError::RangeMismatch {
                range: g_range,
                domain: f_domain,
            });
        }
        let mut xs: Vec<Rational> = g.nodes.iter().map(|(x, _)| x.clone()).collect();
        for pi in 0..g.piece_count() {
            let (gx0, gy0) = &g.nodes[pi];
            let (gx1, gy1) = &g.nodes[pi + 1];
            let slope = (gy1 - gy0) / (gx1 - gx0);
            if slope.is_zero() {
                continue;
            }
            for (bx, _) in &self.nodes {
                // Solve g(x) = bx on this piece.
                let x = gx0 + &((bx - gy0) / &slope);
                if &x > gx0 && &x < gx1 {
                    xs.push(x);
                }
            }
        }
        xs.sort();
        xs.dedup();
        let mut nodes = Vec::with_capacity(xs.len());
        for x in xs {
            let y = self.eval(&g.eval(&x)?)?;
            nodes.push((x, y));
        }
        Self::check_budget(&nodes, budget)?;
        PLMap::new(nodes)
    }

    /// Exact `f^n` by repeated composition. `n` must be positive.
    pub fn iterate(&self, n: usize, budget: &PieceBudget) -> Result<PLMap, MapError> {
        assert!(n >= 1, "iterate requires n >= 1");
        self.require_self_map()?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = self.compose(&acc, budget)?;
        }
        Ok(acc)
    }

    /// Exact image of a closed interval: min/max of the endpoint values and
    /// the node values interior to `k`. Never composes.
    pub fn image(&self, k: &Interval) -> Result<Interval, MapError> {
        let domain = self.domain();
        if !domain.contains_interval(k) {
            return Err(MapError::IntervalOutsideDomain {
                interval: k.clone(),
                domain,
            });
        }
        let mut lo = self.eval(k.lo())?;
        let mut hi = lo.clone();
        let mut consider = |v: Rational| {
            if v < lo {
                lo = v;
            } else if v > hi {
                hi = v;
            }
        };
        consider(self.eval(k.hi())?);
        // Node values with abscissa strictly inside k.
        let start = self.nodes.partition_point(|(x, _)| x <= k.lo());
        for (x, y) in &self.nodes[start..] {
            if x >= k.hi() {
                break;
            }
            consider(y.clone());
        }
        Ok(Interval::new(lo, hi).unwrap())
    }

    /// Exact image of `k` under `f^n`, by stepwise image iteration (never
    /// composes). `n = 0` returns `k`.
    pub fn image_iter(&self, k: &Interval, n: usize) -> Result<Interval, MapError> {
        let mut cur = k.clone();
        for _ in 0..n {
            cur = self.image(&cur)?;
        }
        Ok(cur)
    }

    /// Exact preimage `{x : f(x) ∈ v}` as a maximal, pairwise-disjoint,
    /// ascending list of closed intervals (possibly degenerate, possibly
    /// empty).
    pub fn preimage(&self, v: &Interval) -> Vec<Interval> {
        let mut pieces: Vec<Interval> = Vec::new();
        for i in 0..self.piece_count() {
            let (x0, y0) = &self.nodes[i];
            let (x1, y1) = &self.nodes[i + 1];
            let slope = (y1 - y0) / (x1 - x0);
            let candidate = if slope.is_zero() {
                if v.contains(y0) {
                    Some(Interval::new(x0.clone(), x1.clone()).unwrap())
                } else {
                    None
                }
            } else {
                // Solve v.lo <= slope*(x-x0)+y0 <= v.hi on [x0, x1].
                let a = x0 + &((v.lo() - y0) / &slope);
                let b = x0 + &((v.hi() - y0) / &slope);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                Interval::new(lo, hi)
                    .unwrap()
                    .intersect(&Interval::new(x0.clone(), x1.clone()).unwrap())
            };
            if let Some(c) = candidate {
                pieces.push(c);
            }
        }
        pieces.sort_by(|a, b| a.lo().cmp(b.lo()).then(a.hi().cmp(b.hi())));
        // Merge touching or overlapping intervals into maximal components.
        let mut merged: Vec<Interval> = Vec::new();
        for p in pieces {
            match merged.last_mut() {
                Some(last) if p.lo() <= last.hi() => {
                    if p.hi() > last.hi() {
                        *last = Interval::new(last.lo().clone(), p.hi().clone()).unwrap();
                    }
                }
                _ => merged.push(p),
            }
        }
        merged
    }

    /// Exact solution set of `f(x) = x`, sorted ascending. Slope-1 pieces on
    /// the diagonal contribute `Segment` results; everything else isolated
    /// points. Adjacent duplicates are merged.
    pub fn fixed_points(&self) -> Vec<(Interval, FixedKind)> {
        let mut found: Vec<(Interval, FixedKind)> = Vec::new();
        for i in 0..self.piece_count() {
            let (x0, y0) = &self.nodes[i];
            let (x1, y1) = &self.nodes[i + 1];
            let slope = (y1 - y0) / (x1 - x0);
            if slope == Rational::one() {
                if y0 == x0 {
                    // Whole piece lies on the diagonal.
                    found.push((
                        Interval::new(x0.clone(), x1.clone()).unwrap(),
                        FixedKind::Segment,
                    ));
                }
            } else {
                // slope*(x-x0)+y0 = x  =>  x = (y0 - slope*x0)/(1 - slope)
                let x = (y0 - &(&slope * x0)) / &(Rational::one() - slope.clone());
                if &x >= x0 && &x <= x1 {
                    found.push((Interval::point(x), FixedKind::Isolated));
                }
            }
        }
        found.sort_by(|a, b| a.0.lo().cmp(b.0.lo()).then(a.0.hi().cmp(b.0.hi())));
        let mut merged: Vec<(Interval, FixedKind)> = Vec::new();
        for (iv, kind) in found {
            match merged.last_mut() {
                Some((last, last_kind)) if iv.lo() <= last.hi() => {
                    // Same point from adjacent pieces, or a point on a
                    // segment boundary, or two abutting segments.
                    if iv.hi() > last.hi() {
                        *last = Interval::new(last.lo().clone(), iv.hi().clone()).unwrap();
                    }
                    if kind == FixedKind::Segment {
                        *last_kind = FixedKind::Segment;
                    }
                }
                _ => merged.push((iv, kind)),
            }
        }
        merged
    }

    /// Exact `sup_x |f^n(x) - x|`, from the nodes of `f^n`.
    pub fn sup_displacement(&self, n: usize, budget: &PieceBudget) -> Result<Rational, MapError> {
        assert!(n >= 1, "sup_displacement requires n >= 1");
        let fn_map = self.iterate(n, budget)?;
        let mut best = Rational::zero();
        for (x, y) in fn_map.nodes() {
            let d = (y - x).abs();
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }

    /// Restriction to a subinterval `k` of the domain, with interpolated
    /// endpoint nodes. The codomain bound of the restriction is its exact
    /// value range.
    pub fn restrict(&self, k: &Interval) -> Result<PLMap, MapError> {
        let domain = self.domain();
        if !domain.contains_interval(k) || k.is_degenerate() {
            return Err(MapError::IntervalOutsideDomain {
                interval: k.clone(),
                domain,
            });
        }
        let mut nodes = vec![(k.lo().clone(), self.eval(k.lo())?)];
        for (x, y) in &self.nodes {
            if x > k.lo() && x < k.hi() {
                nodes.push((x.clone(), y.clone()));
            }
        }
        nodes.push((k.hi().clone(), self.eval(k.hi())?));
        PLMap::new(nodes)
    }
}

/// The tent map on [0,1], used pervasively in tests.
#[cfg(test)]
pub(crate) fn tent() -> PLMap {
    PLMap::new(vec![
        (Rational::from_int(0), Rational::from_int(0)),
        (Rational::ratio(1, 2), Rational::from_int(1)),
        (Rational::from_int(1), Rational::from_int(0)),
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn eval_tent_peak() {
        let t = tent();
        assert_eq!(t.eval(&q(1, 2)).unwrap(), Rational::from_int(1));
        assert_eq!(t.eval(&q(1, 3)).unwrap(), q(2, 3));
        assert_eq!(t.eval(&q(3, 4)).unwrap(), q(1, 2));
    }

    #[test]
    fn eval_remark1_breakpoint_continuity() {
        let f = corpus::builtin("remark1").unwrap().to_map().unwrap();
        // x + 3 and -7x + 51 agree at x = 6.
        assert_eq!(f.eval(&Rational::from_int(6)).unwrap(), Rational::from_int(9));
        assert_eq!(f.eval(&q(13, 2)).unwrap(), q(11, 2));
    }

    #[test]
    fn eval_at_nodes_returns_node_values() {
        let f = corpus::builtin("remark4").unwrap().to_map().unwrap();
        for (x, y) in f.nodes() {
            assert_eq!(&f.eval(x).unwrap(), y);
        }
    }

    #[test]
    fn eval_outside_domain_errors() {
        let t = tent();
        assert!(matches!(
            t.eval(&Rational::from_int(2)),
            Err(MapError::DomainError { .. })
        ));
    }

    #[test]
    fn compose_tent_with_itself_has_expected_nodes() {
        let t = tent();
        let t2 = t.compose(&t, &PieceBudget::default()).unwrap();
        let xs: Vec<Rational> = t2.nodes().iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(xs, vec![q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)]);
    }

    #[test]
    fn compose_with_identity_is_identity_on_nodes() {
        let f = corpus::builtin("example7").unwrap().to_map().unwrap();
        let id = PLMap::identity(&f.domain());
        let fi = f.compose(&id, &PieceBudget::default()).unwrap();
        assert_eq!(fi.nodes(), f.nodes());
    }

    #[test]
    fn compose_remark4_square_at_zero() {
        let f = corpus::builtin("remark4").unwrap().to_map().unwrap();
        let f2 = f.compose(&f, &PieceBudget::default()).unwrap();
        assert_eq!(f2.eval(&Rational::from_int(0)).unwrap(), q(1, 2));
    }

    #[test]
    fn iterate_lap_counts_double_for_tent() {
        let t = tent();
        let t3 = t.iterate(3, &PieceBudget::default()).unwrap();
        assert_eq!(t3.lap_count(), 8);
        assert_eq!(t3.piece_count(), 8);
        let t1 = t.iterate(1, &PieceBudget::default()).unwrap();
        assert_eq!(t1.nodes(), t.nodes());
    }

    #[test]
    fn remark1_integer_orbit_is_the_nine_cycle() {
        let f = corpus::builtin("remark1").unwrap().to_map().unwrap();
        let expected = [1i64, 4, 7, 2, 5, 8, 3, 6, 9, 1];
        let mut x = Rational::from_int(1);
        for v in &expected[1..] {
            x = f.eval(&x).unwrap();
            assert_eq!(x, Rational::from_int(*v));
        }
        let f3 = f.iterate(3, &PieceBudget::default()).unwrap();
        assert_eq!(f3.eval(&Rational::from_int(1)).unwrap(), Rational::from_int(2));
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let t = tent();
        let tiny = PieceBudget {
            max_pieces: 4,
            max_bits: 4096,
        };
        assert!(matches!(
            t.iterate(4, &tiny),
            Err(MapError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn image_examples() {
        let t = tent();
        assert_eq!(
            t.image(&Interval::ratio(0, 1, 1, 2)).unwrap(),
            Interval::ratio(0, 1, 1, 1)
        );
        let f = corpus::builtin("remark1").unwrap().to_map().unwrap();
        assert_eq!(
            f.image(&Interval::ratio(1, 1, 3, 1)).unwrap(),
            Interval::ratio(4, 1, 6, 1)
        );
        let p = Interval::point(q(1, 3));
        assert_eq!(t.image(&p).unwrap(), Interval::point(q(2, 3)));
    }

    #[test]
    fn preimage_examples() {
        let t = tent();
        assert_eq!(
            t.preimage(&Interval::ratio(1, 1, 1, 1)),
            vec![Interval::point(q(1, 2))]
        );
        assert_eq!(
            t.preimage(&Interval::ratio(1, 2, 1, 1)),
            vec![Interval::ratio(1, 4, 3, 4)]
        );
        // For the Remark 4 map, f(0) = 1/2 lands on the boundary of [0, 1/2],
        // so the preimage picks up the isolated point 0 as well.
        let f = corpus::builtin("remark4").unwrap().to_map().unwrap();
        assert_eq!(
            f.preimage(&Interval::ratio(0, 1, 1, 2)),
            vec![
                Interval::point(Rational::from_int(0)),
                Interval::ratio(1, 2, 1, 1)
            ]
        );
        // Empty preimage.
        assert!(t.preimage(&Interval::ratio(3, 2, 2, 1)).is_empty());
    }

    #[test]
    fn fixed_point_examples() {
        let t = tent();
        assert_eq!(
            t.fixed_points(),
            vec![
                (Interval::point(Rational::from_int(0)), FixedKind::Isolated),
                (Interval::point(q(2, 3)), FixedKind::Isolated),
            ]
        );
        let g = corpus::builtin("example7").unwrap().to_map().unwrap();
        assert_eq!(
            g.fixed_points(),
            vec![
                (Interval::point(Rational::from_int(0)), FixedKind::Isolated),
                (Interval::point(q(4, 3)), FixedKind::Isolated),
            ]
        );
        let id = PLMap::identity(&Interval::ratio(0, 1, 1, 1));
        assert_eq!(
            id.fixed_points(),
            vec![(Interval::ratio(0, 1, 1, 1), FixedKind::Segment)]
        );
    }

    #[test]
    fn sup_displacement_examples() {
        let b = PieceBudget::default();
        let t = tent();
        assert_eq!(t.sup_displacement(1, &b).unwrap(), Rational::from_int(1));
        let id = PLMap::identity(&Interval::ratio(0, 1, 1, 1));
        assert_eq!(id.sup_displacement(3, &b).unwrap(), Rational::zero());
        // Remark 4 map: |f(1) - 1| = 1 dominates |f(1/4) - 1/4| = 3/4.
        let f = corpus::builtin("remark4").unwrap().to_map().unwrap();
        assert_eq!(f.sup_displacement(1, &b).unwrap(), Rational::from_int(1));
        let d2 = f.sup_displacement(2, &b).unwrap();
        assert!(d2 > Rational::zero());
    }

    #[test]
    fn restrict_clips_nodes() {
        let f = corpus::builtin("remark4").unwrap().to_map().unwrap();
        let g = f.restrict(&Interval::ratio(1, 2, 1, 1)).unwrap();
        assert_eq!(g.nodes().len(), 2);
        assert_eq!(g.eval(&q(3, 4)).unwrap(), q(1, 4));
    }
}
