//! Finite-stage construction of scrambled families by nested interval
//! refinement, with exact replay verification.
//!
//! Each stage maintains a family of pairwise disjoint compact leaves indexed
//! by a seed number and a bit word. Steps pick an iteration time, then shrink
//! every leaf in scope to a subinterval whose image at that time lies inside
//! a recorded window. Because leaves only ever shrink, every recorded
//! containment remains true of the final leaves and can be replayed exactly
//! from the certificate alone.

use crate::corpus::MapSource;
use crate::covering::eventually_covers;
use crate::interval::Interval;
use crate::markov::{detect_markov, graph_certificate};
use crate::plmap::{MapError, PLMap, PieceBudget};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
/// Cap on the per-step covering horizon.
pub const DEFAULT_STEP_HORIZON: usize = 4096;

#[derive(Debug, Clone, Error)]
pub enum ScrambleError {
    #[error("map carries no mixing evidence (covering matrix not primitive); pass assume_mixing to override")]
    NoMixingEvidence,
    #[error("no qualifying time within horizon {horizon} at stage {stage}, step kind {kind}")]
    CoverageTimeout {
        stage: usize,
        kind: String,
        horizon: usize,
    },
    #[error("no room to seed fresh leaves inside {target}")]
    DisjointnessFailure { target: Interval },
    #[error("replay failure at stage {stage}, step {step}, leaf {leaf}: {detail}")]
    ReplayFailure {
        stage: usize,
        step: usize,
        leaf: String,
        detail: String,
    },
    #[error("certificate structure invalid: {0}")]
    StructureInvalid(String),
    #[error("tracked point {0} is not periodic (or exceeds the probe bound)")]
    TrackedPointNotPeriodic(Rational),
    #[error("map must satisfy the crossing condition for the square pipeline: {0}")]
    NotCrossingMap(String),
    #[error("forward orbit of {0} did not close within {1} steps")]
    OrbitClosureTooLarge(Rational, usize),
    #[error("refinement failed: {0}")]
    Refinement(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Times eligible for the recorded steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSet {
    All,
    /// Times congruent to `residue` mod `modulus`.
    Progression { modulus: usize, residue: usize },
}

impl TimeSet {
    pub fn contains(&self, n: usize) -> bool {
        match self {
            TimeSet::All => true,
            TimeSet::Progression { modulus, residue } => n % modulus == residue % modulus,
        }
    }
}

/// A periodic reference point with a chosen orbit point as its limit proxy;
/// recurrence times are then an exact arithmetic progression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackedPoint {
    pub x: Rational,
    pub orbit: Vec<Rational>,
    /// Index into `orbit` of the proxy target y.
    pub target_index: usize,
}

impl TrackedPoint {
    pub fn target(&self) -> &Rational {
        &self.orbit[self.target_index]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScrambleConfig {
    pub map: MapSource,
    pub stages: usize,
    pub time_set: TimeSet,
    pub proximality_points: Vec<Rational>,
    pub tracked: Vec<TrackedPoint>,
    pub step_horizon: usize,
    pub budget: PieceBudget,
    /// Skip the covering-matrix mixing check (for maps certified elsewhere).
    pub assume_mixing: bool,
}

impl ScrambleConfig {
    /// Defaults: proximality at the first interior fixed point then the
    /// domain midpoint, no tracking, all times eligible.
    pub fn defaults(map: MapSource, stages: usize) -> Result<Self, ScrambleError> {
        let f = map
            .to_map()
            .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
        let domain = f.domain();
        let mut proximality_points = Vec::new();
        for (iv, _) in f.fixed_points() {
            if domain.interior_contains(iv.lo()) {
                proximality_points.push(iv.lo().clone());
                break;
            }
        }
        proximality_points.push(domain.midpoint());
        let quarter = domain.width() / Rational::from_int(4);
        proximality_points.push(domain.lo() + &quarter);
        proximality_points.push(domain.hi() - &quarter);
        Ok(ScrambleConfig {
            map,
            stages,
            time_set: TimeSet::All,
            proximality_points,
            tracked: Vec::new(),
            step_horizon: DEFAULT_STEP_HORIZON,
            budget: PieceBudget::default(),
            assume_mixing: false,
        })
    }

    /// Registers a periodic tracked point; errors unless the orbit closes
    /// exactly within `probe` steps.
    pub fn track_periodic(
        &mut self,
        f: &PLMap,
        x: Rational,
        probe: usize,
    ) -> Result<(), ScrambleError> {
        let mut orbit = vec![x.clone()];
        let mut cur = x.clone();
        for _ in 0..probe {
            cur = f.eval(&cur)?;
            if cur == x {
                // Proxy defaults to the point farthest from x along the orbit.
                let target_index = orbit
                    .iter()
                    .enumerate()
                    .max_by_key(|(_, p)| (&x - *p).abs())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                self.tracked.push(TrackedPoint {
                    x,
                    orbit,
                    target_index,
                });
                return Ok(());
            }
            orbit.push(cur.clone());
        }
        Err(ScrambleError::TrackedPointNotPeriodic(x))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub seed: usize,
    pub word: Vec<u8>,
    pub interval: Interval,
}

impl Leaf {
    pub fn label(&self) -> String {
        let bits: String = self.word.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
        format!("K^({}):{}", self.seed, bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Separation,
    SeedSeparation { split: usize },
    Proximality { index: usize },
    Density { divisor: usize },
    TrackingNear { index: usize },
    TrackingFar { index: usize },
}

impl StepKind {
    fn name(&self) -> String {
        match self {
            StepKind::Separation => "SEPARATION".into(),
            StepKind::SeedSeparation { split } => format!("SEED_SEPARATION(r={split})"),
            StepKind::Proximality { index } => format!("PROXIMALITY(m={index})"),
            StepKind::Density { divisor } => format!("DENSITY(divisor={divisor})"),
            StepKind::TrackingNear { index } => format!("TRACKING_NEAR(m={index})"),
            StepKind::TrackingFar { index } => format!("TRACKING_FAR(m={index})"),
        }
    }
}

/// Window assignment of one step: which window each leaf's image must enter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowAssignment {
    Uniform { window: Interval },
    /// Leaves whose last word bit is 0 go to `zero`, the rest to `one`.
    ByLastBit { zero: Interval, one: Interval },
    /// Seeds <= split go to `low`, the rest to `high`.
    BySeed { split: usize, low: Interval, high: Interval },
}

impl WindowAssignment {
    pub fn window_for(&self, leaf: &Leaf) -> &Interval {
        match self {
            WindowAssignment::Uniform { window } => window,
            WindowAssignment::ByLastBit { zero, one } => {
                if *leaf.word.last().unwrap() == 0 {
                    zero
                } else {
                    one
                }
            }
            WindowAssignment::BySeed { split, low, high } => {
                if leaf.seed <= *split {
                    low
                } else {
                    high
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub time: usize,
    pub shift: usize,
    pub kind: StepKind,
    pub assignment: WindowAssignment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScrambleStage {
    pub index: usize,
    /// Window resolution n for this stage; all windows have length < 1/n.
    pub resolution: usize,
    pub a_target: Rational,
    pub b_target: Rational,
    /// Closed representation of the base open set U for this stage.
    pub base_open: Interval,
    /// Final leaves at the end of the stage.
    pub leaves: Vec<Leaf>,
    pub steps: Vec<ScheduleStep>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractedPoint {
    pub seed: usize,
    pub word: Vec<u8>,
    pub point: Rational,
    /// Prefix-expanded symbolic code of the word.
    pub code: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScrambleCertificate {
    pub schema_version: u32,
    pub map: MapSource,
    pub time_set: TimeSet,
    pub stage_count: usize,
    pub proximality_points: Vec<Rational>,
    pub tracked: Vec<TrackedPoint>,
    pub stages: Vec<ScrambleStage>,
    pub extracted: Vec<ExtractedPoint>,
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn prefix_code(word: &[u8]) -> String {
    let mut out = String::new();
    for end in 1..=word.len() {
        if end > 1 {
            out.push(' ');
        }
        for b in &word[..end] {
            out.push(if *b == 0 { '0' } else { '1' });
        }
    }
    out
}

/// Window of length < 1/n around `center`, clipped to the domain.
pub fn window(domain: &Interval, center: &Rational, n: usize) -> Interval {
    let h = Rational::ratio(1, 4 * n as i64);
    let lo = (center - &h).max(domain.lo().clone());
    let hi = (center + &h).min(domain.hi().clone());
    Interval::new(lo, hi).expect("window is nonempty for centers in the domain")
}

/// Far window: same width rule, placed at the domain endpoint farthest from
/// the reference point.
fn far_window(domain: &Interval, reference: &Rational, n: usize) -> Interval {
    let dist_lo = (reference - domain.lo()).abs();
    let dist_hi = (domain.hi() - reference).abs();
    let endpoint = if dist_lo >= dist_hi {
        domain.lo().clone()
    } else {
        domain.hi().clone()
    };
    window(domain, &endpoint, n)
}

/// Separation targets for a stage: points approaching the domain endpoints.
fn stage_targets(domain: &Interval, stage: usize) -> (Rational, Rational) {
    let inset = domain.width() / Rational::from_int(1i64 << (stage + 2));
    (domain.lo() + &inset, domain.hi() - &inset)
}

/// Base open set for each stage: breadth-first dyadic refinement of the
/// domain interior: whole, left half, right half, four quarters, ...
fn base_open(domain: &Interval, index: usize) -> Interval {
    assert!(index >= 1);
    // Level d has 2^d intervals of width |I|/2^d; index 1 is level 0.
    let mut level = 0usize;
    let mut first_of_level = 1usize;
    while index >= first_of_level + (1 << level) {
        first_of_level += 1 << level;
        level += 1;
    }
    let pos = index - first_of_level;
    let width = domain.width() / Rational::from_int(1i64 << level);
    let lo = domain.lo() + &(&width * &Rational::from_int(pos as i64));
    Interval::new(lo.clone(), lo + &width).unwrap()
}

/// Shrinks `k` to a subinterval whose image under `f^exponent` lies inside
/// `target`, by stepwise pullback of a component. The target must be covered:
/// `f^exponent(k)` must contain `target`.
fn refine_to_window(
    f: &PLMap,
    k: &Interval,
    exponent: usize,
    target: &Interval,
) -> Result<Interval, ScrambleError> {
    let mut forward = Vec::with_capacity(exponent + 1);
    forward.push(k.clone());
    let mut cur = k.clone();
    for _ in 0..exponent {
        cur = f.image(&cur)?;
        forward.push(cur.clone());
    }
    if !forward[exponent].contains_interval(target) {
        return Err(ScrambleError::Refinement(format!(
            "image {} at exponent {exponent} does not cover target {target}",
            forward[exponent]
        )));
    }
    let mut t = target.clone();
    for j in (0..exponent).rev() {
        let pieces = f.preimage(&t);
        let mut chosen: Option<Interval> = None;
        for piece in pieces {
            if let Some(c) = piece.intersect(&forward[j]) {
                if !c.is_degenerate() {
                    chosen = Some(c);
                    break;
                }
            }
        }
        t = chosen.ok_or_else(|| {
            ScrambleError::Refinement(format!(
                "no nondegenerate pullback component inside {} for target {}",
                forward[j], t
            ))
        })?;
    }
    Ok(t)
}

/// Least time > prev with the covering and congruence constraints, within
/// the horizon: the image of every leaf at time + shift must cover its
/// window's hull requirement (precomputed by the caller as per-leaf
/// thresholds).
struct TimePicker<'a> {
    time_set: &'a TimeSet,
    horizon: usize,
}

impl<'a> TimePicker<'a> {
    fn pick(
        &self,
        prev: usize,
        min_required: usize,
        divisor: usize,
        congruence: Option<(usize, usize)>,
        in_time_set: bool,
    ) -> Option<usize> {
        let start = (prev + 1).max(min_required).max(1);
        (start..=self.horizon).find(|&t| {
            (!in_time_set || self.time_set.contains(t))
                && t % divisor == 0
                && congruence.map_or(true, |(m, r)| t % m == r % m)
        })
    }
}

struct Builder<'a> {
    f: &'a PLMap,
    cfg: &'a ScrambleConfig,

    leaves: Vec<Leaf>,
    stages: Vec<ScrambleStage>,
    last_time: usize,
}

impl<'a> Builder<'a> {
    /// Covering threshold: least N valid through the horizon for every leaf
    /// at the given shift, for target `hull`.
    fn covering_threshold(
        &self,
        hull: &Interval,
        shift: usize,
        stage: usize,
        kind: &StepKind,
    ) -> Result<usize, ScrambleError> {
        let mut needed = 1usize;
        for leaf in &self.leaves {
            let res = eventually_covers(self.f, &leaf.interval, hull, self.cfg.step_horizon)?;
            match res.first_n {
                Some(n) => needed = needed.max(n.saturating_sub(shift).max(1)),
                None => {
                    return Err(ScrambleError::CoverageTimeout {
                        stage,
                        kind: kind.name(),
                        horizon: self.cfg.step_horizon,
                    })
                }
            }
        }
        Ok(needed)
    }

    /// Runs one refinement step: picks a time, shrinks every leaf in scope so
    /// its image at `time + shift` lies inside its assigned window, records
    /// the step.
    fn run_step(
        &mut self,
        stage: usize,
        kind: StepKind,
        shift: usize,
        assignment: WindowAssignment,
        steps: &mut Vec<ScheduleStep>,
        divisor: usize,
        congruence: Option<(usize, usize)>,
        in_time_set: bool,
    ) -> Result<(), ScrambleError> {
        // All windows of the assignment must be covered by every leaf's
        // image, so the threshold is computed against the hull of windows.
        let hull = match &assignment {
            WindowAssignment::Uniform { window } => window.clone(),
            WindowAssignment::ByLastBit { zero, one } => zero.hull(one),
            WindowAssignment::BySeed { low, high, .. } => low.hull(high),
        };
        let threshold = self.covering_threshold(&hull, shift, stage, &kind)?;
        let picker = TimePicker {
            time_set: &self.cfg.time_set,
            horizon: self.cfg.step_horizon,
        };
        let time = picker
            .pick(self.last_time, threshold, divisor, congruence, in_time_set)
            .ok_or_else(|| ScrambleError::CoverageTimeout {
                stage,
                kind: kind.name(),
                horizon: self.cfg.step_horizon,
            })?;
        let mut refined = Vec::with_capacity(self.leaves.len());
        for leaf in &self.leaves {
            let target = assignment.window_for(leaf).clone();
            let shrunk = refine_to_window(self.f, &leaf.interval, time + shift, &target)?;
            refined.push(Leaf {
                seed: leaf.seed,
                word: leaf.word.clone(),
                interval: shrunk,
            });
        }
        self.leaves = refined;
        self.last_time = time;
        steps.push(ScheduleStep {
            time,
            shift,
            kind,
            assignment,
        });
        Ok(())
    }

    /// Splits every leaf into a bit-0 and a bit-1 child via the stage's first
    /// separation step: the children refine into the two disjoint windows,
    /// which forces the children disjoint.
    fn split_step(
        &mut self,
        stage: usize,
        w0: &Interval,
        w1: &Interval,
        steps: &mut Vec<ScheduleStep>,
    ) -> Result<(), ScrambleError> {
        let hull = w0.hull(w1);
        let threshold = self.covering_threshold(&hull, 0, stage, &StepKind::Separation)?;
        let picker = TimePicker {
            time_set: &self.cfg.time_set,
            horizon: self.cfg.step_horizon,
        };
        let time = picker
            .pick(self.last_time, threshold, 1, None, true)
            .ok_or_else(|| ScrambleError::CoverageTimeout {
                stage,
                kind: StepKind::Separation.name(),
                horizon: self.cfg.step_horizon,
            })?;
        let mut children = Vec::with_capacity(self.leaves.len() * 2);
        for leaf in &self.leaves {
            for (bit, w) in [(0u8, w0), (1u8, w1)] {
                let shrunk = refine_to_window(self.f, &leaf.interval, time, w)?;
                let mut word = leaf.word.clone();
                word.push(bit);
                children.push(Leaf {
                    seed: leaf.seed,
                    word,
                    interval: shrunk,
                });
            }
        }
        self.leaves = children;
        self.last_time = time;
        steps.push(ScheduleStep {
            time,
            shift: 0,
            kind: StepKind::Separation,
            assignment: WindowAssignment::ByLastBit {
                zero: w0.clone(),
                one: w1.clone(),
            },
        });
        Ok(())
    }

    /// Plants `count` fresh pairwise disjoint leaves for a new seed inside
    /// `target`, avoiding all existing leaves.
    fn plant(
        &mut self,
        seed: usize,
        word_len: usize,
        target: &Interval,
    ) -> Result<(), ScrambleError> {
        let count = 1usize << word_len;
        // Core of the open target, then the widest free gap inside it.
        let pad = target.width() / Rational::from_int(16);
        let core = Interval::new(target.lo() + &pad, target.hi() - &pad).unwrap();
        let mut blocked: Vec<Interval> = self
            .leaves
            .iter()
            .filter(|l| l.interval.intersects(&core))
            .map(|l| l.interval.clone())
            .collect();
        blocked.sort_by(|a, b| a.lo().cmp(b.lo()));
        let mut gaps: Vec<Interval> = Vec::new();
        let mut cursor = core.lo().clone();
        for b in &blocked {
            if b.lo() > &cursor {
                gaps.push(Interval::new(cursor.clone(), b.lo().clone()).unwrap());
            }
            cursor = cursor.max(b.hi().clone());
        }
        if &cursor < core.hi() {
            gaps.push(Interval::new(cursor, core.hi().clone()).unwrap());
        }
        let widest = gaps
            .into_iter()
            .max_by(|a, b| a.width().cmp(&b.width()))
            .filter(|g| !g.is_degenerate())
            .ok_or_else(|| ScrambleError::DisjointnessFailure {
                target: target.clone(),
            })?;
        // Middle third of each of `count` equal slots keeps the family
        // disjoint with room to spare.
        let slot = widest.width() / Rational::from_int(count as i64);
        let third = &slot / &Rational::from_int(3);
        for i in 0..count {
            let slot_lo = widest.lo() + &(&slot * &Rational::from_int(i as i64));
            let lo = &slot_lo + &third;
            let hi = &slot_lo + &(&third * &Rational::from_int(2));
            let word: Vec<u8> = (0..word_len)
                .map(|b| ((i >> (word_len - 1 - b)) & 1) as u8)
                .collect();
            self.leaves.push(Leaf {
                seed,
                word,
                interval: Interval::new(lo, hi).unwrap(),
            });
        }
        Ok(())
    }

    /// Final width clamp for a stage: every leaf strictly under the bound.
    fn clamp_widths(&mut self, bound: &Rational) {
        for leaf in &mut self.leaves {
            if &leaf.interval.width() >= bound {
                let mid = leaf.interval.midpoint();
                let quarter = bound / &Rational::from_int(4);
                leaf.interval =
                    Interval::new(&mid - &quarter, &mid + &quarter).unwrap();
            }
        }
    }
}

/// Resolution for a stage: at least the previous stage's last recorded time
/// plus one, and large enough that the two separation windows are disjoint
/// and tracked-orbit windows isolate their targets.
fn stage_resolution(
    prev_last_time: usize,
    a: &Rational,
    b: &Rational,
    tracked: &[TrackedPoint],
) -> usize {
    let mut n = prev_last_time + 1;
    // The two windows have width 1/(2n) each; their total must stay under
    // the target gap so the certified separation bound
    // |a - b| - (width_a + width_b) is positive (this also keeps the windows
    // disjoint).
    let gap = (b - a).abs();
    while Rational::ratio(1, n as i64) >= gap {
        n += 1;
    }
    // Windows around tracked targets must exclude the rest of the orbit.
    for t in tracked {
        let y = t.target();
        for p in &t.orbit {
            if p == y {
                continue;
            }
            let d = (p - y).abs();
            while Rational::ratio(1, 2 * n as i64) >= d {
                n += 1;
            }
        }
    }
    n
}

pub fn build_scramble(cfg: &ScrambleConfig) -> Result<ScrambleCertificate, ScrambleError> {
    let f = cfg
        .map
        .to_map()
        .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
    f.require_self_map()?;
    if !cfg.assume_mixing {
        let mixing = detect_markov(&f, 64)
            .ok()
            .map(|p| graph_certificate(&p, 1).primitive)
            .unwrap_or(false);
        if !mixing {
            return Err(ScrambleError::NoMixingEvidence);
        }
    }
    for t in &cfg.tracked {
        // Orbit really is a cycle through x.
        let mut cur = t.x.clone();
        for p in &t.orbit {
            if p != &cur {
                return Err(ScrambleError::TrackedPointNotPeriodic(t.x.clone()));
            }
            cur = f.eval(&cur)?;
        }
        if cur != t.x {
            return Err(ScrambleError::TrackedPointNotPeriodic(t.x.clone()));
        }
    }
    let domain = f.domain();
    let mut builder = Builder {
        f: &f,
        cfg,
        leaves: Vec::new(),
        stages: Vec::new(),
        last_time: 0,
    };

    for stage in 1..=cfg.stages {
        let u = base_open(&domain, stage);
        builder.plant(stage, stage, &u)?;
        let (a, b) = stage_targets(&domain, stage);
        let n = stage_resolution(builder.last_time, &a, &b, &cfg.tracked);
        let wa = window(&domain, &a, n);
        let wb = window(&domain, &b, n);
        let mut steps = Vec::new();

        // (i) separation split on the last bit.
        builder.split_step(stage, &wa, &wb, &mut steps)?;
        // (ii) shifted separation for s = 1..stage.
        for s in 1..=stage {
            builder.run_step(
                stage,
                StepKind::Separation,
                s,
                WindowAssignment::ByLastBit {
                    zero: wa.clone(),
                    one: wb.clone(),
                },
                &mut steps,
                1,
                None,
                true,
            )?;
        }
        // (iii) seed separation for r = 1..stage-1.
        for r in 1..stage {
            builder.run_step(
                stage,
                StepKind::SeedSeparation { split: r },
                0,
                WindowAssignment::BySeed {
                    split: r,
                    low: wa.clone(),
                    high: wb.clone(),
                },
                &mut steps,
                1,
                None,
                true,
            )?;
        }
        // (iv) proximality to each reference point.
        for m in 1..=stage.min(cfg.proximality_points.len()) {
            let v = window(&domain, &cfg.proximality_points[m - 1], n);
            builder.run_step(
                stage,
                StepKind::Proximality { index: m },
                0,
                WindowAssignment::Uniform { window: v },
                &mut steps,
                1,
                None,
                true,
            )?;
        }
        // (v) density: time divisible by stage!, all leaves into the core of
        // the stage's base open set.
        let u_pad = u.width() / Rational::from_int(4);
        let u_core = Interval::new(u.lo() + &u_pad, u.hi() - &u_pad).unwrap();
        builder.run_step(
            stage,
            StepKind::Density {
                divisor: factorial(stage),
            },
            0,
            WindowAssignment::Uniform { window: u_core },
            &mut steps,
            factorial(stage),
            None,
            false,
        )?;
        // (vi) tracking steps for each registered periodic point.
        for m in 1..=stage.min(cfg.tracked.len()) {
            let t = &cfg.tracked[m - 1];
            let period = t.orbit.len();
            let congruence = (period, t.target_index % period);
            let near = window(&domain, t.target(), n);
            builder.run_step(
                stage,
                StepKind::TrackingNear { index: m },
                0,
                WindowAssignment::Uniform { window: near },
                &mut steps,
                1,
                Some(congruence),
                false,
            )?;
            let far = far_window(&domain, t.target(), n);
            builder.run_step(
                stage,
                StepKind::TrackingFar { index: m },
                0,
                WindowAssignment::Uniform { window: far },
                &mut steps,
                1,
                Some(congruence),
                false,
            )?;
        }

        // Width law for the stage.
        let bound = Rational::ratio(1, 1i64 << (2 * stage + 1));
        builder.clamp_widths(&bound);
        builder.leaves.sort_by(|x, y| {
            x.seed
                .cmp(&y.seed)
                .then_with(|| x.word.cmp(&y.word))
        });
        builder.stages.push(ScrambleStage {
            index: stage,
            resolution: n,
            a_target: a,
            b_target: b,
            base_open: u,
            leaves: builder.leaves.clone(),
            steps,
        });
    }

    let extracted = builder
        .leaves
        .iter()
        .map(|l| ExtractedPoint {
            seed: l.seed,
            word: l.word.clone(),
            point: l.interval.midpoint(),
            code: prefix_code(&l.word),
        })
        .collect();
    Ok(ScrambleCertificate {
        schema_version: SCHEMA_VERSION,
        map: cfg.map.clone(),
        time_set: cfg.time_set.clone(),
        stage_count: cfg.stages,
        proximality_points: cfg.proximality_points.clone(),
        tracked: cfg.tracked.clone(),
        stages: builder.stages,
        extracted,
    })
}

/// Summary of a successful exact replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub stages: usize,
    pub steps_checked: usize,
    pub containments_checked: usize,
    pub width_checks: usize,
    pub nesting_checks: usize,
    pub disjointness_checks: usize,
}

/// Replays every recorded fact of the certificate against the map rebuilt
/// from the embedded source: step containments via exact image iteration,
/// leaf widths, nesting, disjointness, time monotonicity, divisibility and
/// tracked-point visits.
pub fn verify_certificate(cert: &ScrambleCertificate) -> Result<VerifyReport, ScrambleError> {
    if cert.schema_version != SCHEMA_VERSION {
        return Err(ScrambleError::StructureInvalid(format!(
            "unsupported schema version {}",
            cert.schema_version
        )));
    }
    let f = cert
        .map
        .to_map()
        .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
    f.require_self_map()?;
    if cert.stages.len() != cert.stage_count {
        return Err(ScrambleError::StructureInvalid(format!(
            "stage count {} does not match stages recorded {}",
            cert.stage_count,
            cert.stages.len()
        )));
    }
    let mut steps_checked = 0usize;
    let mut containments = 0usize;
    let mut width_checks = 0usize;
    let mut nesting_checks = 0usize;
    let mut disjointness_checks = 0usize;
    let mut prev_time = 0usize;

    for (si, stage) in cert.stages.iter().enumerate() {
        let ell = stage.index;
        if ell != si + 1 {
            return Err(ScrambleError::StructureInvalid(format!(
                "stage indices must be 1..=L in order, found {ell} at position {si}"
            )));
        }
        // Leaf family shape: seeds 1..=ell, all words of length ell+1.
        let expected = ell * (1 << (ell + 1));
        if stage.leaves.len() != expected {
            return Err(ScrambleError::StructureInvalid(format!(
                "stage {ell}: expected {expected} leaves, found {}",
                stage.leaves.len()
            )));
        }
        for leaf in &stage.leaves {
            if leaf.seed < 1 || leaf.seed > ell || leaf.word.len() != ell + 1 {
                return Err(ScrambleError::StructureInvalid(format!(
                    "stage {ell}: leaf {} has invalid seed or word length",
                    leaf.label()
                )));
            }
        }
        // Width law.
        let bound = Rational::ratio(1, 1i64 << (2 * ell + 1));
        for leaf in &stage.leaves {
            width_checks += 1;
            if leaf.interval.width() >= bound {
                return Err(ScrambleError::ReplayFailure {
                    stage: ell,
                    step: 0,
                    leaf: leaf.label(),
                    detail: format!(
                        "leaf width {} violates the stage bound {}",
                        leaf.interval.width(),
                        bound
                    ),
                });
            }
        }
        // Pairwise disjointness (at most shared endpoints are forbidden too:
        // the construction keeps interiors and endpoints apart, so require
        // full disjointness here).
        let mut sorted: Vec<&Leaf> = stage.leaves.iter().collect();
        sorted.sort_by(|a, b| a.interval.lo().cmp(b.interval.lo()));
        for pair in sorted.windows(2) {
            disjointness_checks += 1;
            if pair[1].interval.lo() <= pair[0].interval.hi() {
                return Err(ScrambleError::ReplayFailure {
                    stage: ell,
                    step: 0,
                    leaf: pair[1].label(),
                    detail: format!(
                        "leaf overlaps its neighbour {}",
                        pair[0].label()
                    ),
                });
            }
        }
        // Nesting into the previous stage by word prefix, for seeds that
        // existed then.
        if si > 0 {
            let prev = &cert.stages[si - 1];
            for leaf in &stage.leaves {
                if leaf.seed > prev.index {
                    continue;
                }
                nesting_checks += 1;
                let parent = prev
                    .leaves
                    .iter()
                    .find(|p| p.seed == leaf.seed && p.word[..] == leaf.word[..ell]);
                match parent {
                    Some(p) if p.interval.contains_interval(&leaf.interval) => {}
                    Some(p) => {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: 0,
                            leaf: leaf.label(),
                            detail: format!("not nested inside parent {}", p.label()),
                        })
                    }
                    None => {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: 0,
                            leaf: leaf.label(),
                            detail: "parent leaf missing in previous stage".into(),
                        })
                    }
                }
            }
        }
        // Steps: time discipline and exact containments against the stage's
        // final leaves.
        for (ti, step) in stage.steps.iter().enumerate() {
            steps_checked += 1;
            if step.time <= prev_time {
                return Err(ScrambleError::ReplayFailure {
                    stage: ell,
                    step: ti,
                    leaf: String::new(),
                    detail: format!(
                        "time {} does not increase past {}",
                        step.time, prev_time
                    ),
                });
            }
            prev_time = step.time;
            match &step.kind {
                StepKind::Density { divisor } => {
                    if *divisor != factorial(ell) || step.time % divisor != 0 {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: ti,
                            leaf: String::new(),
                            detail: format!(
                                "density time {} not divisible by {}!",
                                step.time, ell
                            ),
                        });
                    }
                    if !stage.base_open.contains_interval(match &step.assignment {
                        WindowAssignment::Uniform { window } => window,
                        _ => {
                            return Err(ScrambleError::ReplayFailure {
                                stage: ell,
                                step: ti,
                                leaf: String::new(),
                                detail: "density step must carry a uniform window".into(),
                            })
                        }
                    }) {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: ti,
                            leaf: String::new(),
                            detail: "density window escapes the stage's base open set".into(),
                        });
                    }
                }
                StepKind::Separation | StepKind::SeedSeparation { .. } | StepKind::Proximality { .. } => {
                    if !cert.time_set.contains(step.time) {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: ti,
                            leaf: String::new(),
                            detail: format!("time {} outside the configured time set", step.time),
                        });
                    }
                }
                StepKind::TrackingNear { index } | StepKind::TrackingFar { index } => {
                    let t = cert.tracked.get(index - 1).ok_or_else(|| {
                        ScrambleError::StructureInvalid(format!(
                            "tracking step references missing tracked point {index}"
                        ))
                    })?;
                    let visit = f.eval_iter(&t.x, step.time)?;
                    let near = window(&f.domain(), t.target(), stage.resolution);
                    if !near.contains(&visit) {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: ti,
                            leaf: format!("tracked point {}", t.x),
                            detail: format!(
                                "f^{}(x) = {} misses the near window {}",
                                step.time, visit, near
                            ),
                        });
                    }
                }
            }
            // Window length law.
            let windows: Vec<&Interval> = match &step.assignment {
                WindowAssignment::Uniform { window } => vec![window],
                WindowAssignment::ByLastBit { zero, one } => vec![zero, one],
                WindowAssignment::BySeed { low, high, .. } => vec![low, high],
            };
            let max_len = Rational::ratio(1, stage.resolution as i64);
            for w in &windows {
                if matches!(step.kind, StepKind::Density { .. }) {
                    continue; // density windows follow the base open set, not 1/n
                }
                if w.width() >= max_len {
                    return Err(ScrambleError::ReplayFailure {
                        stage: ell,
                        step: ti,
                        leaf: String::new(),
                        detail: format!(
                            "window {w} longer than 1/{}",
                            stage.resolution
                        ),
                    });
                }
            }
            for leaf in &stage.leaves {
                containments += 1;
                let target = step.assignment.window_for(leaf);
                let image = f.image_iter(&leaf.interval, step.time + step.shift)?;
                if !target.contains_interval(&image) {
                    return Err(ScrambleError::ReplayFailure {
                        stage: ell,
                        step: ti,
                        leaf: leaf.label(),
                        detail: format!(
                            "f^{}+{}(leaf) = {} escapes window {}",
                            step.time, step.shift, image, target
                        ),
                    });
                }
            }
        }
    }
    // Extracted points are midpoints of final leaves.
    if let Some(last) = cert.stages.last() {
        for e in &cert.extracted {
            let leaf = last
                .leaves
                .iter()
                .find(|l| l.seed == e.seed && l.word == e.word)
                .ok_or_else(|| {
                    ScrambleError::StructureInvalid(format!(
                        "extracted point for missing leaf seed {} word {:?}",
                        e.seed, e.word
                    ))
                })?;
            if !leaf.interval.contains(&e.point) {
                return Err(ScrambleError::ReplayFailure {
                    stage: last.index,
                    step: 0,
                    leaf: leaf.label(),
                    detail: format!("extracted point {} escapes its leaf", e.point),
                });
            }
        }
    }
    Ok(VerifyReport {
        stages: cert.stages.len(),
        steps_checked,
        containments_checked: containments,
        width_checks,
        nesting_checks,
        disjointness_checks,
    })
}

/// One certified separation fact: at the recorded time the two points'
/// images lie in windows around the stage targets, so their distance is at
/// least the target gap minus both window widths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationClaim {
    pub first: ExtractedPoint,
    pub second: ExtractedPoint,
    pub stage: usize,
    pub time: usize,
    pub lower_bound: Rational,
}

/// One certified proximality fact: at the recorded time every image lies in
/// one window, so pair diameters are at most the window width.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProximityClaim {
    pub stage: usize,
    pub time: usize,
    pub reference: Rational,
    pub upper_bound: Rational,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScrambleReport {
    pub separations: Vec<SeparationClaim>,
    pub proximities: Vec<ProximityClaim>,
    /// (n, sup |f^n - id|) for small n; the displacement gap is their inf.
    pub displacement: Vec<(usize, Rational)>,
}

/// Derives the separation/proximality bounds recorded in the certificate.
/// The certificate must verify first; this routine re-verifies the facts it
/// uses.
pub fn scramble_report(
    cert: &ScrambleCertificate,
    delta_bound: usize,
    budget: &PieceBudget,
) -> Result<ScrambleReport, ScrambleError> {
    let f = cert
        .map
        .to_map()
        .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
    let mut separations = Vec::new();
    let mut proximities = Vec::new();
    for stage in &cert.stages {
        let ell = stage.index;
        // Stage separation windows for bound arithmetic.
        let split = stage
            .steps
            .iter()
            .find(|s| matches!(s.kind, StepKind::Separation) && s.shift == 0);
        if let Some(step) = split {
            if let WindowAssignment::ByLastBit { zero, one } = &step.assignment {
                let gap = (&stage.b_target - &stage.a_target).abs();
                let bound = &gap - &(&zero.width() + &one.width());
                for (i, p) in cert.extracted.iter().enumerate() {
                    for q in cert.extracted.iter().skip(i + 1) {
                        if p.seed > ell || q.seed > ell {
                            continue;
                        }
                        if p.word[ell] == q.word[ell] {
                            continue;
                        }
                        // Exact recheck of the two images at the recorded time.
                        let ip = f.eval_iter(&p.point, step.time)?;
                        let iq = f.eval_iter(&q.point, step.time)?;
                        let dist = (&ip - &iq).abs();
                        if dist < bound {
                            return Err(ScrambleError::ReplayFailure {
                                stage: ell,
                                step: 0,
                                leaf: format!("pair ({}, {})", p.point, q.point),
                                detail: format!(
                                    "separation {} below certified bound {}",
                                    dist, bound
                                ),
                            });
                        }
                        separations.push(SeparationClaim {
                            first: p.clone(),
                            second: q.clone(),
                            stage: ell,
                            time: step.time,
                            lower_bound: bound.clone(),
                        });
                    }
                }
            }
        }
        for step in &stage.steps {
            if let (StepKind::Proximality { index }, WindowAssignment::Uniform { window }) =
                (&step.kind, &step.assignment)
            {
                let eligible: Vec<&ExtractedPoint> = cert
                    .extracted
                    .iter()
                    .filter(|e| e.seed <= ell)
                    .collect();
                // Recheck: every eligible image inside the window.
                for e in &eligible {
                    let img = f.eval_iter(&e.point, step.time)?;
                    if !window.contains(&img) {
                        return Err(ScrambleError::ReplayFailure {
                            stage: ell,
                            step: 0,
                            leaf: format!("point {}", e.point),
                            detail: format!("image escapes proximality window {window}"),
                        });
                    }
                }
                let n = eligible.len();
                proximities.push(ProximityClaim {
                    stage: ell,
                    time: step.time,
                    reference: cert.proximality_points[index - 1].clone(),
                    upper_bound: window.width(),
                    pairs: n * n.saturating_sub(1) / 2,
                });
            }
        }
    }
    let mut displacement = Vec::new();
    for n in 1..=delta_bound {
        displacement.push((n, f.sup_displacement(n, budget)?));
    }
    Ok(ScrambleReport {
        separations,
        proximities,
        displacement,
    })
}

/// Certificate of the invariant family assembled from a scramble built for
/// the square map on one side of the crossing fixed point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquareScrambleCertificate {
    pub schema_version: u32,
    /// The original map (the base certificate holds the restricted square).
    pub map: MapSource,
    pub z: Rational,
    pub side: Interval,
    pub base: ScrambleCertificate,
    /// Extracted points of the base construction, inside `side`.
    pub s_hat: Vec<Rational>,
    /// Forward-orbit closure of s_hat under the original map.
    pub family: Vec<Rational>,
    /// Odd times of the original map derived from recorded square times.
    pub straddle_times: Vec<usize>,
    pub separation: Option<SeparationClaim>,
}

/// Builds the invariant family for a crossing-condition map: the square map
/// restricted to one side of z is mixing there, a scramble certificate is
/// built for it, and the extracted family is closed under the original map.
/// Every claim is exact and finite.
pub fn build_invariant_via_square(
    map: &MapSource,
    stages: usize,
    budget: &PieceBudget,
) -> Result<SquareScrambleCertificate, ScrambleError> {
    let f = map
        .to_map()
        .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
    let classification = crate::chaos::classify_conditions(&f)
        .map_err(|e| ScrambleError::NotCrossingMap(e.to_string()))?;
    let z = match &classification.verdict {
        crate::chaos::Verdict::Cond3 { z, .. } => z.clone(),
        other => {
            return Err(ScrambleError::NotCrossingMap(format!(
                "classification is {}, need the crossing condition",
                other.name()
            )))
        }
    };
    let domain = f.domain();
    let side = Interval::new(domain.lo().clone(), z.clone()).unwrap();
    // The square must fix the side exactly for the restriction to be a
    // self-map.
    let side_image = f.image_iter(&side, 2)?;
    if side_image != side {
        return Err(ScrambleError::NotCrossingMap(format!(
            "square image of {side} is {side_image}, not invariant"
        )));
    }
    let f2 = f.iterate(2, budget)?;
    let g = f2.restrict(&side)?;
    let g_source = MapSource {
        name: format!("{}^2|left", map.name),
        domain: (side.lo().clone(), side.hi().clone()),
        nodes: g.nodes().to_vec(),
        selfmap: true,
        metadata: vec![("derived".into(), "square restricted to the left side".into())],
    };
    let mut cfg = ScrambleConfig::defaults(g_source, stages)?;
    cfg.budget = budget.clone();
    let base = build_scramble(&cfg)?;
    verify_certificate(&base)?;

    let s_hat: Vec<Rational> = base.extracted.iter().map(|e| e.point.clone()).collect();
    // Forward closure under f; every corpus point is eventually periodic, and
    // the cap makes failure explicit instead of unbounded.
    let cap = 100_000usize;
    let mut family: std::collections::BTreeSet<Rational> = std::collections::BTreeSet::new();
    for p in &s_hat {
        let mut cur = p.clone();
        let mut steps = 0usize;
        while family.insert(cur.clone()) {
            cur = f.eval(&cur)?;
            steps += 1;
            if steps > cap {
                return Err(ScrambleError::OrbitClosureTooLarge(p.clone(), cap));
            }
        }
    }
    let family: Vec<Rational> = family.into_iter().collect();
    // Invariance at the finite level.
    for p in &family {
        let img = f.eval(p)?;
        if !family.binary_search(&img).is_ok() {
            return Err(ScrambleError::StructureInvalid(format!(
                "closure failed: image {img} of {p} missing from the family"
            )));
        }
    }
    // Straddle checks: at odd times derived from the recorded square times,
    // the pair (u, f(u)) sits on opposite sides of z.
    let right = Interval::new(z.clone(), domain.hi().clone()).unwrap();
    let mut straddle_times = Vec::new();
    for stage in &base.stages {
        for step in &stage.steps {
            let odd_time = 2 * (step.time + step.shift) + 1;
            straddle_times.push(odd_time);
        }
    }
    straddle_times.sort();
    straddle_times.dedup();
    for &t in &straddle_times {
        for u in &s_hat {
            let iu = f.eval_iter(u, t)?;
            let iv = f.eval_iter(&f.eval(u)?, t)?;
            if !right.contains(&iu) || !side.contains(&iv) {
                return Err(ScrambleError::ReplayFailure {
                    stage: 0,
                    step: 0,
                    leaf: format!("pair ({u}, f({u}))"),
                    detail: format!(
                        "images at odd time {t} fail to straddle z = {z}: {iu} vs {iv}"
                    ),
                });
            }
        }
    }
    // A separation bound inherited from the base certificate, doubled time.
    let report = scramble_report(&base, 1, budget)?;
    let separation = report.separations.into_iter().next().map(|mut c| {
        c.time *= 2;
        c
    });
    Ok(SquareScrambleCertificate {
        schema_version: SCHEMA_VERSION,
        map: map.clone(),
        z,
        side,
        base,
        s_hat,
        family,
        straddle_times,
        separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn tent_cfg(stages: usize) -> ScrambleConfig {
        ScrambleConfig::defaults(corpus::builtin("tent").unwrap(), stages).unwrap()
    }

    #[test]
    fn base_open_enumeration_is_dyadic() {
        let d = Interval::ratio(0, 1, 1, 1);
        assert_eq!(base_open(&d, 1), Interval::ratio(0, 1, 1, 1));
        assert_eq!(base_open(&d, 2), Interval::ratio(0, 1, 1, 2));
        assert_eq!(base_open(&d, 3), Interval::ratio(1, 2, 1, 1));
        assert_eq!(base_open(&d, 4), Interval::ratio(0, 1, 1, 4));
        assert_eq!(base_open(&d, 7), Interval::ratio(3, 4, 1, 1));
    }

    #[test]
    fn stage_one_certificate_replays() {
        let cert = build_scramble(&tent_cfg(1)).unwrap();
        assert_eq!(cert.stages.len(), 1);
        let stage = &cert.stages[0];
        assert_eq!(stage.leaves.len(), 4);
        assert_eq!(stage.a_target, q(1, 8));
        assert_eq!(stage.b_target, q(7, 8));
        let report = verify_certificate(&cert).unwrap();
        assert!(report.containments_checked > 0);
        // The split step sends bit-0 leaves near a_1 and bit-1 leaves near b_1.
        let split = &stage.steps[0];
        assert!(matches!(split.kind, StepKind::Separation));
        match &split.assignment {
            WindowAssignment::ByLastBit { zero, one } => {
                assert!(zero.contains(&stage.a_target));
                assert!(one.contains(&stage.b_target));
            }
            other => panic!("unexpected assignment {other:?}"),
        }
    }

    #[test]
    fn stage_two_certificate_replays_with_structure() {
        let cert = build_scramble(&tent_cfg(2)).unwrap();
        assert_eq!(cert.stages.len(), 2);
        assert_eq!(cert.stages[1].leaves.len(), 16);
        let report = verify_certificate(&cert).unwrap();
        assert_eq!(report.stages, 2);
        // Density times divisible by the stage factorial.
        for stage in &cert.stages {
            let density = stage
                .steps
                .iter()
                .find(|s| matches!(s.kind, StepKind::Density { .. }))
                .expect("density step present");
            assert_eq!(density.time % factorial(stage.index), 0);
        }
        // Width law asserted independently of verify.
        for stage in &cert.stages {
            let bound = q(1, 1 << (2 * stage.index + 1));
            for leaf in &stage.leaves {
                assert!(leaf.interval.width() < bound);
            }
        }
    }

    #[test]
    fn zero_stages_is_an_empty_certificate() {
        let cert = build_scramble(&tent_cfg(0)).unwrap();
        assert!(cert.stages.is_empty());
        assert!(cert.extracted.is_empty());
        verify_certificate(&cert).unwrap();
    }

    #[test]
    fn tampered_window_is_pinpointed() {
        let mut cert = build_scramble(&tent_cfg(1)).unwrap();
        // Narrow a recorded proximality window so the containment fails.
        let step = cert.stages[0]
            .steps
            .iter_mut()
            .find(|s| matches!(s.kind, StepKind::Proximality { .. }))
            .unwrap();
        if let WindowAssignment::Uniform { window } = &mut step.assignment {
            let lo = window.lo().clone();
            let shrunk = Interval::new(lo.clone(), &lo + &q(1, 1_000_000)).unwrap();
            *window = shrunk;
        }
        match verify_certificate(&cert) {
            Err(ScrambleError::ReplayFailure { stage, .. }) => assert_eq!(stage, 1),
            other => panic!("expected replay failure, got {other:?}"),
        }
    }

    #[test]
    fn tampered_leaf_breaks_nesting() {
        let mut cert = build_scramble(&tent_cfg(2)).unwrap();
        let leaf = &mut cert.stages[1].leaves[0];
        leaf.interval = Interval::ratio(0, 1, 1, 1_000);
        assert!(verify_certificate(&cert).is_err());
    }

    #[test]
    fn report_certifies_separation_and_proximity() {
        let cert = build_scramble(&tent_cfg(2)).unwrap();
        verify_certificate(&cert).unwrap();
        let report = scramble_report(&cert, 4, &PieceBudget::default()).unwrap();
        assert!(!report.separations.is_empty());
        for c in &report.separations {
            assert!(c.lower_bound.is_positive());
        }
        assert!(!report.proximities.is_empty());
        for p in &report.proximities {
            assert!(p.upper_bound < q(1, 1));
        }
        // Tent displacement: sup |T^n - id| = 1 for every n (witnessed at 1).
        for (_, d) in &report.displacement {
            assert_eq!(d, &Rational::one());
        }
    }

    #[test]
    fn progression_time_set_is_respected() {
        let mut cfg = tent_cfg(1);
        cfg.time_set = TimeSet::Progression {
            modulus: 3,
            residue: 0,
        };
        let cert = build_scramble(&cfg).unwrap();
        verify_certificate(&cert).unwrap();
        for stage in &cert.stages {
            for step in &stage.steps {
                match step.kind {
                    StepKind::Separation | StepKind::SeedSeparation { .. } | StepKind::Proximality { .. } => {
                        assert_eq!(step.time % 3, 0);
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn tracking_periodic_point_records_visits() {
        let f = corpus::builtin("tent").unwrap().to_map().unwrap();
        let mut cfg = tent_cfg(1);
        cfg.track_periodic(&f, q(2, 5), 8).unwrap();
        assert_eq!(cfg.tracked[0].orbit, vec![q(2, 5), q(4, 5)]);
        let cert = build_scramble(&cfg).unwrap();
        verify_certificate(&cert).unwrap();
        let has_tracking = cert.stages[0]
            .steps
            .iter()
            .any(|s| matches!(s.kind, StepKind::TrackingNear { .. }));
        assert!(has_tracking);
    }

    #[test]
    fn non_mixing_map_is_rejected() {
        let cfg = ScrambleConfig::defaults(corpus::builtin("remark1").unwrap(), 1).unwrap();
        assert!(matches!(
            build_scramble(&cfg),
            Err(ScrambleError::NoMixingEvidence)
        ));
    }

    #[test]
    fn square_pipeline_for_the_crossing_map() {
        let src = corpus::builtin("remark4").unwrap();
        let cert = build_invariant_via_square(&src, 1, &PieceBudget::default()).unwrap();
        assert_eq!(cert.z, q(1, 2));
        assert_eq!(cert.side, Interval::ratio(0, 1, 1, 2));
        let f = src.to_map().unwrap();
        // Exact invariance of the finite family.
        for p in &cert.family {
            let img = f.eval(p).unwrap();
            assert!(cert.family.binary_search(&img).is_ok());
        }
        // Straddle times are odd.
        assert!(!cert.straddle_times.is_empty());
        assert!(cert.straddle_times.iter().all(|t| t % 2 == 1));
        let sep = cert.separation.as_ref().expect("separation claim");
        assert!(sep.lower_bound.is_positive());
    }

    #[test]
    fn square_pipeline_rejects_non_crossing_maps() {
        let src = corpus::builtin("tent").unwrap();
        assert!(matches!(
            build_invariant_via_square(&src, 1, &PieceBudget::default()),
            Err(ScrambleError::NotCrossingMap(_))
        ));
    }

    #[test]
    fn certificate_serializes_and_round_trips() {
        let cert = build_scramble(&tent_cfg(1)).unwrap();
        let json = serde_json::to_string_pretty(&cert).unwrap();
        let back: ScrambleCertificate = serde_json::from_str(&json).unwrap();
        verify_certificate(&back).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    }
}

/// On-disk certificate envelope (JSON with exact `num/den` rationals).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateFile {
    Scramble(ScrambleCertificate),
    SquareScramble(SquareScrambleCertificate),
}

/// Replays a square-pipeline certificate: the base certificate verifies, the
/// family is exactly invariant, the extracted points match, and every
/// recorded odd time straddles the crossing point.
pub fn verify_square_certificate(
    cert: &SquareScrambleCertificate,
) -> Result<VerifyReport, ScrambleError> {
    let f = cert
        .map
        .to_map()
        .map_err(|e| ScrambleError::StructureInvalid(e.to_string()))?;
    let report = verify_certificate(&cert.base)?;
    let expected: Vec<Rational> = cert.base.extracted.iter().map(|e| e.point.clone()).collect();
    if expected != cert.s_hat {
        return Err(ScrambleError::StructureInvalid(
            "extracted family does not match the base certificate".into(),
        ));
    }
    let mut family = cert.family.clone();
    family.sort();
    if family != cert.family {
        return Err(ScrambleError::StructureInvalid(
            "family must be sorted ascending".into(),
        ));
    }
    for p in &cert.family {
        let img = f.eval(p)?;
        if cert.family.binary_search(&img).is_err() {
            return Err(ScrambleError::ReplayFailure {
                stage: 0,
                step: 0,
                leaf: format!("family point {p}"),
                detail: format!("image {img} escapes the family"),
            });
        }
    }
    let domain = f.domain();
    let right = Interval::new(cert.z.clone(), domain.hi().clone()).unwrap();
    for &t in &cert.straddle_times {
        if t % 2 != 1 {
            return Err(ScrambleError::StructureInvalid(format!(
                "straddle time {t} is not odd"
            )));
        }
        for u in &cert.s_hat {
            let iu = f.eval_iter(u, t)?;
            let iv = f.eval_iter(&f.eval(u)?, t)?;
            if !right.contains(&iu) || !cert.side.contains(&iv) {
                return Err(ScrambleError::ReplayFailure {
                    stage: 0,
                    step: 0,
                    leaf: format!("pair ({u}, f({u}))"),
                    detail: format!("straddle fails at odd time {t}"),
                });
            }
        }
    }
    if let Some(sep) = &cert.separation {
        // The claim's time is the doubled base time; re-verify the distance.
        let d = (&f.eval_iter(&sep.first.point, sep.time)?
            - &f.eval_iter(&sep.second.point, sep.time)?)
            .abs();
        if d < sep.lower_bound {
            return Err(ScrambleError::ReplayFailure {
                stage: sep.stage,
                step: 0,
                leaf: "separation claim".into(),
                detail: format!("distance {d} below bound {}", sep.lower_bound),
            });
        }
    }
    Ok(report)
}
