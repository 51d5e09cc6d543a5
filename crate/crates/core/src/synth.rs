//! Synthetic multi-driver corpora.
//!
//! Each event is rendered from a [`BehaviorTemplate`]: a baseline zone
//! interrupted by random background glances (a Poisson process per zone),
//! with a maneuver-specific glance schedule overlaid so that it ends a short
//! lead time before SyncF. Annotated streams also mark some glance
//! transitions as `Unknown`. The estimated stream is the annotated stream
//! passed through a [`NoiseChannel`].
//!
//! Everything is a pure function of the configuration and a seed. Seeds are
//! derived hierarchically (master, driver, event), so events can be generated
//! in any order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, Drive};
use crate::error::{Error, Result};
use crate::event::{lane_keeping_frames, seconds_to_frames, Maneuver, ManeuverEvent};
use crate::scanpath::{Scanpath, ScanpathId};
use crate::zone::{GazeZone, ZONE_COUNT};

const LABELS: usize = ZONE_COUNT + 1;

/// Minimum span before SyncF a lane-change segment must provide.
pub const MIN_PRE_SECONDS: f64 = 10.0;
/// Minimum span after SyncF a lane-change segment must provide.
pub const MIN_POST_SECONDS: f64 = 5.0;

/// SplitMix64 finalizer used to derive child seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child `tag` under `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix(parent ^ mix(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

const NOISE_TAG: u64 = u64::MAX;
const ORDER_TAG: u64 = u64::MAX - 1;
const PROFILE_TAG: u64 = u64::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlanceStep {
    pub zone: GazeZone,
    pub mean_seconds: f64,
    pub jitter_seconds: f64,
    pub probability: f64,
}

impl GlanceStep {
    pub fn new(zone: GazeZone, mean_seconds: f64, jitter_seconds: f64, probability: f64) -> Self {
        GlanceStep {
            zone,
            mean_seconds,
            jitter_seconds,
            probability,
        }
    }
}

/// A glance that occurs at random times at `rate_per_second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundGlance {
    pub zone: GazeZone,
    pub rate_per_second: f64,
    pub mean_seconds: f64,
    pub jitter_seconds: f64,
}

impl BackgroundGlance {
    pub fn new(zone: GazeZone, rate_per_second: f64, mean_seconds: f64, jitter_seconds: f64) -> Self {
        BackgroundGlance {
            zone,
            rate_per_second,
            mean_seconds,
            jitter_seconds,
        }
    }
}

/// Annotated-stream `Unknown` frames at glance transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionUnknown {
    pub probability: f64,
    pub max_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTemplate {
    pub kind: Maneuver,
    pub baseline: GazeZone,
    /// Glances that precede a lane change, in order. Empty for lane keeping.
    pub schedule: Vec<GlanceStep>,
    /// The schedule ends `lead_seconds ± lead_jitter_seconds` before SyncF.
    pub lead_seconds: f64,
    pub lead_jitter_seconds: f64,
    /// Segment span before and after SyncF (lane changes only).
    pub pre_seconds: f64,
    pub post_seconds: f64,
    pub background: Vec<BackgroundGlance>,
    pub transition_unknown: TransitionUnknown,
}

impl BehaviorTemplate {
    /// Lane keeping: mostly Front, with sporadic mirror and instrument checks,
    /// blinks, and rare glances elsewhere.
    pub fn default_lane_keeping() -> Self {
        BehaviorTemplate {
            kind: Maneuver::LaneKeeping,
            baseline: GazeZone::Front,
            schedule: Vec::new(),
            lead_seconds: 0.0,
            lead_jitter_seconds: 0.0,
            pre_seconds: 0.0,
            post_seconds: 0.0,
            background: default_background(),
            transition_unknown: TransitionUnknown {
                probability: 0.5,
                max_frames: 3,
            },
        }
    }

    /// Front, Left (with an optional shoulder check), Rearview, Left, back to
    /// Front just before SyncF.
    pub fn default_left_lane_change() -> Self {
        use GazeZone::*;
        BehaviorTemplate {
            kind: Maneuver::LeftLaneChange,
            schedule: vec![
                GlanceStep::new(Left, 1.0, 0.3, 1.0),
                GlanceStep::new(LeftShoulder, 0.5, 0.2, 0.5),
                GlanceStep::new(Front, 0.35, 0.15, 0.6),
                GlanceStep::new(Rearview, 0.8, 0.3, 0.9),
                GlanceStep::new(Front, 0.3, 0.1, 0.3),
                GlanceStep::new(Left, 1.1, 0.3, 1.0),
            ],
            ..Self::lane_change_base()
        }
    }

    /// Front, Rearview, Right (optionally preceded by the right windshield),
    /// back to Front just before SyncF.
    pub fn default_right_lane_change() -> Self {
        use GazeZone::*;
        BehaviorTemplate {
            kind: Maneuver::RightLaneChange,
            schedule: vec![
                GlanceStep::new(Rearview, 1.0, 0.3, 1.0),
                GlanceStep::new(Front, 0.35, 0.15, 0.6),
                GlanceStep::new(RightWindshield, 0.4, 0.2, 0.5),
                GlanceStep::new(Right, 1.2, 0.4, 1.0),
            ],
            ..Self::lane_change_base()
        }
    }

    fn lane_change_base() -> Self {
        BehaviorTemplate {
            kind: Maneuver::LeftLaneChange,
            lead_seconds: 0.7,
            lead_jitter_seconds: 0.3,
            pre_seconds: 10.0,
            post_seconds: 10.0,
            background: lane_change_background(),
            ..Self::default_lane_keeping()
        }
    }

    pub fn default_for(kind: Maneuver) -> Self {
        match kind {
            Maneuver::LeftLaneChange => Self::default_left_lane_change(),
            Maneuver::RightLaneChange => Self::default_right_lane_change(),
            Maneuver::LaneKeeping => Self::default_lane_keeping(),
        }
    }

    /// Longest possible schedule plus lead, in seconds, under `duration_scale`.
    fn max_schedule_seconds(&self, duration_scale: f64, lead_shift: f64) -> f64 {
        let steps: f64 = self
            .schedule
            .iter()
            .map(|s| s.mean_seconds * duration_scale + s.jitter_seconds)
            .sum();
        steps + self.lead_seconds + lead_shift.abs() + self.lead_jitter_seconds
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTemplate(format!("{} template: {msg}", self.kind)));
        if self.baseline.is_unknown() {
            return bad("baseline must be a canonical zone".into());
        }
        for s in &self.schedule {
            if !(0.0..=1.0).contains(&s.probability) {
                return bad(format!("probability {} of {} is outside [0, 1]", s.probability, s.zone));
            }
            if !(s.mean_seconds > 0.0 && s.jitter_seconds >= 0.0 && s.jitter_seconds < s.mean_seconds) {
                return bad(format!(
                    "{} step needs mean > jitter >= 0, got {} ± {}",
                    s.zone, s.mean_seconds, s.jitter_seconds
                ));
            }
        }
        for b in &self.background {
            if !(b.rate_per_second >= 0.0 && b.rate_per_second.is_finite()) {
                return bad(format!("background rate {} for {}", b.rate_per_second, b.zone));
            }
            if !(b.mean_seconds > 0.0 && b.jitter_seconds >= 0.0 && b.jitter_seconds < b.mean_seconds) {
                return bad(format!(
                    "background {} needs mean > jitter >= 0, got {} ± {}",
                    b.zone, b.mean_seconds, b.jitter_seconds
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.transition_unknown.probability) {
            return bad("transition_unknown probability outside [0, 1]".into());
        }
        if !(self.lead_jitter_seconds >= 0.0 && self.lead_seconds - self.lead_jitter_seconds >= 0.0) {
            return bad("lead must stay nonnegative".into());
        }
        match self.kind {
            Maneuver::LaneKeeping => {
                if !self.schedule.is_empty() {
                    return bad("lane-keeping templates use background glances only".into());
                }
            }
            _ => {
                if self.pre_seconds < MIN_PRE_SECONDS || self.post_seconds < MIN_POST_SECONDS {
                    return bad(format!(
                        "segment must span at least {MIN_PRE_SECONDS} s before and {MIN_POST_SECONDS} s after SyncF, got {} s and {} s",
                        self.pre_seconds, self.post_seconds
                    ));
                }
                if self.max_schedule_seconds(1.0, 0.0) > self.pre_seconds {
                    return bad(format!(
                        "schedule plus lead can reach {:.2} s, longer than the {} s before SyncF",
                        self.max_schedule_seconds(1.0, 0.0),
                        self.pre_seconds
                    ));
                }
            }
        }
        Ok(())
    }
}

fn default_background() -> Vec<BackgroundGlance> {
    use GazeZone::*;
    vec![
        BackgroundGlance::new(EyesClosed, 0.25, 0.13, 0.04),
        BackgroundGlance::new(Speedometer, 0.12, 0.6, 0.25),
        BackgroundGlance::new(Rearview, 0.08, 0.6, 0.2),
        BackgroundGlance::new(CenterStack, 0.03, 0.7, 0.3),
        BackgroundGlance::new(RightWindshield, 0.03, 0.5, 0.2),
        BackgroundGlance::new(Left, 0.03, 0.5, 0.2),
        BackgroundGlance::new(Right, 0.02, 0.5, 0.2),
        BackgroundGlance::new(LeftShoulder, 0.01, 0.4, 0.15),
    ]
}

/// Drivers scan more widely around a lane change, so every zone turns up in
/// some lane-change segments.
fn lane_change_background() -> Vec<BackgroundGlance> {
    use GazeZone::*;
    vec![
        BackgroundGlance::new(EyesClosed, 0.25, 0.13, 0.04),
        BackgroundGlance::new(Speedometer, 0.3, 0.5, 0.2),
        BackgroundGlance::new(Rearview, 0.3, 0.6, 0.2),
        BackgroundGlance::new(CenterStack, 0.2, 0.5, 0.2),
        BackgroundGlance::new(RightWindshield, 0.2, 0.5, 0.2),
        BackgroundGlance::new(Left, 0.2, 0.5, 0.2),
        BackgroundGlance::new(Right, 0.15, 0.5, 0.2),
        BackgroundGlance::new(LeftShoulder, 0.1, 0.4, 0.15),
    ]
}

/// Per-driver variation applied on top of the templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    /// Multiplies schedule glance means.
    pub duration_scale: f64,
    /// Added to the lead time.
    pub lead_shift_seconds: f64,
    /// Multiplies background glance rates.
    pub background_scale: f64,
}

impl Default for DriverProfile {
    fn default() -> Self {
        DriverProfile {
            duration_scale: 1.0,
            lead_shift_seconds: 0.0,
            background_scale: 1.0,
        }
    }
}

/// Spread of the per-driver profile: each factor is drawn uniformly within
/// `± spread` of its neutral value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverJitter {
    pub duration_scale_spread: f64,
    pub lead_shift_spread_seconds: f64,
    pub background_scale_spread: f64,
}

impl Default for DriverJitter {
    fn default() -> Self {
        DriverJitter {
            duration_scale_spread: 0.15,
            lead_shift_spread_seconds: 0.2,
            background_scale_spread: 0.3,
        }
    }
}

impl DriverJitter {
    pub fn sample(&self, seed: u64) -> DriverProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sym = |s: f64| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
        DriverProfile {
            duration_scale: 1.0 + sym(self.duration_scale_spread),
            lead_shift_seconds: sym(self.lead_shift_spread_seconds),
            background_scale: 1.0 + sym(self.background_scale_spread),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.duration_scale_spread)
            || !(0.0..1.0).contains(&self.background_scale_spread)
            || !(0.0..f64::INFINITY).contains(&self.lead_shift_spread_seconds)
        {
            return Err(Error::InvalidTemplate(
                "driver jitter spreads must be nonnegative and scale spreads below 1".into(),
            ));
        }
        Ok(())
    }
}

/// A generated event: its label stream and the event, relative to the segment start.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedEvent {
    pub zones: Vec<GazeZone>,
    pub event: ManeuverEvent,
}

fn draw_duration(rng: &mut ChaCha8Rng, mean: f64, jitter: f64, fps: u32) -> usize {
    let secs = if jitter > 0.0 {
        mean + rng.random_range(-jitter..=jitter)
    } else {
        mean
    };
    seconds_to_frames(secs, fps).max(1)
}

fn fill_background(
    zones: &mut [GazeZone],
    template: &BehaviorTemplate,
    profile: &DriverProfile,
    fps: u32,
    rng: &mut ChaCha8Rng,
) {
    zones.fill(template.baseline);
    let rates: Vec<f64> = template
        .background
        .iter()
        .map(|b| b.rate_per_second * profile.background_scale)
        .collect();
    let total: f64 = rates.iter().sum();
    if total <= 0.0 {
        return;
    }
    let len = zones.len();
    let mut t = 0usize;
    loop {
        // Exponential gap until the next background glance.
        let u: f64 = rng.random::<f64>();
        let gap = -(1.0 - u).ln() / total;
        t += seconds_to_frames(gap, fps);
        if t >= len {
            break;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = template.background.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if pick < *r {
                chosen = i;
                break;
            }
            pick -= r;
        }
        let b = &template.background[chosen];
        let dur = draw_duration(rng, b.mean_seconds, b.jitter_seconds, fps);
        let end = (t + dur).min(len);
        zones[t..end].fill(b.zone);
        // At least one baseline frame separates consecutive background glances.
        t = end + 1;
    }
}

fn mark_transition_unknowns(zones: &mut [GazeZone], rule: &TransitionUnknown, rng: &mut ChaCha8Rng) {
    if rule.max_frames == 0 || rule.probability <= 0.0 {
        return;
    }
    // Runs of the clean stream, computed before any relabeling.
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=zones.len() {
        if i == zones.len() || zones[i] != zones[start] {
            runs.push((start, i));
            start = i;
        }
    }
    for &(s, e) in runs.iter().skip(1) {
        if rng.random::<f64>() < rule.probability {
            let k = rng.random_range(1..=rule.max_frames).min(e - s - 1);
            zones[s..s + k].fill(GazeZone::Unknown);
        }
    }
}

/// Renders one event with a neutral driver profile.
pub fn generate_event(template: &BehaviorTemplate, fps: u32, seed: u64) -> Result<GeneratedEvent> {
    generate_event_with_profile(template, &DriverProfile::default(), fps, seed)
}

pub fn generate_event_with_profile(
    template: &BehaviorTemplate,
    profile: &DriverProfile,
    fps: u32,
    seed: u64,
) -> Result<GeneratedEvent> {
    template.validate()?;
    if fps == 0 {
        return Err(Error::InvalidTemplate("fps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if template.kind == Maneuver::LaneKeeping {
        let len = lane_keeping_frames(fps);
        let mut zones = vec![template.baseline; len];
        fill_background(&mut zones, template, profile, fps, &mut rng);
        mark_transition_unknowns(&mut zones, &template.transition_unknown, &mut rng);
        let event = ManeuverEvent::lane_keeping(0, len, fps)?;
        return Ok(GeneratedEvent { zones, event });
    }

    if template.max_schedule_seconds(profile.duration_scale, profile.lead_shift_seconds) > template.pre_seconds {
        return Err(Error::InvalidTemplate(format!(
            "{} schedule under driver profile {profile:?} does not fit in {} s before SyncF",
            template.kind, template.pre_seconds
        )));
    }
    let pre = seconds_to_frames(template.pre_seconds, fps);
    let post = seconds_to_frames(template.post_seconds, fps);
    let syncf = pre;
    let mut zones = vec![template.baseline; pre + post];
    fill_background(&mut zones, template, profile, fps, &mut rng);

    let mut glances = Vec::new();
    for step in &template.schedule {
        if rng.random::<f64>() < step.probability {
            let dur = draw_duration(
                &mut rng,
                step.mean_seconds * profile.duration_scale,
                step.jitter_seconds,
                fps,
            );
            glances.push((step.zone, dur));
        }
    }
    let lead_secs = template.lead_seconds
        + profile.lead_shift_seconds
        + if template.lead_jitter_seconds > 0.0 {
            rng.random_range(-template.lead_jitter_seconds..=template.lead_jitter_seconds)
        } else {
            0.0
        };
    let lead = seconds_to_frames(lead_secs.max(0.0), fps);
    let total: usize = glances.iter().map(|g| g.1).sum();
    if total + lead > syncf {
        return Err(Error::InvalidTemplate(format!(
            "{} schedule of {total} frames plus {lead} lead frames does not fit before SyncF",
            template.kind
        )));
    }
    let end = syncf - lead;
    let mut t = end - total;
    for (zone, dur) in glances {
        zones[t..t + dur].fill(zone);
        t += dur;
    }
    // The schedule hands back to the baseline until SyncF.
    zones[end..syncf].fill(template.baseline);

    mark_transition_unknowns(&mut zones, &template.transition_unknown, &mut rng);
    let event = ManeuverEvent::lane_change(template.kind, syncf)?;
    Ok(GeneratedEvent { zones, event })
}

/// Per-frame label corruption.
///
/// Row `i` of `confusion` is the distribution of the emitted label given true
/// label `i`, over the canonical zones followed by `Unknown`. With
/// `burst_rho > 0`, an erroneous label is repeated on the next frame with
/// probability `burst_rho` while the true label stays the same; otherwise
/// the label is redrawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    pub confusion: Vec<Vec<f64>>,
    pub burst_rho: f64,
}

impl NoiseChannel {
    pub fn new(confusion: Vec<Vec<f64>>, burst_rho: f64) -> Result<Self> {
        let c = NoiseChannel { confusion, burst_rho };
        c.validate()?;
        Ok(c)
    }

    pub fn identity() -> Self {
        let confusion = (0..LABELS)
            .map(|i| (0..LABELS).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        NoiseChannel {
            confusion,
            burst_rho: 0.0,
        }
    }

    /// `error` mass spread evenly over the other nine labels.
    pub fn uniform(error: f64, burst_rho: f64) -> Result<Self> {
        let off = error / (LABELS - 1) as f64;
        let confusion = (0..LABELS)
            .map(|i| (0..LABELS).map(|j| if i == j { 1.0 - error } else { off }).collect())
            .collect();
        Self::new(confusion, burst_rho)
    }

    /// 15% per-frame error: 1% to `Unknown`, 14% split over spatially
    /// neighboring zones. Frames are corrupted independently.
    pub fn default_channel() -> Self {
        use GazeZone::*;
        let neighbors: [(GazeZone, &[GazeZone]); LABELS] = [
            (Front, &[Speedometer, Rearview, RightWindshield, Left]),
            (Right, &[RightWindshield, CenterStack]),
            (Left, &[LeftShoulder, Front, Speedometer]),
            (CenterStack, &[Speedometer, Right, RightWindshield, Front]),
            (Rearview, &[RightWindshield, Front]),
            (Speedometer, &[Front, CenterStack, EyesClosed]),
            (LeftShoulder, &[Left]),
            (RightWindshield, &[Rearview, Front, Right]),
            (EyesClosed, &[Speedometer, Front]),
            (Unknown, &[Front]),
        ];
        let mut confusion = vec![vec![0.0; LABELS]; LABELS];
        for (zone, near) in neighbors {
            let row = &mut confusion[zone.label_index()];
            row[zone.label_index()] = 0.85;
            if zone.is_unknown() {
                row[Front.label_index()] = 0.15;
                continue;
            }
            row[Unknown.label_index()] = 0.01;
            for n in near {
                row[n.label_index()] += 0.14 / near.len() as f64;
            }
        }
        NoiseChannel {
            confusion,
            burst_rho: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.confusion.len() != LABELS || self.confusion.iter().any(|r| r.len() != LABELS) {
            return Err(Error::InvalidChannel(format!("confusion must be {LABELS}x{LABELS}")));
        }
        for (i, row) in self.confusion.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::InvalidChannel(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidChannel(format!("row {i} sums to {sum}, not 1")));
            }
        }
        if !(0.0..1.0).contains(&self.burst_rho) {
            return Err(Error::InvalidChannel(format!(
                "burst_rho must lie in [0, 1), got {}",
                self.burst_rho
            )));
        }
        Ok(())
    }

    /// Per-frame error rate for a true label.
    pub fn error_rate(&self, truth: GazeZone) -> f64 {
        1.0 - self.confusion[truth.label_index()][truth.label_index()]
    }

    fn draw(&self, truth: GazeZone, rng: &mut ChaCha8Rng) -> GazeZone {
        let row = &self.confusion[truth.label_index()];
        let mut u: f64 = rng.random();
        for (j, &p) in row.iter().enumerate() {
            if u < p {
                return GazeZone::from_label_index(j).expect("row has ten entries");
            }
            u -= p;
        }
        // Rounding left a sliver of mass: take the last label with mass.
        let j = row.iter().rposition(|&p| p > 0.0).unwrap_or(truth.label_index());
        GazeZone::from_label_index(j).expect("row has ten entries")
    }

    pub fn corrupt(&self, zones: &[GazeZone], seed: u64) -> Result<Vec<GazeZone>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(zones.len());
        let mut persisting: Option<(GazeZone, GazeZone)> = None;
        for &truth in zones {
            let emitted = match persisting {
                Some((t, e)) if t == truth && self.burst_rho > 0.0 && rng.random::<f64>() < self.burst_rho => e,
                _ => self.draw(truth, &mut rng),
            };
            persisting = (emitted != truth).then_some((truth, emitted));
            out.push(emitted);
        }
        Ok(out)
    }
}

/// Corrupts a scanpath's labels; id, fps and length are preserved.
pub fn corrupt_scanpath(scanpath: &Scanpath, channel: &NoiseChannel, seed: u64) -> Result<Scanpath> {
    scanpath.with_zones(channel.corrupt(scanpath.zones(), seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub left_lane_change: usize,
    pub right_lane_change: usize,
    pub lane_keeping: usize,
}

impl EventCounts {
    pub fn new(left_lane_change: usize, right_lane_change: usize, lane_keeping: usize) -> Self {
        EventCounts {
            left_lane_change,
            right_lane_change,
            lane_keeping,
        }
    }

    pub fn total(&self) -> usize {
        self.left_lane_change + self.right_lane_change + self.lane_keeping
    }

    pub fn get(&self, kind: Maneuver) -> usize {
        match kind {
            Maneuver::LeftLaneChange => self.left_lane_change,
            Maneuver::RightLaneChange => self.right_lane_change,
            Maneuver::LaneKeeping => self.lane_keeping,
        }
    }
}

/// Per-driver event counts of the reference on-road corpus (seven drivers;
/// 50 left, 32 right, 333 lane-keeping events overall).
pub fn reference_driver_counts() -> Vec<EventCounts> {
    [
        (9, 5, 20),
        (5, 5, 60),
        (5, 4, 50),
        (10, 4, 32),
        (10, 4, 45),
        (6, 5, 80),
        (5, 5, 46),
    ]
    .into_iter()
    .map(|(l, r, k)| EventCounts::new(l, r, k))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub left_lane_change: BehaviorTemplate,
    pub right_lane_change: BehaviorTemplate,
    pub lane_keeping: BehaviorTemplate,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            left_lane_change: BehaviorTemplate::default_left_lane_change(),
            right_lane_change: BehaviorTemplate::default_right_lane_change(),
            lane_keeping: BehaviorTemplate::default_lane_keeping(),
        }
    }
}

impl TemplateSet {
    pub fn get(&self, kind: Maneuver) -> &BehaviorTemplate {
        match kind {
            Maneuver::LeftLaneChange => &self.left_lane_change,
            Maneuver::RightLaneChange => &self.right_lane_change,
            Maneuver::LaneKeeping => &self.lane_keeping,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in Maneuver::ALL {
            let t = self.get(kind);
            if t.kind != kind {
                return Err(Error::InvalidTemplate(format!(
                    "{kind} slot holds a {} template",
                    t.kind
                )));
            }
            t.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub fps: u32,
    pub drivers: Vec<EventCounts>,
    pub templates: TemplateSet,
    pub channel: NoiseChannel,
    pub jitter: DriverJitter,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            fps: 30,
            drivers: reference_driver_counts(),
            templates: TemplateSet::default(),
            channel: NoiseChannel::default_channel(),
            jitter: DriverJitter::default(),
        }
    }
}

impl SynthConfig {
    /// `n` drivers cycling through the reference per-driver counts.
    pub fn with_drivers(n: usize) -> Self {
        let reference = reference_driver_counts();
        SynthConfig {
            drivers: (0..n).map(|i| reference[i % reference.len()]).collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fps == 0 {
            return Err(Error::InvalidTemplate("fps must be positive".into()));
        }
        self.templates.validate()?;
        self.channel.validate()?;
        self.jitter.validate()
    }
}

pub fn driver_id(index: usize) -> String {
    format!("driver-{}", index + 1)
}

/// One driver's drive: every event rendered back to back in a seeded random order.
pub fn generate_drive(config: &SynthConfig, driver_index: usize, driver_seed: u64) -> Result<Option<Drive>> {
    let counts = config.drivers[driver_index];
    if counts.total() == 0 {
        return Ok(None);
    }
    let profile = config.jitter.sample(derive_seed(driver_seed, PROFILE_TAG));
    let mut kinds: Vec<Maneuver> = Maneuver::ALL
        .iter()
        .flat_map(|&k| std::iter::repeat_n(k, counts.get(k)))
        .collect();
    kinds.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(driver_seed, ORDER_TAG)));

    let mut zones = Vec::new();
    let mut events = Vec::with_capacity(kinds.len());
    for (i, kind) in kinds.into_iter().enumerate() {
        let g = generate_event_with_profile(
            config.templates.get(kind),
            &profile,
            config.fps,
            derive_seed(driver_seed, i as u64),
        )?;
        let offset = zones.len();
        events.push(match g.event.segment() {
            Some((s, e)) => ManeuverEvent::lane_keeping(offset + s, offset + e, config.fps)?,
            None => ManeuverEvent::lane_change(kind, offset + g.event.syncf_frame().expect("lane change"))?,
        });
        zones.extend(g.zones);
    }

    let id = ScanpathId::new(driver_id(driver_index), "drive-1");
    let truth = Scanpath::new(id, config.fps, zones)?;
    let estimated = corrupt_scanpath(&truth, &config.channel, derive_seed(driver_seed, NOISE_TAG))?;
    Drive::new(estimated, Some(truth), events).map(Some)
}

/// Generates every driver's drive. Drivers with no events are left out.
pub fn generate_corpus(config: &SynthConfig, master_seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut drives = Vec::new();
    for i in 0..config.drivers.len() {
        if let Some(d) = generate_drive(config, i, derive_seed(master_seed, i as u64))? {
            drives.push(d);
        }
    }
    Corpus::new(drives)
}
