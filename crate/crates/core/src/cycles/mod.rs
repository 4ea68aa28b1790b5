//! Heart-cycle rearrangement with correlation-aware crossfade splicing.

mod spline;

pub use spline::SmoothingSpline;

use serde::{Deserialize, Serialize};

use crate::{Error, RandomStream, Real, Result, Signal};

/// Samples blended at every junction.
pub const SPLICE_OVERLAP: usize = 40;
/// Below this variance an overlap window counts as flat and the linear fade
/// is used.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Linear (constant-voltage) fade, `f(t) = 1/2 + t/2`.
pub fn fade_linear(t: f64) -> f64 {
    0.5 + 0.5 * t
}

/// Odd part of the generalised fade.
pub fn fade_odd(t: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    9.0 / 16.0 * (FRAC_PI_2 * t).sin() + 1.0 / 16.0 * (3.0 * FRAC_PI_2 * t).sin()
}

/// Even part of the generalised fade for correlation `r`.
pub fn fade_even(t: f64, r: f64) -> f64 {
    let o = fade_odd(t);
    let radicand = 1.0 / (2.0 * (1.0 + r)) - (1.0 - r) / (1.0 + r) * o * o;
    debug_assert!(radicand >= -1e-15, "fade radicand {radicand} < 0");
    radicand.max(0.0).sqrt()
}

/// Generalised crossfade: constant power at `r = 0`, constant voltage at
/// `r = 1`, and `f(t)^2 + f(-t)^2 + 2 r f(t) f(-t) = 1` throughout.
pub fn fade_generalized(t: f64, r: f64) -> f64 {
    fade_odd(t) + fade_even(t, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crossfade {
    Linear,
    Generalized { r: f64 },
}

impl Crossfade {
    pub fn gain(&self, t: f64) -> f64 {
        match *self {
            Crossfade::Linear => fade_linear(t),
            Crossfade::Generalized { r } => fade_generalized(t, r),
        }
    }
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Zero-lag Pearson correlation.
fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Picks the fade for two overlap windows: linear when either is flat,
/// otherwise generalised with the correlation clamped to `[0, 1]`.
pub fn choose_crossfade(tail: &[f64], head: &[f64]) -> Crossfade {
    if variance(tail) < VARIANCE_FLOOR || variance(head) < VARIANCE_FLOOR {
        Crossfade::Linear
    } else {
        Crossfade::Generalized {
            r: correlation(tail, head).clamp(0.0, 1.0),
        }
    }
}

/// Overlap sample centres mapped onto `(-1, 1)`.
fn fade_axis(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| -1.0 + (2 * i + 1) as f64 / len as f64)
        .collect()
}

/// `v(t) = f(t) y(t) + f(-t) x(t)` over the overlap.
pub fn crossfade_overlap(tail: &[f64], head: &[f64], fade: Crossfade) -> Vec<f64> {
    fade_axis(tail.len())
        .into_iter()
        .zip(tail.iter().zip(head))
        .map(|(t, (x, y))| fade.gain(t) * y + fade.gain(-t) * x)
        .collect()
}

/// Crossfades `tail` into `head` and resamples the blend to twice its length
/// with a cubic smoothing spline whose smoothing factor is the blend length.
fn blended_junction(tail: &[f64], head: &[f64]) -> (Vec<f64>, Crossfade) {
    let fade = choose_crossfade(tail, head);
    let blend = crossfade_overlap(tail, head, fade);
    let axis = fade_axis(blend.len());
    let spline = SmoothingSpline::fit(&axis, &blend, blend.len() as f64);
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    let out_len = 2 * blend.len();
    let dense = (0..out_len)
        .map(|k| spline.eval(lo + (hi - lo) * k as f64 / (out_len - 1) as f64))
        .collect();
    (dense, fade)
}

fn to_f64<T: Real>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.as_f64()).collect()
}

/// Appends `next` to `out`, replacing the last overlap of `out` and the first
/// overlap of `next` with the interpolated crossfade. Total length is
/// `out.len() + next.len()`.
fn splice_onto<T: Real>(out: &mut Vec<T>, next: &[T]) -> Crossfade {
    let cut = out.len() - SPLICE_OVERLAP;
    let tail = to_f64(&out[cut..]);
    let head = to_f64(&next[..SPLICE_OVERLAP]);
    let (dense, fade) = blended_junction(&tail, &head);
    out.truncate(cut);
    out.extend(dense.into_iter().map(T::lit));
    out.extend_from_slice(&next[SPLICE_OVERLAP..]);
    fade
}

/// Joins two segments: `first[..len - 40]`, then 80 interpolated crossfade
/// samples, then `second[40..]`.
pub fn splice<T: Real>(first: &Signal<T>, second: &Signal<T>) -> Result<Signal<T>> {
    Ok(splice_with_fade(first, second)?.0)
}

/// [`splice`] that also reports the fade used.
pub fn splice_with_fade<T: Real>(first: &Signal<T>, second: &Signal<T>) -> Result<(Signal<T>, Crossfade)> {
    for s in [first, second] {
        if s.len() < SPLICE_OVERLAP {
            return Err(Error::SegmentTooShort {
                len: s.len(),
                overlap: SPLICE_OVERLAP,
            });
        }
    }
    if first.sample_rate() != second.sample_rate() {
        return Err(Error::InvalidArgument(format!(
            "cannot splice {} Hz onto {} Hz",
            second.sample_rate(),
            first.sample_rate()
        )));
    }
    let mut out = first.samples().to_vec();
    let fade = splice_onto(&mut out, second.samples());
    Ok((first.with_samples(out)?, fade))
}

/// Strictly increasing cycle boundaries; cycle `i` spans
/// `[indices[i], indices[i + 1])`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleBoundaries {
    indices: Vec<usize>,
}

impl CycleBoundaries {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "cycle boundaries must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { indices })
    }

    /// Validates against a signal length (`index <= len`).
    pub fn check_within(&self, len: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last > len => Err(Error::InvalidArgument(format!(
                "cycle boundary {last} beyond signal length {len}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn cycle_count(&self) -> usize {
        self.indices.len().saturating_sub(1)
    }

    /// Rescales every index by `factor`, rounding to the nearest sample.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out: Vec<usize> = self
            .indices
            .iter()
            .map(|&i| (i as f64 * factor).round() as usize)
            .collect();
        out.dedup();
        Self { indices: out }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RearrangeMode {
    /// Two groups of half the cycles each, shuffled.
    Halves,
    /// Consecutive groups of 1 to 4 cycles, shuffled.
    Groups,
    /// Every cycle shuffled individually.
    Cycles,
}

/// A drawn rearrangement: `order[k]` is the source cycle placed k-th.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RearrangePlan {
    pub mode: Option<RearrangeMode>,
    pub order: Vec<usize>,
}

impl RearrangePlan {
    pub fn identity(cycles: usize) -> Self {
        Self {
            mode: None,
            order: (0..cycles).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &c)| i == c)
    }
}

/// Groups cycles per `mode` and shuffles the groups.
pub fn plan_mode(cycles: usize, mode: RearrangeMode, rng: &mut RandomStream) -> RearrangePlan {
    let mut groups: Vec<Vec<usize>> = match mode {
        RearrangeMode::Halves => {
            let half = (cycles / 2).max(1);
            (0..cycles).collect::<Vec<_>>().chunks(half).map(<[usize]>::to_vec).collect()
        }
        RearrangeMode::Groups => {
            let mut out = Vec::new();
            let mut start = 0;
            while start < cycles {
                let size = rng.randint(1, 4) as usize;
                let end = (start + size).min(cycles);
                out.push((start..end).collect());
                start = end;
            }
            out
        }
        RearrangeMode::Cycles => (0..cycles).map(|c| vec![c]).collect(),
    };
    rng.shuffle(&mut groups);
    RearrangePlan {
        mode: Some(mode),
        order: groups.into_iter().flatten().collect(),
    }
}

/// With probability `probability`, one of the three modes with equal odds;
/// otherwise the identity. Fewer than two cycles always give the identity.
pub fn plan_rearrangement(cycles: usize, probability: f64, rng: &mut RandomStream) -> RearrangePlan {
    if cycles < 2 || !rng.chance(probability) {
        return RearrangePlan::identity(cycles);
    }
    let mode = rng.choose(&[RearrangeMode::Halves, RearrangeMode::Groups, RearrangeMode::Cycles]);
    plan_mode(cycles, mode, rng)
}

/// Reorders cycles per `plan`, splicing wherever two pieces were not
/// adjacent in the source. Samples before the first and after the last
/// boundary stay in place. Returns the new signal and its boundaries.
pub fn apply_rearrangement<T: Real>(
    signal: &Signal<T>,
    bounds: &CycleBoundaries,
    plan: &RearrangePlan,
) -> Result<(Signal<T>, CycleBoundaries)> {
    bounds.check_within(signal.len())?;
    let n = bounds.cycle_count();
    let mut seen = plan.order.clone();
    seen.sort_unstable();
    if seen != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument(format!(
            "plan order {:?} is not a permutation of {n} cycles",
            plan.order
        )));
    }
    if plan.is_identity() {
        return Ok((signal.clone(), bounds.clone()));
    }
    let b = bounds.indices();
    let xs = signal.samples();

    let mut pieces: Vec<(usize, usize)> = Vec::with_capacity(n + 2);
    pieces.push((0, b[0]));
    pieces.extend(plan.order.iter().map(|&c| (b[c], b[c + 1])));
    pieces.push((b[n], xs.len()));

    let mut out: Vec<T> = Vec::with_capacity(xs.len());
    let mut new_bounds = Vec::with_capacity(b.len());
    let mut prev_end: Option<usize> = None;
    for (k, &(start, end)) in pieces.iter().enumerate() {
        if (1..=n).contains(&k) {
            new_bounds.push(out.len());
        }
        let piece = &xs[start..end];
        let contiguous = prev_end == Some(start);
        if !contiguous && out.len() >= SPLICE_OVERLAP && piece.len() >= SPLICE_OVERLAP {
            splice_onto(&mut out, piece);
        } else {
            out.extend_from_slice(piece);
        }
        if !piece.is_empty() {
            prev_end = Some(end);
        }
    }
    new_bounds.push(out.len() - (xs.len() - b[n]));
    Ok((signal.with_samples(out)?, CycleBoundaries::new(new_bounds)?))
}

/// Rearranges heart cycles with probability 0.75.
pub fn rearrange_cycles<T: Real>(
    signal: &Signal<T>,
    bounds: &CycleBoundaries,
    rng: &mut RandomStream,
) -> Result<Signal<T>> {
    if bounds.cycle_count() < 2 {
        log::warn!("rearrangement skipped: {} cycle(s)", bounds.cycle_count());
        return Ok(signal.clone());
    }
    let plan = plan_rearrangement(bounds.cycle_count(), 0.75, rng);
    Ok(apply_rearrangement(signal, bounds, &plan)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_fade_values() {
        assert_eq!(fade_linear(0.0), 0.5);
        assert_eq!(fade_linear(0.5), 0.75);
        for t in [0.1, 0.37, 0.9] {
            assert!((fade_linear(t) + fade_linear(-t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn generalized_fade_values() {
        assert!((fade_generalized(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((fade_generalized(0.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        for r in [0.0, 0.3, 1.0] {
            assert!((fade_generalized(0.9999, r) - 1.0).abs() < 1e-4);
            assert!(fade_generalized(-0.9999, r).abs() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn mixed_power_identity(t in -0.999f64..0.999, r in 0.0f64..=1.0) {
            let (a, b) = (fade_generalized(t, r), fade_generalized(-t, r));
            prop_assert!((a * a + b * b + 2.0 * r * a * b - 1.0).abs() < 1e-9);
        }

        #[test]
        fn odd_and_even_parts(t in -0.999f64..0.999, r in 0.0f64..=1.0) {
            prop_assert_eq!(fade_odd(-t), -fade_odd(t));
            prop_assert_eq!(fade_even(-t, r), fade_even(t, r));
        }
    }

    fn sig(xs: Vec<f64>) -> Signal<f64> {
        Signal::new(xs, 2000.0).unwrap()
    }

    #[test]
    fn zero_segments_splice_to_zeros() {
        let out = splice(&sig(vec![0.0; 100]), &sig(vec![0.0; 70])).unwrap();
        assert_eq!(out.len(), 170);
        assert!(out.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn equal_windows_blend_to_themselves() {
        let w: Vec<f64> = (0..40).map(|i| (i as f64 * 0.4).sin()).collect();
        let fade = choose_crossfade(&w, &w);
        assert_eq!(fade, Crossfade::Generalized { r: 1.0 });
        for (v, x) in crossfade_overlap(&w, &w, fade).iter().zip(&w) {
            assert!((v - x).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_window_uses_linear_fade() {
        let w: Vec<f64> = (0..40).map(|i| i as f64 * 0.01).collect();
        assert_eq!(choose_crossfade(&[0.3; 40], &w), Crossfade::Linear);
        let anti: Vec<f64> = w.iter().map(|x| -x).collect();
        assert_eq!(choose_crossfade(&w, &anti), Crossfade::Generalized { r: 0.0 });
    }

    #[test]
    fn splice_length_bookkeeping() {
        for (l1, l2) in [(40, 40), (41, 97), (500, 60)] {
            let a = sig((0..l1).map(|i| (i as f64 * 0.1).sin()).collect());
            let b = sig((0..l2).map(|i| (i as f64 * 0.07).cos()).collect());
            let out = splice(&a, &b).unwrap();
            assert_eq!(out.len(), l1 + l2);
            assert_eq!(&out.samples()[..l1 - 40], &a.samples()[..l1 - 40]);
            assert_eq!(&out.samples()[l1 + 40..], &b.samples()[40..]);
        }
    }

    #[test]
    fn splice_rejects_short_and_mismatched() {
        let a = sig(vec![0.0; 39]);
        let b = sig(vec![0.0; 50]);
        assert!(matches!(splice(&a, &b), Err(Error::SegmentTooShort { len: 39, .. })));
        let c = Signal::new(vec![0.0; 50], 4000.0).unwrap();
        assert!(splice(&b, &c).is_err());
    }

    #[test]
    fn boundaries_validation() {
        assert!(CycleBoundaries::new(vec![100, 90]).is_err());
        assert!(CycleBoundaries::new(vec![0, 5, 5]).is_err());
        let b = CycleBoundaries::new(vec![0, 10, 20]).unwrap();
        assert!(b.check_within(19).is_err());
        assert!(b.check_within(20).is_ok());
        assert_eq!(b.scaled(1.006).indices(), &[0, 10, 20]);
        assert_eq!(CycleBoundaries::new(vec![0, 1000, 2000]).unwrap().scaled(1.006).indices(), &[0, 1006, 2012]);
    }

    fn cycle_fixture(lens: &[usize]) -> (Signal<f64>, CycleBoundaries) {
        let mut xs = Vec::new();
        let mut b = vec![0];
        for (c, &len) in lens.iter().enumerate() {
            xs.extend((0..len).map(|i| ((c + 1) as f64 * 0.05 * i as f64).sin()));
            b.push(xs.len());
        }
        (sig(xs), CycleBoundaries::new(b).unwrap())
    }

    #[test]
    fn single_cycle_is_identity() {
        let (s, b) = cycle_fixture(&[300]);
        for seed in 0..10 {
            assert_eq!(rearrange_cycles(&s, &b, &mut RandomStream::new(seed)).unwrap(), s);
        }
    }

    #[test]
    fn plans_are_permutations_with_mode_structure() {
        let mut rng = RandomStream::new(5);
        for n in 2..12 {
            for mode in [RearrangeMode::Halves, RearrangeMode::Groups, RearrangeMode::Cycles] {
                let plan = plan_mode(n, mode, &mut rng);
                let mut sorted = plan.order.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (0..n).collect::<Vec<_>>());
                if mode == RearrangeMode::Halves {
                    let half = n / 2;
                    let first: Vec<usize> = (0..half).collect();
                    assert!(plan.order.starts_with(&first) || plan.order.ends_with(&first));
                }
            }
        }
    }

    #[test]
    fn mode_frequencies_and_gate() {
        let mut rng = RandomStream::new(77);
        let trials = 6000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let plan = plan_rearrangement(6, 0.75, &mut rng);
            let idx = match plan.mode {
                None => 0,
                Some(RearrangeMode::Halves) => 1,
                Some(RearrangeMode::Groups) => 2,
                Some(RearrangeMode::Cycles) => 3,
            };
            counts[idx] += 1;
        }
        let frac = |c: usize| c as f64 / trials as f64;
        assert!((frac(counts[0]) - 0.25).abs() < 0.02);
        for c in &counts[1..] {
            assert!((frac(*c) - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn rearrangement_preserves_length_and_cycle_lengths() {
        let (s, b) = cycle_fixture(&[300, 250, 410, 280, 333]);
        let plan = RearrangePlan {
            mode: Some(RearrangeMode::Cycles),
            order: vec![3, 0, 4, 2, 1],
        };
        let (out, nb) = apply_rearrangement(&s, &b, &plan).unwrap();
        assert_eq!(out.len(), s.len());
        assert_eq!(nb.cycle_count(), 5);
        let lens: Vec<usize> = nb.indices().windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(lens, vec![280, 300, 333, 410, 250]);
        // away from junctions the content is copied verbatim
        let src = &s.samples()[b.indices()[3] + 50..b.indices()[4] - 50];
        assert_eq!(&out.samples()[50..230], src);
    }

    #[test]
    fn rearrangement_is_seed_deterministic() {
        let (s, b) = cycle_fixture(&[300, 250, 410, 280]);
        let a = rearrange_cycles(&s, &b, &mut RandomStream::new(9)).unwrap();
        let c = rearrange_cycles(&s, &b, &mut RandomStream::new(9)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn margins_stay_in_place() {
        let mut xs: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        let (body, _) = cycle_fixture(&[300, 250, 410]);
        xs.extend_from_slice(body.samples());
        xs.extend((0..77).map(|i| -(i as f64) * 1e-3));
        let s = sig(xs);
        let b = CycleBoundaries::new(vec![100, 400, 650, 1060]).unwrap();
        let plan = RearrangePlan { mode: Some(RearrangeMode::Cycles), order: vec![2, 1, 0] };
        let (out, nb) = apply_rearrangement(&s, &b, &plan).unwrap();
        assert_eq!(out.len(), s.len());
        assert_eq!(nb.indices(), &[100, 510, 760, 1060]);
        assert_eq!(&out.samples()[..60], &s.samples()[..60]);
        assert_eq!(&out.samples()[1100..], &s.samples()[1100..]);
    }
}
