//! Per-frame decoding, edit-distance alignment against the message schedule,
//! and rank-based detection.
//!
//! Costs: a diagonal step costs the normalized distance `2(d_H − 0.5)`
//! (−1 for an exact match), or +1 when the decoded frame is null; skipping a
//! decoded frame (insert) or a reference entry (delete) costs 1.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::gf2::BitVec;
use crate::latent::VideoLatent;
use crate::prc::{PrcKey, SoftSignal};
use crate::scalar::Scalar;
use crate::schedule::MessageSchedule;

/// Extra schedule entries considered past `start + frames` when aligning.
pub const ALIGN_SLACK: usize = 8;
pub const DEFAULT_NULL_SAMPLES: usize = 1000;
pub const DEFAULT_TAU: f64 = 0.005;

/// One entry per received frame; `None` where decoding failed.
pub type DecodedSequence = Vec<Option<BitVec>>;

pub fn decode_signals<T: Scalar>(
    key: &PrcKey,
    signals: &[SoftSignal<T>],
) -> Result<DecodedSequence> {
    signals
        .par_iter()
        .map(|s| key.decode(s).map(|o| o.message))
        .collect()
}

/// Decodes the hard signs of every frame.
pub fn decode_video<T: Scalar>(key: &PrcKey, latents: &VideoLatent<T>) -> Result<DecodedSequence> {
    if latents.shape().n() != key.n() {
        return Err(Error::ShapeMismatch(format!(
            "frames have {} elements, key expects {}",
            latents.shape().n(),
            key.n()
        )));
    }
    let signals: Vec<_> = latents.frames().iter().map(|f| f.extract_signs()).collect();
    decode_signals(key, &signals)
}

/// Fraction of differing bits.
pub fn hamming(a: &BitVec, b: &BitVec) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.hamming(b) as f64 / a.len() as f64)
}

/// `2(d_H − 0.5)`: −1 for identical messages, +1 for complements.
pub fn normalized_distance(a: &BitVec, b: &BitVec) -> Result<f64> {
    Ok(2.0 * (hamming(a, b)? - 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum AlignOp {
    /// Reference entry `i` and decoded frame `j` carry the same message.
    Match { i: usize, j: usize },
    /// Reference entry `i` is paired with a differing or null frame `j`.
    Substitute { i: usize, j: usize },
    /// Decoded frame `j` has no reference counterpart.
    Insert { j: usize },
    /// Reference entry `i` has no decoded counterpart.
    Delete { i: usize },
}

impl AlignOp {
    /// The decoded frame paired with a reference entry, if any.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            AlignOp::Match { i, j } | AlignOp::Substitute { i, j } => Some((i, j)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    /// Schedule index of reference entry 0.
    pub start: usize,
    /// Reference indices in `ops` are relative to `start`.
    pub ops: Vec<AlignOp>,
    pub cost: f64,
}

impl AlignmentPath {
    /// Reference entries consumed, i.e. one past the last aligned or deleted
    /// entry.
    pub fn consumed(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|op| match *op {
                AlignOp::Match { i, .. }
                | AlignOp::Substitute { i, .. }
                | AlignOp::Delete { i } => Some(i + 1),
                AlignOp::Insert { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Precomputed diagonal costs, `sub[i][j]`.
struct CostTable {
    rows: usize,
    cols: usize,
    sub: Vec<f64>,
    exact: Vec<bool>,
}

impl CostTable {
    fn build(reference: &[&BitVec], decoded: &[Option<BitVec>]) -> Result<Self> {
        let (rows, cols) = (reference.len(), decoded.len());
        let mut sub = Vec::with_capacity(rows * cols);
        let mut exact = Vec::with_capacity(rows * cols);
        for r in reference {
            for d in decoded {
                match d {
                    Some(d) => {
                        sub.push(normalized_distance(r, d)?);
                        exact.push(*r == d);
                    }
                    None => {
                        sub.push(1.0);
                        exact.push(false);
                    }
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            sub,
            exact,
        })
    }

    #[inline]
    fn sub(&self, i: usize, j: usize) -> f64 {
        self.sub[i * self.cols + j]
    }

    #[inline]
    fn exact(&self, i: usize, j: usize) -> bool {
        self.exact[i * self.cols + j]
    }
}

/// Tolerance for treating two accumulated costs as tied.
const TIE_EPS: f64 = 1e-9;

/// Edit-distance DP over a cost table. With `free_tail`, reference entries
/// left after the last decoded frame cost nothing.
fn align(table: &CostTable, free_tail: bool) -> (f64, Vec<AlignOp>) {
    let (n, m) = (table.rows, table.cols);
    let w = m + 1;
    let mut d = vec![0.0f64; (n + 1) * w];
    for (j, v) in d.iter_mut().enumerate().take(m + 1) {
        *v = j as f64;
    }
    for i in 1..=n {
        d[i * w] = i as f64;
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + table.sub(i - 1, j - 1);
            let ins = d[i * w + j - 1] + 1.0;
            let del = d[(i - 1) * w + j] + 1.0;
            d[i * w + j] = diag.min(ins).min(del);
        }
    }
    let end = if free_tail {
        (0..=n)
            .min_by(|&a, &b| {
                let (ca, cb) = (d[a * w + m], d[b * w + m]);
                if (ca - cb).abs() <= TIE_EPS {
                    std::cmp::Ordering::Equal
                } else {
                    ca.total_cmp(&cb)
                }
            })
            .unwrap()
    } else {
        n
    };
    let cost = d[end * w + m];

    // trace back preferring diagonal, then insert, then delete
    let mut ops = Vec::with_capacity(end + m);
    let (mut i, mut j) = (end, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0
            && j > 0
            && (d[(i - 1) * w + j - 1] + table.sub(i - 1, j - 1) - here).abs() <= TIE_EPS
        {
            ops.push(if table.exact(i - 1, j - 1) {
                AlignOp::Match { i: i - 1, j: j - 1 }
            } else {
                AlignOp::Substitute { i: i - 1, j: j - 1 }
            });
            i -= 1;
            j -= 1;
        } else if j > 0 && (d[i * w + j - 1] + 1.0 - here).abs() <= TIE_EPS {
            ops.push(AlignOp::Insert { j: j - 1 });
            j -= 1;
        } else {
            ops.push(AlignOp::Delete { i: i - 1 });
            i -= 1;
        }
    }
    ops.reverse();
    (cost, ops)
}

/// Global alignment cost of `decoded` against `reference`, with the path.
pub fn edit_distance(
    reference: &[BitVec],
    decoded: &[Option<BitVec>],
) -> Result<(f64, Vec<AlignOp>)> {
    if reference.is_empty() {
        return Err(Error::InvalidParams("reference sequence is empty".into()));
    }
    let refs: Vec<&BitVec> = reference.iter().collect();
    Ok(align(&CostTable::build(&refs, decoded)?, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub path: AlignmentPath,
    /// Schedule entries paired with decoded frames, in order.
    pub recovered: Vec<BitVec>,
    /// Schedule index of each decoded frame: its own entry when the frame
    /// decodes to a schedule message, otherwise the entry the path pairs it
    /// with (`None` for inserts).
    pub frame_index: Vec<Option<usize>>,
    /// Fraction of frames aligned to their true position, when known.
    pub matching_accuracy: Option<f64>,
}

impl MatchResult {
    /// The slice of the schedule covered by the alignment.
    pub fn window<'a>(&self, schedule: &'a MessageSchedule) -> &'a [BitVec] {
        let end = (self.path.start + self.path.consumed().max(1)).min(schedule.len());
        &schedule.messages()[self.path.start..end]
    }
}

/// Finds the start index and alignment of minimal cost over every candidate
/// start. `truth[j]` is the schedule index that decoded frame `j` really
/// carries, or `None` for a foreign frame.
pub fn temporal_match(
    schedule: &MessageSchedule,
    decoded: &[Option<BitVec>],
    truth: Option<&[Option<usize>]>,
) -> Result<MatchResult> {
    if decoded.is_empty() {
        return Err(Error::InvalidParams("no decoded frames".into()));
    }
    if let Some(t) = truth {
        check_len(decoded.len(), t.len())?;
    }
    let l = schedule.len();
    let span = decoded.len() + ALIGN_SLACK;
    let all: Vec<&BitVec> = schedule.messages().iter().collect();
    let table = CostTable::build(&all, decoded)?;
    let m = decoded.len();

    let candidates: Vec<(f64, Vec<AlignOp>)> = (0..l)
        .into_par_iter()
        .map(|s| {
            let end = (s + span).min(l);
            let sub = CostTable {
                rows: end - s,
                cols: m,
                sub: table.sub[s * m..end * m].to_vec(),
                exact: table.exact[s * m..end * m].to_vec(),
            };
            align(&sub, true)
        })
        .collect();
    let mut best = 0;
    for (s, c) in candidates.iter().enumerate() {
        if c.0 < candidates[best].0 - TIE_EPS {
            best = s;
        }
    }
    let (cost, ops) = candidates.into_iter().nth(best).unwrap();

    let mut frame_index = vec![None; m];
    let mut recovered = Vec::new();
    for op in &ops {
        if let Some((i, j)) = op.pair() {
            frame_index[j] = Some(best + i);
            recovered.push(schedule.messages()[best + i].clone());
        }
    }
    // A decoded frame names its own schedule entry; the path only places
    // frames that carry no readable message. This keeps swapped frames at
    // their true index.
    let lookup: HashMap<&BitVec, usize> = schedule
        .messages()
        .iter()
        .enumerate()
        .map(|(i, msg)| (msg, i))
        .collect();
    let mut claimed = HashSet::new();
    let mut from_path = vec![false; m];
    for ((slot, d), path_only) in frame_index.iter_mut().zip(decoded).zip(&mut from_path) {
        match d.as_ref().and_then(|msg| lookup.get(msg)) {
            Some(&i) => {
                *slot = Some(i);
                claimed.insert(i);
            }
            None => *path_only = true,
        }
    }
    // an entry named by a decoded frame cannot also be placed by the path
    for (slot, path_only) in frame_index.iter_mut().zip(&from_path) {
        if *path_only && slot.is_some_and(|i| claimed.contains(&i)) {
            *slot = None;
        }
    }
    let matching_accuracy = truth.map(|t| {
        let hits = t.iter().zip(&frame_index).filter(|(a, b)| a == b).count();
        hits as f64 / m as f64
    });
    Ok(MatchResult {
        path: AlignmentPath {
            start: best,
            ops,
            cost,
        },
        recovered,
        frame_index,
        matching_accuracy,
    })
}

/// Which sequence the decoded frames are compared against for detection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The schedule slice recovered by temporal matching.
    #[default]
    Window,
    /// The whole schedule.
    FullList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub edit_distance: f64,
    pub null_distances: Vec<f64>,
    pub p_value: f64,
    pub decision: bool,
    pub tau: f64,
    pub recovered: Vec<BitVec>,
    pub alignment: AlignmentPath,
    /// Schedule index assigned to each decoded frame.
    #[serde(default)]
    pub frame_index: Vec<Option<usize>>,
    pub matching_accuracy: Option<f64>,
}

/// `(1 + #{null ≤ actual}) / N`, capped at 1.
///
/// Ties count against detection so that a sequence carrying no evidence
/// (e.g. every frame null) gets `p = 1` rather than the floor.
pub fn rank_p_value(actual: f64, nulls: &[f64]) -> f64 {
    let le = nulls.iter().filter(|&&d| d <= actual + TIE_EPS).count();
    ((1 + le) as f64 / nulls.len() as f64).min(1.0)
}

/// Compares the edit distance of `decoded` against `reference` with the
/// distances to `samples` random sequences of the same shape.
pub fn detect<R: Rng + ?Sized>(
    reference: &[BitVec],
    decoded: &[Option<BitVec>],
    samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<DetectionReport> {
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one null sample".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParams(format!(
            "tau = {tau} must lie in (0, 1)"
        )));
    }
    let (actual, ops) = edit_distance(reference, decoded)?;
    let k = reference[0].len();
    let nulls: Vec<Vec<BitVec>> = (0..samples)
        .map(|_| {
            (0..reference.len())
                .map(|_| BitVec::random(k, rng))
                .collect()
        })
        .collect();
    let null_distances = nulls
        .par_iter()
        .map(|r| edit_distance(r, decoded).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    let p_value = rank_p_value(actual, &null_distances);
    let recovered = ops
        .iter()
        .filter_map(|op| op.pair().map(|(i, _)| reference[i].clone()))
        .collect();
    Ok(DetectionReport {
        edit_distance: actual,
        null_distances,
        p_value,
        decision: p_value < tau,
        tau,
        recovered,
        alignment: AlignmentPath {
            start: 0,
            ops,
            cost: actual,
        },
        frame_index: Vec::new(),
        matching_accuracy: None,
    })
}

/// Temporal matching followed by detection against the chosen reference.
pub fn match_and_detect<R: Rng + ?Sized>(
    schedule: &MessageSchedule,
    decoded: &[Option<BitVec>],
    truth: Option<&[Option<usize>]>,
    mode: ReferenceMode,
    samples: usize,
    tau: f64,
    rng: &mut R,
) -> Result<DetectionReport> {
    let matched = temporal_match(schedule, decoded, truth)?;
    let reference = match mode {
        ReferenceMode::Window => matched.window(schedule),
        ReferenceMode::FullList => schedule.messages(),
    };
    let mut report = detect(reference, decoded, samples, tau, rng)?;
    report.recovered = matched.recovered;
    report.alignment = matched.path;
    report.frame_index = matched.frame_index;
    report.matching_accuracy = matched.matching_accuracy;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitVec {
        BitVec::from_bools(&s.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    #[test]
    fn distances() {
        let a = bits("0101");
        assert_eq!(hamming(&a, &a).unwrap(), 0.0);
        assert_eq!(hamming(&a, &bits("1010")).unwrap(), 1.0);
        assert_eq!(normalized_distance(&a, &a).unwrap(), -1.0);
        assert_eq!(normalized_distance(&a, &bits("1010")).unwrap(), 1.0);
        assert_eq!(normalized_distance(&a, &bits("0100")).unwrap(), -0.5);
        assert!(hamming(&a, &bits("01")).is_err());
    }

    fn distinct(count: usize, k: usize, seed: u64) -> Vec<BitVec> {
        MessageSchedule::build(count, k, seed)
            .unwrap()
            .messages()
            .to_vec()
    }

    #[test]
    fn self_alignment_and_single_drop() {
        let r = distinct(8, 32, 1);
        let dec: Vec<_> = r.iter().cloned().map(Some).collect();
        let (c, ops) = edit_distance(&r, &dec).unwrap();
        assert_eq!(c, -8.0);
        assert!(ops.iter().all(|o| matches!(o, AlignOp::Match { .. })));
        let mut dropped = dec.clone();
        dropped.remove(3);
        let (c, ops) = edit_distance(&r, &dropped).unwrap();
        assert_eq!(c, -7.0 + 1.0);
        assert_eq!(
            ops.iter()
                .filter(|o| matches!(o, AlignOp::Delete { i: 3 }))
                .count(),
            1
        );
    }

    #[test]
    fn null_frames_substitute() {
        let r = distinct(3, 16, 2);
        let dec = vec![Some(r[0].clone()), None, Some(r[2].clone())];
        let (c, ops) = edit_distance(&r, &dec).unwrap();
        assert_eq!(c, -1.0);
        assert_eq!(ops[1], AlignOp::Substitute { i: 1, j: 1 });
        assert!(edit_distance(&[], &dec).is_err());
    }

    #[test]
    fn match_finds_embedded_start() {
        let s = MessageSchedule::build(64, 32, 3).unwrap();
        let dec: Vec<_> = s.messages()[20..36].iter().cloned().map(Some).collect();
        let truth: Vec<_> = (20..36).map(Some).collect();
        let m = temporal_match(&s, &dec, Some(&truth)).unwrap();
        assert_eq!(m.path.start, 20);
        assert_eq!(m.matching_accuracy, Some(1.0));
        assert_eq!(m.recovered, s.messages()[20..36].to_vec());
        assert_eq!(m.window(&s).len(), 16);
    }

    #[test]
    fn match_near_the_end_of_the_list() {
        let s = MessageSchedule::build(32, 32, 4).unwrap();
        let dec: Vec<_> = s.messages()[16..32].iter().cloned().map(Some).collect();
        let m = temporal_match(&s, &dec, None).unwrap();
        assert_eq!(m.path.start, 16);
        assert_eq!(m.path.cost, -16.0);
    }

    #[test]
    fn inserted_frame_is_aligned_as_insert() {
        let s = MessageSchedule::build(64, 32, 5).unwrap();
        let mut dec: Vec<_> = s.messages()[10..26].iter().cloned().map(Some).collect();
        let mut truth: Vec<_> = (10..26).map(Some).collect();
        dec.insert(5, None);
        truth.insert(5, None);
        let m = temporal_match(&s, &dec, Some(&truth)).unwrap();
        assert_eq!(m.path.start, 10);
        assert!(m.path.ops.contains(&AlignOp::Insert { j: 5 }));
        assert_eq!(m.matching_accuracy, Some(1.0));
        assert_eq!(m.recovered, s.messages()[10..26].to_vec());
    }

    #[test]
    fn swapped_frames_keep_their_index() {
        let s = MessageSchedule::build(64, 32, 8).unwrap();
        let mut dec: Vec<_> = s.messages()[4..20].iter().cloned().map(Some).collect();
        let mut truth: Vec<_> = (4..20).map(Some).collect();
        dec.swap(0, 15);
        truth.swap(0, 15);
        let m = temporal_match(&s, &dec, Some(&truth)).unwrap();
        assert_eq!(m.path.start, 4);
        assert_eq!(m.matching_accuracy, Some(1.0));
        assert_eq!(m.frame_index[0], Some(19));
    }

    #[test]
    fn placed_frames_do_not_reuse_named_entries() {
        let s = MessageSchedule::build(64, 32, 9).unwrap();
        let mut dec: Vec<_> = s.messages()[0..16].iter().cloned().map(Some).collect();
        let mut truth: Vec<_> = (0..16).map(Some).collect();
        dec.insert(5, None);
        truth.insert(5, None);
        dec.remove(3);
        truth.remove(3);
        let m = temporal_match(&s, &dec, Some(&truth)).unwrap();
        assert_eq!(m.frame_index, truth);
        assert_eq!(m.matching_accuracy, Some(1.0));
    }

    #[test]
    fn rank_rule() {
        assert_eq!(rank_p_value(-16.0, &[0.0; 1000]), 0.001);
        assert_eq!(rank_p_value(16.0, &[16.0; 1000]), 1.0);
        assert_eq!(rank_p_value(0.0, &[1.0]), 1.0);
        assert_eq!(rank_p_value(0.5, &[0.0, 1.0, 2.0, 3.0]), 0.5);
    }

    #[test]
    fn detection_of_clean_and_empty_sequences() {
        let r = distinct(16, 64, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dec: Vec<_> = r.iter().cloned().map(Some).collect();
        let rep = detect(&r, &dec, 1000, 0.005, &mut rng).unwrap();
        assert_eq!(rep.p_value, 0.001);
        assert!(rep.decision);
        let none = vec![None; 16];
        let rep = detect(&r, &none, 1000, 0.005, &mut rng).unwrap();
        assert_eq!(rep.p_value, 1.0);
        assert!(!rep.decision);
        assert!(detect(&r, &dec, 0, 0.005, &mut rng).is_err());
        assert!(detect(&r, &dec, 10, 1.0, &mut rng).is_err());
    }

    #[test]
    fn report_serializes_messages_as_hex() {
        let r = distinct(2, 16, 7);
        let dec: Vec<_> = r.iter().cloned().map(Some).collect();
        let rep = detect(&r, &dec, 5, 0.5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["recovered"][0], r[0].to_hex());
        assert_eq!(json["alignment"]["ops"][0]["op"], "match");
        let back: DetectionReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, rep);
    }
}
