//! Label topologies on the time grid and the bijection between
//! blank-augmented alignment paths and segmentations.
//!
//! Two topologies are supported. Both consume all `T` frames:
//!
//! * RNN-T: boundaries satisfy `t_{s-1} <= t_s <= T` with origin 1; a path
//!   has `U = T + S` symbols, grid step `u = t + s - 1`, and always ends in
//!   a terminating blank. Several labels may share a frame (vertical
//!   transitions), including zero-length segments.
//! * Strictly monotonic: boundaries satisfy `t_{s-1} < t_s <= T` with
//!   origin 0; a path has exactly `U = T` symbols and `u = t`, so at most
//!   one label per frame.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TransegError};
use crate::vocab::LabelId;

/// 1-indexed frame number. The boundary origin (`0` for strictly
/// monotonic, `1` for RNN-T) is also carried in this type.
pub type Frame = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Rnnt,
    StrictMonotonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    /// Frame count `T`, at least 1.
    #[serde(rename = "T")]
    pub frames: Frame,
}

impl Topology {
    pub fn rnnt(frames: Frame) -> Self {
        assert!(frames >= 1, "frame count must be positive");
        Topology {
            kind: TopologyKind::Rnnt,
            frames,
        }
    }

    pub fn strict_monotonic(frames: Frame) -> Self {
        assert!(frames >= 1, "frame count must be positive");
        Topology {
            kind: TopologyKind::StrictMonotonic,
            frames,
        }
    }

    /// The boundary sentinel `t_0`: 1 for RNN-T, 0 for strict monotonicity.
    pub fn origin(&self) -> Frame {
        match self.kind {
            TopologyKind::Rnnt => 1,
            TopologyKind::StrictMonotonic => 0,
        }
    }

    /// Candidate boundaries for the segment after one ending at `prev`.
    /// Empty iff `prev == T` under strict monotonicity.
    pub fn boundary_candidates(&self, prev: Frame) -> std::ops::RangeInclusive<Frame> {
        match self.kind {
            TopologyKind::Rnnt => prev..=self.frames,
            TopologyKind::StrictMonotonic => prev + 1..=self.frames,
        }
    }

    /// Whether `next` is a valid boundary after `prev`.
    pub fn boundary_ok(&self, prev: Frame, next: Frame) -> bool {
        next <= self.frames
            && match self.kind {
                TopologyKind::Rnnt => next >= prev,
                TopologyKind::StrictMonotonic => next > prev,
            }
    }

    /// Path length for a label sequence of length `s`.
    pub fn path_len(&self, s: usize) -> usize {
        match self.kind {
            TopologyKind::Rnnt => self.frames as usize + s,
            TopologyKind::StrictMonotonic => self.frames as usize,
        }
    }
}

/// A blank-augmented alignment sequence `y_1^U`; `None` is blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentPath {
    symbols: Vec<Option<LabelId>>,
    topology: Topology,
}

impl AlignmentPath {
    /// Validates the path against its topology: strict monotonicity demands
    /// length exactly `T`; RNN-T demands length `T + S` and a final blank.
    pub fn new(symbols: Vec<Option<LabelId>>, topology: Topology) -> Result<Self> {
        let labels = symbols.iter().filter(|s| s.is_some()).count();
        match topology.kind {
            TopologyKind::Rnnt => {
                let expected = topology.frames as usize + labels;
                if symbols.len() != expected {
                    return Err(TransegError::InvalidPath(format!(
                        "RNN-T path with {labels} labels over T={} must have {expected} symbols, got {}",
                        topology.frames,
                        symbols.len()
                    )));
                }
                if symbols.last() != Some(&None) {
                    return Err(TransegError::InvalidPath(
                        "RNN-T path must end in the terminating blank".into(),
                    ));
                }
            }
            TopologyKind::StrictMonotonic => {
                if symbols.len() != topology.frames as usize {
                    return Err(TransegError::InvalidPath(format!(
                        "strictly monotonic path must have T={} symbols, got {}",
                        topology.frames,
                        symbols.len()
                    )));
                }
            }
        }
        Ok(AlignmentPath { symbols, topology })
    }

    pub fn symbols(&self) -> &[Option<LabelId>] {
        &self.symbols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn label_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_some()).count()
    }
}

/// A label sequence with explicit segment boundaries. The final sentinel
/// segment (sentence end at frame `T`) is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    labels: Vec<LabelId>,
    boundaries: Vec<Frame>,
    topology: Topology,
}

impl Segmentation {
    pub fn new(labels: Vec<LabelId>, boundaries: Vec<Frame>, topology: Topology) -> Result<Self> {
        if labels.len() != boundaries.len() {
            return Err(TransegError::InvalidSegmentation(format!(
                "{} labels but {} boundaries",
                labels.len(),
                boundaries.len()
            )));
        }
        let mut prev = topology.origin();
        for (s, &t) in boundaries.iter().enumerate() {
            if t < 1 || t > topology.frames {
                return Err(TransegError::InvalidSegmentation(format!(
                    "boundary t_{}={t} outside [1, {}]",
                    s + 1,
                    topology.frames
                )));
            }
            if !topology.boundary_ok(prev, t) {
                return Err(TransegError::InvalidSegmentation(format!(
                    "boundary t_{}={t} violates monotonicity after {prev} ({:?})",
                    s + 1,
                    topology.kind
                )));
            }
            prev = t;
        }
        Ok(Segmentation {
            labels,
            boundaries,
            topology,
        })
    }

    pub fn empty(topology: Topology) -> Self {
        Segmentation {
            labels: Vec::new(),
            boundaries: Vec::new(),
            topology,
        }
    }

    pub fn labels(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn boundaries(&self) -> &[Frame] {
        &self.boundaries
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Rewrite an alignment path as a segmentation: the `s`-th label at path
/// position `u_s` gets boundary `u_s - s + 1` (RNN-T) or `u_s` (strict).
pub fn path_to_segmentation(path: &AlignmentPath) -> Segmentation {
    let topology = path.topology();
    let mut labels = Vec::new();
    let mut boundaries = Vec::new();
    for (i, sym) in path.symbols().iter().enumerate() {
        if let Some(label) = sym {
            let u = (i + 1) as Frame;
            let t = match topology.kind {
                TopologyKind::Rnnt => u - labels.len() as Frame,
                TopologyKind::StrictMonotonic => u,
            };
            labels.push(*label);
            boundaries.push(t);
        }
    }
    // A valid path always yields a valid segmentation.
    Segmentation::new(labels, boundaries, topology).expect("bijection from valid path")
}

/// Exact inverse of [`path_to_segmentation`]: place label `s` at grid step
/// `t_s + s - 1` (RNN-T) or `t_s` (strict), blanks elsewhere, with the
/// RNN-T terminating blank appended.
pub fn segmentation_to_path(seg: &Segmentation) -> AlignmentPath {
    let topology = seg.topology();
    let len = topology.path_len(seg.len());
    let mut symbols: Vec<Option<LabelId>> = vec![None; len];
    for (s, (&label, &t)) in seg.labels().iter().zip(seg.boundaries()).enumerate() {
        let u = match topology.kind {
            TopologyKind::Rnnt => t as usize + s,
            TopologyKind::StrictMonotonic => t as usize,
        };
        symbols[u - 1] = Some(label);
    }
    AlignmentPath::new(symbols, topology).expect("bijection from valid segmentation")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(i: u32) -> Option<LabelId> {
        Some(LabelId(i))
    }

    #[test]
    fn rnnt_path_to_segmentation_examples() {
        let topo = Topology::rnnt(2);
        // (a, blank, blank) -> labels (a), boundaries (1)
        let p = AlignmentPath::new(vec![l(0), None, None], topo).unwrap();
        let seg = path_to_segmentation(&p);
        assert_eq!(seg.labels(), &[LabelId(0)]);
        assert_eq!(seg.boundaries(), &[1]);
        // all-blank path -> empty segmentation
        let p = AlignmentPath::new(vec![None, None], topo).unwrap();
        let seg = path_to_segmentation(&p);
        assert!(seg.is_empty());
    }

    #[test]
    fn strict_path_to_segmentation_example() {
        let topo = Topology::strict_monotonic(2);
        let p = AlignmentPath::new(vec![l(0), l(1)], topo).unwrap();
        let seg = path_to_segmentation(&p);
        assert_eq!(seg.labels(), &[LabelId(0), LabelId(1)]);
        assert_eq!(seg.boundaries(), &[1, 2]);
    }

    #[test]
    fn rnnt_segmentation_to_path_examples() {
        let topo = Topology::rnnt(2);
        let seg = Segmentation::new(vec![LabelId(0)], vec![2], topo).unwrap();
        let p = segmentation_to_path(&seg);
        assert_eq!(p.symbols(), &[None, l(0), None]);
        // two vertical transitions at t=1
        let seg = Segmentation::new(vec![LabelId(0), LabelId(0)], vec![1, 1], topo).unwrap();
        let p = segmentation_to_path(&seg);
        assert_eq!(p.symbols(), &[l(0), l(0), None, None]);
    }

    #[test]
    fn strict_segmentation_to_path_example() {
        let topo = Topology::strict_monotonic(3);
        let seg = Segmentation::new(vec![LabelId(1)], vec![2], topo).unwrap();
        let p = segmentation_to_path(&seg);
        assert_eq!(p.symbols(), &[None, l(1), None]);
    }

    #[test]
    fn malformed_paths_rejected() {
        let topo = Topology::rnnt(2);
        // wrong length
        assert!(AlignmentPath::new(vec![l(0), None], topo).is_err());
        // not ending in blank
        assert!(AlignmentPath::new(vec![None, None, l(0)], topo).is_err());
        let topo = Topology::strict_monotonic(2);
        assert!(AlignmentPath::new(vec![None], topo).is_err());
    }

    #[test]
    fn boundary_violations_rejected() {
        let rnnt = Topology::rnnt(3);
        assert!(Segmentation::new(vec![LabelId(0); 2], vec![2, 1], rnnt).is_err());
        assert!(Segmentation::new(vec![LabelId(0)], vec![4], rnnt).is_err());
        let strict = Topology::strict_monotonic(3);
        // equal boundaries violate strict monotonicity
        assert!(Segmentation::new(vec![LabelId(0); 2], vec![2, 2], strict).is_err());
        assert!(Segmentation::new(vec![LabelId(0); 2], vec![1, 2], strict).is_ok());
    }

    /// Every valid path round-trips, exhaustively for small grids.
    #[test]
    fn bijection_exhaustive_small() {
        for kind in [TopologyKind::Rnnt, TopologyKind::StrictMonotonic] {
            for frames in 1..=4u32 {
                let topo = Topology { kind, frames };
                let max_s = match kind {
                    TopologyKind::Rnnt => 3usize,
                    TopologyKind::StrictMonotonic => frames as usize,
                };
                for s in 0..=max_s {
                    for seg in enumerate_segmentations(topo, s, 2) {
                        let path = segmentation_to_path(&seg);
                        assert_eq!(path_to_segmentation(&path), seg);
                    }
                }
                // and path-side: enumerate all symbol sequences of the right shape
                for path in enumerate_paths_raw(topo, max_s, 2) {
                    let seg = path_to_segmentation(&path);
                    assert_eq!(segmentation_to_path(&seg), path);
                }
            }
        }
    }

    /// RNN-T path count for a fixed label sequence is C(T+S-1, S).
    #[test]
    fn rnnt_path_counting() {
        fn binomial(n: u64, k: u64) -> u64 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for frames in 1..=4u32 {
            let topo = Topology::rnnt(frames);
            for s in 0..=3usize {
                let count = enumerate_segmentations(topo, s, 1).len() as u64;
                assert_eq!(count, binomial(frames as u64 + s as u64 - 1, s as u64));
            }
        }
    }

    fn enumerate_segmentations(topo: Topology, s: usize, vocab: usize) -> Vec<Segmentation> {
        let mut out = Vec::new();
        let mut tuples: Vec<Vec<Frame>> = vec![Vec::new()];
        for _ in 0..s {
            let mut next = Vec::new();
            for tuple in &tuples {
                let prev = *tuple.last().unwrap_or(&topo.origin());
                for t in topo.boundary_candidates(prev) {
                    let mut ext = tuple.clone();
                    ext.push(t);
                    next.push(ext);
                }
            }
            tuples = next;
        }
        for tuple in tuples {
            let mut assignments: Vec<Vec<LabelId>> = vec![Vec::new()];
            for _ in 0..s {
                let mut next = Vec::new();
                for a in &assignments {
                    for v in 0..vocab as u32 {
                        let mut ext = a.clone();
                        ext.push(LabelId(v));
                        next.push(ext);
                    }
                }
                assignments = next;
            }
            for labels in assignments {
                out.push(Segmentation::new(labels, tuple.clone(), topo).unwrap());
            }
        }
        out
    }

    fn enumerate_paths_raw(topo: Topology, max_s: usize, vocab: usize) -> Vec<AlignmentPath> {
        let mut out = Vec::new();
        for s in 0..=max_s {
            let len = topo.path_len(s);
            let mut seqs: Vec<Vec<Option<LabelId>>> = vec![Vec::new()];
            for _ in 0..len {
                let mut next = Vec::new();
                for seq in &seqs {
                    let mut with = |sym| {
                        let mut ext = seq.clone();
                        ext.push(sym);
                        next.push(ext);
                    };
                    with(None);
                    for v in 0..vocab as u32 {
                        with(Some(LabelId(v)));
                    }
                }
                seqs = next;
            }
            for seq in seqs {
                if let Ok(p) = AlignmentPath::new(seq, topo) {
                    if p.label_count() == s {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}
