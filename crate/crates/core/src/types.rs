//! Domain types for step graphon-signals, graph-signals, partitions, and the
//! conversions between them.
//!
//! Everything lives on an interval equipartition of `[0,1]` into `m` blocks:
//! a graphon is an `m x m` symmetric block matrix with entries in `[0,1]`, a
//! signal is an `m x d` block-constant function bounded by `r`. A finite
//! graph-signal induces such a pair by assigning each node an equal-length
//! interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric step graphon: constant value per cell of the `m x m` block grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    resolution: usize,
    /// Row-major `m x m` values in `[0,1]`.
    values: Vec<f64>,
}

impl StepGraphon {
    pub fn from_values(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Invalid("graphon resolution must be positive".into()));
        }
        if values.len() != resolution * resolution {
            return Err(Error::Invalid(format!(
                "graphon needs {}x{} values, got {}",
                resolution,
                resolution,
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!(
                    "graphon value {v} at flat index {idx} is outside [0,1]"
                )));
            }
        }
        for i in 0..resolution {
            for j in (i + 1)..resolution {
                if values[i * resolution + j] != values[j * resolution + i] {
                    return Err(Error::Invalid(format!(
                        "graphon is not symmetric at block ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { resolution, values })
    }

    pub fn constant(resolution: usize, value: f64) -> Result<Self> {
        Self::from_values(resolution, vec![value; resolution * resolution])
    }

    /// Step graphon over `k` equal classes from a `k x k` symmetric block-value
    /// matrix, refined to resolution `m` (`k` must divide `m`).
    pub fn from_blocks(block_values: &[Vec<f64>], resolution: usize) -> Result<Self> {
        let k = block_values.len();
        if k == 0 || resolution % k != 0 {
            return Err(Error::Invalid(format!(
                "block count {k} must be positive and divide resolution {resolution}"
            )));
        }
        let f = resolution / k;
        let mut values = vec![0.0; resolution * resolution];
        for i in 0..resolution {
            let bi = i / f;
            if block_values[bi].len() != k {
                return Err(Error::Invalid("block-value matrix is not square".into()));
            }
            for j in 0..resolution {
                values[i * resolution + j] = block_values[bi][j / f];
            }
        }
        Self::from_values(resolution, values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Difference `self - other` as a signed kernel.
    pub fn sub(&self, other: &StepGraphon) -> Result<Kernel> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                left: self.resolution,
                right: other.resolution,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Kernel {
            resolution: self.resolution,
            values,
        })
    }

    /// View the graphon itself as a (nonnegative) kernel.
    pub fn as_kernel(&self) -> Kernel {
        Kernel {
            resolution: self.resolution,
            values: self.values.clone(),
        }
    }
}

/// Signed `m x m` block kernel; differences of step graphons land here.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    resolution: usize,
    values: Vec<f64>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.resolution;
        let rows: Vec<&[f64]> = (0..m).map(|i| &self.values[i * m..(i + 1) * m]).collect();
        rows.serialize(ser)
    }
}

impl Kernel {
    pub fn from_values(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 || values.len() != resolution * resolution {
            return Err(Error::Invalid(format!(
                "kernel needs {}x{} values, got {}",
                resolution,
                resolution,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("kernel values must be finite".into()));
        }
        Ok(Self { resolution, values })
    }

    pub fn constant(resolution: usize, value: f64) -> Self {
        Self {
            resolution,
            values: vec![value; resolution * resolution],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.resolution..(i + 1) * self.resolution]
    }

    pub fn transpose(&self) -> Kernel {
        let m = self.resolution;
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                values[j * m + i] = self.values[i * m + j];
            }
        }
        Kernel {
            resolution: m,
            values,
        }
    }

    pub fn negate(&self) -> Kernel {
        Kernel {
            resolution: self.resolution,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Block-constant signal: `m` blocks, `d` channels, entries in `[-r, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSignal {
    resolution: usize,
    channels: usize,
    /// Row-major `m x d`.
    values: Vec<f64>,
    bound: f64,
}

impl StepSignal {
    pub fn from_values(
        resolution: usize,
        channels: usize,
        values: Vec<f64>,
        bound: f64,
    ) -> Result<Self> {
        if resolution == 0 || channels == 0 {
            return Err(Error::Invalid(
                "signal resolution and channel count must be positive".into(),
            ));
        }
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::Invalid(format!("signal bound {bound} must be positive")));
        }
        if values.len() != resolution * channels {
            return Err(Error::Invalid(format!(
                "signal needs {}x{} values, got {}",
                resolution,
                channels,
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > bound {
                return Err(Error::Invalid(format!(
                    "signal value {v} at flat index {idx} exceeds the bound {bound}"
                )));
            }
        }
        Ok(Self {
            resolution,
            channels,
            values,
            bound,
        })
    }

    /// Single-channel signal from a plain vector.
    pub fn scalar(values: Vec<f64>, bound: f64) -> Result<Self> {
        Self::from_values(values.len(), 1, values, bound)
    }

    pub fn constant(resolution: usize, value: &[f64], bound: f64) -> Result<Self> {
        let channels = value.len();
        let mut values = Vec::with_capacity(resolution * channels);
        for _ in 0..resolution {
            values.extend_from_slice(value);
        }
        Self::from_values(resolution, channels, values, bound)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn value(&self, block: usize, channel: usize) -> f64 {
        self.values[block * self.channels + channel]
    }

    pub fn block(&self, block: usize) -> &[f64] {
        &self.values[block * self.channels..(block + 1) * self.channels]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Difference `self - other`; the bound grows to `r1 + r2`.
    pub fn sub(&self, other: &StepSignal) -> Result<StepSignal> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                left: self.resolution,
                right: other.resolution,
            });
        }
        if self.channels != other.channels {
            return Err(Error::DimensionMismatch {
                expected: self.channels,
                got: other.channels,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(StepSignal {
            resolution: self.resolution,
            channels: self.channels,
            values,
            bound: self.bound + other.bound,
        })
    }

    /// Largest `|value|` over all blocks and channels.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// A step graphon paired with a step signal on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphonSignal {
    graphon: StepGraphon,
    signal: StepSignal,
}

impl GraphonSignal {
    pub fn new(graphon: StepGraphon, signal: StepSignal) -> Result<Self> {
        if graphon.resolution() != signal.resolution() {
            return Err(Error::ResolutionMismatch {
                left: graphon.resolution(),
                right: signal.resolution(),
            });
        }
        Ok(Self { graphon, signal })
    }

    pub fn graphon(&self) -> &StepGraphon {
        &self.graphon
    }

    pub fn signal(&self) -> &StepSignal {
        &self.signal
    }

    pub fn resolution(&self) -> usize {
        self.graphon.resolution()
    }

    pub fn into_parts(self) -> (StepGraphon, StepSignal) {
        (self.graphon, self.signal)
    }

    /// Replace the signal, keeping the graphon (what a message passing layer does).
    pub fn with_signal(&self, signal: StepSignal) -> Result<Self> {
        Self::new(self.graphon.clone(), signal)
    }
}

/// Finite weighted graph with node features; adjacency entries in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    n: usize,
    /// Row-major `n x n`, symmetric.
    adjacency: Vec<f64>,
    channels: usize,
    /// Row-major `n x d`.
    features: Vec<f64>,
    bound: f64,
}

impl GraphSignal {
    pub fn new(
        n: usize,
        adjacency: Vec<f64>,
        channels: usize,
        features: Vec<f64>,
        bound: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("graph needs at least one node".into()));
        }
        if adjacency.len() != n * n {
            return Err(Error::Invalid(format!(
                "adjacency needs {}x{} entries, got {}",
                n,
                n,
                adjacency.len()
            )));
        }
        for &a in &adjacency {
            if !a.is_finite() || !(0.0..=1.0).contains(&a) {
                return Err(Error::Invalid(format!("adjacency entry {a} outside [0,1]")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[i * n + j] != adjacency[j * n + i] {
                    return Err(Error::Invalid(format!("adjacency not symmetric at ({i},{j})")));
                }
            }
        }
        if channels == 0 || features.len() != n * channels {
            return Err(Error::Invalid(format!(
                "features need {}x{} entries, got {}",
                n,
                channels,
                features.len()
            )));
        }
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::Invalid(format!("feature bound {bound} must be positive")));
        }
        for &f in &features {
            if !f.is_finite() || f.abs() > bound {
                return Err(Error::Invalid(format!(
                    "feature value {f} exceeds the bound {bound}"
                )));
            }
        }
        Ok(Self {
            n,
            adjacency,
            channels,
            features,
            bound,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.n + j]
    }

    pub fn adjacency(&self) -> &[f64] {
        &self.adjacency
    }

    pub fn feature(&self, i: usize, c: usize) -> f64 {
        self.features[i * self.channels + c]
    }

    pub fn node_features(&self, i: usize) -> &[f64] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Same graph with new node features (message passing keeps the graph intact).
    pub fn with_features(&self, channels: usize, features: Vec<f64>, bound: f64) -> Result<Self> {
        Self::new(self.n, self.adjacency.clone(), channels, features, bound)
    }
}

/// Partition of the `m`-block grid into `k` classes; classes may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    resolution: usize,
    /// `assignment[block] = class index in [0, k)`.
    assignment: Vec<usize>,
    classes: usize,
}

impl Partition {
    pub fn new(resolution: usize, assignment: Vec<usize>, classes: usize) -> Result<Self> {
        if resolution == 0 || assignment.len() != resolution {
            return Err(Error::Invalid(format!(
                "partition assignment must cover {resolution} blocks"
            )));
        }
        if classes == 0 {
            return Err(Error::Invalid("partition needs at least one class".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&c| c >= classes) {
            return Err(Error::Invalid(format!(
                "class index {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            resolution,
            assignment,
            classes,
        })
    }

    /// Every block its own class.
    pub fn discrete(resolution: usize) -> Self {
        Self {
            resolution,
            assignment: (0..resolution).collect(),
            classes: resolution,
        }
    }

    /// All blocks in one class.
    pub fn single(resolution: usize) -> Self {
        Self {
            resolution,
            assignment: vec![0; resolution],
            classes: 1,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn class_of(&self, block: usize) -> usize {
        self.assignment[block]
    }

    /// Blocks of each class, in block order. Length `classes`; empty classes Vec.
    pub fn class_blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes];
        for (block, &c) in self.assignment.iter().enumerate() {
            out[c].push(block);
        }
        out
    }
}

/// Permutation of the `m` grid blocks; the measure preserving bijections
/// representable at a fixed resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalPermutation {
    perm: Vec<usize>,
}

impl IntervalPermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let m = perm.len();
        if m == 0 {
            return Err(Error::Invalid("permutation must be nonempty".into()));
        }
        let mut seen = vec![false; m];
        for &p in &perm {
            if p >= m || seen[p] {
                return Err(Error::Invalid("not a bijection on the blocks".into()));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(resolution: usize) -> Self {
        Self {
            perm: (0..resolution).collect(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.perm.len()
    }

    #[inline]
    pub fn map(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn indices(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> IntervalPermutation {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        IntervalPermutation { perm: inv }
    }

    /// Composition `(self ∘ other)(i) = self(other(i))`, so that applying
    /// `other` then `self` to a graphon-signal equals applying the composite.
    pub fn compose(&self, other: &IntervalPermutation) -> Result<IntervalPermutation> {
        if self.perm.len() != other.perm.len() {
            return Err(Error::ResolutionMismatch {
                left: self.perm.len(),
                right: other.perm.len(),
            });
        }
        Ok(IntervalPermutation {
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Induce the step graphon-signal of a graph-signal: node `i` gets the
/// interval `[i/n, (i+1)/n)`, the graphon copies the adjacency and the signal
/// copies the features.
pub fn induce(g: &GraphSignal) -> GraphonSignal {
    let n = g.node_count();
    let graphon = StepGraphon {
        resolution: n,
        values: g.adjacency.clone(),
    };
    let signal = StepSignal {
        resolution: n,
        channels: g.channels,
        values: g.features.clone(),
        bound: g.bound,
    };
    GraphonSignal { graphon, signal }
}

/// Change the grid resolution. Refinement (`m | m_new`) replicates block
/// values exactly; coarsening (`m_new | m`) averages blocks, which equals
/// projecting onto the coarser equipartition. Anything else is an error.
pub fn resample(x: &GraphonSignal, m_new: usize) -> Result<GraphonSignal> {
    let m = x.resolution();
    if m_new == 0 {
        return Err(Error::Invalid("target resolution must be positive".into()));
    }
    if m_new % m == 0 {
        let f = m_new / m;
        let d = x.signal.channels;
        let mut gvals = vec![0.0; m_new * m_new];
        for i in 0..m_new {
            for j in 0..m_new {
                gvals[i * m_new + j] = x.graphon.value(i / f, j / f);
            }
        }
        let mut svals = vec![0.0; m_new * d];
        for i in 0..m_new {
            svals[i * d..(i + 1) * d].copy_from_slice(x.signal.block(i / f));
        }
        let graphon = StepGraphon {
            resolution: m_new,
            values: gvals,
        };
        let signal = StepSignal {
            resolution: m_new,
            channels: d,
            values: svals,
            bound: x.signal.bound,
        };
        Ok(GraphonSignal { graphon, signal })
    } else if m % m_new == 0 {
        let f = m / m_new;
        let d = x.signal.channels;
        let scale = 1.0 / (f * f) as f64;
        let mut gvals = vec![0.0; m_new * m_new];
        for i in 0..m_new {
            for j in 0..m_new {
                let mut acc = 0.0;
                for a in 0..f {
                    for b in 0..f {
                        acc += x.graphon.value(i * f + a, j * f + b);
                    }
                }
                gvals[i * m_new + j] = (acc * scale).clamp(0.0, 1.0);
            }
        }
        let mut svals = vec![0.0; m_new * d];
        for i in 0..m_new {
            for c in 0..d {
                let mut acc = 0.0;
                for a in 0..f {
                    acc += x.signal.value(i * f + a, c);
                }
                let r = x.signal.bound;
                svals[i * d + c] = (acc / f as f64).clamp(-r, r);
            }
        }
        let graphon = StepGraphon {
            resolution: m_new,
            values: gvals,
        };
        let signal = StepSignal {
            resolution: m_new,
            channels: d,
            values: svals,
            bound: x.signal.bound,
        };
        Ok(GraphonSignal { graphon, signal })
    } else {
        Err(Error::IncompatibleResolutions { from: m, to: m_new })
    }
}

/// Project onto an arbitrary target grid by overlap-weighted block averaging.
/// Generalizes `resample`: exact replication on refinements, exact averaging
/// on coarsenings, and the averaging projection otherwise. Overlap lengths are
/// computed in integer units of `1/(m * m_new)`, so the weights are exact.
pub fn regrid(x: &GraphonSignal, m_new: usize) -> Result<GraphonSignal> {
    let m = x.resolution();
    if m_new == 0 {
        return Err(Error::Invalid("target resolution must be positive".into()));
    }
    if m_new % m == 0 || m % m_new == 0 {
        return resample(x, m_new);
    }
    // weights[i'] = list of (source block, overlap fraction of the target cell)
    let mut weights: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m_new);
    for ip in 0..m_new {
        let lo = ip * m; // in units of 1/(m*m_new)
        let hi = (ip + 1) * m;
        let mut row = Vec::new();
        let a_min = lo / m_new;
        let a_max = hi.div_ceil(m_new).min(m);
        for a in a_min..a_max {
            let s_lo = a * m_new;
            let s_hi = (a + 1) * m_new;
            let ov = hi.min(s_hi).saturating_sub(lo.max(s_lo));
            if ov > 0 {
                row.push((a, ov as f64 / m as f64));
            }
        }
        weights.push(row);
    }
    let d = x.signal.channels;
    let mut gvals = vec![0.0; m_new * m_new];
    for ip in 0..m_new {
        for jp in 0..m_new {
            let mut acc = 0.0;
            for &(a, wa) in &weights[ip] {
                for &(b, wb) in &weights[jp] {
                    acc += wa * wb * x.graphon.value(a, b);
                }
            }
            gvals[ip * m_new + jp] = acc.clamp(0.0, 1.0);
        }
    }
    // Symmetry can drift by an ulp through the two loop orders; enforce it.
    for ip in 0..m_new {
        for jp in (ip + 1)..m_new {
            let v = gvals[ip * m_new + jp];
            gvals[jp * m_new + ip] = v;
        }
    }
    let mut svals = vec![0.0; m_new * d];
    let r = x.signal.bound;
    for ip in 0..m_new {
        for c in 0..d {
            let mut acc = 0.0;
            for &(a, wa) in &weights[ip] {
                acc += wa * x.signal.value(a, c);
            }
            svals[ip * d + c] = acc.clamp(-r, r);
        }
    }
    Ok(GraphonSignal {
        graphon: StepGraphon {
            resolution: m_new,
            values: gvals,
        },
        signal: StepSignal {
            resolution: m_new,
            channels: d,
            values: svals,
            bound: r,
        },
    })
}

/// Relabel the blocks: `W'(i,j) = W(p(i), p(j))`, `f'(i) = f(p(i))`.
pub fn apply_permutation(x: &GraphonSignal, p: &IntervalPermutation) -> Result<GraphonSignal> {
    let m = x.resolution();
    if p.resolution() != m {
        return Err(Error::ResolutionMismatch {
            left: m,
            right: p.resolution(),
        });
    }
    let d = x.signal.channels;
    let mut gvals = vec![0.0; m * m];
    for i in 0..m {
        let pi = p.map(i);
        for j in 0..m {
            gvals[i * m + j] = x.graphon.value(pi, p.map(j));
        }
    }
    let mut svals = vec![0.0; m * d];
    for i in 0..m {
        svals[i * d..(i + 1) * d].copy_from_slice(x.signal.block(p.map(i)));
    }
    Ok(GraphonSignal {
        graphon: StepGraphon {
            resolution: m,
            values: gvals,
        },
        signal: StepSignal {
            resolution: m,
            channels: d,
            values: svals,
            bound: x.signal.bound,
        },
    })
}

/// Split a signal into its positive and negative parts, `f = f+ - f-`,
/// channel by channel. Both parts keep the original bound.
pub fn signal_parts(f: &StepSignal) -> (StepSignal, StepSignal) {
    let plus: Vec<f64> = f.values.iter().map(|&v| v.max(0.0)).collect();
    let minus: Vec<f64> = f.values.iter().map(|&v| (-v).max(0.0)).collect();
    (
        StepSignal {
            resolution: f.resolution,
            channels: f.channels,
            values: plus,
            bound: f.bound,
        },
        StepSignal {
            resolution: f.resolution,
            channels: f.channels,
            values: minus,
            bound: f.bound,
        },
    )
}

/// Uniformly random symmetric graphon at resolution `m`.
pub fn random_graphon<R: rand::Rng>(m: usize, rng: &mut R) -> StepGraphon {
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v: f64 = rng.gen();
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    StepGraphon {
        resolution: m,
        values,
    }
}

/// Uniformly random signal with entries in `[-r, r]`.
pub fn random_signal<R: rand::Rng>(m: usize, channels: usize, r: f64, rng: &mut R) -> StepSignal {
    let values = (0..m * channels).map(|_| rng.gen_range(-r..=r)).collect();
    StepSignal {
        resolution: m,
        channels,
        values,
        bound: r,
    }
}

/// Random simple graph (edge probability 1/2) with uniform features.
pub fn random_graph_signal<R: rand::Rng>(
    n: usize,
    channels: usize,
    r: f64,
    rng: &mut R,
) -> GraphSignal {
    let mut adjacency = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if rng.gen::<bool>() { 1.0 } else { 0.0 };
            adjacency[i * n + j] = v;
            adjacency[j * n + i] = v;
        }
    }
    let features = (0..n * channels).map(|_| rng.gen_range(-r..=r)).collect();
    GraphSignal {
        n,
        adjacency,
        channels,
        features,
        bound: r,
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats. Field names are part of the external contract:
//   graphon-signal: {"m", "r", "graphon": [[...]], "signal": [[...]]}
//   graph-signal:   {"n", "r", "adjacency": [[...]], "features": [[...]]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GraphonSignalWire {
    m: usize,
    r: f64,
    graphon: Vec<Vec<f64>>,
    signal: Vec<Vec<f64>>,
}

impl Serialize for GraphonSignal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.resolution();
        let wire = GraphonSignalWire {
            m,
            r: self.signal.bound,
            graphon: (0..m)
                .map(|i| self.graphon.values[i * m..(i + 1) * m].to_vec())
                .collect(),
            signal: (0..m).map(|i| self.signal.block(i).to_vec()).collect(),
        };
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GraphonSignal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = GraphonSignalWire::deserialize(de)?;
        let flat_graphon = flatten_rows(&wire.graphon, wire.m, wire.m, "graphon")
            .map_err(serde::de::Error::custom)?;
        let channels = wire.signal.first().map(Vec::len).unwrap_or(0);
        let flat_signal = flatten_rows(&wire.signal, wire.m, channels, "signal")
            .map_err(serde::de::Error::custom)?;
        let graphon =
            StepGraphon::from_values(wire.m, flat_graphon).map_err(serde::de::Error::custom)?;
        let signal = StepSignal::from_values(wire.m, channels, flat_signal, wire.r)
            .map_err(serde::de::Error::custom)?;
        GraphonSignal::new(graphon, signal).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphSignalWire {
    n: usize,
    r: f64,
    adjacency: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
}

impl Serialize for GraphSignal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n;
        let wire = GraphSignalWire {
            n,
            r: self.bound,
            adjacency: (0..n)
                .map(|i| self.adjacency[i * n..(i + 1) * n].to_vec())
                .collect(),
            features: (0..n).map(|i| self.node_features(i).to_vec()).collect(),
        };
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GraphSignal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = GraphSignalWire::deserialize(de)?;
        let adjacency = flatten_rows(&wire.adjacency, wire.n, wire.n, "adjacency")
            .map_err(serde::de::Error::custom)?;
        let channels = wire.features.first().map(Vec::len).unwrap_or(0);
        let features = flatten_rows(&wire.features, wire.n, channels, "features")
            .map_err(serde::de::Error::custom)?;
        GraphSignal::new(wire.n, adjacency, channels, features, wire.r)
            .map_err(serde::de::Error::custom)
    }
}

fn flatten_rows(rows: &[Vec<f64>], want_rows: usize, want_cols: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != want_rows {
        return Err(Error::Invalid(format!(
            "{what}: expected {want_rows} rows, got {}",
            rows.len()
        )));
    }
    let mut flat = Vec::with_capacity(want_rows * want_cols);
    for row in rows {
        if row.len() != want_cols {
            return Err(Error::Invalid(format!(
                "{what}: ragged row of length {}, expected {want_cols}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn induce_two_node_edge() {
        let g = GraphSignal::new(
            2,
            vec![0.0, 1.0, 1.0, 0.0],
            1,
            vec![0.5, -0.5],
            1.0,
        )
        .unwrap();
        let x = induce(&g);
        assert_eq!(x.resolution(), 2);
        assert_eq!(x.graphon().values(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(x.signal().values(), &[0.5, -0.5]);
        assert_eq!(x.signal().bound(), 1.0);
    }

    #[test]
    fn induce_single_node_empty() {
        let g = GraphSignal::new(1, vec![0.0], 1, vec![0.0], 1.0).unwrap();
        let x = induce(&g);
        assert_eq!(x.graphon().values(), &[0.0]);
        assert_eq!(x.signal().values(), &[0.0]);
    }

    #[test]
    fn induce_block_integrals_match_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let w = random_graphon(n, &mut rng);
        let f = random_signal(n, 2, 1.0, &mut rng);
        let g = GraphSignal::new(n, w.values().to_vec(), 2, f.values().to_vec(), 1.0).unwrap();
        let x = induce(&g);
        // Recompute each block integral from the definition: the average of W
        // over I_i x I_j is just the constant block value.
        for i in 0..n {
            for j in 0..n {
                assert_eq!(x.graphon().value(i, j), g.edge(i, j));
            }
        }
    }

    #[test]
    fn resample_refines_and_coarsens() {
        let w = StepGraphon::from_values(2, vec![0.2, 0.5, 0.5, 0.9]).unwrap();
        let f = StepSignal::scalar(vec![0.25, -0.75], 1.0).unwrap();
        let x = GraphonSignal::new(w, f).unwrap();
        let fine = resample(&x, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(fine.graphon().value(i, j), x.graphon().value(i / 2, j / 2));
            }
            assert_eq!(fine.signal().value(i, 0), x.signal().value(i / 2, 0));
        }
        let back = resample(&fine, 2).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn coarsen_averages_subblocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = GraphonSignal::new(random_graphon(4, &mut rng), random_signal(4, 1, 1.0, &mut rng))
            .unwrap();
        let coarse = resample(&x, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += x.graphon().value(2 * i + a, 2 * j + b);
                    }
                }
                assert!((coarse.graphon().value(i, j) - acc / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn resample_rejects_incompatible() {
        let x = GraphonSignal::new(
            StepGraphon::constant(4, 0.5).unwrap(),
            StepSignal::scalar(vec![0.0; 4], 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            resample(&x, 6),
            Err(Error::IncompatibleResolutions { .. })
        ));
    }

    #[test]
    fn regrid_matches_resample_on_divisible_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = GraphonSignal::new(random_graphon(4, &mut rng), random_signal(4, 1, 1.0, &mut rng))
            .unwrap();
        assert_eq!(regrid(&x, 8).unwrap(), resample(&x, 8).unwrap());
        assert_eq!(regrid(&x, 2).unwrap(), resample(&x, 2).unwrap());
        // Arbitrary target: global mean is preserved by the averaging projection.
        let y = regrid(&x, 6).unwrap();
        let mean = |g: &StepGraphon| {
            g.values().iter().sum::<f64>() / (g.resolution() * g.resolution()) as f64
        };
        assert!((mean(x.graphon()) - mean(y.graphon())).abs() < 1e-12);
    }

    #[test]
    fn permutation_identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = GraphonSignal::new(random_graphon(6, &mut rng), random_signal(6, 2, 1.0, &mut rng))
            .unwrap();
        let id = IntervalPermutation::identity(6);
        assert_eq!(apply_permutation(&x, &id).unwrap(), x);
        let p = IntervalPermutation::new(vec![3, 0, 5, 1, 4, 2]).unwrap();
        let y = apply_permutation(&x, &p).unwrap();
        let z = apply_permutation(&y, &p.inverse()).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn permutation_cyclic_shift_relabels_entrywise() {
        let w = StepGraphon::from_values(
            3,
            vec![0.1, 0.2, 0.3, 0.2, 0.4, 0.5, 0.3, 0.5, 0.6],
        )
        .unwrap();
        let f = StepSignal::scalar(vec![1.0, 2.0, 3.0], 3.0).unwrap();
        let x = GraphonSignal::new(w, f).unwrap();
        let p = IntervalPermutation::new(vec![1, 2, 0]).unwrap();
        let y = apply_permutation(&x, &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(y.graphon().value(i, j), x.graphon().value((i + 1) % 3, (j + 1) % 3));
            }
            assert_eq!(y.signal().value(i, 0), x.signal().value((i + 1) % 3, 0));
        }
    }

    #[test]
    fn signal_parts_split_and_reconstruct() {
        let f = StepSignal::scalar(vec![1.0, -1.0], 1.0).unwrap();
        let (p, n) = signal_parts(&f);
        assert_eq!(p.values(), &[1.0, 0.0]);
        assert_eq!(n.values(), &[0.0, 1.0]);

        let g = StepSignal::scalar(vec![0.2, 0.7, 0.0], 1.0).unwrap();
        let (_, gn) = signal_parts(&g);
        assert!(gn.values().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_signal(8, 3, 2.0, &mut rng);
        let (hp, hn) = signal_parts(&h);
        for (i, &v) in h.values().iter().enumerate() {
            assert_eq!(hp.values()[i] - hn.values()[i], v);
        }
    }

    #[test]
    fn permutation_composition_is_group_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = GraphonSignal::new(random_graphon(5, &mut rng), random_signal(5, 1, 1.0, &mut rng))
            .unwrap();
        let p = IntervalPermutation::new(vec![2, 0, 4, 1, 3]).unwrap();
        let q = IntervalPermutation::new(vec![1, 4, 3, 0, 2]).unwrap();
        let one_shot = apply_permutation(&x, &p.compose(&q).unwrap()).unwrap();
        let two_step = apply_permutation(&apply_permutation(&x, &p).unwrap(), &q).unwrap();
        assert_eq!(one_shot, two_step);
    }

    #[test]
    fn json_round_trip_exact_field_names() {
        let x = GraphonSignal::new(
            StepGraphon::from_values(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            StepSignal::scalar(vec![0.5, -0.5], 1.0).unwrap(),
        )
        .unwrap();
        let text = serde_json::to_string(&x).unwrap();
        assert!(text.contains("\"m\":2"));
        assert!(text.contains("\"graphon\""));
        assert!(text.contains("\"signal\""));
        let back: GraphonSignal = serde_json::from_str(&text).unwrap();
        assert_eq!(back, x);

        let g = GraphSignal::new(2, vec![0.0, 1.0, 1.0, 0.0], 1, vec![0.5, -0.5], 1.0).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains("\"n\":2"));
        assert!(text.contains("\"adjacency\""));
        let back: GraphSignal = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_rejects_asymmetric_graphon() {
        let text = r#"{"m":2,"r":1.0,"graphon":[[0.0,0.3],[0.4,0.0]],"signal":[[0.0],[0.0]]}"#;
        assert!(serde_json::from_str::<GraphonSignal>(text).is_err());
    }
}
