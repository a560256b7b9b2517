//! Random sampling of graphon-signals into graph-signals and Monte Carlo
//! verification of the sampling lemmas.
//!
//! Sampling draws `k` iid uniform points, reads graphon/signal values at
//! them (sharing the points between graph and signal), and optionally
//! Bernoulli-rounds edges into a simple graph. Comparisons against the source
//! go through the sorting alignment: the block permutation that orders the
//! sampled points, the discrete stand-in for the measure preserving bijection
//! used by the sampling lemmas.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutnorm::{
    kernel_cut_norm_exact_with_limit, kernel_cut_norm_heuristic, kernel_l1_norm, signal_cut_norm,
    signal_l1_norm,
};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::mean_stderr;
use crate::types::{
    apply_permutation, induce, regrid, resample, GraphSignal, GraphonSignal, IntervalPermutation,
    Kernel, StepSignal,
};

/// Cap on the common comparison resolution; above it the source is averaged
/// onto the smallest multiple of `k` at or above the cap.
pub const COMMON_RESOLUTION_CAP: usize = 512;

/// Restarts handed to the witnessed cut-norm estimate inside sampling trials.
const TRIAL_HEURISTIC_RESTARTS: usize = 6;

/// Exhaustive limits for the first-sampling check on kernels.
const FIRST_SAMPLING_KERNEL_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Weighted,
    Simple,
}

/// `k` iid uniform sample points with their seed, kept sorted-or-not as drawn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleDraw {
    pub points: Vec<f64>,
    pub sorted: bool,
    pub seed: u64,
    pub k: usize,
}

impl SampleDraw {
    /// Explicit points (tests and replay); all must lie in `[0,1]`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("need at least one sample point".into()));
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid("sample points must lie in [0,1]".into()));
        }
        let sorted = points.windows(2).all(|w| w[0] <= w[1]);
        let k = points.len();
        Ok(Self {
            points,
            sorted,
            seed: 0,
            k,
        })
    }
}

/// Draw `k` iid uniform points from the pinned generator; deterministic per
/// seed.
pub fn draw_points(k: usize, seed: u64) -> Result<SampleDraw> {
    if k == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let mut rng = substream(seed, 0);
    let points: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    Ok(SampleDraw {
        sorted: points.windows(2).all(|w| w[0] <= w[1]),
        k,
        seed,
        points,
    })
}

#[inline]
fn block_of(point: f64, m: usize) -> usize {
    ((point * m as f64) as usize).min(m - 1)
}

/// Weighted sampled graph: edge weight `W(lambda_i, lambda_j)` (diagonal
/// included), features `f(lambda_i)`; graph and signal share the points.
pub fn evaluate_weighted(x: &GraphonSignal, s: &SampleDraw) -> GraphSignal {
    let m = x.resolution();
    let k = s.k;
    let d = x.signal().channels();
    let blocks: Vec<usize> = s.points.iter().map(|&p| block_of(p, m)).collect();
    let mut adjacency = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            adjacency[i * k + j] = x.graphon().value(blocks[i], blocks[j]);
        }
    }
    let mut features = vec![0.0; k * d];
    for i in 0..k {
        features[i * d..(i + 1) * d].copy_from_slice(x.signal().block(blocks[i]));
    }
    GraphSignal::new(k, adjacency, d, features, x.signal().bound())
        .expect("sampled values inherit the source invariants")
}

/// Simple sampled graph: Bernoulli edges drawn once per unordered pair and
/// mirrored. The diagonal stays zero unless `self_loops` is set.
pub fn bernoulli_simple(
    x: &GraphonSignal,
    s: &SampleDraw,
    seed2: u64,
    self_loops: bool,
) -> GraphSignal {
    let weighted = evaluate_weighted(x, s);
    let k = s.k;
    let mut rng = substream(seed2, 1);
    let mut adjacency = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            if i == j && !self_loops {
                continue;
            }
            let w = weighted.edge(i, j);
            let edge = if rng.gen::<f64>() < w { 1.0 } else { 0.0 };
            adjacency[i * k + j] = edge;
            adjacency[j * k + i] = edge;
        }
    }
    GraphSignal::new(
        k,
        adjacency,
        weighted.channels(),
        weighted.features().to_vec(),
        weighted.bound(),
    )
    .expect("bernoulli adjacency is a valid simple graph")
}

/// Block permutation that orders the sampled nodes by nondecreasing point
/// value: position `i` maps to the index of the `i`-th smallest point.
pub fn sorted_alignment(s: &SampleDraw) -> IntervalPermutation {
    let mut order: Vec<usize> = (0..s.k).collect();
    order.sort_by(|&a, &b| s.points[a].total_cmp(&s.points[b]));
    IntervalPermutation::new(order).expect("argsort is a bijection")
}

/// One per-trial row of a sampling-distance experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingTrialRow {
    pub k: usize,
    pub trial: usize,
    /// Certified upper distance at the sorted alignment: kernel L1 plus exact
    /// signal cut norm.
    pub l1_upper: f64,
    /// Witnessed heuristic cut-norm estimate at the same alignment.
    pub heuristic_estimate: f64,
    /// `15 / sqrt(ln k)`.
    pub paper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub k: usize,
    pub trials: usize,
    pub mean_upper: f64,
    pub stderr_upper: f64,
    pub mean_heuristic: f64,
    pub stderr_heuristic: f64,
    pub paper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingReport {
    pub mode: SampleMode,
    pub rows: Vec<SamplingTrialRow>,
    pub summary: SamplingSummary,
    /// True when the source had to be averaged onto a non-divisible grid for
    /// the comparison.
    pub approximate_regrid: bool,
}

/// Expected-distance bound `15 / sqrt(ln k)` (natural log); infinite for
/// `k <= 1` where the rate is undefined.
pub fn sampling_paper_bound(k: usize) -> f64 {
    if k >= 2 {
        15.0 / (k as f64).ln().sqrt()
    } else {
        f64::INFINITY
    }
}

/// Monte Carlo estimate of the sampled-distance between a graphon-signal and
/// its `k`-point samples: each trial samples, induces, sorted-aligns, brings
/// both sides to a common resolution, and records the certified upper
/// distance next to a heuristic cut-norm estimate.
pub fn estimate_sampling_distance(
    x: &GraphonSignal,
    k: usize,
    trials: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<SamplingReport> {
    if trials == 0 {
        return Err(Error::Invalid("need at least one trial".into()));
    }
    if k == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let rows: Vec<SamplingTrialRow> = (0..trials)
        .into_par_iter()
        .map(|trial| sampling_trial(x, k, trial, mode, seed))
        .collect::<Result<_>>()?;
    let uppers: Vec<f64> = rows.iter().map(|r| r.l1_upper).collect();
    let heurs: Vec<f64> = rows.iter().map(|r| r.heuristic_estimate).collect();
    let (mean_upper, stderr_upper) = mean_stderr(&uppers);
    let (mean_heuristic, stderr_heuristic) = mean_stderr(&heurs);
    let approximate_regrid = {
        let (target, _) = comparison_resolution(x.resolution(), k);
        target % x.resolution() != 0
    };
    Ok(SamplingReport {
        mode,
        summary: SamplingSummary {
            k,
            trials,
            mean_upper,
            stderr_upper,
            mean_heuristic,
            stderr_heuristic,
            paper_bound: sampling_paper_bound(k),
        },
        rows,
        approximate_regrid,
    })
}

fn comparison_resolution(m: usize, k: usize) -> (usize, bool) {
    let l = num_integer::lcm(m, k);
    if l <= COMMON_RESOLUTION_CAP {
        (l, false)
    } else {
        let target = k * COMMON_RESOLUTION_CAP.div_ceil(k);
        (target, true)
    }
}

/// True when the common comparison grid refines both resolutions exactly
/// (no averaging approximation involved).
pub fn comparison_is_exact(m: usize, k: usize) -> bool {
    let (target, _) = comparison_resolution(m, k);
    target % m == 0 && target % k == 0
}

fn sampling_trial(
    x: &GraphonSignal,
    k: usize,
    trial: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<SamplingTrialRow> {
    let mut point_rng = substream(seed, 2 * trial as u64);
    let points: Vec<f64> = (0..k).map(|_| point_rng.gen::<f64>()).collect();
    let draw = SampleDraw {
        sorted: points.windows(2).all(|w| w[0] <= w[1]),
        points,
        seed,
        k,
    };
    let sampled = match mode {
        SampleMode::Weighted => evaluate_weighted(x, &draw),
        SampleMode::Simple => {
            // Reuse the trial substream namespace: odd streams drive edges.
            let weighted = evaluate_weighted(x, &draw);
            let mut edge_rng = substream(seed, 2 * trial as u64 + 1);
            let mut adjacency = vec![0.0; k * k];
            for i in 0..k {
                for j in i..k {
                    if i == j {
                        continue;
                    }
                    let w = weighted.edge(i, j);
                    let edge = if edge_rng.gen::<f64>() < w { 1.0 } else { 0.0 };
                    adjacency[i * k + j] = edge;
                    adjacency[j * k + i] = edge;
                }
            }
            GraphSignal::new(
                k,
                adjacency,
                weighted.channels(),
                weighted.features().to_vec(),
                weighted.bound(),
            )?
        }
    };
    let aligned = apply_permutation(&induce(&sampled), &sorted_alignment(&draw))?;
    let (upper, heuristic) = aligned_upper_distance(x, &aligned, seed ^ trial as u64)?;
    Ok(SamplingTrialRow {
        k,
        trial,
        l1_upper: upper,
        heuristic_estimate: heuristic,
        paper_bound: sampling_paper_bound(k),
    })
}

/// Certified upper distance and heuristic estimate between two
/// graphon-signals at the identity alignment, after bringing them to a common
/// resolution (exact refinement when divisible, averaging otherwise).
pub fn aligned_upper_distance(
    x: &GraphonSignal,
    y: &GraphonSignal,
    heuristic_seed: u64,
) -> Result<(f64, f64)> {
    if x.signal().channels() != y.signal().channels() {
        return Err(Error::DimensionMismatch {
            expected: x.signal().channels(),
            got: y.signal().channels(),
        });
    }
    let (xc, yc) = common_grid(x, y)?;
    let diff = xc.graphon().sub(yc.graphon())?;
    let signal_term = signal_cut_norm(&xc.signal().sub(yc.signal())?);
    let upper = kernel_l1_norm(&diff) + signal_term;
    let heuristic =
        kernel_cut_norm_heuristic(&diff, TRIAL_HEURISTIC_RESTARTS, heuristic_seed).value
            + signal_term;
    Ok((upper, heuristic))
}

/// Bring two graphon-signals to the common comparison resolution.
pub fn common_grid(x: &GraphonSignal, y: &GraphonSignal) -> Result<(GraphonSignal, GraphonSignal)> {
    let (m, k) = (x.resolution(), y.resolution());
    if m == k {
        return Ok((x.clone(), y.clone()));
    }
    let (target, capped) = comparison_resolution(m, k);
    let xc = if capped { regrid(x, target)? } else { resample(x, target)? };
    let yc = if target == k {
        y.clone()
    } else if target % k == 0 {
        resample(y, target)?
    } else {
        regrid(y, target)?
    };
    Ok((xc, yc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstSamplingReport {
    pub k: usize,
    pub trials: usize,
    pub mean_deviation: f64,
    pub stderr_deviation: f64,
    pub paper_bound: f64,
}

/// Monte Carlo check of the first sampling lemma for kernels:
/// `E |cut(U[Lambda]) - cut(U)| <= 14 / k^(1/4)`, exact cut norms on both
/// sides (hence the resolution limits).
pub fn first_sampling_check_kernel(
    u: &Kernel,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<FirstSamplingReport> {
    if u.resolution() > FIRST_SAMPLING_KERNEL_LIMIT || k > FIRST_SAMPLING_KERNEL_LIMIT {
        return Err(Error::ResolutionTooLarge {
            resolution: u.resolution().max(k),
            limit: FIRST_SAMPLING_KERNEL_LIMIT,
        });
    }
    if trials == 0 || k == 0 {
        return Err(Error::Invalid("trials and k must be positive".into()));
    }
    let m = u.resolution();
    let source_norm = kernel_cut_norm_exact_with_limit(u, FIRST_SAMPLING_KERNEL_LIMIT)?.value;
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let mut rng = substream(seed, trial as u64);
            let blocks: Vec<usize> = (0..k).map(|_| block_of(rng.gen::<f64>(), m)).collect();
            let mut values = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    values[i * k + j] = u.value(blocks[i], blocks[j]);
                }
            }
            let sampled = Kernel::from_values(k, values)?;
            let sampled_norm =
                kernel_cut_norm_exact_with_limit(&sampled, FIRST_SAMPLING_KERNEL_LIMIT)?.value;
            Ok((sampled_norm - source_norm).abs())
        })
        .collect::<Result<_>>()?;
    let (mean_deviation, stderr_deviation) = mean_stderr(&deviations);
    Ok(FirstSamplingReport {
        k,
        trials,
        mean_deviation,
        stderr_deviation,
        paper_bound: 14.0 / (k as f64).powf(0.25),
    })
}

/// Monte Carlo check of the first sampling lemma for signals:
/// `E |  ||f(Lambda)||_1 - ||f||_1 | <= r / sqrt(k)`.
pub fn first_sampling_check_signal(
    f: &StepSignal,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<FirstSamplingReport> {
    if trials == 0 || k == 0 {
        return Err(Error::Invalid("trials and k must be positive".into()));
    }
    let m = f.resolution();
    let source_l1 = signal_l1_norm(f);
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, trial as u64);
            let mut per_channel = vec![0.0f64; f.channels()];
            for _ in 0..k {
                let b = block_of(rng.gen::<f64>(), m);
                for (c, acc) in per_channel.iter_mut().enumerate() {
                    *acc += f.value(b, c).abs();
                }
            }
            let sampled_l1 = per_channel
                .iter()
                .fold(0.0f64, |a, &s| a.max(s / k as f64));
            (sampled_l1 - source_l1).abs()
        })
        .collect();
    let (mean_deviation, stderr_deviation) = mean_stderr(&deviations);
    Ok(FirstSamplingReport {
        k,
        trials,
        mean_deviation,
        stderr_deviation,
        paper_bound: f.bound() / (k as f64).sqrt(),
    })
}
