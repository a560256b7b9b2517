//! Experiment orchestration: subsampling stability of networks and a
//! synthetic generalization-gap study, both deterministic given their seeds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mpnn::{
    forward_graph, forward_graphon, lipschitz_bound, readout_graph, LipschitzSetting, MpnnSpec,
};
use crate::rng::substream;
use crate::sampling::{aligned_upper_distance, sampling_paper_bound, SampleDraw};
use crate::stats::mean_stderr;
use crate::types::{apply_permutation, induce, GraphonSignal, StepGraphon, StepSignal};

/// One stability trial: distances between the source pair
/// `(W, Theta(W,f))` and the sampled pair `(G, Theta(G, f(Lambda)))` at the
/// sorted alignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTrialRow {
    pub k: usize,
    pub trial: usize,
    pub input_upper: f64,
    pub input_heuristic: f64,
    pub output_upper: f64,
    pub output_heuristic: f64,
    /// `15 L / sqrt(ln k)` with the pair Lipschitz constant.
    pub paper_bound: f64,
    /// Output distance within `pair_lipschitz * input distance`.
    pub lipschitz_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityKSummary {
    pub k: usize,
    pub mean_input_upper: f64,
    pub mean_output_upper: f64,
    pub stderr_output_upper: f64,
    pub mean_output_heuristic: f64,
    pub paper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityTrialRow>,
    pub per_k: Vec<StabilityKSummary>,
    pub pair_lipschitz: f64,
    /// Trials where the Lipschitz composition check failed on an exact
    /// comparison grid.
    pub violations: usize,
}

/// Subsampling-stability experiment: per `k`, sample a simple graph-signal,
/// run the network on both the source and the sample, sorted-align, and
/// record certified upper distances for inputs and outputs next to the
/// `15 L / sqrt(ln k)` rate. Each trial also checks the Lipschitz composition
/// `output distance <= L_pair * input distance`.
pub fn stability_experiment(
    x: &GraphonSignal,
    spec: &MpnnSpec,
    setting: LipschitzSetting,
    k_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if k_grid.is_empty() || trials == 0 {
        return Err(Error::Invalid("k grid and trials must be nonempty".into()));
    }
    let bound = lipschitz_bound(spec, setting, x.signal().bound())?;
    let pair_l = bound.pair_lipschitz();
    let source_out = forward_graphon(spec, x)?;

    let mut rows = Vec::with_capacity(k_grid.len() * trials);
    let mut per_k = Vec::with_capacity(k_grid.len());
    let mut violations = 0usize;
    for (ki, &k) in k_grid.iter().enumerate() {
        let k_rows: Vec<StabilityTrialRow> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                stability_trial(
                    x,
                    &source_out,
                    spec,
                    k,
                    trial,
                    seed,
                    (ki * trials + trial) as u64,
                    pair_l,
                )
            })
            .collect::<Result<_>>()?;
        let exact_grid = crate::sampling::comparison_is_exact(x.resolution(), k);
        for row in &k_rows {
            if exact_grid && !row.lipschitz_ok {
                violations += 1;
            }
        }
        let inputs: Vec<f64> = k_rows.iter().map(|r| r.input_upper).collect();
        let outputs: Vec<f64> = k_rows.iter().map(|r| r.output_upper).collect();
        let heur: Vec<f64> = k_rows.iter().map(|r| r.output_heuristic).collect();
        let (mean_input_upper, _) = mean_stderr(&inputs);
        let (mean_output_upper, stderr_output_upper) = mean_stderr(&outputs);
        let (mean_output_heuristic, _) = mean_stderr(&heur);
        per_k.push(StabilityKSummary {
            k,
            mean_input_upper,
            mean_output_upper,
            stderr_output_upper,
            mean_output_heuristic,
            paper_bound: pair_l * sampling_paper_bound(k),
        });
        rows.extend(k_rows);
    }
    Ok(StabilityReport {
        rows,
        per_k,
        pair_lipschitz: pair_l,
        violations,
    })
}

#[allow(clippy::too_many_arguments)]
fn stability_trial(
    x: &GraphonSignal,
    source_out: &GraphonSignal,
    spec: &MpnnSpec,
    k: usize,
    trial: usize,
    seed: u64,
    stream_base: u64,
    pair_l: f64,
) -> Result<StabilityTrialRow> {
    let mut point_rng = substream(seed, 2 * stream_base);
    let points: Vec<f64> = (0..k).map(|_| point_rng.gen::<f64>()).collect();
    let draw = SampleDraw::from_points(points)?;
    let sampled = crate::sampling::bernoulli_simple(x, &draw, seed ^ (2 * stream_base + 1), false);
    let sampled_out = forward_graph(spec, &sampled)?;

    let align = crate::sampling::sorted_alignment(&draw);
    let in_aligned = apply_permutation(&induce(&sampled), &align)?;
    let out_aligned = apply_permutation(&induce(&sampled_out), &align)?;

    let (input_upper, input_heuristic) =
        aligned_upper_distance(x, &in_aligned, seed ^ stream_base)?;
    let (output_upper, output_heuristic) =
        aligned_upper_distance(source_out, &out_aligned, seed ^ stream_base ^ 0xabcd)?;
    Ok(StabilityTrialRow {
        k,
        trial,
        input_upper,
        input_heuristic,
        output_upper,
        output_heuristic,
        paper_bound: pair_l * sampling_paper_bound(k),
        lipschitz_ok: output_upper <= pair_l * input_upper + 1e-9,
    })
}

/// Squared error on the first readout channel, with the prediction clamped to
/// the label range so the loss is Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClippedSquaredLoss {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ClippedSquaredLoss {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl ClippedSquaredLoss {
    pub fn eval(&self, prediction: &[f64], label: f64) -> f64 {
        let p = prediction.first().copied().unwrap_or(0.0).clamp(self.lo, self.hi);
        (p - label) * (p - label)
    }

    /// Analytic Lipschitz constant in the prediction, for labels inside the
    /// clamp range.
    pub fn lipschitz(&self) -> f64 {
        2.0 * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub rep: usize,
    pub empirical_risk: f64,
    pub fresh_risk: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub n: usize,
    pub mean_gap: f64,
    pub stderr_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenGapReport {
    pub rows: Vec<GapRow>,
    pub per_n: Vec<GapSummary>,
    pub nodes_per_graph: usize,
}

/// Two default stochastic block models used as synthetic classes: an
/// assortative and a disassortative 4-block model with opposite signals.
pub fn default_class_models() -> (GraphonSignal, GraphonSignal) {
    let assortative = StepGraphon::from_blocks(
        &[
            vec![0.8, 0.15, 0.15, 0.15],
            vec![0.15, 0.8, 0.15, 0.15],
            vec![0.15, 0.15, 0.8, 0.15],
            vec![0.15, 0.15, 0.15, 0.8],
        ],
        4,
    )
    .expect("valid block values");
    let disassortative = StepGraphon::from_blocks(
        &[
            vec![0.15, 0.7, 0.7, 0.7],
            vec![0.7, 0.15, 0.7, 0.7],
            vec![0.7, 0.7, 0.15, 0.7],
            vec![0.7, 0.7, 0.7, 0.15],
        ],
        4,
    )
    .expect("valid block values");
    let signal_a = StepSignal::scalar(vec![0.8, 0.4, -0.4, -0.8], 1.0).expect("valid signal");
    let signal_b = StepSignal::scalar(vec![-0.8, -0.4, 0.4, 0.8], 1.0).expect("valid signal");
    (
        GraphonSignal::new(assortative, signal_a).expect("matching resolutions"),
        GraphonSignal::new(disassortative, signal_b).expect("matching resolutions"),
    )
}

/// Synthetic generalization-gap experiment: a fixed (untrained) network plus
/// a clipped squared-error loss, evaluated on `n` training graphs sampled
/// from two class models and `n` fresh graphs; the gap is the absolute
/// difference of the two empirical risks.
#[allow(clippy::too_many_arguments)]
pub fn generalization_gap_experiment(
    class_a: &GraphonSignal,
    class_b: &GraphonSignal,
    spec: &MpnnSpec,
    loss: ClippedSquaredLoss,
    n_grid: &[usize],
    reps: usize,
    nodes_per_graph: usize,
    seed: u64,
) -> Result<GenGapReport> {
    if n_grid.is_empty() || reps == 0 || nodes_per_graph == 0 {
        return Err(Error::Invalid("n grid, reps, and node count must be nonempty".into()));
    }
    spec.validate()?;
    let mut rows = Vec::with_capacity(n_grid.len() * reps);
    let mut per_n = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let n_rows: Vec<GapRow> = (0..reps)
            .into_par_iter()
            .map(|rep| -> Result<GapRow> {
                let stream = (gi * reps + rep) as u64;
                let empirical = risk_over_samples(
                    class_a,
                    class_b,
                    spec,
                    loss,
                    n,
                    nodes_per_graph,
                    seed,
                    stream * 2,
                )?;
                let fresh = risk_over_samples(
                    class_a,
                    class_b,
                    spec,
                    loss,
                    n,
                    nodes_per_graph,
                    seed,
                    stream * 2 + 1,
                )?;
                Ok(GapRow {
                    n,
                    rep,
                    empirical_risk: empirical,
                    fresh_risk: fresh,
                    gap: (empirical - fresh).abs(),
                })
            })
            .collect::<Result<_>>()?;
        let gaps: Vec<f64> = n_rows.iter().map(|r| r.gap).collect();
        let (mean_gap, stderr_gap) = mean_stderr(&gaps);
        per_n.push(GapSummary {
            n,
            mean_gap,
            stderr_gap,
        });
        rows.extend(n_rows);
    }
    Ok(GenGapReport {
        rows,
        per_n,
        nodes_per_graph,
    })
}

#[allow(clippy::too_many_arguments)]
fn risk_over_samples(
    class_a: &GraphonSignal,
    class_b: &GraphonSignal,
    spec: &MpnnSpec,
    loss: ClippedSquaredLoss,
    n: usize,
    nodes: usize,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    let mut rng = substream(seed, stream);
    let losses: Vec<f64> = (0..n)
        .map(|_| -> Result<f64> {
            let is_b = rng.gen::<bool>();
            let (model, label) = if is_b { (class_b, 1.0) } else { (class_a, 0.0) };
            let points: Vec<f64> = (0..nodes).map(|_| rng.gen::<f64>()).collect();
            let draw = SampleDraw::from_points(points)?;
            let edge_seed = rng.gen::<u64>();
            let g = crate::sampling::bernoulli_simple(model, &draw, edge_seed, false);
            let out = forward_graph(spec, &g)?;
            Ok(loss.eval(&readout_graph(&out), label))
        })
        .collect::<Result<_>>()?;
    Ok(crate::stats::compensated_sum(&losses) / n as f64)
}
