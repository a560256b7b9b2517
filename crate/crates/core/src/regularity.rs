//! Constructive weak-regularity machinery: greedy box decomposition of a
//! graphon, signal range quantization, partition algebra (projection,
//! equitizing, common refinement), and graph irregularity.
//!
//! The greedy step finds the block box `S x T` with the largest absolute
//! residual integral, subtracts the box mean, and symmetrizes. Since the
//! graphon has L2 norm at most 1, the residual cut norm drops below `eps`
//! within `ceil(1/eps^2)` steps whenever the inner maximization is exact.

use std::collections::HashMap;

use serde::Serialize;

use crate::cutnorm::{
    kernel_cut_norm_exact_with_limit, kernel_cut_norm_heuristic, CutNormResult,
};
use crate::error::{Error, Result};
use crate::types::{GraphSignal, GraphonSignal, Kernel, Partition, StepGraphon, StepSignal};

/// Largest resolution at which the greedy decomposition runs its inner
/// maximization exhaustively; above it the local-search estimate is used and
/// the residual guarantee is downgraded to a reported estimate.
pub const GREEDY_EXHAUSTIVE_LIMIT: usize = 20;

/// Restarts used by the heuristic fallback inside the greedy loop.
const GREEDY_HEURISTIC_RESTARTS: usize = 16;

/// One greedy step: box `S x T` with coefficient `gamma` (the box mean of the
/// residual at the time the step was taken).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityStep {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityDecomposition {
    pub steps: Vec<RegularityStep>,
    /// Cut norm of `W - approximant`; exact when `exact` is true.
    pub residual_cut_norm: f64,
    /// Symmetrized sum of the step boxes; may leave `[0,1]`. Use `project`
    /// with `partition` for an in-range step graphon.
    pub approximant: Kernel,
    /// Partition generated by all step sets (at most `2^(2 steps)` classes).
    pub partition: Partition,
    /// True when every inner maximization (and the final residual norm) was
    /// exhaustive.
    pub exact: bool,
}

/// Greedy weak-regularity decomposition of `w` to target residual cut norm
/// `epsilon`, capped at `min(max_steps, ceil(1/epsilon^2))` steps.
pub fn weak_regularity_decompose(
    w: &StepGraphon,
    epsilon: f64,
    max_steps: usize,
) -> Result<RegularityDecomposition> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Invalid(format!(
            "epsilon {epsilon} must lie in (0,1)"
        )));
    }
    let m = w.resolution();
    let cap = max_steps.min((1.0 / (epsilon * epsilon)).ceil() as usize);
    let exact_inner = m <= GREEDY_EXHAUSTIVE_LIMIT;

    let measure = |kernel: &Kernel, step: usize| -> CutNormResult {
        if exact_inner {
            kernel_cut_norm_exact_with_limit(kernel, GREEDY_EXHAUSTIVE_LIMIT)
                .expect("resolution checked against the limit")
        } else {
            kernel_cut_norm_heuristic(kernel, GREEDY_HEURISTIC_RESTARTS, 0x5eed + step as u64)
        }
    };

    let mut raw = vec![0.0f64; m * m]; // asymmetric accumulation of gamma boxes
    let mut steps: Vec<RegularityStep> = Vec::new();
    let mut residual = w.as_kernel();
    let mut norm = measure(&residual, 0);

    while norm.value > epsilon && steps.len() < cap {
        let (s, t) = (norm.witness_s.clone(), norm.witness_t.clone());
        if s.is_empty() || t.is_empty() {
            break; // degenerate zero-measure box; nothing to subtract
        }
        let mut sum = 0.0;
        for &i in &s {
            for &j in &t {
                sum += residual.value(i, j);
            }
        }
        let gamma = sum / (s.len() * t.len()) as f64;
        for &i in &s {
            for &j in &t {
                raw[i * m + j] += gamma;
            }
        }
        steps.push(RegularityStep { s, t, gamma });

        // Symmetrize the accumulated approximant and refresh the residual.
        let mut res_vals = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                let sym = 0.5 * (raw[i * m + j] + raw[j * m + i]);
                res_vals[i * m + j] = w.value(i, j) - sym;
            }
        }
        residual = Kernel::from_values(m, res_vals)?;
        norm = measure(&residual, steps.len());
    }

    let approximant = {
        let mut vals = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..m {
                vals[i * m + j] = 0.5 * (raw[i * m + j] + raw[j * m + i]);
            }
        }
        Kernel::from_values(m, vals)?
    };
    let partition = partition_from_steps(m, &steps);
    Ok(RegularityDecomposition {
        residual_cut_norm: norm.value,
        steps,
        approximant,
        partition,
        exact: exact_inner,
    })
}

/// Partition of the grid generated by the step sets: two blocks share a class
/// iff they belong to exactly the same `S_i` and `T_i` sets. Classes are
/// numbered by first appearance in block order.
fn partition_from_steps(m: usize, steps: &[RegularityStep]) -> Partition {
    let mut membership = vec![vec![false; 2 * steps.len()]; m];
    for (idx, step) in steps.iter().enumerate() {
        for &b in &step.s {
            membership[b][2 * idx] = true;
        }
        for &b in &step.t {
            membership[b][2 * idx + 1] = true;
        }
    }
    let mut classes: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut assignment = Vec::with_capacity(m);
    for key in membership {
        let next = classes.len();
        let class = *classes.entry(key).or_insert(next);
        assignment.push(class);
    }
    let k = classes.len();
    Partition::new(m, assignment, k).expect("generated assignment is valid")
}

/// Irregularity of a node partition: the maximal normalized discrepancy
/// between actual weighted edge counts and their partition expectation,
/// `max_{U,S} |e_G(U,S) - e_P(U,S)| / n^2`. Exhaustive for graphs small
/// enough, local-search estimate above.
pub fn irregularity(g: &GraphSignal, p: &Partition) -> Result<f64> {
    let n = g.node_count();
    if p.resolution() != n {
        return Err(Error::ResolutionMismatch {
            left: n,
            right: p.resolution(),
        });
    }
    let k = p.classes();
    let mut class_sizes = vec![0usize; k];
    for i in 0..n {
        class_sizes[p.class_of(i)] += 1;
    }
    let mut pair_sums = vec![0.0f64; k * k];
    for i in 0..n {
        for j in 0..n {
            pair_sums[p.class_of(i) * k + p.class_of(j)] += g.edge(i, j);
        }
    }
    // Expected edge weight per node pair; empty classes never occur for real
    // nodes, so they contribute nothing.
    let mut diff = vec![0.0f64; n * n];
    for i in 0..n {
        let ci = p.class_of(i);
        for j in 0..n {
            let cj = p.class_of(j);
            let expected = pair_sums[ci * k + cj] / (class_sizes[ci] * class_sizes[cj]) as f64;
            diff[i * n + j] = g.edge(i, j) - expected;
        }
    }
    let kernel = Kernel::from_values(n, diff)?;
    let value = match kernel_cut_norm_exact_with_limit(&kernel, crate::cutnorm::DEFAULT_EXHAUSTIVE_LIMIT) {
        Ok(r) => r.value,
        Err(Error::ResolutionTooLarge { .. }) => {
            kernel_cut_norm_heuristic(&kernel, GREEDY_HEURISTIC_RESTARTS, 0).value
        }
        Err(e) => return Err(e),
    };
    Ok(value)
}

/// Quantize the signal range `[-r, r]` into `ceil(r/rho)` equal intervals and
/// snap each value to its interval midpoint; the L1 error is at most `rho`.
/// Returns the quantized signal and the preimage partition of the grid.
pub fn quantize_signal(f: &StepSignal, rho: f64) -> Result<(StepSignal, Partition)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Invalid(format!("rho {rho} must be positive")));
    }
    let r = f.bound();
    let levels = (r / rho).ceil().max(1.0) as usize;
    let width = 2.0 * r / levels as f64;
    let m = f.resolution();
    let d = f.channels();

    let level_of = |v: f64| -> usize { (((v + r) / width).floor() as isize).clamp(0, levels as isize - 1) as usize };
    let midpoint = |lvl: usize| -> f64 { -r + (lvl as f64 + 0.5) * width };

    let mut values = Vec::with_capacity(m * d);
    let mut level_keys: Vec<Vec<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut key = Vec::with_capacity(d);
        for c in 0..d {
            let lvl = level_of(f.value(i, c));
            key.push(lvl);
            values.push(midpoint(lvl));
        }
        level_keys.push(key);
    }
    let quantized = StepSignal::from_values(m, d, values, r)?;

    let partition = if d == 1 {
        // Keep all range intervals as classes, including empty ones.
        let assignment = level_keys.iter().map(|k| k[0]).collect();
        Partition::new(m, assignment, levels)?
    } else {
        let mut classes: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(m);
        for key in level_keys {
            let next = classes.len();
            assignment.push(*classes.entry(key).or_insert(next));
        }
        let k = classes.len();
        Partition::new(m, assignment, k)?
    };
    Ok((quantized, partition))
}

/// Projection of a graphon-signal onto a partition: every class pair gets the
/// mean graphon value, every class the mean signal value. Idempotent, stays
/// inside `[0,1]` and `[-r,r]`, and preserves global means.
pub fn project(x: &GraphonSignal, p: &Partition) -> Result<GraphonSignal> {
    let m = x.resolution();
    if p.resolution() != m {
        return Err(Error::ResolutionMismatch {
            left: m,
            right: p.resolution(),
        });
    }
    let blocks = p.class_blocks();
    let mut gvals = vec![0.0f64; m * m];
    for (a, ba) in blocks.iter().enumerate() {
        for bb in blocks.iter().skip(a) {
            if ba.is_empty() || bb.is_empty() {
                continue;
            }
            let mut acc = 0.0;
            for &i in ba {
                for &j in bb {
                    acc += x.graphon().value(i, j);
                }
            }
            // Mirror the mean so the projected graphon is exactly symmetric.
            let mean = (acc / (ba.len() * bb.len()) as f64).clamp(0.0, 1.0);
            for &i in ba {
                for &j in bb {
                    gvals[i * m + j] = mean;
                    gvals[j * m + i] = mean;
                }
            }
        }
    }
    let d = x.signal().channels();
    let r = x.signal().bound();
    let mut svals = vec![0.0f64; m * d];
    for ba in blocks.iter().filter(|b| !b.is_empty()) {
        for c in 0..d {
            let mut acc = 0.0;
            for &i in ba {
                acc += x.signal().value(i, c);
            }
            let mean = (acc / ba.len() as f64).clamp(-r, r);
            for &i in ba {
                svals[i * d + c] = mean;
            }
        }
    }
    GraphonSignal::new(
        StepGraphon::from_values(m, gvals)?,
        StepSignal::from_values(m, d, svals, r)?,
    )
}

/// Turn an arbitrary partition into an equipartition with `n` classes by
/// slicing each class into chunks of measure `1/n` and pooling the residuals.
/// Requires the grid to represent `1/n` cells, i.e. `n` divides the
/// resolution, and `n` larger than the current class count.
pub fn equitize(p: &Partition, n: usize) -> Result<Partition> {
    let m = p.resolution();
    let k = p.classes();
    if n <= k {
        return Err(Error::Invalid(format!(
            "target class count {n} must exceed the current {k}"
        )));
    }
    if n > m || m % n != 0 {
        return Err(Error::Invalid(format!(
            "cannot represent 1/{n} cells on a grid of {m} blocks; refine first"
        )));
    }
    let chunk = m / n;
    let mut assignment = vec![usize::MAX; m];
    let mut next_class = 0usize;
    let mut pool: Vec<usize> = Vec::new();
    for class_blocks in p.class_blocks() {
        if class_blocks.is_empty() {
            continue;
        }
        // Last piece is always set aside as the remainder, even when full.
        let full = class_blocks.len().div_ceil(chunk) - 1;
        for piece in 0..full {
            for &b in &class_blocks[piece * chunk..(piece + 1) * chunk] {
                assignment[b] = next_class;
            }
            next_class += 1;
        }
        pool.extend_from_slice(&class_blocks[full * chunk..]);
    }
    debug_assert_eq!(pool.len() % chunk, 0);
    for piece in pool.chunks(chunk) {
        for &b in piece {
            assignment[b] = next_class;
        }
        next_class += 1;
    }
    debug_assert_eq!(next_class, n);
    Partition::new(m, assignment, n)
}

/// Common refinement: blocks share a class iff they share classes in both
/// inputs. Step functions over either input are exactly representable over
/// the result.
pub fn combine(p: &Partition, q: &Partition) -> Result<Partition> {
    let m = p.resolution();
    if q.resolution() != m {
        return Err(Error::ResolutionMismatch {
            left: m,
            right: q.resolution(),
        });
    }
    let mut classes: HashMap<(usize, usize), usize> = HashMap::new();
    let mut assignment = Vec::with_capacity(m);
    for b in 0..m {
        let key = (p.class_of(b), q.class_of(b));
        let next = classes.len();
        assignment.push(*classes.entry(key).or_insert(next));
    }
    let k = classes.len();
    Partition::new(m, assignment, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutnorm::{kernel_cut_norm_exact, kernel_l1_norm, signal_l1_norm};
    use crate::types::{random_graphon, random_signal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decompose_constant_graphon_in_one_step() {
        let w = StepGraphon::constant(6, 0.37).unwrap();
        let d = weak_regularity_decompose(&w, 0.1, 32).unwrap();
        assert_eq!(d.steps.len(), 1);
        assert!(d.residual_cut_norm <= 1e-12);
        assert!(d.exact);
        assert!((d.steps[0].gamma - 0.37).abs() < 1e-12);
    }

    #[test]
    fn decompose_two_block_sbm_quickly() {
        // A single dense diagonal block is captured by one box step with zero
        // residual. (Generic dense SBMs spend an extra step on the global
        // mean, whose removal mirrors mass into the full box.)
        let w = StepGraphon::from_blocks(&[vec![0.0, 0.0], vec![0.0, 0.8]], 8).unwrap();
        let d = weak_regularity_decompose(&w, 0.1, 32).unwrap();
        assert!(d.residual_cut_norm <= 0.1);
        assert!(d.steps.len() <= 2, "took {} steps", d.steps.len());
        // The generated partition refines the two SBM blocks: no class mixes
        // blocks from both halves.
        assert_eq!(d.partition.classes(), 2);
        for class in d.partition.class_blocks() {
            let in_first = class.iter().filter(|&&b| b < 4).count();
            assert!(in_first == 0 || in_first == class.len());
        }
    }

    #[test]
    fn decompose_dense_sbm_within_budget() {
        let w = StepGraphon::from_blocks(&[vec![0.9, 0.0], vec![0.0, 0.3]], 8).unwrap();
        let d = weak_regularity_decompose(&w, 0.1, 100).unwrap();
        assert!(d.residual_cut_norm <= 0.1);
        assert!(d.steps.len() <= 100.min((1.0f64 / 0.01).ceil() as usize));
        for class in d.partition.class_blocks() {
            let in_first = class.iter().filter(|&&b| b < 4).count();
            assert!(in_first == 0 || in_first == class.len());
        }
    }

    #[test]
    fn decompose_random_meets_step_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let w = random_graphon(16, &mut rng);
            let d = weak_regularity_decompose(&w, 0.5, 64).unwrap();
            assert!(d.residual_cut_norm <= 0.5);
            assert!(d.steps.len() <= 4); // ceil(1/0.25)
            assert!(d.partition.classes() <= 1usize << (2 * d.steps.len()));
        }
    }

    #[test]
    fn decompose_approximant_matches_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let w = random_graphon(10, &mut rng);
        let d = weak_regularity_decompose(&w, 0.3, 16).unwrap();
        let m = 10;
        let mut raw = vec![0.0f64; m * m];
        for step in &d.steps {
            for &i in &step.s {
                for &j in &step.t {
                    raw[i * m + j] += step.gamma;
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                let sym = 0.5 * (raw[i * m + j] + raw[j * m + i]);
                assert!((d.approximant.value(i, j) - sym).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decompose_rejects_bad_epsilon() {
        let w = StepGraphon::constant(4, 0.5).unwrap();
        assert!(weak_regularity_decompose(&w, 0.0, 8).is_err());
        assert!(weak_regularity_decompose(&w, 1.0, 8).is_err());
    }

    #[test]
    fn projection_doubling_on_generated_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let w = random_graphon(12, &mut rng);
            let d = weak_regularity_decompose(&w, 0.3, 16).unwrap();
            let x = GraphonSignal::new(
                w.clone(),
                StepSignal::scalar(vec![0.0; 12], 1.0).unwrap(),
            )
            .unwrap();
            let projected = project(&x, &d.partition).unwrap();
            let proj_err = kernel_cut_norm_exact(&w.sub(projected.graphon()).unwrap())
                .unwrap()
                .value;
            let greedy_err = {
                let mut vals = vec![0.0; 12 * 12];
                for i in 0..12 {
                    for j in 0..12 {
                        vals[i * 12 + j] = w.value(i, j) - d.approximant.value(i, j);
                    }
                }
                kernel_cut_norm_exact(&Kernel::from_values(12, vals).unwrap())
                    .unwrap()
                    .value
            };
            assert!(proj_err <= 2.0 * greedy_err + 1e-12);
        }
    }

    #[test]
    fn irregularity_complete_graph_with_loops_is_zero() {
        let n = 6;
        let g = GraphSignal::new(n, vec![1.0; n * n], 1, vec![0.0; n], 1.0).unwrap();
        let p = Partition::new(n, vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        assert!(irregularity(&g, &p).unwrap() < 1e-12);
    }

    #[test]
    fn irregularity_empty_graph_is_zero() {
        let n = 5;
        let g = GraphSignal::new(n, vec![0.0; n * n], 1, vec![0.0; n], 1.0).unwrap();
        assert_eq!(irregularity(&g, &Partition::single(n)).unwrap(), 0.0);
    }

    #[test]
    fn irregularity_single_class_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let n = 8;
        let mut adj = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = if rng.gen::<bool>() { 1.0 } else { 0.0 };
                adj[i * n + j] = v;
                adj[j * n + i] = v;
            }
        }
        let g = GraphSignal::new(n, adj.clone(), 1, vec![0.0; n], 1.0).unwrap();
        let p = Partition::single(n);
        // Brute force over all U, S.
        let total: f64 = adj.iter().sum();
        let density = total / (n * n) as f64;
        let mut best = 0.0f64;
        for u_mask in 0u32..(1 << n) {
            for s_mask in 0u32..(1 << n) {
                let mut e_g = 0.0;
                for i in 0..n {
                    if u_mask & (1 << i) == 0 {
                        continue;
                    }
                    for j in 0..n {
                        if s_mask & (1 << j) != 0 {
                            e_g += adj[i * n + j];
                        }
                    }
                }
                let e_p = density
                    * (u_mask.count_ones() as f64)
                    * (s_mask.count_ones() as f64);
                best = best.max((e_g - e_p).abs());
            }
        }
        let expect = best / (n * n) as f64;
        assert!((irregularity(&g, &p).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn quantize_constant_signal_snaps_to_midpoint() {
        let f = StepSignal::scalar(vec![0.42; 5], 1.0).unwrap();
        let (q, p) = quantize_signal(&f, 0.25).unwrap();
        assert!(q.values().iter().all(|&v| v == q.values()[0]));
        assert!((q.values()[0] - 0.42).abs() <= 0.25);
        let nonempty = p.class_blocks().iter().filter(|b| !b.is_empty()).count();
        assert_eq!(nonempty, 1);
    }

    #[test]
    fn quantize_two_levels_at_half() {
        let f = StepSignal::scalar(vec![0.9, -0.2, 0.1, -0.8], 1.0).unwrap();
        let (q, p) = quantize_signal(&f, 0.5).unwrap();
        assert_eq!(p.classes(), 2);
        for (&orig, &snapped) in f.values().iter().zip(q.values()) {
            assert!(snapped == 0.5 || snapped == -0.5);
            assert!((orig - snapped).abs() <= 0.5);
        }
    }

    #[test]
    fn quantize_error_within_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = random_signal(50, 1, 1.0, &mut rng);
        let (q, _) = quantize_signal(&f, 0.1).unwrap();
        assert!(signal_l1_norm(&f.sub(&q).unwrap()) <= 0.1 + 1e-12);
    }

    #[test]
    fn project_discrete_identity_and_single_class_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = GraphonSignal::new(random_graphon(4, &mut rng), random_signal(4, 1, 1.0, &mut rng))
            .unwrap();
        let same = project(&x, &Partition::discrete(4)).unwrap();
        assert_eq!(same, x);

        let flat = project(&x, &Partition::single(4)).unwrap();
        let gmean = x.graphon().values().iter().sum::<f64>() / 16.0;
        let smean = x.signal().values().iter().sum::<f64>() / 4.0;
        for i in 0..4 {
            for j in 0..4 {
                assert!((flat.graphon().value(i, j) - gmean).abs() < 1e-12);
            }
            assert!((flat.signal().value(i, 0) - smean).abs() < 1e-12);
        }
    }

    #[test]
    fn project_pairs_by_hand() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let x = GraphonSignal::new(random_graphon(4, &mut rng), random_signal(4, 1, 1.0, &mut rng))
            .unwrap();
        let p = Partition::new(4, vec![0, 0, 1, 1], 2).unwrap();
        let y = project(&x, &p).unwrap();
        let mean01 = (x.graphon().value(0, 2)
            + x.graphon().value(0, 3)
            + x.graphon().value(1, 2)
            + x.graphon().value(1, 3))
            / 4.0;
        assert!((y.graphon().value(0, 2) - mean01).abs() < 1e-12);
        assert!((y.graphon().value(2, 0) - mean01).abs() < 1e-12);
    }

    #[test]
    fn project_is_idempotent_and_mean_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let x = GraphonSignal::new(random_graphon(6, &mut rng), random_signal(6, 2, 1.0, &mut rng))
            .unwrap();
        let p = Partition::new(6, vec![0, 1, 0, 2, 2, 1], 3).unwrap();
        let once = project(&x, &p).unwrap();
        let twice = project(&once, &p).unwrap();
        assert_eq!(once, twice);
        let mean = |g: &GraphonSignal| g.graphon().values().iter().sum::<f64>();
        assert!((mean(&x) - mean(&once)).abs() < 1e-9);
    }

    #[test]
    fn equitize_refines_equipartition_exactly() {
        let p = Partition::new(8, vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        let e = equitize(&p, 4).unwrap();
        assert_eq!(e.classes(), 4);
        // Refinement: each new class sits inside an old one.
        for class in e.class_blocks() {
            let old: Vec<usize> = class.iter().map(|&b| p.class_of(b)).collect();
            assert!(old.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn equitize_unbalanced_classes() {
        let p = Partition::new(8, vec![0, 0, 0, 0, 0, 0, 1, 1], 2).unwrap();
        let e = equitize(&p, 4).unwrap();
        assert_eq!(e.classes(), 4);
        for class in e.class_blocks() {
            assert_eq!(class.len(), 2);
        }
    }

    #[test]
    fn equitize_projection_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let m = 24;
        let k = 3;
        let n = 8;
        let assignment: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let p = Partition::new(m, assignment, k).unwrap();
        // Random step graphon over p.
        let mut block_vals = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let v: f64 = rng.gen();
                block_vals[a][b] = v;
                block_vals[b][a] = v;
            }
        }
        let mut gvals = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                gvals[i * m + j] = block_vals[p.class_of(i)][p.class_of(j)];
            }
        }
        let w = StepGraphon::from_values(m, gvals).unwrap();
        let x = GraphonSignal::new(w.clone(), StepSignal::scalar(vec![0.0; m], 1.0).unwrap())
            .unwrap();
        let e = equitize(&p, n).unwrap();
        let projected = project(&x, &e).unwrap();
        let l1 = kernel_l1_norm(&w.sub(projected.graphon()).unwrap());
        assert!(l1 <= 2.0 * k as f64 / n as f64 + 1e-12);
    }

    #[test]
    fn combine_partitions() {
        let p = Partition::new(4, vec![0, 0, 1, 1], 2).unwrap();
        let same = combine(&p, &p).unwrap();
        assert_eq!(same.classes(), 2);

        let halves = Partition::new(4, vec![0, 0, 1, 1], 2).unwrap();
        let quarters = Partition::discrete(4);
        let c = combine(&halves, &quarters).unwrap();
        assert_eq!(c.classes(), 4);

        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let m = 12;
        let pa = Partition::new(m, (0..m).map(|_| rng.gen_range(0..3)).collect(), 3).unwrap();
        let pb = Partition::new(m, (0..m).map(|_| rng.gen_range(0..2)).collect(), 2).unwrap();
        let c = combine(&pa, &pb).unwrap();
        for (b1, &c1) in c.assignment().iter().enumerate() {
            for (b2, &c2) in c.assignment().iter().enumerate() {
                let together_in_both = pa.class_of(b1) == pa.class_of(b2)
                    && pb.class_of(b1) == pb.class_of(b2);
                assert_eq!(c1 == c2, together_in_both);
            }
        }
    }

    #[test]
    fn combine_represents_both_inputs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let m = 12;
        let pa = Partition::new(m, (0..m).map(|_| rng.gen_range(0..4)).collect(), 4).unwrap();
        let pb = Partition::new(m, (0..m).map(|_| rng.gen_range(0..3)).collect(), 3).unwrap();
        let c = combine(&pa, &pb).unwrap();
        // A step signal over pa projects onto c with zero error.
        let class_vals: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = StepSignal::scalar(
            (0..m).map(|b| class_vals[pa.class_of(b)]).collect(),
            1.0,
        )
        .unwrap();
        let x = GraphonSignal::new(StepGraphon::constant(m, 0.5).unwrap(), f.clone()).unwrap();
        let projected = project(&x, &c).unwrap();
        assert!(signal_l1_norm(&f.sub(projected.signal()).unwrap()) < 1e-12);
    }
}
