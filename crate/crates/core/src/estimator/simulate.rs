use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Estimate, LevelEstimate, Moments, CHUNK};
use crate::error::{Error, Result};
use crate::premium_flow::FlowEvaluator;
use crate::risk_model::ModelParams;

/// Direct simulation of the surplus path: draw inter-claim times and claims,
/// follow the premium flow between claims, and score
/// `e^{-delta tau} w(|X_tau|, X_{tau-})` at ruin. Paths that survive
/// `max_jumps` claims score 0. Path `i` uses ChaCha8 stream `i` under `seed`.
pub fn mc_reference_simulator(
    model: &ModelParams,
    n_paths: usize,
    max_jumps: usize,
    seed: u64,
) -> Result<Estimate> {
    model.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    let flow = FlowEvaluator::new(model.premium);
    let chunks: Vec<(Moments, Vec<Moments>)> = (0..n_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut total = Moments::default();
            let mut levels = vec![Moments::default(); max_jumps];
            for path in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path as u64);
                let (level, score) = simulate_path(model, &flow, max_jumps, &mut rng);
                total.push(score);
                for (j, m) in levels.iter_mut().enumerate() {
                    m.push(if Some(j) == level { score } else { 0.0 });
                }
            }
            (total, levels)
        })
        .collect();
    let mut total = Moments::default();
    let mut levels = vec![Moments::default(); max_jumps];
    for (t, ls) in chunks {
        total = total.merge(t);
        for (acc, l) in levels.iter_mut().zip(ls) {
            *acc = acc.merge(l);
        }
    }
    let per_level = levels
        .iter()
        .enumerate()
        .map(|(j, m)| LevelEstimate {
            k: j + 1,
            value: m.mean,
            points: n_paths,
            stderr: m.stderr(),
        })
        .collect();
    Ok(Estimate::from_levels(per_level, total.stderr()))
}

/// Returns the ruin claim index (0-based) and the discounted penalty.
fn simulate_path(
    model: &ModelParams,
    flow: &FlowEvaluator,
    max_jumps: usize,
    rng: &mut ChaCha8Rng,
) -> (Option<usize>, f64) {
    let mut surplus = model.x;
    let mut time = 0.0;
    for j in 0..max_jumps {
        let w = model.interarrival.sample(rng);
        time += w;
        let before = flow.flow_unchecked(w, surplus);
        let claim = model.claim.sample(rng);
        if claim > before {
            let score = (-model.delta * time).exp() * model.penalty.eval(claim - before, before);
            return (Some(j), score);
        }
        surplus = before - claim;
    }
    (None, 0.0)
}
