//! Monte Carlo block-error-rate simulation.
//!
//! Trials are partitioned across workers with one counter-based RNG
//! stream per trial, all derived from the master seed, so the error count
//! is independent of how the trial range is split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::codec::{sample_output, sc_decode, CodeConfig, CodecError, GeneratorMatrix};
use crate::group::Group;
use crate::par;

/// Outcome of a block-error simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub trials: usize,
    pub errors: usize,
    pub bler: f64,
}

/// Sends `trials` random messages through `ch` with the code `cfg` and
/// counts block errors under successive-cancellation decoding.
pub fn simulate_bler(
    ch: &Channel,
    cfg: &CodeConfig,
    trials: usize,
    seed: u64,
) -> Result<SimResult, CodecError> {
    if trials == 0 {
        return Err(CodecError::TrialsTooFew(0));
    }
    if ch.group() != cfg.group() {
        return Err(CodecError::ConfigChannelMismatch(
            "channel group differs from config group".into(),
        ));
    }
    let group: Group = cfg.group().clone();
    let big_n = cfg.block_length();
    let gm = GeneratorMatrix::new(cfg.depth())?;
    let b = cfg.dither();

    let outcomes: Vec<Result<bool, CodecError>> = par::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64 + 1);
        let v = cfg.random_message(&mut rng);
        let u: Vec<usize> = (0..big_n).map(|i| group.add(v[i], b[i])).collect();
        let x = gm.encode(&group, &u)?;
        let y: Vec<usize> = x
            .iter()
            .map(|&xj| sample_output(ch, xj, &mut rng))
            .collect();
        let decoded = sc_decode(ch, cfg, &y)?;
        Ok(decoded != v)
    });

    let mut errors = 0usize;
    for o in outcomes {
        if o? {
            errors += 1;
        }
    }
    Ok(SimResult {
        trials,
        errors,
        bler: errors as f64 / trials as f64,
    })
}
