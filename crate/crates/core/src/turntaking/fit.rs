use super::{TransitionEvent, TransitionMode, TransitionType, TurnTakingParams};
use crate::error::{Error, Result};

const RATE_TOLERANCE: f64 = 1e-8;

/// Mean of an exponential with rate `beta` truncated to (0, 1]:
/// `1/beta - 1/(e^beta - 1)`. Decreases from 1/2 to 0 as `beta` grows.
pub fn truncated_exponential_mean(beta: f64) -> f64 {
    if beta < 1e-4 {
        // series expansion avoids cancellation near 0
        0.5 - beta / 12.0 + beta.powi(3) / 720.0
    } else {
        1.0 / beta - 1.0 / beta.exp_m1()
    }
}

/// Maximum-likelihood rate of a (0, 1]-truncated exponential.
///
/// The log-likelihood derivative is `n * (mean(beta) - sample_mean)`, which is
/// monotone in `beta`, so the root is found by bisection.
pub fn fit_truncated_exponential_rate(ratios: &[f64]) -> Result<f64> {
    let fail = |message: String| Error::Fit {
        kind: "IR".into(),
        message,
    };
    if ratios.is_empty() {
        return Err(fail("no interruption samples".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(fail(format!("overlap ratio {r} outside (0, 1]")));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean >= 0.5 {
        return Err(fail(format!(
            "mean overlap ratio {mean} >= 0.5 has no positive-rate maximum-likelihood solution"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while truncated_exponential_mean(hi) > mean {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= RATE_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if truncated_exponential_mean(mid) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn exponential_rate(kind: TransitionType, gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::Fit {
            kind: kind.label().into(),
            message: "no samples to estimate a rate".into(),
        });
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if mean <= 0.0 {
        return Err(Error::Fit {
            kind: kind.label().into(),
            message: "all gaps are zero (infinite rate)".into(),
        });
    }
    Ok(1.0 / mean)
}

fn normalize(counts: &[usize; 4]) -> Option<[f64; 4]> {
    let total: usize = counts.iter().sum();
    (total > 0).then(|| counts.map(|c| c as f64 / total as f64))
}

/// Maximum-likelihood parameters from a sequence of classified transitions.
///
/// The prior is the normalized type histogram. In Markov mode each matrix row
/// is the normalized count of type bigrams; a row whose type never occurs
/// (or only as the last event) falls back to the prior.
pub fn fit_params(events: &[TransitionEvent], mode: TransitionMode, bc_max_duration: f64) -> Result<TurnTakingParams> {
    let mut counts = [0usize; 4];
    let mut bigrams = [[0usize; 4]; 4];
    let mut th_gaps = Vec::new();
    let mut ts_gaps = Vec::new();
    let mut ratios = Vec::new();
    for (i, event) in events.iter().enumerate() {
        counts[event.kind().index()] += 1;
        if i > 0 {
            bigrams[events[i - 1].kind().index()][event.kind().index()] += 1;
        }
        match *event {
            TransitionEvent::TurnHold { gap } => th_gaps.push(gap),
            TransitionEvent::TurnSwitch { gap } => ts_gaps.push(gap),
            TransitionEvent::Interruption { overlap_ratio } => ratios.push(overlap_ratio),
            TransitionEvent::Backchannel { .. } => {}
        }
    }
    let p = normalize(&counts).ok_or_else(|| Error::Fit {
        kind: "transitions".into(),
        message: "no events".into(),
    })?;
    let transition_matrix = match mode {
        TransitionMode::Categorical => [p; 4],
        TransitionMode::Markov => bigrams.map(|row| normalize(&row).unwrap_or(p)),
    };
    let params = TurnTakingParams {
        mode,
        p,
        transition_matrix,
        beta_th: exponential_rate(TransitionType::TurnHold, &th_gaps)?,
        beta_ts: exponential_rate(TransitionType::TurnSwitch, &ts_gaps)?,
        beta_ir: fit_truncated_exponential_rate(&ratios)?,
        bc_max_duration,
    };
    params.validate()?;
    Ok(params)
}
