use crate::error::{Error, Result};

/// Euclidean projection onto `{u : u_1 >= u_2 >= ... >= u_n >= 0}`.
///
/// Pool-adjacent-violators under a non-increasing order, then negatives are
/// clipped to zero. Clipping a isotonic fit preserves the order and gives
/// the projection onto the bounded cone.
pub fn project_monotone_nonneg(v: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite entry {} at index {i}", v[i])));
    }
    let mut out = v.to_vec();
    project_in_place(&mut out);
    Ok(out)
}

/// In-place variant for finite input.
pub(crate) fn project_in_place(v: &mut [f64]) {
    // Blocks as (sum, len); block means stay non-increasing.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v.iter() {
        let mut sum = x;
        let mut len = 1usize;
        while let Some(&(ps, pl)) = blocks.last() {
            // merge while the previous mean is below the current one
            if ps * (len as f64) < sum * (pl as f64) {
                sum += ps;
                len += pl;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, len));
    }
    let mut i = 0;
    for (sum, len) in blocks {
        let mean = (sum / len as f64).max(0.0);
        v[i..i + len].fill(mean);
        i += len;
    }
    // rounding in the block means must not reintroduce an ulp-sized violation
    for i in 1..v.len() {
        if v[i] > v[i - 1] {
            v[i] = v[i - 1];
        }
    }
}

/// True when `theta` satisfies both constraint families exactly.
pub fn is_feasible(theta: &[f64]) -> bool {
    theta.windows(2).all(|w| w[0] >= w[1]) && theta.last().is_none_or(|&x| x >= 0.0)
}
