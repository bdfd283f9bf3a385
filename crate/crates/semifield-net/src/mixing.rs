//! Channel-mixing pieces of a network: the 3×3 stem that lifts a one-channel
//! image to C features, the per-pixel affine mix closing each layer, and the
//! 1×1 head that collapses the stack to a logit field.

use rayon::prelude::*;
use semifield_core::Grid2;

use crate::stack::FeatureStack;
use crate::NetError;

#[inline]
fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// 3×3 convolution lifting one channel to `c` feature channels, no bias,
/// replicate boundary. Weights: `w[ch*9 + (dy+1)*3 + (dx+1)]`.
pub fn stem_forward(w: &[f64], image: &Grid2, c: usize) -> Result<FeatureStack, NetError> {
    if w.len() != 9 * c {
        return Err(NetError::ParameterShape { what: "stem weights", expected: 9 * c, got: w.len() });
    }
    let (gw, gh) = image.dims();
    let channels = (0..c)
        .into_par_iter()
        .map(|ch| {
            let wk = &w[9 * ch..9 * ch + 9];
            Grid2::from_fn(gw, gh, |x, y| {
                let mut acc = 0.0;
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let f = image.get(clamp_idx(x as isize + dx, gw), clamp_idx(y as isize + dy, gh));
                        acc += wk[((dy + 1) * 3 + (dx + 1)) as usize] * f;
                    }
                }
                acc
            })
        })
        .collect();
    FeatureStack::new(channels)
}

/// Stem gradient: only the weights are trainable (the input is data).
pub fn stem_backward(image: &Grid2, upstream: &FeatureStack) -> Vec<f64> {
    let (gw, gh) = image.dims();
    let c = upstream.len();
    let rows: Vec<[f64; 9]> = (0..c)
        .into_par_iter()
        .map(|ch| {
            let up = upstream.channel(ch);
            let mut row = [0.0; 9];
            for y in 0..gh {
                for x in 0..gw {
                    let u = up.get(x, y);
                    if u == 0.0 {
                        continue;
                    }
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            let f = image
                                .get(clamp_idx(x as isize + dx, gw), clamp_idx(y as isize + dy, gh));
                            row[((dy + 1) * 3 + (dx + 1)) as usize] += u * f;
                        }
                    }
                }
            }
            row
        })
        .collect();
    let mut dw = vec![0.0; 9 * c];
    for (ch, row) in rows.into_iter().enumerate() {
        dw[9 * ch..9 * ch + 9].copy_from_slice(&row);
    }
    dw
}

/// Per-pixel affine channel mix: `out_o = b[o] + Σ_i w[o*C+i]·in_i`.
pub fn affine_forward(w: &[f64], b: &[f64], input: &FeatureStack) -> Result<FeatureStack, NetError> {
    let c_in = input.len();
    let c_out = b.len();
    if w.len() != c_in * c_out {
        return Err(NetError::ParameterShape {
            what: "affine weights",
            expected: c_in * c_out,
            got: w.len(),
        });
    }
    let (gw, gh) = input.dims();
    let channels = (0..c_out)
        .into_par_iter()
        .map(|o| {
            let row = &w[o * c_in..(o + 1) * c_in];
            Grid2::from_fn(gw, gh, |x, y| {
                let mut acc = b[o];
                for (i, wi) in row.iter().enumerate() {
                    acc += wi * input.channel(i).get(x, y);
                }
                acc
            })
        })
        .collect();
    FeatureStack::new(channels)
}

/// Affine gradients: (∂L/∂w, ∂L/∂b, ∂L/∂input). ∂L/∂b is the per-channel
/// pixel sum of the upstream gradient.
pub fn affine_backward(
    w: &[f64],
    input: &FeatureStack,
    upstream: &FeatureStack,
) -> (Vec<f64>, Vec<f64>, FeatureStack) {
    let c_in = input.len();
    let c_out = upstream.len();
    let (gw, gh) = input.dims();
    // Weight/bias rows per output channel, input gradients per input channel:
    // both loops write disjoint slices, so each runs as a parallel map.
    let weight_rows: Vec<(f64, Vec<f64>)> = (0..c_out)
        .into_par_iter()
        .map(|o| {
            let up = upstream.channel(o);
            let db_o = up.values().iter().sum();
            let mut row = vec![0.0; c_in];
            for (i, slot) in row.iter_mut().enumerate() {
                let inp = input.channel(i);
                let mut acc = 0.0;
                for (a, b) in inp.values().iter().zip(up.values()) {
                    acc += a * b;
                }
                *slot = acc;
            }
            (db_o, row)
        })
        .collect();
    let mut dw = vec![0.0; c_in * c_out];
    let mut db = vec![0.0; c_out];
    for (o, (db_o, row)) in weight_rows.into_iter().enumerate() {
        db[o] = db_o;
        dw[o * c_in..(o + 1) * c_in].copy_from_slice(&row);
    }
    let channels: Vec<Grid2> = (0..c_in)
        .into_par_iter()
        .map(|i| {
            let mut gin = Grid2::new(gw, gh, 0.0);
            for o in 0..c_out {
                let wi = w[o * c_in + i];
                // upstream channel o contributes w_oi per pixel
                for (g, u) in gin.values_mut().iter_mut().zip(upstream.channel(o).values()) {
                    *g += wi * u;
                }
            }
            gin
        })
        .collect();
    let dinput = FeatureStack::new(channels).expect("input stack is non-empty");
    (dw, db, dinput)
}

/// 1×1 head, no bias: logit z(x) = Σ_i w[i]·in_i(x).
pub fn head_forward(w: &[f64], input: &FeatureStack) -> Result<Grid2, NetError> {
    if w.len() != input.len() {
        return Err(NetError::ParameterShape { what: "head weights", expected: input.len(), got: w.len() });
    }
    let (gw, gh) = input.dims();
    Ok(Grid2::from_fn(gw, gh, |x, y| {
        let mut acc = 0.0;
        for (i, wi) in w.iter().enumerate() {
            acc += wi * input.channel(i).get(x, y);
        }
        acc
    }))
}

/// Head gradients: (∂L/∂w, ∂L/∂input) from ∂L/∂z.
pub fn head_backward(w: &[f64], input: &FeatureStack, dz: &Grid2) -> (Vec<f64>, FeatureStack) {
    let c = input.len();
    let (gw, gh) = input.dims();
    let per_channel: Vec<(f64, Grid2)> = (0..c)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (a, b) in input.channel(i).values().iter().zip(dz.values()) {
                acc += a * b;
            }
            let gin = Grid2::from_fn(gw, gh, |x, y| w[i] * dz.get(x, y));
            (acc, gin)
        })
        .collect();
    let mut dw = vec![0.0; c];
    let mut channels = Vec::with_capacity(c);
    for (i, (acc, gin)) in per_channel.into_iter().enumerate() {
        dw[i] = acc;
        channels.push(gin);
    }
    let dinput = FeatureStack::new(channels).expect("input stack is non-empty");
    (dw, dinput)
}

/// Logistic squashing of a logit field into (0,1).
pub fn logistic(z: &Grid2) -> Grid2 {
    z.map(|v| 1.0 / (1.0 + (-v).exp()))
}
