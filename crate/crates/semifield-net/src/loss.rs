//! Segmentation metrics: hard Dice coefficient for evaluation, soft Dice loss
//! (ε = 1) with its gradient for training.

use semifield_core::Grid2;

use crate::NetError;

/// Threshold applied to soft predictions before the hard Dice overlap.
pub const DICE_THRESHOLD: f64 = 0.5;

/// Hard Dice coefficient `2|P∩T| / (|P|+|T|)` of the thresholded prediction
/// against a binary target; 1 when both masks are empty.
pub fn dice_coefficient(prediction: &Grid2, target: &Grid2) -> Result<f64, NetError> {
    if prediction.dims() != target.dims() {
        return Err(NetError::ChannelShapeMismatch);
    }
    let mut inter = 0usize;
    let mut p_count = 0usize;
    let mut t_count = 0usize;
    for (p, t) in prediction.values().iter().zip(target.values()) {
        let pb = *p >= DICE_THRESHOLD;
        let tb = *t >= DICE_THRESHOLD;
        p_count += pb as usize;
        t_count += tb as usize;
        inter += (pb && tb) as usize;
    }
    if p_count + t_count == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (p_count + t_count) as f64)
}

/// Soft Dice loss `1 − (2Σpt + ε)/(Σp + Σt + ε)`, ε = 1.
pub fn soft_dice_loss(prediction: &Grid2, target: &Grid2) -> Result<f64, NetError> {
    Ok(soft_dice_loss_and_grad(prediction, target)?.0)
}

/// Soft Dice loss together with ∂loss/∂prediction.
pub fn soft_dice_loss_and_grad(
    prediction: &Grid2,
    target: &Grid2,
) -> Result<(f64, Grid2), NetError> {
    if prediction.dims() != target.dims() {
        return Err(NetError::ChannelShapeMismatch);
    }
    const EPS: f64 = 1.0;
    let mut pt = 0.0;
    let mut ps = 0.0;
    let mut ts = 0.0;
    for (p, t) in prediction.values().iter().zip(target.values()) {
        pt += p * t;
        ps += p;
        ts += t;
    }
    let num = 2.0 * pt + EPS;
    let den = ps + ts + EPS;
    let loss = 1.0 - num / den;
    // ∂loss/∂p_k = −(2·t_k·den − num) / den².
    let grad = Grid2::from_fn(prediction.width(), prediction.height(), |x, y| {
        let t = target.get(x, y);
        -(2.0 * t * den - num) / (den * den)
    });
    Ok((loss, grad))
}
