use crate::error::Result;
use crate::media::{luma_code_values, Frame};

/// Returned when the frames are identical; reports print it as `inf`.
pub const PSNR_INFINITE: f64 = f64::MAX;

pub fn is_infinite_psnr(db: f64) -> bool {
    db >= PSNR_INFINITE
}

/// PSNR in dB on BT.709 luma code values (peak 255).
pub fn psnr(reference: &Frame, distorted: &Frame) -> Result<f64> {
    reference.check_same_size(distorted)?;
    let a = luma_code_values(reference);
    let b = luma_code_values(distorted);
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_INFINITE);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}
