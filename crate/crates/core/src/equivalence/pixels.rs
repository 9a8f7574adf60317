use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("image decode: {0}")]
pub struct PixelError(pub String);

/// Exact pixel identity after decoding both images to RGBA8. Images of
/// different dimensions are unequal without comparing pixels.
pub fn match_pixels(candidate_image: &[u8], truth_image: &[u8]) -> Result<bool, PixelError> {
    let a = image::load_from_memory(candidate_image).map_err(|e| PixelError(e.to_string()))?;
    let b = image::load_from_memory(truth_image).map_err(|e| PixelError(e.to_string()))?;
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Ok(false);
    }
    Ok(a.to_rgba8().as_raw() == b.to_rgba8().as_raw())
}
