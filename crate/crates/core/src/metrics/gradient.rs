use crate::image::Image;

/// Mean over pixels and channels of `sqrt((dx² + dy²) / 2)` with forward
/// differences, evaluated where both differences exist.
pub fn average_gradient(img: &Image) -> f64 {
    let (c, h, w) = img.shape();
    if h < 2 || w < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for ch in 0..c {
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let v = img.get(ch, y, x) as f64;
                let dx = img.get(ch, y, x + 1) as f64 - v;
                let dy = img.get(ch, y + 1, x) as f64 - v;
                total += ((dx * dx + dy * dy) / 2.0).sqrt();
            }
        }
    }
    total / (c * (h - 1) * (w - 1)) as f64
}

/// `sqrt(RF² + CF²)` where RF and CF are the RMS of horizontal and vertical
/// forward differences.
pub fn spatial_frequency(img: &Image) -> f64 {
    let (c, h, w) = img.shape();
    let mut row_sq = 0.0;
    let mut col_sq = 0.0;
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                let v = img.get(ch, y, x) as f64;
                if x + 1 < w {
                    row_sq += (img.get(ch, y, x + 1) as f64 - v).powi(2);
                }
                if y + 1 < h {
                    col_sq += (img.get(ch, y + 1, x) as f64 - v).powi(2);
                }
            }
        }
    }
    let rf = if w > 1 { row_sq / (c * h * (w - 1)) as f64 } else { 0.0 };
    let cf = if h > 1 { col_sq / (c * (h - 1) * w) as f64 } else { 0.0 };
    (rf + cf).sqrt()
}
