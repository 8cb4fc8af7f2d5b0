//! Optional chart rendering: a plain heatmap PNG derived from the chart
//! data, time increasing from bottom to top.

use tlsim_core::{Result, SpectrotemporalChart};

/// Five-stop dark-blue to yellow color ramp.
fn ramp(t: f64) -> [u8; 3] {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [13.0, 8.0, 135.0]),
        (0.25, [126.0, 3.0, 168.0]),
        (0.50, [204.0, 71.0, 120.0]),
        (0.75, [248.0, 149.0, 64.0]),
        (1.00, [240.0, 249.0, 33.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    for w in STOPS.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            return [
                (c0[0] + f * (c1[0] - c0[0])) as u8,
                (c0[1] + f * (c1[1] - c0[1])) as u8,
                (c0[2] + f * (c1[2] - c0[2])) as u8,
            ];
        }
    }
    [240, 249, 33]
}

/// Render the chart to a PNG file, one cell per (cell_w x cell_h) block.
pub fn render_chart(path: &std::path::Path, chart: &SpectrotemporalChart) -> Result<()> {
    let (n_rows, n_cols) = (chart.n_rows(), chart.n_cols());
    let cell_w = (600 / n_cols.max(1)).clamp(2, 24) as u32;
    let cell_h = (600 / n_rows.max(1)).clamp(1, 12) as u32;
    let width = n_cols as u32 * cell_w;
    let height = n_rows as u32 * cell_h;

    let lo = chart.t1_s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = chart.t1_s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);

    let mut img = image::RgbImage::new(width, height);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let col = (x / cell_w) as usize;
        // row 0 (earliest time) at the bottom
        let row = n_rows - 1 - (y / cell_h) as usize;
        let v = (chart.cell(row, col) - lo) / span;
        *px = image::Rgb(ramp(v));
    }
    img.save(path)
        .map_err(|e| tlsim_core::Error::Io(std::io::Error::other(e)))?;
    Ok(())
}
