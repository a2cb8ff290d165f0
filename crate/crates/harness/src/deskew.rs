//! Moment-based deskewing.
//!
//! With centre of mass `(r0, c0)`, row variance `var_r` and covariance
//! `cov_rc`, the slant is `alpha = cov_rc / var_r` (column drift per row). The
//! output pixel at `(r, c)` samples the input at
//! `(r - h_r + r0, c + alpha (r - h_r) - h_c + c0)` with `(h_r, h_c)` the image
//! centre `(rows / 2, cols / 2)`, which removes the slant and moves the centre
//! of mass to the middle. Sampling is bilinear with zeros outside the image.

/// Image moments of a non-negative intensity image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub center: (f64, f64),
    pub var_row: f64,
    pub cov: f64,
}

impl Moments {
    pub fn of(image: &[f64], rows: usize, cols: usize) -> Moments {
        assert_eq!(image.len(), rows * cols);
        let (mut mass, mut sr, mut sc) = (0.0, 0.0, 0.0);
        for r in 0..rows {
            for c in 0..cols {
                let v = image[r * cols + c];
                mass += v;
                sr += r as f64 * v;
                sc += c as f64 * v;
            }
        }
        if mass == 0.0 {
            return Moments { mass, center: (0.0, 0.0), var_row: 0.0, cov: 0.0 };
        }
        let (r0, c0) = (sr / mass, sc / mass);
        let (mut vr, mut cv) = (0.0, 0.0);
        for r in 0..rows {
            for c in 0..cols {
                let v = image[r * cols + c];
                let dr = r as f64 - r0;
                vr += dr * dr * v;
                cv += dr * (c as f64 - c0) * v;
            }
        }
        Moments { mass, center: (r0, c0), var_row: vr / mass, cov: cv / mass }
    }

    /// Column drift per row, `cov / var_row`; zero for a degenerate image.
    pub fn skew(&self) -> f64 {
        if self.var_row > 0.0 {
            self.cov / self.var_row
        } else {
            0.0
        }
    }
}

fn bilinear(image: &[f64], rows: usize, cols: usize, r: f64, c: f64) -> f64 {
    let (r_lo, c_lo) = (r.floor(), c.floor());
    let (fr, fc) = (r - r_lo, c - c_lo);
    let at = |ri: f64, ci: f64| {
        if ri < 0.0 || ci < 0.0 || ri >= rows as f64 || ci >= cols as f64 {
            0.0
        } else {
            image[ri as usize * cols + ci as usize]
        }
    };
    (1.0 - fr) * ((1.0 - fc) * at(r_lo, c_lo) + fc * at(r_lo, c_lo + 1.0))
        + fr * ((1.0 - fc) * at(r_lo + 1.0, c_lo) + fc * at(r_lo + 1.0, c_lo + 1.0))
}

/// Deskews and recentres `image`. An all-zero image comes back unchanged.
pub fn deskew(image: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let m = Moments::of(image, rows, cols);
    if m.mass == 0.0 {
        return image.to_vec();
    }
    let alpha = m.skew();
    let (hr, hc) = (rows as f64 / 2.0, cols as f64 / 2.0);
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let dr = r as f64 - hr;
        for c in 0..cols {
            let src_r = dr + m.center.0;
            let src_c = c as f64 + alpha * dr - hc + m.center.1;
            out[r * cols + c] = bilinear(image, rows, cols, src_r, src_c);
        }
    }
    out
}
