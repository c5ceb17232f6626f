use super::GrayImage;
use crate::{Error, Result};

/// Median over a `window x window` neighbourhood with edge replication.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    if window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    let dim = img.width().min(img.height());
    if window > dim {
        return Err(Error::WindowTooLarge { window, dim });
    }
    let r = (window / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut buf = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(img.pixels().len());
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -r..=r {
                let yy = (y + dy).clamp(0, h - 1) as usize;
                for dx in -r..=r {
                    let xx = (x + dx).clamp(0, w - 1) as usize;
                    buf.push(img.get(yy, xx));
                }
            }
            let mid = buf.len() / 2;
            let (_, m, _) = buf.select_nth_unstable(mid);
            out.push(*m);
        }
    }
    GrayImage::new(img.width(), img.height(), img.max_level(), out)
}

/// Otsu threshold: the level `t` maximising between-class variance of
/// `{p <= t}` vs `{p > t}`; ties resolve to the smallest `t`.
pub fn otsu_threshold(img: &GrayImage) -> u16 {
    let levels = img.max_level() as usize + 1;
    let mut hist = vec![0u64; levels];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let total = img.pixels().len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(g, &c)| g as f64 * c as f64).sum();

    let mut best_t = 0u16;
    let mut best_var = f64::NEG_INFINITY;
    let (mut count_low, mut sum_low) = (0u64, 0.0f64);
    for t in 0..levels {
        count_low += hist[t];
        sum_low += t as f64 * hist[t] as f64;
        let w0 = count_low as f64;
        let w1 = total - w0;
        let var = if count_low == 0 || w1 == 0.0 {
            0.0
        } else {
            let m0 = sum_low / w0;
            let m1 = (total_sum - sum_low) / w1;
            w0 * w1 * (m0 - m1) * (m0 - m1)
        };
        if var > best_var {
            best_var = var;
            best_t = t as u16;
        }
    }
    best_t
}

/// Keep the largest 8-connected component above the Otsu threshold, zero
/// everything else, and crop to the component's bounding box.
pub fn remove_background(img: &GrayImage) -> Result<GrayImage> {
    let t = otsu_threshold(img);
    let (w, h) = (img.width(), img.height());
    let mut component = vec![0u32; w * h];
    let mut best: Option<(u32, usize, [usize; 4])> = None;
    let mut next_id = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if img.pixels()[start] <= t || component[start] != 0 {
            continue;
        }
        next_id += 1;
        component[start] = next_id;
        stack.push(start);
        let mut area = 0usize;
        let mut bbox = [start / w, start % w, start / w, start % w];
        while let Some(p) = stack.pop() {
            area += 1;
            let (y, x) = (p / w, p % w);
            bbox = [bbox[0].min(y), bbox[1].min(x), bbox[2].max(y), bbox[3].max(x)];
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if component[q] == 0 && img.pixels()[q] > t {
                        component[q] = next_id;
                        stack.push(q);
                    }
                }
            }
        }
        if best.is_none_or(|(_, a, _)| area > a) {
            best = Some((next_id, area, bbox));
        }
    }
    let (id, _, [y0, x0, y1, x1]) = best.ok_or(Error::NoForeground)?;
    let mut pixels = Vec::with_capacity((y1 - y0 + 1) * (x1 - x0 + 1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = y * w + x;
            pixels.push(if component[p] == id { img.pixels()[p] } else { 0 });
        }
    }
    GrayImage::new(x1 - x0 + 1, y1 - y0 + 1, img.max_level(), pixels)
}

/// Whole image plus three overlapping horizontal bands.
#[derive(Debug, Clone)]
pub struct Segments {
    pub whole: GrayImage,
    pub top: GrayImage,
    pub middle: GrayImage,
    pub bottom: GrayImage,
    /// Band height and the top row of each band.
    pub band_height: usize,
    pub anchors: [usize; 3],
}

pub fn segment_image(img: &GrayImage, overlap_fraction: f64) -> Result<Segments> {
    let h = img.height();
    if h < 3 {
        return Err(Error::ImageTooSmall(h));
    }
    if !(0.0..0.5).contains(&overlap_fraction) {
        return Err(Error::InvalidImage(format!("overlap fraction {overlap_fraction} outside [0, 0.5)")));
    }
    // Snap products like 300 * (1/3 + 0.1) = 130.00000000000003 before ceil.
    let exact = h as f64 * (1.0 / 3.0 + overlap_fraction);
    let band = ((exact - 1e-9).ceil() as usize).clamp(1, h);
    let anchors = [0, (h - band) / 2, h - band];
    Ok(Segments {
        whole: img.clone(),
        top: img.band(anchors[0], band),
        middle: img.band(anchors[1], band),
        bottom: img.band(anchors[2], band),
        band_height: band,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[u16], max: u16) -> GrayImage {
        GrayImage::new(values.len(), 1, max, values.to_vec()).unwrap()
    }

    /// Exhaustive between-class variance search, written independently.
    fn otsu_oracle(img: &GrayImage) -> u16 {
        let px: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
        let n = px.len() as f64;
        let mut best = (f64::NEG_INFINITY, 0u16);
        for t in 0..=img.max_level() {
            let lo: Vec<f64> = px.iter().copied().filter(|&p| p <= t as f64).collect();
            let hi: Vec<f64> = px.iter().copied().filter(|&p| p > t as f64).collect();
            let var = if lo.is_empty() || hi.is_empty() {
                0.0
            } else {
                let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
                let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
                (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2)
            };
            if var > best.0 + 1e-12 * var.abs().max(1.0) {
                best = (var, t);
            }
        }
        best.1
    }

    #[test]
    fn median_constant_and_outlier() {
        let c = GrayImage::constant(5, 4, 255, 17).unwrap();
        assert_eq!(median_filter(&c, 3).unwrap(), c);
        let mut px = vec![0u16; 9];
        px[4] = 255;
        let img = GrayImage::new(3, 3, 255, px).unwrap();
        assert_eq!(median_filter(&img, 3).unwrap().get(1, 1), 0);
    }

    #[test]
    fn median_row_with_edge_replication() {
        // A 1-pixel-high image needs window 1 by the size rule; evaluate the
        // 1x5 row as a 3-row stack so each 3x3 window sees the row thrice.
        let img = GrayImage::from_rows(&vec![vec![0, 0, 9, 0, 0]; 3], 9).unwrap();
        let out = median_filter(&img, 3).unwrap();
        assert_eq!(out.pixels()[5..10], [0, 0, 0, 0, 0]);
    }

    #[test]
    fn median_errors() {
        let img = GrayImage::constant(4, 4, 9, 1).unwrap();
        assert!(matches!(median_filter(&img, 2), Err(Error::EvenWindow(2))));
        assert!(matches!(median_filter(&img, 5), Err(Error::WindowTooLarge { .. })));
    }

    #[test]
    fn otsu_examples() {
        assert_eq!(otsu_threshold(&GrayImage::constant(3, 3, 255, 40).unwrap()), 0);
        let mut two = vec![10u16; 8];
        two.extend(vec![200u16; 8]);
        assert_eq!(otsu_threshold(&row(&two, 255)), 10);
        assert_eq!(otsu_threshold(&row(&[0, 0, 0, 255], 255)), 0);
    }

    #[test]
    fn otsu_matches_exhaustive_oracle() {
        let mut state = 12345u64;
        for _ in 0..200 {
            let n = 1 + (state % 40) as usize;
            let px: Vec<u16> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 33) % 32) as u16
                })
                .collect();
            let img = row(&px, 31);
            assert_eq!(otsu_threshold(&img), otsu_oracle(&img), "{px:?}");
        }
    }

    fn blank(w: usize, h: usize) -> Vec<u16> {
        vec![0; w * h]
    }

    #[test]
    fn background_removal_keeps_largest_blob() {
        let (w, h) = (40, 30);
        let mut px = blank(w, h);
        for y in 5..15 {
            for x in 3..13 {
                px[y * w + x] = 200;
            }
        }
        for y in 20..22 {
            for x in 30..35 {
                px[y * w + x] = 180;
            }
        }
        let img = GrayImage::new(w, h, 255, px).unwrap();
        let out = remove_background(&img).unwrap();
        assert_eq!((out.width(), out.height()), (10, 10));
        assert!(out.pixels().iter().all(|&p| p == 200));
    }

    #[test]
    fn background_removal_needs_foreground() {
        let img = GrayImage::constant(4, 4, 255, 0).unwrap();
        assert!(matches!(remove_background(&img), Err(Error::NoForeground)));
    }

    #[test]
    fn segment_band_geometry() {
        let img = GrayImage::constant(4, 300, 255, 3).unwrap();
        let s = segment_image(&img, 0.1).unwrap();
        assert_eq!(s.band_height, 130);
        assert_eq!(s.anchors, [0, 85, 170]);
        assert_eq!(s.bottom.height(), 130);
        assert_eq!(s.whole, img);

        let small = GrayImage::from_rows(&[vec![1], vec![2], vec![3]], 9).unwrap();
        let s = segment_image(&small, 0.0).unwrap();
        assert_eq!(s.anchors, [0, 1, 2]);
        assert_eq!(s.top.pixels(), &[1]);
        assert_eq!(s.middle.pixels(), &[2]);
        assert_eq!(s.bottom.pixels(), &[3]);

        let tiny = GrayImage::constant(3, 2, 9, 0).unwrap();
        assert!(matches!(segment_image(&tiny, 0.1), Err(Error::ImageTooSmall(2))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn median_output_within_input_range(
                w in 3usize..9, h in 3usize..9, seed in any::<u64>()
            ) {
                let mut s = seed;
                let px: Vec<u16> = (0..w * h).map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((s >> 40) % 256) as u16
                }).collect();
                let img = GrayImage::new(w, h, 255, px.clone()).unwrap();
                let out = median_filter(&img, 3).unwrap();
                let (lo, hi) = (*px.iter().min().unwrap(), *px.iter().max().unwrap());
                prop_assert!(out.pixels().iter().all(|&p| p >= lo && p <= hi));
            }
        }
    }
}
