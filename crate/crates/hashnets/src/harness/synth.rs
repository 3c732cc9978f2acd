//! Deterministic synthetic digit images.
//!
//! Ten stroke-based glyphs rendered onto a 28x28 grid under random affine
//! jitter, stroke width variation, and pixel noise. Serves as a stand-in
//! classification task with the same shape as the usual handwritten-digit
//! files when those are not on disk; hard enough that parameter-starved
//! models visibly underfit.

use super::dataset::Dataset;
use crate::rng::Rng;

pub const IMAGE_SIDE: usize = 28;
pub const N_CLASSES: usize = 10;

type Point = (f64, f64);

fn ellipse_arc(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64, points: usize) -> Vec<Point> {
    (0..points)
        .map(|i| {
            let t = a0 + (a1 - a0) * i as f64 / (points - 1) as f64;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

/// Polylines of each digit in the unit box (x right, y down).
fn glyph(digit: usize) -> Vec<Vec<Point>> {
    use std::f64::consts::PI;
    match digit {
        0 => vec![ellipse_arc(0.5, 0.5, 0.28, 0.38, 0.0, 2.0 * PI, 12)],
        1 => vec![vec![(0.35, 0.30), (0.55, 0.12), (0.55, 0.88)]],
        2 => {
            let mut line = ellipse_arc(0.5, 0.32, 0.26, 0.20, PI, 2.2 * PI, 7);
            line.push((0.24, 0.88));
            line.push((0.78, 0.88));
            vec![line]
        }
        3 => vec![
            ellipse_arc(0.48, 0.30, 0.22, 0.18, 0.85 * PI, 2.1 * PI, 8),
            ellipse_arc(0.48, 0.68, 0.26, 0.20, 1.75 * PI, 3.1 * PI, 8),
        ],
        4 => vec![vec![(0.62, 0.88), (0.62, 0.12), (0.20, 0.62), (0.80, 0.62)]],
        5 => {
            let mut line = vec![(0.74, 0.12), (0.30, 0.12), (0.26, 0.45), (0.50, 0.42)];
            line.extend(ellipse_arc(0.48, 0.64, 0.26, 0.22, 1.5 * PI, 2.85 * PI, 7));
            vec![line]
        }
        6 => {
            let mut line = vec![(0.62, 0.10), (0.34, 0.45), (0.30, 0.68)];
            line.extend(ellipse_arc(0.5, 0.68, 0.20, 0.20, 0.0, 2.0 * PI, 9));
            vec![line]
        }
        7 => vec![vec![(0.22, 0.12), (0.78, 0.12), (0.42, 0.88)]],
        8 => vec![
            ellipse_arc(0.5, 0.30, 0.20, 0.17, 0.0, 2.0 * PI, 9),
            ellipse_arc(0.5, 0.68, 0.24, 0.20, 0.0, 2.0 * PI, 9),
        ],
        9 => {
            let mut line = ellipse_arc(0.5, 0.32, 0.20, 0.20, 0.0, 2.0 * PI, 9);
            line.push((0.70, 0.32));
            line.push((0.66, 0.60));
            line.push((0.50, 0.88));
            vec![line]
        }
        _ => panic!("digit out of range"),
    }
}

/// Renders one jittered glyph into `out` (length 784), values in [0, 1].
pub fn render_digit(digit: usize, rng: &mut Rng, out: &mut [f64]) {
    assert_eq!(out.len(), IMAGE_SIDE * IMAGE_SIDE);
    let size = IMAGE_SIDE as f64;
    let theta = rng.uniform_in(-0.35, 0.35);
    let scale = rng.uniform_in(0.75, 1.10);
    let shear = rng.uniform_in(-0.25, 0.25);
    let dx = rng.uniform_in(-0.10, 0.10);
    let dy = rng.uniform_in(-0.08, 0.08);
    let width = rng.uniform_in(0.8, 1.6);
    let (c, s) = (theta.cos(), theta.sin());
    let tf = |p: Point| -> Point {
        let (mut x, y) = (p.0 - 0.5, p.1 - 0.5);
        x += shear * y;
        let (rx, ry) = (scale * (c * x - s * y), scale * (s * x + c * y));
        ((0.5 + rx + dx) * size, (0.5 + ry + dy) * size)
    };

    let mut segments: Vec<(Point, Point)> = Vec::new();
    for line in glyph(digit) {
        let pts: Vec<Point> = line.into_iter().map(tf).collect();
        for w in pts.windows(2) {
            segments.push((w[0], w[1]));
        }
    }

    out.iter_mut().for_each(|v| *v = 0.0);
    for &((x1, y1), (x2, y2)) in &segments {
        let (vx, vy) = (x2 - x1, y2 - y1);
        let len2 = vx * vx + vy * vy;
        if len2 < 1e-9 {
            continue;
        }
        // bounding box of the segment, padded by the stroke radius
        let pad = width + 1.5;
        let r0 = ((y1.min(y2) - pad).floor().max(0.0)) as usize;
        let r1 = ((y1.max(y2) + pad).ceil().min(size)) as usize;
        let c0 = ((x1.min(x2) - pad).floor().max(0.0)) as usize;
        let c1 = ((x1.max(x2) + pad).ceil().min(size)) as usize;
        for row in r0..r1 {
            let py = row as f64 + 0.5;
            for col in c0..c1 {
                let px = col as f64 + 0.5;
                let t = (((px - x1) * vx + (py - y1) * vy) / len2).clamp(0.0, 1.0);
                let ddx = px - (x1 + t * vx);
                let ddy = py - (y1 + t * vy);
                let d = (ddx * ddx + ddy * ddy).sqrt();
                let ink = (1.0 - (d - width)).clamp(0.0, 1.0);
                let cell = &mut out[row * IMAGE_SIDE + col];
                if ink > *cell {
                    *cell = ink;
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v = (*v + 0.08 * rng.gaussian()).clamp(0.0, 1.0);
    }
}

/// `m` samples cycling through the ten classes, fully determined by `rng`.
pub fn synthetic_digits(m: usize, rng: &mut Rng) -> Dataset {
    let n = IMAGE_SIDE * IMAGE_SIDE;
    let mut features = vec![0.0; m * n];
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let digit = i % N_CLASSES;
        labels.push(digit as u8);
        render_digit(digit, rng, &mut features[i * n..(i + 1) * n]);
    }
    let mut ds = Dataset::new(n, features, labels).expect("finite by construction");
    ds.n_classes = N_CLASSES;
    ds
}
