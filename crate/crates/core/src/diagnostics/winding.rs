use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

fn wind<F: Fn(f64, f64) -> Complex64>(f: F, points: impl Iterator<Item = (f64, f64)>) -> Result<i64> {
    let mut total = 0.0;
    let mut prev: Option<Complex64> = None;
    for (x, y) in points {
        let v = f(x, y);
        if !(v.norm() > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("function vanishes on the contour at ({x}, {y})")));
        }
        if let Some(p) = prev {
            let step = (v / p).arg();
            if step.abs() > 0.5 * PI {
                return Err(Error::InvalidArgument("contour under-resolved: phase jump above π/2".into()));
            }
            total += step;
        }
        prev = Some(v);
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Winding number of `f` around the boundary of `[x0, x1] × [y0, y1]`
/// (counter-clockwise): the signed zero count inside.
pub fn zero_count_by_winding<F: Fn(f64, f64) -> Complex64>(
    f: F,
    x: [f64; 2],
    y: [f64; 2],
    samples_per_side: usize,
) -> Result<i64> {
    let m = samples_per_side.max(4);
    let s = |i: usize| i as f64 / m as f64;
    let bottom = (0..m).map(|i| (x[0] + s(i) * (x[1] - x[0]), y[0]));
    let right = (0..m).map(|i| (x[1], y[0] + s(i) * (y[1] - y[0])));
    let top = (0..m).map(|i| (x[1] - s(i) * (x[1] - x[0]), y[1]));
    let left = (0..=m).map(|i| (x[0], y[1] - s(i) * (y[1] - y[0])));
    wind(f, bottom.chain(right).chain(top).chain(left))
}

/// Winding number of `f` around the circle of radius `r` about `c`.
pub fn winding_number_on_circle<F: Fn(f64, f64) -> Complex64>(f: F, c: [f64; 2], r: f64, samples: usize) -> Result<i64> {
    let m = samples.max(8);
    wind(
        f,
        (0..=m).map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            (c[0] + r * t.cos(), c[1] + r * t.sin())
        }),
    )
}
