//! Centered finite differences on grids and on pointwise evaluators.

use num_complex::Complex64;

use super::domain::BallDomain;
use super::section::{GridSection, SectionEvaluator};
use crate::error::{Error, Result};

/// Second-order centered stencil for the `order`-th derivative, unscaled
/// (divide by `h^order`).
pub fn centered_stencil(order: usize) -> &'static [(isize, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => panic!("stencils are provided up to order 3"),
    }
}

/// Mixed partial derivative `∂^orders` at a grid node by tensor-product
/// centered stencils.
pub fn grid_derivative(s: &GridSection, flat: usize, orders: &[usize]) -> Result<Complex64> {
    let domain = s.domain();
    if orders.len() != domain.real_dim() {
        return Err(Error::DimensionMismatch { expected: domain.real_dim(), got: orders.len() });
    }
    let h = domain.spacing();
    let total: usize = orders.iter().sum();
    let axes: Vec<(usize, &[(isize, f64)])> = orders
        .iter()
        .enumerate()
        .filter(|(_, &o)| o > 0)
        .map(|(a, &o)| (a, centered_stencil(o)))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut counter = vec![0usize; axes.len()];
    let mut moves = Vec::with_capacity(axes.len());
    loop {
        moves.clear();
        let mut weight = 1.0;
        for (slot, (axis, st)) in axes.iter().enumerate() {
            let (off, w) = st[counter[slot]];
            moves.push((*axis, off));
            weight *= w;
        }
        let node = domain
            .offset_multi(flat, &moves)
            .ok_or_else(|| Error::StencilExitsDomain { point: domain.node_point(flat) })?;
        acc += s.value_at(node) * weight;
        // advance the mixed counter
        let mut slot = axes.len();
        loop {
            if slot == 0 {
                return Ok(acc / h.powi(total as i32));
            }
            slot -= 1;
            counter[slot] += 1;
            if counter[slot] < axes[slot].1.len() {
                break;
            }
            counter[slot] = 0;
        }
    }
}

/// Centered first derivatives at a node along every real axis.
pub fn grid_gradient(s: &GridSection, flat: usize) -> Result<Vec<Complex64>> {
    let d = s.domain().real_dim();
    let mut orders = vec![0; d];
    (0..d)
        .map(|a| {
            orders.iter_mut().for_each(|o| *o = 0);
            orders[a] = 1;
            grid_derivative(s, flat, &orders)
        })
        .collect()
}

/// Centered-difference gradient of an evaluator with step `step`.
pub fn evaluator_gradient(e: &dyn SectionEvaluator, z: &[f64], step: f64) -> Vec<Complex64> {
    let mut p = z.to_vec();
    (0..z.len())
        .map(|a| {
            p[a] = z[a] + step;
            let fp = e.value(&p);
            p[a] = z[a] - step;
            let fm = e.value(&p);
            p[a] = z[a];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Centered-difference Hessian of an evaluator, row-major.
pub fn evaluator_hessian(e: &dyn SectionEvaluator, z: &[f64], step: f64) -> Vec<Complex64> {
    let d = z.len();
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    let mut p = z.to_vec();
    let f0 = e.value(z);
    for a in 0..d {
        p[a] = z[a] + step;
        let fp = e.value(&p);
        p[a] = z[a] - step;
        let fm = e.value(&p);
        p[a] = z[a];
        out[a * d + a] = (fp - 2.0 * f0 + fm) / (step * step);
        for b in (a + 1)..d {
            let mut corner = |sa: f64, sb: f64| {
                p[a] = z[a] + sa * step;
                p[b] = z[b] + sb * step;
                let v = e.value(&p);
                p[a] = z[a];
                p[b] = z[b];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                + corner(-1.0, -1.0))
                / (4.0 * step * step);
            out[a * d + b] = v;
            out[b * d + a] = v;
        }
    }
    out
}

/// Checks that every point of a centered stencil of half-width `reach` around
/// `z` stays inside the closed ball of the domain.
pub fn check_reach(domain: &BallDomain, z: &[f64], reach: f64) -> Result<()> {
    let r: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r + reach > domain.radius() * (1.0 + 1e-12) {
        return Err(Error::StencilExitsDomain { point: z.to_vec() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_differentiate_cubics_exactly() {
        let d = BallDomain::unit(1, 41).unwrap();
        let f = |z: &[f64]| Complex64::new(z[0].powi(3) + z[0] * z[1] * z[1], z[1].powi(2));
        let s = GridSection::sample(d, f).unwrap();
        let node = d.node_at(&[0.1, -0.2]).unwrap();
        let dxxx = grid_derivative(&s, node, &[3, 0]).unwrap();
        assert!((dxxx - Complex64::new(6.0, 0.0)).norm() < 1e-8);
        let dxyy = grid_derivative(&s, node, &[1, 2]).unwrap();
        assert!((dxyy - Complex64::new(2.0, 0.0)).norm() < 1e-9);
        let dyy = grid_derivative(&s, node, &[0, 2]).unwrap();
        assert!((dyy - Complex64::new(2.0 * 0.1, 2.0)).norm() < 1e-9);
    }

    #[test]
    fn stencil_leaving_the_ball_is_an_error() {
        let d = BallDomain::unit(1, 9).unwrap();
        let s = GridSection::zero(d);
        let edge = d.node_at(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            grid_derivative(&s, edge, &[1, 0]),
            Err(Error::StencilExitsDomain { .. })
        ));
    }
}
