use crate::error::{Error, Result};
use crate::model_bundle::stencil::grid_derivative;
use crate::model_bundle::GridSection;
use crate::par;

/// All derivative multi-indices on `d` axes with total order `≤ m`, in
/// graded lexicographic order.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    for order in 1..=m {
        let mut level = Vec::new();
        let mut idx = vec![0usize; d];
        fill(&mut idx, 0, order, &mut level);
        out.extend(level);
    }
    out
}

fn fill(idx: &mut Vec<usize>, axis: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if axis + 1 == idx.len() {
        idx[axis] = left;
        out.push(idx.clone());
        return;
    }
    for take in (0..=left).rev() {
        idx[axis] = take;
        fill(idx, axis + 1, left - take, out);
    }
    idx[axis] = 0;
}

/// `max_{|z| ≤ r} max_{|α| ≤ m} |∂^α f(z)|` with tensor-product centered
/// differences on the grid.
pub fn cm_norm(field: &GridSection, m: usize, r: f64) -> Result<f64> {
    if m > 3 {
        return Err(Error::InvalidArgument(format!("C^m seminorms are provided for m ≤ 3, got {m}")));
    }
    let domain = *field.domain();
    let h = domain.spacing();
    if !(r > 0.0) || r + m as f64 * h > domain.radius() * (1.0 + 1e-12) {
        return Err(Error::InvalidDomain(format!(
            "sub-ball radius {r} leaves no room for order-{m} stencils (radius {}, h {h})",
            domain.radius()
        )));
    }
    let alphas = multi_indices(domain.real_dim(), m);
    let nodes = domain.nodes_within(r);
    let per_node = par::try_map_slice(&nodes, |&f| {
        let mut worst = 0.0_f64;
        for a in &alphas {
            worst = worst.max(grid_derivative(field, f, a)?.norm());
        }
        Ok::<f64, Error>(worst)
    })?;
    Ok(par::max_of(per_node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_bundle::BallDomain;
    use num_complex::Complex64;

    #[test]
    fn index_counts() {
        // binomial(d + m, m)
        assert_eq!(multi_indices(2, 1).len(), 3);
        assert_eq!(multi_indices(4, 3).len(), 35);
    }

    #[test]
    fn coordinate_field() {
        let d = BallDomain::unit(1, 41).unwrap();
        let s = GridSection::sample(d, |z| Complex64::new(z[0], z[1])).unwrap();
        assert!((cm_norm(&s, 0, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((cm_norm(&s, 1, 0.5).unwrap() - 1.0).abs() < 1e-12);
        let c = GridSection::sample(d, |_| Complex64::new(0.0, 2.0)).unwrap();
        assert!((cm_norm(&c, 1, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(cm_norm(&s, 1, 0.99).is_err());
        assert!(cm_norm(&s, 4, 0.5).is_err());
    }
}
