use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regular cubic grid restricted to the closed ball of `radius` in `C^n`.
///
/// The grid has `points_per_axis` samples on each of the `2n` real axes,
/// spanning `[-radius, radius]`; only nodes inside the closed ball are nodes of
/// the domain. Flat indices run over the whole cube, last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    n: usize,
    radius: f64,
    points_per_axis: usize,
}

const BALL_SLACK: f64 = 1e-12;

impl BallDomain {
    pub fn new(n: usize, radius: f64, points_per_axis: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain("complex dimension must be positive".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")));
        }
        if points_per_axis < 3 {
            return Err(Error::InvalidDomain(format!(
                "need at least 3 points per axis, got {points_per_axis}"
            )));
        }
        let cube = (points_per_axis as u128).checked_pow(2 * n as u32);
        if cube.is_none_or(|c| c > (1u128 << 34)) {
            return Err(Error::InvalidDomain("grid too large".into()));
        }
        Ok(Self { n, radius, points_per_axis })
    }

    /// Unit ball.
    pub fn unit(n: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(n, 1.0, points_per_axis)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `h = 2 radius / (points_per_axis - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    /// Number of cube nodes, inside the ball or not.
    pub fn cube_len(&self) -> usize {
        self.points_per_axis.pow(self.real_dim() as u32)
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.real_dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let d = self.real_dim();
        let mut idx = vec![0; d];
        let mut rest = flat;
        for a in (0..d).rev() {
            idx[a] = rest % self.points_per_axis;
            rest /= self.points_per_axis;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn node_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.axis_coordinate(i))
            .collect()
    }

    /// Whether a point lies in the closed ball (with rounding slack).
    pub fn contains_point(&self, z: &[f64]) -> bool {
        let r2: f64 = z.iter().map(|x| x * x).sum();
        r2 <= self.radius * self.radius * (1.0 + BALL_SLACK)
    }

    pub fn is_node(&self, flat: usize) -> bool {
        flat < self.cube_len() && self.contains_point(&self.node_point(flat))
    }

    /// Flat indices of all nodes inside the ball, ascending.
    pub fn nodes(&self) -> Vec<usize> {
        let d = self.real_dim();
        let p = self.points_per_axis;
        let coords: Vec<f64> = (0..p).map(|i| self.axis_coordinate(i)).collect();
        let limit = self.radius * self.radius * (1.0 + BALL_SLACK);
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        let mut flat = 0usize;
        loop {
            let r2: f64 = idx.iter().map(|&i| coords[i] * coords[i]).sum();
            if r2 <= limit {
                out.push(flat);
            }
            flat += 1;
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < p {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Nodes inside the concentric sub-ball of radius `r`.
    pub fn nodes_within(&self, r: f64) -> Vec<usize> {
        let limit = r * r * (1.0 + BALL_SLACK);
        self.nodes()
            .into_iter()
            .filter(|&f| self.node_point(f).iter().map(|x| x * x).sum::<f64>() <= limit)
            .collect()
    }

    /// Neighbor `steps` nodes along `axis`, if it is a node of the ball.
    pub fn offset(&self, flat: usize, axis: usize, steps: isize) -> Option<usize> {
        self.offset_multi(flat, &[(axis, steps)])
    }

    /// Node displaced by several `(axis, steps)` moves, if inside the ball.
    pub fn offset_multi(&self, flat: usize, moves: &[(usize, isize)]) -> Option<usize> {
        let mut idx = self.multi_index(flat);
        for &(axis, steps) in moves {
            let j = idx[axis] as isize + steps;
            if j < 0 || j >= self.points_per_axis as isize {
                return None;
            }
            idx[axis] = j as usize;
        }
        let f = self.flat_index(&idx);
        self.is_node(f).then_some(f)
    }

    /// The node at `z`, if `z` coincides with one (to `1e-9 h`).
    pub fn node_at(&self, z: &[f64]) -> Option<usize> {
        if z.len() != self.real_dim() {
            return None;
        }
        let h = self.spacing();
        let mut idx = Vec::with_capacity(z.len());
        for &x in z {
            let t = (x + self.radius) / h;
            let i = t.round();
            if (t - i).abs() > 1e-9 || i < 0.0 || i >= self.points_per_axis as f64 {
                return None;
            }
            idx.push(i as usize);
        }
        let f = self.flat_index(&idx);
        self.is_node(f).then_some(f)
    }

    pub fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.real_dim() {
            return Err(Error::DimensionMismatch { expected: self.real_dim(), got: z.len() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_matches_definition() {
        let d = BallDomain::new(1, 0.9, 129).unwrap();
        assert!((d.spacing() - 1.8 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn all_nodes_lie_in_ball() {
        let d = BallDomain::new(2, 1.0, 9).unwrap();
        let nodes = d.nodes();
        assert!(!nodes.is_empty());
        for f in &nodes {
            let p = d.node_point(*f);
            assert!(p.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
        }
        // corners of the cube are outside
        assert!(!d.is_node(0));
        assert_eq!(nodes.len(), (0..d.cube_len()).filter(|&f| d.is_node(f)).count());
    }

    #[test]
    fn index_roundtrip_and_node_lookup() {
        let d = BallDomain::new(1, 1.0, 5).unwrap();
        let f = d.flat_index(&[2, 3]);
        assert_eq!(d.multi_index(f), vec![2, 3]);
        assert_eq!(d.node_at(&[0.0, 0.5]), Some(f));
        assert_eq!(d.node_at(&[0.1, 0.5]), None);
        assert_eq!(d.offset(f, 1, 1), Some(d.flat_index(&[2, 4])));
        // (0.5, 1.0) is outside the unit ball
        assert_eq!(d.offset(f, 1, 2), None);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BallDomain::new(0, 1.0, 9).is_err());
        assert!(BallDomain::new(1, -1.0, 9).is_err());
        assert!(BallDomain::new(1, 1.0, 2).is_err());
    }
}
