use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{min_norm_solve_2xm, norm, orthonormal_complement, realify_row, singular_values_2xm};
use crate::model_bundle::stencil::evaluator_gradient;
use crate::model_bundle::{GridSection, SectionEvaluator};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroLocusOptions {
    /// Stop once `|σ| ≤ stop · max|σ|`.
    pub stop: f64,
    /// Keep a refined point when `|σ| ≤ accept · max|σ|`.
    pub accept: f64,
    pub max_iterations: usize,
    /// Differential margin below `degenerate · max|σ|` flags a degenerate zero.
    pub degenerate: f64,
}

impl Default for ZeroLocusOptions {
    fn default() -> Self {
        Self { stop: 1e-10, accept: 1e-8, max_iterations: 50, degenerate: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub point: Vec<f64>,
    /// Orthonormal basis of the kernel of the real differential; empty at
    /// degenerate points.
    pub tangent: Vec<Vec<f64>>,
    pub residual: f64,
    /// Smallest singular value of the real differential.
    pub differential_margin: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroLocus {
    pub n: usize,
    pub points: Vec<ZeroPoint>,
    /// Sign-change cells used as seeds (after trimming).
    pub seeds: usize,
    pub converged: usize,
    /// Seeds whose refinement did not reach the acceptance residual.
    pub dropped: usize,
    /// Seed cells within `2h` of the boundary, or refinements that drifted there.
    pub trimmed: usize,
    /// `max |σ|` over the grid; residual thresholds are relative to it.
    pub scale: f64,
    pub spacing: f64,
    pub radius: f64,
}

impl ZeroLocus {
    pub fn convergence_rate(&self) -> f64 {
        if self.seeds == 0 {
            1.0
        } else {
            self.converged as f64 / self.seeds as f64
        }
    }

    pub fn degenerate_count(&self) -> usize {
        self.points.iter().filter(|p| p.degenerate).count()
    }

    /// Largest distance from a locus point to the nearest of `targets`.
    pub fn max_distance_to(&self, targets: &[Vec<f64>]) -> f64 {
        self.points
            .iter()
            .map(|p| nearest(&p.point, targets.iter().map(|t| t.as_slice())))
            .fold(0.0, f64::max)
    }

    /// Largest distance from one of `targets` to the nearest locus point.
    pub fn coverage_of(&self, targets: &[Vec<f64>]) -> f64 {
        targets
            .iter()
            .map(|t| nearest(t, self.points.iter().map(|p| p.point.as_slice())))
            .fold(0.0, f64::max)
    }
}

fn nearest<'a>(x: &[f64], among: impl Iterator<Item = &'a [f64]>) -> f64 {
    among
        .map(|y| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

pub fn zero_locus(s: &GridSection) -> Result<ZeroLocus> {
    zero_locus_with(s, ZeroLocusOptions::default())
}

/// Seeds from grid cells on which both `Re σ` and `Im σ` change sign, refined
/// by damped minimum-norm Newton steps with backtracking on `|σ|²`.
pub fn zero_locus_with(s: &GridSection, opts: ZeroLocusOptions) -> Result<ZeroLocus> {
    let domain = *s.domain();
    let d = domain.real_dim();
    let h = domain.spacing();
    let p = domain.points_per_axis();
    let scale = s.max_abs();
    let eval = s.point_evaluator();
    let inner = domain.radius() - 2.0 * h;

    // cells indexed by their lower corner in [0, p-1)^d
    let cells_per_axis = p - 1;
    let cell_count = cells_per_axis.pow(d as u32);
    let corner_offsets: Vec<usize> = (0..1usize << d)
        .map(|c| (0..d).filter(|a| c >> a & 1 == 1).map(|a| domain.stride(a)).sum())
        .collect();
    let classify = |cell: usize| -> Option<(Vec<f64>, bool)> {
        let mut rest = cell;
        let mut lower = vec![0usize; d];
        for a in (0..d).rev() {
            lower[a] = rest % cells_per_axis;
            rest /= cells_per_axis;
        }
        let base = domain.flat_index(&lower);
        let (mut re_lo, mut re_hi, mut im_lo, mut im_hi) = (false, false, false, false);
        for off in &corner_offsets {
            let f = base + off;
            if !domain.is_node(f) {
                return None;
            }
            let v = s.value_at(f);
            re_lo |= v.re <= 0.0;
            re_hi |= v.re >= 0.0;
            im_lo |= v.im <= 0.0;
            im_hi |= v.im >= 0.0;
        }
        if !(re_lo && re_hi && im_lo && im_hi) {
            return None;
        }
        let center: Vec<f64> = lower.iter().map(|&i| domain.axis_coordinate(i) + 0.5 * h).collect();
        let keep = norm(&center) <= inner;
        Some((center, keep))
    };
    let candidates: Vec<(Vec<f64>, bool)> = par::map_range(cell_count, classify).into_iter().flatten().collect();
    let trimmed_cells = candidates.iter().filter(|c| !c.1).count();
    let seeds: Vec<Vec<f64>> = candidates.into_iter().filter(|c| c.1).map(|c| c.0).collect();

    let refined = par::map_slice(&seeds, |z0| refine(eval.as_ref(), z0, scale, inner, &opts));
    let mut points: Vec<ZeroPoint> = Vec::new();
    let (mut converged, mut dropped, mut drifted) = (0, 0, 0);
    for r in refined {
        match r {
            Refined::Converged(pt) => {
                converged += 1;
                // several seed cells can land on the same isolated zero
                let dup = points.iter().any(|q| {
                    q.point.iter().zip(&pt.point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-3 * h
                });
                if !dup {
                    points.push(pt);
                }
            }
            Refined::Failed => dropped += 1,
            Refined::LeftBall => drifted += 1,
        }
    }
    Ok(ZeroLocus {
        n: domain.n(),
        points,
        seeds: seeds.len() - drifted,
        converged,
        dropped,
        trimmed: trimmed_cells + drifted,
        scale,
        spacing: h,
        radius: domain.radius(),
    })
}

enum Refined {
    Converged(ZeroPoint),
    Failed,
    LeftBall,
}

fn jet(e: &dyn SectionEvaluator, z: &[f64]) -> (num_complex::Complex64, Vec<num_complex::Complex64>) {
    let g = e.gradient(z).unwrap_or_else(|| evaluator_gradient(e, z, 1e-6));
    (e.value(z), g)
}

fn refine(e: &dyn SectionEvaluator, z0: &[f64], scale: f64, inner: f64, opts: &ZeroLocusOptions) -> Refined {
    let mut z = z0.to_vec();
    let (mut v, mut g) = jet(e, &z);
    for _ in 0..opts.max_iterations {
        if v.norm() <= opts.stop * scale {
            break;
        }
        let (r0, r1) = realify_row(&g);
        let mu = 1e-14 * (crate::linalg::dot(&r0, &r0) + crate::linalg::dot(&r1, &r1));
        let Some(step) = min_norm_solve_2xm(&r0, &r1, [v.re, v.im], mu) else {
            return Refined::Failed;
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a - t * b).collect();
            let tv = e.value(&trial);
            if tv.norm() < v.norm() {
                z = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if norm(&z) > inner {
            return Refined::LeftBall;
        }
        (v, g) = jet(e, &z);
    }
    if !(v.norm() <= opts.accept * scale) || norm(&z) > inner {
        return if norm(&z) > inner { Refined::LeftBall } else { Refined::Failed };
    }
    let (r0, r1) = realify_row(&g);
    let margin = singular_values_2xm(&r0, &r1).0;
    let degenerate = margin < opts.degenerate * scale.max(f64::MIN_POSITIVE);
    let tangent = if degenerate {
        Vec::new()
    } else {
        orthonormal_complement(&[&r0, &r1], z.len())
    };
    Refined::Converged(ZeroPoint { point: z, tangent, residual: v.norm(), differential_margin: margin, degenerate })
}
