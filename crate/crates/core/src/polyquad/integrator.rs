use std::sync::OnceLock;

use super::quadrature::{composite_tri_quadrature, graded_tri_quadrature, tri_quadrature, EdgeRule, QuadratureRule};
use crate::error::Result;
use crate::mesh::Point;

/// Composite levels are capped here; beyond it the rule is already huge.
const MAX_LEVEL: usize = 8;
/// Oscillation resolution target: `κ · h_sub <= 2`.
const KAPPA_H_SUB: f64 = 2.0;
/// Geometric refinement steps towards a singular vertex.
pub const DEFAULT_GRADING: usize = 24;
/// Edge integrands near a singular vertex decay more slowly than the
/// triangle ones, so edges grade further.
const EDGE_GRADING_FACTOR: usize = 2;
/// Composite levels added inside graded elements.
const GRADED_EXTRA_LEVELS: usize = 2;
/// Elements closer than this many diameters to the singular point are
/// refined until their pieces are at most that far from it relative to size.
const NEAR_SINGULAR: f64 = 8.0;

/// Quadrature for non-polynomial integrands (loads, projections, errors).
///
/// Each triangle or edge gets a composite rule whose sub-elements satisfy
/// `κ · h_sub <= 2`, plus `extra_levels`. Elements touching
/// `singular_point` are instead graded geometrically towards it.
#[derive(Debug)]
pub struct Integrator {
    pub degree: usize,
    pub wavenumber: f64,
    pub extra_levels: usize,
    pub singular_point: Option<Point>,
    pub grading: usize,
    base: QuadratureRule,
    cache: [OnceLock<QuadratureRule>; MAX_LEVEL + 1],
}

impl Clone for Integrator {
    fn clone(&self) -> Self {
        Integrator {
            degree: self.degree,
            wavenumber: self.wavenumber,
            extra_levels: self.extra_levels,
            singular_point: self.singular_point,
            grading: self.grading,
            base: self.base.clone(),
            cache: Default::default(),
        }
    }
}

impl Integrator {
    pub fn new(degree: usize, wavenumber: f64) -> Result<Self> {
        Ok(Integrator {
            degree,
            wavenumber,
            extra_levels: 0,
            singular_point: None,
            grading: DEFAULT_GRADING,
            base: tri_quadrature(degree)?,
            cache: Default::default(),
        })
    }

    pub fn with_extra_levels(mut self, extra: usize) -> Self {
        self.extra_levels = extra;
        self
    }

    pub fn with_singular_point(mut self, p: Option<Point>) -> Self {
        self.singular_point = p;
        self
    }

    /// Composite level for an element of diameter `diam`.
    pub fn level(&self, diam: f64) -> usize {
        let mut level = 0;
        while level < MAX_LEVEL && self.wavenumber * diam / (1u64 << level) as f64 > KAPPA_H_SUB {
            level += 1;
        }
        (level + self.extra_levels).min(MAX_LEVEL)
    }

    fn composite(&self, level: usize) -> &QuadratureRule {
        self.cache[level].get_or_init(|| composite_tri_quadrature(&self.base, level))
    }

    /// Level for an element that does not touch the singular point.
    fn near_level(&self, pts: &[Point], diam: f64) -> usize {
        let level = self.level(diam);
        let Some(s) = self.singular_point else {
            return level;
        };
        let d = pts.iter().map(|p| (p[0] - s[0]).hypot(p[1] - s[1])).fold(f64::INFINITY, f64::min);
        let extra = (NEAR_SINGULAR * diam / d).log2().ceil().max(0.0) as usize;
        (level + extra).min(MAX_LEVEL)
    }

    fn singular_corner(&self, pts: &[Point], scale: f64) -> Option<usize> {
        let s = self.singular_point?;
        pts.iter().position(|p| (p[0] - s[0]).hypot(p[1] - s[1]) <= 1e-12 * scale)
    }

    /// Physical points and weights on a triangle.
    pub fn triangle_rule(&self, tri: &[Point; 3]) -> Vec<(Point, f64)> {
        let diam = (0..3)
            .map(|i| {
                let (p, q) = (tri[i], tri[(i + 1) % 3]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max);
        let level = self.level(diam);
        match self.singular_corner(tri, diam) {
            Some(corner) => {
                let fine = (level + GRADED_EXTRA_LEVELS).min(MAX_LEVEL);
                graded_tri_quadrature(&self.base, fine, corner, self.grading).map(tri)
            }
            None => self.composite(self.near_level(tri, diam)).map(tri),
        }
    }

    /// `(t, weight)` pairs on the segment `a → b`, `t ∈ [0, 1]`, weights summing to 1.
    pub fn edge_rule(&self, a: Point, b: Point) -> EdgeRule {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let level = self.level(len);
        let fine = (level + GRADED_EXTRA_LEVELS).min(MAX_LEVEL);
        match self.singular_corner(&[a, b], len) {
            Some(0) => EdgeRule::graded(self.degree, fine, EDGE_GRADING_FACTOR * self.grading),
            Some(_) => EdgeRule::graded(self.degree, fine, EDGE_GRADING_FACTOR * self.grading).reversed(),
            None => EdgeRule::composite(self.degree, self.near_level(&[a, b], len)),
        }
    }
}
