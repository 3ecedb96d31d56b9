//! Gauss-Newton normal equations for the feature-metric and ICP residuals.
//!
//! Both systems are linearised in the same increment `delta`, applied to the
//! template point as `exp(delta) * p_B`; the step `-H^-1 b` is folded into the
//! pose as `T * exp(step)^-1`.

mod feature;
mod icp;
#[cfg(test)]
mod testutil;

use nalgebra::{Matrix6, Vector6};
use thiserror::Error;

use crate::scalar::Real;

pub use feature::{
    build_feature_system, precompute_template, FeatureOptions, PrecomputedTemplate, TemplatePixel,
};
pub use icp::{
    build_icp_system, icp_correspondences, structured_light_sigma, vertex_normal_map, IcpConfig,
    IcpCorrespondence, IcpNoise, VertexNormalMap,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResidualError {
    #[error("no valid pixels at level {0}")]
    NoValidPixels(usize),
    #[error("level {level} out of range ({levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("frames do not share level geometry: {0}")]
    GeometryMismatch(String),
}

/// Accumulated `J^T J`, `J^T r` and `r^T r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEquations<T: Real> {
    pub h: Matrix6<T>,
    pub b: Vector6<T>,
    pub cost: T,
    pub valid_count: usize,
}

impl<T: Real> Default for NormalEquations<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> NormalEquations<T> {
    pub fn zero() -> Self {
        Self {
            h: Matrix6::zeros(),
            b: Vector6::zeros(),
            cost: T::zero(),
            valid_count: 0,
        }
    }

    /// Adds one weighted residual row.
    #[inline]
    pub fn add_row(&mut self, j: &Vector6<T>, r: T, weight: T) {
        for col in 0..6 {
            for row in col..6 {
                let v = j[row] * j[col] * weight;
                self.h[(row, col)] += v;
                if row != col {
                    self.h[(col, row)] += v;
                }
            }
        }
        self.b.axpy(weight * r, j, T::one());
        self.cost += weight * r * r;
    }

    /// `feat + w_g * icp`. ICP rows only count as contributing when `w_g > 0`.
    pub fn combine(feat: &Self, icp: &Self, w_g: T) -> Self {
        Self {
            h: feat.h + icp.h * w_g,
            b: feat.b + icp.b * w_g,
            cost: feat.cost + icp.cost * w_g,
            valid_count: feat.valid_count + if w_g > T::zero() { icp.valid_count } else { 0 },
        }
    }

    /// Sum of two partial systems over disjoint pixel sets.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            h: self.h + other.h,
            b: self.b + other.b,
            cost: self.cost + other.cost,
            valid_count: self.valid_count + other.valid_count,
        }
    }

    /// Damped Gauss-Newton step `-(H + lambda diag(H) + floor I)^-1 b`.
    pub fn solve_step(&self, damping: T) -> Option<Vector6<T>> {
        let mut a = self.h;
        let floor = T::lit(1e-12);
        for i in 0..6 {
            a[(i, i)] += damping * self.h[(i, i)] + floor;
        }
        let rhs = -self.b;
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a.lu().solve(&rhs)?,
        };
        step.iter().all(|v| v.is_finite()).then_some(step)
    }
}
