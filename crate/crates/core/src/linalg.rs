//! Minimal 2-vector / 2x2-matrix arithmetic for the allocation pair.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(&self, o: &Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn scale(&self, c: f64) -> Vec2 {
        Vec2::new(self.x * c, self.y * c)
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

/// Row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn scale(&self, k: f64) -> Mat2 {
        Mat2::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn solve(&self, rhs: &Vec2) -> Result<Vec2> {
        let det = self.det();
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs());
        if !(det.abs() > 1e-300 && det.abs() > f64::EPSILON * scale * scale * 1e-2) {
            return Err(Error::Singular { det });
        }
        Ok(Vec2::new(
            (self.d * rhs.x - self.b * rhs.y) / det,
            (self.a * rhs.y - self.c * rhs.x) / det,
        ))
    }
}
