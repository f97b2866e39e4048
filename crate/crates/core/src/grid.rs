use serde::{Deserialize, Serialize};

/// Uniform sample axis `origin + i * step` for `i < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(origin: f64, step: f64, count: usize) -> Self {
        Self { origin, step, count }
    }

    /// Axis centred on `centre` covering at least `[centre - half_width, centre + half_width]`.
    pub fn centred(centre: f64, half_width: f64, step: f64) -> Self {
        let half = libm::ceil(half_width / step - 1e-9).max(0.0) as usize;
        Self { origin: centre - half as f64 * step, step, count: 2 * half + 1 }
    }

    pub fn single(at: f64) -> Self {
        Self { origin: at, step: 1.0, count: 1 }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn first(&self) -> f64 {
        self.origin
    }

    pub fn last(&self) -> f64 {
        self.at(self.count.saturating_sub(1))
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.at(i))
    }

    /// Index of the sample nearest to `x`, if `x` lies on the axis span.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        if self.count == 0 {
            return None;
        }
        let i = libm::round((x - self.origin) / self.step);
        (i >= 0.0 && (i as usize) < self.count).then_some(i as usize)
    }
}
