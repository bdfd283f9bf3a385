//! Dense row-major 2-D scalar fields.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("value buffer holds {got} entries, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grids have different shapes: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

/// Dense 2-D field; `values[y * width + x]`, row-major.
///
/// Values are plain `f64`; their semifield interpretation travels separately
/// as a [`crate::SemifieldKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid2 {
    /// Constant-filled grid. Panics on zero dimensions (programmer error).
    pub fn new(width: usize, height: usize, fill: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Grid2 { width, height, values: vec![fill; width * height] }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != width * height {
            return Err(GridError::LengthMismatch { expected: width * height, got: values.len() });
        }
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Ok(Grid2 { width, height, values })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Grid2 { width, height, values }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn same_shape(&self, other: &Grid2) -> Result<(), GridError> {
        if self.dims() != other.dims() {
            return Err(GridError::ShapeMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let i = self.idx(x, y);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid2 {
        Grid2 {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Translation by whole pixels; vacated cells take `fill`.
    pub fn translated(&self, dx: isize, dy: isize, fill: f64) -> Grid2 {
        Grid2::from_fn(self.width, self.height, |x, y| {
            let sx = x as isize - dx;
            let sy = y as isize - dy;
            if sx >= 0 && sy >= 0 && (sx as usize) < self.width && (sy as usize) < self.height {
                self.get(sx as usize, sy as usize)
            } else {
                fill
            }
        })
    }

    /// Counterclockwise quarter turn; square grids only.
    pub fn rotated90(&self) -> Grid2 {
        assert_eq!(self.width, self.height, "rotation requires a square grid");
        let n = self.width;
        Grid2::from_fn(n, n, |x, y| self.get(n - 1 - y, x))
    }

    /// Mirror about the vertical axis.
    pub fn flipped_x(&self) -> Grid2 {
        Grid2::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn max_abs_diff(&self, other: &Grid2) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major() {
        let g = Grid2::from_values(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.get(2, 0), 2.0);
        assert_eq!(g.get(0, 1), 3.0);
        assert_eq!(g.row(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn from_values_checks_length() {
        assert!(matches!(
            Grid2::from_values(3, 2, vec![0.0; 5]),
            Err(GridError::LengthMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn rotation_is_a_quarter_turn() {
        let g = Grid2::from_fn(4, 4, |x, y| (x * 10 + y) as f64);
        let r = g.rotated90();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(r.get(x, y), g.get(3 - y, x));
            }
        }
        // Four turns restore the original.
        let back = r.rotated90().rotated90().rotated90();
        assert_eq!(back, g);
    }

    #[test]
    fn translation_fills_vacated_cells() {
        let g = Grid2::from_fn(3, 3, |x, y| (x + 3 * y) as f64);
        let t = g.translated(1, 0, -1.0);
        assert_eq!(t.get(0, 0), -1.0);
        assert_eq!(t.get(1, 0), g.get(0, 0));
    }
}
