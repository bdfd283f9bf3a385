//! Small dense 2x2 matrix used as the kernel metric factor H.

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { m: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        Mat2::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, b)
    }

    /// Counterclockwise rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: r }
    }

    pub fn scaled(&self, s: f64) -> Mat2 {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }

    /// Gram matrix HᵀH.
    pub fn gram(&self) -> Mat2 {
        self.transpose().mul_mat(self)
    }

    /// `‖H x‖²` without forming the intermediate vector.
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        let h = self.mul_vec(v);
        h[0] * h[0] + h[1] * h[1]
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> [f64; 2] {
        let (_, s, _) = self.svd();
        s
    }

    /// Ratio of the largest to the smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let [s1, s2] = self.singular_values();
        if s2 == 0.0 {
            f64::INFINITY
        } else {
            s1 / s2
        }
    }

    /// Full SVD, `self = U · diag(s) · Vt` with orthonormal U, Vt and s
    /// descending. Computed from the eigendecomposition of the Gram matrix.
    pub fn svd(&self) -> (Mat2, [f64; 2], Mat2) {
        let g = self.gram();
        let (g11, g12, g22) = (g.m[0][0], g.m[0][1], g.m[1][1]);
        // Eigenvectors of the symmetric Gram matrix: rotation by theta.
        let theta = 0.5 * (2.0 * g12).atan2(g11 - g22);
        let (sn, cs) = theta.sin_cos();
        let lam1 = cs * cs * g11 + 2.0 * cs * sn * g12 + sn * sn * g22;
        let lam2 = sn * sn * g11 - 2.0 * cs * sn * g12 + cs * cs * g22;
        let (mut s1, mut s2) = (lam1.max(0.0).sqrt(), lam2.max(0.0).sqrt());
        let mut v1 = [cs, sn];
        let mut v2 = [-sn, cs];
        if s2 > s1 {
            std::mem::swap(&mut s1, &mut s2);
            std::mem::swap(&mut v1, &mut v2);
        }
        let u1 = if s1 > 0.0 {
            let hv = self.mul_vec(v1);
            [hv[0] / s1, hv[1] / s1]
        } else {
            [1.0, 0.0]
        };
        let u2 = if s2 > s1 * 1e-14 && s2 > 0.0 {
            let hv = self.mul_vec(v2);
            [hv[0] / s2, hv[1] / s2]
        } else {
            // Degenerate direction: complete U to an orthonormal basis.
            [-u1[1], u1[0]]
        };
        let u = Mat2::new(u1[0], u2[0], u1[1], u2[1]);
        let vt = Mat2::new(v1[0], v1[1], v2[0], v2[1]);
        (u, [s1, s2], vt)
    }

    /// Returns the closest matrix (in the SVD sense) whose condition number
    /// is at most `max_cond`, by raising the small singular value.
    pub fn clamped_condition(&self, max_cond: f64) -> Mat2 {
        let (u, [s1, s2], vt) = self.svd();
        let floor = s1 / max_cond;
        if s2 >= floor {
            return *self;
        }
        let s = Mat2::diag(s1, floor);
        u.mul_mat(&s).mul_mat(&vt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
        let mut d = 0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((a.m[i][j] - b.m[i][j]).abs());
            }
        }
        d
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..500 {
            let h = Mat2::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let (u, [s1, s2], vt) = h.svd();
            assert!(s1 >= s2 && s2 >= 0.0);
            let rebuilt = u.mul_mat(&Mat2::diag(s1, s2)).mul_mat(&vt);
            assert!(max_abs_diff(&rebuilt, &h) < 1e-10, "{h:?}");
            // Orthonormality.
            let uu = u.transpose().mul_mat(&u);
            assert!(max_abs_diff(&uu, &Mat2::identity()) < 1e-10);
            let vv = vt.mul_mat(&vt.transpose());
            assert!(max_abs_diff(&vv, &Mat2::identity()) < 1e-10);
        }
    }

    #[test]
    fn condition_clamp_raises_small_axis() {
        let h = Mat2::diag(4.0, 1e-9);
        let c = h.clamped_condition(1e6);
        assert!(c.condition_number() <= 1e6 * (1.0 + 1e-12));
        assert!((c.singular_values()[0] - 4.0).abs() < 1e-12);
        // Well-conditioned matrices pass through untouched.
        let h = Mat2::new(1.0, 0.2, -0.1, 0.9);
        assert_eq!(h.clamped_condition(1e6), h);
    }
}
