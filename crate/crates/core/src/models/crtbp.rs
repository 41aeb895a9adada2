//! Circular restricted three-body problem in the synodic frame.
//!
//! Primaries of mass `1 − μ` and `μ` sit at `(−μ, 0, 0)` and `(1 − μ, 0, 0)`;
//! the frame rotates with unit angular velocity about `q3`.

use crate::math::sqrt;
use crate::{Matrix, Vector};

use super::{HamiltonianModel, ModelError, SINGULARITY_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrtbpParams {
    pub mu: f64,
    /// `true` for the 6-dimensional model, `false` for the planar 4-dimensional one.
    pub spatial: bool,
}

impl CrtbpParams {
    pub fn spatial(mu: f64) -> Self {
        Self { mu, spatial: true }
    }

    pub fn planar(mu: f64) -> Self {
        Self { mu, spatial: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crtbp {
    mu: f64,
    m: usize,
}

impl Crtbp {
    pub fn new(params: CrtbpParams) -> Result<Self, ModelError> {
        if !(params.mu > 0.0 && params.mu < 0.5) {
            return Err(ModelError::InvalidParameter("mass ratio must lie in (0, 1/2)"));
        }
        Ok(Self { mu: params.mu, m: if params.spatial { 3 } else { 2 } })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Number of degrees of freedom (2 or 3).
    pub fn dof(&self) -> usize {
        self.m
    }

    /// State at rest in the rotating frame at position `q`: `p = (−q2, q1, 0)`.
    pub fn rest_state(&self, q: &[f64]) -> Vector {
        let m = self.m;
        let mut y = Vector::zeros(2 * m);
        for i in 0..m.min(q.len()) {
            y[i] = q[i];
        }
        y[m] = -y[1];
        y[m + 1] = y[0];
        y
    }

    /// Rest state at the collinear point with abscissa `x`.
    pub fn collinear_state(&self, x: f64) -> Vector {
        self.rest_state(&[x, 0.0, 0.0])
    }

    /// Relative positions and distances to both primaries.
    fn offsets(&self, y: &[f64]) -> Result<([[f64; 3]; 2], [f64; 2]), ModelError> {
        self.check_dim(y)?;
        let mut d = [[0.0; 3]; 2];
        let centers = [-self.mu, 1.0 - self.mu];
        let names = ["primary", "secondary"];
        let mut r = [0.0; 2];
        for b in 0..2 {
            d[b][0] = y[0] - centers[b];
            d[b][1..self.m].copy_from_slice(&y[1..self.m]);
            r[b] = sqrt(d[b].iter().map(|x| x * x).sum());
            if r[b] < SINGULARITY_RADIUS {
                return Err(ModelError::Singular { body: names[b], distance: r[b] });
            }
        }
        Ok((d, r))
    }

    fn masses(&self) -> [f64; 2] {
        [1.0 - self.mu, self.mu]
    }
}

/// `H = p1 q2 − p2 q1 + ½|p|² − (1−μ)/r1 − μ/r2`.
impl HamiltonianModel for Crtbp {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        let (_, r) = self.offsets(y)?;
        let m = self.m;
        let p = &y[m..];
        let kinetic: f64 = 0.5 * p.iter().map(|x| x * x).sum::<f64>();
        let [k1, k2] = self.masses();
        Ok(p[0] * y[1] - p[1] * y[0] + kinetic - k1 / r[0] - k2 / r[1])
    }

    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        let (d, r) = self.offsets(y)?;
        let m = self.m;
        let mut g = Vector::zeros(2 * m);
        g[0] = -y[m + 1];
        g[1] = y[m];
        for (b, k) in self.masses().into_iter().enumerate() {
            let w = k / (r[b] * r[b] * r[b]);
            for i in 0..m {
                g[i] += w * d[b][i];
            }
        }
        for i in 0..m {
            g[m + i] = y[m + i];
        }
        g[m] += y[1];
        g[m + 1] -= y[0];
        Ok(g)
    }

    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        let (d, r) = self.offsets(y)?;
        let m = self.m;
        let mut h = Matrix::zeros(2 * m, 2 * m);
        for (b, k) in self.masses().into_iter().enumerate() {
            let r3 = r[b] * r[b] * r[b];
            let r5 = r3 * r[b] * r[b];
            for i in 0..m {
                h[(i, i)] += k / r3;
                for j in 0..m {
                    h[(i, j)] -= 3.0 * k * d[b][i] * d[b][j] / r5;
                }
            }
        }
        for i in 0..m {
            h[(m + i, m + i)] = 1.0;
        }
        h[(0, m + 1)] = -1.0;
        h[(m + 1, 0)] = -1.0;
        h[(1, m)] = 1.0;
        h[(m, 1)] = 1.0;
        Ok(h)
    }
}

fn collinear_residual(mu: f64, x: f64) -> (f64, f64) {
    let a = x + mu;
    let b = x - 1.0 + mu;
    let (aa, bb) = (a.abs(), b.abs());
    let f = x - (1.0 - mu) * a / (aa * aa * aa) - mu * b / (bb * bb * bb);
    let df = 1.0 + 2.0 * (1.0 - mu) / (aa * aa * aa) + 2.0 * mu / (bb * bb * bb);
    (f, df)
}

/// Root of the collinear residual in `(lo, hi)`, where it increases through zero.
fn collinear_root(mu: f64, lo_sing: Option<f64>, hi_sing: Option<f64>, far: f64) -> f64 {
    let f = |x: f64| collinear_residual(mu, x).0;
    let mut lo = match lo_sing {
        Some(s) => {
            let mut d = 1e-3;
            while f(s + d) >= 0.0 && d > 1e-300 {
                d *= 0.5;
            }
            s + d
        }
        None => far,
    };
    let mut hi = match hi_sing {
        Some(s) => {
            let mut d = 1e-3;
            while f(s - d) <= 0.0 && d > 1e-300 {
                d *= 0.5;
            }
            s - d
        }
        None => far,
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (fx, dfx) = collinear_residual(mu, x);
        let next = x - fx / dfx;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    x
}

/// Abscissae `(L1, L2, L3)` of the collinear libration points, measured from the barycenter.
pub fn collinear_libration_points(mu: f64) -> Result<[f64; 3], ModelError> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(ModelError::InvalidParameter("mass ratio must lie in (0, 1/2)"));
    }
    let l1 = collinear_root(mu, Some(-mu), Some(1.0 - mu), 0.0);
    let l2 = collinear_root(mu, Some(1.0 - mu), None, 2.0);
    let l3 = collinear_root(mu, None, Some(-mu), -2.0);
    Ok([l1, l2, l3])
}

/// Planar positions of the triangular points `L4` (upper) and `L5` (lower).
pub fn triangular_libration_points(mu: f64) -> Result<[[f64; 2]; 2], ModelError> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(ModelError::InvalidParameter("mass ratio must lie in (0, 1/2)"));
    }
    let x = 0.5 - mu;
    let y = 0.5 * sqrt(3.0);
    Ok([[x, y], [x, -y]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fd_gradient, fd_hessian, linearize, relative_discrepancy};
    use crate::models::units::EARTH_SUN_MU;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spatial(mu: f64) -> Crtbp {
        Crtbp::new(CrtbpParams::spatial(mu)).unwrap()
    }

    #[test]
    fn l2_of_sun_earth_system() {
        let [_, l2, _] = collinear_libration_points(EARTH_SUN_MU).unwrap();
        assert!((l2 - 1.010075).abs() < 1e-6, "{l2}");
        let model = spatial(EARTH_SUN_MU);
        let y = model.collinear_state(1.010075);
        let g = model.gradient(y.as_slice()).unwrap();
        assert!(g.amax() < 1e-5);
        let h = model.energy(y.as_slice()).unwrap();
        assert!((h + 1.50045).abs() < 1e-5, "{h}");
    }

    #[test]
    fn libration_points_are_equilibria() {
        let mu = 0.01;
        let model = spatial(mu);
        for x in collinear_libration_points(mu).unwrap() {
            let (f, _) = collinear_residual(mu, x);
            assert!(f.abs() < 1e-13);
            let g = model.gradient(model.collinear_state(x).as_slice()).unwrap();
            assert!(g.amax() < 1e-10);
        }
        for q in triangular_libration_points(mu).unwrap() {
            let g = model.gradient(model.rest_state(&[q[0], q[1], 0.0]).as_slice()).unwrap();
            assert!(g.amax() < 1e-12);
        }
    }

    #[test]
    fn two_body_limit() {
        let [l1, l2, l3] = collinear_libration_points(1e-12).unwrap();
        assert!((l2 - 1.0).abs() < 1e-3);
        assert!((l1 - 1.0).abs() < 1e-3);
        assert!((l3 + 1.0).abs() < 1e-3);
        assert!(l1 < 1.0 - 1e-12 && l2 > 1.0 - 1e-12);
    }

    #[test]
    fn rejects_bad_mass_ratio() {
        assert!(Crtbp::new(CrtbpParams::planar(0.0)).is_err());
        assert!(Crtbp::new(CrtbpParams::planar(0.5)).is_err());
        assert!(collinear_libration_points(-1.0).is_err());
    }

    #[test]
    fn singularity_guard() {
        let model = spatial(0.01);
        let y = [-0.01, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(model.energy(&y), Err(ModelError::Singular { .. })));
        let y = [0.99, 1e-10, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(model.hessian(&y), Err(ModelError::Singular { .. })));
        assert!(matches!(model.gradient(&[0.0; 4]), Err(ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spatial_flag in [true, false] {
            let model = Crtbp::new(CrtbpParams { mu: 0.01, spatial: spatial_flag }).unwrap();
            let n = model.dim();
            for _ in 0..20 {
                let y: alloc::vec::Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let (_, r) = model.offsets(&y).unwrap();
                if r[0] < 0.2 || r[1] < 0.2 {
                    continue;
                }
                let g = model.gradient(&y).unwrap();
                let gfd = fd_gradient(&model, &y, 1e-6).unwrap();
                assert!(relative_discrepancy(g.as_slice(), gfd.as_slice(), 1e-8) < 1e-6);
                let h = model.hessian(&y).unwrap();
                assert!((&h - h.transpose()).amax() < 1e-13);
                let hfd = fd_hessian(&model, &y, 1e-6).unwrap();
                assert!(relative_discrepancy(h.as_slice(), hfd.as_slice(), 1e-8) < 1e-5);
            }
        }
    }

    #[test]
    fn planar_embeds_in_spatial() {
        let mu = 0.0123;
        let planar = Crtbp::new(CrtbpParams::planar(mu)).unwrap();
        let space = spatial(mu);
        let y4 = [0.3, -0.4, 0.1, 0.7];
        let y6 = [0.3, -0.4, 0.0, 0.1, 0.7, 0.0];
        assert_eq!(planar.energy(&y4).unwrap(), space.energy(&y6).unwrap());
    }

    #[test]
    fn l2_is_saddle_center_center() {
        let model = spatial(EARTH_SUN_MU);
        let [_, l2, _] = collinear_libration_points(EARTH_SUN_MU).unwrap();
        let lin = linearize(&model, model.collinear_state(l2).as_slice()).unwrap();
        assert_eq!(lin.real_rates().len(), 1);
        assert_eq!(lin.center_frequencies().len(), 2);
        assert!(lin.matrix.trace().abs() < 1e-12);
        let [wp, wv] = [lin.center_frequencies()[0], lin.center_frequencies()[1]];
        assert!(wp > wv && wv > 1.9);
        let (a1, _) = lin.center_plane(wp).unwrap();
        let m2a = &lin.matrix * (&lin.matrix * &a1) + &a1 * (wp * wp);
        assert!(m2a.amax() < 1e-8);
    }

    #[test]
    fn linearize_rejects_non_equilibrium() {
        let model = spatial(0.01);
        let y = model.rest_state(&[0.5, 0.1, 0.0]);
        assert!(matches!(linearize(&model, y.as_slice()), Err(ModelError::NotEquilibrium { .. })));
    }
}
