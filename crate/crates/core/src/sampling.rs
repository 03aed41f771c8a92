//! Deterministic low-discrepancy sampling of `(s, z, v)` for the sup/inf
//! estimates.
//!
//! Samples are organized as rays: a time `s`, a state `z` with `|z| ≤ K`
//! and a unit control direction. Magnitudes along each ray are chosen by
//! the caller. Refinement level `k` doubles every grid `k` times and always
//! produces a superset of the coarser sample, so sup estimates can only grow
//! and inf estimates can only shrink under refinement.

use serde::{Deserialize, Serialize};

use crate::exec::{map_range, ExecMode};
use crate::lagrangian::LagrangianModel;
use crate::trajectory::ControlCone;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point `index` in `[0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| radical_inverse(index, PRIMES[d % PRIMES.len()]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Time grid points (uniform, `2^k + 1` nests under refinement).
    pub s_points: usize,
    /// States in the ball `|z| ≤ K` (origin and axis points first, then Halton).
    pub z_points: usize,
    /// Uniform directions on the control sphere.
    pub directions: usize,
    /// Log-spaced magnitudes per ray.
    pub magnitudes: usize,
    pub u_max: f64,
    /// Depth `k` of the approach samples `r(1 − 2^{-k})` towards an exit radius.
    pub exit_approach: u32,
    /// In the plane, extra directions at angle `2^{-k}` from each axis for
    /// `k = 4, 8, …, angle_depth`.
    pub angle_depth: u32,
    /// Values beyond this magnitude are reported as `±∞`.
    pub divergence_cap: f64,
    /// Number of refinement doublings used for the refinement delta.
    pub refinements: u32,
    pub mode: ExecMode,
    /// Use a model's closed forms for Ξ and Υ when it provides them.
    pub use_closed_forms: bool,
    pub cone: ControlCone,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            s_points: 33,
            z_points: 257,
            directions: 64,
            magnitudes: 65,
            u_max: 1e6,
            exit_approach: 40,
            angle_depth: 32,
            divergence_cap: 1e12,
            refinements: 0,
            mode: ExecMode::default(),
            use_closed_forms: false,
            cone: ControlCone::Full,
        }
    }
}

impl SamplerConfig {
    /// The configuration after `level` doublings.
    pub fn refined(&self, level: u32) -> SamplerConfig {
        let f = 1usize << level;
        SamplerConfig {
            s_points: (self.s_points.max(2) - 1) * f + 1,
            z_points: (self.z_points.max(2) - 1) * f + 1,
            directions: self.directions * f,
            magnitudes: (self.magnitudes.max(2) - 1) * f + 1,
            angle_depth: self.angle_depth * f as u32,
            refinements: 0,
            ..self.clone()
        }
    }

    /// A lighter configuration for inner loops and tests.
    pub fn coarse() -> SamplerConfig {
        SamplerConfig {
            s_points: 9,
            z_points: 33,
            directions: 32,
            magnitudes: 33,
            ..SamplerConfig::default()
        }
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }
}

/// `count` points `lo·(hi/lo)^{j/(count−1)}`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 || hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == count - 1 {
                hi
            } else {
                lo * (ratio * (j as f64 / (count - 1) as f64)).exp()
            }
        })
        .collect()
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    (0..count)
        .map(|j| {
            if j == count - 1 {
                b
            } else {
                a + (b - a) * (j as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Unit directions in `ℝ^m`: `±1` for `m = 1`, uniform angles (axes
/// included when `count` is a multiple of 4) for `m = 2`, axes plus Halton
/// points otherwise.
pub fn sphere_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    match m {
        0 => vec![vec![]],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(4))
            .map(|j| {
                let a = std::f64::consts::TAU * (j as f64 / count.max(4) as f64);
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(count.max(2 * m));
            for i in 0..m {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; m];
                    e[i] = sign;
                    out.push(e);
                }
            }
            let mut idx = 1u64;
            while out.len() < count.max(2 * m) {
                let h = halton(idx, m);
                idx += 1;
                let v: Vec<f64> = h.iter().map(|x| 2.0 * x - 1.0).collect();
                let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (0.1..=1.0).contains(&r) {
                    out.push(v.iter().map(|x| x / r).collect());
                }
            }
            out
        }
    }
}

/// Directions used by the estimators: [`sphere_directions`] plus, in the
/// plane, directions approaching each axis at angles `2^{-k}`.
pub fn sample_directions(m: usize, cfg: &SamplerConfig) -> Vec<Vec<f64>> {
    let mut dirs = sphere_directions(m, cfg.directions);
    if m == 2 {
        let mut k = 4;
        while k <= cfg.angle_depth {
            let eps = 2f64.powi(-(k as i32));
            for axis in 0..4 {
                let base = std::f64::consts::FRAC_PI_2 * axis as f64;
                for a in [base - eps, base + eps] {
                    dirs.push(vec![a.cos(), a.sin()]);
                }
            }
            k += 4;
        }
    }
    dirs.retain(|d| cfg.cone.contains(d));
    dirs
}

/// States in the ball of radius `k` around `center`.
pub fn ball_points(center: &[f64], k: f64, count: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    let mut out = vec![center.to_vec()];
    if n == 0 || k <= 0.0 {
        return out;
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut z = center.to_vec();
            z[i] += sign * k;
            out.push(z);
        }
    }
    let mut idx = 1u64;
    while out.len() < count {
        let h = halton(idx, n);
        idx += 1;
        let v: Vec<f64> = h.iter().map(|x| 2.0 * x - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(center.iter().zip(&v).map(|(c, x)| c + k * x).collect());
        }
    }
    out
}

/// One sampling ray.
#[derive(Debug, Clone)]
pub struct Ray<'a> {
    pub s: f64,
    pub z: &'a [f64],
    pub dir: &'a [f64],
    /// Supremum of the in-domain radii along the ray, capped at `u_max`
    /// (`+∞` when the whole ray up to `u_max` is in the domain).
    pub exit: f64,
}

impl Ray<'_> {
    pub fn point(&self, r: f64) -> Vec<f64> {
        self.dir.iter().map(|d| d * r).collect()
    }
}

/// The `(s, z, direction)` product sampled for one model.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

impl SampleGrid {
    /// Time and state axes collapse to one point for autonomous or
    /// state-independent models.
    pub fn new(model: &dyn LagrangianModel, k: f64, cfg: &SamplerConfig) -> SampleGrid {
        let info = model.info();
        let horizon = info.horizon;
        let times = if info.autonomous {
            vec![0.0]
        } else {
            linspace(0.0, horizon, cfg.s_points)
        };
        let origin = vec![0.0; info.state_dim];
        let states = if info.state_independent {
            vec![origin]
        } else {
            ball_points(&origin, k, cfg.z_points)
        };
        SampleGrid {
            times,
            states,
            directions: sample_directions(info.control_dim, cfg),
        }
    }

    pub fn ray_count(&self) -> usize {
        self.times.len() * self.states.len() * self.directions.len()
    }

    /// Map every ray through `f` (in parallel when configured).
    pub fn map_rays<R, F>(&self, model: &dyn LagrangianModel, cfg: &SamplerConfig, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&Ray) -> R + Sync + Send,
    {
        let nd = self.directions.len();
        let nz = self.states.len();
        map_range(cfg.mode, self.ray_count(), |idx| {
            let d = idx % nd;
            let z = (idx / nd) % nz;
            let t = idx / (nd * nz);
            let mut ray = Ray {
                s: self.times[t],
                z: &self.states[z],
                dir: &self.directions[d],
                exit: f64::INFINITY,
            };
            ray.exit = exit_radius(model, &ray, cfg.u_max);
            f(&ray)
        })
    }
}

/// Exit radius along a ray by bisection (domains are star-shaped).
pub fn exit_radius(model: &dyn LagrangianModel, ray: &Ray, u_max: f64) -> f64 {
    if model.info().real_valued {
        return f64::INFINITY;
    }
    let inside = |r: f64| model.in_domain(ray.s, ray.z, &ray.point(r));
    if inside(u_max) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, u_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn refinement_nests() {
        let cfg = SamplerConfig::coarse();
        let fine = cfg.refined(1);
        let a = log_grid(2.0, 1e6, cfg.magnitudes);
        let b = log_grid(2.0, 1e6, fine.magnitudes);
        for x in &a {
            assert!(b.contains(x), "{x} missing");
        }
        let da = sample_directions(2, &cfg);
        let db = sample_directions(2, &fine);
        for d in &da {
            assert!(db.contains(d));
        }
        let za = ball_points(&[0.0, 0.0], 2.0, cfg.z_points);
        let zb = ball_points(&[0.0, 0.0], 2.0, fine.z_points);
        assert_eq!(&zb[..za.len()], &za[..]);
    }

    #[test]
    fn directions_are_unit() {
        for m in 1..=4 {
            for d in sphere_directions(m, 40) {
                let r: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_points_stay_inside() {
        for z in ball_points(&[1.0, -1.0, 0.5], 0.5, 100) {
            let r: f64 = [z[0] - 1.0, z[1] + 1.0, z[2] - 0.5]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!(r <= 0.5 + 1e-12);
        }
    }
}
