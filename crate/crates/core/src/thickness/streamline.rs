//! Heat-flow streamlines through the potential field.
//!
//! A streamline is seeded at the center of an epicardial voxel and integrated
//! by explicit Euler steps of fixed length along the unit gradient. The
//! inward leg descends the potential until it enters the blood pool; a short
//! outward leg ascends from the seed until it leaves the wall. Both legs end
//! on the voxel face they cross, located by bisection, so the polyline spans
//! the wall from the background interface to the blood-pool interface.

use serde::{Deserialize, Serialize};

use crate::volume::max_extent;

use super::laplace::PotentialField;
use super::surfaces::Region;
use super::ThicknessError;

pub(crate) const MIN_GRADIENT: f64 = 1e-12;
const MAX_STEP_FACTOR: f64 = 50.0;
const BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ReachedEndo,
    LeftDomain,
    MaxSteps,
    /// The gradient vanished before a surface was reached.
    ZeroGradient,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedEndo => "ReachedEndo",
            Termination::LeftDomain => "LeftDomain",
            Termination::MaxSteps => "MaxSteps",
            Termination::ZeroGradient => "ZeroGradient",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Streamline {
    pub seed: usize,
    /// Physical coordinates in mm, ordered from the epicardial end inward.
    pub points: Vec<[f64; 3]>,
    pub step_mm: f64,
    pub length_mm: f64,
    pub termination: Termination,
}

impl Streamline {
    pub fn chord_mm(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => dist(*a, *b),
            _ => 0.0,
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn polyline_length(points: &[[f64; 3]]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// What lies at a physical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Site {
    Wall,
    BloodPool,
    Outside,
}

struct Sampler<'a> {
    field: &'a PotentialField,
    n: [usize; 3],
    s: [f64; 3],
}

impl<'a> Sampler<'a> {
    fn new(field: &'a PotentialField) -> Self {
        Sampler { field, n: field.dims().as_array(), s: field.spacing() }
    }

    fn containing_voxel(&self, p: [f64; 3]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let u = (p[a] / self.s[a]).floor();
            if !(u >= 0.0 && u < self.n[a] as f64) {
                return None;
            }
            c[a] = u as usize;
        }
        Some(self.field.dims().index(c[0], c[1], c[2]))
    }

    fn site(&self, p: [f64; 3]) -> Site {
        match self.containing_voxel(p).map(|i| self.field.surfaces().region(i)) {
            Some(Region::BloodPool) => Site::BloodPool,
            Some(r) if r.is_wall() => Site::Wall,
            _ => Site::Outside,
        }
    }

    /// Potential extended off the wall: 1 in background, 0 in blood pool.
    #[inline]
    fn extended(&self, i: usize) -> f64 {
        match self.field.surfaces().region(i) {
            Region::Background => 1.0,
            Region::BloodPool => 0.0,
            _ => self.field.value(i),
        }
    }

    /// Central-difference gradient at a voxel center, one-sided at grid edges.
    fn voxel_gradient(&self, c: [usize; 3]) -> [f64; 3] {
        let dims = self.field.dims();
        let mut g = [0.0; 3];
        for a in 0..3 {
            if self.n[a] < 2 {
                continue;
            }
            let mut lo = c;
            let mut hi = c;
            lo[a] = c[a].saturating_sub(1);
            hi[a] = (c[a] + 1).min(self.n[a] - 1);
            let h = (hi[a] - lo[a]) as f64 * self.s[a];
            g[a] =
                (self.extended(dims.index(hi[0], hi[1], hi[2])) - self.extended(dims.index(lo[0], lo[1], lo[2]))) / h;
        }
        g
    }

    /// Voxel-center gradients blended trilinearly at `p`, clamped at the grid edge.
    fn gradient(&self, p: [f64; 3]) -> [f64; 3] {
        let mut idx = [[0usize; 2]; 3];
        let mut w = [[0.0f64; 2]; 3];
        for a in 0..3 {
            let last = self.n[a] - 1;
            let u = p[a] / self.s[a] - 0.5;
            if u <= 0.0 {
                idx[a] = [0, 0];
                w[a] = [1.0, 0.0];
            } else if u >= last as f64 {
                idx[a] = [last, last];
                w[a] = [1.0, 0.0];
            } else {
                let i0 = u.floor() as usize;
                let f = u - i0 as f64;
                idx[a] = [i0, (i0 + 1).min(last)];
                w[a] = [1.0 - f, f];
            }
        }
        let mut g = [0.0; 3];
        for cz in 0..2 {
            for cy in 0..2 {
                for cx in 0..2 {
                    let wt = w[0][cx] * w[1][cy] * w[2][cz];
                    if wt == 0.0 {
                        continue;
                    }
                    let gv = self.voxel_gradient([idx[0][cx], idx[1][cy], idx[2][cz]]);
                    for a in 0..3 {
                        g[a] += wt * gv[a];
                    }
                }
            }
        }
        g
    }

    /// Unit gradient direction at `p`, or `None` where the gradient vanishes.
    fn direction(&self, p: [f64; 3]) -> Option<[f64; 3]> {
        let g = self.gradient(p);
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        (norm >= MIN_GRADIENT).then(|| [g[0] / norm, g[1] / norm, g[2] / norm])
    }

    /// First point on the segment `inside -> outside` whose site differs from `Wall`.
    fn crossing(&self, inside: [f64; 3], outside: [f64; 3]) -> [f64; 3] {
        let lerp = |t: f64| {
            [
                inside[0] + t * (outside[0] - inside[0]),
                inside[1] + t * (outside[1] - inside[1]),
                inside[2] + t * (outside[2] - inside[2]),
            ]
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.site(lerp(mid)) == Site::Wall {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lerp(hi)
    }
}

/// A step can land exactly on a voxel face, where the crossing repeats it.
fn push_distinct(points: &mut Vec<[f64; 3]>, p: [f64; 3]) {
    if points.last().is_none_or(|&last| dist(last, p) > 1e-9) {
        points.push(p);
    }
}

fn advance(p: [f64; 3], dir: [f64; 3], step: f64) -> [f64; 3] {
    [p[0] + step * dir[0], p[1] + step * dir[1], p[2] + step * dir[2]]
}

/// Number of Euler steps after which a streamline is abandoned.
pub fn max_steps(field: &PotentialField, step_mm: f64) -> usize {
    (MAX_STEP_FACTOR * max_extent(field.dims(), field.spacing()) / step_mm).ceil() as usize
}

/// Traces the streamline through epicardial voxel `seed`.
pub fn trace_streamline(field: &PotentialField, seed: usize, step_mm: f64) -> Result<Streamline, ThicknessError> {
    if !(step_mm.is_finite() && step_mm > 0.0) {
        return Err(ThicknessError::InvalidStep(step_mm));
    }
    if seed >= field.dims().len() || field.surfaces().region(seed) != Region::Epicardium {
        return Err(ThicknessError::NotAnEpicardialSeed(seed));
    }
    let sampler = Sampler::new(field);
    let limit = max_steps(field, step_mm);
    let (x, y, z) = field.dims().coords(seed);
    let s = field.spacing();
    let start = [(x as f64 + 0.5) * s[0], (y as f64 + 0.5) * s[1], (z as f64 + 0.5) * s[2]];

    // Outward leg, up the gradient, to the background interface.
    let mut outward = Vec::new();
    let mut p = start;
    let mut steps = 0;
    while steps < limit {
        let Some(dir) = sampler.direction(p) else { break };
        let q = advance(p, dir, step_mm);
        steps += 1;
        match sampler.site(q) {
            Site::Wall => {
                outward.push(q);
                p = q;
            }
            Site::Outside => {
                push_distinct(&mut outward, sampler.crossing(p, q));
                break;
            }
            // Climbing into the blood pool means the seed sits on a degenerate
            // wall; keep the seed as the outer end.
            Site::BloodPool => break,
        }
    }

    let mut points: Vec<[f64; 3]> = outward.into_iter().rev().collect();
    points.push(start);

    // Inward leg, down the gradient, to the blood pool.
    let mut p = start;
    let termination = loop {
        if steps >= limit {
            break Termination::MaxSteps;
        }
        let Some(dir) = sampler.direction(p) else { break Termination::ZeroGradient };
        let q = advance(p, [-dir[0], -dir[1], -dir[2]], step_mm);
        steps += 1;
        match sampler.site(q) {
            Site::Wall => {
                points.push(q);
                p = q;
            }
            Site::BloodPool => {
                push_distinct(&mut points, sampler.crossing(p, q));
                break Termination::ReachedEndo;
            }
            Site::Outside => {
                push_distinct(&mut points, sampler.crossing(p, q));
                break Termination::LeftDomain;
            }
        }
    };

    let length_mm = polyline_length(&points);
    Ok(Streamline { seed, points, step_mm, length_mm, termination })
}
