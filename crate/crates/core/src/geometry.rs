//! Corridor walls, nearest-obstacle queries, region classification and the
//! tangent-chord width estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

pub const MAX_WALL_DEGREE: usize = 4;

/// Newton iterations allowed before the tangent-chord solver falls back.
pub const TANGENT_CHORD_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallSide {
    Upper,
    Lower,
}

/// Polynomial wall `y = c0 + c1 x + ... + c4 x^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallFunction {
    coeffs: Vec<f64>,
    side: WallSide,
}

impl WallFunction {
    /// `coeffs` in ascending powers of x.
    pub fn new(coeffs: Vec<f64>, side: WallSide) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_WALL_DEGREE + 1 {
            return Err(Error::Input(format!(
                "wall polynomial needs 1..={} coefficients, got {}",
                MAX_WALL_DEGREE + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("wall coefficients must be finite".into()));
        }
        Ok(WallFunction { coeffs, side })
    }

    /// `a (x - h)^2 + k`, the shape used by the default corridor.
    pub fn vertex_parabola(a: f64, h: f64, k: f64, side: WallSide) -> Self {
        WallFunction {
            coeffs: vec![a * h * h + k, -2.0 * a * h, a],
            side,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn side(&self) -> WallSide {
        self.side
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + (i * (i - 1)) as f64 * c)
    }

    pub fn point(&self, x: f64) -> Vec2 {
        Vec2::new(x, self.value(x))
    }

    /// Unit normal pointing into the corridor (down for the upper wall, up for the lower).
    fn inward_normal(&self, x: f64) -> Vec2 {
        let s = self.slope(x);
        let n = Vec2::new(-s, 1.0) / (1.0 + s * s).sqrt();
        match self.side {
            WallSide::Upper => -n,
            WallSide::Lower => n,
        }
    }

    /// Closest point on the curve restricted to `lo <= x <= hi`.
    pub fn nearest_point(&self, p: Vec2, lo: f64, hi: f64) -> (Vec2, f64) {
        let px = p.x.clamp(lo, hi);
        let foot = self.point(px);
        let bound = foot.distance(p);
        if bound == 0.0 {
            return (foot, 0.0);
        }
        // Every closer point has |t - p.x| < bound.
        let a = (p.x - bound).max(lo);
        let b = (p.x + bound).min(hi);
        let mut best = (foot, bound);
        let mut consider = |t: f64| {
            let q = self.point(t);
            let d = q.distance(p);
            if d < best.1 {
                best = (q, d);
            }
        };
        consider(a);
        consider(b);
        if b > a {
            // Half the derivative of the squared distance.
            let g = |t: f64| (t - p.x) + (self.value(t) - p.y) * self.slope(t);
            let dg = |t: f64| {
                let s = self.slope(t);
                1.0 + s * s + (self.value(t) - p.y) * self.second_derivative(t)
            };
            const SAMPLES: usize = 64;
            let h = (b - a) / SAMPLES as f64;
            let mut t0 = a;
            let mut g0 = g(t0);
            for i in 1..=SAMPLES {
                let t1 = if i == SAMPLES { b } else { a + h * i as f64 };
                let g1 = g(t1);
                if g0 == 0.0 {
                    consider(t0);
                } else if g0 < 0.0 && g1 > 0.0 {
                    consider(safe_newton(&g, &dg, t0, t1));
                }
                t0 = t1;
                g0 = g1;
            }
            if g0 == 0.0 {
                consider(t0);
            }
        }
        best
    }
}

/// Root of `f` in `[lo, hi]` given `f(lo) < 0 < f(hi)`; Newton steps guarded by bisection.
fn safe_newton(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = f(t);
        if v == 0.0 {
            return t;
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = df(t);
        let newton = t - v / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) || hi - lo <= 1e-15 * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    /// Free pursuit.
    I,
    /// Within the tolerable distance of a wall.
    II,
    /// Heading out of the corridor; the agent holds still.
    III,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::I => "I",
            RegionLabel::II => "II",
            RegionLabel::III => "III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleHit {
    pub point: Vec2,
    pub distance: f64,
    pub wall: WallSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentChord {
    /// Chord length between the two tangent points.
    pub width: f64,
    pub center: Vec2,
    pub radius: f64,
    pub upper_tangent: Vec2,
    pub lower_tangent: Vec2,
    /// Set when the solver did not converge and `width` is the vertical gap.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neck {
    pub x: f64,
    pub width: f64,
}

/// Two polynomial walls spanning a closed x-interval.
///
/// The walls exist only over the interval. Both ends are open mouths, and
/// the plane beyond them is free space.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    upper: WallFunction,
    lower: WallFunction,
    x_min: f64,
    x_max: f64,
}

impl Corridor {
    pub fn new(upper: WallFunction, lower: WallFunction, x_min: f64, x_max: f64) -> Result<Self> {
        if upper.side != WallSide::Upper || lower.side != WallSide::Lower {
            return Err(Error::Input("walls passed with the wrong orientation".into()));
        }
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Input(format!("empty x-domain [{x_min}, {x_max}]")));
        }
        let c = Corridor {
            upper,
            lower,
            x_min,
            x_max,
        };
        const SAMPLES: usize = 4096;
        for i in 0..=SAMPLES {
            let x = x_min + (x_max - x_min) * i as f64 / SAMPLES as f64;
            let gap = c.vertical_gap(x);
            if !(gap > 0.0) {
                return Err(Error::Input(format!(
                    "upper wall is not above the lower wall at x = {x} (gap {gap})"
                )));
            }
        }
        Ok(c)
    }

    /// Channel between the two quadratic walls `0.008(x-10)^2+20` and `0.008(x+10)^2+14`.
    pub fn parabolic(x_min: f64, x_max: f64) -> Result<Self> {
        Corridor::new(
            WallFunction::vertex_parabola(0.008, 10.0, 20.0, WallSide::Upper),
            WallFunction::vertex_parabola(0.008, -10.0, 14.0, WallSide::Lower),
            x_min,
            x_max,
        )
    }

    pub fn upper(&self) -> &WallFunction {
        &self.upper
    }

    pub fn lower(&self) -> &WallFunction {
        &self.lower
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn wall(&self, side: WallSide) -> &WallFunction {
        match side {
            WallSide::Upper => &self.upper,
            WallSide::Lower => &self.lower,
        }
    }

    /// Wall height and slope, checked against the domain.
    pub fn wall_eval(&self, side: WallSide, x: f64) -> Result<(f64, f64)> {
        self.check_domain(x)?;
        let w = self.wall(side);
        Ok((w.value(x), w.slope(x)))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x >= self.x_min && x <= self.x_max {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                lo: self.x_min,
                hi: self.x_max,
            })
        }
    }

    pub fn vertical_gap(&self, x: f64) -> f64 {
        self.upper.value(x) - self.lower.value(x)
    }

    pub fn mid_point(&self, x: f64) -> Vec2 {
        Vec2::new(x, 0.5 * (self.upper.value(x) + self.lower.value(x)))
    }

    /// Within the wall span and between the walls (walls included).
    pub fn between_walls(&self, p: Vec2) -> bool {
        p.is_finite()
            && p.x >= self.x_min
            && p.x <= self.x_max
            && p.y >= self.lower.value(p.x)
            && p.y <= self.upper.value(p.x)
    }

    /// Walkable: between the walls, or beyond either end of the wall span.
    pub fn contains(&self, p: Vec2) -> bool {
        p.is_finite() && (p.x < self.x_min || p.x > self.x_max || self.between_walls(p))
    }

    /// A straight move from `from` to `to` that ends in walkable space and
    /// crosses the ends of the wall span only through the open mouths.
    pub fn admits_step(&self, from: Vec2, to: Vec2) -> bool {
        if !self.contains(to) {
            return false;
        }
        for end in [self.x_min, self.x_max] {
            let crosses = (from.x - end) * (to.x - end) < 0.0;
            if crosses {
                let t = (end - from.x) / (to.x - from.x);
                let y = from.y + t * (to.y - from.y);
                if y < self.lower.value(end) || y > self.upper.value(end) {
                    return false;
                }
            }
        }
        true
    }

    fn require_inside(&self, p: Vec2) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideCorridor { x: p.x, y: p.y })
        }
    }

    /// Closest wall point to `p` over both walls on the domain.
    pub fn nearest_obstacle_point(&self, p: Vec2) -> Result<ObstacleHit> {
        self.require_inside(p)?;
        let (pu, du) = self.upper.nearest_point(p, self.x_min, self.x_max);
        let (pl, dl) = self.lower.nearest_point(p, self.x_min, self.x_max);
        Ok(if dl <= du {
            ObstacleHit {
                point: pl,
                distance: dl,
                wall: WallSide::Lower,
            }
        } else {
            ObstacleHit {
                point: pu,
                distance: du,
                wall: WallSide::Upper,
            }
        })
    }

    /// III when the move to the look-ahead position is blocked by a wall, II when the
    /// current position is closer than `tolerable` to a wall, else I.
    pub fn classify_region(&self, position: Vec2, candidate: Vec2, tolerable: f64) -> Result<RegionLabel> {
        Ok(self.classify_with_hit(position, candidate, tolerable)?.0)
    }

    /// `classify_region` that also returns the nearest wall point it computed.
    pub fn classify_with_hit(
        &self,
        position: Vec2,
        candidate: Vec2,
        tolerable: f64,
    ) -> Result<(RegionLabel, ObstacleHit)> {
        if !(tolerable > 0.0) {
            return Err(Error::Input(format!(
                "tolerable distance must be positive, got {tolerable}"
            )));
        }
        let hit = self.nearest_obstacle_point(position)?;
        let region = if !self.admits_step(position, candidate) {
            RegionLabel::III
        } else if hit.distance < tolerable {
            RegionLabel::II
        } else {
            RegionLabel::I
        };
        Ok((region, hit))
    }

    /// Width at `p` measured as the chord of the circle tangent to both
    /// walls whose chord (between the tangent points) passes through `p`.
    ///
    /// Only defined within the wall span.
    pub fn tangent_chord_width(&self, p: Vec2) -> Result<TangentChord> {
        if !self.between_walls(p) {
            return Err(Error::OutsideCorridor { x: p.x, y: p.y });
        }
        Ok(self.solve_tangent_chord(p).unwrap_or_else(|| self.vertical_fallback(p)))
    }

    fn vertical_fallback(&self, p: Vec2) -> TangentChord {
        let upper_tangent = self.upper.point(p.x);
        let lower_tangent = self.lower.point(p.x);
        let width = upper_tangent.y - lower_tangent.y;
        TangentChord {
            width,
            center: (upper_tangent + lower_tangent) * 0.5,
            radius: 0.5 * width,
            upper_tangent,
            lower_tangent,
            fallback_used: true,
        }
    }

    /// Damped Newton on the tangent-point abscissas `(tu, tl)`:
    ///   F1 = (Tu - Tl) x (nl - nu)   (an equal-radius circle exists)
    ///   F2 = (Tu - Tl) x (p - Tl)    (p lies on the chord)
    fn solve_tangent_chord(&self, p: Vec2) -> Option<TangentChord> {
        let (up, lo) = (&self.upper, &self.lower);
        let residual = |tu: f64, tl: f64| {
            let d = up.point(tu) - lo.point(tl);
            let m = lo.inward_normal(tl) - up.inward_normal(tu);
            (d.cross(m), d.cross(p - lo.point(tl)))
        };
        let normalized = |tu: f64, tl: f64| {
            let (f1, f2) = residual(tu, tl);
            let d = (up.point(tu) - lo.point(tl)).norm();
            let m = (lo.inward_normal(tl) - up.inward_normal(tu)).norm();
            (f1 / (d * m)).abs().max((f2 / d).abs())
        };

        let (mut tu, mut tl) = (p.x, p.x);
        let mut converged = false;
        for _ in 0..TANGENT_CHORD_MAX_ITER {
            let (f1, f2) = residual(tu, tl);
            let err = normalized(tu, tl);
            if !err.is_finite() {
                return None;
            }
            if err < 1e-13 {
                converged = true;
                break;
            }

            let tu_pt = up.point(tu);
            let tl_pt = lo.point(tl);
            let d = tu_pt - tl_pt;
            let m = lo.inward_normal(tl) - up.inward_normal(tu);
            let dtu = Vec2::new(1.0, up.slope(tu));
            let dtl = Vec2::new(1.0, lo.slope(tl));
            let su = (1.0 + dtu.y * dtu.y).sqrt();
            let sl = (1.0 + dtl.y * dtl.y).sqrt();
            // Derivatives of the inward normals along each wall.
            let dnu = dtu * (up.second_derivative(tu) / (su * su * su));
            let dnl = dtl * (-lo.second_derivative(tl) / (sl * sl * sl));
            let rel = p - tl_pt;

            let j11 = dtu.cross(m) - d.cross(dnu);
            let j12 = -dtl.cross(m) + d.cross(dnl);
            let j21 = dtu.cross(rel);
            let j22 = -dtl.cross(rel) - d.cross(dtl);
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let step_u = (f1 * j22 - f2 * j12) / det;
            let step_l = (j11 * f2 - j21 * f1) / det;

            let current = f1.hypot(f2);
            let mut scale = 1.0;
            loop {
                let (nu, nl) = (tu - scale * step_u, tl - scale * step_l);
                let (g1, g2) = residual(nu, nl);
                if g1.hypot(g2) < current || scale < 1e-6 {
                    tu = nu;
                    tl = nl;
                    break;
                }
                scale *= 0.5;
            }
        }
        if !converged {
            return None;
        }

        let t_up = up.point(tu);
        let t_lo = lo.point(tl);
        let d = t_up - t_lo;
        let m = lo.inward_normal(tl) - up.inward_normal(tu);
        let radius = d.dot(m) / m.norm_squared();
        if !(radius > 0.0) {
            return None;
        }
        let center = t_up + up.inward_normal(tu) * radius;
        // p must sit between the tangent points, not on the extended line.
        let s = (p - t_lo).dot(d) / d.norm_squared();
        if !(-1e-9..=1.0 + 1e-9).contains(&s) {
            return None;
        }
        // The circle must not cut through either wall.
        for wall in [up, lo] {
            let (_, dist) = wall.nearest_point(center, center.x - 2.0 * radius, center.x + 2.0 * radius);
            if (dist - radius).abs() > 1e-7 {
                return None;
            }
        }
        Some(TangentChord {
            width: d.norm(),
            center,
            radius,
            upper_tangent: t_up,
            lower_tangent: t_lo,
            fallback_used: false,
        })
    }

    /// Narrowest tangent-chord width along the mid-curve, sampled every
    /// `resolution` and refined by golden-section search around the best sample.
    pub fn neck_location(&self, resolution: f64) -> Result<Neck> {
        if !(resolution > 0.0) {
            return Err(Error::Input(format!("resolution must be positive, got {resolution}")));
        }
        let width_at = |x: f64| -> Result<f64> { Ok(self.tangent_chord_width(self.mid_point(x))?.width) };
        let steps = ((self.x_max - self.x_min) / resolution).ceil() as usize;
        let mut best = Neck {
            x: self.x_min,
            width: width_at(self.x_min)?,
        };
        for i in 1..=steps {
            let x = (self.x_min + resolution * i as f64).min(self.x_max);
            let w = width_at(x)?;
            if w < best.width - 1e-12 {
                best = Neck { x, width: w };
            }
        }

        let (mut a, mut b) = (
            (best.x - resolution).max(self.x_min),
            (best.x + resolution).min(self.x_max),
        );
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut wc, mut wd) = (width_at(c)?, width_at(d)?);
        while b - a > 1e-9 {
            if wc < wd {
                b = d;
                d = c;
                wd = wc;
                c = b - INV_PHI * (b - a);
                wc = width_at(c)?;
            } else {
                a = c;
                c = d;
                wc = wd;
                d = a + INV_PHI * (b - a);
                wd = width_at(d)?;
            }
        }
        for x in [a, b, 0.5 * (a + b)] {
            let w = width_at(x)?;
            if w < best.width - 1e-12 {
                best = Neck { x, width: w };
            }
        }
        Ok(best)
    }
}
