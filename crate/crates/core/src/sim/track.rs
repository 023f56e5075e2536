use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::model::RANGEFINDER_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

// named like the operator traits but kept inherent so call sites need no imports
#[allow(clippy::should_implement_trait)]
impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn from_angle(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }

    /// Rotated a quarter turn counter-clockwise.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("a track needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("half width must be positive and finite, got {0}")]
    BadHalfWidth(f64),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("centerline segments {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("oval needs straight >= 0, radius > half width > 0 and at least 8 vertices per arc")]
    BadOval,
    #[error("track file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Closed centerline with a constant half width.
///
/// Vertex 0 is the start/finish line. The corridor edges are the miter
/// offsets of the centerline by `half_width` on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    centerline: Vec<Point>,
    half_width: f64,
    cumulative: Vec<f64>,
    length: f64,
    left_edge: Vec<Point>,
    right_edge: Vec<Point>,
}

impl Track {
    pub fn new(centerline: Vec<Point>, half_width: f64) -> Result<Self, TrackError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(TrackError::BadHalfWidth(half_width));
        }
        if let Some(i) = centerline
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite()))
        {
            return Err(TrackError::NonFinite(i));
        }
        let n = centerline.len();
        if n < 3 {
            return Err(TrackError::TooFewVertices(n));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if centerline[i] == centerline[j] {
                return Err(TrackError::DuplicateVertex(i, j));
            }
        }
        check_simple(&centerline)?;

        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..n {
            acc += centerline[(i + 1) % n].sub(centerline[i]).norm();
            cumulative.push(acc);
        }
        let left_edge = offset_polyline(&centerline, half_width);
        let right_edge = offset_polyline(&centerline, -half_width);
        Ok(Track {
            centerline,
            half_width,
            cumulative,
            length: acc,
            left_edge,
            right_edge,
        })
    }

    pub fn centerline(&self) -> &[Point] {
        &self.centerline
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn left_edge(&self) -> &[Point] {
        &self.left_edge
    }

    pub fn right_edge(&self) -> &[Point] {
        &self.right_edge
    }

    fn segment(&self, i: usize) -> (Point, Point) {
        let n = self.centerline.len();
        (self.centerline[i], self.centerline[(i + 1) % n])
    }

    fn segment_at(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.length);
        // cumulative is sorted; find the last vertex at or before s
        let i = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let i = i.min(self.centerline.len() - 1);
        (i, s - self.cumulative[i])
    }

    /// Centerline point at arc length `s` (wrapped onto the loop).
    pub fn point_at(&self, s: f64) -> Point {
        let (i, along) = self.segment_at(s);
        let (a, b) = self.segment(i);
        let d = b.sub(a);
        a.add(d.scale(along / d.norm()))
    }

    /// Direction of travel, in radians, of the centerline segment holding
    /// arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, _) = self.segment_at(s);
        let (a, b) = self.segment(i);
        let d = b.sub(a);
        d.y.atan2(d.x)
    }

    /// Projects `position` onto the centerline. Returns the arc length of the
    /// foot point in `[0, length)` and the signed lateral offset divided by
    /// the half width, positive to the left of the direction of travel.
    pub fn progress(&self, position: Point) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..self.centerline.len() {
            let (a, b) = self.segment(i);
            let d = b.sub(a);
            let len2 = d.dot(d);
            let t = (position.sub(a).dot(d) / len2).clamp(0.0, 1.0);
            let foot = a.add(d.scale(t));
            let r = position.sub(foot);
            let dist = r.norm();
            if dist < best.0 {
                let side = d.cross(r).signum();
                let s = self.cumulative[i] + t * len2.sqrt();
                best = (dist, s, side * dist);
            }
        }
        let s = if best.1 >= self.length {
            best.1 - self.length
        } else {
            best.1
        };
        (s, best.2 / self.half_width)
    }

    /// Distance from `origin` along the world-frame direction `bearing`
    /// (radians, counter-clockwise from +x) to the first corridor edge,
    /// capped at 200 m.
    pub fn rangefinder(&self, origin: Point, bearing: f64) -> f64 {
        let dir = Point::from_angle(bearing);
        let mut best = RANGEFINDER_MAX;
        for edge in [&self.left_edge, &self.right_edge] {
            let n = edge.len();
            for i in 0..n {
                if let Some(t) = ray_segment(origin, dir, edge[i], edge[(i + 1) % n]) {
                    best = best.min(t);
                }
            }
        }
        best
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# closed centerline, one \"x y\" vertex per line, meters"
        );
        let _ = writeln!(out, "halfWidth {}", self.half_width);
        for p in &self.centerline {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }

    /// Reads the plain-text track format: `#` starts a comment, one
    /// `halfWidth <meters>` line, then one `x y` centerline vertex per line.
    pub fn parse(text: &str) -> Result<Self, TrackError> {
        let mut half_width = None;
        let mut points = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let syntax = |reason: &str| TrackError::Syntax {
                line: line_no,
                reason: reason.to_string(),
            };
            match fields.as_slice() {
                ["halfWidth", w] => {
                    if half_width.is_some() {
                        return Err(syntax("duplicate halfWidth"));
                    }
                    half_width = Some(w.parse::<f64>().map_err(|_| syntax("bad halfWidth"))?);
                }
                [x, y] => {
                    let x = x.parse::<f64>().map_err(|_| syntax("bad x coordinate"))?;
                    let y = y.parse::<f64>().map_err(|_| syntax("bad y coordinate"))?;
                    points.push(Point::new(x, y));
                }
                _ => return Err(syntax("expected `halfWidth <w>` or `x y`")),
            }
        }
        let half_width = half_width.ok_or(TrackError::Syntax {
            line: 0,
            reason: "missing halfWidth".into(),
        })?;
        Track::new(points, half_width)
    }

    pub fn load(path: &Path) -> Result<Self, TrackError> {
        Track::parse(&std::fs::read_to_string(path)?)
    }
}

/// Stadium-shaped loop driven counter-clockwise: a bottom straight starting
/// at the start line, a semicircle, the top straight, and a second
/// semicircle. Each arc carries `vertices_per_arc` vertices.
pub fn make_oval(
    straight_len: f64,
    corner_radius: f64,
    half_width: f64,
    vertices_per_arc: usize,
) -> Result<Track, TrackError> {
    let ok = straight_len.is_finite()
        && straight_len >= 0.0
        && corner_radius.is_finite()
        && half_width > 0.0
        && corner_radius > half_width
        && vertices_per_arc >= 8;
    if !ok {
        return Err(TrackError::BadOval);
    }
    let half = straight_len / 2.0;
    let n = vertices_per_arc;
    let step = PI / (n - 1) as f64;
    let mut pts = Vec::with_capacity(2 * n + 1);
    if straight_len > 0.0 {
        pts.push(Point::new(0.0, -corner_radius));
    }
    for (cx, start) in [(half, -PI / 2.0), (-half, PI / 2.0)] {
        for k in 0..n {
            let th = start + step * k as f64;
            let p = Point::new(cx + corner_radius * th.cos(), corner_radius * th.sin());
            if pts.last().is_some_and(|q: &Point| q.sub(p).norm() < 1e-9) {
                continue;
            }
            pts.push(p);
        }
    }
    if pts
        .first()
        .zip(pts.last())
        .is_some_and(|(a, b)| a.sub(*b).norm() < 1e-9)
    {
        pts.pop();
    }
    Track::new(pts, half_width)
}

fn offset_polyline(pts: &[Point], d: f64) -> Vec<Point> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let n1 = cur.sub(prev).perp().scale(1.0 / cur.sub(prev).norm());
            let n2 = next.sub(cur).perp().scale(1.0 / next.sub(cur).norm());
            let bis = n1.add(n2);
            let denom = 1.0 + n1.dot(n2);
            if denom < 1e-9 {
                // hairpin reversal; fall back to the incoming normal
                cur.add(n1.scale(d))
            } else {
                // miter point: the two offset lines meet at bis * d / (1 + n1.n2)
                cur.add(bis.scale(d / denom))
            }
        })
        .collect()
}

/// Ray parameter `t >= 0` at which `origin + t * dir` (unit `dir`) meets the
/// segment `a..b`, if it does.
fn ray_segment(origin: Point, dir: Point, a: Point, b: Point) -> Option<f64> {
    let e = b.sub(a);
    let denom = dir.cross(e);
    if denom == 0.0 {
        return None;
    }
    let w = a.sub(origin);
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = p2.sub(p1);
    let d2 = q2.sub(q1);
    let o1 = d1.cross(q1.sub(p1));
    let o2 = d1.cross(q2.sub(p1));
    let o3 = d2.cross(p1.sub(q1));
    let o4 = d2.cross(p2.sub(q1));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, o: f64| {
        o == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(p1, p2, q1, o1) || on(p1, p2, q2, o2) || on(q1, q2, p1, o3) || on(q1, q2, p2, o4)
}

fn check_simple(pts: &[Point]) -> Result<(), TrackError> {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(TrackError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}
