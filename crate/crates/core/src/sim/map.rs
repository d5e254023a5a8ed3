//! Planar obstacle maps and ray casting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Pose;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    fn corners(&self) -> Vec<Point> {
        vec![self.min, Point::new(self.max.x, self.min.y), self.max, Point::new(self.min.x, self.max.y)]
    }
}

/// Convex polygon, vertices in either winding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidMap(format!("polygon with {n} vertices")));
        }
        let mut sign = 0.0;
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if c.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return Err(Error::InvalidMap("polygon is not convex".into()));
            }
        }
        if sign == 0.0 {
            return Err(Error::InvalidMap("degenerate polygon".into()));
        }
        Ok(Self { vertices })
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut pos = false;
        let mut neg = false;
        for i in 0..n {
            let c = cross(self.vertices[i], self.vertices[(i + 1) % n], p);
            pos |= c > 0.0;
            neg |= c < 0.0;
        }
        !(pos && neg)
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Distance along the ray `origin + t·(cos θ, sin θ)` to segment `a–b`.
fn ray_segment(origin: Point, theta: f64, a: Point, b: Point) -> Option<f64> {
    let (dx, dy) = (theta.cos(), theta.sin());
    let (ex, ey) = (b.x - a.x, b.y - a.y);
    let denom = dx * ey - dy * ex;
    if denom.abs() < 1e-15 {
        return None;
    }
    let (wx, wy) = (a.x - origin.x, a.y - origin.y);
    let t = (wx * ey - wy * ex) / denom;
    let s = (wx * dy - wy * dx) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub bounds: Rect,
    pub obstacles: Vec<Polygon>,
    pub start: Pose,
}

impl WorldMap {
    pub fn new(bounds: Rect, obstacles: Vec<Polygon>, start: Pose) -> Result<Self> {
        if !(bounds.max.x > bounds.min.x && bounds.max.y > bounds.min.y) {
            return Err(Error::InvalidMap("empty bounds".into()));
        }
        for (i, p) in obstacles.iter().enumerate() {
            let inside =
                |v: &Point| v.x >= bounds.min.x && v.x <= bounds.max.x && v.y >= bounds.min.y && v.y <= bounds.max.y;
            if !p.vertices.iter().all(inside) {
                return Err(Error::InvalidMap(format!("obstacle {i} leaves the bounds")));
            }
        }
        let map = Self { bounds, obstacles, start };
        if !map.is_free(Point::new(start.x, start.y)) {
            return Err(Error::InvalidMap("start pose collides".into()));
        }
        Ok(map)
    }

    /// Obstacle-free rectangle, large enough that no ray reaches a wall.
    pub fn open_field() -> Self {
        let bounds = Rect { min: Point::new(-100.0, -100.0), max: Point::new(100.0, 100.0) };
        Self { bounds, obstacles: vec![], start: Pose::new(0.0, 0.0, 0.0) }
    }

    /// A 6 m × 5 m room with furniture and a partition.
    pub fn home() -> Self {
        Self::parse(HOME_MAP).expect("built-in map is valid")
    }

    /// Built-in map by name: `home` or `open`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "home" => Some(Self::home()),
            "open" => Some(Self::open_field()),
            _ => None,
        }
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Nearest hit along one ray, walls included.
    pub fn cast(&self, origin: Point, theta: f64) -> Option<f64> {
        let corners = self.bounds.corners();
        let walls = (0..4).map(|i| (corners[i], corners[(i + 1) % 4]));
        walls
            .chain(self.obstacles.iter().flat_map(Polygon::edges))
            .filter_map(|(a, b)| ray_segment(origin, theta, a, b))
            .min_by(f64::total_cmp)
    }

    /// Text format: `#` comments; first line `x0,y0 x1,y1` bounds; then one
    /// polygon per line as space-separated `x,y` vertices; one start line
    /// `x y heading_deg`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bounds = None;
        let mut obstacles = Vec::new();
        let mut start = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::MapParse { line: i + 1, msg };
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
            if !line.contains(',') {
                let v: Vec<&str> = line.split_whitespace().collect();
                if v.len() != 3 {
                    return Err(err("start pose needs `x y heading_deg`".into()));
                }
                if start.is_some() {
                    return Err(err("second start pose".into()));
                }
                start = Some(Pose::new(num(v[0])?, num(v[1])?, num(v[2])?.to_radians()));
                continue;
            }
            let pts = line
                .split_whitespace()
                .map(|pair| {
                    let (a, b) = pair.split_once(',').ok_or_else(|| err(format!("vertex `{pair}`")))?;
                    Ok(Point::new(num(a)?, num(b)?))
                })
                .collect::<Result<Vec<_>>>()?;
            if bounds.is_none() {
                if pts.len() != 2 {
                    return Err(err("bounds line needs two corners".into()));
                }
                bounds = Some(Rect { min: pts[0], max: pts[1] });
            } else {
                obstacles.push(Polygon::new(pts).map_err(|e| err(e.to_string()))?);
            }
        }
        let bounds = bounds.ok_or_else(|| Error::InvalidMap("missing bounds line".into()))?;
        let start = start.ok_or_else(|| Error::InvalidMap("missing start pose".into()))?;
        Self::new(bounds, obstacles, start)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

const HOME_MAP: &str = "\
# living room, metres
0,0 6,5
# sofa
0.2,3.8 2.2,3.8 2.2,4.8 0.2,4.8
# table
3.0,2.0 4.0,2.0 4.0,2.8 3.0,2.8
# partition wall
4.8,0 5.0,0 5.0,2.5 4.8,2.5
1.0 1.0 90
";
