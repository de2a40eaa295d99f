use std::ops::{Add, Mul, Neg, Sub};

/// A point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        debug_assert!(x1 > x0 && y1 > y0);
        Self { x0, y0, x1, y1 }
    }

    /// Square with lower-left corner `(x0, y0)`.
    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Self::new(x0, y0, x0 + side, y0 + side)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn is_square(&self) -> bool {
        (self.width() - self.height()).abs() <= 1e-12 * self.width()
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Containment with an absolute slack on every side.
    pub fn contains_with(&self, p: Point, slack: f64) -> bool {
        p.x >= self.x0 - slack && p.x <= self.x1 + slack && p.y >= self.y0 - slack && p.y <= self.y1 + slack
    }

    /// Distance from an interior point to the nearest side (negative outside).
    pub fn inner_distance(&self, p: Point) -> f64 {
        (p.x - self.x0).min(self.x1 - p.x).min(p.y - self.y0).min(self.y1 - p.y)
    }

    /// Euclidean distance from `p` to the closed rectangle (zero inside).
    pub fn outer_distance(&self, p: Point) -> f64 {
        let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
        dx.hypot(dy)
    }

    /// Left and right halves.
    pub fn split_x(&self) -> (Rect, Rect) {
        let xm = 0.5 * (self.x0 + self.x1);
        (Rect::new(self.x0, self.y0, xm, self.y1), Rect::new(xm, self.y0, self.x1, self.y1))
    }

    /// Bottom and top halves.
    pub fn split_y(&self) -> (Rect, Rect) {
        let ym = 0.5 * (self.y0 + self.y1);
        (Rect::new(self.x0, self.y0, self.x1, ym), Rect::new(self.x0, ym, self.x1, self.y1))
    }

    /// Quadrants in counterclockwise order starting south-west.
    pub fn quadrants(&self) -> [Rect; 4] {
        let (l, r) = self.split_x();
        let (sw, nw) = l.split_y();
        let (se, ne) = r.split_y();
        [sw, se, ne, nw]
    }
}
