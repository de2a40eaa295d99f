use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::boundary::BoundarySampling;
use crate::solver::{DNPair, FieldGrid};
use crate::C64;

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(hash: &str, columns: &str) -> String {
    format!("# config {hash}\n# {columns}\n")
}

pub fn field_csv(hash: &str, grid: &FieldGrid) -> String {
    let mut s = header(hash, "x,y,re,im");
    for (p, v) in grid.points.iter().zip(&grid.total) {
        let _ = writeln!(s, "{},{},{},{}", num(p.x), num(p.y), num(v.re), num(v.im));
    }
    s
}

pub fn boundary_csv(hash: &str, boundary: &BoundarySampling, trace: &DNPair) -> String {
    let mut s = header(hash, "s,x,y,nx,ny,re_u,im_u,re_un,im_un");
    let arc = boundary.arclength_coords();
    for i in 0..boundary.len() {
        let (p, n) = (boundary.nodes[i], boundary.normals[i]);
        let (u, un) = (trace.dirichlet[i], trace.neumann[i]);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            num(arc[i]),
            num(p.x),
            num(p.y),
            num(n.x),
            num(n.y),
            num(u.re),
            num(u.im),
            num(un.re),
            num(un.im)
        );
    }
    s
}

pub fn probes_csv(hash: &str, points: &[crate::Point], values: &[C64]) -> String {
    let mut s = header(hash, "x,y,re,im");
    for (p, v) in points.iter().zip(values) {
        let _ = writeln!(s, "{},{},{},{}", num(p.x), num(p.y), num(v.re), num(v.im));
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::discretize_circle;
    use crate::geometry::Point;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn field_rows_follow_the_header() {
        let g = FieldGrid { n: 1, points: vec![Point::new(0.5, -0.25)], total: vec![C64::new(1.0, 2.0)] };
        let s = field_csv("abc", &g);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# config abc");
        assert_eq!(lines[1], "# x,y,re,im");
        assert_eq!(lines[2].split(',').count(), 4);
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn boundary_rows_have_nine_columns() {
        let b = discretize_circle(Point::default(), 1.0, 8).unwrap();
        let s = boundary_csv("h", &b, &DNPair::zeros(8));
        assert_eq!(s.lines().count(), 10);
        assert!(s.lines().skip(2).all(|l| l.split(',').count() == 9));
    }
}
