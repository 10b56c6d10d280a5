//! Lower convex hulls with exact rational vertices, slope multisets and
//! plain-text emitters.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::fmt_rational;
use crate::cyclo::{approx, ExtRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolygonError {
    #[error("no finite points")]
    Empty,
    #[error("polygons have different widths")]
    WidthMismatch,
    #[error("abscissae must be strictly increasing")]
    Unordered,
}

pub type Point = (BigRational, BigRational);

/// Piecewise-linear convex function given by its vertices, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NewtonPolygon {
    vertices: Vec<Point>,
}

/// Slopes with their horizontal multiplicities, sorted by slope.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SlopeMultiset {
    entries: Vec<(BigRational, BigRational)>,
}

fn cross(o: &Point, a: &Point, b: &Point) -> BigRational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Lower convex hull of points `(x_i, y_i)` with finite `y_i`.
///
/// Points with infinite ordinate are skipped. Abscissae must be strictly
/// increasing.
pub fn hull_from_values(points: &[(BigRational, ExtRational)]) -> Result<NewtonPolygon, PolygonError> {
    let finite: Vec<Point> = points
        .iter()
        .filter_map(|(x, y)| y.finite().map(|y| (x.clone(), y.clone())))
        .collect();
    lower_hull(finite)
}

/// Lower hull of finite points via a monotone chain.
pub fn lower_hull(points: Vec<Point>) -> Result<NewtonPolygon, PolygonError> {
    if points.is_empty() {
        return Err(PolygonError::Empty);
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(PolygonError::Unordered);
    }
    let mut hull: Vec<Point> = Vec::with_capacity(points.len());
    for pt in points {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &pt).is_positive() {
            hull.pop();
        }
        hull.push(pt);
    }
    Ok(NewtonPolygon { vertices: hull })
}

/// Integer abscissae helper: hull of (i, v_i) for i = 0..len.
pub fn hull_of_sequence(values: &[ExtRational]) -> Result<NewtonPolygon, PolygonError> {
    let pts: Vec<(BigRational, ExtRational)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (BigRational::from_integer(BigInt::from(i)), v.clone()))
        .collect();
    hull_from_values(&pts)
}

impl NewtonPolygon {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    pub fn width(&self) -> BigRational {
        &self.end().0 - &self.start().0
    }

    pub fn slopes(&self) -> SlopeMultiset {
        let mut ms = SlopeMultiset::default();
        for w in self.vertices.windows(2) {
            let dx = &w[1].0 - &w[0].0;
            let s = (&w[1].1 - &w[0].1) / &dx;
            ms.push(s, dx);
        }
        ms
    }

    /// Value at abscissa `x` (must lie in range).
    pub fn eval(&self, x: &BigRational) -> BigRational {
        let v = &self.vertices;
        assert!(x >= &v[0].0 && x <= &v[v.len() - 1].0, "abscissa out of range");
        for w in v.windows(2) {
            if x <= &w[1].0 {
                let t = (x - &w[0].0) / (&w[1].0 - &w[0].0);
                return &w[0].1 + t * (&w[1].1 - &w[0].1);
            }
        }
        v[0].1.clone()
    }

    /// True when `self` lies on or above `other` everywhere on the common range.
    pub fn lies_above(&self, other: &NewtonPolygon) -> Result<bool, PolygonError> {
        if self.start().0 != other.start().0 || self.end().0 != other.end().0 {
            return Err(PolygonError::WidthMismatch);
        }
        let xs = self.vertices.iter().chain(other.vertices.iter()).map(|v| &v.0);
        for x in xs {
            if self.eval(x) < other.eval(x) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Scales both coordinates by `k`; every slope keeps its value and its
    /// multiplicity is multiplied by `k`.
    pub fn dilate(&self, k: u64) -> NewtonPolygon {
        let k = BigRational::from_integer(BigInt::from(k));
        NewtonPolygon {
            vertices: self.vertices.iter().map(|(x, y)| (x * &k, y * &k)).collect(),
        }
    }

    /// The part of the polygon made of slopes strictly below 1.
    pub fn truncate_lt_one(&self) -> NewtonPolygon {
        let one = BigRational::one();
        let mut out = vec![self.vertices[0].clone()];
        for w in self.vertices.windows(2) {
            let s = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
            if s >= one {
                break;
            }
            out.push(w[1].clone());
        }
        NewtonPolygon { vertices: out }
    }

    /// `{"vertices": [[x, "num/den"], ...], "slopes": [["num/den", mult], ...]}`.
    pub fn to_json(&self) -> Value {
        let vertices: Vec<Value> = self
            .vertices
            .iter()
            .map(|(x, y)| json!([json_number(x), fmt_rational(y)]))
            .collect();
        json!({ "vertices": vertices, "slopes": self.slopes().to_json() })
    }

    /// CSV rows `x,y_num,y_den` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y_num,y_den\n");
        for (x, y) in &self.vertices {
            let xs = if x.is_integer() { x.numer().to_string() } else { format!("{}/{}", x.numer(), x.denom()) };
            let _ = writeln!(s, "{},{},{}", xs, y.numer(), y.denom());
        }
        s
    }

    /// Standalone SVG drawing of one or more polygons sharing axes.
    pub fn to_svg(polys: &[(&str, &NewtonPolygon)]) -> String {
        let (w, h, m) = (480.0, 320.0, 40.0);
        let mut xmax: f64 = 1.0;
        let mut ymax: f64 = 1.0;
        for (_, np) in polys {
            for (x, y) in &np.vertices {
                xmax = xmax.max(approx(x));
                ymax = ymax.max(approx(y));
            }
        }
        let sx = |x: f64| m + x / xmax * (w - 2.0 * m);
        let sy = |y: f64| h - m - y / ymax * (h - 2.0 * m);
        let colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            sx(0.0), sy(0.0), sx(xmax), sy(0.0)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            sx(0.0), sy(0.0), sx(0.0), sy(ymax)
        );
        for i in 0..=(xmax.ceil() as i64) {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
                sx(i as f64), sy(0.0) + 14.0, i
            );
        }
        for (k, (label, np)) in polys.iter().enumerate() {
            let c = colours[k % colours.len()];
            let pts: Vec<String> = np
                .vertices
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", sx(approx(x)), sy(approx(y))))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" points="{}"/>"#, pts.join(" "));
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" fill="{c}">{label}</text>"#,
                m + 4.0, m + 14.0 * (k as f64 + 1.0)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

impl SlopeMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `mult` copies of `slope`, merging with an equal slope if present.
    pub fn push(&mut self, slope: BigRational, mult: BigRational) {
        if mult.is_zero() {
            return;
        }
        match self.entries.binary_search_by(|(s, _)| s.cmp(&slope)) {
            Ok(i) => self.entries[i].1 += mult,
            Err(i) => self.entries.insert(i, (slope, mult)),
        }
    }

    /// `[["num/den", mult], ...]`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|(s, m)| json!([fmt_rational(s), json_number(m)]))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(BigRational, BigRational)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_multiplicity(&self) -> BigRational {
        self.entries.iter().map(|(_, m)| m.clone()).sum()
    }

    pub fn union(&self, other: &SlopeMultiset) -> SlopeMultiset {
        let mut out = self.clone();
        for (s, m) in &other.entries {
            out.push(s.clone(), m.clone());
        }
        out
    }

    pub fn repeat(&self, k: u64) -> SlopeMultiset {
        let k = BigRational::from_integer(BigInt::from(k));
        SlopeMultiset { entries: self.entries.iter().map(|(s, m)| (s.clone(), m * &k)).collect() }
    }

    /// Keeps only slopes strictly below `bound`.
    pub fn below(&self, bound: &BigRational) -> SlopeMultiset {
        SlopeMultiset { entries: self.entries.iter().filter(|(s, _)| s < bound).cloned().collect() }
    }

    /// Polygon from the origin with these slopes in increasing order.
    pub fn to_polygon(&self) -> NewtonPolygon {
        let mut x = BigRational::zero();
        let mut y = BigRational::zero();
        let mut vertices = vec![(x.clone(), y.clone())];
        for (s, m) in &self.entries {
            x += m;
            y += s * m;
            vertices.push((x.clone(), y.clone()));
        }
        NewtonPolygon { vertices }
    }
}

/// Integers become JSON numbers, other rationals `num/den` strings.
pub fn json_number(x: &BigRational) -> Value {
    match (x.is_integer(), i64::try_from(x.numer())) {
        (true, Ok(n)) => json!(n),
        _ => json!(fmt_rational(x)),
    }
}

/// Polygon from the origin with the given slopes, each of multiplicity one
/// unless repeated.
pub fn polygon_from_slopes(slopes: &[(BigRational, BigRational)]) -> NewtonPolygon {
    let mut ms = SlopeMultiset::new();
    for (s, m) in slopes {
        ms.push(s.clone(), m.clone());
    }
    ms.to_polygon()
}

pub fn union_slopes(sets: &[SlopeMultiset]) -> SlopeMultiset {
    sets.iter().fold(SlopeMultiset::new(), |acc, s| acc.union(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    fn pt(x: i64, n: i64, d: i64) -> Point {
        (rat_int(x), rat(n, d))
    }

    #[test]
    fn hodge_polygon_d3() {
        let vals = vec![
            ExtRational::Finite(rat(0, 1)),
            ExtRational::Finite(rat(1, 3)),
            ExtRational::Finite(rat(1, 1)),
        ];
        let np = hull_of_sequence(&vals).unwrap();
        assert_eq!(np.vertices(), &[pt(0, 0, 1), pt(1, 1, 3), pt(2, 1, 1)]);
        let s = np.slopes();
        assert_eq!(s.entries(), &[(rat(1, 3), rat_int(1)), (rat(2, 3), rat_int(1))]);
    }

    #[test]
    fn collinear_and_infinite_points_dropped() {
        let vals = vec![
            ExtRational::Finite(rat_int(0)),
            ExtRational::Infinity,
            ExtRational::Finite(rat_int(1)),
            ExtRational::Finite(rat(3, 2)),
        ];
        let np = hull_of_sequence(&vals).unwrap();
        assert_eq!(np.vertices(), &[pt(0, 0, 1), pt(3, 3, 2)]);
        assert_eq!(np.slopes().entries(), &[(rat(1, 2), rat_int(3))]);
    }

    #[test]
    fn lies_above_and_truncation() {
        let lo = polygon_from_slopes(&[(rat(1, 3), rat_int(1)), (rat(2, 3), rat_int(1))]);
        let hi = polygon_from_slopes(&[(rat(1, 2), rat_int(2))]);
        assert!(hi.lies_above(&lo).unwrap());
        assert!(!lo.lies_above(&hi).unwrap());
        let t = polygon_from_slopes(&[(rat(1, 2), rat_int(1)), (rat_int(1), rat_int(2))]).truncate_lt_one();
        assert_eq!(t.vertices(), &[pt(0, 0, 1), pt(1, 1, 2)]);
        let short = polygon_from_slopes(&[(rat(1, 2), rat_int(1))]);
        assert_eq!(short.lies_above(&lo), Err(PolygonError::WidthMismatch));
    }

    #[test]
    fn dilation_repeats_slopes() {
        let np = polygon_from_slopes(&[(rat(1, 3), rat_int(1)), (rat(2, 3), rat_int(1))]);
        assert_eq!(np.dilate(3).slopes(), np.slopes().repeat(3));
    }

    #[test]
    fn csv_format() {
        let np = polygon_from_slopes(&[(rat(1, 3), rat_int(1)), (rat(2, 3), rat_int(1))]);
        assert_eq!(np.to_csv(), "x,y_num,y_den\n0,0,1\n1,1,3\n2,1,1\n");
        assert!(NewtonPolygon::to_svg(&[("np", &np)]).starts_with("<svg"));
    }
}
