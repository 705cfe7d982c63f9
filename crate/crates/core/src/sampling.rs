//! Regions of the complex plane, sampling point sets and their weights.
//!
//! A [`SamplingSet`] is either a contour quadrature rule (weights approximate
//! `dz / 2π` along a counterclockwise curve) or a set of interpolation nodes
//! with barycentric weights. Both kinds feed the same moment machinery.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Relative tolerance used when deciding whether a point lies in a closed region.
pub const REGION_TOL: f64 = 1e-12;

/// Panel order of composite Gauss-Legendre contour rules.
pub const COMPOSITE_PANEL_ORDER: usize = 10;

/// Semi-minor to semi-major ratio of the flattened ellipse drawn around an
/// interval when a contour is needed.
pub const INTERVAL_ELLIPSE_ASPECT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Real interval `[a, b]`.
    Interval { a: f64, b: f64 },
    /// Axis-aligned ellipse `center + a cos t + i b sin t`.
    Ellipse { center: C64, a: f64, b: f64 },
    Rectangle { lower_left: C64, upper_right: C64 },
}

impl Region {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let r = Region::Interval { a, b };
        r.validate()?;
        Ok(r)
    }

    pub fn ellipse(center: C64, a: f64, b: f64) -> Result<Self> {
        let r = Region::Ellipse { center, a, b };
        r.validate()?;
        Ok(r)
    }

    pub fn rectangle(lower_left: C64, upper_right: C64) -> Result<Self> {
        let r = Region::Rectangle {
            lower_left,
            upper_right,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        match *self {
            Region::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::invalid(format!("interval requires a < b, got [{a}, {b}]")));
                }
            }
            Region::Ellipse { center, a, b } => {
                if !(finite(center) && a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return Err(Error::invalid(format!("ellipse requires positive semi-axes, got a = {a}, b = {b}")));
                }
            }
            Region::Rectangle {
                lower_left,
                upper_right,
            } => {
                if !(finite(lower_left)
                    && finite(upper_right)
                    && lower_left.re < upper_right.re
                    && lower_left.im < upper_right.im)
                {
                    return Err(Error::invalid(format!(
                        "rectangle corners must be strictly ordered, got {lower_left} and {upper_right}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> C64 {
        match *self {
            Region::Interval { a, b } => C64::new(0.5 * (a + b), 0.0),
            Region::Ellipse { center, .. } => center,
            Region::Rectangle {
                lower_left,
                upper_right,
            } => 0.5 * (lower_left + upper_right),
        }
    }

    /// Largest distance between two points of the region.
    pub fn diameter(&self) -> f64 {
        match *self {
            Region::Interval { a, b } => b - a,
            Region::Ellipse { a, b, .. } => 2.0 * a.max(b),
            Region::Rectangle {
                lower_left,
                upper_right,
            } => (upper_right - lower_left).norm(),
        }
    }

    /// Whether `z` lies in the closed region, with slack `tol · diameter`.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        let slack = tol * self.diameter();
        match *self {
            Region::Interval { a, b } => z.im.abs() <= slack && z.re >= a - slack && z.re <= b + slack,
            Region::Ellipse { center, a, b } => {
                let d = z - center;
                let x = d.re / a;
                let y = d.im / b;
                (x * x + y * y).sqrt() <= 1.0 + tol
            }
            Region::Rectangle {
                lower_left,
                upper_right,
            } => {
                z.re >= lower_left.re - slack
                    && z.re <= upper_right.re + slack
                    && z.im >= lower_left.im - slack
                    && z.im <= upper_right.im + slack
            }
        }
    }

    /// Affine map sending the region onto a set of unit size around the origin.
    pub fn moment_map(&self) -> MomentMap {
        MomentMap {
            center: self.center(),
            scale: 0.5 * self.diameter(),
        }
    }

    /// Endpoints of the longest axis: the interval itself, the major axis of
    /// an ellipse, or the midline along the longer side of a rectangle.
    pub fn major_segment(&self) -> (C64, C64) {
        match *self {
            Region::Interval { a, b } => (C64::new(a, 0.0), C64::new(b, 0.0)),
            Region::Ellipse { center, a, b } => {
                if a >= b {
                    (center - a, center + a)
                } else {
                    (center - C64::new(0.0, b), center + C64::new(0.0, b))
                }
            }
            Region::Rectangle {
                lower_left,
                upper_right,
            } => {
                let c = 0.5 * (lower_left + upper_right);
                let w = upper_right.re - lower_left.re;
                let h = upper_right.im - lower_left.im;
                if w >= h {
                    (C64::new(lower_left.re, c.im), C64::new(upper_right.re, c.im))
                } else {
                    (C64::new(c.re, lower_left.im), C64::new(c.re, upper_right.im))
                }
            }
        }
    }

    /// Fails with [`Error::SingularPoint`] if any of `points` lies in the region.
    pub fn check_excludes(&self, points: &[C64]) -> Result<()> {
        match points.iter().find(|&&z| self.contains(z, REGION_TOL)) {
            Some(&z) => Err(Error::SingularPoint { z }),
            None => Ok(()),
        }
    }

    /// Closed contour around the region with `n` quadrature points: the
    /// boundary for ellipses and rectangles, a flattened ellipse through the
    /// endpoints for intervals.
    pub fn default_contour(&self, n: usize) -> Result<SamplingSet> {
        match *self {
            Region::Interval { a, b } => {
                let half = 0.5 * (b - a);
                let ellipse = Region::ellipse(C64::new(0.5 * (a + b), 0.0), half, INTERVAL_ELLIPSE_ASPECT * half)?;
                ellipse_trapezoid(&ellipse, n)
            }
            Region::Ellipse { .. } => ellipse_trapezoid(self, n),
            Region::Rectangle { .. } => composite_rectangle_gauss(self, n),
        }
    }
}

/// `ζ = (z − center) / scale`; moments are formed in the local variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMap {
    pub center: C64,
    pub scale: f64,
}

impl MomentMap {
    pub const IDENTITY: MomentMap = MomentMap {
        center: C64::new(0.0, 0.0),
        scale: 1.0,
    };

    pub fn to_local(&self, z: C64) -> C64 {
        (z - self.center) / self.scale
    }

    pub fn to_global(&self, zeta: C64) -> C64 {
        self.center + self.scale * zeta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    ContourQuadrature,
    BarycentricInterpolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Capacity {
    /// A quarter of the diameter of the point set.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSet {
    points: Vec<C64>,
    weights: Vec<C64>,
    mode: SamplingMode,
    capacity: f64,
    region: Option<Region>,
}

impl SamplingSet {
    /// Interpolation nodes with barycentric weights from [`barycentric_weights`].
    pub fn barycentric(points: Vec<C64>, capacity: Capacity, region: Option<Region>) -> Result<Self> {
        let c = resolve_capacity(&points, capacity)?;
        let weights = barycentric_weights(&points, Capacity::Fixed(c))?;
        Self::new(points, weights, SamplingMode::BarycentricInterpolation, c, region)
    }

    /// Arbitrary points and weights; validates distinctness and region membership.
    pub fn new(
        points: Vec<C64>,
        weights: Vec<C64>,
        mode: SamplingMode,
        capacity: f64,
        region: Option<Region>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a sampling set needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(Error::dims(format!("{} weights", points.len()), format!("{} weights", weights.len())));
        }
        if let Some((i, _)) = points
            .iter()
            .chain(&weights)
            .enumerate()
            .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::invalid(format!("non-finite sampling data at position {i}")));
        }
        check_distinct(&points)?;
        if mode == SamplingMode::BarycentricInterpolation {
            if let Some(i) = weights.iter().position(|w| *w == C64::new(0.0, 0.0)) {
                return Err(Error::invalid(format!("barycentric weight {i} is zero")));
            }
        }
        if let Some(region) = &region {
            region.validate()?;
            if let Some(i) = points.iter().position(|&z| !region.contains(z, REGION_TOL)) {
                return Err(Error::invalid(format!("sampling point {i} ({}) lies outside the region", points[i])));
            }
        }
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::invalid(format!("capacity must be positive, got {capacity}")));
        }
        Ok(Self {
            points,
            weights,
            mode,
            capacity,
            region,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn region(&self) -> Option<&Region> {
        self.region.as_ref()
    }

    pub fn all_real(&self) -> bool {
        self.points.iter().all(|z| z.im == 0.0)
    }

    /// Map used for moments: the region's, or the bounding disc of the points.
    pub fn moment_map(&self) -> MomentMap {
        if let Some(r) = &self.region {
            return r.moment_map();
        }
        let n = self.points.len() as f64;
        let center = self.points.iter().sum::<C64>() / n;
        let scale = self.points.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
        MomentMap {
            center,
            scale: if scale > 0.0 { scale } else { 1.0 },
        }
    }

    /// Same set with every weight multiplied by `c`.
    pub fn with_scaled_weights(&self, c: C64) -> Result<Self> {
        if c == C64::new(0.0, 0.0) {
            return Err(Error::invalid("weight scale must be nonzero"));
        }
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= c);
        Ok(out)
    }

    /// Union with `extra` points; the result is an interpolation node set with
    /// barycentric weights recomputed at the same capacity.
    pub fn extended(&self, extra: &[C64]) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend_from_slice(extra);
        Self::barycentric(points, Capacity::Fixed(self.capacity), self.region)
    }
}

fn check_distinct(points: &[C64]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .re
            .total_cmp(&points[j].re)
            .then(points[i].im.total_cmp(&points[j].im))
    });
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicatePoints { first, second });
        }
    }
    Ok(())
}

fn resolve_capacity(points: &[C64], capacity: Capacity) -> Result<f64> {
    match capacity {
        Capacity::Fixed(c) if c > 0.0 && c.is_finite() => Ok(c),
        Capacity::Fixed(c) => Err(Error::invalid(format!("capacity must be positive, got {c}"))),
        Capacity::Auto => {
            let mut diam = 0.0f64;
            for (i, a) in points.iter().enumerate() {
                for b in &points[i + 1..] {
                    diam = diam.max((a - b).norm());
                }
            }
            Ok(if diam > 0.0 { 0.25 * diam } else { 1.0 })
        }
    }
}

/// Product of complex factors kept as mantissa times a power of two so that
/// intermediate results never overflow.
#[derive(Clone, Copy)]
struct ScaledProduct {
    mantissa: C64,
    exponent: i32,
}

impl ScaledProduct {
    fn one() -> Self {
        Self {
            mantissa: C64::new(1.0, 0.0),
            exponent: 0,
        }
    }

    fn mul(&mut self, f: C64) {
        self.mantissa *= f;
        let m = self.mantissa.norm();
        if m > 0.0 && !(2f64.powi(-500)..=2f64.powi(500)).contains(&m) {
            let e = m.log2().round() as i32;
            self.mantissa = self.mantissa * 2f64.powi(-e);
            self.exponent += e;
        }
    }

    fn log2_magnitude(&self) -> f64 {
        self.mantissa.norm().log2() + self.exponent as f64
    }

    /// `1 / product`, or `None` if it leaves `[1e-300, 1e300]`.
    fn reciprocal_in_range(&self) -> Option<C64> {
        let l = -self.log2_magnitude();
        let bound = 1e300f64.log2();
        if !(l.is_finite() && l.abs() <= bound) {
            return None;
        }
        let inv = 1.0 / self.mantissa;
        let e = -self.exponent;
        // Split the exponent so neither factor overflows on its own.
        let half = e / 2;
        Some(inv * 2f64.powi(half) * 2f64.powi(e - half))
    }

    fn value(&self) -> C64 {
        let half = self.exponent / 2;
        self.mantissa * 2f64.powi(half) * 2f64.powi(self.exponent - half)
    }
}

/// `ωᵢ = 1 / ∏_{j≠i} ((zᵢ − zⱼ) / C)`.
pub fn barycentric_weights(points: &[C64], capacity: Capacity) -> Result<Vec<C64>> {
    if points.is_empty() {
        return Err(Error::invalid("at least one point is required"));
    }
    check_distinct(points)?;
    let c = resolve_capacity(points, capacity)?;
    points
        .iter()
        .enumerate()
        .map(|(i, &zi)| {
            let mut p = ScaledProduct::one();
            for (j, &zj) in points.iter().enumerate() {
                if j != i {
                    p.mul((zi - zj) / c);
                }
            }
            p.reciprocal_in_range().ok_or(Error::Overflow {
                index: i,
                magnitude: 2f64.powf(-p.log2_magnitude()),
            })
        })
        .collect()
}

/// Chebyshev points of the first kind on an interval with the closed-form
/// weights `(−1)ⁱ sin((2i+1)π / 2N)`.
pub fn chebyshev_points(region: &Region, n: usize) -> Result<SamplingSet> {
    let Region::Interval { a, b } = *region else {
        return Err(Error::invalid("Chebyshev points need an interval region"));
    };
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let theta = (2 * i + 1) as f64 * PI / (2 * n) as f64;
        let x = (mid + half * theta.cos()).clamp(a, b);
        points.push(C64::new(x, 0.0));
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        weights.push(C64::new(sign * theta.sin(), 0.0));
    }
    SamplingSet::new(
        points,
        weights,
        SamplingMode::BarycentricInterpolation,
        0.25 * (b - a),
        Some(*region),
    )
}

/// Trapezoidal rule on an ellipse at angles `2π(j + ½)/N`.
pub fn ellipse_trapezoid(region: &Region, n: usize) -> Result<SamplingSet> {
    let Region::Ellipse { center, a, b } = *region else {
        return Err(Error::invalid("the trapezoidal rule needs an ellipse region"));
    };
    if n < 2 {
        return Err(Error::invalid("N must be at least 2"));
    }
    let nf = n as f64;
    let (points, weights) = (0..n)
        .map(|j| {
            let t = 2.0 * PI * (j as f64 + 0.5) / nf;
            let z = center + C64::new(a * t.cos(), b * t.sin());
            let dz = C64::new(-a * t.sin(), b * t.cos());
            (z, dz / nf)
        })
        .unzip();
    SamplingSet::new(points, weights, SamplingMode::ContourQuadrature, 0.5 * a.max(b), Some(*region))
}

/// Gauss-Legendre nodes and weights on `[−1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rectangle_sides(lower_left: C64, upper_right: C64) -> [(C64, C64); 4] {
    let lower_right = C64::new(upper_right.re, lower_left.im);
    let upper_left = C64::new(lower_left.re, upper_right.im);
    [
        (lower_left, lower_right),
        (lower_right, upper_right),
        (upper_right, upper_left),
        (upper_left, lower_left),
    ]
}

fn push_gauss_panel(start: C64, end: C64, order: usize, points: &mut Vec<C64>, weights: &mut Vec<C64>) {
    let (x, w) = gauss_legendre(order);
    let mid = 0.5 * (start + end);
    let half = 0.5 * (end - start);
    // Walk the panel from start to end.
    for k in (0..order).rev() {
        points.push(mid + half * x[k]);
        weights.push(half * w[k] / (2.0 * PI));
    }
}

/// Gauss-Legendre rules on the four sides, counterclockwise from the
/// lower-left corner.
pub fn rectangle_gauss(region: &Region, per_long_side: usize, per_short_side: usize) -> Result<SamplingSet> {
    let Region::Rectangle {
        lower_left,
        upper_right,
    } = *region
    else {
        return Err(Error::invalid("Gauss rules on sides need a rectangle region"));
    };
    if per_long_side == 0 || per_short_side == 0 {
        return Err(Error::invalid("each side needs at least one point"));
    }
    let width = upper_right.re - lower_left.re;
    let height = upper_right.im - lower_left.im;
    let (horizontal, vertical) = if width >= height {
        (per_long_side, per_short_side)
    } else {
        (per_short_side, per_long_side)
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (k, (s, e)) in rectangle_sides(lower_left, upper_right).into_iter().enumerate() {
        let order = if k % 2 == 0 { horizontal } else { vertical };
        push_gauss_panel(s, e, order, &mut points, &mut weights);
    }
    SamplingSet::new(points, weights, SamplingMode::ContourQuadrature, 0.25 * region.diameter(), Some(*region))
}

/// Composite Gauss-Legendre rule with about `total` points on the rectangle
/// boundary, split into panels of [`COMPOSITE_PANEL_ORDER`] nodes distributed
/// in proportion to side length.
pub fn composite_rectangle_gauss(region: &Region, total: usize) -> Result<SamplingSet> {
    let Region::Rectangle {
        lower_left,
        upper_right,
    } = *region
    else {
        return Err(Error::invalid("composite Gauss rules need a rectangle region"));
    };
    let order = COMPOSITE_PANEL_ORDER;
    let panels_total = (total / order).max(4);
    let sides = rectangle_sides(lower_left, upper_right);
    let lengths: Vec<f64> = sides.iter().map(|(s, e)| (e - s).norm()).collect();
    let perimeter: f64 = lengths.iter().sum();
    let shares: Vec<f64> = lengths.iter().map(|l| panels_total as f64 * l / perimeter).collect();
    let mut panels: Vec<usize> = shares.iter().map(|s| (s.floor() as usize).max(1)).collect();
    // Largest-remainder top-up until the panel budget is spent.
    while panels.iter().sum::<usize>() < panels_total {
        let k = (0..4)
            .max_by(|&i, &j| {
                (shares[i] - panels[i] as f64)
                    .total_cmp(&(shares[j] - panels[j] as f64))
                    .then(j.cmp(&i))
            })
            .expect("four sides");
        panels[k] += 1;
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for ((s, e), &p) in sides.iter().zip(&panels) {
        for q in 0..p {
            let a = s + (e - s) * (q as f64 / p as f64);
            let b = s + (e - s) * ((q + 1) as f64 / p as f64);
            push_gauss_panel(a, b, order, &mut points, &mut weights);
        }
    }
    SamplingSet::new(points, weights, SamplingMode::ContourQuadrature, 0.25 * region.diameter(), Some(*region))
}

/// Tensor grid of Chebyshev points inside a rectangle with barycentric
/// weights; an interior node set for two-dimensional regions.
pub fn tensor_chebyshev_grid(region: &Region, nx: usize, ny: usize) -> Result<SamplingSet> {
    let Region::Rectangle {
        lower_left,
        upper_right,
    } = *region
    else {
        return Err(Error::invalid("a tensor grid needs a rectangle region"));
    };
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    let cheb = |lo: f64, hi: f64, m: usize| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let t = ((2 * i + 1) as f64 * PI / (2 * m) as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * t
            })
            .collect()
    };
    let xs = cheb(lower_left.re, upper_right.re, nx);
    let ys = cheb(lower_left.im, upper_right.im, ny);
    let points = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| C64::new(x, y)))
        .collect();
    SamplingSet::barycentric(points, Capacity::Auto, Some(*region))
}

fn check_barycentric(set: &SamplingSet, alpha: usize) -> Result<()> {
    if set.mode() != SamplingMode::BarycentricInterpolation {
        return Err(Error::invalid("operation requires a barycentric sampling set"));
    }
    if alpha >= set.len() {
        return Err(Error::invalid(format!("order {alpha} must be below N = {}", set.len())));
    }
    Ok(())
}

/// `φ_{α,1}(z) = Σᵢ ωᵢ zᵢ^α / (zᵢ − z)`.
pub fn phi_alpha_1(set: &SamplingSet, alpha: usize, z: C64) -> Result<C64> {
    check_barycentric(set, alpha)?;
    let mut terms = Vec::with_capacity(set.len());
    for (i, (&zi, &wi)) in set.points().iter().zip(set.weights()).enumerate() {
        let d = zi - z;
        if d.norm() <= 4.0 * f64::EPSILON * zi.norm().max(1.0) {
            return Err(Error::PointCollision { index: i });
        }
        terms.push(wi * zi.powu(alpha as u32) / d);
    }
    Ok(pairwise_sum(&terms))
}

/// Capacity-scaled node polynomial `∏ᵢ (z − zᵢ) / C^(N−1)`, the normalization
/// matching weights from [`barycentric_weights`].
pub fn node_polynomial(set: &SamplingSet, z: C64) -> C64 {
    let c = set.capacity();
    let mut p = ScaledProduct::one();
    for &zi in set.points() {
        p.mul((z - zi) / c);
    }
    p.mul(C64::new(c, 0.0));
    p.value()
}

/// `Σᵢ ωᵢ zᵢ^α f(zᵢ)`.
pub fn annihilation_sum(set: &SamplingSet, f: impl Fn(C64) -> C64, alpha: usize) -> Result<C64> {
    check_barycentric(set, alpha)?;
    let terms: Vec<C64> = set
        .points()
        .iter()
        .zip(set.weights())
        .map(|(&z, &w)| w * z.powu(alpha as u32) * f(z))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Pairwise (cascade) summation with a fixed association order.
pub fn pairwise_sum(terms: &[C64]) -> C64 {
    match terms.len() {
        0 => C64::new(0.0, 0.0),
        1 => terms[0],
        n if n <= 8 => terms.iter().sum(),
        n => {
            let (l, r) = terms.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
