//! Implicit subsets of R^{2d} as constructive-solid-geometry expression trees.
//!
//! Sets are never meshed: the capacity pipeline only needs point membership
//! and a conservative cell-containment test on grid nodes. Expressions are
//! immutable, serialize to a canonical JSON form, and hash into cache keys.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::PointCd;

/// Expression tree over geometric primitives and boolean combinators.
///
/// The `open` flag on a primitive controls whether its boundary belongs to the
/// set; combinators inherit boundary behaviour from their children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetExpr {
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        open: bool,
    },
    #[serde(rename = "box")]
    Cuboid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        open: bool,
    },
    /// `{ x : normal . x <= offset }` (strict when open).
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
        #[serde(default)]
        open: bool,
    },
    Union(Vec<SetExpr>),
    Intersection(Vec<SetExpr>),
    Difference {
        minuend: Box<SetExpr>,
        subtrahend: Box<SetExpr>,
    },
    /// Complement of `of` within the closed box `[bbox_lo, bbox_hi]`.
    Complement {
        of: Box<SetExpr>,
        bbox_lo: Vec<f64>,
        bbox_hi: Vec<f64>,
    },
    Translate {
        by: Vec<f64>,
        of: Box<SetExpr>,
    },
    /// Uniform scaling about the origin by a positive factor.
    Scale {
        factor: f64,
        of: Box<SetExpr>,
    },
}

/// Conservative classification of an axis-aligned box against a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellClass {
    /// The box provably lies within the closure of the set.
    Inside,
    /// The box provably misses the set.
    Outside,
    /// Neither could be established.
    Straddle,
}

/// An implicit set: a validated expression plus its cached bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitSet {
    expr: SetExpr,
    dim: usize,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
}

impl ImplicitSet {
    pub fn from_expr(expr: SetExpr, dim: usize) -> Result<ImplicitSet> {
        validate(&expr, dim)?;
        let (bbox_lo, bbox_hi) = bbox(&expr, dim);
        Ok(ImplicitSet { expr, dim, bbox_lo, bbox_hi })
    }

    pub fn ball(center: &PointCd, radius: f64) -> Result<ImplicitSet> {
        ImplicitSet::from_expr(
            SetExpr::Ball { center: center.coords().to_vec(), radius, open: false },
            center.real_dim(),
        )
    }

    pub fn open_ball(center: &PointCd, radius: f64) -> Result<ImplicitSet> {
        ImplicitSet::from_expr(
            SetExpr::Ball { center: center.coords().to_vec(), radius, open: true },
            center.real_dim(),
        )
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<ImplicitSet> {
        let dim = lo.len();
        ImplicitSet::from_expr(SetExpr::Cuboid { lo, hi, open: false }, dim)
    }

    /// The empty set (a union of nothing).
    pub fn empty(dim: usize) -> ImplicitSet {
        ImplicitSet {
            expr: SetExpr::Union(Vec::new()),
            dim,
            bbox_lo: vec![0.0; dim],
            bbox_hi: vec![0.0; dim],
        }
    }

    pub fn union(sets: Vec<ImplicitSet>) -> Result<ImplicitSet> {
        let dim = sets.first().map(|s| s.dim).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Geometry("union of zero sets needs a dimension; use empty()".into()));
        }
        ImplicitSet::from_expr(SetExpr::Union(sets.into_iter().map(|s| s.expr).collect()), dim)
    }

    pub fn intersection(sets: Vec<ImplicitSet>) -> Result<ImplicitSet> {
        let dim = sets.first().map(|s| s.dim).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Geometry("intersection needs at least one set".into()));
        }
        ImplicitSet::from_expr(
            SetExpr::Intersection(sets.into_iter().map(|s| s.expr).collect()),
            dim,
        )
    }

    pub fn difference(minuend: ImplicitSet, subtrahend: ImplicitSet) -> Result<ImplicitSet> {
        let dim = minuend.dim;
        ImplicitSet::from_expr(
            SetExpr::Difference {
                minuend: Box::new(minuend.expr),
                subtrahend: Box::new(subtrahend.expr),
            },
            dim,
        )
    }

    pub fn translate(self, by: Vec<f64>) -> Result<ImplicitSet> {
        let dim = self.dim;
        ImplicitSet::from_expr(SetExpr::Translate { by, of: Box::new(self.expr) }, dim)
    }

    pub fn scale(self, factor: f64) -> Result<ImplicitSet> {
        let dim = self.dim;
        ImplicitSet::from_expr(SetExpr::Scale { factor, of: Box::new(self.expr) }, dim)
    }

    pub fn expr(&self) -> &SetExpr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bbox(&self) -> (&[f64], &[f64]) {
        (&self.bbox_lo, &self.bbox_hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.bbox_lo.iter().all(|v| v.is_finite()) && self.bbox_hi.iter().all(|v| v.is_finite())
    }

    /// Point membership under the expression semantics.
    pub fn contains(&self, point: &PointCd) -> Result<bool> {
        if point.real_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: point.real_dim() });
        }
        Ok(contains_rec(&self.expr, point.coords()))
    }

    /// Conservative classification of the closed box `[blo, bhi]`.
    pub fn classify_cell(&self, blo: &[f64], bhi: &[f64]) -> CellClass {
        classify_rec(&self.expr, blo, bhi)
    }

    /// Candidate member points used to detect nonempty sets that rasterize
    /// empty: primitive anchors (ball and box centers) mapped through the
    /// enclosing transforms, plus the bounding-box center.
    pub fn anchor_points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        anchors_rec(&self.expr, &mut |p| out.push(p));
        if self.is_bounded() {
            let c: Vec<f64> = self
                .bbox_lo
                .iter()
                .zip(&self.bbox_hi)
                .map(|(l, u)| 0.5 * (l + u))
                .collect();
            out.push(c);
        }
        out
    }

    /// Canonical JSON rendering: sorted keys, every number as a decimal
    /// string (shortest round-trip form). The SHA-256 of this string keys the
    /// capacity cache.
    pub fn canonical_json(&self) -> String {
        let mut s = String::new();
        canonical_rec(&self.expr, &mut s);
        s
    }

    pub fn canonical_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        crate::util::hex_string(&hasher.finalize())
    }
}

fn validate(expr: &SetExpr, dim: usize) -> Result<()> {
    let want = |v: &[f64], what: &str| -> Result<()> {
        if v.len() != dim {
            return Err(Error::Geometry(format!(
                "{what} has {} coordinates, expected {dim}",
                v.len()
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry(format!("{what} has non-finite coordinates")));
        }
        Ok(())
    };
    match expr {
        SetExpr::Ball { center, radius, .. } => {
            want(center, "ball center")?;
            if !(*radius > 0.0) || !radius.is_finite() {
                return Err(Error::Geometry(format!("ball radius {radius} must be positive")));
            }
        }
        SetExpr::Cuboid { lo, hi, .. } => {
            want(lo, "box lo")?;
            want(hi, "box hi")?;
            if lo.iter().zip(hi).any(|(l, u)| !(l < u)) {
                return Err(Error::Geometry("box must satisfy lo < hi on every axis".into()));
            }
        }
        SetExpr::Halfspace { normal, offset, .. } => {
            want(normal, "halfspace normal")?;
            if normal.iter().all(|c| *c == 0.0) {
                return Err(Error::Geometry("halfspace normal must be nonzero".into()));
            }
            if !offset.is_finite() {
                return Err(Error::Geometry("halfspace offset must be finite".into()));
            }
        }
        SetExpr::Union(xs) | SetExpr::Intersection(xs) => {
            for x in xs {
                validate(x, dim)?;
            }
        }
        SetExpr::Difference { minuend, subtrahend } => {
            validate(minuend, dim)?;
            validate(subtrahend, dim)?;
        }
        SetExpr::Complement { of, bbox_lo, bbox_hi } => {
            want(bbox_lo, "complement bbox lo")?;
            want(bbox_hi, "complement bbox hi")?;
            validate(of, dim)?;
        }
        SetExpr::Translate { by, of } => {
            want(by, "translation vector")?;
            validate(of, dim)?;
        }
        SetExpr::Scale { factor, of } => {
            if !(*factor > 0.0) || !factor.is_finite() {
                return Err(Error::Geometry(format!("scale factor {factor} must be positive")));
            }
            validate(of, dim)?;
        }
    }
    Ok(())
}

fn bbox(expr: &SetExpr, dim: usize) -> (Vec<f64>, Vec<f64>) {
    match expr {
        SetExpr::Ball { center, radius, .. } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
        SetExpr::Cuboid { lo, hi, .. } => (lo.clone(), hi.clone()),
        SetExpr::Halfspace { .. } => {
            (vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
        }
        SetExpr::Union(xs) => {
            if xs.is_empty() {
                return (vec![0.0; dim], vec![0.0; dim]);
            }
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for x in xs {
                let (l, u) = bbox(x, dim);
                for a in 0..dim {
                    lo[a] = lo[a].min(l[a]);
                    hi[a] = hi[a].max(u[a]);
                }
            }
            (lo, hi)
        }
        SetExpr::Intersection(xs) => {
            let mut lo = vec![f64::NEG_INFINITY; dim];
            let mut hi = vec![f64::INFINITY; dim];
            for x in xs {
                let (l, u) = bbox(x, dim);
                for a in 0..dim {
                    lo[a] = lo[a].max(l[a]);
                    hi[a] = hi[a].min(u[a]);
                }
            }
            (lo, hi)
        }
        SetExpr::Difference { minuend, .. } => bbox(minuend, dim),
        SetExpr::Complement { bbox_lo, bbox_hi, .. } => (bbox_lo.clone(), bbox_hi.clone()),
        SetExpr::Translate { by, of } => {
            let (l, u) = bbox(of, dim);
            (
                l.iter().zip(by).map(|(a, b)| a + b).collect(),
                u.iter().zip(by).map(|(a, b)| a + b).collect(),
            )
        }
        SetExpr::Scale { factor, of } => {
            let (l, u) = bbox(of, dim);
            (l.iter().map(|a| a * factor).collect(), u.iter().map(|a| a * factor).collect())
        }
    }
}

fn contains_rec(expr: &SetExpr, p: &[f64]) -> bool {
    match expr {
        SetExpr::Ball { center, radius, open } => {
            let d2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
            if *open {
                d2 < radius * radius
            } else {
                d2 <= radius * radius
            }
        }
        SetExpr::Cuboid { lo, hi, open } => p.iter().zip(lo.iter().zip(hi)).all(|(x, (l, u))| {
            if *open {
                l < x && x < u
            } else {
                l <= x && x <= u
            }
        }),
        SetExpr::Halfspace { normal, offset, open } => {
            let s: f64 = p.iter().zip(normal).map(|(a, n)| a * n).sum();
            if *open {
                s < *offset
            } else {
                s <= *offset
            }
        }
        SetExpr::Union(xs) => xs.iter().any(|x| contains_rec(x, p)),
        SetExpr::Intersection(xs) => xs.iter().all(|x| contains_rec(x, p)),
        SetExpr::Difference { minuend, subtrahend } => {
            contains_rec(minuend, p) && !contains_rec(subtrahend, p)
        }
        SetExpr::Complement { of, bbox_lo, bbox_hi } => {
            let in_box = p
                .iter()
                .zip(bbox_lo.iter().zip(bbox_hi))
                .all(|(x, (l, u))| l <= x && x <= u);
            in_box && !contains_rec(of, p)
        }
        SetExpr::Translate { by, of } => {
            let q: Vec<f64> = p.iter().zip(by).map(|(a, b)| a - b).collect();
            contains_rec(of, &q)
        }
        SetExpr::Scale { factor, of } => {
            let q: Vec<f64> = p.iter().map(|a| a / factor).collect();
            contains_rec(of, &q)
        }
    }
}

/// Conservative cell classification. `Inside` certifies the box lies in the
/// closure of the set, `Outside` certifies disjointness; combinator rules only
/// propagate certainty, so a `Straddle` answer is always safe.
fn classify_rec(expr: &SetExpr, blo: &[f64], bhi: &[f64]) -> CellClass {
    use CellClass::*;
    match expr {
        SetExpr::Ball { center, radius, .. } => {
            let mut dmin2 = 0.0;
            let mut dmax2 = 0.0;
            for ((&l, &u), &c) in blo.iter().zip(bhi).zip(center) {
                let lo_d = l - c;
                let hi_d = u - c;
                let near = if lo_d > 0.0 {
                    lo_d
                } else if hi_d < 0.0 {
                    -hi_d
                } else {
                    0.0
                };
                let far = lo_d.abs().max(hi_d.abs());
                dmin2 += near * near;
                dmax2 += far * far;
            }
            let r2 = radius * radius;
            if dmax2 <= r2 {
                Inside
            } else if dmin2 > r2 {
                Outside
            } else {
                Straddle
            }
        }
        SetExpr::Cuboid { lo, hi, .. } => {
            if blo.iter().zip(lo).all(|(b, l)| b >= l) && bhi.iter().zip(hi).all(|(b, u)| b <= u) {
                Inside
            } else if blo.iter().zip(hi).any(|(b, u)| b > u)
                || bhi.iter().zip(lo).any(|(b, l)| b < l)
            {
                Outside
            } else {
                Straddle
            }
        }
        SetExpr::Halfspace { normal, offset, .. } => {
            let mut smin = 0.0;
            let mut smax = 0.0;
            for ((&l, &u), &n) in blo.iter().zip(bhi).zip(normal) {
                smin += (n * l).min(n * u);
                smax += (n * l).max(n * u);
            }
            if smax <= *offset {
                Inside
            } else if smin > *offset {
                Outside
            } else {
                Straddle
            }
        }
        SetExpr::Union(xs) => {
            if xs.is_empty() {
                return Outside;
            }
            let mut all_outside = true;
            for x in xs {
                match classify_rec(x, blo, bhi) {
                    Inside => return Inside,
                    Outside => {}
                    Straddle => all_outside = false,
                }
            }
            if all_outside {
                Outside
            } else {
                Straddle
            }
        }
        SetExpr::Intersection(xs) => {
            let mut all_inside = true;
            for x in xs {
                match classify_rec(x, blo, bhi) {
                    Outside => return Outside,
                    Inside => {}
                    Straddle => all_inside = false,
                }
            }
            if all_inside {
                Inside
            } else {
                Straddle
            }
        }
        SetExpr::Difference { minuend, subtrahend } => {
            let a = classify_rec(minuend, blo, bhi);
            let b = classify_rec(subtrahend, blo, bhi);
            match (a, b) {
                (Inside, Outside) => Inside,
                (Outside, _) | (_, Inside) => Outside,
                _ => Straddle,
            }
        }
        SetExpr::Complement { of, bbox_lo, bbox_hi } => {
            let in_box = blo.iter().zip(bbox_lo).all(|(b, l)| b >= l)
                && bhi.iter().zip(bbox_hi).all(|(b, u)| b <= u);
            let out_box = blo.iter().zip(bbox_hi).any(|(b, u)| b > u)
                || bhi.iter().zip(bbox_lo).any(|(b, l)| b < l);
            match classify_rec(of, blo, bhi) {
                CellClass::Outside if in_box => Inside,
                CellClass::Inside => Outside,
                _ if out_box => Outside,
                _ => Straddle,
            }
        }
        SetExpr::Translate { by, of } => {
            let l: Vec<f64> = blo.iter().zip(by).map(|(a, b)| a - b).collect();
            let u: Vec<f64> = bhi.iter().zip(by).map(|(a, b)| a - b).collect();
            classify_rec(of, &l, &u)
        }
        SetExpr::Scale { factor, of } => {
            let l: Vec<f64> = blo.iter().map(|a| a / factor).collect();
            let u: Vec<f64> = bhi.iter().map(|a| a / factor).collect();
            classify_rec(of, &l, &u)
        }
    }
}

fn anchors_rec(expr: &SetExpr, emit: &mut dyn FnMut(Vec<f64>)) {
    match expr {
        SetExpr::Ball { center, .. } => emit(center.clone()),
        SetExpr::Cuboid { lo, hi, .. } => {
            emit(lo.iter().zip(hi).map(|(l, u)| 0.5 * (l + u)).collect())
        }
        SetExpr::Halfspace { .. } => {}
        SetExpr::Union(xs) | SetExpr::Intersection(xs) => {
            for x in xs {
                anchors_rec(x, emit);
            }
        }
        SetExpr::Difference { minuend, subtrahend } => {
            anchors_rec(minuend, emit);
            anchors_rec(subtrahend, emit);
        }
        SetExpr::Complement { of, .. } => anchors_rec(of, emit),
        SetExpr::Translate { by, of } => {
            anchors_rec(of, &mut |p| {
                emit(p.iter().zip(by).map(|(a, b)| a + b).collect())
            });
        }
        SetExpr::Scale { factor, of } => {
            anchors_rec(of, &mut |p| emit(p.iter().map(|a| a * factor).collect()));
        }
    }
}

fn push_num(s: &mut String, v: f64) {
    // Shortest round-trip decimal, quoted so the canonical form is
    // representation-exact rather than JSON-number-parser dependent.
    s.push('"');
    s.push_str(&format!("{v}"));
    s.push('"');
}

fn push_vec(s: &mut String, vs: &[f64]) {
    s.push('[');
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        push_num(s, *v);
    }
    s.push(']');
}

fn canonical_rec(expr: &SetExpr, s: &mut String) {
    match expr {
        SetExpr::Ball { center, radius, open } => {
            s.push_str("{\"ball\":{\"center\":");
            push_vec(s, center);
            s.push_str(",\"open\":");
            s.push_str(if *open { "true" } else { "false" });
            s.push_str(",\"radius\":");
            push_num(s, *radius);
            s.push_str("}}");
        }
        SetExpr::Cuboid { lo, hi, open } => {
            s.push_str("{\"box\":{\"hi\":");
            push_vec(s, hi);
            s.push_str(",\"lo\":");
            push_vec(s, lo);
            s.push_str(",\"open\":");
            s.push_str(if *open { "true" } else { "false" });
            s.push_str("}}");
        }
        SetExpr::Halfspace { normal, offset, open } => {
            s.push_str("{\"halfspace\":{\"normal\":");
            push_vec(s, normal);
            s.push_str(",\"offset\":");
            push_num(s, *offset);
            s.push_str(",\"open\":");
            s.push_str(if *open { "true" } else { "false" });
            s.push_str("}}");
        }
        SetExpr::Union(xs) => {
            s.push_str("{\"union\":[");
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                canonical_rec(x, s);
            }
            s.push_str("]}");
        }
        SetExpr::Intersection(xs) => {
            s.push_str("{\"intersection\":[");
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                canonical_rec(x, s);
            }
            s.push_str("]}");
        }
        SetExpr::Difference { minuend, subtrahend } => {
            s.push_str("{\"difference\":{\"minuend\":");
            canonical_rec(minuend, s);
            s.push_str(",\"subtrahend\":");
            canonical_rec(subtrahend, s);
            s.push_str("}}");
        }
        SetExpr::Complement { of, bbox_lo, bbox_hi } => {
            s.push_str("{\"complement\":{\"bbox_hi\":");
            push_vec(s, bbox_hi);
            s.push_str(",\"bbox_lo\":");
            push_vec(s, bbox_lo);
            s.push_str(",\"of\":");
            canonical_rec(of, s);
            s.push_str("}}");
        }
        SetExpr::Translate { by, of } => {
            s.push_str("{\"translate\":{\"by\":");
            push_vec(s, by);
            s.push_str(",\"of\":");
            canonical_rec(of, s);
            s.push_str("}}");
        }
        SetExpr::Scale { factor, of } => {
            s.push_str("{\"scale\":{\"factor\":");
            push_num(s, *factor);
            s.push_str(",\"of\":");
            canonical_rec(of, s);
            s.push_str("}}");
        }
    }
}
