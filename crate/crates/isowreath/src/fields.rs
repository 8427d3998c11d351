//! Scalar fields over the parameter plane and the surface representations
//! built from them: graphs (height fields), support functions, and general
//! parametrizations. A field yields second-order jets either analytically
//! (through [`crate::expr`]) or by central finite differences on a uniform
//! grid.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};
use crate::geom::{V2, V3};
use crate::jet::{Jet2, Jet3};

/// Default tolerance for comparisons between analytic quantities.
pub const TOL_ANALYTIC: f64 = 1e-9;

/// Default tolerance for comparisons involving sampled (finite-difference)
/// quantities on a grid of spacing `h`.
pub fn tol_sampled(h: f64) -> f64 {
    (10.0 * h * h).max(1e-6)
}

#[derive(Debug, Clone, Error)]
pub enum FieldError {
    #[error("point ({u}, {v}) is outside the field domain")]
    OutOfDomain { u: f64, v: f64 },
    #[error("point ({u}, {v}) is too close to the grid boundary for the difference stencil")]
    Boundary { u: f64, v: f64 },
    #[error("point ({u}, {v}) does not lie on a grid node (sampled fields evaluate at nodes)")]
    OffGrid { u: f64, v: f64 },
    #[error("third-order jet unavailable for this field representation")]
    HigherJetUnavailable,
    #[error("non-finite sample encountered")]
    NonFinite,
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type FieldResult<T> = Result<T, FieldError>;

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Uniform rectangular sample grid: node `(i, j)` sits at
/// `(u0 + i*hu, v0 + j*hv)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid2 {
    pub u0: f64,
    pub v0: f64,
    pub hu: f64,
    pub hv: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Grid2 {
    pub fn new(u0: f64, v0: f64, hu: f64, hv: f64, nu: usize, nv: usize) -> FieldResult<Self> {
        if !(hu > 0.0 && hv > 0.0) || nu < 5 || nv < 5 {
            return Err(FieldError::Degenerate(format!(
                "grid requires positive spacings and at least 5x5 samples (got hu={hu}, hv={hv}, nu={nu}, nv={nv})"
            )));
        }
        Ok(Grid2 { u0, v0, hu, hv, nu, nv })
    }

    /// The default working window: 129x129 nodes on `[-1, 1]^2`.
    pub fn unit() -> Self {
        Grid2 { u0: -1.0, v0: -1.0, hu: 2.0 / 128.0, hv: 2.0 / 128.0, nu: 129, nv: 129 }
    }

    /// A square grid of `n x n` nodes covering `[a, b]^2`.
    pub fn square(a: f64, b: f64, n: usize) -> FieldResult<Self> {
        let h = (b - a) / (n as f64 - 1.0);
        Grid2::new(a, a, h, h, n, n)
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.hu
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v0 + j as f64 * self.hv
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nu && j < self.nv);
        j * self.nu + i
    }

    pub fn u_max(&self) -> f64 {
        self.u(self.nu - 1)
    }

    pub fn v_max(&self) -> f64 {
        self.v(self.nv - 1)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let eps_u = 1e-9 * self.hu;
        let eps_v = 1e-9 * self.hv;
        u >= self.u0 - eps_u && u <= self.u_max() + eps_u && v >= self.v0 - eps_v && v <= self.v_max() + eps_v
    }

    /// Nearest node index if `(u, v)` lies on a node up to a small snap
    /// tolerance.
    pub fn node_at(&self, u: f64, v: f64) -> FieldResult<(usize, usize)> {
        if !self.contains(u, v) {
            return Err(FieldError::OutOfDomain { u, v });
        }
        let fi = (u - self.u0) / self.hu;
        let fj = (v - self.v0) / self.hv;
        let i = fi.round();
        let j = fj.round();
        if (fi - i).abs() > 1e-6 || (fj - j).abs() > 1e-6 {
            return Err(FieldError::OffGrid { u, v });
        }
        Ok((i as usize, j as usize))
    }

    /// Iterate all interior nodes with `margin` cells of clearance to the
    /// boundary.
    pub fn interior_nodes(&self, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nu, nv) = (self.nu, self.nv);
        (margin..nv.saturating_sub(margin))
            .flat_map(move |j| (margin..nu.saturating_sub(margin)).map(move |i| (i, j)))
    }
}

// ---------------------------------------------------------------------------
// Scalar fields
// ---------------------------------------------------------------------------

/// Internal representation behind [`ScalarField`].
pub(crate) trait FieldImpl: Send + Sync {
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2>;

    fn jet3(&self, _u: f64, _v: f64) -> FieldResult<Jet3> {
        Err(FieldError::HigherJetUnavailable)
    }

    fn grid(&self) -> Option<&Grid2> {
        None
    }

    fn sampled_data(&self) -> Option<(&Grid2, &[f64])> {
        None
    }
}

struct AnalyticField {
    expr: Expr,
    params: HashMap<String, f64>,
}

impl FieldImpl for AnalyticField {
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        Ok(expr::eval_jet2(&self.expr, u, v, &self.params)?)
    }

    fn jet3(&self, u: f64, v: f64) -> FieldResult<Jet3> {
        Ok(expr::eval_jet3(&self.expr, u, v, &self.params)?)
    }
}

pub(crate) struct SampledField {
    pub grid: Grid2,
    pub values: Vec<f64>,
}

impl SampledField {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }
}

impl FieldImpl for SampledField {
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        let g = &self.grid;
        let (i, j) = g.node_at(u, v)?;
        if i < 1 || j < 1 || i + 1 >= g.nu || j + 1 >= g.nv {
            return Err(FieldError::Boundary { u, v });
        }
        let f = |di: isize, dj: isize| {
            self.at((i as isize + di) as usize, (j as isize + dj) as usize)
        };
        let (hu, hv) = (g.hu, g.hv);
        Ok(Jet2 {
            value: f(0, 0),
            du: (f(1, 0) - f(-1, 0)) / (2.0 * hu),
            dv: (f(0, 1) - f(0, -1)) / (2.0 * hv),
            duu: (f(1, 0) - 2.0 * f(0, 0) + f(-1, 0)) / (hu * hu),
            dvv: (f(0, 1) - 2.0 * f(0, 0) + f(0, -1)) / (hv * hv),
            duv: (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * hu * hv),
        })
    }

    /// Third-order central differences; needs two cells of clearance.
    fn jet3(&self, u: f64, v: f64) -> FieldResult<Jet3> {
        let g = &self.grid;
        let (i, j) = g.node_at(u, v)?;
        if i < 2 || j < 2 || i + 2 >= g.nu || j + 2 >= g.nv {
            return Err(FieldError::Boundary { u, v });
        }
        let f = |di: isize, dj: isize| {
            self.at((i as isize + di) as usize, (j as isize + dj) as usize)
        };
        let (hu, hv) = (g.hu, g.hv);
        let j2 = self.jet2(u, v)?;
        Ok(Jet3 {
            value: j2.value,
            du: j2.du,
            dv: j2.dv,
            duu: j2.duu,
            duv: j2.duv,
            dvv: j2.dvv,
            duuu: (f(2, 0) - 2.0 * f(1, 0) + 2.0 * f(-1, 0) - f(-2, 0)) / (2.0 * hu * hu * hu),
            dvvv: (f(0, 2) - 2.0 * f(0, 1) + 2.0 * f(0, -1) - f(0, -2)) / (2.0 * hv * hv * hv),
            duuv: (f(1, 1) - 2.0 * f(0, 1) + f(-1, 1) - f(1, -1) + 2.0 * f(0, -1) - f(-1, -1))
                / (2.0 * hu * hu * hv),
            duvv: (f(1, 1) - 2.0 * f(1, 0) + f(1, -1) - f(-1, 1) + 2.0 * f(-1, 0) - f(-1, -1))
                / (2.0 * hu * hv * hv),
        })
    }

    fn grid(&self) -> Option<&Grid2> {
        Some(&self.grid)
    }

    fn sampled_data(&self) -> Option<(&Grid2, &[f64])> {
        Some((&self.grid, &self.values))
    }
}

/// A derived field `∂f/∂u` or `∂f/∂v` of an analytic base; its second-order
/// jet is read off the base's third-order jet.
struct DerivField {
    base: ScalarField,
    along_u: bool,
}

impl FieldImpl for DerivField {
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        let j3 = self.base.jet3(u, v)?;
        Ok(if self.along_u { j3.shift_u() } else { j3.shift_v() })
    }
}

/// Linear combination `sum_k c_k f_k`; preserves third-order jets when all
/// terms have them.
struct LinCombField {
    terms: Vec<(f64, ScalarField)>,
}

impl FieldImpl for LinCombField {
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        let mut acc = Jet2::constant(0.0);
        for (c, f) in &self.terms {
            acc = acc + f.jet2(u, v)? * *c;
        }
        Ok(acc)
    }

    fn jet3(&self, u: f64, v: f64) -> FieldResult<Jet3> {
        let mut acc = Jet3::constant(0.0);
        for (c, f) in &self.terms {
            let j = f.jet3(u, v)?;
            acc = acc + j.compose(*c * j.value, *c, 0.0, 0.0);
        }
        Ok(acc)
    }

    fn grid(&self) -> Option<&Grid2> {
        self.terms.iter().find_map(|(_, f)| f.grid_ref())
    }
}

struct FnField<F> {
    f: F,
}

impl<F> FieldImpl for FnField<F>
where
    F: Fn(f64, f64) -> FieldResult<Jet2> + Send + Sync,
{
    fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        (self.f)(u, v)
    }
}

/// Immutable scalar field over the parameter plane with jet evaluation.
/// Cheap to clone; all evaluation is pure and thread-safe.
#[derive(Clone)]
pub struct ScalarField(Arc<dyn FieldImpl>);

impl ScalarField {
    pub fn analytic(expr: Expr, params: HashMap<String, f64>) -> Self {
        ScalarField(Arc::new(AnalyticField { expr, params }))
    }

    /// Parse and wrap an expression with no parameters.
    pub fn parse(src: &str) -> FieldResult<Self> {
        Ok(Self::analytic(expr::parse(src)?, HashMap::new()))
    }

    /// Parse and wrap an expression with the given parameter bindings.
    pub fn parse_with(src: &str, params: &[(&str, f64)]) -> FieldResult<Self> {
        let map = params.iter().map(|&(k, x)| (k.to_string(), x)).collect();
        Ok(Self::analytic(expr::parse(src)?, map))
    }

    pub fn sampled(grid: Grid2, values: Vec<f64>) -> FieldResult<Self> {
        if values.len() != grid.len() {
            return Err(FieldError::Degenerate(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(ScalarField(Arc::new(SampledField { grid, values })))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn3(
            move |_, _| Ok(Jet2::constant(c)),
            move |_, _| Ok(Jet3::constant(c)),
        )
    }

    /// The coordinate field `u`.
    pub fn coord_u() -> Self {
        Self::from_fn3(
            |u, _| Ok(Jet2::var_u(u)),
            |u, _| Ok(Jet3::var_u(u)),
        )
    }

    /// The coordinate field `v`.
    pub fn coord_v() -> Self {
        Self::from_fn3(
            |_, v| Ok(Jet2::var_v(v)),
            |_, v| Ok(Jet3::var_v(v)),
        )
    }

    /// Field defined by a jet-valued closure (no third-order access).
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> FieldResult<Jet2> + Send + Sync + 'static,
    {
        ScalarField(Arc::new(FnField { f }))
    }

    /// Field defined by closures for both jet orders.
    pub fn from_fn3<F2, F3>(f2: F2, f3: F3) -> Self
    where
        F2: Fn(f64, f64) -> FieldResult<Jet2> + Send + Sync + 'static,
        F3: Fn(f64, f64) -> FieldResult<Jet3> + Send + Sync + 'static,
    {
        struct Fn3Field<F2, F3> {
            f2: F2,
            f3: F3,
        }
        impl<F2, F3> FieldImpl for Fn3Field<F2, F3>
        where
            F2: Fn(f64, f64) -> FieldResult<Jet2> + Send + Sync,
            F3: Fn(f64, f64) -> FieldResult<Jet3> + Send + Sync,
        {
            fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
                (self.f2)(u, v)
            }
            fn jet3(&self, u: f64, v: f64) -> FieldResult<Jet3> {
                (self.f3)(u, v)
            }
        }
        ScalarField(Arc::new(Fn3Field { f2, f3 }))
    }

    pub fn jet2(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        self.0.jet2(u, v)
    }

    pub fn jet3(&self, u: f64, v: f64) -> FieldResult<Jet3> {
        self.0.jet3(u, v)
    }

    pub fn value(&self, u: f64, v: f64) -> FieldResult<f64> {
        Ok(self.jet2(u, v)?.value)
    }

    pub fn grid_ref(&self) -> Option<&Grid2> {
        self.0.grid()
    }

    pub fn sampled_data(&self) -> Option<(&Grid2, &[f64])> {
        self.0.sampled_data()
    }

    /// The derivative field `∂f/∂u`. Analytic bases keep exact jets via
    /// third-order evaluation; sampled bases are differentiated by central
    /// differences onto a grid shrunk by one cell.
    pub fn deriv_u(&self) -> FieldResult<ScalarField> {
        self.deriv(true)
    }

    /// The derivative field `∂f/∂v` (see [`ScalarField::deriv_u`]).
    pub fn deriv_v(&self) -> FieldResult<ScalarField> {
        self.deriv(false)
    }

    fn deriv(&self, along_u: bool) -> FieldResult<ScalarField> {
        if let Some((g, _)) = self.0.sampled_data() {
            let sub = Grid2::new(
                g.u0 + g.hu,
                g.v0 + g.hv,
                g.hu,
                g.hv,
                g.nu - 2,
                g.nv - 2,
            )?;
            let mut values = Vec::with_capacity(sub.len());
            for j in 0..sub.nv {
                for i in 0..sub.nu {
                    let jet = self.jet2(sub.u(i), sub.v(j))?;
                    values.push(if along_u { jet.du } else { jet.dv });
                }
            }
            return ScalarField::sampled(sub, values);
        }
        Ok(ScalarField(Arc::new(DerivField { base: self.clone(), along_u })))
    }

    /// `a*self + b*other` as a lazy field.
    pub fn lin_comb(a: f64, f: &ScalarField, b: f64, g: &ScalarField) -> ScalarField {
        ScalarField(Arc::new(LinCombField {
            terms: vec![(a, f.clone()), (b, g.clone())],
        }))
    }

    /// `s*self` as a lazy field.
    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField(Arc::new(LinCombField { terms: vec![(s, self.clone())] }))
    }

    /// Materialize the field values on a grid.
    pub fn sample_on(&self, grid: Grid2) -> FieldResult<ScalarField> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nv {
            for i in 0..grid.nu {
                values.push(self.value(grid.u(i), grid.v(j))?);
            }
        }
        ScalarField::sampled(grid, values)
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0.sampled_data() {
            Some((g, _)) => write!(f, "ScalarField(sampled {}x{})", g.nu, g.nv),
            None => write!(f, "ScalarField(procedural)"),
        }
    }
}

// ---------------------------------------------------------------------------
// Surface representations
// ---------------------------------------------------------------------------

/// A surface given as the graph `(u, v, f(u,v))` — the Monge patch that
/// every admissible surface in isotropic space possesses.
#[derive(Clone, Debug)]
pub struct HeightField(pub ScalarField);

impl HeightField {
    pub fn parse(src: &str) -> FieldResult<Self> {
        Ok(HeightField(ScalarField::parse(src)?))
    }

    pub fn jet_at(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        self.0.jet2(u, v)
    }

    pub fn point(&self, u: f64, v: f64) -> FieldResult<V3> {
        Ok([u, v, self.0.value(u, v)?])
    }
}

/// The isotropic support function `h(u,v)` over Gauss-image parameters;
/// the tangent plane at parameter `(u,v)` is `z = u x + v y - h(u,v)`.
#[derive(Clone, Debug)]
pub struct SupportField(pub ScalarField);

impl SupportField {
    pub fn parse(src: &str) -> FieldResult<Self> {
        Ok(SupportField(ScalarField::parse(src)?))
    }

    pub fn jet_at(&self, u: f64, v: f64) -> FieldResult<Jet2> {
        self.0.jet2(u, v)
    }
}

/// A general parametrized surface `g(u,v) = (x, y, z)` with per-coordinate
/// jet access.
#[derive(Clone, Debug)]
pub struct ParamSurface {
    pub x: ScalarField,
    pub y: ScalarField,
    pub z: ScalarField,
}

impl ParamSurface {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Self {
        ParamSurface { x, y, z }
    }

    /// The graph parametrization `(u, v, f)`.
    pub fn from_height(f: &HeightField) -> Self {
        ParamSurface {
            x: ScalarField::coord_u(),
            y: ScalarField::coord_v(),
            z: f.0.clone(),
        }
    }

    pub fn jets(&self, u: f64, v: f64) -> FieldResult<[Jet2; 3]> {
        Ok([self.x.jet2(u, v)?, self.y.jet2(u, v)?, self.z.jet2(u, v)?])
    }

    pub fn point(&self, u: f64, v: f64) -> FieldResult<V3> {
        Ok([self.x.value(u, v)?, self.y.value(u, v)?, self.z.value(u, v)?])
    }
}

// ---------------------------------------------------------------------------
// Isotropic metric basics
// ---------------------------------------------------------------------------

/// Orthogonal projection onto the xy-plane; in isotropic space the top view
/// carries all metric information.
pub fn top_view(p: V3) -> V2 {
    [p[0], p[1]]
}

/// Isotropic distance: the Euclidean distance of the top views.
pub fn iso_distance(p: V3, q: V3) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    (dx * dx + dy * dy).sqrt()
}

// ---------------------------------------------------------------------------
// CSV import/export of sampled fields
// ---------------------------------------------------------------------------

/// Serialize a sampled field: header `u0,v0,hu,hv,nu,nv`, then `nv` rows of
/// `nu` values each (row-major in `j`).
pub fn to_csv(grid: &Grid2, values: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{},{},{},{},{},{}\n",
        grid.u0, grid.v0, grid.hu, grid.hv, grid.nu, grid.nv
    ));
    for j in 0..grid.nv {
        let row: Vec<String> = (0..grid.nu)
            .map(|i| format!("{:.17e}", values[grid.idx(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse the CSV format produced by [`to_csv`].
pub fn from_csv(text: &str) -> FieldResult<ScalarField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| FieldError::Degenerate("empty CSV input".into()))?;
    let head: Vec<&str> = header.split(',').map(str::trim).collect();
    if head.len() != 6 {
        return Err(FieldError::Degenerate(format!(
            "CSV header must have 6 fields u0,v0,hu,hv,nu,nv (got {})",
            head.len()
        )));
    }
    let num = |s: &str| -> FieldResult<f64> {
        s.parse()
            .map_err(|_| FieldError::Degenerate(format!("bad number `{s}` in CSV")))
    };
    let grid = Grid2::new(
        num(head[0])?,
        num(head[1])?,
        num(head[2])?,
        num(head[3])?,
        num(head[4])? as usize,
        num(head[5])? as usize,
    )?;
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.nv {
        let line = lines.next().ok_or_else(|| {
            FieldError::Degenerate(format!("CSV truncated: expected {} rows", grid.nv))
        })?;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != grid.nu {
            return Err(FieldError::Degenerate(format!(
                "CSV row {j} has {} values, expected {}",
                cells.len(),
                grid.nu
            )));
        }
        for (i, cell) in cells.iter().enumerate() {
            values[grid.idx(i, j)] = num(cell)?;
        }
    }
    ScalarField::sampled(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sampled_quadratic_jets_are_exact() {
        let grid = Grid2::new(-1.6, -1.6, 0.05, 0.05, 65, 65).unwrap();
        let f = ScalarField::parse("(u^2+v^2)/2").unwrap();
        let s = f.sample_on(grid).unwrap();
        let (u, v) = (grid.u(20), grid.v(33));
        let j = s.jet2(u, v).unwrap();
        assert_relative_eq!(j.duu, 1.0, epsilon = 1e-10);
        assert_relative_eq!(j.dvv, 1.0, epsilon = 1e-10);
        assert_relative_eq!(j.duv, 0.0, epsilon = 1e-10);
        assert_relative_eq!(j.du, u, epsilon = 1e-10);
    }

    #[test]
    fn sampled_cubic_third_jets_are_exact() {
        // third-order stencils are exact on cubics
        let grid = Grid2::new(-1.0, -1.0, 0.05, 0.05, 41, 41).unwrap();
        let f = ScalarField::parse("u^3 - 3*u*v^2 + u^2*v").unwrap();
        let s = f.sample_on(grid).unwrap();
        let (u, v) = (grid.u(17), grid.v(9));
        let js = s.jet3(u, v).unwrap();
        let ja = f.jet3(u, v).unwrap();
        assert_relative_eq!(js.duuu, ja.duuu, epsilon = 1e-8);
        assert_relative_eq!(js.duuv, ja.duuv, epsilon = 1e-8);
        assert_relative_eq!(js.duvv, ja.duvv, epsilon = 1e-8);
        assert_relative_eq!(js.dvvv, ja.dvvv, epsilon = 1e-8);
        // two cells of clearance required
        assert!(matches!(
            s.jet3(grid.u(1), grid.v(20)),
            Err(FieldError::Boundary { .. })
        ));
    }

    #[test]
    fn analytic_jet_example() {
        let f = ScalarField::parse("sin(u)").unwrap();
        let j = f.jet2(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert_relative_eq!(j.value, 1.0, epsilon = 1e-15);
        assert_relative_eq!(j.duu, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn boundary_query_errors() {
        let grid = Grid2::unit();
        let s = ScalarField::parse("u*v").unwrap().sample_on(grid).unwrap();
        assert!(matches!(
            s.jet2(grid.u0, grid.v0),
            Err(FieldError::Boundary { .. })
        ));
        assert!(matches!(
            s.jet2(5.0, 0.0),
            Err(FieldError::OutOfDomain { .. })
        ));
        assert!(matches!(
            s.jet2(grid.u(3) + 0.3 * grid.hu, grid.v(3)),
            Err(FieldError::OffGrid { .. })
        ));
    }

    #[test]
    fn fd_convergence_is_second_order() {
        // errors of FD jets vs analytic shrink ~4x when h halves
        let f = ScalarField::parse("sin(u)*cosh(v)").unwrap();
        let mut errs = Vec::new();
        for &h in &[0.1f64, 0.05, 0.025] {
            let n = (2.0 / h).round() as usize + 1;
            let grid = Grid2::new(-1.0, -1.0, h, h, n, n).unwrap();
            let s = f.sample_on(grid).unwrap();
            // probe a node common to all three grids
            let (u, v) = (-0.5, 0.5);
            let ja = f.jet2(u, v).unwrap();
            let js = s.jet2(u, v).unwrap();
            let e = (ja.duu - js.duu)
                .abs()
                .max((ja.duv - js.duv).abs())
                .max((ja.dvv - js.dvv).abs());
            errs.push(e);
        }
        assert!(errs[1] < errs[0] / 2.5, "h=0.05 err {} vs h=0.1 err {}", errs[1], errs[0]);
        assert!(errs[2] < errs[1] / 2.5, "h=0.025 err {} vs h=0.05 err {}", errs[2], errs[1]);
    }

    #[test]
    fn deriv_field_of_analytic_is_exact() {
        let f = ScalarField::parse("sin(u)*v^2").unwrap();
        let fu = f.deriv_u().unwrap();
        let j = fu.jet2(0.4, 1.2).unwrap();
        // f_u = cos(u) v^2
        assert_relative_eq!(j.value, 0.4f64.cos() * 1.44, epsilon = 1e-14);
        assert_relative_eq!(j.du, -0.4f64.sin() * 1.44, epsilon = 1e-14);
        assert_relative_eq!(j.duv, -0.4f64.sin() * 2.4, epsilon = 1e-14);
    }

    #[test]
    fn iso_distance_examples() {
        assert_relative_eq!(iso_distance([0.0, 0.0, 0.0], [3.0, 4.0, 100.0]), 5.0);
        assert_eq!(iso_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), 0.0);
        assert_eq!(iso_distance([0.0, 0.0, 0.0], [0.0, 0.0, 7.0]), 0.0);
        assert_eq!(top_view([1.0, 2.0, 3.0]), [1.0, 2.0]);
    }

    #[test]
    fn csv_roundtrip() {
        let grid = Grid2::new(0.0, -1.0, 0.25, 0.5, 5, 6).unwrap();
        let f = ScalarField::parse("u*v + 0.125").unwrap().sample_on(grid).unwrap();
        let (g, vals) = f.sampled_data().unwrap();
        let text = to_csv(g, vals);
        let back = from_csv(&text).unwrap();
        let (g2, vals2) = back.sampled_data().unwrap();
        assert_eq!(g, g2);
        assert_eq!(vals, vals2);
    }
}
