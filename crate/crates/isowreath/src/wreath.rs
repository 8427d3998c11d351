//! Infinitesimal isometries of graph surfaces and their displacement
//! diagrams. A first-order flex of `F = (u, v, f)` is encoded by a velocity
//! diagram `V = (-v, u, n)`; the compatibility condition is the vanishing of
//! the polarized Hessian determinant of `(f, n)`. From a compatible pair the
//! module constructs the closed six-surface wreath `F, V, C, C̄, B, B̄`,
//! verifies its two relation systems (orthogonality/δ-duality/quarter-turn
//! parallelism, and the ν-duality system obtained by applying the motion `L`
//! to every second surface), exposes the relative Weingarten map, the
//! paratactic correspondence for area-preserving planar maps, and the
//! transfer of Euclidean first-order flexes into this setting.

use crate::curvature::{curvature_graph, curvature_param, mixed_curvature};
use crate::duality::{delta_ce, nu_ce, ContactElement, ContactField};
use crate::fields::{FieldError, FieldResult, Grid2, HeightField, ParamSurface, ScalarField};
use crate::geom::{cross3, dot3, sub3, V3};
use crate::isometry::hermite_trapezoid;
use crate::jet::{Jet2, Jet3};
use serde::Serialize;

// ---------------------------------------------------------------------------
// Flex pairs
// ---------------------------------------------------------------------------

/// A surface height `f` together with the height `n` of a velocity diagram
/// `V = (-v, u, n)`. The pair encodes a first-order isometric deformation of
/// the graph of `f` exactly when [`flex_residual_at`] vanishes on the domain.
#[derive(Clone, Debug)]
pub struct FlexPair {
    pub f: HeightField,
    pub n: HeightField,
}

impl FlexPair {
    pub fn new(f: HeightField, n: HeightField) -> Self {
        FlexPair { f, n }
    }

    pub fn parse(f: &str, n: &str) -> FieldResult<Self> {
        Ok(FlexPair {
            f: HeightField::parse(f)?,
            n: HeightField::parse(n)?,
        })
    }

    /// Largest flexibility residual over the grid nodes.
    pub fn max_flex_residual(&self, grid: &Grid2) -> FieldResult<f64> {
        let mut worst = 0.0_f64;
        for (i, j) in grid.interior_nodes(0) {
            worst = worst.max(flex_residual_at(&self.f, &self.n, grid.u(i), grid.v(j))?.abs());
        }
        Ok(worst)
    }
}

/// Flexibility residual `f_uu n_vv - 2 f_uv n_uv + f_vv n_uu` at a point:
/// twice the mixed curvature of the two graphs. Zero exactly when `n` is the
/// height of a velocity diagram of a first-order flex of `f`. Symmetric in
/// `(f, n)`.
pub fn flex_residual_at(f: &HeightField, n: &HeightField, u: f64, v: f64) -> FieldResult<f64> {
    Ok(2.0 * mixed_curvature(f, n, u, v)?)
}

/// The flexibility residual sampled on a grid (row-major node values).
pub fn flex_residual(f: &HeightField, n: &HeightField, grid: &Grid2) -> FieldResult<ScalarField> {
    let mut values = vec![0.0; grid.len()];
    for (i, j) in grid.interior_nodes(0) {
        values[grid.idx(i, j)] = flex_residual_at(f, n, grid.u(i), grid.v(j))?;
    }
    ScalarField::sampled(grid.clone(), values)
}

// ---------------------------------------------------------------------------
// Velocity diagrams of linear Weingarten surfaces
// ---------------------------------------------------------------------------

/// Velocity height for a linear Weingarten surface, plus diagnostics.
#[derive(Clone, Debug)]
pub struct LwVelocity {
    pub n: HeightField,
    /// `n` vanishes identically on the grid (the flex is trivial).
    pub trivial: bool,
    /// Largest residual of `-a H(V) + K(V) = 0` over the grid: the velocity
    /// diagram is itself a linear Weingarten surface.
    pub weingarten_residual: f64,
}

/// Velocity height `n = (a/2)(u² + v²) + b f` for a surface satisfying
/// `a H + b K = 0`. Fails when the linear Weingarten relation does not hold
/// on the grid to `tol`.
pub fn lw_velocity(
    f: &HeightField,
    a: f64,
    b: f64,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<LwVelocity> {
    let mut worst = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let s = curvature_graph(f, grid.u(i), grid.v(j))?;
        worst = worst.max((a * s.h + b * s.k).abs());
    }
    if worst > tol {
        return Err(FieldError::Degenerate(format!(
            "surface is not linear Weingarten for (a, b) = ({a}, {b}): max |aH + bK| = {worst:e} exceeds {tol:e}"
        )));
    }
    let radial = ScalarField::parse("(u^2 + v^2)/2")?;
    let n = HeightField(ScalarField::lin_comb(a, &radial, b, &f.0));

    let mut n_max = 0.0_f64;
    let mut w_res = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let jn = n.jet_at(grid.u(i), grid.v(j))?;
        n_max = n_max.max(jn.value.abs());
        let hv = 0.5 * (jn.duu + jn.dvv);
        let kv = jn.duu * jn.dvv - jn.duv * jn.duv;
        w_res = w_res.max((-a * hv + kv).abs());
    }
    Ok(LwVelocity {
        n,
        trivial: n_max <= 1e-12,
        weingarten_residual: w_res,
    })
}

// ---------------------------------------------------------------------------
// The rotation-diagram potential c
// ---------------------------------------------------------------------------

/// First and second partials of the potential `c` with
/// `c_u = f_u n_uv - f_v n_uu` and `c_v = f_u n_vv - f_v n_uv`, computed from
/// third-order jets of `f` and `n`. The mixed partial is symmetrized; the two
/// one-sided values differ exactly by the flexibility residual.
#[derive(Clone, Copy, Debug)]
struct CPartials {
    du: f64,
    dv: f64,
    duu: f64,
    duv: f64,
    dvv: f64,
}

fn c_partials(fj: &Jet3, nj: &Jet3) -> CPartials {
    let du = fj.du * nj.duv - fj.dv * nj.duu;
    let dv = fj.du * nj.dvv - fj.dv * nj.duv;
    let duu = fj.duu * nj.duv + fj.du * nj.duuv - fj.duv * nj.duu - fj.dv * nj.duuu;
    let cuv = fj.duv * nj.duv + fj.du * nj.duvv - fj.dvv * nj.duu - fj.dv * nj.duuv;
    let cvu = fj.duu * nj.dvv + fj.du * nj.duvv - fj.duv * nj.duv - fj.dv * nj.duuv;
    let dvv = fj.duv * nj.dvv + fj.du * nj.dvvv - fj.dvv * nj.duv - fj.dv * nj.duvv;
    CPartials { du, dv, duu, duv: 0.5 * (cuv + cvu), dvv }
}

/// Panel sizing for the path-integration legs. Analytic fields use a free
/// step with at least two panels per leg; sampled fields must be stepped
/// node to node, so the panel count is the (rounded) number of grid cells.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PathSteps {
    pub step_u: f64,
    pub step_v: f64,
    pub node_aligned: bool,
}

impl PathSteps {
    pub(crate) fn for_fields(fields: &[&ScalarField], grid: &Grid2) -> PathSteps {
        match fields.iter().find_map(|f| f.grid_ref()) {
            Some(g) => PathSteps { step_u: g.hu, step_v: g.hv, node_aligned: true },
            None => {
                let s = 0.125 * grid.hu.min(grid.hv);
                PathSteps { step_u: s, step_v: s, node_aligned: false }
            }
        }
    }

    fn panels(&self, len: f64, step: f64) -> usize {
        if self.node_aligned {
            ((len / step).abs().round() as usize).max(1)
        } else {
            ((len / step).abs().ceil() as usize).max(2)
        }
    }

    fn panels_u(&self, len: f64) -> usize {
        self.panels(len, self.step_u)
    }

    fn panels_v(&self, len: f64) -> usize {
        self.panels(len, self.step_v)
    }

    /// Snap a probe coordinate to the nearest path node so sampled fields
    /// are only ever queried on their grid.
    fn snap(&self, x: f64, anchor: f64, step: f64) -> f64 {
        if self.node_aligned {
            anchor + ((x - anchor) / step).round() * step
        } else {
            x
        }
    }
}

fn c_value(
    f: &ScalarField,
    n: &ScalarField,
    u0: f64,
    v0: f64,
    u: f64,
    v: f64,
    steps: PathSteps,
    row_first: bool,
) -> FieldResult<f64> {
    let leg_u = |at_v: f64| {
        hermite_trapezoid(u0, u, steps.panels_u(u - u0), |t| {
            let p = c_partials(&f.jet3(t, at_v)?, &n.jet3(t, at_v)?);
            Ok((p.du, p.duu))
        })
    };
    let leg_v = |at_u: f64| {
        hermite_trapezoid(v0, v, steps.panels_v(v - v0), |t| {
            let p = c_partials(&f.jet3(at_u, t)?, &n.jet3(at_u, t)?);
            Ok((p.dv, p.dvv))
        })
    };
    if row_first {
        Ok(leg_u(v0)? + leg_v(u)?)
    } else {
        Ok(leg_v(u0)? + leg_u(v)?)
    }
}

/// The rotation-diagram potential with its path-closure diagnostic.
#[derive(Clone, Debug)]
pub struct CPotential {
    pub c: ScalarField,
    /// Largest discrepancy between the two integration path orders over the
    /// probe points (grid corners and center).
    pub closure_residual: f64,
}

/// Integrates the potential `c` of a flex pair from its exact gradient
/// (`c_u = f_u n_uv - f_v n_uu`, `c_v = f_u n_vv - f_v n_uv`), anchored by
/// `c(u0, v0) = 0` at the grid origin. Values come from corrected-trapezoid
/// path integration along grid rows then columns; all derivatives of `c` come
/// from jets of `f` and `n` directly and are exact. Errors when the pair is
/// not flexible to `tol` or when the path-closure residual exceeds `10 tol`.
pub fn integrate_c(pair: &FlexPair, grid: &Grid2, tol: f64) -> FieldResult<CPotential> {
    let worst = pair.max_flex_residual(grid)?;
    if worst > tol {
        return Err(FieldError::Degenerate(format!(
            "pair is not first-order flexible: max residual {worst:e} exceeds {tol:e}; the gradient of c is not integrable"
        )));
    }
    let (u0, v0) = (grid.u0, grid.v0);
    let ff = pair.f.0.clone();
    let nn = pair.n.0.clone();
    let steps = PathSteps::for_fields(&[&ff, &nn], grid);

    let probes = [
        (grid.u0, grid.v_max()),
        (grid.u_max(), grid.v0),
        (grid.u_max(), grid.v_max()),
        (
            steps.snap(0.5 * (grid.u0 + grid.u_max()), u0, steps.step_u),
            steps.snap(0.5 * (grid.v0 + grid.v_max()), v0, steps.step_v),
        ),
    ];
    let mut closure_residual = 0.0_f64;
    for &(u, v) in &probes {
        let a = c_value(&ff, &nn, u0, v0, u, v, steps, true)?;
        let b = c_value(&ff, &nn, u0, v0, u, v, steps, false)?;
        closure_residual = closure_residual.max((a - b).abs());
    }
    if closure_residual > 10.0 * tol {
        return Err(FieldError::Degenerate(format!(
            "path-closure residual {closure_residual:e} of the potential c exceeds {:e}",
            10.0 * tol
        )));
    }

    let c = ScalarField::from_fn(move |u, v| {
        let p = c_partials(&ff.jet3(u, v)?, &nn.jet3(u, v)?);
        Ok(Jet2 {
            value: c_value(&ff, &nn, u0, v0, u, v, steps, true)?,
            du: p.du,
            dv: p.dv,
            duu: p.duu,
            duv: p.duv,
            dvv: p.dvv,
        })
    });
    Ok(CPotential { c, closure_residual })
}

// ---------------------------------------------------------------------------
// The fixed motions J and L
// ---------------------------------------------------------------------------

/// Rotation about the z-axis by π/2 (order 4).
pub const J_MATRIX: [[f64; 3]; 3] = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];

/// Rotation about the z-axis by π/2 composed with the reflection in the
/// xy-plane: an orientation-reversing motion of order 4 (its square is the
/// half-turn about the z-axis).
pub const L_MATRIX: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0]];

pub fn apply_matrix(m: &[[f64; 3]; 3], p: V3) -> V3 {
    [
        m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
        m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
        m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
    ]
}

/// J on contact elements: `(x, y, z, p, q) ↦ (-y, x, z, -q, p)`.
pub fn j_ce(e: ContactElement) -> ContactElement {
    ContactElement::new(-e.y, e.x, e.z, -e.q, e.p)
}

/// L on contact elements: `(x, y, z, p, q) ↦ (y, -x, -z, -q, p)`.
pub fn l_ce(e: ContactElement) -> ContactElement {
    ContactElement::new(e.y, -e.x, -e.z, -e.q, e.p)
}

// ---------------------------------------------------------------------------
// The six-surface wreath
// ---------------------------------------------------------------------------

/// The six contact fields generated by a flex pair:
/// `F = (u, v, f, f_u, f_v)`, the velocity diagram
/// `V = (-v, u, n, -n_v, n_u)`, the rotation diagram
/// `C = (-n_u, -n_v, c, f_v, -f_u)`, and the images of `V, F, C` under the
/// duality δ, namely the translation diagram
/// `C̄ = (-n_v, n_u, -n + n_u u + n_v v, -v, u)`,
/// `B = (f_u, f_v, f_u u + f_v v - f, u, v)`, and
/// `B̄ = (f_v, -f_u, -n_u f_v + n_v f_u - c, -n_u, -n_v)`.
#[derive(Clone)]
pub struct WreathSet {
    pub f: ContactField,
    pub v: ContactField,
    pub c: ContactField,
    pub c_bar: ContactField,
    pub b: ContactField,
    pub b_bar: ContactField,
    /// The rotation-diagram potential (third coordinate of `C`).
    pub c_height: ScalarField,
    pub grid: Grid2,
    /// Path-closure residual of the potential integration.
    pub closure_residual: f64,
}

impl WreathSet {
    /// The six fields with their conventional names, for export.
    pub fn named_fields(&self) -> [(&'static str, &ContactField); 6] {
        [
            ("F", &self.f),
            ("V", &self.v),
            ("C", &self.c),
            ("Cbar", &self.c_bar),
            ("B", &self.b),
            ("Bbar", &self.b_bar),
        ]
    }
}

/// Builds the wreath of a flex pair. `C̄`, `B`, `B̄` are produced by applying
/// δ to `V`, `F`, `C` respectively, which agrees with the closed-form
/// quintuples listed on [`WreathSet`].
pub fn build_wreath(pair: &FlexPair, grid: &Grid2, tol: f64) -> FieldResult<WreathSet> {
    let pot = integrate_c(pair, grid, tol)?;
    let f_field = ContactField::of_graph(&pair.f)?;
    let n_u = pair.n.0.deriv_u()?;
    let n_v = pair.n.0.deriv_v()?;
    let v_field = ContactField {
        x: ScalarField::coord_v().scaled(-1.0),
        y: ScalarField::coord_u(),
        z: pair.n.0.clone(),
        p: n_v.scaled(-1.0),
        q: n_u.clone(),
    };
    let c_field = ContactField {
        x: n_u.scaled(-1.0),
        y: n_v.scaled(-1.0),
        z: pot.c.clone(),
        p: pair.f.0.deriv_v()?,
        q: pair.f.0.deriv_u()?.scaled(-1.0),
    };
    let c_bar = v_field.delta();
    let b = f_field.delta();
    let b_bar = c_field.delta();
    Ok(WreathSet {
        f: f_field,
        v: v_field,
        c: c_field,
        c_bar,
        b,
        b_bar,
        c_height: pot.c,
        grid: grid.clone(),
        closure_residual: pot.closure_residual,
    })
}

/// Per-relation maximum residuals of the wreath over its grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WreathReport {
    /// Isotropic orthogonality of `(F,V)`, `(C,C̄)`, `(B,B̄)`: the top-view
    /// tangents satisfy `⟨S_u,W_u⟩ = ⟨S_v,W_v⟩ = ⟨S_u,W_v⟩ + ⟨S_v,W_u⟩ = 0`.
    pub orthogonality: f64,
    /// δ-duality of `(V,C̄)`, `(F,B)`, `(C,B̄)` (contact-element gap).
    pub delta_duality: f64,
    /// Parallel tangent planes of `(F, JC)`, `(C̄, JB)`, `(B̄, JV)` after a
    /// quarter-turn of the second surface.
    pub quarter_turn_parallel: f64,
    /// Stationarity of the Gaussian curvature along `C + tC̄` and `B + tB̄`
    /// at `t = 0` (finite difference in `t`): the pairs are themselves flex
    /// pairs.
    pub flexibility: f64,
    /// ν-duality of `(LV,C̄)`, `(LB,F)`, `(LC,B̄)`.
    pub nu_duality: f64,
    /// Parallel tangent planes of `(F,LC)`, `(C̄,LB)`, `(B̄,LV)`.
    pub parallel_planes: f64,
    /// Identical top views of `(LV,F)`, `(LC,C̄)`, `(LB,B̄)`.
    pub shared_top_views: f64,
    /// The velocity height vanishes identically: the wreath collapses.
    pub degenerate: bool,
}

impl WreathReport {
    pub fn max_residual(&self) -> f64 {
        self.orthogonality
            .max(self.delta_duality)
            .max(self.quarter_turn_parallel)
            .max(self.flexibility)
            .max(self.nu_duality)
            .max(self.parallel_planes)
            .max(self.shared_top_views)
    }
}

fn element_gap(a: ContactElement, b: ContactElement) -> f64 {
    (a.x - b.x)
        .abs()
        .max((a.y - b.y).abs())
        .max((a.z - b.z).abs())
        .max((a.p - b.p).abs())
        .max((a.q - b.q).abs())
}

fn orthogonality_at(a: &ContactField, b: &ContactField, u: f64, v: f64) -> FieldResult<f64> {
    let ax = a.x.jet2(u, v)?;
    let ay = a.y.jet2(u, v)?;
    let bx = b.x.jet2(u, v)?;
    let by = b.y.jet2(u, v)?;
    let uu = ax.du * bx.du + ay.du * by.du;
    let vv = ax.dv * bx.dv + ay.dv * by.dv;
    let cross = ax.du * bx.dv + ay.du * by.dv + ax.dv * bx.du + ay.dv * by.du;
    Ok(uu.abs().max(vv.abs()).max(cross.abs()))
}

fn shifted_surface(s: &ContactField, w: &ContactField, t: f64) -> ParamSurface {
    ParamSurface::new(
        ScalarField::lin_comb(1.0, &s.x, t, &w.x),
        ScalarField::lin_comb(1.0, &s.y, t, &w.y),
        ScalarField::lin_comb(1.0, &s.z, t, &w.z),
    )
}

/// Largest finite-difference value of `d/dt K(S + tW)` at `t = 0` over a
/// subsample of the grid; nodes where the curvature is singular are skipped.
fn k_stationarity(s: &ContactField, w: &ContactField, grid: &Grid2) -> FieldResult<f64> {
    let t = 1e-5;
    let plus = shifted_surface(s, w, t);
    let minus = shifted_surface(s, w, -t);
    let stride_u = ((grid.nu - 1) / 8).max(1);
    let stride_v = ((grid.nv - 1) / 8).max(1);
    let mut worst = 0.0_f64;
    for j in (0..grid.nv).step_by(stride_v) {
        for i in (0..grid.nu).step_by(stride_u) {
            let (u, v) = (grid.u(i), grid.v(j));
            let kp = match curvature_param(&plus, u, v) {
                Ok((k, _)) => k,
                Err(FieldError::Degenerate(_)) => continue,
                Err(e) => return Err(e),
            };
            let km = match curvature_param(&minus, u, v) {
                Ok((k, _)) => k,
                Err(FieldError::Degenerate(_)) => continue,
                Err(e) => return Err(e),
            };
            worst = worst.max(((kp - km) / (2.0 * t)).abs());
        }
    }
    Ok(worst)
}

/// Evaluates all wreath relations over the grid and returns their maximum
/// residuals. Always produces a report; a vanishing velocity height is
/// flagged as degenerate.
pub fn wreath_report(w: &WreathSet) -> FieldResult<WreathReport> {
    let grid = &w.grid;
    let mut orthogonality = 0.0_f64;
    let mut delta_duality = 0.0_f64;
    let mut quarter_turn = 0.0_f64;
    let mut nu_duality = 0.0_f64;
    let mut parallel = 0.0_f64;
    let mut top_views = 0.0_f64;
    let mut n_max = 0.0_f64;
    let mut f_max = 0.0_f64;

    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let ef = w.f.element_at(u, v)?;
        let ev = w.v.element_at(u, v)?;
        let ec = w.c.element_at(u, v)?;
        let ecb = w.c_bar.element_at(u, v)?;
        let eb = w.b.element_at(u, v)?;
        let ebb = w.b_bar.element_at(u, v)?;
        n_max = n_max.max(ev.z.abs());
        f_max = f_max.max(ef.z.abs());

        orthogonality = orthogonality
            .max(orthogonality_at(&w.f, &w.v, u, v)?)
            .max(orthogonality_at(&w.c, &w.c_bar, u, v)?)
            .max(orthogonality_at(&w.b, &w.b_bar, u, v)?);

        delta_duality = delta_duality
            .max(element_gap(delta_ce(ev), ecb))
            .max(element_gap(delta_ce(ef), eb))
            .max(element_gap(delta_ce(ec), ebb));

        let grad_gap = |a: ContactElement, b: ContactElement| -> f64 {
            (a.p - b.p).abs().max((a.q - b.q).abs())
        };
        quarter_turn = quarter_turn
            .max(grad_gap(ef, j_ce(ec)))
            .max(grad_gap(ecb, j_ce(eb)))
            .max(grad_gap(ebb, j_ce(ev)));

        nu_duality = nu_duality
            .max(element_gap(nu_ce(l_ce(ev)), ecb))
            .max(element_gap(nu_ce(l_ce(eb)), ef))
            .max(element_gap(nu_ce(l_ce(ec)), ebb));

        parallel = parallel
            .max(grad_gap(ef, l_ce(ec)))
            .max(grad_gap(ecb, l_ce(eb)))
            .max(grad_gap(ebb, l_ce(ev)));

        let top_gap = |a: ContactElement, b: ContactElement| -> f64 {
            (a.x - b.x).abs().max((a.y - b.y).abs())
        };
        top_views = top_views
            .max(top_gap(l_ce(ev), ef))
            .max(top_gap(l_ce(ec), ecb))
            .max(top_gap(l_ce(eb), ebb));
    }

    let degenerate = n_max <= 1e-12 * (1.0 + f_max);
    let flexibility = if degenerate {
        0.0
    } else {
        k_stationarity(&w.c, &w.c_bar, grid)?.max(k_stationarity(&w.b, &w.b_bar, grid)?)
    };

    Ok(WreathReport {
        orthogonality,
        delta_duality,
        quarter_turn_parallel: quarter_turn,
        flexibility,
        nu_duality,
        parallel_planes: parallel,
        shared_top_views: top_views,
        degenerate,
    })
}

// ---------------------------------------------------------------------------
// Relative Weingarten structure
// ---------------------------------------------------------------------------

/// The relative Weingarten map of `F` with normalization `LC`, expressed in
/// second derivatives of the velocity height.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelativeWeingarten {
    /// `W = [[-n_uv, n_uu], [-n_vv, n_uv]]`; trace-free, so the relative mean
    /// curvature vanishes.
    pub w: [[f64; 2]; 2],
    /// Gaussian curvature of the velocity diagram at this point.
    pub k_velocity: f64,
    /// Relative principal curvatures `±√(n_uv² - n_uu n_vv) = ±√(-K(V))`
    /// when real.
    pub kappa_rel: Option<(f64, f64)>,
    /// The eigenvalue pair is purely imaginary (`K(V) > 0`).
    pub complex: bool,
    /// Residual of `LC_u = -n_uv F_u + n_uu F_v` and
    /// `LC_v = -n_vv F_u + n_uv F_v` (all three components of both).
    pub lc_relation_residual: f64,
}

pub fn relative_weingarten(pair: &FlexPair, u: f64, v: f64) -> FieldResult<RelativeWeingarten> {
    let nj = pair.n.jet_at(u, v)?;
    let fj = pair.f.jet_at(u, v)?;
    let w = [[-nj.duv, nj.duu], [-nj.dvv, nj.duv]];
    let k_velocity = nj.duu * nj.dvv - nj.duv * nj.duv;
    let disc = -k_velocity;
    let (kappa_rel, complex) = if disc >= 0.0 {
        (Some((-disc.sqrt(), disc.sqrt())), false)
    } else {
        (None, true)
    };

    // LC = (-n_v, n_u, -c, f_u, f_v); its parameter derivatives must be the
    // stated tangent-plane combinations of F_u = (1, 0, f_u), F_v = (0, 1, f_v).
    let c_u = fj.du * nj.duv - fj.dv * nj.duu;
    let c_v = fj.du * nj.dvv - fj.dv * nj.duv;
    let lc_u = [-nj.duv, nj.duu, -c_u];
    let lc_v = [-nj.dvv, nj.duv, -c_v];
    let rhs_u = [-nj.duv, nj.duu, -nj.duv * fj.du + nj.duu * fj.dv];
    let rhs_v = [-nj.dvv, nj.duv, -nj.dvv * fj.du + nj.duv * fj.dv];
    let mut res = 0.0_f64;
    for k in 0..3 {
        res = res.max((lc_u[k] - rhs_u[k]).abs()).max((lc_v[k] - rhs_v[k]).abs());
    }

    Ok(RelativeWeingarten {
        w,
        k_velocity,
        kappa_rel,
        complex,
        lc_relation_residual: res,
    })
}

// ---------------------------------------------------------------------------
// Splitting and merging isometric pairs
// ---------------------------------------------------------------------------

/// Splits a flex pair into the two finitely isometric surfaces
/// `(f + n, f - n)`. Fails when the pair is not flexible to `tol`.
pub fn split_pair(
    pair: &FlexPair,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<(HeightField, HeightField)> {
    let worst = pair.max_flex_residual(grid)?;
    if worst > tol {
        return Err(FieldError::Degenerate(format!(
            "pair is not first-order flexible: max residual {worst:e} exceeds {tol:e}"
        )));
    }
    Ok((
        HeightField(ScalarField::lin_comb(1.0, &pair.f.0, 1.0, &pair.n.0)),
        HeightField(ScalarField::lin_comb(1.0, &pair.f.0, -1.0, &pair.n.0)),
    ))
}

/// Merges an isometric pair into the middle surface `(f₁ + f₂)/2` with
/// velocity height `f₁ - f₂`. Note the asymmetry with [`split_pair`]: a
/// round trip reproduces the middle surface exactly and doubles the velocity
/// height, which spans the same one-dimensional space of flexes.
pub fn merge(f1: &HeightField, f2: &HeightField) -> FlexPair {
    FlexPair {
        f: HeightField(ScalarField::lin_comb(0.5, &f1.0, 0.5, &f2.0)),
        n: HeightField(ScalarField::lin_comb(1.0, &f1.0, -1.0, &f2.0)),
    }
}

// ---------------------------------------------------------------------------
// The paratactic correspondence
// ---------------------------------------------------------------------------

/// Left and right image points of a contact element:
/// `E_l = (x + q, y - p)`, `E_r = (x - q, y + p)`.
pub fn paratactic_forward(e: ContactElement) -> ([f64; 2], [f64; 2]) {
    ([e.x + e.q, e.y - e.p], [e.x - e.q, e.y + e.p])
}

/// A two-parameter map into the plane with jet access.
#[derive(Clone)]
pub struct PlanarMap {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl PlanarMap {
    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        PlanarMap { x, y }
    }

    pub fn parse(x: &str, y: &str) -> FieldResult<Self> {
        Ok(PlanarMap {
            x: ScalarField::parse(x)?,
            y: ScalarField::parse(y)?,
        })
    }

    pub fn point(&self, u: f64, v: f64) -> FieldResult<[f64; 2]> {
        Ok([self.x.value(u, v)?, self.y.value(u, v)?])
    }

    pub fn jacobian(&self, u: f64, v: f64) -> FieldResult<f64> {
        let jx = self.x.jet2(u, v)?;
        let jy = self.y.jet2(u, v)?;
        Ok(jx.du * jy.dv - jx.dv * jy.du)
    }
}

/// A surface of contact elements recovered from a left/right image pair.
#[derive(Clone)]
pub struct ParatacticPreimage {
    pub field: ContactField,
    /// Largest discrepancy between the two height-integration path orders
    /// over the probe points.
    pub closure_residual: f64,
}

/// Reconstructs the contact field whose paratactic images are `el ↦ er`:
/// top view `(x, y) = (E_l + E_r)/2`, gradient `(q, -p) = (E_l - E_r)/2`, and
/// height from `z_u = p x_u + q y_u`, `z_v = p x_v + q y_v` by path
/// integration anchored at `z(u0, v0) = z0`. Requires the correspondence to
/// be area preserving (equal Jacobians) to `tol` on the grid; that condition
/// is exactly the integrability of the height.
pub fn paratactic_inverse(
    el: &PlanarMap,
    er: &PlanarMap,
    grid: &Grid2,
    z0: f64,
    tol: f64,
) -> FieldResult<ParatacticPreimage> {
    let mut worst = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        worst = worst.max((el.jacobian(u, v)? - er.jacobian(u, v)?).abs());
    }
    if worst > tol {
        return Err(FieldError::Degenerate(format!(
            "left-right correspondence is not area preserving: max Jacobian gap {worst:e} exceeds {tol:e}"
        )));
    }

    let x = ScalarField::lin_comb(0.5, &el.x, 0.5, &er.x);
    let y = ScalarField::lin_comb(0.5, &el.y, 0.5, &er.y);
    let q = ScalarField::lin_comb(0.5, &el.x, -0.5, &er.x);
    let p = ScalarField::lin_comb(0.5, &er.y, -0.5, &el.y);

    // z_u and its u-derivative / z_v and its v-derivative for the corrected
    // trapezoid legs, all from exact jets.
    let slope_u = {
        let (x, y, p, q) = (x.clone(), y.clone(), p.clone(), q.clone());
        move |u: f64, v: f64| -> FieldResult<(f64, f64)> {
            let (jx, jy, jp, jq) = (x.jet2(u, v)?, y.jet2(u, v)?, p.jet2(u, v)?, q.jet2(u, v)?);
            let g = jp.value * jx.du + jq.value * jy.du;
            let gp = jp.du * jx.du + jp.value * jx.duu + jq.du * jy.du + jq.value * jy.duu;
            Ok((g, gp))
        }
    };
    let slope_v = {
        let (x, y, p, q) = (x.clone(), y.clone(), p.clone(), q.clone());
        move |u: f64, v: f64| -> FieldResult<(f64, f64)> {
            let (jx, jy, jp, jq) = (x.jet2(u, v)?, y.jet2(u, v)?, p.jet2(u, v)?, q.jet2(u, v)?);
            let g = jp.value * jx.dv + jq.value * jy.dv;
            let gp = jp.dv * jx.dv + jp.value * jx.dvv + jq.dv * jy.dv + jq.value * jy.dvv;
            Ok((g, gp))
        }
    };
    let (u0, v0) = (grid.u0, grid.v0);
    let step = 0.125 * grid.hu.min(grid.hv);
    let panels = move |len: f64| ((len / step).abs().ceil() as usize).max(2);
    let z_value = {
        let (su, sv) = (slope_u.clone(), slope_v.clone());
        move |u: f64, v: f64, row_first: bool| -> FieldResult<f64> {
            let leg_u = |at_v: f64| hermite_trapezoid(u0, u, panels(u - u0), |t| su(t, at_v));
            let leg_v = |at_u: f64| hermite_trapezoid(v0, v, panels(v - v0), |t| sv(at_u, t));
            if row_first {
                Ok(z0 + leg_u(v0)? + leg_v(u)?)
            } else {
                Ok(z0 + leg_v(u0)? + leg_u(v)?)
            }
        }
    };

    let probes = [
        (grid.u0, grid.v_max()),
        (grid.u_max(), grid.v0),
        (grid.u_max(), grid.v_max()),
        (0.5 * (grid.u0 + grid.u_max()), 0.5 * (grid.v0 + grid.v_max())),
    ];
    let mut closure_residual = 0.0_f64;
    for &(u, v) in &probes {
        closure_residual =
            closure_residual.max((z_value(u, v, true)? - z_value(u, v, false)?).abs());
    }

    let z = {
        let (x, y, p, q) = (x.clone(), y.clone(), p.clone(), q.clone());
        ScalarField::from_fn(move |u, v| {
            let (jx, jy, jp, jq) = (x.jet2(u, v)?, y.jet2(u, v)?, p.jet2(u, v)?, q.jet2(u, v)?);
            let zuv = 0.5
                * ((jp.dv * jx.du + jp.value * jx.duv + jq.dv * jy.du + jq.value * jy.duv)
                    + (jp.du * jx.dv + jp.value * jx.duv + jq.du * jy.dv + jq.value * jy.duv));
            Ok(Jet2 {
                value: z_value(u, v, true)?,
                du: jp.value * jx.du + jq.value * jy.du,
                dv: jp.value * jx.dv + jq.value * jy.dv,
                duu: jp.du * jx.du + jp.value * jx.duu + jq.du * jy.du + jq.value * jy.duu,
                duv: zuv,
                dvv: jp.dv * jx.dv + jp.value * jx.dvv + jq.dv * jy.dv + jq.value * jy.dvv,
            })
        })
    };
    Ok(ParatacticPreimage {
        field: ContactField { x, y, z, p, q },
        closure_residual,
    })
}

// ---------------------------------------------------------------------------
// Transfer of Euclidean first-order flexes
// ---------------------------------------------------------------------------

/// A Euclidean first-order flex: surface, velocity field, rotation and
/// translation diagrams satisfying `Vᵉ = C̄ᵉ + Cᵉ × Fᵉ`.
#[derive(Clone)]
pub struct EuclideanDiagrams {
    pub f: ParamSurface,
    pub v: ParamSurface,
    pub c: ParamSurface,
    pub c_bar: ParamSurface,
}

/// Relation residuals of a transferred diagram quadruple.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct E2iResiduals {
    /// Isotropic orthogonality of `(F, V)` and `(C, C̄)`.
    pub orthogonality: f64,
    /// δ-duality of `(V, C̄)`.
    pub delta_duality: f64,
    /// Parallel tangent planes of `(F, JC)`.
    pub quarter_turn_parallel: f64,
}

/// The transferred quadruple, expressed in the coordinates of the chosen
/// frame (third axis = the new isotropic direction).
#[derive(Clone)]
pub struct IsotropicDiagrams {
    pub f: ParamSurface,
    pub v: ParamSurface,
    pub c: ParamSurface,
    pub c_bar: ParamSurface,
    pub residuals: E2iResiduals,
}

/// Contact element of a parametrized surface at `(u, v)`; fails where the top
/// view is singular or the tangent plane is isotropic.
pub fn contact_element_of(s: &ParamSurface, u: f64, v: f64) -> FieldResult<ContactElement> {
    let [jx, jy, jz] = s.jets(u, v)?;
    let d = jx.du * jy.dv - jy.du * jx.dv;
    let scale = [jx.du, jx.dv, jy.du, jy.dv]
        .iter()
        .fold(1.0_f64, |m, &t| m.max(t.abs()));
    if d.abs() <= 1e-12 * scale * scale {
        return Err(FieldError::Degenerate(format!(
            "singular top view at ({u}, {v}): cannot extract a non-isotropic tangent plane (det = {d:e})"
        )));
    }
    let p = (jz.du * jy.dv - jz.dv * jy.du) / d;
    let q = (jx.du * jz.dv - jx.dv * jz.du) / d;
    Ok(ContactElement::new(jx.value, jy.value, jz.value, p, q))
}

fn frame_component(s: &ParamSurface, e: V3) -> ScalarField {
    let (x, y, z) = (s.x.clone(), s.y.clone(), s.z.clone());
    ScalarField::from_fn(move |u, v| {
        Ok(x.jet2(u, v)? * e[0] + y.jet2(u, v)? * e[1] + z.jet2(u, v)? * e[2])
    })
}

fn to_frame(s: &ParamSurface, frame: &[V3; 3]) -> ParamSurface {
    ParamSurface::new(
        frame_component(s, frame[0]),
        frame_component(s, frame[1]),
        frame_component(s, frame[2]),
    )
}

fn orthogonality_param_at(a: &ParamSurface, b: &ParamSurface, u: f64, v: f64) -> FieldResult<f64> {
    let [ax, ay, _] = a.jets(u, v)?;
    let [bx, by, _] = b.jets(u, v)?;
    let uu = ax.du * bx.du + ay.du * by.du;
    let vv = ax.dv * bx.dv + ay.dv * by.dv;
    let cross = ax.du * bx.dv + ay.du * by.dv + ax.dv * bx.du + ay.dv * by.du;
    Ok(uu.abs().max(vv.abs()).max(cross.abs()))
}

/// Transfers a Euclidean first-order flex into the isotropic setting: a
/// direction `e₃` is declared isotropic via an orthonormal right-handed frame
/// `(e₁, e₂, e₃)` (columns). In frame coordinates the outputs are `F = Fᵉ`,
/// `C` = quarter-turn-back of `Cᵉ` about the new vertical,
/// `V = (-F₂, F₁, n)` with `n = ⟨Vᵉ, e₃⟩`, and
/// `C̄ = (C₂, -C₁, -⟨C̄ᵉ, e₃⟩)`. The returned residuals verify that the
/// transferred pairs satisfy the same wreath relations as in the intrinsic
/// construction.
pub fn e2i_diagrams(
    d: &EuclideanDiagrams,
    frame: [V3; 3],
    grid: &Grid2,
    tol: f64,
) -> FieldResult<IsotropicDiagrams> {
    // frame sanity: orthonormal and right-handed
    for a in 0..3 {
        for b in a..3 {
            let want = if a == b { 1.0 } else { 0.0 };
            if (dot3(frame[a], frame[b]) - want).abs() > 1e-10 {
                return Err(FieldError::Degenerate(
                    "frame is not orthonormal".into(),
                ));
            }
        }
    }
    if dot3(cross3(frame[0], frame[1]), frame[2]) < 0.0 {
        return Err(FieldError::Degenerate(
            "frame is not right-handed".into(),
        ));
    }

    // Euclidean compatibility: V^e = C̄^e + C^e x F^e on the grid.
    let mut worst = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let ve = d.v.point(u, v)?;
        let want = {
            let cb = d.c_bar.point(u, v)?;
            let ce = d.c.point(u, v)?;
            let fe = d.f.point(u, v)?;
            let cx = cross3(ce, fe);
            [cb[0] + cx[0], cb[1] + cx[1], cb[2] + cx[2]]
        };
        let gap = sub3(ve, want);
        worst = worst.max(gap[0].abs().max(gap[1].abs()).max(gap[2].abs()));
    }
    if worst > tol {
        return Err(FieldError::Degenerate(format!(
            "inputs are not a Euclidean first-order flex: max residual of V = C̄ + C x F is {worst:e}, exceeding {tol:e}"
        )));
    }

    let fp = to_frame(&d.f, &frame);
    let cep = to_frame(&d.c, &frame);
    // quarter-turn back about the new vertical: (x, y, z) -> (y, -x, z)
    let c = ParamSurface::new(cep.y.clone(), cep.x.scaled(-1.0), cep.z.clone());
    let n = frame_component(&d.v, frame[2]);
    let v = ParamSurface::new(fp.y.scaled(-1.0), fp.x.clone(), n);
    let c_bar = ParamSurface::new(
        cep.x.scaled(-1.0),
        cep.y.scaled(-1.0),
        frame_component(&d.c_bar, frame[2]).scaled(-1.0),
    );

    let mut orthogonality = 0.0_f64;
    let mut delta_duality = 0.0_f64;
    let mut quarter_turn = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let (uu, vv) = (grid.u(i), grid.v(j));
        orthogonality = orthogonality
            .max(orthogonality_param_at(&fp, &v, uu, vv)?)
            .max(orthogonality_param_at(&c, &c_bar, uu, vv)?);
        match (contact_element_of(&v, uu, vv), contact_element_of(&c_bar, uu, vv)) {
            (Ok(ev), Ok(ecb)) => {
                delta_duality = delta_duality.max(element_gap(delta_ce(ev), ecb));
            }
            (Err(FieldError::Degenerate(_)), _) | (_, Err(FieldError::Degenerate(_))) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        match (contact_element_of(&fp, uu, vv), contact_element_of(&c, uu, vv)) {
            (Ok(ef), Ok(ec)) => {
                let jc = j_ce(ec);
                quarter_turn = quarter_turn.max((ef.p - jc.p).abs().max((ef.q - jc.q).abs()));
            }
            (Err(FieldError::Degenerate(_)), _) | (_, Err(FieldError::Degenerate(_))) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }

    Ok(IsotropicDiagrams {
        f: fp,
        v,
        c,
        c_bar,
        residuals: E2iResiduals {
            orthogonality,
            delta_duality,
            quarter_turn_parallel: quarter_turn,
        },
    })
}
