//! Contact elements and the two metric dualities of isotropic space:
//! δ, the polarity in the parabolic unit sphere `2z = x^2 + y^2`, and ν,
//! the null polarity. Both are involutive point↔plane correlations that
//! preserve the isotropic metric. This module also covers support
//! functions, plane envelopes, and the curvature transformation rules.

use crate::fields::{
    FieldError, FieldResult, Grid2, HeightField, ParamSurface, ScalarField, SupportField,
};
use crate::geom::{solve3, V3};
use crate::jet::Jet2;

/// A contact element: point `(x, y, z)` with an incident non-isotropic
/// plane of Euclidean normal `(p, q, -1)`, i.e. the plane
/// `z = p(x̂ - x) + q(ŷ - y) + z`. The quintuple is redundancy-free: the
/// point always lies on the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactElement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub p: f64,
    pub q: f64,
}

impl ContactElement {
    pub fn new(x: f64, y: f64, z: f64, p: f64, q: f64) -> Self {
        ContactElement { x, y, z, p, q }
    }

    pub fn point(&self) -> V3 {
        [self.x, self.y, self.z]
    }

    /// The carried plane in `z = a x + b y + c` form.
    pub fn plane(&self) -> IsoPlane {
        IsoPlane {
            a: self.p,
            b: self.q,
            c: self.z - self.p * self.x - self.q * self.y,
        }
    }
}

/// A non-isotropic plane `z = a x + b y + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl IsoPlane {
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }

    /// Isotropic angle to another non-isotropic plane: the Euclidean norm
    /// of the gradient difference.
    pub fn iso_angle_to(&self, other: &IsoPlane) -> f64 {
        let da = self.a - other.a;
        let db = self.b - other.b;
        (da * da + db * db).sqrt()
    }
}

/// Which of the two metric dualities to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualityMap {
    Delta,
    Nu,
}

/// δ on contact elements: `(x,y,z,p,q) ↦ (p, q, px+qy-z, x, y)`.
pub fn delta_ce(e: ContactElement) -> ContactElement {
    ContactElement {
        x: e.p,
        y: e.q,
        z: e.p * e.x + e.q * e.y - e.z,
        p: e.x,
        q: e.y,
    }
}

/// ν on contact elements: `(x,y,z,p,q) ↦ (q, -p, z-px-qy, -y, x)`.
pub fn nu_ce(e: ContactElement) -> ContactElement {
    ContactElement {
        x: e.q,
        y: -e.p,
        z: e.z - e.p * e.x - e.q * e.y,
        p: -e.y,
        q: e.x,
    }
}

/// δ as a point→plane polarity: the point `(a,b,c)` maps to the plane
/// `z = a x + b y - c`.
pub fn delta_point(p: V3) -> IsoPlane {
    IsoPlane { a: p[0], b: p[1], c: -p[2] }
}

/// δ as a plane→point polarity (inverse of [`delta_point`]).
pub fn delta_plane(t: IsoPlane) -> V3 {
    [t.a, t.b, -t.c]
}

/// ν as a point→plane null polarity: `(a,b,c)` maps to `z = -b x + a y + c`.
pub fn nu_point(p: V3) -> IsoPlane {
    IsoPlane { a: -p[1], b: p[0], c: p[2] }
}

/// ν as a plane→point null polarity (inverse of [`nu_point`]).
pub fn nu_plane(t: IsoPlane) -> V3 {
    [t.b, -t.a, t.c]
}

/// The rigid motion relating the two dualities: z-rotation by π/2 composed
/// with the reflection in `z = 0`. Satisfies `m_rot_refl(ν(E)) = δ(E)`.
pub fn m_rot_refl(e: ContactElement) -> ContactElement {
    ContactElement {
        x: -e.y,
        y: e.x,
        z: -e.z,
        p: e.q,
        q: -e.p,
    }
}

// ---------------------------------------------------------------------------
// Contact fields
// ---------------------------------------------------------------------------

/// A two-parameter field of contact elements: five scalar fields with jet
/// access, so that integrability and curvature of the carried point set can
/// be interrogated.
#[derive(Clone, Debug)]
pub struct ContactField {
    pub x: ScalarField,
    pub y: ScalarField,
    pub z: ScalarField,
    pub p: ScalarField,
    pub q: ScalarField,
}

impl ContactField {
    /// Contact elements of a graph surface: `E(u,v) = (u, v, f, f_u, f_v)`.
    pub fn of_graph(f: &HeightField) -> FieldResult<Self> {
        Ok(ContactField {
            x: ScalarField::coord_u(),
            y: ScalarField::coord_v(),
            z: f.0.clone(),
            p: f.0.deriv_u()?,
            q: f.0.deriv_v()?,
        })
    }

    pub fn element_at(&self, u: f64, v: f64) -> FieldResult<ContactElement> {
        Ok(ContactElement {
            x: self.x.value(u, v)?,
            y: self.y.value(u, v)?,
            z: self.z.value(u, v)?,
            p: self.p.value(u, v)?,
            q: self.q.value(u, v)?,
        })
    }

    pub fn jets_at(&self, u: f64, v: f64) -> FieldResult<[Jet2; 5]> {
        Ok([
            self.x.jet2(u, v)?,
            self.y.jet2(u, v)?,
            self.z.jet2(u, v)?,
            self.p.jet2(u, v)?,
            self.q.jet2(u, v)?,
        ])
    }

    /// Apply δ pointwise; all component jets of the image remain exact.
    pub fn delta(&self) -> ContactField {
        let (x, y, z) = (self.x.clone(), self.y.clone(), self.z.clone());
        let (p, q) = (self.p.clone(), self.q.clone());
        let zs = {
            let (x, y, z, p, q) = (x.clone(), y.clone(), z.clone(), p.clone(), q.clone());
            ScalarField::from_fn(move |u, v| {
                let w = p.jet2(u, v)? * x.jet2(u, v)? + q.jet2(u, v)? * y.jet2(u, v)?
                    - z.jet2(u, v)?;
                Ok(w)
            })
        };
        ContactField { x: p, y: q, z: zs, p: x, q: y }
    }

    /// Apply ν pointwise; all component jets of the image remain exact.
    pub fn nu(&self) -> ContactField {
        let (x, y, z) = (self.x.clone(), self.y.clone(), self.z.clone());
        let (p, q) = (self.p.clone(), self.q.clone());
        let zs = {
            let (x, y, z, p, q) = (x.clone(), y.clone(), z.clone(), p.clone(), q.clone());
            ScalarField::from_fn(move |u, v| {
                let w = z.jet2(u, v)?
                    - (p.jet2(u, v)? * x.jet2(u, v)? + q.jet2(u, v)? * y.jet2(u, v)?);
                Ok(w)
            })
        };
        ContactField {
            x: q,
            y: p.scaled(-1.0),
            z: zs,
            p: y.scaled(-1.0),
            q: x,
        }
    }

    pub fn apply(&self, which: DualityMap) -> ContactField {
        match which {
            DualityMap::Delta => self.delta(),
            DualityMap::Nu => self.nu(),
        }
    }

    /// The carried point set as a parametrized surface.
    pub fn point_surface(&self) -> ParamSurface {
        ParamSurface::new(self.x.clone(), self.y.clone(), self.z.clone())
    }

    /// Residual of the contact integrability condition
    /// `p_v x_u + q_v y_u - p_u x_v - q_u y_v`; zero exactly when the field
    /// consists of the contact elements of one surface.
    pub fn integrability_residual(&self, u: f64, v: f64) -> FieldResult<f64> {
        let jx = self.x.jet2(u, v)?;
        let jy = self.y.jet2(u, v)?;
        let jp = self.p.jet2(u, v)?;
        let jq = self.q.jet2(u, v)?;
        Ok(jp.dv * jx.du + jq.dv * jy.du - jp.du * jx.dv - jq.du * jy.dv)
    }
}

/// Contact elements of the δ- or ν-dual of a graph surface; e.g. under δ the
/// image is `(f_u, f_v, f_u u + f_v v - f, u, v)`.
pub fn dualize_graph(f: &HeightField, which: DualityMap) -> FieldResult<ContactField> {
    Ok(ContactField::of_graph(f)?.apply(which))
}

// ---------------------------------------------------------------------------
// Support functions
// ---------------------------------------------------------------------------

/// Point representation of a surface from its isotropic support function:
/// `(h_u, h_v, h_u u + h_v v - h)`.
pub fn surface_from_support(h: &SupportField, u: f64, v: f64) -> FieldResult<V3> {
    let j = h.jet_at(u, v)?;
    Ok([j.du, j.dv, j.du * u + j.dv * v - j.value])
}

/// The support-function point representation as a parametrized surface with
/// exact jets (needs third-order jets of `h`).
pub fn support_surface(h: &SupportField) -> FieldResult<ParamSurface> {
    let hu = h.0.deriv_u()?;
    let hv = h.0.deriv_v()?;
    let z = {
        let (hu, hv, h0) = (hu.clone(), hv.clone(), h.0.clone());
        ScalarField::from_fn(move |u, v| {
            Ok(hu.jet2(u, v)? * Jet2::var_u(u) + hv.jet2(u, v)? * Jet2::var_v(v)
                - h0.jet2(u, v)?)
        })
    };
    Ok(ParamSurface::new(hu, hv, z))
}

/// Envelope point of a two-parameter family of planes `⟨x, n(u,v)⟩ = d(u,v)`
/// with `n` given component-wise: solves `N e = D` with `N = (n, n_u, n_v)ᵀ`
/// and `D = (d, d_u, d_v)ᵀ`.
pub fn envelope(n: &ParamSurface, d: &ScalarField, u: f64, v: f64) -> FieldResult<V3> {
    let [jx, jy, jz] = n.jets(u, v)?;
    let jd = d.jet2(u, v)?;
    let rows = [
        [jx.value, jy.value, jz.value],
        [jx.du, jy.du, jz.du],
        [jx.dv, jy.dv, jz.dv],
    ];
    let rhs = [jd.value, jd.du, jd.dv];
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1.0);
    solve3(rows, rhs, 1e-12 * scale * scale * scale).ok_or_else(|| {
        FieldError::Degenerate(format!(
            "plane family has singular N at ({u}, {v}); envelope degenerates to a cone, cylinder, or curve (det = {:e})",
            crate::geom::det3(rows[0], rows[1], rows[2])
        ))
    })
}

/// `K` and `H` from the support function. The printed source proposition
/// omits the factor ½ in `H`; on the self-dual unit sphere that yields 2
/// instead of 1, contradicting the graph formula, so the implementation
/// divides by 2. See `curvature_from_support` tests for the explicit
/// discrepancy assertion.
pub fn curvature_from_support(h: &SupportField, u: f64, v: f64) -> FieldResult<(f64, f64)> {
    let j = h.jet_at(u, v)?;
    let den = j.duu * j.dvv - j.duv * j.duv;
    let scale = j.duu.abs().max(j.dvv.abs()).max(j.duv.abs()).max(1.0);
    if den.abs() <= 1e-14 * scale * scale {
        return Err(FieldError::Degenerate(format!(
            "flat point of the support function at ({u}, {v}): h_uu h_vv - h_uv^2 = {den:e}"
        )));
    }
    Ok((1.0 / den, (j.duu + j.dvv) / (2.0 * den)))
}

/// Curvature transformation under a metric duality:
/// δ: `(κ, K, H) → (1/κ, 1/K, H/K)`; ν: `(κ, K, H) → (-1/κ, 1/K, -H/K)`.
/// Requires `K ≠ 0` (developable points have no regular dual).
pub fn dual_curvature_rule(
    k: f64,
    h: f64,
    kappa: (f64, f64),
    which: DualityMap,
) -> FieldResult<(f64, f64, (f64, f64))> {
    if k == 0.0 {
        return Err(FieldError::Degenerate(
            "K = 0: developable surface point has no regular dual".into(),
        ));
    }
    let s = match which {
        DualityMap::Delta => 1.0,
        DualityMap::Nu => -1.0,
    };
    let (mut k1, mut k2) = (s / kappa.0, s / kappa.1);
    if k1 > k2 {
        std::mem::swap(&mut k1, &mut k2);
    }
    Ok((1.0 / k, s * h / k, (k1, k2)))
}

/// Total absolute curvature `∫∫ |K| du dv` over the grid window and the
/// top-view area of δ(F) over the same window, computed independently (the
/// former by midpoint sums of `|K|`, the latter by shoelace areas of the
/// Gauss-image cells). The two agree for admissible surfaces.
pub fn karea_check(f: &HeightField, grid: &Grid2) -> FieldResult<(f64, f64)> {
    let mut kint = 0.0;
    let mut dual_area = 0.0;
    for j in 0..grid.nv - 1 {
        for i in 0..grid.nu - 1 {
            let (u0, v0) = (grid.u(i), grid.v(j));
            let (u1, v1) = (grid.u(i + 1), grid.v(j + 1));
            // midpoint rule for |K|
            let jm = f.jet_at(0.5 * (u0 + u1), 0.5 * (v0 + v1))?;
            kint += (jm.duu * jm.dvv - jm.duv * jm.duv).abs() * grid.hu * grid.hv;
            // shoelace area of the mapped cell under (u,v) -> (f_u, f_v)
            let corner = |u: f64, v: f64| -> FieldResult<[f64; 2]> {
                let jj = f.jet_at(u, v)?;
                Ok([jj.du, jj.dv])
            };
            let c = [
                corner(u0, v0)?,
                corner(u1, v0)?,
                corner(u1, v1)?,
                corner(u0, v1)?,
            ];
            let mut a = 0.0;
            for t in 0..4 {
                let s = (t + 1) % 4;
                a += c[t][0] * c[s][1] - c[s][0] * c[t][1];
            }
            dual_area += 0.5 * a.abs();
        }
    }
    Ok((kint, dual_area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_param;
    use crate::fields::iso_distance;
    use approx::assert_relative_eq;

    #[test]
    fn delta_examples() {
        let e = ContactElement::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(delta_ce(e), e); // unit-sphere point is self-dual
        let e = ContactElement::new(1.0, 2.0, 3.0, 4.0, 5.0);
        assert_eq!(delta_ce(e), ContactElement::new(4.0, 5.0, 11.0, 1.0, 2.0));
        assert_eq!(delta_ce(delta_ce(e)), e);
    }

    #[test]
    fn nu_examples() {
        let e = ContactElement::new(1.0, 2.0, 3.0, 4.0, 5.0);
        assert_eq!(nu_ce(e), ContactElement::new(5.0, -4.0, -11.0, -2.0, 1.0));
        assert_eq!(nu_ce(nu_ce(e)), e);
    }

    #[test]
    fn nu_is_delta_composed_with_motion() {
        let e = ContactElement::new(0.3, -1.2, 0.8, 2.0, -0.5);
        let lhs = m_rot_refl(nu_ce(e));
        let rhs = delta_ce(e);
        assert_relative_eq!(lhs.x, rhs.x, epsilon = 1e-15);
        assert_relative_eq!(lhs.y, rhs.y, epsilon = 1e-15);
        assert_relative_eq!(lhs.z, rhs.z, epsilon = 1e-15);
        assert_relative_eq!(lhs.p, rhs.p, epsilon = 1e-15);
        assert_relative_eq!(lhs.q, rhs.q, epsilon = 1e-15);
    }

    #[test]
    fn point_plane_polarities_are_inverse_and_incident() {
        let p = [0.7, -1.3, 2.1];
        assert_eq!(delta_plane(delta_point(p)), p);
        assert_eq!(nu_plane(nu_point(p)), p);
        // null polarity: each point lies on its own ν-plane
        let t = nu_point(p);
        assert_relative_eq!(t.height_at(p[0], p[1]), p[2], epsilon = 1e-15);
    }

    #[test]
    fn metric_duality_distance_becomes_angle() {
        let p1 = [0.2, 1.4, -0.6];
        let p2 = [-1.1, 0.3, 2.2];
        let d = iso_distance(p1, p2);
        assert_relative_eq!(delta_point(p1).iso_angle_to(&delta_point(p2)), d, epsilon = 1e-14);
        assert_relative_eq!(nu_point(p1).iso_angle_to(&nu_point(p2)), d, epsilon = 1e-14);
    }

    #[test]
    fn top_views_of_dual_lines() {
        // a line through A with direction B, dualized by mapping two planes
        // through it to points
        let a = [0.5, -0.2, 1.0];
        let b = [2.0, 1.0, 0.3];
        // two non-isotropic planes containing the line: z = alpha x + beta y + gamma
        // passing through a and a+b. Pick gradients g1, g2 solving the two
        // incidence equations.
        let plane_through = |gx: f64| -> IsoPlane {
            // fix gradient x-component, solve for y-component and offset
            // a3 = gx a1 + gy a2 + c; a3+b3 = gx(a1+b1) + gy(a2+b2) + c
            let gy = (b[2] - gx * b[0]) / b[1];
            let c = a[2] - gx * a[0] - gy * a[1];
            IsoPlane { a: gx, b: gy, c }
        };
        let t1 = plane_through(0.0);
        let t2 = plane_through(1.0);
        let topdir = [b[0], b[1]];
        // ν(L): line through ν(t1), ν(t2) has top view parallel to L's
        let (n1, n2) = (nu_plane(t1), nu_plane(t2));
        let dn = [n2[0] - n1[0], n2[1] - n1[1]];
        assert_relative_eq!(dn[0] * topdir[1] - dn[1] * topdir[0], 0.0, epsilon = 1e-12);
        // δ(L): top view orthogonal to L's
        let (d1, d2) = (delta_plane(t1), delta_plane(t2));
        let dd = [d2[0] - d1[0], d2[1] - d1[1]];
        assert_relative_eq!(dd[0] * topdir[0] + dd[1] * topdir[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn contact_field_of_graph_examples() {
        let f = HeightField::parse("(u^2+v^2)/2").unwrap();
        let e = ContactField::of_graph(&f).unwrap().element_at(0.3, -0.9).unwrap();
        assert_relative_eq!(e.z, 0.5 * (0.09 + 0.81), epsilon = 1e-15);
        assert_relative_eq!(e.p, 0.3, epsilon = 1e-15);
        assert_relative_eq!(e.q, -0.9, epsilon = 1e-15);

        let f = HeightField::parse("u*v").unwrap();
        let e = ContactField::of_graph(&f).unwrap().element_at(1.0, 2.0).unwrap();
        assert_eq!(
            (e.x, e.y, e.z, e.p, e.q),
            (1.0, 2.0, 2.0, 2.0, 1.0)
        );
    }

    #[test]
    fn dualize_graph_matches_figure_parametrization() {
        // f = (u^2 - v^3)/2: delta(F) is (u, -3v^2/2, (u^2 - 2v^3)/2)
        let f = HeightField::parse("(u^2 - v^3)/2").unwrap();
        let d = dualize_graph(&f, DualityMap::Delta).unwrap();
        for &(u, v) in &[(0.4, 0.9), (-1.2, 0.3)] {
            let e = d.element_at(u, v).unwrap();
            assert_relative_eq!(e.x, u, epsilon = 1e-14);
            assert_relative_eq!(e.y, -1.5 * v * v, epsilon = 1e-14);
            assert_relative_eq!(e.z, 0.5 * (u * u - 2.0 * v * v * v), epsilon = 1e-14);
        }
        // unit sphere is fixed under delta
        let s = HeightField::parse("(u^2+v^2)/2").unwrap();
        let ds = dualize_graph(&s, DualityMap::Delta).unwrap();
        let e = ds.element_at(0.6, -0.1).unwrap();
        assert_relative_eq!(e.x, 0.6, epsilon = 1e-14);
        assert_relative_eq!(e.y, -0.1, epsilon = 1e-14);
        assert_relative_eq!(e.z, 0.5 * (0.36 + 0.01), epsilon = 1e-14);
    }

    #[test]
    fn harmonic_graph_has_harmonic_dual_support() {
        // for delta(F), the support function of the image is f itself read
        // over the gradient parameters; harmonic f stays harmonic
        let f = HeightField::parse("u^2 - v^2 + 3*u").unwrap();
        let d = dualize_graph(&f, DualityMap::Delta).unwrap();
        // the dual's plane at (u,v) is z = u x̂ + v ŷ - (pu+qv-f) ... its
        // support value is pu + qv - f; as a field over (u,v) its Laplacian
        // equals that of f up to the harmonic polynomial pieces.
        let support = d.z.clone();
        let j = support.jet2(0.3, 0.4).unwrap();
        // support = f_u u + f_v v - f = u^2 - v^2 + ... recompute directly:
        let expect = (2.0 * 0.3 + 3.0) * 0.3 + (-2.0 * 0.4) * 0.4 - (0.09 - 0.16 + 0.9);
        assert_relative_eq!(j.value, expect, epsilon = 1e-14);
    }

    #[test]
    fn surface_from_support_examples() {
        let h = SupportField::parse("(u^2+v^2)/2").unwrap();
        let p = surface_from_support(&h, 0.3, 0.8).unwrap();
        assert_relative_eq!(p[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);
        assert_relative_eq!(p[2], 0.5 * (0.09 + 0.64), epsilon = 1e-15);
        let h = SupportField::parse("0").unwrap();
        assert_eq!(surface_from_support(&h, 1.0, 2.0).unwrap(), [0.0, 0.0, 0.0]);
        let h = SupportField::parse("u").unwrap();
        assert_eq!(surface_from_support(&h, -0.4, 0.7).unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn envelope_specializes_to_support_representation() {
        let h = SupportField::parse("(u^3 + v^2*u)/4 + 1").unwrap();
        let n = ParamSurface::new(
            ScalarField::coord_u(),
            ScalarField::coord_v(),
            ScalarField::constant(-1.0),
        );
        for &(u, v) in &[(0.2, 0.5), (-0.8, 1.1)] {
            let e = envelope(&n, &h.0, u, v).unwrap();
            let s = surface_from_support(&h, u, v).unwrap();
            for k in 0..3 {
                assert_relative_eq!(e[k], s[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn envelope_rank_deficiency_errors() {
        // one-parameter family in disguise: n depends on u only
        let n = ParamSurface::new(
            ScalarField::parse("cos(u)").unwrap(),
            ScalarField::parse("sin(u)").unwrap(),
            ScalarField::constant(0.0),
        );
        let d = ScalarField::constant(1.0);
        assert!(matches!(
            envelope(&n, &d, 0.3, 0.2),
            Err(FieldError::Degenerate(_))
        ));
    }

    #[test]
    fn support_curvature_and_printed_discrepancy() {
        // self-dual unit sphere: K = H = 1
        let h = SupportField::parse("(u^2+v^2)/2").unwrap();
        let (k, hh) = curvature_from_support(&h, 0.2, -0.4).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-13);
        assert_relative_eq!(hh, 1.0, epsilon = 1e-13);
        // the formula as printed in the source material (no factor 1/2)
        // yields 2H here, contradicting the graph formula:
        let j = h.jet_at(0.2, -0.4).unwrap();
        let printed = (j.duu + j.dvv) / (j.duu * j.dvv - j.duv * j.duv);
        assert_relative_eq!(printed, 2.0 * hh, epsilon = 1e-13);

        // parabolic point: singular
        let flat = SupportField::parse("u*v + u").unwrap();
        assert!(curvature_from_support(&flat, 0.0, 0.0).is_ok());
        let flat = SupportField::parse("u^2").unwrap();
        assert!(matches!(
            curvature_from_support(&flat, 0.1, 0.1),
            Err(FieldError::Degenerate(_))
        ));
    }

    #[test]
    fn dual_curvature_rule_paraboloid() {
        let (k, h, kap) = dual_curvature_rule(6.0, 2.5, (2.0, 3.0), DualityMap::Delta).unwrap();
        assert_relative_eq!(k, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(h, 2.5 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(kap.0, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(kap.1, 1.0 / 2.0, epsilon = 1e-15);
        // sphere fixed
        let (k, h, _) = dual_curvature_rule(1.0, 1.0, (1.0, 1.0), DualityMap::Delta).unwrap();
        assert_eq!((k, h), (1.0, 1.0));
        assert!(dual_curvature_rule(0.0, 1.0, (0.0, 1.0), DualityMap::Delta).is_err());
    }

    #[test]
    fn dual_rule_cross_checked_by_param_curvature() {
        let f = HeightField::parse("(2*u^2+3*v^2)/2").unwrap();
        let d = dualize_graph(&f, DualityMap::Delta).unwrap();
        let (kd, hd) = curvature_param(&d.point_surface(), 0.3, -0.5).unwrap();
        assert_relative_eq!(kd, 1.0 / 6.0, epsilon = 1e-10);
        assert_relative_eq!(hd, 2.5 / 6.0, epsilon = 1e-10);
    }

    #[test]
    fn integrability_residuals() {
        let f = HeightField::parse("sin(u)*cosh(v)/2 + u^2*v").unwrap();
        let cf = ContactField::of_graph(&f).unwrap();
        assert_relative_eq!(cf.integrability_residual(0.4, -0.7).unwrap(), 0.0, epsilon = 1e-12);
        // E = (u, v, 0, v, 0) is not a surface's contact field
        let bogus = ContactField {
            x: ScalarField::coord_u(),
            y: ScalarField::coord_v(),
            z: ScalarField::constant(0.0),
            p: ScalarField::coord_v(),
            q: ScalarField::constant(0.0),
        };
        assert_relative_eq!(bogus.integrability_residual(0.1, 0.2).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn total_curvature_equals_dual_top_view_area() {
        let f = HeightField::parse("(u^2+v^2)/2 + sin(u)*cosh(v)/5").unwrap();
        let grid = Grid2::unit();
        let (kint, area) = karea_check(&f, &grid).unwrap();
        assert!(
            (kint - area).abs() <= 0.01 * area.max(kint),
            "kint = {kint}, dual area = {area}"
        );
    }
}
