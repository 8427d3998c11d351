//! Sum surfaces and Minkowski sums. Point-based sums add heights over a
//! shared top view; plane-based sums add support functions over shared
//! Gauss-image parameters (general offsets). Both come with quadratic
//! curvature laws in the sum parameter, checked here on grids.

use serde::Serialize;

use crate::curvature::{curvature_graph, mixed_curvature};
use crate::duality::curvature_from_support;
use crate::fields::{FieldResult, Grid2, HeightField, ScalarField, SupportField};

/// Point-based sum surface `F^t = (u, v, f + t g)`.
pub fn sum_point(f: &HeightField, g: &HeightField, t: f64) -> HeightField {
    HeightField(ScalarField::lin_comb(1.0, &f.0, t, &g.0))
}

/// Plane-based sum: the surface whose support function is `h1 + t h2`.
pub fn sum_plane(h1: &SupportField, h2: &SupportField, t: f64) -> SupportField {
    SupportField(ScalarField::lin_comb(1.0, &h1.0, t, &h2.0))
}

/// Residual report of the curvature laws for sum surfaces.
#[derive(Debug, Clone, Serialize)]
pub struct SumCurvatureReport {
    /// max |K(F^t) - (K(F) + 2t K(F,G) + t^2 K(G))|
    pub max_k_residual: f64,
    /// max |H(F^t) - (H(F) + t H(G))|
    pub max_h_residual: f64,
    pub points_checked: usize,
}

/// Verify the point-based quadratic curvature law over interior grid nodes.
pub fn sum_curvature_check(
    f: &HeightField,
    g: &HeightField,
    t: f64,
    grid: &Grid2,
) -> FieldResult<SumCurvatureReport> {
    let ft = sum_point(f, g, t);
    let mut max_k = 0.0f64;
    let mut max_h = 0.0f64;
    let mut count = 0;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let sf = curvature_graph(f, u, v)?;
        let sg = curvature_graph(g, u, v)?;
        let st = curvature_graph(&ft, u, v)?;
        let kfg = mixed_curvature(f, g, u, v)?;
        max_k = max_k.max((st.k - (sf.k + 2.0 * t * kfg + t * t * sg.k)).abs());
        max_h = max_h.max((st.h - (sf.h + t * sg.h)).abs());
        count += 1;
    }
    Ok(SumCurvatureReport { max_k_residual: max_k, max_h_residual: max_h, points_checked: count })
}

/// Residual report for the plane-based (support-function) curvature laws.
#[derive(Debug, Clone, Serialize)]
pub struct PlaneSumCurvatureReport {
    /// max |K*(F^t) - (K*(F) + t K*(F,G) + t^2 K*(G))| with
    /// `K* = h_uu h_vv - h_uv^2` and `K*(F,G)` its full polarization.
    pub max_kstar_residual: f64,
    /// max |K(F^t) - 1/K*(F^t)|
    pub max_k_residual: f64,
    /// max |H(F^t) - H*(F^t)/K*(F^t)| with `H* = (h_uu + h_vv)/2`
    pub max_h_residual: f64,
    pub points_checked: usize,
}

/// `K*` of a support function: the Hessian determinant (reciprocal of K).
fn kstar(h: &SupportField, u: f64, v: f64) -> FieldResult<(f64, f64)> {
    let j = h.jet_at(u, v)?;
    Ok((j.duu * j.dvv - j.duv * j.duv, 0.5 * (j.duu + j.dvv)))
}

/// Full polarization of `K*`: `K*(h+tg) = K*(h) + t K*(h,g) + t^2 K*(g)`.
fn kstar_mixed(h1: &SupportField, h2: &SupportField, u: f64, v: f64) -> FieldResult<f64> {
    let a = h1.jet_at(u, v)?;
    let b = h2.jet_at(u, v)?;
    Ok(a.duu * b.dvv + a.dvv * b.duu - 2.0 * a.duv * b.duv)
}

/// Verify the plane-based curvature laws over interior grid nodes.
pub fn plane_sum_curvature_check(
    h1: &SupportField,
    h2: &SupportField,
    t: f64,
    grid: &Grid2,
) -> FieldResult<PlaneSumCurvatureReport> {
    let ht = sum_plane(h1, h2, t);
    let mut max_kstar = 0.0f64;
    let mut max_k = 0.0f64;
    let mut max_h = 0.0f64;
    let mut count = 0;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let (k1, _) = kstar(h1, u, v)?;
        let (k2, _) = kstar(h2, u, v)?;
        let (kt, hstar_t) = kstar(&ht, u, v)?;
        let kmix = kstar_mixed(h1, h2, u, v)?;
        max_kstar = max_kstar.max((kt - (k1 + t * kmix + t * t * k2)).abs());
        let (k, h) = curvature_from_support(&ht, u, v)?;
        max_k = max_k.max((k - 1.0 / kt).abs());
        max_h = max_h.max((h - hstar_t / kt).abs());
        count += 1;
    }
    Ok(PlaneSumCurvatureReport {
        max_kstar_residual: max_kstar,
        max_k_residual: max_k,
        max_h_residual: max_h,
        points_checked: count,
    })
}

/// Windowed top-view mixed area of the duals δ(F), δ(G): the sum over grid
/// cells of the discrete mixed area of the corresponding Gauss-image quads.
/// Converges to `∫∫ K(F,G) du dv`; it vanishes identically iff the mixed
/// curvature does.
pub fn dual_mixed_area(f: &HeightField, g: &HeightField, grid: &Grid2) -> FieldResult<f64> {
    let gauss = |hf: &HeightField, u: f64, v: f64| -> FieldResult<[f64; 2]> {
        let j = hf.jet_at(u, v)?;
        Ok([j.du, j.dv])
    };
    let mut total = 0.0;
    for j in 0..grid.nv - 1 {
        for i in 0..grid.nu - 1 {
            let corners = [
                (grid.u(i), grid.v(j)),
                (grid.u(i + 1), grid.v(j)),
                (grid.u(i + 1), grid.v(j + 1)),
                (grid.u(i), grid.v(j + 1)),
            ];
            let mut p = [[0.0; 2]; 4];
            let mut q = [[0.0; 2]; 4];
            for (k, &(u, v)) in corners.iter().enumerate() {
                p[k] = gauss(f, u, v)?;
                q[k] = gauss(g, u, v)?;
            }
            let mut a = 0.0;
            for k in 0..4 {
                let s = (k + 1) % 4;
                a += p[k][0] * q[s][1] - p[k][1] * q[s][0];
                a += q[k][0] * p[s][1] - q[k][1] * p[s][0];
            }
            total += 0.25 * a;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sum_point_basics() {
        let f = HeightField::parse("(u^2+v^2)/2").unwrap();
        let g = HeightField::parse("u*v").unwrap();
        let s0 = sum_point(&f, &g, 0.0);
        assert_relative_eq!(
            s0.0.value(0.3, 0.7).unwrap(),
            f.0.value(0.3, 0.7).unwrap(),
            epsilon = 1e-15
        );
        let s2 = sum_point(&f, &g, 2.0);
        assert_relative_eq!(
            s2.0.value(0.3, 0.7).unwrap(),
            0.5 * (0.09 + 0.49) + 2.0 * 0.21,
            epsilon = 1e-14
        );
    }

    #[test]
    fn point_sum_curvature_law() {
        let f = HeightField::parse("sin(u)*cosh(v)/3 + u^2").unwrap();
        let g = HeightField::parse("u^2*v + cos(v)").unwrap();
        let grid = Grid2::square(-1.0, 1.0, 17).unwrap();
        for &t in &[0.5, -1.3, 2.7] {
            let r = sum_curvature_check(&f, &g, t, &grid).unwrap();
            assert!(r.max_k_residual < 1e-9, "K residual {}", r.max_k_residual);
            assert!(r.max_h_residual < 1e-9, "H residual {}", r.max_h_residual);
        }
    }

    #[test]
    fn sphere_addend_recovers_mean_curvature() {
        // g = unit sphere: K(F,S) = H(F), so K(F^t) = K + 2tH + t^2
        let f = HeightField::parse("u^3/6 + u*v + v^2").unwrap();
        let sphere = HeightField::parse("(u^2+v^2)/2").unwrap();
        let (u, v, t) = (0.4, -0.2, 0.8);
        let ft = sum_point(&f, &sphere, t);
        let s = curvature_graph(&f, u, v).unwrap();
        let st = curvature_graph(&ft, u, v).unwrap();
        assert_relative_eq!(st.k, s.k + 2.0 * t * s.h + t * t, epsilon = 1e-12);
    }

    #[test]
    fn plane_sum_paraboloid_supports() {
        // support of z = (a x^2 + b y^2)/2 is u^2/(2a) + v^2/(2b); adding
        // supports adds the reciprocal axis coefficients.
        let h1 = SupportField::parse("u^2/4 + v^2/6").unwrap(); // a=2, b=3
        let h2 = SupportField::parse("u^2/2 + v^2/2").unwrap(); // unit sphere
        let ht = sum_plane(&h1, &h2, 1.0);
        // h_t = u^2 (1/4+1/2) + v^2 (1/6+1/2) -> a' = 1/(2*(1/4+1/2)) ...
        let (k, h) = curvature_from_support(&ht, 0.3, 0.5).unwrap();
        let a = 1.0 / (2.0 * (0.25 + 0.5));
        let b = 1.0 / (2.0 * (1.0 / 6.0 + 0.5));
        assert_relative_eq!(k, a * b, epsilon = 1e-12);
        assert_relative_eq!(h, 0.5 * (a + b), epsilon = 1e-12);
    }

    #[test]
    fn plane_sum_curvature_law() {
        let h1 = SupportField::parse("u^2/4 + v^2/6 + u*v/10").unwrap();
        let h2 = SupportField::parse("(u^2+v^2)/2 + u^3/30").unwrap();
        let grid = Grid2::square(-0.5, 0.5, 9).unwrap();
        let r = plane_sum_curvature_check(&h1, &h2, 0.7, &grid).unwrap();
        assert!(r.max_kstar_residual < 1e-12, "K* residual {}", r.max_kstar_residual);
        assert!(r.max_k_residual < 1e-12, "K residual {}", r.max_k_residual);
        assert!(r.max_h_residual < 1e-12, "H residual {}", r.max_h_residual);
    }

    #[test]
    fn point_sum_commutes_with_shears() {
        let f = HeightField::parse("u^2*v").unwrap();
        let g = HeightField::parse("cos(u)+v^2").unwrap();
        let shear = |hf: &HeightField| -> HeightField {
            HeightField(ScalarField::lin_comb(
                1.0,
                &hf.0,
                1.0,
                &ScalarField::parse("0.3*u - 0.9*v + 2").unwrap(),
            ))
        };
        let t = 1.5;
        // shear(f) + t*shear(g) = (f + t*g) + (1+t)*shear-term
        let lhs = sum_point(&shear(&f), &shear(&g), t);
        let base = sum_point(&f, &g, t);
        let (u, v) = (0.6, -0.4);
        let shear_val = 0.3 * u - 0.9 * v + 2.0;
        assert_relative_eq!(
            lhs.0.value(u, v).unwrap(),
            base.0.value(u, v).unwrap() + (1.0 + t) * shear_val,
            epsilon = 1e-13
        );
        // and curvature (second derivatives) is untouched by the shear
        assert_relative_eq!(
            curvature_graph(&lhs, u, v).unwrap().k,
            curvature_graph(&base, u, v).unwrap().k,
            epsilon = 1e-13
        );
    }

    #[test]
    fn dual_mixed_area_vanishes_iff_mixed_curvature_does() {
        let grid = Grid2::square(-1.0, 1.0, 65).unwrap();
        // flexible pair: K(F, N) = 0
        let f = HeightField::parse("(u^2+v^2)/2").unwrap();
        let n = HeightField::parse("u*v").unwrap();
        let a = dual_mixed_area(&f, &n, &grid).unwrap();
        assert!(a.abs() < 1e-12, "mixed area {a}");
        // generic pair: converges to the integral of K(F,G)
        let g = HeightField::parse("u^2 + sin(v)").unwrap();
        let a = dual_mixed_area(&f, &g, &grid).unwrap();
        let mut integral = 0.0;
        for j in 0..grid.nv - 1 {
            for i in 0..grid.nu - 1 {
                let (u, v) = (grid.u(i) + grid.hu / 2.0, grid.v(j) + grid.hv / 2.0);
                integral += mixed_curvature(&f, &g, u, v).unwrap() * grid.hu * grid.hv;
            }
        }
        assert!(
            (a - integral).abs() < 0.01 * integral.abs(),
            "mixed area {a} vs integral {integral}"
        );
    }
}
