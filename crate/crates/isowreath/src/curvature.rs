//! Isotropic curvature quantities. For a graph `z = f(u,v)` the isotropic
//! Gaussian curvature is `K = f_uu f_vv - f_uv^2` and the isotropic mean
//! curvature is `H = (f_uu + f_vv)/2`; principal curvatures are the
//! eigenvalues of the Hessian. General parametrizations use the quotient
//! formulas whose metric data lives entirely on the top view.

use rayon::prelude::*;

use crate::fields::{FieldError, FieldResult, Grid2, HeightField, ParamSurface};
use crate::geom::{det3, dot2, V2, V3};

/// Pointwise curvature data of a graph surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    /// Isotropic Gaussian (relative) curvature `det ∇²f`.
    pub k: f64,
    /// Isotropic mean curvature `tr ∇²f / 2`.
    pub h: f64,
    /// Principal curvatures, `kappa1 <= kappa2`.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Principal directions in the parameter plane (unit 2-vectors,
    /// eigenvectors of the Hessian).
    pub dir1: V2,
    pub dir2: V2,
    /// Set at umbilic points (`kappa1 ≈ kappa2`), where the directions
    /// degenerate to the canonical axes.
    pub umbilic: bool,
}

/// Eigen-decomposition of the symmetric Hessian `[[fuu, fuv], [fuv, fvv]]`.
pub fn sample_from_hessian(fuu: f64, fuv: f64, fvv: f64) -> CurvatureSample {
    let k = fuu * fvv - fuv * fuv;
    let h = 0.5 * (fuu + fvv);
    let half_diff = 0.5 * (fuu - fvv);
    let r = (half_diff * half_diff + fuv * fuv).sqrt();
    let kappa1 = h - r;
    let kappa2 = h + r;
    let scale = fuu.abs().max(fvv.abs()).max(fuv.abs()).max(1.0);
    if r <= 1e-12 * scale {
        return CurvatureSample {
            k,
            h,
            kappa1,
            kappa2,
            dir1: [1.0, 0.0],
            dir2: [0.0, 1.0],
            umbilic: true,
        };
    }
    // Eigenvector for kappa2: two equivalent candidate forms exist; each can
    // degenerate to zero (e.g. a diagonal Hessian zeroes one of them), so
    // take whichever has the larger norm, then orient toward +u.
    let c1 = [fuv, kappa2 - fuu];
    let c2 = [kappa2 - fvv, fuv];
    let n1 = c1[0] * c1[0] + c1[1] * c1[1];
    let n2 = c2[0] * c2[0] + c2[1] * c2[1];
    let mut dir2 = if n1 >= n2 { c1 } else { c2 };
    let n = (dir2[0] * dir2[0] + dir2[1] * dir2[1]).sqrt();
    dir2 = [dir2[0] / n, dir2[1] / n];
    if dir2[0] < 0.0 || (dir2[0] == 0.0 && dir2[1] < 0.0) {
        dir2 = [-dir2[0], -dir2[1]];
    }
    let mut dir1 = [-dir2[1], dir2[0]];
    if dir1[0] < 0.0 || (dir1[0] == 0.0 && dir1[1] < 0.0) {
        dir1 = [-dir1[0], -dir1[1]];
    }
    CurvatureSample { k, h, kappa1, kappa2, dir1, dir2, umbilic: false }
}

/// Curvature of a graph surface from the Hessian of its height.
pub fn curvature_graph(f: &HeightField, u: f64, v: f64) -> FieldResult<CurvatureSample> {
    let j = f.jet_at(u, v)?;
    Ok(sample_from_hessian(j.duu, j.duv, j.dvv))
}

/// `K` and `H` of a general parametrized surface via the quotient formulas.
/// The metric terms use top views of the partials only.
pub fn curvature_param(g: &ParamSurface, u: f64, v: f64) -> FieldResult<(f64, f64)> {
    let [jx, jy, jz] = g.jets(u, v)?;
    let gu: V3 = [jx.du, jy.du, jz.du];
    let gv: V3 = [jx.dv, jy.dv, jz.dv];
    let guu: V3 = [jx.duu, jy.duu, jz.duu];
    let guv: V3 = [jx.duv, jy.duv, jz.duv];
    let gvv: V3 = [jx.dvv, jy.dvv, jz.dvv];

    let tu: V2 = [gu[0], gu[1]];
    let tv: V2 = [gv[0], gv[1]];
    let e = dot2(tu, tu);
    let ff = dot2(tu, tv);
    let gg = dot2(tv, tv);
    let den = e * gg - ff * ff;
    let scale = e.max(gg).max(1e-300);
    if den <= 1e-14 * scale * scale {
        return Err(FieldError::Degenerate(format!(
            "top view is rank-deficient at ({u}, {v}): E*G - F^2 = {den:e}"
        )));
    }
    let d_uu = det3(gu, gv, guu);
    let d_uv = det3(gu, gv, guv);
    let d_vv = det3(gu, gv, gvv);
    // Denominator powers are fixed by parameter invariance: the determinant
    // numerators scale with the 4th (resp. 3rd) power of a top-view
    // reparametrization Jacobian, so K divides by den^2 and H by den^(3/2).
    let k = (d_uu * d_vv - d_uv * d_uv) / (den * den);
    let h = (e * d_vv - 2.0 * ff * d_uv + gg * d_uu) / (2.0 * den.powf(1.5));
    Ok((k, h))
}

/// Mixed isotropic Gaussian curvature
/// `K(F,G) = (f_uu g_vv - 2 f_uv g_uv + f_vv g_uu) / 2`; the polarization of
/// `K`, symmetric and bilinear, and identical with the Pucher load of the
/// pair.
pub fn mixed_curvature(f: &HeightField, g: &HeightField, u: f64, v: f64) -> FieldResult<f64> {
    let a = f.jet_at(u, v)?;
    let b = g.jet_at(u, v)?;
    // grouped so that swapping the arguments gives a bitwise-identical result
    Ok(0.5 * ((a.duu * b.dvv + a.dvv * b.duu) - 2.0 * (a.duv * b.duv)))
}

/// Isotropic Gauss image: `(f_u, f_v, (f_u^2 + f_v^2)/2)`, a point of the
/// parabolic unit sphere `2z = x^2 + y^2`.
pub fn gauss_image(f: &HeightField, u: f64, v: f64) -> FieldResult<V3> {
    let j = f.jet_at(u, v)?;
    Ok([j.du, j.dv, 0.5 * (j.du * j.du + j.dv * j.dv)])
}

/// Curvature samples over all grid nodes with `margin` cells of boundary
/// clearance, row-major in `j`; evaluated in parallel on the crate pool.
pub fn sweep_curvature(
    f: &HeightField,
    grid: &Grid2,
    margin: usize,
) -> FieldResult<Vec<(f64, f64, CurvatureSample)>> {
    let nodes: Vec<(usize, usize)> = grid.interior_nodes(margin).collect();
    crate::thread_pool().install(|| {
        nodes
            .par_iter()
            .map(|&(i, j)| {
                let (u, v) = (grid.u(i), grid.v(j));
                Ok((u, v, curvature_graph(f, u, v)?))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use approx::assert_relative_eq;

    #[test]
    fn paraboloid_curvatures() {
        let f = HeightField::parse("(2*u^2+3*v^2)/2").unwrap();
        let s = curvature_graph(&f, 0.37, -0.81).unwrap();
        assert_relative_eq!(s.k, 6.0, epsilon = 1e-12);
        assert_relative_eq!(s.h, 2.5, epsilon = 1e-12);
        assert_relative_eq!(s.kappa1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.kappa2, 3.0, epsilon = 1e-12);
        // principal directions are the coordinate axes
        assert_relative_eq!(s.dir1[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.dir2[1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_and_umbilic() {
        let plane = HeightField::parse("0").unwrap();
        let s = curvature_graph(&plane, 0.1, 0.2).unwrap();
        assert_eq!((s.k, s.h), (0.0, 0.0));
        let sphere = HeightField::parse("(u^2+v^2)/2").unwrap();
        let s = curvature_graph(&sphere, 0.4, 0.4).unwrap();
        assert_relative_eq!(s.k, 1.0);
        assert_relative_eq!(s.h, 1.0);
        assert!(s.umbilic);
    }

    #[test]
    fn param_matches_graph_on_reparametrized_paraboloid() {
        let f = HeightField::parse("(2*u^2+3*v^2)/2").unwrap();
        let g = ParamSurface::from_height(&f);
        let (k, h) = curvature_param(&g, 0.3, 0.7).unwrap();
        assert_relative_eq!(k, 6.0, epsilon = 1e-12);
        assert_relative_eq!(h, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn param_helical_surface_matches_bour_formula() {
        // g = (v cos u, v sin u, -sin v + u), i.e. h = 1
        let g = ParamSurface::new(
            ScalarField::parse("v*cos(u)").unwrap(),
            ScalarField::parse("v*sin(u)").unwrap(),
            ScalarField::parse("-sin(v) + u").unwrap(),
        );
        let (k, _) = curvature_param(&g, 0.0, 1.0).unwrap();
        let expected = -(1.0f64.cos() * 1.0f64.sin()) - 1.0;
        assert_relative_eq!(k, expected, epsilon = 1e-12);
        assert_relative_eq!(k, -1.45464871, epsilon = 1e-7);
    }

    #[test]
    fn param_degenerate_top_view_errors() {
        // top view collapses to a line: x = u+v, y = u+v
        let g = ParamSurface::new(
            ScalarField::parse("u+v").unwrap(),
            ScalarField::parse("u+v").unwrap(),
            ScalarField::parse("u*v").unwrap(),
        );
        assert!(matches!(
            curvature_param(&g, 0.2, 0.3),
            Err(FieldError::Degenerate(_))
        ));
    }

    #[test]
    fn mixed_curvature_cases() {
        let f = HeightField::parse("(u^2+v^2)/2 + u^3/6").unwrap();
        let sphere = HeightField::parse("(u^2+v^2)/2").unwrap();
        let (u, v) = (0.3, -0.2);
        // K(F, S) = H(F)
        let kfs = mixed_curvature(&f, &sphere, u, v).unwrap();
        let h = curvature_graph(&f, u, v).unwrap().h;
        assert_relative_eq!(kfs, h, epsilon = 1e-13);
        // K(F, F) = K(F)
        let kff = mixed_curvature(&f, &f, u, v).unwrap();
        let k = curvature_graph(&f, u, v).unwrap().k;
        assert_relative_eq!(kff, k, epsilon = 1e-13);
        // the wreath seed pair has vanishing mixed curvature
        let n = HeightField::parse("u*v").unwrap();
        assert_eq!(mixed_curvature(&sphere, &n, u, v).unwrap(), 0.0);
    }

    #[test]
    fn gauss_image_on_parabolic_sphere() {
        let f = HeightField::parse("u*v").unwrap();
        let p = gauss_image(&f, 1.0, 2.0).unwrap();
        assert_eq!(p, [2.0, 1.0, 2.5]);
        // always on 2z = x^2 + y^2
        let g = HeightField::parse("sin(u)*cosh(v)/4 + u^2*v").unwrap();
        for &(u, v) in &[(0.1, 0.2), (-0.7, 0.9), (1.3, -1.1)] {
            let p = gauss_image(&g, u, v).unwrap();
            assert_relative_eq!(2.0 * p[2], p[0] * p[0] + p[1] * p[1], epsilon = 1e-14);
        }
        let plane = HeightField::parse("3").unwrap();
        assert_eq!(gauss_image(&plane, 0.5, 0.5).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sweep_runs_in_parallel_pool() {
        let f = HeightField::parse("(2*u^2+3*v^2)/2").unwrap();
        let grid = Grid2::square(-1.0, 1.0, 17).unwrap();
        let out = sweep_curvature(&f, &grid, 0).unwrap();
        assert_eq!(out.len(), 17 * 17);
        assert!(out.iter().all(|(_, _, s)| (s.k - 6.0).abs() < 1e-12));
    }
}
