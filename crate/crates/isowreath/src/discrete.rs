//! Discrete nets with the combinatorics of a ℤ² sublattice: Q-net tests,
//! mixed areas of quadrilaterals, Kœnigs duality, metric-dual nets,
//! discrete infinitesimal flexibility, Voss-net construction with its
//! finite Combescure flexing, and the sheared discrete model of Minding
//! isometries for ruled surfaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duality::{nu_plane, IsoPlane};
use crate::fields::{FieldError, FieldResult, Grid2, ScalarField};
use crate::geom::{
    add2, add3, cross3, det2, det3, dot2, dot3, lstsq, norm2, norm3, scale2, scale3, sub2, sub3,
    V2, V3,
};
use crate::wreath::{apply_matrix, L_MATRIX};

// ---------------------------------------------------------------------------
// Quad nets
// ---------------------------------------------------------------------------

/// A net of 3D vertices with the combinatorics of an `nu x nv` grid.
/// Vertex `(i, j)` is stored row-major at `j * nu + i`; the face `f_{ij}`
/// is the quad `(F_{ij}, F_{i+1,j}, F_{i+1,j+1}, F_{i,j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadNet {
    nu: usize,
    nv: usize,
    verts: Vec<V3>,
}

impl QuadNet {
    pub fn new(nu: usize, nv: usize, verts: Vec<V3>) -> FieldResult<Self> {
        if nu < 2 || nv < 2 {
            return Err(FieldError::Degenerate(format!(
                "a quad net needs at least 2x2 vertices (got {nu}x{nv})"
            )));
        }
        if verts.len() != nu * nv {
            return Err(FieldError::Degenerate(format!(
                "vertex count {} does not match dimensions {nu}x{nv}",
                verts.len()
            )));
        }
        if verts.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(FieldError::NonFinite);
        }
        Ok(QuadNet { nu, nv, verts })
    }

    pub fn from_fn(nu: usize, nv: usize, mut f: impl FnMut(usize, usize) -> V3) -> FieldResult<Self> {
        let mut verts = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                verts.push(f(i, j));
            }
        }
        QuadNet::new(nu, nv, verts)
    }

    /// The graph of a scalar field sampled at the nodes of `grid`.
    pub fn from_graph(f: &ScalarField, grid: &Grid2) -> FieldResult<Self> {
        let mut verts = Vec::with_capacity(grid.len());
        for j in 0..grid.nv {
            for i in 0..grid.nu {
                let (u, v) = (grid.u(i), grid.v(j));
                verts.push([u, v, f.value(u, v)?]);
            }
        }
        QuadNet::new(grid.nu, grid.nv, verts)
    }

    /// The translational net `F_{ij} = a_i + b_j`; all faces are
    /// parallelograms and hence planar.
    pub fn translational(a: &[V3], b: &[V3]) -> FieldResult<Self> {
        QuadNet::from_fn(a.len(), b.len(), |i, j| add3(a[i], b[j]))
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vertices(&self) -> &[V3] {
        &self.verts
    }

    pub fn vertex(&self, i: usize, j: usize) -> V3 {
        debug_assert!(i < self.nu && j < self.nv);
        self.verts[j * self.nu + i]
    }

    /// Number of faces per direction: `(nu - 1, nv - 1)`.
    pub fn face_dims(&self) -> (usize, usize) {
        (self.nu - 1, self.nv - 1)
    }

    pub fn face(&self, i: usize, j: usize) -> [V3; 4] {
        [
            self.vertex(i, j),
            self.vertex(i + 1, j),
            self.vertex(i + 1, j + 1),
            self.vertex(i, j + 1),
        ]
    }

    pub fn face_top(&self, i: usize, j: usize) -> [V2; 4] {
        let f = self.face(i, j);
        [top(f[0]), top(f[1]), top(f[2]), top(f[3])]
    }

    pub fn map(&self, mut f: impl FnMut(V3) -> V3) -> QuadNet {
        QuadNet {
            nu: self.nu,
            nv: self.nv,
            verts: self.verts.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Non-planarity of face `(i, j)`: `|det(e1, e2, e3)|` of the edge
    /// vectors from the first corner, normalized by the cube of the longest
    /// of them. Zero exactly for planar faces.
    pub fn planarity_residual(&self, i: usize, j: usize) -> f64 {
        let f = self.face(i, j);
        let e1 = sub3(f[1], f[0]);
        let e2 = sub3(f[2], f[0]);
        let e3 = sub3(f[3], f[0]);
        let s = norm3(e1).max(norm3(e2)).max(norm3(e3));
        if s <= 0.0 {
            return 0.0;
        }
        det3(e1, e2, e3).abs() / (s * s * s)
    }

    /// Best-fit non-isotropic plane `z = a x + b y + c` through the four
    /// face corners, with the maximal vertical distance of a corner to it.
    /// Fails for faces whose top view is degenerate (collinear corners),
    /// i.e. whose carrier plane is vertical.
    pub fn face_plane(&self, i: usize, j: usize) -> FieldResult<(IsoPlane, f64)> {
        let f = self.face(i, j);
        // Fit in coordinates centered on the face: the normal equations are
        // badly conditioned when the corners sit far from the origin, and
        // the plane gradient is translation invariant anyway.
        let centroid = scale3(f.iter().fold([0.0; 3], |s, p| add3(s, *p)), 0.25);
        let spread = f
            .iter()
            .map(|p| (p[0] - centroid[0]).abs().max((p[1] - centroid[1]).abs()))
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let mut a = Vec::with_capacity(12);
        let mut b = Vec::with_capacity(4);
        for p in &f {
            a.extend_from_slice(&[
                (p[0] - centroid[0]) / spread,
                (p[1] - centroid[1]) / spread,
                1.0,
            ]);
            b.push(p[2] - centroid[2]);
        }
        let sol = lstsq(&a, &b, 4, 3).ok_or_else(|| {
            FieldError::Degenerate(format!(
                "face ({i}, {j}) has a vertical or degenerate carrier plane"
            ))
        })?;
        let (ga, gb) = (sol[0] / spread, sol[1] / spread);
        let plane = IsoPlane {
            a: ga,
            b: gb,
            c: centroid[2] + sol[2] - ga * centroid[0] - gb * centroid[1],
        };
        let dist = f
            .iter()
            .map(|p| (p[2] - plane.height_at(p[0], p[1])).abs())
            .fold(0.0, f64::max);
        Ok((plane, dist))
    }
}

fn top(p: V3) -> V2 {
    [p[0], p[1]]
}

// ---------------------------------------------------------------------------
// Q-net test and mixed area
// ---------------------------------------------------------------------------

/// Per-face planarity verdict for a net.
#[derive(Debug, Clone, Serialize)]
pub struct QnetReport {
    pub planar: bool,
    pub max_residual: f64,
    pub worst_face: (usize, usize),
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

/// Tests whether every face of `net` is planar up to `tol` (normalized
/// determinant residual, see [`QuadNet::planarity_residual`]).
pub fn is_qnet(net: &QuadNet, tol: f64) -> QnetReport {
    let (fu, fv) = net.face_dims();
    let faces: Vec<(usize, usize)> =
        (0..fv).flat_map(|j| (0..fu).map(move |i| (i, j))).collect();
    let residuals: Vec<f64> = crate::thread_pool().install(|| {
        faces
            .par_iter()
            .map(|&(i, j)| net.planarity_residual(i, j))
            .collect()
    });
    let mut max_residual = 0.0;
    let mut worst = (0, 0);
    for (k, &r) in residuals.iter().enumerate() {
        if r > max_residual {
            max_residual = r;
            worst = (k % fu, k / fu);
        }
    }
    QnetReport { planar: max_residual <= tol, max_residual, worst_face: worst, residuals }
}

/// Mixed area of two planar quadrilaterals (given by their 2D corner
/// cycles): `¼ Σ_i det(p_i, q_{i+1}) + det(q_i, p_{i+1})`. Symmetric and
/// bilinear; `mixed_area(P, P)` is the signed shoelace area of `P`.
pub fn mixed_area(p: &[V2; 4], q: &[V2; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let k = (i + 1) % 4;
        s += det2(p[i], q[k]) + det2(q[i], p[k]);
    }
    0.25 * s
}

/// Signed (shoelace) area of a 2D quad: `mixed_area(p, p)`.
pub fn quad_area(p: &[V2; 4]) -> f64 {
    mixed_area(p, p)
}

// ---------------------------------------------------------------------------
// Koenigs duality
// ---------------------------------------------------------------------------

/// Residuals of the Kœnigs-duality test between two nets.
#[derive(Debug, Clone, Serialize)]
pub struct KoenigsReport {
    pub related: bool,
    /// Largest sine of an angle between corresponding face edges.
    pub max_edge_residual: f64,
    /// Largest sine of an angle between non-corresponding face diagonals.
    pub max_diagonal_residual: f64,
    pub worst_face: (usize, usize),
}

fn sin_angle3(a: V3, b: V3) -> f64 {
    let na = norm3(a);
    let nb = norm3(b);
    if na <= 0.0 || nb <= 0.0 {
        return 1.0;
    }
    norm3(cross3(a, b)) / (na * nb)
}

/// Checks whether `a` and `b` are related by Kœnigs duality: every face
/// pair has parallel corresponding edges and parallel non-corresponding
/// diagonals (`a1a3 ∥ b2b4` and `a2a4 ∥ b1b3`).
pub fn koenigs_check(a: &QuadNet, b: &QuadNet, tol: f64) -> FieldResult<KoenigsReport> {
    if a.nu != b.nu || a.nv != b.nv {
        return Err(FieldError::Degenerate(format!(
            "nets have different combinatorics ({}x{} vs {}x{})",
            a.nu, a.nv, b.nu, b.nv
        )));
    }
    let (fu, fv) = a.face_dims();
    let faces: Vec<(usize, usize)> =
        (0..fv).flat_map(|j| (0..fu).map(move |i| (i, j))).collect();
    let per_face: Vec<(f64, f64)> = crate::thread_pool().install(|| {
        faces
            .par_iter()
            .map(|&(i, j)| {
                let fa = a.face(i, j);
                let fb = b.face(i, j);
                let mut edge = 0.0f64;
                for k in 0..4 {
                    let m = (k + 1) % 4;
                    edge = edge.max(sin_angle3(sub3(fa[m], fa[k]), sub3(fb[m], fb[k])));
                }
                let diag = sin_angle3(sub3(fa[2], fa[0]), sub3(fb[3], fb[1]))
                    .max(sin_angle3(sub3(fa[3], fa[1]), sub3(fb[2], fb[0])));
                (edge, diag)
            })
            .collect()
    });
    let mut max_edge = 0.0f64;
    let mut max_diag = 0.0f64;
    let mut worst = (0, 0);
    for (k, &(e, d)) in per_face.iter().enumerate() {
        if e.max(d) > max_edge.max(max_diag) {
            worst = (k % fu, k / fu);
        }
        max_edge = max_edge.max(e);
        max_diag = max_diag.max(d);
    }
    Ok(KoenigsReport {
        related: max_edge <= tol && max_diag <= tol,
        max_edge_residual: max_edge,
        max_diagonal_residual: max_diag,
        worst_face: worst,
    })
}

#[derive(Debug, Clone, Error)]
pub enum KoenigsError {
    #[error("not a Koenigs net: propagation inconsistency {residual:.3e} at face ({i}, {j})")]
    NotKoenigs { i: usize, j: usize, residual: f64 },
    #[error("degenerate face ({i}, {j}): {reason}")]
    DegenerateFace { i: usize, j: usize, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Dual-quad edge factors: every planar quad `p` has a dual quad with
/// parallel corresponding edges and swapped-parallel diagonals, unique up
/// to translation and scaling. Returns the per-edge scale factors of the
/// dual edges relative to the primal ones, normalized so that the first
/// factor is 1.
fn dual_edge_factors(p: &[V3; 4]) -> Result<[f64; 4], String> {
    let e = [
        sub3(p[1], p[0]),
        sub3(p[2], p[1]),
        sub3(p[3], p[2]),
        sub3(p[0], p[3]),
    ];
    let scale = e.iter().map(|v| norm3(*v)).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err("all corners coincide".to_string());
    }
    for k in 0..4 {
        if sin_angle3(e[k], e[(k + 1) % 4]) <= 1e-10 {
            return Err("parallel adjacent edges".to_string());
        }
    }
    let d13 = sub3(p[2], p[0]);
    let d24 = sub3(p[3], p[1]);
    // Unknowns x = [beta, gamma, delta, lambda, mu] with the conventions
    //   dual edges w_k = x_k e_k (x_0 = 1 fixed),
    //   closure        w_0 + w_1 + w_2 + w_3 = 0,
    //   diagonal 1     w_0 + w_1 = lambda (p_4 - p_2),
    //   diagonal 2     w_1 + w_2 = mu (p_3 - p_1).
    let mut a = Vec::with_capacity(45);
    let mut b = Vec::with_capacity(9);
    for r in 0..3 {
        a.extend_from_slice(&[e[1][r], e[2][r], e[3][r], 0.0, 0.0]);
        b.push(-e[0][r]);
    }
    for r in 0..3 {
        a.extend_from_slice(&[e[1][r], 0.0, 0.0, -d24[r], 0.0]);
        b.push(-e[0][r]);
    }
    for r in 0..3 {
        a.extend_from_slice(&[e[1][r], e[2][r], 0.0, 0.0, -d13[r]]);
        b.push(0.0);
    }
    let x = lstsq(&a, &b, 9, 5).ok_or_else(|| "singular dual-edge system".to_string())?;
    // Residual of the overdetermined fit: nonzero only for non-planar or
    // otherwise inconsistent quads.
    let mut res = 0.0f64;
    for r in 0..9 {
        let mut s = -b[r];
        for c in 0..5 {
            s += a[r * 5 + c] * x[c];
        }
        res = res.max(s.abs());
    }
    if res > 1e-7 * scale {
        return Err(format!("face admits no dual quad (fit residual {res:.3e})"));
    }
    Ok([1.0, x[0], x[1], x[2]])
}

/// Builds the Kœnigs dual of a Q-net by face-by-face propagation in
/// row-major order, anchored at `seed` for the `(0, 0)` vertex. Shared
/// vertices reached twice must agree up to `tol` (relative to the face
/// size); the first inconsistent face is reported otherwise.
pub fn koenigs_dualize(net: &QuadNet, seed: V3, tol: f64) -> Result<QuadNet, KoenigsError> {
    let (fu, fv) = net.face_dims();
    let mut dual: Vec<Option<V3>> = vec![None; net.nu * net.nv];
    dual[0] = Some(seed);
    for j in 0..fv {
        for i in 0..fu {
            let p = net.face(i, j);
            let factors = dual_edge_factors(&p)
                .map_err(|reason| KoenigsError::DegenerateFace { i, j, reason })?;
            let e = [
                sub3(p[1], p[0]),
                sub3(p[2], p[1]),
                sub3(p[3], p[2]),
                sub3(p[0], p[3]),
            ];
            let w: Vec<V3> = (0..4).map(|k| scale3(e[k], factors[k])).collect();
            let corner_idx = [
                j * net.nu + i,
                j * net.nu + i + 1,
                (j + 1) * net.nu + i + 1,
                (j + 1) * net.nu + i,
            ];
            let known: Vec<Option<V3>> = corner_idx.iter().map(|&k| dual[k]).collect();
            // Scale of this face's dual, taken from a known dual edge; the
            // very first face fixes the global scale to 1.
            let mut sigma = if i == 0 && j == 0 { Some(1.0) } else { None };
            if sigma.is_none() {
                for k in 0..4 {
                    let m = (k + 1) % 4;
                    if let (Some(qa), Some(qb)) = (known[k], known[m]) {
                        let denom = dot3(w[k], w[k]);
                        if denom > 0.0 {
                            sigma = Some(dot3(sub3(qb, qa), w[k]) / denom);
                            break;
                        }
                    }
                }
            }
            let sigma = sigma.ok_or(KoenigsError::DegenerateFace {
                i,
                j,
                reason: "no anchored dual edge during propagation".to_string(),
            })?;
            let base = (0..4)
                .find(|&k| known[k].is_some())
                .expect("at least one dual corner is known");
            let mut pos = [V3::default(); 4];
            pos[base] = known[base].unwrap();
            for step in 0..3 {
                let k = (base + step) % 4;
                let m = (k + 1) % 4;
                pos[m] = add3(pos[k], scale3(w[k], sigma));
            }
            let face_size = sigma.abs() * w.iter().map(|v| norm3(*v)).fold(0.0, f64::max);
            let denom = face_size.max(1e-300);
            let mut residual = 0.0f64;
            for k in 0..4 {
                if let Some(q) = known[k] {
                    residual = residual.max(norm3(sub3(pos[k], q)) / denom);
                }
            }
            if residual > tol {
                return Err(KoenigsError::NotKoenigs { i, j, residual });
            }
            for k in 0..4 {
                dual[corner_idx[k]] = Some(pos[k]);
            }
        }
    }
    let verts: Vec<V3> = dual.into_iter().map(|q| q.expect("all vertices reached")).collect();
    Ok(QuadNet { nu: net.nu, nv: net.nv, verts })
}

// ---------------------------------------------------------------------------
// Metric-dual nets
// ---------------------------------------------------------------------------

/// The metric dual ν(N) of a planar-faced net: one vertex per face, the
/// ν-image of the face's carrier plane (`z = ax + by + c ↦ (b, -a, c)`).
/// Faces of the dual correspond to interior vertex stars of `N`.
pub fn net_dual_nu(net: &QuadNet) -> FieldResult<QuadNet> {
    if net.nu < 3 || net.nv < 3 {
        return Err(FieldError::Degenerate(format!(
            "metric dual needs at least 3x3 vertices (got {}x{})",
            net.nu, net.nv
        )));
    }
    let (fu, fv) = net.face_dims();
    let mut verts = Vec::with_capacity(fu * fv);
    for j in 0..fv {
        for i in 0..fu {
            let (plane, _) = net.face_plane(i, j)?;
            verts.push(nu_plane(plane));
        }
    }
    QuadNet::new(fu, fv, verts)
}

// ---------------------------------------------------------------------------
// Discrete infinitesimal flexibility
// ---------------------------------------------------------------------------

/// An infinitesimal isometric motion of a single rigid face: velocities
/// `V(x) = d_bar + T x` where `T` carries the three parameters of an
/// isotropic rotation (`c3` about the z-axis, `c1, c2` shearing).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FaceMotion {
    pub d_bar: V3,
    pub c: V3,
}

impl FaceMotion {
    /// The velocity gradient `T` with its fixed zero pattern.
    pub fn t_matrix(&self) -> [[f64; 3]; 3] {
        [
            [0.0, self.c[2], 0.0],
            [-self.c[2], 0.0, 0.0],
            [self.c[0], self.c[1], 0.0],
        ]
    }

    pub fn velocity_at(&self, x: V3) -> V3 {
        add3(self.d_bar, apply_matrix(&self.t_matrix(), x))
    }
}

/// Report of the three-part discrete flexibility test of a net `F` with a
/// candidate vertex velocity field `V`.
#[derive(Debug, Clone, Serialize)]
pub struct FlexFitReport {
    pub flexible: bool,
    /// Largest distance between the top views of `L V` and `F` at a vertex.
    pub top_view_residual: f64,
    /// Largest mixed area of corresponding faces of ν(F) and ν(LV).
    pub max_mixed_area: f64,
    /// `max_mixed_area` normalized by the larger of the two face areas.
    pub max_mixed_area_rel: f64,
    /// Largest equation residual of the per-face rigid-motion fits.
    pub max_fit_residual: f64,
    /// Planarity residual of the velocity net (a by-product: a fitted net
    /// is a Q-net).
    pub v_planarity: f64,
    #[serde(skip)]
    pub motions: Vec<FaceMotion>,
}

/// The point map of the isotropic quarter-turn-with-flip `L`.
pub fn l_point(p: V3) -> V3 {
    apply_matrix(&L_MATRIX, p)
}

/// Tests whether `v` is a velocity field of a discrete infinitesimal
/// isometry of `f`: (1) the top view of `L v` equals the top view of `f`;
/// (2) corresponding faces of the metric duals ν(f) and ν(L v) have
/// vanishing mixed area; (3) each face admits a rigid-face motion
/// reproducing the four corner velocities. The verdict compares the
/// top-view and fit residuals and the relative mixed areas against `tol`.
pub fn discrete_flex_fit(f: &QuadNet, v: &QuadNet, tol: f64) -> FieldResult<FlexFitReport> {
    if f.nu != v.nu || f.nv != v.nv {
        return Err(FieldError::Degenerate(format!(
            "nets have different combinatorics ({}x{} vs {}x{})",
            f.nu, f.nv, v.nu, v.nv
        )));
    }
    let lv = v.map(l_point);
    let mut top_res = 0.0f64;
    for k in 0..f.verts.len() {
        let d = sub2(top(lv.verts[k]), top(f.verts[k]));
        top_res = top_res.max(norm2(d));
    }

    let lb = net_dual_nu(f)?;
    let c_bar = net_dual_nu(&lv)?;
    let (du, dv) = lb.face_dims();
    let mut max_mixed = 0.0f64;
    let mut max_mixed_rel = 0.0f64;
    for j in 0..dv {
        for i in 0..du {
            let b = lb.face_top(i, j);
            let c = c_bar.face_top(i, j);
            let m = mixed_area(&b, &c).abs();
            let denom = quad_area(&b).abs().max(quad_area(&c).abs()).max(1e-300);
            max_mixed = max_mixed.max(m);
            max_mixed_rel = max_mixed_rel.max(m / denom);
        }
    }

    let (fu, fv) = f.face_dims();
    let faces: Vec<(usize, usize)> =
        (0..fv).flat_map(|j| (0..fu).map(move |i| (i, j))).collect();
    let fits: Vec<(FaceMotion, f64)> = crate::thread_pool().install(|| {
        faces
            .par_iter()
            .map(|&(i, j)| fit_face_motion(&f.face(i, j), &v.face(i, j)))
            .collect()
    });
    let max_fit = fits.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    let motions = fits.into_iter().map(|(m, _)| m).collect();

    let v_planarity = is_qnet(v, tol).max_residual;
    Ok(FlexFitReport {
        flexible: top_res <= tol && max_mixed_rel <= tol && max_fit <= tol,
        top_view_residual: top_res,
        max_mixed_area: max_mixed,
        max_mixed_area_rel: max_mixed_rel,
        max_fit_residual: max_fit,
        v_planarity,
        motions,
    })
}

/// Least-squares fit of a rigid-face motion to four corner velocities:
/// twelve equations for the six parameters `(d_bar, c)`. Returns the
/// motion and the largest equation residual.
fn fit_face_motion(face: &[V3; 4], vel: &[V3; 4]) -> (FaceMotion, f64) {
    // Unknowns [d1, d2, d3, c1, c2, c3]; per corner (x, y, z):
    //   Vx = d1 + c3 y,  Vy = d2 - c3 x,  Vz = d3 + c1 x + c2 y.
    let mut a = Vec::with_capacity(12 * 6);
    let mut b = Vec::with_capacity(12);
    for k in 0..4 {
        let p = face[k];
        let w = vel[k];
        a.extend_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, p[1]]);
        b.push(w[0]);
        a.extend_from_slice(&[0.0, 1.0, 0.0, 0.0, 0.0, -p[0]]);
        b.push(w[1]);
        a.extend_from_slice(&[0.0, 0.0, 1.0, p[0], p[1], 0.0]);
        b.push(w[2]);
    }
    match lstsq(&a, &b, 12, 6) {
        Some(x) => {
            let motion = FaceMotion { d_bar: [x[0], x[1], x[2]], c: [x[3], x[4], x[5]] };
            let mut res = 0.0f64;
            for r in 0..12 {
                let mut s = -b[r];
                for c in 0..6 {
                    s += a[r * 6 + c] * x[c];
                }
                res = res.max(s.abs());
            }
            (motion, res)
        }
        None => (FaceMotion { d_bar: [0.0; 3], c: [0.0; 3] }, f64::INFINITY),
    }
}

// ---------------------------------------------------------------------------
// Voss nets
// ---------------------------------------------------------------------------

/// Builds a discrete V-net from Cauchy data: a top view whose parameter
/// polylines are straight per family, heights along row 0 and column 0.
/// The remaining heights are filled face by face so that every face is
/// exactly planar.
///
/// `topview` holds `nu * nv` points row-major (`j * nu + i`); `z_row0` has
/// `nu` heights at `j = 0`, `z_col0` has `nv` heights at `i = 0`, and the
/// two must agree at the shared corner.
pub fn voss_construct(
    topview: &[V2],
    nu: usize,
    nv: usize,
    z_row0: &[f64],
    z_col0: &[f64],
    tol: f64,
) -> FieldResult<QuadNet> {
    if nu < 2 || nv < 2 || topview.len() != nu * nv {
        return Err(FieldError::Degenerate(format!(
            "top view size {} does not match dimensions {nu}x{nv}",
            topview.len()
        )));
    }
    if z_row0.len() != nu || z_col0.len() != nv {
        return Err(FieldError::Degenerate(
            "Cauchy data lengths do not match the top view dimensions".to_string(),
        ));
    }
    if (z_row0[0] - z_col0[0]).abs() > tol {
        return Err(FieldError::Degenerate(format!(
            "inconsistent Cauchy data: corner heights differ by {:.3e}",
            (z_row0[0] - z_col0[0]).abs()
        )));
    }
    let at = |i: usize, j: usize| topview[j * nu + i];
    // Straightness of both polyline families.
    let straight = |points: Vec<V2>, label: String| -> FieldResult<()> {
        for w in points.windows(3) {
            let e1 = sub2(w[1], w[0]);
            let e2 = sub2(w[2], w[1]);
            let s = norm2(e1).max(norm2(e2));
            if s <= 0.0 || det2(e1, e2).abs() / (s * s) > tol {
                return Err(FieldError::Degenerate(format!(
                    "top-view {label} is not straight"
                )));
            }
        }
        Ok(())
    };
    for j in 0..nv {
        straight((0..nu).map(|i| at(i, j)).collect(), format!("row polyline j={j}"))?;
    }
    for i in 0..nu {
        straight((0..nv).map(|j| at(i, j)).collect(), format!("column polyline i={i}"))?;
    }
    let mut z = vec![f64::NAN; nu * nv];
    for i in 0..nu {
        z[i] = z_row0[i];
    }
    for j in 0..nv {
        z[j * nu] = z_col0[j];
    }
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            let (t1, t2, t4) = (at(i, j), at(i + 1, j), at(i, j + 1));
            let t3 = at(i + 1, j + 1);
            let e1 = sub2(t2, t1);
            let e2 = sub2(t4, t1);
            let den = det2(e1, e2);
            let s = norm2(e1).max(norm2(e2));
            if s <= 0.0 || den.abs() <= 1e-12 * s * s {
                return Err(FieldError::Degenerate(format!(
                    "face ({i}, {j}) has collinear top-view corners"
                )));
            }
            // Plane through the three known corners, evaluated at the
            // fourth top-view point.
            let (z1, z2, z4) = (z[j * nu + i], z[j * nu + i + 1], z[(j + 1) * nu + i]);
            let a = ((z2 - z1) * e2[1] - (z4 - z1) * e1[1]) / den;
            let b = ((z4 - z1) * e1[0] - (z2 - z1) * e2[0]) / den;
            let d = sub2(t3, t1);
            z[(j + 1) * nu + i + 1] = z1 + a * d[0] + b * d[1];
        }
    }
    let verts: Vec<V3> = (0..nu * nv)
        .map(|k| [topview[k][0], topview[k][1], z[k]])
        .collect();
    QuadNet::new(nu, nv, verts)
}

/// Intersection points of the tangent lines of the unit circle at the
/// given angles: vertex `(i, j)` is `tangent(angles_u[i]) ∩
/// tangent(angles_v[j])`. Both polyline families of the result are
/// straight (each lies on one tangent line), so it is a valid V-net top
/// view.
pub fn conic_tangent_top_view(angles_u: &[f64], angles_v: &[f64]) -> FieldResult<Vec<V2>> {
    let mut pts = Vec::with_capacity(angles_u.len() * angles_v.len());
    for &b in angles_v {
        for &a in angles_u {
            let den = (b - a).sin();
            if den.abs() < 1e-9 {
                return Err(FieldError::Degenerate(format!(
                    "tangent lines at angles {a} and {b} are (nearly) parallel"
                )));
            }
            pts.push([(b.sin() - a.sin()) / den, (a.cos() - b.cos()) / den]);
        }
    }
    Ok(pts)
}

/// Finite isometric flexing of a V-net: the metric dual `ν(F)` of a V-net
/// is a translational net; scaling its i-direction edges by `t` and its
/// j-direction edges by `1/t` is a Combescure transform, and dualizing
/// back yields the flexed net `F(t)`. The double dual trims one boundary
/// layer, so the result has `(nu - 2) x (nv - 2)` vertices matching the
/// interior of `F`.
pub fn voss_flex(f: &QuadNet, t: f64) -> FieldResult<QuadNet> {
    if !(t > 0.0) {
        return Err(FieldError::Degenerate(format!(
            "flex parameter must be positive (got {t})"
        )));
    }
    let lb = net_dual_nu(f)?;
    // A translational net satisfies lb(i,j) = lb(0,0) + a_i + b_j; verify
    // and extract the two edge profiles.
    let origin = lb.vertex(0, 0);
    let a: Vec<V3> = (0..lb.nu).map(|i| sub3(lb.vertex(i, 0), origin)).collect();
    let b: Vec<V3> = (0..lb.nv).map(|j| sub3(lb.vertex(0, j), origin)).collect();
    let scale = lb
        .verts
        .iter()
        .map(|p| norm3(sub3(*p, origin)))
        .fold(0.0, f64::max)
        .max(1e-300);
    for j in 0..lb.nv {
        for i in 0..lb.nu {
            let predicted = add3(origin, add3(a[i], b[j]));
            if norm3(sub3(lb.vertex(i, j), predicted)) > 1e-8 * scale {
                return Err(FieldError::Degenerate(
                    "metric dual is not translational; the input is not a V-net".to_string(),
                ));
            }
        }
    }
    // Each face of the scaled translational net is the parallelogram with
    // edges t*(a[i+1]-a[i]) and (b[j+1]-b[j])/t through the scaled base
    // corner. Its carrier-plane gradient is determined by the edge span
    // alone, hence independent of t; computing it from the unscaled edges
    // keeps the dual top views bitwise constant along the family. Only the
    // plane offset moves with the base corner.
    let mut verts = Vec::with_capacity((lb.nu - 1) * (lb.nv - 1));
    for j in 0..lb.nv - 1 {
        for i in 0..lb.nu - 1 {
            let e1 = sub3(a[i + 1], a[i]);
            let e2 = sub3(b[j + 1], b[j]);
            let det = det2(top(e1), top(e2));
            let size = norm2(top(e1)).max(norm2(top(e2))).max(1e-300);
            if det.abs() < 1e-12 * size * size {
                return Err(FieldError::Degenerate(format!(
                    "dual face ({i}, {j}) has a vertical carrier plane"
                )));
            }
            let ga = (e1[2] * e2[1] - e2[2] * e1[1]) / det;
            let gb = (e1[0] * e2[2] - e2[0] * e1[2]) / det;
            let base = add3(origin, add3(scale3(a[i], t), scale3(b[j], 1.0 / t)));
            let c = base[2] - ga * base[0] - gb * base[1];
            verts.push(nu_plane(IsoPlane { a: ga, b: gb, c }));
        }
    }
    QuadNet::new(lb.nu - 1, lb.nv - 1, verts)
}

/// Deviation from constancy of the isotropic dihedral angle along the
/// parameter polylines of a planar-faced net: for each polyline, the
/// spread (max minus min) of the face-plane slope jumps across it.
#[derive(Debug, Clone, Serialize)]
pub struct DihedralReport {
    /// Worst spread along polylines of constant j (jumps between the face
    /// rows below and above the polyline, indexed by i).
    pub max_spread_rows: f64,
    /// Worst spread along polylines of constant i.
    pub max_spread_cols: f64,
}

pub fn dihedral_constancy(net: &QuadNet) -> FieldResult<DihedralReport> {
    let (fu, fv) = net.face_dims();
    let mut planes = Vec::with_capacity(fu * fv);
    for j in 0..fv {
        for i in 0..fu {
            planes.push(net.face_plane(i, j)?.0);
        }
    }
    let plane = |i: usize, j: usize| planes[j * fu + i];
    let spread = |angles: Vec<f64>| -> f64 {
        let lo = angles.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let mut rows = 0.0f64;
    for j in 1..fv {
        let angles: Vec<f64> =
            (0..fu).map(|i| plane(i, j - 1).iso_angle_to(&plane(i, j))).collect();
        rows = rows.max(spread(angles));
    }
    let mut cols = 0.0f64;
    for i in 1..fu {
        let angles: Vec<f64> =
            (0..fv).map(|j| plane(i - 1, j).iso_angle_to(&plane(i, j))).collect();
        cols = cols.max(spread(angles));
    }
    Ok(DihedralReport { max_spread_rows: rows, max_spread_cols: cols })
}

// ---------------------------------------------------------------------------
// Discrete Minding isometries of ruled surfaces
// ---------------------------------------------------------------------------

/// A straight line in space, `point + s * dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line3 {
    pub point: V3,
    pub dir: V3,
}

impl Line3 {
    pub fn top_point(&self) -> V2 {
        top(self.point)
    }

    pub fn top_dir(&self) -> V2 {
        [self.dir[0], self.dir[1]]
    }
}

/// Per-step data of a discrete ruled surface given by a ruling sequence.
#[derive(Debug, Clone, Serialize)]
pub struct MindingReport {
    /// Isotropic distances `d_i` between consecutive rulings, measured
    /// along the isotropic line through the top-view intersection.
    pub d: Vec<f64>,
    /// Signed top-view angles `phi_i` between consecutive rulings.
    pub phi: Vec<f64>,
    /// Discrete pitches `rho_i = d_i / phi_i`.
    pub rho: Vec<f64>,
    /// Top-view intersection (striction) points, one per consecutive pair.
    pub striction: Vec<V2>,
    /// Striction distances `w_i`: top-view distance between consecutive
    /// striction points, both of which lie on ruling `i + 1`.
    pub w: Vec<f64>,
    /// Gaussian curvatures `K_i = -rho_i^2 / w_i^4`.
    pub k: Vec<f64>,
}

/// Computes the discrete pitch/striction data of a ruling sequence.
/// Consecutive rulings must have non-parallel top views (types I/II).
pub fn minding_report(rulings: &[Line3]) -> FieldResult<MindingReport> {
    if rulings.len() < 2 {
        return Err(FieldError::Degenerate(
            "need at least two rulings".to_string(),
        ));
    }
    let n = rulings.len();
    let mut d = Vec::with_capacity(n - 1);
    let mut phi = Vec::with_capacity(n - 1);
    let mut rho = Vec::with_capacity(n - 1);
    let mut striction = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let (ra, rb) = (&rulings[i], &rulings[i + 1]);
        let (da, db) = (ra.top_dir(), rb.top_dir());
        let det = det2(da, db);
        if det.abs() <= 1e-12 * norm2(da) * norm2(db) {
            return Err(FieldError::Degenerate(format!(
                "rulings {i} and {} have parallel top views",
                i + 1
            )));
        }
        // pa + s da = pb + t db in the top view.
        let rhs = sub2(rb.top_point(), ra.top_point());
        let s = det2(rhs, db) / det;
        let t = det2(rhs, da) / det;
        striction.push(add2(ra.top_point(), scale2(da, s)));
        let za = ra.point[2] + s * ra.dir[2];
        let zb = rb.point[2] + t * rb.dir[2];
        d.push(zb - za);
        let angle = det.atan2(dot2(da, db));
        phi.push(angle);
        rho.push((zb - za) / angle);
    }
    let mut w = Vec::with_capacity(n.saturating_sub(2));
    let mut k = Vec::with_capacity(n.saturating_sub(2));
    for i in 0..n.saturating_sub(2) {
        let wi = norm2(sub2(striction[i + 1], striction[i]));
        w.push(wi);
        k.push(-rho[i] * rho[i] / (wi * wi * wi * wi));
    }
    Ok(MindingReport { d, phi, rho, striction, w, k })
}

/// Applies a sequence of isotropic shearings to a ruling sequence: step
/// `i` adds to every ruling after `r_i` the linear height `c_i *
/// dist(x, top view of r_i)`, which vanishes on the top view of `r_i` and
/// therefore preserves all pitch/striction data. The result is a discrete
/// ruled surface isometric to the input.
pub fn discrete_minding_shear(rulings: &[Line3], shears: &[f64]) -> FieldResult<Vec<Line3>> {
    if shears.len() + 1 != rulings.len() {
        return Err(FieldError::Degenerate(format!(
            "need one shear coefficient per consecutive pair ({} rulings, {} shears)",
            rulings.len(),
            shears.len()
        )));
    }
    let mut out = rulings.to_vec();
    for (i, &c) in shears.iter().enumerate() {
        let base = rulings[i];
        let u = base.top_dir();
        let nu = norm2(u);
        if nu <= 0.0 {
            return Err(FieldError::Degenerate(format!(
                "ruling {i} has an isotropic (vertical) direction"
            )));
        }
        let m = scale2([-u[1], u[0]], 1.0 / nu);
        let anchor = base.top_point();
        for r in out.iter_mut().skip(i + 1) {
            r.point[2] += c * dot2(m, sub2(r.top_point(), anchor));
            r.dir[2] += c * dot2(m, r.top_dir());
        }
    }
    Ok(out)
}

/// The rulings of the difference surface of two ruled surfaces whose
/// rulings share top views: height differences along common top lines.
pub fn difference_rulings(a: &[Line3], b: &[Line3]) -> FieldResult<Vec<Line3>> {
    if a.len() != b.len() {
        return Err(FieldError::Degenerate(
            "ruling sequences have different lengths".to_string(),
        ));
    }
    let mut out = Vec::with_capacity(a.len());
    for (i, (ra, rb)) in a.iter().zip(b.iter()).enumerate() {
        let (da, db) = (ra.top_dir(), rb.top_dir());
        let nb2 = dot2(db, db);
        if nb2 <= 0.0 || det2(da, db).abs() > 1e-9 * norm2(da) * norm2(db) {
            return Err(FieldError::Degenerate(format!(
                "rulings {i} do not share a top view direction"
            )));
        }
        let offset = sub2(ra.top_point(), rb.top_point());
        if det2(offset, db).abs() > 1e-9 * (norm2(offset) + 1.0) * norm2(db) {
            return Err(FieldError::Degenerate(format!(
                "rulings {i} do not lie over a common top-view line"
            )));
        }
        let t = dot2(offset, db) / nb2;
        let zb0 = rb.point[2] + t * rb.dir[2];
        let s = dot2(da, db) / nb2;
        out.push(Line3 {
            point: [ra.point[0], ra.point[1], zb0 - ra.point[2]],
            dir: [ra.dir[0], ra.dir[1], s * rb.dir[2] - ra.dir[2]],
        });
    }
    Ok(out)
}

/// Coplanarity residual of two lines: the normalized volume spanned by
/// the two directions and the connecting vector. Zero for coplanar lines.
pub fn lines_coplanar_residual(a: &Line3, b: &Line3) -> f64 {
    let conn = sub3(b.point, a.point);
    let s = norm3(a.dir).max(norm3(b.dir)).max(norm3(conn));
    if s <= 0.0 {
        return 0.0;
    }
    det3(a.dir, b.dir, conn).abs() / (s * s * s)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::HeightField;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_pair(f: &str, n: &str, grid: &Grid2) -> (QuadNet, QuadNet) {
        let f = HeightField::parse(f).unwrap();
        let n = HeightField::parse(n).unwrap();
        let fnet = QuadNet::from_graph(&f.0, grid).unwrap();
        let vnet = QuadNet::from_fn(grid.nu, grid.nv, |i, j| {
            let (u, v) = (grid.u(i), grid.v(j));
            [-v, u, n.0.value(u, v).unwrap()]
        })
        .unwrap();
        (fnet, vnet)
    }

    /// A generic Q-net: random row 0 and column 0, interior filled by
    /// picking a random top-view point on each face's carrier plane.
    fn random_qnet(rng: &mut ChaCha8Rng, nu: usize, nv: usize) -> QuadNet {
        let mut verts = vec![[0.0; 3]; nu * nv];
        for i in 0..nu {
            verts[i] = [i as f64 + 0.3 * rng.gen::<f64>(), 0.3 * rng.gen::<f64>(), rng.gen::<f64>()];
        }
        for j in 1..nv {
            verts[j * nu] = [
                0.3 * rng.gen::<f64>(),
                j as f64 + 0.3 * rng.gen::<f64>(),
                rng.gen::<f64>(),
            ];
        }
        for j in 1..nv {
            for i in 1..nu {
                let p1 = verts[(j - 1) * nu + i - 1];
                let p2 = verts[(j - 1) * nu + i];
                let p4 = verts[j * nu + i - 1];
                let x = i as f64 + 0.3 * rng.gen::<f64>();
                let y = j as f64 + 0.3 * rng.gen::<f64>();
                let e1 = sub3(p2, p1);
                let e2 = sub3(p4, p1);
                let den = det2(top(e1), top(e2));
                let a = (e1[2] * e2[1] - e2[2] * e1[1]) / den;
                let b = (e2[2] * e1[0] - e1[2] * e2[0]) / den;
                let z = p1[2] + a * (x - p1[0]) + b * (y - p1[1]);
                verts[j * nu + i] = [x, y, z];
            }
        }
        QuadNet::new(nu, nv, verts).unwrap()
    }

    fn translational_example() -> QuadNet {
        let a: Vec<V3> = (0..7)
            .map(|i| {
                let t = i as f64;
                [0.4 * t, 0.06 * t * t, (0.5 * t).sin() * 0.3]
            })
            .collect();
        let b: Vec<V3> = (0..6)
            .map(|j| {
                let t = j as f64;
                [0.05 * t * t, 0.35 * t, (0.4 * t).cos() * 0.2]
            })
            .collect();
        QuadNet::translational(&a, &b).unwrap()
    }

    #[test]
    fn mixed_area_matches_shoelace_and_is_bilinear() {
        let sq: [V2; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(mixed_area(&sq, &sq), 1.0);
        let tau = 2.75;
        let scaled: [V2; 4] = std::array::from_fn(|k| scale2(sq[k], tau));
        assert_relative_eq!(mixed_area(&sq, &scaled), tau, max_relative = 1e-14);
        // symmetry on a generic pair
        let p: [V2; 4] = [[0.1, -0.2], [1.3, 0.2], [0.9, 1.4], [-0.3, 1.0]];
        let q: [V2; 4] = [[0.0, 0.0], [2.0, 0.3], [1.8, 2.2], [-0.4, 1.7]];
        assert_eq!(mixed_area(&p, &q), mixed_area(&q, &p));
        // Minkowski bilinearity: 2 area(P,Q) = area(P+Q) - area(P) - area(Q)
        let sum: [V2; 4] = std::array::from_fn(|k| add2(p[k], q[k]));
        assert_relative_eq!(
            2.0 * mixed_area(&p, &q),
            quad_area(&sum) - quad_area(&p) - quad_area(&q),
            max_relative = 1e-13
        );
    }

    #[test]
    fn mixed_area_vanishes_iff_noncorresponding_diagonals_parallel() {
        // Dual quad of a planar quad (in z = 0): edges parallel, swapped
        // diagonals parallel, mixed area zero.
        let p3: [V3; 4] = [
            [0.0, 0.0, 0.0],
            [1.4, 0.1, 0.0],
            [1.1, 1.2, 0.0],
            [-0.2, 0.9, 0.0],
        ];
        let factors = dual_edge_factors(&p3).unwrap();
        let mut q3 = [[0.0f64; 3]; 4];
        q3[0] = [0.5, -0.3, 0.0];
        for k in 0..3 {
            let e = sub3(p3[(k + 1) % 4], p3[k]);
            q3[k + 1] = add3(q3[k], scale3(e, factors[k]));
        }
        let p: [V2; 4] = std::array::from_fn(|k| top(p3[k]));
        let q: [V2; 4] = std::array::from_fn(|k| top(q3[k]));
        assert!(mixed_area(&p, &q).abs() < 1e-12);
        assert!(det2(sub2(p[2], p[0]), sub2(q[3], q[1])).abs() < 1e-12);
        assert!(det2(sub2(p[3], p[1]), sub2(q[2], q[0])).abs() < 1e-12);

        // Along the 2-parameter family of quads with edges parallel to p,
        // the mixed area vanishes exactly on the dual ray.
        let e: [V2; 4] = std::array::from_fn(|k| sub2(p[(k + 1) % 4], p[k]));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a1: f64 = rng.gen_range(-2.0..2.0);
            let a2: f64 = rng.gen_range(-2.0..2.0);
            // closure: a3 e3 + a4 e4 = -(a1 e1 + a2 e2)
            let rhs = scale2(add2(scale2(e[0], a1), scale2(e[1], a2)), -1.0);
            let den = det2(e[2], e[3]);
            let a3 = det2(rhs, e[3]) / den;
            let a4 = det2(e[2], rhs) / den;
            let factors2 = [a1, a2, a3, a4];
            let mut quad = [[0.0f64; 2]; 4];
            for k in 0..3 {
                quad[k + 1] = add2(quad[k], scale2(e[k], factors2[k]));
            }
            let m = mixed_area(&p, &quad);
            let diag_parallel = det2(sub2(p[2], p[0]), sub2(quad[3], quad[1])).abs() < 1e-10
                && det2(sub2(p[3], p[1]), sub2(quad[2], quad[0])).abs() < 1e-10;
            assert_eq!(m.abs() < 1e-10, diag_parallel, "mixed area {m}");
        }
    }

    #[test]
    fn is_qnet_flags_planar_and_perturbed_nets() {
        let net = translational_example();
        let report = is_qnet(&net, 1e-12);
        assert!(report.planar, "max residual {}", report.max_residual);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bumped = net.map(|p| [p[0], p[1], p[2] + 1e-2 * rng.gen::<f64>()]);
        assert!(!is_qnet(&bumped, 1e-6).planar);

        // single coplanar face
        let one = QuadNet::new(
            2,
            2,
            vec![[0.0, 0.0, 1.0], [1.0, 0.0, 2.0], [1.0, 1.0, 4.0], [0.0, 1.0, 3.0]],
        )
        .unwrap();
        assert!(is_qnet(&one, 1e-12).planar);
    }

    #[test]
    fn koenigs_check_accepts_reflected_dual_and_rejects_combescure_scale() {
        let net = translational_example();
        let origin = net.vertex(0, 0);
        let reflect = |s: f64, t: f64| {
            QuadNet::from_fn(net.nu(), net.nv(), |i, j| {
                let ai = sub3(net.vertex(i, 0), origin);
                let bj = sub3(net.vertex(0, j), origin);
                add3(origin, add3(scale3(ai, s), scale3(bj, t)))
            })
            .unwrap()
        };
        // The Koenigs dual of a translational net scales one edge family
        // by sigma and the other by -sigma.
        let dual = reflect(1.3, -1.3);
        let report = koenigs_check(&net, &dual, 1e-10).unwrap();
        assert!(
            report.related,
            "edge {} diag {}",
            report.max_edge_residual, report.max_diagonal_residual
        );
        // A (t, 1/t)-Combescure transform keeps edges parallel but its
        // non-corresponding diagonals are not parallel (its mixed area
        // with the original is (t + 1/t)/2 times the face area).
        let combescure = reflect(1.7, 1.0 / 1.7);
        let report = koenigs_check(&net, &combescure, 1e-10).unwrap();
        assert!(!report.related);
        assert!(report.max_edge_residual < 1e-12);
        assert!(report.max_diagonal_residual > 1e-2);
        let m = mixed_area(&net.face_top(1, 1), &combescure.face_top(1, 1));
        let a = quad_area(&net.face_top(1, 1));
        assert_relative_eq!(m, 0.5 * (1.7 + 1.0 / 1.7) * a, max_relative = 1e-12);

        // A generic Q-net is not Koenigs-dual to itself: that would force
        // its two diagonals to be mutually parallel.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let generic = random_qnet(&mut rng, 5, 5);
        let selfcheck = koenigs_check(&generic, &generic, 1e-8).unwrap();
        assert!(!selfcheck.related);
        assert!(selfcheck.max_edge_residual < 1e-14);
        assert!(selfcheck.max_diagonal_residual > 1e-3);
    }

    #[test]
    fn koenigs_dualize_translational_round_trip() {
        let net = translational_example();
        let dual = koenigs_dualize(&net, [0.2, -0.1, 0.5], 1e-9).unwrap();
        let check = koenigs_check(&net, &dual, 1e-9).unwrap();
        assert!(
            check.related,
            "edge {} diag {}",
            check.max_edge_residual, check.max_diagonal_residual
        );
        // dual of dual is homothetic to the original
        let ddual = koenigs_dualize(&dual, [0.0, 0.0, 0.0], 1e-9).unwrap();
        let p0 = net.vertex(0, 0);
        let q0 = ddual.vertex(0, 0);
        let p1 = net.vertex(net.nu() - 1, net.nv() - 1);
        let q1 = ddual.vertex(net.nu() - 1, net.nv() - 1);
        let diff_p = sub3(p1, p0);
        let diff_q = sub3(q1, q0);
        let s = dot3(diff_q, diff_p) / dot3(diff_p, diff_p);
        for j in 0..net.nv() {
            for i in 0..net.nu() {
                let expected = add3(q0, scale3(sub3(net.vertex(i, j), p0), s));
                assert!(
                    norm3(sub3(ddual.vertex(i, j), expected)) < 1e-10,
                    "double dual is not homothetic at ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn koenigs_dualize_rejects_generic_qnet() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let net = random_qnet(&mut rng, 6, 6);
        assert!(is_qnet(&net, 1e-10).planar);
        match koenigs_dualize(&net, [0.0; 3], 1e-6) {
            Err(KoenigsError::NotKoenigs { residual, .. }) => {
                assert!(residual > 1e-6);
            }
            other => panic!("expected a propagation inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn net_dual_nu_is_an_involution_on_interior_vertices() {
        let net = translational_example();
        let dual = net_dual_nu(&net).unwrap();
        let back = net_dual_nu(&dual).unwrap();
        assert_eq!(back.nu(), net.nu() - 2);
        assert_eq!(back.nv(), net.nv() - 2);
        for j in 0..back.nv() {
            for i in 0..back.nu() {
                let orig = net.vertex(i + 1, j + 1);
                assert!(
                    norm3(sub3(back.vertex(i, j), orig)) < 1e-10,
                    "double metric dual differs at ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn net_dual_nu_reciprocal_parallel_top_views() {
        // An i-edge of the dual joins the nu-images of two i-adjacent face
        // planes; those planes share a j-edge of the primal, and the lemma
        // on top views of dual lines makes the two top views parallel.
        let net = translational_example();
        let dual = net_dual_nu(&net).unwrap();
        for j in 0..dual.nv() {
            for i in 0..dual.nu() - 1 {
                let de = sub3(dual.vertex(i + 1, j), dual.vertex(i, j));
                let pe = sub3(net.vertex(i + 1, j + 1), net.vertex(i + 1, j));
                assert!(
                    det2(top(de), top(pe)).abs() < 1e-12,
                    "dual i-edge not parallel to primal j-edge at ({i}, {j})"
                );
            }
        }
        // the dual of a translational net has straight top-view polylines
        for j in 0..dual.nv() {
            for i in 0..dual.nu() - 2 {
                let e1 = sub3(dual.vertex(i + 1, j), dual.vertex(i, j));
                let e2 = sub3(dual.vertex(i + 2, j), dual.vertex(i + 1, j));
                let r = det2(top(e1), top(e2)).abs() / (norm2(top(e1)) * norm2(top(e2)));
                assert!(r < 1e-10, "dual polyline kink {r:.3e} at ({i}, {j})");
            }
        }
    }

    #[test]
    fn discrete_flex_fit_exact_quadratic_pair() {
        // f = (u^2+v^2)/2 with n = (u^2-v^2)/2 satisfies all three parts
        // of the flexibility definition exactly on a uniform grid: both
        // height functions are sums of one-variable functions, so the
        // graph faces of f and of -n are planar.
        let grid = Grid2::square(-1.0, 1.0, 9).unwrap();
        let (f, v) = sample_pair("(u^2+v^2)/2", "(u^2-v^2)/2", &grid);
        let report = discrete_flex_fit(&f, &v, 1e-10).unwrap();
        assert!(
            report.flexible,
            "top {} mixed_rel {} fit {}",
            report.top_view_residual, report.max_mixed_area_rel, report.max_fit_residual
        );
        assert!(report.top_view_residual < 1e-14);
        assert!(report.max_mixed_area < 1e-13);
        assert!(report.max_fit_residual < 1e-12);
        assert!(report.v_planarity < 1e-13);
        // the recovered motions reproduce the corner velocities
        let m = report.motions[0];
        let face = f.face(0, 0);
        let vel = v.face(0, 0);
        for k in 0..4 {
            assert!(norm3(sub3(m.velocity_at(face[k]), vel[k])) < 1e-12);
        }
    }

    #[test]
    fn discrete_flex_fit_smooth_limit_second_order() {
        // isotropic sphere with a harmonic rotation height: smoothly
        // flexible, so the discrete residuals shrink like h^2.
        let run = |n: usize| -> FlexFitReport {
            let grid = Grid2::square(0.2, 1.2, n).unwrap();
            let (f, v) = sample_pair("(u^2+v^2)/2", "u^3 - 3*u*v^2", &grid);
            discrete_flex_fit(&f, &v, 1e-10).unwrap()
        };
        let coarse = run(6);
        let fine = run(11);
        // grid spacing halves from n=6 to n=11
        assert!(coarse.max_fit_residual < 0.2);
        assert!(
            fine.max_fit_residual < 0.35 * coarse.max_fit_residual,
            "no O(h^2) decay of the fit residual: {} -> {}",
            coarse.max_fit_residual,
            fine.max_fit_residual
        );
        // for a rotational paraboloid with a harmonic rotation height the
        // dual mixed areas cancel exactly; only roundoff remains
        assert!(coarse.max_mixed_area_rel < 1e-11);
        assert!(fine.max_mixed_area_rel < 1e-11);
        assert!(coarse.top_view_residual < 1e-14);
        // face planarity of V decays at least linearly in h
        assert!(fine.v_planarity < 0.6 * coarse.v_planarity);
    }

    #[test]
    fn discrete_flex_fit_rejects_random_velocities() {
        let grid = Grid2::square(-1.0, 1.0, 7).unwrap();
        let (f, _) = sample_pair("(u^2+v^2)/2", "(u^2-v^2)/2", &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = QuadNet::from_fn(grid.nu, grid.nv, |i, j| {
            let (u, w) = (grid.u(i), grid.v(j));
            [-w + 0.1 * rng.gen::<f64>(), u, rng.gen::<f64>()]
        })
        .unwrap();
        let report = discrete_flex_fit(&f, &v, 1e-8).unwrap();
        assert!(!report.flexible);
        assert!(report.max_fit_residual > 1e-3);
    }

    #[test]
    fn voss_construct_linear_data_gives_a_plane() {
        // orthogonal pencils of straight lines + linear Cauchy data
        let (nu, nv) = (6, 5);
        let mut topv = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                topv.push([0.3 * i as f64, 0.4 * j as f64]);
            }
        }
        let plane = |x: f64, y: f64| 0.7 * x - 1.1 * y + 0.25;
        let z_row0: Vec<f64> = (0..nu).map(|i| plane(0.3 * i as f64, 0.0)).collect();
        let z_col0: Vec<f64> = (0..nv).map(|j| plane(0.0, 0.4 * j as f64)).collect();
        let net = voss_construct(&topv, nu, nv, &z_row0, &z_col0, 1e-10).unwrap();
        for j in 0..nv {
            for i in 0..nu {
                let p = net.vertex(i, j);
                assert_relative_eq!(p[2], plane(p[0], p[1]), epsilon = 1e-12);
            }
        }
    }

    fn conic_voss_net(n: usize) -> QuadNet {
        let angles_u: Vec<f64> = (0..n).map(|i| 0.15 + 0.06 * i as f64).collect();
        let angles_v: Vec<f64> = (0..n).map(|j| 2.2 + 0.04 * j as f64).collect();
        let topv = conic_tangent_top_view(&angles_u, &angles_v).unwrap();
        let z_row0: Vec<f64> = (0..n).map(|i| (0.4 * i as f64).sin() * 0.3).collect();
        let mut z_col0: Vec<f64> = (0..n).map(|j| 0.1 * j as f64 + 0.05 * (j * j) as f64).collect();
        z_col0[0] = z_row0[0];
        voss_construct(&topv, n, n, &z_row0, &z_col0, 1e-9).unwrap()
    }

    #[test]
    fn voss_construct_conic_tangents_is_planar() {
        let net = conic_voss_net(21);
        let report = is_qnet(&net, 1e-12);
        assert!(report.planar, "max residual {}", report.max_residual);
    }

    #[test]
    fn voss_construct_rejects_collinear_face_corners() {
        // all points on one line -> degenerate faces
        let (nu, nv) = (5, 5);
        let mut topv = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                topv.push([i as f64 + j as f64, 2.0 * (i as f64 + j as f64)]);
            }
        }
        let z = vec![0.0; nu];
        let err = voss_construct(&topv, nu, nv, &z, &z, 1e-9).unwrap_err();
        assert!(matches!(err, FieldError::Degenerate(_)));
    }

    #[test]
    fn voss_flex_identity_and_top_view_invariance() {
        let net = conic_voss_net(12);
        let f1 = voss_flex(&net, 1.0).unwrap();
        assert_eq!(f1.nu(), net.nu() - 2);
        for j in 0..f1.nv() {
            for i in 0..f1.nu() {
                assert!(norm3(sub3(f1.vertex(i, j), net.vertex(i + 1, j + 1))) < 1e-9);
            }
        }
        for &t in &[0.5, 2.0] {
            let ft = voss_flex(&net, t).unwrap();
            assert!(is_qnet(&ft, 1e-10).planar);
            for j in 0..ft.nv() {
                for i in 0..ft.nu() {
                    let d = sub2(top(ft.vertex(i, j)), top(f1.vertex(i, j)));
                    assert!(norm2(d) < 1e-9, "top view moved at ({i}, {j}) for t={t}");
                }
            }
        }
    }

    #[test]
    fn voss_flex_dual_face_areas_are_invariant() {
        let net = conic_voss_net(10);
        let lb = net_dual_nu(&net).unwrap();
        let origin = lb.vertex(0, 0);
        let areas = |t: f64| -> Vec<f64> {
            let lb_t = QuadNet::from_fn(lb.nu(), lb.nv(), |i, j| {
                let ai = sub3(lb.vertex(i, 0), origin);
                let bj = sub3(lb.vertex(0, j), origin);
                add3(origin, add3(scale3(ai, t), scale3(bj, 1.0 / t)))
            })
            .unwrap();
            let (fu, fv) = lb_t.face_dims();
            (0..fv)
                .flat_map(|j| (0..fu).map(move |i| (i, j)))
                .map(|(i, j)| quad_area(&lb_t.face_top(i, j)))
                .collect()
        };
        let base = areas(1.0);
        for &t in &[0.5, 2.0] {
            for (a, b) in areas(t).iter().zip(base.iter()) {
                // the shoelace sum over corners ~10 units from the origin
                // cancels heavily, so allow a few ulps of slack
                assert_relative_eq!(a, b, max_relative = 1e-11);
            }
        }
        // dual faces of a translational net are parallelograms
        let (fu, fv) = lb.face_dims();
        for j in 0..fv {
            for i in 0..fu {
                let f = lb.face(i, j);
                let size = norm3(sub3(f[2], f[0]));
                let r = norm3(sub3(add3(f[0], f[2]), add3(f[1], f[3]))) / size;
                assert!(r < 1e-10, "dual face ({i}, {j}) is not a parallelogram: {r:.3e}");
            }
        }
    }

    #[test]
    fn voss_flex_keeps_dihedral_angles_constant_along_polylines() {
        let net = conic_voss_net(12);
        for &t in &[0.5, 1.0, 2.0] {
            let ft = voss_flex(&net, t).unwrap();
            let report = dihedral_constancy(&ft).unwrap();
            assert!(
                report.max_spread_rows < 1e-9 && report.max_spread_cols < 1e-9,
                "dihedral spread {} / {} at t={t}",
                report.max_spread_rows,
                report.max_spread_cols
            );
        }
    }

    #[test]
    fn voss_flex_rejects_non_voss_input() {
        // a generic Q-net has a non-translational metric dual
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let generic = random_qnet(&mut rng, 6, 6);
        let err = voss_flex(&generic, 2.0).unwrap_err();
        assert!(matches!(err, FieldError::Degenerate(_)));
        // and the flex parameter must be positive
        let err = voss_flex(&conic_voss_net(8), 0.0).unwrap_err();
        assert!(matches!(err, FieldError::Degenerate(_)));
    }

    fn helix_rulings(n: usize) -> Vec<Line3> {
        (0..n)
            .map(|i| {
                let t = 0.25 * i as f64;
                Line3 {
                    point: [t.cos(), t.sin(), 0.3 * t],
                    dir: [-t.sin() + 0.4, t.cos(), 0.5 + 0.1 * t],
                }
            })
            .collect()
    }

    #[test]
    fn minding_shear_preserves_pitch_and_striction() {
        let rulings = helix_rulings(12);
        let base = minding_report(&rulings).unwrap();

        // zero shears are the identity
        let zero = discrete_minding_shear(&rulings, &vec![0.0; 11]).unwrap();
        assert_eq!(zero, rulings);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shears: Vec<f64> = (0..11).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let sheared = discrete_minding_shear(&rulings, &shears).unwrap();
        assert_ne!(sheared, rulings);
        let after = minding_report(&sheared).unwrap();
        for k in 0..base.d.len() {
            assert_relative_eq!(after.d[k], base.d[k], epsilon = 1e-12);
            assert_relative_eq!(after.phi[k], base.phi[k], epsilon = 1e-14);
            assert_relative_eq!(after.rho[k], base.rho[k], epsilon = 1e-12);
            assert!(norm2(sub2(after.striction[k], base.striction[k])) < 1e-13);
        }
        for k in 0..base.w.len() {
            assert_relative_eq!(after.w[k], base.w[k], epsilon = 1e-13);
            assert_relative_eq!(after.k[k], base.k[k], max_relative = 1e-11);
        }
    }

    #[test]
    fn minding_difference_surface_is_developable() {
        let rulings = helix_rulings(10);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let shears: Vec<f64> = (0..9).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let sheared = discrete_minding_shear(&rulings, &shears).unwrap();
        let diff = difference_rulings(&rulings, &sheared).unwrap();
        for k in 0..diff.len() - 1 {
            let r = lines_coplanar_residual(&diff[k], &diff[k + 1]);
            assert!(r < 1e-10, "difference rulings {k}, {} not coplanar: {r}", k + 1);
        }
    }

    #[test]
    fn minding_report_rejects_parallel_top_views() {
        let rulings = vec![
            Line3 { point: [0.0, 0.0, 0.0], dir: [1.0, 0.0, 0.2] },
            Line3 { point: [0.0, 1.0, 0.5], dir: [2.0, 0.0, 0.1] },
        ];
        assert!(matches!(minding_report(&rulings), Err(FieldError::Degenerate(_))));
    }
}

