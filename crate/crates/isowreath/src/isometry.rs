//! Isometry of surfaces in isotropic space and the classical isometric
//! families. Two admissible surfaces with the same top view are isometric
//! when their Gaussian curvatures agree at points with the same top view, so
//! the predicate reduces to a pointwise comparison of `K`. On top of it sit
//! the associated family of minimal surfaces (conjugate harmonics), the
//! helical/rotational families, the parabolic-rotational families, and
//! Minding families of ruled surfaces with the striction/pitch machinery.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::curvature::curvature_graph;
use crate::fields::{FieldError, FieldResult, Grid2, HeightField, ParamSurface, ScalarField};
use crate::geom::{det2, dot2, norm2, sub2, V3};
use crate::jet::{Jet2, Jet3};

// ---------------------------------------------------------------------------
// Isometry predicate
// ---------------------------------------------------------------------------

/// Result of a pointwise curvature comparison over a grid.
#[derive(Clone, Debug)]
pub struct IsometryReport {
    pub isometric: bool,
    /// `max |K(F) - K(G)|` over the sampled nodes.
    pub max_residual: f64,
    /// The residual `|K(F) - K(G)|` as a sampled field on the grid.
    pub residual: ScalarField,
}

/// Compare the Gaussian curvature of two graphs at every grid node.
pub fn is_isometric(
    f: &HeightField,
    g: &HeightField,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<IsometryReport> {
    let nodes: Vec<(usize, usize)> = grid.interior_nodes(0).collect();
    let values: Vec<f64> = crate::thread_pool().install(|| {
        nodes
            .par_iter()
            .map(|&(i, j)| {
                let (u, v) = (grid.u(i), grid.v(j));
                let kf = curvature_graph(f, u, v)?.k;
                let kg = curvature_graph(g, u, v)?.k;
                Ok((kf - kg).abs())
            })
            .collect::<FieldResult<Vec<f64>>>()
    })?;
    let max_residual = values.iter().cloned().fold(0.0_f64, f64::max);
    Ok(IsometryReport {
        isometric: max_residual <= tol,
        max_residual,
        residual: ScalarField::sampled(*grid, values)?,
    })
}

// ---------------------------------------------------------------------------
// Conjugate harmonics and the associated family
// ---------------------------------------------------------------------------

/// Integral of `g` over `[a, b]` split into `n` panels by the corrected
/// trapezoid rule: the interior derivative terms telescope, so the result is
/// the trapezoid sum plus `h^2/12 (g'(a) - g'(b))`. Exact for cubics,
/// globally `O(h^4)` otherwise. `eval` returns `(g, g')`.
pub(crate) fn hermite_trapezoid(
    a: f64,
    b: f64,
    n: usize,
    eval: impl Fn(f64) -> FieldResult<(f64, f64)>,
) -> FieldResult<f64> {
    if a == b {
        return Ok(0.0);
    }
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let (ga, da) = eval(a)?;
    let (gb, db) = eval(b)?;
    let mut sum = 0.5 * (ga + gb);
    for k in 1..n {
        sum += eval(a + k as f64 * h)?.0;
    }
    Ok(h * sum + h * h / 12.0 * (da - db))
}

/// Path integral for the conjugate value: along `v = v0` first and then up
/// the `u = const` line when `row_first`, the transposed order otherwise.
fn conjugate_value(
    x: &ScalarField,
    u0: f64,
    v0: f64,
    u: f64,
    v: f64,
    step: f64,
    row_first: bool,
) -> FieldResult<f64> {
    let panels = |len: f64| ((len / step).abs().ceil() as usize).max(2);
    let leg_u = |at_v: f64| {
        // d/du y = -x_v, with u-derivative -x_uv
        hermite_trapezoid(u0, u, panels(u - u0), |t| {
            let j = x.jet2(t, at_v)?;
            Ok((-j.dv, -j.duv))
        })
    };
    let leg_v = |at_u: f64| {
        // d/dv y = x_u, with v-derivative x_uv
        hermite_trapezoid(v0, v, panels(v - v0), |t| {
            let j = x.jet2(at_u, t)?;
            Ok((j.du, j.duv))
        })
    };
    if row_first {
        Ok(leg_u(v0)? + leg_v(u)?)
    } else {
        Ok(leg_v(u0)? + leg_u(v)?)
    }
}

/// A harmonic field together with its conjugate.
#[derive(Clone, Debug)]
pub struct ConjugatePair {
    pub y: HeightField,
    /// Largest discrepancy between the two integration path orders over the
    /// probe points (grid corners and center).
    pub closure_residual: f64,
}

/// Conjugate harmonic `y` of `x`: `y_u = -x_v`, `y_v = x_u`, anchored by
/// `y(u0, v0) = 0` at the grid origin. The value is recovered by path
/// integration; all derivatives of `y` come from the jets of `x` directly,
/// so curvature of surfaces built from `y` is exact.
pub fn harmonic_conjugate(
    x: &HeightField,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<ConjugatePair> {
    let mut max_lap = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let jet = x.jet_at(grid.u(i), grid.v(j))?;
        max_lap = max_lap.max((jet.duu + jet.dvv).abs());
    }
    if max_lap > tol {
        return Err(FieldError::Degenerate(format!(
            "field is not harmonic: max |Laplacian| = {max_lap:e} exceeds {tol:e}"
        )));
    }
    let (u0, v0) = (grid.u0, grid.v0);
    let step = 0.125 * grid.hu.min(grid.hv);
    let xf = x.0.clone();

    let mut closure_residual = 0.0_f64;
    let probes = [
        (grid.u0, grid.v_max()),
        (grid.u_max(), grid.v0),
        (grid.u_max(), grid.v_max()),
        (0.5 * (grid.u0 + grid.u_max()), 0.5 * (grid.v0 + grid.v_max())),
    ];
    for &(u, v) in &probes {
        let a = conjugate_value(&xf, u0, v0, u, v, step, true)?;
        let b = conjugate_value(&xf, u0, v0, u, v, step, false)?;
        closure_residual = closure_residual.max((a - b).abs());
    }
    if closure_residual > tol.max(1e-7) {
        return Err(FieldError::Degenerate(format!(
            "conjugate closure residual {closure_residual:e} exceeds tolerance"
        )));
    }

    let y = ScalarField::from_fn(move |u, v| {
        let j = xf.jet2(u, v)?;
        Ok(Jet2 {
            value: conjugate_value(&xf, u0, v0, u, v, step, true)?,
            du: -j.dv,
            dv: j.du,
            duu: -j.duv,
            duv: j.duu,
            dvv: j.duv,
        })
    });
    Ok(ConjugatePair { y: HeightField(y), closure_residual })
}

/// Member `f^t = x cos t + y sin t` of the associated family of a conjugate
/// harmonic pair. The Cauchy-Riemann equations are verified on a subsample
/// of the grid first.
pub fn assoc_family(
    x: &HeightField,
    y: &HeightField,
    t: f64,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<HeightField> {
    let stride = (grid.nu.max(grid.nv) / 16).max(1);
    let mut max_cr = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        if i % stride != 0 || j % stride != 0 {
            continue;
        }
        let (u, v) = (grid.u(i), grid.v(j));
        let jx = x.jet_at(u, v)?;
        let jy = y.jet_at(u, v)?;
        max_cr = max_cr.max((jy.du + jx.dv).abs()).max((jy.dv - jx.du).abs());
    }
    if max_cr > tol {
        return Err(FieldError::Degenerate(format!(
            "not a conjugate harmonic pair: max Cauchy-Riemann residual = {max_cr:e}"
        )));
    }
    Ok(HeightField(ScalarField::lin_comb(t.cos(), &x.0, t.sin(), &y.0)))
}

// ---------------------------------------------------------------------------
// One-variable profiles
// ---------------------------------------------------------------------------

/// A function of one real variable, stored as a field in `v` alone. Profile
/// curves of rotational, helical and parabolic-rotational surfaces are
/// represented this way.
#[derive(Clone, Debug)]
pub struct Profile(pub ScalarField);

impl Profile {
    /// Parse an expression in `v`.
    pub fn parse(src: &str) -> FieldResult<Self> {
        Ok(Profile(ScalarField::parse(src)?))
    }

    /// Value and first two derivatives at `v` (packed in the `dv` slots).
    pub fn jet(&self, v: f64) -> FieldResult<Jet2> {
        self.0.jet2(0.0, v)
    }

    pub fn value(&self, v: f64) -> FieldResult<f64> {
        Ok(self.jet(v)?.value)
    }

    pub fn d1(&self, v: f64) -> FieldResult<f64> {
        Ok(self.jet(v)?.dv)
    }

    pub fn d2(&self, v: f64) -> FieldResult<f64> {
        Ok(self.jet(v)?.dvv)
    }
}

// ---------------------------------------------------------------------------
// Helical / rotational surfaces (Bour families)
// ---------------------------------------------------------------------------

/// Gaussian curvature of the helical surface `(v cos u, v sin u, f(v) + h u)`
/// from the profile derivatives: `K = (f' f'' v^3 - h^2) / v^4`. The fourth
/// power in the denominator is forced by the graph formula (a rotational
/// surface has `K = f' f''/v`) and by the general parametric quotient.
pub fn rotational_k(fprime: &Profile, fsecond: &Profile, h: f64, v: f64) -> FieldResult<f64> {
    if v.abs() < 1e-12 {
        return Err(FieldError::Degenerate(
            "curvature is singular on the helical axis v = 0".into(),
        ));
    }
    let fp = fprime.value(v)?;
    let fpp = fsecond.value(v)?;
    Ok((fp * fpp * v.powi(3) - h * h) / v.powi(4))
}

/// The helical surface `(v cos u, v sin u, f(v) + h u)`; `h = 0` gives a
/// rotational surface.
pub fn helical_surface(profile: &Profile, h: f64) -> FieldResult<ParamSurface> {
    let x = ScalarField::parse("v*cos(u)")?;
    let y = ScalarField::parse("v*sin(u)")?;
    let p = profile.0.clone();
    let z = ScalarField::from_fn(move |u, v| {
        let j = p.jet2(0.0, v)?;
        Ok(Jet2 {
            value: j.value + h * u,
            du: h,
            dv: j.dv,
            duu: 0.0,
            duv: 0.0,
            dvv: j.dvv,
        })
    });
    Ok(ParamSurface::new(x, y, z))
}

/// Recursive adaptive Simpson quadrature with Richardson acceptance. When an
/// interval shrinks below `min_width` without convergence, the interval is
/// accepted anyway and `degraded` is set (this happens near square-root
/// endpoints of the Bour radicand).
fn adaptive_simpson(
    f: &dyn Fn(f64) -> FieldResult<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    min_width: f64,
    degraded: &AtomicBool,
) -> FieldResult<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if b - a < min_width {
        degraded.store(true, Ordering::Relaxed);
        return Ok(left + right + delta / 15.0);
    }
    let l = adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, min_width, degraded)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, min_width, degraded)?;
    Ok(l + r)
}

fn integrate(
    f: &dyn Fn(f64) -> FieldResult<f64>,
    a: f64,
    b: f64,
    tol: f64,
    degraded: &AtomicBool,
) -> FieldResult<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let fa = f(lo)?;
    let fm = f(m)?;
    let fb = f(hi)?;
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    let v = adaptive_simpson(f, lo, hi, fa, fm, fb, whole, tol, 1e-7, degraded)?;
    Ok(sign * v)
}

/// A member of the family of helical surfaces isometric to the rotational
/// surface with profile derivative `f'`. The new profile derivative is
/// `fbar' = eps(v) sqrt((f')^2 - hbar^2/v^2 + c)`, and `fbar` itself is
/// recovered by quadrature anchored at the lower end of `v_range`.
pub struct BourFamily {
    fprime: Profile,
    pub hbar: f64,
    pub c: f64,
    eps: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub v_range: (f64, f64),
    degraded: Arc<AtomicBool>,
}

impl BourFamily {
    /// `(f')^2 - hbar^2/v^2 + c`; nonnegative on the admissible range.
    pub fn radicand(&self, v: f64) -> FieldResult<f64> {
        let fp = self.fprime.value(v)?;
        Ok(fp * fp - self.hbar * self.hbar / (v * v) + self.c)
    }

    pub fn fbar_prime(&self, v: f64) -> FieldResult<f64> {
        let r = self.radicand(v)?;
        if r < -1e-9 {
            return Err(FieldError::Degenerate(format!(
                "radicand {r:e} is negative at v = {v}: no real isometric profile"
            )));
        }
        Ok((self.eps)(v) * r.max(0.0).sqrt())
    }

    /// `fbar'' = eps (f' f'' + hbar^2/v^3) / sqrt(radicand)`; singular where
    /// the radicand vanishes (profile turning points).
    pub fn fbar_second(&self, v: f64) -> FieldResult<f64> {
        let r = self.radicand(v)?;
        if r < 1e-12 {
            return Err(FieldError::Degenerate(format!(
                "profile curvature is singular at the radicand zero near v = {v}"
            )));
        }
        let j = self.fprime.jet(v)?;
        Ok((self.eps)(v) * (j.value * j.dv + self.hbar * self.hbar / v.powi(3)) / r.sqrt())
    }

    /// `fbar(v)` by adaptive Simpson quadrature from the range anchor.
    pub fn fbar(&self, v: f64) -> FieldResult<f64> {
        let eps = self.eps.clone();
        let me = |w: f64| -> FieldResult<f64> {
            let fp = self.fprime.value(w)?;
            let r = fp * fp - self.hbar * self.hbar / (w * w) + self.c;
            if r < -1e-9 {
                return Err(FieldError::Degenerate(format!(
                    "radicand {r:e} is negative at v = {w}"
                )));
            }
            Ok(eps(w) * r.max(0.0).sqrt())
        };
        integrate(&me, self.v_range.0, v, 1e-9, &self.degraded)
    }

    /// True when some quadrature interval hit the subdivision floor, so the
    /// advertised 1e-9 tolerance may not hold there.
    pub fn accuracy_degraded(&self) -> bool {
        self.degraded.load(Ordering::Relaxed)
    }

    /// The profile `fbar` as a one-variable field (value by quadrature,
    /// derivatives in closed form).
    pub fn profile(&self) -> Profile {
        let me = self.clone_parts();
        Profile(ScalarField::from_fn(move |_, v| {
            Ok(Jet2 {
                value: me.fbar(v)?,
                du: 0.0,
                dv: me.fbar_prime(v)?,
                duu: 0.0,
                duv: 0.0,
                dvv: me.fbar_second(v)?,
            })
        }))
    }

    /// The isometric helical surface `(v cos u, v sin u, fbar(v) + hbar u)`.
    pub fn helical_surface(&self) -> ParamSurface {
        let me = self.clone_parts();
        let x = ScalarField::parse("v*cos(u)").expect("fixed expression parses");
        let y = ScalarField::parse("v*sin(u)").expect("fixed expression parses");
        let z = ScalarField::from_fn(move |u, v| {
            Ok(Jet2 {
                value: me.fbar(v)? + me.hbar * u,
                du: me.hbar,
                dv: me.fbar_prime(v)?,
                duu: 0.0,
                duv: 0.0,
                dvv: me.fbar_second(v)?,
            })
        });
        ParamSurface::new(x, y, z)
    }

    fn clone_parts(&self) -> BourFamily {
        BourFamily {
            fprime: self.fprime.clone(),
            hbar: self.hbar,
            c: self.c,
            eps: self.eps.clone(),
            v_range: self.v_range,
            degraded: self.degraded.clone(),
        }
    }
}

/// Build a Bour family member after validating the radicand sign and the
/// smoothness of `fbar'` across sign switches of `eps`: a switch is only
/// admissible where the radicand (nearly) vanishes; `smooth_tol` bounds the
/// allowed jump of `fbar'`.
pub fn bour_family(
    fprime: &Profile,
    hbar: f64,
    c: f64,
    eps: impl Fn(f64) -> f64 + Send + Sync + 'static,
    v_range: (f64, f64),
    smooth_tol: f64,
) -> FieldResult<BourFamily> {
    let (lo, hi) = v_range;
    if !(lo < hi) || lo * hi <= 0.0 {
        return Err(FieldError::Degenerate(format!(
            "v range ({lo}, {hi}) must be increasing and exclude the axis v = 0"
        )));
    }
    let fam = BourFamily {
        fprime: fprime.clone(),
        hbar,
        c,
        eps: Arc::new(eps),
        v_range,
        degraded: Arc::new(AtomicBool::new(false)),
    };
    let n = 2048;
    let mut prev_sign = 0.0_f64;
    for k in 0..=n {
        let v = lo + (hi - lo) * k as f64 / n as f64;
        let r = fam.radicand(v)?;
        if r < -1e-9 {
            return Err(FieldError::Degenerate(format!(
                "radicand {r:e} is negative at v = {v}: no real isometric surface for these parameters"
            )));
        }
        let s = (fam.eps)(v).signum();
        if prev_sign != 0.0 && s != 0.0 && s != prev_sign {
            // fbar' jumps by 2 sqrt(radicand) across the switch
            let jump = 2.0 * r.max(0.0).sqrt();
            if jump > smooth_tol {
                return Err(FieldError::Degenerate(format!(
                    "eps switches sign near v = {v} where the radicand is {r:e}; \
                     the profile derivative would jump by {jump:e}"
                )));
            }
        }
        if s != 0.0 {
            prev_sign = s;
        }
    }
    Ok(fam)
}

// ---------------------------------------------------------------------------
// Parabolic rotational surfaces
// ---------------------------------------------------------------------------

/// The graph `a u^2 + b u v + f(v)` swept by a parabolic rotation.
pub fn parabolic_surface(a: f64, b: f64, f: &Profile) -> FieldResult<HeightField> {
    let quad = ScalarField::parse("u^2")?;
    let cross = ScalarField::parse("u*v")?;
    let lead = ScalarField::lin_comb(a, &quad, b, &cross);
    Ok(HeightField(ScalarField::lin_comb(1.0, &lead, 1.0, &f.0)))
}

/// Profile of a surface isometric to `a u^2 + b u v + f(v)`.
#[derive(Clone, Debug)]
pub struct ParabolicFamily {
    pub profile: Profile,
    /// Set on the cylinder branch (`abar = 0`), where the curvature is the
    /// constant `-bbar^2` no matter which profile is used.
    pub constant_k: Option<f64>,
}

/// `fbar = (a/abar) f + (bbar^2 - b^2)/(4 abar) v^2 + c1 v + c2`, the profile
/// of the parabolic rotational surface `abar u^2 + bbar u v + fbar(v)`
/// isometric to `a u^2 + b u v + f(v)`. With `abar = 0` the target is a
/// cylinder of constant curvature `-bbar^2` (requires `bbar != 0`).
pub fn parabolic_family(
    f: &Profile,
    a: f64,
    b: f64,
    abar: f64,
    bbar: f64,
    c1: f64,
    c2: f64,
) -> FieldResult<ParabolicFamily> {
    if abar == 0.0 {
        if bbar == 0.0 {
            return Err(FieldError::Degenerate(
                "abar = bbar = 0 describes a plane, not a rotational family".into(),
            ));
        }
        return Ok(ParabolicFamily {
            profile: f.clone(),
            constant_k: Some(-bbar * bbar),
        });
    }
    let tail = ScalarField::parse_with(
        "A*v^2 + B*v + C",
        &[("A", (bbar * bbar - b * b) / (4.0 * abar)), ("B", c1), ("C", c2)],
    )?;
    let profile = Profile(ScalarField::lin_comb(a / abar, &f.0, 1.0, &tail));
    Ok(ParabolicFamily { profile, constant_k: None })
}

// ---------------------------------------------------------------------------
// Ruled surfaces: striction, pitch, Minding families
// ---------------------------------------------------------------------------

/// A space curve with each coordinate a function of the parameter `u`.
#[derive(Clone, Debug)]
pub struct Curve3(pub [ScalarField; 3]);

impl Curve3 {
    /// Parse three coordinate expressions in `u`.
    pub fn parse(x: &str, y: &str, z: &str) -> FieldResult<Self> {
        Ok(Curve3([
            ScalarField::parse(x)?,
            ScalarField::parse(y)?,
            ScalarField::parse(z)?,
        ]))
    }

    pub fn point(&self, u: f64) -> FieldResult<V3> {
        Ok([
            self.0[0].value(u, 0.0)?,
            self.0[1].value(u, 0.0)?,
            self.0[2].value(u, 0.0)?,
        ])
    }

    fn jets(&self, u: f64) -> FieldResult<[CJet; 3]> {
        let j = |k: usize| -> FieldResult<CJet> {
            let j3 = self.0[k].jet3(u, 0.0)?;
            Ok(CJet { f: j3.value, d1: j3.du, d2: j3.duu, d3: j3.duuu })
        };
        Ok([j(0)?, j(1)?, j(2)?])
    }
}

/// One-variable jet of order three used for curve differentiation.
#[derive(Clone, Copy, Debug)]
struct CJet {
    f: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

impl CJet {
    /// The curve value as a second-order jet (derivatives in the `du` slots).
    fn base(self) -> Jet2 {
        Jet2 { value: self.f, du: self.d1, dv: 0.0, duu: self.d2, duv: 0.0, dvv: 0.0 }
    }

    /// The curve derivative as a second-order jet.
    fn deriv(self) -> Jet2 {
        Jet2 { value: self.d1, du: self.d2, dv: 0.0, duu: self.d3, duv: 0.0, dvv: 0.0 }
    }
}

fn jet2_det2(a0: Jet2, a1: Jet2, b0: Jet2, b1: Jet2) -> Jet2 {
    a0 * b1 - a1 * b0
}

fn jet2_sqrt(j: Jet2) -> FieldResult<Jet2> {
    if j.value <= 0.0 {
        return Err(FieldError::Degenerate(
            "square root of a nonpositive jet value".into(),
        ));
    }
    let s = j.value.sqrt();
    Ok(j.compose(s, 0.5 / s, -0.25 / (s * s * s)))
}

fn jet3_sqrt(j: Jet3) -> FieldResult<Jet3> {
    if j.value <= 0.0 {
        return Err(FieldError::Degenerate(
            "square root of a nonpositive jet value".into(),
        ));
    }
    let s = j.value.sqrt();
    Ok(j.compose(s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s)))
}

/// The three ruled-surface positions, told apart by the top views of the
/// rulings: they envelope a curve (type I), pass through a common point
/// (type II), or are all parallel (type III).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuledClass {
    EnvelopeOfCurve,
    Concurrent,
    ParallelRulings,
}

/// A ruled surface `R(u, t) = c(u) + t e(u)` with isotropically normalized
/// direction (`|top view of e| = 1`).
#[derive(Clone, Debug)]
pub struct RuledSurfaceSpec {
    pub directrix: Curve3,
    pub direction: Curve3,
    pub class: RuledClass,
    pub u_range: (f64, f64),
}

/// Divide each direction component by the top-view norm so that the ruling
/// parameter `t` measures isotropic distance.
fn normalize_direction(e: &Curve3) -> Curve3 {
    let comps: Vec<ScalarField> = (0..3)
        .map(|k| {
            let [ex, ey, _] = e.0.clone();
            let comp = e.0[k].clone();
            let (ex3, ey3, comp3) = (ex.clone(), ey.clone(), comp.clone());
            ScalarField::from_fn3(
                move |u, v| {
                    let a = ex.jet2(u, v)?;
                    let b = ey.jet2(u, v)?;
                    let n = jet2_sqrt(a * a + b * b)?;
                    Ok(comp.jet2(u, v)? / n)
                },
                move |u, v| {
                    let a = ex3.jet3(u, v)?;
                    let b = ey3.jet3(u, v)?;
                    let n = jet3_sqrt(a * a + b * b)?;
                    Ok(comp3.jet3(u, v)? / n)
                },
            )
        })
        .collect();
    let mut it = comps.into_iter();
    Curve3([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

impl RuledSurfaceSpec {
    /// Normalize the direction and verify the class tag numerically on
    /// samples of `u_range`.
    pub fn new(
        directrix: Curve3,
        direction: Curve3,
        class: RuledClass,
        u_range: (f64, f64),
    ) -> FieldResult<Self> {
        let spec = RuledSurfaceSpec {
            directrix,
            direction: normalize_direction(&direction),
            class,
            u_range,
        };
        let observed = spec.classify(33)?;
        if observed != class {
            return Err(FieldError::Degenerate(format!(
                "ruled class tag {class:?} is inconsistent with the sampled rulings ({observed:?})"
            )));
        }
        Ok(spec)
    }

    fn classify(&self, samples: usize) -> FieldResult<RuledClass> {
        let (lo, hi) = self.u_range;
        let mut max_turn = 0.0_f64;
        let mut centers: Vec<[f64; 2]> = Vec::new();
        for k in 0..samples {
            let u = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let e = self.direction.jets(u)?;
            let et_d = [e[0].d1, e[1].d1];
            max_turn = max_turn.max(norm2(et_d));
            if norm2(et_d) > 1e-8 {
                let (tstar, _) = self.ruling_parameter(u)?;
                let c = self.directrix.jets(u)?;
                centers.push([
                    c[0].f + tstar.value * e[0].f,
                    c[1].f + tstar.value * e[1].f,
                ]);
            }
        }
        if max_turn < 1e-8 {
            return Ok(RuledClass::ParallelRulings);
        }
        let spread = centers
            .windows(2)
            .map(|w| norm2(sub2(w[1], w[0])))
            .fold(0.0_f64, f64::max);
        Ok(if spread < 1e-7 {
            RuledClass::Concurrent
        } else {
            RuledClass::EnvelopeOfCurve
        })
    }

    /// The striction parameter `t*(u)` (as a one-variable jet) solving
    /// `det(c~' + t e~', e~) = 0`, plus the direction jets for reuse.
    fn ruling_parameter(&self, u: f64) -> FieldResult<(Jet2, [CJet; 3])> {
        let c = self.directrix.jets(u)?;
        let e = self.direction.jets(u)?;
        let num = jet2_det2(c[0].deriv(), c[1].deriv(), e[0].base(), e[1].base());
        let den = jet2_det2(e[0].deriv(), e[1].deriv(), e[0].base(), e[1].base());
        if den.value.abs() < 1e-12 {
            return Err(FieldError::Degenerate(format!(
                "rulings do not turn at u = {u}; no striction parameter"
            )));
        }
        Ok((-num / den, e))
    }

    pub fn point(&self, u: f64, t: f64) -> FieldResult<V3> {
        let c = self.directrix.point(u)?;
        let e = self.direction.point(u)?;
        Ok([c[0] + t * e[0], c[1] + t * e[1], c[2] + t * e[2]])
    }

    /// The parametrization `(u, t) -> c(u) + t e(u)` with `t` in the `v`
    /// slot, suitable for [`crate::curvature::curvature_param`].
    pub fn as_param_surface(&self) -> ParamSurface {
        let comp = |k: usize| {
            let c = self.directrix.0[k].clone();
            let e = self.direction.0[k].clone();
            ScalarField::from_fn(move |u, v| {
                let cj = c.jet2(u, 0.0)?;
                let ej = e.jet2(u, 0.0)?;
                Ok(Jet2 {
                    value: cj.value + v * ej.value,
                    du: cj.du + v * ej.du,
                    dv: ej.value,
                    duu: cj.duu + v * ej.duu,
                    duv: ej.du,
                    dvv: 0.0,
                })
            })
        };
        ParamSurface::new(comp(0), comp(1), comp(2))
    }
}

/// Striction data of a ruled surface at ruling `u`.
#[derive(Clone, Copy, Debug)]
pub struct StrictionData {
    /// Striction point on the ruling (types I and II; the striction curve of
    /// type II is the common isotropic line). Absent for type III.
    pub point: Option<V3>,
    /// Ruling parameter `t*` of the striction point (types I and II).
    pub ruling_parameter: Option<f64>,
    /// Slope difference between the striction tangent and the ruling
    /// (defined for type I only).
    pub sigma: Option<f64>,
    /// Pitch: `sigma / kappa` for type I, ruling-distance over
    /// ruling-angle for type II, `e3'` for type III.
    pub rho: f64,
}

/// Striction point, striction and pitch at ruling `u`.
pub fn striction(spec: &RuledSurfaceSpec, u: f64) -> FieldResult<StrictionData> {
    match spec.class {
        RuledClass::ParallelRulings => {
            let e = spec.direction.jets(u)?;
            Ok(StrictionData {
                point: None,
                ruling_parameter: None,
                sigma: None,
                rho: e[2].d1,
            })
        }
        RuledClass::Concurrent | RuledClass::EnvelopeOfCurve => {
            let (tstar, e) = spec.ruling_parameter(u)?;
            let c = spec.directrix.jets(u)?;
            let s: Vec<Jet2> = (0..3).map(|k| c[k].base() + tstar * e[k].base()).collect();
            let point = [s[0].value, s[1].value, s[2].value];
            let sdot_top = [s[0].du, s[1].du];
            if spec.class == RuledClass::Concurrent {
                // the striction line is isotropic: pitch is the limit of
                // ruling distance over ruling angle
                let phi_dot = det2([e[0].f, e[1].f], [e[0].d1, e[1].d1]);
                if phi_dot.abs() < 1e-12 {
                    return Err(FieldError::Degenerate(format!(
                        "rulings do not turn at u = {u}; pitch undefined"
                    )));
                }
                return Ok(StrictionData {
                    point: Some(point),
                    ruling_parameter: Some(tstar.value),
                    sigma: None,
                    rho: s[2].du / phi_dot,
                });
            }
            let speed = norm2(sdot_top);
            if speed < 1e-10 {
                return Err(FieldError::Degenerate(format!(
                    "striction curve is stationary at u = {u}"
                )));
            }
            let along = dot2(sdot_top, [e[0].f, e[1].f]);
            let sigma = s[2].du / along - e[2].f;
            let kappa = det2(sdot_top, [s[0].duu, s[1].duu]) / speed.powi(3);
            if kappa.abs() < 1e-10 {
                return Err(FieldError::Degenerate(format!(
                    "striction top view is straight at u = {u}; pitch undefined"
                )));
            }
            Ok(StrictionData {
                point: Some(point),
                ruling_parameter: Some(tstar.value),
                sigma: Some(sigma),
                rho: sigma / kappa,
            })
        }
    }
}

/// Gaussian curvature on the ruling at distance from the striction point:
/// `K = -rho^2 / w^4` for types I and II (with `w = |t - t*|`), and the
/// constant `K = -rho^2` for type III.
pub fn ruled_k(spec: &RuledSurfaceSpec, u: f64, t: f64) -> FieldResult<f64> {
    let sd = striction(spec, u)?;
    match spec.class {
        RuledClass::ParallelRulings => Ok(-sd.rho * sd.rho),
        _ => {
            let w = (t - sd.ruling_parameter.expect("set for types I/II")).abs();
            if w < 1e-9 {
                return Err(FieldError::Degenerate(format!(
                    "curvature is singular on the striction point (u = {u}, t = {t})"
                )));
            }
            Ok(-sd.rho * sd.rho / w.powi(4))
        }
    }
}

/// Minding family member `F + s R` of a ruled graph `F`, generated by a
/// torsal ruled addend `R` with the same rulings. Graphs are expected in
/// ruling-adapted position: the rulings are the parameter lines `v = const`,
/// i.e. both heights are affine in `u` (checked on the grid), and `R` must
/// be developable (`K(R) = 0`).
pub fn minding_family(
    f: &HeightField,
    r_torsal: &HeightField,
    s: f64,
    grid: &Grid2,
    tol: f64,
) -> FieldResult<HeightField> {
    let mut max_ruled = 0.0_f64;
    let mut max_k = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let jf = f.jet_at(u, v)?;
        let jr = r_torsal.jet_at(u, v)?;
        max_ruled = max_ruled.max(jf.duu.abs()).max(jr.duu.abs());
        max_k = max_k.max((jr.duu * jr.dvv - jr.duv * jr.duv).abs());
    }
    if max_ruled > tol {
        return Err(FieldError::Degenerate(format!(
            "surfaces are not ruled along the v = const lines (max |f_uu| = {max_ruled:e})"
        )));
    }
    if max_k > tol {
        return Err(FieldError::Degenerate(format!(
            "addend is not torsal: max |K| = {max_k:e}"
        )));
    }
    Ok(HeightField(ScalarField::lin_comb(1.0, &f.0, s, &r_torsal.0)))
}
