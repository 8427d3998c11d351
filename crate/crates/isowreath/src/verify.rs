//! One-shot verification suite: thirteen end-to-end checks that exercise
//! every module of the crate against exact reference values and invariant
//! properties. The suite is deterministic for a fixed seed; it backs the
//! `isowreath verify` subcommand and the acceptance integration test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curvature::{curvature_graph, curvature_param, mixed_curvature};
use crate::discrete::{
    conic_tangent_top_view, dihedral_constancy, discrete_minding_shear, is_qnet, koenigs_check,
    koenigs_dualize, minding_report, mixed_area, net_dual_nu, quad_area, voss_construct,
    voss_flex, Line3, QuadNet,
};
use crate::duality::{
    curvature_from_support, delta_ce, dualize_graph, m_rot_refl, nu_ce, ContactElement,
    ContactField, DualityMap,
};
use crate::fields::{
    tol_sampled, FieldError, FieldResult, Grid2, HeightField, ParamSurface, ScalarField,
    SupportField,
};
use crate::geom::{det2, dot3, norm2, scale3, sub2, sub3, V2, V3};
use crate::isometry::{assoc_family, bour_family, minding_family, rotational_k, Profile};
use crate::wreath::{build_wreath, paratactic_inverse, wreath_report, FlexPair, PlanarMap};

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// Outcome of one verification check: the worst residual measured across its
/// sub-checks, the tolerance that residual was held to, and a short note
/// naming the dominating sub-check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// The full suite outcome.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    /// Fixed-width pass/fail table, one line per check.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<46} residual {:<12} tol {:<9} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                format!("{:.3e}", c.residual),
                format!("{:.1e}", c.tolerance),
                c.detail,
            ));
        }
        out.push_str(if self.passed { "all checks passed\n" } else { "FAILURES present\n" });
        out
    }
}

/// Accumulates the sub-checks of one criterion; the reported residual and
/// tolerance come from the sub-check with the largest residual/tolerance
/// ratio.
struct Probe {
    items: Vec<(String, f64, f64)>,
    notes: Vec<String>,
}

impl Probe {
    fn new() -> Self {
        Probe { items: Vec::new(), notes: Vec::new() }
    }

    fn push(&mut self, label: &str, residual: f64, tol: f64) {
        self.items.push((label.to_string(), residual, tol));
    }

    /// A hard boolean requirement, recorded as residual 0 (ok) or infinity.
    fn require(&mut self, label: &str, ok: bool) {
        self.items.push((label.to_string(), if ok { 0.0 } else { f64::INFINITY }, 1.0));
    }

    fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    fn finish(self, name: &str) -> CheckResult {
        let ratio = |res: f64, tol: f64| -> f64 {
            if !res.is_finite() {
                f64::INFINITY
            } else if tol > 0.0 {
                res / tol
            } else if res == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let worst = self
            .items
            .iter()
            .max_by(|a, b| ratio(a.1, a.2).total_cmp(&ratio(b.1, b.2)))
            .cloned()
            .unwrap_or(("no sub-checks".to_string(), f64::INFINITY, 0.0));
        let passed = self
            .items
            .iter()
            .all(|(_, res, tol)| res.is_finite() && ratio(*res, *tol) <= 1.0)
            && !self.items.is_empty();
        let mut detail = format!("worst: {}", worst.0);
        for n in &self.notes {
            detail.push_str("; ");
            detail.push_str(n);
        }
        CheckResult { name: name.to_string(), passed, residual: worst.1, tolerance: worst.2, detail }
    }
}

fn run(name: &str, body: impl FnOnce(&mut Probe) -> FieldResult<()>) -> CheckResult {
    let mut probe = Probe::new();
    match body(&mut probe) {
        Ok(()) => probe.finish(name),
        Err(e) => CheckResult {
            name: name.to_string(),
            passed: false,
            residual: f64::NAN,
            tolerance: 0.0,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs all thirteen checks. Random draws are seeded per check from `seed`,
/// so the whole report is reproducible.
pub fn acceptance_suite(seed: u64) -> VerifyReport {
    let checks = vec![
        paraboloid_curvatures(),
        duality_algebra(seed),
        curvature_transformation(seed),
        support_function_curvature(),
        isometric_split(),
        associated_family(),
        bour_isometry(),
        darboux_wreath(),
        paratactic_correspondence(),
        discrete_voss_flexing(),
        koenigs_duality(seed),
        minding_invariance(seed),
        expression_derivatives(seed),
    ];
    VerifyReport { passed: checks.iter().all(|c| c.passed), checks }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn ce_gap(a: ContactElement, b: ContactElement) -> f64 {
    (a.x - b.x)
        .abs()
        .max((a.y - b.y).abs())
        .max((a.z - b.z).abs())
        .max((a.p - b.p).abs())
        .max((a.q - b.q).abs())
}

// ---------------------------------------------------------------------------
// Random expression generation
// ---------------------------------------------------------------------------

/// Random expression over `u`, `v` built from bounded smooth primitives
/// (sin/cos/tanh, +, -, *), so values and low-order derivatives stay
/// moderate. `depth` bounds the nesting.
pub fn random_expression(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => "u".to_string(),
            1 => "v".to_string(),
            _ => format!("{:.4}", rng.gen_range(-2.0..2.0)),
        };
    }
    if rng.gen_bool(0.45) {
        let func = ["sin", "cos", "tanh"][rng.gen_range(0..3)];
        format!("{func}({})", random_expression(rng, depth - 1))
    } else {
        let op = ["+", "-", "*"][rng.gen_range(0..3)];
        format!(
            "({}) {op} ({})",
            random_expression(rng, depth - 1),
            random_expression(rng, depth - 1)
        )
    }
}

// ---------------------------------------------------------------------------
// Check 1: paraboloid curvatures
// ---------------------------------------------------------------------------

fn paraboloid_curvatures() -> CheckResult {
    run("paraboloid curvatures (analytic + sampled)", |p| {
        let f = HeightField::parse("(2*u^2 + 3*v^2)/2")?;
        let mut worst = 0.0_f64;
        for &(u, v) in &[(0.0, 0.0), (0.3, -0.7), (1.0, 1.0), (-0.8, 0.45)] {
            let s = curvature_graph(&f, u, v)?;
            worst = worst
                .max((s.k - 6.0).abs())
                .max((s.h - 2.5).abs())
                .max((s.kappa1 - 2.0).abs())
                .max((s.kappa2 - 3.0).abs());
        }
        p.push("analytic K = 6, H = 5/2, kappa = (2, 3)", worst, 1e-12);

        let grid = Grid2::new(-1.0, -1.0, 0.05, 0.05, 41, 41)?;
        let fs = HeightField(f.0.sample_on(grid)?);
        let mut worst = 0.0_f64;
        for (i, j) in grid.interior_nodes(1) {
            let s = curvature_graph(&fs, grid.u(i), grid.v(j))?;
            worst = worst
                .max((s.k - 6.0).abs())
                .max((s.h - 2.5).abs())
                .max((s.kappa1 - 2.0).abs())
                .max((s.kappa2 - 3.0).abs());
        }
        p.push("sampled grid h = 0.05 (quadratics FD-exact)", worst, 1e-9);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 2: duality algebra
// ---------------------------------------------------------------------------

fn duality_algebra(seed: u64) -> CheckResult {
    run("duality algebra (involutions, sphere, nu = delta∘M)", |p| {
        let mut rng = rng_for(seed, 2);
        let mut inv = 0.0_f64;
        let mut comp = 0.0_f64;
        for _ in 0..100_000 {
            let e = ContactElement::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            inv = inv
                .max(ce_gap(delta_ce(delta_ce(e)), e))
                .max(ce_gap(nu_ce(nu_ce(e)), e));
            comp = comp.max(ce_gap(nu_ce(e), delta_ce(m_rot_refl(e))));
        }
        p.push("delta^2 = id and nu^2 = id (1e5 random quintuples)", inv, 1e-12);
        p.push("nu = delta ∘ (quarter-turn ∘ z-reflection)", comp, 1e-12);

        // the isotropic unit sphere z = (u^2+v^2)/2 is fixed by delta,
        // element by element and bit for bit
        let mut sphere = 0.0_f64;
        for _ in 0..1000 {
            let (u, v): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let s = u * u + v * v;
            let e = ContactElement::new(u, v, 0.5 * s, u, v);
            sphere = sphere.max(ce_gap(delta_ce(e), e));
        }
        p.push("unit-sphere self-duality (exact)", sphere, 0.0);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 3: curvature transformation under delta
// ---------------------------------------------------------------------------

fn curvature_transformation(seed: u64) -> CheckResult {
    run("dual curvature rule K* K = 1, H* = H/K", |p| {
        let mut rng = rng_for(seed, 3);
        let mut worst = 0.0_f64;
        let mut used = 0_usize;
        for _ in 0..50 {
            let a = rng.gen_range(1.5..2.5);
            let c = rng.gen_range(1.5..2.5);
            let b = rng.gen_range(-0.3..0.3);
            let g = random_expression(&mut rng, 2);
            let src = format!("({a}*u^2 + {b}*u*v + {c}*v^2)/2 + 0.05*({g})");
            let f = HeightField::parse(&src)?;
            let dual = dualize_graph(&f, DualityMap::Delta)?;
            let surf = dual.point_surface();
            let mut pts = 0_usize;
            let mut tries = 0_usize;
            while pts < 100 && tries < 1000 {
                tries += 1;
                let (u, v): (f64, f64) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                let s = curvature_graph(&f, u, v)?;
                if s.k.abs() < 0.5 {
                    continue;
                }
                let (kd, hd) = curvature_param(&surf, u, v)?;
                let href = s.h / s.k;
                worst = worst
                    .max((kd * s.k - 1.0).abs())
                    .max((hd - href).abs() / href.abs().max(1.0));
                pts += 1;
                used += 1;
            }
        }
        p.push("50 random surfaces, 100 points each", worst, 1e-8);
        p.require("enough well-conditioned sample points", used >= 4500);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 4: curvature from the support function
// ---------------------------------------------------------------------------

fn support_function_curvature() -> CheckResult {
    run("support-function curvature (with factor-1/2 fix)", |p| {
        // paraboloid z = (2 u^2 + 3 v^2)/2 has support h = u^2/4 + v^2/6
        let h = SupportField::parse("u^2/4 + v^2/6")?;
        let mut worst = 0.0_f64;
        let mut printed = 0.0_f64;
        for &(u, v) in &[(0.0, 0.0), (0.4, -0.2), (1.0, 0.7)] {
            let (k, hm) = curvature_from_support(&h, u, v)?;
            worst = worst.max((k - 6.0).abs()).max((hm - 2.5).abs());
            // the uncorrected textbook expression returns twice the mean
            // curvature; assert the documented discrepancy
            let j = h.jet_at(u, v)?;
            let uncorrected = (j.duu + j.dvv) / (j.duu * j.dvv - j.duv * j.duv);
            printed = printed.max((uncorrected - 2.0 * hm).abs());
        }
        p.push("K = 6, H = 5/2 from the support function", worst, 1e-12);
        p.push("uncorrected formula returns exactly 2H", printed, 1e-12);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 5: isometric split pair
// ---------------------------------------------------------------------------

fn isometric_split() -> CheckResult {
    run("isometric pair f ± h shares Gaussian curvature", |p| {
        let f = ScalarField::parse("(u^2 - v^2 + cos(1+u)*cosh(1+v) + cosh(v)*sin(u))/10")?;
        let h = ScalarField::parse("(u^2 + v^2)/6")?;
        let plus = HeightField(ScalarField::lin_comb(1.0, &f, 1.0, &h));
        let minus = HeightField(ScalarField::lin_comb(1.0, &f, -1.0, &h));
        let grid = Grid2::square(-1.0, 1.0, 41)?;
        let mut worst = 0.0_f64;
        for (i, j) in grid.interior_nodes(0) {
            let (u, v) = (grid.u(i), grid.v(j));
            let kp = curvature_graph(&plus, u, v)?.k;
            let km = curvature_graph(&minus, u, v)?.k;
            worst = worst.max((kp - km).abs());
        }
        p.push("max |K(f+h) - K(f-h)| on [-1,1]^2", worst, 1e-10);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 6: associated family of a harmonic graph
// ---------------------------------------------------------------------------

fn associated_family() -> CheckResult {
    run("associated family preserves Gaussian curvature", |p| {
        let x = HeightField::parse("sin(u)*cosh(v)/2 + 10")?;
        let y = HeightField::parse("cos(u)*sinh(v)/2")?;
        let grid = Grid2::square(-1.0, 1.0, 33)?;
        let f0 = assoc_family(&x, &y, 0.0, &grid, 1e-9)?;
        let mut worst = 0.0_f64;
        for &t in &[0.3, 1.1, 2.7] {
            let ft = assoc_family(&x, &y, t, &grid, 1e-9)?;
            for (i, j) in grid.interior_nodes(0) {
                let (u, v) = (grid.u(i), grid.v(j));
                let kt = curvature_graph(&ft, u, v)?.k;
                let k0 = curvature_graph(&f0, u, v)?.k;
                worst = worst.max((kt - k0).abs());
            }
        }
        p.push("max |K(f^t) - K(f^0)| for t in {0.3, 1.1, 2.7}", worst, 1e-8);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 7: Bour-type rotational/helical isometry
// ---------------------------------------------------------------------------

fn bour_isometry() -> CheckResult {
    run("helical surface isometric to rotational surface", |p| {
        let fp = Profile::parse("-cos(v)")?;
        let fpp = Profile::parse("sin(v)")?;
        let c = 0.045124;
        // the radicand is negative below v ~ 2.03, so the comparison runs on
        // the admissible part of the v window
        let fam = bour_family(&fp, 1.0, c, |_| -1.0, (2.2, 3.0), 1e-9)?;
        let g = fam.helical_surface();
        let mut worst = 0.0_f64;
        for iu in 0..8 {
            let u = iu as f64 * std::f64::consts::TAU / 8.0;
            for iv in 0..9 {
                let v = 2.25 + 0.0875 * iv as f64;
                let (k, _) = curvature_param(&g, u, v)?;
                let expect = rotational_k(&fp, &fpp, 0.0, v)?;
                worst = worst.max((k - expect).abs());
            }
        }
        p.push("max |K_helical - K_rotational|", worst, 1e-6);

        // quadrature consistency: integrating in one piece agrees with
        // splitting the interval at v = 2.6
        let fam2 = bour_family(&fp, 1.0, c, |_| -1.0, (2.6, 3.0), 1e-9)?;
        let closure = (fam.fbar(3.0)? - fam.fbar(2.6)? - fam2.fbar(3.0)?).abs();
        p.push("quadrature closure (split vs whole interval)", closure, 1e-8);
        p.require("quadrature accuracy not degraded", !fam.accuracy_degraded());
        p.note("admissible v in [2.2, 3.0]");
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 8: the six-surface wreath of a flex pair
// ---------------------------------------------------------------------------

fn darboux_wreath() -> CheckResult {
    run("six-surface wreath of ((u^2+v^2)/2, uv)", |p| {
        let pair = FlexPair::parse("(u^2+v^2)/2", "u*v")?;
        let grid = Grid2::square(-1.0, 1.0, 17)?;
        let w = build_wreath(&pair, &grid, 1e-9)?;

        // the rotation-diagram height is (u^2 - v^2)/2, which vanishes at
        // the grid origin (-1, -1) exactly as the anchoring demands
        let mut worst = 0.0_f64;
        for (i, j) in grid.interior_nodes(0) {
            let (u, v) = (grid.u(i), grid.v(j));
            worst = worst.max((w.c_height.value(u, v)? - 0.5 * (u * u - v * v)).abs());
        }
        p.push("potential c = (u^2 - v^2)/2", worst, 1e-12);

        let rep = wreath_report(&w)?;
        p.push("analytic relation residuals", rep.max_residual(), 1e-9);
        p.push("path-closure residual", w.closure_residual, 1e-9);

        // d/dt K(C + t C_bar) at t = 0 equals n_uv * K(F, V)
        let t = 1e-4;
        let shift = |s: &ContactField, d: &ContactField, t: f64| {
            ParamSurface::new(
                ScalarField::lin_comb(1.0, &s.x, t, &d.x),
                ScalarField::lin_comb(1.0, &s.y, t, &d.y),
                ScalarField::lin_comb(1.0, &s.z, t, &d.z),
            )
        };
        let plus = shift(&w.c, &w.c_bar, t);
        let minus = shift(&w.c, &w.c_bar, -t);
        let mut fd = 0.0_f64;
        for &(u, v) in &[(0.25, -0.5), (0.5, 0.5), (-0.75, 0.25)] {
            let (kp, _) = curvature_param(&plus, u, v)?;
            let (km, _) = curvature_param(&minus, u, v)?;
            let lhs = (kp - km) / (2.0 * t);
            let nuv = pair.n.jet_at(u, v)?.duv;
            let rhs = nuv * mixed_curvature(&pair.f, &pair.n, u, v)?;
            fd = fd.max((lhs - rhs).abs());
        }
        p.push("d/dt K(C + t C_bar) = n_uv K(F, V)", fd, 1e-6);

        // sampled variant: both heights tabulated on h = 0.05, the wreath
        // evaluated on the subgrid with two cells of stencil clearance
        let h = 0.05;
        let big = Grid2::new(-1.0, -1.0, h, h, 41, 41)?;
        let pair_s = FlexPair::new(
            HeightField(pair.f.0.sample_on(big)?),
            HeightField(pair.n.0.sample_on(big)?),
        );
        let sub = Grid2::new(big.u(2), big.v(2), h, h, 37, 37)?;
        let ws = build_wreath(&pair_s, &sub, tol_sampled(h))?;
        let rep_s = wreath_report(&ws)?;
        p.push("sampled relation residuals (h = 0.05)", rep_s.max_residual(), 10.0 * h * h);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 9: paratactic forward/inverse round trip
// ---------------------------------------------------------------------------

fn paratactic_correspondence() -> CheckResult {
    run("paratactic inverse recovers the contact field", |p| {
        let f = ScalarField::parse("(u^3 + v^3)/6 + (u^2 + v^2)/2 + u*v")?;
        let fu = f.deriv_u()?;
        let fv = f.deriv_v()?;
        // left/right images of the graph's contact elements:
        // E_l = (x + q, y - p), E_r = (x - q, y + p)
        let el = PlanarMap::new(
            ScalarField::lin_comb(1.0, &ScalarField::coord_u(), 1.0, &fv),
            ScalarField::lin_comb(1.0, &ScalarField::coord_v(), -1.0, &fu),
        );
        let er = PlanarMap::new(
            ScalarField::lin_comb(1.0, &ScalarField::coord_u(), -1.0, &fv),
            ScalarField::lin_comb(1.0, &ScalarField::coord_v(), 1.0, &fu),
        );
        let grid = Grid2::unit();
        let z0 = f.value(grid.u0, grid.v0)?;
        let pre = paratactic_inverse(&el, &er, &grid, z0, 1e-9)?;
        p.push("path-closure residual (129x129)", pre.closure_residual, 1e-8);

        let mut xy = 0.0_f64;
        let mut zdev = 0.0_f64;
        let mut offset: Option<f64> = None;
        for (i, j) in grid.interior_nodes(0) {
            if i % 8 != 0 || j % 8 != 0 {
                continue;
            }
            let (u, v) = (grid.u(i), grid.v(j));
            let e = pre.field.element_at(u, v)?;
            let jf = f.jet2(u, v)?;
            xy = xy
                .max((e.x - u).abs())
                .max((e.y - v).abs())
                .max((e.p - jf.du).abs())
                .max((e.q - jf.dv).abs());
            let off = e.z - jf.value;
            let anchor = *offset.get_or_insert(off);
            zdev = zdev.max((off - anchor).abs());
        }
        p.push("(x, y, p, q) recovered", xy, 1e-12);
        p.push("z recovered up to one constant", zdev, 1e-10);

        let bad_l = PlanarMap::parse("2*u", "v")?;
        let bad_r = PlanarMap::parse("u", "v")?;
        p.require(
            "non-area-preserving pair rejected",
            paratactic_inverse(&bad_l, &bad_r, &grid, 0.0, 1e-9).is_err(),
        );
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 10: finite flexing of a discrete Voss net
// ---------------------------------------------------------------------------

fn discrete_voss_flexing() -> CheckResult {
    run("discrete Voss net flexing invariants", |p| {
        let n = 21;
        let angles_u: Vec<f64> = (0..n).map(|i| 0.15 + 0.06 * i as f64).collect();
        let angles_v: Vec<f64> = (0..n).map(|j| 2.2 + 0.04 * j as f64).collect();
        let top = conic_tangent_top_view(&angles_u, &angles_v)?;
        let z_row0: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).sin() * 0.5).collect();
        let z_col0: Vec<f64> = (0..n).map(|j| 0.02 * (j * j) as f64).collect();
        let f = voss_construct(&top, n, n, &z_row0, &z_col0, 1e-9)?;

        let f1 = voss_flex(&f, 1.0)?;
        let d1 = net_dual_nu(&f1)?;
        let ref_areas: Vec<f64> = {
            let (fu, fv) = d1.face_dims();
            (0..fv)
                .flat_map(|j| (0..fu).map(move |i| (i, j)))
                .map(|(i, j)| quad_area(&d1.face_top(i, j)))
                .collect()
        };

        let mut planarity = 0.0_f64;
        let mut tops = 0.0_f64;
        let mut parallelogram = 0.0_f64;
        let mut areas = 0.0_f64;
        let mut dihedral = 0.0_f64;
        for &t in &[0.5, 1.0, 2.0] {
            let ft = voss_flex(&f, t)?;
            planarity = planarity.max(is_qnet(&ft, 1e-10).max_residual);
            for (a, b) in ft.vertices().iter().zip(f1.vertices()) {
                tops = tops.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
            }
            let dt = net_dual_nu(&ft)?;
            let (fu, fv) = dt.face_dims();
            for j in 0..fv {
                for i in 0..fu {
                    let q = dt.face_top(i, j);
                    let e0 = sub2(q[1], q[0]);
                    let e1 = sub2(q[2], q[1]);
                    let e2 = sub2(q[3], q[2]);
                    let e3 = sub2(q[0], q[3]);
                    let size = norm2(e0).max(norm2(e1)).max(1e-300);
                    parallelogram = parallelogram
                        .max(norm2([e0[0] + e2[0], e0[1] + e2[1]]) / size)
                        .max(norm2([e1[0] + e3[0], e1[1] + e3[1]]) / size);
                    areas = areas.max((quad_area(&q) - ref_areas[j * fu + i]).abs());
                }
            }
            let dr = dihedral_constancy(&ft)?;
            dihedral = dihedral.max(dr.max_spread_rows).max(dr.max_spread_cols);
        }
        p.push("face planarity across t in {0.5, 1, 2}", planarity, 1e-10);
        p.push("top views identical across the family", tops, 1e-10);
        p.push("dual faces are parallelograms", parallelogram, 1e-10);
        p.push("dual face areas t-invariant", areas, 1e-12);
        p.push("dihedral-angle spread per polyline", dihedral, 1e-9);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 11: Koenigs duality
// ---------------------------------------------------------------------------

fn koenigs_duality(seed: u64) -> CheckResult {
    run("Koenigs dualization and mixed-area equivalence", |p| {
        // a curved translational net: dualize twice and fit a homothety back
        let a: Vec<V3> = (0..7)
            .map(|k| {
                let t = k as f64;
                [0.3 * t, 0.05 * t * t, 0.1 * (1.3 * t).sin()]
            })
            .collect();
        let b: Vec<V3> = (0..6)
            .map(|k| {
                let t = k as f64;
                [0.04 * t * t, 0.25 * t, 0.08 * (0.9 * t).cos()]
            })
            .collect();
        let net = QuadNet::translational(&a, &b)?;
        let to_field = |e: crate::discrete::KoenigsError| FieldError::Degenerate(e.to_string());
        let dual = koenigs_dualize(&net, [0.0, 0.0, 0.0], 1e-8).map_err(to_field)?;
        let back = koenigs_dualize(&dual, [0.0, 0.0, 0.0], 1e-8).map_err(to_field)?;
        let e_orig = sub3(net.vertex(1, 0), net.vertex(0, 0));
        let e_back = sub3(back.vertex(1, 0), back.vertex(0, 0));
        let s = dot3(e_back, e_orig) / dot3(e_orig, e_orig);
        let shift = sub3(back.vertex(0, 0), scale3(net.vertex(0, 0), s));
        let mut round_trip = 0.0_f64;
        for (q, r) in back.vertices().iter().zip(net.vertices()) {
            for k in 0..3 {
                round_trip = round_trip.max((q[k] - (s * r[k] + shift[k])).abs());
            }
        }
        p.push("dual of dual homothetic to the original", round_trip, 1e-10);
        p.require(
            "dual passes the Koenigs relation test",
            koenigs_check(&net, &dual, 1e-8)?.related,
        );

        // equivalence on random parallel planar quad pairs: vanishing mixed
        // area if and only if the non-corresponding diagonals are parallel
        let mut rng = rng_for(seed, 11);
        let mut mismatches = 0_usize;
        let mut count = 0_usize;
        while count < 10_000 {
            let quad: [V2; 4] = [
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            ];
            let edges: [V2; 4] = [
                sub2(quad[1], quad[0]),
                sub2(quad[2], quad[1]),
                sub2(quad[3], quad[2]),
                sub2(quad[0], quad[3]),
            ];
            let area = quad_area(&quad);
            let adj = det2(edges[1], edges[2]);
            if area.abs() < 0.1 || adj.abs() < 0.05 {
                continue;
            }
            // the 2-parameter family of closed quads with parallel edges:
            // factors alpha * (1,1,1,1) + beta * d with sum d_k e_k = 0
            let det = det2(edges[1], edges[2]);
            let rhs = [-edges[0][0], -edges[0][1]];
            let d1 = det2(rhs, edges[2]) / det;
            let d2 = det2(edges[1], rhs) / det;
            let d = [1.0, d1, d2, 0.0];
            let qd = quad_from_factors(quad[0], &edges, &d);
            let md = mixed_area(&quad, &qd);

            let positive = rng.gen_bool(0.5);
            let beta = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let alpha = if positive {
                -beta * md / area
            } else {
                rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            };
            let factors = [
                alpha + beta * d[0],
                alpha + beta * d[1],
                alpha + beta * d[2],
                alpha + beta * d[3],
            ];
            if factors.iter().any(|t| t.abs() < 0.05) {
                continue;
            }
            let scale = factors.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
            if !positive && (alpha * area + beta * md).abs() < 0.02 * scale {
                continue; // too close to the Koenigs locus to classify safely
            }
            let other = quad_from_factors([0.2, -0.1], &edges, &factors);

            let m_norm = mixed_area(&quad, &other).abs() / (area.abs() * scale);
            let sin_diag = |x: V2, y: V2| det2(x, y).abs() / (norm2(x) * norm2(y)).max(1e-300);
            let diag = sin_diag(sub2(quad[2], quad[0]), sub2(other[3], other[1]))
                .max(sin_diag(sub2(quad[3], quad[1]), sub2(other[2], other[0])));
            if (m_norm < 1e-9) != (diag < 1e-9) {
                mismatches += 1;
            }
            count += 1;
        }
        p.require("mixed-area/diagonal equivalence on 10^4 quad pairs", mismatches == 0);
        Ok(())
    })
}

fn quad_from_factors(start: V2, edges: &[V2; 4], factors: &[f64; 4]) -> [V2; 4] {
    let mut out = [start; 4];
    for k in 1..4 {
        out[k] = [
            out[k - 1][0] + factors[k - 1] * edges[k - 1][0],
            out[k - 1][1] + factors[k - 1] * edges[k - 1][1],
        ];
    }
    out
}

// ---------------------------------------------------------------------------
// Check 12: Minding-type invariance, discrete and smooth
// ---------------------------------------------------------------------------

fn minding_invariance(seed: u64) -> CheckResult {
    run("Minding invariants under shears", |p| {
        let rulings: Vec<Line3> = (0..12)
            .map(|i| {
                let th = 0.25 * i as f64;
                Line3 {
                    point: [th.cos(), th.sin(), 0.3 * th],
                    dir: [-th.sin(), th.cos(), 0.1 + 0.02 * th],
                }
            })
            .collect();
        let base = minding_report(&rulings)?;
        let mut rng = rng_for(seed, 12);
        let mut primary = 0.0_f64;
        let mut derived = 0.0_f64;
        for _ in 0..100 {
            let shears: Vec<f64> =
                (0..rulings.len() - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sheared = discrete_minding_shear(&rulings, &shears)?;
            let rep = minding_report(&sheared)?;
            for k in 0..base.rho.len() {
                primary = primary
                    .max((rep.rho[k] - base.rho[k]).abs())
                    .max((rep.phi[k] - base.phi[k]).abs())
                    .max((rep.d[k] - base.d[k]).abs());
            }
            for k in 0..base.w.len() {
                derived = derived
                    .max((rep.w[k] - base.w[k]).abs())
                    .max((rep.k[k] - base.k[k]).abs());
            }
        }
        p.push("rho, phi, d under 100 random shears", primary, 1e-12);
        p.push("striction distances w and curvatures K", derived, 1e-9);

        // smooth family in ruling-adapted position: adding a torsal ruled
        // graph leaves the Gaussian curvature untouched
        let f = HeightField::parse("u*sin(v) + cos(v)")?;
        let r = HeightField::parse("u/2 + v^3/6 - cos(v)")?;
        let grid = Grid2::square(-1.0, 1.0, 17)?;
        let mut worst = 0.0_f64;
        for &s in &[-1.0, 0.5, 2.0] {
            let fs = minding_family(&f, &r, s, &grid, 1e-9)?;
            for (i, j) in grid.interior_nodes(0) {
                let (u, v) = (grid.u(i), grid.v(j));
                let ks = curvature_graph(&fs, u, v)?.k;
                let k0 = curvature_graph(&f, u, v)?.k;
                worst = worst.max((ks - k0).abs());
            }
        }
        p.push("smooth family: max |K(F+sR) - K(F)|", worst, 1e-8);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Check 13: expression jets vs central differences
// ---------------------------------------------------------------------------

fn expression_derivatives(seed: u64) -> CheckResult {
    run("expression jets vs central differences", |p| {
        let mut rng = rng_for(seed, 13);
        let mut worst = 0.0_f64;
        let h = 1e-5;
        for _ in 0..1000 {
            let src = random_expression(&mut rng, 4);
            let f = ScalarField::parse(&src)?;
            let (u, v): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let j = f.jet2(u, v)?;
            let du_fd = (f.value(u + h, v)? - f.value(u - h, v)?) / (2.0 * h);
            let dv_fd = (f.value(u, v + h)? - f.value(u, v - h)?) / (2.0 * h);
            worst = worst
                .max((du_fd - j.du).abs() / j.du.abs().max(1.0))
                .max((dv_fd - j.dv).abs() / j.dv.abs().max(1.0));
        }
        p.push("first partials, 1000 random expressions", worst, 1e-5);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_ratio_logic() {
        let mut p = Probe::new();
        p.push("tight", 1e-13, 1e-12);
        p.push("loose", 0.5, 1.0);
        let r = p.finish("demo");
        assert!(r.passed);
        assert_eq!(r.residual, 0.5); // 0.5/1.0 beats 1e-13/1e-12

        let mut p = Probe::new();
        p.push("bad", 2.0, 1.0);
        assert!(!p.finish("demo").passed);

        let mut p = Probe::new();
        p.require("flag", false);
        assert!(!p.finish("demo").passed);
    }

    #[test]
    fn random_expressions_parse() {
        let mut rng = rng_for(7, 99);
        for _ in 0..200 {
            let src = random_expression(&mut rng, 4);
            ScalarField::parse(&src).unwrap_or_else(|e| panic!("`{src}`: {e}"));
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let rep = VerifyReport {
            passed: true,
            checks: vec![CheckResult {
                name: "demo".into(),
                passed: true,
                residual: 1e-10,
                tolerance: 1e-9,
                detail: "worst: demo".into(),
            }],
        };
        let text = serde_json::to_string(&rep).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["checks"][0]["name"], "demo");
        assert_eq!(back["passed"], true);
    }
}
