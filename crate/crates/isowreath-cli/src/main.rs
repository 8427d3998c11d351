//! Command-line front end for the isowreath geometry kernel: curvature
//! sweeps, metric dualities, Minkowski sums, isometric families, Darboux
//! wreaths, the paratactic map, discrete net operations, and the one-shot
//! verification suite.
//!
//! Exit codes: 0 on success, 1 on validation failure (bad expressions,
//! degenerate geometry, non-finite output, I/O errors), 2 on usage errors
//! (bad flags, missing scene files).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use isowreath::curvature::{curvature_graph, curvature_param};
use isowreath::discrete::{
    conic_tangent_top_view, dihedral_constancy, is_qnet, koenigs_check, koenigs_dualize,
    voss_construct, voss_flex, QuadNet,
};
use isowreath::duality::{dualize_graph, DualityMap};
use isowreath::fields::{to_csv, FieldError};
use isowreath::isometry::{
    assoc_family, bour_family, is_isometric, minding_family, parabolic_family,
    parabolic_surface, rotational_k, Profile,
};
use isowreath::minkowski::{sum_curvature_check, sum_point};
use isowreath::verify::acceptance_suite;
use isowreath::wreath::{build_wreath, paratactic_inverse, wreath_report, FlexPair, PlanarMap};
use isowreath::{Grid2, HeightField, ParamSurface, ScalarField};

// ---------------------------------------------------------------------------
// Command-line grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "isowreath",
    version,
    about = "Numerical kernel for isotropic surface geometry",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Sample grid as `u0,v0,hu,hv,nu,nv` (defaults to 33x33 on [-1,1]^2)
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    grid: Option<String>,
    /// Residual tolerance for validity checks
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (created if missing)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep Gaussian and mean curvature of a graph over a grid (CSV output)
    Curvature {
        /// Height expression in u, v
        #[arg(long)]
        f: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the metric dual of a graph as an OBJ mesh
    Dual {
        /// Height expression in u, v
        #[arg(long)]
        f: String,
        /// Which duality to apply
        #[arg(long, default_value = "delta", value_parser = ["delta", "nu"])]
        map: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minkowski sum f + t*g of two graphs with the quadratic curvature law
    Minkowski {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Sum weight
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build an isometric family described by a JSON scene file
    Family {
        /// Scene file (JSON); see the README for the per-kind schema
        scene: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the six-surface wreath of a flex pair (six OBJs + report)
    Wreath {
        /// Base height expression in u, v
        #[arg(long)]
        f: String,
        /// Velocity height expression in u, v
        #[arg(long)]
        n: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Paratactic images of a graph and the inverse reconstruction
    Paratactic {
        /// Height expression in u, v
        #[arg(long)]
        f: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Discrete net operations on JSON scene files
    Discrete {
        #[command(subcommand)]
        op: DiscreteOp,
    },
    /// Run the full invariant suite and print a pass/fail table
    Verify {
        /// Seed for the randomized checks
        #[arg(long, default_value_t = 0x1505_97ea_c011_ab1e)]
        seed: u64,
        /// Optional path for the JSON report
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DiscreteOp {
    /// Construct a V-net from Cauchy data and export it
    Voss {
        scene: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Flex a V-net by the one-parameter isometric deformation
    Flex {
        scene: PathBuf,
        /// Flexing parameter (t = 1 is the identity)
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Koenigs-dualize a Q-net and verify the duality relation
    Koenigs {
        scene: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check face planarity of a net (exit 1 when a face is non-planar)
    Check {
        scene: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

// ---------------------------------------------------------------------------
// Error plumbing
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad invocation: malformed flags, missing scene files. Exit 2.
    Usage(String),
    /// Well-formed request that fails on its data. Exit 1.
    Validation(String),
}

type CliResult<T> = Result<T, CliError>;

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("I/O error: {e}"))
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match dispatch(cli) {
            Ok(()) => 0,
            Err(CliError::Usage(msg)) => {
                eprintln!("usage error: {msg}");
                2
            }
            Err(CliError::Validation(msg)) => {
                eprintln!("error: {msg}");
                1
            }
        },
        Err(e) => {
            // clap renders --help/--version through the same error path.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    };
    std::process::exit(code);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn parse_grid(common: &CommonArgs) -> CliResult<Grid2> {
    match &common.grid {
        None => Ok(Grid2::square(-1.0, 1.0, 33).expect("static grid")),
        Some(spec) => {
            let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
            if parts.len() != 6 {
                return Err(CliError::Usage(format!(
                    "--grid expects `u0,v0,hu,hv,nu,nv`, got `{spec}`"
                )));
            }
            let num = |s: &str| -> CliResult<f64> {
                s.parse()
                    .map_err(|_| CliError::Usage(format!("bad number `{s}` in --grid")))
            };
            let int = |s: &str| -> CliResult<usize> {
                s.parse()
                    .map_err(|_| CliError::Usage(format!("bad count `{s}` in --grid")))
            };
            // Built directly rather than via Grid2::new: the library
            // constructor insists on enough samples for finite-difference
            // stencils, but CLI inputs are analytic expressions, so grids
            // down to 2x2 are valid for evaluation and export.
            let grid = Grid2 {
                u0: num(parts[0])?,
                v0: num(parts[1])?,
                hu: num(parts[2])?,
                hv: num(parts[3])?,
                nu: int(parts[4])?,
                nv: int(parts[5])?,
            };
            if !(grid.u0.is_finite() && grid.v0.is_finite())
                || !(grid.hu > 0.0 && grid.hv > 0.0)
                || grid.nu < 2
                || grid.nv < 2
            {
                return Err(CliError::Usage(format!(
                    "--grid needs finite origin, positive spacings, and at least 2x2 samples (got `{spec}`)"
                )));
            }
            Ok(grid)
        }
    }
}

fn height(src: &str) -> CliResult<HeightField> {
    HeightField::parse(src).map_err(|e| CliError::Validation(format!("in `{src}`: {e}")))
}

fn out_dir(common: &CommonArgs) -> CliResult<&Path> {
    std::fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// OBJ floats carry 17 significant digits so output is deterministic and
/// round-trips exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a quad grid as an OBJ (each quad split into two triangles) plus a
/// sidecar JSON listing the quads by 0-based vertex index.
fn export_obj(path: &Path, verts: &[[f64; 3]], nu: usize, nv: usize) -> CliResult<()> {
    assert_eq!(verts.len(), nu * nv);
    for v in verts {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(CliError::Validation(format!(
                "non-finite vertex {v:?} in {}",
                path.display()
            )));
        }
    }
    let mut obj = String::new();
    for v in verts {
        obj.push_str(&format!("v {} {} {}\n", fmt17(v[0]), fmt17(v[1]), fmt17(v[2])));
    }
    let mut quads: Vec<[usize; 4]> = Vec::new();
    for j in 0..nv.saturating_sub(1) {
        for i in 0..nu.saturating_sub(1) {
            let a = j * nu + i;
            let b = j * nu + i + 1;
            let c = (j + 1) * nu + i + 1;
            let d = (j + 1) * nu + i;
            obj.push_str(&format!("f {} {} {}\n", a + 1, b + 1, c + 1));
            obj.push_str(&format!("f {} {} {}\n", a + 1, c + 1, d + 1));
            quads.push([a, b, c, d]);
        }
    }
    write_text(path, &obj)?;
    write_json(&path.with_extension("quads.json"), &quads)
}

fn surface_verts(s: &ParamSurface, grid: &Grid2) -> CliResult<Vec<[f64; 3]>> {
    let mut verts = vec![[0.0; 3]; grid.len()];
    for j in 0..grid.nv {
        for i in 0..grid.nu {
            verts[grid.idx(i, j)] = s.point(grid.u(i), grid.v(j))?;
        }
    }
    Ok(verts)
}

fn export_surface(path: &Path, s: &ParamSurface, grid: &Grid2) -> CliResult<()> {
    export_obj(path, &surface_verts(s, grid)?, grid.nu, grid.nv)
}

fn export_graph(path: &Path, f: &HeightField, grid: &Grid2) -> CliResult<()> {
    export_surface(path, &ParamSurface::from_height(f), grid)
}

fn export_net(dir: &Path, stem: &str, net: &QuadNet) -> CliResult<()> {
    write_json(&dir.join(format!("{stem}.json")), net)?;
    export_obj(&dir.join(format!("{stem}.obj")), net.vertices(), net.nu(), net.nv())
}

fn sample_field(f: &ScalarField, grid: &Grid2) -> CliResult<Vec<f64>> {
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.nv {
        for i in 0..grid.nu {
            values[grid.idx(i, j)] = f.value(grid.u(i), grid.v(j))?;
        }
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Scene files
// ---------------------------------------------------------------------------

fn load_scene_text(path: &Path) -> CliResult<String> {
    if !path.exists() {
        return Err(CliError::Usage(format!("scene file {} does not exist", path.display())));
    }
    Ok(std::fs::read_to_string(path)?)
}

fn parse_scene<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = load_scene_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad scene file {}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum FamilyScene {
    /// Associated family x cos t + y sin t of a conjugate harmonic pair.
    Assoc {
        x: String,
        y: String,
        t: Vec<f64>,
        grid: Option<Grid2>,
        tol: Option<f64>,
    },
    /// Isometric pair f + h, f - h from an infinitesimal flex.
    Split {
        f: String,
        h: String,
        grid: Option<Grid2>,
        tol: Option<f64>,
    },
    /// Helical surfaces isometric to a rotational surface (Bour).
    Bour {
        /// Profile derivative f'(v) of the rotational surface
        fprime: String,
        /// Second derivative f''(v)
        fsecond: String,
        hbar: f64,
        c: f64,
        /// Constant sign of the new profile derivative (+1 or -1)
        eps: Option<f64>,
        v_range: [f64; 2],
        u_range: Option<[f64; 2]>,
        smooth_tol: Option<f64>,
    },
    /// Parabolic rotational surfaces a u^2 + b u v + f(v) isometric to
    /// abar u^2 + bbar u v + fbar(v).
    Parabolic {
        f: String,
        a: f64,
        b: f64,
        abar: f64,
        bbar: f64,
        c1: Option<f64>,
        c2: Option<f64>,
        grid: Option<Grid2>,
        tol: Option<f64>,
    },
    /// Minding family F + s R of a ruled graph (rulings v = const).
    Minding {
        f: String,
        r: String,
        s: Vec<f64>,
        grid: Option<Grid2>,
        tol: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscreteScene {
    /// Pre-built net: dimensions + flat vertex list.
    net: Option<QuadNet>,
    /// Conic-tangent top view: vertex (i,j) is the intersection of the unit
    /// circle tangents at angles_u[i] and angles_v[j].
    angles_u: Option<Vec<f64>>,
    angles_v: Option<Vec<f64>>,
    /// Explicit top view, row-major (j * nu + i).
    topview: Option<Vec<[f64; 2]>>,
    nu: Option<usize>,
    nv: Option<usize>,
    /// Heights along row j = 0 and column i = 0 (Cauchy data).
    z_row0: Option<Vec<f64>>,
    z_col0: Option<Vec<f64>>,
    /// Seed vertex for Koenigs dualization.
    seed: Option<[f64; 3]>,
    tol: Option<f64>,
}

impl DiscreteScene {
    fn tol(&self, flag: Option<f64>, default: f64) -> f64 {
        flag.or(self.tol).unwrap_or(default)
    }

    /// A net from the scene: either given directly or built by the V-net
    /// construction from its Cauchy data.
    fn net(&self, tol: f64) -> CliResult<QuadNet> {
        if let Some(net) = &self.net {
            return Ok(net.clone());
        }
        let (topview, nu, nv) = match (&self.angles_u, &self.angles_v, &self.topview) {
            (Some(au), Some(av), None) => {
                (conic_tangent_top_view(au, av)?, au.len(), av.len())
            }
            (None, None, Some(tv)) => {
                let (nu, nv) = match (self.nu, self.nv) {
                    (Some(nu), Some(nv)) => (nu, nv),
                    _ => {
                        return Err(CliError::Validation(
                            "explicit `topview` requires `nu` and `nv`".into(),
                        ))
                    }
                };
                (tv.clone(), nu, nv)
            }
            _ => {
                return Err(CliError::Validation(
                    "scene must provide `net`, `angles_u`/`angles_v`, or `topview`".into(),
                ))
            }
        };
        let (z_row0, z_col0) = match (&self.z_row0, &self.z_col0) {
            (Some(r), Some(c)) => (r, c),
            _ => {
                return Err(CliError::Validation(
                    "V-net construction requires `z_row0` and `z_col0`".into(),
                ))
            }
        };
        Ok(voss_construct(&topview, nu, nv, z_row0, z_col0, tol)?)
    }
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Curvature { f, common } => cmd_curvature(&f, &common),
        Command::Dual { f, map, common } => cmd_dual(&f, &map, &common),
        Command::Minkowski { f, g, t, common } => cmd_minkowski(&f, &g, t, &common),
        Command::Family { scene, common } => cmd_family(&scene, &common),
        Command::Wreath { f, n, common } => cmd_wreath(&f, &n, &common),
        Command::Paratactic { f, common } => cmd_paratactic(&f, &common),
        Command::Discrete { op } => match op {
            DiscreteOp::Voss { scene, common } => cmd_voss(&scene, &common),
            DiscreteOp::Flex { scene, t, common } => cmd_flex(&scene, t, &common),
            DiscreteOp::Koenigs { scene, common } => cmd_koenigs(&scene, &common),
            DiscreteOp::Check { scene, common } => cmd_check(&scene, &common),
        },
        Command::Verify { seed, out } => cmd_verify(seed, out.as_deref()),
    }
}

fn cmd_curvature(f: &str, common: &CommonArgs) -> CliResult<()> {
    let f = height(f)?;
    let grid = parse_grid(common)?;
    let dir = out_dir(common)?;
    let mut k = vec![0.0; grid.len()];
    let mut h = vec![0.0; grid.len()];
    for j in 0..grid.nv {
        for i in 0..grid.nu {
            let s = curvature_graph(&f, grid.u(i), grid.v(j))?;
            k[grid.idx(i, j)] = s.k;
            h[grid.idx(i, j)] = s.h;
        }
    }
    write_text(&dir.join("k.csv"), &to_csv(&grid, &k))?;
    write_text(&dir.join("h.csv"), &to_csv(&grid, &h))?;
    let span = |vals: &[f64]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (k_min, k_max) = span(&k);
    let (h_min, h_max) = span(&h);
    write_json(
        &dir.join("curvature_report.json"),
        &json!({
            "nodes": grid.len(),
            "k_min": k_min, "k_max": k_max,
            "h_min": h_min, "h_max": h_max,
        }),
    )
}

fn cmd_dual(f: &str, map: &str, common: &CommonArgs) -> CliResult<()> {
    let f = height(f)?;
    let grid = parse_grid(common)?;
    let dir = out_dir(common)?;
    let which = if map == "nu" { DualityMap::Nu } else { DualityMap::Delta };
    let dual = dualize_graph(&f, which)?;
    let surf = dual.point_surface();
    export_surface(&dir.join("dual.obj"), &surf, &grid)?;
    let mut worst = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        worst = worst.max(dual.integrability_residual(grid.u(i), grid.v(j))?);
    }
    write_json(
        &dir.join("dual_report.json"),
        &json!({ "map": map, "max_integrability_residual": worst }),
    )
}

fn cmd_minkowski(f: &str, g: &str, t: f64, common: &CommonArgs) -> CliResult<()> {
    let f = height(f)?;
    let g = height(g)?;
    let grid = parse_grid(common)?;
    let dir = out_dir(common)?;
    let ft = sum_point(&f, &g, t);
    export_graph(&dir.join("sum.obj"), &ft, &grid)?;
    let report = sum_curvature_check(&f, &g, t, &grid)?;
    write_json(&dir.join("minkowski_report.json"), &report)
}

fn cmd_wreath(f: &str, n: &str, common: &CommonArgs) -> CliResult<()> {
    let pair = FlexPair::parse(f, n).map_err(CliError::from)?;
    let grid = parse_grid(common)?;
    let tol = common.tol.unwrap_or(1e-9);
    let dir = out_dir(common)?;
    let wreath = build_wreath(&pair, &grid, tol)?;
    for (name, field) in wreath.named_fields() {
        export_surface(&dir.join(format!("{name}.obj")), &field.point_surface(), &grid)?;
    }
    let report = wreath_report(&wreath)?;
    write_json(
        &dir.join("wreath_report.json"),
        &json!({
            "closure_residual": wreath.closure_residual,
            "relations": report,
            "max_residual": report.max_residual(),
        }),
    )
}

fn cmd_paratactic(f: &str, common: &CommonArgs) -> CliResult<()> {
    let f = height(f)?;
    let grid = parse_grid(common)?;
    let tol = common.tol.unwrap_or(1e-8);
    let dir = out_dir(common)?;
    let fu = f.0.deriv_u()?;
    let fv = f.0.deriv_v()?;
    let u = ScalarField::coord_u();
    let v = ScalarField::coord_v();
    // Left/right images: (u + f_v, v - f_u) and (u - f_v, v + f_u).
    let el = PlanarMap::new(
        ScalarField::lin_comb(1.0, &u, 1.0, &fv),
        ScalarField::lin_comb(1.0, &v, -1.0, &fu),
    );
    let er = PlanarMap::new(
        ScalarField::lin_comb(1.0, &u, -1.0, &fv),
        ScalarField::lin_comb(1.0, &v, 1.0, &fu),
    );
    for (name, field) in [
        ("left_x", &el.x),
        ("left_y", &el.y),
        ("right_x", &er.x),
        ("right_y", &er.y),
    ] {
        let values = sample_field(field, &grid)?;
        write_text(&dir.join(format!("{name}.csv")), &to_csv(&grid, &values))?;
    }
    let z0 = f.0.value(grid.u0, grid.v0)?;
    let preimage = paratactic_inverse(&el, &er, &grid, z0, tol)?;
    export_surface(&dir.join("preimage.obj"), &preimage.field.point_surface(), &grid)?;
    // Recovery residual against the original graph (z up to the anchored
    // constant, so compared directly).
    let mut worst = 0.0_f64;
    for (i, j) in grid.interior_nodes(0) {
        let (u, v) = (grid.u(i), grid.v(j));
        let e = preimage.field.element_at(u, v)?;
        let jf = f.jet_at(u, v)?;
        worst = worst
            .max((e.x - u).abs())
            .max((e.y - v).abs())
            .max((e.z - jf.value).abs())
            .max((e.p - jf.du).abs())
            .max((e.q - jf.dv).abs());
    }
    write_json(
        &dir.join("paratactic_report.json"),
        &json!({
            "closure_residual": preimage.closure_residual,
            "max_recovery_residual": worst,
        }),
    )
}

fn cmd_family(scene: &Path, common: &CommonArgs) -> CliResult<()> {
    let scene: FamilyScene = parse_scene(scene)?;
    let dir = out_dir(common)?;
    let grid_flag = common.grid.is_some().then(|| parse_grid(common)).transpose()?;
    let default_grid = Grid2::square(-1.0, 1.0, 33).expect("static grid");
    let pick = |g: Option<Grid2>| grid_flag.or(g).unwrap_or(default_grid);
    match scene {
        FamilyScene::Assoc { x, y, t, grid, tol } => {
            let grid = pick(grid);
            let tol = common.tol.or(tol).unwrap_or(1e-8);
            let x = height(&x)?;
            let y = height(&y)?;
            let base = assoc_family(&x, &y, 0.0, &grid, tol)?;
            export_graph(&dir.join("base.obj"), &base, &grid)?;
            let mut residuals = BTreeMap::new();
            for (idx, &ti) in t.iter().enumerate() {
                let member = assoc_family(&x, &y, ti, &grid, tol)?;
                export_graph(&dir.join(format!("member_{idx}.obj")), &member, &grid)?;
                let rep = is_isometric(&member, &base, &grid, tol)?;
                residuals.insert(format!("{ti}"), rep.max_residual);
            }
            let max = residuals.values().cloned().fold(0.0_f64, f64::max);
            write_json(
                &dir.join("family_report.json"),
                &json!({ "kind": "assoc", "k_residual_by_t": residuals,
                         "max_k_residual": max, "isometric": max <= tol }),
            )
        }
        FamilyScene::Split { f, h, grid, tol } => {
            let grid = pick(grid);
            let tol = common.tol.or(tol).unwrap_or(1e-10);
            let f = height(&f)?;
            let h = height(&h)?;
            let plus = HeightField(ScalarField::lin_comb(1.0, &f.0, 1.0, &h.0));
            let minus = HeightField(ScalarField::lin_comb(1.0, &f.0, -1.0, &h.0));
            export_graph(&dir.join("plus.obj"), &plus, &grid)?;
            export_graph(&dir.join("minus.obj"), &minus, &grid)?;
            let rep = is_isometric(&plus, &minus, &grid, tol)?;
            write_json(
                &dir.join("family_report.json"),
                &json!({ "kind": "split", "max_k_residual": rep.max_residual,
                         "isometric": rep.isometric }),
            )
        }
        FamilyScene::Bour {
            fprime,
            fsecond,
            hbar,
            c,
            eps,
            v_range,
            u_range,
            smooth_tol,
        } => {
            let fp = Profile::parse(&fprime).map_err(CliError::from)?;
            let fpp = Profile::parse(&fsecond).map_err(CliError::from)?;
            let sign = eps.unwrap_or(1.0);
            let fam = bour_family(
                &fp,
                hbar,
                c,
                move |_| sign,
                (v_range[0], v_range[1]),
                smooth_tol.unwrap_or(1e-6),
            )?;
            let helical = fam.helical_surface();
            let [u_lo, u_hi] = u_range.unwrap_or([0.0, std::f64::consts::TAU]);
            let n = 33;
            let grid = Grid2::new(
                u_lo,
                v_range[0],
                (u_hi - u_lo) / (n - 1) as f64,
                (v_range[1] - v_range[0]) / (n - 1) as f64,
                n,
                n,
            )?;
            export_surface(&dir.join("helical.obj"), &helical, &grid)?;
            // Compare the helical member's curvature against the rotational
            // base surface (h = 0) at matching profile parameters.
            let mut max_gap = 0.0_f64;
            for (i, j) in grid.interior_nodes(0) {
                let (u, v) = (grid.u(i), grid.v(j));
                let (k_helical, _) = curvature_param(&helical, u, v)?;
                let k_rot = rotational_k(&fp, &fpp, 0.0, v)?;
                max_gap = max_gap.max((k_helical - k_rot).abs());
            }
            write_json(
                &dir.join("family_report.json"),
                &json!({ "kind": "bour", "max_k_residual": max_gap,
                         "accuracy_degraded": fam.accuracy_degraded() }),
            )
        }
        FamilyScene::Parabolic { f, a, b, abar, bbar, c1, c2, grid, tol } => {
            let grid = pick(grid);
            let tol = common.tol.or(tol).unwrap_or(1e-9);
            let profile = Profile::parse(&f).map_err(CliError::from)?;
            let fam = parabolic_family(
                &profile,
                a,
                b,
                abar,
                bbar,
                c1.unwrap_or(0.0),
                c2.unwrap_or(0.0),
            )?;
            let base = parabolic_surface(a, b, &profile)?;
            let member = parabolic_surface(abar, bbar, &fam.profile)?;
            export_graph(&dir.join("base.obj"), &base, &grid)?;
            export_graph(&dir.join("member.obj"), &member, &grid)?;
            let rep = is_isometric(&base, &member, &grid, tol)?;
            write_json(
                &dir.join("family_report.json"),
                &json!({ "kind": "parabolic", "max_k_residual": rep.max_residual,
                         "isometric": rep.isometric, "constant_k": fam.constant_k }),
            )
        }
        FamilyScene::Minding { f, r, s, grid, tol } => {
            let grid = pick(grid);
            let tol = common.tol.or(tol).unwrap_or(1e-8);
            let f = height(&f)?;
            let r = height(&r)?;
            export_graph(&dir.join("base.obj"), &f, &grid)?;
            let mut residuals = BTreeMap::new();
            for (idx, &si) in s.iter().enumerate() {
                let member = minding_family(&f, &r, si, &grid, tol)?;
                export_graph(&dir.join(format!("member_{idx}.obj")), &member, &grid)?;
                let rep = is_isometric(&member, &f, &grid, tol)?;
                residuals.insert(format!("{si}"), rep.max_residual);
            }
            let max = residuals.values().cloned().fold(0.0_f64, f64::max);
            write_json(
                &dir.join("family_report.json"),
                &json!({ "kind": "minding", "k_residual_by_s": residuals,
                         "max_k_residual": max, "isometric": max <= tol }),
            )
        }
    }
}

fn cmd_voss(scene: &Path, common: &CommonArgs) -> CliResult<()> {
    let scene: DiscreteScene = parse_scene(scene)?;
    let dir = out_dir(common)?;
    let tol = scene.tol(common.tol, 1e-9);
    let net = scene.net(tol)?;
    export_net(dir, "net", &net)?;
    write_json(&dir.join("qnet_report.json"), &is_qnet(&net, tol))
}

fn cmd_flex(scene: &Path, t: f64, common: &CommonArgs) -> CliResult<()> {
    let scene: DiscreteScene = parse_scene(scene)?;
    let dir = out_dir(common)?;
    let tol = scene.tol(common.tol, 1e-9);
    if !(t > 0.0) {
        return Err(CliError::Usage(format!("--t must be positive, got {t}")));
    }
    let net = scene.net(tol)?;
    let flexed = voss_flex(&net, t)?;
    export_net(dir, "flexed", &flexed)?;
    // The flex is isometric: top views are preserved, so report the largest
    // top-view deviation from the identity flex alongside the face checks.
    let reference = voss_flex(&net, 1.0)?;
    let mut top_dev = 0.0_f64;
    for (a, b) in flexed.vertices().iter().zip(reference.vertices()) {
        top_dev = top_dev.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
    }
    write_json(
        &dir.join("flex_report.json"),
        &json!({
            "t": t,
            "qnet": is_qnet(&flexed, tol),
            "dihedral": dihedral_constancy(&flexed)?,
            "top_view_deviation": top_dev,
        }),
    )
}

fn cmd_koenigs(scene: &Path, common: &CommonArgs) -> CliResult<()> {
    let scene: DiscreteScene = parse_scene(scene)?;
    let dir = out_dir(common)?;
    let tol = scene.tol(common.tol, 1e-8);
    let net = scene.net(tol)?;
    let seed = scene.seed.unwrap_or([0.0, 0.0, 0.0]);
    let dual = koenigs_dualize(&net, seed, tol)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    export_net(dir, "dual", &dual)?;
    write_json(&dir.join("koenigs_report.json"), &koenigs_check(&net, &dual, tol)?)
}

fn cmd_check(scene: &Path, common: &CommonArgs) -> CliResult<()> {
    let scene: DiscreteScene = parse_scene(scene)?;
    let dir = out_dir(common)?;
    let tol = scene.tol(common.tol, 1e-9);
    let net = scene.net(tol)?;
    let report = is_qnet(&net, tol);
    write_json(&dir.join("qnet_report.json"), &report)?;
    if !report.planar {
        return Err(CliError::Validation(format!(
            "face {:?} is non-planar: residual {:.3e} exceeds {tol:.3e}",
            report.worst_face, report.max_residual
        )));
    }
    Ok(())
}

fn cmd_verify(seed: u64, out: Option<&Path>) -> CliResult<()> {
    let report = acceptance_suite(seed);
    print!("{}", report.table());
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Validation("verification failures (see table above)".into()))
    }
}
