//! `wlab`: energies, sweeps and checks for parametrized surfaces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use wlab_core::expr::parse_expression;
use wlab_core::harness::{
    self, blow_down_by_id, conformal_factor_compare, energy_report, export_mesh, sweep, weierstrass_report, Construction,
    GlueStage, GridSpec, Projection, SurfaceId,
};
use wlab_core::mobius::{parse_mobius, transform_surface};
use wlab_core::quad::QuadConfig;
use wlab_core::weierstrass::{Involution, WeierstrassData};
use wlab_core::GeomError;

#[derive(Parser, Debug)]
#[command(name = "wlab", version, about = "Willmore energy and curvature integrals of parametrized surfaces")]
struct Cli {
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Maximum dyadic refinement depth of a quadrature cell.
    #[arg(long, global = true, default_value_t = 24)]
    max_depth: u32,
    /// Maximum number of dyadic rings over the plane.
    #[arg(long, global = true, default_value_t = 40)]
    rings: usize,
    /// Size of the evaluation thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// W, ∫|A|², ∫|A⁰|² and ∫K of a surface with consistency checks.
    Energy(SurfaceArgs),
    /// Energies of a glue construction over a list of scales ρ.
    Sweep(SweepArgs),
    /// Gauss-Bonnet and Gauss-equation residuals of a surface with declared topology.
    GaussBonnet(SurfaceArgs),
    /// Minimal surface from Weierstrass data (g, η).
    Weierstrass(WeierstrassArgs),
    /// Deviation of the blow-downs ρ^k f(z/ρ) from the model end.
    Blowdown(BlowdownArgs),
    /// sup |u_a − u_b| of the conformal factors of two surfaces over an annulus.
    Confcompare(ConfArgs),
    /// OBJ mesh of a polar parameter grid.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    /// Surface id, e.g. chen, power:3, inverted-enneper, chen-glue:2:0.1, meeks-boy:0.1:0.01.
    #[arg(long)]
    surface: String,
    /// Möbius map applied to the surface, e.g. "translate:0,0,5|invert:0,0,0;r=1".
    #[arg(long)]
    mobius: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// chen-glue, enneper-glue, henneper-glue or meeks-boy.
    #[arg(long)]
    construction: String,
    /// Family order (chen-glue, henneper-glue).
    #[arg(long)]
    m: Option<u32>,
    /// Comma separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', required = true)]
    rhos: Vec<f64>,
    /// model, flip, bar or closed.
    #[arg(long, default_value = "closed")]
    stage: String,
}

#[derive(Args, Debug)]
struct WeierstrassArgs {
    /// Gauss map g(z).
    #[arg(long)]
    g: String,
    /// η(z) in η = η(z) dz.
    #[arg(long)]
    eta: String,
    /// Comma separated complex constants, e.g. 0 or 0,1+2i.
    #[arg(long, value_delimiter = ',')]
    punctures: Vec<String>,
    /// Start of the integration paths.
    #[arg(long, default_value = "1")]
    basepoint: String,
    #[arg(long, value_enum)]
    involution: Option<InvolutionArg>,
    /// Report file (same as --out).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InvolutionArg {
    Identity,
    MinusInvConj,
}

#[derive(Args, Debug)]
struct BlowdownArgs {
    /// Open surface with a known end model, e.g. meeks, chen, enneper.
    #[arg(long)]
    surface: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.05, 0.025])]
    rhos: Vec<f64>,
}

#[derive(Args, Debug)]
struct ConfArgs {
    /// First surface id.
    #[arg(long)]
    a: String,
    /// Second surface id.
    #[arg(long)]
    b: String,
    /// Annulus radii r_in,r_out.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5])]
    region: Vec<f64>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Surface id.
    #[arg(long)]
    surface: String,
    /// Vertex counts NRxNTHETA.
    #[arg(long, default_value = "32x64")]
    grid: String,
    /// Radii r_in,r_out.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 1.0])]
    radius: Vec<f64>,
    /// Patches to export.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0usize])]
    patch: Vec<usize>,
    /// For surfaces in R⁴: drop:K or stereographic.
    #[arg(long, default_value = "stereographic")]
    project: String,
}

fn invalid(msg: impl Into<String>) -> GeomError {
    GeomError::InvalidInput(msg.into())
}

fn exit_code(e: &GeomError) -> u8 {
    match e {
        GeomError::ToleranceNotMet { .. } | GeomError::NoDecayDetected { .. } => 2,
        GeomError::InvalidInput(_) | GeomError::ParseError { .. } => 3,
        GeomError::CenterOnSurface { .. }
        | GeomError::NoInversionCenter
        | GeomError::TransitionTooCoarse { .. }
        | GeomError::PeriodObstruction { .. }
        | GeomError::PathThroughPole(_)
        | GeomError::NotConformalOnRegion(_) => 4,
        _ => 1,
    }
}

fn pair(v: &[f64], flag: &str) -> Result<(f64, f64), GeomError> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(invalid(format!("--{flag} takes two comma separated radii"))),
    }
}

fn complex_constant(src: &str) -> Result<Complex64, GeomError> {
    let e = parse_expression(src)?;
    let v = e.eval(Complex64::new(0.0, 0.0))?;
    if e.eval(Complex64::new(1.0, 1.0))? != v {
        return Err(invalid(format!("'{src}' is not a constant")));
    }
    Ok(v)
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn emit(&self, body: &str) -> Result<(), GeomError> {
        match &self.path {
            Some(p) => std::fs::write(p, body)?,
            None => print!("{body}"),
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<(), GeomError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| invalid(e.to_string()))?;
        s.push('\n');
        self.emit(&s)
    }

    fn report(&self, r: &harness::EnergyReport) -> Result<bool, GeomError> {
        match self.format {
            Format::Json => self.json(r)?,
            Format::Csv => self.emit(&r.to_csv())?,
        }
        if self.path.is_some() {
            let f = &r.functionals;
            println!(
                "{}: W = {:.10} pi, a2 = {:.10} pi, a0 = {:.10} pi, totK = {:.10} pi",
                r.surface,
                harness::in_pi(f.willmore.value),
                harness::in_pi(f.a2.value),
                harness::in_pi(f.a0.value),
                harness::in_pi(f.total_curvature.value)
            );
        }
        for c in r.checks.iter().filter(|c| !c.pass) {
            eprintln!("check {} failed: residual {:e} > budget {:e}", c.name, c.residual, c.budget);
        }
        if r.meta.flagged {
            eprintln!("quadrature flagged cells above tolerance");
        }
        Ok(r.passed())
    }
}

fn surface(args: &SurfaceArgs, tol: f64) -> Result<wlab_core::surfaces::ParametrizedSurface, GeomError> {
    let id: SurfaceId = args.surface.parse()?;
    let s = id.build(tol.min(1e-10))?;
    match &args.mobius {
        Some(src) => {
            let m = parse_mobius(src, s.ambient_dim)?;
            let mut t = transform_surface(&m, &s)?;
            t.id = s.id.clone();
            Ok(t)
        }
        None => Ok(s),
    }
}

/// Ok(false) means the run completed but a check failed.
fn run(cli: Cli) -> Result<bool, GeomError> {
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        return Err(invalid(format!("--tol must lie in (0, 1), got {}", cli.tol)));
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(e.to_string()))?;
    }
    let cfg = QuadConfig { max_depth: cli.max_depth, max_rings: cli.rings, ..QuadConfig::with_tol(cli.tol) };
    let path_tol = cli.tol.min(1e-10);
    let out = Output { path: cli.out.clone(), format: cli.format };
    match cli.command {
        Command::Energy(a) => out.report(&energy_report(&surface(&a, cli.tol)?, &cfg)?),
        Command::GaussBonnet(a) => {
            let s = surface(&a, cli.tol)?;
            if s.topology.is_none() {
                return Err(invalid(format!("surface {} has no declared topology", s.id)));
            }
            let mut r = energy_report(&s, &cfg)?;
            r.checks.retain(|c| c.name == "gauss_bonnet" || c.name == "gauss_equation");
            out.report(&r)
        }
        Command::Sweep(a) => {
            let stage: GlueStage = a.stage.parse()?;
            let c = Construction::parse(&a.construction, a.m, stage)?;
            let t = sweep(&c, &a.rhos, &cfg)?;
            match out.format {
                Format::Json => out.json(&t)?,
                Format::Csv => out.emit(&t.to_csv())?,
            }
            let lim = |name: &str, e: &wlab_core::quad::Extrapolation| {
                let rate = e.rate.map_or("indeterminate".to_string(), |r| format!("{r:.3}"));
                eprintln!("{name} -> {:.8} pi (rate {rate}, confidence {:.3})", harness::in_pi(e.limit), e.confidence);
            };
            lim("W", &t.willmore_limit);
            lim("a2", &t.a2_limit);
            let monotone = t.willmore_non_increasing(3.0);
            if !monotone {
                eprintln!("W increases along the sweep beyond 3x the per-step error");
            }
            Ok(monotone)
        }
        Command::Weierstrass(a) => {
            let punctures = a.punctures.iter().map(|p| complex_constant(p)).collect::<Result<Vec<_>, _>>()?;
            let mut d = WeierstrassData::parse(&a.g, &a.eta, punctures, complex_constant(&a.basepoint)?)?;
            d.involution = a.involution.map(|i| match i {
                InvolutionArg::Identity => Involution::Identity,
                InvolutionArg::MinusInvConj => Involution::MinusInvConj,
            });
            let r = weierstrass_report(d, path_tol, &cfg)?;
            let out = Output { path: a.report.or(out.path), format: out.format };
            out.report(&r)
        }
        Command::Blowdown(a) => {
            let id: SurfaceId = a.surface.parse()?;
            let t = blow_down_by_id(&id, &a.rhos, path_tol)?;
            match out.format {
                Format::Json => out.json(&t)?,
                Format::Csv => {
                    let mut s = String::from("rho,deviation\n");
                    for r in &t.rows {
                        s.push_str(&format!("{:.16e},{:.16e}\n", r.rho, r.deviation));
                    }
                    out.emit(&s)?
                }
            }
            Ok(t.strictly_decreasing())
        }
        Command::Confcompare(a) => {
            let sa = SurfaceId::build(&a.a.parse()?, path_tol)?;
            let sb = SurfaceId::build(&a.b.parse()?, path_tol)?;
            let (r_in, r_out) = pair(&a.region, "region")?;
            let c = conformal_factor_compare(&sa, &sb, r_in, r_out)?;
            match out.format {
                Format::Json => out.json(&c)?,
                Format::Csv => out.emit(&format!(
                    "sup,at_x,at_y,max_defect\n{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    c.sup, c.at[0], c.at[1], c.max_defect
                ))?,
            }
            Ok(true)
        }
        Command::Export(a) => {
            let path = out.path.ok_or_else(|| invalid("export needs --out FILE.obj"))?;
            let s = SurfaceId::build(&a.surface.parse()?, path_tol)?;
            let (nr, nt) = a
                .grid
                .split_once('x')
                .and_then(|(r, t)| Some((r.parse().ok()?, t.parse().ok()?)))
                .ok_or_else(|| invalid(format!("grid must look like 32x64, got '{}'", a.grid)))?;
            let projection = match a.project.as_str() {
                "stereographic" => Projection::Stereographic,
                p => match p.strip_prefix("drop:").and_then(|k| k.parse().ok()) {
                    Some(k) => Projection::DropCoordinate(k),
                    None => return Err(invalid(format!("projection must be drop:K or stereographic, got '{p}'"))),
                },
            };
            let (r_in, r_out) = pair(&a.radius, "radius")?;
            let grid = GridSpec { patches: a.patch, ..GridSpec::new(nr, nt, r_in, r_out) };
            let m = export_mesh(&s, &grid, projection, &path)?;
            println!("{}: {} vertices, {} faces -> {}", s.id, m.vertices.len(), m.triangles.len(), path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
