mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use folia::conjugacy::{conjugate, BoundaryMap, Conjugacy, ConjugacyParams};
use folia::curves::{frechet, frechet_refined, mu_length, mu_parameterize_with, resample_by_mu, Polyline};
use folia::levelsets::{level_family, LevelFamily};
use folia::rectify::{rectify_model, DiscreteHomeomorphism, ModelChoice, RectifyParams};
use folia::regularity::{classify_with, decompose_boundary, default_boundary_samples, BoundaryDecomposition, ClassifyParams, Failure as VerdictFailure, RegularityVerdict, Status};
use folia::report::{read_json, to_json_string};
use folia::{load_field, Error, ScalarField};
use serde::Serialize;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "folia", version, about = "Regularity, level curves and rectifying homeomorphisms of sampled fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Args, Default)]
struct TolArgs {
    #[arg(long, global = true)]
    tol_level: Option<f64>,
    #[arg(long, global = true)]
    tol_mono: Option<f64>,
    #[arg(long, global = true)]
    tol_iso: Option<f64>,
    #[arg(long, global = true)]
    tol_rect: Option<f64>,
    #[arg(long, global = true)]
    tol_conj: Option<f64>,
    #[arg(long, global = true)]
    eps_cap: Option<f64>,
    #[arg(long, global = true)]
    g_min: Option<f64>,
    #[arg(long, global = true)]
    boundary_samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a field; exit 0 iff weakly regular.
    Classify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract an ordered family of level curves.
    Levels {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, short = 'n')]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// mu-length of a curve given as a JSON list of [x, y] points.
    Mu {
        #[arg(long)]
        curve: PathBuf,
        /// Series truncation; defaults to 1e-4 times the diameter.
        #[arg(long)]
        eps: Option<f64>,
        /// Also resample the curve at this many equal mu-steps.
        #[arg(long)]
        resample: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete Frechet distance between two curves.
    Frechet {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Refine both curves to this spacing first.
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the rectifying homeomorphism of a field.
    Rectify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "auto")]
        model: ModelChoice,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Extend a boundary map phi0 with g o phi0 = f to a conjugacy.
    Conjugate {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        /// JSON list of [s_source, s_target] pairs.
        #[arg(long)]
        phi0: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a levels file or a homeomorphism file as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Manifest(_)
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Grid(_)
            | Error::NonFiniteSample { .. }
            | Error::DisconnectedMask
            | Error::MaskWithHoles
            | Error::MaskOutsideShape { .. }
            | Error::InvalidArgument(_) => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn analysis(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Outcome {
    let text = to_json_string(value)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn decompose(field: &ScalarField, cfg: &RunConfig) -> Result<BoundaryDecomposition, Error> {
    let m = cfg.boundary_samples.unwrap_or_else(|| default_boundary_samples(field));
    decompose_boundary(field, m, cfg.tol_level.unwrap_or_else(|| field.default_tol_level()), cfg.tol_mono.unwrap_or(0.0))
}

fn rectify_params(cfg: &RunConfig) -> RectifyParams {
    let d = RectifyParams::default();
    RectifyParams {
        levels: cfg.levels.unwrap_or(d.levels),
        samples: cfg.samples.unwrap_or(d.samples),
        eps_cap: cfg.eps_cap,
        boundary_samples: cfg.boundary_samples,
        tol_level: cfg.tol_level,
        g_min: cfg.g_min,
    }
}

fn cmd_classify(field: &Path, cfg: &RunConfig) -> Outcome {
    let field = load_field(field)?;
    let params = ClassifyParams {
        g_min: cfg.g_min.unwrap_or_else(|| field.default_g_min()),
        tol_level: cfg.tol_level.unwrap_or_else(|| field.default_tol_level()),
    };
    let verdict = match decompose(&field, cfg) {
        Ok(dec) => classify_with(&field, &dec, params),
        Err(Error::NotDecomposable(why)) => {
            let verdict = RegularityVerdict {
                status: Status::NotRegular,
                n_f: 0,
                arcs: Vec::new(),
                failures: vec![VerdictFailure { condition: "decomposition".into(), at: None, detail: why.clone() }],
                failure_counts: vec![("decomposition".into(), 1)],
                extremum_points: Vec::new(),
            };
            emit(&verdict, cfg.out.as_deref())?;
            return Err(analysis(format!("not_regular: {why}")));
        }
        Err(e) => return Err(e.into()),
    };
    emit(&verdict, cfg.out.as_deref())?;
    if verdict.status == Status::WeaklyRegular {
        Ok(())
    } else {
        Err(analysis(format!("{} (n_f = {})", verdict.status, verdict.n_f)))
    }
}

fn cmd_levels(field: &Path, cfg: &RunConfig) -> Outcome {
    let field = load_field(field)?;
    let dec = decompose(&field, cfg)?;
    let family = level_family(&field, &dec, cfg.count.unwrap_or(11))?;
    let tol_iso = cfg.tol_iso.unwrap_or_else(|| field.default_tol_iso());
    let worst = family
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (field.eval_unchecked(*p) - c.c).abs()))
        .fold(0.0, f64::max);
    emit(&family, cfg.out.as_deref())?;
    if let Some(svg) = &cfg.svg {
        write_text(svg, &folia::svg::render_levels(&family))?;
    }
    if worst > tol_iso {
        return Err(analysis(format!("curves deviate from their level by {worst:.3e} > tol_iso {tol_iso:.3e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct MuReport {
    length: f64,
    diameter: f64,
    eps: f64,
    mu_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    resampled: Option<Polyline>,
}

fn cmd_mu(curve: &Path, eps: Option<f64>, resample: Option<usize>, cfg: &RunConfig) -> Outcome {
    let curve: Polyline = read_json(curve)?;
    let eps = eps.unwrap_or(1e-4 * curve.diameter());
    if !(eps > 0.0) {
        return Err(usage("eps must be positive"));
    }
    let mu = mu_length(&curve, eps)?;
    let resampled = match resample {
        Some(k) => Some(resample_by_mu(&mu_parameterize_with(&curve, eps), k)?),
        None => None,
    };
    emit(&MuReport { length: curve.length(), diameter: curve.diameter(), eps, mu_length: mu, resampled }, cfg.out.as_deref())
}

fn cmd_frechet(a: &Path, b: &Path, spacing: Option<f64>, cfg: &RunConfig) -> Outcome {
    let a: Polyline = read_json(a)?;
    let b: Polyline = read_json(b)?;
    let d = match spacing {
        Some(s) if s > 0.0 => frechet_refined(a.vertices(), b.vertices(), s),
        Some(_) => return Err(usage("spacing must be positive")),
        None => frechet(&a, &b),
    };
    emit(&serde_json::json!({ "distance": d, "spacing": spacing }), cfg.out.as_deref())
}

fn cmd_rectify(field: &Path, model: ModelChoice, cfg: &RunConfig) -> Outcome {
    let field = load_field(field)?;
    let h = rectify_model(&field, model, &rectify_params(cfg))?;
    emit(&h, cfg.out.as_deref())?;
    if let Some(svg) = &cfg.svg {
        write_text(svg, &folia::svg::render_homeomorphism(&h))?;
    }
    let tol_rect = cfg.tol_rect.unwrap_or_else(|| field.default_tol_rect());
    if !h.orientation_ok {
        return Err(analysis("mapped lattice cells are not positively oriented"));
    }
    if h.residual > tol_rect {
        return Err(analysis(format!("residual {:.3e} exceeds tol_rect {tol_rect:.3e}", h.residual)));
    }
    Ok(())
}

fn cmd_conjugate(f: &Path, g: &Path, phi0: &Path, cfg: &RunConfig) -> Outcome {
    let f = load_field(f)?;
    let g = load_field(g)?;
    let phi0: BoundaryMap = read_json(phi0)?;
    let params = ConjugacyParams { rectify: rectify_params(cfg), tol_conj: cfg.tol_conj };
    let c = conjugate(&f, &g, &phi0, &params)?;
    emit(&c, cfg.out.as_deref())?;
    if c.report.passed {
        Ok(())
    } else {
        Err(analysis(c.report.failures.join("; ")))
    }
}

fn cmd_render(input: &Path, out: Option<&Path>) -> Outcome {
    let value: serde_json::Value = read_json(input)?;
    let svg = if value.get("curves").is_some() {
        let family: LevelFamily = serde_json::from_value(value).map_err(Error::from)?;
        folia::svg::render_levels(&family)
    } else if value.get("grid").is_some() {
        let h: DiscreteHomeomorphism = serde_json::from_value(value).map_err(Error::from)?;
        folia::svg::render_homeomorphism(&h)
    } else if value.get("phi").is_some() {
        let c: Conjugacy = serde_json::from_value(value).map_err(Error::from)?;
        folia::svg::render_homeomorphism(&c.phi)
    } else {
        return Err(usage(format!("{}: neither a level family nor a homeomorphism", input.display())));
    };
    match out {
        Some(path) => write_text(path, &svg),
        None => {
            print!("{svg}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    let t = cli.tol;
    let mut flags = RunConfig {
        tol_level: t.tol_level,
        tol_mono: t.tol_mono,
        tol_iso: t.tol_iso,
        tol_rect: t.tol_rect,
        tol_conj: t.tol_conj,
        eps_cap: t.eps_cap,
        g_min: t.g_min,
        boundary_samples: t.boundary_samples,
        ..Default::default()
    };
    match &cli.command {
        Command::Classify { out, .. } | Command::Mu { out, .. } | Command::Frechet { out, .. } => flags.out = out.clone(),
        Command::Levels { count, out, svg, .. } => {
            flags.count = *count;
            flags.out = out.clone();
            flags.svg = svg.clone();
        }
        Command::Rectify { levels, samples, out, svg, .. } => {
            flags.levels = *levels;
            flags.samples = *samples;
            flags.out = out.clone();
            flags.svg = svg.clone();
        }
        Command::Conjugate { levels, samples, out, .. } => {
            flags.levels = *levels;
            flags.samples = *samples;
            flags.out = out.clone();
        }
        Command::Render { out, .. } => flags.out = out.clone(),
    }
    let cfg = file.merge(flags);
    cfg.validate().map_err(usage)?;
    match &cli.command {
        Command::Classify { field, .. } => cmd_classify(field, &cfg),
        Command::Levels { field, .. } => cmd_levels(field, &cfg),
        Command::Mu { curve, eps, resample, .. } => cmd_mu(curve, *eps, *resample, &cfg),
        Command::Frechet { a, b, spacing, .. } => cmd_frechet(a, b, *spacing, &cfg),
        Command::Rectify { field, model, .. } => cmd_rectify(field, *model, &cfg),
        Command::Conjugate { f, g, phi0, .. } => cmd_conjugate(f, g, phi0, &cfg),
        Command::Render { input, .. } => cmd_render(input, cfg.out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("folia: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
