use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polyhorizon::fields::{Affine, Manufactured, ManufacturedForcing, Quadratic, ScalarField, SinCos, SinSin};
use polyhorizon::geometry::regular_polygon;
use polyhorizon::operator::{
    apply_operator, energy_norm_sq, k_gamma_estimate, rescaled_apply, sigma_polygon,
    sigma_regular_constant, sigma_regular_peridynamic, QuadratureSpec,
};
use polyhorizon::solver::{build_grid, build_stencil, l2_error, solve_with_constraint, Field, DEFAULT_REFINE, DEFAULT_TOL};
use polyhorizon::study::{run_study, write_csv, StudyConfig};
use polyhorizon::{Error, Kernel, KernelFamily, NeighborhoodSpec, Point2, Result};

#[derive(Parser)]
#[command(name = "polyhorizon", version, about = "Nonlocal diffusion with ball and polygonal neighborhoods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Second-moment coefficients of the kernel truncated to regular polygons.
    Sigma {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
    },
    /// Evaluate the nonlocal operator at one point.
    Apply {
        #[arg(long, value_enum)]
        func: Func,
        #[command(flatten)]
        nb: NeighborhoodArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 0.5)]
        x: f64,
        #[arg(long, default_value_t = 0.5)]
        y: f64,
        #[arg(long, default_value_t = 16)]
        quad_order: usize,
        /// Multiply by 4 / C_n (regular polygons only).
        #[arg(long)]
        rescaled: bool,
    },
    /// Solve the manufactured problem once and report the L2 error.
    Solve {
        #[command(flatten)]
        nb: NeighborhoodArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_REFINE)]
        refine: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run a study from a JSON config and write CSV.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Energy seminorms of sin(pi x1) sin(pi x2) against pi^2 / 2.
    NormLimit {
        #[command(flatten)]
        nb: NeighborhoodArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Cell size; defaults to delta / 16.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_REFINE)]
        refine: usize,
    },
    /// Kernel mass lost by the polygonal truncation.
    Kgamma {
        #[command(flatten)]
        nb: NeighborhoodArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Constant)]
    kernel: KernelArg,
    /// Singularity exponent for the singular kernel.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Constant,
    Linear,
    Gaussian,
    Singular,
}

impl KernelArgs {
    fn build(&self) -> Result<Kernel> {
        let family = match self.kernel {
            KernelArg::Constant => KernelFamily::Constant,
            KernelArg::Linear => KernelFamily::Linear,
            KernelArg::Gaussian => KernelFamily::GaussianLike,
            KernelArg::Singular => KernelFamily::Singular,
        };
        Kernel::new(family, 2, self.s)
    }
}

#[derive(Args)]
struct NeighborhoodArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Ball)]
    strategy: StrategyArg,
    /// Side count for `regular`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    rotation: f64,
    /// Triangulation pitch for `nocaps`.
    #[arg(long)]
    grid_h: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ball,
    #[value(alias = "regular-n-gon")]
    Regular,
    Nocaps,
}

impl NeighborhoodArgs {
    fn build(&self) -> Result<NeighborhoodSpec> {
        let nb = match self.strategy {
            StrategyArg::Ball => NeighborhoodSpec::ball(self.delta),
            StrategyArg::Regular => {
                let n = self
                    .n
                    .ok_or_else(|| Error::InvalidArgument("--strategy regular needs --n".into()))?;
                NeighborhoodSpec::regular_rotated(self.delta, n, self.rotation)
            }
            StrategyArg::Nocaps => {
                let h = self
                    .grid_h
                    .ok_or_else(|| Error::InvalidArgument("--strategy nocaps needs --grid-h".into()))?;
                NeighborhoodSpec::nocaps(self.delta, h)
            }
        };
        nb.validate()?;
        Ok(nb)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Func {
    Quadratic,
    Affine,
    Trig,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sigma { kernel, n_list } => {
            let k = kernel.build()?;
            println!("{:>6} {:>20} {:>20} {:>12}", "n", "sigma_quadrature", "sigma_closed_form", "4 sigma");
            for n in n_list {
                let poly = regular_polygon(Point2::ORIGIN, 1.0, n, 0.0)?;
                let (s1, _) = sigma_polygon(&k, &poly)?;
                let closed = match (k.family(), k.s()) {
                    (KernelFamily::Constant, _) => Some(sigma_regular_constant(n)?),
                    (KernelFamily::Singular, s) if s == 1.0 => Some(sigma_regular_peridynamic(n)?),
                    _ => None,
                };
                let closed = closed.map_or_else(|| "-".to_string(), |v| format!("{v:.15}"));
                println!("{n:>6} {s1:>20.15} {closed:>20} {:>12.8}", 4.0 * s1);
            }
        }
        Command::Apply {
            func,
            nb,
            kernel,
            x,
            y,
            quad_order,
            rescaled,
        } => {
            let k = kernel.build()?;
            let nb = nb.build()?;
            let q = QuadratureSpec::with_order(quad_order);
            let u: &dyn ScalarField = match func {
                Func::Quadratic => &Quadratic,
                Func::Affine => &Affine::default(),
                Func::Trig => &SinCos,
            };
            let p = Point2::new(x, y);
            let v = if rescaled {
                rescaled_apply(u, p, &k, &nb, &q)?
            } else {
                apply_operator(u, p, &k, &nb, &q)?
            };
            println!("{v:.6}");
        }
        Command::Solve {
            nb,
            kernel,
            beta,
            refine,
            tol,
        } => {
            if !(beta > 1.0) {
                return Err(Error::InvalidArgument(format!("beta must exceed 1, got {beta}")));
            }
            let k = kernel.build()?;
            let nb = nb.build()?;
            let h = 1.0 / (nb.delta.powf(-beta) - 1e-9).ceil();
            let grid = build_grid(h, nb.delta)?;
            let stencil = build_stencil(&grid, &k, &nb, refine)?;
            let sol = solve_with_constraint(&stencil, &grid, &ManufacturedForcing, Some(&Manufactured), tol)?;
            println!("h          {h}");
            println!("dof        {}", grid.dof());
            println!("iterations {}", sol.iterations);
            println!("residual   {:e}", sol.relative_residual);
            println!("l2_error   {:e}", l2_error(&sol.field, &Manufactured));
        }
        Command::Study { config, out } => {
            let cfg = StudyConfig::from_file(&config)?;
            let report = run_study(&cfg)?;
            println!("{report}");
            write_csv(&report, &out)?;
        }
        Command::NormLimit { nb, kernel, h, refine } => {
            let k = kernel.build()?;
            let nb = nb.build()?;
            let h = h.unwrap_or(nb.delta / 16.0);
            let grid = build_grid(h, nb.delta)?;
            let e = energy_norm_sq(&Field::sample(&grid, &SinSin), &k, &nb, refine)?;
            let exact = SinSin::DIRICHLET_ENERGY;
            println!("truncated {:.8}", e.truncated);
            println!("polygon   {:.8}", e.polygon);
            println!("ball      {:.8}", e.ball);
            println!("limit     {exact:.8}");
            println!("rel_error {:.3e}", (e.polygon - exact).abs() / exact);
        }
        Command::Kgamma { nb, kernel, samples } => {
            let k = kernel.build()?;
            let nb = nb.build()?;
            println!("{:.6}", k_gamma_estimate(&k, &nb, samples)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
