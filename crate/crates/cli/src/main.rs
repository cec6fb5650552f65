use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use talenti_cli::domains::build_mesh;
use talenti_cli::scenario::{parse_list, parse_number};
use talenti_cli::sweep::write_sweep;
use talenti_cli::verify::VerifyOptions;
use talenti_cli::{exit, interrupted, request_interrupt, run_scenario, run_sweep, verify_all, Check, CliError, CriterionResult, Scenario};
use talenti_cli::{Datum, Domain, Family};
use talenti_core::analysis::Verdict;

#[derive(Parser)]
#[command(name = "talenti", version, about = "Comparison results for p-Laplace Robin problems, checked numerically")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and evaluate the requested checks.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Lorentz-norm gaps along a family of equal-measure domains.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// ellipse or rectangle.
        #[arg(long, default_value = "ellipse")]
        family: String,
        /// Comma-separated aspect ratios.
        #[arg(long, default_value = "1,1.2,1.5,2")]
        ratios: String,
    },
    /// Run the acceptance matrix.
    Verify {
        #[arg(long, default_value = "0.03")]
        h: String,
        #[arg(long, default_value = "0")]
        seed: String,
        /// Also write verify.json here.
        #[arg(long, env = "TALENTI_OUT")]
        out_dir: Option<PathBuf>,
    },
    /// Emit a mesh file only.
    Mesh {
        #[arg(long, default_value = "disk")]
        domain: String,
        #[arg(long, default_value = "0.03")]
        h: String,
        /// Domain measure (default pi).
        #[arg(long)]
        area: Option<String>,
        #[arg(long, env = "TALENTI_OUT", default_value = "talenti-out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// disk, square, ellipse(a,b), rectangle(a,b), lshape or polygon(file).
    #[arg(long)]
    domain: Option<String>,
    /// one, radial-decreasing(file) or mesh-field(file).
    #[arg(long = "f")]
    datum: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Dimension; values other than 2 use the radial closed forms on the ball.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    h: Option<String>,
    /// Comma-separated Lorentz exponents k.
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated checks.
    #[arg(long)]
    check: Option<String>,
    /// Domain measure (default pi).
    #[arg(long)]
    area: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, env = "TALENTI_OUT", default_value = "talenti-out")]
    out_dir: PathBuf,
}

impl ScenarioArgs {
    /// The scenario from `--config` (or defaults), with flags applied on top.
    fn scenario(&self) -> Result<Scenario, CliError> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => Scenario::new(Domain::Disk, 2.0, 1.0, 0.03),
        };
        if let Some(d) = &self.domain {
            s.domain = d.parse()?;
        }
        if let Some(f) = &self.datum {
            s.datum = f.parse::<Datum>()?;
        }
        if let Some(v) = &self.p {
            s.p = parse_number(v, "--p")?;
        }
        if let Some(v) = &self.n {
            let n = parse_number(v, "--n")?;
            if n.fract() != 0.0 || n < 2.0 {
                return Err(CliError::Config(format!("--n must be an integer >= 2 (got {v})")));
            }
            s.n = n as usize;
        }
        if let Some(v) = &self.beta {
            s.beta = parse_number(v, "--beta")?;
        }
        if let Some(v) = &self.h {
            s.mesh_h = parse_number(v, "--h")?;
        }
        if let Some(v) = &self.k {
            s.k_list = parse_list(v, "--k")?;
        }
        if let Some(v) = &self.check {
            s.checks = v.split(',').filter(|c| !c.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.area {
            s.area = parse_number(v, "--area")?;
        }
        if let Some(v) = &self.seed {
            s.seed = parse_seed(v)?;
        }
        Ok(s)
    }
}

fn parse_seed(v: &str) -> Result<u64, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("--seed: {v:?} is not a non-negative integer")))
}

fn run(scenario: &ScenarioArgs) -> Result<u8, CliError> {
    let s = scenario.scenario()?;
    let outcome = run_scenario(&s, &scenario.out_dir)?;
    println!("{}", outcome.report.scenario);
    for f in &outcome.report.flags {
        println!(
            "  {:<6} {:<34} margin {:>11.4e}  budget {:>10.3e}  {}",
            match f.verdict {
                Verdict::StrictPass => "STRICT",
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
            },
            f.check,
            f.margin,
            f.budget,
            f.detail
        );
    }
    println!("report: {}", outcome.files.report.display());
    Ok(outcome.status())
}

fn sweep(scenario: &ScenarioArgs, family: &str, ratios: &str) -> Result<u8, CliError> {
    let mut s = scenario.scenario()?;
    if let Some(c) = s.checks.iter().find(|&&c| c != Check::RigiditySweep) {
        return Err(CliError::Config(format!("sweep only runs rigidity-sweep (got {c})")));
    }
    s.checks.clear();
    let family: Family = family.parse()?;
    let report = run_sweep(&s, family, &parse_list(ratios, "--ratios")?)?;
    let (csv, _) = write_sweep(&report, &scenario.out_dir)?;
    println!("{:>8} {:>12} {:>14} {:>14} {:>12}", "ratio", "defect", "||u||", "||v||", "gap");
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
    for (r, e) in report.ratios.iter().zip(&report.entries) {
        println!(
            "{r:>8} {:>12.4e} {:>14} {:>14} {:>12}{}",
            e.isoperimetric_defect,
            cell(e.norm_u),
            cell(e.norm_v),
            cell(e.gap),
            e.failure.as_ref().map(|f| format!("  failed: {f}")).unwrap_or_default()
        );
    }
    println!("gaps increase with the ratio: {}", report.monotone);
    println!("table: {}", csv.display());
    Ok(if report.failures() == 0 { exit::PASS } else { exit::SOLVER_FAILED })
}

fn write_verify_json(dir: &Path, results: &[CriterionResult]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::from(talenti_core::Error::from(e));
    std::fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(results).map_err(talenti_core::Error::from)?;
    std::fs::write(dir.join("verify.json"), text + "\n").map_err(io)
}

fn verify(h: &str, seed: &str, out_dir: Option<&Path>) -> Result<u8, CliError> {
    let options = VerifyOptions::new(parse_number(h, "--h")?, parse_seed(seed)?)?;
    let mut done = Vec::new();
    let result = verify_all(options, |r| {
        println!("{}", r.summary());
        for line in r.details.iter().filter(|l| l.starts_with("FAIL")) {
            println!("      {line}");
        }
        done.push(r.clone());
    });
    if let Some(dir) = out_dir {
        write_verify_json(dir, &done)?;
    }
    if let Err(CliError::Interrupted) = result {
        println!("interrupted after {} of {} criteria", done.len(), talenti_cli::verify::CRITERIA.len());
    }
    let results = result?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        println!("all {} criteria pass", results.len());
        Ok(exit::PASS)
    } else {
        println!("failed criteria: {}", failed.join(", "));
        Ok(exit::CRITERION_FAILED)
    }
}

fn mesh(domain: &str, h: &str, area: Option<&str>, out_dir: &Path) -> Result<u8, CliError> {
    let domain: Domain = domain.parse()?;
    let h = parse_number(h, "--h")?;
    let area = area.map(|a| parse_number(a, "--area")).transpose()?.unwrap_or(talenti_cli::scenario::DEFAULT_AREA);
    if !(h > 0.0 && area > 0.0) {
        return Err(CliError::Config("--h and --area must be positive".into()));
    }
    let mesh = build_mesh(&domain, area, h)?;
    let io = |e: std::io::Error| CliError::from(talenti_core::Error::from(e));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let path = out_dir.join("mesh.txt");
    std::fs::write(&path, mesh.to_text()).map_err(io)?;
    println!(
        "{} vertices, {} triangles, measure {:.12}, max edge {:.4}: {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.measure(),
        mesh.max_edge_length(),
        path.display()
    );
    Ok(exit::PASS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::PASS });
        }
    };
    // A second interrupt stops at once.
    let _ = ctrlc::set_handler(|| {
        if interrupted() {
            std::process::exit(exit::INTERRUPTED as i32);
        }
        request_interrupt();
    });
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    let result = match &cli.command {
        Command::Run { scenario } => run(scenario),
        Command::Sweep { scenario, family, ratios } => sweep(scenario, family, ratios),
        Command::Verify { h, seed, out_dir } => verify(h, seed, out_dir.as_deref()),
        Command::Mesh { domain, h, area, out_dir } => mesh(domain, h, area.as_deref(), out_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
