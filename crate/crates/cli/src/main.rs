use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use padlab::cellmap::CellularMap;
use padlab::complex::{DComplex, Subcomplex};
use padlab::construct::Subdivision;
use padlab::kp::{default_sseq, kp_stage_tower, one_skeleton_push, resolve_tower, verify_lemma_covering_omega, KpOptions, KpTower};
use padlab::orchestrator::{run_tower, RunConfig, TowerRun};
use padlab::report::VerificationReport;
use padlab::towers::{
    circle_map, extend_partial_map_tower, flexibility_test, kill_flexible_bundle, kill_flexible_telescope, p_flexible,
    verify_prop_isomorphism_circle, verify_prop_moore, EulerClass, MooreModel, TargetKind,
};

#[derive(Parser)]
#[command(name = "padlab", version, about = "Finite-stage resolution towers with machine-checked homology")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the stage pipeline and write tower, ledger and DOT files
    Run {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        subdiv: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// defaults to `$PADLAB_SCRATCH/run`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the ledger of a stored run
    Verify { dir: PathBuf },
    /// Print a stored run as JSON or one stage as DOT
    Export {
        dir: PathBuf,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 0)]
        stage: usize,
    },
    /// Build a surface tower and write its manifest
    BuildKp {
        #[command(flatten)]
        kp: KpArgs,
        /// defaults to `$PADLAB_SCRATCH/kp`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a surface tower, its covering resolution and the 1-skeleton push
    ResolveKp {
        #[command(flatten)]
        kp: KpArgs,
        /// deck exponents; defaults to partial sums of kseq
        #[arg(long, value_delimiter = ',')]
        sseq: Option<Vec<u32>>,
    },
    /// Verify a surface tower and the covering lemma for its degrees
    VerifyKp {
        #[command(flatten)]
        kp: KpArgs,
    },
    /// Extend a partial map over a cylinder tower
    Extend {
        #[command(flatten)]
        input: ComplexArg,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 2)]
        p: u64,
        /// circle target: the map has degree p^k on missing 2-cells
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// circle: values on edges; moore: values on 2-cells
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cochain: Vec<i64>,
        #[arg(long, default_value_t = 1)]
        t: u32,
    },
    /// Decide whether a bundle has sections of degree p^k over the 1-skeleton
    FlexTest {
        #[command(flatten)]
        input: ComplexArg,
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Pull a flexible bundle back to a complex where it becomes trivial
    KillBundle {
        #[command(flatten)]
        input: ComplexArg,
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// use the telescope construction with step exponent t
        #[arg(long)]
        telescope: Option<u32>,
    },
}

#[derive(Args)]
struct KpArgs {
    #[arg(long, default_value_t = 2)]
    p: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    kseq: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    stages: usize,
    #[arg(long, default_value_t = 1)]
    subdiv: u32,
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
}

#[derive(Args)]
struct ComplexArg {
    /// complex JSON file, or builtin:NAME with NAME one of simplex2, simplex3,
    /// sphere, torus, rp2, moore3, sd-rp2, sd-moore3
    #[arg(long)]
    complex: String,
}

#[derive(Args)]
struct BundleArgs {
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Euler cocycle on 2-cells; default the first generator of H^2
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cocycle: Option<Vec<i64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Circle,
    Moore,
}

fn load_complex(arg: &ComplexArg) -> Result<Arc<DComplex>> {
    let sd = |x: DComplex| Subdivision::new(Arc::new(x)).complex;
    let x = match arg.complex.strip_prefix("builtin:") {
        Some("simplex2") => Arc::new(DComplex::simplex(2)?),
        Some("simplex3") => Arc::new(DComplex::simplex(3)?),
        Some("sphere") => Arc::new(DComplex::simplex_boundary(3)?),
        Some("torus") => Arc::new(DComplex::torus()),
        Some("rp2") => Arc::new(DComplex::projective_plane()),
        Some("moore3") => Arc::new(DComplex::moore_word(3)),
        Some("sd-rp2") => sd(DComplex::projective_plane()),
        Some("sd-moore3") => sd(DComplex::moore_word(3)),
        Some(other) => bail!("unknown builtin complex {other}"),
        None => {
            let s = std::fs::read_to_string(&arg.complex).with_context(|| format!("reading {}", arg.complex))?;
            Arc::new(DComplex::from_json(&s)?)
        }
    };
    Ok(x)
}

fn bundle(x: Arc<DComplex>, b: &BundleArgs) -> Result<EulerClass> {
    Ok(match &b.cocycle {
        Some(c) => EulerClass::new(x, c.clone())?,
        None => EulerClass::generator(x, 0)?,
    })
}

fn kp_tower(a: &KpArgs) -> Result<KpTower> {
    let opts = KpOptions { cell_budget: a.budget, default_subdiv: a.subdiv, ..KpOptions::default() };
    Ok(kp_stage_tower(a.p, &a.kseq, a.stages, &opts)?)
}

fn emit(rep: &VerificationReport) -> Result<bool> {
    println!("{}", serde_json::to_string_pretty(rep)?);
    eprint!("{rep}");
    Ok(rep.passed())
}

fn out_dir(out: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    match (out, std::env::var_os("PADLAB_SCRATCH")) {
        (Some(o), _) => Ok(o),
        (None, Some(s)) => Ok(PathBuf::from(s).join(name)),
        (None, None) => bail!("no --out given and PADLAB_SCRATCH is unset"),
    }
}

fn exec(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Run { p, steps, subdiv, budget, seed, out } => {
            let cfg = RunConfig { p, steps, subdiv, cell_budget: budget, seed, ..RunConfig::default() };
            let out = out_dir(out, "run")?;
            let run = run_tower(&cfg)?;
            run.write(&out)?;
            print!("{}", run.ledger.summary());
            Ok(run.ledger.passed() && run.ledger.truncated.is_none())
        }
        Cmd::Verify { dir } => {
            let run = TowerRun::read(&dir, None)?;
            let fresh = run.reverify()?;
            print!("{}", fresh.summary());
            let same = fresh == run.ledger;
            if !same {
                println!("stored ledger differs from the recomputed one");
            }
            Ok(same && fresh.passed() && fresh.truncated.is_none())
        }
        Cmd::Export { dir, dot, json, stage } => {
            let run = TowerRun::read(&dir, None)?;
            if dot {
                let s = run.stages.get(stage).with_context(|| format!("no stage {stage}"))?;
                print!("{}", s.m.to_dot(&format!("M{stage}"), None));
            } else {
                let _ = json;
                println!("{}", run.tower_json());
            }
            Ok(true)
        }
        Cmd::BuildKp { kp, out } => {
            let out = out_dir(out, "kp")?;
            let tower = kp_tower(&kp)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("tower.json"), serde_json::to_string_pretty(&tower.manifest())?)?;
            for (i, x) in tower.fine.iter().enumerate() {
                std::fs::write(out.join(format!("stage{i}.dot")), x.to_dot(&format!("Omega{i}"), None))?;
            }
            let rep = tower.verify()?;
            emit(&rep)
        }
        Cmd::ResolveKp { kp, sseq } => {
            let tower = kp_tower(&kp)?;
            let sseq = sseq.unwrap_or_else(|| default_sseq(&kp.kseq));
            let res = resolve_tower(tower, &sseq)?;
            let mut rep = res.verify()?;
            if res.covers.len() > 1 {
                let (_, push) = one_skeleton_push(&res, 1)?;
                rep.absorb(push);
            }
            emit(&rep)
        }
        Cmd::VerifyKp { kp } => {
            let tower = kp_tower(&kp)?;
            let mut rep = tower.verify()?;
            let mut seen = kp.kseq.clone();
            seen.dedup();
            for k in seen {
                rep.absorb(verify_lemma_covering_omega(kp.p, k));
            }
            emit(&rep)
        }
        Cmd::Extend { input, target, p, k, cochain, t } => {
            let x = load_complex(&input)?;
            let (kind, skel) = match target {
                Target::Circle => (TargetKind::Circle { p, k }, 1),
                Target::Moore => (TargetKind::Moore { p, m: 2 }, 2),
            };
            let a = Subcomplex::skeleton(&x, skel);
            let (ax, _) = x.extract(&a);
            let ax = Arc::new(ax);
            let f = match target {
                Target::Circle => circle_map(ax, &cochain)?,
                Target::Moore => {
                    let moore = MooreModel::new(p, 2)?;
                    if cochain.len() != x.num_cells(2) {
                        bail!("need one value per 2-cell");
                    }
                    let faces = cochain.iter().map(|&c| moore.multiple(c)).collect();
                    CellularMap::new(ax, moore.complex.clone(), vec![0; x.num_cells(0)], vec![Vec::new(); x.num_cells(1)], faces, Vec::new())?
                }
            };
            let tower = extend_partial_map_tower(x.clone(), &a, &f, kind)?;
            let mut rep = tower.verify_structure(&f);
            for n in [Subcomplex::full(&x), a.clone()] {
                let r = match target {
                    Target::Circle => verify_prop_isomorphism_circle(&tower, &n, t)?,
                    Target::Moore => verify_prop_moore(&tower, &n, t)?,
                };
                rep.absorb(r);
            }
            emit(&rep)
        }
        Cmd::FlexTest { input, bundle: b, k } => {
            let e = bundle(load_complex(&input)?, &b)?;
            let flex = flexibility_test(&e, b.p, k)?;
            let out = serde_json::json!({
                "flexible": flex.flexible,
                "section": flex.section,
                "order": e.order().map(|o| o.to_string()),
                "p_flexible": p_flexible(&e, b.p),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Cmd::KillBundle { input, bundle: b, k, telescope } => {
            let e = bundle(load_complex(&input)?, &b)?;
            let kill = match telescope {
                Some(t) => kill_flexible_telescope(&e, b.p, t)?,
                None => kill_flexible_bundle(&e, b.p, k)?,
            };
            emit(&kill.verify()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
