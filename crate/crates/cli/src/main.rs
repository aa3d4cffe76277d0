use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use subpower::affine::{affine_closure_comprep, verify_affine};
use subpower::closure::{subpower_closure, DEFAULT_CAP};
use subpower::diffclonoid::{diff_clonoid_gens, DiffMethod};
use subpower::fix::fix_value;
use subpower::io::{algebra_input_to_json, from_json, parse_algebra_input, to_json, CompRepFile, InstanceFile};
use subpower::random::{random_instance, rng_from_seed};
use subpower::rep::{thin_to_compact, CompactRep};
use subpower::solver::{dispatch, solve_smp_oracle, AlgebraInput, DispatchOptions, SmpInstance, Verdict, WreathSolver};
use subpower::{zoo, Error};

#[derive(Parser)]
#[command(name = "smp", version, about = "Subpower membership for finite Mal'tsev algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Fixpoint,
    Enumerate,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership with the fastest applicable procedure.
    Solve {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Include the witness in the verdict.
        #[arg(long)]
        witness: bool,
        /// Fall back to exhaustive closure when no polynomial path applies.
        #[arg(long)]
        allow_oracle: bool,
    },
    /// Decide membership by exhaustive closure.
    Oracle {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        witness: bool,
    },
    /// Print an enumerated compact representation of the generated subpower.
    Comprep {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Restrict the generated subpower to a value at the first coordinate.
    Fix {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        value: u8,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Generators of the difference clonoid of a wreath product.
    DiffClonoid {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Fixpoint)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Validate an algebra or wreath file.
    Verify {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Draw a random instance.
    RandomInstance {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        member_bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw a random `Z_l ⊗ Z_p` over the signature {m}.
    RandomWreath {
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the solver on random instances.
    Bench {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,200")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,10,20,40")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Cap(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::CapExceeded { cap } => Failure::Cap(cap),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_algebra(path: &Path) -> Result<AlgebraInput, Failure> {
    Ok(parse_algebra_input(&read(path)?)?)
}

fn load_instance(path: &Path, input: &AlgebraInput) -> Result<SmpInstance, Failure> {
    let f: InstanceFile = from_json(&read(path)?)?;
    Ok(f.to_instance(input)?)
}

// A closed pipe (e.g. `| head`) is not an error worth reporting.
fn print_line(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json<T: Serialize>(x: &T) {
    print_line(&to_json(x));
}

fn verdict_exit(mut v: Verdict, witness: bool) -> Outcome {
    if !witness {
        v.witness = None;
    }
    let member = v.member;
    print_json(&v);
    Ok(if member { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn comprep(input: &AlgebraInput, inst: &SmpInstance, cap: usize) -> Result<CompactRep, Failure> {
    let affine = match input {
        AlgebraInput::Plain { algebra, group } => {
            let g = group
                .clone()
                .unwrap_or_else(|| subpower::AbelianGroup::cyclic(algebra.size() as u32));
            verify_affine(algebra, &g).ok().map(|specs| (algebra, g, specs))
        }
        AlgebraInput::Wreath(_) => None,
    };
    if let Some((alg, g, specs)) = affine {
        return Ok(affine_closure_comprep(alg, &g, &specs, &inst.generators)?.0);
    }
    let alg = input.algebra();
    let cl = subpower_closure(alg, &inst.generators, cap)?;
    let all: Vec<usize> = (0..cl.len()).collect();
    let entries = cl
        .to_vecs()
        .into_iter()
        .zip(cl.circuits(&all))
        .map(|(t, c)| (t, Some(c.into_term())))
        .collect();
    Ok(thin_to_compact(inst.k(), inst.n(), entries)?)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve {
            algebra,
            instance,
            cap,
            witness,
            allow_oracle,
        } => {
            let input = load_algebra(&algebra)?;
            let inst = load_instance(&instance, &input)?;
            let v = dispatch(&input, &inst, DispatchOptions { allow_oracle, cap })?;
            verdict_exit(v, witness)
        }
        Command::Oracle {
            algebra,
            instance,
            cap,
            witness,
        } => {
            let input = load_algebra(&algebra)?;
            let inst = load_instance(&instance, &input)?;
            verdict_exit(solve_smp_oracle(input.algebra(), &inst, cap)?, witness)
        }
        Command::Comprep { algebra, instance, cap } => {
            let input = load_algebra(&algebra)?;
            let inst = load_instance(&instance, &input)?;
            print_json(&CompRepFile::from_rep(&comprep(&input, &inst, cap)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Fix {
            algebra,
            instance,
            value,
            cap,
        } => {
            let input = load_algebra(&algebra)?;
            let inst = load_instance(&instance, &input)?;
            let rep = comprep(&input, &inst, cap)?;
            print_json(&CompRepFile::from_rep(&fix_value(input.algebra(), &rep, value)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::DiffClonoid { algebra, method, cap } => {
            let AlgebraInput::Wreath(spec) = load_algebra(&algebra)? else {
                return Err(Failure::Usage("diff-clonoid needs a wreath product".into()));
            };
            spec.check_solvable()?;
            let method = match method {
                Method::Fixpoint => DiffMethod::Fixpoint,
                Method::Enumerate => DiffMethod::Enumerate,
            };
            print_json(&diff_clonoid_gens(&spec, method, cap)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { algebra } => {
            let input = load_algebra(&algebra)?;
            #[derive(Serialize)]
            struct Report {
                domain_size: usize,
                maltsev: bool,
                affine: bool,
                wreath_solvable: Option<bool>,
            }
            let alg = input.algebra();
            let affine = match &input {
                AlgebraInput::Plain { group, .. } => {
                    let g = group
                        .clone()
                        .unwrap_or_else(|| subpower::AbelianGroup::cyclic(alg.size() as u32));
                    verify_affine(alg, &g).is_ok()
                }
                AlgebraInput::Wreath(spec) => verify_affine(alg, &spec.companion_group()).is_ok(),
            };
            let wreath_solvable = match &input {
                AlgebraInput::Wreath(spec) => Some(spec.check_solvable().is_ok()),
                AlgebraInput::Plain { .. } => None,
            };
            print_json(&Report {
                domain_size: alg.size(),
                maltsev: true,
                affine,
                wreath_solvable,
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::RandomInstance {
            algebra,
            k,
            n,
            member_bias,
            seed,
        } => {
            if k == 0 || n == 0 {
                return Err(Failure::Usage("k and n must be positive".into()));
            }
            let input = load_algebra(&algebra)?;
            let inst = random_instance(input.algebra(), k, n, member_bias, &mut rng_from_seed(seed));
            print_json(&InstanceFile::from_instance(&inst));
            Ok(ExitCode::SUCCESS)
        }
        Command::RandomWreath { l, p, seed } => {
            if l < 2 || p < 2 || l * p > 256 {
                return Err(Failure::Usage("need 2 <= l, p and l*p <= 256".into()));
            }
            let spec = zoo::random_wreath(l, p, &mut rng_from_seed(seed));
            print_line(&algebra_input_to_json(&AlgebraInput::Wreath(spec)));
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            algebra,
            k,
            n,
            seed,
            format,
        } => bench(&algebra, &k, &n, seed, format),
    }
}

#[derive(Serialize)]
struct BenchRow {
    k: usize,
    n: usize,
    path: String,
    tuples: usize,
    ms: f64,
}

fn bench(algebra: &Path, ks: &[usize], ns: &[usize], seed: u64, format: Format) -> Outcome {
    let input = load_algebra(algebra)?;
    let solver = match &input {
        AlgebraInput::Wreath(spec) => Some(WreathSolver::new(spec.clone(), DEFAULT_CAP)?),
        AlgebraInput::Plain { .. } => None,
    };
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    for &k in ks {
        for &n in ns {
            let inst = random_instance(input.algebra(), k, n, 0.5, &mut rng);
            let start = Instant::now();
            let v = match &solver {
                Some(s) => s.solve(&inst)?,
                None => dispatch(
                    &input,
                    &inst,
                    DispatchOptions {
                        allow_oracle: false,
                        cap: DEFAULT_CAP,
                    },
                )?,
            };
            rows.push(BenchRow {
                k,
                n,
                path: v.stats.path,
                tuples: v.stats.tuples_materialized,
                ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    match format {
        Format::Json => print_json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &rows {
                w.serialize(r).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            w.flush().map_err(|e| Failure::Usage(e.to_string()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Cap(cap)) => {
            eprintln!("error: closure exceeded the cap of {cap} tuples");
            ExitCode::from(3)
        }
    }
}
