//! Batch command-line front end: evaluation of the three logics, the
//! translations, the tree encodings, the characteristic-tuple decision
//! procedure, graph-class membership, and the bundled self-test.
//!
//! Exit codes: 0 on success, 1 when an evaluated verdict is false (or a
//! self-test check fails), 2 on diagnostics or I/O errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hornfix::eval::{eval_datalog_r, eval_horn_brute_force, eval_lfp, DEFAULT_SO_BUDGET};
use hornfix::kprime::{
    membership_kprime, DemoOracle, ExtensionParams, GraphStructure, Membership,
};
use hornfix::parse::{
    parse_horn, parse_lfp, parse_program, parse_structure, print_horn, print_program,
    print_sim_lfp, print_structure, Diagnostic,
};
use hornfix::pistar::{compile, compute_m, verify_prop6};
use hornfix::structure::Structure;
use hornfix::translate::{datalog_to_horn, datalog_to_sim_lfp, horn_to_datalog, lfp_to_datalog};
use hornfix::trees::{check, decode, encode, sigma_structure, TreeStructure};

#[derive(Parser)]
#[command(name = "hornfix", version, about = "Fixed-point logics over finite structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Logic {
    Datalogr,
    Horn,
    Lfp,
}

#[derive(Clone, Copy, ValueEnum)]
enum TranslateFrom {
    Horn,
    Datalogr,
    Lfp,
}

#[derive(Clone, Copy, ValueEnum)]
enum TranslateTo {
    Datalogr,
    Horn,
    Simlfp,
}

#[derive(Args)]
struct OutputArg {
    /// Write the result here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula of one of the three logics on a structure.
    Eval {
        #[arg(long, value_enum)]
        logic: Logic,
        formula: PathBuf,
        structure: PathBuf,
        /// Goal relation (revised Datalog only).
        #[arg(long)]
        goal: Option<String>,
        /// Print the fixed-point stages before the verdict.
        #[arg(long)]
        trace: bool,
        /// Assignment budget for the brute-force Horn checker
        /// (default 2^24; the HORNFIX_BUDGET variable overrides it).
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Translate a formula between the logics.
    Translate {
        #[arg(long, value_enum)]
        from: TranslateFrom,
        #[arg(long, value_enum)]
        to: TranslateTo,
        input: PathBuf,
        /// Goal relation (required when translating from revised Datalog).
        #[arg(long)]
        goal: Option<String>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Expand a structure onto the perfect binary tree of matching depth.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Read a structure back off a saturated tree structure.
    Decode {
        input: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Compute the numeric structure of characteristic relations.
    Sigma {
        input: PathBuf,
        /// Width of the guard relation.
        #[arg(short, long, conflicts_with = "width_from")]
        m: Option<usize>,
        /// Compute the width from this program instead.
        #[arg(long)]
        width_from: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Compile a program over tree structures to one over their numeric
    /// structures.
    Pistar {
        program: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Check the characteristic-relation correspondence of a program on
    /// the tree encoding of a structure.
    VerifyProp6 {
        program: PathBuf,
        structure: PathBuf,
        #[arg(long)]
        goal: Option<String>,
    },
    /// Decide whether a numeric tuple is a characteristic tuple.
    Check {
        entries: Vec<u32>,
    },
    /// Decide class membership of a rooted graph structure.
    Kprime {
        structure: PathBuf,
        #[arg(long, default_value = "even")]
        oracle: String,
        #[arg(long, default_value_t = 1)]
        c: u32,
    },
    /// Run the bundled oracle battery.
    Selftest,
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &OutputArg, text: &str) -> Result<(), String> {
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_diagnostics(path: &PathBuf, diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("{}:{d}", path.display());
    }
}

fn so_budget(flag: Option<u64>) -> u64 {
    if let Some(b) = flag {
        return b;
    }
    std::env::var("HORNFIX_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SO_BUDGET)
}

fn load_structure(path: &PathBuf) -> Result<Structure, ExitCode> {
    match read(path) {
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
        Ok(text) => match parse_structure(&text) {
            Ok(st) => Ok(st),
            Err(diags) => {
                report_diagnostics(path, &diags);
                Err(ExitCode::from(2))
            }
        },
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval { logic, formula, structure, goal, trace, budget } => {
            let st = match load_structure(&structure) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let text = read(&formula)?;
            let verdict = match logic {
                Logic::Datalogr => {
                    let program = match parse_program(&text) {
                        Ok(p) => p,
                        Err(diags) => {
                            report_diagnostics(&formula, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    let goal = goal.ok_or("--goal is required for --logic datalogr")?;
                    let eval = eval_datalog_r(&program, &st).map_err(|e| e.to_string())?;
                    if trace {
                        print!("{}", eval.trace.render());
                    }
                    eval.goal_holds(&goal).map_err(|e| e.to_string())?
                }
                Logic::Horn => {
                    let sentence = match parse_horn(&text) {
                        Ok(s) => s,
                        Err(diags) => {
                            report_diagnostics(&formula, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    eval_horn_brute_force(&sentence, &st, so_budget(budget))
                        .map_err(|e| e.to_string())?
                }
                Logic::Lfp => {
                    let lfp = match parse_lfp(&text) {
                        Ok(f) => f,
                        Err(diags) => {
                            report_diagnostics(&formula, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    eval_lfp(&lfp, &st).map_err(|e| e.to_string())?
                }
            };
            println!("{verdict}");
            Ok(if verdict { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Translate { from, to, input, goal, out } => {
            let text = read(&input)?;
            let rendered = match (from, to) {
                (TranslateFrom::Horn, TranslateTo::Datalogr) => {
                    let sentence = match parse_horn(&text) {
                        Ok(s) => s,
                        Err(diags) => {
                            report_diagnostics(&input, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    let (program, goal) = horn_to_datalog(&sentence);
                    format!("% goal: {goal}\n{}", print_program(&program))
                }
                (TranslateFrom::Datalogr, TranslateTo::Horn) => {
                    let program = match parse_program(&text) {
                        Ok(p) => p,
                        Err(diags) => {
                            report_diagnostics(&input, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    let goal = goal.ok_or("--goal is required when translating from datalogr")?;
                    let sentence =
                        datalog_to_horn(&program, &goal).map_err(|e| e.to_string())?;
                    print_horn(&sentence)
                }
                (TranslateFrom::Lfp, TranslateTo::Datalogr) => {
                    let formula = match parse_lfp(&text) {
                        Ok(f) => f,
                        Err(diags) => {
                            report_diagnostics(&input, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    let (program, goal) = lfp_to_datalog(&formula);
                    format!("% goal: {goal}\n{}", print_program(&program))
                }
                (TranslateFrom::Datalogr, TranslateTo::Simlfp) => {
                    let program = match parse_program(&text) {
                        Ok(p) => p,
                        Err(diags) => {
                            report_diagnostics(&input, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    let goal = goal.ok_or("--goal is required when translating from datalogr")?;
                    let system = datalog_to_sim_lfp(&program, &goal, vec![]);
                    print_sim_lfp(&system)
                }
                _ => return Err("unsupported translation direction".to_string()),
            };
            emit(&out, &rendered)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode { input, out } => {
            let st = match load_structure(&input) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let tree = encode(&st);
            emit(&out, &print_structure(&tree.as_structure()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { input, out } => {
            let st = match load_structure(&input) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let tree = TreeStructure::from_structure(&st).map_err(|e| e.to_string())?;
            let decoded = decode(&tree).map_err(|e| e.to_string())?;
            emit(&out, &print_structure(&decoded))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sigma { input, m, width_from, out } => {
            let st = match load_structure(&input) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let tree = TreeStructure::from_structure(&st).map_err(|e| e.to_string())?;
            let m = match (m, width_from) {
                (Some(m), _) => m,
                (None, Some(path)) => {
                    let text = read(&path)?;
                    let program = match parse_program(&text) {
                        Ok(p) => p,
                        Err(diags) => {
                            report_diagnostics(&path, &diags);
                            return Ok(ExitCode::from(2));
                        }
                    };
                    compute_m(&program)
                }
                (None, None) => return Err("one of --m or --width-from is required".into()),
            };
            let sigma = sigma_structure(&tree, m).map_err(|e| e.to_string())?;
            emit(&out, &print_structure(&sigma))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pistar { program, out } => {
            let text = read(&program)?;
            let parsed = match parse_program(&text) {
                Ok(p) => p,
                Err(diags) => {
                    report_diagnostics(&program, &diags);
                    return Ok(ExitCode::from(2));
                }
            };
            let compiled = compile(&parsed).map_err(|e| e.to_string())?;
            emit(&out, &print_program(&compiled))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyProp6 { program, structure, goal } => {
            let text = read(&program)?;
            let parsed = match parse_program(&text) {
                Ok(p) => p,
                Err(diags) => {
                    report_diagnostics(&program, &diags);
                    return Ok(ExitCode::from(2));
                }
            };
            let st = match load_structure(&structure) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let report =
                verify_prop6(&st, &parsed, goal.as_deref()).map_err(|e| e.to_string())?;
            print!("{}", report.render());
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Check { entries } => {
            let accepted = check(&entries).map_err(|e| e.to_string())?;
            println!("{}", if accepted { "accept" } else { "reject" });
            Ok(ExitCode::SUCCESS)
        }
        Command::Kprime { structure, oracle, c } => {
            let st = match load_structure(&structure) {
                Ok(st) => st,
                Err(code) => return Ok(code),
            };
            let oracle = DemoOracle::from_name(&oracle)
                .ok_or_else(|| format!("unknown oracle `{oracle}`"))?;
            let params = ExtensionParams::new(c);
            let g = GraphStructure::new(st).map_err(|e| e.to_string())?;
            let accepts = |a: &Structure| oracle.accepts(a);
            match membership_kprime(&g, &accepts, &params).map_err(|e| e.to_string())? {
                Membership::Condition1 => println!("member (condition 1)"),
                Membership::Condition2 => println!("member (condition 2)"),
                Membership::NotMember(reason) => {
                    println!("not a member: {reason}");
                    return Ok(ExitCode::from(1));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let results = hornfix::selftest::run();
            print!("{}", hornfix::selftest::render(&results));
            Ok(if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
