use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contrafact::schema::FeatureSchema;
use contrafact::session::Session;
use contrafact::tree::{train_cart, CartParams, Dataset, DecisionTree};
use contrafact_service::http::{router, AppState};
use contrafact_service::regions::regions;
use contrafact_service::script::{describe_paths, Executor};

#[derive(Parser)]
#[command(
    name = "contrafact",
    version,
    about = "Contrastive explanations for decision trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a tree (or train one from CSV) and list its paths.
    Load {
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, requires = "label")]
        data: Option<PathBuf>,
        /// Feature schema JSON for training; defaults to the schema of --tree.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        /// Write the loaded or trained tree here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read commands from stdin, one per line.
    Repl {
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Run a script of REPL lines and print the transcript.
    Solve {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Print the regions of one instance as JSON, after running an optional
    /// setup script.
    Regions {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_tree(path: &Path) -> Result<(DecisionTree, Vec<String>), String> {
    let loaded =
        DecisionTree::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((loaded.tree, loaded.warnings))
}

fn executor(tree: Option<&Path>, base: &Path) -> Result<Executor, String> {
    match tree {
        Some(path) => {
            let (tree, warnings) = load_tree(path)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(Executor::with_base(Session::new(tree), base))
        }
        None => Ok(Executor::new(base)),
    }
}

fn script_dir(script: &Path) -> PathBuf {
    script.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Runs every line, stopping at the first error.
fn run_script(exec: &mut Executor, script: &Path, echo: bool) -> Result<(), String> {
    let text = read(script)?;
    let mut printed = 0;
    for (n, line) in text.lines().enumerate() {
        let result = exec.run_line(line);
        if echo {
            print!("{}", &exec.transcript()[printed..]);
            printed = exec.transcript().len();
        }
        if let Err(e) = result {
            return Err(format!("{}:{}: {e}", script.display(), n + 1));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Cmd::Load {
            tree,
            data,
            schema,
            label,
            max_depth,
            min_leaf,
            out,
        } => {
            let tree = match (data, tree) {
                (Some(data), tree) => {
                    let schema: FeatureSchema = match (schema, tree) {
                        (Some(s), _) => serde_json::from_str(&read(&s)?)
                            .map_err(|e| format!("{}: {e}", s.display()))?,
                        (None, Some(t)) => load_tree(&t)?.0.schema,
                        (None, None) => return Err("training needs --schema or --tree".into()),
                    };
                    let file =
                        fs::File::open(&data).map_err(|e| format!("{}: {e}", data.display()))?;
                    let label = label.expect("clap requires --label with --data");
                    let dataset =
                        Dataset::from_csv(file, &schema, &label).map_err(|e| e.to_string())?;
                    train_cart(
                        &dataset,
                        &schema,
                        CartParams {
                            max_depth,
                            min_leaf,
                        },
                    )
                    .map_err(|e| e.to_string())?
                }
                (None, Some(t)) => {
                    let (tree, warnings) = load_tree(&t)?;
                    for w in warnings {
                        eprintln!("warning: {w}");
                    }
                    tree
                }
                (None, None) => return Err("give --tree or --data".into()),
            };
            if let Some(out) = out {
                fs::write(&out, tree.to_json()).map_err(|e| format!("{}: {e}", out.display()))?;
            }
            let session = Session::new(tree);
            for line in describe_paths(&session) {
                println!("{line}");
            }
            Ok(())
        }
        Cmd::Repl { tree } => {
            let mut exec = executor(tree.as_deref(), Path::new("."))?;
            let stdin = io::stdin();
            let mut stdout = io::stdout();
            for line in stdin.lock().lines() {
                let line = line.map_err(|e| e.to_string())?;
                match exec.run_line(&line) {
                    Ok(Some(outcome)) => {
                        let text = outcome.text();
                        if !text.is_empty() {
                            writeln!(stdout, "{text}").map_err(|e| e.to_string())?;
                        }
                    }
                    Ok(None) => {}
                    Err(e) => eprintln!("error: {e}"),
                }
            }
            Ok(())
        }
        Cmd::Solve { script, tree } => {
            let mut exec = executor(tree.as_deref(), &script_dir(&script))?;
            run_script(&mut exec, &script, true)
        }
        Cmd::Regions {
            instance,
            tree,
            script,
        } => {
            let base = script.as_deref().map(script_dir).unwrap_or_default();
            let mut exec = executor(tree.as_deref(), &base)?;
            if let Some(script) = &script {
                run_script(&mut exec, script, false)?;
            }
            let session = exec
                .session()
                .ok_or("no tree loaded: give --tree or a script with `load`")?;
            let value = regions(session, &instance).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("serializable")
            );
            Ok(())
        }
        Cmd::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| format!("{addr}: {e}"))?;
                eprintln!("listening on http://{addr}");
                axum::serve(listener, router(AppState::default()))
                    .await
                    .map_err(|e| e.to_string())
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
