//! The `.rx` command language shared by the REPL, batch scripts and the
//! HTTP transcript.
//!
//! ```text
//! load adult_tree.json
//! instance F label=<=50K race=Black age=19
//! instance CE label=>50K minconf=0.8
//! constraint CE.age = F.age
//! retract F.age=19.0            # or: retract #3
//! solveopt minimize=l1norm(F, CE) project=[CE, F.age] verbose=2
//! paths CE
//! regions CE
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use contrafact::rational::{self, format_confidence};
use contrafact::schema::Row;
use contrafact::session::{render_result, Constraint, Query, QueryResult, Session, SessionError};
use contrafact::tree::{render_rule, DecisionTree, TreeError, TEMPLATE_INSTANCE};
use serde_json::Value;

use crate::regions::regions;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetractTarget {
    Id(u64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Load {
        path: String,
    },
    Instance {
        name: String,
        features: Vec<(String, String)>,
        label: Option<String>,
        minconf: Option<String>,
    },
    Constraint {
        text: String,
    },
    Retract {
        target: RetractTarget,
    },
    Solveopt {
        minimize: Option<String>,
        project: Option<Vec<String>>,
        verbose: u8,
    },
    Paths {
        instance: Option<String>,
    },
    Regions {
        instance: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("{0}")]
    Syntax(String),
    #[error("no tree loaded")]
    NoTree,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Splits on whitespace outside brackets, parentheses and quotes.
fn tokens(text: &str) -> Result<Vec<String>, ExecError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0i32;
    let mut quote = None;
    for c in text.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => {
                quote = None;
                current.push(c);
            }
            (Some(_), c) => current.push(c),
            (None, '\'' | '"') => {
                quote = Some(c);
                current.push(c);
            }
            (None, '(' | '[') => {
                depth += 1;
                current.push(c);
            }
            (None, ')' | ']') => {
                depth -= 1;
                current.push(c);
            }
            (None, c) if c.is_whitespace() && depth == 0 => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            (None, c) => current.push(c),
        }
    }
    if quote.is_some() || depth != 0 {
        return Err(ExecError::Syntax(format!(
            "unbalanced brackets or quotes in `{text}`"
        )));
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

fn unquote(text: &str) -> String {
    let t = text.trim();
    for q in ['\'', '"'] {
        if let Some(inner) = t.strip_prefix(q).and_then(|s| s.strip_suffix(q)) {
            return inner.to_string();
        }
    }
    t.to_string()
}

fn key_value(token: &str) -> Result<(&str, &str), ExecError> {
    token
        .split_once('=')
        .ok_or_else(|| ExecError::Syntax(format!("expected key=value, got `{token}`")))
}

fn parse_list(text: &str) -> Result<Vec<String>, ExecError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| ExecError::Syntax(format!("expected [a, b, ...], got `{text}`")))?;
    Ok(inner
        .split(',')
        .map(unquote)
        .filter(|s| !s.is_empty())
        .collect())
}

impl Command {
    /// Parses one line; `None` for blank lines and `#` comments.
    pub fn parse(line: &str) -> Result<Option<Command>, ExecError> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(None);
        }
        let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let cmd = match word {
            "load" if !rest.is_empty() => Command::Load {
                path: unquote(rest),
            },
            "constraint" if !rest.is_empty() => Command::Constraint {
                text: unquote(rest),
            },
            "retract" if !rest.is_empty() => {
                let target = match rest.strip_prefix('#').map(|id| id.trim().parse::<u64>()) {
                    Some(Ok(id)) => RetractTarget::Id(id),
                    Some(Err(_)) => {
                        return Err(ExecError::Syntax(format!("bad constraint id `{rest}`")))
                    }
                    None => RetractTarget::Text(unquote(rest)),
                };
                Command::Retract { target }
            }
            "instance" => {
                let toks = tokens(rest)?;
                let (name, args) = toks
                    .split_first()
                    .ok_or_else(|| ExecError::Syntax("instance needs a name".into()))?;
                let (mut features, mut label, mut minconf) = (Vec::new(), None, None);
                for tok in args {
                    let (k, v) = key_value(tok)?;
                    match k {
                        "label" => label = Some(unquote(v)),
                        "minconf" => minconf = Some(unquote(v)),
                        _ => features.push((k.to_string(), unquote(v))),
                    }
                }
                Command::Instance {
                    name: unquote(name),
                    features,
                    label,
                    minconf,
                }
            }
            "solveopt" => {
                let (mut minimize, mut project, mut verbose) = (None, None, 1);
                for tok in tokens(rest)? {
                    let (k, v) = key_value(&tok)?;
                    match k {
                        "minimize" => minimize = Some(unquote(v)),
                        "project" => project = Some(parse_list(v)?),
                        "verbose" => {
                            verbose = v.parse::<u8>().ok().filter(|v| *v <= 2).ok_or_else(|| {
                                ExecError::Syntax(format!("verbose must be 0, 1 or 2, got `{v}`"))
                            })?
                        }
                        _ => {
                            return Err(ExecError::Syntax(format!("unknown solveopt option `{k}`")))
                        }
                    }
                }
                Command::Solveopt {
                    minimize,
                    project,
                    verbose,
                }
            }
            "paths" => Command::Paths {
                instance: (!rest.is_empty()).then(|| unquote(rest)),
            },
            "regions" if !rest.is_empty() => Command::Regions {
                instance: unquote(rest),
            },
            _ => return Err(ExecError::Syntax(format!("unrecognized command `{line}`"))),
        };
        Ok(Some(cmd))
    }
}

impl fmt::Display for Command {
    /// Canonical line form; [`Command::parse`] reads it back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Load { path } => write!(f, "load {path}"),
            Command::Instance {
                name,
                features,
                label,
                minconf,
            } => {
                write!(f, "instance {name}")?;
                if let Some(l) = label {
                    write!(f, " label={l}")?;
                }
                if let Some(m) = minconf {
                    write!(f, " minconf={m}")?;
                }
                for (k, v) in features {
                    if v.contains(char::is_whitespace) {
                        write!(f, " {k}='{v}'")?;
                    } else {
                        write!(f, " {k}={v}")?;
                    }
                }
                Ok(())
            }
            Command::Constraint { text } => write!(f, "constraint {text}"),
            Command::Retract {
                target: RetractTarget::Id(id),
            } => write!(f, "retract #{id}"),
            Command::Retract {
                target: RetractTarget::Text(t),
            } => write!(f, "retract {t}"),
            Command::Solveopt {
                minimize,
                project,
                verbose,
            } => {
                write!(f, "solveopt")?;
                if let Some(m) = minimize {
                    write!(f, " minimize={m}")?;
                }
                if let Some(p) = project {
                    write!(f, " project=[{}]", p.join(", "))?;
                }
                write!(f, " verbose={verbose}")
            }
            Command::Paths { instance: None } => write!(f, "paths"),
            Command::Paths { instance: Some(i) } => write!(f, "paths {i}"),
            Command::Regions { instance } => write!(f, "regions {instance}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Loaded { paths: usize, warnings: Vec<String> },
    Declared { name: String },
    Added { id: u64 },
    Retracted(Constraint),
    Solved { result: QueryResult, verbose: u8 },
    Paths(Vec<String>),
    Regions(Value),
}

impl Outcome {
    pub fn text(&self) -> String {
        match self {
            Outcome::Loaded { paths, warnings } => {
                let mut lines = vec![format!("Loaded tree with {paths} paths.")];
                lines.extend(warnings.iter().map(|w| format!("warning: {w}")));
                lines.join("\n")
            }
            Outcome::Declared { name } => format!("Instance {name} declared."),
            Outcome::Added { id } => format!("Constraint #{id} added."),
            Outcome::Retracted(c) => format!("Constraint #{} retracted: {}", c.id, c.text),
            Outcome::Solved { result, verbose } => render_result(result, *verbose),
            Outcome::Paths(lines) => lines.join("\n"),
            Outcome::Regions(v) => serde_json::to_string_pretty(v).expect("serializable"),
        }
    }
}

/// A session plus the transcript of every command run against it.
pub struct Executor {
    session: Option<Session>,
    base_dir: PathBuf,
    transcript: String,
}

impl Executor {
    /// `load` paths resolve against `base_dir`.
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Executor {
            session: None,
            base_dir: base_dir.into(),
            transcript: String::new(),
        }
    }

    pub fn with_session(session: Session) -> Self {
        Self::with_base(session, ".")
    }

    pub fn with_base(session: Session, base_dir: impl Into<PathBuf>) -> Self {
        Executor {
            session: Some(session),
            base_dir: base_dir.into(),
            transcript: String::new(),
        }
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    /// `> command` echo lines followed by each command's output.
    pub fn transcript(&self) -> &str {
        &self.transcript
    }

    /// Parses and runs one line, appending the echo and the outcome (or the
    /// error) to the transcript.
    pub fn run_line(&mut self, line: &str) -> Result<Option<Outcome>, ExecError> {
        match Command::parse(line) {
            Ok(Some(cmd)) => self.run(&cmd).map(Some),
            Ok(None) => Ok(None),
            Err(e) => {
                self.record(line.trim(), &format!("error: {e}"));
                Err(e)
            }
        }
    }

    pub fn run(&mut self, cmd: &Command) -> Result<Outcome, ExecError> {
        let outcome = self.apply(cmd);
        let text = match &outcome {
            Ok(o) => o.text(),
            Err(e) => format!("error: {e}"),
        };
        self.record(&cmd.to_string(), &text);
        outcome
    }

    fn record(&mut self, line: &str, text: &str) {
        self.transcript.push_str("> ");
        self.transcript.push_str(line);
        self.transcript.push('\n');
        if !text.is_empty() {
            self.transcript.push_str(text);
            self.transcript.push('\n');
        }
    }

    fn session_mut(&mut self) -> Result<&mut Session, ExecError> {
        self.session.as_mut().ok_or(ExecError::NoTree)
    }

    fn apply(&mut self, cmd: &Command) -> Result<Outcome, ExecError> {
        match cmd {
            Command::Load { path } => {
                let full = resolve(&self.base_dir, path);
                let text = std::fs::read_to_string(&full).map_err(|e| ExecError::Io {
                    path: full.display().to_string(),
                    message: e.to_string(),
                })?;
                let loaded = DecisionTree::from_json(&text)?;
                let session = Session::new(loaded.tree);
                let paths = session.paths().len();
                self.session = Some(session);
                Ok(Outcome::Loaded {
                    paths,
                    warnings: loaded.warnings,
                })
            }
            Command::Instance {
                name,
                features,
                label,
                minconf,
            } => {
                let session = self.session_mut()?;
                let mut row = Row::new();
                for (k, v) in features {
                    row.insert(
                        k.clone(),
                        session
                            .schema()
                            .parse_value(k, v)
                            .map_err(SessionError::from)?,
                    );
                }
                let minconf = match minconf {
                    None => None,
                    Some(m) => Some(
                        rational::parse_rational(m)
                            .ok_or_else(|| SessionError::BadMinconf(m.clone()))?,
                    ),
                };
                session.declare_instance(name, row, label.clone(), minconf)?;
                Ok(Outcome::Declared { name: name.clone() })
            }
            Command::Constraint { text } => Ok(Outcome::Added {
                id: self.session_mut()?.add_constraint(text)?,
            }),
            Command::Retract { target } => {
                let session = self.session_mut()?;
                let removed = match target {
                    RetractTarget::Id(id) => session.retract_id(*id)?,
                    RetractTarget::Text(t) => session.retract_text(t)?,
                };
                Ok(Outcome::Retracted(removed))
            }
            Command::Solveopt {
                minimize,
                project,
                verbose,
            } => {
                let session = self.session_mut()?;
                let query = Query::new(minimize.as_deref(), project.as_deref())?;
                Ok(Outcome::Solved {
                    result: session.solveopt(&query)?,
                    verbose: *verbose,
                })
            }
            Command::Paths { instance } => {
                let session = self.session_mut()?;
                let name = instance.as_deref().unwrap_or(TEMPLATE_INSTANCE);
                Ok(Outcome::Paths(
                    session
                        .paths()
                        .iter()
                        .map(|p| {
                            format!(
                                "Path {}: {}",
                                p.path_id,
                                render_rule(p, session.schema(), name)
                            )
                        })
                        .collect(),
                ))
            }
            Command::Regions { instance } => {
                Ok(Outcome::Regions(regions(self.session_mut()?, instance)?))
            }
        }
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Path listing used by `load` on the command line.
pub fn describe_paths(session: &Session) -> Vec<String> {
    session
        .paths()
        .iter()
        .map(|p| {
            format!(
                "Path {}: {} (support {}, confidence {})",
                p.path_id,
                render_rule(p, session.schema(), TEMPLATE_INSTANCE),
                p.support,
                format_confidence(&p.confidence)
            )
        })
        .collect()
}
