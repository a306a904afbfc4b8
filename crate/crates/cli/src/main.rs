use clap::{Parser, Subcommand, ValueEnum};
use mlgraph_core::graph::{diff, from_json, serialize, OutputFormat};
use mlgraph_core::{analyze, evaluate, AnalysisConfig, GroundTruth, Mode, UnresolvedPolicy};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: u8 = 1;
const FATAL: u8 = 2;

#[derive(Parser)]
#[command(name = "mlgraph", version, about = "Dependency graphs for multilanguage web applications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Dot,
    Graphml,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnresolvedArg {
    Drop,
    Placeholder,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the dependency graph of a project directory.
    Analyze {
        root: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Graph output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        web_root: Option<PathBuf>,
        /// Json file of extra tag rules.
        #[arg(long)]
        tag_rules: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "drop")]
        unresolved: UnresolvedArg,
        #[arg(long)]
        dump_lowered: Option<PathBuf>,
        /// Write the analysis report (Json) here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Do not print the summary table on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare two Json graphs (a = reference, b = candidate).
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Print the delta as Json.
        #[arg(long)]
        json: bool,
    },
    /// Score a Json graph against a truth file of `source -> target [Kind]` lines.
    Eval {
        graph: PathBuf,
        truth: PathBuf,
        /// Also write the report as Json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("mlgraph: {msg}");
    ExitCode::from(FATAL)
}

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), ExitCode> {
    let r = match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => match std::io::stdout().write_all(bytes) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| e.to_string()),
        },
    };
    r.map_err(fail)
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Analyze { root, mode, format, out, web_root, tag_rules, unresolved, dump_lowered, report, quiet } => {
            let config = AnalysisConfig {
                root,
                web_root,
                mode: match mode {
                    ModeArg::Full => Mode::Full,
                    ModeArg::Baseline => Mode::Baseline,
                },
                unresolved: match unresolved {
                    UnresolvedArg::Drop => UnresolvedPolicy::Drop,
                    UnresolvedArg::Placeholder => UnresolvedPolicy::Placeholder,
                },
                tag_rules,
                dump_lowered,
            };
            let analysis = analyze(&config).map_err(fail)?;
            let format = match format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Dot => OutputFormat::Dot,
                FormatArg::Graphml => OutputFormat::GraphMl,
            };
            let mut buf = Vec::new();
            serialize(&analysis.graph, format, &mut buf).map_err(fail)?;
            write_out(out.as_deref(), &buf)?;
            let r = &analysis.report;
            if let Some(p) = report {
                let json = serde_json::to_string_pretty(r).map_err(fail)?;
                write_out(Some(&p), json.as_bytes())?;
            }
            if !quiet {
                eprintln!("files           {}", r.files);
                eprintln!("entities        {}", r.entities);
                eprintln!("relationships   {}", r.relationships);
                eprintln!("multilanguage   {}", r.multilanguage_percent);
                eprintln!("literals w/ dep {}", r.literals.project);
                eprintln!("el expressions  {}", r.el_expressions);
                eprintln!("diagnostics     {}", r.diagnostics.len());
            }
            Ok(())
        }
        Command::Diff { a, b, json } => {
            let ga = from_json(&read(&a)?).map_err(|e| fail(format!("{}: {e}", a.display())))?;
            let gb = from_json(&read(&b)?).map_err(|e| fail(format!("{}: {e}", b.display())))?;
            let d = diff(&ga, &gb).map_err(fail)?;
            if json {
                let text = serde_json::to_string_pretty(&d).map_err(fail)?;
                write_out(None, format!("{text}\n").as_bytes())?;
            } else {
                let mut t = String::new();
                t += &format!("{:<14}{:>8}{:>8}{:>10}{:>10}{:>13}\n", "store", "a", "b", "only-in-a", "only-in-b", "improvement");
                t += &format!(
                    "{:<14}{:>8}{:>8}{:>10}{:>10}{:>12}%\n",
                    "entities",
                    d.entities.count_a,
                    d.entities.count_b,
                    d.entities.only_in_a.len(),
                    d.entities.only_in_b.len(),
                    d.entities.improvement_percent()
                );
                t += &format!(
                    "{:<14}{:>8}{:>8}{:>10}{:>10}{:>12}%\n",
                    "relationships",
                    d.relationships.count_a,
                    d.relationships.count_b,
                    d.relationships.only_in_a.len(),
                    d.relationships.only_in_b.len(),
                    d.relationships.improvement_percent()
                );
                write_out(None, t.as_bytes())?;
            }
            Ok(())
        }
        Command::Eval { graph, truth, out } => {
            let g = from_json(&read(&graph)?).map_err(|e| fail(format!("{}: {e}", graph.display())))?;
            let t = GroundTruth::parse(&read(&truth)?).map_err(|e| fail(format!("{}: {e}", truth.display())))?;
            let report = evaluate(&g, &t);
            write_out(None, report.to_string().as_bytes())?;
            if let Some(p) = out {
                let json = serde_json::to_string_pretty(&report).map_err(fail)?;
                write_out(Some(&p), json.as_bytes())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
