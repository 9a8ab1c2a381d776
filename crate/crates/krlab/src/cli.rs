//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::braid::BraidWord;
use crate::complex::braid_homology;
use crate::moy::{builtin_graph, graph_factorization, MoyGraph};
use crate::qamod::{euler_with_tail, GradedQaModule, SliceModule, Tail};
use crate::skein::{Evaluator, SkeinError, SkeinValue};
use crate::verify;

pub const SCHEMA: &str = "krlab/1";

#[derive(Debug, Parser)]
#[command(name = "krlab", version, about = "Transverse Khovanov-Rozansky homology of closed braids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Homology table of the braid closure.
    Homology,
    /// Skein value as exact rational functions and a truncated series.
    Skein,
    /// Both, with the Euler characteristic cross-check.
    Both,
    /// Graded dimension of a MOY graph.
    Gdim,
    /// Built-in acceptance checks.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Opts {
    /// Braid word, e.g. "1 -2 1" or "s1 s2^-1 s1".
    #[arg(long, global = true, default_value = "", allow_hyphen_values = true)]
    pub braid: String,
    /// Number of strands (default: largest index plus one).
    #[arg(long, global = true)]
    pub strands: Option<u32>,
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Width of the x-degree window above the least generator degree.
    #[arg(long, global = true, default_value_t = 20, value_parser = clap::value_parser!(i32).range(0..))]
    pub xwindow: i32,
    #[arg(long, global = true, default_value_t = 12)]
    pub alpha_max: i32,
    #[arg(long, global = true, default_value_t = 12)]
    pub xi_max: i32,
    /// Markov search budget (expansions) before doubling.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// MOY graph file for `gdim`, or `builtin:<name>`.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// Criteria for `verify` (default: all available).
    #[arg(long, global = true, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// Exit status and text to print.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceJson {
    pub eps: u8,
    pub i: i32,
    pub x: i32,
    pub free: Vec<i32>,
    pub torsion: Vec<(u32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailJson {
    pub order: u32,
    pub last: i32,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyJson {
    pub schema: String,
    pub braid: String,
    pub strands: u32,
    pub n: u32,
    pub window: (i32, i32),
    pub slices: Vec<SliceJson>,
    pub tail: TailJson,
}

impl HomologyJson {
    pub fn new(w: &BraidWord, n: u32, m: &GradedQaModule, tail: Tail) -> Self {
        Self {
            schema: SCHEMA.into(),
            braid: w.to_string(),
            strands: w.strands,
            n,
            window: m.window,
            slices: m
                .slices
                .iter()
                .map(|(&(eps, i, x), s)| SliceJson { eps, i, x, free: s.free.clone(), torsion: s.torsion.clone() })
                .collect(),
            tail: TailJson { order: tail.order, last: tail.last, detected: tail.detected },
        }
    }

    pub fn module(&self) -> GradedQaModule {
        let slices: BTreeMap<_, _> = self
            .slices
            .iter()
            .map(|s| ((s.eps, s.i, s.x), SliceModule { free: s.free.clone(), torsion: s.torsion.clone() }))
            .collect();
        GradedQaModule { slices, window: self.window }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeinJson {
    pub schema: String,
    pub braid: String,
    pub strands: u32,
    pub n: u32,
    pub plus: String,
    pub minus: String,
    /// `[α-exp, ξ-exp, coefficient]` of the `τ⁰` and `τ¹` parts.
    pub series: [Vec<(i32, i32, String)>; 2],
}

fn fail(code: i32, msg: impl std::fmt::Display) -> Outcome {
    Outcome { code, stdout: format!("error: {msg}\n") }
}

fn skein_code(e: &SkeinError) -> i32 {
    match e {
        SkeinError::Budget { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn homology_table(m: &GradedQaModule, tail: &Tail) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "window x in [{}, {}]", m.window.0, m.window.1);
    let _ = writeln!(s, "{:>3} {:>4} {:>4}  {:<16} torsion (l,t)", "eps", "i", "x", "free");
    for (&(e, i, x), sl) in &m.slices {
        let free: Vec<String> = sl.free.iter().map(|v| v.to_string()).collect();
        let tor: Vec<String> = sl.torsion.iter().map(|(l, t)| format!("({l},{t})")).collect();
        let _ = writeln!(s, "{e:>3} {i:>4} {x:>4}  {:<16} {}", free.join(" "), tor.join(" "));
    }
    let _ = writeln!(
        s,
        "tail: {}",
        if tail.detected {
            format!("summed with 1/(1-ξ²)^{} (stable after x = {})", tail.order, tail.last)
        } else {
            "not detected; Euler characteristic is the window sum".into()
        }
    );
    s
}

fn series_rows(v: &SkeinValue, a: i32, x: i32) -> Result<[Vec<(i32, i32, String)>; 2], SkeinError> {
    let [even, odd] = v.series(a, x)?;
    let rows = |m: BTreeMap<(i32, i32), crate::poly::Q>| m.into_iter().map(|((a, x), c)| (a, x, c.to_string())).collect();
    Ok([rows(even), rows(odd)])
}

fn skein_text(v: &SkeinValue, series: &[Vec<(i32, i32, String)>; 2], a: i32, x: i32) -> String {
    let mut s = format!("{v}\nseries up to α^{a} ξ^{x}:\n");
    for (label, part) in ["1", "τ"].iter().zip(series) {
        let terms: Vec<String> = part.iter().map(|(a, x, c)| format!("{c}·α^{a}ξ^{x}")).collect();
        let _ = writeln!(s, "  [{label}] {}", if terms.is_empty() { "0".into() } else { terms.join(" + ") });
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn load_graph(path: &std::path::Path) -> Result<MoyGraph, String> {
    let text = path.to_string_lossy();
    if let Some(name) = text.strip_prefix("builtin:") {
        return builtin_graph(name).map_err(|e| e.to_string());
    }
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    MoyGraph::parse(&src).map_err(|e| e.to_string())
}

/// Runs one command; never exits the process.
pub fn run(cli: &Cli) -> Outcome {
    let o = &cli.opts;
    if cli.command == Command::Verify {
        let ids: Vec<u8> = if o.only.is_empty() { verify::CRITERIA.to_vec() } else { o.only.clone() };
        let mut s = String::new();
        let mut ok = true;
        for id in ids {
            let r = verify::run(id);
            ok &= r.passed;
            let _ = writeln!(s, "{r}");
        }
        return Outcome { code: if ok { 0 } else { EXIT_MISMATCH }, stdout: s };
    }
    if cli.command == Command::Gdim {
        let Some(path) = &o.graph else { return fail(EXIT_PARSE, "gdim needs --graph") };
        let g = match load_graph(path) {
            Ok(g) => g,
            Err(e) => return fail(EXIT_PARSE, e),
        };
        return match graph_factorization(&g, o.n).and_then(|m| m.gdim(o.xi_max).map_err(Into::into)) {
            Ok(d) => {
                let stdout = match o.format {
                    Format::Table => format!("{d}\ntotal dimension {}\n", d.total_dim()),
                    Format::Json => {
                        let terms: Vec<(u8, i32, i32, u64)> = d.terms.iter().map(|(k, v)| (k.0, k.1, k.2, *v)).collect();
                        to_json(&serde_json::json!({"schema": SCHEMA, "n": o.n, "x_truncation": d.x_truncation, "terms": terms}))
                    }
                };
                Outcome { code: 0, stdout }
            }
            Err(e) => fail(EXIT_FAILURE, e),
        };
    }

    let w = match BraidWord::parse(&o.braid, o.strands) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let mut out = String::new();
    let mut hom = None;
    if matches!(cli.command, Command::Homology | Command::Both) {
        let m = match braid_homology(&w, o.n, o.xwindow) {
            Ok(m) => m,
            Err(e) => return fail(EXIT_FAILURE, e),
        };
        let (chi, tail) = euler_with_tail(&m, w.components() as u32);
        match o.format {
            Format::Table => out.push_str(&homology_table(&m, &tail)),
            Format::Json if cli.command == Command::Homology => out.push_str(&to_json(&HomologyJson::new(&w, o.n, &m, tail))),
            Format::Json => {}
        }
        hom = Some((m, chi, tail));
    }
    let mut ev = Evaluator::with_budget(o.n, o.budget);
    let value = if matches!(cli.command, Command::Skein | Command::Both) {
        match ev.evaluate(&w) {
            Ok(v) => Some(v),
            Err(e) => return fail(skein_code(&e), e),
        }
    } else {
        None
    };
    let series = match &value {
        Some(v) => match series_rows(v, o.alpha_max, o.xi_max) {
            Ok(s) => Some(s),
            Err(e) => return fail(EXIT_FAILURE, e),
        },
        None => None,
    };
    if let (Some(v), Some(series)) = (&value, &series) {
        match o.format {
            Format::Table => out.push_str(&skein_text(v, series, o.alpha_max, o.xi_max)),
            Format::Json if cli.command == Command::Skein => out.push_str(&to_json(&SkeinJson {
                schema: SCHEMA.into(),
                braid: w.to_string(),
                strands: w.strands,
                n: o.n,
                plus: v.plus.to_string(),
                minus: v.minus.to_string(),
                series: series.clone(),
            })),
            Format::Json => {}
        }
    }
    let mut code = 0;
    if let (Command::Both, Some((m, chi, tail)), Some(v)) = (cli.command, &hom, &value) {
        let verdict = if !tail.detected {
            "UNDETERMINED"
        } else if chi == v {
            "MATCH"
        } else {
            "MISMATCH"
        };
        if verdict != "MATCH" {
            code = EXIT_MISMATCH;
        }
        match o.format {
            Format::Table => {
                let _ = writeln!(out, "euler characteristic:\n{chi}\nverdict: {verdict}");
            }
            Format::Json => out.push_str(&to_json(&serde_json::json!({
                "schema": SCHEMA,
                "homology": HomologyJson::new(&w, o.n, m, *tail),
                "skein": {"plus": v.plus.to_string(), "minus": v.minus.to_string()},
                "euler": {"plus": chi.plus.to_string(), "minus": chi.minus.to_string()},
                "verdict": verdict,
            }))),
        }
    }
    Outcome { code, stdout: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("krlab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let c = cli(&["skein"]);
        assert_eq!((c.opts.n, c.opts.xwindow, c.opts.alpha_max, c.opts.xi_max, c.opts.budget), (1, 20, 12, 12, 10_000));
        assert_eq!(c.opts.format, Format::Table);
        assert!(Cli::try_parse_from(["krlab", "skein", "--n", "0"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(&cli(&["skein", "--braid", "1 x"])).code, EXIT_PARSE);
        assert_eq!(run(&cli(&["skein", "--braid", "2", "--strands", "2"])).code, EXIT_PARSE);
        assert_eq!(run(&cli(&["gdim"])).code, EXIT_PARSE);
        let ok = run(&cli(&["skein", "--braid", "-1", "--strands", "2"]));
        assert_eq!(ok.code, 0);
        assert!(ok.stdout.contains("τ=+1"));
    }

    #[test]
    fn both_matches_on_trefoil() {
        let o = run(&cli(&["both", "--braid", "1 1 1", "--strands", "2", "--n", "1"]));
        assert_eq!(o.code, 0, "{}", o.stdout);
        assert!(o.stdout.contains("verdict: MATCH"));
    }

    #[test]
    fn homology_json_roundtrips() {
        let o = run(&cli(&["homology", "--braid", "", "--strands", "1", "--n", "2", "--xwindow", "10", "--format", "json"]));
        assert_eq!(o.code, 0);
        let back: HomologyJson = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(back.schema, SCHEMA);
        let m = back.module();
        assert_eq!(m.slices, verify::expected_unknot(2, m.window));
        assert_eq!(to_json(&back), o.stdout);
    }

    #[test]
    fn gdim_builtin() {
        let o = run(&cli(&["gdim", "--graph", "builtin:r3-gamma", "--n", "2"]));
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("total dimension 16"));
    }
}
