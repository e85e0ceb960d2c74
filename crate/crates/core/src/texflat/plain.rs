//! LaTeX to plain text.
//!
//! The external converter (default `pandoc --to=plain`) is the fidelity
//! path. The built-in fallback is a markup stripper: it drops the preamble
//! and comments, keeps the text of mandatory arguments, renders tabular rows
//! as `cell | cell` lines and expands no macros.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::scan;
use super::FlatTex;
use crate::error::{Error, Result};

pub const DEFAULT_CONVERTER: &str = "pandoc --to=plain";

/// An external converter: a program plus arguments. LaTeX goes in on stdin,
/// UTF-8 text comes out on stdout, and a nonzero exit is a failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConverterCmd {
    pub program: String,
    pub args: Vec<String>,
}

impl ConverterCmd {
    /// Splits a command template on whitespace.
    pub fn parse(template: &str) -> Result<Self> {
        let mut parts = template.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty converter command".into()))?;
        Ok(ConverterCmd {
            program,
            args: parts.collect(),
        })
    }

    pub fn display(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn run(&self, input: &str) -> Result<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ConverterFailed {
                command: self.display(),
                status: "spawn failed".into(),
                stderr: e.to_string(),
            })?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload = input.as_bytes().to_vec();
        // Feed stdin from a thread so a chatty converter cannot deadlock on a full pipe.
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(&payload);
        });
        let mut stdout = Vec::new();
        let mut stderr = Vec::new();
        if let Some(mut out) = child.stdout.take() {
            let _ = out.read_to_end(&mut stdout);
        }
        if let Some(mut err) = child.stderr.take() {
            let _ = err.read_to_end(&mut stderr);
        }
        let _ = writer.join();
        let status = child.wait().map_err(|e| Error::ConverterFailed {
            command: self.display(),
            status: "wait failed".into(),
            stderr: e.to_string(),
        })?;
        if !status.success() {
            return Err(Error::ConverterFailed {
                command: self.display(),
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&stderr).trim().to_owned(),
            });
        }
        Ok(String::from_utf8_lossy(&stdout).into_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConverterKind {
    External,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainText {
    pub paper_id: String,
    pub text: String,
    pub word_count: usize,
    pub converter: ConverterKind,
}

/// Renders a flattened document to plain text, through `converter` when
/// given and the built-in stripper otherwise.
pub fn to_plain(flat: &FlatTex, converter: Option<&ConverterCmd>) -> Result<PlainText> {
    if flat.source.trim().is_empty() {
        return Err(Error::EmptyRendering(flat.paper_id.clone()));
    }
    let (text, kind) = match converter {
        Some(cmd) => (cmd.run(&flat.source)?.trim().to_owned(), ConverterKind::External),
        None => (strip_latex(&flat.source), ConverterKind::Fallback),
    };
    if text.is_empty() {
        return Err(Error::EmptyRendering(flat.paper_id.clone()));
    }
    Ok(PlainText {
        paper_id: flat.paper_id.clone(),
        word_count: scan::word_count(&text),
        text,
        converter: kind,
    })
}

/// The built-in stripper applied to a whole document.
pub fn strip_latex(source: &str) -> String {
    let src = scan::strip_comments(source);
    let (preamble, body) = scan::split_document(&src);
    let title = document_title(preamble).or_else(|| document_title(body));
    let mut s = Stripper { title };
    normalize(&s.fragment(body))
}

/// `\title[..]{..}` argument, raw.
pub(crate) fn document_title(src: &str) -> Option<String> {
    let (_, after) = scan::find_command(src, "title", 0)?;
    let mut p = after;
    if let Some((_, end)) = scan::bracket_arg(src, p) {
        p = end;
    }
    scan::brace_arg(src, p).map(|(t, _)| t.to_owned())
}

/// Commands whose arguments carry no prose; the command and every argument
/// group directly attached to it are dropped.
const DROP_WITH_ARGS: &[&str] = &[
    "label", "ref", "eqref", "autoref", "cref", "Cref", "pageref", "nameref", "cite", "citep",
    "citet", "citealp", "citealt", "citeauthor", "citeyear", "nocite", "includegraphics",
    "vspace", "hspace", "vskip", "hskip", "bibliographystyle", "bibliography", "usepackage",
    "documentclass", "newcommand", "renewcommand", "providecommand", "newenvironment",
    "renewenvironment", "DeclareMathOperator", "setlength", "addtolength", "setcounter",
    "addtocounter", "input", "include", "hypersetup", "graphicspath", "newtheorem", "pagestyle",
    "thispagestyle", "cline", "cmidrule", "title", "author", "date", "affiliation", "address",
    "email", "thanks", "footnotemark", "arrayrulecolor", "rowcolor", "cellcolor", "def",
    "definecolor", "captionsetup", "bibitem",
];

/// Commands whose last argument is the visible text.
const KEEP_LAST_ARG: &[&str] = &[
    "multicolumn", "multirow", "textcolor", "colorbox", "fcolorbox", "href", "raisebox",
    "resizebox", "scalebox", "makebox", "parbox", "rotatebox", "adjustbox",
];

const HEADINGS: &[&str] = &[
    "part", "chapter", "section", "subsection", "subsubsection", "paragraph", "subparagraph",
];

const TABULAR_ENVS: &[&str] = &["tabular", "tabular*", "tabularx", "tabulary", "longtable", "array"];

/// Extra mandatory arguments carried by `\begin{env}`.
fn env_arg_count(env: &str) -> usize {
    match env {
        "minipage" | "multicols" | "thebibliography" | "adjustbox" => 1,
        "wrapfigure" | "wraptable" => 2,
        _ => 0,
    }
}

struct Stripper {
    title: Option<String>,
}

impl Stripper {
    fn fragment(&mut self, src: &str) -> String {
        let bytes = src.as_bytes();
        let mut out = String::with_capacity(src.len());
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' => i = self.command(src, i, &mut out),
                b'{' | b'}' | b'$' => i += 1,
                b'~' => {
                    out.push(' ');
                    i += 1;
                }
                b'&' => {
                    out.push(' ');
                    i += 1;
                }
                b'`' if bytes.get(i + 1) == Some(&b'`') => {
                    out.push('"');
                    i += 2;
                }
                b'\'' if bytes.get(i + 1) == Some(&b'\'') => {
                    out.push('"');
                    i += 2;
                }
                _ => {
                    let c = src[i..].chars().next().unwrap();
                    out.push(c);
                    i += c.len_utf8();
                }
            }
        }
        out
    }

    /// Handles the command whose backslash is at `pos`; returns the offset
    /// after everything it consumed.
    fn command(&mut self, src: &str, pos: usize, out: &mut String) -> usize {
        let Some((name, mut p)) = scan::command_name(src, pos) else {
            return pos + 1;
        };
        match name {
            "\\" => {
                out.push('\n');
                if src.as_bytes().get(p) == Some(&b'*') {
                    p += 1;
                }
                skip_adjacent_bracket(src, p)
            }
            "%" | "&" | "$" | "#" | "_" | "{" | "}" => {
                out.push_str(name);
                p
            }
            " " | "," | ";" | ":" | ">" | "quad" | "qquad" | "enspace" | "\n" => {
                out.push(' ');
                p
            }
            "begin" => self.begin(src, p, out),
            "end" => {
                out.push('\n');
                scan::brace_arg(src, p).map(|(_, e)| e).unwrap_or(p)
            }
            "item" => {
                out.push('\n');
                skip_adjacent_bracket(src, p)
            }
            "par" | "newline" | "linebreak" | "newpage" | "clearpage" => {
                out.push_str(if name == "par" { "\n\n" } else { "\n" });
                p
            }
            "maketitle" => {
                if let Some(t) = self.title.clone() {
                    out.push_str("\n\n");
                    out.push_str(&self.fragment(&t));
                    out.push_str("\n\n");
                }
                p
            }
            "verb" => {
                let Some(delim) = src[p..].chars().next() else {
                    return p;
                };
                let start = p + delim.len_utf8();
                let end = src[start..].find(delim).map(|r| start + r).unwrap_or(src.len());
                out.push_str(&src[start..end].replace('\\', ""));
                (end + delim.len_utf8()).min(src.len())
            }
            "url" => match scan::brace_arg(src, p) {
                Some((u, e)) => {
                    out.push_str(&u.replace('\\', ""));
                    e
                }
                None => p,
            },
            n if HEADINGS.contains(&n) => {
                if src.as_bytes().get(p) == Some(&b'*') {
                    p += 1;
                }
                if let Some((_, e)) = scan::bracket_arg(src, p) {
                    p = e;
                }
                match scan::brace_arg(src, p) {
                    Some((heading, e)) => {
                        out.push_str("\n\n");
                        out.push_str(self.fragment(heading).trim());
                        out.push_str("\n\n");
                        e
                    }
                    None => p,
                }
            }
            n if DROP_WITH_ARGS.contains(&n) => skip_all_args(src, p).1,
            n if KEEP_LAST_ARG.contains(&n) => {
                let (args, end) = skip_all_args(src, p);
                if let Some(last) = args.last() {
                    out.push_str(&self.fragment(last));
                }
                end
            }
            n if n.chars().all(|c| c.is_ascii_alphabetic()) => {
                if src.as_bytes().get(p) == Some(&b'*') {
                    p += 1;
                }
                skip_adjacent_bracket(src, p)
            }
            // Accents and other control symbols: drop the symbol, keep what follows.
            _ => p,
        }
    }

    fn begin(&mut self, src: &str, p: usize, out: &mut String) -> usize {
        let Some((env, mut q)) = scan::brace_arg(src, p) else {
            return p;
        };
        let env = env.trim().to_owned();
        if TABULAR_ENVS.contains(&env.as_str()) {
            return self.tabular(src, &env, p, out);
        }
        if matches!(env.as_str(), "comment" | "document") {
            if env == "comment" {
                if let Some((_, _, _, end)) = scan::find_environment(src, "comment", p - "\\begin".len()) {
                    return end;
                }
            }
            return q;
        }
        out.push('\n');
        q = skip_adjacent_bracket(src, q);
        for _ in 0..env_arg_count(&env) {
            if let Some((_, e)) = scan::brace_arg(src, q) {
                q = e;
            }
        }
        q
    }

    /// Renders a tabular environment whose `\begin` name ends at `p`.
    fn tabular(&mut self, src: &str, env: &str, p: usize, out: &mut String) -> usize {
        let begin = p - "\\begin".len();
        let Some((_, _, body_end, end)) = scan::find_environment(src, env, begin) else {
            // Unterminated: drop the \begin{..} and carry on.
            return scan::brace_arg(src, p).map(|(_, e)| e).unwrap_or(p);
        };
        let mut q = scan::brace_arg(src, p).map(|(_, e)| e).unwrap_or(p);
        q = skip_adjacent_bracket(src, q);
        let spec_args = if matches!(env, "tabular*" | "tabularx" | "tabulary") { 2 } else { 1 };
        for _ in 0..spec_args {
            if let Some((_, e)) = scan::brace_arg(src, q) {
                q = e;
            }
        }
        let body = &src[q.min(body_end)..body_end];
        let rows = self.table_rows(body);
        if !rows.is_empty() {
            out.push('\n');
            out.push_str(&rows.join("\n"));
            out.push('\n');
        }
        end
    }

    fn table_rows(&mut self, body: &str) -> Vec<String> {
        let mut rows = Vec::new();
        for raw_row in split_top_level(body, RowOrCell::Row) {
            let raw_row = raw_row.trim_start();
            let raw_row = match scan::balanced(raw_row, 0, b'[', b']') {
                Some((_, _, e)) => &raw_row[e..],
                None => raw_row,
            };
            let cells: Vec<String> = split_top_level(raw_row, RowOrCell::Cell)
                .into_iter()
                .map(|c| collapse_ws(&self.fragment(c)))
                .collect();
            if cells.iter().all(String::is_empty) {
                continue;
            }
            rows.push(cells.join(" | "));
        }
        rows
    }
}

#[derive(Clone, Copy, PartialEq)]
enum RowOrCell {
    Row,
    Cell,
}

/// Splits tabular content on `\\` (rows) or `&` (cells) outside braces.
fn split_top_level(src: &str, what: RowOrCell) -> Vec<&str> {
    let bytes = src.as_bytes();
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => {
                if what == RowOrCell::Row && depth == 0 {
                    if bytes.get(i + 1) == Some(&b'\\') {
                        parts.push(&src[start..i]);
                        i += 2;
                        start = i;
                        continue;
                    }
                    if src[i..].starts_with("\\tabularnewline") {
                        parts.push(&src[start..i]);
                        i += "\\tabularnewline".len();
                        start = i;
                        continue;
                    }
                }
                i += 2;
                continue;
            }
            b'{' => depth += 1,
            b'}' => depth -= 1,
            b'&' if what == RowOrCell::Cell && depth == 0 => {
                parts.push(&src[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    parts.push(&src[start.min(src.len())..]);
    parts
}

fn skip_adjacent_bracket(src: &str, p: usize) -> usize {
    match scan::balanced(src, p, b'[', b']') {
        Some((_, _, e)) => e,
        None => p,
    }
}

/// Consumes `*`, `[..]`, `(..)` and `{..}` groups attached to a command. The
/// first group may follow whitespace; later ones must be adjacent.
fn skip_all_args(src: &str, mut p: usize) -> (Vec<&str>, usize) {
    let mut args = Vec::new();
    if src.as_bytes().get(p) == Some(&b'*') {
        p += 1;
    }
    let mut first = true;
    loop {
        let q = if first { scan::skip_arg_ws(src, p) } else { p };
        let group = scan::balanced(src, q, b'{', b'}')
            .map(|g| (g, true))
            .or_else(|| scan::balanced(src, q, b'[', b']').map(|g| (g, false)))
            .or_else(|| scan::balanced(src, q, b'(', b')').map(|g| (g, false)));
        match group {
            Some(((s, e, end), mandatory)) => {
                if mandatory {
                    args.push(&src[s..e]);
                }
                p = end;
                first = false;
            }
            None => break,
        }
    }
    (args, p)
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Collapses horizontal whitespace runs, trims lines, squeezes blank-line
/// runs to one and trims the result.
pub(crate) fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut blank_run = 0;
    for line in s.lines() {
        let line = collapse_ws(line);
        if line.is_empty() {
            blank_run += 1;
            continue;
        }
        if !out.is_empty() {
            out.push_str(if blank_run > 0 { "\n\n" } else { "\n" });
        }
        blank_run = 0;
        out.push_str(&line);
    }
    out
}
