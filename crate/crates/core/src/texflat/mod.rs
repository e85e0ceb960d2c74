//! Flattening of multi-file LaTeX projects into one source, and rendering of
//! that source to plain text.

pub mod plain;
pub mod scan;

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::corpus::has_tex_extension;
use crate::error::{Error, Result};

pub use plain::{to_plain, ConverterCmd, ConverterKind, PlainText, DEFAULT_CONVERTER};

/// One `\input`/`\include` substitution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inclusion {
    pub directive: String,
    /// Path relative to the project root.
    pub path: PathBuf,
}

/// A project merged into a single LaTeX document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatTex {
    pub paper_id: String,
    pub source: String,
    pub inclusion_log: Vec<Inclusion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FlatTex {
    /// Wraps an in-memory source with no inclusion history.
    pub fn from_source(paper_id: impl Into<String>, source: impl Into<String>) -> Self {
        FlatTex {
            paper_id: paper_id.into(),
            source: source.into(),
            inclusion_log: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MainFile {
    pub path: PathBuf,
    pub warning: Option<String>,
}

/// Reads a `.tex` file as UTF-8, falling back to Latin-1.
pub fn read_tex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}

fn tex_files(root: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && has_tex_extension(e.path()))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

/// Picks the root document of a project.
///
/// The unique file declaring `\documentclass` wins. Among several, files that
/// also contain `\begin{document}` are preferred and ties go to the
/// lexicographically first relative path, with a warning.
pub fn find_main_file(project_root: &Path) -> Result<MainFile> {
    if project_root.is_file() {
        return Ok(MainFile {
            path: project_root.to_path_buf(),
            warning: None,
        });
    }
    let files = tex_files(project_root);
    if files.len() == 1 {
        return Ok(MainFile {
            path: files[0].clone(),
            warning: None,
        });
    }

    let mut with_class = Vec::new();
    for f in &files {
        let text = scan::strip_comments(&read_tex(f)?);
        if scan::find_command(&text, "documentclass", 0).is_some() {
            let has_body = text.contains("\\begin{document}");
            with_class.push((f.clone(), has_body));
        }
    }
    if with_class.is_empty() {
        return Err(Error::NoMainFile(project_root.to_path_buf()));
    }
    if with_class.len() == 1 {
        return Ok(MainFile {
            path: with_class.remove(0).0,
            warning: None,
        });
    }
    let mut best: Vec<PathBuf> = with_class.iter().filter(|(_, b)| *b).map(|(p, _)| p.clone()).collect();
    if best.is_empty() {
        best = with_class.into_iter().map(|(p, _)| p).collect();
    }
    if best.len() == 1 {
        return Ok(MainFile {
            path: best.remove(0),
            warning: None,
        });
    }
    // `files` is sorted, so `best` is too.
    let names: Vec<String> = best.iter().map(|p| rel_display(project_root, p)).collect();
    let warning = format!(
        "several candidate main files ({}); using {}",
        names.join(", "),
        names[0]
    );
    warn!("{warning}");
    Ok(MainFile {
        path: best.remove(0),
        warning: Some(warning),
    })
}

fn rel_display(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).display().to_string()
}

struct Flattener {
    root: PathBuf,
    base_dir: PathBuf,
    stack: Vec<PathBuf>,
    log: Vec<Inclusion>,
    warnings: Vec<String>,
}

/// Merges a LaTeX project into one source by recursively substituting
/// `\input{..}` and `\include{..}` with the referenced file's contents.
///
/// Inserted contents are framed by newlines unless the directive already
/// sits at a line boundary, and lose one trailing newline. Directives inside
/// comments are left alone. A missing target leaves the directive in place
/// and records a warning; an inclusion cycle is an error.
pub fn flatten(project_root: &Path) -> Result<FlatTex> {
    let main = find_main_file(project_root)?;
    let root_dir = if project_root.is_file() {
        project_root.parent().unwrap_or(Path::new(".")).to_path_buf()
    } else {
        project_root.to_path_buf()
    };
    let root = root_dir.canonicalize().map_err(|e| Error::io(&root_dir, e))?;
    let main_path = main.path.canonicalize().map_err(|e| Error::io(&main.path, e))?;
    let base_dir = main_path.parent().unwrap_or(&root).to_path_buf();

    let mut fl = Flattener {
        root,
        base_dir,
        stack: Vec::new(),
        log: Vec::new(),
        warnings: main.warning.into_iter().collect(),
    };
    let source = fl.expand(&main_path)?;

    let paper_id = project_root
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FlatTex {
        paper_id,
        source,
        inclusion_log: fl.log,
        warnings: fl.warnings,
    })
}

impl Flattener {
    fn expand(&mut self, path: &Path) -> Result<String> {
        self.stack.push(path.to_path_buf());
        let text = read_tex(path)?;
        let mut out = String::with_capacity(text.len());

        for line in text.split_inclusive('\n') {
            let code_end = scan::comment_start(line).unwrap_or(line.len());
            let code = &line[..code_end];
            let mut cursor = 0;
            while let Some((pos, name_end, _)) = next_directive(code, cursor) {
                let Some((arg, arg_end)) = scan::brace_arg(code, name_end) else {
                    out.push_str(&code[cursor..name_end]);
                    cursor = name_end;
                    continue;
                };
                out.push_str(&code[cursor..pos]);
                let directive = &code[pos..arg_end];
                cursor = arg_end;

                match self.resolve(arg.trim(), path)? {
                    Some(target) => {
                        let rel = target.strip_prefix(&self.root).unwrap_or(&target).to_path_buf();
                        self.log.push(Inclusion {
                            directive: directive.to_owned(),
                            path: rel,
                        });
                        let inner = self.expand(&target)?;
                        let inner = inner
                            .strip_suffix("\r\n")
                            .or_else(|| inner.strip_suffix('\n'))
                            .unwrap_or(&inner);
                        if !out.is_empty() && !out.ends_with('\n') {
                            out.push('\n');
                        }
                        out.push_str(inner);
                        let rest = &line[cursor..];
                        if !(rest.is_empty() || rest == "\n" || rest == "\r\n") {
                            out.push('\n');
                        }
                    }
                    None => {
                        let msg = format!(
                            "{}: unresolved {directive}; left in place",
                            rel_display(&self.root, path)
                        );
                        warn!("{msg}");
                        self.warnings.push(msg);
                        out.push_str(directive);
                    }
                }
            }
            out.push_str(&line[cursor..]);
        }
        self.stack.pop();
        Ok(out)
    }

    /// Resolves an include name to a file inside the project root. `Ok(None)`
    /// means missing (or outside the root); a target already on the
    /// inclusion stack is a cycle.
    fn resolve(&self, name: &str, including: &Path) -> Result<Option<PathBuf>> {
        if name.is_empty() {
            return Ok(None);
        }
        let has_ext = Path::new(name).extension().is_some();
        let mut names = Vec::new();
        if !has_ext {
            names.push(format!("{name}.tex"));
        }
        names.push(name.to_owned());

        let including_dir = including.parent().unwrap_or(&self.base_dir);
        let dirs = [self.base_dir.as_path(), including_dir];
        for dir in dirs {
            for n in &names {
                let candidate = dir.join(n);
                if !candidate.is_file() {
                    continue;
                }
                let Ok(canon) = candidate.canonicalize() else {
                    continue;
                };
                if !canon.starts_with(&self.root) {
                    continue;
                }
                if let Some(i) = self.stack.iter().position(|p| p == &canon) {
                    let mut chain: Vec<String> = self.stack[i..]
                        .iter()
                        .map(|p| rel_display(&self.root, p))
                        .collect();
                    chain.push(rel_display(&self.root, &canon));
                    return Err(Error::InclusionCycle(chain));
                }
                return Ok(Some(canon));
            }
        }
        Ok(None)
    }
}

fn next_directive(code: &str, from: usize) -> Option<(usize, usize, &'static str)> {
    let a = scan::find_command(code, "input", from).map(|(p, e)| (p, e, "input"));
    let b = scan::find_command(code, "include", from).map(|(p, e)| (p, e, "include"));
    match (a, b) {
        (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
        (x, y) => x.or(y),
    }
}
