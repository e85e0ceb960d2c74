//! Low-level LaTeX lexing helpers shared by the flattener, the plain-text
//! stripper and the section extractor. All positions are byte offsets.

/// Byte offset of the comment-starting `%` in `line`, if any.
pub fn comment_start(line: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'%' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

/// Removes `%` comments. Lines holding only a comment disappear entirely;
/// other lines keep their code and newline.
pub fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.split_inclusive('\n') {
        match comment_start(line) {
            Some(pos) => {
                let kept = &line[..pos];
                if !kept.trim().is_empty() {
                    out.push_str(kept);
                    if line.ends_with('\n') {
                        out.push('\n');
                    }
                }
            }
            None => out.push_str(line),
        }
    }
    out
}

/// True when the backslash at `pos` starts a command, i.e. it is not the
/// second half of an escaped `\\`.
pub fn is_command_start(src: &str, pos: usize) -> bool {
    let bytes = src.as_bytes();
    let mut run = 0;
    let mut i = pos;
    while i > 0 && bytes[i - 1] == b'\\' {
        run += 1;
        i -= 1;
    }
    run % 2 == 0
}

/// Reads a command name (`\name` letters, or a single non-letter) starting at
/// the backslash `pos`. Returns the name and the offset just past it.
pub fn command_name(src: &str, pos: usize) -> Option<(&str, usize)> {
    let rest = src.get(pos + 1..)?;
    let letters = rest
        .char_indices()
        .find(|(_, c)| !c.is_ascii_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    if letters > 0 {
        return Some((&rest[..letters], pos + 1 + letters));
    }
    let c = rest.chars().next()?;
    Some((&rest[..c.len_utf8()], pos + 1 + c.len_utf8()))
}

/// Skips spaces and tabs (not newlines).
pub fn skip_inline_ws(src: &str, mut pos: usize) -> usize {
    let bytes = src.as_bytes();
    while pos < bytes.len() && (bytes[pos] == b' ' || bytes[pos] == b'\t') {
        pos += 1;
    }
    pos
}

/// Skips whitespace including at most one newline, as TeX does between a
/// command and its arguments.
pub fn skip_arg_ws(src: &str, pos: usize) -> usize {
    let mut p = skip_inline_ws(src, pos);
    if src.as_bytes().get(p) == Some(&b'\n') {
        p = skip_inline_ws(src, p + 1);
    }
    p
}

/// If a balanced group delimited by `open`/`close` starts at `pos`, returns
/// (inner text range start, inner end, offset after the closing delimiter).
/// Escaped delimiters do not count.
pub fn balanced(src: &str, pos: usize, open: u8, close: u8) -> Option<(usize, usize, usize)> {
    let bytes = src.as_bytes();
    if bytes.get(pos) != Some(&open) {
        return None;
    }
    let mut depth = 0usize;
    let mut i = pos;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\\' {
            i += 2;
            continue;
        }
        if b == open {
            depth += 1;
        } else if b == close {
            depth -= 1;
            if depth == 0 {
                return Some((pos + 1, i, i + 1));
            }
        }
        // Brackets may contain braces; keep bracket scanning brace-aware.
        if open == b'[' && b == b'{' {
            if let Some((_, _, end)) = balanced(src, i, b'{', b'}') {
                i = end;
                continue;
            }
        }
        i += 1;
    }
    None
}

/// A `{...}` group at `pos` (after optional whitespace).
pub fn brace_arg(src: &str, pos: usize) -> Option<(&str, usize)> {
    let p = skip_arg_ws(src, pos);
    balanced(src, p, b'{', b'}').map(|(s, e, end)| (&src[s..e], end))
}

/// A `[...]` group at `pos` (after optional whitespace).
pub fn bracket_arg(src: &str, pos: usize) -> Option<(&str, usize)> {
    let p = skip_arg_ws(src, pos);
    balanced(src, p, b'[', b']').map(|(s, e, end)| (&src[s..e], end))
}

/// Finds the next occurrence of command `\name` (exact name, not a prefix of
/// a longer name) at or after `from`. Returns the backslash offset and the
/// offset just past the name.
pub fn find_command(src: &str, name: &str, from: usize) -> Option<(usize, usize)> {
    let needle = format!("\\{name}");
    let mut start = from;
    while let Some(rel) = src.get(start..)?.find(&needle) {
        let pos = start + rel;
        let after = pos + needle.len();
        let boundary = !src[after..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic());
        if boundary && is_command_start(src, pos) {
            return Some((pos, after));
        }
        start = pos + 1;
    }
    None
}

/// Locates `\begin{env}` ... matching `\end{env}` starting the search at
/// `from`, honouring nesting. Returns (begin offset, body start, body end,
/// offset after `\end{env}`).
pub fn find_environment(src: &str, env: &str, from: usize) -> Option<(usize, usize, usize, usize)> {
    let open = format!("\\begin{{{env}}}");
    let close = format!("\\end{{{env}}}");
    let begin = from + src.get(from..)?.find(&open)?;
    let body_start = begin + open.len();
    let mut depth = 1usize;
    let mut i = body_start;
    loop {
        let next_open = src[i..].find(&open).map(|r| i + r);
        let next_close = src[i..].find(&close).map(|r| i + r)?;
        match next_open {
            Some(o) if o < next_close => {
                depth += 1;
                i = o + open.len();
            }
            _ => {
                depth -= 1;
                if depth == 0 {
                    return Some((begin, body_start, next_close, next_close + close.len()));
                }
                i = next_close + close.len();
            }
        }
    }
}

/// Splits a document into (preamble, body). The body is the text between
/// `\begin{document}` and `\end{document}`; without them the whole input is
/// body.
pub fn split_document(src: &str) -> (&str, &str) {
    let Some(b) = src.find("\\begin{document}") else {
        return ("", src);
    };
    let body_start = b + "\\begin{document}".len();
    let body_end = src[body_start..]
        .find("\\end{document}")
        .map(|r| body_start + r)
        .unwrap_or(src.len());
    (&src[..b], &src[body_start..body_end])
}

/// Whitespace-delimited token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
