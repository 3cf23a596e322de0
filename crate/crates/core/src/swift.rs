//! Minimal lexical handling of Swift source: comments and string literals.

/// A comment and the 1-based line it starts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexed {
    /// The source with comment text and string contents blanked to spaces.
    /// Byte offsets and line breaks are preserved.
    pub masked: String,
    pub comments: Vec<Comment>,
}

impl Lexed {
    /// 1-based line number of a byte offset in `masked`.
    pub fn line_of(&self, offset: usize) -> usize {
        self.masked.as_bytes()[..offset.min(self.masked.len())]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    }
}

pub fn lex(code: &str) -> Lexed {
    let src = code.as_bytes();
    let mut out = src.to_vec();
    let mut comments = Vec::new();
    let mut line = 1;
    let mut i = 0;
    let blank = |out: &mut Vec<u8>, from: usize, to: usize| {
        for b in &mut out[from..to] {
            if *b != b'\n' {
                *b = b' ';
            }
        }
    };
    while i < src.len() {
        match src[i] {
            b'\n' => {
                line += 1;
                i += 1;
            }
            b'/' if src.get(i + 1) == Some(&b'/') => {
                let end = src[i..].iter().position(|&b| b == b'\n').map_or(src.len(), |p| i + p);
                comments.push(Comment {
                    line,
                    text: code[i..end].to_string(),
                });
                blank(&mut out, i, end);
                i = end;
            }
            b'/' if src.get(i + 1) == Some(&b'*') => {
                let start = i;
                let start_line = line;
                let mut depth = 0;
                while i < src.len() {
                    if src[i] == b'/' && src.get(i + 1) == Some(&b'*') {
                        depth += 1;
                        i += 2;
                    } else if src[i] == b'*' && src.get(i + 1) == Some(&b'/') {
                        depth -= 1;
                        i += 2;
                        if depth == 0 {
                            break;
                        }
                    } else {
                        if src[i] == b'\n' {
                            line += 1;
                        }
                        i += 1;
                    }
                }
                comments.push(Comment {
                    line: start_line,
                    text: code[start..i].to_string(),
                });
                blank(&mut out, start, i);
            }
            b'"' => {
                let multi = src[i..].starts_with(b"\"\"\"");
                let open = if multi { 3 } else { 1 };
                let body_start = i + open;
                let mut j = body_start;
                let mut escaped = false;
                let mut end = src.len();
                while j < src.len() {
                    let b = src[j];
                    if escaped {
                        escaped = false;
                    } else if b == b'\\' {
                        escaped = true;
                    } else if (multi && src[j..].starts_with(b"\"\"\""))
                        // A newline ends an unterminated single-line literal.
                        || (!multi && (b == b'"' || b == b'\n'))
                    {
                        end = j;
                        break;
                    }
                    if b == b'\n' {
                        line += 1;
                    }
                    j += 1;
                }
                blank(&mut out, body_start, end);
                i = if end < src.len() && src[end] == b'"' { end + open } else { end };
            }
            _ => i += 1,
        }
    }
    Lexed {
        masked: String::from_utf8(out).expect("masking keeps ASCII boundaries"),
        comments,
    }
}
