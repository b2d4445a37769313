use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokKind {
    Ident,
    Num,
    Str,
    Punct,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
    /// Position just past the token.
    pub end_line: usize,
    pub end_col: usize,
}

impl Token {
    pub fn is(&self, punct: &str) -> bool {
        self.kind == TokKind::Punct && self.text == punct
    }

    pub fn is_word(&self, word: &str) -> bool {
        self.kind == TokKind::Ident && self.text == word
    }
}

// Longest first.
const PUNCTS: &[&str] = &[
    "===", "!==", "=>", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",",
    ".", "=", "!", "+", "-", "*", "/", "%", "<", ">", ":",
];

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut rest = src;
    let mut out = Vec::new();
    let err = |line, col, message: String| SyntaxError::Parse { line, col, message };

    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                    rest = &rest[c.len_utf8()..];
                }
                Some('/') if rest.starts_with("//") => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                        rest = &rest[c.len_utf8()..];
                    }
                }
                Some('/') if rest.starts_with("/*") => {
                    let (line, col) = (cur.line, cur.col);
                    let Some(end) = rest[2..].find("*/") else {
                        return Err(err(line, col, "unterminated comment".into()));
                    };
                    let skip = &rest[..end + 4];
                    for _ in skip.chars() {
                        cur.bump();
                    }
                    rest = &rest[skip.len()..];
                }
                _ => break,
            }
        }
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek() else {
            out.push(Token {
                kind: TokKind::Eof,
                text: String::new(),
                line,
                col,
                end_line: line,
                end_col: col,
            });
            return Ok(out);
        };

        let (kind, len) = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '$'))
                .unwrap_or(rest.len());
            (TokKind::Ident, len)
        } else if c.is_ascii_digit() {
            let digits = |s: &str| s.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(s.len());
            let mut len = digits(rest);
            let frac = &rest[len..];
            if frac.starts_with('.') && frac[1..].starts_with(|ch: char| ch.is_ascii_digit()) {
                len += 1 + digits(&frac[1..]);
            }
            (TokKind::Num, len)
        } else if c == '\'' || c == '"' {
            let mut escaped = false;
            let mut end = None;
            for (i, ch) in rest.char_indices().skip(1) {
                if ch == '\n' {
                    break;
                }
                if escaped {
                    escaped = false;
                } else if ch == '\\' {
                    escaped = true;
                } else if ch == c {
                    end = Some(i + 1);
                    break;
                }
            }
            let Some(len) = end else {
                return Err(err(line, col, "unterminated string literal".into()));
            };
            (TokKind::Str, len)
        } else if c == '`' {
            return Err(err(line, col, "template literals are not supported".into()));
        } else if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            (TokKind::Punct, p.len())
        } else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        };

        let text = rest[..len].to_string();
        for _ in text.chars() {
            cur.bump();
        }
        rest = &rest[len..];
        out.push(Token {
            kind,
            text,
            line,
            col,
            end_line: cur.line,
            end_col: cur.col,
        });
    }
}
