use crate::location::Pos;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// Decoded string literal (escapes resolved).
    Str(String),
    Char(String),
    Number(String),
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
    /// Position just past the last character of the token.
    pub end: Pos,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        matches!(&self.kind, TokenKind::Op(o) if *o == op)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(i) if i == name)
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub message: String,
    pub pos: Pos,
}

const OPS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", ">", "<", "!", "~", "?", ":",
    "+", "-", "*", "/", "&", "|", "^", "%",
];

struct Cursor<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c))
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { chars: src.chars().collect(), i: 0, line: 1, col: 1, _src: src };
    let mut out = Vec::new();
    while let Some(c) = cur.peek(0) {
        if c.is_whitespace() || c == '\u{feff}' {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while let Some(c) = cur.peek(0) {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            let start = cur.pos();
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(LexError { message: "unterminated comment".into(), pos: start });
                }
            }
            continue;
        }
        let pos = cur.pos();
        let kind = if cur.starts_with("\"\"\"") {
            for _ in 0..3 {
                cur.bump();
            }
            // text block: content starts after the line terminator
            while let Some(c) = cur.peek(0) {
                cur.bump();
                if c == '\n' {
                    break;
                }
            }
            let mut s = String::new();
            loop {
                if cur.starts_with("\"\"\"") {
                    for _ in 0..3 {
                        cur.bump();
                    }
                    break;
                }
                match cur.bump() {
                    Some('\\') => s.push(read_escape(&mut cur, pos)?),
                    Some(c) => s.push(c),
                    None => return Err(LexError { message: "unterminated text block".into(), pos }),
                }
            }
            TokenKind::Str(s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => s.push(read_escape(&mut cur, pos)?),
                    Some('\n') | None => {
                        return Err(LexError { message: "unterminated string literal".into(), pos })
                    }
                    Some(c) => s.push(c),
                }
            }
            TokenKind::Str(s)
        } else if c == '\'' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some('\'') => break,
                    Some('\\') => s.push(read_escape(&mut cur, pos)?),
                    Some('\n') | None => return Err(LexError { message: "unterminated char literal".into(), pos }),
                    Some(c) => s.push(c),
                }
            }
            TokenKind::Char(s)
        } else if c.is_ascii_digit() || (c == '.' && cur.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            let mut prev = ' ';
            while let Some(c) = cur.peek(0) {
                let exp_sign = (c == '+' || c == '-') && matches!(prev, 'e' | 'E' | 'p' | 'P') && !s.starts_with("0x");
                if c.is_ascii_alphanumeric() || c == '_' || c == '.' || exp_sign {
                    if c == '.' && !cur.peek(1).is_some_and(|d| d.is_ascii_digit()) && s.contains('.') {
                        break;
                    }
                    s.push(c);
                    prev = c;
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Number(s)
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while let Some(c) = cur.peek(0) {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Ident(s)
        } else if let Some(op) = OPS.iter().find(|op| cur.starts_with(op)) {
            for _ in 0..op.chars().count() {
                cur.bump();
            }
            TokenKind::Op(op)
        } else {
            return Err(LexError { message: format!("unexpected character '{c}'"), pos });
        };
        out.push(Token { kind, pos, end: cur.pos() });
    }
    Ok(out)
}

fn read_escape(cur: &mut Cursor<'_>, start: Pos) -> Result<char, LexError> {
    let err = || LexError { message: "bad escape sequence".into(), pos: start };
    let c = cur.bump().ok_or_else(err)?;
    Ok(match c {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        'b' => '\u{8}',
        'f' => '\u{c}',
        's' => ' ',
        '0'..='7' => {
            let mut v = c.to_digit(8).unwrap_or(0);
            for _ in 0..2 {
                match cur.peek(0).and_then(|d| d.to_digit(8)) {
                    Some(d) if v * 8 + d <= 0o377 => {
                        v = v * 8 + d;
                        cur.bump();
                    }
                    _ => break,
                }
            }
            char::from_u32(v).ok_or_else(err)?
        }
        'u' => {
            while cur.peek(0) == Some('u') {
                cur.bump();
            }
            let mut v = 0;
            for _ in 0..4 {
                v = v * 16 + cur.bump().and_then(|d| d.to_digit(16)).ok_or_else(err)?;
            }
            char::from_u32(v).unwrap_or('\u{fffd}')
        }
        '\n' => '\n',
        other => other,
    })
}
