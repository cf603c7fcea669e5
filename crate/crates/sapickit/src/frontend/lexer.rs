//! Tokenizer for `.sapic` files.

use crate::error::{ParseError, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Quoted(String),
    Number(u64),
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Slash,
    Eq,
    Bar,
    Amp,
    Bang,
    At,
    Hash,
    Tilde,
    Dollar,
    DQuote,
    Minus,
    /// `--[`
    ArrowOpen,
    /// `]->`
    ArrowClose,
    /// `-->`
    Arrow,
    /// `==>`
    Implies,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{}`", s),
            Tok::Quoted(s) => write!(f, "'{}'", s),
            Tok::Number(n) => write!(f, "number {}", n),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = match other {
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LAngle => "<",
                    Tok::RAngle => ">",
                    Tok::LBracket => "[",
                    Tok::RBracket => "]",
                    Tok::Comma => ",",
                    Tok::Semi => ";",
                    Tok::Colon => ":",
                    Tok::Dot => ".",
                    Tok::Slash => "/",
                    Tok::Eq => "=",
                    Tok::Bar => "|",
                    Tok::Amp => "&",
                    Tok::Bang => "!",
                    Tok::At => "@",
                    Tok::Hash => "#",
                    Tok::Tilde => "~",
                    Tok::Dollar => "$",
                    Tok::DQuote => "\"",
                    Tok::Minus => "-",
                    Tok::ArrowOpen => "--[",
                    Tok::ArrowClose => "]->",
                    Tok::Arrow => "-->",
                    Tok::Implies => "==>",
                    _ => unreachable!(),
                };
                write!(f, "`{}`", s)
            }
        }
    }
}

/// Splits `src` into tokens with their start positions. Comments (`//` and
/// `/* */`) and whitespace are skipped.
pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let peek = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        if c == '/' && peek(1) == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c == '/' && peek(1) == Some('*') {
            advance(&mut i, &mut line, &mut col, 2, &chars);
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError { span, message: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2, &chars);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| ParseError { span, message: format!("number {} out of range", s) })?;
            out.push((Tok::Number(n), span));
            continue;
        }
        if c == '\'' {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            let start = i;
            while i < chars.len() && chars[i] != '\'' && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            if i >= chars.len() || chars[i] != '\'' {
                return Err(ParseError { span, message: "unterminated quoted name".into() });
            }
            let s: String = chars[start..i].iter().collect();
            advance(&mut i, &mut line, &mut col, 1, &chars);
            out.push((Tok::Quoted(s), span));
            continue;
        }
        let three: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, n) = match three.as_str() {
            "--[" => (Tok::ArrowOpen, 3),
            "]->" => (Tok::ArrowClose, 3),
            "-->" => (Tok::Arrow, 3),
            "==>" => (Tok::Implies, 3),
            _ => {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '<' => Tok::LAngle,
                    '>' => Tok::RAngle,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '/' => Tok::Slash,
                    '=' => Tok::Eq,
                    '|' => Tok::Bar,
                    '&' => Tok::Amp,
                    '!' => Tok::Bang,
                    '@' => Tok::At,
                    '#' => Tok::Hash,
                    '~' => Tok::Tilde,
                    '$' => Tok::Dollar,
                    '"' => Tok::DQuote,
                    '-' => Tok::Minus,
                    other => return Err(ParseError { span, message: format!("unexpected character `{}`", other) }),
                };
                (t, 1)
            }
        };
        advance(&mut i, &mut line, &mut col, n, &chars);
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}
