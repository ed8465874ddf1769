//! Hand-rolled lexer for the kernel language.

use super::ast::Span;
use super::LangError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    // Keywords and punctuation.
    Kernel,
    Var,
    For,
    While,
    If,
    Else,
    In,
    Parallel, // `@parallel`
    Pi,
    TyF32,
    TyI32,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    DotDot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Ident(String),
    IntLit(i64),
    FloatLit(f32),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Kernel => write!(f, "kernel"),
            Tok::Var => write!(f, "var"),
            Tok::For => write!(f, "for"),
            Tok::While => write!(f, "while"),
            Tok::If => write!(f, "if"),
            Tok::Else => write!(f, "else"),
            Tok::In => write!(f, "in"),
            Tok::Parallel => write!(f, "@parallel"),
            Tok::Pi => write!(f, "PI"),
            Tok::TyF32 => write!(f, "f32"),
            Tok::TyI32 => write!(f, "i32"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Colon => write!(f, ":"),
            Tok::Semi => write!(f, ";"),
            Tok::Comma => write!(f, ","),
            Tok::DotDot => write!(f, ".."),
            Tok::Assign => write!(f, "="),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Percent => write!(f, "%"),
            Tok::Lt => write!(f, "<"),
            Tok::Le => write!(f, "<="),
            Tok::Gt => write!(f, ">"),
            Tok::Ge => write!(f, ">="),
            Tok::EqEq => write!(f, "=="),
            Tok::Ne => write!(f, "!="),
            Tok::AndAnd => write!(f, "&&"),
            Tok::OrOr => write!(f, "||"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::IntLit(v) => write!(f, "{v}"),
            Tok::FloatLit(v) => write!(f, "{v:?}"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedTok {
    pub tok: Tok,
    pub span: Span,
}

/// Statement forms the grammar deliberately excludes; naming them gives a
/// better diagnostic than a generic syntax error.
const RESERVED: &[&str] = &["break", "continue", "return", "fn", "let", "struct", "goto"];

pub fn tokenize(text: &str) -> Result<Vec<SpannedTok>, LangError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $span:expr) => {
            toks.push(SpannedTok { tok: $tok, span: $span })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let span = Span::new(line, col);
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                push!(Tok::LParen, span);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Tok::RParen, span);
                i += 1;
                col += 1;
            }
            '{' => {
                push!(Tok::LBrace, span);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Tok::RBrace, span);
                i += 1;
                col += 1;
            }
            '[' => {
                push!(Tok::LBracket, span);
                i += 1;
                col += 1;
            }
            ']' => {
                push!(Tok::RBracket, span);
                i += 1;
                col += 1;
            }
            ':' => {
                push!(Tok::Colon, span);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Tok::Semi, span);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Tok::Comma, span);
                i += 1;
                col += 1;
            }
            '+' => {
                push!(Tok::Plus, span);
                i += 1;
                col += 1;
            }
            '-' => {
                push!(Tok::Minus, span);
                i += 1;
                col += 1;
            }
            '*' => {
                push!(Tok::Star, span);
                i += 1;
                col += 1;
            }
            '/' => {
                push!(Tok::Slash, span);
                i += 1;
                col += 1;
            }
            '%' => {
                push!(Tok::Percent, span);
                i += 1;
                col += 1;
            }
            '<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Le, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Lt, span);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Ge, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Gt, span);
                    i += 1;
                    col += 1;
                }
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::EqEq, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Assign, span);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Ne, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(LangError::Syntax(span, "unexpected `!`".into()));
                }
            }
            '&' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'&' {
                    push!(Tok::AndAnd, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(LangError::Syntax(span, "unexpected `&`".into()));
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    push!(Tok::OrOr, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(LangError::Syntax(span, "unexpected `|`".into()));
                }
            }
            '.' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'.' {
                    push!(Tok::DotDot, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(LangError::Syntax(span, "unexpected `.`".into()));
                }
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && (bytes[j] as char).is_ascii_alphanumeric() {
                    j += 1;
                }
                let word = &text[start..j];
                if word == "parallel" {
                    push!(Tok::Parallel, span);
                    col += (j - i) as u32;
                    i = j;
                } else {
                    return Err(LangError::Syntax(
                        span,
                        format!("unknown annotation `@{word}`"),
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                let mut is_float = false;
                while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    j += 1;
                }
                // A `.` starts a fraction only if not the `..` range operator.
                if j + 1 < bytes.len() && bytes[j] == b'.' && (bytes[j + 1] as char).is_ascii_digit()
                {
                    is_float = true;
                    j += 1;
                    while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        is_float = true;
                        j = k;
                        while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let lit = &text[start..j];
                if is_float {
                    let v: f32 = lit
                        .parse()
                        .map_err(|_| LangError::Syntax(span, format!("bad float literal `{lit}`")))?;
                    push!(Tok::FloatLit(v), span);
                } else {
                    let v: i64 = lit
                        .parse()
                        .map_err(|_| LangError::Syntax(span, format!("bad int literal `{lit}`")))?;
                    push!(Tok::IntLit(v), span);
                }
                col += (j - i) as u32;
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let word = &text[start..j];
                let tok = match word {
                    "kernel" => Tok::Kernel,
                    "var" => Tok::Var,
                    "for" => Tok::For,
                    "while" => Tok::While,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "in" => Tok::In,
                    "PI" => Tok::Pi,
                    "f32" => Tok::TyF32,
                    "i32" => Tok::TyI32,
                    w if RESERVED.contains(&w) => {
                        return Err(LangError::OutOfScopeFeature(
                            span,
                            format!("`{w}` is not part of the language"),
                        ))
                    }
                    _ => Tok::Ident(word.to_string()),
                };
                push!(tok, span);
                col += (j - i) as u32;
                i = j;
            }
            other => {
                return Err(LangError::Syntax(
                    span,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    toks.push(SpannedTok {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(toks)
}
