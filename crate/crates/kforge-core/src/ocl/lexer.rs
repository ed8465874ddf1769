//! Lexer for the emitted OpenCL C dialect.

use super::{EmuError, Loc};

#[derive(Debug, Clone, PartialEq)]
pub enum CTok {
    Ident(String),
    IntLit(u64),
    FloatLit(f32),
    Pragma(Option<u32>),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Star,
    Amp,
    Plus,
    Minus,
    Slash,
    Percent,
    Assign,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Not,
    Eof,
}

impl std::fmt::Display for CTok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CTok::Ident(s) => write!(f, "{s}"),
            CTok::IntLit(v) => write!(f, "{v}"),
            CTok::FloatLit(v) => write!(f, "{v:?}F"),
            CTok::Pragma(_) => write!(f, "#pragma"),
            CTok::LParen => write!(f, "("),
            CTok::RParen => write!(f, ")"),
            CTok::LBrace => write!(f, "{{"),
            CTok::RBrace => write!(f, "}}"),
            CTok::LBracket => write!(f, "["),
            CTok::RBracket => write!(f, "]"),
            CTok::Semi => write!(f, ";"),
            CTok::Comma => write!(f, ","),
            CTok::Star => write!(f, "*"),
            CTok::Amp => write!(f, "&"),
            CTok::Plus => write!(f, "+"),
            CTok::Minus => write!(f, "-"),
            CTok::Slash => write!(f, "/"),
            CTok::Percent => write!(f, "%"),
            CTok::Assign => write!(f, "="),
            CTok::Lt => write!(f, "<"),
            CTok::Le => write!(f, "<="),
            CTok::Gt => write!(f, ">"),
            CTok::Ge => write!(f, ">="),
            CTok::EqEq => write!(f, "=="),
            CTok::Ne => write!(f, "!="),
            CTok::AndAnd => write!(f, "&&"),
            CTok::OrOr => write!(f, "||"),
            CTok::Not => write!(f, "!"),
            CTok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedCTok {
    pub tok: CTok,
    pub loc: Loc,
}

pub fn tokenize(text: &str) -> Result<Vec<SpannedCTok>, EmuError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    let err = |loc: Loc, msg: String| EmuError::OclSyntax { loc, msg };

    while i < bytes.len() {
        let c = bytes[i] as char;
        let loc = Loc { line, col };
        macro_rules! tok {
            ($t:expr, $n:expr) => {{
                toks.push(SpannedCTok { tok: $t, loc });
                i += $n;
                col += $n as u32;
            }};
        }
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
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                i += 2;
                col += 2;
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    if bytes[i] == b'\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
                i += 2;
                col += 2;
            }
            '#' => {
                // `#pragma unroll [N]`, the only preprocessor form accepted.
                let eol = text[i..]
                    .find('\n')
                    .map(|p| i + p)
                    .unwrap_or(bytes.len());
                let directive = &text[i..eol];
                let stripped = directive
                    .find("//")
                    .map(|p| &directive[..p])
                    .unwrap_or(directive);
                let words: Vec<&str> = stripped[1..].split_whitespace().collect();
                match words.as_slice() {
                    ["pragma", "unroll"] => {
                        toks.push(SpannedCTok {
                            tok: CTok::Pragma(None),
                            loc,
                        });
                    }
                    ["pragma", "unroll", n] => {
                        let factor = n.parse::<u32>().map_err(|_| {
                            err(loc, format!("bad unroll factor `{n}` in pragma"))
                        })?;
                        toks.push(SpannedCTok {
                            tok: CTok::Pragma(Some(factor)),
                            loc,
                        });
                    }
                    _ => {
                        return Err(EmuError::UnsupportedConstruct {
                            loc,
                            what: format!("preprocessor directive `{}`", stripped.trim()),
                        })
                    }
                }
                col += (eol - i) as u32;
                i = eol;
            }
            '(' => tok!(CTok::LParen, 1),
            ')' => tok!(CTok::RParen, 1),
            '{' => tok!(CTok::LBrace, 1),
            '}' => tok!(CTok::RBrace, 1),
            '[' => tok!(CTok::LBracket, 1),
            ']' => tok!(CTok::RBracket, 1),
            ';' => tok!(CTok::Semi, 1),
            ',' => tok!(CTok::Comma, 1),
            '*' => tok!(CTok::Star, 1),
            '+' => tok!(CTok::Plus, 1),
            '-' => tok!(CTok::Minus, 1),
            '/' => tok!(CTok::Slash, 1),
            '%' => tok!(CTok::Percent, 1),
            '&' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'&' {
                    tok!(CTok::AndAnd, 2);
                } else {
                    tok!(CTok::Amp, 1);
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    tok!(CTok::OrOr, 2);
                } else {
                    return Err(err(loc, "unexpected `|`".into()));
                }
            }
            '<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tok!(CTok::Le, 2);
                } else {
                    tok!(CTok::Lt, 1);
                }
            }
            '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tok!(CTok::Ge, 2);
                } else {
                    tok!(CTok::Gt, 1);
                }
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tok!(CTok::EqEq, 2);
                } else {
                    tok!(CTok::Assign, 1);
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tok!(CTok::Ne, 2);
                } else {
                    tok!(CTok::Not, 1);
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                let mut is_float = false;
                while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
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
                let text_lit = &text[start..j];
                let mut consumed = j - start;
                if j < bytes.len() && (bytes[j] == b'F' || bytes[j] == b'f') {
                    is_float = true;
                    consumed += 1;
                } else if j < bytes.len() && (bytes[j] == b'L' || bytes[j] == b'l') {
                    consumed += 1;
                }
                if is_float {
                    let v: f32 = text_lit
                        .parse()
                        .map_err(|_| err(loc, format!("bad float literal `{text_lit}`")))?;
                    toks.push(SpannedCTok {
                        tok: CTok::FloatLit(v),
                        loc,
                    });
                } else {
                    let v: u64 = text_lit
                        .parse()
                        .map_err(|_| err(loc, format!("bad int literal `{text_lit}`")))?;
                    toks.push(SpannedCTok {
                        tok: CTok::IntLit(v),
                        loc,
                    });
                }
                i = start + consumed;
                col += consumed as u32;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                toks.push(SpannedCTok {
                    tok: CTok::Ident(text[start..j].to_string()),
                    loc,
                });
                col += (j - i) as u32;
                i = j;
            }
            other => return Err(err(loc, format!("unexpected character `{other}`"))),
        }
    }
    toks.push(SpannedCTok {
        tok: CTok::Eof,
        loc: Loc { line, col },
    });
    Ok(toks)
}
