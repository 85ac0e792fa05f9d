use super::{DslError, DslErrorKind, Pos};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Suffix {
    M,
    Cm,
    Mm,
    Deg,
    Rad,
}

impl Suffix {
    pub fn from_word(s: &str) -> Option<Self> {
        Some(match s {
            "m" => Suffix::M,
            "cm" => Suffix::Cm,
            "mm" => Suffix::Mm,
            "deg" => Suffix::Deg,
            "rad" => Suffix::Rad,
            _ => return None,
        })
    }

    pub fn factor(&self) -> f64 {
        match self {
            Suffix::M | Suffix::Rad => 1.0,
            Suffix::Cm => 0.01,
            Suffix::Mm => 0.001,
            Suffix::Deg => std::f64::consts::PI / 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Num { value: f64, suffix: Option<Suffix>, integer: bool },
    Punct(char),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| DslError::at(DslErrorKind::Syntax(msg), Pos { line, col });

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut integer = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                integer = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| err(line, col, format!("bad number `{text}`")))?;
            col += i - start;
            let mut suffix = None;
            if i < chars.len() && chars[i].is_ascii_alphabetic() {
                let s = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[s..i].iter().collect();
                suffix = Some(Suffix::from_word(&word).ok_or_else(|| err(line, col, format!("unknown unit `{word}`")))?);
                col += i - s;
            }
            out.push(Token { tok: Tok::Num { value, suffix, integer }, pos });
            continue;
        }
        if c == '"' {
            i += 1;
            col += 1;
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(pos.line, pos.col, "unterminated string".into()));
                };
                i += 1;
                col += 1;
                match ch {
                    '"' => break,
                    '\n' => return Err(err(pos.line, pos.col, "newline in string".into())),
                    '\\' => {
                        let Some(&e) = chars.get(i) else {
                            return Err(err(pos.line, pos.col, "unterminated string".into()));
                        };
                        i += 1;
                        col += 1;
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            '"' => '"',
                            '\\' => '\\',
                            other => return Err(err(line, col, format!("unknown escape `\\{other}`"))),
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        if "{}()[],;:=+-*".contains(c) {
            out.push(Token { tok: Tok::Punct(c), pos });
            i += 1;
            col += 1;
            continue;
        }
        return Err(err(line, col, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}
