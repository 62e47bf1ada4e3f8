use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Semi,
    Colon,
    Comma,
    Assign,
    At,
    Bang,
    Amp,
    Pipe,
    Caret,
    Arrow,
    DoubleArrow,
    Minus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LAngle => "`<`".into(),
            Tok::RAngle => "`>`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::At => "`@`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::DoubleArrow => "`<=>`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |i: &mut usize, col: &mut usize, k: usize| {
            *i += k;
            *col += k;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(&mut i, &mut col, 1);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
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
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<u64>().map_err(|_| ParseError {
                line: pos.line,
                col: pos.col,
                message: format!("number `{text}` out of range"),
            })?;
            out.push(Token {
                tok: Tok::Num(n),
                pos,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<=>") {
            (Tok::DoubleArrow, 3)
        } else if rest.starts_with("=>") || rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with(":=") {
            (Tok::Assign, 2)
        } else if rest.starts_with("&&") {
            (Tok::Amp, 2)
        } else if rest.starts_with("||") {
            (Tok::Pipe, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '<' => Tok::LAngle,
                '>' => Tok::RAngle,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '@' => Tok::At,
                '!' | '~' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '^' => Tok::Caret,
                '-' => Tok::Minus,
                other => {
                    return Err(ParseError {
                        line,
                        col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            (t, 1)
        };
        advance(&mut i, &mut col, len);
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
