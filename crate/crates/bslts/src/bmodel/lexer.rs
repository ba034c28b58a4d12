//! Tokenizer for machine sources, predicate texts and property files.
//!
//! Comments come in two forms: `/* ... */` (non-nesting) and `//` to end of
//! line. Identifiers are `[A-Za-z][A-Za-z0-9_]*`; integer literals are
//! unsigned decimal (a leading `-` is handled by the parser where a negative
//! literal is meaningful).

use super::ParseError;

/// Source position of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    /// `=`
    Equal,
    /// `/=`
    NotEqual,
    /// `:`
    Colon,
    /// `::`
    DoubleColon,
    /// `:=`
    Becomes,
    /// `<`
    Less,
    /// `<=`
    Leq,
    /// `>`
    Greater,
    /// `>=`
    Geq,
    /// `=>`
    Implies,
    /// `<=>`
    Iff,
    /// `&`
    Ampersand,
    /// `||`
    DoubleBar,
    /// `;`
    Semicolon,
    /// `,`
    Comma,
    /// `(`
    LParen,
    /// `)`
    RParen,
    /// `{`
    LBrace,
    /// `}`
    RBrace,
    /// `.` (quantifier separator)
    Dot,
    /// `..` (interval)
    DotDot,
    /// `!` (universal quantifier)
    Bang,
    /// `#` (existential quantifier)
    Hash,
    /// `+`
    Plus,
    /// `-`
    Minus,
    /// `*` (event wildcard in property files)
    Star,
    /// `->` (target separator in property files)
    Arrow,
    /// `$1` suffix marking a primed variable in dumped predicate text
    PrimeSuffix,
}

impl std::fmt::Display for TokenKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TokenKind::Ident(n) => return write!(f, "`{n}`"),
            TokenKind::Int(i) => return write!(f, "`{i}`"),
            TokenKind::Equal => "`=`",
            TokenKind::NotEqual => "`/=`",
            TokenKind::Colon => "`:`",
            TokenKind::DoubleColon => "`::`",
            TokenKind::Becomes => "`:=`",
            TokenKind::Less => "`<`",
            TokenKind::Leq => "`<=`",
            TokenKind::Greater => "`>`",
            TokenKind::Geq => "`>=`",
            TokenKind::Implies => "`=>`",
            TokenKind::Iff => "`<=>`",
            TokenKind::Ampersand => "`&`",
            TokenKind::DoubleBar => "`||`",
            TokenKind::Semicolon => "`;`",
            TokenKind::Comma => "`,`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Dot => "`.`",
            TokenKind::DotDot => "`..`",
            TokenKind::Bang => "`!`",
            TokenKind::Hash => "`#`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Arrow => "`->`",
            TokenKind::PrimeSuffix => "`$1`",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
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

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }
}

/// Tokenizes `src`, or reports the first lexical error.
pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer::new(src);
    let mut tokens = Vec::new();
    loop {
        // Skip whitespace and comments.
        loop {
            match lx.peek() {
                Some(c) if c.is_whitespace() => {
                    lx.bump();
                }
                Some('/') => {
                    // Could be a comment, `/=`, or an error; look ahead by
                    // cloning the iterator cheaply.
                    let mut probe = lx.chars.clone();
                    probe.next();
                    match probe.peek() {
                        Some('/') => {
                            while let Some(c) = lx.peek() {
                                if c == '\n' {
                                    break;
                                }
                                lx.bump();
                            }
                        }
                        Some('*') => {
                            let open = lx.span();
                            lx.bump();
                            lx.bump();
                            let mut closed = false;
                            while let Some(c) = lx.bump() {
                                if c == '*' && lx.peek() == Some('/') {
                                    lx.bump();
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                return Err(ParseError::UnterminatedComment { span: open });
                            }
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }

        let span = lx.span();
        let c = match lx.peek() {
            None => break,
            Some(c) => c,
        };

        let kind = match c {
            'A'..='Z' | 'a'..='z' => {
                let mut name = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(name),
                    span,
                });
                continue;
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                let value = digits
                    .parse::<i64>()
                    .map_err(|_| ParseError::IntegerOutOfRange { span })?;
                tokens.push(Token {
                    kind: TokenKind::Int(value),
                    span,
                });
                continue;
            }
            '=' => {
                lx.bump();
                if lx.peek() == Some('>') {
                    lx.bump();
                    TokenKind::Implies
                } else {
                    TokenKind::Equal
                }
            }
            '/' => {
                lx.bump();
                if lx.peek() == Some('=') {
                    lx.bump();
                    TokenKind::NotEqual
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '/', span });
                }
            }
            ':' => {
                lx.bump();
                match lx.peek() {
                    Some('=') => {
                        lx.bump();
                        TokenKind::Becomes
                    }
                    Some(':') => {
                        lx.bump();
                        TokenKind::DoubleColon
                    }
                    _ => TokenKind::Colon,
                }
            }
            '<' => {
                lx.bump();
                if lx.peek() == Some('=') {
                    lx.bump();
                    if lx.peek() == Some('>') {
                        lx.bump();
                        TokenKind::Iff
                    } else {
                        TokenKind::Leq
                    }
                } else {
                    TokenKind::Less
                }
            }
            '>' => {
                lx.bump();
                if lx.peek() == Some('=') {
                    lx.bump();
                    TokenKind::Geq
                } else {
                    TokenKind::Greater
                }
            }
            '&' => {
                lx.bump();
                TokenKind::Ampersand
            }
            '|' => {
                lx.bump();
                if lx.peek() == Some('|') {
                    lx.bump();
                    TokenKind::DoubleBar
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '|', span });
                }
            }
            ';' => {
                lx.bump();
                TokenKind::Semicolon
            }
            ',' => {
                lx.bump();
                TokenKind::Comma
            }
            '(' => {
                lx.bump();
                TokenKind::LParen
            }
            ')' => {
                lx.bump();
                TokenKind::RParen
            }
            '{' => {
                lx.bump();
                TokenKind::LBrace
            }
            '}' => {
                lx.bump();
                TokenKind::RBrace
            }
            '.' => {
                lx.bump();
                if lx.peek() == Some('.') {
                    lx.bump();
                    TokenKind::DotDot
                } else {
                    TokenKind::Dot
                }
            }
            '!' => {
                lx.bump();
                TokenKind::Bang
            }
            '#' => {
                lx.bump();
                TokenKind::Hash
            }
            '+' => {
                lx.bump();
                TokenKind::Plus
            }
            '-' => {
                lx.bump();
                if lx.peek() == Some('>') {
                    lx.bump();
                    TokenKind::Arrow
                } else {
                    TokenKind::Minus
                }
            }
            '*' => {
                lx.bump();
                TokenKind::Star
            }
            '$' => {
                lx.bump();
                if lx.peek() == Some('1') {
                    lx.bump();
                    TokenKind::PrimeSuffix
                } else {
                    return Err(ParseError::UnexpectedChar { ch: '$', span });
                }
            }
            other => {
                return Err(ParseError::UnexpectedChar { ch: other, span });
            }
        };
        tokens.push(Token { kind, span });
    }
    Ok(tokens)
}
