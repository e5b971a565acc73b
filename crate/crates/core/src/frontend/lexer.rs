//! Tokenizer for `.cscoop` sources.

use std::fmt;

use super::source::{Pos, SourceUnit};
use super::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Str(String),
    // keywords
    Class,
    Root,
    Separate,
    Require,
    Local,
    Do,
    End,
    Ensure,
    Create,
    If,
    Then,
    Elseif,
    Else,
    From,
    Until,
    Loop,
    Print,
    And,
    Or,
    Not,
    True,
    False,
    Void,
    Current,
    Result,
    // punctuation and operators
    Assign,
    Plus,
    Minus,
    Star,
    IntDiv,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LParen,
    RParen,
    Comma,
    Semicolon,
    Colon,
    Dot,
}

impl TokenKind {
    fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "class" => Class,
            "root" => Root,
            "separate" => Separate,
            "require" => Require,
            "local" => Local,
            "do" => Do,
            "end" => End,
            "ensure" => Ensure,
            "create" => Create,
            "if" => If,
            "then" => Then,
            "elseif" => Elseif,
            "else" => Else,
            "from" => From,
            "until" => Until,
            "loop" => Loop,
            "print" => Print,
            "and" => And,
            "or" => Or,
            "not" => Not,
            "true" | "True" => True,
            "false" | "False" => False,
            "Void" => Void,
            "Current" => Current,
            "Result" => Result,
            _ => return None,
        })
    }

    /// Source spelling for fixed tokens; a placeholder for the valued ones.
    pub fn describe(&self) -> String {
        use TokenKind::*;
        let s = match self {
            Ident(name) => return format!("identifier `{name}`"),
            Int(v) => return format!("integer {v}"),
            Str(_) => "string literal",
            Class => "class",
            Root => "root",
            Separate => "separate",
            Require => "require",
            Local => "local",
            Do => "do",
            End => "end",
            Ensure => "ensure",
            Create => "create",
            If => "if",
            Then => "then",
            Elseif => "elseif",
            Else => "else",
            From => "from",
            Until => "until",
            Loop => "loop",
            Print => "print",
            And => "and",
            Or => "or",
            Not => "not",
            True => "true",
            False => "false",
            Void => "Void",
            Current => "Current",
            Result => "Result",
            Assign => ":=",
            Plus => "+",
            Minus => "-",
            Star => "*",
            IntDiv => "//",
            Mod => "\\\\",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "=",
            Ne => "/=",
            LParen => "(",
            RParen => ")",
            Comma => ",",
            Semicolon => ";",
            Colon => ":",
            Dot => ".",
        };
        format!("`{s}`")
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        match self {
            Ident(name) => write!(f, "IDENT {name}"),
            Int(v) => write!(f, "INT {v}"),
            Str(s) => write!(f, "STR {s:?}"),
            Assign => f.write_str("ASSIGN"),
            LParen => f.write_str("LPAR"),
            RParen => f.write_str("RPAR"),
            Comma => f.write_str("COMMA"),
            other => f.write_str(&format!("{other:?}").to_uppercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
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

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }
}

fn lex_error(pos: Pos, message: String) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::Lexical, pos, message)
}

/// Splits a unit into tokens. Comments (`--` to end of line) and whitespace are dropped.
pub fn tokenize(unit: &SourceUnit) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: unit.text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = TokenKind::keyword(&word).unwrap_or(TokenKind::Ident(word));
            out.push(Token { kind, pos });
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() || c == '_' {
                    if c != '_' {
                        digits.push(c);
                    }
                    cur.bump();
                } else {
                    break;
                }
            }
            let value = digits
                .parse::<i64>()
                .map_err(|_| lex_error(pos, format!("integer literal {digits} out of range")))?;
            out.push(Token {
                kind: TokenKind::Int(value),
                pos,
            });
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('%') => {
                        // Eiffel escape: %" %% %N
                        if let Some(e) = cur.bump() {
                            text.push('%');
                            text.push(e);
                        }
                    }
                    Some('\n') | None => return Err(lex_error(pos, "unterminated string literal".into())),
                    Some(ch) => text.push(ch),
                }
            }
            out.push(Token {
                kind: TokenKind::Str(text),
                pos,
            });
            continue;
        }
        cur.bump();
        let kind = match c {
            '-' if cur.peek() == Some('-') => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            ':' if cur.peek() == Some('=') => {
                cur.bump();
                TokenKind::Assign
            }
            '/' if cur.peek() == Some('/') => {
                cur.bump();
                TokenKind::IntDiv
            }
            '/' if cur.peek() == Some('=') => {
                cur.bump();
                TokenKind::Ne
            }
            '\\' if cur.peek() == Some('\\') => {
                cur.bump();
                TokenKind::Mod
            }
            '<' if cur.peek() == Some('=') => {
                cur.bump();
                TokenKind::Le
            }
            '>' if cur.peek() == Some('=') => {
                cur.bump();
                TokenKind::Ge
            }
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '<' => TokenKind::Lt,
            '>' => TokenKind::Gt,
            '=' => TokenKind::Eq,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            ';' => TokenKind::Semicolon,
            ':' => TokenKind::Colon,
            '.' => TokenKind::Dot,
            other => return Err(lex_error(pos, format!("illegal character {other:?}"))),
        };
        out.push(Token { kind, pos });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(&SourceUnit::new("t.cscoop", src))
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn minimal_assignment() {
        assert_eq!(kinds("x := 1"), vec![Ident("x".into()), Assign, Int(1)]);
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(kinds("-- note\nend"), vec![End]);
    }

    #[test]
    fn listing_call() {
        assert_eq!(
            kinds("eat (left_fork, right_fork)"),
            vec![
                Ident("eat".into()),
                LParen,
                Ident("left_fork".into()),
                Comma,
                Ident("right_fork".into()),
                RParen
            ]
        );
    }

    #[test]
    fn operators() {
        assert_eq!(
            kinds("a // b \\\\ c /= d <= e >= f - -g"),
            vec![
                Ident("a".into()),
                IntDiv,
                Ident("b".into()),
                Mod,
                Ident("c".into()),
                Ne,
                Ident("d".into()),
                Le,
                Ident("e".into()),
                Ge,
                Ident("f".into()),
                Minus,
                Minus,
                Ident("g".into())
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize(&SourceUnit::new("t", "class\n  A end")).unwrap();
        assert_eq!(toks[1].pos, Pos::new(2, 3));
        assert_eq!(toks[2].pos, Pos::new(2, 5));
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize(&SourceUnit::new("t", "x := 1\n  y # 2")).unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Lexical);
        assert_eq!(err.pos, Pos::new(2, 5));
    }

    #[test]
    fn strings_are_tokens() {
        assert_eq!(
            kinds("print (\"a %\"b\" + 1)"),
            vec![Print, LParen, Str("a %\"b".into()), Plus, Int(1), RParen]
        );
        assert!(tokenize(&SourceUnit::new("t", "\"open")).is_err());
    }

    #[test]
    fn display_names() {
        let shown: Vec<String> = kinds("x := 1 end").iter().map(|k| k.to_string()).collect();
        assert_eq!(shown, ["IDENT x", "ASSIGN", "INT 1", "END"]);
    }
}
