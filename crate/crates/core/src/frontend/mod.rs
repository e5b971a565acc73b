//! Lexing, parsing and type checking of `.cscoop` sources.

pub mod ast;
pub mod check;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod source;
pub mod types;

use std::fmt;

pub use check::{check, TypedClass, TypedMethod, TypedProgram, TypedStmt, TypedStmtKind};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use source::{Pos, SourceUnit};
pub use types::{collect_types, ClassInfo, MethodSig, TypeEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Lexical,
    Syntax,
    NoClasses,
    MissingRoot,
    DuplicateDeclaration,
    UnknownType,
    InvalidType,
    UnknownName,
    TypeMismatch,
    InvalidCall,
    InvalidTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub pos: Pos,
    pub message: String,
    /// Expected-token set for syntax errors.
    pub expected: Vec<String>,
    /// File the diagnostic belongs to, filled in once known.
    pub path: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, pos: Pos, message: String) -> Self {
        Self {
            kind,
            pos,
            message,
            expected: Vec::new(),
            path: None,
        }
    }

    pub fn with_source(mut self, class: &ast::ClassDecl) -> Self {
        if let Some(src) = &class.source {
            self.path.get_or_insert_with(|| src.clone());
        }
        self
    }

    pub fn in_file(mut self, path: &str) -> Self {
        self.path.get_or_insert_with(|| path.to_string());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{p}:")?;
        }
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// Lexes and parses several units into one tree (classes may span files).
pub fn parse_units(units: &[SourceUnit]) -> Result<ast::SyntaxTree, Diagnostic> {
    let mut classes = Vec::new();
    for unit in units {
        let tokens = tokenize(unit).map_err(|d| d.in_file(&unit.path))?;
        let parsed = parser::parse_classes(&tokens).map_err(|d| d.in_file(&unit.path))?;
        classes.extend(parsed.into_iter().map(|mut c| {
            c.source = Some(unit.path.clone());
            c
        }));
    }
    parser::finish_tree(classes)
}

/// Full front-end pipeline: parse, collect types and check.
pub fn analyze(units: &[SourceUnit]) -> Result<TypedProgram, Diagnostic> {
    let tree = parse_units(units)?;
    let env = collect_types(&tree)?;
    check(&tree, &env)
}
