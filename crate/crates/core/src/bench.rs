//! The bundled benchmark programs and their parameters.
//!
//! A parameter is the integer literal on a line tagged `-- @param name`.

use std::fmt;
use std::str::FromStr;

use crate::compiler::{lower_program, CompileOptions, Program};
use crate::frontend::{analyze, Diagnostic, SourceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    /// Dining philosophers locking both forks at once.
    Dpe,
    /// Dining philosophers locking one fork at a time.
    Dpb,
    /// Single-element producer/consumer.
    Pc,
    /// Dining savages.
    Ds,
    /// Cigarette smokers.
    Cs,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Dpe,
        Benchmark::Dpb,
        Benchmark::Pc,
        Benchmark::Ds,
        Benchmark::Cs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Dpe => "dpe",
            Benchmark::Dpb => "dpb",
            Benchmark::Pc => "pc",
            Benchmark::Ds => "ds",
            Benchmark::Cs => "cs",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Benchmark::Dpe => include_str!("../../../benchmarks/dpe.cscoop"),
            Benchmark::Dpb => include_str!("../../../benchmarks/dpb.cscoop"),
            Benchmark::Pc => include_str!("../../../benchmarks/pc.cscoop"),
            Benchmark::Ds => include_str!("../../../benchmarks/ds.cscoop"),
            Benchmark::Cs => include_str!("../../../benchmarks/cs.cscoop"),
        }
    }

    /// Parameter names in the order used by [`Benchmark::instantiate`].
    pub fn params(self) -> &'static [&'static str] {
        match self {
            Benchmark::Dpe | Benchmark::Dpb => &["philosophers", "rounds"],
            Benchmark::Pc => &["items"],
            Benchmark::Ds => &["size", "savages", "hunger"],
            Benchmark::Cs => &["rounds"],
        }
    }

    /// Source text with the positional parameters substituted.
    pub fn instantiate(self, values: &[i64]) -> String {
        assert!(values.len() <= self.params().len(), "too many parameters for {self}");
        let bindings: Vec<(&str, i64)> = self.params().iter().copied().zip(values.iter().copied()).collect();
        set_params(self.source(), &bindings).expect("bundled benchmark parameters")
    }

    pub fn compile(self, values: &[i64], options: CompileOptions) -> Program {
        let path = format!("benchmarks/{}.cscoop", self.name());
        let typed = analyze(&[SourceUnit::new(path, self.instantiate(values))]).expect("bundled benchmark compiles");
        lower_program(&typed, options)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown benchmark `{s}`"))
    }
}

/// Replaces the integer literal on each line tagged `-- @param name`.
/// Fails on a binding whose tag does not occur.
pub fn set_params(source: &str, bindings: &[(&str, i64)]) -> Result<String, String> {
    let mut used = vec![false; bindings.len()];
    let mut out = String::with_capacity(source.len());
    for line in source.split_inclusive('\n') {
        let tagged = line.find("--").and_then(|at| {
            let name = line[at + 2..].trim().strip_prefix("@param")?.trim();
            let i = bindings.iter().position(|(n, _)| *n == name)?;
            Some((at, i))
        });
        let Some((at, i)) = tagged else {
            out.push_str(line);
            continue;
        };
        let code = &line[..at];
        let end = code
            .rfind(|c: char| c.is_ascii_digit())
            .ok_or_else(|| format!("no literal for `{}`", bindings[i].0))?
            + 1;
        let start = code[..end].rfind(|c: char| !c.is_ascii_digit()).map_or(0, |s| s + 1);
        out.push_str(&code[..start]);
        out.push_str(&bindings[i].1.to_string());
        out.push_str(&line[end..]);
        used[i] = true;
    }
    match used.iter().position(|u| !u) {
        Some(i) => Err(format!("no parameter named `{}`", bindings[i].0)),
        None => Ok(out),
    }
}

/// Parses a `name=value` binding.
pub fn parse_binding(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value = value.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

/// Compiles a single source text.
pub fn compile_source(path: &str, text: &str, options: CompileOptions) -> Result<Program, Diagnostic> {
    Ok(lower_program(&analyze(&[SourceUnit::new(path, text)])?, options))
}
