//! First pass over the tree: per-class symbol tables and method signatures.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{ClassDecl, DeclaredType, MethodKind, SyntaxTree, TypeName};
use super::source::Pos;
use super::{Diagnostic, DiagnosticKind};
use crate::ir::{ClassId, MethodId, Type};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub id: ClassId,
    pub name: String,
    /// Attribute layout, sorted by name; `VarRef::Attr(i)` indexes this list.
    pub attributes: Vec<(String, Type)>,
    pub methods: BTreeMap<String, MethodId>,
}

impl ClassInfo {
    pub fn attribute(&self, name: &str) -> Option<(u16, Type)> {
        self.attributes
            .binary_search_by(|(n, _)| n.as_str().cmp(name))
            .ok()
            .map(|i| (i as u16, self.attributes[i].1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSig {
    pub id: MethodId,
    pub class: ClassId,
    pub name: String,
    pub kind: MethodKind,
    pub formals: Vec<(String, Type)>,
    pub result: Option<Type>,
}

/// Symbol tables for every class. Ids follow sorted names, so the
/// environment does not depend on declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeEnv {
    /// Indexed by `ClassId`.
    pub classes: Vec<ClassInfo>,
    /// Indexed by `MethodId`.
    pub methods: Vec<MethodSig>,
    pub by_name: BTreeMap<String, ClassId>,
    pub root: ClassId,
}

impl TypeEnv {
    pub fn class(&self, id: ClassId) -> &ClassInfo {
        &self.classes[id.index()]
    }

    pub fn class_named(&self, name: &str) -> Option<&ClassInfo> {
        self.by_name.get(name).map(|id| self.class(*id))
    }

    pub fn method(&self, id: MethodId) -> &MethodSig {
        &self.methods[id.index()]
    }

    pub fn find_method(&self, class: ClassId, name: &str) -> Option<&MethodSig> {
        self.class(class).methods.get(name).map(|id| self.method(*id))
    }

    /// `CLASS.method` label for diagnostics and traces.
    pub fn method_label(&self, id: MethodId) -> String {
        let m = self.method(id);
        format!("{}.{}", self.class(m.class).name, m.name)
    }

    pub fn type_name(&self, ty: Type) -> String {
        match ty {
            Type::Int => "INTEGER".into(),
            Type::Bool => "BOOLEAN".into(),
            Type::Void => "NONE".into(),
            Type::Ref { class, separate } => {
                format!("{}{}", if separate { "separate " } else { "" }, self.class(class).name)
            }
        }
    }

    pub fn resolve(&self, ty: &DeclaredType, pos: Pos) -> Result<Type, Diagnostic> {
        match &ty.base {
            TypeName::Integer | TypeName::Boolean if ty.separate => Err(Diagnostic::new(
                DiagnosticKind::InvalidType,
                pos,
                format!("separate {} is not a valid type", ty.base.spelling()),
            )),
            TypeName::Integer => Ok(Type::Int),
            TypeName::Boolean => Ok(Type::Bool),
            TypeName::Class(name) => match self.by_name.get(name) {
                Some(id) => Ok(Type::Ref {
                    class: *id,
                    separate: ty.separate,
                }),
                None => Err(Diagnostic::new(
                    DiagnosticKind::UnknownType,
                    pos,
                    format!("unknown type {name}"),
                )),
            },
        }
    }
}

fn duplicate(pos: Pos, what: &str, name: &str) -> Diagnostic {
    Diagnostic::new(
        DiagnosticKind::DuplicateDeclaration,
        pos,
        format!("duplicate declaration of {what} `{name}`"),
    )
}

fn check_unique_features(class: &ClassDecl) -> Result<(), Diagnostic> {
    let mut seen = BTreeSet::new();
    let features = class
        .attributes
        .iter()
        .map(|a| (a.name.as_str(), a.pos, "feature"))
        .chain(class.methods.iter().map(|m| (m.name.as_str(), m.pos, "feature")));
    for (name, pos, what) in features {
        if !seen.insert(name) {
            return Err(duplicate(pos, what, name).with_source(class));
        }
    }
    for m in &class.methods {
        let mut vars = BTreeSet::new();
        for v in m.formals.iter().chain(&m.locals) {
            if !vars.insert(v.name.as_str()) {
                return Err(duplicate(v.pos, "variable", &v.name).with_source(class));
            }
        }
    }
    Ok(())
}

/// Builds the [`TypeEnv`]: duplicate declarations, unknown type names and
/// separate primitive types are reported here.
pub fn collect_types(tree: &SyntaxTree) -> Result<TypeEnv, Diagnostic> {
    let mut sorted: Vec<&ClassDecl> = tree.classes.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for pair in sorted.windows(2) {
        if pair[0].name == pair[1].name {
            let later = if pair[0].pos > pair[1].pos { pair[0] } else { pair[1] };
            return Err(duplicate(later.pos, "class", &later.name).with_source(later));
        }
    }
    let by_name: BTreeMap<String, ClassId> = sorted
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.clone(), ClassId(i as u32)))
        .collect();
    let root = by_name[&tree.root_class];
    let mut env = TypeEnv {
        classes: Vec::new(),
        methods: Vec::new(),
        by_name,
        root,
    };

    let mut classes = Vec::new();
    let mut methods = Vec::new();
    for (ci, class) in sorted.iter().enumerate() {
        check_unique_features(class)?;
        let class_id = ClassId(ci as u32);
        let mut attributes = Vec::new();
        for a in &class.attributes {
            let ty = env.resolve(&a.ty, a.pos).map_err(|d| d.with_source(class))?;
            attributes.push((a.name.clone(), ty));
        }
        attributes.sort_by(|a, b| a.0.cmp(&b.0));
        let mut decls: Vec<_> = class.methods.iter().collect();
        decls.sort_by(|a, b| a.name.cmp(&b.name));
        let mut table = BTreeMap::new();
        for m in decls {
            let id = MethodId(methods.len() as u32);
            let mut formals = Vec::new();
            for f in &m.formals {
                let ty = env.resolve(&f.ty, f.pos).map_err(|d| d.with_source(class))?;
                formals.push((f.name.clone(), ty));
            }
            for l in &m.locals {
                env.resolve(&l.ty, l.pos).map_err(|d| d.with_source(class))?;
            }
            let result = match &m.result_type {
                Some(t) => Some(env.resolve(t, m.pos).map_err(|d| d.with_source(class))?),
                None => None,
            };
            table.insert(m.name.clone(), id);
            methods.push(MethodSig {
                id,
                class: class_id,
                name: m.name.clone(),
                kind: m.kind,
                formals,
                result,
            });
        }
        classes.push(ClassInfo {
            id: class_id,
            name: class.name.clone(),
            attributes,
            methods: table,
        });
    }
    env.classes = classes;
    env.methods = methods;

    let root_decl = sorted[root.index()];
    match env.find_method(root, "make") {
        Some(sig) if sig.kind == MethodKind::Command && sig.formals.is_empty() => {}
        _ => {
            return Err(Diagnostic::new(
                DiagnosticKind::MissingRoot,
                root_decl.pos,
                format!(
                    "root class {} needs a creation command `make` without arguments",
                    root_decl.name
                ),
            )
            .with_source(root_decl))
        }
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, tokenize, SourceUnit};

    fn env_of(src: &str) -> Result<TypeEnv, Diagnostic> {
        let tree = parse(&tokenize(&SourceUnit::new("t", src)).unwrap()).unwrap();
        collect_types(&tree)
    }

    const FORKS: &str = "class APP root make do end end\n\
        class FORK end\n\
        class PHILOSOPHER\n  left, right: separate FORK\n  count: INTEGER\n  \
        eat (l, r: separate FORK) do end\nend";

    #[test]
    fn separate_attributes() {
        let env = env_of(FORKS).unwrap();
        let phil = env.class_named("PHILOSOPHER").unwrap();
        let fork = env.by_name["FORK"];
        assert_eq!(
            phil.attribute("left"),
            Some((
                1,
                Type::Ref {
                    class: fork,
                    separate: true
                }
            ))
        );
        assert_eq!(phil.attribute("count"), Some((0, Type::Int)));
        let eat = env.find_method(phil.id, "eat").unwrap();
        assert_eq!(eat.formals.len(), 2);
    }

    #[test]
    fn unknown_type() {
        let err = env_of("class A root x: BAZ make do end end").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::UnknownType);
        assert!(err.message.contains("unknown type"));
    }

    #[test]
    fn duplicate_method() {
        let err = env_of("class A root make do end eat do end eat do end end").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::DuplicateDeclaration);
    }

    #[test]
    fn duplicate_class_and_variable() {
        assert_eq!(
            env_of("class A root make do end end class A end").unwrap_err().kind,
            DiagnosticKind::DuplicateDeclaration
        );
        assert_eq!(
            env_of("class A root make local x, x: INTEGER do end end")
                .unwrap_err()
                .kind,
            DiagnosticKind::DuplicateDeclaration
        );
    }

    #[test]
    fn separate_integer_rejected() {
        let err = env_of("class A root x: separate INTEGER make do end end").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::InvalidType);
    }

    #[test]
    fn root_needs_make() {
        let err = env_of("class A root go do end end").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::MissingRoot);
        let err = env_of("class A root make (n: INTEGER) do end end").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::MissingRoot);
    }

    #[test]
    fn order_independent() {
        let permuted = "class PHILOSOPHER\n  left, right: separate FORK\n  count: INTEGER\n  \
            eat (l, r: separate FORK) do end\nend\nclass FORK end\nclass APP root make do end end";
        assert_eq!(env_of(FORKS).unwrap(), env_of(permuted).unwrap());
    }
}
