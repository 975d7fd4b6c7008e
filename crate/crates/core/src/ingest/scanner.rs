//! Lexical scan of annotation-based test source (JUnit style by default).
//!
//! The tokenizer understands comments, string/char literals and text blocks
//! well enough that annotation-looking text inside them is never counted.
//! Which annotation names mean what comes from a [`Dialect`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifecycleHook {
    BeforeAll,
    BeforeEach,
    AfterAll,
    AfterEach,
}

/// Annotation and identifier sets that drive the scanner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialect {
    pub test: BTreeSet<String>,
    pub parameterized: BTreeSet<String>,
    pub before_all: BTreeSet<String>,
    pub before_each: BTreeSet<String>,
    pub after_all: BTreeSet<String>,
    pub after_each: BTreeSet<String>,
    pub mock_annotations: BTreeSet<String>,
    pub mock_identifiers: BTreeSet<String>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for Dialect {
    /// JUnit 4/5 with Mockito.
    fn default() -> Self {
        Self {
            test: set(&["Test", "RepeatedTest", "TestFactory", "TestTemplate"]),
            parameterized: set(&["ParameterizedTest"]),
            before_all: set(&["BeforeAll", "BeforeClass"]),
            before_each: set(&["BeforeEach", "Before"]),
            after_all: set(&["AfterAll", "AfterClass"]),
            after_each: set(&["AfterEach", "After"]),
            mock_annotations: set(&["Mock", "InjectMocks", "Spy", "MockBean", "SpyBean", "Captor"]),
            mock_identifiers: set(&[
                "Mockito",
                "MockitoExtension",
                "MockitoJUnitRunner",
                "MockedStatic",
                "EasyMock",
                "mock",
                "spy",
            ]),
        }
    }
}

impl Dialect {
    fn hook(&self, name: &str) -> Option<LifecycleHook> {
        if self.before_all.contains(name) {
            Some(LifecycleHook::BeforeAll)
        } else if self.before_each.contains(name) {
            Some(LifecycleHook::BeforeEach)
        } else if self.after_all.contains(name) {
            Some(LifecycleHook::AfterAll)
        } else if self.after_each.contains(name) {
            Some(LifecycleHook::AfterEach)
        } else {
            None
        }
    }
}

/// Per-class scan result. `hooks` includes hooks of enclosing classes,
/// which also run around nested tests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFacts {
    pub name: String,
    pub test_methods: u64,
    pub parameterized_methods: u64,
    pub hooks: BTreeSet<LifecycleHook>,
    pub uses_mocks: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleFacts {
    pub test_methods: u64,
    pub parameterized_methods: u64,
    pub lifecycle_hooks: BTreeSet<LifecycleHook>,
    pub mock_usage: BTreeMap<String, bool>,
    pub classes: Vec<ClassFacts>,
}

impl LifecycleFacts {
    /// Merges facts from several source files of one suite.
    pub fn merge(parts: impl IntoIterator<Item = LifecycleFacts>) -> LifecycleFacts {
        let mut classes: Vec<ClassFacts> = Vec::new();
        for part in parts {
            for class in part.classes {
                match classes.iter_mut().find(|c| c.name == class.name) {
                    Some(existing) => {
                        existing.test_methods += class.test_methods;
                        existing.parameterized_methods += class.parameterized_methods;
                        existing.hooks.extend(class.hooks);
                        existing.uses_mocks |= class.uses_mocks;
                    }
                    None => classes.push(class),
                }
            }
        }
        LifecycleFacts::from_classes(classes)
    }

    fn from_classes(classes: Vec<ClassFacts>) -> LifecycleFacts {
        LifecycleFacts {
            test_methods: classes.iter().map(|c| c.test_methods).sum(),
            parameterized_methods: classes.iter().map(|c| c.parameterized_methods).sum(),
            lifecycle_hooks: classes.iter().flat_map(|c| c.hooks.iter().copied()).collect(),
            mock_usage: classes.iter().map(|c| (c.name.clone(), c.uses_mocks)).collect(),
            classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Annotation(String),
    Ident(String),
    Dot,
    Open,
    Close,
    Semi,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let at = |j: usize| chars.get(j).copied();
    while i < chars.len() {
        let c = chars[i];
        match c {
            '/' if at(i + 1) == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if at(i + 1) == Some('*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && at(i + 1) == Some('/')) {
                    i += 1;
                }
                i += 2;
            }
            '"' if at(i + 1) == Some('"') && at(i + 2) == Some('"') => {
                i += 3;
                while i < chars.len() {
                    if chars[i] == '\\' {
                        i += 2;
                        continue;
                    }
                    if chars[i] == '"' && at(i + 1) == Some('"') && at(i + 2) == Some('"') {
                        i += 3;
                        break;
                    }
                    i += 1;
                }
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                while i < chars.len() && chars[i] != quote && chars[i] != '\n' {
                    if chars[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
                i += 1;
            }
            '@' => {
                i += 1;
                let mut last = String::new();
                loop {
                    let start = i;
                    if !at(i).is_some_and(is_ident_start) {
                        break;
                    }
                    while at(i).is_some_and(is_ident_part) {
                        i += 1;
                    }
                    last = chars[start..i].iter().collect();
                    if at(i) == Some('.') && at(i + 1).is_some_and(is_ident_start) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                if !last.is_empty() {
                    out.push(Token::Annotation(last));
                }
            }
            '{' => {
                out.push(Token::Open);
                i += 1;
            }
            '}' => {
                out.push(Token::Close);
                i += 1;
            }
            ';' => {
                out.push(Token::Semi);
                i += 1;
            }
            '.' => {
                out.push(Token::Dot);
                i += 1;
            }
            c if is_ident_start(c) => {
                let start = i;
                while at(i).is_some_and(is_ident_part) {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            _ => i += 1,
        }
    }
    out
}

#[derive(Default)]
struct Pending {
    tests: u64,
    parameterized: u64,
    hooks: BTreeSet<LifecycleHook>,
    mocks: bool,
}

impl Pending {
    fn is_empty(&self) -> bool {
        self.tests == 0 && self.parameterized == 0 && self.hooks.is_empty() && !self.mocks
    }
}

struct Scope {
    class_index: Option<usize>,
}

const TOP_LEVEL: &str = "(top-level)";

/// Counts test, parameterized-test and lifecycle annotations per class and
/// flags classes that use mocking constructs.
pub fn scan_test_source(text: &str, dialect: &Dialect) -> LifecycleFacts {
    let tokens = tokenize(text);
    let mut classes: Vec<ClassFacts> = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut scopes: Vec<Scope> = Vec::new();
    let mut pending = Pending::default();
    let mut pending_decl: Option<String> = None;
    let mut expect_name = false;
    let mut prev_dot = false;

    let current_class = |scopes: &[Scope]| scopes.iter().rev().find_map(|s| s.class_index);

    fn flush(
        pending: &mut Pending,
        target: Option<usize>,
        classes: &mut Vec<ClassFacts>,
        parents: &mut Vec<Option<usize>>,
    ) {
        if pending.is_empty() {
            return;
        }
        // Mock references outside any class (imports) describe no class.
        if target.is_none() && pending.tests == 0 && pending.hooks.is_empty() {
            *pending = Pending::default();
            return;
        }
        let idx = match target {
            Some(i) => i,
            None => match classes.iter().position(|c| c.name == TOP_LEVEL) {
                Some(i) => i,
                None => {
                    classes.push(ClassFacts {
                        name: TOP_LEVEL.to_string(),
                        ..ClassFacts::default()
                    });
                    parents.push(None);
                    classes.len() - 1
                }
            },
        };
        let p = std::mem::take(pending);
        let class = &mut classes[idx];
        class.test_methods += p.tests;
        class.parameterized_methods += p.parameterized;
        class.hooks.extend(p.hooks);
        class.uses_mocks |= p.mocks;
    }

    for token in tokens {
        let was_dot = prev_dot;
        prev_dot = token == Token::Dot;
        match token {
            Token::Annotation(name) => {
                expect_name = false;
                if dialect.parameterized.contains(&name) {
                    pending.tests += 1;
                    pending.parameterized += 1;
                } else if dialect.test.contains(&name) {
                    pending.tests += 1;
                } else if let Some(h) = dialect.hook(&name) {
                    pending.hooks.insert(h);
                }
                if dialect.mock_annotations.contains(&name) {
                    pending.mocks = true;
                }
            }
            Token::Ident(word) => {
                if expect_name {
                    pending_decl = Some(word);
                    expect_name = false;
                } else if !was_dot
                    && matches!(word.as_str(), "class" | "interface" | "enum" | "record")
                {
                    expect_name = true;
                } else if dialect.mock_identifiers.contains(&word) {
                    pending.mocks = true;
                }
            }
            Token::Dot => {}
            Token::Open => {
                expect_name = false;
                let enclosing = current_class(&scopes);
                match pending_decl.take() {
                    Some(name) => {
                        classes.push(ClassFacts {
                            name,
                            ..ClassFacts::default()
                        });
                        parents.push(enclosing);
                        let idx = classes.len() - 1;
                        flush(&mut pending, Some(idx), &mut classes, &mut parents);
                        scopes.push(Scope { class_index: Some(idx) });
                    }
                    None => {
                        flush(&mut pending, enclosing, &mut classes, &mut parents);
                        scopes.push(Scope { class_index: None });
                    }
                }
            }
            Token::Close => {
                expect_name = false;
                pending_decl = None;
                let target = current_class(&scopes);
                flush(&mut pending, target, &mut classes, &mut parents);
                scopes.pop();
            }
            Token::Semi => {
                expect_name = false;
                pending_decl = None;
                let target = current_class(&scopes);
                flush(&mut pending, target, &mut classes, &mut parents);
            }
        }
    }
    let target = current_class(&scopes);
    flush(&mut pending, target, &mut classes, &mut parents);

    // Hooks of enclosing classes apply to nested ones.
    let own: Vec<BTreeSet<LifecycleHook>> = classes.iter().map(|c| c.hooks.clone()).collect();
    for (i, class) in classes.iter_mut().enumerate() {
        let mut up = parents[i];
        while let Some(p) = up {
            class.hooks.extend(own[p].iter().copied());
            up = parents[p];
        }
    }
    LifecycleFacts::from_classes(classes)
}
