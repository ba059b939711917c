//! Compilation-free extraction of cannot-be-resolved simple names from partial
//! Java code.
//!
//! The tokenizer never fails: unknown characters become single-character
//! punctuation, unterminated literals and comments run to end of line / input.
//! Angle brackets are classified as type-argument delimiters or comparison
//! operators with a bounded lookahead.
//!
//! Extraction recognizes four positions:
//!
//! * `Type name (= ; , ) : [)` declares a variable: `Type` is a declaration type,
//! * `new Type` is an instantiation type,
//! * `recv.member` makes `recv` a receiver and `member` (or `member()`) a member,
//!   as long as `recv` is not itself the tail of a chain.
//!
//! Type arguments inherit the declaration/instantiation kind of their owner.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Form, NameKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Ident,
    Literal,
    Punct,
    /// `<` opening a type-argument list.
    TypeOpen,
    /// `>` closing a type-argument list.
    TypeClose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
}

impl Token {
    fn is(&self, text: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == text
    }

    fn is_name(&self) -> bool {
        self.kind == TokenKind::Ident && !is_keyword(&self.text)
    }
}

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "interface",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "volatile",
    "while",
    "true",
    "false",
    "null",
    "var",
    "yield",
];

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

/// Leading segments that mark a dotted chain as a package path.
const PACKAGE_ROOTS: &[&str] = &["java", "javax", "android", "com", "org", "sun", "net"];

const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "<<",
];

/// Max tokens inspected when deciding whether `<` opens type arguments.
const TYPE_ARG_LOOKAHEAD: usize = 64;

pub fn is_primitive(word: &str) -> bool {
    PRIMITIVES.contains(&word)
}

/// Reserved words and primitive type names.
pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || is_primitive(word)
}

/// Splits arbitrary text into identifiers, literals and punctuation.
pub fn tokenize_lenient(source: &str) -> Vec<Token> {
    let mut tokens = lex(source);
    mark_type_args(&mut tokens);
    tokens
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn lex(source: &str) -> Vec<Token> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut i = 0;
    let at = |i: usize| chars.get(i).copied().unwrap_or('\0');

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '/' && at(i + 1) == '/' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && at(i + 1) == '*' {
            i += 2;
            while i < chars.len() && !(chars[i] == '*' && at(i + 1) == '/') {
                if chars[i] == '\n' {
                    line += 1;
                }
                i += 1;
            }
            i = (i + 2).min(chars.len());
        } else if c == '"' && at(i + 1) == '"' && at(i + 2) == '"' {
            let start = i;
            let start_line = line;
            i += 3;
            while i < chars.len() && !(chars[i] == '"' && at(i + 1) == '"' && at(i + 2) == '"') {
                if chars[i] == '\\' {
                    i += 1;
                }
                if at(i) == '\n' {
                    line += 1;
                }
                i += 1;
            }
            i = (i + 3).min(chars.len());
            tokens.push(Token {
                kind: TokenKind::Literal,
                text: chars[start..i].iter().collect(),
                line: start_line,
            });
        } else if c == '"' || c == '\'' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != c && chars[i] != '\n' {
                if chars[i] == '\\' && at(i + 1) != '\n' {
                    i += 1;
                }
                i += 1;
            }
            if at(i) == c {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Literal,
                text: chars[start..i.min(chars.len())].iter().collect(),
                line,
            });
        } else if c.is_ascii_digit() || (c == '.' && at(i + 1).is_ascii_digit()) {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_alphanumeric() || d == '_' || d == '.' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Literal,
                text: chars[start..i].iter().collect(),
                line,
            });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_part(chars[i]) {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: chars[start..i].iter().collect(),
                line,
            });
        } else {
            let op = OPERATORS.iter().find(|op| {
                op.chars()
                    .enumerate()
                    .all(|(k, oc)| chars.get(i + k) == Some(&oc))
            });
            let len = op.map_or(1, |op| op.chars().count());
            tokens.push(Token {
                kind: TokenKind::Punct,
                text: chars[i..i + len].iter().collect(),
                line,
            });
            i += len;
        }
    }
    tokens
}

/// Marks `<`/`>` pairs that delimit type arguments.
fn mark_type_args(tokens: &mut [Token]) {
    for i in 1..tokens.len() {
        if !tokens[i].is("<") {
            continue;
        }
        let prev = &tokens[i - 1];
        if !(prev.kind == TokenKind::Ident || prev.is(".")) {
            continue;
        }
        if let Some(pairs) = match_type_args(tokens, i) {
            for (open, close) in pairs {
                tokens[open].kind = TokenKind::TypeOpen;
                tokens[close].kind = TokenKind::TypeClose;
            }
        }
    }
}

fn match_type_args(tokens: &[Token], start: usize) -> Option<Vec<(usize, usize)>> {
    let mut stack = vec![start];
    let mut pairs = Vec::new();
    let end = tokens.len().min(start + 1 + TYPE_ARG_LOOKAHEAD);
    for (j, tok) in tokens.iter().enumerate().take(end).skip(start + 1) {
        match tok.kind {
            TokenKind::Ident => {
                let w = tok.text.as_str();
                if is_keyword(w) && !is_primitive(w) && w != "extends" && w != "super" {
                    return None;
                }
            }
            TokenKind::Punct => match tok.text.as_str() {
                "<" => stack.push(j),
                ">" => {
                    let open = stack.pop()?;
                    pairs.push((open, j));
                    if stack.is_empty() {
                        return Some(pairs);
                    }
                }
                "." | "," | "?" | "&" | "[" | "]" => {}
                _ => return None,
            },
            _ => return None,
        }
    }
    None
}

/// One unique form-tagged simple name found in a snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanHit {
    pub simple_name: String,
    pub kind: NameKind,
    /// 1-based line of the first occurrence.
    pub line: usize,
    pub occurrence_count: u32,
}

/// Syntactic evidence used to pick the form suffix of a name.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FormContext {
    pub generic: bool,
    pub array: bool,
    pub constructor: bool,
}

/// Applies at most one suffix: array beats generic beats constructor.
pub fn canonical_form(base: &str, ctx: FormContext) -> String {
    let form = if ctx.array {
        Form::Array
    } else if ctx.generic {
        Form::Generic
    } else if ctx.constructor {
        Form::Call
    } else {
        Form::Plain
    };
    form.apply(base)
}

#[derive(Debug)]
struct TypeExpr {
    head_idx: usize,
    name_idx: usize,
    qualified: bool,
    primitive: bool,
    generic: bool,
    array: bool,
    args: Vec<TypeExpr>,
    end: usize,
}

struct Extractor<'a> {
    toks: &'a [Token],
    hits: Vec<ScanHit>,
    index: HashMap<String, usize>,
}

impl<'a> Extractor<'a> {
    fn tok(&self, i: usize) -> Option<&'a Token> {
        self.toks.get(i)
    }

    fn punct_at(&self, i: usize, text: &str) -> bool {
        self.tok(i).is_some_and(|t| t.is(text))
    }

    fn name_at(&self, i: usize) -> bool {
        self.tok(i).is_some_and(Token::is_name)
    }

    fn kind_at(&self, i: usize, kind: TokenKind) -> bool {
        self.tok(i).is_some_and(|t| t.kind == kind)
    }

    fn emit(&mut self, name: String, kind: NameKind, line: usize) {
        match self.index.get(&name) {
            Some(&idx) => self.hits[idx].occurrence_count += 1,
            None => {
                self.index.insert(name.clone(), self.hits.len());
                self.hits.push(ScanHit {
                    simple_name: name,
                    kind,
                    line,
                    occurrence_count: 1,
                });
            }
        }
    }

    fn parse_type(&self, i: usize) -> Option<TypeExpr> {
        let first = self.tok(i)?;
        if first.kind != TokenKind::Ident {
            return None;
        }
        if is_primitive(&first.text) {
            let mut ty = TypeExpr {
                head_idx: i,
                name_idx: i,
                qualified: false,
                primitive: true,
                generic: false,
                array: false,
                args: Vec::new(),
                end: i + 1,
            };
            self.parse_dims(&mut ty);
            return Some(ty);
        }
        if is_keyword(&first.text) {
            return None;
        }
        let mut j = i;
        let mut qualified = false;
        while self.punct_at(j + 1, ".") && self.name_at(j + 2) {
            j += 2;
            qualified = true;
        }
        let mut ty = TypeExpr {
            head_idx: i,
            name_idx: j,
            qualified,
            primitive: false,
            generic: false,
            array: false,
            args: Vec::new(),
            end: j + 1,
        };
        if self.kind_at(ty.end, TokenKind::TypeOpen) {
            ty.generic = true;
            let mut k = ty.end + 1;
            let mut depth = 1usize;
            while k < self.toks.len() {
                let t = &self.toks[k];
                match t.kind {
                    TokenKind::TypeClose => {
                        depth -= 1;
                        k += 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    TokenKind::TypeOpen => {
                        depth += 1;
                        k += 1;
                    }
                    TokenKind::Ident
                        if depth == 1 && (!is_keyword(&t.text) || is_primitive(&t.text)) =>
                    {
                        match self.parse_type(k) {
                            Some(arg) => {
                                k = arg.end;
                                ty.args.push(arg);
                            }
                            None => k += 1,
                        }
                    }
                    _ => k += 1,
                }
            }
            ty.end = k;
        }
        self.parse_dims(&mut ty);
        Some(ty)
    }

    fn parse_dims(&self, ty: &mut TypeExpr) {
        while self.punct_at(ty.end, "[") && self.punct_at(ty.end + 1, "]") {
            ty.array = true;
            ty.end += 2;
        }
        if self.punct_at(ty.end, "...") {
            ty.array = true;
            ty.end += 1;
        }
    }

    fn emit_type(&mut self, ty: &TypeExpr, kind: NameKind, constructor: bool) {
        if ty.qualified {
            // `Outer.Inner` still needs `Outer` resolved
            let head = &self.toks[ty.head_idx];
            if head.text.starts_with(|c: char| c.is_ascii_uppercase()) {
                self.emit(head.text.clone(), NameKind::Receiver, head.line);
            }
        } else if !ty.primitive {
            let tok = &self.toks[ty.name_idx];
            let ctx = FormContext {
                generic: ty.generic,
                array: ty.array,
                constructor,
            };
            self.emit(canonical_form(&tok.text, ctx), kind, tok.line);
        }
        for arg in &ty.args {
            self.emit_type(arg, kind, false);
        }
    }

    /// `Type name` followed by a declarator terminator.
    fn try_declaration(&mut self, i: usize) -> Option<usize> {
        let ty = self.parse_type(i)?;
        if !self.name_at(ty.end) {
            return None;
        }
        let terminated = match self.tok(ty.end + 1) {
            None => true,
            Some(t) => ["=", ";", ",", ")", ":", "["].iter().any(|p| t.is(p)),
        };
        if !terminated {
            return None;
        }
        self.emit_type(&ty, NameKind::DeclType, false);
        Some(ty.end)
    }

    fn instantiation(&mut self, i: usize) -> usize {
        let Some(mut ty) = self.parse_type(i) else {
            return i;
        };
        if self.punct_at(ty.end, "[") {
            ty.array = true;
        }
        let constructor = self.punct_at(ty.end, "(");
        self.emit_type(&ty, NameKind::InstType, constructor);
        ty.end
    }

    fn skip_annotation(&self, at: usize) -> usize {
        let mut j = at + 1;
        if self.kind_at(j, TokenKind::Ident) {
            j += 1;
            while self.punct_at(j, ".") && self.kind_at(j + 1, TokenKind::Ident) {
                j += 2;
            }
            if self.punct_at(j, "(") {
                let mut depth = 0usize;
                while let Some(t) = self.tok(j) {
                    j += 1;
                    if t.is("(") {
                        depth += 1;
                    } else if t.is(")") {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                }
            }
        }
        j
    }

    fn run(mut self) -> Vec<ScanHit> {
        let mut i = 0;
        while i < self.toks.len() {
            let tok = &self.toks[i];
            if tok.is("@") {
                i = self.skip_annotation(i);
                continue;
            }
            if tok.kind != TokenKind::Ident {
                i += 1;
                continue;
            }
            if tok.text == "new" {
                i = self.instantiation(i + 1).max(i + 1);
                continue;
            }
            if is_keyword(&tok.text) && !is_primitive(&tok.text) {
                i += 1;
                continue;
            }
            // tails of chains and qualified names are never first links
            if i > 0 && self.toks[i - 1].is(".") {
                i += 1;
                continue;
            }
            if let Some(next) = self.try_declaration(i) {
                i = next;
                continue;
            }
            if is_primitive(&tok.text) {
                i += 1;
                continue;
            }
            if PACKAGE_ROOTS.contains(&tok.text.as_str()) && self.punct_at(i + 1, ".") {
                let mut j = i;
                while self.punct_at(j + 1, ".") && self.kind_at(j + 2, TokenKind::Ident) {
                    j += 2;
                }
                i = j + 1;
                continue;
            }
            if self.punct_at(i + 1, ".") {
                if self.name_at(i + 2) {
                    let member = &self.toks[i + 2];
                    let name = if self.punct_at(i + 3, "(") {
                        Form::Call.apply(&member.text)
                    } else {
                        member.text.clone()
                    };
                    self.emit(tok.text.clone(), NameKind::Receiver, tok.line);
                    self.emit(name, NameKind::Member, member.line);
                    i += 3;
                    continue;
                }
                if self.tok(i + 2).is_some_and(|t| t.text == "class")
                    || self.kind_at(i + 2, TokenKind::TypeOpen)
                {
                    self.emit(tok.text.clone(), NameKind::Receiver, tok.line);
                    i += 2;
                    continue;
                }
            }
            i += 1;
        }
        self.hits
    }
}

/// Extracts one [`ScanHit`] per unique form-tagged simple name, in order of
/// first occurrence. Total: any text yields a (possibly empty) hit list.
pub fn extract_simple_names(source: &str) -> Vec<ScanHit> {
    let toks = tokenize_lenient(source);
    Extractor {
        toks: &toks,
        hits: Vec::new(),
        index: HashMap::new(),
    }
    .run()
}
