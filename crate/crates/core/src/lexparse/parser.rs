//! Brace-matching structural parser.
//!
//! Recognizes just enough C to answer the embedded rules: top-level function
//! definitions and prototypes, file-scope variables, and inside each body the
//! locals, calls, loops, reads and writes. Anything it does not understand is
//! skipped up to the next top-level item.

use std::collections::{BTreeMap, HashSet};

use super::lexer::{is_keyword, Token, TokenKind, TokenStream};
use super::model::*;

const DECL_KEYWORDS: &[&str] = &[
    "int", "char", "short", "long", "float", "double", "signed", "unsigned", "void", "_Bool",
    "_Complex", "struct", "union", "enum", "const", "volatile", "static", "extern", "register",
    "auto", "typedef", "inline", "restrict", "_Atomic", "_Thread_local", "_Alignas",
];

const TYPE_KEYWORDS: &[&str] = &[
    "int", "char", "short", "long", "float", "double", "signed", "unsigned", "void", "_Bool",
    "_Complex", "struct", "union", "enum",
];

const QUALIFIERS: &[&str] = &["const", "volatile", "restrict", "_Atomic"];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];

const ATTRIBUTE_WORDS: &[&str] = &["__attribute__", "__attribute", "__declspec", "__asm__", "__asm", "asm"];

const INLINE_WORDS: &[&str] = &["inline", "__inline", "__inline__", "__forceinline"];

pub fn parse_translation_unit(stream: &TokenStream, path: &str) -> SourceModel {
    let mut model = SourceModel { path: path.to_string(), ..SourceModel::default() };
    model.parse_errors.extend(
        stream.errors.iter().map(|e| ParseError { line: e.line, message: e.message.clone() }),
    );

    collect_directives(stream, &mut model);
    model.guard = guard_facts(stream, &model.directives);
    model.normalized_lines = normalized_lines(stream);
    model.line_count = stream.reconstruct().lines().count() as u32;

    let toks: Vec<&Token> = stream.significant().collect();
    let mut parser = Parser { toks: &toks, model: &mut model };
    parser.parse_top();

    dedup_by_name_line(&mut model.functions, |f| (f.name.clone(), f.line));
    dedup_by_name_line(&mut model.global_vars, |v| (v.name.clone(), v.line));
    model.parse_errors.sort_by_key(|e| e.line);
    model
}

fn dedup_by_name_line<T, F: Fn(&T) -> (String, u32)>(items: &mut Vec<T>, key: F) {
    let mut seen = HashSet::new();
    items.retain(|it| seen.insert(key(it)));
}

fn collect_directives(stream: &TokenStream, model: &mut SourceModel) {
    for t in stream.tokens.iter().filter(|t| t.kind == TokenKind::Directive) {
        let body = t.text[1..].replace("\\\r\n", " ").replace("\\\n", " ");
        let body = body.trim_start();
        let name_len = body.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(body.len());
        let name = body[..name_len].to_string();
        let argument = strip_block_comments(&body[name_len..]).trim().to_string();
        if name == "include" {
            let arg = argument.as_str();
            let (inner, system) = if let Some(rest) = arg.strip_prefix('<') {
                (rest.split('>').next().unwrap_or(""), true)
            } else if let Some(rest) = arg.strip_prefix('"') {
                (rest.split('"').next().unwrap_or(""), false)
            } else {
                (arg, false)
            };
            model.includes.push(Include { name: inner.to_string(), line: t.line, system });
        }
        model.directives.push(Directive { name, argument, line: t.line });
    }
}

fn strip_block_comments(s: &str) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("*/") {
            Some(end) => rest = &rest[start + 2 + end + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

fn first_word(s: &str) -> &str {
    s.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).find(|w| !w.is_empty()).unwrap_or("")
}

/// Name tested by `#ifndef X`, `#if !defined(X)` or `#if !defined X`.
fn negated_guard_name(d: &Directive) -> Option<String> {
    match d.name.as_str() {
        "ifndef" => Some(first_word(&d.argument).to_string()).filter(|s| !s.is_empty()),
        "if" => {
            let arg: String = d.argument.chars().filter(|c| !c.is_whitespace()).collect();
            let rest = arg.strip_prefix("!defined")?;
            let name = rest.trim_start_matches('(').trim_end_matches(')');
            Some(name.to_string()).filter(|s| !s.is_empty() && first_word(s) == s)
        }
        _ => None,
    }
}

fn guard_facts(stream: &TokenStream, directives: &[Directive]) -> GuardFacts {
    let mut facts = GuardFacts {
        has_pragma_once: directives.iter().any(|d| d.name == "pragma" && first_word(&d.argument) == "once"),
        ..GuardFacts::default()
    };
    let code: Vec<&Token> = stream.tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    if code.len() < 3 || code[0].kind != TokenKind::Directive || code[1].kind != TokenKind::Directive {
        return facts;
    }
    let Some(first) = directives.first() else { return facts };
    let Some(name) = negated_guard_name(first) else { return facts };
    let second = &directives[1];
    if second.name != "define" || first_word(&second.argument) != name {
        return facts;
    }
    // The `#endif` closing the opening `#ifndef` must be the last code token.
    let mut depth = 0i32;
    let mut closing_line = None;
    for d in directives {
        match d.name.as_str() {
            "if" | "ifdef" | "ifndef" => depth += 1,
            "endif" => {
                depth -= 1;
                if depth == 0 {
                    closing_line = Some(d.line);
                    break;
                }
            }
            _ => {}
        }
    }
    let last = code[code.len() - 1];
    if last.kind == TokenKind::Directive && closing_line == Some(last.line) && last.text[1..].trim_start().starts_with("endif") {
        facts.has_ifndef_define_pair = true;
        facts.macro_name = Some(name);
    }
    facts
}

fn normalized_lines(stream: &TokenStream) -> BTreeMap<u32, String> {
    let mut lines: BTreeMap<u32, String> = BTreeMap::new();
    for t in stream.tokens.iter().filter(|t| t.kind != TokenKind::Comment) {
        let entry = lines.entry(t.line).or_default();
        if !entry.is_empty() {
            entry.push(' ');
        }
        entry.push_str(&t.text.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    lines
}

struct Declarator {
    name: usize,
    /// Parameter list `(open, close)` when this declares a function.
    params: Option<(usize, usize)>,
}

#[derive(Default, Clone, Copy)]
struct Flags {
    is_volatile: bool,
    is_static: bool,
    is_extern: bool,
    is_const: bool,
    is_inline: bool,
    is_typedef: bool,
    has_type: bool,
}

impl Flags {
    fn merge(self, o: Flags) -> Flags {
        Flags {
            is_volatile: self.is_volatile || o.is_volatile,
            is_static: self.is_static || o.is_static,
            is_extern: self.is_extern || o.is_extern,
            is_const: self.is_const || o.is_const,
            is_inline: self.is_inline || o.is_inline,
            is_typedef: self.is_typedef || o.is_typedef,
            has_type: self.has_type || o.has_type,
        }
    }
}

struct Parser<'a, 'm> {
    toks: &'a [&'a Token],
    model: &'m mut SourceModel,
}

impl<'a, 'm> Parser<'a, 'm> {
    fn text(&self, i: usize) -> &str {
        self.toks.get(i).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn line(&self, i: usize) -> u32 {
        self.toks.get(i).or(self.toks.last()).map(|t| t.line).unwrap_or(1)
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.kind == TokenKind::Identifier && !ATTRIBUTE_WORDS.contains(&t.text.as_str()))
    }

    fn error(&mut self, line: u32, message: impl Into<String>) {
        self.model.parse_errors.push(ParseError { line, message: message.into() });
    }

    /// Index of the bracket closing the one at `open`, scanning forward.
    fn matching(&self, open: usize, limit: usize) -> Option<usize> {
        let (o, c) = match self.text(open) {
            "(" => ("(", ")"),
            "[" => ("[", "]"),
            "{" => ("{", "}"),
            _ => return None,
        };
        let mut depth = 0usize;
        for i in open..limit.min(self.toks.len()) {
            let t = self.text(i);
            if t == o {
                depth += 1;
            } else if t == c {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
        }
        None
    }

    fn matching_back(&self, close: usize, floor: usize) -> Option<usize> {
        let mut depth = 0usize;
        for i in (floor..=close).rev() {
            match self.text(i) {
                ")" => depth += 1,
                "(" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i);
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Splits `[lo, hi)` at `sep` tokens outside any bracket.
    fn split_top(&self, lo: usize, hi: usize, sep: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut start = lo;
        for i in lo..hi {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                t if t == sep && depth == 0 => {
                    out.push((start, i));
                    start = i + 1;
                }
                _ => {}
            }
        }
        out.push((start, hi));
        out
    }

    fn find_top(&self, lo: usize, hi: usize, what: &str) -> Option<usize> {
        let mut depth = 0i32;
        for i in lo..hi {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                t if t == what && depth == 0 => return Some(i),
                _ => {}
            }
        }
        None
    }

    fn skip_attribute(&self, i: usize, hi: usize) -> usize {
        if self.text(i + 1) == "(" {
            self.matching(i + 1, hi).map(|c| c + 1).unwrap_or(hi)
        } else {
            i + 1
        }
    }

    fn flags(&self, lo: usize, hi: usize) -> Flags {
        let mut f = Flags::default();
        let mut i = lo;
        while i < hi {
            let t = self.text(i);
            if ATTRIBUTE_WORDS.contains(&t) {
                i = self.skip_attribute(i, hi);
                continue;
            }
            match t {
                "volatile" => f.is_volatile = true,
                "static" => f.is_static = true,
                "extern" => f.is_extern = true,
                "const" => f.is_const = true,
                "typedef" => f.is_typedef = true,
                _ if INLINE_WORDS.contains(&t) => f.is_inline = true,
                _ if TYPE_KEYWORDS.contains(&t) || self.is_ident(i) => f.has_type = true,
                "{" => {
                    i = self.matching(i, hi).unwrap_or(hi);
                }
                _ => {}
            }
            i += 1;
        }
        f
    }

    /// Finds the declared name in `[lo, hi)` (which must not include an
    /// initializer).
    fn declarator(&self, lo: usize, hi: usize) -> Option<Declarator> {
        let mut cand = None;
        let mut tag_next = false;
        let mut i = lo;
        while i < hi {
            let t = self.text(i);
            if ATTRIBUTE_WORDS.contains(&t) {
                i = self.skip_attribute(i, hi);
                continue;
            }
            match t {
                "struct" | "union" | "enum" => tag_next = true,
                "{" => {
                    i = self.matching(i, hi).unwrap_or(hi);
                    tag_next = false;
                }
                "(" => {
                    let close = self.matching(i, hi).unwrap_or(hi.saturating_sub(1));
                    if let Some(name) = cand {
                        return Some(Declarator { name, params: Some((i, close)) });
                    }
                    let inner = (i + 1..close).rev().find(|&k| self.is_ident(k));
                    return inner.map(|name| Declarator { name, params: None });
                }
                "[" => break,
                _ if self.is_ident(i) => {
                    if tag_next {
                        tag_next = false;
                    } else {
                        cand = Some(i);
                    }
                }
                _ => {}
            }
            i += 1;
        }
        cand.map(|name| Declarator { name, params: None })
    }

    fn var(&self, d: &Declarator, flags: Flags, scope: VarScope, initialized: bool) -> VarModel {
        VarModel {
            name: self.text(d.name).to_string(),
            line: self.line(d.name),
            scope,
            is_volatile: flags.is_volatile,
            is_static: flags.is_static,
            is_extern: flags.is_extern,
            is_const: flags.is_const,
            initialized_at_decl: initialized,
        }
    }

    fn params(&self, open: usize, close: usize) -> Vec<VarModel> {
        let mut out = Vec::new();
        if close <= open + 1 {
            return out;
        }
        for (lo, hi) in self.split_top(open + 1, close, ",") {
            let Some(d) = self.declarator(lo, hi) else { continue };
            let prefix = self.flags(lo, d.name);
            // A lone identifier is a type name (`void f(uint8_t)`), not a parameter.
            if !prefix.has_type {
                continue;
            }
            let flags = self.flags(lo, hi.min(d.params.map(|p| p.0).unwrap_or(hi)));
            out.push(self.var(&d, flags, VarScope::Param, false));
        }
        out
    }

    fn parse_top(&mut self) {
        let n = self.toks.len();
        let mut i = 0;
        let mut extern_c_depth = 0usize;
        while i < n {
            match self.text(i) {
                ";" => {
                    i += 1;
                    continue;
                }
                "}" => {
                    if extern_c_depth > 0 {
                        extern_c_depth -= 1;
                    } else {
                        self.error(self.line(i), "unbalanced braces: unmatched '}'");
                    }
                    i += 1;
                    continue;
                }
                "extern" if self.text(i + 1) == "\"C\"" && self.text(i + 2) == "{" => {
                    extern_c_depth += 1;
                    i += 3;
                    continue;
                }
                _ => {}
            }
            let start = i;
            let mut j = i;
            let mut depth = 0i32;
            loop {
                if j >= n {
                    self.error(self.line(start), "declaration not terminated by ';'");
                    self.declaration(start, n);
                    i = n;
                    break;
                }
                match self.text(j) {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth = (depth - 1).max(0),
                    ";" if depth == 0 => {
                        self.declaration(start, j);
                        i = j + 1;
                        break;
                    }
                    "}" if depth == 0 => {
                        self.declaration(start, j);
                        i = j;
                        break;
                    }
                    "{" if depth == 0 => {
                        if let Some(name) = self.function_head(start, j) {
                            i = self.function_definition(start, name, j);
                            break;
                        }
                        match self.matching(j, n) {
                            Some(c) => j = c,
                            None => {
                                self.error(self.line(j), format!("unbalanced braces: '{{' at line {} is never closed", self.line(j)));
                                i = n;
                                break;
                            }
                        }
                    }
                    _ => {}
                }
                j += 1;
            }
        }
    }

    /// Index of the function name when `[start, brace)` is a function
    /// definition head.
    fn function_head(&self, start: usize, brace: usize) -> Option<usize> {
        let mut last = brace.checked_sub(1)?;
        loop {
            if last < start || self.text(last) != ")" {
                return None;
            }
            let open = self.matching_back(last, start)?;
            let name = open.checked_sub(1)?;
            if name < start {
                return None;
            }
            if ATTRIBUTE_WORDS.contains(&self.text(name)) {
                last = name.checked_sub(1)?;
                continue;
            }
            if !self.is_ident(name) || self.find_top(start, open, "=").is_some() {
                return None;
            }
            return Some(name);
        }
    }

    /// Returns the index just past the body.
    fn function_definition(&mut self, start: usize, name: usize, open: usize) -> usize {
        let n = self.toks.len();
        let close = self.matching(open, n);
        if close.is_none() {
            self.error(self.line(open), format!("unbalanced braces: '{{' at line {} is never closed", self.line(open)));
        }
        let end = close.unwrap_or(n);
        let pclose = self.matching(name + 1, open).unwrap_or(open - 1);
        let flags = self.flags(start, name);
        let mut f = FunctionModel::declaration(self.text(name).to_string(), self.line(name));
        f.is_definition = true;
        f.is_static = flags.is_static;
        f.is_inline = flags.is_inline;
        f.params = self.params(name + 1, pclose);
        f.body = Some(LineSpan { start: self.line(open), end: self.line(end.min(n - 1)) });

        let mut walker = BodyWalker {
            p: self,
            f: &mut f,
            scopes: Vec::new(),
        };
        let param_names = walker.f.params.iter().map(|p| p.name.clone()).collect();
        walker.scopes.push(param_names);
        walker.walk(open + 1, end);
        self.model.functions.push(f);
        end + 1
    }

    fn declaration(&mut self, lo: usize, hi: usize) {
        if lo >= hi {
            return;
        }
        let segs = self.split_top(lo, hi, ",");
        let mut shared = Flags::default();
        for (k, &(slo, shi)) in segs.iter().enumerate() {
            let eq = self.find_top(slo, shi, "=");
            let Some(d) = self.declarator(slo, eq.unwrap_or(shi)) else { continue };
            let prefix = self.flags(slo, d.name);
            if k == 0 {
                let first_ptr = (slo..d.name).find(|&i| self.text(i) == "*").unwrap_or(d.name);
                shared = self.flags(slo, first_ptr);
                shared.has_type = prefix.has_type;
                if prefix.is_typedef {
                    return;
                }
            }
            let flags = shared.merge(prefix);
            if let Some((popen, pclose)) = d.params {
                // Prototypes need a return type; `FOO(x);` is a macro invocation.
                if k == 0 && flags.has_type {
                    let mut f = FunctionModel::declaration(self.text(d.name).to_string(), self.line(d.name));
                    f.is_static = flags.is_static;
                    f.is_inline = flags.is_inline;
                    f.params = self.params(popen, pclose);
                    self.model.functions.push(f);
                }
                continue;
            }
            if !flags.has_type {
                continue;
            }
            let v = self.var(&d, flags, VarScope::File, eq.is_some());
            self.model.global_vars.push(v);
        }
    }
}

struct BodyWalker<'w, 'a, 'm> {
    p: &'w Parser<'a, 'm>,
    f: &'w mut FunctionModel,
    scopes: Vec<Vec<String>>,
}

impl BodyWalker<'_, '_, '_> {
    fn text(&self, i: usize) -> &str {
        self.p.text(i)
    }

    fn walk(&mut self, lo: usize, hi: usize) {
        self.scopes.push(Vec::new());
        let mut stmt = true;
        let mut parens: Vec<bool> = Vec::new();
        let mut header_next = false;
        let mut do_tails = HashSet::new();
        let mut i = lo;
        while i < hi {
            let t = self.p.toks[i];
            let text = t.text.as_str();
            match text {
                "{" => {
                    self.scopes.push(Vec::new());
                    stmt = true;
                    i += 1;
                }
                "}" => {
                    if self.scopes.len() > 2 {
                        self.scopes.pop();
                    }
                    stmt = true;
                    i += 1;
                }
                ";" | "..." => {
                    if parens.is_empty() {
                        stmt = true;
                    }
                    i += 1;
                }
                "(" => {
                    parens.push(header_next);
                    header_next = false;
                    stmt = false;
                    i += 1;
                }
                ")" => {
                    stmt = parens.pop() == Some(true);
                    i += 1;
                }
                "for" => {
                    self.f.loops.push(LoopSite { kind: LoopKind::For, line: t.line });
                    i += 1;
                    stmt = false;
                    if self.text(i) == "(" {
                        parens.push(true);
                        i += 1;
                        if self.looks_like_decl(i, true) {
                            i = self.local_decl(i, hi);
                        }
                    }
                }
                "while" => {
                    if !do_tails.contains(&i) {
                        self.f.loops.push(LoopSite { kind: LoopKind::While, line: t.line });
                    }
                    header_next = true;
                    stmt = false;
                    i += 1;
                }
                "do" => {
                    self.f.loops.push(LoopSite { kind: LoopKind::Do, line: t.line });
                    if let Some(tail) = self.do_tail(i + 1, hi) {
                        do_tails.insert(tail);
                    }
                    stmt = true;
                    i += 1;
                }
                "if" | "switch" => {
                    header_next = true;
                    stmt = false;
                    i += 1;
                }
                "else" => {
                    stmt = true;
                    i += 1;
                }
                "case" => {
                    i = self.skip_case_label(i + 1, hi);
                    stmt = true;
                }
                "default" if self.text(i + 1) == ":" => {
                    i += 2;
                    stmt = true;
                }
                "goto" => {
                    i += 2;
                    stmt = false;
                }
                _ if stmt && t.kind == TokenKind::Keyword && DECL_KEYWORDS.contains(&text) => {
                    i = self.local_decl(i, hi);
                    stmt = true;
                }
                _ if stmt && self.looks_like_decl(i, false) => {
                    i = self.local_decl(i, hi);
                    stmt = true;
                }
                _ if stmt && self.p.is_ident(i) && self.text(i + 1) == ":" => {
                    i += 2;
                    stmt = true;
                }
                _ => {
                    if self.p.is_ident(i) {
                        self.visit_ident(i, hi);
                    }
                    stmt = false;
                    i += 1;
                }
            }
        }
    }

    /// Declaration starting with a typedef name: `uint32_t i;`, `T *p = ..`.
    fn looks_like_decl(&self, i: usize, allow_keyword: bool) -> bool {
        let t0 = self.text(i);
        if allow_keyword && DECL_KEYWORDS.contains(&t0) {
            return true;
        }
        if !self.p.is_ident(i) {
            return false;
        }
        let t1 = self.text(i + 1);
        if self.p.is_ident(i + 1) || QUALIFIERS.contains(&t1) {
            return true;
        }
        if t1 == "*" {
            let mut j = i + 1;
            while self.text(j) == "*" || QUALIFIERS.contains(&self.text(j)) {
                j += 1;
            }
            return self.p.is_ident(j) && matches!(self.text(j + 1), ";" | "=" | "," | "[" | ")");
        }
        false
    }

    /// Parses a local declaration at `i`; returns the index after its `;`.
    fn local_decl(&mut self, i: usize, hi: usize) -> usize {
        let end = self.p.find_top(i, hi, ";").unwrap_or(hi);
        let segs = self.p.split_top(i, end, ",");
        let mut shared = Flags::default();
        for (k, &(slo, shi)) in segs.iter().enumerate() {
            let eq = self.p.find_top(slo, shi, "=");
            let Some(d) = self.p.declarator(slo, eq.unwrap_or(shi)) else { continue };
            let prefix = self.p.flags(slo, d.name);
            if k == 0 {
                if prefix.is_typedef {
                    return end + 1;
                }
                let first_ptr = (slo..d.name).find(|&j| self.text(j) == "*").unwrap_or(d.name);
                shared = self.p.flags(slo, first_ptr);
            }
            if d.params.is_some() {
                continue;
            }
            let flags = shared.merge(prefix);
            let v = self.p.var(&d, flags, VarScope::Local, eq.is_some());
            if let Some(scope) = self.scopes.last_mut() {
                scope.push(v.name.clone());
            }
            self.f.locals.push(v);
            if let Some(eq) = eq {
                self.scan_expr(eq + 1, shi);
            }
        }
        end + 1
    }

    fn scan_expr(&mut self, lo: usize, hi: usize) {
        for k in lo..hi {
            if self.p.is_ident(k) {
                self.visit_ident(k, hi);
            }
        }
    }

    fn do_tail(&self, body: usize, hi: usize) -> Option<usize> {
        let end = if self.text(body) == "{" {
            self.p.matching(body, hi)?
        } else {
            self.p.find_top(body, hi, ";")?
        };
        (self.text(end + 1) == "while").then_some(end + 1)
    }

    fn skip_case_label(&self, mut i: usize, hi: usize) -> usize {
        let mut ternary = 0;
        while i < hi {
            match self.text(i) {
                "?" => ternary += 1,
                ":" if ternary == 0 => return i + 1,
                ":" => ternary -= 1,
                ";" | "{" | "}" => return i,
                _ => {}
            }
            i += 1;
        }
        hi
    }

    fn visit_ident(&mut self, i: usize, hi: usize) {
        let prev = if i > 0 { self.text(i - 1) } else { "" };
        if prev == "." || prev == "->" {
            return;
        }
        let name = self.text(i).to_string();
        let line = self.p.line(i);
        if self.text(i + 1) == "(" {
            let close = self.p.matching(i + 1, hi.max(i + 2)).unwrap_or(hi);
            let ident_args = if close > i + 2 {
                self.p
                    .split_top(i + 2, close, ",")
                    .into_iter()
                    .filter_map(|(lo, hi)| match hi - lo {
                        1 if self.p.is_ident(lo) => Some(self.text(lo).to_string()),
                        2 if self.text(lo) == "&" && self.p.is_ident(lo + 1) => Some(self.text(lo + 1).to_string()),
                        _ => None,
                    })
                    .collect()
            } else {
                Vec::new()
            };
            self.f.calls.push(CallSite { callee: name, line, ident_args });
            return;
        }
        if is_keyword(&name) {
            return;
        }
        let local = self.scopes.iter().any(|s| s.contains(&name));
        let access = Access { name, line, local };
        if prev == "++" || prev == "--" || self.is_write_target(i, hi) {
            self.f.writes.push(access);
        } else {
            self.f.reads.push(access);
        }
    }

    /// `x = ..`, `x[i] += ..`, `x.f = ..`, `x++`.
    fn is_write_target(&self, i: usize, hi: usize) -> bool {
        let mut k = i + 1;
        loop {
            match self.text(k) {
                "[" => match self.p.matching(k, hi) {
                    Some(c) => k = c + 1,
                    None => return false,
                },
                "." | "->" => k += 2,
                _ => break,
            }
        }
        let next = self.text(k);
        ASSIGN_OPS.contains(&next) || next == "++" || next == "--"
    }
}
