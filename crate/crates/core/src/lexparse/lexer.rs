//! Lossless C tokenizer.
//!
//! Whitespace (including backslash-newline continuations outside tokens) is
//! kept as leading trivia on the following token, so `TokenStream::reconstruct`
//! reproduces the input exactly. Comments and preprocessor lines are tokens of
//! their own and are never split further.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Punctuator,
    Directive,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub column: u32,
    /// Whitespace between the previous token and this one.
    pub leading: String,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_significant(&self) -> bool {
        !matches!(self.kind, TokenKind::Comment | TokenKind::Directive)
    }

    /// Last line this token touches (block comments and continued directives
    /// may span several).
    pub fn end_line(&self) -> u32 {
        self.line + self.text.matches('\n').count() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Whitespace after the last token.
    pub trailing: String,
    pub errors: Vec<LexError>,
}

impl TokenStream {
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.leading);
            out.push_str(&t.text);
        }
        out.push_str(&self.trailing);
        out
    }

    pub fn significant(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_significant())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("source is not text (NUL byte at offset {offset})")]
pub struct DecodeError {
    pub offset: usize,
}

/// Decodes source bytes as UTF-8, falling back to Latin-1 for extended-ASCII
/// files. Anything containing NUL bytes is rejected as binary.
pub fn decode_source(bytes: &[u8]) -> Result<Cow<'_, str>, DecodeError> {
    if let Some(offset) = bytes.iter().position(|&b| b == 0) {
        return Err(DecodeError { offset });
    }
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(Cow::Borrowed(s)),
        Err(_) => Ok(Cow::Owned(bytes.iter().map(|&b| b as char).collect())),
    }
}

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool",
    "_Complex", "_Generic", "_Imaginary", "_Noreturn", "_Static_assert", "_Thread_local",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

const PUNCT3: &[&str] = &["<<=", ">>=", "..."];
const PUNCT2: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=",
    "-=", "&=", "^=", "|=", "##",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    at_line_start: bool,
    pending_ws: usize,
    out: TokenStream,
}

pub fn tokenize(text: &str) -> TokenStream {
    let mut lx = Lexer {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        line: 1,
        line_start: 0,
        at_line_start: true,
        pending_ws: 0,
        out: TokenStream::default(),
    };
    lx.run();
    lx.out
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> u8 {
        *self.bytes.get(self.pos + off).unwrap_or(&0)
    }

    fn run(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.peek(0);
            if matches!(c, b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c) {
                if c == b'\n' {
                    self.at_line_start = true;
                }
                self.advance_trivia(1);
                continue;
            }
            if c == b'\\' && self.continuation_len(self.pos) > 0 {
                let n = self.continuation_len(self.pos);
                self.advance_trivia(n);
                continue;
            }
            let start = self.pos;
            let kind = self.lex_token();
            self.emit(kind, start);
        }
        let ws_start = self.pos - self.pending_ws;
        self.out.trailing = self.src[ws_start..self.pos].to_string();
    }

    /// Length of a backslash-newline sequence starting at `at`, or 0.
    fn continuation_len(&self, at: usize) -> usize {
        match (self.bytes.get(at + 1), self.bytes.get(at + 2)) {
            (Some(b'\n'), _) => 2,
            (Some(b'\r'), Some(b'\n')) => 3,
            _ => 0,
        }
    }

    fn advance_trivia(&mut self, n: usize) {
        self.pos += n;
        self.pending_ws += n;
    }

    fn column_of(&self, at: usize) -> u32 {
        self.src[self.line_start..at].chars().count() as u32 + 1
    }

    fn emit(&mut self, kind: TokenKind, start: usize) {
        let ws_start = start - self.pending_ws;
        let leading = &self.src[ws_start..start];
        // Newlines inside leading trivia move the line counter before the token.
        for (i, b) in leading.bytes().enumerate() {
            if b == b'\n' {
                self.line += 1;
                self.line_start = ws_start + i + 1;
            }
        }
        let text = &self.src[start..self.pos];
        let token = Token {
            kind,
            text: text.to_string(),
            line: self.line,
            column: self.column_of(start),
            leading: leading.to_string(),
        };
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                self.line += 1;
                self.line_start = start + i + 1;
            }
        }
        self.pending_ws = 0;
        self.at_line_start = false;
        self.out.tokens.push(token);
    }

    fn error(&mut self, at: usize, message: &str) {
        // Line of `at` may not have been counted yet if it follows trivia.
        let mut line = self.line;
        let mut line_start = self.line_start;
        for (i, b) in self.src[line_start..at].bytes().enumerate() {
            if b == b'\n' {
                line += 1;
                line_start = self.line_start + i + 1;
            }
        }
        let column = self.src[line_start..at].chars().count() as u32 + 1;
        self.out.errors.push(LexError { line, column, message: message.to_string() });
    }

    fn lex_token(&mut self) -> TokenKind {
        let c = self.peek(0);
        if c == b'#' && self.at_line_start {
            self.lex_directive();
            return TokenKind::Directive;
        }
        if c == b'/' && self.peek(1) == b'/' {
            self.lex_line_comment();
            return TokenKind::Comment;
        }
        if c == b'/' && self.peek(1) == b'*' {
            self.lex_block_comment();
            return TokenKind::Comment;
        }
        if c == b'"' || c == b'\'' {
            self.lex_quoted(c);
            return TokenKind::Literal;
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_ascii_digit()) {
            self.lex_number();
            return TokenKind::Literal;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            let q = self.peek(0);
            if (q == b'"' || q == b'\'') && matches!(word, "L" | "u" | "U" | "u8") {
                self.lex_quoted(q);
                return TokenKind::Literal;
            }
            return if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
        }
        self.lex_punct();
        TokenKind::Punctuator
    }

    fn lex_punct(&mut self) {
        let rest = &self.src[self.pos..];
        for p in PUNCT3.iter().chain(PUNCT2) {
            if rest.starts_with(p) {
                self.pos += p.len();
                return;
            }
        }
        let ch = rest.chars().next().map(char::len_utf8).unwrap_or(1);
        self.pos += ch;
    }

    fn lex_number(&mut self) {
        self.pos += 1;
        loop {
            let c = self.peek(0);
            let prev = self.bytes[self.pos - 1];
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                self.pos += 1;
            } else if (c == b'+' || c == b'-') && matches!(prev, b'e' | b'E' | b'p' | b'P') {
                self.pos += 1;
            } else if c == b'\'' && self.peek(1).is_ascii_alphanumeric() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// String or character literal. An unescaped newline or EOF before the
    /// closing quote is an error; the literal is cut at end of line.
    fn lex_quoted(&mut self, quote: u8) {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                0 if self.pos >= self.bytes.len() => break,
                b'\\' => {
                    self.pos += 1;
                    if self.pos < self.bytes.len() {
                        self.pos += self.src[self.pos..].chars().next().map(char::len_utf8).unwrap_or(1);
                    }
                    continue;
                }
                b'\n' => break,
                c if c == quote => {
                    self.pos += 1;
                    return;
                }
                _ => {
                    self.pos += self.src[self.pos..].chars().next().map(char::len_utf8).unwrap_or(1);
                }
            }
        }
        // Do not swallow a trailing '\r' of a CRLF line.
        if self.pos > start + 1 && self.bytes[self.pos - 1] == b'\r' && self.peek(0) == b'\n' {
            self.pos -= 1;
        }
        let what = if quote == b'"' { "string literal" } else { "character literal" };
        self.error(start, &format!("unterminated {what}"));
    }

    fn lex_line_comment(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.peek(0);
            if c == b'\\' && self.continuation_len(self.pos) > 0 {
                self.pos += self.continuation_len(self.pos);
                continue;
            }
            if c == b'\n' || (c == b'\r' && self.peek(1) == b'\n') {
                break;
            }
            self.pos += 1;
        }
    }

    fn lex_block_comment(&mut self) {
        let start = self.pos;
        match self.src[self.pos + 2..].find("*/") {
            Some(off) => self.pos += 2 + off + 2,
            None => {
                let eol = self.src[self.pos..].find('\n').map(|o| self.pos + o).unwrap_or(self.bytes.len());
                self.pos = eol;
                if self.pos > start && self.bytes[self.pos - 1] == b'\r' {
                    self.pos -= 1;
                }
                self.error(start, "unterminated comment");
            }
        }
    }

    /// `#` at the start of a line through the end of the (possibly continued)
    /// line. A `//` comment ends the directive; block comments and literals
    /// are carried inside it.
    fn lex_directive(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.peek(0);
            match c {
                b'\n' => break,
                b'\\' if self.continuation_len(self.pos) > 0 => {
                    self.pos += self.continuation_len(self.pos);
                }
                b'/' if self.peek(1) == b'/' => break,
                b'/' if self.peek(1) == b'*' => match self.src[self.pos + 2..].find("*/") {
                    Some(off) => self.pos += 2 + off + 2,
                    None => break,
                },
                b'"' | b'\'' => {
                    // `#include <it's.h>` style oddities: stop at end of line.
                    let save = self.out.errors.len();
                    self.lex_quoted(c);
                    self.out.errors.truncate(save);
                }
                _ => {
                    self.pos += self.src[self.pos..].chars().next().map(char::len_utf8).unwrap_or(1);
                }
            }
        }
        while self.pos > 0 && matches!(self.bytes[self.pos - 1], b' ' | b'\t' | b'\r') {
            self.pos -= 1;
        }
    }
}
