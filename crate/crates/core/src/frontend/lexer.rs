use serde::{Deserialize, Serialize};

use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntegerLiteral,
    FloatLiteral,
    Punctuator,
    PragmaLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

const KEYWORDS: &[&str] = &[
    "int", "float", "double", "void", "char", "long", "short", "unsigned", "signed", "const",
    "for", "while", "do", "if", "else", "return", "break", "continue", "struct", "static",
];

const PUNCTUATORS: &[&str] = &[
    "<<=", ">>=", "...", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "==", "!=",
    "<=", ">=", "&&", "||", "<<", ">>", "->", "(", ")", "{", "}", "[", "]", ";", ",", "+", "-",
    "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?", ":", ".",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }
}

/// Splits C source into tokens. Comments are dropped; each `#pragma omp`
/// logical line becomes a single [`TokenKind::PragmaLine`] token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor { chars: source.chars().collect(), pos: 0, line: 1, column: 1, _src: source };
    let mut tokens = Vec::new();
    // Whether only whitespace has been seen since the last newline.
    let mut line_start = true;

    while let Some(c) = cur.peek() {
        if c == '\n' {
            cur.bump();
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (line, column) = (cur.line, cur.column);
        if cur.starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.peek().is_none() {
                    return Err(FrontendError::Lex { line, column, message: "unterminated block comment".into() });
                }
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '#' {
            if !line_start {
                return Err(FrontendError::Lex { line, column, message: "unexpected `#`".into() });
            }
            let mut text = String::new();
            while let Some(c) = cur.peek() {
                if c == '\\' && cur.peek_at(1) == Some('\n') {
                    cur.bump();
                    cur.bump();
                    text.push(' ');
                    continue;
                }
                if c == '\n' {
                    break;
                }
                // A trailing `//` comment ends the directive text.
                if cur.starts_with("//") {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                    break;
                }
                text.push(c);
                cur.bump();
            }
            let words: Vec<&str> = text.split_whitespace().collect();
            let is_omp = words.len() >= 2 && words[0] == "#pragma" && words[1] == "omp"
                || words.first().is_some_and(|w| *w == "#")
                    && words.get(1) == Some(&"pragma")
                    && words.get(2) == Some(&"omp");
            if !is_omp {
                return Err(FrontendError::Lex {
                    line,
                    column,
                    message: format!("unsupported preprocessor line `{}`", text.trim()),
                });
            }
            let normalized = words.join(" ").replacen("# pragma", "#pragma", 1);
            tokens.push(Token { kind: TokenKind::PragmaLine, text: normalized, line, column });
            continue;
        }
        line_start = false;

        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    text.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = if is_keyword(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
            tokens.push(Token { kind, text, line, column });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            tokens.push(lex_number(&mut cur, line, column)?);
            continue;
        }
        if let Some(p) = PUNCTUATORS.iter().find(|p| cur.starts_with(p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            tokens.push(Token { kind: TokenKind::Punctuator, text: p.to_string(), line, column });
            continue;
        }
        return Err(FrontendError::Lex { line, column, message: format!("unrecognized character `{c}`") });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, line: usize, column: usize) -> Result<Token, FrontendError> {
    let mut text = String::new();
    let mut is_float = false;
    if cur.starts_with("0x") || cur.starts_with("0X") {
        text.push(cur.bump().unwrap());
        text.push(cur.bump().unwrap());
        while let Some(c) = cur.peek().filter(|c| c.is_ascii_hexdigit()) {
            text.push(c);
            cur.bump();
        }
        if text.len() == 2 {
            return Err(FrontendError::Lex { line, column, message: "hex literal without digits".into() });
        }
    } else {
        while let Some(c) = cur.peek().filter(|c| c.is_ascii_digit()) {
            text.push(c);
            cur.bump();
        }
        if cur.peek() == Some('.') {
            is_float = true;
            text.push('.');
            cur.bump();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_digit()) {
                text.push(c);
                cur.bump();
            }
        }
        if matches!(cur.peek(), Some('e' | 'E')) {
            let sign = matches!(cur.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if cur.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                for _ in 0..digit_at {
                    text.push(cur.bump().unwrap());
                }
                while let Some(c) = cur.peek().filter(|c| c.is_ascii_digit()) {
                    text.push(c);
                    cur.bump();
                }
            }
        }
    }
    while let Some(c) = cur.peek().filter(|c| matches!(c, 'f' | 'F' | 'l' | 'L' | 'u' | 'U')) {
        if matches!(c, 'f' | 'F') {
            is_float = true;
        }
        text.push(c);
        cur.bump();
    }
    if cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
        let (l, col) = (cur.line, cur.column);
        return Err(FrontendError::Lex { line: l, column: col, message: format!("invalid suffix on number `{text}`") });
    }
    let kind = if is_float { TokenKind::FloatLiteral } else { TokenKind::IntegerLiteral };
    Ok(Token { kind, text, line, column })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn simple_assignment() {
        use TokenKind::*;
        assert_eq!(
            texts("x = 50;"),
            vec![
                (Identifier, "x".into()),
                (Punctuator, "=".into()),
                (IntegerLiteral, "50".into()),
                (Punctuator, ";".into())
            ]
        );
    }

    #[test]
    fn pragma_line_is_one_token() {
        let toks = tokenize("#pragma omp parallel for\nfor(i=0;i<n;i++) x++;").unwrap();
        assert_eq!(toks[0].kind, TokenKind::PragmaLine);
        assert_eq!(toks[0].text, "#pragma omp parallel for");
        assert_eq!(toks[1].text, "for");
        assert_eq!(toks[1].line, 2);
    }

    #[test]
    fn pragma_continuation_lines() {
        let toks = tokenize("  #pragma omp target teams \\\n   distribute parallel for\nx;").unwrap();
        assert_eq!(toks[0].text, "#pragma omp target teams distribute parallel for");
        assert_eq!(toks[1].line, 3);
    }

    #[test]
    fn rejects_unknown_character() {
        match tokenize("int @;") {
            Err(FrontendError::Lex { line: 1, column: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_include() {
        assert!(matches!(tokenize("#include <stdio.h>\n"), Err(FrontendError::Lex { line: 1, column: 1, .. })));
    }

    #[test]
    fn comments_are_dropped() {
        let toks = texts("a /* b */ c // d\n e");
        assert_eq!(toks.iter().map(|t| t.1.as_str()).collect::<Vec<_>>(), ["a", "c", "e"]);
        assert!(tokenize("/* open").is_err());
    }

    #[test]
    fn numbers() {
        use TokenKind::*;
        assert_eq!(
            texts("1 2.5 .5 1e3 3.0f 10u 0x1F"),
            vec![
                (IntegerLiteral, "1".into()),
                (FloatLiteral, "2.5".into()),
                (FloatLiteral, ".5".into()),
                (FloatLiteral, "1e3".into()),
                (FloatLiteral, "3.0f".into()),
                (IntegerLiteral, "10u".into()),
                (IntegerLiteral, "0x1F".into()),
            ]
        );
    }

    #[test]
    fn positions_are_ordered() {
        let toks = tokenize("int a;\n  a += 2;\n").unwrap();
        let pos: Vec<_> = toks.iter().map(|t| (t.line, t.column)).collect();
        let mut sorted = pos.clone();
        sorted.sort();
        assert_eq!(pos, sorted);
        assert_eq!((toks[3].line, toks[3].column), (2, 3));
    }
}
