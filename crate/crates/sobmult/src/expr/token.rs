//! Lexer for the symbol grammar.

use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Paren,
    End,
}

/// One lexeme with its 0-based character offset in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub position: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // Exponent suffix only when digits actually follow; otherwise the
            // 'e' is left for the identifier lexer.
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                lexeme: chars[start..i].iter().collect(),
                position: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Identifier,
                lexeme: chars[start..i].iter().collect(),
                position: start,
            });
            continue;
        }
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                tokens.push(Token { kind: TokenKind::Operator, lexeme: c.to_string(), position: start });
                i += 1;
            }
            '(' | ')' => {
                tokens.push(Token { kind: TokenKind::Paren, lexeme: c.to_string(), position: start });
                i += 1;
            }
            _ => {
                return Err(ParseError { position: start, kind: ParseErrorKind::UnexpectedCharacter(c) });
            }
        }
    }
    tokens.push(Token { kind: TokenKind::End, lexeme: String::new(), position: chars.len() });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_strictly_increase() {
        let toks = tokenize("sin(1/x) + 2.5e-1").unwrap();
        for w in toks.windows(2) {
            assert!(w[0].position < w[1].position, "{w:?}");
        }
        assert_eq!(toks.last().unwrap().kind, TokenKind::End);
    }

    #[test]
    fn lexemes_nonempty_except_end() {
        let toks = tokenize("x^2").unwrap();
        for t in &toks[..toks.len() - 1] {
            assert!(!t.lexeme.is_empty());
        }
        assert!(toks.last().unwrap().lexeme.is_empty());
    }

    #[test]
    fn number_with_exponent_and_bare_e() {
        let toks = tokenize("2e3").unwrap();
        assert_eq!(toks[0].lexeme, "2e3");
        // No digits after the sign: 'e' stays an identifier.
        let toks = tokenize("2e+").unwrap();
        assert_eq!(toks[0].lexeme, "2");
        assert_eq!(toks[1].lexeme, "e");
    }

    #[test]
    fn rejects_unknown_characters() {
        let err = tokenize("1 $ 2").unwrap_err();
        assert_eq!(err.position, 2);
    }
}
