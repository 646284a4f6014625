//! S-expression reader for SMT-LIB v2 scripts and solver responses.

use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s) => Some(s),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::Atom(_) => None,
            SExpr::List(items) => Some(items),
        }
    }
}

impl std::fmt::Display for SExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SExpr::Atom(s) => write!(f, "{s}"),
            SExpr::List(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses every top-level s-expression in `input`. Comments (`;` to end of
/// line) are skipped; string literals and `|`-quoted symbols are kept as
/// single atoms including their delimiters.
pub fn parse_all(input: &str) -> Result<Vec<SExpr>, Error> {
    let tokens = tokenize(input)?;
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        let (expr, next) = parse_one(&tokens, pos)?;
        out.push(expr);
        pos = next;
    }
    Ok(out)
}

fn parse_one(tokens: &[String], pos: usize) -> Result<(SExpr, usize), Error> {
    match tokens.get(pos) {
        None => Err(Error::Parse("unexpected end of input".into())),
        Some(t) if t == "(" => {
            let mut items = Vec::new();
            let mut cur = pos + 1;
            loop {
                match tokens.get(cur) {
                    None => return Err(Error::Parse("unbalanced '('".into())),
                    Some(t) if t == ")" => return Ok((SExpr::List(items), cur + 1)),
                    Some(_) => {
                        let (item, next) = parse_one(tokens, cur)?;
                        items.push(item);
                        cur = next;
                    }
                }
            }
        }
        Some(t) if t == ")" => Err(Error::Parse("unexpected ')'".into())),
        Some(t) => Ok((SExpr::Atom(t.clone()), pos + 1)),
    }
}

fn tokenize(input: &str) -> Result<Vec<String>, Error> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => tokens.push("(".to_string()),
            ')' => tokens.push(")".to_string()),
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                let mut s = String::from('"');
                loop {
                    match chars.next() {
                        None => return Err(Error::Parse("unterminated string".into())),
                        Some('"') => {
                            // SMT-LIB escapes a quote by doubling it.
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                s.push('"');
                            } else {
                                s.push('"');
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                tokens.push(s);
            }
            '|' => {
                let mut s = String::from('|');
                loop {
                    match chars.next() {
                        None => return Err(Error::Parse("unterminated |symbol|".into())),
                        Some('|') => {
                            s.push('|');
                            break;
                        }
                        Some(c) => s.push(c),
                    }
                }
                tokens.push(s);
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&next) = chars.peek() {
                    if next.is_whitespace() || next == '(' || next == ')' || next == ';' {
                        break;
                    }
                    s.push(next);
                    chars.next();
                }
                tokens.push(s);
            }
        }
    }
    Ok(tokens)
}
