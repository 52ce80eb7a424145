use super::ast::Loc;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    /// A `/// [[ ... ]]` line; holds the text between the brackets.
    Contract(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

const PUNCTS: [&str; 33] = [
    "<<=", ">>=", "&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "++", "--", "+=", "-=", "*=",
    "/=", "%=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "(", ")", "{", "}", "[", "]", ";",
];
const PUNCTS_TAIL: [&str; 3] = [",", ":", "."];

/// Tokenizes `src`. `origin` shifts locations, for text embedded in a
/// contract comment.
pub fn lex(src: &str, origin: Loc) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = origin.line;
    let mut col = origin.col;
    let err = |line, col, msg: String| FrontendError::Syntax {
        loc: Loc::new(line, col),
        message: msg,
    };
    while i < chars.len() {
        let c = chars[i];
        let start = Loc::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let end = chars[i..]
                .iter()
                .position(|&x| x == '\n')
                .map_or(chars.len(), |p| i + p);
            let text: String = chars[i..end].iter().collect();
            if let Some(rest) = text.strip_prefix("///") {
                let trimmed = rest.trim();
                if trimmed.starts_with("[[") {
                    let Some(inner) = trimmed
                        .strip_prefix("[[")
                        .and_then(|t| t.strip_suffix("]]"))
                    else {
                        return Err(err(line, col, "unterminated contract annotation".into()));
                    };
                    // column of the first character after `[[`
                    let offset = text.find("[[").unwrap() + 2;
                    out.push(Token {
                        tok: Tok::Contract(inner.to_string()),
                        loc: Loc::new(line, col + offset as u32),
                    });
                }
            }
            col += (end - i) as u32;
            i = end;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut j = i + 2;
            line_col_advance(&chars[i..i + 2], &mut line, &mut col);
            loop {
                if j + 1 >= chars.len() {
                    return Err(err(
                        start.line,
                        start.col,
                        "unterminated block comment".into(),
                    ));
                }
                if chars[j] == '*' && chars[j + 1] == '/' {
                    line_col_advance(&chars[j..j + 2], &mut line, &mut col);
                    j += 2;
                    break;
                }
                line_col_advance(&chars[j..j + 1], &mut line, &mut col);
                j += 1;
            }
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[i..j].iter().collect()),
                loc: start,
            });
            col += (j - i) as u32;
            i = j;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let (tok, len) = lex_number(&chars[i..]).map_err(|m| err(line, col, m))?;
            out.push(Token { tok, loc: start });
            col += len as u32;
            i += len;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let Some(p) = PUNCTS
            .iter()
            .chain(PUNCTS_TAIL.iter())
            .find(|p| rest.starts_with(**p))
        else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        };
        out.push(Token {
            tok: Tok::Punct(p),
            loc: start,
        });
        i += p.len();
        col += p.len() as u32;
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    Ok(out)
}

fn line_col_advance(cs: &[char], line: &mut u32, col: &mut u32) {
    for &c in cs {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    }
}

fn lex_number(cs: &[char]) -> Result<(Tok, usize), String> {
    let mut j = 0;
    let mut is_float = false;
    if cs.len() > 1 && cs[0] == '0' && (cs[1] == 'x' || cs[1] == 'X') {
        j = 2;
        while j < cs.len() && cs[j].is_ascii_hexdigit() {
            j += 1;
        }
        let text: String = cs[2..j].iter().collect();
        let v = i64::from_str_radix(&text, 16).map_err(|e| format!("bad hex literal: {e}"))?;
        return Ok((Tok::Int(v), j));
    }
    while j < cs.len() && cs[j].is_ascii_digit() {
        j += 1;
    }
    if j < cs.len() && cs[j] == '.' {
        is_float = true;
        j += 1;
        while j < cs.len() && cs[j].is_ascii_digit() {
            j += 1;
        }
    }
    if j < cs.len() && (cs[j] == 'e' || cs[j] == 'E') {
        let mut k = j + 1;
        if k < cs.len() && (cs[k] == '+' || cs[k] == '-') {
            k += 1;
        }
        if k < cs.len() && cs[k].is_ascii_digit() {
            is_float = true;
            while k < cs.len() && cs[k].is_ascii_digit() {
                k += 1;
            }
            j = k;
        }
    }
    let text: String = cs[..j].iter().collect();
    let mut len = j;
    if j < cs.len() && (cs[j] == 'f' || cs[j] == 'F') {
        is_float = true;
        len += 1;
    }
    if is_float {
        let v: f64 = text
            .parse()
            .map_err(|e| format!("bad float literal: {e}"))?;
        Ok((Tok::Float(v), len))
    } else {
        let v: i64 = text
            .parse()
            .map_err(|e| format!("bad integer literal: {e}"))?;
        Ok((Tok::Int(v), len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s, Loc::new(1, 1))
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            toks("x<<=1.5f+0x1F"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("<<="),
                Tok::Float(1.5),
                Tok::Punct("+"),
                Tok::Int(31),
                Tok::Eof
            ]
        );
        assert_eq!(toks("3.4028235e38")[0], Tok::Float(3.4028235e38));
        assert_eq!(toks("1e-5")[0], Tok::Float(1e-5));
    }

    #[test]
    fn contract_comments_are_tokens() {
        let t = lex(
            "/// [[ requires: x >= 0.0 ]]\n// plain\n/* block\n */ int",
            Loc::new(1, 1),
        )
        .unwrap();
        assert_eq!(t[0].tok, Tok::Contract(" requires: x >= 0.0 ".into()));
        assert_eq!(t[0].loc, Loc::new(1, 7));
        assert_eq!(t[1].tok, Tok::Ident("int".into()));
        assert_eq!(t[1].loc, Loc::new(4, 5));
    }
}
