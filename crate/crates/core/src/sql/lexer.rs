use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Word(String),
    Number(String),
    Str(String),
    Op(String),
    Star,
    LParen,
    RParen,
    Comma,
    Semicolon,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SqlError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let bump = |n: usize, i: &mut usize, line: &mut usize, col: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };

        if c.is_whitespace() {
            bump(1, &mut i, &mut line, &mut col);
            continue;
        }
        // line comment
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump(1, &mut i, &mut line, &mut col);
            }
            continue;
        }

        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            bump(j - i, &mut i, &mut line, &mut col);
            Tok::Word(word)
        } else if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let mut j = i + 1;
            let mut seen_dot = false;
            while j < chars.len() {
                if chars[j].is_ascii_digit() {
                    j += 1;
                } else if chars[j] == '.' && !seen_dot {
                    seen_dot = true;
                    j += 1;
                } else {
                    break;
                }
            }
            let num: String = chars[i..j].iter().collect();
            bump(j - i, &mut i, &mut line, &mut col);
            Tok::Number(num)
        } else if c == '\'' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => {
                        return Err(SqlError::Syntax {
                            line: start_line,
                            col: start_col,
                            msg: "unterminated string literal".into(),
                        })
                    }
                    Some('\'') if chars.get(j + 1) == Some(&'\'') => {
                        s.push('\'');
                        j += 2;
                    }
                    Some('\'') => {
                        j += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            bump(j - i, &mut i, &mut line, &mut col);
            Tok::Str(s)
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, n) = match two.as_str() {
                "<=" | ">=" | "!=" | "<>" => (Tok::Op(two.clone()), 2),
                _ => match c {
                    '=' | '<' | '>' => (Tok::Op(c.to_string()), 1),
                    '*' => (Tok::Star, 1),
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    ',' => (Tok::Comma, 1),
                    ';' => (Tok::Semicolon, 1),
                    _ => {
                        return Err(SqlError::Syntax {
                            line,
                            col,
                            msg: format!("unexpected character {c:?}"),
                        })
                    }
                },
            };
            bump(n, &mut i, &mut line, &mut col);
            tok
        };
        out.push(Token {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    Ok(out)
}
