//! Statement splitting and a positioned character cursor.

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Characters of one statement with their source positions.
#[derive(Clone, Debug)]
pub struct Cursor {
    chars: Vec<(char, Pos)>,
    pos: usize,
    end: Pos,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '′'
}

/// Splits source text into statements. `#` starts a comment; a statement whose
/// braces are unbalanced continues on the following lines.
pub fn statements(src: &str) -> CliResult<Vec<Cursor>> {
    let mut out = Vec::new();
    let mut cur: Vec<(char, Pos)> = Vec::new();
    let mut depth = 0i32;
    let mut open = Pos { line: 1, col: 1 };
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("");
        for (j, c) in text.chars().enumerate() {
            let p = Pos { line, col: j + 1 };
            match c {
                '{' => {
                    if depth == 0 {
                        open = p;
                    }
                    depth += 1;
                }
                '}' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(CliError::Syntax { line, col: j + 1, msg: "unmatched `}`".into() });
                    }
                }
                _ => {}
            }
            cur.push((c, p));
        }
        let last = Pos { line, col: text.chars().count() + 1 };
        if depth == 0 {
            if cur.iter().any(|(c, _)| !c.is_whitespace()) {
                out.push(Cursor { chars: std::mem::take(&mut cur), pos: 0, end: last });
            } else {
                cur.clear();
            }
        } else {
            cur.push(('\n', last));
        }
    }
    if depth > 0 {
        return Err(CliError::Syntax { line: open.line, col: open.col, msg: "unclosed `{`".into() });
    }
    Ok(out)
}

impl Cursor {
    pub fn new(text: &str, line: usize) -> Cursor {
        let chars: Vec<(char, Pos)> =
            text.chars().enumerate().map(|(j, c)| (c, Pos { line, col: j + 1 })).collect();
        let end = Pos { line, col: chars.len() + 1 };
        Cursor { chars, pos: 0, end }
    }

    pub fn here(&self) -> Pos {
        self.chars.get(self.pos).map(|c| c.1).unwrap_or(self.end)
    }

    pub fn start(&self) -> Pos {
        self.chars.first().map(|c| c.1).unwrap_or(self.end)
    }

    pub fn syntax(&self, msg: impl Into<String>) -> CliError {
        let p = self.here();
        CliError::Syntax { line: p.line, col: p.col, msg: msg.into() }
    }

    pub fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.0.is_whitespace()) {
            self.pos += 1;
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    pub fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.0)
    }

    /// Consumes `lit` if it comes next (after whitespace).
    pub fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        let n = lit.chars().count();
        if self.pos + n > self.chars.len() {
            return false;
        }
        let matches = self.chars[self.pos..self.pos + n].iter().map(|c| c.0).eq(lit.chars());
        let word_like = lit.chars().last().is_some_and(is_ident_char);
        let boundary = !word_like || self.chars.get(self.pos + n).is_none_or(|c| !is_ident_char(c.0));
        if matches && boundary {
            self.pos += n;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, lit: &str) -> CliResult<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{lit}`")))
        }
    }

    pub fn ident(&mut self) -> CliResult<(String, Pos)> {
        self.skip_ws();
        let start = self.pos;
        let p = self.here();
        while self.chars.get(self.pos).is_some_and(|c| is_ident_char(c.0)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected a name"));
        }
        Ok((self.chars[start..self.pos].iter().map(|c| c.0).collect(), p))
    }

    pub fn number<T: std::str::FromStr>(&mut self) -> CliResult<T> {
        self.skip_ws();
        let start = self.pos;
        if self.chars.get(self.pos).is_some_and(|c| c.0 == '-') {
            self.pos += 1;
        }
        while self.chars.get(self.pos).is_some_and(|c| c.0.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().map(|c| c.0).collect();
        text.parse().map_err(|_| {
            self.pos = start;
            self.syntax("expected a number")
        })
    }

    /// Text up to (not including) the first of `stops` outside brackets, trimmed.
    pub fn until(&mut self, stops: &[char]) -> (String, Pos) {
        self.skip_ws();
        let p = self.here();
        let start = self.pos;
        let mut depth = 0i32;
        while let Some(&(c, _)) = self.chars.get(self.pos) {
            if depth == 0 && stops.contains(&c) {
                break;
            }
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                _ => {}
            }
            if depth < 0 {
                break;
            }
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().map(|c| c.0).collect();
        (text.trim().to_string(), p)
    }

    /// The bracketed group starting here, without its delimiters.
    pub fn group(&mut self, open: char, close: char) -> CliResult<Cursor> {
        self.expect(&open.to_string())?;
        let start = self.pos;
        let mut depth = 1;
        while let Some(&(c, _)) = self.chars.get(self.pos) {
            if c == open {
                depth += 1;
            } else if c == close {
                depth -= 1;
                if depth == 0 {
                    let inner = Cursor {
                        chars: self.chars[start..self.pos].to_vec(),
                        pos: 0,
                        end: self.chars[self.pos].1,
                    };
                    self.pos += 1;
                    return Ok(inner);
                }
            }
            self.pos += 1;
        }
        Err(self.syntax(format!("missing `{close}`")))
    }

    /// Remaining pieces separated by any of `seps` outside brackets; blank pieces dropped.
    pub fn split(&mut self, seps: &[char]) -> Vec<Cursor> {
        let mut out = Vec::new();
        loop {
            let start = self.pos;
            let mut depth = 0i32;
            while let Some(&(c, _)) = self.chars.get(self.pos) {
                if depth == 0 && seps.contains(&c) {
                    break;
                }
                match c {
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => depth -= 1,
                    _ => {}
                }
                self.pos += 1;
            }
            let end = self.here();
            let piece = Cursor { chars: self.chars[start..self.pos].to_vec(), pos: 0, end };
            if piece.chars.iter().any(|c| !c.0.is_whitespace()) {
                out.push(piece);
            }
            if self.pos >= self.chars.len() {
                break;
            }
            self.pos += 1;
        }
        out
    }

    pub fn rest(&mut self) -> (String, Pos) {
        self.skip_ws();
        let p = self.here();
        let text: String = self.chars[self.pos..].iter().map(|c| c.0).collect();
        self.pos = self.chars.len();
        (text.trim().to_string(), p)
    }

    pub fn finish(&mut self) -> CliResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.syntax("unexpected trailing input"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_span_lines() {
        let s = statements("a = 1 # note\n\nm {\n  x\n  y }\ncheck m\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].start().line, 3);
        assert_eq!(s[2].start().line, 6);
    }

    #[test]
    fn unclosed_brace_is_located() {
        match statements("ok\nm {\n x\n") {
            Err(CliError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cursor_pieces() {
        let mut c = Cursor::new("f : A -> B { x -> u, y -> v*(u, 1) }", 7);
        assert_eq!(c.ident().unwrap().0, "f");
        c.expect(":").unwrap();
        assert_eq!(c.until(&['-']).0, "A");
        c.expect("->").unwrap();
        assert_eq!(c.ident().unwrap().0, "B");
        let mut g = c.group('{', '}').unwrap();
        let parts: Vec<String> = g.split(&[',']).into_iter().map(|mut p| p.rest().0).collect();
        assert_eq!(parts, ["x -> u", "y -> v*(u, 1)"]);
        assert!(c.at_end());
    }
}
