//! Rule grammar, loosest binding first:
//!
//! ```text
//! iff     := implies ("<=>" implies)*
//! implies := or ("=>" implies)?
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | "(" iff ")" | NAME "=" VALUE | NAME "!=" VALUE
//! ```

use super::{ConfigModel, Formula, ModelError};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Eq,
    Neq,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::Iff => "`<=>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn lex(rule: usize, text: &str) -> Result<Vec<(usize, Tok)>, ModelError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        let column = text[..i].chars().count() + 1;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let (tok, len) = if rest.starts_with("<=>") {
            (Tok::Iff, 3)
        } else if rest.starts_with("=>") {
            (Tok::Implies, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else {
            match c {
                '=' => (Tok::Eq, 1),
                '!' => (Tok::Not, 1),
                '&' => (Tok::And, 1),
                '|' => (Tok::Or, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                c if is_word_char(c) && c != '-' => {
                    let len = rest
                        .char_indices()
                        .find(|&(_, ch)| !is_word_char(ch))
                        .map_or(rest.len(), |(k, _)| k);
                    (Tok::Word(rest[..len].to_string()), len)
                }
                other => {
                    return Err(ModelError::Syntax {
                        rule,
                        column,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        out.push((column, tok));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    model: &'a ConfigModel,
    rule: usize,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |(c, _)| *c)
    }

    fn error(&self, message: String) -> ModelError {
        ModelError::Syntax {
            rule: self.rule,
            column: self.column(),
            message,
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ModelError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", tok.describe())))
        }
    }

    fn unexpected(&self, what: &str) -> ModelError {
        match self.peek() {
            Some(t) => self.error(format!("{what}, found {}", t.describe())),
            None => self.error(format!("{what}, found end of rule")),
        }
    }

    fn iff(&mut self) -> Result<Formula, ModelError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ModelError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ModelError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ModelError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ModelError> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::negate(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.iff()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        let name = match self.peek() {
            Some(Tok::Word(w)) => w.clone(),
            _ => return Err(self.unexpected("expected a variable name")),
        };
        if !super::is_identifier(&name) {
            return Err(self.error(format!("`{name}` is not a valid variable name")));
        }
        self.pos += 1;
        let negated = match self.peek() {
            Some(Tok::Eq) => false,
            Some(Tok::Neq) => true,
            _ => return Err(self.unexpected("expected `=` or `!=`")),
        };
        self.pos += 1;
        let value = match self.peek() {
            Some(Tok::Word(w)) => w.clone(),
            _ => return Err(self.unexpected("expected a value")),
        };
        self.pos += 1;
        let (var, value) = self.model.resolve(&name, &value)?;
        let atom = Formula::atom(var, value);
        Ok(if negated { Formula::negate(atom) } else { atom })
    }
}

/// Parses one rule against the variables of `model`. `rule` is only used for
/// error positions.
pub fn parse_rule(model: &ConfigModel, rule: usize, text: &str) -> Result<Formula, ModelError> {
    let toks = lex(rule, text)?;
    let mut parser = Parser {
        model,
        rule,
        toks,
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    let f = parser.iff()?;
    if parser.peek().is_some() {
        return Err(parser.unexpected("expected end of rule"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn model() -> ConfigModel {
        ConfigModel::new(
            [
                ("a".to_string(), Domain::labelled(["x", "y"])),
                ("b".to_string(), Domain::labelled(["x", "y"])),
                ("c".to_string(), Domain::sized(3)),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn precedence() {
        let m = model();
        let f = parse_rule(&m, 0, "a=x | b=y & c=2 => !a=y <=> c!=0").unwrap();
        let expected = Formula::iff(
            Formula::implies(
                Formula::or(
                    Formula::atom(0, 0),
                    Formula::and(Formula::atom(1, 1), Formula::atom(2, 2)),
                ),
                Formula::negate(Formula::atom(0, 1)),
            ),
            Formula::not_equal(2, 0),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn implication_is_right_associative() {
        let m = model();
        let f = parse_rule(&m, 0, "a=x => b=x => c=1").unwrap();
        assert_eq!(
            f,
            Formula::implies(
                Formula::atom(0, 0),
                Formula::implies(Formula::atom(1, 0), Formula::atom(2, 1))
            )
        );
    }

    #[test]
    fn syntax_errors_report_columns() {
        let m = model();
        match parse_rule(&m, 4, "a=x & (b=y") {
            Err(ModelError::Syntax { rule, column, .. }) => {
                assert_eq!(rule, 4);
                assert_eq!(column, 11);
            }
            other => panic!("{other:?}"),
        }
        match parse_rule(&m, 0, "a=x $ b=y") {
            Err(ModelError::Syntax { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_rule(&m, 0, "a=x b=y"),
            Err(ModelError::Syntax { column: 5, .. })
        ));
        assert!(matches!(
            parse_rule(&m, 0, ""),
            Err(ModelError::Syntax { .. })
        ));
    }
}
