//! Recursive-descent parser for the query language.
//!
//! Precedence, tightest first: FILTER, `+`, `;`, OR. Parentheses override.
//! Keywords are case-insensitive, identifiers case-sensitive. A FILTER
//! argument is either a single atom or a parenthesized boolean expression.

use std::sync::Arc;

use crate::error::ParseError;
use crate::formula::{Formula, Strategy};
use crate::predicate::PredicateExpr;
use crate::schema::Schema;
use crate::value::{CmpOp, Value, ValueKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Semi,
    Plus,
    Dot,
    Minus,
    Cmp(CmpOp),
    Eof,
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text, bytes: text.as_bytes(), pos: 0 }
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((Tok::Eof, start));
        }
        let c = self.bytes[self.pos] as char;
        let tok = match c {
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ';' => {
                self.pos += 1;
                Tok::Semi
            }
            '+' => {
                self.pos += 1;
                Tok::Plus
            }
            '.' => {
                self.pos += 1;
                Tok::Dot
            }
            '-' => {
                self.pos += 1;
                Tok::Minus
            }
            '=' => {
                self.pos += 1;
                Tok::Cmp(CmpOp::Eq)
            }
            '!' => {
                if self.bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Tok::Cmp(CmpOp::Ne)
                } else {
                    return Err(ParseError::new(start, "expected `!=`"));
                }
            }
            '<' => match self.bytes.get(self.pos + 1) {
                Some(b'=') => {
                    self.pos += 2;
                    Tok::Cmp(CmpOp::Le)
                }
                Some(b'>') => {
                    self.pos += 2;
                    Tok::Cmp(CmpOp::Ne)
                }
                _ => {
                    self.pos += 1;
                    Tok::Cmp(CmpOp::Lt)
                }
            },
            '>' => {
                if self.bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    self.pos += 1;
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            '"' => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    if self.pos >= self.bytes.len() {
                        return Err(ParseError::new(start, "unterminated string literal"));
                    }
                    let c = self.text[self.pos..].chars().next().unwrap();
                    self.pos += c.len_utf8();
                    match c {
                        '"' => break,
                        '\\' => {
                            let e = self.text[self.pos..].chars().next().ok_or_else(|| {
                                ParseError::new(self.pos, "unterminated escape")
                            })?;
                            self.pos += e.len_utf8();
                            match e {
                                'n' => out.push('\n'),
                                't' => out.push('\t'),
                                'r' => out.push('\r'),
                                '\\' => out.push('\\'),
                                '"' => out.push('"'),
                                '\'' => out.push('\''),
                                'u' => {
                                    if self.bytes.get(self.pos) != Some(&b'{') {
                                        return Err(ParseError::new(self.pos, "expected `{` in unicode escape"));
                                    }
                                    self.pos += 1;
                                    let close = self.text[self.pos..]
                                        .find('}')
                                        .ok_or_else(|| ParseError::new(self.pos, "unterminated unicode escape"))?;
                                    let hex = &self.text[self.pos..self.pos + close];
                                    let code = u32::from_str_radix(hex, 16)
                                        .map_err(|_| ParseError::new(self.pos, "bad unicode escape"))?;
                                    out.push(char::from_u32(code).ok_or_else(|| {
                                        ParseError::new(self.pos, "bad unicode scalar")
                                    })?);
                                    self.pos += close + 1;
                                }
                                other => {
                                    return Err(ParseError::new(
                                        self.pos,
                                        format!("unknown escape `\\{other}`"),
                                    ))
                                }
                            }
                        }
                        other => out.push(other),
                    }
                }
                Tok::Str(out)
            }
            c if c.is_ascii_digit() => {
                let mut is_float = false;
                while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos < self.bytes.len()
                    && self.bytes[self.pos] == b'.'
                    && self.bytes.get(self.pos + 1).is_some_and(|b| (*b as char).is_ascii_digit())
                {
                    is_float = true;
                    self.pos += 1;
                    while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
                    let mut p = self.pos + 1;
                    if matches!(self.bytes.get(p), Some(b'+') | Some(b'-')) {
                        p += 1;
                    }
                    if self.bytes.get(p).is_some_and(|b| (*b as char).is_ascii_digit()) {
                        is_float = true;
                        self.pos = p;
                        while self.pos < self.bytes.len()
                            && (self.bytes[self.pos] as char).is_ascii_digit()
                        {
                            self.pos += 1;
                        }
                    }
                }
                let raw = &self.text[start..self.pos];
                if is_float {
                    Tok::Float(raw.parse().map_err(|_| ParseError::new(start, "bad float literal"))?)
                } else {
                    Tok::Int(raw.parse().map_err(|_| ParseError::new(start, "bad integer literal"))?)
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self.pos < self.bytes.len() {
                    let c = self.bytes[self.pos] as char;
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(self.text[start..self.pos].to_string())
            }
            other => return Err(ParseError::new(start, format!("unexpected character `{other}`"))),
        };
        Ok((tok, start))
    }
}

pub struct Parser<'a> {
    schema: &'a Arc<Schema>,
    tokens: Vec<(Tok, usize)>,
    idx: usize,
}

const KEYWORDS: &[&str] = &[
    "AS", "FILTER", "OR", "AND", "NOT", "TRUE", "FALSE", "UNSAT", "STRICT", "NXT", "NEXT", "LAST",
    "MAX",
];

fn keyword(t: &Tok) -> Option<String> {
    if let Tok::Ident(s) = t {
        let up = s.to_ascii_uppercase();
        if KEYWORDS.contains(&up.as_str()) {
            return Some(up);
        }
    }
    None
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, schema: &'a Arc<Schema>) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let mut tokens = Vec::new();
        loop {
            let (tok, pos) = lexer.next_token()?;
            let eof = tok == Tok::Eof;
            tokens.push((tok, pos));
            if eof {
                break;
            }
        }
        Ok(Parser { schema, tokens, idx: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].0
    }

    fn pos(&self) -> usize {
        self.tokens[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.idx].0.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        keyword(self.peek()).as_deref() == Some(kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::new(self.pos(), format!("expected `{kw}`")))
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::new(self.pos(), format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        if keyword(self.peek()).is_some() {
            return Err(ParseError::new(
                self.pos(),
                format!("expected {what}, found reserved keyword"),
            ));
        }
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            _ => Err(ParseError::new(self.tokens[self.idx.saturating_sub(1)].1, format!("expected {what}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.sequence()?;
        while self.is_kw("OR") {
            self.bump();
            let rhs = self.sequence()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn sequence(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.postfix()?;
        while *self.peek() == Tok::Semi {
            self.bump();
            let rhs = self.postfix()?;
            lhs = Formula::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.primary()?;
        loop {
            if *self.peek() == Tok::Plus {
                self.bump();
                f = Formula::plus(f);
            } else if self.is_kw("FILTER") {
                self.bump();
                let pred = self.filter_argument()?;
                f = Formula::filter(f, pred);
            } else {
                break;
            }
        }
        Ok(f)
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        if let Some(kw) = keyword(self.peek()) {
            if kw == "UNSAT" {
                self.bump();
                return Ok(Formula::Unsat);
            }
            if let Some(strategy) = Strategy::parse(&kw) {
                self.bump();
                self.expect(Tok::LParen, "`(` after selection strategy")?;
                let body = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Formula::select(strategy, body));
            }
            return Err(ParseError::new(self.pos(), format!("unexpected keyword `{kw}`")));
        }
        let at = self.pos();
        let rel_name = self.ident("relation name")?;
        let rel = self
            .schema
            .rel_id(&rel_name)
            .ok_or_else(|| ParseError::new(at, format!("unknown relation `{rel_name}`")))?;
        self.expect_kw("AS")?;
        let var = self.ident("variable name")?;
        Ok(Formula::assign(rel, rel_name, var))
    }

    /// A FILTER argument: `( boolean-expression )` or one bare atom.
    fn filter_argument(&mut self) -> Result<PredicateExpr, ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let p = self.pred_or()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(p)
        } else {
            self.atom()
        }
    }

    fn pred_or(&mut self) -> Result<PredicateExpr, ParseError> {
        let mut lhs = self.pred_and()?;
        while self.is_kw("OR") {
            self.bump();
            let rhs = self.pred_and()?;
            lhs = PredicateExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_and(&mut self) -> Result<PredicateExpr, ParseError> {
        let mut lhs = self.pred_unary()?;
        while self.is_kw("AND") {
            self.bump();
            let rhs = self.pred_unary()?;
            lhs = PredicateExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_unary(&mut self) -> Result<PredicateExpr, ParseError> {
        if self.is_kw("NOT") {
            self.bump();
            let inner = self.pred_unary()?;
            return Ok(inner.negate());
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let p = self.pred_or()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(p);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<PredicateExpr, ParseError> {
        match keyword(self.peek()).as_deref() {
            Some("TRUE") => {
                self.bump();
                return Ok(PredicateExpr::True);
            }
            Some("FALSE") => {
                self.bump();
                return Ok(PredicateExpr::False);
            }
            _ => {}
        }
        let at = self.pos();
        let first = self.ident("variable or `type`")?;
        // `type(x) = R`
        if first == "type" && *self.peek() == Tok::LParen {
            self.bump();
            let var = self.ident("variable name")?;
            self.expect(Tok::RParen, "`)`")?;
            match self.bump() {
                Tok::Cmp(CmpOp::Eq) => {}
                _ => return Err(ParseError::new(at, "expected `=` after type(..)")),
            }
            let rat = self.pos();
            let rel_name = self.ident("relation name")?;
            let rel = self
                .schema
                .rel_id(&rel_name)
                .ok_or_else(|| ParseError::new(rat, format!("unknown relation `{rel_name}`")))?;
            return Ok(PredicateExpr::TypeIs { var, rel, rel_name });
        }
        self.expect(Tok::Dot, "`.` after variable")?;
        let lattr_at = self.pos();
        let lattr = self.ident("attribute name")?;
        self.check_attr_exists(&lattr, lattr_at)?;
        let op = match self.bump() {
            Tok::Cmp(op) => op,
            _ => {
                return Err(ParseError::new(
                    self.tokens[self.idx.saturating_sub(1)].1,
                    "expected comparison operator",
                ))
            }
        };
        // right-hand side: constant or var.attr
        match self.peek().clone() {
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Minus => {
                let vat = self.pos();
                let value = self.constant()?;
                self.check_kind_compatible(&lattr, &value, vat)?;
                Ok(PredicateExpr::Cmp { var: first, attr: lattr, op, value })
            }
            Tok::Ident(_) => {
                if let Some(kw) = keyword(self.peek()) {
                    let vat = self.pos();
                    let value = match kw.as_str() {
                        "TRUE" => Value::Bool(true),
                        "FALSE" => Value::Bool(false),
                        _ => return Err(ParseError::new(vat, "expected constant or `var.attr`")),
                    };
                    self.bump();
                    self.check_kind_compatible(&lattr, &value, vat)?;
                    return Ok(PredicateExpr::Cmp { var: first, attr: lattr, op, value });
                }
                let rvar = self.ident("variable name")?;
                self.expect(Tok::Dot, "`.` after variable")?;
                let rat = self.pos();
                let rattr = self.ident("attribute name")?;
                self.check_attr_exists(&rattr, rat)?;
                Ok(PredicateExpr::CmpAttrs { lvar: first, lattr, op, rvar, rattr })
            }
            _ => Err(ParseError::new(self.pos(), "expected constant or `var.attr`")),
        }
    }

    fn constant(&mut self) -> Result<Value, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.pos();
        match self.bump() {
            Tok::Int(v) => Ok(Value::Int(if neg { -v } else { v })),
            Tok::Float(v) => Ok(Value::Float(if neg { -v } else { v })),
            Tok::Str(s) if !neg => Ok(Value::Str(s)),
            _ => Err(ParseError::new(at, "expected literal")),
        }
    }

    fn check_attr_exists(&self, attr: &str, at: usize) -> Result<(), ParseError> {
        if self.schema.relations_with_attr(attr).next().is_none() {
            return Err(ParseError::new(
                at,
                format!("attribute `{attr}` does not occur in any relation of the schema"),
            ));
        }
        Ok(())
    }

    fn check_kind_compatible(&self, attr: &str, value: &Value, at: usize) -> Result<(), ParseError> {
        let kind = value.kind();
        let compatible = self
            .schema
            .relations_with_attr(attr)
            .any(|(_, a)| a.kind == kind);
        if !compatible {
            let expected: Vec<ValueKind> = self
                .schema
                .relations_with_attr(attr)
                .map(|(_, a)| a.kind)
                .collect();
            return Err(ParseError::new(
                at,
                format!(
                    "attribute `{attr}` has kind {} in the schema, constant is {}",
                    expected
                        .iter()
                        .map(|k| k.name())
                        .collect::<Vec<_>>()
                        .join("/"),
                    kind
                ),
            ));
        }
        Ok(())
    }
}

/// Parses a query document against a schema.
pub fn parse_formula(text: &str, schema: &Arc<Schema>) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, schema)?;
    if *p.peek() == Tok::Eof {
        return Err(ParseError::new(0, "empty query"));
    }
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(ParseError::new(p.pos(), "trailing input after formula"));
    }
    Ok(f)
}

/// Parses a standalone predicate expression (used by tests and tools).
pub fn parse_predicate(text: &str, schema: &Arc<Schema>) -> Result<PredicateExpr, ParseError> {
    let mut p = Parser::new(text, schema)?;
    let pred = p.pred_or()?;
    if *p.peek() != Tok::Eof {
        return Err(ParseError::new(p.pos(), "trailing input after predicate"));
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;

    fn sensors() -> Arc<Schema> {
        load_schema("H(id:int, hum:int); T(id:int, tmp:int)").unwrap()
    }

    const PHI1: &str = "(T AS x ; H AS y) FILTER (x.tmp > 40 AND y.hum <= 25 AND x.id = 0 AND y.id = 0)";

    #[test]
    fn parses_phi1() {
        let schema = sensors();
        let f = parse_formula(PHI1, &schema).unwrap();
        match &f {
            Formula::Filter { body, pred } => {
                assert!(matches!(&**body, Formula::Seq(a, b)
                    if matches!(&**a, Formula::Assign { var, .. } if var == "x")
                    && matches!(&**b, Formula::Assign { var, .. } if var == "y")));
                assert_eq!(pred.atom_count(), 4);
            }
            other => panic!("unexpected shape {other:?}"),
        }
        assert_eq!(f.size(), 8);
    }

    #[test]
    fn trivial_assign() {
        let schema = sensors();
        let f = parse_formula("T AS x", &schema).unwrap();
        assert!(matches!(f, Formula::Assign { ref rel_name, ref var, .. } if rel_name == "T" && var == "x"));
    }

    #[test]
    fn q3_shape() {
        let schema = load_schema("A(); B(); C(); D(); E()").unwrap();
        let f = parse_formula("((A AS x OR B AS y) OR C AS z); D AS w", &schema).unwrap();
        match f {
            Formula::Seq(l, r) => {
                assert!(matches!(&*l, Formula::Or(inner, _) if matches!(&**inner, Formula::Or(..))));
                assert!(matches!(&*r, Formula::Assign { var, .. } if var == "w"));
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn precedence_filter_plus_seq_or() {
        let schema = sensors();
        // + binds tighter than ; which binds tighter than OR
        let f = parse_formula("T AS x+ ; H AS y OR H AS z", &schema).unwrap();
        assert!(matches!(&f, Formula::Or(l, _)
            if matches!(&**l, Formula::Seq(p, _) if matches!(&**p, Formula::Plus(_)))));
        // FILTER binds tighter than +
        let g = parse_formula("T AS x FILTER x.tmp > 40 +", &schema).unwrap();
        assert!(matches!(&g, Formula::Plus(inner) if matches!(&**inner, Formula::Filter { .. })));
        // postfix order: + then FILTER applies the filter to the iteration
        let h = parse_formula("T AS x + FILTER x.tmp > 40", &schema).unwrap();
        assert!(matches!(&h, Formula::Filter { body, .. } if matches!(&**body, Formula::Plus(_))));
    }

    #[test]
    fn selection_wrappers_case_insensitive() {
        let schema = sensors();
        let f = parse_formula("nxt(strict(T AS x))", &schema).unwrap();
        let (w, _) = f.peel_selects();
        assert_eq!(w, vec![Strategy::Nxt, Strategy::Strict]);
    }

    #[test]
    fn errors_carry_positions() {
        let schema = sensors();
        let err = parse_formula("T AS x FILTER x.voltage > 3", &schema).unwrap_err();
        assert!(err.msg.contains("voltage"));
        assert!(err.pos > 0);
        assert!(parse_formula("X AS x", &schema).is_err());
        assert!(parse_formula("T AS x FILTER x.tmp > \"hot\"", &schema).is_err());
        assert!(parse_formula("LIFT(T AS x)", &schema).is_err());
        assert!(parse_formula("", &schema).is_err());
    }

    #[test]
    fn round_trips_canonical_form() {
        let schema = sensors();
        for text in [
            PHI1,
            "T AS x",
            "((T AS x) OR (H AS y)) FILTER (NOT (type(x) = T) OR x.tmp != -3)",
            "(T AS x FILTER x.tmp >= 40)+ ; H AS y",
            "MAX((T AS x)+)",
            "UNSAT",
        ] {
            let f = parse_formula(text, &schema).unwrap();
            let printed = f.to_string();
            let g = parse_formula(&printed, &schema).unwrap();
            assert_eq!(f, g, "round-trip failed for `{text}` -> `{printed}`");
        }
    }
}
