//! Filter predicates: a small expression tree, parsed from Vega expression
//! strings (`datum.x == 1 && ...`) or from field/logical predicate objects.

use std::fmt;

use serde_json::Value as Json;

use super::pointer;
use crate::value::format_number;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Literal {
    fn from_json(v: &Json) -> Option<Literal> {
        Some(match v {
            Json::Null => Literal::Null,
            Json::Bool(b) => Literal::Bool(*b),
            Json::Number(n) => Literal::Number(n.as_f64()?),
            Json::String(s) => Literal::Text(s.clone()),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Field(String),
    Literal(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Compare {
        left: Operand,
        op: CompareOp,
        right: Operand,
    },
    OneOf {
        field: String,
        values: Vec<Literal>,
    },
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn compare(field: impl Into<String>, op: CompareOp, lit: Literal) -> Predicate {
        Predicate::Compare {
            left: Operand::Field(field.into()),
            op,
            right: Operand::Literal(lit),
        }
    }

    /// Every field the predicate reads.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Predicate::Compare { left, right, .. } => {
                for o in [left, right] {
                    if let Operand::Field(f) = o {
                        out.push(f);
                    }
                }
            }
            Predicate::OneOf { field, .. } => out.push(field),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect_fields(out)),
            Predicate::Not(p) => p.collect_fields(out),
        }
    }

    /// Vega expression text for this predicate; parses back to an equal tree.
    pub fn to_expression(&self) -> String {
        self.to_string()
    }
}

fn write_field(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    let ident = !name.is_empty()
        && name
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_' || c == '$')
            .unwrap_or(false)
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
    if ident {
        write!(f, "datum.{name}")
    } else {
        write!(f, "datum[")?;
        write_string(f, name)?;
        write!(f, "]")
    }
}

fn write_string(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("null"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Number(n) => f.write_str(&format_number(*n)),
            Literal::Text(s) => write_string(f, s),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Field(name) => write_field(f, name),
            Operand::Literal(l) => write!(f, "{l}"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, p: &Predicate) -> fmt::Result {
            match p {
                Predicate::And(_) | Predicate::Or(_) => write!(f, "({p})"),
                _ => write!(f, "{p}"),
            }
        }
        match self {
            Predicate::Compare { left, op, right } => write!(f, "{left} {} {right}", op.as_str()),
            Predicate::OneOf { field, values } => {
                f.write_str("indexof([")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("], ")?;
                write_field(f, field)?;
                f.write_str(") >= 0")
            }
            Predicate::And(ps) | Predicate::Or(ps) => {
                let sep = if matches!(self, Predicate::And(_)) {
                    " && "
                } else {
                    " || "
                };
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    child(f, p)?;
                }
                Ok(())
            }
            Predicate::Not(p) => write!(f, "!({p})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateErrorKind {
    Syntax,
    Unsupported,
    UnknownProperty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateError {
    pub kind: PredicateErrorKind,
    pub message: String,
    /// Pointer relative to the filter value.
    pub rel_path: String,
}

impl PredicateError {
    fn syntax(msg: impl Into<String>) -> Self {
        Self {
            kind: PredicateErrorKind::Syntax,
            message: msg.into(),
            rel_path: String::new(),
        }
    }

    fn unsupported(msg: impl Into<String>) -> Self {
        Self {
            kind: PredicateErrorKind::Unsupported,
            message: msg.into(),
            rel_path: String::new(),
        }
    }

    fn under(mut self, prefix: &str) -> Self {
        self.rel_path = format!("{prefix}{}", self.rel_path);
        self
    }
}

/// Parse the value of a `filter` transform.
pub fn parse_filter(v: &Json) -> Result<Predicate, PredicateError> {
    match v {
        Json::String(s) => parse_expression(s),
        Json::Object(map) => {
            if let Some(items) = map.get("and").or_else(|| map.get("or")) {
                let is_and = map.contains_key("and");
                let key = if is_and { "and" } else { "or" };
                if map.len() != 1 {
                    return Err(PredicateError::unsupported(
                        "logical predicate with extra keys",
                    ));
                }
                let items = items.as_array().ok_or_else(|| {
                    PredicateError::syntax(format!("`{key}` must be an array"))
                        .under(&pointer::push("", key))
                })?;
                if items.is_empty() {
                    return Err(PredicateError::unsupported(format!("empty `{key}`")));
                }
                let mut parts = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    let prefix = pointer::push_index(&pointer::push("", key), i);
                    parts.push(parse_filter(item).map_err(|e| e.under(&prefix))?);
                }
                if parts.len() == 1 {
                    return Ok(parts.pop().expect("one element"));
                }
                return Ok(if is_and {
                    Predicate::And(parts)
                } else {
                    Predicate::Or(parts)
                });
            }
            if let Some(inner) = map.get("not") {
                if map.len() != 1 {
                    return Err(PredicateError::unsupported(
                        "`not` predicate with extra keys",
                    ));
                }
                let p = parse_filter(inner).map_err(|e| e.under("/not"))?;
                return Ok(Predicate::Not(Box::new(p)));
            }
            parse_field_predicate(map)
        }
        _ => Err(PredicateError::syntax(
            "filter must be an expression string or predicate object",
        )),
    }
}

fn parse_field_predicate(map: &serde_json::Map<String, Json>) -> Result<Predicate, PredicateError> {
    let field = match map.get("field") {
        Some(Json::String(s)) => s.clone(),
        Some(_) => return Err(PredicateError::syntax("`field` must be a string").under("/field")),
        None => {
            return Err(PredicateError::unsupported(
                "predicate object without `field`",
            ))
        }
    };
    let mut result: Option<Predicate> = None;
    for (key, val) in map {
        let path = pointer::push("", key);
        let lit = || {
            Literal::from_json(val).ok_or_else(|| {
                PredicateError::syntax(format!("`{key}` must be a scalar")).under(&path)
            })
        };
        let p = match key.as_str() {
            "field" => continue,
            "equal" => Predicate::compare(&field, CompareOp::Eq, lit()?),
            "lt" => Predicate::compare(&field, CompareOp::Lt, lit()?),
            "lte" => Predicate::compare(&field, CompareOp::Le, lit()?),
            "gt" => Predicate::compare(&field, CompareOp::Gt, lit()?),
            "gte" => Predicate::compare(&field, CompareOp::Ge, lit()?),
            "oneOf" | "in" => {
                let arr = val.as_array().ok_or_else(|| {
                    PredicateError::syntax("`oneOf` must be an array").under(&path)
                })?;
                let values = arr
                    .iter()
                    .map(Literal::from_json)
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| {
                        PredicateError::syntax("`oneOf` values must be scalars").under(&path)
                    })?;
                Predicate::OneOf {
                    field: field.clone(),
                    values,
                }
            }
            "range" => {
                let arr = val.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    PredicateError::syntax("`range` must be a two-element array").under(&path)
                })?;
                let lo = Literal::from_json(&arr[0]);
                let hi = Literal::from_json(&arr[1]);
                match (lo, hi) {
                    (Some(lo), Some(hi)) => Predicate::And(vec![
                        Predicate::compare(&field, CompareOp::Ge, lo),
                        Predicate::compare(&field, CompareOp::Le, hi),
                    ]),
                    _ => {
                        return Err(
                            PredicateError::syntax("`range` bounds must be scalars").under(&path)
                        )
                    }
                }
            }
            "timeUnit" | "valid" => {
                return Err(
                    PredicateError::unsupported(format!("field predicate `{key}`")).under(&path),
                )
            }
            other => {
                return Err(PredicateError {
                    kind: PredicateErrorKind::UnknownProperty,
                    message: format!("unknown predicate property `{other}`"),
                    rel_path: path,
                })
            }
        };
        if result.is_some() {
            return Err(PredicateError::unsupported(
                "field predicate with more than one test",
            ));
        }
        result = Some(p);
    }
    result.ok_or_else(|| PredicateError::unsupported("field predicate without a test"))
}

// ---- expression strings ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Op(&'static str),
}

fn tokenize(src: &str) -> Result<Vec<Tok>, PredicateError> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    const OPS: [&str; 17] = [
        "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "(", ")", "[", "]", ",",
        ".",
    ];
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            i += 1;
            let mut s = String::new();
            loop {
                let Some(&c) = chars.get(i) else {
                    return Err(PredicateError::syntax("unterminated string literal"));
                };
                i += 1;
                match c {
                    '\\' => {
                        let Some(&e) = chars.get(i) else {
                            return Err(PredicateError::syntax("dangling escape"));
                        };
                        i += 1;
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    c if c == quote => break,
                    c => s.push(c),
                }
            }
            out.push(Tok::Str(s));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<f64>()
                .map_err(|_| PredicateError::syntax(format!("bad number `{text}`")))?;
            out.push(Tok::Num(n));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        if c == '-' {
            out.push(Tok::Op("-"));
            i += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match OPS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) => {
                i += op.len();
                out.push(Tok::Op(op));
            }
            None => {
                return Err(PredicateError::syntax(format!(
                    "unexpected character `{c}`"
                )))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Field(String),
    Lit(Literal),
    Array(Vec<Literal>),
    Call(String, Vec<Expr>),
    Cmp(CompareOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), PredicateError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(PredicateError::syntax(format!("expected `{op}`")))
        }
    }

    fn or(&mut self) -> Result<Expr, PredicateError> {
        let mut parts = vec![self.and()?];
        while self.eat_op("||") {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one")
        } else {
            Expr::Or(parts)
        })
    }

    fn and(&mut self) -> Result<Expr, PredicateError> {
        let mut parts = vec![self.unary()?];
        while self.eat_op("&&") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one")
        } else {
            Expr::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Expr, PredicateError> {
        if self.eat_op("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, PredicateError> {
        let left = self.primary()?;
        let op = match self.peek() {
            Some(Tok::Op("==" | "===")) => CompareOp::Eq,
            Some(Tok::Op("!=" | "!==")) => CompareOp::Ne,
            Some(Tok::Op("<")) => CompareOp::Lt,
            Some(Tok::Op("<=")) => CompareOp::Le,
            Some(Tok::Op(">")) => CompareOp::Gt,
            Some(Tok::Op(">=")) => CompareOp::Ge,
            _ => return Ok(left),
        };
        self.pos += 1;
        let right = self.primary()?;
        Ok(Expr::Cmp(op, Box::new(left), Box::new(right)))
    }

    fn literal(&mut self) -> Result<Literal, PredicateError> {
        match self.primary()? {
            Expr::Lit(l) => Ok(l),
            _ => Err(PredicateError::unsupported(
                "array elements must be literals",
            )),
        }
    }

    fn primary(&mut self) -> Result<Expr, PredicateError> {
        let tok = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| PredicateError::syntax("unexpected end of expression"))?;
        self.pos += 1;
        match tok {
            Tok::Op("(") => {
                let e = self.or()?;
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Op("[") => {
                let mut items = Vec::new();
                if !self.eat_op("]") {
                    loop {
                        items.push(self.literal()?);
                        if self.eat_op("]") {
                            break;
                        }
                        self.expect_op(",")?;
                    }
                }
                Ok(Expr::Array(items))
            }
            Tok::Op("-") => match self.toks.get(self.pos) {
                Some(Tok::Num(n)) => {
                    let n = *n;
                    self.pos += 1;
                    Ok(Expr::Lit(Literal::Number(-n)))
                }
                _ => Err(PredicateError::unsupported("unary minus on non-literal")),
            },
            Tok::Num(n) => Ok(Expr::Lit(Literal::Number(n))),
            Tok::Str(s) => Ok(Expr::Lit(Literal::Text(s))),
            Tok::Ident(id) => match id.as_str() {
                "true" => Ok(Expr::Lit(Literal::Bool(true))),
                "false" => Ok(Expr::Lit(Literal::Bool(false))),
                "null" => Ok(Expr::Lit(Literal::Null)),
                "datum" => {
                    if self.eat_op(".") {
                        match self.toks.get(self.pos).cloned() {
                            Some(Tok::Ident(name)) => {
                                self.pos += 1;
                                Ok(Expr::Field(name))
                            }
                            _ => Err(PredicateError::syntax("expected field name after `datum.`")),
                        }
                    } else if self.eat_op("[") {
                        match self.toks.get(self.pos).cloned() {
                            Some(Tok::Str(name)) => {
                                self.pos += 1;
                                self.expect_op("]")?;
                                Ok(Expr::Field(name))
                            }
                            _ => Err(PredicateError::syntax(
                                "expected quoted field name in `datum[...]`",
                            )),
                        }
                    } else {
                        Err(PredicateError::unsupported("bare `datum`"))
                    }
                }
                name => {
                    if self.eat_op("(") {
                        let mut args = Vec::new();
                        if !self.eat_op(")") {
                            loop {
                                args.push(self.or()?);
                                if self.eat_op(")") {
                                    break;
                                }
                                self.expect_op(",")?;
                            }
                        }
                        Ok(Expr::Call(name.to_string(), args))
                    } else {
                        Err(PredicateError::unsupported(format!("identifier `{name}`")))
                    }
                }
            },
            Tok::Op(op) => Err(PredicateError::syntax(format!("unexpected `{op}`"))),
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Predicate, PredicateError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(PredicateError::syntax("empty filter expression"));
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.or()?;
    if p.pos != p.toks.len() {
        return Err(PredicateError::syntax(
            "trailing tokens in filter expression",
        ));
    }
    lower(e)
}

fn operand(e: Expr) -> Result<Operand, PredicateError> {
    match e {
        Expr::Field(f) => Ok(Operand::Field(f)),
        Expr::Lit(l) => Ok(Operand::Literal(l)),
        _ => Err(PredicateError::unsupported(
            "comparison operands must be fields or literals",
        )),
    }
}

fn lower(e: Expr) -> Result<Predicate, PredicateError> {
    match e {
        Expr::And(ps) => Ok(Predicate::And(
            ps.into_iter().map(lower).collect::<Result<_, _>>()?,
        )),
        Expr::Or(ps) => Ok(Predicate::Or(
            ps.into_iter().map(lower).collect::<Result<_, _>>()?,
        )),
        Expr::Not(p) => Ok(Predicate::Not(Box::new(lower(*p)?))),
        Expr::Cmp(op, l, r) => {
            if let Expr::Call(name, args) = l.as_ref() {
                return lower_indexof(name, args, op, &r);
            }
            Ok(Predicate::Compare {
                left: operand(*l)?,
                op,
                right: operand(*r)?,
            })
        }
        other => Err(PredicateError::unsupported(format!(
            "expression is not a predicate: {other:?}"
        ))),
    }
}

/// `indexof([..], datum.f) >= 0` and its spellings become membership tests.
fn lower_indexof(
    name: &str,
    args: &[Expr],
    op: CompareOp,
    rhs: &Expr,
) -> Result<Predicate, PredicateError> {
    if name != "indexof" || args.len() != 2 {
        return Err(PredicateError::unsupported(format!("function `{name}`")));
    }
    let (Expr::Array(values), Expr::Field(field)) = (&args[0], &args[1]) else {
        return Err(PredicateError::unsupported(
            "indexof expects a literal array and a field",
        ));
    };
    let Expr::Lit(Literal::Number(n)) = rhs else {
        return Err(PredicateError::unsupported(
            "indexof must be compared to a number",
        ));
    };
    let member = Predicate::OneOf {
        field: field.clone(),
        values: values.clone(),
    };
    match (op, *n) {
        (CompareOp::Ge, 0.0) | (CompareOp::Gt | CompareOp::Ne, -1.0) => Ok(member),
        (CompareOp::Eq, -1.0) | (CompareOp::Lt, 0.0) => Ok(Predicate::Not(Box::new(member))),
        _ => Err(PredicateError::unsupported(
            "indexof comparison is not a membership test",
        )),
    }
}
