//! Recursive-descent parser for the supported SQL subset, with name resolution
//! and type checking against a schema.

use super::ast::*;
use super::graph::JoinGraph;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::SqlError;
use crate::storage::{ColumnMeta, SchemaLookup};
use crate::value::{DataType, Value};

const KEYWORDS: &[&str] = &[
    "SELECT",
    "FROM",
    "WHERE",
    "AND",
    "AS",
    "IN",
    "LIKE",
    "MIN",
    "CREATE",
    "TEMP",
    "TEMPORARY",
    "TABLE",
    "OR",
    "NOT",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

/// Column reference before resolution.
struct RawCol {
    qualifier: Option<String>,
    name: String,
    pos: Pos,
}

enum Operand {
    Col(RawCol),
    Lit(Value, Pos),
}

enum Cmp {
    Eq,
    Lt,
    Gt,
}

enum RawConjunct {
    Compare(Operand, Cmp, Operand, Pos),
    In(RawCol, Vec<Value>),
    Like(RawCol, String),
}

enum RawProjection {
    Col(RawCol, Option<String>),
    Min(RawCol, Option<String>),
}

struct Parser<'s> {
    toks: Vec<Token>,
    at: usize,
    schema: &'s dyn SchemaLookup,
}

/// Parses and validates one statement against `schema`.
pub fn parse(sql: &str, schema: &dyn SchemaLookup) -> Result<Statement, SqlError> {
    let mut p = Parser {
        toks: tokenize(sql)?,
        at: 0,
        schema,
    };
    let stmt = p.statement()?;
    if p.peek() == &Tok::Semi {
        p.advance();
    }
    if p.peek() != &Tok::Eof {
        return Err(SqlError::syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(stmt)
}

/// Parses a statement that must be a plain `SELECT`.
pub fn parse_query(sql: &str, schema: &dyn SchemaLookup) -> Result<QuerySpec, SqlError> {
    match parse(sql, schema)? {
        Statement::Select(q) => Ok(q),
        Statement::CreateTemp(_) => Err(SqlError::syntax(Pos { line: 1, col: 1 }, "expected a SELECT statement")),
    }
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(SqlError::syntax(self.pos(), format!("expected {kw}")))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, SqlError> {
        if *self.peek() == tok {
            Ok(self.advance().pos)
        } else {
            Err(SqlError::syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), SqlError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let pos = self.advance().pos;
                Ok((s, pos))
            }
            _ => Err(SqlError::syntax(self.pos(), format!("expected {what}"))),
        }
    }

    fn statement(&mut self) -> Result<Statement, SqlError> {
        if self.eat_keyword("CREATE") {
            if !(self.eat_keyword("TEMP") || self.eat_keyword("TEMPORARY")) {
                return Err(SqlError::syntax(self.pos(), "expected TEMP or TEMPORARY"));
            }
            self.expect_keyword("TABLE")?;
            let (name, pos) = self.ident("table name")?;
            if self.schema.table_columns(&name).is_some() {
                return Err(SqlError::DuplicateTable {
                    name,
                    line: pos.line,
                    col: pos.col,
                });
            }
            self.expect_keyword("AS")?;
            let query = self.select()?;
            return Ok(Statement::CreateTemp(CreateTempSpec { name, query }));
        }
        Ok(Statement::Select(self.select()?))
    }

    fn select(&mut self) -> Result<QuerySpec, SqlError> {
        self.expect_keyword("SELECT")?;
        let raw_proj = self.projection_list()?;
        self.expect_keyword("FROM")?;
        let relations = self.relation_list()?;
        let mut conjuncts = Vec::new();
        if self.eat_keyword("WHERE") {
            self.conjunction(&mut conjuncts)?;
        }
        Resolver {
            schema: self.schema,
            relations: &relations,
        }
        .build(relations.clone(), raw_proj, conjuncts)
    }

    fn projection_list(&mut self) -> Result<Vec<RawProjection>, SqlError> {
        if *self.peek() == Tok::Star {
            self.advance();
            return Ok(Vec::new());
        }
        let mut out = vec![self.projection()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            out.push(self.projection()?);
        }
        Ok(out)
    }

    fn projection(&mut self) -> Result<RawProjection, SqlError> {
        let is_min = self.at_keyword("MIN") && matches!(self.toks.get(self.at + 1).map(|t| &t.tok), Some(Tok::LParen));
        if is_min {
            self.advance();
            self.expect(Tok::LParen, "(")?;
            let col = self.column_ref()?;
            self.expect(Tok::RParen, ")")?;
            let out = self.output_alias()?;
            return Ok(RawProjection::Min(col, out));
        }
        let col = self.column_ref()?;
        let out = self.output_alias()?;
        Ok(RawProjection::Col(col, out))
    }

    fn output_alias(&mut self) -> Result<Option<String>, SqlError> {
        if self.eat_keyword("AS") {
            Ok(Some(self.ident("output name")?.0))
        } else {
            Ok(None)
        }
    }

    fn column_ref(&mut self) -> Result<RawCol, SqlError> {
        let (first, pos) = self.ident("column reference")?;
        if *self.peek() == Tok::Dot {
            self.advance();
            let (name, _) = self.ident("column name")?;
            Ok(RawCol {
                qualifier: Some(first),
                name,
                pos,
            })
        } else {
            Ok(RawCol {
                qualifier: None,
                name: first,
                pos,
            })
        }
    }

    fn relation_list(&mut self) -> Result<Vec<(Relation, Pos)>, SqlError> {
        let mut out: Vec<(Relation, Pos)> = Vec::new();
        loop {
            let (table, pos) = self.ident("table name")?;
            if self.schema.table_columns(&table).is_none() {
                return Err(SqlError::UnknownTable {
                    name: table,
                    line: pos.line,
                    col: pos.col,
                });
            }
            let explicit = self.eat_keyword("AS");
            let alias = if explicit || matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) {
                self.ident("alias")?.0
            } else {
                table.clone()
            };
            if out.iter().any(|(r, _)| r.alias == alias) {
                return Err(SqlError::syntax(pos, format!("duplicate alias {alias}")));
            }
            out.push((Relation::new(table, alias), pos));
            if *self.peek() == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn conjunction(&mut self, out: &mut Vec<RawConjunct>) -> Result<(), SqlError> {
        self.conjunct(out)?;
        while self.eat_keyword("AND") {
            self.conjunct(out)?;
        }
        if self.at_keyword("OR") {
            return Err(SqlError::syntax(self.pos(), "disjunction is not supported"));
        }
        Ok(())
    }

    fn conjunct(&mut self, out: &mut Vec<RawConjunct>) -> Result<(), SqlError> {
        if *self.peek() == Tok::LParen {
            self.advance();
            self.conjunction(out)?;
            self.expect(Tok::RParen, ")")?;
            return Ok(());
        }
        let pos = self.pos();
        let lhs = self.operand()?;
        if self.eat_keyword("IN") {
            let Operand::Col(col) = lhs else {
                return Err(SqlError::syntax(pos, "IN requires a column on the left"));
            };
            self.expect(Tok::LParen, "(")?;
            let mut values = vec![self.literal()?];
            while *self.peek() == Tok::Comma {
                self.advance();
                values.push(self.literal()?);
            }
            self.expect(Tok::RParen, ")")?;
            out.push(RawConjunct::In(col, values));
            return Ok(());
        }
        if self.eat_keyword("LIKE") {
            let Operand::Col(col) = lhs else {
                return Err(SqlError::syntax(pos, "LIKE requires a column on the left"));
            };
            let lit_pos = self.pos();
            match self.literal()? {
                Value::Text(s) => out.push(RawConjunct::Like(col, s.to_string())),
                _ => return Err(SqlError::syntax(lit_pos, "LIKE pattern must be a string")),
            }
            return Ok(());
        }
        let cmp = match self.peek() {
            Tok::Eq => Cmp::Eq,
            Tok::Lt => Cmp::Lt,
            Tok::Gt => Cmp::Gt,
            _ => return Err(SqlError::syntax(self.pos(), "expected =, <, >, IN or LIKE")),
        };
        self.advance();
        let rhs = self.operand()?;
        out.push(RawConjunct::Compare(lhs, cmp, rhs, pos));
        Ok(())
    }

    fn operand(&mut self) -> Result<Operand, SqlError> {
        match self.peek() {
            Tok::Str(_) | Tok::Int(_) => {
                let pos = self.pos();
                Ok(Operand::Lit(self.literal()?, pos))
            }
            _ => Ok(Operand::Col(self.column_ref()?)),
        }
    }

    fn literal(&mut self) -> Result<Value, SqlError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Value::text(s))
            }
            Tok::Int(v) => {
                self.advance();
                Ok(Value::Int(v))
            }
            _ => Err(SqlError::syntax(self.pos(), "expected literal")),
        }
    }
}

struct Resolver<'a> {
    schema: &'a dyn SchemaLookup,
    relations: &'a [(Relation, Pos)],
}

impl Resolver<'_> {
    fn columns_of(&self, table: &str) -> &[ColumnMeta] {
        self.schema.table_columns(table).unwrap_or(&[])
    }

    fn resolve(&self, raw: &RawCol) -> Result<(ColumnRef, DataType), SqlError> {
        let unknown = || SqlError::UnknownColumn {
            name: match &raw.qualifier {
                Some(q) => format!("{q}.{}", raw.name),
                None => raw.name.clone(),
            },
            line: raw.pos.line,
            col: raw.pos.col,
        };
        match &raw.qualifier {
            Some(q) => {
                let (rel, _) = self.relations.iter().find(|(r, _)| &r.alias == q).ok_or_else(unknown)?;
                let meta = self
                    .columns_of(&rel.table)
                    .iter()
                    .find(|c| c.name == raw.name)
                    .ok_or_else(unknown)?;
                Ok((ColumnRef::new(q.clone(), raw.name.clone()), meta.data_type))
            }
            None => {
                let mut found = None;
                for (rel, _) in self.relations {
                    if let Some(meta) = self.columns_of(&rel.table).iter().find(|c| c.name == raw.name) {
                        if found.is_some() {
                            return Err(SqlError::syntax(raw.pos, format!("ambiguous column {}", raw.name)));
                        }
                        found = Some((ColumnRef::new(rel.alias.clone(), raw.name.clone()), meta.data_type));
                    }
                }
                found.ok_or_else(unknown)
            }
        }
    }

    fn check_type(ty: DataType, v: &Value, pos: Pos, col: &ColumnRef) -> Result<(), SqlError> {
        match v.data_type() {
            Some(t) if t != ty => Err(SqlError::TypeMismatch {
                message: format!("{col} is {ty} but literal {v} is {t}"),
                line: pos.line,
                col: pos.col,
            }),
            _ => Ok(()),
        }
    }

    fn build(
        &self,
        relations: Vec<(Relation, Pos)>,
        raw_proj: Vec<RawProjection>,
        conjuncts: Vec<RawConjunct>,
    ) -> Result<QuerySpec, SqlError> {
        let mut filters = Vec::new();
        let mut join_edges = Vec::new();
        for c in conjuncts {
            match c {
                RawConjunct::In(raw, values) => {
                    let (col, ty) = self.resolve(&raw)?;
                    for v in &values {
                        Self::check_type(ty, v, raw.pos, &col)?;
                    }
                    filters.push(Predicate::In(col, values));
                }
                RawConjunct::Like(raw, pattern) => {
                    let (col, ty) = self.resolve(&raw)?;
                    if ty != DataType::Text {
                        return Err(SqlError::TypeMismatch {
                            message: format!("LIKE on non-text column {col}"),
                            line: raw.pos.line,
                            col: raw.pos.col,
                        });
                    }
                    filters.push(Predicate::Like(col, pattern));
                }
                RawConjunct::Compare(lhs, cmp, rhs, pos) => match (lhs, rhs) {
                    (Operand::Col(a), Operand::Col(b)) => {
                        let (ca, ta) = self.resolve(&a)?;
                        let (cb, tb) = self.resolve(&b)?;
                        if !matches!(cmp, Cmp::Eq) {
                            return Err(SqlError::syntax(pos, "only equality joins are supported"));
                        }
                        if ca.alias == cb.alias {
                            return Err(SqlError::syntax(
                                pos,
                                "join predicate must reference two distinct relations",
                            ));
                        }
                        if ta != tb {
                            return Err(SqlError::TypeMismatch {
                                message: format!("{ca} is {ta} but {cb} is {tb}"),
                                line: pos.line,
                                col: pos.col,
                            });
                        }
                        join_edges.push(JoinEq::new(ca, cb));
                    }
                    (Operand::Col(a), Operand::Lit(v, vpos)) => {
                        let (col, ty) = self.resolve(&a)?;
                        Self::check_type(ty, &v, vpos, &col)?;
                        filters.push(match cmp {
                            Cmp::Eq => Predicate::Eq(col, v),
                            Cmp::Lt => Predicate::Lt(col, v),
                            Cmp::Gt => Predicate::Gt(col, v),
                        });
                    }
                    (Operand::Lit(v, vpos), Operand::Col(a)) => {
                        let (col, ty) = self.resolve(&a)?;
                        Self::check_type(ty, &v, vpos, &col)?;
                        filters.push(match cmp {
                            Cmp::Eq => Predicate::Eq(col, v),
                            Cmp::Lt => Predicate::Gt(col, v),
                            Cmp::Gt => Predicate::Lt(col, v),
                        });
                    }
                    (Operand::Lit(..), Operand::Lit(..)) => {
                        return Err(SqlError::syntax(pos, "comparison between two literals"));
                    }
                },
            }
        }
        let aggregates = raw_proj.iter().filter(|p| matches!(p, RawProjection::Min(..))).count();
        if aggregates > 0 && aggregates < raw_proj.len() {
            let pos = raw_proj
                .iter()
                .find_map(|p| match p {
                    RawProjection::Col(raw, _) => Some(raw.pos),
                    RawProjection::Min(..) => None,
                })
                .expect("mixed list has a plain column");
            return Err(SqlError::syntax(
                pos,
                "plain columns cannot be mixed with MIN without GROUP BY",
            ));
        }
        let mut projections = Vec::new();
        for p in raw_proj {
            projections.push(match p {
                RawProjection::Col(raw, output) => Projection::Column {
                    column: self.resolve(&raw)?.0,
                    output,
                },
                RawProjection::Min(raw, output) => Projection::Min {
                    column: self.resolve(&raw)?.0,
                    output,
                },
            });
        }
        let spec = QuerySpec {
            relations: relations.into_iter().map(|(r, _)| r).collect(),
            filters,
            join_edges,
            projections,
        };
        if !JoinGraph::from_spec(&spec).is_connected() {
            return Err(SqlError::DisconnectedJoinGraph);
        }
        Ok(spec)
    }
}
