//! SQL subset front end: conjunctive select-project-join queries with
//! equi-joins, `=`/`<`/`>`/`IN`/`LIKE` filters, `MIN` aggregates and
//! `CREATE TEMP TABLE ... AS SELECT`.

mod ast;
mod graph;
mod lexer;
mod parser;
mod render;
mod substitute;

use thiserror::Error;

pub use ast::*;
pub use graph::JoinGraph;
pub use lexer::Pos;
pub use parser::{parse, parse_query};
pub use render::render;
pub use substitute::{export_names, referenced_outside, substitute};

use crate::storage::SchemaLookup;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SqlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { message: String, line: usize, col: usize },
    #[error("unknown table {name} at {line}:{col}")]
    UnknownTable { name: String, line: usize, col: usize },
    #[error("unknown column {name} at {line}:{col}")]
    UnknownColumn { name: String, line: usize, col: usize },
    #[error("type mismatch at {line}:{col}: {message}")]
    TypeMismatch { message: String, line: usize, col: usize },
    #[error("table {name} already exists ({line}:{col})")]
    DuplicateTable { name: String, line: usize, col: usize },
    #[error("join graph is disconnected; the query needs a Cartesian product")]
    DisconnectedJoinGraph,
    #[error("column {0} is referenced outside the substituted set but not exported")]
    MissingExportColumn(String),
    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),
}

impl SqlError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        SqlError::Syntax {
            message: message.into(),
            line: pos.line,
            col: pos.col,
        }
    }
}

impl QuerySpec {
    /// Replaces `SELECT *` with the explicit column list, in FROM order.
    pub fn expand_star(&mut self, schema: &dyn SchemaLookup) {
        if !self.projections.is_empty() {
            return;
        }
        for r in &self.relations {
            for c in schema.table_columns(&r.table).unwrap_or(&[]) {
                self.projections.push(Projection::Column {
                    column: ColumnRef::new(r.alias.clone(), c.name.clone()),
                    output: None,
                });
            }
        }
    }
}
