use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// A resolved, fully qualified column reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub alias: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(alias: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            alias: alias.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.alias, self.column)
    }
}

/// Single-relation filter predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Predicate {
    Eq(ColumnRef, Value),
    Lt(ColumnRef, Value),
    Gt(ColumnRef, Value),
    In(ColumnRef, Vec<Value>),
    /// Pattern with `%` wildcards; every other character is literal.
    Like(ColumnRef, String),
}

impl Predicate {
    pub fn column(&self) -> &ColumnRef {
        match self {
            Predicate::Eq(c, _)
            | Predicate::Lt(c, _)
            | Predicate::Gt(c, _)
            | Predicate::In(c, _)
            | Predicate::Like(c, _) => c,
        }
    }

    pub fn column_mut(&mut self) -> &mut ColumnRef {
        match self {
            Predicate::Eq(c, _)
            | Predicate::Lt(c, _)
            | Predicate::Gt(c, _)
            | Predicate::In(c, _)
            | Predicate::Like(c, _) => c,
        }
    }
}

/// Equi-join conjunct between columns of two distinct aliases.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinEq {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

impl JoinEq {
    pub fn new(left: ColumnRef, right: ColumnRef) -> Self {
        JoinEq { left, right }
    }

    /// Orientation-independent form, smaller side first.
    pub fn canonical(&self) -> JoinEq {
        if self.left <= self.right {
            self.clone()
        } else {
            JoinEq::new(self.right.clone(), self.left.clone())
        }
    }

    pub fn touches(&self, alias: &str) -> bool {
        self.left.alias == alias || self.right.alias == alias
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Projection {
    Column { column: ColumnRef, output: Option<String> },
    Min { column: ColumnRef, output: Option<String> },
}

impl Projection {
    pub fn column(&self) -> &ColumnRef {
        match self {
            Projection::Column { column, .. } | Projection::Min { column, .. } => column,
        }
    }

    pub fn column_mut(&mut self) -> &mut ColumnRef {
        match self {
            Projection::Column { column, .. } | Projection::Min { column, .. } => column,
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Projection::Min { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub table: String,
    pub alias: String,
}

impl Relation {
    pub fn new(table: impl Into<String>, alias: impl Into<String>) -> Self {
        Relation {
            table: table.into(),
            alias: alias.into(),
        }
    }
}

/// A parsed select-project-join query. Empty `projections` means `SELECT *`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuerySpec {
    pub relations: Vec<Relation>,
    pub filters: Vec<Predicate>,
    pub join_edges: Vec<JoinEq>,
    pub projections: Vec<Projection>,
}

impl QuerySpec {
    pub fn relation(&self, alias: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.alias == alias)
    }

    pub fn alias_index(&self, alias: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.alias == alias)
    }

    pub fn aliases(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(|r| r.alias.as_str())
    }

    pub fn filters_on<'a>(&'a self, alias: &'a str) -> impl Iterator<Item = &'a Predicate> + 'a {
        self.filters.iter().filter(move |p| p.column().alias == alias)
    }

    pub fn has_aggregates(&self) -> bool {
        self.projections.iter().any(Projection::is_aggregate)
    }
}

/// `CREATE TEMP TABLE name AS SELECT ...`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateTempSpec {
    pub name: String,
    pub query: QuerySpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statement {
    Select(QuerySpec),
    CreateTemp(CreateTempSpec),
}
