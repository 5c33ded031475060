//! SQL text rendering. `parse(render(q))` reproduces `q` structurally.

use std::fmt;

use super::ast::*;
use crate::value::Value;

fn literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Int(i) => write!(f, "{i}"),
        Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        Value::Null => f.write_str("NULL"),
    }
}

fn quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    write!(f, "'{}'", s.replace('\'', "''"))
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Eq(c, v) => {
                write!(f, "{c} = ")?;
                literal(f, v)
            }
            Predicate::Lt(c, v) => {
                write!(f, "{c} < ")?;
                literal(f, v)
            }
            Predicate::Gt(c, v) => {
                write!(f, "{c} > ")?;
                literal(f, v)
            }
            Predicate::In(c, vs) => {
                write!(f, "{c} IN (")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    literal(f, v)?;
                }
                f.write_str(")")
            }
            Predicate::Like(c, p) => {
                write!(f, "{c} LIKE ")?;
                quoted(f, p)
            }
        }
    }
}

impl fmt::Display for JoinEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.left, self.right)
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let output = match self {
            Projection::Column { column, output } => {
                write!(f, "{column}")?;
                output
            }
            Projection::Min { column, output } => {
                write!(f, "MIN({column})")?;
                output
            }
        };
        if let Some(o) = output {
            write!(f, " AS {o}")?;
        }
        Ok(())
    }
}

impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.projections.is_empty() {
            f.write_str("*")?;
        }
        for (i, p) in self.projections.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("\nFROM ")?;
        for (i, r) in self.relations.iter().enumerate() {
            if i > 0 {
                f.write_str(",\n     ")?;
            }
            if r.alias == r.table {
                write!(f, "{}", r.table)?;
            } else {
                write!(f, "{} AS {}", r.table, r.alias)?;
            }
        }
        let mut first = true;
        let conjuncts = self
            .filters
            .iter()
            .map(|p| p.to_string())
            .chain(self.join_edges.iter().map(|j| j.to_string()));
        for c in conjuncts {
            f.write_str(if first { "\nWHERE " } else { "\n  AND " })?;
            first = false;
            f.write_str(&c)?;
        }
        Ok(())
    }
}

impl fmt::Display for CreateTempSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CREATE TEMP TABLE {} AS\n{}", self.name, self.query)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(q) => write!(f, "{q}"),
            Statement::CreateTemp(c) => write!(f, "{c}"),
        }
    }
}

/// Renders a query as SQL text.
pub fn render(spec: &QuerySpec) -> String {
    spec.to_string()
}
