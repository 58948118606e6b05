//! Columnar per-agent storage.
//!
//! A [`FieldBundle`] is a set of named, equal-length columns. The same type
//! backs agent state, agent parameters, policy data, shared step inputs and
//! update batches; only its role differs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Int,
    Real,
    Bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scalar {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl Scalar {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Int(_) => ScalarKind::Int,
            Scalar::Real(_) => ScalarKind::Real,
            Scalar::Bool(_) => ScalarKind::Bool,
        }
    }

    pub fn default_of(kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::Int => Scalar::Int(0),
            ScalarKind::Real => Scalar::Real(0.0),
            ScalarKind::Bool => Scalar::Bool(false),
        }
    }

    /// Bitwise equality; distinguishes `-0.0` from `0.0` and equates NaNs with
    /// identical payloads.
    pub fn bits_eq(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::Real(a), Scalar::Real(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

/// Ordered list of `(name, kind)` pairs with unique names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Schema {
    fields: Vec<(String, ScalarKind)>,
}

impl Schema {
    pub fn new<S: Into<String>>(fields: impl IntoIterator<Item = (S, ScalarKind)>) -> Result<Self> {
        let fields: Vec<(String, ScalarKind)> =
            fields.into_iter().map(|(n, k)| (n.into(), k)).collect();
        for (i, (name, _)) in fields.iter().enumerate() {
            if fields[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Schema(format!("duplicate field name `{name}`")));
            }
        }
        Ok(Self { fields })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<ScalarKind> {
        self.index_of(name).map(|i| self.fields[i].1)
    }

    pub fn fields(&self) -> &[(String, ScalarKind)] {
        &self.fields
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Int(Vec<i64>),
    Real(Vec<f64>),
    Bool(Vec<bool>),
}

impl Column {
    pub fn defaults(kind: ScalarKind, len: usize) -> Self {
        match kind {
            ScalarKind::Int => Column::Int(vec![0; len]),
            ScalarKind::Real => Column::Real(vec![0.0; len]),
            ScalarKind::Bool => Column::Bool(vec![false; len]),
        }
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Column::Int(_) => ScalarKind::Int,
            Column::Real(_) => ScalarKind::Real,
            Column::Bool(_) => ScalarKind::Bool,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Real(v) => v.len(),
            Column::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Scalar {
        match self {
            Column::Int(v) => Scalar::Int(v[i]),
            Column::Real(v) => Scalar::Real(v[i]),
            Column::Bool(v) => Scalar::Bool(v[i]),
        }
    }

    fn set(&mut self, i: usize, value: Scalar) {
        match (self, value) {
            (Column::Int(v), Scalar::Int(x)) => v[i] = x,
            (Column::Real(v), Scalar::Real(x)) => v[i] = x,
            (Column::Bool(v), Scalar::Bool(x)) => v[i] = x,
            (col, value) => unreachable!("kind mismatch {:?} <- {:?}", col.kind(), value.kind()),
        }
    }

    fn permuted(&self, perm: &[usize]) -> Column {
        match self {
            Column::Int(v) => Column::Int(perm.iter().map(|&i| v[i]).collect()),
            Column::Real(v) => Column::Real(perm.iter().map(|&i| v[i]).collect()),
            Column::Bool(v) => Column::Bool(perm.iter().map(|&i| v[i]).collect()),
        }
    }

    fn bits_eq(&self, other: &Column) -> bool {
        match (self, other) {
            (Column::Real(a), Column::Real(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => self == other,
        }
    }
}

/// Named columns sharing one fixed length.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldBundle {
    schema: Arc<Schema>,
    columns: Vec<Column>,
    len: usize,
}

impl FieldBundle {
    /// Bundle of `len` rows holding schema defaults.
    pub fn with_defaults(schema: Arc<Schema>, len: usize) -> Self {
        let columns = schema
            .fields()
            .iter()
            .map(|&(_, k)| Column::defaults(k, len))
            .collect();
        Self { schema, columns, len }
    }

    /// Bundle with no fields; it still carries a row count.
    pub fn empty(len: usize) -> Self {
        Self::with_defaults(Arc::new(Schema::empty()), len)
    }

    /// Builds a bundle from named columns, checking names and lengths.
    pub fn from_columns<S: Into<String>>(columns: impl IntoIterator<Item = (S, Column)>) -> Result<Self> {
        let (names, cols): (Vec<String>, Vec<Column>) =
            columns.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        let schema = Schema::new(names.iter().cloned().zip(cols.iter().map(Column::kind)))?;
        let len = cols.first().map_or(0, Column::len);
        if let Some((name, col)) = names.iter().zip(&cols).find(|(_, c)| c.len() != len) {
            return Err(Error::Schema(format!(
                "column `{name}` has length {} but the bundle has length {len}",
                col.len()
            )));
        }
        Ok(Self {
            schema: Arc::new(schema),
            columns: cols,
            len,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.schema.index_of(name).map(|i| &self.columns[i])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.schema.names().zip(self.columns.iter())
    }

    pub fn ints(&self, name: &str) -> Option<&[i64]> {
        match self.column(name)? {
            Column::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn reals(&self, name: &str) -> Option<&[f64]> {
        match self.column(name)? {
            Column::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn bools(&self, name: &str) -> Option<&[bool]> {
        match self.column(name)? {
            Column::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn ints_mut(&mut self, name: &str) -> Option<&mut [i64]> {
        let i = self.schema.index_of(name)?;
        match &mut self.columns[i] {
            Column::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn reals_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let i = self.schema.index_of(name)?;
        match &mut self.columns[i] {
            Column::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn bools_mut(&mut self, name: &str) -> Option<&mut [bool]> {
        let i = self.schema.index_of(name)?;
        match &mut self.columns[i] {
            Column::Bool(v) => Some(v),
            _ => None,
        }
    }

    /// Replaces a column in place; kind and length must match.
    pub fn replace_column(&mut self, name: &str, column: Column) -> Result<()> {
        let i = self
            .schema
            .index_of(name)
            .ok_or_else(|| Error::Schema(format!("unknown field `{name}`")))?;
        if column.kind() != self.columns[i].kind() || column.len() != self.len {
            return Err(Error::Schema(format!(
                "replacement for `{name}` must be {:?} of length {}",
                self.columns[i].kind(),
                self.len
            )));
        }
        self.columns[i] = column;
        Ok(())
    }

    pub fn row_ref(&self, index: usize) -> RowRef<'_> {
        assert!(index < self.len, "row {index} out of bounds for length {}", self.len);
        RowRef { bundle: self, index }
    }

    pub fn row(&self, index: usize) -> Row {
        self.row_ref(index).to_row()
    }

    /// Overwrites row `index` with `row`. The row must carry this bundle's schema.
    pub fn write_row(&mut self, index: usize, row: &Row) -> Result<()> {
        if !Arc::ptr_eq(&self.schema, &row.schema) && *self.schema != *row.schema {
            return Err(Error::Schema(format!(
                "row fields {:?} do not match bundle fields {:?}",
                row.schema.names().collect::<Vec<_>>(),
                self.schema.names().collect::<Vec<_>>()
            )));
        }
        for (col, &v) in self.columns.iter_mut().zip(&row.values) {
            col.set(index, v);
        }
        Ok(())
    }

    /// Resets row `index` to schema defaults.
    pub fn reset_row(&mut self, index: usize) {
        for col in &mut self.columns {
            let d = Scalar::default_of(col.kind());
            col.set(index, d);
        }
    }

    /// `out[k] = self[perm[k]]` for every column.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.len);
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.permuted(perm)).collect(),
            len: self.len,
        }
    }

    pub fn bits_eq(&self, other: &FieldBundle) -> bool {
        self.len == other.len
            && *self.schema == *other.schema
            && self.columns.iter().zip(&other.columns).all(|(a, b)| a.bits_eq(b))
    }
}

/// Borrowed view of one row of a bundle.
#[derive(Clone, Copy, Debug)]
pub struct RowRef<'a> {
    bundle: &'a FieldBundle,
    index: usize,
}

impl<'a> RowRef<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn schema(&self) -> &'a Arc<Schema> {
        &self.bundle.schema
    }

    pub fn get(&self, name: &str) -> Option<Scalar> {
        self.bundle.schema.index_of(name).map(|i| self.bundle.columns[i].get(self.index))
    }

    /// Panics if `name` is not an integer field.
    pub fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            Some(Scalar::Int(v)) => v,
            other => panic!("field `{name}` is not an integer field (found {other:?})"),
        }
    }

    /// Panics if `name` is not a real field.
    pub fn real(&self, name: &str) -> f64 {
        match self.get(name) {
            Some(Scalar::Real(v)) => v,
            other => panic!("field `{name}` is not a real field (found {other:?})"),
        }
    }

    /// Panics if `name` is not a boolean field.
    pub fn boolean(&self, name: &str) -> bool {
        match self.get(name) {
            Some(Scalar::Bool(v)) => v,
            other => panic!("field `{name}` is not a boolean field (found {other:?})"),
        }
    }

    pub fn to_row(&self) -> Row {
        Row {
            schema: self.bundle.schema.clone(),
            values: self.bundle.columns.iter().map(|c| c.get(self.index)).collect(),
        }
    }
}

/// Owned row, used as the return value of transition and update functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    schema: Arc<Schema>,
    values: Vec<Scalar>,
}

impl Row {
    pub fn defaults(schema: Arc<Schema>) -> Self {
        let values = schema.fields().iter().map(|&(_, k)| Scalar::default_of(k)).collect();
        Self { schema, values }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn get(&self, name: &str) -> Option<Scalar> {
        self.schema.index_of(name).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    /// Sets a field. Panics on an unknown name or a kind mismatch, like
    /// indexing a map with a missing key.
    pub fn set(&mut self, name: &str, value: impl Into<Scalar>) -> &mut Self {
        let value = value.into();
        let i = self
            .schema
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown field `{name}`"));
        assert_eq!(
            self.schema.fields()[i].1,
            value.kind(),
            "kind mismatch for field `{name}`"
        );
        self.values[i] = value;
        self
    }

    pub fn with(mut self, name: &str, value: impl Into<Scalar>) -> Self {
        self.set(name, value);
        self
    }
}
