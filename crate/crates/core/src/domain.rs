//! Tabular data model: schema roles, validated records and the fixed-width
//! numeric encoding used by every fitted model.
//!
//! The causal structure is fixed: sensitive columns `S` point into the
//! attribute columns `A`, and both point into the decision `Y`. A subset of
//! numeric attributes is marked *correctable*; those are the columns whose
//! sensitive-induced shift the affirmative-action predictor undoes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A sensitive column and its categorical level set. The first level is the
/// reference level of the one-hot encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveColumn {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum AttributeKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeColumn {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default)]
    pub correctable: bool,
}

impl AttributeColumn {
    pub fn numeric(name: impl Into<String>, correctable: bool) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric,
            correctable,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical {
                levels: levels.into_iter().map(Into::into).collect(),
            },
            correctable: false,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionKind {
    Binary,
    RealValued,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionColumn {
    pub name: String,
    pub kind: DecisionKind,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    sensitive: Vec<SensitiveColumn>,
    attributes: Vec<AttributeColumn>,
    decision: DecisionColumn,
}

/// Column roles of a dataset. Always valid once constructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct Schema {
    sensitive: Vec<SensitiveColumn>,
    attributes: Vec<AttributeColumn>,
    decision: DecisionColumn,
}

impl TryFrom<SchemaRepr> for Schema {
    type Error = Error;

    fn try_from(r: SchemaRepr) -> Result<Self> {
        Schema::new(r.sensitive, r.attributes, r.decision)
    }
}

impl From<Schema> for SchemaRepr {
    fn from(s: Schema) -> Self {
        SchemaRepr {
            sensitive: s.sensitive,
            attributes: s.attributes,
            decision: s.decision,
        }
    }
}

fn check_levels(column: &str, levels: &[String]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::TooFewLevels {
            column: column.to_string(),
            count: levels.len(),
        });
    }
    let mut seen = HashSet::new();
    for l in levels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidSchema(format!(
                "column `{column}` declares level `{l}` twice"
            )));
        }
    }
    Ok(())
}

impl Schema {
    pub fn new(
        sensitive: Vec<SensitiveColumn>,
        attributes: Vec<AttributeColumn>,
        decision: DecisionColumn,
    ) -> Result<Self> {
        if sensitive.is_empty() {
            return Err(Error::InvalidSchema(
                "at least one sensitive column is required".into(),
            ));
        }
        let mut names = HashSet::new();
        let all_names = sensitive
            .iter()
            .map(|c| c.name.as_str())
            .chain(attributes.iter().map(|c| c.name.as_str()))
            .chain(std::iter::once(decision.name.as_str()));
        for name in all_names {
            if !names.insert(name) {
                return Err(Error::DuplicateColumn(name.to_string()));
            }
        }
        for c in &sensitive {
            check_levels(&c.name, &c.levels)?;
        }
        for c in &attributes {
            match &c.kind {
                AttributeKind::Categorical { levels } => {
                    check_levels(&c.name, levels)?;
                    if c.correctable {
                        return Err(Error::InvalidSchema(format!(
                            "correctable column `{}` must be numeric",
                            c.name
                        )));
                    }
                }
                AttributeKind::Numeric => {}
            }
        }
        Ok(Self {
            sensitive,
            attributes,
            decision,
        })
    }

    pub fn sensitive(&self) -> &[SensitiveColumn] {
        &self.sensitive
    }

    pub fn attributes(&self) -> &[AttributeColumn] {
        &self.attributes
    }

    pub fn decision(&self) -> &DecisionColumn {
        &self.decision
    }

    pub fn sensitive_index(&self, name: &str) -> Option<usize> {
        self.sensitive.iter().position(|c| c.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|c| c.name == name)
    }

    /// Attribute indices of the correctable columns, in schema order.
    pub fn correctable_indices(&self) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.correctable)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn level_index(&self, sensitive_col: usize, level: &str) -> Result<usize> {
        let col = &self.sensitive[sensitive_col];
        col.levels
            .iter()
            .position(|l| l == level)
            .ok_or_else(|| Error::UnknownLevel {
                column: col.name.clone(),
                value: level.to_string(),
            })
    }

    /// Validates a sensitive level tuple.
    pub fn check_sensitive(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.sensitive.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} sensitive values, got {}",
                self.sensitive.len(),
                s.len()
            )));
        }
        for (col, &level) in self.sensitive.iter().zip(s) {
            if level >= col.levels.len() {
                return Err(Error::UnknownLevel {
                    column: col.name.clone(),
                    value: format!("#{level}"),
                });
            }
        }
        Ok(())
    }

    pub fn check_attributes(&self, a: &[AttrValue]) -> Result<()> {
        if a.len() != self.attributes.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} attribute values, got {}",
                self.attributes.len(),
                a.len()
            )));
        }
        for (col, v) in self.attributes.iter().zip(a) {
            match (&col.kind, v) {
                (AttributeKind::Numeric, AttrValue::Num(x)) => {
                    if !x.is_finite() {
                        return Err(Error::InvalidValue {
                            column: col.name.clone(),
                            message: format!("non-finite value {x}"),
                        });
                    }
                }
                (AttributeKind::Categorical { levels }, AttrValue::Level(l)) => {
                    if *l >= levels.len() {
                        return Err(Error::UnknownLevel {
                            column: col.name.clone(),
                            value: format!("#{l}"),
                        });
                    }
                }
                _ => {
                    return Err(Error::InvalidValue {
                        column: col.name.clone(),
                        message: "value kind does not match column type".into(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn check_record(&self, r: &Record) -> Result<()> {
        self.check_sensitive(&r.sensitive)?;
        self.check_attributes(&r.attributes)?;
        if let Some(y) = r.decision {
            let ok = match self.decision.kind {
                DecisionKind::Binary => y == 0.0 || y == 1.0,
                DecisionKind::RealValued => y.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidValue {
                    column: self.decision.name.clone(),
                    message: format!("invalid decision value {y}"),
                });
            }
        }
        Ok(())
    }

    /// Builds a typed record from named raw values.
    pub fn record_from_named(&self, row: &NamedRow) -> Result<Record> {
        let mut sensitive = Vec::with_capacity(self.sensitive.len());
        for (i, col) in self.sensitive.iter().enumerate() {
            match row.get(&col.name) {
                Some(Value::Level(l)) => sensitive.push(self.level_index(i, l)?),
                Some(Value::Number(_)) => {
                    return Err(Error::InvalidValue {
                        column: col.name.clone(),
                        message: "expected a categorical level".into(),
                    })
                }
                None => return Err(Error::MissingColumn(col.name.clone())),
            }
        }
        let mut attributes = Vec::with_capacity(self.attributes.len());
        for col in &self.attributes {
            let v = row
                .get(&col.name)
                .ok_or_else(|| Error::MissingColumn(col.name.clone()))?;
            let value = match (&col.kind, v) {
                (AttributeKind::Numeric, Value::Number(x)) => AttrValue::Num(*x),
                (AttributeKind::Categorical { levels }, Value::Level(l)) => {
                    AttrValue::Level(levels.iter().position(|x| x == l).ok_or_else(|| {
                        Error::UnknownLevel {
                            column: col.name.clone(),
                            value: l.clone(),
                        }
                    })?)
                }
                _ => {
                    return Err(Error::InvalidValue {
                        column: col.name.clone(),
                        message: "value kind does not match column type".into(),
                    })
                }
            };
            attributes.push(value);
        }
        let decision = match row.get(&self.decision.name) {
            Some(Value::Number(y)) => Some(*y),
            Some(Value::Level(_)) => {
                return Err(Error::InvalidValue {
                    column: self.decision.name.clone(),
                    message: "decision must be numeric".into(),
                })
            }
            None => None,
        };
        let record = Record {
            sensitive,
            attributes,
            decision,
        };
        self.check_record(&record)?;
        Ok(record)
    }

    /// Hex SHA-256 of the canonical JSON form; ties fitted models to a schema.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn level_names(&self, s: &[usize]) -> Vec<&str> {
        self.sensitive
            .iter()
            .zip(s)
            .map(|(c, &l)| c.levels[l].as_str())
            .collect()
    }
}

/// A raw named value, as used by [`Encoding::encode_row`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Level(String),
    Number(f64),
}

pub type NamedRow = HashMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttrValue {
    Num(f64),
    Level(usize),
}

impl AttrValue {
    pub fn as_num(&self) -> Option<f64> {
        match *self {
            AttrValue::Num(x) => Some(x),
            AttrValue::Level(_) => None,
        }
    }
}

/// One row: sensitive level indices, attribute values, and an optional
/// decision (absent for scoring-only rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sensitive: Vec<usize>,
    pub attributes: Vec<AttrValue>,
    pub decision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    rows: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Arc<Schema>, rows: Vec<Record>) -> Result<Self> {
        for r in &rows {
            schema.check_record(r)?;
        }
        Ok(Self { schema, rows })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// All decisions; errors if any row lacks one.
    pub fn decisions(&self) -> Result<Vec<f64>> {
        let missing = self.rows.iter().filter(|r| r.decision.is_none()).count();
        if missing > 0 {
            return Err(Error::MissingDecisions(missing));
        }
        Ok(self.rows.iter().map(|r| r.decision.unwrap()).collect())
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Rows grouped by their sensitive level tuple.
    pub fn group_by_sensitive(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            groups.entry(r.sensitive.clone()).or_default().push(i);
        }
        groups
    }

    pub fn into_rows(self) -> Vec<Record> {
        self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSource {
    Sensitive { column: usize, level: usize },
    Numeric { column: usize },
    Categorical { column: usize, level: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub source: FeatureSource,
}

/// Fixed-width numeric layout: sensitive one-hots first (schema order,
/// reference level dropped), then attributes in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    schema: Arc<Schema>,
    features: Vec<Feature>,
    sensitive_spans: Vec<Range<usize>>,
    attribute_spans: Vec<Range<usize>>,
}

/// The set of schema columns a model may see.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    columns: Vec<String>,
}

impl FeatureMask {
    pub fn all(schema: &Schema) -> Self {
        let columns = schema
            .sensitive()
            .iter()
            .map(|c| c.name.clone())
            .chain(schema.attributes().iter().map(|c| c.name.clone()))
            .collect();
        Self { columns }
    }

    pub fn attributes_only(schema: &Schema) -> Self {
        Self {
            columns: schema.attributes().iter().map(|c| c.name.clone()).collect(),
        }
    }

    pub fn sensitive_only(schema: &Schema) -> Self {
        Self {
            columns: schema.sensitive().iter().map(|c| c.name.clone()).collect(),
        }
    }

    pub fn none() -> Self {
        Self {
            columns: Vec::new(),
        }
    }

    pub fn columns<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }
}

impl Serialize for Encoding {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.schema.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Encoding {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        Schema::deserialize(deserializer).map(|s| Encoding::new(Arc::new(s)))
    }
}

impl Encoding {
    pub fn new(schema: Arc<Schema>) -> Self {
        let mut features = Vec::new();
        let mut sensitive_spans = Vec::new();
        for (ci, col) in schema.sensitive().iter().enumerate() {
            let start = features.len();
            for (li, level) in col.levels.iter().enumerate().skip(1) {
                features.push(Feature {
                    name: format!("{}={}", col.name, level),
                    source: FeatureSource::Sensitive {
                        column: ci,
                        level: li,
                    },
                });
            }
            sensitive_spans.push(start..features.len());
        }
        let mut attribute_spans = Vec::new();
        for (ci, col) in schema.attributes().iter().enumerate() {
            let start = features.len();
            match &col.kind {
                AttributeKind::Numeric => features.push(Feature {
                    name: col.name.clone(),
                    source: FeatureSource::Numeric { column: ci },
                }),
                AttributeKind::Categorical { levels } => {
                    for (li, level) in levels.iter().enumerate().skip(1) {
                        features.push(Feature {
                            name: format!("{}={}", col.name, level),
                            source: FeatureSource::Categorical {
                                column: ci,
                                level: li,
                            },
                        });
                    }
                }
            }
            attribute_spans.push(start..features.len());
        }
        Self {
            schema,
            features,
            sensitive_spans,
            attribute_spans,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    /// Width of the sensitive one-hot prefix.
    pub fn sensitive_width(&self) -> usize {
        self.sensitive_spans.last().map_or(0, |r| r.end)
    }

    /// Feature positions covered by the masked columns, ascending.
    pub fn mask_indices(&self, mask: &FeatureMask) -> Result<Vec<usize>> {
        for name in &mask.columns {
            if self.schema.sensitive_index(name).is_none()
                && self.schema.attribute_index(name).is_none()
            {
                return Err(Error::MissingColumn(name.clone()));
            }
        }
        let mut out = Vec::new();
        for (col, span) in self.schema.sensitive().iter().zip(&self.sensitive_spans) {
            if mask.contains(&col.name) {
                out.extend(span.clone());
            }
        }
        for (col, span) in self.schema.attributes().iter().zip(&self.attribute_spans) {
            if mask.contains(&col.name) {
                out.extend(span.clone());
            }
        }
        Ok(out)
    }

    /// Writes the sensitive one-hot prefix into `out[..sensitive_width]`.
    pub fn encode_sensitive_into(&self, s: &[usize], out: &mut [f64]) {
        for (span, &level) in self.sensitive_spans.iter().zip(s) {
            for (k, slot) in out[span.clone()].iter_mut().enumerate() {
                *slot = if level == k + 1 { 1.0 } else { 0.0 };
            }
        }
    }

    pub fn encode_sensitive(&self, s: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.sensitive_width()];
        self.encode_sensitive_into(s, &mut out);
        out
    }

    /// Encodes `(s, a)` without validation; inputs must conform to the schema.
    pub fn encode_into(&self, s: &[usize], a: &[AttrValue], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.features.len(), 0.0);
        self.encode_sensitive_into(s, out);
        for (span, v) in self.attribute_spans.iter().zip(a) {
            match *v {
                AttrValue::Num(x) => out[span.start] = x,
                AttrValue::Level(level) => {
                    for (k, slot) in out[span.clone()].iter_mut().enumerate() {
                        *slot = if level == k + 1 { 1.0 } else { 0.0 };
                    }
                }
            }
        }
    }

    pub fn encode(&self, s: &[usize], a: &[AttrValue]) -> Result<Vec<f64>> {
        self.schema.check_sensitive(s)?;
        self.schema.check_attributes(a)?;
        let mut out = Vec::with_capacity(self.features.len());
        self.encode_into(s, a, &mut out);
        Ok(out)
    }

    pub fn encode_record(&self, r: &Record) -> Result<Vec<f64>> {
        self.encode(&r.sensitive, &r.attributes)
    }

    /// Encodes a row given by column name. The decision column is ignored.
    pub fn encode_row(&self, row: &NamedRow) -> Result<Vec<f64>> {
        let mut scrubbed;
        let row = if row.contains_key(&self.schema.decision().name) {
            scrubbed = row.clone();
            scrubbed.remove(&self.schema.decision().name);
            &scrubbed
        } else {
            row
        };
        let r = self.schema.record_from_named(row)?;
        self.encode_record(&r)
    }

    /// Recovers the sensitive level tuple from an encoded vector.
    pub fn decode_sensitive(&self, v: &[f64]) -> Result<Vec<usize>> {
        if v.len() < self.sensitive_width() {
            return Err(Error::SchemaMismatch("encoded vector too short".into()));
        }
        let mut s = Vec::with_capacity(self.sensitive_spans.len());
        for (col, span) in self.schema.sensitive().iter().zip(&self.sensitive_spans) {
            let hot: Vec<usize> = span
                .clone()
                .enumerate()
                .filter(|&(_, j)| v[j] == 1.0)
                .map(|(k, _)| k + 1)
                .collect();
            let clean = span.clone().all(|j| v[j] == 0.0 || v[j] == 1.0);
            match (clean, hot.as_slice()) {
                (true, []) => s.push(0),
                (true, [level]) => s.push(*level),
                _ => {
                    return Err(Error::InvalidValue {
                        column: col.name.clone(),
                        message: "not a valid one-hot block".into(),
                    })
                }
            }
        }
        Ok(s)
    }
}
