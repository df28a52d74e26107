//! Delimited-file loading under a declarative TOML schema, min-max scaling,
//! seeded train/test splits and canonical CSV / JSON-lines output.
//!
//! A config lists the columns that matter; everything else in the file is
//! ignored.
//!
//! ```toml
//! path = "admissions.csv"
//!
//! [[columns]]
//! name = "sex"
//! role = "sensitive"
//! levels = ["f", "m"]
//!
//! [[columns]]
//! name = "score"
//! role = "attribute"
//! type = "numeric"
//! correctable = true
//!
//! [[columns]]
//! name = "admit"
//! role = "decision"
//! positive = "yes"
//!
//! [[groups]]
//! column = "sex"
//! advantaged = "m"
//! disadvantaged = "f"
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    AttrValue, AttributeColumn, AttributeKind, Dataset, DecisionColumn, DecisionKind, Record,
    Schema, SensitiveColumn,
};
use crate::error::{Error, Result};
use crate::metrics::GroupPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sensitive,
    Attribute,
    Decision,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalize {
    None,
    MinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnConfig {
    pub name: String,
    pub role: Role,
    /// Attributes only; sensitive columns are always categorical. Defaults
    /// to numeric.
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub column_type: Option<ColumnType>,
    /// Declared level order. Inferred and sorted when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    /// Raw value → level rewrites applied before level lookup.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub recode: BTreeMap<String, String>,
    /// Binary decisions: the raw value mapped to 1. Without it the column
    /// must hold 0/1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<DecisionKind>,
    #[serde(default)]
    pub correctable: bool,
    /// Numeric attributes; defaults to min-max.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<Normalize>,
    /// Zero-based field position, needed when the file has no header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl ColumnConfig {
    fn new(name: &str, role: Role) -> Self {
        Self {
            name: name.to_string(),
            role,
            column_type: None,
            levels: None,
            recode: BTreeMap::new(),
            positive: None,
            kind: None,
            correctable: false,
            normalize: None,
            index: None,
        }
    }

    fn is_numeric_attribute(&self) -> bool {
        self.role == Role::Attribute
            && self.column_type.unwrap_or(ColumnType::Numeric) == ColumnType::Numeric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub column: String,
    pub advantaged: String,
    pub disadvantaged: String,
}

fn default_delimiter() -> char {
    ','
}

fn default_header() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_header")]
    pub header: bool,
    pub columns: Vec<ColumnConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupConfig>,
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SchemaConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(data), Some(dir)) = (&cfg.path, path.parent()) {
            if data.is_relative() {
                cfg.path = Some(dir.join(data));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let count = |role| self.columns.iter().filter(|c| c.role == role).count();
        if count(Role::Decision) != 1 {
            return Err(Error::InvalidSchema(format!(
                "exactly one decision column required, found {}",
                count(Role::Decision)
            )));
        }
        if count(Role::Sensitive) == 0 {
            return Err(Error::InvalidSchema(
                "at least one sensitive column is required".into(),
            ));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidSchema(
                "delimiter must be a single ASCII character".into(),
            ));
        }
        for c in &self.columns {
            if c.role == Role::Sensitive && c.column_type == Some(ColumnType::Numeric) {
                return Err(Error::InvalidSchema(format!(
                    "sensitive column `{}` must be categorical",
                    c.name
                )));
            }
            if c.correctable && !c.is_numeric_attribute() {
                return Err(Error::InvalidSchema(format!(
                    "correctable column `{}` must be a numeric attribute",
                    c.name
                )));
            }
            if !self.header && c.role != Role::Ignore && c.index.is_none() {
                return Err(Error::InvalidSchema(format!(
                    "column `{}` needs an `index` when the file has no header",
                    c.name
                )));
            }
        }
        Ok(())
    }

    /// Config that reads back exactly what [`write_csv`] writes for `schema`.
    pub fn canonical(schema: &Schema) -> Self {
        let mut columns = Vec::new();
        for c in schema.sensitive() {
            let mut cc = ColumnConfig::new(&c.name, Role::Sensitive);
            cc.column_type = Some(ColumnType::Categorical);
            cc.levels = Some(c.levels.clone());
            columns.push(cc);
        }
        for c in schema.attributes() {
            let mut cc = ColumnConfig::new(&c.name, Role::Attribute);
            match &c.kind {
                AttributeKind::Numeric => {
                    cc.column_type = Some(ColumnType::Numeric);
                    cc.normalize = Some(Normalize::None);
                    cc.correctable = c.correctable;
                }
                AttributeKind::Categorical { levels } => {
                    cc.column_type = Some(ColumnType::Categorical);
                    cc.levels = Some(levels.clone());
                }
            }
            columns.push(cc);
        }
        let mut d = ColumnConfig::new(&schema.decision().name, Role::Decision);
        d.kind = Some(schema.decision().kind);
        columns.push(d);
        Self {
            name: None,
            path: None,
            delimiter: ',',
            header: true,
            columns,
            groups: Vec::new(),
        }
    }

    /// This config with every categorical level set fixed to `schema`'s, so
    /// later files encode identically. The data path is dropped.
    pub fn pinned(&self, schema: &Schema) -> Self {
        let mut cfg = self.clone();
        cfg.path = None;
        for c in &mut cfg.columns {
            if let Some(i) = schema.sensitive_index(&c.name) {
                c.levels = Some(schema.sensitive()[i].levels.clone());
            } else if let Some(j) = schema.attribute_index(&c.name) {
                if let AttributeKind::Categorical { levels } = &schema.attributes()[j].kind {
                    c.levels = Some(levels.clone());
                }
            }
        }
        cfg
    }

    /// Configured group pairs, or every sensitive column's
    /// `levels[1]` vs `levels[0]` when none are configured.
    pub fn group_pairs(&self, schema: &Schema) -> Result<Vec<GroupPair>> {
        if self.groups.is_empty() {
            return Ok(GroupPair::defaults(schema));
        }
        self.groups
            .iter()
            .map(|g| GroupPair::new(schema, &g.column, &g.advantaged, &g.disadvantaged))
            .collect()
    }
}

/// A loaded dataset with values as found in the file, and the attribute
/// columns the config asks to min-max scale.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub minmax_columns: Vec<usize>,
}

struct Resolved<'a> {
    cfg: &'a ColumnConfig,
    position: usize,
}

impl<'a> Resolved<'a> {
    fn raw<'r>(&self, rec: &'r csv::StringRecord, row: usize) -> Result<&'r str>
    where
        'a: 'r,
    {
        let v = rec.get(self.position).ok_or_else(|| Error::Parse {
            row,
            column: self.cfg.name.clone(),
            message: format!("row has only {} fields", rec.len()),
        })?;
        if v.is_empty() {
            return Err(Error::Parse {
                row,
                column: self.cfg.name.clone(),
                message: "missing value".into(),
            });
        }
        let cfg: &'a ColumnConfig = self.cfg;
        Ok(cfg.recode.get(v).map_or(v, String::as_str))
    }

    fn levels(&self, records: &[csv::StringRecord]) -> Result<Vec<String>> {
        if let Some(levels) = &self.cfg.levels {
            return Ok(levels.clone());
        }
        let mut seen = BTreeSet::new();
        for (i, rec) in records.iter().enumerate() {
            seen.insert(self.raw(rec, i + 1)?.to_string());
        }
        Ok(seen.into_iter().collect())
    }

    fn level(&self, levels: &[String], rec: &csv::StringRecord, row: usize) -> Result<usize> {
        let v = self.raw(rec, row)?;
        levels
            .iter()
            .position(|l| l == v)
            .ok_or_else(|| Error::UnknownLevel {
                column: self.cfg.name.clone(),
                value: v.to_string(),
            })
    }

    fn number(&self, rec: &csv::StringRecord, row: usize) -> Result<f64> {
        let v = self.raw(rec, row)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Error::Parse {
                row,
                column: self.cfg.name.clone(),
                message: format!("`{v}` is not a finite number"),
            }),
        }
    }

    fn decision(&self, kind: DecisionKind, rec: &csv::StringRecord, row: usize) -> Result<f64> {
        if kind == DecisionKind::RealValued {
            return self.number(rec, row);
        }
        let v = self.raw(rec, row)?;
        if let Some(pos) = &self.cfg.positive {
            return Ok(if v == pos { 1.0 } else { 0.0 });
        }
        match v {
            "1" | "1.0" | "true" => Ok(1.0),
            "0" | "0.0" | "false" => Ok(0.0),
            _ => Err(Error::Parse {
                row,
                column: self.cfg.name.clone(),
                message: format!("binary decision `{v}` is not 0/1; set `positive`"),
            }),
        }
    }
}

fn open_reader(cfg: &SchemaConfig, path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter as u8)
        .has_headers(cfg.header)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Loads the file named by `cfg.path`.
pub fn load(cfg: &SchemaConfig) -> Result<Loaded> {
    let path = cfg
        .path
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("config has no data `path`".into()))?;
    load_path(cfg, path)
}

pub fn load_path(cfg: &SchemaConfig, path: &Path) -> Result<Loaded> {
    let mut reader = open_reader(cfg, path)?;
    let header = if cfg.header {
        Some(reader.headers()?.clone())
    } else {
        None
    };
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    load_records(cfg, header.as_ref(), &records)
}

/// Same as [`load_path`] over in-memory text.
pub fn load_str(cfg: &SchemaConfig, text: &str) -> Result<Loaded> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter as u8)
        .has_headers(cfg.header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = if cfg.header {
        Some(reader.headers()?.clone())
    } else {
        None
    };
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    load_records(cfg, header.as_ref(), &records)
}

fn load_records(
    cfg: &SchemaConfig,
    header: Option<&csv::StringRecord>,
    records: &[csv::StringRecord],
) -> Result<Loaded> {
    cfg.validate()?;
    let positions: HashMap<&str, usize> = header
        .map(|h| h.iter().enumerate().map(|(i, n)| (n, i)).collect())
        .unwrap_or_default();
    let resolve = |c: &ColumnConfig| -> Result<usize> {
        match c.index {
            Some(i) => Ok(i),
            None => positions
                .get(c.name.as_str())
                .copied()
                .ok_or_else(|| Error::MissingColumn(c.name.clone())),
        }
    };
    let by_role = |role| -> Result<Vec<Resolved>> {
        cfg.columns
            .iter()
            .filter(|c| c.role == role && role != Role::Decision)
            .map(|c| {
                Ok(Resolved {
                    cfg: c,
                    position: resolve(c)?,
                })
            })
            .collect()
    };
    let sens = by_role(Role::Sensitive)?;
    let attrs = by_role(Role::Attribute)?;
    let dec_cfg = cfg
        .columns
        .iter()
        .find(|c| c.role == Role::Decision)
        .expect("validated");
    // A headed file without the decision column loads unlabeled.
    let dec = match (header, dec_cfg.index) {
        (Some(_), None) if !positions.contains_key(dec_cfg.name.as_str()) => None,
        _ => Some(Resolved {
            cfg: dec_cfg,
            position: resolve(dec_cfg)?,
        }),
    };

    let mut sensitive_cols = Vec::with_capacity(sens.len());
    for r in &sens {
        sensitive_cols.push(SensitiveColumn {
            name: r.cfg.name.clone(),
            levels: r.levels(records)?,
        });
    }
    let mut attribute_cols = Vec::with_capacity(attrs.len());
    let mut minmax_columns = Vec::new();
    for (j, r) in attrs.iter().enumerate() {
        if r.cfg.is_numeric_attribute() {
            attribute_cols.push(AttributeColumn::numeric(&r.cfg.name, r.cfg.correctable));
            if r.cfg.normalize.unwrap_or(Normalize::MinMax) == Normalize::MinMax {
                minmax_columns.push(j);
            }
        } else {
            attribute_cols.push(AttributeColumn::categorical(
                &r.cfg.name,
                r.levels(records)?,
            ));
        }
    }
    let kind = dec_cfg.kind.unwrap_or(DecisionKind::Binary);
    let schema = Arc::new(Schema::new(
        sensitive_cols,
        attribute_cols,
        DecisionColumn {
            name: dec_cfg.name.clone(),
            kind,
        },
    )?);

    let mut rows = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let sensitive = sens
            .iter()
            .zip(schema.sensitive())
            .map(|(r, c)| r.level(&c.levels, rec, row))
            .collect::<Result<Vec<_>>>()?;
        let attributes = attrs
            .iter()
            .zip(schema.attributes())
            .map(|(r, c)| match &c.kind {
                AttributeKind::Numeric => r.number(rec, row).map(AttrValue::Num),
                AttributeKind::Categorical { levels } => {
                    r.level(levels, rec, row).map(AttrValue::Level)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let decision = dec
            .as_ref()
            .map(|d| d.decision(kind, rec, row))
            .transpose()?;
        rows.push(Record {
            sensitive,
            attributes,
            decision,
        });
    }
    Ok(Loaded {
        dataset: Dataset::new(schema, rows)?,
        minmax_columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub attribute: usize,
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Per-column `(x − min) / (max − min)`; constant columns map to 0. Values
/// outside the fitted range are not clipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub columns: Vec<ScaledColumn>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset, attributes: &[usize]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InsufficientData(
                "cannot fit a scaler on an empty dataset".into(),
            ));
        }
        let schema = data.schema();
        let mut columns = Vec::with_capacity(attributes.len());
        for &j in attributes {
            let col = schema
                .attributes()
                .get(j)
                .filter(|c| c.is_numeric())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("attribute #{j} is not a numeric column"))
                })?;
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in data.rows() {
                let x = r.attributes[j].as_num().expect("validated numeric");
                min = min.min(x);
                max = max.max(x);
            }
            columns.push(ScaledColumn {
                attribute: j,
                name: col.name.clone(),
                min,
                max,
            });
        }
        Ok(Self { columns })
    }

    pub fn scale(&self, c: &ScaledColumn, x: f64) -> f64 {
        let range = c.max - c.min;
        if range > 0.0 {
            (x - c.min) / range
        } else {
            0.0
        }
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let schema = data.schema();
        for c in &self.columns {
            if schema
                .attributes()
                .get(c.attribute)
                .map(|a| a.name.as_str())
                != Some(c.name.as_str())
            {
                return Err(Error::SchemaMismatch(format!(
                    "scaler column `{}` not found",
                    c.name
                )));
            }
        }
        let rows = data
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                for c in &self.columns {
                    let x = r.attributes[c.attribute]
                        .as_num()
                        .expect("validated numeric");
                    r.attributes[c.attribute] = AttrValue::Num(self.scale(c, x));
                }
                r
            })
            .collect();
        Dataset::new(Arc::clone(schema), rows)
    }
}

/// Seeded shuffle, then the first `⌊n·f⌋` rows train and the rest test.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if data.is_empty() {
        return Err(Error::InsufficientData(
            "cannot split an empty dataset".into(),
        ));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (data.len() as f64 * train_fraction).floor() as usize;
    let (train, test) = idx.split_at(n_train);
    Ok((data.select(train), data.select(test)))
}

/// Loads, splits and min-max scales with constants fitted on the train part.
pub fn load_split(
    cfg: &SchemaConfig,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, MinMaxScaler)> {
    let loaded = load(cfg)?;
    prepare(loaded, train_fraction, seed)
}

pub fn prepare(
    loaded: Loaded,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, MinMaxScaler)> {
    let (train, test) = split(&loaded.dataset, train_fraction, seed)?;
    let scaler = MinMaxScaler::fit(&train, &loaded.minmax_columns)?;
    Ok((scaler.transform(&train)?, scaler.transform(&test)?, scaler))
}

fn header_names(schema: &Schema) -> Vec<&str> {
    schema
        .sensitive()
        .iter()
        .map(|c| c.name.as_str())
        .chain(schema.attributes().iter().map(|c| c.name.as_str()))
        .chain(std::iter::once(schema.decision().name.as_str()))
        .collect()
}

fn decision_text(kind: DecisionKind, y: f64) -> String {
    match kind {
        DecisionKind::Binary if y == 1.0 => "1".into(),
        DecisionKind::Binary => "0".into(),
        DecisionKind::RealValued => y.to_string(),
    }
}

/// Canonical CSV: header, sensitive then attribute then decision columns,
/// level strings verbatim, shortest round-trip numerics. Missing decisions
/// are written as empty fields.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let schema = data.schema();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_names(schema))?;
    for r in data.rows() {
        let mut fields: Vec<String> = Vec::with_capacity(header_names(schema).len());
        for (c, &l) in schema.sensitive().iter().zip(&r.sensitive) {
            fields.push(c.levels[l].clone());
        }
        for (c, v) in schema.attributes().iter().zip(&r.attributes) {
            fields.push(match (&c.kind, v) {
                (_, AttrValue::Num(x)) => x.to_string(),
                (AttributeKind::Categorical { levels }, AttrValue::Level(l)) => levels[*l].clone(),
                (AttributeKind::Numeric, AttrValue::Level(l)) => l.to_string(),
            });
        }
        fields.push(
            r.decision
                .map(|y| decision_text(schema.decision().kind, y))
                .unwrap_or_default(),
        );
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// One JSON object per row, keyed by column name.
pub fn write_json_lines<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    let schema = data.schema();
    for r in data.rows() {
        let mut obj = serde_json::Map::new();
        for (c, &l) in schema.sensitive().iter().zip(&r.sensitive) {
            obj.insert(c.name.clone(), c.levels[l].clone().into());
        }
        for (c, v) in schema.attributes().iter().zip(&r.attributes) {
            let value = match (&c.kind, v) {
                (AttributeKind::Categorical { levels }, AttrValue::Level(l)) => {
                    levels[*l].clone().into()
                }
                (_, AttrValue::Num(x)) => (*x).into(),
                (_, AttrValue::Level(l)) => (*l).into(),
            };
            obj.insert(c.name.clone(), value);
        }
        obj.insert(
            schema.decision().name.clone(),
            r.decision.map_or(serde_json::Value::Null, Into::into),
        );
        serde_json::to_writer(&mut out, &obj)?;
        out.write_all(b"\n")
            .map_err(|e| Error::io("<json output>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
        [[columns]]
        name = "sex"
        role = "sensitive"

        [[columns]]
        name = "score"
        role = "attribute"
        correctable = true
        normalize = "none"

        [[columns]]
        name = "admit"
        role = "decision"
        positive = "yes"
    "#;

    #[test]
    fn loads_three_rows_with_roles() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let data = load_str(
            &cfg,
            "sex,score,admit,note\nm,0.9,yes,x\nf,0.4,no,y\nf,0.7,yes,z\n",
        )
        .unwrap()
        .dataset;
        assert_eq!(data.len(), 3);
        let s = data.schema();
        assert_eq!(s.sensitive()[0].levels, vec!["f", "m"]);
        assert!(s.attributes()[0].correctable);
        assert_eq!(data.decisions().unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(data.rows()[0].sensitive, vec![1]);
        assert_eq!(data.rows()[1].attributes[0], AttrValue::Num(0.4));
    }

    #[test]
    fn malformed_number_names_row_and_column() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let err = load_str(&cfg, "sex,score,admit\nm,0.9,yes\nf,8s5,no\n").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "score")),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            load_str(&cfg, "sex,score,admit\n,0.9,yes\nf,0.1,no\n"),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn declared_levels_reject_unknown_values() {
        let text = CFG.replace(
            "role = \"sensitive\"",
            "role = \"sensitive\"\nlevels = [\"f\", \"m\"]",
        );
        let cfg = SchemaConfig::from_toml(&text).unwrap();
        assert!(matches!(
            load_str(&cfg, "sex,score,admit\nx,0.9,yes\nf,0.1,no\n"),
            Err(Error::UnknownLevel { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let no_decision = CFG.replace("role = \"decision\"", "role = \"attribute\"");
        assert!(SchemaConfig::from_toml(&no_decision).is_err());
        let no_sensitive = CFG.replace("role = \"sensitive\"", "role = \"ignore\"");
        assert!(SchemaConfig::from_toml(&no_sensitive).is_err());
        let bad_key = format!("{CFG}\nbogus = 1\n");
        assert!(SchemaConfig::from_toml(&bad_key).is_err());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let mut text = String::from("sex,score,admit\n");
        for i in 0..1000 {
            text.push_str(&format!(
                "{},{},{}\n",
                if i % 2 == 0 { "f" } else { "m" },
                i,
                if i % 3 == 0 { "yes" } else { "no" }
            ));
        }
        let data = load_str(&cfg, &text).unwrap().dataset;
        let (tr, te) = split(&data, 0.75, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (750, 250));
        let small = data.select(&[0, 1, 2, 3]);
        let (tr, te) = split(&small, 0.75, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (3, 1));
        assert_eq!(
            split(&data, 0.75, 9).unwrap().0.rows(),
            split(&data, 0.75, 9).unwrap().0.rows()
        );
        assert!(split(&data, 1.0, 1).is_err());
    }

    #[test]
    fn scaler_uses_train_constants() {
        let text = CFG.replace("normalize = \"none\"", "");
        let cfg = SchemaConfig::from_toml(&text).unwrap();
        let loaded = load_str(
            &cfg,
            "sex,score,admit\nm,10,yes\nf,20,no\nf,30,yes\nm,50,no\n",
        )
        .unwrap();
        assert_eq!(loaded.minmax_columns, vec![0]);
        let train = loaded.dataset.select(&[0, 1, 2]);
        let test = loaded.dataset.select(&[3]);
        let scaler = MinMaxScaler::fit(&train, &loaded.minmax_columns).unwrap();
        let t = scaler.transform(&test).unwrap();
        assert_eq!(t.rows()[0].attributes[0], AttrValue::Num(2.0));
        let tr = scaler.transform(&train).unwrap();
        assert_eq!(tr.rows()[1].attributes[0], AttrValue::Num(0.5));
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let data = load_str(
            &cfg,
            "sex,score,admit\nm,0.1,yes\nf,0.30000000000000004,no\n",
        )
        .unwrap()
        .dataset;
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let canon =
            SchemaConfig::from_toml(&SchemaConfig::canonical(data.schema()).to_toml()).unwrap();
        let back = load_str(&canon, std::str::from_utf8(&buf).unwrap())
            .unwrap()
            .dataset;
        assert_eq!(back.rows(), data.rows());
        assert_eq!(**back.schema(), **data.schema());
    }

    #[test]
    fn missing_decision_column_loads_unlabeled() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let data = load_str(&cfg, "sex,score\nm,0.5\nf,0.2\n").unwrap().dataset;
        assert!(data.rows().iter().all(|r| r.decision.is_none()));
        assert!(matches!(data.decisions(), Err(Error::MissingDecisions(2))));
    }

    #[test]
    fn pinned_config_fixes_levels() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let data = load_str(&cfg, "sex,score,admit\nm,0.5,yes\nf,0.2,no\n")
            .unwrap()
            .dataset;
        let pinned = cfg.pinned(data.schema());
        assert!(matches!(
            load_str(&pinned, "sex,score\nm,0.5\nm,0.1\n"),
            Ok(ref l) if l.dataset.schema().sensitive()[0].levels == vec!["f", "m"]
        ));
    }

    #[test]
    fn json_lines_shape() {
        let cfg = SchemaConfig::from_toml(CFG).unwrap();
        let data = load_str(&cfg, "sex,score,admit\nm,0.5,yes\nf,0.2,no\n")
            .unwrap()
            .dataset;
        let mut buf = Vec::new();
        write_json_lines(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let line: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(line["sex"], "m");
        assert_eq!(line["score"], 0.5);
        assert_eq!(line["admit"], 1.0);
    }
}
