//! Declarative table schemas (TOML) and the built-in benchmark layouts.
//!
//! ```toml
//! delimiter = ","
//! has_header = false
//!
//! [label]
//! rule = "custom"
//! anomalous = ["1"]
//!
//! [[columns]]
//! name = "x"
//! kind = "continuous"
//! count = 6          # expands to x0 … x5
//!
//! [[columns]]
//! name = "class"
//! kind = "label"
//! ```

use std::path::Path;

use goad_core::dataset::{label_rules, ColumnKind, ColumnSpec, LabelRule, TableSchema};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GoadError, Result};

fn comma() -> char {
    ','
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnGroup {
    pub name: String,
    pub kind: ColumnKind,
    /// Expands into `count` columns named `name0`, `name1`, …
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    #[serde(default = "comma")]
    pub delimiter: char,
    #[serde(default)]
    pub has_header: bool,
    /// Labelling rule used when the run config does not name one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelRule>,
    pub columns: Vec<ColumnGroup>,
}

pub const KDD_COLUMNS: [(&str, ColumnKind); 41] = {
    use ColumnKind::{Categorical as Cat, Continuous as Num};
    [
        ("duration", Num),
        ("protocol_type", Cat),
        ("service", Cat),
        ("flag", Cat),
        ("src_bytes", Num),
        ("dst_bytes", Num),
        ("land", Cat),
        ("wrong_fragment", Num),
        ("urgent", Num),
        ("hot", Num),
        ("num_failed_logins", Num),
        ("logged_in", Cat),
        ("num_compromised", Num),
        ("root_shell", Num),
        ("su_attempted", Num),
        ("num_root", Num),
        ("num_file_creations", Num),
        ("num_shells", Num),
        ("num_access_files", Num),
        ("num_outbound_cmds", Num),
        ("is_host_login", Cat),
        ("is_guest_login", Cat),
        ("count", Num),
        ("srv_count", Num),
        ("serror_rate", Num),
        ("srv_serror_rate", Num),
        ("rerror_rate", Num),
        ("srv_rerror_rate", Num),
        ("same_srv_rate", Num),
        ("diff_srv_rate", Num),
        ("srv_diff_host_rate", Num),
        ("dst_host_count", Num),
        ("dst_host_srv_count", Num),
        ("dst_host_same_srv_rate", Num),
        ("dst_host_diff_srv_rate", Num),
        ("dst_host_same_src_port_rate", Num),
        ("dst_host_srv_diff_host_rate", Num),
        ("dst_host_serror_rate", Num),
        ("dst_host_srv_serror_rate", Num),
        ("dst_host_rerror_rate", Num),
        ("dst_host_srv_rerror_rate", Num),
    ]
};

impl SchemaFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GoadError::io(path, e))?;
        toml::from_str(&text).map_err(|e| GoadError::Format {
            path: path.to_owned(),
            what: "schema file",
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serialises")
    }

    /// Layout of a benchmark file: `arrhythmia`, `thyroid`, `kdd` or `kddrev`.
    pub fn preset(dataset: &str) -> Result<Self> {
        let rule = label_rules(dataset)?;
        let numeric = |name: &str, count| ColumnGroup {
            name: name.into(),
            kind: ColumnKind::Continuous,
            count: Some(count),
        };
        let label = ColumnGroup {
            name: "class".into(),
            kind: ColumnKind::Label,
            count: None,
        };
        let columns = match rule {
            // ODDS layouts: features then the label
            LabelRule::Thyroid => vec![numeric("attr", 6), label],
            LabelRule::Arrhythmia => vec![numeric("attr", 274), label],
            _ => KDD_COLUMNS
                .iter()
                .map(|&(name, kind)| ColumnGroup {
                    name: name.into(),
                    kind,
                    count: None,
                })
                .chain(std::iter::once(label))
                .collect(),
        };
        Ok(Self {
            delimiter: ',',
            has_header: false,
            label: Some(rule),
            columns,
        })
    }

    /// Columns with groups expanded.
    pub fn table_schema(&self) -> Result<TableSchema> {
        let mut cols = Vec::new();
        for g in &self.columns {
            match g.count {
                None => cols.push(ColumnSpec::new(g.name.clone(), g.kind)),
                Some(0) => {
                    return Err(GoadError::Config(format!("column group `{}` has count 0", g.name)));
                }
                Some(n) => cols.extend((0..n).map(|i| ColumnSpec::new(format!("{}{i}", g.name), g.kind))),
            }
        }
        Ok(TableSchema::new(cols)?)
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| GoadError::Config(format!("delimiter {:?} must be one ASCII character", self.delimiter)))
    }

    /// SHA-256 over the expanded layout, delimiter and header flag.
    pub fn fingerprint(&self) -> Result<[u8; 32]> {
        let mut h = Sha256::new();
        h.update(self.table_schema()?.canonical().as_bytes());
        h.update([self.delimiter_byte()?, self.has_header as u8]);
        Ok(h.finalize().into())
    }
}
