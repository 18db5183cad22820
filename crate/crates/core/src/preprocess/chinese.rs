use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_TABLE: &str = include_str!("../../data/zh_t2s.tsv");

/// Single-codepoint traditional to simplified Chinese mapping.
///
/// File format: one pair per line, `<traditional hex>\t<simplified hex>`,
/// `#` comments allowed.
#[derive(Debug, Clone, Default)]
pub struct TradToSimp {
    map: HashMap<char, char>,
}

impl TradToSimp {
    pub fn parse(src: &str, origin: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        for (idx, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(t), Some(s), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(origin, idx + 1, "expected two tab-separated codepoints"));
            };
            let t = parse_codepoint(t).ok_or_else(|| Error::parse(origin, idx + 1, format!("bad codepoint {t:?}")))?;
            let s = parse_codepoint(s).ok_or_else(|| Error::parse(origin, idx + 1, format!("bad codepoint {s:?}")))?;
            map.insert(t, s);
        }
        if let Some((t, s)) = map.iter().find(|(_, s)| map.contains_key(s)) {
            return Err(Error::Config(format!(
                "mapping {t} -> {s} targets another traditional character; conversion would not be idempotent"
            )));
        }
        Ok(TradToSimp { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src, path)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn convert(&self, text: &str) -> String {
        text.chars().map(|c| *self.map.get(&c).unwrap_or(&c)).collect()
    }
}

fn parse_codepoint(s: &str) -> Option<char> {
    let s = s.trim().trim_start_matches("U+");
    u32::from_str_radix(s, 16).ok().and_then(char::from_u32)
}

pub fn default_table() -> TradToSimp {
    TradToSimp::parse(DEFAULT_TABLE, Path::new("zh_t2s.tsv")).expect("shipped mapping table parses")
}
