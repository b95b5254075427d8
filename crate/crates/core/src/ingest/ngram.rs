use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

/// Register-specific n-gram counts of a single order.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramTable {
    register: String,
    order: usize,
    counts: HashMap<String, u64>,
    total: u64,
}

impl NgramTable {
    /// Builds a table directly. Keys are normalized to lowercase with single
    /// spaces; repeated keys have their counts summed.
    pub fn from_counts<I, S>(register: impl Into<String>, order: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        check_order(order)?;
        let mut table = NgramTable {
            register: register.into(),
            order,
            counts: HashMap::new(),
            total: 0,
        };
        for (gram, count) in rows {
            let key = normalize(gram.as_ref());
            let arity = key.split(' ').filter(|s| !s.is_empty()).count();
            if arity != order {
                return Err(invalid!(
                    "n-gram {:?} has {arity} units, table order is {order}",
                    gram.as_ref()
                ));
            }
            if count == 0 {
                return Err(invalid!("n-gram {:?} has count 0", gram.as_ref()));
            }
            table.insert(key, count);
        }
        Ok(table)
    }

    fn insert(&mut self, key: String, count: u64) {
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    pub fn register(&self) -> &str {
        &self.register
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sum of all stored counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct stored n-grams.
    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    /// Stored count, 0 when absent.
    pub fn lookup(&self, gram: &str) -> u64 {
        self.counts.get(&normalize(gram)).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn check_order(n: usize) -> Result<()> {
    if !(1..=5).contains(&n) {
        return Err(Error::Config(format!("n-gram order {n} outside [1, 5]")));
    }
    Ok(())
}

fn normalize(gram: &str) -> String {
    gram.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Loads `ngram<TAB>count` rows (UTF-8, no header) into a table of order `n`.
pub fn load_ngram_table(tsv: &[u8], n: usize, register: &str) -> Result<NgramTable> {
    check_order(n)?;
    let text = std::str::from_utf8(tsv).map_err(|e| {
        Error::parse(
            "n-gram TSV",
            format!("byte {}", e.valid_up_to()),
            "invalid UTF-8",
        )
    })?;
    let mut table = NgramTable {
        register: register.to_owned(),
        order: n,
        counts: HashMap::new(),
        total: 0,
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((gram, count)) = line.rsplit_once('\t') else {
            return Err(Error::parse(
                "n-gram TSV",
                format!("line {line_no}"),
                "expected ngram<TAB>count",
            ));
        };
        let count: u64 = count.trim().parse().map_err(|_| {
            Error::parse(
                "n-gram TSV",
                format!("line {line_no}"),
                format!("count {count:?} is not a non-negative integer"),
            )
        })?;
        if count == 0 {
            return Err(invalid!(
                "n-gram TSV line {line_no}: count must be at least 1"
            ));
        }
        let key = normalize(gram);
        let arity = if key.is_empty() {
            0
        } else {
            key.split(' ').count()
        };
        if arity != n {
            return Err(invalid!(
                "n-gram TSV line {line_no}: {gram:?} has {arity} units, table order is {n}"
            ));
        }
        table.insert(key, count);
    }
    Ok(table)
}
