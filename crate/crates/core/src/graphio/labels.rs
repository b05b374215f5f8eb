use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Interns label strings as 32-bit codes. Code 0 is reserved (the padding
/// label of traces); real labels start at 1.
#[derive(Clone, Debug, Default)]
pub struct LabelTable {
    names: Vec<String>,
    codes: HashMap<String, u32>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&code) = self.codes.get(name) {
            return code;
        }
        self.names.push(name.to_owned());
        let code = self.names.len() as u32;
        self.codes.insert(name.to_owned(), code);
        code
    }

    pub fn code(&self, name: &str) -> Option<u32> {
        self.codes.get(name).copied()
    }

    pub fn name(&self, code: u32) -> Option<&str> {
        if code == 0 {
            return None;
        }
        self.names.get(code as usize - 1).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Writes the sidecar table, one `label_code,utf8_string` line per label.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, name)?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::storage(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::storage(path, e))
    }

    pub fn read_csv<R: BufRead>(input: R, origin: &Path) -> Result<Self> {
        let mut table = LabelTable::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::storage(origin, e))?;
            if line.is_empty() {
                continue;
            }
            let bad = || Error::format(origin, format!("line {}: expected `code,label`", lineno + 1));
            let (code, name) = line.split_once(',').ok_or_else(bad)?;
            let code: u32 = code.trim().parse().map_err(|_| bad())?;
            if code as usize != table.names.len() + 1 {
                return Err(Error::format(
                    origin,
                    format!("line {}: label codes must be consecutive from 1", lineno + 1),
                ));
            }
            table.intern(name);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::storage(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}
