use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use dagbisim::iomodel::{IoStats, MachineConfig};

/// One pipeline run, written as one CSV row per phase plus a `total` row.
pub struct RunReport {
    pub command: String,
    pub variant: String,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub memory: u64,
    pub block_size: u64,
    pub phases: Vec<(String, IoStats)>,
    pub seconds: f64,
    pub blocks: u64,
    pub collisions: u64,
}

pub const HEADER: &str =
    "command,variant,k,seed,memory,block_size,phase,reads,writes,bytes_read,bytes_written,total_ios,seconds,blocks,collisions";

impl RunReport {
    pub fn new(command: &str, cfg: &MachineConfig) -> Self {
        RunReport {
            command: command.to_owned(),
            variant: String::new(),
            k: None,
            seed: None,
            memory: cfg.memory_budget_bytes,
            block_size: cfg.block_size_bytes,
            phases: Vec::new(),
            seconds: 0.0,
            blocks: 0,
            collisions: 0,
        }
    }

    pub fn rows(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut total = IoStats::default();
        let mut phases: Vec<(&str, IoStats)> = self.phases.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        for (_, s) in &phases {
            total += *s;
        }
        phases.push(("total", total));
        phases
            .into_iter()
            .map(|(name, s)| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{}",
                    self.command,
                    self.variant,
                    opt(self.k.map(|k| k.to_string())),
                    opt(self.seed.map(|s| s.to_string())),
                    self.memory,
                    self.block_size,
                    name,
                    s.reads,
                    s.writes,
                    s.bytes_read,
                    s.bytes_written,
                    s.total(),
                    self.seconds,
                    self.blocks,
                    self.collisions
                )
            })
            .collect()
    }

    /// Appends to `path` (header first when the file is new or empty), or
    /// prints to stdout.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            None => {
                println!("{HEADER}");
                for r in self.rows() {
                    println!("{r}");
                }
            }
            Some(p) => {
                let mut f = OpenOptions::new().create(true).append(true).open(p).with_context(|| format!("cannot open {}", p.display()))?;
                if f.metadata()?.len() == 0 {
                    writeln!(f, "{HEADER}")?;
                }
                for r in self.rows() {
                    writeln!(f, "{r}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_phase_plus_total() {
        let mut r = RunReport::new("partition", &MachineConfig::default());
        r.phases = vec![("phase1".into(), IoStats { reads: 2, writes: 1, ..Default::default() }), ("phase2".into(), IoStats { reads: 3, ..Default::default() })];
        let rows = r.rows();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].contains(",total,5,1,"));
        assert!(rows.iter().all(|row| row.split(',').count() == HEADER.split(',').count()));
    }
}
