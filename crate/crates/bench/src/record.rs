use std::io::{self, Write};

use serde::Serialize;

/// One run. Field order is also the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub algo: String,
    pub n: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub mode: String,
    pub work: Option<u64>,
    pub span: Option<u64>,
    pub wall_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<u64>,
}

pub const CSV_HEADER: &str = "algo,n,m,seed,mode,work,span,wall_ns,verified,threads,op,comparisons";

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        [
            self.algo.clone(),
            self.n.to_string(),
            cell(&self.m),
            self.seed.to_string(),
            self.mode.clone(),
            cell(&self.work),
            cell(&self.span),
            cell(&self.wall_ns),
            cell(&self.verified),
            self.threads.to_string(),
            cell(&self.op),
            cell(&self.comparisons),
        ]
        .join(",")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

pub fn write_records(out: &mut dyn Write, format: Format, records: &[BenchRecord]) -> io::Result<()> {
    match format {
        Format::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
        }
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                writeln!(out, "{}", r.csv_row())?;
            }
        }
    }
    out.flush()
}
