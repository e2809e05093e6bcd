use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Records read and processed per parallel batch; output order is the input
/// order regardless of thread count.
pub const CHUNK_LINES: usize = 8192;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open input {}", path.display()))?;
    Ok(BufReader::with_capacity(1 << 20, file))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create output {}", path.display()))?;
    Ok(BufWriter::with_capacity(1 << 20, file))
}

pub fn write_json_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// A JSON-lines file, or every `*.jsonl` file of a directory in name order.
pub fn jsonl_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        if !path.exists() {
            bail!("input {} does not exist", path.display());
        }
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("cannot list {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    files.sort();
    if files.is_empty() {
        bail!("no .jsonl files in {}", path.display());
    }
    Ok(files)
}

/// One decoded input line with its 1-based line number.
pub struct Numbered<T> {
    pub line: usize,
    pub value: T,
}

/// Streams the non-empty lines of `files` in batches, calling `sink` with
/// each batch in order.
pub fn for_each_batch(
    files: &[PathBuf],
    mut sink: impl FnMut(&Path, Vec<Numbered<String>>) -> Result<()>,
) -> Result<()> {
    for path in files {
        let mut reader = open(path)?;
        let mut batch = Vec::with_capacity(CHUNK_LINES);
        let mut line_no = 0;
        loop {
            let mut line = String::new();
            let n = reader
                .read_line(&mut line)
                .with_context(|| format!("{}:{}: cannot read line", path.display(), line_no + 1))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let trimmed = line.trim_end_matches(['\n', '\r']);
            if trimmed.trim().is_empty() {
                continue;
            }
            let len = trimmed.len();
            line.truncate(len);
            batch.push(Numbered {
                line: line_no,
                value: line,
            });
            if batch.len() == CHUNK_LINES {
                sink(path, std::mem::replace(&mut batch, Vec::with_capacity(CHUNK_LINES)))?;
            }
        }
        if !batch.is_empty() {
            sink(path, batch)?;
        }
    }
    Ok(())
}

/// Decodes a batch in parallel, failing on the first malformed line.
pub fn decode_batch<T: DeserializeOwned + Send>(path: &Path, batch: Vec<Numbered<String>>) -> Result<Vec<Numbered<T>>> {
    batch
        .into_par_iter()
        .map(|n| {
            let value = serde_json::from_str(&n.value)
                .with_context(|| format!("{}:{}: malformed record", path.display(), n.line))?;
            Ok(Numbered { line: n.line, value })
        })
        .collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
