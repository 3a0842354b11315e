use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::AnnotationRecord;
use crate::error::{Error, Result};

/// Append-only JSON-lines store of annotation records.
#[derive(Debug, Clone)]
pub struct AnnotationCache {
    path: PathBuf,
}

impl AnnotationCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        AnnotationCache { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &AnnotationRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(|e| Error::io(&self.path, e))
    }

    /// All records in file order; a missing file is an empty cache.
    pub fn load(&self) -> Result<Vec<AnnotationRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&self.path, e)),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&self.path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(out)
    }
}

/// Neighbor summaries on disk, one file per (node, rendered prompt).
#[derive(Debug, Clone)]
pub struct SummaryCache {
    dir: PathBuf,
}

impl SummaryCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SummaryCache { dir: dir.into() }
    }

    fn file(&self, node: usize, prompt: &str) -> PathBuf {
        let digest = Sha256::digest(prompt.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{node}-{hex}.txt"))
    }

    pub fn get(&self, node: usize, prompt: &str) -> Option<String> {
        fs::read_to_string(self.file(node, prompt)).ok()
    }

    pub fn put(&self, node: usize, prompt: &str, summary: &str) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.file(node, prompt);
        fs::write(&path, summary).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::Provenance;

    fn rec(id: usize) -> AnnotationRecord {
        AnnotationRecord {
            node_id: id,
            pseudo_label: id % 2,
            confidence: 80.0,
            provenance: Provenance::Llm,
            raw_response: None,
            retries: 0,
            fallback: false,
        }
    }

    #[test]
    fn appends_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let cache = AnnotationCache::new(dir.path().join("a.jsonl"));
        assert!(cache.load().unwrap().is_empty());
        cache.append(&rec(3)).unwrap();
        cache.append(&rec(8)).unwrap();
        assert_eq!(cache.load().unwrap(), vec![rec(3), rec(8)]);
    }

    #[test]
    fn corrupt_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let cache = AnnotationCache::new(&path);
        cache.append(&rec(1)).unwrap();
        fs::write(&path, fs::read_to_string(&path).unwrap() + "{oops\n").unwrap();
        assert!(matches!(cache.load(), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn summary_keyed_by_prompt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SummaryCache::new(dir.path().join("s"));
        cache.put(4, "prompt a", "summary").unwrap();
        assert_eq!(cache.get(4, "prompt a").as_deref(), Some("summary"));
        assert_eq!(cache.get(4, "prompt b"), None);
        assert_eq!(cache.get(5, "prompt a"), None);
    }
}
