//! Content-addressed bitstream cache: a directory of `<key-hex>.art` files.
//!
//! Each artifact file is self-describing: 16-byte magic `KFORGE-ARTIFACT\0`,
//! a u32 format version, then length-prefixed fields (entry name, required
//! block, source payload, producer id, created-at). Writes publish atomically
//! via a temp file and rename, so concurrent readers never see a torn file.

use super::Artifact;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const ARTIFACT_MAGIC: &[u8; 16] = b"KFORGE-ARTIFACT\0";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not an artifact file: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

#[derive(Debug, Clone)]
pub struct BitstreamCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: String,
    pub entry_name: String,
    pub producer: String,
    pub created_at_ms: u64,
    pub bytes: u64,
}

impl BitstreamCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| CacheError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(BitstreamCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.art"))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.path_for(key).is_file()
    }

    pub fn store(&self, artifact: &Artifact) -> Result<(), CacheError> {
        let bytes = encode(artifact);
        let final_path = self.path_for(&artifact.key);
        let tmp_path = self
            .dir
            .join(format!(".{}.{}.tmp", artifact.key, std::process::id()));
        let io = |source| CacheError::Io {
            path: tmp_path.clone(),
            source,
        };
        let mut f = fs::File::create(&tmp_path).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
        drop(f);
        fs::rename(&tmp_path, &final_path).map_err(|source| CacheError::Io {
            path: final_path.clone(),
            source,
        })
    }

    pub fn load(&self, key: &str) -> Result<Option<Artifact>, CacheError> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        decode(&bytes, &path).map(Some)
    }

    pub fn list(&self) -> Result<Vec<CacheEntry>, CacheError> {
        let mut out = Vec::new();
        let rd = fs::read_dir(&self.dir).map_err(|source| CacheError::Io {
            path: self.dir.clone(),
            source,
        })?;
        for entry in rd.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("art") {
                continue;
            }
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(_) => continue,
            };
            if let Ok(a) = decode(&bytes, &path) {
                out.push(CacheEntry {
                    key: a.key,
                    entry_name: a.entry_name,
                    producer: a.producer,
                    created_at_ms: a.created_at_ms,
                    bytes: bytes.len() as u64,
                });
            }
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(out)
    }

    pub fn clear(&self) -> Result<usize, CacheError> {
        let mut removed = 0;
        let rd = fs::read_dir(&self.dir).map_err(|source| CacheError::Io {
            path: self.dir.clone(),
            source,
        })?;
        for entry in rd.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("art")
                && fs::remove_file(&path).is_ok()
            {
                removed += 1;
            }
        }
        Ok(removed)
    }
}

fn put_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn encode(a: &Artifact) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ARTIFACT_MAGIC);
    out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    put_field(&mut out, a.key.as_bytes());
    put_field(&mut out, a.entry_name.as_bytes());
    let block = match a.required_block {
        Some((x, y, z)) => {
            let mut b = vec![1u8];
            b.extend_from_slice(&x.to_le_bytes());
            b.extend_from_slice(&y.to_le_bytes());
            b.extend_from_slice(&z.to_le_bytes());
            b
        }
        None => vec![0u8],
    };
    put_field(&mut out, &block);
    put_field(&mut out, &a.payload);
    put_field(&mut out, a.producer.as_bytes());
    put_field(&mut out, &a.created_at_ms.to_le_bytes());
    out
}

fn decode(bytes: &[u8], path: &Path) -> Result<Artifact, CacheError> {
    let malformed = |reason: &str| CacheError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 20 || &bytes[..16] != ARTIFACT_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    if version != ARTIFACT_VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let mut pos = 20usize;
    let mut field = || -> Result<&[u8], CacheError> {
        if pos + 4 > bytes.len() {
            return Err(malformed("truncated field length"));
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > bytes.len() {
            return Err(malformed("truncated field"));
        }
        let out = &bytes[pos..pos + len];
        pos += len;
        Ok(out)
    };
    let key = String::from_utf8(field()?.to_vec()).map_err(|_| malformed("key not utf-8"))?;
    let entry_name =
        String::from_utf8(field()?.to_vec()).map_err(|_| malformed("entry not utf-8"))?;
    let block_field = field()?;
    let required_block = match block_field.first() {
        Some(0) => None,
        Some(1) if block_field.len() == 13 => Some((
            u32::from_le_bytes(block_field[1..5].try_into().unwrap()),
            u32::from_le_bytes(block_field[5..9].try_into().unwrap()),
            u32::from_le_bytes(block_field[9..13].try_into().unwrap()),
        )),
        _ => return Err(malformed("bad block field")),
    };
    let payload = field()?.to_vec();
    let producer =
        String::from_utf8(field()?.to_vec()).map_err(|_| malformed("producer not utf-8"))?;
    let created_raw = field()?;
    if created_raw.len() != 8 {
        return Err(malformed("bad created-at field"));
    }
    let created_at_ms = u64::from_le_bytes(created_raw.try_into().unwrap());
    Ok(Artifact {
        key,
        entry_name,
        required_block,
        payload,
        producer,
        created_at_ms,
    })
}
