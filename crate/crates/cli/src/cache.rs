//! Residue cache: one append-only CSV file per family, with rows
//! `family,index,prime,residue`.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use anyhow::{bail, Context, Result};
use fmmv::eval::ResidueStore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheRow {
    pub family: String,
    pub index: String,
    pub prime: u64,
    pub residue: u64,
}

fn split_label(label: &str) -> (&str, &str) {
    label.split_once(':').unwrap_or(("M", label))
}

fn file_for(dir: &Path, family: &str) -> PathBuf {
    dir.join(format!("{family}.csv"))
}

fn cache_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

fn read_rows(path: &Path) -> Result<Vec<CacheRow>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize()
        .map(|r| r.with_context(|| format!("malformed row in {}", path.display())))
        .collect()
}

/// Cached residues, loaded eagerly and extended as values are evaluated.
pub struct CsvStore {
    dir: PathBuf,
    map: RwLock<HashMap<(String, u64), u64>>,
    writers: Mutex<HashMap<String, csv::Writer<File>>>,
    /// First write failure, reported by [`CsvStore::finish`].
    error: Mutex<Option<String>>,
}

impl CsvStore {
    pub fn open(dir: &Path) -> Result<CsvStore> {
        let mut map = HashMap::new();
        for path in cache_files(dir)? {
            for row in read_rows(&path)? {
                let label = format!("{}:{}", row.family, row.index);
                if let Some(old) = map.insert((label.clone(), row.prime), row.residue) {
                    if old != row.residue {
                        bail!(
                            "cache {} holds two residues for {label} at p = {}: {old} and {}",
                            path.display(),
                            row.prime,
                            row.residue
                        );
                    }
                }
            }
        }
        Ok(CsvStore {
            dir: dir.to_path_buf(),
            map: RwLock::new(map),
            writers: Mutex::new(HashMap::new()),
            error: Mutex::new(None),
        })
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    fn append(&self, row: &CacheRow) -> Result<()> {
        let mut writers = self.writers.lock().expect("cache lock");
        if !writers.contains_key(&row.family) {
            fs::create_dir_all(&self.dir)
                .with_context(|| format!("creating {}", self.dir.display()))?;
            let path = file_for(&self.dir, &row.family);
            let fresh = !path.exists() || fs::metadata(&path)?.len() == 0;
            let file = OpenOptions::new().create(true).append(true).open(&path)?;
            let w = csv::WriterBuilder::new()
                .has_headers(fresh)
                .from_writer(file);
            writers.insert(row.family.clone(), w);
        }
        let w = writers.get_mut(&row.family).expect("inserted above");
        w.serialize(row)?;
        Ok(())
    }

    /// Flush pending rows and surface any write error.
    pub fn finish(&self) -> Result<()> {
        for w in self.writers.lock().expect("cache lock").values_mut() {
            w.flush()?;
        }
        if let Some(e) = self.error.lock().expect("cache lock").take() {
            bail!("writing the residue cache failed: {e}");
        }
        Ok(())
    }
}

impl ResidueStore for CsvStore {
    fn get(&self, label: &str, p: u64) -> Option<u64> {
        self.map
            .read()
            .expect("cache lock")
            .get(&(label.to_string(), p))
            .copied()
    }

    fn put(&self, label: &str, p: u64, residue: u64) {
        {
            let mut map = self.map.write().expect("cache lock");
            match map.insert((label.to_string(), p), residue) {
                Some(old) if old == residue => return,
                Some(old) => panic!("residue cache received conflicting values for {label} at p = {p}: {old} and {residue}"),
                None => {}
            }
        }
        let (family, index) = split_label(label);
        let row = CacheRow {
            family: family.to_string(),
            index: index.to_string(),
            prime: p,
            residue,
        };
        if let Err(e) = self.append(&row) {
            self.error
                .lock()
                .expect("cache lock")
                .get_or_insert(e.to_string());
        }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct CacheStats {
    pub schema: u32,
    pub dir: String,
    /// Per family: (rows on disk, distinct entries).
    pub families: BTreeMap<String, (usize, usize)>,
    pub rows: usize,
    pub entries: usize,
}

pub fn stats(dir: &Path) -> Result<CacheStats> {
    let mut out = CacheStats {
        schema: 1,
        dir: dir.display().to_string(),
        ..CacheStats::default()
    };
    for path in cache_files(dir)? {
        let rows = read_rows(&path)?;
        let family = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut distinct: Vec<(&str, u64)> =
            rows.iter().map(|r| (r.index.as_str(), r.prime)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        out.rows += rows.len();
        out.entries += distinct.len();
        out.families.insert(family, (rows.len(), distinct.len()));
    }
    Ok(out)
}

/// Rewrite every file sorted and without duplicate rows. Returns the number
/// of rows dropped.
pub fn compact(dir: &Path) -> Result<usize> {
    let mut dropped = 0;
    for path in cache_files(dir)? {
        let mut rows = read_rows(&path)?;
        let before = rows.len();
        rows.sort();
        rows.dedup();
        if let Some(w) = rows
            .windows(2)
            .find(|w| w[0].index == w[1].index && w[0].prime == w[1].prime)
        {
            bail!(
                "{} holds conflicting residues for {} at p = {}",
                path.display(),
                w[0].index,
                w[0].prime
            );
        }
        dropped += before - rows.len();
        let tmp = path.with_extension("csv.tmp");
        {
            let mut w = csv::Writer::from_path(&tmp)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
    }
    Ok(dropped)
}

/// Remove every cache file. Returns the number of files removed.
pub fn clear(dir: &Path) -> Result<usize> {
    let files = cache_files(dir)?;
    for f in &files {
        fs::remove_file(f).with_context(|| format!("removing {}", f.display()))?;
    }
    Ok(files.len())
}
