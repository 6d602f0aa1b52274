use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};
use crate::label::{ClassLabel, LabelSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_id: String,
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    pub label: ClassLabel,
}

/// The labelled image set a run draws its splits from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    space: LabelSpace,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, space: LabelSpace) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.image_id.is_empty() {
                return Err(Error::Config("empty image id in manifest".into()));
            }
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::DuplicateId(format!("image {}", e.image_id)));
            }
            space.check(e.label)?;
        }
        Ok(Self { entries, space })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, image_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.image_id == image_id)
    }

    /// `(label, count)` for every label of the space, ascending.
    pub fn class_counts(&self) -> Vec<(ClassLabel, usize)> {
        self.space
            .labels()
            .into_iter()
            .map(|l| (l, self.entries.iter().filter(|e| e.label == l).count()))
            .collect()
    }

    /// Confirms every referenced image file exists.
    pub fn check_files(&self) -> Result<()> {
        match self.entries.iter().find(|e| !e.path.is_file()) {
            Some(e) => Err(Error::io(
                &e.path,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("image file for `{}` not found", e.image_id),
                ),
            )),
            None => Ok(()),
        }
    }
}

/// Picks tab when the header line contains one, comma otherwise.
pub(crate) fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    loop {
        line.clear();
        if reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?
            == 0
        {
            return Ok(b',');
        }
        let t = line.trim_start();
        if !t.is_empty() && !t.starts_with('#') {
            return Ok(if line.contains('\t') { b'\t' } else { b',' });
        }
    }
}

pub(crate) fn delimited_reader(path: &Path) -> Result<csv::Reader<File>> {
    let delimiter = sniff_delimiter(path)?;
    ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Indices of required columns in a header row.
pub(crate) fn column_indices<const N: usize>(
    path: &Path,
    headers: &StringRecord,
    names: [&str; N],
) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("header is missing column `{name}`"),
            })?;
    }
    Ok(out)
}

pub(crate) fn parse_label(
    path: &Path,
    line: u64,
    raw: &str,
    space: LabelSpace,
) -> Result<ClassLabel> {
    let code = raw
        .trim_start_matches('+')
        .parse::<i32>()
        .map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("label `{raw}` is not an integer"),
        })?;
    let label = ClassLabel(code);
    if !space.contains(label) {
        return Err(Error::InvalidLabel(format!(
            "{}:{line}: unknown label code {code} for the {space} label space",
            path.display()
        )));
    }
    Ok(label)
}

/// Loads a binary-label manifest.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    load_manifest_with(path, LabelSpace::Binary)
}

/// Loads a manifest with columns `image_id`, `path`, `label` (header row
/// required, comma or tab separated, `#` comments allowed).
pub fn load_manifest_with(path: &Path, space: LabelSpace) -> Result<DatasetManifest> {
    let mut reader = delimited_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let [id_col, path_col, label_col] =
        column_indices(path, &headers, ["image_id", "path", "label"])?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let image_id = record[id_col].to_string();
        if image_id.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "empty image_id".into(),
            });
        }
        if !seen.insert(image_id.clone()) {
            return Err(Error::DuplicateId(format!(
                "image {image_id} ({}:{line})",
                path.display()
            )));
        }
        let file = PathBuf::from(&record[path_col]);
        let file = if file.is_relative() {
            base.join(file)
        } else {
            file
        };
        let label = parse_label(path, line, &record[label_col], space)?;
        entries.push(ManifestEntry {
            image_id,
            path: file,
            label,
        });
    }
    DatasetManifest::new(entries, space)
}

/// Writes a comma-separated manifest. Paths are written as given.
pub fn write_manifest(path: &Path, entries: &[(String, PathBuf, ClassLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["image_id", "path", "label"])
        .map_err(|e| csv_error(path, e))?;
    for (id, p, label) in entries {
        w.write_record([id.as_str(), &p.to_string_lossy(), &label.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
