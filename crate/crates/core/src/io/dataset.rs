use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::binfmt::{payload_bytes, Reader, Writer};
use crate::error::{CuhError, Result};
use crate::model::{Modality, ViewMatrix};

pub const DATASET_MAGIC: [u8; 4] = *b"CUHD";
pub const DATASET_VERSION: u32 = 1;

/// Sorted, deduplicated label ids per item.
pub type LabelSets = Vec<Vec<u32>>;

/// Two views over the same `N` items.
///
/// `means` is `None` until [`center`] has been applied; afterwards it holds the
/// total offset subtracted from each view so queries can be mapped into the
/// same frame. Labels are carried for evaluation only and never reach training.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: [ViewMatrix; 2],
    labels: Option<LabelSets>,
    means: Option<[DVector<f64>; 2]>,
}

impl MultiViewDataset {
    pub fn new(view1: ViewMatrix, view2: ViewMatrix, labels: Option<LabelSets>) -> Result<Self> {
        if view1.count() != view2.count() {
            return Err(CuhError::ItemCountMismatch {
                view1: view1.count(),
                view2: view2.count(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != view1.count() {
                return Err(CuhError::dim("label count", view1.count(), l.len()));
            }
        }
        Ok(MultiViewDataset {
            views: [view1, view2],
            labels: labels.map(normalize_labels),
            means: None,
        })
    }

    pub fn view(&self, m: Modality) -> &ViewMatrix {
        &self.views[m.index()]
    }

    pub fn count(&self) -> usize {
        self.views[0].count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.views[0].dim(), self.views[1].dim())
    }

    pub fn labels(&self) -> Option<&LabelSets> {
        self.labels.as_ref()
    }

    pub fn means(&self) -> Option<&[DVector<f64>; 2]> {
        self.means.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.means.is_some()
    }

    pub fn with_labels(mut self, labels: LabelSets) -> Result<Self> {
        if labels.len() != self.count() {
            return Err(CuhError::dim("label count", self.count(), labels.len()));
        }
        self.labels = Some(normalize_labels(labels));
        Ok(self)
    }

    /// Splits into items `[0, n)` and `[n, N)`; means are carried to both halves.
    pub fn split_at(&self, n: usize) -> Result<(MultiViewDataset, MultiViewDataset)> {
        if n > self.count() {
            return Err(CuhError::InvalidArgument(format!(
                "cannot split {} items at {n}",
                self.count()
            )));
        }
        let total = self.count();
        let part = |start: usize, len: usize| MultiViewDataset {
            views: [
                ViewMatrix::new(self.views[0].data().columns(start, len).into_owned()),
                ViewMatrix::new(self.views[1].data().columns(start, len).into_owned()),
            ],
            labels: self.labels.as_ref().map(|l| l[start..start + len].to_vec()),
            means: self.means.clone(),
        };
        Ok((part(0, n), part(n, total - n)))
    }

    /// Reorders items: item `i` of the result is item `order[i]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<MultiViewDataset> {
        if order.len() != self.count() {
            return Err(CuhError::dim("permutation length", self.count(), order.len()));
        }
        let pick = |v: &ViewMatrix| ViewMatrix::new(v.data().select_columns(order.iter()));
        Ok(MultiViewDataset {
            views: [pick(&self.views[0]), pick(&self.views[1])],
            labels: self.labels.as_ref().map(|l| order.iter().map(|&i| l[i].clone()).collect()),
            means: self.means.clone(),
        })
    }
}

fn normalize_labels(mut labels: LabelSets) -> LabelSets {
    for l in &mut labels {
        l.sort_unstable();
        l.dedup();
    }
    labels
}

/// Zero-centers every feature row of both views.
pub fn center(data: &MultiViewDataset) -> MultiViewDataset {
    let mut views = data.views.clone();
    let mut means: [DVector<f64>; 2] = [DVector::zeros(0), DVector::zeros(0)];
    for (k, view) in views.iter_mut().enumerate() {
        let mut m = view.data().clone();
        let n = m.ncols();
        let mean = if n == 0 {
            DVector::zeros(m.nrows())
        } else {
            m.column_mean()
        };
        for mut col in m.column_iter_mut() {
            col -= &mean;
        }
        *view = ViewMatrix::new(m);
        means[k] = match &data.means {
            Some(prev) => &prev[k] + &mean,
            None => mean,
        };
    }
    MultiViewDataset {
        views,
        labels: data.labels.clone(),
        means: Some(means),
    }
}

pub fn save_view(view: &ViewMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = Writer::new(&DATASET_MAGIC, DATASET_VERSION);
    w.u64(view.dim() as u64);
    w.u64(view.count() as u64);
    w.f64s(view.data().as_slice());
    w.finish(path.as_ref())
}

pub fn load_view(path: impl AsRef<Path>) -> Result<ViewMatrix> {
    let mut r = Reader::open(path.as_ref(), &DATASET_MAGIC, DATASET_VERSION)?;
    let d = r.usize()?;
    let n = r.usize()?;
    let cells = d.checked_mul(n).ok_or_else(|| CuhError::Corrupt {
        path: r.path().to_string(),
        reason: "header sizes overflow".into(),
    })?;
    r.expect_remaining(payload_bytes(r.path(), &[(cells, 8)])?)?;
    let vals = r.f64s(cells)?;
    Ok(ViewMatrix::new(DMatrix::from_vec(d, n, vals)))
}

/// One line per item, comma-separated label ids; an empty line is an empty set.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSets> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CuhError::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(row, line)| {
            let line = line.trim();
            if line.is_empty() {
                return Ok(Vec::new());
            }
            line.split(',')
                .enumerate()
                .map(|(col, cell)| {
                    cell.trim().parse::<u32>().map_err(|e| CuhError::Parse {
                        path: path.display().to_string(),
                        row,
                        col,
                        reason: e.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

pub fn save_labels(labels: &LabelSets, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for set in labels {
        let mut first = true;
        for l in set {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{l}").expect("writing to a String");
        }
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|e| CuhError::io(path.as_ref(), e))
}

/// Loads a raw (uncentered) dataset from two CUHD files and an optional label file.
pub fn load_dataset(
    view1: impl AsRef<Path>,
    view2: impl AsRef<Path>,
    labels: Option<&Path>,
) -> Result<MultiViewDataset> {
    let v1 = load_view(view1)?;
    let v2 = load_view(view2)?;
    let labels = labels.map(load_labels).transpose()?;
    MultiViewDataset::new(v1, v2, labels)
}

/// Reads a rectangular numeric CSV with one item per row into a `d × N` view.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<ViewMatrix> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CuhError::Parse {
            path: shown.clone(),
            row: 0,
            col: 0,
            reason: e.to_string(),
        })?;
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CuhError::Parse {
            path: shown.clone(),
            row,
            col: 0,
            reason: e.to_string(),
        })?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CuhError::Ragged {
                path: shown,
                row,
                expected,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CuhError::Parse {
                path: shown.clone(),
                row,
                col,
                reason: format!("not a number: {cell:?}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    // Row-per-item CSV is exactly the column-major layout of the d × N view.
    Ok(ViewMatrix::new(DMatrix::from_vec(width.unwrap_or(0), rows, values)))
}
