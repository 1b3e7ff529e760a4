//! Bounded FIFO store of embedding/label slots and the cosine-attention read
//! head that turns a query embedding into a class distribution.
//!
//! Reading is split in two so callers can attend over keys that are not the
//! stored embeddings (reinstatement recomputes them):
//! [`attend`]/[`attend_backward`] work on any `d×K` key matrix, and
//! [`EpisodicMemory::read`]/[`EpisodicMemory::read_backward`] apply them to
//! the stored embeddings.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::nn::{softmax, softmax_backward, Matrix};

/// One stored memory.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorySlot {
    pub embedding: Vec<f64>,
    pub label: usize,
    pub write_step: u64,
    /// Raw observation, kept only by mechanisms that replay it.
    pub observation: Option<Vec<f64>>,
    /// Encoder hidden activation at write time (stored-activation baseline).
    pub hidden: Option<Vec<f64>>,
}

impl MemorySlot {
    pub fn new(embedding: Vec<f64>, label: usize, write_step: u64) -> Self {
        Self {
            embedding,
            label,
            write_step,
            observation: None,
            hidden: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMemory {
    capacity: usize,
    slots: VecDeque<MemorySlot>,
}

/// Result of attending over `K` keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub similarities: Vec<f64>,
    pub weights: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Readout {
    /// Highest-probability class; ties go to the lowest id.
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = c;
            }
        }
        best
    }
}

/// Gradients of a read. `query` is produced for completeness; training code
/// drops it because the query path is stop-gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadGradients {
    pub keys: Matrix,
    pub query: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(q: &[f64], e: &[f64]) -> Result<f64> {
    if q.len() != e.len() {
        return Err(Error::Dimension {
            op: "cosine",
            left: (q.len(), 1),
            right: (e.len(), 1),
        });
    }
    let (nq, ne) = (norm(q), norm(e));
    if nq == 0.0 || ne == 0.0 {
        return Err(Error::param("cosine of a zero vector"));
    }
    Ok((dot(q, e) / (nq * ne)).clamp(-1.0, 1.0))
}

fn check_read_args(keys: &Matrix, labels: &[usize], query: &[f64], classes: usize) -> Result<()> {
    if keys.cols() == 0 {
        return Err(Error::EmptyMemory);
    }
    if keys.cols() != labels.len() || keys.rows() != query.len() {
        return Err(Error::Dimension {
            op: "read",
            left: keys.shape(),
            right: (query.len(), labels.len()),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::param(format!("label {bad} >= {classes} classes")));
    }
    Ok(())
}

/// Cosine attention of `query` over the columns of `keys`:
/// `s_i = cos(q, k_i)`, `w = softmax(s / tau)`, `p_c = Σ_{label_i = c} w_i`.
pub fn attend(
    keys: &Matrix,
    labels: &[usize],
    query: &[f64],
    tau: f64,
    classes: usize,
) -> Result<Readout> {
    check_read_args(keys, labels, query, classes)?;
    attend_rows(&keys.transpose(), labels, query, tau, classes)
}

/// [`attend`] with keys already transposed to one row per slot.
fn attend_rows(
    kt: &Matrix,
    labels: &[usize],
    query: &[f64],
    tau: f64,
    classes: usize,
) -> Result<Readout> {
    let similarities = (0..kt.rows())
        .map(|i| cosine(query, kt.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let weights = softmax(&similarities, tau)?;
    let mut probs = vec![0.0; classes];
    for (&w, &l) in weights.iter().zip(labels) {
        probs[l] += w;
    }
    Ok(Readout {
        similarities,
        weights,
        probs,
    })
}

/// Predicted class for each column of `queries`, attending over the same
/// keys. Identical arithmetic to [`attend`], with one transpose shared by
/// all queries.
pub fn classify_batch(
    keys: &Matrix,
    labels: &[usize],
    queries: &Matrix,
    tau: f64,
    classes: usize,
) -> Result<Vec<usize>> {
    if queries.cols() == 0 {
        return Ok(Vec::new());
    }
    check_read_args(keys, labels, &queries.column(0), classes)?;
    let kt = keys.transpose();
    (0..queries.cols())
        .map(|j| attend_rows(&kt, labels, &queries.column(j), tau, classes).map(|r| r.predicted()))
        .collect()
}

/// Backward pass of [`attend`] for upstream gradient `g_probs`.
///
/// Chains `p → w` (scatter by label), `w → s` (softmax Jacobian with `tau`)
/// and `s_i → k_i` via `∂s_i/∂k_i = q/(‖q‖‖k_i‖) − s_i k_i/‖k_i‖²`.
pub fn attend_backward(
    keys: &Matrix,
    labels: &[usize],
    query: &[f64],
    readout: &Readout,
    g_probs: &[f64],
    tau: f64,
) -> Result<ReadGradients> {
    let classes = g_probs.len();
    check_read_args(keys, labels, query, classes)?;
    if readout.similarities.len() != keys.cols() || readout.probs.len() != classes {
        return Err(Error::param("readout does not belong to these keys"));
    }
    let g_w: Vec<f64> = labels.iter().map(|&l| g_probs[l]).collect();
    let g_s = softmax_backward(&readout.weights, &g_w, tau);

    let nq = norm(query);
    let kt = keys.transpose();
    let mut g_keys_t = Matrix::zeros(kt.rows(), kt.cols());
    let mut g_query = vec![0.0; query.len()];
    for i in 0..kt.rows() {
        let k = kt.row(i);
        let nk = norm(k);
        let s = readout.similarities[i];
        let gs = g_s[i];
        let inv = 1.0 / (nq * nk);
        let g_row = &mut g_keys_t.as_mut_slice()[i * kt.cols()..(i + 1) * kt.cols()];
        for d in 0..k.len() {
            g_row[d] = gs * (query[d] * inv - s * k[d] / (nk * nk));
            g_query[d] += gs * (k[d] * inv - s * query[d] / (nq * nq));
        }
    }
    Ok(ReadGradients {
        keys: g_keys_t.transpose(),
        query: g_query,
    })
}

impl EpisodicMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("memory capacity must be >= 1"));
        }
        Ok(Self {
            capacity,
            slots: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Slots oldest first.
    pub fn slots(&self) -> impl ExactSizeIterator<Item = &MemorySlot> + '_ {
        self.slots.iter()
    }

    pub fn slot(&self, i: usize) -> Option<&MemorySlot> {
        self.slots.get(i)
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.slots.front().map(|s| s.embedding.len())
    }

    /// Appends `slot`; returns the evicted oldest slot once over capacity.
    pub fn write(&mut self, slot: MemorySlot) -> Result<Option<MemorySlot>> {
        if slot.embedding.iter().any(|v| !v.is_finite()) {
            return Err(Error::Rejected("non-finite embedding".into()));
        }
        if norm(&slot.embedding) == 0.0 {
            return Err(Error::Rejected("zero-norm embedding".into()));
        }
        if let Some(d) = self.embedding_dim() {
            if d != slot.embedding.len() {
                return Err(Error::Dimension {
                    op: "memory write",
                    left: (d, 1),
                    right: (slot.embedding.len(), 1),
                });
            }
        }
        if let Some(last) = self.slots.back() {
            if slot.write_step <= last.write_step {
                return Err(Error::Rejected(format!(
                    "write_step {} not after {}",
                    slot.write_step, last.write_step
                )));
            }
        }
        self.slots.push_back(slot);
        Ok(if self.slots.len() > self.capacity {
            self.slots.pop_front()
        } else {
            None
        })
    }

    /// Stored embeddings as a `d×K` matrix, oldest slot in column 0.
    pub fn keys(&self) -> Result<Matrix> {
        if self.slots.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let cols: Vec<&[f64]> = self.slots.iter().map(|s| s.embedding.as_slice()).collect();
        Matrix::from_columns(&cols)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.label).collect()
    }

    pub fn read(&self, query: &[f64], tau: f64, classes: usize) -> Result<Readout> {
        attend(&self.keys()?, &self.labels(), query, tau, classes)
    }

    /// Per-slot gradients (`d×K`, column `i` for slot `i`) of a prior
    /// [`read`](Self::read). The query gradient is discarded.
    pub fn read_backward(
        &self,
        query: &[f64],
        readout: &Readout,
        g_probs: &[f64],
        tau: f64,
    ) -> Result<Matrix> {
        attend_backward(&self.keys()?, &self.labels(), query, readout, g_probs, tau)
            .map(|g| g.keys)
    }

    /// Stacks a per-slot vector field into a `rows×K` matrix, failing with a
    /// mechanism error when a slot lacks it.
    pub(crate) fn gather(
        &self,
        indices: &[usize],
        what: &'static str,
        field: impl Fn(&MemorySlot) -> Option<&Vec<f64>>,
    ) -> Result<Matrix> {
        let mut cols = Vec::with_capacity(indices.len());
        for &i in indices {
            let slot = self
                .slots
                .get(i)
                .ok_or_else(|| Error::param(format!("slot index {i} out of range")))?;
            let v = field(slot).ok_or_else(|| {
                Error::Mechanism(format!("slot {} has no stored {what}", slot.write_step))
            })?;
            cols.push(v.as_slice());
        }
        Matrix::from_columns(&cols)
    }

    /// Debug dump: header `write_step,label,e0,...,e{d-1}` then one row per
    /// slot, oldest first.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.embedding_dim().unwrap_or(0);
        write!(out, "write_step,label")?;
        for i in 0..d {
            write!(out, ",e{i}")?;
        }
        writeln!(out)?;
        for s in &self.slots {
            write!(out, "{},{}", s.write_step, s.label)?;
            for v in &s.embedding {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
