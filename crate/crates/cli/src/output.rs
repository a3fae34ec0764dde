//! Serializable run records and the CSV / binary side outputs.

use std::collections::BTreeMap;
use std::io::{self, Write};

use lapsira::sira::IterationRecord;
use lapsira::SiraConfig;
use lapsira_oracle::VerificationReport;
use serde::{Deserialize, Serialize};

/// Leading bytes of the eigenvector file.
pub const VECTORS_MAGIC: [u8; 4] = *b"LSEV";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// Vertices and edges of the file as read.
    pub input_vertices: usize,
    pub input_edges: usize,
    pub components: usize,
    /// Vertices, edges and Laplacian nonzeros of the solved component.
    pub n: usize,
    pub edges: usize,
    pub nnz: usize,
}

/// Wall-clock seconds per phase. The only nondeterministic part of a record.
pub type Timings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub input: String,
    pub config: SiraConfig,
    pub graph: GraphStats,
    /// Component vertex `k` is vertex `vertex_ids[k]` of the input file.
    /// Omitted when the input is connected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_ids: Option<Vec<usize>>,
    pub trim_index: usize,
    pub delta: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub eigenvalues: Vec<f64>,
    /// `||L v - lambda v||_2` per pair, recomputed from the original `L`.
    pub residuals: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub history: Vec<IterationRecord>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub run: RunRecord,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub code: String,
    pub n: usize,
    pub nnz: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    /// Largest eigenvalue difference from the sparse solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub input: String,
    pub graph: GraphStats,
    pub rows: Vec<BenchRow>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub policy: String,
    pub trim_index: usize,
    pub converged: bool,
    pub eigenvalues: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub input: String,
    pub graph: GraphStats,
    pub rows: Vec<AblationRow>,
    /// Largest eigenvalue difference between any two policies.
    pub max_spread: f64,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentsRecord {
    pub input: String,
    pub vertices: usize,
    pub edges: usize,
    pub components: usize,
    /// Component sizes, descending.
    pub sizes: Vec<usize>,
}

pub fn write_history_csv<W: Write>(mut out: W, history: &[IterationRecord]) -> io::Result<()> {
    writeln!(out, "sweep,iter,k,theta1,resnorm,sigma,inner_iters")?;
    for r in history {
        writeln!(out, "{},{},{},{:e},{:e},{:e},{}", r.sweep, r.iter, r.k, r.theta1, r.resnorm, r.sigma, r.inner_iters)?;
    }
    Ok(())
}

/// Header: magic (4 bytes), `n` as u64, `d` as u32, all little-endian; then
/// the `n x d` matrix column by column.
pub fn write_vectors<W: Write>(mut out: W, n: usize, vectors: &[Vec<f64>]) -> io::Result<()> {
    out.write_all(&VECTORS_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&(vectors.len() as u32).to_le_bytes())?;
    for v in vectors {
        for x in v {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Inverse of [`write_vectors`].
pub fn read_vectors(bytes: &[u8]) -> Option<(usize, Vec<Vec<f64>>)> {
    if bytes.len() < 16 || bytes[..4] != VECTORS_MAGIC {
        return None;
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().ok()?) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().ok()?) as usize;
    let body = &bytes[16..];
    if body.len() != n * d * 8 {
        return None;
    }
    let vals: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Some((n, vals.chunks(n.max(1)).take(d).map(<[f64]>::to_vec).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip() {
        let v = vec![vec![1.0, -2.0, 0.5], vec![0.25, 0.0, -1e-300]];
        let mut buf = Vec::new();
        write_vectors(&mut buf, 3, &v).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(read_vectors(&buf), Some((3, v)));
    }

    #[test]
    fn history_header() {
        let mut buf = Vec::new();
        write_history_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sweep,iter,k,theta1,resnorm,sigma,inner_iters\n");
    }
}
