//! Edge-list ingestion, simple undirected graphs and their Laplacians.
//!
//! Input is the whitespace separated `u v [w] [extra...]` format used by the
//! KONECT and SNAP collections. Lines starting with `%` or `#` are comments.
//! Ids are 1-based unless an id `0` appears anywhere in the file.

use std::collections::{HashSet, VecDeque};
use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: edge weight must be positive and finite, got {weight}")]
    InvalidWeight { line: usize, weight: f64 },

    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    VertexOutOfRange { u: usize, v: usize, n: usize },

    #[error("graph is empty")]
    Empty,

    #[error("graph has {components} connected components; extract the largest component first")]
    Disconnected { components: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// A normalized list of undirected edges: no self loops, no duplicate pairs,
/// every weight positive, every pair stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    /// Added to an internal id to recover the id used in the source file.
    id_offset: usize,
}

impl EdgeList {
    /// Normalizes `edges` on `n` vertices. The first occurrence of a pair wins.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange { u, v, n });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GraphError::InvalidWeight { line: 0, weight: w });
            }
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                out.push((key.0, key.1, w));
            }
        }
        Ok(Self { n, edges: out, id_offset: 0 })
    }

    /// Unit-weight convenience constructor.
    pub fn unweighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn id_offset(&self) -> usize {
        self.id_offset
    }
}

/// Parses an edge list from any buffered reader.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut raw: Vec<(u64, u64, f64, usize)> = Vec::new();
    let mut saw_zero = false;
    let mut max_id = 0u64;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let parse_id = |t: Option<&str>| -> Result<u64> {
            let t = t.ok_or_else(|| GraphError::Parse { line: lineno, msg: "expected two vertex ids".into() })?;
            t.parse::<u64>().map_err(|_| GraphError::Parse { line: lineno, msg: format!("invalid vertex id {t:?}") })
        };
        let u = parse_id(tok.next())?;
        let v = parse_id(tok.next())?;
        let w = match tok.next() {
            None => 1.0,
            Some(t) => t
                .parse::<f64>()
                .map_err(|_| GraphError::Parse { line: lineno, msg: format!("invalid weight {t:?}") })?,
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(GraphError::InvalidWeight { line: lineno, weight: w });
        }
        saw_zero |= u == 0 || v == 0;
        max_id = max_id.max(u).max(v);
        raw.push((u, v, w, lineno));
    }

    if raw.is_empty() {
        return Ok(EdgeList { n: 0, edges: Vec::new(), id_offset: 0 });
    }
    let offset = if saw_zero { 0 } else { 1 };
    let n = usize::try_from(max_id - offset + 1)
        .map_err(|_| GraphError::Parse { line: 0, msg: "vertex id does not fit in memory".into() })?;
    let mut el =
        EdgeList::new(n, raw.into_iter().map(|(u, v, w, _)| ((u - offset) as usize, (v - offset) as usize, w)))?;
    el.id_offset = offset as usize;
    Ok(el)
}

pub fn parse_edge_list_str(text: &str) -> Result<EdgeList> {
    parse_edge_list(text.as_bytes())
}

/// Weighted undirected graph in symmetric CSR form with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `(neighbor, weight)` pairs of `v`, sorted by neighbor.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[v]..self.row_ptr[v + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |u| self.neighbors(u).filter(move |&(v, _)| v > u).map(move |(v, w)| (u, v, w)))
    }
}

/// Builds the symmetric adjacency structure. Isolated vertices are kept.
pub fn build_graph(el: &EdgeList) -> Graph {
    let n = el.n;
    let mut counts = vec![0usize; n + 1];
    for &(u, v, _) in &el.edges {
        counts[u + 1] += 1;
        counts[v + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let row_ptr = counts;
    let mut fill = row_ptr.clone();
    let mut cols = vec![0usize; row_ptr[n]];
    let mut weights = vec![0.0; row_ptr[n]];
    for &(u, v, w) in &el.edges {
        cols[fill[u]] = v;
        weights[fill[u]] = w;
        fill[u] += 1;
        cols[fill[v]] = u;
        weights[fill[v]] = w;
        fill[v] += 1;
    }
    let mut degrees = vec![0.0; n];
    for i in 0..n {
        let r = row_ptr[i]..row_ptr[i + 1];
        let mut row: Vec<(usize, f64)> =
            cols[r.clone()].iter().copied().zip(weights[r.clone()].iter().copied()).collect();
        row.sort_unstable_by_key(|&(c, _)| c);
        for (k, (c, w)) in row.into_iter().enumerate() {
            cols[r.start + k] = c;
            weights[r.start + k] = w;
            degrees[i] += w;
        }
    }
    Graph { row_ptr, cols, weights, degrees }
}

/// Component id per vertex; ids are assigned in order of smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Largest component; ties go to the smaller id.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (c, &s) in self.sizes.iter().enumerate() {
            if best.is_none_or(|b| s > self.sizes[b]) {
                best = Some(c);
            }
        }
        best
    }
}

pub fn connected_components(g: &Graph) -> ComponentLabeling {
    const UNSEEN: usize = usize::MAX;
    let n = g.n();
    let mut labels = vec![UNSEEN; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if labels[s] != UNSEEN {
            continue;
        }
        let id = sizes.len();
        labels[s] = id;
        queue.push_back(s);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for (v, _) in g.neighbors(u) {
                if labels[v] == UNSEEN {
                    labels[v] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling { labels, sizes }
}

/// Induced subgraph on the largest connected component.
///
/// `vertex_map[new] = original`, increasing in `new`.
pub fn largest_component(g: &Graph) -> Result<(Graph, Vec<usize>)> {
    let comps = connected_components(g);
    let best = comps.largest().ok_or(GraphError::Empty)?;
    if comps.count() == 1 {
        return Ok((g.clone(), (0..g.n()).collect()));
    }
    let vertex_map: Vec<usize> = (0..g.n()).filter(|&v| comps.labels[v] == best).collect();
    let mut new_id = vec![usize::MAX; g.n()];
    for (k, &v) in vertex_map.iter().enumerate() {
        new_id[v] = k;
    }
    let edges: Vec<(usize, usize, f64)> =
        g.edges().filter(|&(u, _, _)| comps.labels[u] == best).map(|(u, v, w)| (new_id[u], new_id[v], w)).collect();
    let el = EdgeList { n: vertex_map.len(), edges, id_offset: 0 };
    Ok((build_graph(&el), vertex_map))
}

/// Graph Laplacian `L = D - A` stored as off-diagonal CSR plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Assembles `L = D - A`. Connectivity is not checked; see [`laplacian_checked`].
pub fn laplacian(g: &Graph) -> LaplacianMatrix {
    LaplacianMatrix {
        row_ptr: g.row_ptr.clone(),
        cols: g.cols.clone(),
        vals: g.weights.iter().map(|w| -w).collect(),
        diag: g.degrees.clone(),
    }
}

/// Like [`laplacian`] but rejects disconnected graphs.
pub fn laplacian_checked(g: &Graph) -> Result<LaplacianMatrix> {
    if g.n() == 0 {
        return Err(GraphError::Empty);
    }
    let comps = connected_components(g);
    if comps.count() > 1 {
        return Err(GraphError::Disconnected { components: comps.count() });
    }
    Ok(laplacian(g))
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn max_diag(&self) -> f64 {
        self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of stored nonzeros of `L`, diagonal included.
    pub fn nnz(&self) -> usize {
        self.vals.len() + self.diag.iter().filter(|d| **d != 0.0).count()
    }

    /// Off-diagonal `(col, value)` pairs of row `i`, sorted by column.
    pub fn row_offdiag(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `y <- L x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// `y_hat <- L_hat x_hat` where `L_hat` is `L` with row and column `skip`
    /// removed. Both vectors have length `n - 1`; nothing is copied.
    pub fn matvec_trimmed(&self, skip: usize, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        assert!(skip < n);
        assert_eq!(x.len(), n - 1);
        assert_eq!(y.len(), n - 1);
        for i in (0..n).filter(|&i| i != skip) {
            let ih = if i > skip { i - 1 } else { i };
            let mut acc = self.diag[i] * x[ih];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j == skip {
                    continue;
                }
                let jh = if j > skip { j - 1 } else { j };
                acc += self.vals[k] * x[jh];
            }
            y[ih] = acc;
        }
    }

    /// Writes the lower triangle in MatrixMarket coordinate symmetric form.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.n();
        let mut entries = Vec::new();
        for i in 0..n {
            for (j, v) in self.row_offdiag(i).filter(|&(j, _)| j < i) {
                entries.push((i, j, v));
            }
            if self.diag[i] != 0.0 {
                entries.push((i, i, self.diag[i]));
            }
        }
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{n} {n} {}", entries.len())?;
        for (i, j, v) in entries {
            writeln!(out, "{} {} {v}", i + 1, j + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(l: &LaplacianMatrix) -> Vec<Vec<f64>> {
        let n = l.n();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = l.diag()[i];
            for (j, v) in l.row_offdiag(i) {
                row[j] = v;
            }
        }
        m
    }

    #[test]
    fn parses_one_based_ids() {
        let el = parse_edge_list_str("1 2\n2 3\n").unwrap();
        assert_eq!(el.n(), 3);
        assert_eq!(el.edges(), &[(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn drops_self_loops_and_comments() {
        let el = parse_edge_list_str("% comment\n1 1\n1 2\n").unwrap();
        assert_eq!(el.edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn merges_reversed_duplicates() {
        let el = parse_edge_list_str("1 2\n2 1\n").unwrap();
        assert_eq!(el.edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn duplicate_keeps_first_weight() {
        let el = parse_edge_list_str("# w\n1 2 2.5\n2 1 7\n").unwrap();
        assert_eq!(el.edges(), &[(0, 1, 2.5)]);
    }

    #[test]
    fn zero_based_when_zero_present() {
        let el = parse_edge_list_str("0 1\n1 2\n").unwrap();
        assert_eq!(el.n(), 3);
        assert_eq!(el.edges()[0], (0, 1, 1.0));
    }

    #[test]
    fn extra_columns_ignored() {
        let el = parse_edge_list_str("1 2 1 1234567890\n").unwrap();
        assert_eq!(el.edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn malformed_token_reports_line() {
        match parse_edge_list_str("1 2\n% c\n3 x\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list_str("1\n"), Err(GraphError::Parse { line: 1, .. })));
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(matches!(parse_edge_list_str("1 2 0\n"), Err(GraphError::InvalidWeight { line: 1, .. })));
        assert!(matches!(parse_edge_list_str("1 2 -1\n"), Err(GraphError::InvalidWeight { .. })));
    }

    #[test]
    fn degrees_of_small_graphs() {
        let tri = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        assert_eq!(tri.degrees(), &[2.0, 2.0, 2.0]);
        let path = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2)]).unwrap());
        assert_eq!(path.degrees(), &[1.0, 2.0, 1.0]);
        let star = build_graph(&EdgeList::unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap());
        assert_eq!(star.degrees(), &[3.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn isolated_vertices_kept() {
        let g = build_graph(&EdgeList::unweighted(4, &[(0, 1)]).unwrap());
        assert_eq!(g.n(), 4);
        assert_eq!(g.degrees(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn components_labeling() {
        let g = build_graph(&EdgeList::unweighted(3, &[(0, 1)]).unwrap());
        let c = connected_components(&g);
        assert_eq!(c.labels, vec![0, 0, 1]);
        assert_eq!(c.sizes, vec![2, 1]);

        let p = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2)]).unwrap());
        assert_eq!(connected_components(&p).sizes, vec![3]);
    }

    #[test]
    fn largest_component_extraction() {
        let g = build_graph(&EdgeList::unweighted(5, &[(0, 1), (2, 3), (3, 4)]).unwrap());
        let (sub, map) = largest_component(&g).unwrap();
        assert_eq!(map, vec![2, 3, 4]);
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.num_edges(), 2);
    }

    #[test]
    fn largest_component_identity_and_ties() {
        let p = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2)]).unwrap());
        let (sub, map) = largest_component(&p).unwrap();
        assert_eq!(map, vec![0, 1, 2]);
        assert_eq!(sub, p);

        let g = build_graph(&EdgeList::unweighted(4, &[(0, 1), (2, 3)]).unwrap());
        let (_, map) = largest_component(&g).unwrap();
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn largest_component_of_empty_graph_fails() {
        let g = build_graph(&EdgeList::unweighted(0, &[]).unwrap());
        assert!(matches!(largest_component(&g), Err(GraphError::Empty)));
    }

    #[test]
    fn laplacian_matrices() {
        let tri = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        assert_eq!(dense(&laplacian(&tri)), vec![vec![2.0, -1.0, -1.0], vec![-1.0, 2.0, -1.0], vec![-1.0, -1.0, 2.0]]);
        let p = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2)]).unwrap());
        let l = laplacian(&p);
        assert_eq!(dense(&l), vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]);
        let mut y = vec![1.0; 3];
        l.matvec(&[1.0; 3], &mut y);
        assert_eq!(y, vec![0.0; 3]);
        assert_eq!(l.nnz(), 7);
    }

    #[test]
    fn checked_laplacian_rejects_disconnected() {
        let g = build_graph(&EdgeList::unweighted(3, &[(0, 1)]).unwrap());
        assert!(matches!(laplacian_checked(&g), Err(GraphError::Disconnected { components: 2 })));
    }

    #[test]
    fn trimmed_matvec_matches_submatrix() {
        let g = build_graph(&EdgeList::unweighted(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap());
        let l = laplacian(&g);
        let d = dense(&l);
        let x = [0.3, -1.2, 2.0];
        for skip in 0..4 {
            let mut y = vec![0.0; 3];
            l.matvec_trimmed(skip, &x, &mut y);
            let idx: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
            for (a, &i) in idx.iter().enumerate() {
                let expect: f64 = idx.iter().enumerate().map(|(b, &j)| d[i][j] * x[b]).sum();
                assert!((y[a] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matrix_market_dump() {
        let p = build_graph(&EdgeList::unweighted(3, &[(0, 1), (1, 2)]).unwrap());
        let mut buf = Vec::new();
        laplacian(&p).write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 1\n2 1 -1\n2 2 2\n3 2 -1\n3 3 1\n"
        );
    }
}
