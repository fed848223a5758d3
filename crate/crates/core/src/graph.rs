//! Angular-correlation beam graph. Each beam is a node; every node receives
//! directed edges from the `k` beams whose pointing directions are most
//! correlated with its own (`k = 2` by default).

use std::cmp::Ordering;
use std::io::Write;

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_IN_DEGREE: usize = 2;

/// Cosine similarity of two pointing directions given as `(phi, theta)`.
pub fn angular_correlation<T: Scalar>(a: (T, T), b: (T, T)) -> T {
    let (phi_p, theta_p) = a;
    let (phi_q, theta_q) = b;
    let d = theta_p.sin() * theta_q.sin() * (phi_p - phi_q).cos() + theta_p.cos() * theta_q.cos();
    d.max(-T::one()).min(T::one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamGraph<T> {
    node_angles: Vec<(T, T)>,
    in_neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl<T: Scalar> BeamGraph<T> {
    /// Builds the graph from raw node angles with in-degree `k`.
    pub fn from_angles(angles: Vec<(T, T)>, k: usize) -> Result<Self> {
        let n = angles.len();
        if n < 3 {
            return Err(Error::invalid(format!(
                "beam graph needs at least 3 beams, got {n}"
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::invalid(format!("in-degree {k} must be in 1..{n}")));
        }
        let mut in_neighbors = Vec::with_capacity(n);
        let mut edges = Vec::with_capacity(n * k);
        for i in 0..n {
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (angular_correlation(angles[i], angles[j]), j))
                .collect();
            cand.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            let mut chosen: Vec<usize> = cand.iter().take(k).map(|c| c.1).collect();
            chosen.sort_unstable();
            edges.extend(chosen.iter().map(|&j| (j, i)));
            in_neighbors.push(chosen);
        }
        Ok(Self {
            node_angles: angles,
            in_neighbors,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_angles.len()
    }

    pub fn node_angles(&self) -> &[(T, T)] {
        &self.node_angles
    }

    /// Nodes pointing at `i`, ascending.
    pub fn in_neighbors(&self, i: usize) -> Result<&[usize]> {
        self.in_neighbors
            .get(i)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("node {i} out of range")))
    }

    /// Directed edges `(src, dst)`, grouped by destination in node order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Writes `src,dst,delta` rows.
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "src,dst,delta")?;
        for &(s, d) in &self.edges {
            let delta = angular_correlation(self.node_angles[s], self.node_angles[d]);
            writeln!(w, "{s},{d},{delta:.12}")?;
        }
        Ok(())
    }
}

pub fn build_graph<T: Scalar>(cb: &Codebook<T>) -> Result<BeamGraph<T>> {
    BeamGraph::from_angles(cb.angles(), DEFAULT_IN_DEGREE)
}
