use rand::Rng;

use super::{Family, Graph, GraphBuilder, GraphError};

/// `dim`-dimensional torus with `side` nodes per axis.
///
/// Node ids are mixed-radix coordinates: id = Σ x_i · side^i.
pub fn build_grid_torus(side: usize, dim: usize) -> Result<Graph, GraphError> {
    if side < 3 {
        return Err(GraphError::InvalidParameter(format!(
            "torus side must be at least 3, got {side}"
        )));
    }
    if dim == 0 {
        return Err(GraphError::InvalidParameter("dimension must be at least 1".into()));
    }
    let n = u32::try_from(dim)
        .ok()
        .and_then(|d| side.checked_pow(d))
        .filter(|&n| n.checked_mul(2 * dim).is_some())
        .ok_or_else(|| GraphError::Overflow(format!("{side}^{dim}")))?;

    let mut builder = GraphBuilder::with_capacity(n, n * dim);
    for v in 0..n {
        let mut stride = 1;
        for _ in 0..dim {
            let x = (v / stride) % side;
            let up = if x + 1 == side { v + stride - side * stride } else { v + stride };
            builder.add_edge(v, up)?;
            stride *= side;
        }
    }
    Ok(builder.build().0.with_family(Family::Grid { side, dim }))
}

/// G(n, p): every unordered pair is joined independently with probability
/// `p`.
///
/// Uses geometric skipping over the pair sequence, so the cost is
/// O(n + edges) rather than O(n²).
pub fn build_er<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph, GraphError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "edge probability must lie in (0, 1), got {p}"
        )));
    }
    let expected = (n as f64) * (n as f64 - 1.0) / 2.0 * p;
    let mut builder = GraphBuilder::with_capacity(n, expected.ceil() as usize);
    let log_q = (1.0 - p).ln();

    // Pairs (v, w) with w < v, enumerated row by row.
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        // A skip past the remaining pairs simply ends the loop.
        if skip >= (usize::MAX / 4) as f64 {
            break;
        }
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            builder.add_edge(v, w as usize)?;
        }
    }
    Ok(builder.build().0.with_family(Family::ErdosRenyi { n, p }))
}

/// Complete `branching`-ary tree with `depth` levels below the root. Nodes are
/// numbered in level order, so node 0 is the root and the children of `v` are
/// `branching·v + 1 ..= branching·v + branching`.
pub fn build_balanced_tree(branching: usize, depth: usize) -> Result<Graph, GraphError> {
    if branching < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "branching ratio must be at least 2, got {branching}"
        )));
    }
    let overflow = || GraphError::Overflow(format!("tree branching={branching} depth={depth}"));
    let mut n: usize = 0;
    let mut level: usize = 1;
    for d in 0..=depth {
        n = n.checked_add(level).ok_or_else(overflow)?;
        if d < depth {
            level = level.checked_mul(branching).ok_or_else(overflow)?;
        }
    }
    let internal = n - level;
    let mut builder = GraphBuilder::with_capacity(n, n.saturating_sub(1));
    for v in 0..internal {
        for k in 1..=branching {
            builder.add_edge(v, branching * v + k)?;
        }
    }
    Ok(builder
        .build()
        .0
        .with_family(Family::BalancedTree { branching, depth }))
}
