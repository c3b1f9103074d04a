//! Greedy one-to-one alignment under a similarity threshold.

use super::similarity::{Similarity, SimilarityError};

/// Greedy matching on a precomputed similarity matrix.
///
/// Pairs with similarity `>= tau` are taken in descending similarity order
/// (ties: lower row index, then lower column index) whenever both sides are
/// still free. Returned pairs are in selection order.
pub fn greedy_align_matrix(matrix: &[Vec<f64>], tau: f64) -> Vec<(usize, usize)> {
    let mut pairs = ranked_pairs(matrix);
    pairs.retain(|&(s, _, _)| s >= tau);
    select(&pairs, matrix.len(), matrix.first().map_or(0, Vec::len))
}

/// All (similarity, row, col) triples sorted in greedy order.
pub fn ranked_pairs(matrix: &[Vec<f64>]) -> Vec<(f64, usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = matrix
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &s)| (s, i, j)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs
}

fn select(pairs: &[(f64, usize, usize)], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut out = Vec::new();
    for &(_, i, j) in pairs {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Number of greedy matches at each threshold of an increasing `taus` list,
/// computed with one sort. Equivalent to calling [`greedy_align_matrix`] per
/// threshold, because a higher threshold processes a prefix of the same
/// ranked pair list.
pub fn greedy_match_counts(matrix: &[Vec<f64>], taus: &[f64]) -> Vec<usize> {
    let pairs = ranked_pairs(matrix);
    taus.iter()
        .map(|&tau| {
            let cut = pairs.partition_point(|&(s, _, _)| s >= tau);
            select(
                &pairs[..cut],
                matrix.len(),
                matrix.first().map_or(0, Vec::len),
            )
            .len()
        })
        .collect()
}

pub fn greedy_align(
    pred_items: &[String],
    gold_items: &[String],
    provider: &dyn Similarity,
    tau: f64,
) -> Result<Vec<(usize, usize)>, SimilarityError> {
    let matrix = provider.matrix(pred_items, gold_items)?;
    Ok(greedy_align_matrix(&matrix, tau))
}
