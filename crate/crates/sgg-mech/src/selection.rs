//! Interaction-guided query selection over visual tokens: combined
//! object/relation relevance scoring with Top-K, interaction-prioritized
//! two-stage selection, and the token-matrix file formats.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("data length {got} does not equal rows*dim = {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("token matrix contains a non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("k = {k} out of range 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("interaction token set is empty")]
    EmptyInteractionSet,
    #[error("{0:?} token set is empty")]
    EmptyTokenSet(TokenRole),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed token matrix file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("bad magic in binary token matrix file")]
    BadMagic,
    #[error("unknown token role '{0}'")]
    UnknownRole(String),
}

/// What a token matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenRole {
    Visual,
    ObjectClass,
    RelationClass,
    Interaction,
}

impl TokenRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenRole::Visual => "visual",
            TokenRole::ObjectClass => "object_class",
            TokenRole::RelationClass => "relation_class",
            TokenRole::Interaction => "interaction",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SelectionError> {
        match s {
            "visual" => Ok(TokenRole::Visual),
            "object_class" => Ok(TokenRole::ObjectClass),
            "relation_class" => Ok(TokenRole::RelationClass),
            "interaction" => Ok(TokenRole::Interaction),
            other => Err(SelectionError::UnknownRole(other.to_string())),
        }
    }
}

/// Dense row-major matrix of embeddings tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    role: TokenRole,
}

const BINARY_MAGIC: &[u8; 8] = b"TOKMAT01";

impl TokenMatrix {
    pub fn new(
        rows: usize,
        dim: usize,
        data: Vec<f64>,
        role: TokenRole,
    ) -> Result<Self, SelectionError> {
        if data.len() != rows * dim {
            return Err(SelectionError::BadShape {
                expected: rows * dim,
                got: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(SelectionError::NonFinite {
                row: if dim == 0 { 0 } else { bad / dim },
            });
        }
        Ok(Self {
            rows,
            dim,
            data,
            role,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], role: TokenRole) -> Result<Self, SelectionError> {
        let dim = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(SelectionError::DimMismatch {
                    expected: dim,
                    got: rows[i].len(),
                });
            }
        }
        Self::new(rows.len(), dim, rows.concat(), role)
    }

    /// Matrix with zero rows, used when no interaction prompts exist yet.
    pub fn empty(dim: usize, role: TokenRole) -> Self {
        Self {
            rows: 0,
            dim,
            data: Vec::new(),
            role,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> TokenRole {
        self.role
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Text format: header "rows dim role", then one line of
    /// space-separated reals per row.
    pub fn write_text(&self, out: &mut impl Write) -> Result<(), SelectionError> {
        writeln!(out, "{} {} {}", self.rows, self.dim, self.role.as_str())?;
        for row in self.iter_rows().take(self.rows) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text(input: &mut impl BufRead) -> Result<Self, SelectionError> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(SelectionError::Malformed {
                line: 1,
                reason: "header must be 'rows dim role'".to_string(),
            });
        }
        let rows: usize = parts[0].parse().map_err(|_| SelectionError::Malformed {
            line: 1,
            reason: "bad row count".to_string(),
        })?;
        let dim: usize = parts[1].parse().map_err(|_| SelectionError::Malformed {
            line: 1,
            reason: "bad dim".to_string(),
        })?;
        let role = TokenRole::parse(parts[2])?;
        let mut data = Vec::with_capacity(rows * dim);
        for i in 0..rows {
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Err(SelectionError::Malformed {
                    line: i + 2,
                    reason: "unexpected end of file".to_string(),
                });
            }
            for field in line.split_whitespace() {
                let v: f64 = field.parse().map_err(|_| SelectionError::Malformed {
                    line: i + 2,
                    reason: format!("bad real '{field}'"),
                })?;
                data.push(v);
            }
            if data.len() != (i + 1) * dim {
                return Err(SelectionError::Malformed {
                    line: i + 2,
                    reason: format!("expected {dim} values"),
                });
            }
        }
        Self::new(rows, dim, data, role)
    }

    /// Binary format: magic "TOKMAT01", rows and dim as u64 little-endian,
    /// then rows*dim IEEE-754 f32 little-endian values. The binary layout
    /// carries no role tag, so the caller supplies one.
    pub fn write_binary(&self, out: &mut impl Write) -> Result<(), SelectionError> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.rows as u64).to_le_bytes())?;
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(input: &mut impl Read, role: TokenRole) -> Result<Self, SelectionError> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(SelectionError::BadMagic);
        }
        let mut count = [0u8; 8];
        input.read_exact(&mut count)?;
        let rows = u64::from_le_bytes(count) as usize;
        input.read_exact(&mut count)?;
        let dim = u64::from_le_bytes(count) as usize;
        let mut data = Vec::with_capacity(rows * dim);
        let mut buf = [0u8; 4];
        for _ in 0..rows * dim {
            input.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf) as f64);
        }
        Self::new(rows, dim, data, role)
    }

    /// Read a matrix file, sniffing the binary magic and falling back to
    /// the text format.
    pub fn read_file(path: &Path, binary_role: TokenRole) -> Result<Self, SelectionError> {
        let bytes = std::fs::read(path)?;
        if bytes.len() >= 8 && &bytes[..8] == BINARY_MAGIC {
            Self::read_binary(&mut &bytes[..], binary_role)
        } else {
            Self::read_text(&mut BufReader::new(&bytes[..]))
        }
    }
}

/// Selected query indices; the first `interaction_count` entries came from
/// interaction ranking and the rest from object relevance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryIndexSet {
    pub indices: Vec<usize>,
    pub interaction_count: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_dims(visual: &TokenMatrix, other: &TokenMatrix) -> Result<(), SelectionError> {
    if visual.dim() != other.dim() {
        return Err(SelectionError::DimMismatch {
            expected: visual.dim(),
            got: other.dim(),
        });
    }
    Ok(())
}

/// Maximum dot product of `row` against every row of `tokens`.
fn max_similarity(row: &[f64], tokens: &TokenMatrix) -> f64 {
    tokens
        .iter_rows()
        .take(tokens.rows())
        .map(|t| dot(row, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Combined object/relation relevance per visual token:
/// `sigmoid(max object similarity)^gamma * sigmoid(max relation similarity)^(1-gamma)`.
///
/// Raw dot products may be negative, which a fractional power cannot
/// accept, so each maximum is squashed through the logistic function
/// first; the squash is monotone, so every Top-K outcome is unchanged.
pub fn relevance_scores(
    visual: &TokenMatrix,
    object_tokens: &TokenMatrix,
    relation_tokens: &TokenMatrix,
    gamma_balance: f64,
) -> Result<Vec<f64>, SelectionError> {
    check_dims(visual, object_tokens)?;
    check_dims(visual, relation_tokens)?;
    if object_tokens.is_empty() {
        return Err(SelectionError::EmptyTokenSet(TokenRole::ObjectClass));
    }
    if relation_tokens.is_empty() {
        return Err(SelectionError::EmptyTokenSet(TokenRole::RelationClass));
    }
    Ok(visual
        .iter_rows()
        .take(visual.rows())
        .map(|row| {
            let object_part = sigmoid(max_similarity(row, object_tokens));
            let relation_part = sigmoid(max_similarity(row, relation_tokens));
            object_part.powf(gamma_balance) * relation_part.powf(1.0 - gamma_balance)
        })
        .collect())
}

/// Indices of the `k` largest scores, ordered by descending score with
/// ties broken by ascending index.
pub fn top_k(scores: &[f64], k: usize) -> Result<Vec<usize>, SelectionError> {
    if k == 0 || k > scores.len() {
        return Err(SelectionError::KOutOfRange {
            k,
            len: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// Maximum raw similarity of each visual token against the interaction
/// tokens. No squash here: no fractional power follows.
pub fn interaction_scores(
    visual: &TokenMatrix,
    interaction_tokens: &TokenMatrix,
) -> Result<Vec<f64>, SelectionError> {
    check_dims(visual, interaction_tokens)?;
    if interaction_tokens.is_empty() {
        return Err(SelectionError::EmptyInteractionSet);
    }
    Ok(visual
        .iter_rows()
        .take(visual.rows())
        .map(|row| max_similarity(row, interaction_tokens))
        .collect())
}

/// Two-stage query selection: an interaction-ranked prefix of `l` indices,
/// then the top `k - l` of the remaining tokens by object relevance. When
/// no interaction tokens exist (no first-pass triplets yet) the whole
/// selection falls back to combined relevance scoring.
pub fn select_queries(
    visual: &TokenMatrix,
    interaction_tokens: &TokenMatrix,
    object_tokens: &TokenMatrix,
    k: usize,
    l: usize,
    gamma_balance: f64,
    relation_tokens: &TokenMatrix,
) -> Result<QueryIndexSet, SelectionError> {
    let n = visual.rows();
    if k == 0 || k > n {
        return Err(SelectionError::KOutOfRange { k, len: n });
    }
    if l > k {
        return Err(SelectionError::KOutOfRange { k: l, len: k });
    }

    if interaction_tokens.is_empty() {
        let scores = relevance_scores(visual, object_tokens, relation_tokens, gamma_balance)?;
        return Ok(QueryIndexSet {
            indices: top_k(&scores, k)?,
            interaction_count: 0,
        });
    }

    check_dims(visual, object_tokens)?;
    if object_tokens.is_empty() {
        return Err(SelectionError::EmptyTokenSet(TokenRole::ObjectClass));
    }

    let prefix = if l == 0 {
        Vec::new()
    } else {
        top_k(&interaction_scores(visual, interaction_tokens)?, l)?
    };

    let mut chosen = vec![false; n];
    for &i in &prefix {
        chosen[i] = true;
    }

    // Object relevance over the tokens not already selected.
    let mut remainder: Vec<(usize, f64)> = (0..n)
        .filter(|&i| !chosen[i])
        .map(|i| (i, max_similarity(visual.row(i), object_tokens)))
        .collect();
    remainder.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut indices = prefix;
    indices.extend(remainder.iter().take(k - indices.len()).map(|(i, _)| *i));
    Ok(QueryIndexSet {
        interaction_count: l,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn matrix(rows: &[&[f64]], role: TokenRole) -> TokenMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        TokenMatrix::from_rows(&rows, role).unwrap()
    }

    #[test]
    fn relevance_score_reference_value() {
        let visual = matrix(&[&[1.0, 0.0]], TokenRole::Visual);
        let objects = matrix(&[&[1.0, 0.0], &[0.0, 1.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.5, 0.0]], TokenRole::RelationClass);
        let scores = relevance_scores(&visual, &objects, &relations, 0.5).unwrap();
        // sqrt(sigmoid(1) * sigmoid(0.5)), evaluated by hand
        assert!((scores[0] - 0.6745770778224022).abs() < 1e-12);
    }

    #[test]
    fn relevance_gamma_one_collapses_to_object_part() {
        let visual = matrix(&[&[1.0, 0.0], &[0.0, 1.0]], TokenRole::Visual);
        let objects = matrix(&[&[2.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.0, 3.0]], TokenRole::RelationClass);
        let scores = relevance_scores(&visual, &objects, &relations, 1.0).unwrap();
        assert_eq!(scores[0], sigmoid(2.0));
        assert_eq!(scores[1], sigmoid(0.0));
    }

    #[test]
    fn relevance_orthogonal_row_scores_half() {
        let visual = matrix(&[&[0.0, 0.0, 1.0]], TokenRole::Visual);
        let objects = matrix(&[&[1.0, 0.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.0, 1.0, 0.0]], TokenRole::RelationClass);
        for gamma in [0.0, 0.3, 0.5, 1.0] {
            let scores = relevance_scores(&visual, &objects, &relations, gamma).unwrap();
            assert!((scores[0] - 0.5).abs() < 1e-15, "gamma={gamma}");
        }
    }

    #[test]
    fn relevance_rejects_dim_mismatch() {
        let visual = matrix(&[&[1.0, 0.0]], TokenRole::Visual);
        let objects = matrix(&[&[1.0, 0.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.5, 0.0]], TokenRole::RelationClass);
        assert!(matches!(
            relevance_scores(&visual, &objects, &relations, 0.5),
            Err(SelectionError::DimMismatch { .. })
        ));
    }

    #[test]
    fn top_k_full_length_sorts_by_score() {
        let got = top_k(&[0.2, 0.8, 0.5], 3).unwrap();
        assert_eq!(got, vec![1, 2, 0]);
    }

    #[test]
    fn top_k_tie_breaks_by_ascending_index() {
        let got = top_k(&[0.1, 0.9, 0.9, 0.2], 2).unwrap();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn top_k_singleton() {
        assert_eq!(top_k(&[5.0], 1).unwrap(), vec![0]);
    }

    #[test]
    fn top_k_out_of_range() {
        assert!(matches!(
            top_k(&[1.0], 2),
            Err(SelectionError::KOutOfRange { .. })
        ));
        assert!(matches!(
            top_k(&[1.0], 0),
            Err(SelectionError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn interaction_scores_basics() {
        let visual = matrix(&[&[1.0, 0.0], &[0.0, 0.0]], TokenRole::Visual);
        let interactions = matrix(&[&[0.0, 1.0], &[0.4, 0.0]], TokenRole::Interaction);
        let scores = interaction_scores(&visual, &interactions).unwrap();
        assert_eq!(scores[0], 0.4);
        assert_eq!(scores[1], 0.0);

        let self_sim = matrix(&[&[1.0, 0.0]], TokenRole::Interaction);
        assert_eq!(interaction_scores(&visual, &self_sim).unwrap()[0], 1.0);
    }

    #[test]
    fn interaction_scores_empty_set_is_an_error() {
        let visual = matrix(&[&[1.0, 0.0]], TokenRole::Visual);
        let empty = TokenMatrix::empty(2, TokenRole::Interaction);
        assert!(matches!(
            interaction_scores(&visual, &empty),
            Err(SelectionError::EmptyInteractionSet)
        ));
    }

    #[test]
    fn select_prefix_prioritizes_interaction_alignment() {
        // row 2 uniquely maximizes interaction score
        let visual = matrix(
            &[
                &[1.0, 0.0, 0.0],
                &[0.9, 0.1, 0.0],
                &[0.0, 0.0, 1.0],
                &[0.8, 0.0, 0.1],
            ],
            TokenRole::Visual,
        );
        let interactions = matrix(&[&[0.0, 0.0, 1.0]], TokenRole::Interaction);
        let objects = matrix(&[&[1.0, 0.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.0, 1.0, 0.0]], TokenRole::RelationClass);
        let set = select_queries(&visual, &interactions, &objects, 3, 1, 0.5, &relations).unwrap();
        assert_eq!(set.indices[0], 2);
        assert_eq!(set.interaction_count, 1);
        assert_eq!(set.indices, vec![2, 0, 1]);
    }

    #[test]
    fn select_degenerate_l() {
        let visual = matrix(
            &[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]],
            TokenRole::Visual,
        );
        let interactions = matrix(&[&[0.0, 1.0]], TokenRole::Interaction);
        let objects = matrix(&[&[1.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.0, 1.0]], TokenRole::RelationClass);

        // l = 0: pure object relevance
        let set = select_queries(&visual, &interactions, &objects, 2, 0, 0.5, &relations).unwrap();
        assert_eq!(set.interaction_count, 0);
        assert_eq!(set.indices, vec![0, 2]);

        // l = k: pure interaction relevance
        let set = select_queries(&visual, &interactions, &objects, 2, 2, 0.5, &relations).unwrap();
        assert_eq!(set.interaction_count, 2);
        assert_eq!(set.indices, vec![1, 2]);
    }

    #[test]
    fn select_falls_back_without_interaction_tokens() {
        let visual = matrix(&[&[1.0, 0.0], &[0.0, 1.0]], TokenRole::Visual);
        let empty = TokenMatrix::empty(2, TokenRole::Interaction);
        let objects = matrix(&[&[1.0, 0.0]], TokenRole::ObjectClass);
        let relations = matrix(&[&[0.0, 1.0]], TokenRole::RelationClass);
        let set = select_queries(&visual, &empty, &objects, 2, 1, 1.0, &relations).unwrap();
        assert_eq!(set.interaction_count, 0);
        assert_eq!(set.indices, vec![0, 1]);
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let m = matrix(
            &[&[0.125, -3.5, 1e-9], &[7.0, 0.0, -0.333333333333333]],
            TokenRole::ObjectClass,
        );
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = TokenMatrix::read_text(&mut BufReader::new(&buf[..])).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn binary_round_trip_preserves_f32_values() {
        let m = matrix(&[&[0.5, -1.25], &[3.0, 0.0]], TokenRole::Visual);
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        let back = TokenMatrix::read_binary(&mut &buf[..], TokenRole::Visual).unwrap();
        assert_eq!(m, back);
        assert_eq!(&buf[..8], b"TOKMAT01");
    }

    #[test]
    fn binary_bad_magic() {
        let buf = b"NOTMAGIC\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0".to_vec();
        assert!(matches!(
            TokenMatrix::read_binary(&mut &buf[..], TokenRole::Visual),
            Err(SelectionError::BadMagic)
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            TokenMatrix::new(1, 2, vec![1.0, f64::NAN], TokenRole::Visual),
            Err(SelectionError::NonFinite { .. })
        ));
    }

    fn random_matrix(rng: &mut ChaCha12Rng, rows: usize, dim: usize, role: TokenRole) -> TokenMatrix {
        let data: Vec<f64> = (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        TokenMatrix::new(rows, dim, data, role).unwrap()
    }

    #[test]
    fn select_exclusion_property_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..20);
            let dim = rng.random_range(1..6);
            let visual = random_matrix(&mut rng, n, dim, TokenRole::Visual);
            let interaction_rows = rng.random_range(1..4);
            let interactions = random_matrix(&mut rng, interaction_rows, dim, TokenRole::Interaction);
            let object_rows = rng.random_range(1..4);
            let objects = random_matrix(&mut rng, object_rows, dim, TokenRole::ObjectClass);
            let relations = random_matrix(&mut rng, 2, dim, TokenRole::RelationClass);
            let k = rng.random_range(1..=n);
            let l = rng.random_range(0..=k);
            let set =
                select_queries(&visual, &interactions, &objects, k, l, 0.5, &relations).unwrap();
            assert_eq!(set.indices.len(), k);
            let mut seen = std::collections::HashSet::new();
            assert!(set.indices.iter().all(|i| seen.insert(*i)), "indices distinct");
            assert_eq!(set.interaction_count, l);
        }
    }

    proptest! {
        #[test]
        fn top_k_matches_full_sort_oracle(scores in proptest::collection::vec(-100.0..100.0f64, 1..40), k_frac in 0.0..1.0f64) {
            let k = 1 + ((scores.len() - 1) as f64 * k_frac) as usize;
            let got = top_k(&scores, k).unwrap();
            let mut oracle: Vec<usize> = (0..scores.len()).collect();
            oracle.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| a.cmp(&b)));
            prop_assert_eq!(got, &oracle[..k]);
        }

        #[test]
        fn interaction_ranking_is_scale_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 3), 2..8),
            scale in 0.1..10.0f64,
        ) {
            let visual = TokenMatrix::from_rows(&rows, TokenRole::Visual).unwrap();
            let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
            let scaled = TokenMatrix::from_rows(&scaled_rows, TokenRole::Visual).unwrap();
            let tokens = matrix(&[&[0.3, -0.7, 0.2], &[0.9, 0.1, 0.0]], TokenRole::Interaction);
            let a = interaction_scores(&visual, &tokens).unwrap();
            let b = interaction_scores(&scaled, &tokens).unwrap();
            let rank_a = top_k(&a, a.len()).unwrap();
            let rank_b = top_k(&b, b.len()).unwrap();
            prop_assert_eq!(rank_a, rank_b);
        }
    }

    #[test]
    fn gamma_extremes_preserve_single_family_rankings() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..15);
            let dim = 4;
            let visual = random_matrix(&mut rng, n, dim, TokenRole::Visual);
            let objects = random_matrix(&mut rng, 3, dim, TokenRole::ObjectClass);
            let relations = random_matrix(&mut rng, 3, dim, TokenRole::RelationClass);

            let object_only: Vec<f64> = (0..n)
                .map(|i| max_similarity(visual.row(i), &objects))
                .collect();
            let relation_only: Vec<f64> = (0..n)
                .map(|i| max_similarity(visual.row(i), &relations))
                .collect();

            let s1 = relevance_scores(&visual, &objects, &relations, 1.0).unwrap();
            let s0 = relevance_scores(&visual, &objects, &relations, 0.0).unwrap();
            assert_eq!(top_k(&s1, n).unwrap(), top_k(&object_only, n).unwrap());
            assert_eq!(top_k(&s0, n).unwrap(), top_k(&relation_only, n).unwrap());
        }
    }
}
