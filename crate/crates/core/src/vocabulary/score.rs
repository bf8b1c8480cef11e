//! Approximate matching between column labels and human terms.

pub const EXACT_SCORE: f64 = 1.0;
pub const PREFIX_SCORE: f64 = 0.9;
pub const SUBSEQUENCE_SCORE: f64 = 0.8;
pub const EDIT_DISTANCE_CAP: f64 = 0.7;

/// Lowercases and strips every non-alphanumeric character.
pub fn normalize(text: &str) -> String {
    text.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Similarity of an abbreviated `label` to a candidate `term`, in `[0, 1]`.
///
/// Rules are tried in order on the normalized strings: equality, prefix,
/// anchored subsequence, then a capped Levenshtein similarity.
pub fn score_match(label: &str, term: &str) -> f64 {
    let label: Vec<char> = normalize(label).chars().collect();
    let term: Vec<char> = normalize(term).chars().collect();
    if label.is_empty() || term.is_empty() {
        return 0.0;
    }
    if label == term {
        return EXACT_SCORE;
    }
    if term.starts_with(&label) {
        return PREFIX_SCORE;
    }
    if is_anchored_subsequence(&label, &term) {
        return SUBSEQUENCE_SCORE;
    }
    let longest = label.len().max(term.len()) as f64;
    let similarity = 1.0 - levenshtein(&label, &term) as f64 / longest;
    similarity.clamp(0.0, EDIT_DISTANCE_CAP)
}

fn is_anchored_subsequence(label: &[char], term: &[char]) -> bool {
    if label.first() != term.first() {
        return false;
    }
    let mut rest = term.iter();
    label.iter().all(|c| rest.any(|t| t == c))
}

pub(crate) fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let subst = prev[j] + usize::from(ca != cb);
            cur[j + 1] = subst.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
