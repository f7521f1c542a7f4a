use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::trace::FileId;

/// Files `0..values.len()` ordered best first: higher value, then earlier
/// release slot, then lower id.
pub fn rank_files(values: &[f64], release: &[usize]) -> Vec<FileId> {
    let mut ids: Vec<FileId> = (0..values.len() as u32).map(FileId).collect();
    ids.sort_unstable_by(|a, b| compare(values, release, *a, *b));
    ids
}

#[inline]
fn compare(values: &[f64], release: &[usize], a: FileId, b: FileId) -> Ordering {
    let (ia, ib) = (a.index(), b.index());
    values[ib]
        .total_cmp(&values[ia])
        .then(release[ia].cmp(&release[ib]))
        .then(a.cmp(&b))
}

/// The `m` best files under [`rank_files`] order.
pub fn top_m(values: &[f64], release: &[usize], m: usize) -> BTreeSet<FileId> {
    let mut ids: Vec<FileId> = (0..values.len() as u32).map(FileId).collect();
    if m < ids.len() {
        ids.select_nth_unstable_by(m, |a, b| compare(values, release, *a, *b));
        ids.truncate(m);
    }
    ids.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_prefer_earlier_release_then_lower_id() {
        let values = [2.0, 9.0, 9.0, 9.0];
        let release = [0, 3, 1, 1];
        let r = rank_files(&values, &release);
        assert_eq!(r, vec![FileId(2), FileId(3), FileId(1), FileId(0)]);
        assert_eq!(top_m(&values, &release, 1), [FileId(2)].into());
    }

    #[test]
    fn top_m_matches_ranking_prefix() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let release: Vec<usize> = (0..50).map(|i| i / 7).collect();
        for m in [0, 1, 5, 49, 50, 80] {
            let prefix: BTreeSet<_> = rank_files(&values, &release).into_iter().take(m).collect();
            assert_eq!(top_m(&values, &release, m), prefix);
        }
    }
}
