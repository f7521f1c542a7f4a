use serde::{Deserialize, Serialize};

use crate::cache::SlotAccounting;
use crate::error::{Error, Result};

/// Hit ratio over slots `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPoint {
    pub start: usize,
    pub end: usize,
    /// `None` when the window saw no requests.
    pub ratio: Option<f64>,
    /// The window is shorter than requested (end of trace).
    pub partial: bool,
}

/// Hit ratio over consecutive non-overlapping windows of `window` slots.
pub fn windowed_hit_ratio(per_slot: &[SlotAccounting], window: usize) -> Result<Vec<WindowPoint>> {
    if window == 0 || window > per_slot.len() {
        return Err(Error::Range(format!("window {window} for a run of {} slots", per_slot.len())));
    }
    Ok(per_slot
        .chunks(window)
        .enumerate()
        .map(|(i, chunk)| {
            let hits: u64 = chunk.iter().map(|a| a.hits).sum();
            let requests: u64 = chunk.iter().map(|a| a.requests).sum();
            WindowPoint {
                start: i * window,
                end: i * window + chunk.len(),
                ratio: (requests > 0).then(|| hits as f64 / requests as f64),
                partial: chunk.len() < window,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn acc(hits: u64, requests: u64) -> SlotAccounting {
        SlotAccounting { slot: 0, hits, cost: 0, reward: 0.0, requests }
    }

    #[test]
    fn whole_run_window() {
        let s = [acc(1, 4), acc(3, 4), acc(0, 2)];
        let w = windowed_hit_ratio(&s, 3).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].ratio, Some(0.4));
        assert!(!w[0].partial);
    }

    #[test]
    fn constant_ratio_everywhere() {
        let s = vec![acc(3, 4); 10];
        assert!(windowed_hit_ratio(&s, 3).unwrap().iter().all(|p| p.ratio == Some(0.75)));
    }

    #[test]
    fn undefined_and_partial() {
        let s = [acc(0, 0), acc(0, 0), acc(1, 2)];
        let w = windowed_hit_ratio(&s, 2).unwrap();
        assert_eq!(w[0].ratio, None);
        assert_eq!((w[1].start, w[1].end, w[1].partial), (2, 3, true));
        assert!(windowed_hit_ratio(&s, 4).is_err());
        assert!(windowed_hit_ratio(&s, 0).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            raw in prop::collection::vec((0u64..50, 0u64..50), 1..80),
            window in 1usize..20,
        ) {
            let s: Vec<_> = raw.iter().map(|&(a, b)| acc(a.min(b), b)).collect();
            prop_assume!(window <= s.len());
            for p in windowed_hit_ratio(&s, window).unwrap() {
                let slice = &s[p.start..p.end];
                let h: u64 = slice.iter().map(|a| a.hits).sum();
                let n: u64 = slice.iter().map(|a| a.requests).sum();
                prop_assert_eq!(p.ratio, if n == 0 { None } else { Some(h as f64 / n as f64) });
            }
        }
    }
}
