use alloc::vec::Vec;

/// Number of sentence-like units for `n` tokens: `ceil((n - t_w + h) / h)`
/// for `n >= t_w`, one unit otherwise, capped at `max_units`.
pub fn unit_count(n: usize, t_w: usize, hop: usize, max_units: usize) -> usize {
    assert!(hop > 0 && hop <= t_w, "hop must lie in 1..=t_w");
    assert!(max_units >= 1);
    let raw = if n >= t_w {
        (n - t_w).div_ceil(hop) + 1
    } else {
        1
    };
    raw.min(max_units)
}

/// Cut `tokens` into windows of `t_w` tokens advancing by `hop`, so
/// consecutive windows share `t_w - hop` tokens. Only the last window is
/// padded; an empty input yields a single all-`pad` window.
pub fn sliding_window<T: Clone>(
    tokens: &[T],
    pad: T,
    t_w: usize,
    hop: usize,
    max_units: usize,
) -> Vec<Vec<T>> {
    let n_units = unit_count(tokens.len(), t_w, hop, max_units);
    (0..n_units)
        .map(|k| {
            let start = (k * hop).min(tokens.len());
            let end = (start + t_w).min(tokens.len());
            let mut unit = Vec::with_capacity(t_w);
            unit.extend_from_slice(&tokens[start..end]);
            unit.resize(t_w, pad.clone());
            unit
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seq(n: u32) -> Vec<u32> {
        (1..=n).collect()
    }

    #[test]
    fn default_settings() {
        assert_eq!(unit_count(30, 30, 26, 210), 1);
        assert_eq!(unit_count(82, 30, 26, 210), 3);
        assert_eq!(unit_count(83, 30, 26, 210), 4);
        assert_eq!(unit_count(100_000, 30, 26, 210), 210);
    }

    #[test]
    fn exact_fit_has_no_padding() {
        let units = sliding_window(&seq(82), 0, 30, 26, 210);
        assert_eq!(units.len(), 3);
        assert!(units.iter().all(|u| !u.contains(&0)));
        assert_eq!(units[1][0], 27);
        assert_eq!(units[2][29], 82);
    }

    #[test]
    fn overlap_is_t_w_minus_hop() {
        let units = sliding_window(&seq(120), 0, 30, 26, 210);
        for w in units.windows(2) {
            assert_eq!(&w[0][26..], &w[1][..4]);
        }
    }

    #[test]
    fn short_and_empty_inputs() {
        assert_eq!(
            sliding_window(&seq(5), 0, 8, 4, 10),
            vec![vec![1, 2, 3, 4, 5, 0, 0, 0]]
        );
        assert_eq!(sliding_window::<u32>(&[], 0, 4, 2, 10), vec![vec![0; 4]]);
    }

    #[test]
    fn only_last_unit_is_padded() {
        let units = sliding_window(&seq(83), 0, 30, 26, 210);
        assert_eq!(units.len(), 4);
        for u in &units[..3] {
            assert!(!u.contains(&0));
        }
        assert_eq!(units[3].iter().filter(|&&t| t != 0).count(), 5);
    }
}
