//! Nice-step binning in the style of Vega's `bin` transform.

use crate::value::format_number;

const EPSILON: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bins {
    pub start: f64,
    pub step: f64,
}

impl Bins {
    /// Step from {1, 2, 5} x 10^k so the extent spans at most `maxbins` bins.
    pub fn for_extent(min: f64, max: f64, maxbins: u32) -> Bins {
        let maxb = maxbins.max(1) as f64;
        let base = 10f64;
        let logb = base.ln();
        let span = if max - min != 0.0 {
            max - min
        } else if min != 0.0 {
            min.abs()
        } else {
            1.0
        };
        let level = (maxb.ln() / logb).ceil();
        let mut step = base.powf((span.ln() / logb).round() - level);
        while (span / step).ceil() > maxb {
            step *= base;
        }
        for div in [5.0, 2.0] {
            let v = step / div;
            if span / v <= maxb {
                step = v;
            }
        }
        let v = step.ln();
        let precision = if v >= 0.0 {
            0.0
        } else {
            (-v / logb).floor() + 1.0
        };
        let eps = base.powf(-precision - 1.0);
        let nice = (min / step + eps).floor() * step;
        let start = if min < nice { nice - step } else { nice };
        Bins { start, step }
    }

    pub fn index_of(&self, x: f64) -> i64 {
        (EPSILON + (x - self.start) / self.step).floor() as i64
    }

    pub fn bounds(&self, idx: i64) -> (f64, f64) {
        let lo = self.start + self.step * idx as f64;
        (lo, lo + self.step)
    }

    /// Half-open interval label, e.g. `[10, 20)`.
    pub fn label(&self, idx: i64) -> String {
        let (lo, hi) = self.bounds(idx);
        format!("[{}, {})", format_number(lo), format_number(hi))
    }
}

/// Parse a label produced by [`Bins::label`].
pub fn parse_label(s: &str) -> Option<(f64, f64)> {
    let inner = s.strip_prefix('[')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(", ")?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Bin every value; `None` stays `None`.
pub fn bin_values(values: &[Option<f64>], maxbins: u32) -> Vec<Option<String>> {
    let present = values.iter().flatten();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in present {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() {
        return vec![None; values.len()];
    }
    let bins = Bins::for_extent(min, max, maxbins);
    values
        .iter()
        .map(|v| v.map(|x| bins.label(bins.index_of(x))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_vega_reference_steps() {
        // Extents checked by hand against the nice-step rule.
        assert_eq!(
            Bins::for_extent(0.0, 100.0, 10),
            Bins {
                start: 0.0,
                step: 10.0
            }
        );
        assert_eq!(
            Bins::for_extent(3.0, 97.0, 10),
            Bins {
                start: 0.0,
                step: 10.0
            }
        );
        assert_eq!(
            Bins::for_extent(0.0, 1.0, 10),
            Bins {
                start: 0.0,
                step: 0.1
            }
        );
        assert_eq!(
            Bins::for_extent(0.0, 7.0, 10),
            Bins {
                start: 0.0,
                step: 1.0
            }
        );
        assert_eq!(
            Bins::for_extent(20.0, 55.0, 5),
            Bins {
                start: 20.0,
                step: 10.0
            }
        );
    }

    #[test]
    fn degenerate_extent_uses_magnitude() {
        let b = Bins::for_extent(5.0, 5.0, 10);
        let idx = b.index_of(5.0);
        let (lo, hi) = b.bounds(idx);
        assert!(lo <= 5.0 && 5.0 < hi);
    }

    #[test]
    fn labels_round_trip() {
        let b = Bins::for_extent(0.0, 1.0, 10);
        assert_eq!(b.label(3), "[0.3, 0.4)");
        assert_eq!(parse_label("[0.3, 0.4)"), Some((0.3, 0.4)));
    }

    proptest! {
        #[test]
        fn every_value_lands_in_exactly_one_bin(
            values in proptest::collection::vec(-1e6f64..1e6, 1..60),
            maxbins in 1u32..40,
        ) {
            let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let bins = Bins::for_extent(min, max, maxbins);
            let lo_idx = bins.index_of(min);
            let hi_idx = bins.index_of(max);
            for &v in &values {
                let containing: Vec<i64> = (lo_idx..=hi_idx)
                    .filter(|&i| {
                        let (lo, hi) = bins.bounds(i);
                        let slack = 1e-9 * bins.step;
                        v >= lo - slack && v < hi - slack
                    })
                    .collect();
                prop_assert_eq!(containing, vec![bins.index_of(v)]);
            }
            prop_assert!(hi_idx - lo_idx <= maxbins as i64);
        }
    }
}
