use serde::{Deserialize, Serialize};

use super::MetricsError;

/// The read/write trace of one simultaneous decode: `g[t - 1]` source tokens
/// had been read when target token `t` was written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ReadWriteSchedule {
    g: Vec<usize>,
    src_len: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    g: Vec<usize>,
    src_len: usize,
    tgt_len: usize,
}

impl TryFrom<RawSchedule> for ReadWriteSchedule {
    type Error = MetricsError;

    fn try_from(raw: RawSchedule) -> Result<Self, Self::Error> {
        if raw.g.len() != raw.tgt_len {
            return Err(MetricsError::InvalidSchedule(format!(
                "tgt_len {} but {} steps",
                raw.tgt_len,
                raw.g.len()
            )));
        }
        ReadWriteSchedule::new(raw.g, raw.src_len)
    }
}

impl From<ReadWriteSchedule> for RawSchedule {
    fn from(s: ReadWriteSchedule) -> Self {
        RawSchedule {
            tgt_len: s.g.len(),
            g: s.g,
            src_len: s.src_len,
        }
    }
}

impl ReadWriteSchedule {
    /// Validates that `g` is non-decreasing and within `1..=src_len`.
    /// An empty `g` is allowed and describes an empty hypothesis.
    pub fn new(g: Vec<usize>, src_len: usize) -> Result<Self, MetricsError> {
        if src_len == 0 {
            return Err(MetricsError::InvalidSchedule("empty source".into()));
        }
        if let Some(t) = g.iter().position(|&v| v == 0 || v > src_len) {
            return Err(MetricsError::InvalidSchedule(format!(
                "g({}) = {} outside 1..={src_len}",
                t + 1,
                g[t]
            )));
        }
        if let Some(t) = g.windows(2).position(|w| w[1] < w[0]) {
            return Err(MetricsError::InvalidSchedule(format!(
                "g decreases at t = {}",
                t + 2
            )));
        }
        Ok(ReadWriteSchedule { g, src_len })
    }

    /// `g(t) = min(t + k - 1, |x|)`.
    pub fn wait_k(k: usize, src_len: usize, tgt_len: usize) -> Result<Self, MetricsError> {
        if k == 0 {
            return Err(MetricsError::InvalidSchedule("k must be at least 1".into()));
        }
        ReadWriteSchedule::new(
            (1..=tgt_len).map(|t| (t + k - 1).min(src_len)).collect(),
            src_len,
        )
    }

    /// Full-sentence decoding: everything is read before the first write.
    pub fn offline(src_len: usize, tgt_len: usize) -> Result<Self, MetricsError> {
        ReadWriteSchedule::new(vec![src_len; tgt_len], src_len)
    }

    pub fn g(&self) -> &[usize] {
        &self.g
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.g.len()
    }
}

/// `AP = sum_t g(t) / (|x| |y|)`.
pub fn average_proportion(schedule: &ReadWriteSchedule) -> Result<f64, MetricsError> {
    if schedule.g.is_empty() {
        return Err(MetricsError::EmptyHypothesis);
    }
    let sum: usize = schedule.g.iter().sum();
    Ok(sum as f64 / (schedule.src_len as f64 * schedule.tgt_len() as f64))
}

/// `AL = (1/tau) sum_{t <= tau} [g(t) - (t - 1) / gamma]` with
/// `gamma = |y| / |x|` and `tau` the first step at which the whole source
/// has been read, or `|y|` if that never happens.
pub fn average_lagging(schedule: &ReadWriteSchedule) -> Result<f64, MetricsError> {
    if schedule.g.is_empty() {
        return Err(MetricsError::EmptyHypothesis);
    }
    let src = schedule.src_len as f64;
    let gamma = schedule.tgt_len() as f64 / src;
    let tau = schedule
        .g
        .iter()
        .position(|&v| v == schedule.src_len)
        .map_or(schedule.tgt_len(), |i| i + 1);
    let lag: f64 = schedule.g[..tau]
        .iter()
        .enumerate()
        .map(|(i, &v)| v as f64 - i as f64 / gamma)
        .sum();
    Ok(lag / tau as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub ap: f64,
    pub al: f64,
    /// Schedules that entered the averages.
    pub n_sentences: usize,
}

/// Unweighted mean of per-sentence AP and AL. Empty hypotheses have no
/// latency and are skipped.
pub fn corpus_latency(schedules: &[ReadWriteSchedule]) -> LatencySummary {
    let scored: Vec<(f64, f64)> = schedules
        .iter()
        .filter(|s| s.tgt_len() > 0)
        .map(|s| {
            (
                average_proportion(s).expect("nonempty"),
                average_lagging(s).expect("nonempty"),
            )
        })
        .collect();
    let n = scored.len();
    if n == 0 {
        return LatencySummary {
            ap: 0.0,
            al: 0.0,
            n_sentences: 0,
        };
    }
    LatencySummary {
        ap: scored.iter().map(|x| x.0).sum::<f64>() / n as f64,
        al: scored.iter().map(|x| x.1).sum::<f64>() / n as f64,
        n_sentences: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wait3_closed_form() {
        let s = ReadWriteSchedule::wait_k(3, 10, 10).unwrap();
        assert_eq!(s.g(), [3, 4, 5, 6, 7, 8, 9, 10, 10, 10]);
        assert!((average_proportion(&s).unwrap() - 0.72).abs() < 1e-12);
        assert!((average_lagging(&s).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn offline_schedule() {
        let s = ReadWriteSchedule::offline(7, 5).unwrap();
        assert_eq!(average_proportion(&s).unwrap(), 1.0);
        assert_eq!(average_lagging(&s).unwrap(), 7.0);
    }

    #[test]
    fn ideal_waitk_lags_by_k() {
        for k in 1..=9 {
            let s = ReadWriteSchedule::wait_k(k, 10, 10).unwrap();
            assert!(
                (average_lagging(&s).unwrap() - k as f64).abs() < 1e-12,
                "k={k}"
            );
        }
    }

    #[test]
    fn tau_fallback() {
        // never reads the whole source: tau = |y| = 3, gamma = 3/5
        let s = ReadWriteSchedule::new(vec![1, 2, 3], 5).unwrap();
        let expected = ((1.0 - 0.0) + (2.0 - 5.0 / 3.0) + (3.0 - 10.0 / 3.0)) / 3.0;
        assert!((average_lagging(&s).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_schedules() {
        assert!(ReadWriteSchedule::new(vec![2, 1], 3).is_err());
        assert!(ReadWriteSchedule::new(vec![0], 3).is_err());
        assert!(ReadWriteSchedule::new(vec![4], 3).is_err());
        assert!(ReadWriteSchedule::new(vec![], 0).is_err());
        let empty = ReadWriteSchedule::new(vec![], 3).unwrap();
        assert_eq!(
            average_proportion(&empty).unwrap_err().to_string(),
            "empty hypothesis"
        );
        assert!(average_lagging(&empty).is_err());
    }

    #[test]
    fn json_shape() {
        let s = ReadWriteSchedule::wait_k(2, 3, 4).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"g":[2,3,3,3],"src_len":3,"tgt_len":4}"#);
        assert_eq!(serde_json::from_str::<ReadWriteSchedule>(&json).unwrap(), s);
        assert!(
            serde_json::from_str::<ReadWriteSchedule>(r#"{"g":[2],"src_len":3,"tgt_len":4}"#)
                .is_err()
        );
    }

    #[test]
    fn corpus_mean() {
        let a = ReadWriteSchedule::wait_k(3, 10, 10).unwrap();
        let b = ReadWriteSchedule::offline(10, 10).unwrap();
        let empty = ReadWriteSchedule::new(vec![], 4).unwrap();
        let summary = corpus_latency(&[a, b, empty]);
        assert_eq!(summary.n_sentences, 2);
        assert!((summary.ap - 0.86).abs() < 1e-12);
        assert!((summary.al - 6.5).abs() < 1e-12);
    }

    fn arb_schedule() -> impl Strategy<Value = ReadWriteSchedule> {
        (1usize..15, prop::collection::vec(0usize..4, 1..20)).prop_map(|(src, steps)| {
            let mut g = Vec::new();
            let mut cur = 1;
            for s in steps {
                cur = (cur + s).min(src);
                g.push(cur);
            }
            ReadWriteSchedule::new(g, src).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ap_in_unit_interval(s in arb_schedule()) {
            let ap = average_proportion(&s).unwrap();
            prop_assert!(ap > 0.0 && ap <= 1.0);
            prop_assert!(average_lagging(&s).unwrap().is_finite());
        }

        #[test]
        fn ap_monotone(s in arb_schedule(), t in 0usize..20) {
            let t = t % s.tgt_len();
            let mut g = s.g().to_vec();
            if g[t] < s.src_len() {
                for v in g.iter_mut().skip(t) {
                    if *v == s.g()[t] {
                        *v += 1;
                    }
                }
                let bumped = ReadWriteSchedule::new(g, s.src_len()).unwrap();
                prop_assert!(average_proportion(&bumped).unwrap() >= average_proportion(&s).unwrap());
            }
        }
    }
}
