use crate::corpus::Span;
use crate::similarity::SimilarityError;

use super::AlignError;

/// Largest number of candidate partitions the brute-force search accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Optimal prefix scores and backpointers of the segmentation DP.
///
/// `scores[k][e]` is the best total for splitting the first `e` utterances
/// into `k + 1` chunks, and `back[k][e]` is the zero-based start of the last
/// of those chunks. Cells that admit no partition hold `-inf` and `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationTable {
    pub scores: Vec<Vec<f64>>,
    pub back: Vec<Vec<Option<usize>>>,
}

impl SegmentationTable {
    pub fn k(&self) -> usize {
        self.scores.len()
    }

    pub fn n(&self) -> usize {
        self.scores.first().map_or(0, |row| row.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub spans: Vec<Span>,
    pub total_score: f64,
    pub per_span_scores: Vec<f64>,
}

impl Segmentation {
    /// Chunk start positions after the first, in order.
    pub fn boundaries(&self) -> Vec<usize> {
        self.spans.iter().skip(1).map(|s| s.start).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SegmentationOutcome {
    pub table: SegmentationTable,
    pub segmentation: Segmentation,
    /// Number of calls made to the chunk scoring function.
    pub evaluations: usize,
}

fn check_shape(k: usize, n: usize) -> Result<(), AlignError> {
    if k == 0 || n == 0 {
        return Err(AlignError::EmptyProblem);
    }
    if k > n {
        return Err(AlignError::TooManySegments { k, n });
    }
    Ok(())
}

/// Upper bound on scoring calls for `k` references and `n` utterances.
pub fn evaluation_bound(k: usize, n: usize) -> usize {
    k * n * (n + 1) / 2
}

/// Exact number of scoring calls the DP makes for `k` references and `n`
/// utterances without forced boundaries: the first row scores every prefix
/// and row `r` scores every chunk `[s, e)` with `r <= s < e <= n`.
pub fn evaluation_count(k: usize, n: usize) -> usize {
    n + (1..k).map(|r| (n - r) * (n - r + 1) / 2).sum::<usize>()
}

/// Runs the segmentation DP over `k` references and `n` utterances.
///
/// `d(r, span)` is the similarity of reference `r` to the utterance chunk
/// `span`. Chunks are nonempty and every position listed in `forced` must
/// start a chunk. Ties go to the smallest chunk start in every cell.
pub fn segment<F>(
    k: usize,
    n: usize,
    forced: &[usize],
    mut d: F,
) -> Result<SegmentationOutcome, AlignError>
where
    F: FnMut(usize, Span) -> Result<f64, SimilarityError>,
{
    check_shape(k, n)?;
    if let Some(&b) = forced.iter().find(|&&b| b == 0 || b >= n) {
        return Err(AlignError::InvalidBoundary { position: b, n });
    }
    let mut is_forced = vec![false; n + 1];
    for &b in forced {
        is_forced[b] = true;
    }
    // next_forced[s] = smallest forced boundary greater than s
    let mut next_forced = vec![usize::MAX; n + 1];
    for s in (0..n).rev() {
        next_forced[s] = if is_forced[s + 1] {
            s + 1
        } else {
            next_forced[s + 1]
        };
    }
    let crosses = |s: usize, e: usize| next_forced[s] < e;

    let mut scores = vec![vec![f64::NEG_INFINITY; n + 1]; k];
    let mut back = vec![vec![None; n + 1]; k];
    let mut last = vec![vec![f64::NAN; n + 1]; k];
    let mut evaluations = 0;

    for e in 1..=n {
        if crosses(0, e) {
            continue;
        }
        evaluations += 1;
        scores[0][e] = d(0, Span::new(0, e))?;
        last[0][e] = scores[0][e];
        back[0][e] = Some(0);
    }
    for r in 1..k {
        for e in r + 1..=n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = None;
            let mut chunk = f64::NAN;
            for s in r..e {
                let prev = scores[r - 1][s];
                if prev == f64::NEG_INFINITY || crosses(s, e) {
                    continue;
                }
                evaluations += 1;
                let here = d(r, Span::new(s, e))?;
                let value = prev + here;
                if arg.is_none() || value > best {
                    best = value;
                    arg = Some(s);
                    chunk = here;
                }
            }
            scores[r][e] = best;
            back[r][e] = arg;
            last[r][e] = chunk;
        }
    }

    if back[k - 1][n].is_none() {
        return Err(AlignError::Infeasible);
    }
    let mut spans = Vec::with_capacity(k);
    let mut e = n;
    for r in (0..k).rev() {
        let s = back[r][e].expect("traceback follows filled cells");
        spans.push(Span::new(s, e));
        e = s;
    }
    spans.reverse();

    let per_span_scores = spans
        .iter()
        .enumerate()
        .map(|(r, s)| last[r][s.end])
        .collect();
    let total_score = scores[k - 1][n];
    Ok(SegmentationOutcome {
        table: SegmentationTable { scores, back },
        segmentation: Segmentation {
            spans,
            total_score,
            per_span_scores,
        },
        evaluations,
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of ways to split `n` utterances into `k` nonempty chunks.
pub fn composition_count(k: usize, n: usize) -> u64 {
    if k == 0 || k > n {
        return 0;
    }
    binomial(n as u64 - 1, k as u64 - 1)
}

/// Exhaustive search over every partition of `n` utterances into `k`
/// nonempty chunks. Returns the best partition and the number of
/// candidates scored.
///
/// Scores are summed left to right, as the DP does. Among equal totals the
/// winner is the partition whose boundaries are smallest when compared from
/// the last boundary backwards, which is the order the DP's per-cell rule
/// produces.
pub fn brute_force<F>(k: usize, n: usize, mut d: F) -> Result<(Segmentation, u64), AlignError>
where
    F: FnMut(usize, Span) -> Result<f64, SimilarityError>,
{
    check_shape(k, n)?;
    let candidates = composition_count(k, n);
    if candidates > BRUTE_FORCE_LIMIT {
        return Err(AlignError::TooLarge { candidates });
    }

    let mut cuts: Vec<usize> = (1..k).collect();
    let mut best: Option<(Segmentation, Vec<usize>)> = None;
    let mut seen = 0u64;
    loop {
        seen += 1;
        let mut spans = Vec::with_capacity(k);
        let mut start = 0;
        for &c in cuts.iter().chain(std::iter::once(&n)) {
            spans.push(Span::new(start, c));
            start = c;
        }
        let mut per_span = Vec::with_capacity(k);
        for (r, &span) in spans.iter().enumerate() {
            per_span.push(d(r, span)?);
        }
        let mut total = per_span[0];
        for v in &per_span[1..] {
            total += v;
        }
        let better = match &best {
            None => true,
            Some((b, b_cuts)) => {
                total > b.total_score
                    || (total == b.total_score && cuts.iter().rev().lt(b_cuts.iter().rev()))
            }
        };
        if better {
            best = Some((
                Segmentation {
                    spans,
                    total_score: total,
                    per_span_scores: per_span,
                },
                cuts.clone(),
            ));
        }

        // next combination of k - 1 cut points from 1..n
        let m = cuts.len();
        let mut advanced = false;
        for idx in (0..m).rev() {
            if cuts[idx] < n - (m - idx) {
                cuts[idx] += 1;
                for j in idx + 1..m {
                    cuts[j] = cuts[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    Ok((best.expect("at least one candidate").0, seen))
}
