use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Link;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    Intersection,
    Union,
    GrowDiag,
}

impl std::str::FromStr for Symmetrization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intersection" => Ok(Symmetrization::Intersection),
            "union" => Ok(Symmetrization::Union),
            "grow_diag" | "grow-diag" => Ok(Symmetrization::GrowDiag),
            other => Err(format!("unknown symmetrization {other:?}")),
        }
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Combines source-to-target and target-to-source links, both given as
/// `(source, target)` pairs. Output is sorted.
///
/// `GrowDiag` starts from the intersection and repeatedly adds union links
/// adjacent (including diagonally) to a current link, provided the new link
/// covers a source or target word that is still unaligned.
pub fn symmetrize(forward: &[Link], reverse: &[Link], method: Symmetrization) -> Vec<Link> {
    let fwd: BTreeSet<Link> = forward.iter().copied().collect();
    let rev: BTreeSet<Link> = reverse.iter().copied().collect();
    let union: BTreeSet<Link> = fwd.union(&rev).copied().collect();
    let mut current: BTreeSet<Link> = fwd.intersection(&rev).copied().collect();
    match method {
        Symmetrization::Intersection => {}
        Symmetrization::Union => current = union,
        Symmetrization::GrowDiag => loop {
            let mut added = false;
            let snapshot: Vec<Link> = current.iter().copied().collect();
            for (i, j) in snapshot {
                for (di, dj) in NEIGHBORS {
                    let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj))
                    else {
                        continue;
                    };
                    let candidate = (ni, nj);
                    if current.contains(&candidate) || !union.contains(&candidate) {
                        continue;
                    }
                    let src_free = !current.iter().any(|l| l.0 == ni);
                    let tgt_free = !current.iter().any(|l| l.1 == nj);
                    if src_free || tgt_free {
                        current.insert(candidate);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        },
    }
    current.into_iter().collect()
}
