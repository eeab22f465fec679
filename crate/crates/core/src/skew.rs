//! The Gauss map augmented with a finite set of markers `{1..m}`:
//! `T~(x, M) = (T x, f_{a_1(x)}(M))`, where every `f_a` is a permutation.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use serde::Serialize;

use crate::cf::{cylinder, DigitString};
use crate::error::{CfError, Result};
use crate::stream::DigitStream;

/// Permutations of `{1..m}` stored as 1-based image vectors.
pub type Permutation = Vec<usize>;

/// Finitely many distinct permutations, and a rule sending every digit to
/// one of them: explicit digits first, everything else to `default`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkerFamily {
    m: usize,
    perms: Vec<Permutation>,
    assignment: BTreeMap<u64, usize>,
    default: usize,
}

fn check_perm(m: usize, p: &[usize]) -> Result<()> {
    if p.len() != m {
        return Err(CfError::domain(format!("permutation has {} entries, expected {m}", p.len())));
    }
    let mut seen = vec![false; m + 1];
    for &v in p {
        if v == 0 || v > m || seen[v] {
            return Err(CfError::domain(format!("{p:?} is not a bijection of 1..={m}")));
        }
        seen[v] = true;
    }
    Ok(())
}

impl MarkerFamily {
    pub fn new(
        m: usize,
        perms: Vec<Permutation>,
        assignment: BTreeMap<u64, usize>,
        default: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(CfError::domain("marker set must be non-empty"));
        }
        for p in &perms {
            check_perm(m, p)?;
        }
        let n = perms.len();
        if default >= n || assignment.values().any(|&i| i >= n) {
            return Err(CfError::domain("assignment refers to a missing permutation"));
        }
        if assignment.contains_key(&0) {
            return Err(CfError::domain("digit 0 cannot be assigned"));
        }
        Ok(MarkerFamily {
            m,
            perms,
            assignment,
            default,
        })
    }

    /// One permutation for every digit.
    pub fn uniform(m: usize, perm: Permutation) -> Result<Self> {
        MarkerFamily::new(m, vec![perm], BTreeMap::new(), 0)
    }

    /// `f_a(k) = k + 1 mod m` on `{1..m}`, for every digit.
    pub fn rotation(m: usize) -> Result<Self> {
        MarkerFamily::uniform(m, (1..=m).map(|k| k % m + 1).collect())
    }

    pub fn identity(m: usize) -> Result<Self> {
        MarkerFamily::uniform(m, (1..=m).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn permutation_for(&self, digit: u64) -> &Permutation {
        let i = self.assignment.get(&digit).copied().unwrap_or(self.default);
        &self.perms[i]
    }

    pub fn apply(&self, digit: u64, marker: usize) -> usize {
        self.permutation_for(digit)[marker - 1]
    }

    /// Smallest digit using each permutation that some digit uses.
    fn representatives(&self) -> Vec<(u64, usize)> {
        let mut reps: BTreeMap<usize, u64> = BTreeMap::new();
        for (&d, &i) in &self.assignment {
            reps.entry(i).or_insert(d);
        }
        let free = (1..).find(|d| !self.assignment.contains_key(d)).expect("finite assignment");
        let e = reps.entry(self.default).or_insert(free);
        *e = (*e).min(free);
        let mut out: Vec<(u64, usize)> = reps.into_iter().map(|(i, d)| (d, i)).collect();
        out.sort();
        out
    }

    /// Conjugates every permutation by `sigma`: `f'_a = sigma ∘ f_a ∘ sigma^-1`.
    pub fn relabeled(&self, sigma: &[usize]) -> Result<Self> {
        check_perm(self.m, sigma)?;
        let mut inv = vec![0; self.m + 1];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i + 1;
        }
        let perms = self
            .perms
            .iter()
            .map(|p| (1..=self.m).map(|k| sigma[p[inv[k] - 1] - 1]).collect())
            .collect();
        MarkerFamily::new(self.m, perms, self.assignment.clone(), self.default)
    }
}

/// A position in a digit stream together with a marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AugmentedPoint {
    pub position: usize,
    pub marker: usize,
}

impl AugmentedPoint {
    pub fn new(marker: usize, family: &MarkerFamily) -> Result<Self> {
        if marker == 0 || marker > family.m() {
            return Err(CfError::domain(format!("marker {marker} outside 1..={}", family.m())));
        }
        Ok(AugmentedPoint { position: 0, marker })
    }
}

pub fn step(point: &AugmentedPoint, stream: &DigitStream, family: &MarkerFamily) -> Result<AugmentedPoint> {
    let &a = stream.digits().get(point.position).ok_or(CfError::EndOfStream)?;
    Ok(AugmentedPoint {
        position: point.position + 1,
        marker: family.apply(a, point.marker),
    })
}

/// Markers visited at times `0..=n`.
pub fn marker_trajectory(stream: &DigitStream, family: &MarkerFamily, start: usize, n: usize) -> Result<Vec<usize>> {
    let mut p = AugmentedPoint::new(start, family)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(p.marker);
    for _ in 0..n {
        p = step(&p, stream, family)?;
        out.push(p.marker);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transitivity {
    pub transitive: bool,
    /// `witnesses[(from, to)]`: a shortest non-empty digit word carrying
    /// `from` to `to`, when one exists.
    pub witnesses: BTreeMap<(usize, usize), Vec<u64>>,
    /// Pairs with no connecting word.
    pub unreachable: Vec<(usize, usize)>,
}

/// Reachability over non-empty words of the family's permutations. Words
/// are reported as digits, one representative digit per permutation, and
/// witnesses longer than `max_depth` are dropped from the report.
pub fn is_transitive(family: &MarkerFamily, max_depth: usize) -> Transitivity {
    let m = family.m();
    let reps = family.representatives();
    let mut witnesses = BTreeMap::new();
    let mut unreachable = Vec::new();
    for from in 1..=m {
        // BFS over markers after at least one step
        let mut word: Vec<Option<Vec<u64>>> = vec![None; m + 1];
        let mut queue = VecDeque::new();
        for &(d, i) in &reps {
            let to = family.perms[i][from - 1];
            if word[to].is_none() {
                word[to] = Some(vec![d]);
                queue.push_back(to);
            }
        }
        while let Some(cur) = queue.pop_front() {
            let base = word[cur].clone().expect("queued markers have words");
            for &(d, i) in &reps {
                let to = family.perms[i][cur - 1];
                if word[to].is_none() {
                    let mut w = base.clone();
                    w.push(d);
                    word[to] = Some(w);
                    queue.push_back(to);
                }
            }
        }
        for (to, w) in word.into_iter().enumerate().skip(1) {
            match w {
                Some(w) if w.len() <= max_depth => {
                    witnesses.insert((from, to), w);
                }
                Some(_) => {}
                None => unreachable.push((from, to)),
            }
        }
    }
    Transitivity {
        transitive: unreachable.is_empty(),
        witnesses,
        unreachable,
    }
}

/// All strings of length `1..=max_len` with digits in `1..=max_digit`.
pub fn strings_up_to(max_len: usize, max_digit: u64) -> Vec<DigitString> {
    let mut out = Vec::new();
    let mut level: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..max_len {
        level = level
            .into_iter()
            .flat_map(|s| {
                (1..=max_digit).map(move |d| {
                    let mut s = s.clone();
                    s.push(d);
                    s
                })
            })
            .collect();
        out.extend(level.iter().map(|s| DigitString::new(s.clone()).expect("digits >= 1")));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquidistributionRow {
    pub string: String,
    pub marker: usize,
    pub empirical: f64,
    pub target: f64,
    pub stderr: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquidistributionReport {
    pub m: usize,
    pub start_marker: usize,
    pub iterations: usize,
    pub rows: Vec<EquidistributionRow>,
}

impl EquidistributionReport {
    pub fn row(&self, s: &[u64], marker: usize) -> Option<&EquidistributionRow> {
        let key = DigitString::new(s.to_vec()).ok()?.to_string();
        self.rows.iter().find(|r| r.string == key && r.marker == marker)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.z_score.abs()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CfError::io(path, e))
    }
}

/// Frequencies of visits of `T~^i (x, start)`, `i < n`, to `(C_s, M')` for
/// every string `s` of length `<= max_len` with digits `<= max_digit`,
/// against `mu~(C_s, M') = mu(C_s) / m`.
pub fn equidistribution_report(
    stream: &DigitStream,
    family: &MarkerFamily,
    start_marker: usize,
    max_len: usize,
    max_digit: u64,
    n: usize,
) -> Result<EquidistributionReport> {
    if n == 0 {
        return Err(CfError::domain("need at least one iteration"));
    }
    let needed = n + max_len;
    if stream.len() < needed {
        return Err(CfError::InsufficientDigits {
            needed,
            available: stream.len(),
        });
    }
    let markers = marker_trajectory(stream, family, start_marker, n)?;
    let digits = stream.digits();
    let mut counts: HashMap<(&[u64], usize), u64> = HashMap::new();
    for i in 0..n {
        for len in 1..=max_len {
            let w = &digits[i..i + len];
            if w[len - 1] > max_digit {
                break;
            }
            *counts.entry((w, markers[i])).or_insert(0) += 1;
        }
    }
    let m = family.m();
    let mut rows = Vec::new();
    for s in strings_up_to(max_len, max_digit) {
        let target = cylinder(&s).measure().to_f64() / m as f64;
        let stderr = (target * (1.0 - target) / n as f64).sqrt();
        for marker in 1..=m {
            let c = counts.get(&(s.digits(), marker)).copied().unwrap_or(0);
            let empirical = c as f64 / n as f64;
            rows.push(EquidistributionRow {
                string: s.to_string(),
                marker,
                empirical,
                target,
                stderr,
                z_score: (empirical - target) / stderr,
            });
        }
    }
    Ok(EquidistributionReport {
        m,
        start_marker,
        iterations: n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn swap_on_one() -> MarkerFamily {
        MarkerFamily::new(2, vec![vec![2, 1], vec![1, 2]], BTreeMap::from([(1, 0)]), 1).unwrap()
    }

    #[test]
    fn rotation_steps() {
        let f = MarkerFamily::rotation(3).unwrap();
        assert_eq!(f.apply(17, 2), 3);
        assert_eq!(f.apply(1, 3), 1);
        let s = DigitStream::periodic(&[4, 1, 9], 10_001).unwrap();
        let traj = marker_trajectory(&s, &f, 2, 10_000).unwrap();
        for (i, &mk) in traj.iter().enumerate() {
            assert_eq!(mk, (2 - 1 + i) % 3 + 1);
        }
    }

    #[test]
    fn identity_never_moves_and_stream_ends() {
        let f = MarkerFamily::identity(4).unwrap();
        let s = DigitStream::periodic(&[1, 2], 5).unwrap();
        assert!(marker_trajectory(&s, &f, 3, 5).unwrap().iter().all(|&m| m == 3));
        let end = AugmentedPoint { position: 5, marker: 3 };
        assert!(matches!(step(&end, &s, &f), Err(CfError::EndOfStream)));
    }

    #[test]
    fn invalid_families() {
        assert!(MarkerFamily::uniform(3, vec![1, 1, 2]).is_err());
        assert!(MarkerFamily::uniform(2, vec![1, 2, 3]).is_err());
        assert!(MarkerFamily::new(2, vec![vec![1, 2]], BTreeMap::new(), 1).is_err());
        assert!(AugmentedPoint::new(3, &MarkerFamily::identity(2).unwrap()).is_err());
    }

    #[test]
    fn transitivity_examples() {
        for m in 1..=6 {
            assert!(is_transitive(&MarkerFamily::rotation(m).unwrap(), 64).transitive);
        }
        let id = is_transitive(&MarkerFamily::identity(2).unwrap(), 64);
        assert!(!id.transitive);
        assert_eq!(id.unreachable, vec![(1, 2), (2, 1)]);
        let t = is_transitive(&swap_on_one(), 64);
        assert!(t.transitive);
        assert_eq!(t.witnesses[&(1, 2)], vec![1]);
        assert_eq!(t.witnesses[&(1, 1)], vec![2]);
    }

    #[test]
    fn witnesses_really_connect() {
        let f = swap_on_one();
        for ((from, to), word) in is_transitive(&f, 64).witnesses {
            let end = word.iter().fold(from, |mk, &d| f.apply(d, mk));
            assert_eq!(end, to);
        }
    }

    #[test]
    fn periodic_ones_report() {
        let s = DigitStream::periodic(&[1], 1002).unwrap();
        let r = equidistribution_report(&s, &MarkerFamily::rotation(2).unwrap(), 1, 1, 3, 1000).unwrap();
        assert_eq!(r.row(&[1], 1).unwrap().empirical, 0.5);
        assert_eq!(r.row(&[1], 2).unwrap().empirical, 0.5);
        assert_eq!(r.row(&[2], 1).unwrap().empirical, 0.0);
        assert!(r.max_abs_z() > 20.0);
    }

    #[test]
    fn identity_family_never_visits_other_markers() {
        let s = crate::sampler::sample_stream(1, 5000);
        let r = equidistribution_report(&s, &MarkerFamily::identity(2).unwrap(), 1, 2, 3, 4000).unwrap();
        assert!(r.rows.iter().filter(|row| row.marker == 2).all(|row| row.empirical == 0.0));
    }

    #[test]
    fn marker_split_sums_to_plain_frequency() {
        let s = crate::sampler::sample_stream(2, 20_000);
        let n = 19_000;
        let r = equidistribution_report(&s, &swap_on_one(), 2, 2, 4, n).unwrap();
        for string in strings_up_to(2, 4) {
            let plain = s.digits()[..n + 2].windows(string.len()).take(n).filter(|w| *w == string.digits()).count();
            let split: f64 = (1..=2).map(|mk| r.row(string.digits(), mk).unwrap().empirical * n as f64).sum();
            assert_eq!(split.round() as usize, plain);
        }
    }

    #[test]
    fn csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eq.csv");
        let s = DigitStream::periodic(&[1, 2], 50).unwrap();
        equidistribution_report(&s, &MarkerFamily::rotation(2).unwrap(), 1, 1, 2, 40)
            .unwrap()
            .write_csv(&path)
            .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("string,marker,empirical,target,stderr,z_score\n"));
        assert_eq!(text.lines().count(), 5);
    }

    fn perm_strategy(m: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((1..=m).collect::<Vec<usize>>()).prop_shuffle()
    }

    proptest! {
        #[test]
        fn transitivity_survives_relabeling(
            (m, perms, sigma) in (1usize..6).prop_flat_map(|m| {
                (Just(m), prop::collection::vec(perm_strategy(m), 1..4), perm_strategy(m))
            })
        ) {
            let k = perms.len();
            let assignment: BTreeMap<u64, usize> = (1..k as u64).map(|d| (d, d as usize)).collect();
            let f = MarkerFamily::new(m, perms, assignment, 0).unwrap();
            let g = f.relabeled(&sigma).unwrap();
            prop_assert_eq!(is_transitive(&f, 64).transitive, is_transitive(&g, 64).transitive);
            prop_assert_eq!(
                is_transitive(&f, 64).unreachable.len(),
                is_transitive(&g, 64).unreachable.len()
            );
        }
    }
}
