//! Recording regions: overlap combinatorics, the pair-covering relation, and
//! the geometric sphere/separation criterion.
//!
//! A [`Region`] is a sorted set of site indices. Two observables' record
//! layouts interact only through which regions share sites (pair-covering)
//! and, when the lattice carries coordinates, through distances between the
//! site point sets.

use crate::state::Lattice;
use crate::{Error, Result};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A set of lattice sites, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    /// Build a region from site indices; duplicates are a domain error.
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("region contains duplicate sites".into()));
        }
        Ok(Region { sites })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        // Both sorted; walk in lockstep.
        let (mut i, mut j) = (0, 0);
        while i < self.sites.len() && j < other.sites.len() {
            match self.sites[i].cmp(&other.sites[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut sites: Vec<usize> = self.sites.iter().chain(other.sites.iter()).copied().collect();
        sites.sort_unstable();
        sites.dedup();
        Region { sites }
    }

    /// Check every site is valid for the lattice.
    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        match self.sites.last() {
            Some(&max) if max >= lattice.num_sites() => Err(Error::Domain(format!(
                "region site {} out of range for lattice with {} sites",
                max,
                lattice.num_sites()
            ))),
            _ => Ok(()),
        }
    }
}

/// True iff the two regions share no site.
pub fn disjoint(a: &Region, b: &Region) -> bool {
    a.is_disjoint(b)
}

/// Result of a pair-covering test between two record layouts.
#[derive(Debug, Clone)]
pub struct PairCoverReport {
    /// Whether some pair of `a`-regions jointly overlaps every `b`-region.
    pub covers: bool,
    /// On `covers`, the indices into `a` of a witnessing pair.
    pub witness: Option<(usize, usize)>,
    /// On `!covers`, for every unordered pair `(i, j)` of `a`-regions, the
    /// index of a `b`-region disjoint from both.
    pub separators: Vec<((usize, usize), usize)>,
}

/// Decide whether the observable recorded on `a` pair-covers the one on `b`.
///
/// `a` pair-covers `b` when there is a pair of `a`-regions such that every
/// `b`-region overlaps at least one of the two. The relation is asymmetric.
pub fn pair_covers(a: &[Region], b: &[Region]) -> PairCoverReport {
    let mut separators = Vec::new();
    for (i, j) in (0..a.len()).tuple_combinations() {
        let sep = b
            .iter()
            .position(|g| g.is_disjoint(&a[i]) && g.is_disjoint(&a[j]));
        match sep {
            Some(k) => separators.push(((i, j), k)),
            None => {
                return PairCoverReport {
                    covers: true,
                    witness: Some((i, j)),
                    separators: Vec::new(),
                }
            }
        }
    }
    PairCoverReport {
        covers: false,
        witness: None,
        separators,
    }
}

/// Euclidean distance between two points.
fn point_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Minimum Euclidean distance between the coordinate sets of two regions.
pub fn region_distance(a: &Region, b: &Region, lattice: &Lattice) -> Result<f64> {
    let coords = lattice
        .coords()
        .ok_or_else(|| Error::Config("lattice has no coordinates".into()))?;
    let mut best = f64::INFINITY;
    for &s in a.sites() {
        for &t in b.sites() {
            best = best.min(point_dist(&coords[s], &coords[t]));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &[f64], eps: f64) -> bool {
        point_dist(&self.center, p) <= self.radius + eps
    }
}

/// Circumsphere of a set of affinely independent boundary points.
/// Returns None when the points are (numerically) affinely dependent.
fn ball_from_boundary(points: &[&[f64]]) -> Option<Ball> {
    match points.len() {
        0 => Some(Ball {
            center: Vec::new(),
            radius: -1.0,
        }),
        1 => Some(Ball {
            center: points[0].to_vec(),
            radius: 0.0,
        }),
        k => {
            // Solve sum_j 2 (v_i . v_j) x_j = |v_i|^2 with v_i = p_i - p_0;
            // the center is p_0 + sum x_j v_j.
            let dim = points[0].len();
            let m = k - 1;
            let v: Vec<Vec<f64>> = (1..k)
                .map(|i| {
                    (0..dim)
                        .map(|d| points[i][d] - points[0][d])
                        .collect::<Vec<f64>>()
                })
                .collect();
            let mut mat = vec![vec![0.0f64; m + 1]; m];
            for i in 0..m {
                for j in 0..m {
                    mat[i][j] = 2.0 * v[i].iter().zip(v[j].iter()).map(|(x, y)| x * y).sum::<f64>();
                }
                mat[i][m] = v[i].iter().map(|x| x * x).sum::<f64>();
            }
            // Gaussian elimination with partial pivoting.
            for col in 0..m {
                let (pivot, pv) = (col..m)
                    .map(|r| (r, mat[r][col].abs()))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                if pv < 1e-12 {
                    return None;
                }
                mat.swap(col, pivot);
                for r in 0..m {
                    if r != col {
                        let f = mat[r][col] / mat[col][col];
                        for c in col..=m {
                            mat[r][c] -= f * mat[col][c];
                        }
                    }
                }
            }
            let x: Vec<f64> = (0..m).map(|i| mat[i][m] / mat[i][i]).collect();
            let mut center = points[0].to_vec();
            for j in 0..m {
                for d in 0..dim {
                    center[d] += x[j] * v[j][d];
                }
            }
            let radius = point_dist(&center, points[0]);
            Some(Ball { center, radius })
        }
    }
}

fn welzl<'a>(points: &mut Vec<&'a [f64]>, boundary: Vec<&'a [f64]>, dim: usize) -> Ball {
    if points.is_empty() || boundary.len() == dim + 1 {
        if let Some(b) = ball_from_boundary(&boundary) {
            return b;
        }
        // Degenerate boundary: fall back to the best sub-boundary ball that
        // still encloses all boundary points.
        let mut best: Option<Ball> = None;
        for drop in 0..boundary.len() {
            let sub: Vec<&[f64]> = boundary
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, p)| *p)
                .collect();
            if let Some(b) = ball_from_boundary(&sub) {
                if boundary.iter().all(|p| b.contains(p, 1e-9))
                    && best.as_ref().map_or(true, |x| b.radius < x.radius)
                {
                    best = Some(b);
                }
            }
        }
        return best.unwrap_or(Ball {
            center: boundary.first().map(|p| p.to_vec()).unwrap_or_default(),
            radius: 0.0,
        });
    }
    let p = points.pop().unwrap();
    let d = welzl(points, boundary.clone(), dim);
    let result = if d.radius >= 0.0 && d.contains(p, 1e-9) {
        d
    } else {
        let mut b2 = boundary;
        b2.push(p);
        welzl(points, b2, dim)
    };
    points.push(p);
    result
}

/// Minimum enclosing ball of a point set.
///
/// Exact closed forms for up to three points, Welzl-style recursion (with a
/// deterministic seeded shuffle) beyond that.
pub fn min_enclosing_ball(points: &[Vec<f64>]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::Domain("minimum enclosing ball of no points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Domain("inconsistent coordinate dimensions".into()));
    }
    let mut uniq: Vec<&[f64]> = Vec::new();
    for p in points {
        if !uniq.iter().any(|q| point_dist(q, p) < 1e-14) {
            uniq.push(p.as_slice());
        }
    }
    match uniq.len() {
        1 => Ok(Ball {
            center: uniq[0].to_vec(),
            radius: 0.0,
        }),
        2 => {
            let center: Vec<f64> = (0..dim).map(|d| 0.5 * (uniq[0][d] + uniq[1][d])).collect();
            let radius = point_dist(&center, uniq[0]);
            Ok(Ball { center, radius })
        }
        3 => {
            // Smallest of: the three diameter balls, else the circumcircle.
            for i in 0..3 {
                let (a, b) = match i {
                    0 => (uniq[0], uniq[1]),
                    1 => (uniq[0], uniq[2]),
                    _ => (uniq[1], uniq[2]),
                };
                let center: Vec<f64> = (0..dim).map(|d| 0.5 * (a[d] + b[d])).collect();
                let ball = Ball {
                    radius: point_dist(&center, a),
                    center,
                };
                if uniq.iter().all(|p| ball.contains(p, 1e-12)) {
                    return Ok(ball);
                }
            }
            ball_from_boundary(&uniq)
                .ok_or_else(|| Error::Numerical("degenerate circumcircle".into()))
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_6250);
            let mut pts = uniq.clone();
            pts.shuffle(&mut rng);
            Ok(welzl(&mut pts, Vec::new(), dim))
        }
    }
}

/// Geometric sufficient condition for an observable's records.
///
/// True iff at least three of the regions have a circumscribing ball of
/// radius <= `ell` and some such triple is pairwise separated by point-set
/// distance >= `ell` (closed inequalities on both sides).
pub fn sphere_criterion(obs: &[Region], ell: f64, lattice: &Lattice) -> Result<bool> {
    let coords = lattice
        .coords()
        .ok_or_else(|| Error::Config("sphere criterion requires lattice coordinates".into()))?;
    if ell <= 0.0 {
        return Err(Error::Config("sphere criterion requires a positive length".into()));
    }
    let mut small: Vec<usize> = Vec::new();
    for (k, r) in obs.iter().enumerate() {
        if r.is_empty() {
            continue;
        }
        r.validate(lattice)?;
        let pts: Vec<Vec<f64>> = r.sites().iter().map(|&s| coords[s].clone()).collect();
        if min_enclosing_ball(&pts)?.radius <= ell {
            small.push(k);
        }
    }
    if small.len() < 3 {
        return Ok(false);
    }
    for trio in small.iter().combinations(3) {
        let (&a, &b, &c) = (trio[0], trio[1], trio[2]);
        let ok = region_distance(&obs[a], &obs[b], lattice)? >= ell
            && region_distance(&obs[a], &obs[c], lattice)? >= ell
            && region_distance(&obs[b], &obs[c], lattice)? >= ell;
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

/// A named family of record layouts: observable name -> its record regions.
///
/// Regions within one observable must be pairwise disjoint and number at
/// least two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionLayout {
    observables: BTreeMap<String, Vec<Region>>,
}

impl RegionLayout {
    pub fn new(observables: BTreeMap<String, Vec<Region>>) -> Result<Self> {
        for (name, regions) in &observables {
            if regions.len() < 2 {
                return Err(Error::Domain(format!(
                    "observable {name} has fewer than 2 record regions"
                )));
            }
            for (i, j) in (0..regions.len()).tuple_combinations() {
                if !regions[i].is_disjoint(&regions[j]) {
                    return Err(Error::Domain(format!(
                        "records {i} and {j} of observable {name} overlap"
                    )));
                }
            }
        }
        Ok(RegionLayout { observables })
    }

    pub fn observables(&self) -> &BTreeMap<String, Vec<Region>> {
        &self.observables
    }

    /// True iff no observable pair-covers another (all ordered pairs).
    pub fn noncovering(&self) -> bool {
        for (na, ra) in &self.observables {
            for (nb, rb) in &self.observables {
                if na != nb && pair_covers(ra, rb).covers {
                    return false;
                }
            }
        }
        true
    }
}

/// Outcome of [`prune_to_noncovering`].
#[derive(Debug, Clone)]
pub enum PruneOutcome {
    /// A maximal sub-layout with no pair-covering, plus what was dropped.
    Pruned {
        layout: RegionLayout,
        dropped: BTreeMap<String, Vec<Region>>,
    },
    /// No subset keeping >= 2 records per observable avoids pair-covering.
    Infeasible,
}

const EXHAUSTIVE_PRUNE_LIMIT: usize = 12;

/// Drop records until no observable pair-covers another.
///
/// Searches drop sets exhaustively in order of increasing total drops when
/// the layout has at most 12 records; beyond that, greedily drops the record
/// overlapping the most foreign records. Every observable must retain at
/// least two records; if that is impossible the result is
/// [`PruneOutcome::Infeasible`] (a value, not an error).
pub fn prune_to_noncovering(layout: &RegionLayout) -> PruneOutcome {
    if layout.noncovering() {
        return PruneOutcome::Pruned {
            layout: layout.clone(),
            dropped: BTreeMap::new(),
        };
    }
    let names: Vec<&String> = layout.observables.keys().collect();
    let all_records: Vec<(usize, usize)> = names
        .iter()
        .enumerate()
        .flat_map(|(oi, name)| {
            (0..layout.observables[*name].len()).map(move |ri| (oi, ri))
        })
        .collect();
    let total = all_records.len();

    let build = |drops: &[&(usize, usize)]| -> (RegionLayout, BTreeMap<String, Vec<Region>>) {
        let mut kept: BTreeMap<String, Vec<Region>> = BTreeMap::new();
        let mut dropped: BTreeMap<String, Vec<Region>> = BTreeMap::new();
        for (oi, name) in names.iter().enumerate() {
            let regions = &layout.observables[*name];
            for (ri, region) in regions.iter().enumerate() {
                if drops.iter().any(|d| **d == (oi, ri)) {
                    dropped.entry((*name).clone()).or_default().push(region.clone());
                } else {
                    kept.entry((*name).clone()).or_default().push(region.clone());
                }
            }
        }
        (
            RegionLayout { observables: kept },
            dropped,
        )
    };

    if total <= EXHAUSTIVE_PRUNE_LIMIT {
        for k in 1..total {
            for drops in all_records.iter().combinations(k) {
                // Every observable keeps >= 2 records.
                let viable = names.iter().enumerate().all(|(oi, name)| {
                    let n = layout.observables[*name].len();
                    let d = drops.iter().filter(|x| x.0 == oi).count();
                    n - d >= 2
                });
                if !viable {
                    continue;
                }
                let (cand, dropped) = build(&drops);
                if cand.noncovering() {
                    return PruneOutcome::Pruned { layout: cand, dropped };
                }
            }
        }
        PruneOutcome::Infeasible
    } else {
        // Greedy: repeatedly drop the record overlapping the most foreign
        // records, while keeping every observable at >= 2 records.
        let mut current = layout.clone();
        let mut dropped: BTreeMap<String, Vec<Region>> = BTreeMap::new();
        loop {
            if current.noncovering() {
                return PruneOutcome::Pruned { layout: current, dropped };
            }
            let mut best: Option<(usize, String, usize)> = None;
            for (name, regions) in &current.observables {
                if regions.len() <= 2 {
                    continue;
                }
                for (ri, region) in regions.iter().enumerate() {
                    let foreign_overlaps = current
                        .observables
                        .iter()
                        .filter(|(n, _)| *n != name)
                        .flat_map(|(_, rs)| rs.iter())
                        .filter(|r| !r.is_disjoint(region))
                        .count();
                    let better = match &best {
                        None => true,
                        Some((score, bn, bi)) => {
                            foreign_overlaps > *score
                                || (foreign_overlaps == *score && (name, ri) < (&bn.clone(), *bi))
                        }
                    };
                    if better && foreign_overlaps > 0 {
                        best = Some((foreign_overlaps, name.clone(), ri));
                    }
                }
            }
            match best {
                Some((_, name, ri)) => {
                    let regions = current.observables.get_mut(&name).unwrap();
                    let removed = regions.remove(ri);
                    dropped.entry(name).or_default().push(removed);
                }
                None => return PruneOutcome::Infeasible,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Budget;

    fn r(sites: &[usize]) -> Region {
        Region::new(sites.to_vec()).unwrap()
    }

    #[test]
    fn disjoint_basics() {
        assert!(disjoint(&r(&[0, 1]), &r(&[2, 3])));
        assert!(!disjoint(&r(&[0, 1]), &r(&[1, 2])));
        assert!(disjoint(&r(&[0, 1]), &r(&[])));
        assert!(disjoint(&r(&[]), &r(&[])));
    }

    #[test]
    fn region_rejects_duplicates() {
        assert!(Region::new(vec![0, 1, 1]).is_err());
    }

    #[test]
    fn pair_cover_simple_false_case() {
        // a = {{0},{1}}, b = {{2}}: G = {2} is disjoint from both.
        let rep = pair_covers(&[r(&[0]), r(&[1])], &[r(&[2])]);
        assert!(!rep.covers);
        assert_eq!(rep.separators, vec![((0, 1), 0)]);
    }

    #[test]
    fn pair_cover_witness() {
        // Two a-regions jointly touch every b-region.
        let a = [r(&[0, 1]), r(&[2, 3])];
        let b = [r(&[1]), r(&[3])];
        let rep = pair_covers(&a, &b);
        assert!(rep.covers);
        assert_eq!(rep.witness, Some((0, 1)));
    }

    #[test]
    fn single_region_cannot_cover() {
        let rep = pair_covers(&[r(&[0, 1, 2])], &[r(&[0])]);
        assert!(!rep.covers);
    }

    fn line_lattice(n: usize) -> Lattice {
        let coords: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        Lattice::new(vec![2; n], Some(coords), &Budget::default()).unwrap()
    }

    #[test]
    fn sphere_criterion_trivials() {
        let lat = Lattice::new(
            vec![2; 3],
            Some(vec![vec![0.0], vec![10.0], vec![20.0]]),
            &Budget::default(),
        )
        .unwrap();
        let regions = [r(&[0]), r(&[1]), r(&[2])];
        assert!(sphere_criterion(&regions, 1.0, &lat).unwrap());
        assert!(!sphere_criterion(&regions[..2], 1.0, &lat).unwrap());
    }

    #[test]
    fn sphere_criterion_rejects_close_fat_regions() {
        // Three unit-diameter regions separated by 0.5 with ell = 1.
        let coords = vec![
            vec![0.0],
            vec![1.0],
            vec![1.5],
            vec![2.5],
            vec![3.0],
            vec![4.0],
        ];
        let lat = Lattice::new(vec![2; 6], Some(coords), &Budget::default()).unwrap();
        let regions = [r(&[0, 1]), r(&[2, 3]), r(&[4, 5])];
        assert!(!sphere_criterion(&regions, 1.0, &lat).unwrap());
    }

    #[test]
    fn sphere_criterion_needs_coords() {
        let lat = Lattice::new(vec![2; 3], None, &Budget::default()).unwrap();
        assert!(matches!(
            sphere_criterion(&[r(&[0]), r(&[1]), r(&[2])], 1.0, &lat),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn meb_collinear_and_triangle() {
        let b = min_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12);
        let b = min_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]]).unwrap();
        // Circumcircle of an isoceles triangle; all vertices on the boundary.
        for p in [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]] {
            assert!((point_dist(&b.center, &p) - b.radius).abs() < 1e-9);
        }
        let b = min_enclosing_ball(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        ])
        .unwrap();
        assert!((b.radius - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn prune_fixpoint_on_noncovering() {
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), vec![r(&[0]), r(&[1]), r(&[2])]);
        map.insert("b".to_string(), vec![r(&[3]), r(&[4]), r(&[5])]);
        let layout = RegionLayout::new(map).unwrap();
        match prune_to_noncovering(&layout) {
            PruneOutcome::Pruned { layout: out, dropped } => {
                assert_eq!(out, layout);
                assert!(dropped.is_empty());
            }
            PruneOutcome::Infeasible => panic!("expected fixpoint"),
        }
    }

    #[test]
    fn prune_drops_one_covering_record() {
        // Orange records {0,1},{2,3},{8},{9}; blue records {1,2},{5},{6}.
        // The top two orange records {0,1},{2,3} overlap every blue record?
        // No: blue {5} and {6} are free, so make blue smaller: blue on
        // {1,2},{3,6}. Pair ({0,1},{2,3}) overlaps both blue records, so
        // orange covers blue; dropping one of those two fixes it.
        let mut map = BTreeMap::new();
        map.insert(
            "orange".to_string(),
            vec![r(&[0, 1]), r(&[2, 3]), r(&[8]), r(&[9])],
        );
        map.insert("blue".to_string(), vec![r(&[1, 2]), r(&[3, 6])]);
        let layout = RegionLayout::new(map).unwrap();
        assert!(!layout.noncovering());
        match prune_to_noncovering(&layout) {
            PruneOutcome::Pruned { layout: out, dropped } => {
                assert!(out.noncovering());
                let n_dropped: usize = dropped.values().map(|v| v.len()).sum();
                assert_eq!(n_dropped, 1);
                assert!(dropped.contains_key("orange"));
            }
            PruneOutcome::Infeasible => panic!("prunable layout reported infeasible"),
        }
    }

    #[test]
    fn prune_shor_layout_infeasible() {
        // 3x3 grid: rows vs columns; every row meets every column.
        let rows: Vec<Region> = (0..3).map(|m| r(&[3 * m, 3 * m + 1, 3 * m + 2])).collect();
        let cols: Vec<Region> = (0..3).map(|c| r(&[c, c + 3, c + 6])).collect();
        let mut map = BTreeMap::new();
        map.insert("rows".to_string(), rows);
        map.insert("cols".to_string(), cols);
        let layout = RegionLayout::new(map).unwrap();
        assert!(matches!(prune_to_noncovering(&layout), PruneOutcome::Infeasible));
    }
}
