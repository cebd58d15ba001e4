//! Network layout: gNB sites, Poisson-cluster user placement, per-link
//! channels, beam clustering by channel correlation, and the cell-edge
//! (intersection-region) user set that the agents negotiate over.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::phy::{self, ChannelTable, ChannelVector, LinkGeometry, PhyConfig};
use crate::units;

const MAX_EMPTY_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Geometry of the link from a gNB to a user. The arrays are vertical ULAs
/// (axis along y), so the angle of departure satisfies `sin θ = Δy / d`.
pub fn link_geometry(gnb: Point, user: Point) -> LinkGeometry {
    let d = gnb.distance(&user);
    let aod = if d > 0.0 {
        ((user.y - gnb.y) / d).clamp(-1.0, 1.0).asin()
    } else {
        0.0
    };
    LinkGeometry {
        distance_m: d,
        aod_rad: aod,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeploymentConfig {
    pub num_gnbs: usize,
    pub inter_gnb_distance_m: f64,
    /// Mean users per PCP cluster (λ).
    pub pcp_mean_users: f64,
    pub pcp_clusters: usize,
    pub cluster_radius_m: f64,
    /// Beams (k-means clusters) per gNB.
    pub beams_per_gnb: usize,
    /// When set, the intersection region holds exactly this many users (the
    /// ones with the smallest power gap between their two best gNBs).
    pub intersection_users: Option<usize>,
    /// Power-gap margin used when `intersection_users` is unset.
    pub intersection_margin_db: f64,
    pub kmeans_max_iterations: usize,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self {
            num_gnbs: 2,
            inter_gnb_distance_m: 150.0,
            pcp_mean_users: 7.0,
            pcp_clusters: 2,
            cluster_radius_m: 30.0,
            beams_per_gnb: 2,
            intersection_users: Some(2),
            intersection_margin_db: 3.0,
            kmeans_max_iterations: 100,
        }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_gnbs == 0 {
            return Err(Error::invalid("deployment.num_gnbs", "must be at least 1"));
        }
        if !(self.inter_gnb_distance_m > 0.0) {
            return Err(Error::invalid("deployment.inter_gnb_distance_m", "must be positive"));
        }
        if !(self.pcp_mean_users > 0.0) {
            return Err(Error::invalid("deployment.pcp_mean_users", "must be positive"));
        }
        if self.pcp_clusters == 0 {
            return Err(Error::invalid("deployment.pcp_clusters", "must be at least 1"));
        }
        if !(self.cluster_radius_m >= 0.0) {
            return Err(Error::invalid("deployment.cluster_radius_m", "must be non-negative"));
        }
        if self.beams_per_gnb == 0 {
            return Err(Error::invalid("deployment.beams_per_gnb", "must be at least 1"));
        }
        if !(self.intersection_margin_db >= 0.0) {
            return Err(Error::invalid("deployment.intersection_margin_db", "must be non-negative"));
        }
        if self.kmeans_max_iterations == 0 {
            return Err(Error::invalid("deployment.kmeans_max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    pub fn pcp(&self, fixed_total_users: Option<usize>) -> PcpConfig {
        PcpConfig {
            mean_users_per_cluster: self.pcp_mean_users,
            num_clusters: self.pcp_clusters,
            cluster_radius_m: self.cluster_radius_m,
            fixed_total_users,
        }
    }

    pub fn intersection_rule(&self) -> IntersectionRule {
        match self.intersection_users {
            Some(n) => IntersectionRule::Closest(n),
            None => IntersectionRule::Margin(self.intersection_margin_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcpConfig {
    pub mean_users_per_cluster: f64,
    pub num_clusters: usize,
    pub cluster_radius_m: f64,
    pub fixed_total_users: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub gnb_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub parents: Vec<Point>,
    /// PCP cluster each user was drawn around.
    pub user_parent: Vec<usize>,
    pub inter_gnb_distance_m: f64,
}

impl Topology {
    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn num_gnbs(&self) -> usize {
        self.gnb_positions.len()
    }
}

/// gNBs on a line at the configured spacing; PCP parents uniform over the
/// rectangle spanning the sites padded by one cluster radius (and by half a
/// site spacing vertically so the sites' broadside region is populated).
pub fn draw_topology<R: Rng + ?Sized>(
    rng: &mut R,
    pcp: &PcpConfig,
    num_gnbs: usize,
    inter_gnb_distance_m: f64,
) -> Result<Topology> {
    let r = pcp.cluster_radius_m;
    let span = inter_gnb_distance_m * (num_gnbs.saturating_sub(1)) as f64;
    let gnb_positions: Vec<Point> = (0..num_gnbs)
        .map(|j| Point::new(j as f64 * inter_gnb_distance_m, 0.0))
        .collect();
    let (x0, x1) = (-r, span + r);
    let half_h = inter_gnb_distance_m / 2.0 + r;

    let mut attempts = 0;
    loop {
        attempts += 1;
        let parents: Vec<Point> = (0..pcp.num_clusters)
            .map(|_| {
                Point::new(
                    rng.random_range(x0..=x1),
                    rng.random_range(-half_h..=half_h),
                )
            })
            .collect();

        let user_parent: Vec<usize> = match pcp.fixed_total_users {
            // Given the total, the per-cluster counts of independent equal-rate
            // Poisson clusters are multinomial with equal cell probabilities.
            Some(n) => (0..n).map(|_| rng.random_range(0..pcp.num_clusters)).collect(),
            None => {
                let poisson = Poisson::new(pcp.mean_users_per_cluster)
                    .map_err(|_| Error::invalid("deployment.pcp_mean_users", "not a valid Poisson mean"))?;
                let mut v = Vec::new();
                for c in 0..pcp.num_clusters {
                    let count = poisson.sample(rng) as usize;
                    v.extend(core::iter::repeat(c).take(count));
                }
                v
            }
        };

        if user_parent.is_empty() {
            if attempts >= MAX_EMPTY_REDRAWS {
                return Err(Error::EmptyDeployment { attempts });
            }
            continue;
        }

        let user_positions = user_parent
            .iter()
            .map(|&c| {
                let rad = r * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                Point::new(parents[c].x + rad * phi.cos(), parents[c].y + rad * phi.sin())
            })
            .collect();

        return Ok(Topology {
            gnb_positions,
            user_positions,
            parents,
            user_parent,
            inter_gnb_distance_m,
        });
    }
}

/// Draws one complex gain per (user, gNB) link and builds the channel table.
pub fn draw_channels<R: Rng + ?Sized>(rng: &mut R, topology: &Topology, phy: &PhyConfig) -> ChannelTable {
    let mut links = Vec::with_capacity(topology.num_users() * topology.num_gnbs());
    let mut geometry = Vec::with_capacity(links.capacity());
    for user in &topology.user_positions {
        for gnb in &topology.gnb_positions {
            let geom = link_geometry(*gnb, *user);
            let alpha = phy::draw_complex_gain(rng, phy.gain_variance);
            links.push(phy::channel_vector(geom, alpha, phy));
            geometry.push(geom);
        }
    }
    ChannelTable::new(topology.num_gnbs(), links, geometry)
}

/// Normalized correlation `|x^H y| / (‖x‖‖y‖)`; zero if either vector is zero.
pub fn channel_correlation(x: &ChannelVector, y: &ChannelVector) -> f64 {
    let nx = x.norm_sqr();
    let ny = y.norm_sqr();
    if nx <= 0.0 || ny <= 0.0 {
        return 0.0;
    }
    phy::inner(&x.coeffs, &y.coeffs).norm() / (nx * ny).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster label per input user.
    pub labels: Vec<usize>,
    /// Input index of each cluster's head.
    pub heads: Vec<usize>,
    pub iterations: usize,
    /// Sum of member-to-head correlations after each iteration.
    pub objective: Vec<f64>,
    /// Set when fewer users than requested clusters were supplied.
    pub reduced: bool,
}

impl KMeansResult {
    pub fn num_clusters(&self) -> usize {
        self.heads.len()
    }
}

/// k-means over channel correlation. Each cluster is represented by a head
/// user; users join the head they are most correlated with, and each head is
/// then moved to the member with the largest summed correlation to its
/// cluster. Heads always belong to their own cluster, so no cluster empties.
pub fn correlation_kmeans<R: Rng + ?Sized>(
    channels: &[&ChannelVector],
    k: usize,
    max_iterations: usize,
    rng: &mut R,
) -> KMeansResult {
    let n = channels.len();
    if n == 0 || k == 0 {
        return KMeansResult {
            labels: Vec::new(),
            heads: Vec::new(),
            iterations: 0,
            objective: Vec::new(),
            reduced: k > n,
        };
    }
    let k_eff = k.min(n);
    let mut corr = vec![0.0; n * n];
    for a in 0..n {
        corr[a * n + a] = if channels[a].norm_sqr() > 0.0 { 1.0 } else { 0.0 };
        for b in (a + 1)..n {
            let c = channel_correlation(channels[a], channels[b]);
            corr[a * n + b] = c;
            corr[b * n + a] = c;
        }
    }
    let at = |a: usize, b: usize| corr[a * n + b];

    // Seeded first head, then farthest-first in correlation.
    let mut heads = Vec::with_capacity(k_eff);
    heads.push(rng.random_range(0..n));
    while heads.len() < k_eff {
        let next = (0..n)
            .filter(|u| !heads.contains(u))
            .map(|u| (u, heads.iter().map(|&h| at(u, h)).fold(f64::MIN, f64::max)))
            .fold(None::<(usize, f64)>, |best, (u, c)| match best {
                Some((_, bc)) if bc <= c => best,
                _ => Some((u, c)),
            })
            .map(|(u, _)| u)
            .expect("fewer candidates than clusters");
        heads.push(next);
    }

    let objective_of = |labels: &[usize], heads: &[usize]| -> f64 {
        labels.iter().enumerate().map(|(u, &c)| at(u, heads[c])).sum()
    };

    let mut labels = vec![usize::MAX; n];
    let mut objective = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        let mut new_labels: Vec<usize> = (0..n)
            .map(|u| {
                let mut best = 0;
                for c in 1..k_eff {
                    if at(u, heads[c]) > at(u, heads[best]) {
                        best = c;
                    }
                }
                best
            })
            .collect();
        for (c, &h) in heads.iter().enumerate() {
            new_labels[h] = c;
        }
        let labels_changed = new_labels != labels;
        labels = new_labels;

        let mut heads_changed = false;
        for c in 0..k_eff {
            let members: Vec<usize> = (0..n).filter(|&u| labels[u] == c).collect();
            let score = |m: usize| members.iter().map(|&v| at(m, v)).sum::<f64>();
            let mut best = heads[c];
            let mut best_score = score(best);
            for &m in &members {
                let s = score(m);
                if s > best_score {
                    best = m;
                    best_score = s;
                }
            }
            if best != heads[c] {
                heads[c] = best;
                heads_changed = true;
            }
        }
        objective.push(objective_of(&labels, &heads));
        if !labels_changed && !heads_changed {
            break;
        }
    }

    KMeansResult {
        labels,
        heads,
        iterations,
        objective,
        reduced: k > n,
    }
}

/// One beam of a gNB after clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCluster {
    /// Member user ids, ascending.
    pub members: Vec<usize>,
    /// Member the beam is pointed at (largest channel norm).
    pub steer_user: usize,
    pub centroid_aod: f64,
}

/// Clusters the users attached to `gnb` into at most `k` beams. Beams are
/// returned ordered by pointing angle so beam indices are stable.
pub fn cluster_gnb<R: Rng + ?Sized>(
    channels: &ChannelTable,
    gnb: usize,
    members: &[usize],
    k: usize,
    max_iterations: usize,
    rng: &mut R,
) -> Vec<BeamCluster> {
    let refs: Vec<&ChannelVector> = members.iter().map(|&u| channels.channel(u, gnb)).collect();
    let result = correlation_kmeans(&refs, k, max_iterations, rng);
    let mut beams: Vec<BeamCluster> = (0..result.num_clusters())
        .map(|c| {
            let users: Vec<usize> = members
                .iter()
                .zip(&result.labels)
                .filter(|(_, &l)| l == c)
                .map(|(&u, _)| u)
                .collect();
            let mut steer = users[0];
            let mut steer_norm = channels.channel(steer, gnb).norm_sqr();
            for &u in &users[1..] {
                let nrm = channels.channel(u, gnb).norm_sqr();
                if nrm > steer_norm {
                    steer = u;
                    steer_norm = nrm;
                }
            }
            BeamCluster {
                centroid_aod: channels.geometry(steer, gnb).aod_rad,
                members: users,
                steer_user: steer,
            }
        })
        .collect();
    beams.sort_by(|a, b| {
        a.centroid_aod
            .total_cmp(&b.centroid_aod)
            .then(a.steer_user.cmp(&b.steer_user))
    });
    beams
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntersectionRule {
    /// Users whose two best gNBs are within this many dB.
    Margin(f64),
    /// The `n` users with the smallest gap.
    Closest(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionSet {
    /// Strongest gNB per user by long-term received power.
    pub home: Vec<usize>,
    /// Second-strongest gNB per user (equal to `home` with a single gNB).
    pub runner_up: Vec<usize>,
    /// Gap between best and second-best received power, dB.
    pub gap_db: Vec<f64>,
    /// Intersection users, ascending.
    pub users: Vec<usize>,
    /// Intersection users shared by each gNB, ascending.
    pub per_gnb: Vec<Vec<usize>>,
}

impl IntersectionSet {
    pub fn contains(&self, user: usize) -> bool {
        self.users.binary_search(&user).is_ok()
    }
}

/// Long-term received power proxy: `‖h_{u,j}‖²`.
pub fn find_intersection_users(channels: &ChannelTable, rule: IntersectionRule) -> IntersectionSet {
    let nu = channels.num_users();
    let ng = channels.num_gnbs();
    let mut home = Vec::with_capacity(nu);
    let mut runner_up = Vec::with_capacity(nu);
    let mut gap_db = Vec::with_capacity(nu);
    for u in 0..nu {
        let mut ranked: Vec<(usize, f64)> = (0..ng).map(|j| (j, channels.channel(u, j).norm_sqr())).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        home.push(ranked[0].0);
        if ng > 1 {
            runner_up.push(ranked[1].0);
            gap_db.push(units::linear_to_db(ranked[0].1) - units::linear_to_db(ranked[1].1));
        } else {
            runner_up.push(ranked[0].0);
            gap_db.push(f64::INFINITY);
        }
    }

    let mut users: Vec<usize> = match rule {
        IntersectionRule::Margin(margin) => (0..nu).filter(|&u| gap_db[u] < margin).collect(),
        IntersectionRule::Closest(n) => {
            let mut order: Vec<usize> = (0..nu).filter(|&u| gap_db[u].is_finite()).collect();
            order.sort_by(|&a, &b| gap_db[a].total_cmp(&gap_db[b]).then(a.cmp(&b)));
            order.truncate(n);
            order
        }
    };
    users.sort_unstable();

    let mut per_gnb = vec![Vec::new(); ng];
    for &u in &users {
        per_gnb[home[u]].push(u);
        per_gnb[runner_up[u]].push(u);
    }
    IntersectionSet {
        home,
        runner_up,
        gap_db,
        users,
        per_gnb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pcp(fixed: Option<usize>) -> PcpConfig {
        PcpConfig {
            mean_users_per_cluster: 7.0,
            num_clusters: 2,
            cluster_radius_m: 30.0,
            fixed_total_users: fixed,
        }
    }

    fn los(aod: f64, d: f64, phy: &PhyConfig) -> ChannelVector {
        phy::channel_vector(
            LinkGeometry {
                distance_m: d,
                aod_rad: aod,
            },
            C64::new(1.0, 0.0),
            phy,
        )
    }

    #[test]
    fn topology_is_deterministic_per_seed() {
        let a = draw_topology(&mut ChaCha8Rng::seed_from_u64(5), &pcp(None), 2, 150.0).unwrap();
        let b = draw_topology(&mut ChaCha8Rng::seed_from_u64(5), &pcp(None), 2, 150.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gnb_positions, vec![Point::new(0.0, 0.0), Point::new(150.0, 0.0)]);
    }

    #[test]
    fn users_stay_within_cluster_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let t = draw_topology(&mut rng, &pcp(None), 2, 150.0).unwrap();
            for (u, p) in t.user_positions.iter().enumerate() {
                assert!(p.distance(&t.parents[t.user_parent[u]]) <= 30.0 + 1e-9);
            }
        }
    }

    #[test]
    fn fixed_total_is_honoured() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 4, 9, 16] {
            let t = draw_topology(&mut rng, &pcp(Some(n)), 2, 150.0).unwrap();
            assert_eq!(t.num_users(), n);
        }
    }

    #[test]
    fn zero_fixed_total_errors_after_bounded_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = draw_topology(&mut rng, &pcp(Some(0)), 2, 150.0).unwrap_err();
        assert_eq!(err, Error::EmptyDeployment { attempts: MAX_EMPTY_REDRAWS });
    }

    #[test]
    fn mean_user_count_matches_poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| draw_topology(&mut rng, &pcp(None), 2, 150.0).unwrap().num_users())
            .sum();
        let mean = total as f64 / draws as f64;
        // Var of the sum of two Poisson(7) is 14; zero-total redraws shift the
        // mean by ~14·e^-14, far below the band.
        let band = 3.0 * (14.0f64 / draws as f64).sqrt();
        assert!((mean - 14.0).abs() < band, "mean {mean}, band {band}");
    }

    #[test]
    fn link_geometry_convention() {
        let g = link_geometry(Point::new(0.0, 0.0), Point::new(30.0, 40.0));
        assert!((g.distance_m - 50.0).abs() < 1e-12);
        assert!((g.aod_rad.sin() - 0.8).abs() < 1e-12);
        assert_eq!(link_geometry(Point::new(1.0, 1.0), Point::new(1.0, 1.0)).aod_rad, 0.0);
    }

    /// Best k-medoid objective over every 2-partition.
    fn brute_force_two_partition(chs: &[&ChannelVector]) -> (f64, Vec<usize>) {
        let n = chs.len();
        let mut best = (f64::MIN, Vec::new());
        for mask in 1..(1u32 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|u| ((mask >> u) & 1) as usize).collect();
            let mut total = 0.0;
            for c in 0..2 {
                let members: Vec<usize> = (0..n).filter(|&u| labels[u] == c).collect();
                let score = members
                    .iter()
                    .map(|&m| members.iter().map(|&v| channel_correlation(chs[m], chs[v])).sum::<f64>())
                    .fold(f64::MIN, f64::max);
                total += score;
            }
            if total > best.0 + 1e-12 {
                best = (total, labels);
            }
        }
        best
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.iter().zip(b).all(|(x, y)| (a[0] == *x) == (b[0] == *y))
    }

    #[test]
    fn kmeans_separates_two_angular_groups() {
        let p = PhyConfig::default();
        let aods = [0.0, 0.02, -0.015, 0.01, PI / 4.0, PI / 4.0 + 0.02, PI / 4.0 - 0.01];
        let chs: Vec<ChannelVector> = aods
            .iter()
            .enumerate()
            .map(|(i, &a)| los(a, 20.0 + 10.0 * i as f64, &p))
            .collect();
        let refs: Vec<&ChannelVector> = chs.iter().collect();
        let (_, oracle) = brute_force_two_partition(&refs);
        for seed in 0..20 {
            let res = correlation_kmeans(&refs, 2, 100, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(same_partition(&res.labels, &oracle), "seed {seed}: {:?}", res.labels);
            let first = res.labels[0];
            for (i, &l) in res.labels.iter().enumerate() {
                assert_eq!(l == first, aods[i] < 0.5);
            }
        }
    }

    #[test]
    fn single_cluster_takes_everyone() {
        let p = PhyConfig::default();
        let chs: Vec<ChannelVector> = (0..5).map(|i| los(0.2 * i as f64, 50.0, &p)).collect();
        let refs: Vec<&ChannelVector> = chs.iter().collect();
        let res = correlation_kmeans(&refs, 1, 100, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(res.labels, vec![0; 5]);
    }

    #[test]
    fn colinear_user_joins_its_head() {
        let p = PhyConfig::default();
        // users 0 and 2 share an AoD at different distances
        let chs = [los(0.3, 10.0, &p), los(-0.9, 40.0, &p), los(0.3, 90.0, &p)];
        let refs: Vec<&ChannelVector> = chs.iter().collect();
        assert!((channel_correlation(refs[0], refs[2]) - 1.0).abs() < 1e-12);
        for seed in 0..10 {
            let res = correlation_kmeans(&refs, 2, 100, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(res.labels[0], res.labels[2]);
            assert_ne!(res.labels[0], res.labels[1]);
        }
    }

    #[test]
    fn fewer_users_than_clusters_reduces_k() {
        let p = PhyConfig::default();
        let chs = [los(0.1, 10.0, &p), los(0.8, 10.0, &p)];
        let refs: Vec<&ChannelVector> = chs.iter().collect();
        let res = correlation_kmeans(&refs, 4, 100, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(res.reduced);
        assert_eq!(res.num_clusters(), 2);
    }

    #[test]
    fn kmeans_objective_never_decreases_and_partitions() {
        let p = PhyConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let n = rng.random_range(1..14);
            let k = rng.random_range(1..5);
            let chs: Vec<ChannelVector> = (0..n)
                .map(|_| {
                    phy::channel_vector(
                        LinkGeometry {
                            distance_m: rng.random_range(1.0..150.0),
                            aod_rad: rng.random_range(-1.5..1.5),
                        },
                        phy::draw_complex_gain(&mut rng, 1.0),
                        &p,
                    )
                })
                .collect();
            let refs: Vec<&ChannelVector> = chs.iter().collect();
            let res = correlation_kmeans(&refs, k, 100, &mut rng);
            for w in res.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "{:?}", res.objective);
            }
            let kk = res.num_clusters();
            assert_eq!(kk, k.min(n));
            for c in 0..kk {
                assert!(res.labels.iter().any(|&l| l == c), "empty cluster");
            }
        }
    }

    #[test]
    fn cluster_gnb_partitions_members_and_orders_beams() {
        let p = PhyConfig::default();
        let topo = draw_topology(&mut ChaCha8Rng::seed_from_u64(4), &pcp(Some(9)), 2, 150.0).unwrap();
        let chans = draw_channels(&mut ChaCha8Rng::seed_from_u64(4), &topo, &p);
        let members: Vec<usize> = (0..9).collect();
        let beams = cluster_gnb(&chans, 0, &members, 2, 100, &mut ChaCha8Rng::seed_from_u64(0));
        let mut all: Vec<usize> = beams.iter().flat_map(|b| b.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, members);
        assert!(beams.windows(2).all(|w| w[0].centroid_aod <= w[1].centroid_aod));
        for b in &beams {
            assert!(b.members.contains(&b.steer_user));
        }
    }

    fn two_gnb_table(users: &[Point]) -> ChannelTable {
        let p = PhyConfig::default();
        let topo = Topology {
            gnb_positions: vec![Point::new(0.0, 0.0), Point::new(150.0, 0.0)],
            user_positions: users.to_vec(),
            parents: vec![],
            user_parent: vec![0; users.len()],
            inter_gnb_distance_m: 150.0,
        };
        let mut links = Vec::new();
        let mut geo = Vec::new();
        for u in &topo.user_positions {
            for g in &topo.gnb_positions {
                let lg = link_geometry(*g, *u);
                links.push(phy::channel_vector(lg, C64::new(1.0, 0.0), &p));
                geo.push(lg);
            }
        }
        ChannelTable::new(2, links, geo)
    }

    #[test]
    fn equidistant_user_is_in_intersection() {
        let t = two_gnb_table(&[Point::new(75.0, 20.0), Point::new(10.0, 5.0), Point::new(140.0, 0.0)]);
        let set = find_intersection_users(&t, IntersectionRule::Margin(1.0));
        assert_eq!(set.users, vec![0]);
        assert_eq!(set.per_gnb, vec![vec![0], vec![0]]);
        assert_eq!(set.home[1], 0);
        assert_eq!(set.home[2], 1);
    }

    #[test]
    fn zero_margin_gives_empty_intersection() {
        let t = two_gnb_table(&[Point::new(70.0, 20.0), Point::new(10.0, 5.0)]);
        let set = find_intersection_users(&t, IntersectionRule::Margin(0.0));
        assert!(set.users.is_empty());
    }

    #[test]
    fn closest_rule_picks_requested_count() {
        let t = two_gnb_table(&[
            Point::new(70.0, 20.0),
            Point::new(10.0, 5.0),
            Point::new(80.0, -10.0),
            Point::new(120.0, 0.0),
        ]);
        let set = find_intersection_users(&t, IntersectionRule::Closest(2));
        assert_eq!(set.users, vec![0, 2]);
        for u in set.users.iter() {
            assert_eq!(set.per_gnb.iter().filter(|g| g.contains(u)).count(), 2);
        }
    }
}
