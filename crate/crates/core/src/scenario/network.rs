//! Grid-city road network and free-flow shortest-path routing.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::error::{config_err, Error, Result};

pub type NodeId = u32;

/// Planar point in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x_km: f64,
    pub y_km: f64,
}

impl Node {
    pub fn point(&self) -> Point {
        Point::new(self.x_km, self.y_km)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub length_km: f64,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
}

const STREAM_NETWORK: u64 = 1;

pub fn generate_network(config: &ScenarioConfig) -> Result<NetworkGraph> {
    config.validate()?;
    let cols = config.grid_cols;
    let rows = config.grid_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_NETWORK);

    let nodes: Vec<Node> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| Node {
            id: r * cols + c,
            x_km: c as f64 * config.spacing_km,
            y_km: r as f64 * config.spacing_km,
        })
        .collect();

    let mut links = Vec::with_capacity(4 * nodes.len());
    let mut push_pair = |a: NodeId, b: NodeId, rng: &mut ChaCha8Rng| {
        // Both directions share one circuity draw so the grid stays symmetric.
        let extra = if config.link_circuity > 0.0 {
            rng.random::<f64>() * config.link_circuity
        } else {
            0.0
        };
        let length_km = config.spacing_km * (1.0 + extra);
        for (from, to) in [(a, b), (b, a)] {
            links.push(Link {
                from,
                to,
                length_km,
                speed_kmh: config.free_flow_speed_kmh,
            });
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                push_pair(id, id + 1, &mut rng);
            }
            if r + 1 < rows {
                push_pair(id, id + cols, &mut rng);
            }
        }
    }
    Ok(NetworkGraph { nodes, links })
}

impl NetworkGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn point(&self, node: NodeId) -> Point {
        self.nodes[node as usize].point()
    }

    /// Node whose coordinates match `p` within `tol` km.
    pub fn node_at(&self, p: Point, tol: f64) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| (n.x_km - p.x).abs() <= tol && (n.y_km - p.y).abs() <= tol)
            .map(|n| n.id)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (idx, l) in self.links.iter().enumerate() {
            adj[l.from as usize].push(idx);
        }
        adj
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return true;
        }
        let reach = |forward: bool| {
            let mut adj = vec![Vec::new(); n];
            for l in &self.links {
                let (a, b) = if forward { (l.from, l.to) } else { (l.to, l.from) };
                adj[a as usize].push(b as usize);
            }
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(Error::Input(format!("node ids must be dense, found {} at {i}", n.id)));
            }
        }
        let mut coords: Vec<(f64, f64)> = self.nodes.iter().map(|n| (n.x_km, n.y_km)).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        if coords.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("duplicate node coordinates".into()));
        }
        for l in &self.links {
            let (Some(a), Some(b)) = (self.nodes.get(l.from as usize), self.nodes.get(l.to as usize))
            else {
                return Err(Error::Input(format!("link {}->{} references a missing node", l.from, l.to)));
            };
            if l.length_km + 1e-9 < a.point().distance(&b.point()) {
                return Err(Error::Input(format!("link {}->{} shorter than its chord", l.from, l.to)));
            }
            if l.speed_kmh <= 0.0 {
                return Err(Error::Input(format!("link {}->{} has non-positive speed", l.from, l.to)));
            }
        }
        if !self.is_strongly_connected() {
            return Err(Error::Input("network is not strongly connected".into()));
        }
        Ok(())
    }

    pub fn routing_table(&self) -> RoutingTable {
        RoutingTable::build(self)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest distances (km) with the free-flow travel time (s)
/// along each chosen path.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    n: usize,
    dist_km: Vec<f64>,
    time_s: Vec<f64>,
}

impl RoutingTable {
    pub fn build(network: &NetworkGraph) -> Self {
        let n = network.node_count();
        let adj = network.adjacency();
        let mut dist_km = vec![f64::INFINITY; n * n];
        let mut time_s = vec![f64::INFINITY; n * n];
        for src in 0..n {
            let row = src * n;
            dist_km[row + src] = 0.0;
            time_s[row + src] = 0.0;
            let mut heap = BinaryHeap::from([HeapEntry { dist: 0.0, node: src }]);
            while let Some(HeapEntry { dist, node }) = heap.pop() {
                if dist > dist_km[row + node] {
                    continue;
                }
                for &li in &adj[node] {
                    let link = &network.links[li];
                    let to = link.to as usize;
                    let nd = dist + link.length_km;
                    if nd < dist_km[row + to] {
                        dist_km[row + to] = nd;
                        time_s[row + to] = time_s[row + node] + link.length_km / link.speed_kmh * 3600.0;
                        heap.push(HeapEntry { dist: nd, node: to });
                    }
                }
            }
        }
        RoutingTable { n, dist_km, time_s }
    }

    pub fn distance_km(&self, from: NodeId, to: NodeId) -> f64 {
        self.dist_km[from as usize * self.n + to as usize]
    }

    pub fn travel_time_s(&self, from: NodeId, to: NodeId) -> f64 {
        self.time_s[from as usize * self.n + to as usize]
    }

    pub fn is_reachable(&self, from: NodeId, to: NodeId) -> bool {
        self.distance_km(from, to).is_finite()
    }
}

pub(crate) fn check_grid(config: &ScenarioConfig) -> Result<()> {
    if config.grid_cols < 2 || config.grid_rows < 2 {
        return Err(config_err(format!(
            "grid must be at least 2x2, got {}x{}",
            config.grid_cols, config.grid_rows
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(cols: u32, rows: u32) -> ScenarioConfig {
        ScenarioConfig {
            grid_cols: cols,
            grid_rows: rows,
            spacing_km: 1.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn two_by_two_grid() {
        let net = generate_network(&grid(2, 2)).unwrap();
        assert_eq!(net.nodes.len(), 4);
        assert_eq!(net.links.len(), 8);
        assert!(net.links.iter().all(|l| l.length_km == 1.0));
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(matches!(generate_network(&grid(1, 5)), Err(Error::Config(_))));
    }

    #[test]
    fn ten_by_ten_is_strongly_connected() {
        let net = generate_network(&grid(10, 10)).unwrap();
        assert!(net.is_strongly_connected());
        net.validate().unwrap();
    }

    #[test]
    fn circuity_is_deterministic_and_never_shortens_links() {
        let cfg = ScenarioConfig {
            link_circuity: 0.3,
            ..grid(6, 5)
        };
        let a = generate_network(&cfg).unwrap();
        let b = generate_network(&cfg).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        a.validate().unwrap();
    }

    #[test]
    fn manhattan_distances_on_unit_grid() {
        let net = generate_network(&grid(4, 3)).unwrap();
        let rt = net.routing_table();
        for a in 0..12u32 {
            for b in 0..12u32 {
                let (ax, ay) = (a % 4, a / 4);
                let (bx, by) = (b % 4, b / 4);
                let manhattan = ax.abs_diff(bx) + ay.abs_diff(by);
                assert_eq!(rt.distance_km(a, b), manhattan as f64);
                assert!((rt.travel_time_s(a, b) - manhattan as f64 / 40.0 * 3600.0).abs() < 1e-9);
            }
        }
    }
}
