//! Network graph, candidate multipath discovery, and the default
//! seven-router two-branch scenario topology.

use std::collections::BTreeMap;

use crate::sim::{Link, NodeId};
use crate::{Error, Result};

/// Immutable network graph. Config links are full duplex: both directions
/// are installed with the same capacity and propagation delay.
#[derive(Debug, Clone)]
pub struct Topology {
    names: Vec<String>,
    pub source: NodeId,
    pub destination: NodeId,
    /// Router adjacent to the source; performs the traffic split.
    pub ingress: NodeId,
    links: BTreeMap<(NodeId, NodeId), Link>,
    /// Explicit candidate paths (router hops only); overrides discovery.
    pub candidate_paths: Option<Vec<Vec<NodeId>>>,
}

/// One directed link description used during construction.
pub struct LinkSpec<'a> {
    pub from: &'a str,
    pub to: &'a str,
    pub capacity_bps: f64,
    pub prop_delay_s: f64,
}

impl Topology {
    /// Build a topology from node names and duplex link specs. Node ids are
    /// assigned in first-mention order over `names`.
    pub fn from_parts(
        names: Vec<String>,
        source: &str,
        destination: &str,
        ingress: &str,
        links: &[LinkSpec<'_>],
        candidate_paths: Option<Vec<Vec<String>>>,
    ) -> Result<Topology> {
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), NodeId(i as u32)).is_some() {
                return Err(Error::Config(format!("topology.nodes: duplicate node {name:?}")));
            }
        }
        let lookup = |name: &str, field: &str| -> Result<NodeId> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("{field}: unknown node {name:?}")))
        };
        let source = lookup(source, "topology.source")?;
        let destination = lookup(destination, "topology.destination")?;
        let ingress = lookup(ingress, "topology.ingress")?;
        if source == destination {
            return Err(Error::Config("topology: source equals destination".into()));
        }
        let mut link_map = BTreeMap::new();
        for spec in links {
            let from = lookup(spec.from, "topology.links.from")?;
            let to = lookup(spec.to, "topology.links.to")?;
            if from == to {
                return Err(Error::Config(format!("topology.links: self-loop at {:?}", spec.from)));
            }
            for (a, b) in [(from, to), (to, from)] {
                let link = Link::new(a, b, spec.capacity_bps, spec.prop_delay_s)?;
                if link_map.insert((a, b), link).is_some() {
                    return Err(Error::Config(format!(
                        "topology.links: duplicate link {:?} <-> {:?}",
                        spec.from, spec.to
                    )));
                }
            }
        }
        let topo = Topology {
            names,
            source,
            destination,
            ingress,
            links: link_map,
            candidate_paths: None,
        };
        if topo.link(topo.source, topo.ingress).is_none() {
            return Err(Error::Config(
                "topology.ingress: no link between source and ingress".into(),
            ));
        }
        let candidate_paths = match candidate_paths {
            None => None,
            Some(paths) => {
                let mut resolved = Vec::new();
                for (i, hops) in paths.iter().enumerate() {
                    let hops: Vec<NodeId> = hops
                        .iter()
                        .map(|h| lookup(h, "topology.paths"))
                        .collect::<Result<_>>()?;
                    topo.validate_path(&hops)
                        .map_err(|e| Error::Config(format!("topology.paths[{i}]: {e}")))?;
                    resolved.push(hops);
                }
                Some(resolved)
            }
        };
        Ok(Topology {
            candidate_paths,
            ..topo
        })
    }

    fn validate_path(&self, hops: &[NodeId]) -> std::result::Result<(), String> {
        if hops.is_empty() {
            return Err("empty path".into());
        }
        if hops[0] != self.ingress {
            return Err(format!(
                "path must start at the ingress router {:?}",
                self.node_name(self.ingress)
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &h in hops {
            if h == self.source || h == self.destination {
                return Err("path hops must be routers".into());
            }
            if !seen.insert(h) {
                return Err(format!("repeated hop {:?}", self.node_name(h)));
            }
        }
        let full = self.full_node_sequence(hops);
        for w in full.windows(2) {
            if self.link(w[0], w[1]).is_none() {
                return Err(format!(
                    "no link {:?} -> {:?}",
                    self.node_name(w[0]),
                    self.node_name(w[1])
                ));
            }
        }
        Ok(())
    }

    /// source + hops + destination.
    pub fn full_node_sequence(&self, hops: &[NodeId]) -> Vec<NodeId> {
        let mut seq = Vec::with_capacity(hops.len() + 2);
        seq.push(self.source);
        seq.extend_from_slice(hops);
        seq.push(self.destination);
        seq
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name).map(|i| NodeId(i as u32))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn link(&self, from: NodeId, to: NodeId) -> Option<&Link> {
        self.links.get(&(from, to))
    }

    pub fn out_links(&self, node: NodeId) -> impl Iterator<Item = &Link> {
        self.links
            .range((node, NodeId(0))..=(node, NodeId(u32::MAX)))
            .map(|(_, l)| l)
    }

    /// All nodes that are neither the source nor the destination.
    pub fn router_ids(&self) -> Vec<NodeId> {
        (0..self.names.len() as u32)
            .map(NodeId)
            .filter(|&n| n != self.source && n != self.destination)
            .collect()
    }

    fn name_seq(&self, hops: &[NodeId]) -> Vec<&str> {
        hops.iter().map(|&h| self.node_name(h)).collect()
    }

    /// Up to `k` simple source-to-destination paths (returned as router hop
    /// lists): the shortest path first, then iteratively the remaining path
    /// sharing the fewest links with those already chosen, shorter and
    /// lexicographically smaller sequences winning ties. Deterministic for a
    /// fixed graph.
    pub fn discover_paths(&self, k: usize) -> Result<Vec<Vec<NodeId>>> {
        assert!(k >= 1);
        let mut all = Vec::new();
        let mut stack = vec![self.source];
        self.enumerate_paths(self.source, &mut stack, &mut all);
        if all.is_empty() {
            return Err(Error::NoPath(
                self.node_name(self.source).to_string(),
                self.node_name(self.destination).to_string(),
            ));
        }
        let mut candidates: Vec<Vec<NodeId>> = all;
        candidates.sort_by_key(|p| (p.len(), self.name_seq(p)));
        let mut chosen: Vec<Vec<NodeId>> = vec![candidates.remove(0)];
        let mut chosen_links: std::collections::BTreeSet<(NodeId, NodeId)> =
            path_links(&chosen[0]).into_iter().collect();
        while chosen.len() < k && !candidates.is_empty() {
            let best = candidates
                .iter()
                .enumerate()
                .min_by_key(|(_, p)| {
                    let shared = path_links(p)
                        .into_iter()
                        .filter(|l| chosen_links.contains(l))
                        .count();
                    (shared, p.len(), self.name_seq(p))
                })
                .map(|(i, _)| i)
                .unwrap();
            let next = candidates.remove(best);
            chosen_links.extend(path_links(&next));
            chosen.push(next);
        }
        // Strip the source/destination endpoints down to router hops.
        Ok(chosen
            .into_iter()
            .map(|p| p[1..p.len() - 1].to_vec())
            .collect())
    }

    fn enumerate_paths(&self, at: NodeId, stack: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        const PATH_CAP: usize = 4096;
        if at == self.destination {
            out.push(stack.clone());
            return;
        }
        if out.len() >= PATH_CAP {
            return;
        }
        let next: Vec<NodeId> = self.out_links(at).map(|l| l.to).collect();
        for n in next {
            if n == self.source || stack.contains(&n) {
                continue;
            }
            stack.push(n);
            self.enumerate_paths(n, stack, out);
            stack.pop();
        }
    }
}

fn path_links(full_path: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    full_path.windows(2).map(|w| (w[0], w[1])).collect()
}

/// The default scenario topology: one source-destination pair, seven
/// routers, every link 4.5 Mbps. The ingress router2 splits onto two
/// branches (router0-router1-router5 and router3-router4-router6), so
/// degrading router1 congests exactly one path.
pub fn default_topology() -> Topology {
    let names: Vec<String> = [
        "source", "router0", "router1", "router2", "router3", "router4", "router5", "router6",
        "destination",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let link = |from, to| LinkSpec {
        from,
        to,
        capacity_bps: 4.5e6,
        prop_delay_s: 0.0,
    };
    Topology::from_parts(
        names,
        "source",
        "destination",
        "router2",
        &[
            link("source", "router2"),
            link("router2", "router0"),
            link("router0", "router1"),
            link("router1", "router5"),
            link("router5", "destination"),
            link("router2", "router3"),
            link("router3", "router4"),
            link("router4", "router6"),
            link("router6", "destination"),
        ],
        None,
    )
    .expect("default topology is valid")
}
