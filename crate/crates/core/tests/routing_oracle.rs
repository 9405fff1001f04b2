//! Route discovery over ideal links must install breadth-first shortest
//! hop counts: with uniform per-hop delay the first request copy reaching
//! any node travelled a shortest path, and the reply pins it.

mod support;

use support::{bfs_distances, random_connected_graph, IdealMesh, TestRng};
use wbbn_sim::types::NodeId;

#[test]
fn line_discovery_matches_bfs() {
    let adjacency = random_connected_graph(2, 0, &mut TestRng::new(3));
    let mut mesh = IdealMesh::new(adjacency);
    mesh.send(0, 1);
    mesh.run(10.0);
    assert_eq!(mesh.delivered.len(), 1);
    assert_eq!(mesh.delivered[0].hops, 1);
}

#[test]
fn discovered_hop_counts_equal_bfs_on_random_graphs() {
    let mut rng = TestRng::new(0xBEEF);
    let mut graphs = 0;
    let mut checked_routes = 0;
    while graphs < 60 {
        let n = 4 + rng.below(17) as u32; // 4..=20 nodes
        let extra = rng.below(u64::from(n)) as u32;
        let adjacency = random_connected_graph(n, extra, &mut rng);
        let orig = rng.below(u64::from(n)) as u32;
        let mut target = rng.below(u64::from(n)) as u32;
        if target == orig {
            target = (target + 1) % n;
        }
        let dist_from_orig = bfs_distances(&adjacency, orig);
        let expected = dist_from_orig[target as usize].expect("graph is connected");

        let mesh_adjacency = adjacency.clone();
        let mut mesh = IdealMesh::new(adjacency);
        mesh.send(orig, target);
        mesh.run(10.0);

        assert_eq!(mesh.delivered.len(), 1, "graph {graphs}: packet must arrive");
        assert_eq!(
            mesh.delivered[0].hops, expected,
            "graph {graphs}: delivered hops != bfs distance"
        );
        let route = mesh.nodes[orig as usize]
            .route_to(NodeId(target), mesh.delivered[0].created_t)
            .expect("originator must hold a route");
        assert_eq!(route.hop_count, expected, "graph {graphs}: installed route != bfs");
        checked_routes += 1;

        // Reverse routes: the target sees the full-graph distance; other
        // nodes see shortest paths that avoid the target, because the
        // target consumes the flood instead of rebroadcasting it.
        let target_entry = mesh.nodes[target as usize].route_to(NodeId(orig), 0.0).unwrap();
        assert_eq!(target_entry.hop_count, expected, "graph {graphs}: target reverse route");
        let mut without_target = mesh_adjacency.clone();
        without_target[target as usize].clear();
        for set in without_target.iter_mut() {
            set.remove(&target);
        }
        let detour = bfs_distances(&without_target, orig);
        for (v, d) in detour.iter().enumerate() {
            if v as u32 == orig || v as u32 == target {
                continue;
            }
            let Some(d) = d else { continue };
            if let Some(entry) = mesh.nodes[v].route_to(NodeId(orig), 0.0) {
                assert_eq!(
                    entry.hop_count, *d,
                    "graph {graphs}: reverse route at n{v} != bfs-without-target"
                );
                checked_routes += 1;
            }
        }
        graphs += 1;
    }
    assert!(graphs >= 50);
    assert!(checked_routes > graphs, "reverse routes should have been checked too");
}

#[test]
fn path_accumulation_matches_position_distance() {
    // Fixed line 0-1-2-3-4: after discovery from 0 to 4, every node's
    // installed hop counts observe the position distance along the path.
    let mut adjacency = vec![std::collections::BTreeSet::new(); 5];
    for i in 0..4u32 {
        adjacency[i as usize].insert(i + 1);
        adjacency[(i + 1) as usize].insert(i);
    }
    let mut mesh = IdealMesh::new(adjacency);
    mesh.send(0, 4);
    mesh.run(10.0);
    assert_eq!(mesh.delivered.len(), 1);
    for holder in 1..5u32 {
        let entry = mesh.nodes[holder as usize].route_to(NodeId(0), 0.0).unwrap();
        assert_eq!(entry.hop_count, holder);
    }
    for downstream in 1..5u32 {
        let entry = mesh.nodes[0].route_to(NodeId(downstream), 0.0).unwrap();
        assert_eq!(entry.hop_count, downstream);
    }
}
