//! Distances and travel times, either straight-line in the unit square or
//! along a weighted road graph. Both modes use a constant vehicle speed.

mod graph;

use std::collections::HashMap;
use std::sync::Arc;

pub use graph::{Edge, GraphError, RoadGraph, ShortestPath};

use crate::domain::{NodeId, Place, Position};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelEstimate {
    pub distance: f64,
    pub travel_time_s: f64,
}

impl TravelEstimate {
    fn at_speed(distance: f64, speed: f64) -> Self {
        Self { distance, travel_time_s: distance / speed }
    }
}

pub fn euclidean_estimate(a: &Position, b: &Position, speed: f64) -> TravelEstimate {
    debug_assert!(speed > 0.0);
    TravelEstimate::at_speed(a.distance_to(b), speed)
}

pub fn shortest_path_estimate(
    g: &RoadGraph,
    from: NodeId,
    to: NodeId,
    speed: f64,
) -> Result<TravelEstimate, GraphError> {
    debug_assert!(speed > 0.0);
    Ok(TravelEstimate::at_speed(g.shortest_path(from, to)?.distance, speed))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MobilityError {
    #[error("place has no road-graph node")]
    MissingNode,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
enum Geometry {
    UnitSquare,
    Road {
        graph: Arc<RoadGraph>,
        // distance from every node to each cached target node
        to_target: HashMap<NodeId, Arc<Vec<f64>>>,
    },
}

/// Travel context handed to station evaluators. Contains only public map
/// information, never another station's state.
#[derive(Debug, Clone)]
pub struct Arena {
    geometry: Geometry,
    speed: f64,
}

impl Arena {
    pub fn unit_square(speed: f64) -> Self {
        Self { geometry: Geometry::UnitSquare, speed }
    }

    /// Road-graph arena with shortest-path distances towards `targets`
    /// (normally the station nodes) precomputed.
    pub fn road_graph(graph: Arc<RoadGraph>, speed: f64, targets: &[NodeId]) -> Result<Self, GraphError> {
        let mut to_target = HashMap::new();
        for &t in targets {
            if let std::collections::hash_map::Entry::Vacant(e) = to_target.entry(t) {
                e.insert(Arc::new(graph.distances_to(t)?));
            }
        }
        Ok(Self { geometry: Geometry::Road { graph, to_target }, speed })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn graph(&self) -> Option<&RoadGraph> {
        match &self.geometry {
            Geometry::Road { graph, .. } => Some(graph),
            Geometry::UnitSquare => None,
        }
    }

    pub fn estimate(&self, from: &Place, to: &Place) -> Result<TravelEstimate, MobilityError> {
        match &self.geometry {
            Geometry::UnitSquare => Ok(euclidean_estimate(&from.position, &to.position, self.speed)),
            Geometry::Road { graph, to_target } => {
                let (a, b) = (from.node.ok_or(MobilityError::MissingNode)?, to.node.ok_or(MobilityError::MissingNode)?);
                if let (Some(table), Some(i)) = (to_target.get(&b), graph.dense_index(a)) {
                    let d = table[i];
                    if d.is_infinite() {
                        return Err(GraphError::Unreachable { from: a, to: b }.into());
                    }
                    return Ok(TravelEstimate::at_speed(d, self.speed));
                }
                Ok(shortest_path_estimate(graph, a, b, self.speed)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_examples() {
        let o = Position { x: 0.0, y: 0.0 };
        assert_eq!(euclidean_estimate(&o, &o, 0.02), TravelEstimate { distance: 0.0, travel_time_s: 0.0 });
        let d = euclidean_estimate(&o, &Position { x: 1.0, y: 1.0 }, 0.02);
        assert!((d.distance - std::f64::consts::SQRT_2).abs() < 1e-15);
        let t = euclidean_estimate(&o, &Position { x: 0.3, y: 0.4 }, 0.02);
        assert!((t.distance - 0.5).abs() < 1e-12);
        assert!((t.travel_time_s - 25.0).abs() < 1e-9);
    }

    #[test]
    fn graph_arena_uses_cached_tables() {
        let g = Arc::new(RoadGraph::parse("N 0 0 0\nN 1 100 0\nN 2 200 0\nE 0 1 100\nE 1 2 100\n").unwrap());
        let arena = Arena::road_graph(g.clone(), 10.0, &[2]).unwrap();
        let at = |n: NodeId| Place::at_node(n, g.position(n).unwrap());
        let cached = arena.estimate(&at(0), &at(2)).unwrap();
        assert_eq!(cached, TravelEstimate { distance: 200.0, travel_time_s: 20.0 });
        let direct = arena.estimate(&at(2), &at(1)).unwrap();
        assert_eq!(direct, TravelEstimate { distance: 100.0, travel_time_s: 10.0 });
        assert_eq!(
            arena.estimate(&Place::point(Position { x: 0.0, y: 0.0 }), &at(1)),
            Err(MobilityError::MissingNode)
        );
    }
}
