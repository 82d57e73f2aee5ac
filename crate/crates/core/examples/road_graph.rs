//! Loads a road graph, finds shortest paths and the travel estimates the
//! stations use.

use std::path::Path;
use std::sync::Arc;

use evcharge::domain::Place;
use evcharge::mobility::{Arena, RoadGraph};

const SMALL: &str = "\
# id x y
N 1 0 0
N 2 100 0
N 3 100 100
N 4 0 100
E 1 2 100
E 2 3 100
E 3 4 100
E 4 1 150
E 1 3 180 D
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = RoadGraph::parse(SMALL)?;
    for (from, to) in [(1, 3), (3, 1), (4, 2)] {
        let p = g.shortest_path(from, to)?;
        println!("{from} -> {to}: {:.0} m via {:?}", p.distance, p.nodes);
    }
    println!("diameter {:.0} m", g.diameter());

    let city = Arc::new(RoadGraph::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_city.graph"))?);
    println!("synthetic city: {} nodes, {} edges, diameter {:.0} m", city.len(), city.edges().len(), city.diameter());
    let arena = Arena::road_graph(city.clone(), 10.0, &[45])?;
    let from = Place::at_node(0, city.position(0).unwrap());
    let to = Place::at_node(45, city.position(45).unwrap());
    let est = arena.estimate(&from, &to)?;
    println!("node 0 -> station node 45: {:.0} m, {:.0} s at 10 m/s", est.distance, est.travel_time_s);
    Ok(())
}
