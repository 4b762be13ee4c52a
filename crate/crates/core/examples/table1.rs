//! Learns the `table1` scenario under each metric and replays fresh streams.
//!
//! cargo run --release -p frap-core --example table1

use std::sync::Arc;
use std::time::Instant;

use frap_core::config::Config;
use frap_core::detection::monitor;
use frap_core::ingest::Instance;
use frap_core::metrics::MetricKind;
use frap_core::pipeline::learn;
use frap_core::synthgen::{builtin, generate_instance, Scenario};

fn instances(s: &Scenario) -> Vec<Instance> {
    (0..s.instances)
        .map(|i| Instance {
            name: format!("{}-{i:02}", s.name),
            edges: generate_instance(s, i).unwrap(),
        })
        .collect()
}

fn main() {
    let scenario = match std::env::args().nth(1) {
        Some(path) => Scenario::load(path).unwrap(),
        None => builtin("table1").unwrap(),
    };
    let train = instances(&scenario);
    let mut fresh = scenario.clone();
    fresh.seed += 1000;
    let replay = instances(&fresh);

    for kind in [MetricKind::SymmetricKld, MetricKind::Euclidean, MetricKind::Hellinger] {
        let started = Instant::now();
        let slack = std::env::var("SLACK").ok().and_then(|s| s.parse().ok()).unwrap_or(1.0);
        let config = Config { metric: kind, slack, ..Config::default() };
        let learned = match learn(&train, &config) {
            Ok(l) => l,
            Err(e) => {
                println!("{kind}: learning failed: {e}");
                continue;
            }
        };
        let model = Arc::new(learned.outcome.model);
        let discarded: Vec<&str> = learned.outcome.discarded.iter().map(|d| d.instance_id.as_str()).collect();
        println!(
            "{kind}: W={} first-phase K'={} clusters={:?} radii={:?} discarded={discarded:?}",
            learned.window_size,
            learned.outcome.first_phase_k,
            model.clusters.iter().map(|c| c.members.len()).collect::<Vec<_>>(),
            model.clusters.iter().map(|c| c.radius).collect::<Vec<_>>(),
        );
        for inst in &replay {
            let report = monitor(model.clone(), &inst.name, inst.edges.iter().cloned().map(Ok), 1).unwrap();
            let max_d = report.verdicts.iter().map(|v| v.outcome.distance()).fold(0.0, f64::max);
            let reclustered = report
                .verdicts
                .iter()
                .filter(|v| matches!(v.outcome, frap_core::detection::Outcome::Normal { reclustered: true, .. }))
                .count();
            println!(
                "  {}: {} windows, {} anomalous, {} reclustered, max distance {:.4}",
                inst.name,
                report.verdicts.len(),
                report.anomalies(),
                reclustered,
                max_d
            );
        }
        println!("  ({:.1}s)", started.elapsed().as_secs_f64());
    }
}
