//! Checks shared by the acceptance runner and the integration tests. Every
//! check panics with a message on failure.
#![allow(dead_code)]

pub mod graphs;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frap_core::config::Config;
use frap_core::detection::{monitor, monitor_all, replay_offline, Verdict};
use frap_core::features::{
    extract_features, initial_labels, neighbor_key, pair_key, relabel_rounds, wl_iteration, IndexedGraph, Label,
    LabelMap,
};
use frap_core::ingest::{parse_record, Instance, ProvenanceEdge, TypeTriple};
use frap_core::metrics::{hellinger, kld_symmetric, to_distribution, Distribution, Metric, MetricKind, SparsePoint};
use frap_core::modeling::{build_model, load_model, save_model, select_k, DistanceMatrix, Model};
use frap_core::pipeline::{learn, revise_with_instances, Learned};
use frap_core::synthgen::{builtin, generate_instance, Scenario};
use frap_core::windowing::{WindowGraph, WindowSizer};
use frap_core::FeatureVector;

use graphs::{isomorphic, perturb, random_graph, reference_wl, SmallGraph};

pub const FRESH_SEED: u64 = 4242;

pub fn edge(n: usize, rel: &str, src: (&str, &str), dst: (&str, &str)) -> ProvenanceEdge {
    parse_record(&format!("e{n},{rel},{},{},{},{},{n}", src.0, src.1, dst.0, dst.1)).expect("valid record")
}

pub fn instances(s: &Scenario) -> Vec<Instance> {
    (0..s.instances)
        .map(|i| Instance {
            name: format!("{}-{i:02}", s.name),
            edges: generate_instance(s, i).unwrap(),
        })
        .collect()
}

pub fn table1() -> Scenario {
    builtin("table1").unwrap()
}

pub fn fresh_table1() -> Vec<Instance> {
    let mut s = table1();
    s.seed = FRESH_SEED;
    instances(&s)
}

/// The table1 model under the default configuration, learned once.
pub fn table1_kld() -> &'static Learned {
    static LEARNED: OnceLock<Learned> = OnceLock::new();
    LEARNED.get_or_init(|| learn(&instances(&table1()), &Config::default()).unwrap())
}

fn anomalies(model: &Arc<Model>, inst: &Instance) -> usize {
    monitor(model.clone(), &inst.name, inst.edges.iter().cloned().map(Ok), 1)
        .unwrap()
        .anomalies()
}

/// Criterion 1: the synthetic stand-in for the metric comparison table.
pub fn table_reproduction() {
    let s = table1();
    let train = instances(&s);
    let bad = s.anomalous[0];
    let bad_name = format!("table1-{bad:02}");
    let replay = fresh_table1().swap_remove(bad);

    for kind in [MetricKind::SymmetricKld, MetricKind::Euclidean] {
        let learned = if kind == MetricKind::SymmetricKld {
            table1_kld().clone()
        } else {
            learn(&train, &Config { metric: kind, ..Config::default() }).unwrap()
        };
        let discarded: Vec<&str> = learned.outcome.discarded.iter().map(|d| d.instance_id.as_str()).collect();
        assert_eq!(discarded, [bad_name.as_str()], "{kind}: discarded set");
        let model = Arc::new(learned.outcome.model);
        let n = anomalies(&model, &replay);
        assert!(n >= 1, "{kind}: fresh anomalous replay raised no anomalous verdict");
    }

    let learned = learn(&train, &Config { metric: MetricKind::Hellinger, ..Config::default() }).unwrap();
    let sizes: Vec<usize> = learned.outcome.model.clusters.iter().map(|c| c.members.len()).collect();
    assert_eq!(sizes, [s.instances], "hellinger: cluster sizes");
    assert!(learned.outcome.discarded.is_empty());
    let model = Arc::new(learned.outcome.model);
    assert_eq!(anomalies(&model, &replay), 0, "hellinger: replay should not be flagged");
}

/// Criterion 2: one relabeling round on the six-vertex example graph.
pub fn worked_example() {
    let t = |i: u8| format!("entity:t{i}");
    let (s, v1, v2, v3, v4, tt) = (
        ("s", t(2)),
        ("v1", t(0)),
        ("v2", t(1)),
        ("v3", t(2)),
        ("v4", t(3)),
        ("t", t(3)),
    );
    let e = |n, rel, a: &(&str, String), b: &(&str, String)| edge(n, rel, (a.0, &a.1), (b.0, &b.1));
    let window = WindowGraph::from_edges([
        e(1, "a", &s, &v1),
        e(2, "b", &s, &v2),
        e(3, "b", &s, &v3),
        e(4, "c", &v2, &v1),
        e(5, "d", &v3, &v2),
        e(6, "f", &v1, &v4),
        e(7, "f", &v1, &tt),
    ]);
    let graph = IndexedGraph::new(&window);
    let map = LabelMap::new();
    let initial = initial_labels(&graph, &map);
    let next = wl_iteration(&graph, &initial, true, &map);

    let l = Label;
    let list = |label: u32, entries: &[(u32, &str)]| {
        let entries: Vec<(Label, Option<&str>)> = entries.iter().map(|&(x, r)| (l(x), Some(r))).collect();
        neighbor_key(l(label), &entries, true)
    };
    let expected_lists = [
        (list(0, &[(1, "c"), (2, "a")]), 4),
        (list(0, &[(3, "f"), (3, "f")]), 5),
        (list(1, &[(0, "c")]), 6),
        (list(1, &[(2, "b"), (2, "d")]), 7),
        (list(2, &[]), 8),
        (list(2, &[(0, "a"), (1, "b"), (2, "b")]), 9),
        (list(2, &[(1, "d")]), 10),
        (list(2, &[(2, "b")]), 11),
        (list(3, &[]), 12),
        (list(3, &[(0, "f")]), 13),
    ];
    for (key, id) in &expected_lists {
        assert_eq!(map.get(key), Some(l(*id)), "relabeling map entry {key}");
    }
    for (a, b, id) in [(4, 5, 14), (7, 6, 15), (8, 9, 16), (11, 10, 17), (13, 12, 18)] {
        assert_eq!(map.get(&pair_key(l(a), l(b))), Some(l(id)), "pair ({a}, {b})");
    }
    assert_eq!(map.len(), 19);

    let by_id: BTreeMap<&str, u32> = (0..graph.len()).map(|i| (graph.vertex(i).0.as_str(), next[i].0)).collect();
    let order = ["s", "v1", "v2", "v3", "v4", "t"];
    let got: Vec<u32> = order.iter().map(|id| by_id[id]).collect();
    assert_eq!(got, [16, 14, 15, 17, 18, 18], "final labels");
}

/// Straight-line two-counter rule; `None` when the stream runs out.
fn sizing_oracle(stream: &[(usize, usize, usize)], threshold: usize, cap: usize) -> Option<usize> {
    let mut seen: Vec<(usize, usize, usize)> = Vec::new();
    let mut count = 0;
    let mut quiet = 0;
    for t in stream {
        count += 1;
        if seen.contains(t) {
            quiet += 1;
        } else {
            seen.push(*t);
            quiet = 0;
        }
        if quiet >= threshold || count >= cap {
            return Some(count);
        }
    }
    None
}

/// Criterion 3: window sizing against the oracle on random streams.
pub fn sizing_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..100 {
        let alphabet = rng.random_range(1..=4);
        let len = rng.random_range(0..400);
        let threshold = rng.random_range(1..40);
        let cap = rng.random_range(1..500);
        // a skewed draw, so novel triples keep turning up late in the stream
        let stream: Vec<(usize, usize, usize)> = (0..len)
            .map(|_| {
                let spread = if rng.random_bool(0.1) { alphabet + 3 } else { alphabet };
                (rng.random_range(0..spread), rng.random_range(0..spread), rng.random_range(0..2))
            })
            .collect();
        let expected = sizing_oracle(&stream, threshold, cap);

        let mut sizer = WindowSizer::new(threshold, cap).unwrap();
        let mut declared = None;
        for &(r, a, b) in &stream {
            let triple = TypeTriple::new(format!("r{r}"), format!("entity:s{a}"), format!("activity:p{b}"));
            if let Some(w) = sizer.observe_triple(triple).unwrap() {
                declared = Some(w);
                break;
            }
        }
        assert_eq!(declared, expected, "trial {trial}: declared size");
        assert_eq!(sizer.finish(), expected.unwrap_or(len), "trial {trial}: finish");
    }
}

fn features(edges: &[ProvenanceEdge], map: &LabelMap) -> BTreeMap<Label, u64> {
    extract_features(&WindowGraph::from_edges(edges.iter().cloned()), 4, map, "g", 0).counts
}

fn fresh_features(edges: &[ProvenanceEdge]) -> BTreeMap<Label, u64> {
    features(edges, &LabelMap::new())
}

/// Criterion 4a: vertex order and edge arrival order do not matter.
pub fn wl_order_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for g in 0..50 {
        let graph = random_graph(&mut rng, 8);
        let names: Vec<String> = (0..graph.len()).map(|i| format!("v{i}")).collect();
        let base = fresh_features(&graph.edges(&names));
        for p in 0..20 {
            let mut shuffled = names.clone();
            shuffled.shuffle(&mut rng);
            let mut edges = graph.edges(&shuffled);
            edges.shuffle(&mut rng);
            assert_eq!(fresh_features(&edges), base, "graph {g}, permutation {p}");
        }
    }
}

/// Criterion 4b: renamed copies get the same vector from a shared map.
pub fn wl_isomorphism_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let map = LabelMap::new();
    for g in 0..50 {
        let graph = random_graph(&mut rng, 8);
        let names: Vec<String> = (0..graph.len()).map(|i| format!("v{i}")).collect();
        let renamed: Vec<String> = (0..graph.len())
            .map(|i| format!("x{}-{i}", rng.random::<u32>()))
            .collect();
        let a = features(&graph.edges(&names), &map);
        let b = features(&graph.edges(&renamed), &map);
        assert_eq!(a, b, "graph {g}");
    }
}

/// Criterion 4c: each round refines the partition of the previous one.
pub fn wl_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for g in 0..100 {
        let graph = random_graph(&mut rng, 12);
        let names: Vec<String> = (0..graph.len()).map(|i| format!("v{i}")).collect();
        let window = WindowGraph::from_edges(graph.edges(&names));
        let indexed = IndexedGraph::new(&window);
        let rounds = relabel_rounds(&indexed, 4, &LabelMap::new());
        for r in 1..rounds.len() {
            for u in 0..indexed.len() {
                for v in 0..indexed.len() {
                    if rounds[r][u] == rounds[r][v] {
                        assert_eq!(rounds[r - 1][u], rounds[r - 1][v], "graph {g}: round {r} merged classes");
                    }
                }
            }
        }
    }
}

/// Criterion 4d: pairs the reference test tells apart get different vectors.
/// Pairs it cannot tell apart get equal ones. Returns how many
/// non-isomorphic pairs were distinguished.
pub fn wl_discrimination() -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut distinguished = 0;
    let mut candidates = 0;
    for pair in 0..400 {
        let a = random_graph(&mut rng, 8);
        let b = if pair % 2 == 0 { perturb(&a, &mut rng) } else { random_graph(&mut rng, 8) };
        if isomorphic(&a, &b) {
            continue;
        }
        candidates += 1;
        let reference = reference_wl(&[&a, &b], 4);
        let map = LabelMap::new();
        let fa = features(&a.edges(&a.names()), &map);
        let fb = features(&b.edges(&b.names()), &map);
        if reference[0] != reference[1] {
            distinguished += 1;
            assert_ne!(fa, fb, "pair {pair}: reference distinguishes, vectors agree\n{a:?}\n{b:?}");
        } else {
            assert_eq!(fa, fb, "pair {pair}: reference agrees, vectors differ\n{a:?}\n{b:?}");
        }
    }
    assert!(candidates >= 200, "only {candidates} non-isomorphic pairs drawn");
    assert!(distinguished >= 150, "only {distinguished} pairs distinguished");
    distinguished
}

pub fn wl_suite() {
    wl_order_independence();
    wl_isomorphism_invariance();
    wl_refinement();
    wl_discrimination();
}

fn random_point(rng: &mut ChaCha8Rng) -> SparsePoint {
    let labels = rng.random_range(1..12);
    let mut map = BTreeMap::new();
    for _ in 0..labels {
        map.insert(Label(rng.random_range(0..16)), rng.random_range(1..50) as f64);
    }
    SparsePoint(map)
}

/// Σ (p - q)(ln p - ln q), term by term from probabilities.
fn kld_oracle(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln() + b * (b / a).ln()).sum()
}

/// Criterion 5: metric axioms on random smoothed pairs, plus a hand value.
pub fn metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 1e-4;
    for trial in 0..1000 {
        let u = random_point(&mut rng);
        let v = if trial % 10 == 0 { u.clone() } else { random_point(&mut rng) };
        let support: BTreeSet<Label> = u.labels().chain(v.labels()).collect();
        let p = to_distribution(&u, &support, eps).unwrap();
        let q = to_distribution(&v, &support, eps).unwrap();
        for d in [&p, &q] {
            assert!((d.total() - 1.0).abs() < 1e-9, "trial {trial}: mass {}", d.total());
        }
        let equal = p.probs() == q.probs();

        let k1 = kld_symmetric(&p, &q).unwrap();
        let k2 = kld_symmetric(&q, &p).unwrap();
        assert_eq!(k1.to_bits(), k2.to_bits(), "trial {trial}: kld symmetry");
        assert!(k1.is_finite() && k1 >= 0.0, "trial {trial}: kld {k1}");
        let pv: Vec<f64> = p.probs().values().copied().collect();
        let qv: Vec<f64> = q.probs().values().copied().collect();
        assert!((k1 - kld_oracle(&pv, &qv)).abs() < 1e-9 * (1.0 + k1));

        let h1 = hellinger(&p, &q).unwrap();
        let h2 = hellinger(&q, &p).unwrap();
        assert_eq!(h1.to_bits(), h2.to_bits(), "trial {trial}: hellinger symmetry");
        assert!((0.0..=1.0).contains(&h1), "trial {trial}: hellinger {h1}");

        for kind in [MetricKind::SymmetricKld, MetricKind::Hellinger, MetricKind::Euclidean] {
            let m = Metric::new(kind, eps).unwrap();
            let (a, b) = (m.between(&u, &v), m.between(&v, &u));
            assert_eq!(a.to_bits(), b.to_bits(), "trial {trial}: {kind} symmetry");
            assert!(a >= 0.0 && a.is_finite());
            let same = if kind == MetricKind::Euclidean { u == v } else { equal };
            if same {
                assert!(a <= 1e-12, "trial {trial}: {kind} self distance {a}");
            } else {
                assert!(a > 1e-12, "trial {trial}: {kind} distinct pair at {a}");
            }
        }
        if equal {
            assert!(k1 <= 1e-12 && h1 <= 1e-12);
        } else {
            assert!(k1 > 1e-12 && h1 > 1e-12);
        }
    }

    let probs = |xs: [f64; 2]| Distribution::from_probs(xs.iter().enumerate().map(|(i, &x)| (Label(i as u32), x)).collect()).unwrap();
    let got = kld_symmetric(&probs([0.5, 0.5]), &probs([0.25, 0.75])).unwrap();
    let oracle = kld_oracle(&[0.5, 0.5], &[0.25, 0.75]);
    assert!((got - oracle).abs() < 1e-12, "{got} vs oracle {oracle}");
    assert!((got - 0.27465).abs() < 1e-4, "hand value {got}");
}

/// Points in the plane around `blocks` well separated centers; returns the
/// distance matrix and each point's block.
pub fn block_matrix(rng: &mut ChaCha8Rng, blocks: usize) -> (DistanceMatrix, Vec<usize>) {
    let mut centers: Vec<(f64, f64)> = Vec::new();
    while centers.len() < blocks {
        let c = (rng.random_range(0.0..30.0), rng.random_range(0.0..30.0));
        if centers.iter().all(|d| ((c.0 - d.0).powi(2) + (c.1 - d.1).powi(2)).sqrt() >= 4.0) {
            centers.push(c);
        }
    }
    let mut points = Vec::new();
    let mut block_of = Vec::new();
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..rng.random_range(2..=5) {
            points.push((c.0 + rng.random_range(-0.05..0.05), c.1 + rng.random_range(-0.05..0.05)));
            block_of.push(b);
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(rng);
    let points: Vec<(f64, f64)> = order.iter().map(|&i| points[i]).collect();
    let block_of: Vec<usize> = order.iter().map(|&i| block_of[i]).collect();
    let matrix = points
        .iter()
        .map(|a| points.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    (matrix, block_of)
}

/// Components of the graph joining entries closer than `threshold`.
pub fn components(matrix: &DistanceMatrix, threshold: f64) -> Vec<usize> {
    let n = matrix.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if comp[j] == usize::MAX && matrix[i][j] < threshold {
                    comp[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn fv(id: &str, counts: &[(u32, u64)]) -> FeatureVector {
    FeatureVector::from_counts(id, counts.iter().map(|&(l, c)| (Label(l), c)))
}

/// Criterion 6: block recovery, the single-cluster mean, outlier discard.
pub fn clustering_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for blocks in 1..=3 {
        for trial in 0..30 {
            let (matrix, truth) = block_matrix(&mut rng, blocks);
            let oracle = components(&matrix, 1.0);
            assert!(same_partition(&oracle, &truth), "oracle disagrees with construction");
            let sel = select_k(&matrix, None);
            assert_eq!(sel.k, blocks, "B={blocks} trial {trial}");
            assert!(same_partition(&sel.groups, &truth), "B={blocks} trial {trial}: groups");
        }
    }

    let params = Config::default().model_params(10).unwrap();
    let vs: Vec<FeatureVector> = (0..5u64)
        .map(|i| fv(&format!("n{i}"), &[(0, 100 + i), (1, 50 + 2 * i), (2, 20), (3, 7 + i % 2)]))
        .collect();
    let mut oracle: BTreeMap<Label, f64> = BTreeMap::new();
    for v in &vs {
        for (&l, &c) in &v.counts {
            *oracle.entry(l).or_default() += c as f64 / vs.len() as f64;
        }
    }
    let out = build_model(vs, params.clone(), LabelMap::new()).unwrap();
    assert_eq!(out.model.clusters.len(), 1, "one cluster expected");
    let centroid = &out.model.clusters[0].centroid;
    for (l, m) in &oracle {
        assert!((centroid.get(*l) - m).abs() < 1e-9, "label {l}: {} vs {m}", centroid.get(*l));
    }
    assert_eq!(centroid.labels().count(), oracle.len());

    let mut vs: Vec<FeatureVector> = (0..3).map(|i| fv(&format!("n{i}"), &[(0, 4), (1, 1)])).collect();
    vs.push(fv("odd", &[(7, 5), (8, 2)]));
    let out = build_model(vs, params, LabelMap::new()).unwrap();
    assert_eq!(out.model.vectors.len(), 3);
    assert_eq!(out.discarded.len(), 1);
    assert_eq!(out.discarded[0].instance_id, "odd");
}

fn lines(verdicts: &[Verdict]) -> Vec<String> {
    verdicts.iter().map(|v| format!("{v} {v:?}")).collect()
}

fn prefix(inst: &Instance, n: usize) -> Instance {
    Instance {
        name: inst.name.clone(),
        edges: inst.edges[..n.min(inst.edges.len())].to_vec(),
    }
}

/// Criterion 7: streaming equals offline, per-instance locality, and a
/// persisted model scores identically.
pub fn determinism_and_locality() {
    let learned = table1_kld();
    let w = learned.window_size;
    let fresh = fresh_table1();
    let bad = table1().anomalous[0];

    let mut stepped = learned.outcome.model.clone();
    stepped.params.step = 7;
    for model in [Arc::new(learned.outcome.model.clone()), Arc::new(stepped)] {
        for inst in [prefix(&fresh[bad], w + 150), prefix(&fresh[3], w + 150)] {
            let streamed = monitor(model.clone(), &inst.name, inst.edges.iter().cloned().map(Ok), 1).unwrap();
            let offline = replay_offline(&model, &inst.name, &inst.edges).unwrap();
            assert!(!offline.is_empty());
            assert_eq!(lines(&streamed.verdicts), lines(&offline), "{} step {}", inst.name, model.params.step);
        }
    }

    let model = Arc::new(learned.outcome.model.clone());
    let set: Vec<Instance> = [1, bad, 4, 9].iter().map(|&i| prefix(&fresh[i], w + 40)).collect();
    let by_name = |reports: Vec<frap_core::detection::MonitorReport>| -> BTreeMap<String, Vec<String>> {
        reports.into_iter().map(|r| (r.instance_id, lines(&r.verdicts))).collect()
    };
    let base = by_name(monitor_all(model.clone(), &set, 1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let mut permuted = set.clone();
        permuted.shuffle(&mut rng);
        assert_eq!(by_name(monitor_all(model.clone(), &permuted, 1).unwrap()), base);
    }
    for inst in &set {
        let alone = monitor(model.clone(), &inst.name, inst.edges.iter().cloned().map(Ok), 1).unwrap();
        assert_eq!(lines(&alone.verdicts), base[&inst.name]);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.frap");
    save_model(&learned.outcome.model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    for inst in [prefix(&fresh[bad], w + 60), prefix(&fresh[0], w + 60)] {
        let before = replay_offline(&learned.outcome.model, &inst.name, &inst.edges).unwrap();
        let after = replay_offline(&loaded, &inst.name, &inst.edges).unwrap();
        assert_eq!(before, after, "{}", inst.name);
    }
}

/// Criterion 8: confirmed copies of a new motif stop being flagged, and
/// windows that were Normal stay Normal.
pub fn revision_end_to_end() {
    let learned = table1_kld();
    let model = &learned.outcome.model;
    let w = learned.window_size;
    let train = instances(&table1());
    let bad = table1().anomalous[0];
    let motif = prefix(&train[bad], w);

    let first = |m: &Model, inst: &Instance| replay_offline(m, &inst.name, &inst.edges).unwrap()[0].clone();
    assert!(first(model, &motif).outcome.is_anomalous(), "motif should start anomalous");

    let fresh = fresh_table1();
    let mut fixtures = Vec::new();
    for (i, inst) in fresh.iter().enumerate() {
        if i == bad {
            continue;
        }
        for start in [0, 150, 400] {
            let inst = Instance {
                name: format!("{}@{start}", inst.name),
                edges: inst.edges[start..start + w].to_vec(),
            };
            if !first(model, &inst).outcome.is_anomalous() {
                fixtures.push(inst);
            }
        }
    }
    assert!(fixtures.len() >= 10, "only {} normal fixtures", fixtures.len());

    let confirmed: Vec<Instance> = (0..3)
        .map(|i| Instance { name: format!("confirmed{i}"), edges: motif.edges.clone() })
        .collect();
    let revised = revise_with_instances(model, &confirmed).unwrap().model;
    assert_eq!(revised.clusters.len(), model.clusters.len() + 1);
    let after = first(&revised, &motif);
    assert!(!after.outcome.is_anomalous(), "motif still anomalous: {after}");
    for inst in &fixtures {
        let v = first(&revised, inst);
        assert!(!v.outcome.is_anomalous(), "{} flipped to anomalous: {v}", inst.name);
    }
}

pub fn random_graphs(seed: u64, count: usize, max_vertices: usize) -> Vec<SmallGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, max_vertices)).collect()
}
