//! Build a labelled dataset from a telemetry-driven sweep, pick forest
//! hyper-parameters by cross-validation, and report held-out quality.

use netaware::harness::{make_dataset, BandwidthPlan, ComputeProfile, Harness, LatencyModel, SweepSpec};
use netaware::slalib::{evaluate, grid_search, split_dataset, train_forest, ForestConfig};

fn main() -> netaware::Result<()> {
    // a faster edge so that all three tiers appear
    let compute = ComputeProfile {
        edge: LatencyModel::Uniform {
            low_ms: 0.5,
            high_ms: 15.0,
        },
        cloud: LatencyModel::Constant { ms: 2.0 },
        ..ComputeProfile::reference()
    };
    let spec = SweepSpec {
        bandwidth: BandwidthPlan::Sampled { count: 400 },
        fixed_rtt_ms: None,
        compute,
        seed: 3,
        ..Default::default()
    };
    let harness = Harness::new(spec)?;
    let runs = harness.run()?.results;
    let data = make_dataset(&runs, &harness.spec().compute);
    let (train, test) = split_dataset(&data, 0.8, 3)?;
    let mut tiers = [0usize; 3];
    for r in &data.records {
        tiers[r.label.index()] += 1;
    }
    println!(
        "{} records ({} train / {} test), tiers SLA1/2/3 = {:?}",
        data.len(),
        train.len(),
        test.len(),
        tiers
    );

    let grid: Vec<ForestConfig> = [(25, None), (25, Some(6)), (60, None)]
        .into_iter()
        .map(|(n_trees, max_depth)| ForestConfig {
            n_trees,
            max_depth,
            seed: 3,
            ..Default::default()
        })
        .collect();
    let (best, points) = grid_search(&train, &grid, 4)?;
    for p in &points {
        println!(
            "cv trees={:<3} depth={:<5} macro-F1 {:.3}",
            p.config.n_trees,
            format!("{:?}", p.config.max_depth),
            p.mean_macro_f1
        );
    }
    let forest = train_forest(&train, &best)?;
    let report = evaluate(&forest, &test.records)?;
    println!(
        "held-out accuracy {:.3}, macro-F1 {:.3}",
        report.accuracy, report.macro_f1
    );
    for f in report.feature_importance.iter().take(4) {
        println!("  {:<15} {:.3}", f.feature, f.importance);
    }
    Ok(())
}
