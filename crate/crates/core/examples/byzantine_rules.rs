//! Robust aggregation rules on two small instances: symmetric ±1 votes, and
//! honest clients next to one huge outlier.
//!
//! cargo run --example byzantine_rules

use fedmask::aggregators::{aggregate, AggregatorSpec};
use fedmask::ParamVector;

fn main() -> fedmask::Result<()> {
    let rules = [
        AggregatorSpec::Mean,
        AggregatorSpec::Krum { delta: 0.2 },
        AggregatorSpec::CoordMedian,
        AggregatorSpec::TrimmedMean { zeta: 0.2 },
        AggregatorSpec::GeometricMedian {
            max_iters: 1000,
            tol: 1e-9,
        },
        AggregatorSpec::Bulyan {
            inner: Box::new(AggregatorSpec::Krum { delta: 0.0 }),
            d: 1,
        },
        AggregatorSpec::CenteredClip { tau: 1.0, iters: 5 },
    ];
    let votes = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]
        .iter()
        .map(|&v| ParamVector::new(vec![v]))
        .collect::<fedmask::Result<Vec<_>>>()?;
    let mut outlier = (0..8)
        .map(|i| ParamVector::new(vec![0.1 * i as f64, 1.0 - 0.1 * i as f64]))
        .collect::<fedmask::Result<Vec<_>>>()?;
    outlier.push(ParamVector::new(vec![1e6, -1e6])?);

    println!(
        "{:<18} {:>10} {:>26}",
        "rule", "±1 votes", "with a 1e6 outlier"
    );
    for rule in &rules {
        let v = aggregate(rule, &votes)?;
        let o = aggregate(rule, &outlier)?;
        println!(
            "{:<18} {:>10.4} {:>12.4} {:>12.4}",
            rule.name(),
            v.get(0),
            o.get(0),
            o.get(1)
        );
    }
    Ok(())
}
