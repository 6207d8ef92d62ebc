//! Wall-clock timing of the transformation on generated nets.

use std::time::{Duration, Instant};

use pn2sc::init::initialize_statechart;
use pn2sc::reduce::{assign_hyperedges, create_top, fixpoint};
use pn2sc::{generate_sp_net, GenSpec, ModelStore, TransformError};
use serde::Serialize;

/// Median timings for one net size, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub seed: u64,
    pub init_ms: f64,
    pub reduce_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    init: Duration,
    reduce: Duration,
}

fn time_once(pn: &ModelStore) -> Result<Sample, TransformError> {
    let mut pn = pn.clone();
    let start = Instant::now();
    let (mut sc, mut trace) = initialize_statechart(&pn)?;
    let initialized = Instant::now();
    fixpoint(&mut pn, &mut sc, &mut trace)?;
    let result = create_top(&pn, &mut sc)?;
    if result.is_success() {
        assign_hyperedges(&mut sc)?;
    }
    let done = Instant::now();
    Ok(Sample {
        init: initialized - start,
        reduce: done - initialized,
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Generates one net per size and times `reps` sequential transformations.
pub fn run(sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>, String> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let doc = generate_sp_net(&GenSpec::new(size, seed)).map_err(|e| e.to_string())?;
        let pn = doc.to_store().map_err(|e| e.to_string())?;
        let mut init = Vec::with_capacity(reps);
        let mut reduce = Vec::with_capacity(reps);
        let mut total = Vec::with_capacity(reps);
        for _ in 0..reps {
            let s = time_once(&pn).map_err(|e| e.to_string())?;
            let ms = |d: Duration| d.as_secs_f64() * 1e3;
            init.push(ms(s.init));
            reduce.push(ms(s.reduce));
            total.push(ms(s.init + s.reduce));
        }
        rows.push(BenchRow {
            size,
            seed,
            init_ms: median(&mut init),
            reduce_ms: median(&mut reduce),
            total_ms: median(&mut total),
        });
    }
    Ok(rows)
}

pub fn table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>10} {:>12} {:>12} {:>12}\n", "size", "init_ms", "reduce_ms", "total_ms");
    for r in rows {
        out.push_str(&format!(
            "{:>10} {:>12.3} {:>12.3} {:>12.3}\n",
            r.size, r.init_ms, r.reduce_ms, r.total_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn rows_per_size() {
        let rows = run(&[10, 50], 3, 1).unwrap();
        assert_eq!(rows.iter().map(|r| r.size).collect::<Vec<_>>(), [10, 50]);
        assert!(rows.iter().all(|r| r.total_ms >= 0.0 && r.seed == 1));
        assert!(table(&rows).lines().count() == 3);
    }
}
