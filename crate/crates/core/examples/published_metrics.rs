//! Recomputes precision, recall and F1 for 34 published per-branch counts
//! and their unweighted averages.

use fruitlet_map::eval::{aggregate, CountReport};
use serde::Deserialize;

#[derive(Deserialize)]
struct Table {
    rows: Vec<CountReport>,
}

fn main() {
    let table: Table = serde_json::from_str(include_str!("../tests/data/published_counts.json")).unwrap();
    println!("  GT  pred   TP  FP  FN   P      R      F1     PE%");
    let reports: Vec<CountReport> = table
        .rows
        .iter()
        .map(|r| {
            let c = CountReport::from_counts(r.tp, r.fp, r.fn_);
            println!(
                "{:4} {:5} {:4} {:3} {:3}  {:.3}  {:.3}  {:.3}  {:+6.1}",
                c.ground_truth,
                c.predicted,
                c.tp,
                c.fp,
                c.fn_,
                c.precision.unwrap(),
                c.recall.unwrap(),
                c.f1.unwrap(),
                c.percentage_error().unwrap()
            );
            c
        })
        .collect();
    let s = aggregate(&reports).unwrap();
    println!(
        "mean precision {:.3}, recall {:.3}, F1 {:.3}; mean PE {:+.2}%, mean |PE| {:.2}%",
        s.mean_precision.unwrap(),
        s.mean_recall.unwrap(),
        s.mean_f1.unwrap(),
        s.mean_percentage_error.unwrap(),
        s.mean_absolute_percentage_error.unwrap()
    );
}
