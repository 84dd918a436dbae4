//! Scores a hand-made set of predictions, including the zero-denominator
//! cases that make a metric undefined.
//!
//!     cargo run --example metrics

use flakelex::corpus::Label::{self, Flaky as F, NonFlaky as N};
use flakelex::learn::ClassifierKind;
use flakelex::metrics::{auc, confusion, mcc, precision, EvalReport};
use flakelex::table::report_table;

fn main() -> flakelex::Result<()> {
    let truth = [F, F, F, N, N, N, N, F];
    let scores = [0.9, 0.8, 0.4, 0.35, 0.2, 0.6, 0.1, 0.7];
    let preds: Vec<Label> = scores.iter().map(|&s| if s >= 0.5 { F } else { N }).collect();

    let cm = confusion(&preds, &truth)?;
    println!("{cm:?}");
    println!("mcc {:.4}, auc {:.4}", mcc(&cm).value, auc(&scores, &truth)?);

    // A classifier that never says flaky has no defined precision.
    let silent = confusion(&[N; 8], &truth)?;
    let p = precision(&silent);
    println!("always non-flaky: precision {} (undefined: {})", p.value, p.undefined);

    let reports = [
        EvalReport::from_predictions(ClassifierKind::LinearSvm, &preds, &scores, &truth, "hand-made", 0)?,
        EvalReport::from_predictions(ClassifierKind::Perceptron, &[N; 8], &[0.0; 8], &truth, "hand-made", 0)?,
    ];
    print!("\n{}", report_table(&reports, true).to_text());
    println!("\n{}", reports[0].to_json());
    Ok(())
}
