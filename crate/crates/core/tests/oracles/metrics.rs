//! Metrics computed straight from (truth, prediction) lists, no matrix.

/// Binary MCC from the textbook TP/TN/FP/FN formula; `pos` is the positive class.
pub fn binary_mcc<L: PartialEq>(pairs: &[(L, L)], pos: &L) -> f64 {
    let mut tp = 0.0f64;
    let mut tn = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for (t, p) in pairs {
        match (t == pos, p == pos) {
            (true, true) => tp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fneg += 1.0,
        }
    }
    let den = (tp + fp) * (tp + fneg) * (tn + fp) * (tn + fneg);
    if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fneg) / den.sqrt()
    }
}

/// Per-class F1 from counts over the list; classes absent from both sides skipped.
pub fn macro_f1<L: PartialEq>(pairs: &[(L, L)], classes: &[L]) -> f64 {
    let mut scores = Vec::new();
    for c in classes {
        let tp = pairs.iter().filter(|(t, p)| t == c && p == c).count() as f64;
        let in_truth = pairs.iter().filter(|(t, _)| t == c).count() as f64;
        let in_pred = pairs.iter().filter(|(_, p)| p == c).count() as f64;
        if in_truth == 0.0 && in_pred == 0.0 {
            continue;
        }
        // F1 = 2TP / (|truth| + |pred|)
        scores.push(2.0 * tp / (in_truth + in_pred));
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}
