//! Fixed-width plain-text summary for `audit`. Human-facing only; the JSON
//! report is the machine contract.

use pigou_core::report::{round_half_even, ValuationReport};

pub fn render(report: &ValuationReport, flag_share: f64) -> String {
    let dp = usize::from(report.policy.rounding_dp.min(9));
    let name_w = report
        .channels
        .iter()
        .map(|c| c.channel.len())
        .chain(report.failures.iter().map(|f| f.channel.len()))
        .chain(std::iter::once("bundle_total".len()))
        .max()
        .unwrap_or(12)
        .max(12);

    let mut out = String::new();
    out.push_str("intersectional leakage audit\n");
    out.push_str(&format!(
        "rows: {}   seed: {}   mode: {}   currency: {}   lambda: {}   c_p: {}\n",
        report.row_count,
        report.seed,
        report.mode,
        report.policy.currency,
        report.policy.lambda,
        report.policy.c_p,
    ));
    for warning in &report.warnings {
        out.push_str(&format!("warning: {warning}\n"));
    }
    out.push('\n');

    out.push_str(&format!(
        "{:<name_w$}  {:>8}  {:>5}  {:>10}  {:>10}  {:>12}  {:>12}  flag\n",
        "channel", "samples", "bins", "mi_bits", "floor_bits", "surcharge", "total",
    ));
    let mut flagged = false;
    for ch in &report.channels {
        let flag = ch.total > 0.0 && ch.surcharge > flag_share * ch.total;
        flagged |= flag;
        out.push_str(&format!(
            "{:<name_w$}  {:>8}  {:>5}  {:>10.6}  {:>10.6}  {:>12.dp$}  {:>12.dp$}  {}\n",
            ch.channel,
            ch.sample_count,
            ch.bin_count,
            ch.mi_reported_bits,
            ch.permutation_floor_bits,
            round_half_even(ch.surcharge, report.policy.rounding_dp),
            round_half_even(ch.total, report.policy.rounding_dp),
            if flag { "*" } else { "" },
        ));
    }
    for failure in &report.failures {
        out.push_str(&format!(
            "{:<name_w$}  failed: {} ({})\n",
            failure.channel, failure.code, failure.message
        ));
    }
    out.push_str(&format!(
        "{:<name_w$}  {:>8}  {:>5}  {:>10}  {:>10}  {:>12}  {:>12.dp$}\n",
        "bundle_total",
        "",
        "",
        "",
        "",
        "",
        round_half_even(report.bundle_total, report.policy.rounding_dp),
    ));

    if let Some(inc) = &report.incremental {
        out.push('\n');
        out.push_str("incremental disclosure\n");
        out.push_str(&format!(
            "{:>4}  {:<name_w$}  {:>12}  {:>12}  {:>12}\n",
            "step", "channel", "cond_mi_bits", "step_total", "cumulative",
        ));
        for step in &inc.steps {
            out.push_str(&format!(
                "{:>4}  {:<name_w$}  {:>12.6}  {:>12.dp$}  {:>12.dp$}\n",
                step.step,
                step.channel,
                step.conditional_mi_bits,
                round_half_even(step.step_total, report.policy.rounding_dp),
                round_half_even(step.cumulative_total, report.policy.rounding_dp),
            ));
        }
    }

    if let Some(sweep) = &report.sweep {
        out.push('\n');
        out.push_str("lambda sweep (bundle totals)\n");
        for (lambda, total) in sweep.lambda_grid.iter().zip(&sweep.bundle_totals) {
            out.push_str(&format!(
                "  lambda {:>10.4}  ->  {:>12.dp$}\n",
                lambda,
                round_half_even(*total, report.policy.rounding_dp),
            ));
        }
    }

    if flagged {
        out.push('\n');
        out.push_str(&format!(
            "* surcharge exceeds {:.0}% of the channel's total price\n",
            flag_share * 100.0
        ));
    }
    out
}
