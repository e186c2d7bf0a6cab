//! Text renderings of simulator output. Both formats are deterministic
//! functions of the input rows; diffing two runs byte for byte is the
//! cheapest reproducibility check we have.

use crate::simulate::VarianceReport;
use crate::sweep::SweepRow;

/// Column order is part of the output contract; keep in sync with
/// `SweepRow` field order.
pub const SWEEP_CSV_HEADER: &str = "sigma,horizon,sigma_eff,sigma_tau,se_sigma_tau,sigma_a,se_sigma_a,sigma_s,se_sigma_s,sigma_total,se_sigma_total,residual,se_residual,ratio,se_ratio,snr,se_snr";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sigma,
            r.horizon,
            r.sigma_eff,
            r.sigma_tau,
            r.se_sigma_tau,
            r.sigma_a,
            r.se_sigma_a,
            r.sigma_s,
            r.se_sigma_s,
            r.sigma_total,
            r.se_sigma_total,
            r.residual,
            r.se_residual,
            r.ratio,
            r.se_ratio,
            r.snr,
            r.se_snr,
        ));
    }
    out
}

pub fn sweep_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("sweep rows serialize");
    s.push('\n');
    s
}

pub fn report_json(report: &VarianceReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
