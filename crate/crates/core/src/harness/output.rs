//! CSV rows and JSON summaries of study reports.

use std::io::Write;

use serde::Serialize;

use super::study::StudyReport;
use crate::error::Result;

pub const CSV_HEADER: &str =
    "scheme,noise,n,M,k,h,q,err_vel_maxL2,se,err_weakH1,err_P,err_R,pathwise_p95,samples,flagged";

/// One row per resolution and moment order. Spectral rows report `n = N`
/// and `h = L / N`.
pub fn write_csv(report: &StudyReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &report.reports {
        for (qi, q) in report.q_list.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.resolution.kind.name(),
                report.noise,
                r.size(report.n_modes),
                r.resolution.steps,
                r.k,
                r.h,
                q,
                r.velocity[qi].value,
                r.velocity[qi].se,
                r.weak_h1[qi].value,
                r.pressure_p[qi].value,
                r.pressure_r[qi].value,
                r.pathwise.p95,
                r.samples,
                r.flagged,
            )?;
        }
    }
    Ok(())
}

pub fn csv_string(report: &StudyReport) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

#[derive(Serialize)]
struct Summary<'a> {
    passed: bool,
    #[serde(flatten)]
    report: &'a StudyReport,
}

/// Pretty JSON with the fits, checks and per-resolution aggregates.
pub fn json_string(report: &StudyReport) -> Result<String> {
    let s = serde_json::to_string_pretty(&Summary {
        passed: report.passed(),
        report,
    })
    .map_err(|e| crate::error::Error::Experiment(format!("json encoding: {e}")))?;
    Ok(s + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{estimate_errors, ExperimentConfig};

    #[test]
    fn csv_has_one_row_per_resolution_and_q() {
        let mut cfg = ExperimentConfig::default();
        cfg.model.t = 0.1;
        cfg.m_list = vec![4];
        cfg.n_list = vec![];
        cfg.m_ref = 16;
        cfg.n_modes = 8;
        cfg.samples = 3;
        let rep = estimate_errors(&cfg).unwrap();
        let csv = csv_string(&rep).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + cfg.q_list.len());
        for (line, q) in lines[1..].iter().zip(&cfg.q_list) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 15);
            assert_eq!(&f[..4], &["standard", "affine", "8", "4"]);
            assert_eq!(f[6].parse::<f64>().unwrap(), *q);
            assert_eq!(f[13], "3");
        }
        let json: serde_json::Value = serde_json::from_str(&json_string(&rep).unwrap()).unwrap();
        assert_eq!(json["study"], "run");
        assert!(json["checks"].as_array().unwrap().len() >= 3);
        assert_eq!(json["reports"][0]["samples"], 3);
    }
}
