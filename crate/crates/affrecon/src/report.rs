//! Text and JSON reports: per-region depth metrics, baseline comparisons, reconstruction
//! diagnostics and pose proposals.

use std::fmt::Write as _;

use affrecon_core::affordance::{Affordance, AffordanceMask};
use affrecon_core::depth::DepthImage;
use affrecon_core::proposals::Pose;
use affrecon_core::recon::{evaluate_depth, DepthMetrics, InstanceResult};
use affrecon_core::Pixel;
use serde::{Deserialize, Serialize};

/// Metrics of one evaluation region; `None` when no pixel of the region could be compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub region: String,
    pub metrics: Option<DepthMetrics>,
}

/// Evaluation regions in table order: each affordance class, then every object pixel.
pub fn evaluation_regions(mask: &AffordanceMask) -> Vec<(String, Vec<Pixel>)> {
    let labels = mask.labels();
    let mut out: Vec<(String, Vec<Pixel>)> = [Affordance::Contain, Affordance::WrapGrasp, Affordance::Support]
        .into_iter()
        .map(|a| {
            let px = labels.pixels().filter(|&p| *labels.get(p) == a.label()).collect();
            (a.name().to_string(), px)
        })
        .collect();
    out.push(("all".to_string(), labels.pixels().filter(|&p| mask.is_object(p)).collect()));
    out
}

pub fn evaluate_regions(pred: &DepthImage, gt: &DepthImage, mask: &AffordanceMask) -> Vec<RegionMetrics> {
    evaluation_regions(mask)
        .into_iter()
        .map(|(region, px)| RegionMetrics {
            region,
            metrics: evaluate_depth(pred, gt, &px).ok(),
        })
        .collect()
}

pub const TABLE_HEADER: [&str; 7] = ["region", "RMSE", "Rel", "MAE", "δ1.05", "δ1.10", "δ1.25"];

fn metric_cells(m: Option<&DepthMetrics>) -> [String; 6] {
    match m {
        Some(m) => [
            format!("{:.3}", m.rmse),
            format!("{:.3}", m.rel),
            format!("{:.3}", m.mae),
            format!("{:.2}", m.delta_105),
            format!("{:.2}", m.delta_110),
            format!("{:.2}", m.delta_125),
        ],
        None => std::array::from_fn(|_| "n/a".to_string()),
    }
}

fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Fixed-width metrics table, one row per region.
pub fn metrics_table(rows: &[RegionMetrics]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.region.clone()];
            cells.extend(metric_cells(r.metrics.as_ref()));
            cells
        })
        .collect();
    render(&TABLE_HEADER, &body)
}

/// Side-by-side table of two methods over the same regions, with a `Δ` row (first minus
/// second) wherever both have metrics.
pub fn comparison_table(first: (&str, &[RegionMetrics]), second: (&str, &[RegionMetrics])) -> String {
    let mut header = vec!["region", "method"];
    header.extend(&TABLE_HEADER[1..]);
    let mut body = Vec::new();
    for (a, b) in first.1.iter().zip(second.1) {
        for (name, m) in [(first.0, a), (second.0, b)] {
            let mut cells = vec![m.region.clone(), name.to_string()];
            cells.extend(metric_cells(m.metrics.as_ref()));
            body.push(cells);
        }
        if let (Some(x), Some(y)) = (&a.metrics, &b.metrics) {
            let d = [
                x.rmse - y.rmse,
                x.rel - y.rel,
                x.mae - y.mae,
                x.delta_105 - y.delta_105,
                x.delta_110 - y.delta_110,
                x.delta_125 - y.delta_125,
            ];
            let mut cells = vec![a.region.clone(), "Δ".to_string()];
            cells.extend(d.iter().enumerate().map(|(i, v)| {
                if i < 3 {
                    format!("{v:+.3}")
                } else {
                    format!("{v:+.2}")
                }
            }));
            body.push(cells);
        }
    }
    render(&header, &body)
}

/// A pose as nine row-major rotation entries and a translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub kind: String,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn new(kind: &str, pose: &Pose) -> Self {
        PoseRecord {
            kind: kind.to_string(),
            rotation: pose.rotation.to_row_major(),
            translation: pose.translation.to_array(),
        }
    }
}

/// One line: kind, then the 9 rotation and 3 translation numbers.
pub fn pose_line(r: &PoseRecord) -> String {
    let mut s = r.kind.clone();
    for v in r.rotation.iter().chain(&r.translation) {
        let _ = write!(s, " {v:.9}");
    }
    s
}

/// Per-instance diagnostics record.
pub fn diagnostics_json(results: &[InstanceResult]) -> serde_json::Value {
    let instances: Vec<serde_json::Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            serde_json::json!({
                "instance": i,
                "plan": r.plan,
                "steps": r.steps,
                "failed_pixels": r.failed.len(),
                "table_normal": r.table_normal,
            })
        })
        .collect();
    serde_json::json!({ "instances": instances })
}
