//! SVG depth charts, assembled by string: mean metric per layer, one line
//! per method, log10 value axis clipped at 1e-16.

use thiserror::Error;

use crate::experiment::DepthTrace;
use crate::metrics::RecordStatus;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlotError {
    #[error("no rows match the requested metric/method selection")]
    EmptySelection,
}

/// Which column of the trace to chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    Rod,
    EnergyUnnorm,
    EnergySym,
}

impl PlotMetric {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rod" => Some(PlotMetric::Rod),
            "energy_unnorm" => Some(PlotMetric::EnergyUnnorm),
            "energy_sym" => Some(PlotMetric::EnergySym),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlotMetric::Rod => "rank-one distance",
            PlotMetric::EnergyUnnorm => "Dirichlet energy (unnormalized Laplacian)",
            PlotMetric::EnergySym => "Dirichlet energy (symmetric Laplacian)",
        }
    }
}

/// Values below this are clipped on the log axis.
const VALUE_FLOOR: f64 = 1e-16;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 15] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
];

struct Series {
    name: String,
    truncated: bool,
    /// (layer, mean value) with the value already clipped to the floor.
    points: Vec<(usize, f64)>,
}

/// Render per-method mean curves of one metric to a standalone SVG.
pub fn render_svg(traces: &[DepthTrace], metric: PlotMetric) -> Result<String, PlotError> {
    let series = collect_series(traces, metric);
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::EmptySelection);
    }

    let max_layer = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .max()
        .unwrap()
        .max(1);
    let (mut log_min, mut log_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &series {
        for &(_, v) in &s.points {
            let lv = v.log10();
            log_min = log_min.min(lv);
            log_max = log_max.max(lv);
        }
    }
    let log_min = log_min.floor();
    let log_max = (log_max.ceil()).max(log_min + 1.0);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |layer: usize| MARGIN_LEFT + plot_w * (layer as f64 - 1.0) / (max_layer.max(2) as f64 - 1.0);
    let y_of = |v: f64| {
        let t = (v.log10() - log_min) / (log_max - log_min);
        MARGIN_TOP + plot_h * (1.0 - t)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{} vs depth (mean over seeds)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        metric.label()
    ));

    // y grid lines and tick labels at integer decades
    let mut decade = log_min as i64;
    while decade <= log_max as i64 {
        let y = y_of(10f64.powi(decade as i32));
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{decade}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
        decade += 1;
    }
    // x ticks
    let x_step = (max_layer / 8).max(1);
    let mut layer = 1usize;
    while layer <= max_layer {
        let x = x_of(layer);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{layer}</text>\n",
            MARGIN_TOP + plot_h + 18.0
        ));
        layer += x_step;
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">layer</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    // axes
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n"
    ));

    // polylines + legend
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(l, v)| format!("{:.2},{:.2}", x_of(l), y_of(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_TOP + 16.0 * i as f64 + 10.0;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            lx + 18.0
        ));
        let suffix = if s.truncated { " (truncated)" } else { "" };
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}{}</text>\n",
            lx + 24.0,
            ly + 4.0,
            s.name,
            suffix
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn collect_series(traces: &[DepthTrace], metric: PlotMetric) -> Vec<Series> {
    // preserve first-appearance method order
    let mut order: Vec<crate::conv::MethodId> = Vec::new();
    for t in traces {
        if !order.contains(&t.method) {
            order.push(t.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let group: Vec<&DepthTrace> = traces.iter().filter(|t| t.method == method).collect();
            let max_ok = group.iter().map(|t| t.ok_len()).max().unwrap_or(0);
            let truncated = group
                .iter()
                .any(|t| t.records.iter().any(|r| r.status != RecordStatus::Ok));
            // mean over the seeds still OK at each layer; the curve ends
            // when no seed is OK.
            let mut points = Vec::with_capacity(max_ok);
            for k in 0..max_ok {
                let values: Vec<f64> = group
                    .iter()
                    .filter(|t| t.ok_len() > k)
                    .map(|t| {
                        let r = &t.records[k];
                        match metric {
                            PlotMetric::Rod => r.rod,
                            PlotMetric::EnergyUnnorm => r.energy_unnorm,
                            PlotMetric::EnergySym => r.energy_sym,
                        }
                    })
                    .collect();
                if values.is_empty() {
                    break;
                }
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                points.push((k + 1, mean.max(VALUE_FLOOR)));
            }
            Series {
                name: method.token().to_string(),
                truncated,
                points,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::MethodId;
    use crate::metrics::{MetricRecord, RecordStatus};

    fn trace(method: MethodId, seed: u64, rods: &[f64], tail_status: Option<RecordStatus>) -> DepthTrace {
        let mut records: Vec<MetricRecord> = rods
            .iter()
            .enumerate()
            .map(|(k, &rod)| MetricRecord {
                layer: k + 1,
                state_norm: 1.0,
                energy_unnorm: rod * 0.5,
                energy_sym: rod * 0.25,
                rod,
                status: RecordStatus::Ok,
            })
            .collect();
        if let Some(status) = tail_status {
            records.push(MetricRecord {
                layer: rods.len() + 1,
                state_norm: f64::INFINITY,
                energy_unnorm: f64::NAN,
                energy_sym: f64::NAN,
                rod: f64::NAN,
                status,
            });
        }
        DepthTrace {
            method,
            seed,
            records,
        }
    }

    #[test]
    fn single_method_gives_one_polyline() {
        let t = trace(MethodId::Gcn, 0, &[1.0, 0.5, 0.25], None);
        let svg = render_svg(&[t], PlotMetric::Rod).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("gcn"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn multiple_methods_give_multiple_polylines_with_legend() {
        let traces: Vec<DepthTrace> = MethodId::ALL
            .iter()
            .map(|&m| trace(m, 0, &[1.0, 0.7, 0.2], None))
            .collect();
        let svg = render_svg(&traces, PlotMetric::EnergySym).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 15);
        for m in MethodId::ALL {
            assert!(svg.contains(m.token()), "legend misses {}", m.token());
        }
    }

    #[test]
    fn truncated_trace_is_noted_and_curve_ends_early() {
        let t = trace(MethodId::Gin2, 0, &[1.0, 0.5], Some(RecordStatus::Overflow));
        let svg = render_svg(&[t], PlotMetric::Rod).unwrap();
        assert!(svg.contains("(truncated)"));
        // two OK layers -> two points on the polyline
        let line = svg
            .lines()
            .find(|l| l.starts_with("<polyline"))
            .unwrap();
        assert_eq!(line.matches(',').count(), 2);
    }

    #[test]
    fn empty_selection_is_an_error() {
        assert_eq!(
            render_svg(&[], PlotMetric::Rod),
            Err(PlotError::EmptySelection)
        );
    }

    #[test]
    fn values_are_clipped_at_the_floor() {
        let t = trace(MethodId::Gcn, 0, &[1e-30, 1e-25], None);
        let svg = render_svg(&[t], PlotMetric::Rod).unwrap();
        // axis floor decade present, nothing below it
        assert!(svg.contains("1e-16"));
        assert!(!svg.contains("1e-30"));
    }
}
