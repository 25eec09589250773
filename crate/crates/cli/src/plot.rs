use crate::record::RunRecord;
use plotters::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// What the two figures show, derived from CSV rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    /// Per `c`: `(n, worst protocol_rounds)` ascending in `n`.
    pub rounds: BTreeMap<usize, Vec<(usize, usize)>>,
    /// `max_attempts_per_epoch` value to number of runs.
    pub attempts: BTreeMap<usize, usize>,
}

pub fn plot_data(rows: &[RunRecord]) -> PlotData {
    let mut worst: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut attempts = BTreeMap::new();
    for r in rows {
        let slot = worst.entry((r.c, r.n)).or_default();
        *slot = (*slot).max(r.protocol_rounds);
        *attempts.entry(r.max_attempts_per_epoch).or_default() += 1;
    }
    let mut rounds: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for ((c, n), v) in worst {
        rounds.entry(c).or_default().push((n, v));
    }
    PlotData { rounds, attempts }
}

fn draw_err<E: std::fmt::Display>(e: E) -> String {
    format!("plotting failed: {e}")
}

/// Writes `rounds_vs_n.svg` and `attempts_hist.svg` into `dir`.
pub fn plot(rows: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>, String> {
    if rows.is_empty() {
        return Err("no rows to plot".into());
    }
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let data = plot_data(rows);
    let rounds_path = dir.join("rounds_vs_n.svg");
    let hist_path = dir.join("attempts_hist.svg");

    let max_n = data.rounds.values().flatten().map(|p| p.0).max().unwrap_or(1);
    let max_r = data.rounds.values().flatten().map(|p| p.1).max().unwrap_or(1);
    {
        let root = SVGBackend::new(&rounds_path, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("protocol rounds vs n (worst adversary)", ("sans-serif", 20))
            .margin(20)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(0..max_n + 1, 0..max_r + max_r / 10 + 1)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("n").y_desc("protocol rounds").draw().map_err(draw_err)?;
        for (i, (c, points)) in data.rounds.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(format!("c = {c}"))
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
            chart
                .draw_series(points.iter().map(|&p| Circle::new(p, 4, color.filled())))
                .map_err(draw_err)?;
        }
        chart.configure_series_labels().background_style(WHITE).border_style(BLACK).draw().map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    {
        let max_a = data.attempts.keys().copied().max().unwrap_or(0);
        let max_count = data.attempts.values().copied().max().unwrap_or(1);
        let root = SVGBackend::new(&hist_path, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("max attempts per epoch", ("sans-serif", 20))
            .margin(20)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d((0..max_a + 1).into_segmented(), 0..max_count + 1)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("attempts").y_desc("runs").draw().map_err(draw_err)?;
        chart
            .draw_series(
                Histogram::vertical(&chart)
                    .style(BLUE.filled())
                    .margin(4)
                    .data(data.attempts.iter().map(|(&a, &count)| (a, count))),
            )
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(vec![rounds_path, hist_path])
}
