//! CSV, SVG and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::analysis::SweepResult;
use crate::ensemble::EnsembleTrajectory;

pub const AVERAGED_HEADER: &str = "t_us,rho11,rho22,rho33,re_rho12,im_rho12,abs_avg_rho12,im_rho13,abs_avg_rho13";
pub const PER_GROUP_HEADER: &str = "t_us,delta_krad_per_us,re_rho12,im_rho12,rho22,rho33";

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn num(out: &mut String, x: f64) {
    write!(out, "{x:.12e}").unwrap();
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, *v);
    }
    out.push('\n');
}

pub fn averaged_csv(tr: &EnsembleTrajectory) -> String {
    let mut out = String::with_capacity(64 * (tr.len() + 1));
    out.push_str(AVERAGED_HEADER);
    out.push('\n');
    for (t, s) in tr.times.iter().zip(&tr.averaged) {
        row(
            &mut out,
            &[*t, s.rho11, s.rho22, s.rho33, s.re_rho12, s.im_rho12, s.abs_avg_rho12, s.im_rho13, s.abs_avg_rho13],
        );
    }
    out
}

/// Long-format per-group table, or `None` when groups were not kept.
pub fn per_group_csv(tr: &EnsembleTrajectory) -> Option<String> {
    let per_group = tr.per_group.as_ref()?;
    let mut out = String::new();
    out.push_str(PER_GROUP_HEADER);
    out.push('\n');
    for (k, t) in tr.times.iter().enumerate() {
        for (g, traj) in tr.groups.iter().zip(per_group) {
            let rho = &traj.states[k];
            let r12 = rho.rho12();
            row(&mut out, &[*t, g.delta * 1e-3, r12.re, r12.im, rho.population(1), rho.population(2)]);
        }
    }
    Some(out)
}

pub fn sweep_csv(s: &SweepResult) -> String {
    let mut out = String::from("parameter,objective\n");
    for (v, o) in s.values.iter().zip(&s.objectives) {
        row(&mut out, &[*v, *o]);
    }
    out
}

const W: f64 = 800.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 50.0;

struct Trace<'a> {
    name: &'a str,
    color: &'a str,
    values: Vec<f64>,
}

fn panel(svg: &mut String, top: f64, times: &[f64], traces: &[Trace], title: &str) {
    let (t0, t1) = (times[0], *times.last().unwrap());
    let ymax = traces
        .iter()
        .flat_map(|t| t.values.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |t: f64| MARGIN + (W - 2.0 * MARGIN) * if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    let y = |v: f64| top + PANEL_H - PANEL_H * v / ymax;
    writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{top}" width="{}" height="{PANEL_H}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN
    )
    .unwrap();
    writeln!(svg, r#"<text x="{MARGIN}" y="{}" font-size="12">{title} (max {ymax:.3e})</text>"#, top - 6.0).unwrap();
    for (i, tr) in traces.iter().enumerate() {
        let pts: Vec<String> = times.iter().zip(&tr.values).map(|(t, v)| format!("{:.2},{:.2}", x(*t), y(*v))).collect();
        writeln!(svg, r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#, tr.color, pts.join(" ")).unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
            W - MARGIN - 110.0,
            top + 14.0 + 13.0 * i as f64,
            tr.color,
            tr.name
        )
        .unwrap();
    }
}

/// Populations in one panel, coherence magnitudes in another.
pub fn trajectory_svg(tr: &EnsembleTrajectory) -> String {
    let h = 2.0 * PANEL_H + 3.0 * MARGIN;
    let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{h}">"#);
    svg.push('\n');
    if !tr.is_empty() {
        let col = |f: fn(&crate::ensemble::AveragedSample) -> f64| tr.averaged.iter().map(f).collect::<Vec<_>>();
        let pops = [
            Trace { name: "rho11", color: "#1f77b4", values: col(|s| s.rho11) },
            Trace { name: "rho22", color: "#d62728", values: col(|s| s.rho22) },
            Trace { name: "rho33", color: "#2ca02c", values: col(|s| s.rho33) },
        ];
        let cohs = [
            Trace { name: "|<rho12>|", color: "#9467bd", values: col(|s| s.abs_avg_rho12) },
            Trace { name: "|<Im rho13>|", color: "#ff7f0e", values: col(|s| s.im_rho13.abs()) },
        ];
        panel(&mut svg, MARGIN, &tr.times, &pops, "populations");
        panel(&mut svg, 2.0 * MARGIN + PANEL_H, &tr.times, &cohs, "coherences");
        writeln!(svg, r#"<text x="{}" y="{}" font-size="12">t (us)</text>"#, W / 2.0, h - 10.0).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
