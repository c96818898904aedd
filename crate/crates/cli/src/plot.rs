//! Minimal SVG line plots and heat maps rendered from result CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::output::OutDir;
use crate::CliError;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LinePlot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

fn svg_open(out: &mut String, title: &str, extra: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12"{extra}>"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
}

impl LinePlot {
    pub fn render(&self) -> Result<String, CliError> {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|p| !self.log_y || p.1 > 0.0)
        };
        let (x0, x1) = range(pts().map(|p| p.0)).ok_or_else(|| CliError::Config("nothing to plot".into()))?;
        let (mut y0, mut y1) =
            range(pts().map(|p| ty(p.1))).ok_or_else(|| CliError::Config("nothing to plot".into()))?;
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil().max(y0 + 1.0);
        }
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (ty(y) - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        svg_open(&mut s, &self.title, "");
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let x = x0 + (x1 - x0) * i as f64 / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(x),
                TOP + ph + 18.0,
                trim(x)
            );
        }
        let ticks: Vec<f64> = if self.log_y {
            (y0 as i64..=y1 as i64).map(|e| e as f64).collect()
        } else {
            (0..=5).map(|i| y0 + (y1 - y0) * i as f64 / 5.0).collect()
        };
        for t in ticks {
            let py = TOP + ph - (t - y0) / (y1 - y0) * ph;
            let label = if self.log_y { format!("1e{}", t as i64) } else { trim(t) };
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" x2="{:.1}" y1="{py:.1}" y2="{py:.1}" stroke="#ddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
                LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 15.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.ylabel)
        );
        for (i, series) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .filter(|p| !self.log_y || p.1 > 0.0)
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            for p in &path {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{colour}"/>"#);
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="12" height="4" fill="{colour}"/>"#,
                W - RIGHT + 12.0,
                ly - 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                W - RIGHT + 30.0,
                ly,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Heat map over a rectangular grid, `values[iy][ix]`.
pub struct HeatMap {
    pub title: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn colour(t: f64) -> String {
    // dark blue through teal to yellow
    let stops = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 {
        (stops[0], stops[1])
    } else {
        (stops[1], stops[2])
    };
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + u * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

impl HeatMap {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn render(&self) -> String {
        let (lo, hi) = (self.min(), self.max());
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let side = pw.min(ph);
        let (cw, chh) = (side / self.xs.len() as f64, side / self.ys.len() as f64);
        let mut s = String::new();
        svg_open(&mut s, &self.title, &format!(r#" data-min="{lo:e}" data-max="{hi:e}""#));
        for (iy, row) in self.values.iter().enumerate() {
            for (ix, &v) in row.iter().enumerate() {
                let y = TOP + side - (iy + 1) as f64 * chh;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + ix as f64 * cw,
                    y,
                    cw + 0.05,
                    chh + 0.05,
                    colour((v - lo) / span)
                );
            }
        }
        let label = |v: f64| format!("{v:.4}");
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">qx</text>"#,
            LEFT + side / 2.0,
            TOP + side + 36.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT,
            TOP + side + 16.0,
            label(self.xs[0])
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + side,
            TOP + side + 16.0,
            label(*self.xs.last().unwrap())
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            TOP + side,
            label(self.ys[0])
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            TOP + 10.0,
            label(*self.ys.last().unwrap())
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">qy</text>"#,
            LEFT - 6.0,
            TOP + side / 2.0
        );
        // colour bar
        let bx = LEFT + side + 30.0;
        for i in 0..50 {
            let t = i as f64 / 49.0;
            let _ = writeln!(
                s,
                r#"<rect x="{bx:.1}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                TOP + side - (i + 1) as f64 * side / 50.0,
                side / 50.0 + 0.05,
                colour(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 22.0,
            TOP + side,
            label(lo)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 22.0,
            TOP + 10.0,
            label(hi)
        );
        s.push_str("</svg>\n");
        s
    }
}

/// A CSV held in memory with named-column access.
pub struct Table {
    path: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let shown = path.display().to_string();
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{shown}: {e}")))?;
        let headers = r
            .headers()
            .map_err(|e| CliError::Config(format!("{shown}: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::Config(format!("{shown}: {e}")))?;
        if rows.is_empty() {
            return Err(CliError::Config(format!("{shown}: no data rows")));
        }
        Ok(Self {
            path: shown,
            headers,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column '{name}'", self.path)))
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>, CliError> {
        let c = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[c].as_str()).collect())
    }

    /// Numeric column; empty cells become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let v = r[c].trim();
                if v.is_empty() {
                    return Ok(f64::NAN);
                }
                v.parse::<f64>().map_err(|_| {
                    CliError::Config(format!(
                        "{}: row {}: '{v}' in column '{name}' is not a number",
                        self.path,
                        i + 2
                    ))
                })
            })
            .collect()
    }
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Render every plot of `kind` from `input` into `out`; returns file names.
pub fn plot(input: &Path, kind: &str, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let table = Table::read(input)?;
    let mut pages: Vec<(String, String)> = Vec::new();
    match kind {
        "sweep" => {
            let patch = table.text("patch")?;
            let scheme = table.text("scheme")?;
            let p = table.numbers("p")?;
            let inf = table.numbers("infidelity")?;
            let mut best: BTreeMap<&str, BTreeMap<&str, BTreeMap<i64, f64>>> = BTreeMap::new();
            for i in 0..p.len() {
                let e = best
                    .entry(patch[i])
                    .or_default()
                    .entry(scheme[i])
                    .or_default()
                    .entry(p[i] as i64)
                    .or_insert(f64::INFINITY);
                *e = e.min(inf[i]);
            }
            for (patch, schemes) in best {
                let series = schemes
                    .into_iter()
                    .map(|(name, pts)| Series {
                        name: name.to_string(),
                        points: pts.into_iter().map(|(p, v)| (p as f64, v)).collect(),
                    })
                    .collect();
                let plot = LinePlot {
                    title: format!("{patch}: best infidelity"),
                    xlabel: "layers p".into(),
                    ylabel: "1 - F".into(),
                    log_y: true,
                    series,
                };
                pages.push((format!("infidelity_{}.svg", file_stem(patch)), plot.render()?));
            }
        }
        "threshold" => {
            let scheme = table.text("scheme")?;
            let n = table.numbers("n_qubits")?;
            let thr = table.text("threshold")?;
            let req = table.numbers("p_required")?;
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for i in 0..n.len() {
                if req[i].is_finite() {
                    series
                        .entry(format!("{} F={}", scheme[i], trim(thr[i].parse().unwrap_or(f64::NAN))))
                        .or_default()
                        .push((n[i], req[i]));
                }
            }
            let plot = LinePlot {
                title: "layers needed to reach the fidelity threshold".into(),
                xlabel: "qubits".into(),
                ylabel: "p".into(),
                log_y: false,
                series: series
                    .into_iter()
                    .map(|(name, mut points)| {
                        points.sort_by(|a, b| a.0.total_cmp(&b.0));
                        Series { name, points }
                    })
                    .collect(),
            };
            pages.push(("threshold.svg".into(), plot.render()?));
        }
        "gradstudy" => {
            let patch = table.text("patch")?;
            let scheme = table.text("scheme")?;
            let p = table.numbers("p")?;
            for (col, label, file) in [
                ("var_first_scaled", "Var(dE/dtheta_1) / n^2", "gradstudy_variance.svg"),
                ("mean_norm_scaled", "|grad E| / (n p)", "gradstudy_norm.svg"),
            ] {
                let v = table.numbers(col)?;
                let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
                for i in 0..p.len() {
                    series
                        .entry(format!("{} {}", patch[i], scheme[i]))
                        .or_default()
                        .push((p[i], v[i]));
                }
                let plot = LinePlot {
                    title: "gradient statistics".into(),
                    xlabel: "layers p".into(),
                    ylabel: label.into(),
                    log_y: true,
                    series: series
                        .into_iter()
                        .map(|(name, points)| Series { name, points })
                        .collect(),
                };
                pages.push((file.into(), plot.render()?));
            }
        }
        "correlations" => {
            let source = table.text("source")?;
            let step = table.numbers("step")?;
            let v = table.numbers("value")?;
            let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
            for i in 0..v.len() {
                series.entry(source[i]).or_default().push((step[i], v[i].abs()));
            }
            let plot = LinePlot {
                title: "spin-spin correlations along the marked path".into(),
                xlabel: "j".into(),
                ylabel: "|<Z_0 Z_j>|".into(),
                log_y: false,
                series: series
                    .into_iter()
                    .map(|(name, points)| Series {
                        name: name.into(),
                        points,
                    })
                    .collect(),
            };
            pages.push(("correlations.svg".into(), plot.render()?));
        }
        "sfactor" => {
            let source = table.text("source")?;
            let qx = table.numbers("qx")?;
            let qy = table.numbers("qy")?;
            let v = table.numbers("szq")?;
            let mut grids: BTreeMap<&str, BTreeMap<(u64, u64), f64>> = BTreeMap::new();
            for i in 0..v.len() {
                grids
                    .entry(source[i])
                    .or_default()
                    .insert((ordered(qy[i]), ordered(qx[i])), v[i]);
            }
            for (name, cells) in grids {
                let mut xs: Vec<f64> = cells.keys().map(|k| from_ordered(k.1)).collect();
                let mut ys: Vec<f64> = cells.keys().map(|k| from_ordered(k.0)).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                ys.sort_by(f64::total_cmp);
                ys.dedup();
                if xs.len() * ys.len() != cells.len() {
                    return Err(CliError::Config(format!(
                        "{}: structure factor for '{name}' is not a full grid",
                        input.display()
                    )));
                }
                let values = ys
                    .iter()
                    .map(|&y| xs.iter().map(|&x| cells[&(ordered(y), ordered(x))]).collect())
                    .collect();
                let map = HeatMap {
                    title: format!("S^z(q), {name}"),
                    xs,
                    ys,
                    values,
                };
                pages.push((format!("sfactor_{}.svg", file_stem(name)), map.render()));
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown plot kind '{other}' (sweep, threshold, gradstudy, correlations, sfactor)"
            )))
        }
    }
    let mut names = Vec::new();
    for (name, svg) in pages {
        out.write_text(&name, &svg)?;
        names.push(name);
    }
    Ok(names)
}

/// Total order key for finite floats, used to index grid cells.
fn ordered(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_ordered(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}
