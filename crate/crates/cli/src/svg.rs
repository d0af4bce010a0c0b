//! Minimal complex-plane SVG plots: fixed 800x800 canvas, equal axis scaling.

use std::fmt::Write as _;

use num_complex::Complex64;
use ssg_core::geometry::Region;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 64.0;
/// Extent cap so inverse clouds with huge gains do not flatten the view.
const MAX_EXTENT: f64 = 50.0;

#[derive(Debug, Clone)]
enum Item {
    Points(Vec<Complex64>, &'static str),
    Region(Region, &'static str),
    Segment(Complex64, Complex64, &'static str),
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    title: String,
    items: Vec<Item>,
    legend: Vec<(String, &'static str)>,
    focus: Option<(Complex64, f64)>,
}

struct View {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl View {
    fn px(&self, z: Complex64) -> (f64, f64) {
        (MARGIN + (z.re - self.x0) * self.scale, SIZE - MARGIN - (z.im - self.y0) * self.scale)
    }

    fn span(&self) -> f64 {
        (SIZE - 2.0 * MARGIN) / self.scale
    }

    fn contains(&self, z: Complex64) -> bool {
        let s = self.span();
        z.re >= self.x0 && z.re <= self.x0 + s && z.im >= self.y0 && z.im <= self.y0 + s
    }

    fn corners(&self) -> [Complex64; 4] {
        let s = self.span();
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x0 + s, self.y0),
            Complex64::new(self.x0 + s, self.y0 + s),
            Complex64::new(self.x0, self.y0 + s),
        ]
    }
}

fn finite_anchor(z: Complex64) -> Option<Complex64> {
    (z.re.is_finite() && z.im.is_finite() && z.re.abs() <= MAX_EXTENT && z.im.abs() <= MAX_EXTENT).then_some(z)
}

fn anchors(region: &Region) -> Vec<Complex64> {
    match region {
        Region::Disk { center, radius, .. } => {
            vec![center + Complex64::new(*radius, *radius), center - Complex64::new(*radius, *radius)]
        }
        Region::HalfPlane { point, .. } => vec![*point],
        Region::VerticalLine { re, im_min, im_max } => {
            vec![Complex64::new(*re, im_min.max(-1.0)), Complex64::new(*re, im_max.min(1.0))]
        }
        Region::Perimeter(p) => p.samples().to_vec(),
        Region::Cloud(pts) => pts.clone(),
    }
}

impl Plot {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn points(mut self, label: &str, pts: Vec<Complex64>, color: &'static str) -> Self {
        self.legend.push((label.to_string(), color));
        self.items.push(Item::Points(pts, color));
        self
    }

    pub fn region(mut self, label: &str, region: Region, color: &'static str) -> Self {
        self.legend.push((label.to_string(), color));
        self.items.push(Item::Region(region, color));
        self
    }

    pub fn segment(mut self, a: Complex64, b: Complex64, color: &'static str) -> Self {
        self.items.push(Item::Segment(a, b, color));
        self
    }

    /// Fixes the view to the square of half-width `half_span` around `center`
    /// instead of fitting every item.
    pub fn focus(mut self, center: Complex64, half_span: f64) -> Self {
        if center.re.is_finite() && center.im.is_finite() && half_span > 0.0 {
            self.focus = Some((center, half_span));
        }
        self
    }

    fn view(&self) -> View {
        if let Some((c, h)) = self.focus {
            return View { x0: c.re - h, y0: c.im - h, scale: (SIZE - 2.0 * MARGIN) / (2.0 * h) };
        }
        let mut pts: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
        for item in &self.items {
            match item {
                Item::Points(p, _) => pts.extend(p.iter().copied().filter_map(finite_anchor)),
                Item::Region(r, _) => pts.extend(anchors(r).into_iter().filter_map(finite_anchor)),
                Item::Segment(a, b, _) => pts.extend([*a, *b].into_iter().filter_map(finite_anchor)),
            }
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for z in &pts {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        let span = ((x1 - x0).max(y1 - y0) * 1.1).max(1e-6);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        View { x0: cx - 0.5 * span, y0: cy - 0.5 * span, scale: (SIZE - 2.0 * MARGIN) / span }
    }

    /// Renders the plot; `comment` is embedded verbatim as an XML comment.
    pub fn render(&self, comment: &str) -> String {
        let v = self.view();
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
        let _ = writeln!(out, "<!-- {} -->", comment.replace("--", "- -"));
        let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        let _ = writeln!(out, r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{w}"/></clipPath>"#, w = SIZE - 2.0 * MARGIN);
        self.axes(&v, &mut out);
        let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
        for item in &self.items {
            match item {
                Item::Region(r, color) => draw_region(&v, r, color, &mut out),
                Item::Points(pts, color) => {
                    for &z in pts.iter().filter(|z| v.contains(**z)) {
                        let (x, y) = v.px(z);
                        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#);
                    }
                }
                Item::Segment(a, b, color) => {
                    let ((x1, y1), (x2, y2)) = (v.px(*a), v.px(*b));
                    let _ = writeln!(
                        out,
                        r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="2" stroke-dasharray="6 3"/>"#
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(out, r#"<text x="{MARGIN}" y="30" font-family="sans-serif" font-size="16">{}</text>"#, escape(&self.title));
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = MARGIN + 20.0 + 18.0 * i as f64;
            let _ = writeln!(out, r#"<rect x="{x}" y="{y0}" width="12" height="12" fill="{color}"/>"#, x = SIZE - 240.0, y0 = y - 10.0);
            let _ = writeln!(out, r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="12">{}</text>"#, escape(label), x = SIZE - 222.0);
        }
        out.push_str("</svg>\n");
        out
    }

    fn axes(&self, v: &View, out: &mut String) {
        let s = v.span();
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{w}" fill="none" stroke="#888"/>"##,
            w = SIZE - 2.0 * MARGIN
        );
        if v.y0 <= 0.0 && 0.0 <= v.y0 + s {
            let (_, y) = v.px(Complex64::new(0.0, 0.0));
            let _ = writeln!(out, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="#444"/>"##, x2 = SIZE - MARGIN);
        }
        if v.x0 <= 0.0 && 0.0 <= v.x0 + s {
            let (x, _) = v.px(Complex64::new(0.0, 0.0));
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{y2}" stroke="#444"/>"##, y2 = SIZE - MARGIN);
        }
        let label = |out: &mut String, x: f64, y: f64, anchor: &str, text: String| {
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{text}</text>"#);
        };
        label(out, MARGIN, SIZE - MARGIN + 18.0, "start", format!("{:.3}", v.x0));
        label(out, SIZE - MARGIN, SIZE - MARGIN + 18.0, "end", format!("{:.3}", v.x0 + s));
        label(out, SIZE / 2.0, SIZE - MARGIN + 34.0, "middle", "Re".into());
        label(out, MARGIN - 6.0, SIZE - MARGIN, "end", format!("{:.3}", v.y0));
        label(out, MARGIN - 6.0, MARGIN + 10.0, "end", format!("{:.3}", v.y0 + s));
        label(out, MARGIN - 6.0, SIZE / 2.0, "end", "Im".into());
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn path_of(v: &View, pts: &[Complex64], close: bool) -> String {
    let mut d = String::new();
    for (i, z) in pts.iter().enumerate() {
        let (x, y) = v.px(*z);
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    if close {
        d.push('Z');
    }
    d
}

/// Clips the view square to `{z : Re((z - p) conj(n)) >= 0}`.
fn clip_half_plane(v: &View, p: Complex64, n: Complex64) -> Vec<Complex64> {
    let side = |z: Complex64| ((z - p) * n.conj()).re;
    let corners = v.corners();
    let mut out = Vec::new();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let (sa, sb) = (side(a), side(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            out.push(a + (b - a) * (sa / (sa - sb)));
        }
    }
    out
}

fn draw_region(v: &View, r: &Region, color: &str, out: &mut String) {
    match r {
        Region::Disk { center, radius, filled } => {
            let (x, y) = v.px(*center);
            let fill = if *filled { format!(r#"fill="{color}" fill-opacity="0.15""#) } else { r#"fill="none""#.into() };
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" {fill} stroke="{color}" stroke-width="2"/>"#,
                radius * v.scale
            );
        }
        Region::HalfPlane { point, normal } => {
            let poly = clip_half_plane(v, *point, *normal);
            if poly.len() >= 3 {
                let _ = writeln!(out, r#"<path d="{}" fill="{color}" fill-opacity="0.12" stroke="none"/>"#, path_of(v, &poly, true));
            }
        }
        Region::VerticalLine { re, im_min, im_max } => {
            let s = v.span();
            let lo = im_min.max(v.y0 - s);
            let hi = im_max.min(v.y0 + 2.0 * s);
            if lo <= hi {
                let ((x1, y1), (x2, y2)) = (v.px(Complex64::new(*re, lo)), v.px(Complex64::new(*re, hi)));
                let _ = writeln!(
                    out,
                    r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="2"/>"#
                );
            }
        }
        Region::Perimeter(p) => {
            let pts: Vec<Complex64> = p.samples().iter().step_by(4).copied().chain(p.samples().last().copied()).collect();
            let fill = if p.filled() { format!(r#"fill="{color}" fill-opacity="0.15""#) } else { r#"fill="none""#.into() };
            let _ = writeln!(out, r#"<path d="{}" {fill} stroke="{color}" stroke-width="2"/>"#, path_of(v, &pts, p.filled()));
        }
        Region::Cloud(pts) => {
            for &z in pts.iter().filter(|z| v.contains(**z)) {
                let (x, y) = v.px(z);
                let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_fixed_canvas_with_comment() {
        let svg = Plot::new("demo")
            .points("pts", vec![Complex64::new(3.0, 0.0)], "#1f77b4")
            .region("circle", Region::circle(Complex64::new(0.5, 0.0), 0.5), "#d62728")
            .region("line", Region::vertical_line(-1.0), "#2ca02c")
            .render("config_hash=abc seed=1");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"width="800" height="800""#));
        assert!(svg.contains("<!-- config_hash=abc seed=1 -->"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn half_plane_clip_keeps_upper_half() {
        let v = View { x0: -1.0, y0: -1.0, scale: 350.0 };
        let poly = clip_half_plane(&v, Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
        assert_eq!(poly.len(), 4);
        assert!(poly.iter().all(|z| z.im >= -1e-12));
    }
}
