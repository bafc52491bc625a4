//! Minimal SVG writer for grid overlays.

use std::fmt::Write;

use crate::grid::GridBox;

/// Canvas mapping a world box onto a fixed-width pixel frame (y axis up).
pub struct SvgCanvas {
    bbox: GridBox,
    width: f64,
    height: f64,
    body: String,
}

impl SvgCanvas {
    pub fn new(bbox: GridBox, width: f64) -> Self {
        let aspect = (bbox.y_max - bbox.y_min) / (bbox.x_max - bbox.x_min);
        Self {
            bbox,
            width,
            height: (width * aspect).max(40.0),
            body: String::new(),
        }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let b = &self.bbox;
        (
            (p[0] - b.x_min) / (b.x_max - b.x_min) * self.width,
            (b.y_max - p[1]) / (b.y_max - b.y_min) * self.height,
        )
    }

    /// Square marker of world size `size` centred at `p`.
    pub fn cell(&mut self, p: [f64; 2], size: f64, fill: &str) {
        let (x, y) = self.px([p[0] - size / 2.0, p[1] + size / 2.0]);
        let w = size / (self.bbox.x_max - self.bbox.x_min) * self.width;
        let h = size / (self.bbox.y_max - self.bbox.y_min) * self.height;
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            w.max(0.5),
            h.max(0.5)
        );
    }

    pub fn dot(&mut self, p: [f64; 2], radius_px: f64, fill: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius_px}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#
        );
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], stroke: &str, closed: bool) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            self.body,
            r#"<{tag} points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#,
            coords.join(" ")
        );
    }

    pub fn label(&mut self, p: [f64; 2], text: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="monospace" font-size="11">{}</text>"#,
            text.replace('&', "&amp;").replace('<', "&lt;")
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_corners_with_y_up() {
        let mut c = SvgCanvas::new(GridBox::unit_square(), 100.0);
        c.dot([0.0, 1.0], 2.0, "red");
        c.dot([1.0, 0.0], 2.0, "red");
        let s = c.finish();
        assert!(s.contains(r#"cx="0.00" cy="0.00""#));
        assert!(s.contains(r#"cx="100.00" cy="100.00""#));
        assert!(s.starts_with("<svg"));
    }
}
