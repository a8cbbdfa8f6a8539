//! SVG rendering of an instance and, optionally, a plan.

use std::fmt::Write;

use toro::depgraph::build_dep_graph;
use toro::{Instance, Plan, Point2, Rect};

const WIDTH_PX: f64 = 640.0;
const MARGIN_PX: f64 = 24.0;

struct Frame {
    bounds: Rect,
    scale: f64,
}

impl Frame {
    fn new(inst: &Instance, plan: Option<&Plan>) -> Frame {
        let r = inst.radius();
        let mut pts = vec![inst.rest_start, inst.rest_goal];
        if let Some(p) = plan {
            pts.extend(p.actions.iter().flat_map(|a| [a.pick, a.place]));
        }
        let ws = inst.workspace;
        let mut b = Rect::new(ws.min_x, ws.min_y, ws.max_x, ws.max_y);
        for q in pts {
            b = Rect::new(b.min_x.min(q.x - r), b.min_y.min(q.y - r), b.max_x.max(q.x + r), b.max_y.max(q.y + r));
        }
        let span = b.width().max(b.height()).max(1e-9);
        Frame { bounds: b, scale: (WIDTH_PX - 2.0 * MARGIN_PX) / span }
    }

    fn x(&self, p: Point2) -> f64 {
        MARGIN_PX + (p.x - self.bounds.min_x) * self.scale
    }

    // svg y grows downward
    fn y(&self, p: Point2) -> f64 {
        MARGIN_PX + (self.bounds.max_y - p.y) * self.scale
    }

    fn height(&self) -> f64 {
        self.bounds.height() * self.scale + 2.0 * MARGIN_PX
    }
}

/// Start discs are outlined, goal discs filled; arrows are dependency
/// arcs and the dashed polyline is the end-effector path.
pub fn render_svg(inst: &Instance, plan: Option<&Plan>) -> String {
    let f = Frame::new(inst, plan);
    let r = inst.radius() * f.scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH_PX:.0}" height="{:.0}" viewBox="0 0 {WIDTH_PX:.0} {:.0}">"#,
        f.height(),
        f.height()
    );
    s.push_str(
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#b03a2e"/></marker></defs>
"##,
    );
    let ws = inst.workspace;
    let (tl, br) = (Point2::new(ws.min_x, ws.max_y), Point2::new(ws.max_x, ws.min_y));
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#fafafa" stroke="#999"/>"##,
        f.x(tl),
        f.y(tl),
        f.x(br) - f.x(tl),
        f.y(br) - f.y(tl)
    );
    for i in 0..inst.n() {
        let g = inst.goal_pose(i);
        let _ = writeln!(
            s,
            r##"<circle class="goal" cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="#7fb3d5" fill-opacity="0.6"/>"##,
            f.x(g),
            f.y(g)
        );
    }
    for i in 0..inst.n() {
        let p = inst.start_pose(i);
        let _ = writeln!(
            s,
            r##"<circle class="start" cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="none" stroke="#1f3a5f" stroke-width="1.5"/>"##,
            f.x(p),
            f.y(p)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{i}</text>"#,
            f.x(p),
            f.y(p) + 3.0
        );
    }
    if let Ok(g) = build_dep_graph(inst) {
        for (i, j) in g.arcs() {
            let (a, b) = (inst.goal_pose(i), inst.start_pose(j));
            let _ = writeln!(
                s,
                r##"<line class="dep" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#b03a2e" marker-end="url(#arrow)"/>"##,
                f.x(a),
                f.y(a),
                f.x(b),
                f.y(b)
            );
        }
    }
    if let Some(p) = plan {
        let mut path = vec![inst.rest_start];
        path.extend(p.actions.iter().flat_map(|a| [a.pick, a.place]));
        path.push(inst.rest_goal);
        let pts: Vec<String> = path.iter().map(|q| format!("{:.2},{:.2}", f.x(*q), f.y(*q))).collect();
        let _ = writeln!(
            s,
            r##"<polyline class="path" points="{}" fill="none" stroke="#333" stroke-dasharray="4 3"/>"##,
            pts.join(" ")
        );
        for a in &p.actions {
            let _ = writeln!(
                s,
                r##"<circle class="pick" cx="{:.2}" cy="{:.2}" r="3" fill="#27ae60"/>"##,
                f.x(a.pick),
                f.y(a.pick)
            );
            let (x, y) = (f.x(a.place), f.y(a.place));
            let _ = writeln!(s, r##"<rect class="place" x="{:.2}" y="{:.2}" width="6" height="6" fill="#d35400"/>"##, x - 3.0, y - 3.0);
        }
    }
    for (label, q) in [("s_M", inst.rest_start), ("g_M", inst.rest_goal)] {
        let _ = writeln!(
            s,
            r##"<rect class="rest" x="{:.2}" y="{:.2}" width="8" height="8" fill="#000"/><text x="{:.2}" y="{:.2}" font-size="10">{label}</text>"##,
            f.x(q) - 4.0,
            f.y(q) - 4.0,
            f.x(q) + 6.0,
            f.y(q) - 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}
