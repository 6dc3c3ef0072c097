//! Graphviz export with one deterministic color per color token, derived
//! from the token's FNV-1a hash so renderings are stable across runs and
//! machines.

use std::fmt::Write;

use crate::instance::{fnv1a64, Instance};
use crate::solver::Solution;

/// Map a color token to a `#rrggbb` value: hash to a hue, fixed saturation
/// and value. Distinct tokens get visually distinct, reproducible colors.
pub fn token_color(token: &str) -> String {
    let h = fnv1a64(token.as_bytes());
    let hue = (h % 360) as f64;
    let (r, g, b) = hsv_to_rgb(hue, 0.65, 0.80);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    )
}

fn node_lines(inst: &Instance, out: &mut String) {
    writeln!(out, "  {} [shape=doublecircle, label=\"r{}\"];", inst.root, inst.root).unwrap();
    for &t in &inst.terminals {
        writeln!(out, "  {t} [shape=box];").unwrap();
    }
}

/// Render every arc of the instance.
pub fn render_instance(inst: &Instance) -> String {
    let mut out = String::from("digraph instance {\n");
    node_lines(inst, &mut out);
    for arc in &inst.arcs {
        let token = inst.color_token(arc.color);
        writeln!(
            out,
            "  {} -> {} [color=\"{}\", tooltip=\"{}\"];",
            arc.tail,
            arc.head,
            token_color(token),
            token
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Render a solution: only the chosen arcs, colored by their token.
pub fn render_solution(inst: &Instance, sol: &Solution) -> String {
    let mut out = String::from("digraph solution {\n");
    node_lines(inst, &mut out);
    for (&v, &a) in &sol.out_arc {
        let arc = inst.arc(a);
        let token = inst.color_token(arc.color);
        writeln!(
            out,
            "  {} -> {} [color=\"{}\", penwidth=2, tooltip=\"{}\"];",
            v,
            arc.head,
            token_color(token),
            token
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
