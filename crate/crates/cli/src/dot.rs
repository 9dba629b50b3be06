//! Graphviz export of frames: the world order as solid edges (covering
//! pairs only), each ternary triple expanded through an auxiliary node, and
//! the accessibility relations as labeled dashed edges.

use std::fmt::Write;

use dsmalc_core::frames::SigmaFrame;

pub fn frame_to_dot(frame: &SigmaFrame) -> String {
    let n = frame.len();
    let p = &frame.base.poset;
    let mut out = String::new();
    let _ = writeln!(out, "digraph frame {{");
    let _ = writeln!(out, "  rankdir=BT;");
    for w in 0..n {
        let shape = if frame.base.o & (1 << w) != 0 { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  w{w} [label=\"{w}\", shape={shape}];");
    }
    // covering pairs of the order
    for x in 0..n {
        for y in 0..n {
            if x == y || !p.le(x, y) {
                continue;
            }
            let covering = (0..n).all(|z| z == x || z == y || !(p.le(x, z) && p.le(z, y)));
            if covering {
                let _ = writeln!(out, "  w{x} -> w{y} [style=solid, color=gray40];");
            }
        }
    }
    // hyperedge expansion of R
    let mut counter = 0usize;
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if frame.base.r(u, v, w) {
                    let _ = writeln!(
                        out,
                        "  r{counter} [label=\"R\", shape=point, width=0.08];"
                    );
                    let _ = writeln!(out, "  w{u} -> r{counter} [arrowhead=none, label=\"1\"];");
                    let _ = writeln!(out, "  w{v} -> r{counter} [arrowhead=none, label=\"2\"];");
                    let _ = writeln!(out, "  r{counter} -> w{w};");
                    counter += 1;
                }
            }
        }
    }
    for (i, name) in frame.sig.index_names().iter().enumerate() {
        for u in 0..n {
            for w in 0..n {
                if frame.ri(i, u, w) && u != w {
                    let _ = writeln!(
                        out,
                        "  w{u} -> w{w} [style=dashed, label=\"{name}\", color=blue];"
                    );
                }
            }
        }
    }
    let _ = writeln!(out, "}}");
    out
}
