//! Plain-text mesh format.
//!
//! ```text
//! # homs mesh 1
//! nodes <N>
//! <x> <y>                 (N lines)
//! triangles <M>
//! <a> <b> <c> <tag>       (M lines, 0-based node indices, tag 0 = matrix, 1 = inclusion)
//! ```
//!
//! Blank lines and further lines starting with `#` are ignored. Coordinates are written with
//! the shortest representation that reads back to the same value.

use std::fmt::Write as _;

use homs_core::mesh::{Mesh, Phase};

pub const HEADER: &str = "# homs mesh 1";

pub fn mesh_to_text(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}\nnodes {}", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangle_count());
    for (t, p) in mesh.triangles().iter().zip(mesh.phases()) {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], p.index());
    }
    s
}

pub fn mesh_from_text(text: &str) -> Result<Mesh, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == HEADER => {}
        _ => return Err(format!("missing header '{HEADER}'")),
    }
    let mut lines = lines.filter(|(_, l)| !l.starts_with('#'));
    let count = |key: &str, lines: &mut dyn Iterator<Item = (usize, &str)>| -> Result<usize, String> {
        let (n, l) = lines.next().ok_or(format!("missing '{key}' line"))?;
        l.strip_prefix(key)
            .and_then(|r| r.trim().parse().ok())
            .ok_or(format!("line {n}: expected '{key} <count>'"))
    };
    let n = count("nodes", &mut lines)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or("unexpected end of node table")?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {ln}: {e}"))?;
        if v.len() != 2 {
            return Err(format!("line {ln}: expected two coordinates"));
        }
        nodes.push([v[0], v[1]]);
    }
    let m = count("triangles", &mut lines)?;
    let mut tris = Vec::with_capacity(m);
    let mut phases = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or("unexpected end of triangle table")?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {ln}: {e}"))?;
        if v.len() != 4 || v[3] > 1 {
            return Err(format!("line {ln}: expected three node indices and a tag 0 or 1"));
        }
        tris.push([v[0], v[1], v[2]]);
        phases.push(if v[3] == 0 { Phase::Matrix } else { Phase::Inclusion });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(format!("line {ln}: unexpected content after the triangle table"));
    }
    Mesh::new(nodes, tris, phases).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use homs_core::mesh::{build_unit_cell_mesh, PhaseGeometry};

    #[test]
    fn round_trip_is_exact() {
        let g = PhaseGeometry::Disk {
            center: [0.5, 0.5],
            radius: 0.25,
        };
        let mesh = build_unit_cell_mesh(&g, 0.2).unwrap();
        let back = mesh_from_text(&mesh_to_text(&mesh)).unwrap();
        assert_eq!(back.nodes(), mesh.nodes());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.phases(), mesh.phases());
    }

    #[test]
    fn reports_line_numbers() {
        let text = format!("{HEADER}\nnodes 1\n0 x\ntriangles 0\n");
        let err = mesh_from_text(&text).unwrap_err();
        assert!(err.starts_with("line 3"), "{err}");
    }
}
