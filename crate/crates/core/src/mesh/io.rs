//! Plain-text mesh format.
//!
//! ```text
//! <vertex count>
//! <index> <x> <y>
//! ...
//! <triangle count>
//! <index> <v0> <v1> <v2>
//! ...
//! ```
//!
//! Indices are 0-based. Blank lines and text after `#` are ignored.

use std::io::{BufRead, Write};

use super::{Mesh, MeshError, Point};

pub fn write_ascii<W: Write>(mesh: &Mesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", mesh.vertices().len())?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{} {:?} {:?}", i, p[0], p[1])?;
    }
    writeln!(out, "{}", mesh.num_triangles())?;
    for (i, t) in mesh.triangles().iter().enumerate() {
        writeln!(out, "{} {} {} {}", i, t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn read_ascii<R: BufRead>(input: R) -> Result<Mesh, MeshError> {
    let mut lines = Vec::new();
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            lines.push((no + 1, content));
        }
    }
    let mut it = lines.into_iter();
    let parse_err = |line: usize, message: &str| MeshError::Parse {
        line,
        message: message.to_string(),
    };

    let (no, header) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing vertex count"))?;
    let nv: usize = header
        .parse()
        .map_err(|_| parse_err(no, "bad vertex count"))?;
    let mut vertices: Vec<Point> = vec![[f64::NAN; 2]; nv];
    for _ in 0..nv {
        let (no, l) = it
            .next()
            .ok_or_else(|| parse_err(0, "truncated vertex section"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(no, "expected: index x y"));
        }
        let i: usize = f[0]
            .parse()
            .map_err(|_| parse_err(no, "bad vertex index"))?;
        if i >= nv {
            return Err(parse_err(no, "vertex index out of range"));
        }
        let x: f64 = f[1]
            .parse()
            .map_err(|_| parse_err(no, "bad x coordinate"))?;
        let y: f64 = f[2]
            .parse()
            .map_err(|_| parse_err(no, "bad y coordinate"))?;
        vertices[i] = [x, y];
    }
    let (no, header) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing triangle count"))?;
    let nt: usize = header
        .parse()
        .map_err(|_| parse_err(no, "bad triangle count"))?;
    let mut triangles = vec![[usize::MAX; 3]; nt];
    for _ in 0..nt {
        let (no, l) = it
            .next()
            .ok_or_else(|| parse_err(0, "truncated triangle section"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(no, "bad integer"))?;
        if f.len() != 4 || f[0] >= nt {
            return Err(parse_err(no, "expected: index v0 v1 v2"));
        }
        triangles[f[0]] = [f[1], f[2], f[3]];
    }
    if let Some((no, _)) = it.next() {
        return Err(parse_err(no, "trailing content"));
    }
    if vertices.iter().any(|p| p[0].is_nan()) {
        return Err(parse_err(0, "missing vertex entries"));
    }
    if triangles.iter().any(|t| t[0] == usize::MAX) {
        return Err(parse_err(0, "missing triangle entries"));
    }
    Mesh::new(vertices, triangles)
}
