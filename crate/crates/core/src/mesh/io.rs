//! Reading and writing OFF, OBJ and ASCII PLY meshes.
//!
//! OFF is the native format: [`save_off`] writes coordinates with
//! round-trip precision, so a save/load cycle reproduces the arrays exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
}

impl MeshFormat {
    /// Guesses the format from the file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

/// Loads a mesh, choosing the parser from the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| Error::parse(path, "unknown mesh extension (expected .off, .obj or .ply)"))?;
    load_mesh_as(path, format)
}

pub fn load_mesh_as(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::parse(path, format!("cannot read file: {e}")))?;
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Ply => parse_ply(&text),
    }
    .map_err(|e| match e {
        RawError::Message(m) => Error::parse(path, m),
        RawError::NonTriangle { face, count } => Error::NonTriangle { face, count },
    })?;
    TriangleMesh::new(vertices, faces)
}

enum RawError {
    Message(String),
    NonTriangle { face: usize, count: usize },
}

impl From<String> for RawError {
    fn from(m: String) -> Self {
        RawError::Message(m)
    }
}

type Raw = std::result::Result<(Vec<Vec3>, Vec<[usize; 3]>), RawError>;

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> std::result::Result<T, String> {
    let tok = tok.ok_or_else(|| format!("unexpected end of file while reading {what}"))?;
    tok.parse().map_err(|_| format!("invalid {what}: {tok:?}"))
}

fn parse_off(text: &str) -> Raw {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    match tokens.next() {
        Some("OFF") => {}
        Some(other) => return Err(format!("expected OFF header, found {other:?}").into()),
        None => return Err("empty file".to_string().into()),
    }
    let nv: usize = parse_num(tokens.next(), "vertex count")?;
    let nf: usize = parse_num(tokens.next(), "face count")?;
    let _ne: usize = parse_num(tokens.next(), "edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_num(tokens.next(), "coordinate")?;
        let y = parse_num(tokens.next(), "coordinate")?;
        let z = parse_num(tokens.next(), "coordinate")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let count: usize = parse_num(tokens.next(), "face size")?;
        if count != 3 {
            return Err(RawError::NonTriangle { face: fi, count });
        }
        let mut f = [0; 3];
        for v in &mut f {
            *v = parse_num(tokens.next(), "vertex index")?;
        }
        faces.push(f);
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str) -> Raw {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let x = parse_num(tokens.next(), "coordinate")?;
                let y = parse_num(tokens.next(), "coordinate")?;
                let z = parse_num(tokens.next(), "coordinate")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(RawError::NonTriangle { face: faces.len(), count: refs.len() });
                }
                let mut f = [0; 3];
                for (slot, r) in f.iter_mut().zip(refs) {
                    let head = r.split('/').next().unwrap_or("");
                    let idx: i64 = head
                        .parse()
                        .map_err(|_| format!("line {}: invalid vertex reference {r:?}", ln + 1))?;
                    *slot = match idx {
                        i if i > 0 => (i - 1) as usize,
                        i if i < 0 && (-i) as usize <= vertices.len() => vertices.len() - (-i) as usize,
                        _ => return Err(format!("line {}: vertex reference {idx} out of range", ln + 1).into()),
                    };
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn parse_ply(text: &str) -> Raw {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err("missing ply magic".to_string().into());
    }
    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| "missing end_header".to_string())?.trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err("only ascii PLY is supported".to_string().into());
                }
            }
            Some("element") => {
                let name = tok.next().unwrap_or("").to_string();
                let count = parse_num(tok.next(), "element count")?;
                elements.push(Element { name, count, props: Vec::new() });
            }
            Some("property") => {
                let name = tok.last().unwrap_or("").to_string();
                elements
                    .last_mut()
                    .ok_or_else(|| "property before element".to_string())?
                    .props
                    .push(name);
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let line = lines.next().ok_or_else(|| format!("truncated {} data", el.name))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let mut p = [0.0; 3];
                    for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                        let col = el
                            .props
                            .iter()
                            .position(|n| n == axis)
                            .ok_or_else(|| format!("vertex element lacks property {axis}"))?;
                        p[k] = parse_num(vals.get(col).copied(), "coordinate")?;
                    }
                    vertices.push(Vec3::new(p[0], p[1], p[2]));
                }
                "face" => {
                    let count: usize = parse_num(vals.first().copied(), "face size")?;
                    if count != 3 {
                        return Err(RawError::NonTriangle { face: faces.len(), count });
                    }
                    let mut f = [0; 3];
                    for (k, v) in f.iter_mut().enumerate() {
                        *v = parse_num(vals.get(k + 1).copied(), "vertex index")?;
                    }
                    faces.push(f);
                }
                _ => {}
            }
        }
    }
    Ok((vertices, faces))
}

pub fn to_off_string(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.n_vertices(), mesh.n_faces());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn to_obj_string(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_off(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_off_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}
