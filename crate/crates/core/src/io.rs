//! Text formats: OBJ and OFF meshes, CSV profiles and tables.
//!
//! Floats are written with 17 significant digits, so a write followed by a
//! read reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use crate::axisym::{AxisymProfile, IsothermalMap};
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};
use crate::optimizer::HistoryRow;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace tokens of a line with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn float(tok: (usize, &str), line: usize) -> Result<f64> {
    tok.1
        .parse::<f64>()
        .map_err(|_| parse_err(line, tok.0, format!("expected a number, found '{}'", tok.1)))
}

pub fn write_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.n_vertices() + mesh.n_faces()));
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)));
    }
    for f in &mesh.faces {
        s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    s
}

/// Reads `v` and `f` records; other records are ignored. Polygons are
/// fanned into triangles, `a/b/c` references use the vertex index, and
/// negative indices count from the end.
pub fn read_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = line.split('#').next().unwrap_or("");
        let t = tokens(line);
        let Some(&(_, kind)) = t.first() else { continue };
        match kind {
            "v" => {
                if t.len() < 4 {
                    return Err(parse_err(ln, line.len() + 1, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(float(t[1], ln)?, float(t[2], ln)?, float(t[3], ln)?));
            }
            "f" => {
                if t.len() < 4 {
                    return Err(parse_err(ln, line.len() + 1, "face needs at least three vertices"));
                }
                let mut idx = Vec::with_capacity(t.len() - 1);
                for &(col, tok) in &t[1..] {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| parse_err(ln, col, format!("expected a vertex index, found '{tok}'")))?;
                    let n = vertices.len() as i64;
                    let k = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || k < 0 || k >= n {
                        return Err(parse_err(ln, col, format!("vertex index {i} out of range (1..={n})")));
                    }
                    idx.push(k as usize);
                }
                for j in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(parse_err(text.lines().count().max(1), 1, "no faces"));
    }
    Ok(TriMesh::new(vertices, faces))
}

pub fn write_off(mesh: &TriMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.n_vertices(), mesh.n_faces());
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} {}\n", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)));
    }
    for f in &mesh.faces {
        s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    s
}

pub fn read_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty());
    let (ln, head) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let mut t = tokens(head);
    if t.first().map(|x| x.1) != Some("OFF") {
        return Err(parse_err(ln, 1, "missing OFF header"));
    }
    t.remove(0);
    let (ln, counts) = if t.is_empty() {
        let (l, s) = lines.next().ok_or_else(|| parse_err(ln + 1, 1, "missing counts"))?;
        (l, tokens(s))
    } else {
        (ln, t)
    };
    let count = |k: usize| -> Result<usize> {
        let tok = counts
            .get(k)
            .ok_or_else(|| parse_err(ln, 1, "expected vertex and face counts"))?;
        tok.1
            .parse()
            .map_err(|_| parse_err(ln, tok.0, format!("expected a count, found '{}'", tok.1)))
    };
    let (nv, nf) = (count(0)?, count(1)?);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(ln, 1, "unexpected end of file in vertices"))?;
        let t = tokens(l);
        if t.len() < 3 {
            return Err(parse_err(ln, l.len() + 1, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(float(t[0], ln)?, float(t[1], ln)?, float(t[2], ln)?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(ln, 1, "unexpected end of file in faces"))?;
        let t = tokens(l);
        let idx: Vec<usize> = t
            .iter()
            .map(|&(col, tok)| {
                tok.parse::<usize>()
                    .map_err(|_| parse_err(ln, col, format!("expected an index, found '{tok}'")))
            })
            .collect::<Result<_>>()?;
        let k = *idx.first().ok_or_else(|| parse_err(ln, 1, "empty face"))?;
        if k < 3 || idx.len() < k + 1 {
            return Err(parse_err(
                ln,
                1,
                format!("face declares {k} vertices, {} given", idx.len().saturating_sub(1)),
            ));
        }
        for (j, &i) in idx[1..=k].iter().enumerate() {
            if i >= nv {
                return Err(parse_err(
                    ln,
                    t[j + 1].0,
                    format!("vertex index {i} out of range (0..{nv})"),
                ));
            }
        }
        for j in 2..k {
            faces.push([idx[1], idx[j], idx[j + 1]]);
        }
    }
    Ok(TriMesh::new(vertices, faces))
}

/// Loads `.obj` or `.off` by extension.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
    {
        Some(e) if e == "off" => read_off(&text),
        _ => read_obj(&text),
    }
}

pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("off") => write_off(mesh),
        _ => write_obj(mesh),
    };
    Ok(fs::write(path, text)?)
}

/// Header line followed by comma-separated rows.
fn write_table(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Numeric rows of a CSV with the given header.
pub fn read_table(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    if first.trim() != header {
        return Err(parse_err(
            1,
            1,
            format!("expected header '{header}', found '{}'", first.trim()),
        ));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (ln, line) in lines {
        let ln = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(width);
        let mut col = 1;
        for field in line.split(',') {
            let f = field.trim();
            let lead = field.len() - field.trim_start().len();
            row.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(ln, col + lead, format!("expected a number, found '{f}'")))?,
            );
            col += field.len() + 1;
        }
        if row.len() != width {
            return Err(parse_err(
                ln,
                1,
                format!("expected {width} fields, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_profile_csv(profile: &AxisymProfile) -> String {
    write_table("rho,z", profile.samples.iter().map(|s| vec![s[0], s[1]]))
}

/// Reads a `rho,z` table and checks it (negative radii are rejected).
pub fn read_profile_csv(text: &str) -> Result<AxisymProfile> {
    let rows = read_table(text, "rho,z")?;
    let p = AxisymProfile::new(rows.into_iter().map(|r| [r[0], r[1]]).collect());
    p.validate_basic()?;
    Ok(p)
}

pub fn load_profile(path: &Path) -> Result<AxisymProfile> {
    read_profile_csv(&fs::read_to_string(path)?)
}

pub fn write_isothermal_csv(iso: &IsothermalMap) -> String {
    write_table("s,t,u", (0..iso.s.len()).map(|k| vec![iso.s[k], iso.t[k], iso.u[k]]))
}

pub const HISTORY_CSV_HEADER: &str = "iteration,W,sigma,lambda,stepSize,residual";

pub fn write_history_csv(history: &[HistoryRow]) -> String {
    let mut s = String::from(HISTORY_CSV_HEADER);
    s.push('\n');
    for h in history {
        let vals = [h.willmore, h.sigma, h.lambda, h.step_size, h.residual].map(fmt_f64);
        s.push_str(&format!("{},{}\n", h.iteration, vals.join(",")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn obj_round_trip_is_exact() {
        let m = icosphere(2, 1.3).unwrap();
        let s = write_obj(&m);
        let back = read_obj(&s).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.faces, m.faces);
        assert_eq!(write_obj(&back), s);
    }

    #[test]
    fn off_round_trip_is_exact() {
        let m = icosphere(1, 0.7).unwrap();
        let back = read_off(&write_off(&m)).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.faces, m.faces);
    }

    #[test]
    fn obj_errors_carry_positions() {
        match read_obj("v 0 0 0\nv 1 0 x\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("{other:?}"),
        }
        match read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 7)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn obj_polygons_and_slashes() {
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn profile_csv() {
        let p = AxisymProfile::new(vec![[0.0, -1.0], [0.1 + 0.2, 0.0], [0.0, 1.0]]);
        let s = write_profile_csv(&p);
        assert_eq!(read_profile_csv(&s).unwrap().samples, p.samples);
        match read_profile_csv("rho,z\n0,1\n0.5, abc\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 6)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_profile_csv("rho,z\n0,0\n-0.5,1\n0,2\n"),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn history_iteration_column() {
        let h = vec![HistoryRow {
            iteration: 3,
            willmore: 12.5,
            sigma: 0.5,
            lambda: -1.0,
            step_size: 0.25,
            residual: 1e-3,
            segment: 0,
        }];
        let s = write_history_csv(&h);
        assert!(s.starts_with("iteration,W,sigma,lambda,stepSize,residual\n3,1.2500000000000000e1,"));
    }
}
