//! Plain-text dump in the Conic Benchmark Format (CBF, version 3).
//!
//! A problem `min c'x, Ax = b, Gx + s = h, s in K` is written as
//!
//! ```text
//! VAR      n free scalars
//! CON      Ax - b in L=, then h - Gx in L+ / Q for each LP and SOC block
//! PSDCON   one affine matrix expression per PSD block
//! ```
//!
//! Off-diagonal `svec` entries are divided by `sqrt(2)` to recover matrix
//! entries. [`read`] accepts exactly what [`write`] produces.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cones::svec_index;
use crate::problem::{Cone, ConicProblem};

#[derive(Debug, Error, PartialEq)]
pub enum CbfError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported CBF feature: {0}")]
    Unsupported(String),
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

pub fn write(p: &ConicProblem) -> String {
    let n = p.num_vars();
    let neq = p.num_equalities();
    let mut out = String::new();
    let mut scalar_cones: Vec<(&str, usize)> = Vec::new();
    if neq > 0 {
        scalar_cones.push(("L=", neq));
    }
    let mut psd = Vec::new();
    for cone in &p.cones {
        match *cone {
            Cone::Nonnegative(d) => scalar_cones.push(("L+", d)),
            Cone::SecondOrder(d) => scalar_cones.push(("Q", d)),
            Cone::Psd(k) => psd.push(k),
        }
    }
    let scalar_rows: usize = scalar_cones.iter().map(|c| c.1).sum();

    let _ = writeln!(out, "VER\n3\n\nOBJSENSE\nMIN\n\nVAR\n{n} 1\nF {n}\n");
    if !psd.is_empty() {
        let _ = writeln!(out, "PSDCON\n{}", psd.len());
        for k in &psd {
            let _ = writeln!(out, "{k}");
        }
        out.push('\n');
    }
    if scalar_rows > 0 {
        let _ = writeln!(out, "CON\n{scalar_rows} {}", scalar_cones.len());
        for (name, d) in &scalar_cones {
            let _ = writeln!(out, "{name} {d}");
        }
        out.push('\n');
    }

    let obj: Vec<_> = p.c.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
    if !obj.is_empty() {
        let _ = writeln!(out, "OBJACOORD\n{}", obj.len());
        for (j, v) in obj {
            let _ = writeln!(out, "{j} {}", fmt_f(*v));
        }
        out.push('\n');
    }

    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    let mut hcoord = Vec::new();
    let mut dcoord = Vec::new();
    for i in 0..neq {
        for j in 0..n {
            if p.a[(i, j)] != 0.0 {
                acoord.push((i, j, p.a[(i, j)]));
            }
        }
        if p.b[i] != 0.0 {
            bcoord.push((i, -p.b[i]));
        }
    }
    let mut row = neq;
    let mut off = 0;
    let mut psd_idx = 0;
    for cone in &p.cones {
        let d = cone.dim();
        match *cone {
            Cone::Psd(k) => {
                for col in 0..k {
                    for r in col..k {
                        let idx = off + svec_index(k, r, col);
                        let f = if r == col { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                        for j in 0..n {
                            let g = p.g[(idx, j)];
                            if g != 0.0 {
                                hcoord.push((psd_idx, j, r, col, -g * f));
                            }
                        }
                        if p.h[idx] != 0.0 {
                            dcoord.push((psd_idx, r, col, p.h[idx] * f));
                        }
                    }
                }
                psd_idx += 1;
            }
            _ => {
                for t in 0..d {
                    for j in 0..n {
                        let g = p.g[(off + t, j)];
                        if g != 0.0 {
                            acoord.push((row + t, j, -g));
                        }
                    }
                    if p.h[off + t] != 0.0 {
                        bcoord.push((row + t, p.h[off + t]));
                    }
                }
                row += d;
            }
        }
        off += d;
    }

    if !hcoord.is_empty() {
        let _ = writeln!(out, "HCOORD\n{}", hcoord.len());
        for (k, j, r, c, v) in hcoord {
            let _ = writeln!(out, "{k} {j} {r} {c} {}", fmt_f(v));
        }
        out.push('\n');
    }
    if !dcoord.is_empty() {
        let _ = writeln!(out, "DCOORD\n{}", dcoord.len());
        for (k, r, c, v) in dcoord {
            let _ = writeln!(out, "{k} {r} {c} {}", fmt_f(v));
        }
        out.push('\n');
    }
    if !acoord.is_empty() {
        let _ = writeln!(out, "ACOORD\n{}", acoord.len());
        for (i, j, v) in acoord {
            let _ = writeln!(out, "{i} {j} {}", fmt_f(v));
        }
        out.push('\n');
    }
    if !bcoord.is_empty() {
        let _ = writeln!(out, "BCOORD\n{}", bcoord.len());
        for (i, v) in bcoord {
            let _ = writeln!(out, "{i} {}", fmt_f(v));
        }
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Some(l);
        }
        None
    }

    fn err(&self, msg: impl Into<String>) -> CbfError {
        CbfError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn fields(&mut self) -> Result<Vec<&'a str>, CbfError> {
        let l = self.next().ok_or_else(|| self.err("unexpected end of input"))?;
        Ok(l.split_whitespace().collect())
    }

    fn usize(&self, s: &str) -> Result<usize, CbfError> {
        s.parse().map_err(|_| self.err(format!("expected integer, found {s:?}")))
    }

    fn f64(&self, s: &str) -> Result<f64, CbfError> {
        s.parse().map_err(|_| self.err(format!("expected number, found {s:?}")))
    }

    fn count(&mut self) -> Result<usize, CbfError> {
        let f = self.fields()?;
        self.usize(f[0])
    }
}

/// Parses a dump produced by [`write`].
pub fn read(text: &str) -> Result<ConicProblem, CbfError> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
        line: 0,
    };
    let mut n = 0;
    let mut scalar_cones: Vec<(String, usize)> = Vec::new();
    let mut psd: Vec<usize> = Vec::new();
    let mut c = Vec::new();
    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    let mut hcoord = Vec::new();
    let mut dcoord = Vec::new();

    while let Some(key) = lines.next() {
        match key {
            "VER" => {
                let v = lines.count()?;
                if v != 3 {
                    return Err(CbfError::Unsupported(format!("version {v}")));
                }
            }
            "OBJSENSE" => {
                let s = lines.fields()?;
                if s[0] != "MIN" {
                    return Err(CbfError::Unsupported(format!("objective sense {}", s[0])));
                }
            }
            "VAR" => {
                let f = lines.fields()?;
                n = lines.usize(f[0])?;
                let k = lines.usize(f.get(1).copied().unwrap_or("0"))?;
                for _ in 0..k {
                    let f = lines.fields()?;
                    if f[0] != "F" {
                        return Err(CbfError::Unsupported(format!("variable domain {}", f[0])));
                    }
                }
                c = vec![0.0; n];
            }
            "PSDCON" => {
                let k = lines.count()?;
                for _ in 0..k {
                    psd.push(lines.count()?);
                }
            }
            "CON" => {
                let f = lines.fields()?;
                let k = lines.usize(f.get(1).copied().unwrap_or("0"))?;
                for _ in 0..k {
                    let f = lines.fields()?;
                    if f.len() < 2 {
                        return Err(lines.err("cone line needs a name and a size"));
                    }
                    let d = lines.usize(f[1])?;
                    scalar_cones.push((f[0].to_string(), d));
                }
            }
            "OBJACOORD" => {
                for _ in 0..lines.count()? {
                    let f = lines.fields()?;
                    let j = lines.usize(f[0])?;
                    if j >= n {
                        return Err(lines.err("objective index out of range"));
                    }
                    c[j] = lines.f64(f[1])?;
                }
            }
            "ACOORD" => {
                for _ in 0..lines.count()? {
                    let f = lines.fields()?;
                    acoord.push((lines.usize(f[0])?, lines.usize(f[1])?, lines.f64(f[2])?));
                }
            }
            "BCOORD" => {
                for _ in 0..lines.count()? {
                    let f = lines.fields()?;
                    bcoord.push((lines.usize(f[0])?, lines.f64(f[1])?));
                }
            }
            "HCOORD" => {
                for _ in 0..lines.count()? {
                    let f = lines.fields()?;
                    hcoord.push((
                        lines.usize(f[0])?,
                        lines.usize(f[1])?,
                        lines.usize(f[2])?,
                        lines.usize(f[3])?,
                        lines.f64(f[4])?,
                    ));
                }
            }
            "DCOORD" => {
                for _ in 0..lines.count()? {
                    let f = lines.fields()?;
                    dcoord.push((
                        lines.usize(f[0])?,
                        lines.usize(f[1])?,
                        lines.usize(f[2])?,
                        lines.f64(f[3])?,
                    ));
                }
            }
            other => return Err(CbfError::Unsupported(format!("section {other}"))),
        }
    }

    let neq = match scalar_cones.first() {
        Some((name, d)) if name == "L=" => *d,
        _ => 0,
    };
    let mut cones = Vec::new();
    for (name, d) in scalar_cones.iter().skip(usize::from(neq > 0)) {
        cones.push(match name.as_str() {
            "L+" => Cone::Nonnegative(*d),
            "Q" => Cone::SecondOrder(*d),
            other => return Err(CbfError::Unsupported(format!("cone {other}"))),
        });
    }
    let scalar_dim: usize = cones.iter().map(Cone::dim).sum();
    let mut psd_off = Vec::new();
    let mut off = scalar_dim;
    for k in &psd {
        psd_off.push(off);
        off += k * (k + 1) / 2;
        cones.push(Cone::Psd(*k));
    }
    let m = off;
    let mut a = DMatrix::zeros(neq, n);
    let mut b = DVector::zeros(neq);
    let mut g = DMatrix::zeros(m, n);
    let mut h = DVector::zeros(m);
    let total_rows = neq + scalar_dim;
    for (i, j, v) in acoord {
        if i >= total_rows || j >= n {
            return Err(CbfError::Unsupported("ACOORD index out of range".into()));
        }
        if i < neq {
            a[(i, j)] = v;
        } else {
            g[(i - neq, j)] = -v;
        }
    }
    for (i, v) in bcoord {
        if i >= total_rows {
            return Err(CbfError::Unsupported("BCOORD index out of range".into()));
        }
        if i < neq {
            b[i] = -v;
        } else {
            h[i - neq] = v;
        }
    }
    let psd_row = |k: usize, r: usize, col: usize| -> Result<(usize, f64), CbfError> {
        let side = *psd.get(k).ok_or_else(|| CbfError::Unsupported("PSD index".into()))?;
        let (r, col) = if r >= col { (r, col) } else { (col, r) };
        if r >= side {
            return Err(CbfError::Unsupported("PSD entry out of range".into()));
        }
        let f = if r == col { 1.0 } else { std::f64::consts::SQRT_2 };
        Ok((psd_off[k] + svec_index(side, r, col), f))
    };
    for (k, j, r, col, v) in hcoord {
        let (idx, f) = psd_row(k, r, col)?;
        g[(idx, j)] = -v * f;
    }
    for (k, r, col, v) in dcoord {
        let (idx, f) = psd_row(k, r, col)?;
        h[idx] = v * f;
    }
    Ok(ConicProblem::new(DVector::from_vec(c), g, h, cones).with_equalities(a, b))
}
