//! Model files. Two interchangeable encodings share one logical layout
//! (dimension count, mode sizes, bond ranks, then core entries in row-major
//! order, cores concatenated first to last):
//!
//! * binary, magic `TTMB`: u32 version, u32 d, d u64 mode sizes, d+1 u64
//!   ranks, then every core entry as little-endian f64;
//! * text, magic `TTMT`: same fields as whitespace-separated decimal lines,
//!   entries printed with shortest round-trip formatting.
//!
//! Readers dispatch on the magic. A `.meta.toml` sidecar written next to the
//! model records the grid and build provenance so a distribution can be
//! reconstructed from the pair.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDim};
use crate::tt::TtModel;

const MAGIC_BINARY: &[u8; 4] = b"TTMB";
const MAGIC_TEXT: &[u8; 4] = b"TTMT";
const VERSION: u32 = 1;

pub fn write_model_binary(model: &TtModel, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC_BINARY)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(model.d() as u32).to_le_bytes())?;
    for n in model.shape() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for r in model.ranks() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for core in model.cores() {
        for v in core.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_model_text(model: &TtModel, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "TTMT {VERSION}")?;
    writeln!(w, "d {}", model.d())?;
    let join = |v: &[usize]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(w, "shape {}", join(&model.shape()))?;
    writeln!(w, "ranks {}", join(&model.ranks()))?;
    for (k, core) in model.cores().iter().enumerate() {
        writeln!(w, "core {k}")?;
        for v in core.iter() {
            writeln!(w, "{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<TtModel> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 {
        return Err(Error::Format(format!(
            "{}: too short for a model file",
            path.display()
        )));
    }
    match &bytes[..4] {
        m if m == MAGIC_BINARY => read_binary(&bytes, path),
        m if m == MAGIC_TEXT => read_text(&bytes, path),
        _ => Err(Error::Format(format!(
            "{}: unrecognized magic; expected TTMB or TTMT",
            path.display()
        ))),
    }
}

fn fmt_err(path: &Path, what: &str) -> Error {
    Error::Format(format!("{}: {what}", path.display()))
}

fn read_binary(bytes: &[u8], path: &Path) -> Result<TtModel> {
    let mut at = 4usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = at.checked_add(n).ok_or_else(|| fmt_err(path, "overflow"))?;
        if end > bytes.len() {
            return Err(fmt_err(path, "truncated"));
        }
        let s = &bytes[at..end];
        at = end;
        Ok(s)
    };
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(fmt_err(path, &format!("unsupported version {version}")));
    }
    let d = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if d == 0 || d > 64 {
        return Err(fmt_err(path, &format!("implausible dimension count {d}")));
    }
    let mut shape = Vec::with_capacity(d);
    for _ in 0..d {
        shape.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
    }
    let mut ranks = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        ranks.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let len = ranks[k]
            .checked_mul(shape[k])
            .and_then(|v| v.checked_mul(ranks[k + 1]))
            .ok_or_else(|| fmt_err(path, "core size overflow"))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let core = Array3::from_shape_vec((ranks[k], shape[k], ranks[k + 1]), data)
            .map_err(|e| fmt_err(path, &e.to_string()))?;
        cores.push(core);
    }
    if at != bytes.len() {
        return Err(fmt_err(path, "trailing bytes after last core"));
    }
    TtModel::new(cores).map_err(|e| fmt_err(path, &e.to_string()))
}

fn expect_tok<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    word: &str,
    path: &Path,
) -> Result<()> {
    match tokens.next() {
        Some(t) if t == word => Ok(()),
        other => Err(fmt_err(path, &format!("expected {word:?}, got {other:?}"))),
    }
}

fn read_text(bytes: &[u8], path: &Path) -> Result<TtModel> {
    let text = std::str::from_utf8(bytes).map_err(|_| fmt_err(path, "not utf-8"))?;
    let mut tokens = text.split_ascii_whitespace();
    expect_tok(&mut tokens, "TTMT", path)?;
    let version: u32 = next_num(&mut tokens, path)?;
    if version != VERSION {
        return Err(fmt_err(path, &format!("unsupported version {version}")));
    }
    expect_tok(&mut tokens, "d", path)?;
    let d: usize = next_num(&mut tokens, path)?;
    if d == 0 || d > 64 {
        return Err(fmt_err(path, &format!("implausible dimension count {d}")));
    }
    expect_tok(&mut tokens, "shape", path)?;
    let shape: Vec<usize> = (0..d)
        .map(|_| next_num(&mut tokens, path))
        .collect::<Result<_>>()?;
    expect_tok(&mut tokens, "ranks", path)?;
    let ranks: Vec<usize> = (0..=d)
        .map(|_| next_num(&mut tokens, path))
        .collect::<Result<_>>()?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        expect_tok(&mut tokens, "core", path)?;
        let kk: usize = next_num(&mut tokens, path)?;
        if kk != k {
            return Err(fmt_err(path, &format!("core {kk} out of order")));
        }
        let len = ranks[k] * shape[k] * ranks[k + 1];
        let data: Vec<f64> = (0..len)
            .map(|_| next_num(&mut tokens, path))
            .collect::<Result<_>>()?;
        let core = Array3::from_shape_vec((ranks[k], shape[k], ranks[k + 1]), data)
            .map_err(|e| fmt_err(path, &e.to_string()))?;
        cores.push(core);
    }
    if tokens.next().is_some() {
        return Err(fmt_err(path, "trailing tokens after last core"));
    }
    TtModel::new(cores).map_err(|e| fmt_err(path, &e.to_string()))
}

fn next_num<'a, T: std::str::FromStr>(
    tokens: &mut impl Iterator<Item = &'a str>,
    path: &Path,
) -> Result<T> {
    let t = tokens
        .next()
        .ok_or_else(|| fmt_err(path, "unexpected end of file"))?;
    t.parse()
        .map_err(|_| fmt_err(path, &format!("bad number {t:?}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDimMeta {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

/// Sidecar describing how a stored model maps onto a world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub version: u32,
    pub world: String,
    pub state_dims: usize,
    pub action_dims: usize,
    pub eps: f64,
    pub max_rank: usize,
    pub build_seconds: f64,
    pub grid: Vec<GridDimMeta>,
}

impl ModelMeta {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(
            self.grid
                .iter()
                .map(|g| GridDim::new(g.lo, g.hi, g.nodes))
                .collect::<Result<_>>()?,
        )
    }

    pub fn from_grid(
        world: &str,
        state_dims: usize,
        eps: f64,
        max_rank: usize,
        build_seconds: f64,
        grid: &Grid,
    ) -> Self {
        ModelMeta {
            version: VERSION,
            world: world.to_string(),
            state_dims,
            action_dims: grid.d() - state_dims,
            eps,
            max_rank,
            build_seconds,
            grid: grid
                .dims()
                .iter()
                .map(|d| GridDimMeta {
                    lo: d.lo,
                    hi: d.hi,
                    nodes: d.n,
                })
                .collect(),
        }
    }
}

pub fn meta_path(model_path: &Path) -> PathBuf {
    let mut s = model_path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_meta(meta: &ModelMeta, model_path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(meta)
        .map_err(|e| Error::Format(format!("sidecar encode: {e}")))?;
    let mut f = fs::File::create(meta_path(model_path))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_meta(model_path: &Path) -> Result<ModelMeta> {
    let p = meta_path(model_path);
    let mut text = String::new();
    fs::File::open(&p)?.read_to_string(&mut text)?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::ArrayD;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_model(seed: u64) -> TtModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = ArrayD::from_shape_fn(ndarray::IxDyn(&[4, 5, 3]), |_| rng.gen::<f64>());
        crate::tt::tt_svd(&dense, 0.0, 100).unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ttm");
        let model = random_model(1);
        write_model_binary(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(model.shape(), back.shape());
        assert_eq!(model.ranks(), back.ranks());
        for (a, b) in model.cores().iter().zip(back.cores()) {
            assert_eq!(a, b);
        }
        // same model, same bytes
        let path2 = dir.path().join("m2.ttm");
        write_model_binary(&model, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ttmt");
        let model = random_model(2);
        write_model_text(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        for (a, b) in model.cores().iter().zip(back.cores()) {
            assert_eq!(a, b, "shortest round-trip formatting must be lossless");
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ttm");
        let model = random_model(3);
        write_model_binary(&model, &path).unwrap();

        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_model(&path), Err(Error::Format(_))));

        write_model_binary(&model, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(read_model(&path), Err(Error::Format(_))));

        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(3);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_model(&path), Err(Error::Format(_))));

        write_model_binary(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9;
        fs::write(&path, &bytes).unwrap();
        let err = read_model(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ttm");
        write_model_binary(&random_model(4), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 8]);
        fs::write(&path, &bytes).unwrap();
        assert!(read_model(&path).is_err());
    }

    #[test]
    fn sidecar_round_trips_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ttm");
        let grid = Grid::new(vec![
            GridDim::new(-1.25, 1.25, 100).unwrap(),
            GridDim::new(-1.0, 1.0, 191).unwrap(),
        ])
        .unwrap();
        let meta = ModelMeta::from_grid("pngrid", 1, 1e-3, 300, 0.42, &grid);
        write_meta(&meta, &path).unwrap();
        let back = read_meta(&path).unwrap();
        assert_eq!(meta, back);
        let g2 = back.grid().unwrap();
        assert_eq!(g2.d(), 2);
        assert_eq!(g2.dim(1).n, 191);
    }
}
