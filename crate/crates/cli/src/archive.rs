//! Off-line archive: `manifest.json` plus the binary table `table.bin`.
//!
//! The manifest records the hash of the off-line part of the configuration and the SHA-256
//! of the table file. Loading checks both before any data is used.

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use homs_core::cell::{CellBoundary, CouplingTemperature, FirstOrderCellSet, SecondOrderCellSet};
use homs_core::homog::{HomogenizedCoefficients, TableEntry, TemperatureTable};
use homs_core::materials::MaterialLaw;
use homs_core::mesh::{Mesh, Phase};
use homs_core::tensor::{Mat2, Tensor4};
use serde::{Deserialize, Serialize};

use crate::binio::*;
use crate::config::{hex_digest, SimulationConfig};
use crate::error::CliError;
use crate::meshio::mesh_to_text;

pub const MANIFEST: &str = "manifest.json";
pub const TABLE: &str = "table.bin";
pub const COEFFICIENTS: &str = "coefficients.csv";
const MAGIC: &[u8; 8] = b"HOMSTAB1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureTiming {
    pub temperature: f64,
    pub first_order_seconds: f64,
    pub second_order_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_hash: String,
    /// SHA-256 of the cell mesh in the plain-text mesh format.
    pub mesh_hash: String,
    pub law_hash: String,
    pub payload_sha256: String,
    pub temperatures: Vec<f64>,
    pub cell_nodes: usize,
    pub second_order: bool,
    pub cell_solves: usize,
    pub timings: Vec<TemperatureTiming>,
    pub total_seconds: f64,
}

pub fn mesh_hash(mesh: &Mesh) -> String {
    hex_digest(mesh_to_text(mesh).as_bytes())
}

/// Column names of [`coefficients_csv`]; tensor indices are 1-based.
pub fn coefficient_columns() -> Vec<String> {
    let mut cols = vec!["T0".to_string(), "S".into(), "rho".into()];
    for m in ["k", "lambda", "lambda_star", "beta", "beta_star"] {
        for i in 1..=2 {
            for j in 1..=2 {
                cols.push(format!("{m}{i}{j}"));
            }
        }
    }
    for n in 0..16 {
        cols.push(format!("c{}{}{}{}", n / 8 + 1, (n / 4) % 2 + 1, (n / 2) % 2 + 1, n % 2 + 1));
    }
    cols
}

/// One row per table temperature with every homogenized coefficient.
pub fn coefficients_csv(table: &TemperatureTable) -> String {
    let mut s = coefficient_columns().join(",");
    s.push('\n');
    for e in &table.entries {
        let row: Vec<String> = hom_values(&e.hom).iter().map(|v| format!("{v:.12e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn hom_values(h: &HomogenizedCoefficients) -> Vec<f64> {
    let mut v = vec![h.temperature, h.s_hat, h.rho_hat];
    for m in [&h.k_hat, &h.lambda_hat, &h.lambda_hat_star, &h.beta_hat, &h.beta_hat_star] {
        v.extend(m.0.iter().flatten());
    }
    v.extend(h.c_hat.0.iter().flatten().flatten().flatten());
    v
}

const HOM_LEN: usize = 3 + 5 * 4 + 16;

fn hom_from(v: &[f64]) -> HomogenizedCoefficients {
    let mat = |o: usize| Mat2([[v[o], v[o + 1]], [v[o + 2], v[o + 3]]]);
    let mut c = Tensor4::ZERO;
    for (n, x) in v[23..39].iter().enumerate() {
        c.0[n / 8][(n / 4) % 2][(n / 2) % 2][n % 2] = *x;
    }
    HomogenizedCoefficients {
        temperature: v[0],
        s_hat: v[1],
        rho_hat: v[2],
        k_hat: mat(3),
        lambda_hat: mat(7),
        lambda_hat_star: mat(11),
        beta_hat: mat(15),
        beta_hat_star: mat(19),
        c_hat: c,
    }
}

fn write_first<W: Write>(w: &mut W, s: &FirstOrderCellSet) -> io::Result<()> {
    put_f64(w, s.temperature)?;
    for (_, _, f) in s.entries() {
        put_f64s(w, f)?;
    }
    Ok(())
}

fn read_first<R: Read>(r: &mut R, nodes: usize) -> io::Result<FirstOrderCellSet> {
    let mut s = FirstOrderCellSet::zeros(nodes, get_f64(r)?);
    for (_, comps, f) in s.entries_mut() {
        *f = get_f64s(r, Some(comps * nodes))?;
    }
    Ok(s)
}

fn write_second<W: Write>(w: &mut W, s: &SecondOrderCellSet) -> io::Result<()> {
    put_f64(w, s.temperature)?;
    put_f64(w, s.coupling_temperature)?;
    for (_, _, f) in s.entries() {
        put_f64s(w, f)?;
    }
    Ok(())
}

fn read_second<R: Read>(r: &mut R, nodes: usize) -> io::Result<SecondOrderCellSet> {
    let t = get_f64(r)?;
    let ct = get_f64(r)?;
    let mut s = SecondOrderCellSet::zeros(nodes, t, ct);
    for (_, comps, f) in s.entries_mut() {
        *f = get_f64s(r, Some(comps * nodes))?;
    }
    Ok(s)
}

fn write_mesh<W: Write>(w: &mut W, mesh: &Mesh) -> io::Result<()> {
    let coords: Vec<f64> = mesh.nodes().iter().flatten().copied().collect();
    put_f64s(w, &coords)?;
    put_u64(w, mesh.triangle_count() as u64)?;
    for (t, p) in mesh.triangles().iter().zip(mesh.phases()) {
        for &v in t {
            put_u64(w, v as u64)?;
        }
        put_u64(w, p.index() as u64)?;
    }
    Ok(())
}

fn invalid_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn read_mesh<R: Read>(r: &mut R) -> io::Result<Mesh> {
    let coords = get_f64s(r, None)?;
    if coords.len() % 2 != 0 {
        return Err(invalid_data("odd coordinate count"));
    }
    let nodes: Vec<[f64; 2]> = coords.chunks(2).map(|c| [c[0], c[1]]).collect();
    let n = get_u64(r)? as usize;
    if n > 1 << 28 {
        return Err(invalid_data("implausible triangle count"));
    }
    let mut tris = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    for _ in 0..n {
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = get_u64(r)? as usize;
        }
        tris.push(t);
        phases.push(match get_u64(r)? {
            0 => Phase::Matrix,
            1 => Phase::Inclusion,
            p => return Err(invalid_data(format!("unknown phase {p}"))),
        });
    }
    Mesh::new(nodes, tris, phases).map_err(|e| invalid_data(e.to_string()))
}

/// Serializes a table; the material law is not stored, it comes from the configuration.
pub fn encode_table(table: &TemperatureTable) -> Vec<u8> {
    let mut w = Vec::new();
    let inner = (|| -> io::Result<()> {
        w.write_all(MAGIC)?;
        write_mesh(&mut w, &table.mesh)?;
        put_f64s(&mut w, &table.temperatures)?;
        put_u64(&mut w, (table.boundary == CellBoundary::Dirichlet) as u64)?;
        put_u64(&mut w, (table.coupling == CouplingTemperature::Reference) as u64)?;
        put_f64(&mut w, table.reference_temperature)?;
        for e in &table.entries {
            write_first(&mut w, &e.first)?;
            write_first(&mut w, &e.d_first)?;
            put_f64s(&mut w, &hom_values(&e.hom))?;
            put_f64s(&mut w, &hom_values(&e.d_hom))?;
            match &e.second {
                Some(s) => {
                    put_u64(&mut w, 1)?;
                    write_second(&mut w, s)?;
                }
                None => put_u64(&mut w, 0)?,
            }
        }
        Ok(())
    })();
    inner.expect("writing to memory cannot fail");
    w
}

pub fn decode_table(bytes: &[u8], law: MaterialLaw) -> io::Result<TemperatureTable> {
    let mut r = bytes;
    expect_magic(&mut r, MAGIC)?;
    let mesh = read_mesh(&mut r)?;
    let nodes = mesh.node_count();
    let temperatures = get_f64s(&mut r, None)?;
    let boundary = if get_u64(&mut r)? == 1 {
        CellBoundary::Dirichlet
    } else {
        CellBoundary::Periodic
    };
    let coupling = if get_u64(&mut r)? == 1 {
        CouplingTemperature::Reference
    } else {
        CouplingTemperature::Local
    };
    let reference_temperature = get_f64(&mut r)?;
    let mut entries = Vec::with_capacity(temperatures.len());
    for _ in &temperatures {
        let first = read_first(&mut r, nodes)?;
        let d_first = read_first(&mut r, nodes)?;
        let hom = hom_from(&get_f64s(&mut r, Some(HOM_LEN))?);
        let d_hom = hom_from(&get_f64s(&mut r, Some(HOM_LEN))?);
        let second = match get_u64(&mut r)? {
            0 => None,
            1 => Some(read_second(&mut r, nodes)?),
            f => return Err(invalid_data(format!("bad second-order flag {f}"))),
        };
        entries.push(TableEntry {
            first,
            d_first,
            hom,
            d_hom,
            second,
        });
    }
    if !r.is_empty() {
        return Err(invalid_data("trailing bytes after the last table entry"));
    }
    Ok(TemperatureTable {
        temperatures,
        entries,
        mesh,
        boundary,
        coupling,
        reference_temperature,
        law,
    })
}

pub fn write_archive(dir: &Path, table: &TemperatureTable, mut manifest: Manifest) -> Result<Manifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let bytes = encode_table(table);
    manifest.payload_sha256 = hex_digest(&bytes);
    let table_path = dir.join(TABLE);
    let mut f = BufWriter::new(fs::File::create(&table_path).map_err(|e| CliError::io(&table_path, e))?);
    f.write_all(&bytes)
        .and_then(|_| f.flush())
        .map_err(|e| CliError::io(&table_path, e))?;
    let csv_path = dir.join(COEFFICIENTS);
    fs::write(&csv_path, coefficients_csv(table)).map_err(|e| CliError::io(&csv_path, e))?;
    let manifest_path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::archive(&path, e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CliError::archive(
            &path,
            format!("format version {} is not supported", manifest.format_version),
        ));
    }
    Ok(manifest)
}

/// Loads the table of an archive, refusing it unless it was built from a configuration with
/// the same off-line settings and the payload is intact.
pub fn load_archive(dir: &Path, config: &SimulationConfig) -> Result<(Manifest, TemperatureTable), CliError> {
    let manifest = read_manifest(dir)?;
    let expected = config.offline_hash();
    let law = config.law_hash();
    if manifest.law_hash != law {
        return Err(CliError::HashMismatch {
            path: dir.display().to_string(),
            found: manifest.law_hash,
            expected: law,
        });
    }
    if manifest.config_hash != expected {
        return Err(CliError::HashMismatch {
            path: dir.display().to_string(),
            found: manifest.config_hash,
            expected,
        });
    }
    let path = dir.join(TABLE);
    let mut bytes = Vec::new();
    BufReader::new(fs::File::open(&path).map_err(|e| CliError::io(&path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::io(&path, e))?;
    let digest = hex_digest(&bytes);
    if digest != manifest.payload_sha256 {
        return Err(CliError::archive(&path, "payload checksum does not match the manifest"));
    }
    let table = decode_table(&bytes, config.material_law()?).map_err(|e| CliError::archive(&path, e.to_string()))?;
    if mesh_hash(&table.mesh) != manifest.mesh_hash {
        return Err(CliError::archive(&path, "cell mesh does not match the manifest"));
    }
    Ok((manifest, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_round_trip() {
        let mut h = HomogenizedCoefficients::zero(400.0);
        h.s_hat = 1.5;
        h.k_hat = Mat2([[1.0, 2.0], [3.0, 4.0]]);
        h.beta_hat_star = Mat2([[-1.0, 0.5], [0.25, 9.0]]);
        for n in 0..16 {
            h.c_hat.0[n / 8][(n / 4) % 2][(n / 2) % 2][n % 2] = n as f64 + 0.5;
        }
        let v = hom_values(&h);
        assert_eq!(v.len(), HOM_LEN);
        assert_eq!(hom_from(&v), h);
        assert_eq!(coefficient_columns().len(), HOM_LEN);
    }
}
