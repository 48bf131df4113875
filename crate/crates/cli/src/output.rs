//! VTK, CSV and binary trajectory files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use homs_core::macroscale::{Snapshot, StepStats, TimeGrid, Trajectory};
use homs_core::mesh::Mesh;
use homs_core::metrics::{norm, Norm};

use crate::binio::*;
use crate::error::CliError;

pub enum PointData<'a> {
    Scalar(&'a str, &'a [f64]),
    /// Interleaved two-component field.
    Vector(&'a str, &'a [f64]),
}

/// Legacy ASCII unstructured grid with the element phases as cell data.
pub fn vtk_string(mesh: &Mesh, title: &str, data: &[PointData<'_>]) -> String {
    let mut s = String::new();
    let n = mesh.node_count();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let m = mesh.triangle_count();
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {m}\nSCALARS phase int 1\nLOOKUP_TABLE default");
    for p in mesh.phases() {
        let _ = writeln!(s, "{}", p.index());
    }
    if !data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for d in data {
        match d {
            PointData::Scalar(name, v) => {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v.iter() {
                    let _ = writeln!(s, "{x:e}");
                }
            }
            PointData::Vector(name, v) => {
                let _ = writeln!(s, "VECTORS {name} double");
                for c in v.chunks(2) {
                    let _ = writeln!(s, "{:e} {:e} 0", c[0], c[1]);
                }
            }
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_snapshot_vtk(path: &Path, mesh: &Mesh, snap: &Snapshot) -> Result<(), CliError> {
    let title = format!("step {} t = {}", snap.step, snap.time);
    let text = vtk_string(
        mesh,
        &title,
        &[
            PointData::Scalar("temperature", &snap.temperature),
            PointData::Scalar("potential", &snap.potential),
            PointData::Vector("displacement", &snap.displacement),
        ],
    );
    write_text(path, &text)
}

/// One line per stored snapshot with the L2 and H1-seminorms of every field.
pub fn trajectory_csv(mesh: &Mesh, traj: &Trajectory) -> String {
    let mut s = String::from("step,time,T_L2,T_H1,Phi_L2,Phi_H1,U_L2,U_H1,T_max\n");
    for snap in &traj.snapshots {
        let _ = write!(s, "{},{:.6}", snap.step, snap.time);
        for (f, comps) in [(&snap.temperature, 1), (&snap.potential, 1), (&snap.displacement, 2)] {
            for kind in [Norm::L2, Norm::H1Semi] {
                let _ = write!(s, ",{:.9e}", norm(mesh, f, comps, kind));
            }
        }
        let tmax = snap.temperature.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, ",{tmax:.9e}");
    }
    s
}

const TRAJ_MAGIC: &[u8; 8] = b"HOMSTRJ1";

pub fn encode_trajectory(traj: &Trajectory) -> Vec<u8> {
    let mut w = Vec::new();
    let inner = (|| -> io::Result<()> {
        w.write_all(TRAJ_MAGIC)?;
        put_f64(&mut w, traj.grid.dt)?;
        put_u64(&mut w, traj.grid.steps as u64)?;
        let st = &traj.stats;
        for v in [
            st.potential_solves,
            st.temperature_solves,
            st.displacement_solves,
            st.max_iterations,
            st.clamped_lookups,
        ] {
            put_u64(&mut w, v as u64)?;
        }
        put_u64(&mut w, traj.snapshots.len() as u64)?;
        for s in &traj.snapshots {
            put_u64(&mut w, s.step as u64)?;
            put_f64(&mut w, s.time)?;
            for f in [
                &s.temperature,
                &s.temperature_prev,
                &s.potential,
                &s.displacement,
                &s.displacement_prev,
                &s.displacement_prev2,
            ] {
                put_f64s(&mut w, f)?;
            }
        }
        Ok(())
    })();
    inner.expect("writing to memory cannot fail");
    w
}

pub fn decode_trajectory(bytes: &[u8]) -> io::Result<Trajectory> {
    let mut r = bytes;
    expect_magic(&mut r, TRAJ_MAGIC)?;
    let dt = get_f64(&mut r)?;
    let steps = get_u64(&mut r)? as usize;
    let grid = TimeGrid::new(dt, steps).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut c = [0usize; 5];
    for v in &mut c {
        *v = get_u64(&mut r)? as usize;
    }
    let stats = StepStats {
        potential_solves: c[0],
        temperature_solves: c[1],
        displacement_solves: c[2],
        max_iterations: c[3],
        clamped_lookups: c[4],
    };
    let count = get_u64(&mut r)? as usize;
    let mut snapshots = Vec::new();
    for _ in 0..count {
        let step = get_u64(&mut r)? as usize;
        let time = get_f64(&mut r)?;
        let mut f = || get_f64s(&mut r, None);
        snapshots.push(Snapshot {
            step,
            time,
            temperature: f()?,
            temperature_prev: f()?,
            potential: f()?,
            displacement: f()?,
            displacement_prev: f()?,
            displacement_prev2: f()?,
        });
    }
    if snapshots.is_empty() || !r.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "malformed trajectory file"));
    }
    Ok(Trajectory { grid, snapshots, stats })
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, encode_trajectory(traj)).map_err(|e| CliError::io(path, e))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_trajectory(&bytes).map_err(|e| CliError::archive(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use homs_core::mesh::build_rectangle_mesh;

    #[test]
    fn vtk_header_counts() {
        let mesh = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 2, 2).unwrap();
        let t = vec![1.0; mesh.node_count()];
        let s = vtk_string(&mesh, "x", &[PointData::Scalar("T", &t)]);
        assert!(s.contains("POINTS 9 double"));
        assert!(s.contains("CELLS 8 32"));
        assert!(s.contains("POINT_DATA 9"));
    }

    #[test]
    fn trajectory_round_trip() {
        let snap = Snapshot {
            step: 3,
            time: 0.3,
            temperature: vec![1.0, 2.0],
            temperature_prev: vec![0.5, 1.5],
            potential: vec![0.0, -1.0],
            displacement: vec![1.0, 2.0, 3.0, 4.0],
            displacement_prev: vec![0.0; 4],
            displacement_prev2: vec![-1.0; 4],
        };
        let traj = Trajectory {
            grid: TimeGrid::new(0.1, 3).unwrap(),
            snapshots: vec![snap.clone(), snap],
            stats: StepStats {
                potential_solves: 4,
                ..Default::default()
            },
        };
        let back = decode_trajectory(&encode_trajectory(&traj)).unwrap();
        assert_eq!(back.snapshots, traj.snapshots);
        assert_eq!(back.stats, traj.stats);
        assert_eq!(back.grid, traj.grid);
    }
}
