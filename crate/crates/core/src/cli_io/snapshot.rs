//! Field snapshots: `# key=value` header lines, then `x[,y],value` rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::basis::{Basis, BasisSpec, Dim, GridField};
use crate::error::{Error, Result};
use crate::model::State;

pub const FIELDS: [&str; 5] = ["phi0", "phi1", "phi2", "rho", "w"];

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub spec: BasisSpec,
    pub t: f64,
    pub field: String,
    pub values: GridField,
}

/// `<prefix>_<field>.csv`
pub fn field_path(prefix: &Path, field: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("_{field}.csv"));
    PathBuf::from(s)
}

pub fn to_string(basis: &Basis, snap: &Snapshot) -> Result<String> {
    if snap.values.len() != basis.n_nodes() {
        return Err(Error::SizeMismatch {
            expected: basis.n_nodes(),
            found: snap.values.len(),
        });
    }
    let spec = basis.spec();
    let mut s = String::new();
    let _ = writeln!(s, "# dim={}", spec.dim.as_usize());
    let _ = writeln!(s, "# m={}", spec.modes);
    let _ = writeln!(s, "# N={}", spec.grid_n);
    let _ = writeln!(s, "# t={:.16e}", snap.t);
    let _ = writeln!(s, "# field={}", snap.field);
    for (x, v) in basis.node_coords().iter().zip(&snap.values.0) {
        for c in x {
            let _ = write!(s, "{c:.16e},");
        }
        let _ = writeln!(s, "{v:.16e}");
    }
    Ok(s)
}

pub fn write(path: &Path, basis: &Basis, snap: &Snapshot) -> Result<()> {
    std::fs::write(path, to_string(basis, snap)?)?;
    Ok(())
}

pub fn parse(path: &Path, text: &str) -> Result<Snapshot> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    let (mut dim, mut m, mut n, mut t, mut field) = (None, None, None, None, None);
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let (k, v) = h
                .trim()
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: header is not key=value", i + 1)))?;
            let v = v.trim();
            let int = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("bad {k} `{v}`")));
            match k.trim() {
                "dim" => dim = Some(int(v)?),
                "m" => m = Some(int(v)?),
                "N" => n = Some(int(v)?),
                "t" => t = Some(v.parse::<f64>().map_err(|_| bad(format!("bad t `{v}`")))?),
                "field" => field = Some(v.to_string()),
                other => return Err(bad(format!("unknown header `{other}`"))),
            }
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("");
        values.push(
            last.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad value `{last}`", i + 1)))?,
        );
    }
    let missing = |k: &str| bad(format!("missing header `{k}`"));
    let dim = Dim::from_usize(dim.ok_or_else(|| missing("dim"))?).map_err(|e| bad(e.to_string()))?;
    let spec = BasisSpec::new(dim, m.ok_or_else(|| missing("m"))?, n.ok_or_else(|| missing("N"))?)
        .map_err(|e| bad(e.to_string()))?;
    if values.len() != spec.n_nodes() {
        return Err(bad(format!("expected {} rows, found {}", spec.n_nodes(), values.len())));
    }
    Ok(Snapshot {
        spec,
        t: t.ok_or_else(|| missing("t"))?,
        field: field.ok_or_else(|| missing("field"))?,
        values: GridField(values),
    })
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Snapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse(path, &text)
}

/// Grid values of every field of `state`, in [`FIELDS`] order.
pub fn state_fields(basis: &Basis, state: &State) -> Result<[GridField; 5]> {
    Ok([
        basis.inverse(&state.phi[0])?,
        basis.inverse(&state.phi[1])?,
        basis.inverse(&state.phi[2])?,
        basis.inverse(&state.rho)?,
        state.w.clone(),
    ])
}

/// Writes one file per field under `<prefix>_<field>.csv`.
pub fn write_state(prefix: &Path, basis: &Basis, state: &State) -> Result<()> {
    for (name, values) in FIELDS.iter().zip(state_fields(basis, state)?) {
        let snap = Snapshot {
            spec: *basis.spec(),
            t: state.t,
            field: name.to_string(),
            values,
        };
        write(&field_path(prefix, name), basis, &snap)?;
    }
    Ok(())
}

/// Reads a state written by [`write_state`]; modal fields are re-projected.
pub fn read_state(prefix: &Path, basis: &Basis) -> Result<State> {
    let mut grids = Vec::with_capacity(5);
    let mut t = 0.0;
    for name in FIELDS {
        let path = field_path(prefix, name);
        let snap = read(&path)?;
        if snap.spec != *basis.spec() {
            return Err(Error::Snapshot {
                path,
                reason: "basis does not match".into(),
            });
        }
        t = snap.t;
        grids.push(snap.values);
    }
    let w = grids.pop().expect("five fields");
    let rho = grids.pop().expect("five fields");
    Ok(State {
        t,
        phi: [basis.forward(&grids[0])?, basis.forward(&grids[1])?, basis.forward(&grids[2])?],
        rho: basis.forward(&rho)?,
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let basis = Basis::new(BasisSpec::new(Dim::Two, 3, 6).unwrap()).unwrap();
        let values = GridField((0..36).map(|i| (i as f64 * 0.37).sin() / 3.0 + 1e-300 * i as f64).collect());
        let snap = Snapshot {
            spec: *basis.spec(),
            t: 0.1 + 0.2,
            field: "phi1".into(),
            values,
        };
        let text = to_string(&basis, &snap).unwrap();
        let back = parse(Path::new("mem"), &text).unwrap();
        assert_eq!(back, snap);
        assert!(back.values.0.iter().zip(&snap.values.0).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_truncated_file() {
        let text = "# dim=1\n# m=2\n# N=5\n# t=0\n# field=w\n0.1,1\n";
        assert!(parse(Path::new("mem"), text).is_err());
    }

    #[test]
    fn prefix_paths() {
        assert_eq!(field_path(Path::new("out/snap_000100"), "rho"), PathBuf::from("out/snap_000100_rho.csv"));
    }
}
