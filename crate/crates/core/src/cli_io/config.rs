//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` or `;` are comments. Grouped settings use dotted
//! keys (`basis.m`, `gamma.kind`, `init.phi1.amp`, ...); scalar model
//! coefficients are top-level (`eps`, `nu`, `D`, `kappa`, `K`, `f0`, `f1`,
//! `delta`, `seed`). Every key is optional; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::snapshot;
use crate::basis::{Basis, BasisSpec, Dim, GridField};
use crate::error::{Error, Result};
use crate::model::{
    ConstitutiveSet, Coupling, GrowthRate, InteractionMatrix, Model, ModelParams, PhaseCoefficient, PressureLaw,
    RhoStar, State,
};
use crate::stepper::{Scheme, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `mean + amp·cos(mode·π·x)`
    Cos,
    /// `mean + amp·cos⁴(mode·π·x/2)`
    Cos4,
}

/// Initial profile of one field along the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub mean: f64,
    pub amp: f64,
    pub mode: u32,
}

impl Profile {
    pub const fn constant(mean: f64) -> Self {
        Self {
            kind: ProfileKind::Cos,
            mean,
            amp: 0.0,
            mode: 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let arg = self.mode as f64 * std::f64::consts::PI * x;
        match self.kind {
            ProfileKind::Cos => self.mean + self.amp * arg.cos(),
            ProfileKind::Cos4 => self.mean + self.amp * (0.5 * arg).cos().powi(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Profiles {
        phi1: Profile,
        phi2: Profile,
        rho: Profile,
        w: Profile,
        /// Amplitude of seeded uniform noise added to `φ1`, `φ2` at every node.
        noise: f64,
    },
    /// Prefix of a snapshot set `<prefix>_<field>.csv`.
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: Dim,
    pub modes: usize,
    pub grid_n: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub nu: f64,
    pub diffusion: f64,
    pub kappa: f64,
    pub eps: f64,
    pub k: f64,
    pub f0: f64,
    pub f1: f64,
    pub delta: f64,
    pub c: [[f64; 3]; 3],
    pub c_hat: f64,
    pub f: PressureLaw,
    pub gamma: GrowthRate,
    pub elasticity: PhaseCoefficient,
    pub consumption: PhaseCoefficient,
    pub coupling: Coupling,
    pub init: InitSpec,
    pub rho_star: RhoStar,
    pub output_dir: PathBuf,
    /// Snapshot cadence in diagnostic samples (0 disables snapshots).
    pub snapshot_every: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cs = ConstitutiveSet::default();
        let im = InteractionMatrix::default();
        Self {
            dim: Dim::One,
            modes: 32,
            grid_n: 96,
            scheme: Scheme::Imex1,
            dt: 1e-4,
            t_end: 0.5,
            output_every: 100,
            nu: 1.0,
            diffusion: 1.0,
            kappa: 1.0,
            eps: 0.01,
            k: cs.k,
            f0: cs.f0,
            f1: cs.f1,
            delta: 0.05,
            c: *im.c(),
            c_hat: im.c_hat(),
            f: cs.f,
            gamma: cs.gamma,
            elasticity: cs.elasticity,
            consumption: cs.consumption,
            coupling: cs.coupling,
            init: InitSpec::Profiles {
                phi1: Profile {
                    kind: ProfileKind::Cos,
                    mean: 0.35,
                    amp: 0.05,
                    mode: 1,
                },
                phi2: Profile {
                    kind: ProfileKind::Cos,
                    mean: 0.15,
                    amp: 0.05,
                    mode: 2,
                },
                rho: Profile::constant(0.5),
                w: Profile::constant(0.0),
                noise: 0.0,
            },
            rho_star: RhoStar::Constant(1.0),
            output_dir: PathBuf::from("out"),
            snapshot_every: 10,
            seed: 0,
        }
    }
}

/// Model, initial state and time-stepping settings resolved from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: Model,
    pub initial: State,
    pub scheme: SchemeConfig,
}

const KNOWN_KEYS: &[&str] = &[
    "basis.dim",
    "basis.m",
    "basis.n",
    "scheme.kind",
    "scheme.dt",
    "scheme.t_end",
    "scheme.output_every",
    "nu",
    "D",
    "kappa",
    "eps",
    "K",
    "f0",
    "f1",
    "delta",
    "seed",
    "c.matrix",
    "c.c_hat",
    "f.kind",
    "f.a",
    "f.b",
    "f.z0",
    "gamma.kind",
    "gamma.amp",
    "gamma.value",
    "E.kind",
    "E.base",
    "E.slope",
    "E.value",
    "A.kind",
    "A.base",
    "A.slope",
    "A.value",
    "g.kind",
    "g.alpha",
    "init.kind",
    "init.snapshot",
    "init.noise",
    "rho_star.kind",
    "rho_star.value",
    "rho_star.table",
    "output.dir",
    "output.snapshot_every",
];

fn profile_keys() -> impl Iterator<Item = String> {
    ["phi1", "phi2", "rho", "w"]
        .into_iter()
        .flat_map(|f| ["profile", "mean", "amp", "mode"].into_iter().map(move |p| format!("init.{f}.{p}")))
}

fn is_known(key: &str) -> bool {
    KNOWN_KEYS.contains(&key) || profile_keys().any(|k| k == key)
}

/// Key/value store that remembers which entries were consumed.
struct Entries {
    map: BTreeMap<String, (String, bool)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
            let key = k.trim().to_string();
            if !is_known(&key) {
                return Err(Error::UnknownKey(key));
            }
            if map.insert(key.clone(), (v.trim().to_string(), false)).is_some() {
                return Err(Error::config(key, "given more than once"));
            }
        }
        Ok(Self { map })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.map.get_mut(key).map(|(v, used)| {
            *used = true;
            v.clone()
        })
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => {
                let x: f64 = v.parse().map_err(|_| Error::config(key, format!("`{v}` is not a number")))?;
                if !x.is_finite() {
                    return Err(Error::config(key, "must be finite"));
                }
                Ok(x)
            }
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().find(|(_, (_, used))| !used) {
            None => Ok(()),
            Some((k, _)) => Err(Error::config(k, "not used by the selected kind")),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be non-negative, got {v}")))
    }
}

fn read_coefficient(e: &mut Entries, name: &str, default: PhaseCoefficient) -> Result<PhaseCoefficient> {
    let kind_key = format!("{name}.kind");
    let kind = e.raw(&kind_key).unwrap_or_else(|| match default {
        PhaseCoefficient::Constant { .. } => "const".into(),
        PhaseCoefficient::ClampPhi2 { .. } => "clamp".into(),
    });
    match kind.as_str() {
        "const" => {
            let d = match default {
                PhaseCoefficient::Constant { value } => value,
                PhaseCoefficient::ClampPhi2 { base, .. } => base,
            };
            Ok(PhaseCoefficient::Constant {
                value: e.f64_or(&format!("{name}.value"), d)?,
            })
        }
        "clamp" => {
            let (b0, s0) = match default {
                PhaseCoefficient::ClampPhi2 { base, slope } => (base, slope),
                PhaseCoefficient::Constant { value } => (value, 0.0),
            };
            Ok(PhaseCoefficient::ClampPhi2 {
                base: e.f64_or(&format!("{name}.base"), b0)?,
                slope: e.f64_or(&format!("{name}.slope"), s0)?,
            })
        }
        other => Err(Error::config(kind_key, format!("unknown kind `{other}` (const | clamp)"))),
    }
}

fn read_profile(e: &mut Entries, field: &str, default: Profile) -> Result<Profile> {
    let key = |p: &str| format!("init.{field}.{p}");
    let kind = match e.raw(&key("profile")).as_deref() {
        None => default.kind,
        Some("cos") => ProfileKind::Cos,
        Some("cos4") => ProfileKind::Cos4,
        Some(other) => return Err(Error::config(key("profile"), format!("unknown profile `{other}` (cos | cos4)"))),
    };
    let mode = e.usize_or(&key("mode"), default.mode as usize)?;
    Ok(Profile {
        kind,
        mean: e.f64_or(&key("mean"), default.mean)?,
        amp: e.f64_or(&key("amp"), default.amp)?,
        mode: u32::try_from(mode).map_err(|_| Error::config(key("mode"), "too large"))?,
    })
}

fn parse_table(key: &str, v: &str) -> Result<RhoStar> {
    let mut knots = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (t, x) = item
            .split_once(':')
            .ok_or_else(|| Error::config(key, format!("`{item}` is not `t:value`")))?;
        let t: f64 = t.trim().parse().map_err(|_| Error::config(key, format!("bad time `{t}`")))?;
        let x: f64 = x.trim().parse().map_err(|_| Error::config(key, format!("bad value `{x}`")))?;
        knots.push((t, x));
    }
    RhoStar::table(knots).map_err(|e| Error::config(key, e.to_string()))
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let d = RunConfig::default();

        let dim = Dim::from_usize(e.usize_or("basis.dim", 1)?).map_err(|_| Error::config("basis.dim", "must be 1 or 2"))?;
        let modes = e.usize_or("basis.m", d.modes)?;
        if modes == 0 {
            return Err(Error::config("basis.m", "must be at least 1"));
        }
        let grid_n = e.usize_or("basis.n", d.grid_n.max(BasisSpec::min_grid(modes)))?;
        if grid_n < BasisSpec::min_grid(modes) {
            return Err(Error::config(
                "basis.n",
                format!("must be at least {} for m = {modes}", BasisSpec::min_grid(modes)),
            ));
        }

        let scheme = match e.raw("scheme.kind").as_deref() {
            None | Some("imex1") => Scheme::Imex1,
            Some("rk4") => Scheme::Rk4,
            Some(o) => return Err(Error::config("scheme.kind", format!("unknown scheme `{o}` (imex1 | rk4)"))),
        };
        let dt = positive("scheme.dt", e.f64_or("scheme.dt", d.dt)?)?;
        let t_end = non_negative("scheme.t_end", e.f64_or("scheme.t_end", d.t_end)?)?;
        let output_every = e.usize_or("scheme.output_every", d.output_every)?;
        SchemeConfig::new(dt, t_end, scheme, output_every).map_err(|err| match err {
            Error::InvalidParameter { name, reason } => Error::config(
                match name {
                    "t_end" => "scheme.t_end",
                    "output_every" => "scheme.output_every",
                    _ => "scheme.dt",
                },
                reason,
            ),
            other => other,
        })?;

        let nu = positive("nu", e.f64_or("nu", d.nu)?)?;
        let diffusion = positive("D", e.f64_or("D", d.diffusion)?)?;
        let kappa = non_negative("kappa", e.f64_or("kappa", d.kappa)?)?;
        let eps = positive("eps", e.f64_or("eps", d.eps)?)?;
        let k = positive("K", e.f64_or("K", d.k)?)?;
        let f0 = positive("f0", e.f64_or("f0", d.f0)?)?;
        let f1 = positive("f1", e.f64_or("f1", d.f1)?)?;
        let delta = positive("delta", e.f64_or("delta", d.delta)?)?;
        let seed = e.usize_or("seed", d.seed as usize)? as u64;

        let c = match e.raw("c.matrix") {
            None => d.c,
            Some(v) if v == "default" => d.c,
            Some(v) => {
                let vals: Vec<f64> = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::config("c.matrix", "expected 9 comma-separated numbers"))?;
                if vals.len() != 9 || vals.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config("c.matrix", "expected 9 finite numbers (row-major)"));
                }
                std::array::from_fn(|i| std::array::from_fn(|j| vals[3 * i + j]))
            }
        };
        let c_hat = positive("c.c_hat", e.f64_or("c.c_hat", d.c_hat)?)?;

        let f = match e.raw("f.kind").as_deref() {
            None | Some("linear") => PressureLaw::Linear {
                a: positive("f.a", e.f64_or("f.a", 1.0)?)?,
                z0: e.f64_or("f.z0", 0.5)?,
            },
            Some("softplus") => PressureLaw::Softplus {
                a: positive("f.a", e.f64_or("f.a", 0.9)?)?,
                b: non_negative("f.b", e.f64_or("f.b", 0.2)?)?,
                z0: e.f64_or("f.z0", 0.5)?,
            },
            Some(o) => return Err(Error::config("f.kind", format!("unknown kind `{o}` (linear | softplus)"))),
        };
        let gamma = match e.raw("gamma.kind").as_deref() {
            None | Some("tanh") => GrowthRate::Tanh {
                amp: e.f64_or("gamma.amp", 0.5)?,
            },
            Some("const") => GrowthRate::Constant {
                value: e.f64_or("gamma.value", 0.5)?,
            },
            Some(o) => return Err(Error::config("gamma.kind", format!("unknown kind `{o}` (tanh | const)"))),
        };
        let elasticity = read_coefficient(&mut e, "E", d.elasticity)?;
        let consumption = read_coefficient(&mut e, "A", d.consumption)?;
        let coupling = match e.raw("g.kind").as_deref() {
            None | Some("product") => Coupling::Product {
                alpha: e.f64_or("g.alpha", 2.0)?,
            },
            Some("zero") => Coupling::Zero,
            Some(o) => return Err(Error::config("g.kind", format!("unknown kind `{o}` (product | zero)"))),
        };

        let init = match e.raw("init.kind").as_deref() {
            None | Some("profiles") => {
                let InitSpec::Profiles { phi1, phi2, rho, w, .. } = d.init else {
                    unreachable!("default init uses profiles")
                };
                InitSpec::Profiles {
                    phi1: read_profile(&mut e, "phi1", phi1)?,
                    phi2: read_profile(&mut e, "phi2", phi2)?,
                    rho: read_profile(&mut e, "rho", rho)?,
                    w: read_profile(&mut e, "w", w)?,
                    noise: non_negative("init.noise", e.f64_or("init.noise", 0.0)?)?,
                }
            }
            Some("snapshot") => InitSpec::Snapshot(PathBuf::from(
                e.raw("init.snapshot")
                    .ok_or_else(|| Error::config("init.snapshot", "required when init.kind = snapshot"))?,
            )),
            Some(o) => return Err(Error::config("init.kind", format!("unknown kind `{o}` (profiles | snapshot)"))),
        };

        let rho_star = match e.raw("rho_star.kind").as_deref() {
            None | Some("const") => RhoStar::Constant(e.f64_or("rho_star.value", 1.0)?),
            Some("table") => {
                let v = e
                    .raw("rho_star.table")
                    .ok_or_else(|| Error::config("rho_star.table", "required when rho_star.kind = table"))?;
                parse_table("rho_star.table", &v)?
            }
            Some(o) => return Err(Error::config("rho_star.kind", format!("unknown kind `{o}` (const | table)"))),
        };
        let output_dir = e.raw("output.dir").map(PathBuf::from).unwrap_or(d.output_dir);
        let snapshot_every = e.usize_or("output.snapshot_every", d.snapshot_every)?;
        e.finish()?;

        Ok(Self {
            dim,
            modes,
            grid_n,
            scheme,
            dt,
            t_end,
            output_every,
            nu,
            diffusion,
            kappa,
            eps,
            k,
            f0,
            f1,
            delta,
            c,
            c_hat,
            f,
            gamma,
            elasticity,
            consumption,
            coupling,
            init,
            rho_star,
            output_dir,
            snapshot_every,
            seed,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse_str(&text)
    }

    /// Complete text form; parsing it yields an equal config.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("basis.dim", self.dim.as_usize().to_string());
        kv("basis.m", self.modes.to_string());
        kv("basis.n", self.grid_n.to_string());
        kv(
            "scheme.kind",
            match self.scheme {
                Scheme::Imex1 => "imex1",
                Scheme::Rk4 => "rk4",
            }
            .into(),
        );
        kv("scheme.dt", format!("{:?}", self.dt));
        kv("scheme.t_end", format!("{:?}", self.t_end));
        kv("scheme.output_every", self.output_every.to_string());
        for (k, v) in [
            ("nu", self.nu),
            ("D", self.diffusion),
            ("kappa", self.kappa),
            ("eps", self.eps),
            ("K", self.k),
            ("f0", self.f0),
            ("f1", self.f1),
            ("delta", self.delta),
        ] {
            kv(k, format!("{v:?}"));
        }
        kv("seed", self.seed.to_string());
        kv(
            "c.matrix",
            self.c.iter().flatten().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", "),
        );
        kv("c.c_hat", format!("{:?}", self.c_hat));
        match self.f {
            PressureLaw::Linear { a, z0 } => {
                kv("f.kind", "linear".into());
                kv("f.a", format!("{a:?}"));
                kv("f.z0", format!("{z0:?}"));
            }
            PressureLaw::Softplus { a, b, z0 } => {
                kv("f.kind", "softplus".into());
                kv("f.a", format!("{a:?}"));
                kv("f.b", format!("{b:?}"));
                kv("f.z0", format!("{z0:?}"));
            }
        }
        match self.gamma {
            GrowthRate::Tanh { amp } => {
                kv("gamma.kind", "tanh".into());
                kv("gamma.amp", format!("{amp:?}"));
            }
            GrowthRate::Constant { value } => {
                kv("gamma.kind", "const".into());
                kv("gamma.value", format!("{value:?}"));
            }
        }
        for (name, coef) in [("E", self.elasticity), ("A", self.consumption)] {
            match coef {
                PhaseCoefficient::Constant { value } => {
                    kv(&format!("{name}.kind"), "const".into());
                    kv(&format!("{name}.value"), format!("{value:?}"));
                }
                PhaseCoefficient::ClampPhi2 { base, slope } => {
                    kv(&format!("{name}.kind"), "clamp".into());
                    kv(&format!("{name}.base"), format!("{base:?}"));
                    kv(&format!("{name}.slope"), format!("{slope:?}"));
                }
            }
        }
        match self.coupling {
            Coupling::Zero => kv("g.kind", "zero".into()),
            Coupling::Product { alpha } => {
                kv("g.kind", "product".into());
                kv("g.alpha", format!("{alpha:?}"));
            }
        }
        match &self.init {
            InitSpec::Profiles {
                phi1,
                phi2,
                rho,
                w,
                noise,
            } => {
                kv("init.kind", "profiles".into());
                for (name, p) in [("phi1", phi1), ("phi2", phi2), ("rho", rho), ("w", w)] {
                    let kind = match p.kind {
                        ProfileKind::Cos => "cos",
                        ProfileKind::Cos4 => "cos4",
                    };
                    kv(&format!("init.{name}.profile"), kind.into());
                    kv(&format!("init.{name}.mean"), format!("{:?}", p.mean));
                    kv(&format!("init.{name}.amp"), format!("{:?}", p.amp));
                    kv(&format!("init.{name}.mode"), p.mode.to_string());
                }
                kv("init.noise", format!("{noise:?}"));
            }
            InitSpec::Snapshot(p) => {
                kv("init.kind", "snapshot".into());
                kv("init.snapshot", p.display().to_string());
            }
        }
        match &self.rho_star {
            RhoStar::Constant(v) => {
                kv("rho_star.kind", "const".into());
                kv("rho_star.value", format!("{v:?}"));
            }
            RhoStar::Table(knots) => {
                kv("rho_star.kind", "table".into());
                kv(
                    "rho_star.table",
                    knots.iter().map(|(t, v)| format!("{t:?}:{v:?}")).collect::<Vec<_>>().join(", "),
                );
            }
        }
        kv("output.dir", self.output_dir.display().to_string());
        kv("output.snapshot_every", self.snapshot_every.to_string());
        s
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        BasisSpec::new(self.dim, self.modes, self.grid_n)
    }

    pub fn constitutive(&self) -> ConstitutiveSet {
        ConstitutiveSet {
            f: self.f,
            gamma: self.gamma,
            elasticity: self.elasticity,
            consumption: self.consumption,
            coupling: self.coupling,
            k: self.k,
            f0: self.f0,
            f1: self.f1,
        }
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        SchemeConfig::new(self.dt, self.t_end, self.scheme, self.output_every)
    }

    /// Builds the model and initial state.
    pub fn build(&self) -> Result<Setup> {
        let basis = Basis::new(self.basis_spec()?)?;
        let params = ModelParams::new(self.nu, self.diffusion, self.kappa, self.eps)?;
        let interaction = InteractionMatrix::new(self.c, self.c_hat)?;
        let initial = self.initial_state(&basis)?;
        Ok(Setup {
            model: Model::new(basis, self.constitutive(), interaction, params, self.rho_star.clone()),
            initial,
            scheme: self.scheme_config()?,
        })
    }

    fn initial_state(&self, basis: &Basis) -> Result<State> {
        match &self.init {
            InitSpec::Profiles {
                phi1,
                phi2,
                rho,
                w,
                noise,
            } => {
                let mut p1 = basis.sample(|x| phi1.eval(x[0]));
                let mut p2 = basis.sample(|x| phi2.eval(x[0]));
                if *noise > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    for v in p1.0.iter_mut().chain(p2.0.iter_mut()) {
                        *v += noise * rng.gen_range(-1.0..=1.0);
                    }
                }
                State::from_grid(
                    basis,
                    &p1,
                    &p2,
                    &basis.sample(|x| rho.eval(x[0])),
                    &basis.sample(|x| w.eval(x[0])),
                )
            }
            InitSpec::Snapshot(prefix) => {
                let load = |field: &str| -> Result<GridField> {
                    let path = snapshot::field_path(prefix, field);
                    let snap = snapshot::read(&path)?;
                    if snap.spec.dim != basis.spec().dim || snap.spec.grid_n != basis.spec().grid_n {
                        return Err(Error::Snapshot {
                            path,
                            reason: "grid does not match basis.dim / basis.n".into(),
                        });
                    }
                    Ok(snap.values)
                };
                let mut s = State::from_grid(basis, &load("phi1")?, &load("phi2")?, &load("rho")?, &load("w")?)?;
                s.phi[0] = basis.forward(&load("phi0")?)?;
                Ok(s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(RunConfig::parse_str("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse_str("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn range_errors_name_the_key() {
        match RunConfig::parse_str("eps = -1") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "eps"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse_str("basis.m = 32\nbasis.n = 40") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "basis.n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_unused_keys_are_rejected() {
        assert!(matches!(RunConfig::parse_str("epsilon = 1"), Err(Error::UnknownKey(k)) if k == "epsilon"));
        assert!(matches!(
            RunConfig::parse_str("gamma.value = 0.3"),
            Err(Error::Config { key, .. }) if key == "gamma.value"
        ));
        assert!(RunConfig::parse_str("eps = 0.1\neps = 0.2").is_err());
    }

    #[test]
    fn emit_round_trips() {
        let text = "\
basis.m = 16
scheme.kind = rk4
scheme.dt = 1e-5
scheme.t_end = 0.01
eps = 0.001
f.kind = softplus
gamma.kind = const
gamma.value = 0.25
E.kind = const
E.value = 0.7
g.kind = zero
init.phi2.profile = cos4
init.phi2.amp = 0.2
init.phi2.mean = 0.0
rho_star.kind = table
rho_star.table = 0:1, 0.5:2.5
c.matrix = 0.5, -0.25, -0.25, -0.25, 0.5, -0.25, -0.25, -0.25, 0.5
";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert_eq!(RunConfig::parse_str(&cfg.emit()).unwrap(), cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse_str(&d.emit()).unwrap(), d);
    }

    #[test]
    fn default_builds_admissible_state() {
        let setup = RunConfig::default().build().unwrap();
        let rep = setup.model.validate_hypotheses(&setup.initial, 0.05, 0.5);
        assert!(rep.all_passed(), "{rep}");
    }
}
