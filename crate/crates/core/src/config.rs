//! Flat `key = value` run settings, layered as
//! defaults < config file < `VOINAV_*` environment < command-line flags.
//!
//! ```text
//! # comments and blank lines are ignored
//! kind = terrain
//! size = 32
//! bandwidth = 27
//! starts = 17,28; 9,4; 27,1
//! ```

use std::path::{Path, PathBuf};

use crate::engine::{FiAccounting, SimConfig};
use crate::error::{Error, Result};
use crate::grid::CellCoord;
use crate::harness::{MapKind, WorldSource};
use crate::supporter::RoiWeightOrder;

pub const ENV_PREFIX: &str = "VOINAV_";

/// Every recognised key, in the order [`format_settings`] writes them.
pub const KEYS: &[&str] = &[
    "kind",
    "size",
    "map_seed",
    "map",
    "seekers",
    "starts",
    "goals",
    "supporter_start",
    "seeker_window",
    "supporter_window",
    "sample_interval",
    "comm_period",
    "bandwidth",
    "cell_size",
    "lambda1",
    "w1",
    "w2",
    "alpha",
    "beta",
    "sigma",
    "roi_order",
    "phi_min",
    "phi_max",
    "phi_obs",
    "phi_u",
    "max_steps",
    "lawnmower_spacing",
    "fi_accounting",
    "seed",
];

/// Everything needed to set up one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub kind: MapKind,
    pub size: usize,
    pub map_seed: u64,
    /// Load the world from this file instead of generating it.
    pub map: Option<PathBuf>,
    pub seekers: usize,
    pub starts: Option<Vec<CellCoord>>,
    pub goals: Option<Vec<CellCoord>>,
    pub supporter_start: Option<CellCoord>,
    pub sim: SimConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            kind: MapKind::Terrain,
            size: 32,
            map_seed: 0,
            map: None,
            seekers: 3,
            starts: None,
            goals: None,
            supporter_start: None,
            sim: SimConfig::default(),
        }
    }
}

impl RunSettings {
    pub fn world_source(&self) -> WorldSource {
        match &self.map {
            Some(p) => WorldSource::File(p.clone()),
            None => WorldSource::Generated { kind: self.kind, size: self.size, seed: self.map_seed },
        }
    }

    /// Set one key from its textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got {v:?}"));
        fn num<T: std::str::FromStr>(v: &str, err: impl Fn() -> Error) -> Result<T> {
            v.parse().map_err(|_| err())
        }
        let int = || bad("a nonnegative integer");
        let real = || bad("a number");
        let sim = &mut self.sim;
        match key {
            "kind" => self.kind = v.parse()?,
            "size" => self.size = num(v, int)?,
            "map_seed" => self.map_seed = num(v, int)?,
            "map" => self.map = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "seekers" => self.seekers = num(v, int)?,
            "starts" => self.starts = Some(parse_coords(v)?),
            "goals" => self.goals = Some(parse_coords(v)?),
            "supporter_start" => self.supporter_start = Some(parse_coord(v)?),
            "seeker_window" => sim.seeker_window = num(v, int)?,
            "supporter_window" => sim.supporter_window = num(v, int)?,
            "sample_interval" => sim.sample_interval = num(v, int)?,
            "comm_period" => sim.comm_period = num(v, int)?,
            "bandwidth" => sim.bandwidth = num(v, int)?,
            "cell_size" => sim.cell_size = num(v, int)?,
            "lambda1" => sim.lambda1 = num(v, real)?,
            "w1" => sim.utility.w1 = num(v, real)?,
            "w2" => sim.utility.w2 = num(v, real)?,
            "alpha" => sim.utility.alpha = num(v, real)?,
            "beta" => sim.utility.beta = num(v, real)?,
            "sigma" => sim.utility.sigma = num(v, real)?,
            "roi_order" => sim.utility.roi_order = v.parse::<RoiWeightOrder>()?,
            "phi_min" => sim.occupancy.phi_min = num(v, || bad("an integer"))?,
            "phi_max" => sim.occupancy.phi_max = num(v, || bad("an integer"))?,
            "phi_obs" => sim.occupancy.phi_obs = num(v, || bad("an integer"))?,
            "phi_u" => sim.occupancy.phi_u = num(v, || bad("an integer"))?,
            "max_steps" => sim.max_steps = if v.is_empty() { None } else { Some(num(v, int)?) },
            "lawnmower_spacing" => sim.lawnmower_spacing = if v.is_empty() { None } else { Some(num(v, int)?) },
            "fi_accounting" => sim.fi_accounting = v.parse::<FiAccounting>()?,
            "seed" => sim.seed = num(v, int)?,
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Apply a config file's text. Errors carry the 1-based line number.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            // `#` starts a comment anywhere on the line
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.apply(k.trim(), v).map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_config(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        self.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config(e))))
    }

    /// Apply `VOINAV_<KEY>` variables (key upper-cased). Other variables are ignored.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        // fixed order, independent of the process environment's
        vars.sort();
        for (k, v) in vars {
            let key = k[ENV_PREFIX.len()..].to_ascii_lowercase();
            self.apply(&key, &v).map_err(|e| Error::Config(format!("{k}: {}", strip_config(e))))?;
        }
        Ok(())
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// `x,y` with optional parentheses.
pub fn parse_coord(s: &str) -> Result<CellCoord> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (x, y) = t.split_once(',').ok_or_else(|| Error::Config(format!("bad coordinate {s:?}, expected x,y")))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad coordinate {s:?}")));
    Ok(CellCoord::new(p(x)?, p(y)?))
}

/// Coordinates separated by `;`, e.g. `17,28; 9,4`.
pub fn parse_coords(s: &str) -> Result<Vec<CellCoord>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_coord).collect()
}

fn coords_text(cs: &[CellCoord]) -> String {
    cs.iter().map(|c| format!("{},{}", c.x, c.y)).collect::<Vec<_>>().join("; ")
}

/// Render settings in the config file format; applying the result to the
/// defaults reproduces `s`.
pub fn format_settings(s: &RunSettings) -> String {
    let sim = &s.sim;
    let u = &sim.utility;
    let o = &sim.occupancy;
    let opt = |v: Option<String>| v.unwrap_or_default();
    let values: Vec<(&str, String)> = vec![
        ("kind", format!("{:?}", s.kind).to_ascii_lowercase()),
        ("size", s.size.to_string()),
        ("map_seed", s.map_seed.to_string()),
        ("map", opt(s.map.as_ref().map(|p| p.display().to_string()))),
        ("seekers", s.seekers.to_string()),
        ("starts", opt(s.starts.as_deref().map(coords_text))),
        ("goals", opt(s.goals.as_deref().map(coords_text))),
        ("supporter_start", opt(s.supporter_start.map(|c| format!("{},{}", c.x, c.y)))),
        ("seeker_window", sim.seeker_window.to_string()),
        ("supporter_window", sim.supporter_window.to_string()),
        ("sample_interval", sim.sample_interval.to_string()),
        ("comm_period", sim.comm_period.to_string()),
        ("bandwidth", sim.bandwidth.to_string()),
        ("cell_size", sim.cell_size.to_string()),
        ("lambda1", sim.lambda1.to_string()),
        ("w1", u.w1.to_string()),
        ("w2", u.w2.to_string()),
        ("alpha", u.alpha.to_string()),
        ("beta", u.beta.to_string()),
        ("sigma", u.sigma.to_string()),
        ("roi_order", format!("{:?}", u.roi_order).to_ascii_lowercase()),
        ("phi_min", o.phi_min.to_string()),
        ("phi_max", o.phi_max.to_string()),
        ("phi_obs", o.phi_obs.to_string()),
        ("phi_u", o.phi_u.to_string()),
        ("max_steps", opt(sim.max_steps.map(|v| v.to_string()))),
        ("lawnmower_spacing", opt(sim.lawnmower_spacing.map(|v| v.to_string()))),
        (
            "fi_accounting",
            match sim.fi_accounting {
                FiAccounting::Broadcast => "broadcast".into(),
                FiAccounting::PerSeeker => "per-seeker".into(),
            },
        ),
        ("seed", sim.seed.to_string()),
    ];
    debug_assert_eq!(values.len(), KEYS.len());
    let mut out = String::new();
    for (k, v) in values {
        // empty optional values are left commented out
        if v.is_empty() {
            out.push_str(&format!("# {k} =\n"));
        } else {
            out.push_str(&format!("{k} = {v}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_comments_are_ignored() {
        let mut s = RunSettings::default();
        s.apply_text("bandwidth = 9   # budget\n  # whole line\nkind = maze#tight\n").unwrap();
        assert_eq!(s.sim.bandwidth, 9);
        assert_eq!(s.kind, MapKind::Maze);
    }

    #[test]
    fn defaults_round_trip() {
        let d = RunSettings::default();
        let mut back = RunSettings::default();
        back.apply_text(&format_settings(&d)).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.sim.sample_interval, 3);
        assert_eq!(d.sim.seeker_window, 3);
        assert_eq!(d.sim.utility.alpha, 1000.0);
    }

    #[test]
    fn custom_settings_round_trip() {
        let mut s = RunSettings::default();
        s.apply_text(
            "kind = maze\nsize=30\n# note\n\nstarts = (17,28); 9,4\ngoals = 20,13;27,31\nsupporter_start = 8,8\n\
             fi_accounting = per-seeker\nroi_order = formula\nmax_steps = 99\nsigma = 1.5\nmap = some.map\n",
        )
        .unwrap();
        assert_eq!(s.kind, MapKind::Maze);
        assert_eq!(s.starts, Some(vec![CellCoord::new(17, 28), CellCoord::new(9, 4)]));
        assert_eq!(s.sim.fi_accounting, FiAccounting::PerSeeker);
        assert_eq!(s.sim.max_steps, Some(99));
        let mut back = RunSettings::default();
        back.apply_text(&format_settings(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn errors_name_the_line() {
        let mut s = RunSettings::default();
        let e = s.apply_text("size = 8\nbandwidth = lots\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = s.apply_text("nonsense = 1\n").unwrap_err().to_string();
        assert!(e.contains("unknown setting"), "{e}");
        assert!(s.apply_text("just words\n").is_err());
    }

    #[test]
    fn env_overrides_and_ignores_foreign_vars() {
        let mut s = RunSettings::default();
        s.apply_text("bandwidth = 9\n").unwrap();
        s.apply_env(vec![
            ("VOINAV_BANDWIDTH".to_string(), "54".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ])
        .unwrap();
        assert_eq!(s.sim.bandwidth, 54);
        assert!(s.apply_env(vec![("VOINAV_NOPE".to_string(), "1".to_string())]).is_err());
    }

    #[test]
    fn every_key_is_accepted() {
        let text = format_settings(&RunSettings::default());
        for k in KEYS {
            assert!(text.contains(&format!("{k} =")), "missing {k}");
        }
    }
}
