//! Line-oriented `key = value` configuration with `[section]` headers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    /// `None` selects the experiment's own default drift.
    pub drift: Option<String>,
    pub drift_params: Vec<f64>,
    pub drifts: Vec<String>,
    pub levels: Vec<u32>,
    pub n: usize,
    pub t: f64,
    pub horizon: f64,
    pub dt: f64,
    pub x0: f64,
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub x_points: usize,
    pub paths: usize,
    pub samples: usize,
    pub draws: usize,
    pub m: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            out: PathBuf::from("out"),
            workers: None,
            drift: None,
            drift_params: Vec::new(),
            drifts: vec!["sin".into(), "cos".into(), "scaled_tanh".into()],
            levels: vec![4, 16, 64],
            n: 4,
            t: 1.0,
            horizon: 1.0,
            dt: 1e-3,
            x0: 0.0,
            times: vec![0.25, 0.5, 1.0],
            gaps: vec![0.04, 0.16, 0.64],
            r: 1.0,
            p: 2.0,
            q: 4.0,
            x_points: 11,
            paths: 100_000,
            samples: 200_000,
            draws: 100,
            m: 1.0,
        }
    }
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("experiment", &["experiment", "seed", "out", "workers"]),
    ("drift", &["drift", "drift_params", "drifts", "levels"]),
    ("grid", &["n", "t", "T", "dt", "x0", "times", "gaps"]),
    ("sobolev", &["R", "p", "q", "x_points"]),
    ("ensemble", &["paths", "samples", "draws"]),
    ("bound", &["M"]),
];

fn section_keys(name: &str) -> Option<&'static [&'static str]> {
    SECTIONS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k)
}

fn known_key(key: &str) -> bool {
    SECTIONS.iter().any(|(_, keys)| keys.contains(&key))
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, HarnessError> {
    value.parse().map_err(|_| HarnessError::Parse {
        line,
        message: format!("cannot parse `{value}` for `{key}`"),
    })
}

fn list<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>, HarnessError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| scalar(key, v.trim(), line))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), HarnessError> {
        match key {
            "experiment" => self.experiment = Some(value.to_string()),
            "seed" => self.seed = scalar(key, value, line)?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = Some(scalar(key, value, line)?),
            "drift" => self.drift = Some(value.to_string()),
            "drift_params" => self.drift_params = list(key, value, line)?,
            "drifts" => self.drifts = list(key, value, line)?,
            "levels" => self.levels = list(key, value, line)?,
            "n" => self.n = scalar(key, value, line)?,
            "t" => self.t = scalar(key, value, line)?,
            "T" => self.horizon = scalar(key, value, line)?,
            "dt" => self.dt = scalar(key, value, line)?,
            "x0" => self.x0 = scalar(key, value, line)?,
            "times" => self.times = list(key, value, line)?,
            "gaps" => self.gaps = list(key, value, line)?,
            "R" => self.r = scalar(key, value, line)?,
            "p" => self.p = scalar(key, value, line)?,
            "q" => self.q = scalar(key, value, line)?,
            "x_points" => self.x_points = scalar(key, value, line)?,
            "paths" => self.paths = scalar(key, value, line)?,
            "samples" => self.samples = scalar(key, value, line)?,
            "draws" => self.draws = scalar(key, value, line)?,
            "M" => self.m = scalar(key, value, line)?,
            other => {
                return Err(HarnessError::UnknownKey {
                    key: other.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }

    /// Parses config text. Keys may appear before any section header or in
    /// the section that owns them.
    pub fn parse_str(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        let mut section: Option<&'static [&'static str]> = None;
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| HarnessError::Parse {
                    line,
                    message: "unterminated section header".into(),
                })?;
                section = Some(section_keys(name.trim()).ok_or_else(|| {
                    HarnessError::UnknownSection {
                        name: name.trim().to_string(),
                        line,
                    }
                })?);
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let allowed = match section {
                Some(keys) => keys.contains(&key),
                None => known_key(key),
            };
            if !allowed {
                return Err(HarnessError::UnknownKey {
                    key: key.to_string(),
                    line,
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(HarnessError::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key.to_string());
            cfg.set(key, value, line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Constraint(m));
        if self.n == 0 {
            return fail("n must be ≥ 1".into());
        }
        for (name, v) in [
            ("t", self.t),
            ("T", self.horizon),
            ("dt", self.dt),
            ("R", self.r),
            ("M", self.m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.p >= 1.0) {
            return fail(format!("p must be ≥ 1, got {}", self.p));
        }
        if !(self.q > 2.0) {
            return fail(format!("q must exceed 2, got {}", self.q));
        }
        if self.paths < 2 || self.samples < 2 {
            return fail("ensembles need at least two samples".into());
        }
        if self.draws == 0 {
            return fail("draws must be ≥ 1".into());
        }
        if self.x_points < 2 {
            return fail("x_points must be ≥ 2".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be ≥ 1".into());
        }
        if self.times.iter().chain(&self.gaps).any(|v| !(*v > 0.0)) {
            return fail("times and gaps must be positive".into());
        }
        if self.levels.contains(&0) {
            return fail("mollification levels must be ≥ 1".into());
        }
        if let Some(d) = &self.drift {
            crate::drift::get_drift(d, &self.drift_params)
                .map_err(|e| HarnessError::Constraint(e.to_string()))?;
        }
        for d in &self.drifts {
            crate::drift::get_drift(d, &[]).map_err(|e| HarnessError::Constraint(e.to_string()))?;
        }
        if let Some(name) = &self.experiment {
            super::experiment_index(name)?;
        }
        Ok(())
    }

    pub fn parse_config(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse_str(&text)
    }

    /// Writes every field, so `parse_str(serialize())` reproduces `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("[experiment]\n");
        if let Some(e) = &self.experiment {
            let _ = writeln!(s, "experiment = {e}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        if let Some(w) = self.workers {
            let _ = writeln!(s, "workers = {w}");
        }
        s.push_str("\n[drift]\n");
        if let Some(d) = &self.drift {
            let _ = writeln!(s, "drift = {d}");
        }
        let _ = writeln!(s, "drift_params = {}", join(&self.drift_params));
        let _ = writeln!(s, "drifts = {}", self.drifts.join(", "));
        let _ = writeln!(s, "levels = {}", join(&self.levels));
        s.push_str("\n[grid]\n");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "T = {}", self.horizon);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "x0 = {}", self.x0);
        let _ = writeln!(s, "times = {}", join(&self.times));
        let _ = writeln!(s, "gaps = {}", join(&self.gaps));
        s.push_str("\n[sobolev]\n");
        let _ = writeln!(s, "R = {}", self.r);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "x_points = {}", self.x_points);
        s.push_str("\n[ensemble]\n");
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "draws = {}", self.draws);
        s.push_str("\n[bound]\n");
        let _ = writeln!(s, "M = {}", self.m);
        s
    }

    /// `key=value` pairs joined by `;`, used as the parameter column.
    pub fn flattened(&self) -> String {
        self.serialize()
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('['))
            .map(|l| l.replacen(" = ", "=", 1))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse_str("experiment = eta_check\nn = 4\nt = 1\n").unwrap();
        assert_eq!(cfg.experiment.as_deref(), Some("eta_check"));
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.drift, None);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = ExperimentConfig::parse_str("n = 2\n\n[grid]\nstepsz = 0.1\n").unwrap_err();
        assert_eq!(
            err,
            HarnessError::UnknownKey {
                key: "stepsz".into(),
                line: 4
            }
        );
        assert!(err.to_string().contains("stepsz") && err.to_string().contains('4'));
    }

    #[test]
    fn key_in_wrong_section_is_rejected() {
        let err = ExperimentConfig::parse_str("[bound]\nn = 2\n").unwrap_err();
        assert!(matches!(err, HarnessError::UnknownKey { line: 2, .. }));
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            experiment: Some("time_continuity".into()),
            seed: u64::MAX,
            workers: Some(3),
            drift: Some("scaled_tanh".into()),
            drift_params: vec![0.5, 3.0],
            dt: 2.5e-4,
            x0: -0.3,
            gaps: vec![0.01, 0.1],
            r: 1.5,
            q: 6.0,
            ..Default::default()
        };
        let text = cfg.serialize();
        assert_eq!(ExperimentConfig::parse_str(&text).unwrap(), cfg);
    }

    #[test]
    fn constraint_violations() {
        assert!(matches!(
            ExperimentConfig::parse_str("dt = -1"),
            Err(HarnessError::Constraint(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("drift = tan"),
            Err(HarnessError::Constraint(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("seed = -4"),
            Err(HarnessError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("[nope]"),
            Err(HarnessError::UnknownSection { .. })
        ));
    }
}
