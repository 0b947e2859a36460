//! INI run configuration: parsing, defaults and validation.
//!
//! Sections and keys:
//!
//! - `[eos]` `gamma`, `K` (number or `static`), `a`
//! - `[grid]` `kind` (`radial` or `box`), `n`, `extent`
//! - `[initial]` `profile` (`static` or `gaussian`), `scale`, `amplitude`, `width`
//! - `[scheme]` `cfl`, `eps_hv`, `t_end`, `cadence`, `tail_exponent`, `blowup_factor`
//! - `[norms]` `s`, `delta`, `jmax`, `shell_n`, `monitor`
//! - `[picard]` `enabled`, `T`, `tol`, `max_iter`, `m0` (number or `auto`), `max_halvings`
//! - `[output]` `csv`, `dump_dir`, `manifest`
//!
//! Unknown sections and keys are rejected. Every default is materialized in
//! [`RunConfig`], which is what the run manifest records.

use std::path::Path;

use ini::Ini;
use makino_core::evolution::{PicardConfig, SchemeConfig, DEFAULT_HYPERVISCOSITY};
use makino_core::fluid::{EosParams, K_STATIC};
use makino_core::poisson::{resolve_static_k, DEFAULT_TAIL_EXPONENT};
use makino_core::wsobolev::WeightedNormSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Relative tolerance for treating `2/(gamma-1)` as an integer.
const INTEGER_TOL: f64 = 1e-9;

/// How `K` was specified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMode {
    /// Resolved by the hydrostatic balance of the `gamma = 6/5` profile.
    Static,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Radial,
    Box,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// The static `gamma = 6/5` solution with parameter `a`, times `scale`.
    Static,
    /// `w = amplitude exp(-r^2 / (2 width^2))`, `v = 0`.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EosSection {
    pub gamma: f64,
    pub k_mode: KMode,
    /// Resolved value of `K`.
    pub k: f64,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub kind: GridKind,
    pub n: usize,
    /// `r_max` for radial grids, the half-width for boxes.
    pub extent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSection {
    pub profile: Profile,
    /// Multiplies the static profile's `w`.
    pub scale: f64,
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSection {
    pub cfl: f64,
    /// Filter strength in units of `h^3` per unit speed.
    pub eps_hv: f64,
    pub t_end: f64,
    pub cadence: f64,
    pub tail_exponent: f64,
    pub blowup_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormsSection {
    pub s: f64,
    pub delta: f64,
    pub jmax: usize,
    pub shell_n: usize,
    /// Record the weighted norms of `(w, v)` at every cadence tick.
    pub monitor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardSection {
    pub enabled: bool,
    #[serde(rename = "T")]
    pub t: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// `None` uses the norm of the initial data.
    pub m0: Option<f64>,
    pub max_halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub csv: String,
    pub dump_dir: Option<String>,
    pub manifest: String,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eos: EosSection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub scheme: SchemeSection,
    pub norms: NormsSection,
    pub picard: PicardSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t_end = 0.5;
        Self {
            eos: EosSection {
                gamma: 1.2,
                k_mode: KMode::Static,
                k: K_STATIC,
                a: 1.0,
            },
            grid: GridSection {
                kind: GridKind::Radial,
                n: 1024,
                extent: 64.0,
            },
            initial: InitialSection {
                profile: Profile::Static,
                scale: 1.0,
                amplitude: 1.0,
                width: 1.0,
            },
            scheme: SchemeSection {
                cfl: 0.4,
                eps_hv: DEFAULT_HYPERVISCOSITY,
                t_end,
                cadence: t_end / 20.0,
                tail_exponent: DEFAULT_TAIL_EXPONENT,
                blowup_factor: 1e3,
            },
            norms: NormsSection {
                s: 2.6,
                delta: -1.2,
                jmax: 10,
                shell_n: 64,
                monitor: true,
            },
            picard: PicardSection {
                enabled: false,
                t: 0.05,
                tol: 1e-8,
                max_iter: 30,
                m0: None,
                max_halvings: 6,
            },
            output: OutputSection {
                csv: "series.csv".into(),
                dump_dir: None,
                manifest: "manifest.json".into(),
            },
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("eos", &["gamma", "K", "a"]),
    ("grid", &["kind", "n", "extent"]),
    ("initial", &["profile", "scale", "amplitude", "width"]),
    ("scheme", &["cfl", "eps_hv", "t_end", "cadence", "tail_exponent", "blowup_factor"]),
    ("norms", &["s", "delta", "jmax", "shell_n", "monitor"]),
    ("picard", &["enabled", "T", "tol", "max_iter", "m0", "max_halvings"]),
    ("output", &["csv", "dump_dir", "manifest"]),
];

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(v)
}

struct Reader<'a> {
    ini: &'a Ini,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|s| s.get(key)).map(unquote)
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(section, key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("[{section}] {key}: expected {what}, got {raw:?}"));
                None
            }
        }
    }

    fn f64(&mut self, section: &str, key: &str, slot: &mut f64) {
        if let Some(v) = self.parse(section, key, "a number") {
            *slot = v;
        }
    }

    fn usize(&mut self, section: &str, key: &str, slot: &mut usize) {
        if let Some(v) = self.parse(section, key, "a nonnegative integer") {
            *slot = v;
        }
    }

    fn bool(&mut self, section: &str, key: &str, slot: &mut bool) {
        if let Some(v) = self.parse(section, key, "true or false") {
            *slot = v;
        }
    }

    fn choice<T: Copy>(&mut self, section: &str, key: &str, options: &[(&str, T)], slot: &mut T) {
        let Some(raw) = self.raw(section, key) else { return };
        match options.iter().find(|(name, _)| *name == raw) {
            Some((_, v)) => *slot = *v,
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.errors.push(format!(
                    "[{section}] {key}: expected one of {}, got {raw:?}",
                    names.join(", ")
                ));
            }
        }
    }
}

/// Reads and validates an INI configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let ini = Ini::load_from_str_noescape(text).map_err(|e| CliError::Config(vec![format!("malformed config: {e}")]))?;
    let mut r = Reader {
        ini: &ini,
        errors: Vec::new(),
    };
    for (section, props) in ini.iter() {
        let name = section.unwrap_or("");
        let Some((_, keys)) = KEYS.iter().find(|(s, _)| *s == name) else {
            if section.is_some() || !props.is_empty() {
                r.errors.push(if name.is_empty() {
                    "keys outside any section".to_string()
                } else {
                    format!("unknown section [{name}]")
                });
            }
            continue;
        };
        for (key, _) in props.iter() {
            if !keys.contains(&key) {
                r.errors.push(format!("unknown key [{name}] {key}"));
            }
        }
    }

    let mut c = RunConfig::default();
    r.f64("eos", "gamma", &mut c.eos.gamma);
    r.f64("eos", "a", &mut c.eos.a);
    let mut k_explicit = None;
    if let Some(raw) = r.raw("eos", "K") {
        if raw == "static" {
            c.eos.k_mode = KMode::Static;
        } else {
            c.eos.k_mode = KMode::Explicit;
            k_explicit = r.parse("eos", "K", "a number or \"static\"");
        }
    }
    r.choice("grid", "kind", &[("radial", GridKind::Radial), ("box", GridKind::Box)], &mut c.grid.kind);
    r.usize("grid", "n", &mut c.grid.n);
    r.f64("grid", "extent", &mut c.grid.extent);
    r.choice(
        "initial",
        "profile",
        &[("static", Profile::Static), ("gaussian", Profile::Gaussian)],
        &mut c.initial.profile,
    );
    r.f64("initial", "scale", &mut c.initial.scale);
    r.f64("initial", "amplitude", &mut c.initial.amplitude);
    r.f64("initial", "width", &mut c.initial.width);
    r.f64("scheme", "cfl", &mut c.scheme.cfl);
    r.f64("scheme", "eps_hv", &mut c.scheme.eps_hv);
    r.f64("scheme", "t_end", &mut c.scheme.t_end);
    c.scheme.cadence = c.scheme.t_end / 20.0;
    r.f64("scheme", "cadence", &mut c.scheme.cadence);
    r.f64("scheme", "tail_exponent", &mut c.scheme.tail_exponent);
    r.f64("scheme", "blowup_factor", &mut c.scheme.blowup_factor);
    r.f64("norms", "s", &mut c.norms.s);
    r.f64("norms", "delta", &mut c.norms.delta);
    r.usize("norms", "jmax", &mut c.norms.jmax);
    r.usize("norms", "shell_n", &mut c.norms.shell_n);
    r.bool("norms", "monitor", &mut c.norms.monitor);
    r.bool("picard", "enabled", &mut c.picard.enabled);
    r.f64("picard", "T", &mut c.picard.t);
    r.f64("picard", "tol", &mut c.picard.tol);
    r.usize("picard", "max_iter", &mut c.picard.max_iter);
    r.usize("picard", "max_halvings", &mut c.picard.max_halvings);
    if let Some(raw) = r.raw("picard", "m0") {
        if raw != "auto" {
            c.picard.m0 = r.parse("picard", "m0", "a number or \"auto\"");
        }
    }
    if let Some(v) = r.raw("output", "csv") {
        c.output.csv = v.to_string();
    }
    if let Some(v) = r.raw("output", "dump_dir") {
        c.output.dump_dir = (!v.is_empty()).then(|| v.to_string());
    }
    if let Some(v) = r.raw("output", "manifest") {
        c.output.manifest = v.to_string();
    }

    let mut errors = r.errors;
    if let Some(k) = k_explicit {
        c.eos.k = k;
    }
    errors.extend(validation_errors(&c));
    if errors.is_empty() && c.eos.k_mode == KMode::Static {
        c.eos.k = resolve_static_k(c.eos.a).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    }
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(CliError::Config(errors))
    }
}

/// `[2/(gamma-1)]`, with values within a relative `1e-9` of an integer
/// snapped to it.
fn beta_floor(gamma: f64) -> (f64, f64, bool) {
    let beta = 2.0 / (gamma - 1.0);
    let near = beta.round();
    if (beta - near).abs() <= INTEGER_TOL * beta {
        (near, near, true)
    } else {
        (beta, beta.floor(), false)
    }
}

/// Checks the well-posedness window on `(gamma, s, delta)`. Each violated
/// bound yields one message quoting it.
pub fn hypothesis_errors(gamma: f64, s: f64, delta: f64) -> Vec<String> {
    let mut out = Vec::new();
    if !(gamma > 1.0 && gamma < 5.0 / 3.0) {
        out.push(format!("γ must lie in (1, 5/3), got γ = {gamma}"));
        return out;
    }
    let (beta, fl, integer) = beta_floor(gamma);
    let lo = -1.5 + 2.0 / (fl - 1.0);
    if !(lo <= delta && delta < -0.5) {
        out.push(format!(
            "δ must satisfy −3/2 + 2/([2/(γ−1)]−1) ≤ δ < −1/2, i.e. {lo} ≤ δ < −0.5, got δ = {delta}"
        ));
    }
    if integer {
        if !(s > 2.5) {
            out.push(format!("s must satisfy s > 5/2, got s = {s}"));
        }
    } else {
        let hi = 2.5 + beta - fl;
        if !(s > 2.5 && s < hi) {
            out.push(format!(
                "s must satisfy 5/2 < s < 5/2 + 2/(γ−1) − [2/(γ−1)] = {hi}, got s = {s}"
            ));
        }
    }
    out
}

/// Messages for every invalid setting of a resolved configuration.
pub fn validation_errors(c: &RunConfig) -> Vec<String> {
    let mut out = hypothesis_errors(c.eos.gamma, c.norms.s, c.norms.delta);
    let six_fifths = (c.eos.gamma - 1.2).abs() < 1e-12;
    if c.eos.k_mode == KMode::Static && !six_fifths {
        out.push(format!(
            "K = static needs γ = 6/5, the exponent of the static profile; got γ = {}",
            c.eos.gamma
        ));
    }
    if c.eos.k_mode == KMode::Explicit && !(c.eos.k > 0.0 && c.eos.k.is_finite()) {
        out.push(format!("K must be positive, got {}", c.eos.k));
    }
    if !(c.eos.a > 0.0 && c.eos.a.is_finite()) {
        out.push(format!("a must be positive, got {}", c.eos.a));
    }
    match c.initial.profile {
        Profile::Static => {
            if !six_fifths {
                out.push(format!(
                    "the static initial profile needs γ = 6/5, got γ = {}",
                    c.eos.gamma
                ));
            }
            if !(c.initial.scale >= 0.0 && c.initial.scale.is_finite()) {
                out.push(format!("initial scale must be nonnegative, got {}", c.initial.scale));
            }
        }
        Profile::Gaussian => {
            if !(c.initial.amplitude >= 0.0 && c.initial.amplitude.is_finite()) {
                out.push(format!(
                    "Gaussian amplitude must be nonnegative, got {}",
                    c.initial.amplitude
                ));
            }
            if !(c.initial.width > 0.0 && c.initial.width.is_finite()) {
                out.push(format!("Gaussian width must be positive, got {}", c.initial.width));
            }
        }
    }
    let grid = match c.grid.kind {
        GridKind::Radial => makino_core::grid::RadialGrid::new(c.grid.extent, c.grid.n).err(),
        GridKind::Box => makino_core::grid::BoxGrid::new(c.grid.extent, c.grid.n).err(),
    };
    out.extend(grid.map(|e| e.to_string()));
    if let Err(e) = scheme_config(c).validate() {
        out.push(e.to_string());
    }
    if !(c.scheme.tail_exponent > 3.0) {
        out.push(format!(
            "tail_exponent must exceed 3 for a finite mass, got {}",
            c.scheme.tail_exponent
        ));
    }
    if let Err(e) = picard_config(c).validate() {
        out.push(e.to_string());
    }
    out
}

/// Equation of state of a resolved configuration.
pub fn eos(c: &RunConfig) -> Result<EosParams, CliError> {
    EosParams::new(c.eos.gamma, c.eos.k).map_err(|e| CliError::Config(vec![e.to_string()]))
}

pub fn norm_spec(c: &RunConfig) -> WeightedNormSpec {
    WeightedNormSpec::new(c.norms.s, c.norms.delta)
        .with_j_max(c.norms.jmax)
        .with_shell_n(c.norms.shell_n)
}

pub fn scheme_config(c: &RunConfig) -> SchemeConfig {
    let mut s = SchemeConfig::new(c.scheme.t_end)
        .with_cfl(c.scheme.cfl)
        .with_hyperviscosity(c.scheme.eps_hv)
        .with_cadence(c.scheme.cadence);
    s.tail_exponent = c.scheme.tail_exponent;
    s.blowup_factor = c.scheme.blowup_factor;
    s
}

pub fn picard_config(c: &RunConfig) -> PicardConfig {
    let mut p = PicardConfig::new(c.picard.t, norm_spec(c));
    p.tol = c.picard.tol;
    p.max_iter = c.picard.max_iter;
    p.m0 = c.picard.m0;
    p.max_halvings = c.picard.max_halvings;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config_str(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config rejection, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_resolves_to_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!((c.eos.k - 2.0 * std::f64::consts::PI / 9.0).abs() < 1e-15);
    }

    #[test]
    fn corner_parameters_are_accepted() {
        let c = parse_config_str("[eos]\ngamma = 1.2\nK = static\n[norms]\ns = 2.6\ndelta = -1.2\n").unwrap();
        assert_eq!(c.eos.k_mode, KMode::Static);
        assert_eq!(c.norms.delta, -1.2);
    }

    #[test]
    fn quoted_static_token_is_accepted() {
        let c = parse_config_str("[eos]\nK = \"static\"\n").unwrap();
        assert_eq!(c.eos.k_mode, KMode::Static);
    }

    #[test]
    fn gamma_outside_range_is_rejected() {
        let m = errors("[eos]\ngamma = 2\nK = 1\n[initial]\nprofile = gaussian\n");
        assert!(m.iter().any(|e| e.contains("γ must lie in (1, 5/3)")), "{m:?}");
    }

    #[test]
    fn delta_window_quotes_the_bound() {
        let m = errors("[norms]\ndelta = -1.3\n");
        assert_eq!(m.len(), 1, "{m:?}");
        assert!(m[0].contains("−3/2 + 2/([2/(γ−1)]−1) ≤ δ < −1/2"), "{m:?}");
        let m = errors("[norms]\ndelta = -0.5\n");
        assert!(m[0].contains("δ = -0.5"), "{m:?}");
    }

    #[test]
    fn s_window_depends_on_integrality_of_beta() {
        // gamma = 1.3: beta = 6.67, window 5/2 < s < 3.1667, delta >= -1.1
        let base = "[eos]\ngamma = 1.3\nK = 1\n[initial]\nprofile = gaussian\n[norms]\ndelta = -1.0\n";
        assert!(parse_config_str(&format!("{base}s = 3.0\n")).is_ok());
        let m = errors(&format!("{base}s = 3.2\n"));
        assert!(m[0].contains("5/2 < s < 5/2 + 2/(γ−1) − [2/(γ−1)]"), "{m:?}");
        let m = errors("[norms]\ns = 2.5\n");
        assert!(m[0].contains("s > 5/2"), "{m:?}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let m = errors("[eos]\ngama = 1.2\n[extra]\nx = 1\n");
        assert!(m.iter().any(|e| e == "unknown key [eos] gama"), "{m:?}");
        assert!(m.iter().any(|e| e == "unknown section [extra]"), "{m:?}");
        let m = errors("stray = 1\n");
        assert!(m.iter().any(|e| e.contains("outside any section")), "{m:?}");
    }

    #[test]
    fn malformed_values_are_reported() {
        let m = errors("[grid]\nn = many\nkind = sphere\n");
        assert!(m.iter().any(|e| e.contains("[grid] n")), "{m:?}");
        assert!(m.iter().any(|e| e.contains("radial, box")), "{m:?}");
    }

    #[test]
    fn static_k_needs_six_fifths() {
        let m = errors("[eos]\ngamma = 1.4\n[initial]\nprofile = gaussian\n[norms]\ndelta = -1.0\ns = 2.6\n");
        assert!(m.iter().any(|e| e.contains("K = static needs γ = 6/5")), "{m:?}");
    }

    #[test]
    fn cadence_defaults_to_a_twentieth_of_t_end() {
        let c = parse_config_str("[scheme]\nt_end = 2.0\n").unwrap();
        assert_eq!(c.scheme.cadence, 0.1);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let e = parse_config(Path::new("/nonexistent/run.ini")).unwrap_err();
        assert!(matches!(e, CliError::Io(_)));
    }
}
