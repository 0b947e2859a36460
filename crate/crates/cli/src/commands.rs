//! Subcommand implementations. Each writes its report to the given sink
//! and its artifacts under the working directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use makino_core::diagnostics::Monitors;
use makino_core::evolution::{picard_solve, run_simulation, PicardTrace, SchemeConfig};
use makino_core::field::norm3;
use makino_core::fluid::{FluidState, StaticProfile};
use makino_core::grid::dump::{read_file, write_file};
use makino_core::grid::{sample_box, sample_radial, BoxGrid, Geometry, GridFunction, RadialGrid, Rank};
use makino_core::ineq_lab::{check_inequality, default_corpus, describe, CorpusItem, IneqParams, InequalityKind};
use makino_core::poisson::{resolve_static_k, solve_poisson_box, solve_poisson_radial_with};
use makino_core::wsobolev::{weighted_norm, DyadicPartition, WeightedNormSpec};

use crate::config::{self, GridKind, Profile, RunConfig};
use crate::manifest::{GridHashes, RunManifest};
use crate::{io_error, resolve, CliError};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error("create", dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error("create", path, e))
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<(), CliError> {
    out.write_fmt(text)
        .map_err(|e| CliError::Io(format!("cannot write report: {e}")))
}

/// Initial fluid state described by a configuration.
pub fn initial_state(c: &RunConfig) -> Result<FluidState, CliError> {
    let profile: Box<dyn Fn(f64) -> f64> = match c.initial.profile {
        Profile::Static => {
            let p = StaticProfile::new(c.eos.a)?;
            let scale = c.initial.scale;
            Box::new(move |r| scale * p.w(r))
        }
        Profile::Gaussian => {
            let (amp, width) = (c.initial.amplitude, c.initial.width);
            Box::new(move |r| amp * (-r * r / (2.0 * width * width)).exp())
        }
    };
    let (w, v) = match c.grid.kind {
        GridKind::Radial => {
            let g = RadialGrid::new(c.grid.extent, c.grid.n)?;
            (
                sample_radial(g, Rank::Scalar, profile)?,
                GridFunction::zeros(Geometry::Radial(g), Rank::RadialVector)?,
            )
        }
        GridKind::Box => {
            let g = BoxGrid::new(c.grid.extent, c.grid.n)?;
            (
                sample_box(g, |x| profile(norm3(x)))?,
                GridFunction::zeros(Geometry::Box(g), Rank::Vector3)?,
            )
        }
    };
    Ok(FluidState::new(w, v, 0.0)?)
}

fn write_picard_trace(path: &Path, trace: &PicardTrace) -> Result<(), CliError> {
    let mut f = create(path)?;
    let mut body = String::from("iteration,high_norm,gap\n");
    for (i, (h, g)) in trace.high_norms.iter().zip(&trace.gaps).enumerate() {
        body.push_str(&format!("{},{h:e},{g:e}\n", i + 1));
    }
    f.write_all(body.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| io_error("write", path, e))
}

/// Runs a configured simulation. The manifest is written first; on a
/// blow-up abort the partial series is still written.
pub fn simulate(c: &RunConfig, workdir: &Path, threads: usize, out: &mut dyn Write) -> Result<(), CliError> {
    simulate_checked(c, workdir, threads, None, out)
}

/// Reruns the configuration stored in a manifest, checking that the
/// initial grid data hash to the recorded values.
pub fn simulate_from_manifest(path: &Path, workdir: &Path, threads: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let m = RunManifest::read(path)?;
    let errors = config::validation_errors(&m.config);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    simulate_checked(&m.config, workdir, threads, Some(&m.grid_hashes), out)
}

fn simulate_checked(
    c: &RunConfig,
    workdir: &Path,
    threads: usize,
    expected: Option<&GridHashes>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if threads > 1 {
        log::info!("{threads} threads requested; kernels run on one thread");
    }
    let eos = config::eos(c)?;
    eos.check_admissible()?;
    let initial = initial_state(c)?;
    let manifest = RunManifest::new(c, threads, &initial)?;
    if let Some(h) = expected {
        if *h != manifest.grid_hashes {
            return Err(CliError::Config(vec![
                "initial grid data do not match the manifest's hashes".into(),
            ]));
        }
    }
    manifest.write(&resolve(workdir, &c.output.manifest))?;

    let scheme = config::scheme_config(c);
    let mut monitors = Monitors::basic(c.norms.delta).with_reference(initial.clone());
    monitors.tail_exponent = c.scheme.tail_exponent;
    if c.norms.monitor {
        monitors = monitors.with_norms(config::norm_spec(c))?;
    }
    let run = run_simulation(&initial, &eos, &scheme, &monitors)?;
    let csv = resolve(workdir, &c.output.csv);
    let mut f = create(&csv)?;
    run.series.write_csv(&mut f)?;
    f.flush().map_err(|e| io_error("write", &csv, e))?;
    if let Some(dir) = &c.output.dump_dir {
        let dir = resolve(workdir, dir);
        std::fs::create_dir_all(&dir).map_err(|e| io_error("create", &dir, e))?;
        write_file(&run.state.w, &dir.join("w.mkgf"))?;
        write_file(&run.state.v, &dir.join("v.mkgf"))?;
    }
    let first = &run.series.records[0];
    let last = run.series.last().unwrap_or(first);
    emit(
        out,
        format_args!(
            "steps {}, t = {}, mass drift {:e}, clipped mass {:e}\n",
            run.steps,
            last.t,
            (last.mass - first.mass) / first.mass,
            run.total_clip
        ),
    )?;
    if let Some(e) = run.abort {
        return Err(CliError::Aborted(e.to_string()));
    }

    if c.picard.enabled {
        let path = resolve(workdir, manifest.outputs.picard_csv.as_deref().unwrap_or("picard.csv"));
        match picard_solve(&initial, &eos, &scheme, &config::picard_config(c)) {
            Ok((_, trace)) => {
                write_picard_trace(&path, &trace)?;
                let lambda = trace.contraction.map_or("n/a".to_string(), |l| format!("{l:.4}"));
                emit(
                    out,
                    format_args!(
                        "picard: converged after {} iterations at T = {}, fitted contraction {lambda}, M0 = {:e}\n",
                        trace.gaps.len(),
                        trace.horizon,
                        trace.m0
                    ),
                )?;
            }
            Err(makino_core::Error::NoContraction { message, trace }) => {
                write_picard_trace(&path, &trace)?;
                return Err(makino_core::Error::NoContraction { message, trace }.into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Prints the shell breakdown of a dumped field as CSV.
pub fn norm(field: &Path, spec: &WeightedNormSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let u = read_file(field)?;
    let b = weighted_norm(&u, spec, &DyadicPartition::new(spec.j_max)?)?;
    let mut text = String::from("j,contribution,cumulative\n");
    for (j, (c, cum)) in b.contributions.iter().zip(b.cumulative()).enumerate() {
        text.push_str(&format!("{j},{c:e},{cum:e}\n"));
    }
    emit(out, format_args!("{text}"))?;
    log::info!(
        "norm {:e} (truncated {}, divergent {}, domain limited {})",
        b.norm(),
        b.truncated,
        b.divergent,
        b.domain_limited
    );
    if b.divergent {
        log::warn!("shell contributions grow geometrically; the field is not in this weighted space");
    }
    Ok(())
}

/// Corpus source for `check-ineq`.
#[derive(Clone, Copy)]
pub enum CorpusSource<'a> {
    Builtin,
    /// Every `*.mkgf` dump in a directory, by file name.
    Dir(&'a Path),
}

/// Runs one inequality over a corpus, printing the per-case CSV.
pub fn check_ineq(
    kind: InequalityKind,
    params: &IneqParams,
    corpus: CorpusSource,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let grids: Vec<(String, GridFunction)> = match corpus {
        CorpusSource::Builtin => Vec::new(),
        CorpusSource::Dir(dir) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| io_error("read", dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "mkgf"))
                .collect();
            files.sort();
            files
                .into_iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                    read_file(&p).map(|g| (name, g))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let items: Vec<CorpusItem> = if matches!(corpus, CorpusSource::Builtin) {
        default_corpus()
    } else {
        grids
            .iter()
            .map(|(name, g)| CorpusItem::from_grid(name, g))
            .collect::<Result<_, _>>()?
    };
    log::info!("corpus: {}", describe(&items));
    let report = check_inequality(kind, &items, params)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    out.write_all(&buf)
        .map_err(|e| CliError::Io(format!("cannot write report: {e}")))?;
    eprintln!("{report}");
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failures.join("; ")))
    }
}

/// `<stem>_grad.<ext>` next to the potential dump.
pub fn gradient_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match out.extension() {
        Some(ext) => format!("{stem}_grad.{}", ext.to_string_lossy()),
        None => format!("{stem}_grad"),
    };
    out.with_file_name(name)
}

/// Solves Poisson for a dumped density; writes the potential to `out` and
/// its gradient next to it.
pub fn poisson(density: &Path, out_path: &Path, tail_exponent: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let rho = read_file(density)?;
    let p = match rho.geometry() {
        Geometry::Radial(_) => solve_poisson_radial_with(&rho, tail_exponent)?,
        Geometry::Box(_) => solve_poisson_box(&rho)?,
    };
    if let Some(dir) = out_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error("create", dir, e))?;
    }
    write_file(&p.phi, out_path)?;
    write_file(&p.grad, &gradient_path(out_path))?;
    if p.flagged {
        log::warn!("density tail or support outside the solver's assumptions; result flagged");
    }
    emit(out, format_args!("residual {:e} flagged {}\n", p.residual, p.flagged))
}

/// Settings of the static-solution convergence study.
#[derive(Clone, Debug)]
pub struct StaticTest {
    pub a: f64,
    pub resolutions: Vec<usize>,
    pub extent: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub delta: f64,
}

/// One row per resolution: the sup-in-time relative `L^2_delta` drift from
/// the static profile, with successive ratios and observed orders when
/// there is more than one row.
pub fn static_test(t: &StaticTest, out: &mut dyn Write) -> Result<Vec<f64>, CliError> {
    if t.resolutions.is_empty() {
        return Err(CliError::Config(vec!["at least one resolution is needed".into()]));
    }
    let prof = StaticProfile::new(t.a)?;
    resolve_static_k(t.a)?;
    let scheme = SchemeConfig::new(t.t_end)
        .with_cfl(t.cfl)
        .with_cadence(t.t_end.max(1e-300) / 20.0);
    let mut drifts = Vec::new();
    for &n in &t.resolutions {
        let g = RadialGrid::new(t.extent, n)?;
        let w = sample_radial(g, Rank::Scalar, |r| prof.w(r))?;
        let v = GridFunction::zeros(Geometry::Radial(g), Rank::RadialVector)?;
        let s0 = FluidState::new(w, v, 0.0)?;
        let monitors = Monitors::basic(t.delta).with_reference(s0.clone());
        let run = run_simulation(&s0, &prof.eos, &scheme, &monitors)?;
        if let Some(e) = run.abort {
            return Err(CliError::Aborted(e.to_string()));
        }
        let drift = run
            .series
            .records
            .iter()
            .filter_map(|r| r.static_drift)
            .fold(0.0, f64::max);
        drifts.push(drift);
    }
    let mut text = String::new();
    if drifts.len() == 1 {
        text.push_str("n,drift\n");
        text.push_str(&format!("{},{:e}\n", t.resolutions[0], drifts[0]));
    } else {
        text.push_str("n,drift,ratio,order\n");
        for (i, (&n, &d)) in t.resolutions.iter().zip(&drifts).enumerate() {
            if i == 0 {
                text.push_str(&format!("{n},{d:e},,\n"));
            } else {
                let ratio = drifts[i - 1] / d;
                let order = ratio.log2() / (n as f64 / t.resolutions[i - 1] as f64).log2();
                text.push_str(&format!("{n},{d:e},{ratio:.4},{order:.3}\n"));
            }
        }
    }
    emit(out, format_args!("{text}"))?;
    Ok(drifts)
}
