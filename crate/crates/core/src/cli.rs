//! Command-line front end: resolve a run configuration from flags and an
//! optional flat `key=value` config file (flags win), dispatch to the sweep
//! drivers, and write deterministic CSV tables whose `#`-metadata headers
//! echo the resolved configuration and the artifact version.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver non-convergence.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bare_junction::{solve_bloch, DEFAULT_M_MAX};
use crate::circuit_modes::{check_sum_rule, decompose_modes, p00_closed_form, LineSpec};
use crate::error::{Error, Result};
use crate::lanczos::{dense_lowest, lanczos_lowest, DEFAULT_TOL};
use crate::observables::{
    charge_fluctuations, cooper_pair_box_sigma, cosine_expectation, flux_sweep,
    reduced_density_junction, zone_edge_gap,
};
use crate::polaron::shift_spectrum_check;
use crate::renormalization::{charge_crossings, renorm_ej, slope_at_critical, sweep_flow};
use crate::spectrum::{assemble, band_sweep, convergence_study, solve_block, SolverConfig};
use crate::table::{write_pgm, Table};

#[derive(Parser)]
#[command(
    name = "schmid-lab",
    version,
    about = "Exact diagonalization of a Josephson junction coupled to a multimode transmission line"
)]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for CSV tables.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; overrides the SCHMID_LAB_THREADS environment variable.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normal-mode decomposition of the transmission line.
    Modes(ModesArgs),
    /// Renormalized junction energies vs impedance for several sizes.
    Renorm(RenormArgs),
    /// E_J→0 charge-state crossing diagram.
    Crossings(CrossingsArgs),
    /// Full band sweep over impedance and quasi-charge.
    Bands(BandsArgs),
    /// Zone-edge gap vs impedance for several sizes.
    Gap(GapArgs),
    /// Ground-state charge fluctuations and cosine expectation.
    Observables(ObservablesArgs),
    /// Photonic spectral function over an external flux sweep.
    Spectral(SpectralArgs),
    /// Convergence of the low-lying levels with both cutoffs.
    Converge(ConvergeArgs),
    /// Run built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct SolverArgs {
    /// Photon energy cutoff E_cut (units of E_C).
    #[arg(long)]
    ecut: Option<f64>,
    /// Number of junction bands kept.
    #[arg(long)]
    nbands: Option<usize>,
    /// Charge truncation of the bare junction block.
    #[arg(long)]
    mmax: Option<usize>,
    /// Number of eigenpairs per block.
    #[arg(long)]
    k: Option<usize>,
    /// Relative residual tolerance of the eigensolver.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ModesArgs {
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    nm: Option<usize>,
    #[arg(long)]
    ej: Option<f64>,
}

#[derive(Args)]
struct RenormArgs {
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    ej: Option<f64>,
    /// Comma-separated mode counts, e.g. 8,16,32,64.
    #[arg(long)]
    sizes: Option<String>,
    /// Impedance grid lo:hi:n or lo:hi:n:log.
    #[arg(long)]
    zgrid: Option<String>,
    /// Central-difference step for the slope at z = 1.
    #[arg(long)]
    dz: Option<f64>,
}

#[derive(Args)]
struct CrossingsArgs {
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    nm: Option<usize>,
    #[arg(long)]
    zgrid: Option<String>,
}

#[derive(Args)]
struct BandsArgs {
    #[arg(long)]
    ej: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    nm: Option<usize>,
    #[arg(long)]
    zgrid: Option<String>,
    /// Quasi-charge grid points on [0, 0.5].
    #[arg(long)]
    nupoints: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also dump the truncated basis (one state per line) to basis.txt.
    #[arg(long)]
    dump_basis: bool,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long)]
    ej: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    zgrid: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ObservablesArgs {
    #[arg(long)]
    ej: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    zgrid: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    ej: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    nm: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    /// Flux grid on [-0.5, 0.5] (units of Phi_0), lo:hi:n.
    #[arg(long, allow_hyphen_values = true)]
    phigrid: Option<String>,
    /// Energy window lo:hi:n; defaults to the first mode frequency ± 0.25.
    #[arg(long, allow_hyphen_values = true)]
    egrid: Option<String>,
    /// Lorentzian broadening.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write a grayscale PGM heatmap of the map.
    #[arg(long)]
    pgm: bool,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    ej: Option<f64>,
    #[arg(long)]
    wp: Option<f64>,
    #[arg(long)]
    nm: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated E_cut values.
    #[arg(long)]
    ecuts: Option<String>,
    /// Comma-separated band counts.
    #[arg(long)]
    bandcounts: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Parse `argv`, run the requested command, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => 3,
        Error::AtGridPoint { source, .. } => exit_code(source),
        _ => 2,
    }
}

#[cfg(feature = "parallel")]
fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("SCHMID_LAB_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_flag: Option<usize>) {}

/// Resolves configuration values with flags-over-file precedence and records
/// every resolved value for the output header.
struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    fn new(config: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                    key: format!("{}:{}", path.display(), lineno + 1),
                    message: format!("expected key=value, got {line:?}"),
                })?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn raw(&mut self, key: &str, flag: Option<String>, default: &str) -> String {
        let v = flag
            .or_else(|| self.file.get(key).cloned())
            .unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), v.clone());
        v
    }

    fn parse<T: std::str::FromStr + std::fmt::Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        match flag {
            Some(v) => {
                self.resolved.insert(key.to_string(), v.to_string());
                Ok(v)
            }
            None => match self.file.get(key) {
                Some(s) => {
                    let v: T = s.parse().map_err(|_| Error::Config {
                        key: key.to_string(),
                        message: format!("cannot parse {s:?}"),
                    })?;
                    self.resolved.insert(key.to_string(), v.to_string());
                    Ok(v)
                }
                None => {
                    self.resolved.insert(key.to_string(), default.to_string());
                    Ok(default)
                }
            },
        }
    }

    fn solver(&mut self, args: &SolverArgs, defaults: &SolverConfig) -> Result<SolverConfig> {
        Ok(SolverConfig {
            e_cut: self.parse("ecut", args.ecut, defaults.e_cut)?,
            n_bands: self.parse("nbands", args.nbands, defaults.n_bands)?,
            m_max: self.parse("mmax", args.mmax, defaults.m_max)?,
            k: self.parse("k", args.k, defaults.k)?,
            tol: self.parse("tol", args.tol, defaults.tol)?,
        })
    }

    /// Start a table whose metadata echoes the full resolved configuration.
    fn table<S: Into<String>>(&self, command: &str, columns: Vec<S>) -> Table {
        let mut t = Table::new(columns);
        t.meta("version", env!("CARGO_PKG_VERSION"));
        t.meta("command", command);
        for (k, v) in &self.resolved {
            t.meta(k, v);
        }
        t
    }
}

/// Parse `lo:hi:n` (linear) or `lo:hi:n:log` into a closed grid.
fn parse_grid(key: &str, s: &str) -> Result<Vec<f64>> {
    let err = |message: String| Error::Config {
        key: key.to_string(),
        message,
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(err(format!("expected lo:hi:n[:log], got {s:?}")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| err(format!("bad grid start {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| err(format!("bad grid end {:?}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| err(format!("bad grid size {:?}", parts[2])))?;
    if n == 0 || hi < lo {
        return Err(err(format!("degenerate grid {s:?}")));
    }
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(other) => return Err(err(format!("unknown grid kind {other:?}"))),
    };
    if log && lo <= 0.0 {
        return Err(err("log grid needs lo > 0".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let grid = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect();
    Ok(grid)
}

fn parse_list_usize(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| Error::Config {
                key: key.to_string(),
                message: format!("bad integer {p:?}"),
            })
        })
        .collect()
}

fn parse_list_f64(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| Error::Config {
                key: key.to_string(),
                message: format!("bad number {p:?}"),
            })
        })
        .collect()
}

fn write_table(dir: &Path, name: &str, table: &Table) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = table.render();
    fs::write(&path, &text)?;
    // round-trip guarantee: the written artifact parses back losslessly
    let back = Table::read_from(BufReader::new(fs::File::open(&path)?))?;
    if back.render() != text {
        return Err(Error::InvalidInput(format!(
            "round-trip mismatch writing {}",
            path.display()
        )));
    }
    println!("wrote {} ({} rows)", path.display(), table.rows.len());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut r = Resolver::new(cli.config.as_deref())?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match &cli.cmd {
        Cmd::Modes(a) => cmd_modes(&mut r, &out, a),
        Cmd::Renorm(a) => cmd_renorm(&mut r, &out, a),
        Cmd::Crossings(a) => cmd_crossings(&mut r, &out, a),
        Cmd::Bands(a) => cmd_bands(&mut r, &out, a),
        Cmd::Gap(a) => cmd_gap(&mut r, &out, a),
        Cmd::Observables(a) => cmd_observables(&mut r, &out, a),
        Cmd::Spectral(a) => cmd_spectral(&mut r, &out, a),
        Cmd::Converge(a) => cmd_converge(&mut r, &out, a),
        Cmd::Selftest => cmd_selftest(),
    }
}

fn cmd_modes(r: &mut Resolver, out: &Path, a: &ModesArgs) -> Result<()> {
    let wp = r.parse("wp", a.wp, 2.0)?;
    let z = r.parse("z", a.z, 1.0)?;
    let nm = r.parse("nm", a.nm, 6)?;
    let ej = r.parse("ej", a.ej, 0.0)?;
    let spec = LineSpec::new(ej, wp, nm, z)?;
    let md = decompose_modes(&spec)?;

    let mut t = r.table("modes", vec!["k", "omega", "g"]);
    t.meta("delta", spec.fsr());
    t.meta("chain_delta", spec.chain_fsr());
    t.meta("site_capacitance", spec.site_capacitance());
    t.meta("inverse_inductance", spec.inverse_inductance());
    t.meta("p00", md.p00);
    t.meta("p00_closed_form", p00_closed_form(&spec));
    t.meta("sum_rule_residual", check_sum_rule(&md));
    t.meta("ej_tilde", renorm_ej(&md, ej));
    for k in 0..md.n_modes() {
        t.push(vec![(k + 1).into(), md.omega[k].into(), md.g[k].into()]);
    }
    write_table(out, "modes.csv", &t)
}

fn cmd_renorm(r: &mut Resolver, out: &Path, a: &RenormArgs) -> Result<()> {
    let wp = r.parse("wp", a.wp, 2.0)?;
    let ej = r.parse("ej", a.ej, 1.0)?;
    let sizes = parse_list_usize("sizes", &r.raw("sizes", a.sizes.clone(), "8,16,32,64"))?;
    let zgrid = parse_grid("zgrid", &r.raw("zgrid", a.zgrid.clone(), "0.05:2:400:log"))?;
    let dz = r.parse("dz", a.dz, 1e-3)?;

    let flow = sweep_flow(wp, ej, &zgrid, &sizes)?;
    let mut t = r.table(
        "renorm",
        vec!["n_modes", "z", "delta", "ej_tilde", "ec_tilde", "ratio"],
    );
    for p in &flow.points {
        t.push(vec![
            p.n_modes.into(),
            p.z.into(),
            p.delta.into(),
            p.ej_tilde.into(),
            p.ec_tilde.into(),
            p.ratio.into(),
        ]);
    }
    write_table(out, "renorm.csv", &t)?;

    let mut tc = r.table("renorm", vec!["nm_a", "nm_b", "z_star"]);
    for &(a_, b_, z_star) in &flow.crossings {
        tc.push(vec![a_.into(), b_.into(), z_star.into()]);
    }
    write_table(out, "renorm_crossings.csv", &tc)?;

    if sizes.len() >= 4 {
        let fit = slope_at_critical(wp, ej, &sizes, dz)?;
        let mut ts = r.table("renorm", vec!["n_modes", "delta", "slope"]);
        ts.meta("fit_a", fit.a);
        ts.meta("fit_b", fit.b);
        ts.meta("fit_r_squared", fit.r_squared);
        for p in &fit.points {
            ts.push(vec![p.n_modes.into(), p.delta.into(), p.slope.into()]);
        }
        write_table(out, "renorm_slopes.csv", &ts)?;
    }
    Ok(())
}

fn cmd_crossings(r: &mut Resolver, out: &Path, a: &CrossingsArgs) -> Result<()> {
    let wp = r.parse("wp", a.wp, 5.0)?;
    let nm = r.parse("nm", a.nm, 16)?;
    let zgrid = parse_grid("zgrid", &r.raw("zgrid", a.zgrid.clone(), "0.05:2:400:log"))?;
    let crossings = charge_crossings(wp, &zgrid, nm)?;
    let mut t = r.table("crossings", vec!["mode", "z_star"]);
    for c in &crossings {
        t.push(vec![c.mode.into(), c.z_star.into()]);
    }
    write_table(out, "crossings.csv", &t)
}

fn cmd_bands(r: &mut Resolver, out: &Path, a: &BandsArgs) -> Result<()> {
    let ej = r.parse("ej", a.ej, 0.5)?;
    let wp = r.parse("wp", a.wp, 2.0)?;
    let nm = r.parse("nm", a.nm, 6)?;
    let zgrid = parse_grid("zgrid", &r.raw("zgrid", a.zgrid.clone(), "0.05:2:40:log"))?;
    let nupoints = r.parse("nupoints", a.nupoints, 11)?;
    let cfg = r.solver(&a.solver, &SolverConfig::default())?;

    let template = LineSpec::new(ej, wp, nm, zgrid[0])?;
    let nugrid = crate::bare_junction::nu_grid(nupoints);
    let points = band_sweep(&template, &zgrid, &nugrid, &cfg)?;
    let mut t = r.table(
        "bands",
        vec![
            "z",
            "nu",
            "level",
            "energy",
            "energy_minus_ground",
            "rescaled_by_delta",
        ],
    );
    t.meta("delta", template.fsr());
    t.meta("chain_delta", template.chain_fsr());
    for p in &points {
        t.push(vec![
            p.z.into(),
            p.nu.into(),
            p.level.into(),
            p.energy.into(),
            p.energy_minus_ground.into(),
            p.rescaled_by_delta.into(),
        ]);
    }
    write_table(out, "bands.csv", &t)?;

    if a.dump_basis {
        let md = decompose_modes(&template)?;
        let basis = crate::fock_basis::generate(&md.omega, cfg.e_cut, cfg.n_bands)?;
        fs::create_dir_all(out)?;
        let path = out.join("basis.txt");
        let mut buf = Vec::new();
        basis.dump(&mut buf)?;
        fs::write(&path, buf)?;
        println!("wrote {} ({} states)", path.display(), basis.dim());
    }
    Ok(())
}

fn cmd_gap(r: &mut Resolver, out: &Path, a: &GapArgs) -> Result<()> {
    let ej = r.parse("ej", a.ej, 0.5)?;
    let wp = r.parse("wp", a.wp, 2.0)?;
    let sizes = parse_list_usize("sizes", &r.raw("sizes", a.sizes.clone(), "5,7"))?;
    let zgrid = parse_grid("zgrid", &r.raw("zgrid", a.zgrid.clone(), "0.2:2:19"))?;
    let cfg = r.solver(
        &a.solver,
        &SolverConfig {
            k: 4,
            ..Default::default()
        },
    )?;

    let mut t = r.table("gap", vec!["n_modes", "z", "gap", "rescaled_by_delta"]);
    for &nm in &sizes {
        let template = LineSpec::new(ej, wp, nm, zgrid[0])?;
        let gaps = zone_edge_gap(&template, &zgrid, &cfg)?;
        for g in &gaps {
            t.push(vec![
                nm.into(),
                g.z.into(),
                g.gap.into(),
                g.rescaled_by_delta.into(),
            ]);
        }
    }
    write_table(out, "gap.csv", &t)
}

fn cmd_observables(r: &mut Resolver, out: &Path, a: &ObservablesArgs) -> Result<()> {
    let ej = r.parse("ej", a.ej, 0.5)?;
    let wp = r.parse("wp", a.wp, 2.0)?;
    let sizes = parse_list_usize("sizes", &r.raw("sizes", a.sizes.clone(), "5,8"))?;
    let zgrid = parse_grid("zgrid", &r.raw("zgrid", a.zgrid.clone(), "0.2:2:10"))?;
    let cfg = r.solver(
        &a.solver,
        &SolverConfig {
            k: 4,
            ..Default::default()
        },
    )?;

    let mut t = r.table(
        "observables",
        vec!["n_modes", "z", "sigma_n2", "cos_phi"],
    );
    t.meta("cpb_sigma_n2", cooper_pair_box_sigma(ej)?);
    for &nm in &sizes {
        for &z in &zgrid {
            let spec = LineSpec::new(ej, wp, nm, z)?;
            let sol =
                solve_block(&spec, 0.0, &cfg).map_err(|e| e.at(format!("z = {z}, nm = {nm}")))?;
            let dim = sol.basis.dim();
            let ground: Vec<f64> = (0..dim).map(|i| sol.eig.eigenvectors[(i, 0)]).collect();
            let rho = reduced_density_junction(&ground, &sol.basis);
            t.push(vec![
                nm.into(),
                z.into(),
                charge_fluctuations(&rho, &sol.block).into(),
                cosine_expectation(&rho, &sol.block).into(),
            ]);
        }
    }
    write_table(out, "observables.csv", &t)
}

fn cmd_spectral(r: &mut Resolver, out: &Path, a: &SpectralArgs) -> Result<()> {
    let ej = r.parse("ej", a.ej, 0.1)?;
    let wp = r.parse("wp", a.wp, 5.0)?;
    let nm = r.parse("nm", a.nm, 16)?;
    let z = r.parse("z", a.z, 1.0)?;
    let gamma = r.parse("gamma", a.gamma, 0.02)?;
    let phigrid = parse_grid("phigrid", &r.raw("phigrid", a.phigrid.clone(), "-0.5:0.5:21"))?;
    let cfg = r.solver(&a.solver, &SolverConfig::default())?;

    let template = LineSpec::new(ej, wp, nm, z)?;
    // default window: first mode frequency ± 0.25
    let egrid_spec = match (&a.egrid, r.file.get("egrid").cloned()) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => s,
        (None, None) => {
            let md = decompose_modes(&template)?;
            let w1 = md.omega[0];
            format!("{}:{}:101", w1 - 0.25, w1 + 0.25)
        }
    };
    let egrid = parse_grid("egrid", &r.raw("egrid", Some(egrid_spec), ""))?;

    let map = flux_sweep(&template, &phigrid, gamma, &egrid, &cfg)?;
    let mut t = r.table("spectral", vec!["phi", "energy", "d"]);
    for (i, &phi) in map.phi.iter().enumerate() {
        for (j, &e) in map.energies.iter().enumerate() {
            t.push(vec![phi.into(), e.into(), map.values[i][j].into()]);
        }
    }
    write_table(out, "spectral.csv", &t)?;

    if a.pgm {
        fs::create_dir_all(out)?;
        let path = out.join("spectral.pgm");
        let mut buf = Vec::new();
        write_pgm(&mut buf, &map.values)?;
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_converge(r: &mut Resolver, out: &Path, a: &ConvergeArgs) -> Result<()> {
    let ej = r.parse("ej", a.ej, 0.5)?;
    let wp = r.parse("wp", a.wp, 2.0)?;
    let nm = r.parse("nm", a.nm, 6)?;
    let z = r.parse("z", a.z, 1.0)?;
    let nu = r.parse("nu", a.nu, 0.0)?;
    let ecuts = parse_list_f64("ecuts", &r.raw("ecuts", a.ecuts.clone(), "6,9,12,15"))?;
    let bandcounts =
        parse_list_usize("bandcounts", &r.raw("bandcounts", a.bandcounts.clone(), "2,3,4,5,6"))?;
    let cfg = r.solver(&a.solver, &SolverConfig::default())?;

    let spec = LineSpec::new(ej, wp, nm, z)?;
    let table = convergence_study(&spec, nu, &ecuts, &bandcounts, &cfg)?;
    let mut t = r.table(
        "converge",
        vec!["e_cut", "n_bands", "dim", "level", "energy"],
    );
    for e in &table.entries {
        for (level, &energy) in e.levels.iter().enumerate() {
            t.push(vec![
                e.e_cut.into(),
                e.n_bands.into(),
                e.dim.into(),
                level.into(),
                energy.into(),
            ]);
        }
    }
    write_table(out, "converge.csv", &t)?;

    // successive max level differences along each cutoff axis:
    // axis 0 = increasing e_cut at fixed n_bands, axis 1 = increasing
    // n_bands at fixed e_cut
    let mut td = r.table("converge", vec!["axis", "fixed", "step", "max_diff"]);
    for &nb in &bandcounts {
        for (step, d) in table.diffs_along_ecut(nb).iter().enumerate() {
            td.push(vec![0_i64.into(), (nb as f64).into(), step.into(), (*d).into()]);
        }
    }
    for &ec in &ecuts {
        for (step, d) in table.diffs_along_nbands(ec).iter().enumerate() {
            td.push(vec![1_i64.into(), ec.into(), step.into(), (*d).into()]);
        }
    }
    write_table(out, "converge_diffs.csv", &td)
}

fn cmd_selftest() -> Result<()> {
    let fail = |name: &str, detail: String| -> Result<()> {
        Err(Error::InvalidInput(format!("selftest {name} failed: {detail}")))
    };

    // sum rule + closed-form Ẽ_C over a parameter sweep
    let mut worst_rule = 0.0_f64;
    let mut worst_p00 = 0.0_f64;
    for &wp in &[2.0, 5.0] {
        for &nm in &[4usize, 8, 16, 32] {
            for &z in &[0.1, 0.5, 1.0, 1.5, 2.0] {
                let spec = LineSpec::new(0.0, wp, nm, z)?;
                let md = decompose_modes(&spec)?;
                worst_rule = worst_rule.max(check_sum_rule(&md));
                worst_p00 = worst_p00.max((md.p00 - p00_closed_form(&spec)).abs());
            }
        }
    }
    if worst_rule > 1e-10 {
        return fail("sum-rule", format!("residual {worst_rule:.3e}"));
    }
    println!("ok sum-rule (worst residual {worst_rule:.3e})");
    if worst_p00 > 1e-10 {
        return fail("p00-closed-form", format!("deviation {worst_p00:.3e}"));
    }
    println!("ok p00-closed-form (worst deviation {worst_p00:.3e})");

    // single-mode bosonic shift identity
    let shift = shift_spectrum_check(1.0, 0.3, 1.0, 60, 10);
    if shift > 1e-10 {
        return fail("shift-identity", format!("residual {shift:.3e}"));
    }
    println!("ok shift-identity (residual {shift:.3e})");

    // dense vs iterative eigensolver on one assembled block
    let spec = LineSpec::new(0.5, 2.0, 3, 1.0)?;
    let md = decompose_modes(&spec)?;
    let block = solve_bloch(spec.ej, 0.0, 3, DEFAULT_M_MAX)?;
    let basis = crate::fock_basis::generate(&md.omega, 6.0, 3)?;
    let h = assemble(&block, &md, &basis)?;
    let dense = dense_lowest(&h, 6);
    let iter = lanczos_lowest(&h, 6, DEFAULT_TOL, 300)?;
    let dev = dense
        .eigenvalues
        .iter()
        .zip(&iter.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if dev > 1e-9 {
        return fail("dense-vs-iterative", format!("deviation {dev:.3e}"));
    }
    println!("ok dense-vs-iterative (dim {}, deviation {dev:.3e})", h.dim);
    println!("selftest passed");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_linear() {
        let g = parse_grid("zgrid", "0:1:5").unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid_log() {
        let g = parse_grid("zgrid", "0.1:10:3:log").unwrap();
        assert!((g[0] - 0.1).abs() < 1e-12);
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert!((g[2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_malformed() {
        assert!(parse_grid("g", "1:2").is_err());
        assert!(parse_grid("g", "a:2:3").is_err());
        assert!(parse_grid("g", "1:2:0").is_err());
        assert!(parse_grid("g", "-1:2:3:log").is_err());
        assert!(parse_grid("g", "1:2:3:cubic").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join("schmid-lab-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("run.cfg");
        fs::write(&cfg, "wp = 7\nz = 0.3\n").unwrap();
        let mut r = Resolver::new(Some(&cfg)).unwrap();
        // flag wins over file; file wins over default
        assert_eq!(r.parse("wp", Some(2.0), 1.0).unwrap(), 2.0);
        assert_eq!(r.parse("z", None::<f64>, 1.0).unwrap(), 0.3);
        assert_eq!(r.parse("nm", None::<usize>, 6).unwrap(), 6);
        assert_eq!(r.resolved.get("wp").unwrap(), "2");
        assert_eq!(r.resolved.get("z").unwrap(), "0.3");
        assert_eq!(r.resolved.get("nm").unwrap(), "6");
    }

    #[test]
    fn config_rejects_bad_lines() {
        let dir = std::env::temp_dir().join("schmid-lab-cli-test2");
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("bad.cfg");
        fs::write(&cfg, "this is not a key value pair\n").unwrap();
        assert!(Resolver::new(Some(&cfg)).is_err());
    }

    #[test]
    fn exit_codes_by_error_kind() {
        let nc = Error::NotConverged {
            wanted: 1,
            found: 0,
            iterations: 10,
            residual: 1.0,
        };
        assert_eq!(exit_code(&nc), 3);
        assert_eq!(exit_code(&nc.at("z = 1")), 3);
        assert_eq!(
            exit_code(&Error::Config {
                key: "wp".into(),
                message: "bad".into()
            }),
            2
        );
    }
}
