//! Command-line front end: file ingestion and validation, pipeline
//! orchestration, fixture regeneration, and canonical report emission.
//!
//! Exit codes: 0 on success, 1 on validation failures or negative verdicts,
//! 2 on malformed inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use plsys::bisheaf::{
    isofy, monodromy_report, pls, Bisheaf, SubquotientVerdict,
};
use plsys::cellsheaf::{epify, monofy};
use plsys::dilation::{
    canonical_dilation_map, shrink, span_verdicts, stability_span, subdivide_bisheaf,
    StabilityWitness, WitnessRefinement,
};
use plsys::etale::validate_etale;
use plsys::exactlin::{meet_join, Subspace};
use plsys::field::{Field, Fp, Rational};
use plsys::io::{
    self, bisheaf_from_file, bisheaf_to_file, complex_to_file, cosheaf_from_file, emit_json,
    etale_from_file, etale_to_file, local_system_report, map_from_file, orientation_from_file,
    pair_from_file, read_json, sheaf_from_file, BisheafFile, ComplexFile, EtaleFile, FunctorFile,
    MapFile, OrientationFile, WitnessFile,
};
use plsys::leray::leray_bisheaf;
use plsys::simplicial::{barycentric_subdivision, validate_orientation};

#[derive(Parser)]
#[command(
    name = "plsys",
    about = "Persistent local systems of constructible bisheaves, in exact arithmetic"
)]
struct Cli {
    /// Scalar field: Q (default) or F<p> for p in {2,3,5,7,11,13}.
    /// Falls back to the PLSYS_FIELD environment variable.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Worker threads for the étale-open loop (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the randomized invariant probes of --check-invariants.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a bisheaf, sheaf, cosheaf, étale open, complex, or
    /// orientation file.
    Validate {
        #[arg(long)]
        bisheaf: Option<PathBuf>,
        #[arg(long)]
        sheaf: Option<PathBuf>,
        #[arg(long)]
        cosheaf: Option<PathBuf>,
        /// étale open (requires --base)
        #[arg(long)]
        etale: Option<PathBuf>,
        /// base complex for --etale / --sheaf / --cosheaf / --orientation
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        complex: Option<PathBuf>,
        /// orientation file (requires --base)
        #[arg(long)]
        orientation: Option<PathBuf>,
        /// run the extra invariant suite (idempotence, maximality probes)
        #[arg(long)]
        check_invariants: bool,
    },
    /// Maximal sub-episheaf of a sheaf (requires --base).
    Epify {
        #[arg(long)]
        sheaf: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal quotient-monocosheaf of a cosheaf (requires --base).
    Monofy {
        #[arg(long)]
        cosheaf: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Isofication of a bisheaf.
    Isofy {
        #[arg(long)]
        bisheaf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Persistent local systems of a bisheaf over étale opens.
    Pls {
        #[arg(long)]
        bisheaf: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        etale: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the degree-j bisheaf of a simplicial map over an oriented base.
    Leray {
        /// total space complex
        #[arg(long)]
        source: PathBuf,
        /// base complex (with its ideal frontier)
        #[arg(long)]
        base: PathBuf,
        /// vertex map source -> base
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        orientation: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Barycentric subdivision of a complex or subdivision transport of a
    /// bisheaf.
    Subdivide {
        #[arg(long)]
        complex: Option<PathBuf>,
        #[arg(long)]
        bisheaf: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dilation pullback of a bisheaf with the canonical comparison map
    /// validated.
    Dilate {
        #[arg(long)]
        bisheaf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shrinking of an étale open (requires --base).
    Shrink {
        #[arg(long)]
        etale: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability span of two bisheaves, with subquotient verdicts over
    /// étale opens.
    Span {
        #[arg(long)]
        bisheaf_f: PathBuf,
        #[arg(long)]
        bisheaf_g: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, num_args = 0..)]
        etale: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the worked-example fixtures and their expected reports.
    Examples {
        /// 1, 2, 3 or all
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    /// malformed input: exit code 2
    Parse(String),
    /// semantic violation or negative verdict: exit code 1
    Validation(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "validation failure: {m}"),
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Parse(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let tag = cli
        .field
        .clone()
        .or_else(|| std::env::var("PLSYS_FIELD").ok())
        .unwrap_or_else(|| "Q".to_owned());
    let result = match tag.as_str() {
        "Q" => run::<Rational>(&cli),
        "F2" => run::<Fp<2>>(&cli),
        "F3" => run::<Fp<3>>(&cli),
        "F5" => run::<Fp<5>>(&cli),
        "F7" => run::<Fp<7>>(&cli),
        "F11" => run::<Fp<11>>(&cli),
        "F13" => run::<Fp<13>>(&cli),
        other => Err(CliError::Parse(format!(
            "unsupported field tag {other:?}: use Q or F<p> for p in 2,3,5,7,11,13"
        ))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Parse(_) => ExitCode::from(2),
                CliError::Validation(_) => ExitCode::from(1),
            }
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, text: String) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Parse(e.to_string()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_bisheaf<S: Field>(path: &Path) -> Result<Bisheaf<S>, CliError> {
    let file: BisheafFile = read_json(path)?;
    let b = bisheaf_from_file::<S>(&file)?;
    Ok(b)
}

/// Tiny deterministic generator for the invariant probes.
struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0.wrapping_add(0x9e3779b97f4a7c15);
        x ^= x >> 33;
        x = x.wrapping_mul(0xff51afd7ed558ccd);
        x ^= x >> 33;
        self.0 = x;
        x
    }
}

/// Extra invariant suite for --check-invariants: isofication output is an
/// isobisheaf, epification is idempotent, and seeded one-dimensional
/// enlargements of the epi components break closure or surjectivity.
fn check_invariants<S: Field>(b: &Bisheaf<S>, seed: u64) -> Result<(), CliError> {
    let iso = isofy(b).map_err(|e| CliError::Validation(e.to_string()))?;
    if !iso.bisheaf.is_isobisheaf() {
        return Err(CliError::Validation(
            "isofication output is not an isobisheaf".into(),
        ));
    }
    let epi = &iso.epi;
    let again = epify(&epi.materialize());
    if !again.is_full() {
        return Err(CliError::Validation("epification is not idempotent".into()));
    }
    let mut rng = XorShift(seed.wrapping_add(1));
    let covers = b.sheaf.base.carrier_covers();
    let mut probes = 0;
    for (s, component) in &epi.components {
        if component.is_full() || probes >= 16 {
            continue;
        }
        let ambient = component.ambient_dim();
        // seeded choice of a standard vector outside the component
        let mut candidates: Vec<usize> = (0..ambient)
            .filter(|&i| {
                let mut e = vec![S::zero(); ambient];
                e[i] = S::one();
                !component.contains(&e)
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let pick = (rng.next() as usize) % candidates.len();
        let chosen = candidates.swap_remove(pick);
        let mut e = vec![S::zero(); ambient];
        e[chosen] = S::one();
        let enlargement = Subspace::from_vectors(
            ambient,
            &component
                .basis()
                .transpose()
                .render_rows()
                .iter()
                .map(|row| row.iter().map(|x| S::parse(x).unwrap()).collect())
                .chain(std::iter::once(e))
                .collect::<Vec<_>>(),
        );
        // the enlarged family must break closure or surjectivity somewhere
        let mut broken = false;
        for (x, y) in &covers {
            let dom = if x == s { &enlargement } else { &epi.components[x] };
            let cod = if y == s { &enlargement } else { &epi.components[y] };
            let image = Subspace::from_spanning(
                &b.sheaf.restriction(x, y).mul(dom.basis()),
            );
            let closed = cod.contains_subspace(&image);
            let surjective = {
                let (_, join) = meet_join(&image, cod).expect("same ambient");
                join == image
            };
            if !(closed && surjective) {
                broken = true;
                break;
            }
        }
        if !broken {
            return Err(CliError::Validation(format!(
                "maximality probe found an admissible enlargement at a component of dimension {}",
                component.dim()
            )));
        }
        probes += 1;
    }
    Ok(())
}

fn run<S: Field>(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate {
            bisheaf,
            sheaf,
            cosheaf,
            etale,
            base,
            complex,
            orientation,
            check_invariants: check,
        } => {
            if let Some(path) = bisheaf {
                let b = load_bisheaf::<S>(path)?;
                b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
                if *check {
                    check_invariants(&b, cli.seed)?;
                }
                println!("ok: bisheaf validates");
                return Ok(());
            }
            if let Some(path) = etale {
                let base_path = base
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("--etale needs --base".into()))?;
                let base_file: ComplexFile = read_json(base_path)?;
                let base_pair = pair_from_file(&base_file)?;
                let file: EtaleFile = read_json(path)?;
                let open = etale_from_file(&file, &base_pair)?;
                validate_etale(&open).map_err(|v| {
                    CliError::Validation(
                        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
                    )
                })?;
                println!("ok: étale open validates");
                return Ok(());
            }
            if let Some(path) = sheaf {
                let base_path = base
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("--sheaf needs --base".into()))?;
                let base_pair = pair_from_file(&read_json::<ComplexFile>(base_path)?)?;
                let f: FunctorFile = read_json(path)?;
                let sheaf = sheaf_from_file::<S>(&f, &base_pair)?;
                sheaf
                    .validate()
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                println!("ok: sheaf validates (episheaf: {})", sheaf.is_episheaf());
                return Ok(());
            }
            if let Some(path) = cosheaf {
                let base_path = base
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("--cosheaf needs --base".into()))?;
                let base_pair = pair_from_file(&read_json::<ComplexFile>(base_path)?)?;
                let f: FunctorFile = read_json(path)?;
                let cosheaf = cosheaf_from_file::<S>(&f, &base_pair)?;
                cosheaf
                    .validate()
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                println!(
                    "ok: cosheaf validates (monocosheaf: {})",
                    cosheaf.is_monocosheaf()
                );
                return Ok(());
            }
            if let Some(path) = orientation {
                let base_path = base
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("--orientation needs --base".into()))?;
                let base_pair = pair_from_file(&read_json::<ComplexFile>(base_path)?)?;
                let file: OrientationFile = read_json(path)?;
                let o = orientation_from_file(&file, &base_pair)?;
                validate_orientation(&base_pair, &o).map_err(|v| {
                    CliError::Validation(
                        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
                    )
                })?;
                println!("ok: orientation is coherent");
                return Ok(());
            }
            if let Some(path) = complex {
                let pair = pair_from_file(&read_json::<ComplexFile>(path)?)?;
                println!(
                    "ok: complex with {} simplices ({} in the frontier)",
                    pair.complex.simplex_count(),
                    pair.boundary.len()
                );
                return Ok(());
            }
            Err(CliError::Parse(
                "validate needs one of --bisheaf, --sheaf, --cosheaf, --etale, --complex, --orientation".into(),
            ))
        }

        Command::Epify { sheaf, base, out } => {
            let base_pair = pair_from_file(&read_json::<ComplexFile>(base)?)?;
            let f = sheaf_from_file::<S>(&read_json::<FunctorFile>(sheaf)?, &base_pair)?;
            f.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let epi = epify(&f);
            let report: BTreeMap<String, serde_json::Value> = epi
                .components
                .iter()
                .map(|(s, c)| {
                    (
                        base_pair.complex.simplex_key(s),
                        serde_json::json!({
                            "dim": c.dim(),
                            "basis": io::matrix_to_rows(c.basis()),
                        }),
                    )
                })
                .collect();
            write_or_print(out, emit_json(&report)?)
        }

        Command::Monofy { cosheaf, base, out } => {
            let base_pair = pair_from_file(&read_json::<ComplexFile>(base)?)?;
            let f = cosheaf_from_file::<S>(&read_json::<FunctorFile>(cosheaf)?, &base_pair)?;
            f.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let mono = monofy(&f);
            let report: BTreeMap<String, serde_json::Value> = mono
                .kernels
                .iter()
                .map(|(s, k)| {
                    (
                        base_pair.complex.simplex_key(s),
                        serde_json::json!({
                            "kernel_dim": k.dim(),
                            "quotient_dim": k.ambient_dim() - k.dim(),
                            "kernel_basis": io::matrix_to_rows(k.basis()),
                        }),
                    )
                })
                .collect();
            write_or_print(out, emit_json(&report)?)
        }

        Command::Isofy { bisheaf, out } => {
            let b = load_bisheaf::<S>(bisheaf)?;
            b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let iso = isofy(&b).map_err(|e| CliError::Validation(e.to_string()))?;
            write_or_print(out, emit_json(&bisheaf_to_file(&iso.bisheaf))?)
        }

        Command::Pls { bisheaf, etale, out } => {
            let b = load_bisheaf::<S>(bisheaf)?;
            b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let opens: Vec<(String, EtaleFile)> = etale
                .iter()
                .map(|p| {
                    Ok((
                        p.file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default(),
                        read_json::<EtaleFile>(p)?,
                    ))
                })
                .collect::<Result<_, CliError>>()?;
            let results: Vec<Result<serde_json::Value, CliError>> = opens
                .par_iter()
                .map(|(name, file)| {
                    let open = etale_from_file(file, b.base())?;
                    let ls = pls(&b, &open).map_err(|e| CliError::Validation(e.to_string()))?;
                    let report =
                        monodromy_report(&ls).map_err(|e| CliError::Validation(e.to_string()))?;
                    Ok(serde_json::json!({
                        "etale": name,
                        "report": local_system_report(&ls, &report),
                    }))
                })
                .collect();
            let mut opens_json = Vec::new();
            for r in results {
                opens_json.push(r?);
            }
            let payload = serde_json::json!({
                "field": S::field_tag(),
                "opens": opens_json,
            });
            write_or_print(out, emit_json(&payload)?)
        }

        Command::Leray {
            source,
            base,
            map,
            orientation,
            degree,
            out,
        } => {
            let y_pair = pair_from_file(&read_json::<ComplexFile>(source)?)?;
            let base_pair = pair_from_file(&read_json::<ComplexFile>(base)?)?;
            let f = map_from_file(&read_json::<MapFile>(map)?, &y_pair, &base_pair)?;
            let o = orientation_from_file(&read_json::<OrientationFile>(orientation)?, &base_pair)?;
            let b: Bisheaf<S> = leray_bisheaf(&f, &base_pair, *degree, &o)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            write_or_print(out, emit_json(&bisheaf_to_file(&b))?)
        }

        Command::Subdivide { complex, bisheaf, out } => {
            if let Some(path) = complex {
                let pair = pair_from_file(&read_json::<ComplexFile>(path)?)?;
                let sub = barycentric_subdivision(&pair.complex);
                let (pair1, _) = plsys::simplicial::subdivide_pair(&pair);
                let _ = sub;
                return write_or_print(out, emit_json(&complex_to_file(&pair1))?);
            }
            if let Some(path) = bisheaf {
                let b = load_bisheaf::<S>(path)?;
                b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
                let (b1, _) = subdivide_bisheaf(&b);
                return write_or_print(out, emit_json(&bisheaf_to_file(&b1))?);
            }
            Err(CliError::Parse("subdivide needs --complex or --bisheaf".into()))
        }

        Command::Dilate { bisheaf, out } => {
            let b = load_bisheaf::<S>(bisheaf)?;
            b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let (dilated, map) =
                canonical_dilation_map(&b).map_err(|e| CliError::Validation(e.to_string()))?;
            map.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let payload = serde_json::json!({
                "square_validation": "ok",
                "dilated": bisheaf_to_file(&dilated.pulled),
            });
            write_or_print(out, emit_json(&payload)?)
        }

        Command::Shrink { etale, base, out } => {
            let base_pair = pair_from_file(&read_json::<ComplexFile>(base)?)?;
            let open = etale_from_file(&read_json::<EtaleFile>(etale)?, &base_pair)?;
            let shrunk = shrink(&open).map_err(|e| CliError::Validation(e.to_string()))?;
            let payload = serde_json::json!({
                "open": etale_to_file(&shrunk.open),
                "base": complex_to_file(&shrunk.open.base),
                "inclusion_validated": true,
            });
            write_or_print(out, emit_json(&payload)?)
        }

        Command::Span {
            bisheaf_f,
            bisheaf_g,
            witness,
            etale,
            out,
        } => {
            let bf = load_bisheaf::<S>(bisheaf_f)?;
            let bg = load_bisheaf::<S>(bisheaf_g)?;
            bf.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            bg.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            let wfile: WitnessFile = read_json(witness)?;
            let w = witness_from_file(&wfile, &bg)?;
            let span =
                stability_span(&bf, &bg, &w).map_err(|e| CliError::Validation(e.to_string()))?;
            let mut verdicts = Vec::new();
            let mut any_no = false;
            for path in etale {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let file: EtaleFile = read_json(path)?;
                let open = etale_from_file(&file, bf.base())?;
                let (v1, v2) =
                    span_verdicts(&span, &open).map_err(|e| CliError::Validation(e.to_string()))?;
                for v in [&v1.verdict, &v2.verdict] {
                    if matches!(v, SubquotientVerdict::No { .. }) {
                        any_no = true;
                    }
                }
                verdicts.push(serde_json::json!({
                    "etale": name,
                    "to_first": verdict_text(&v1.verdict),
                    "to_second": verdict_text(&v2.verdict),
                }));
            }
            let payload = serde_json::json!({
                "span": "ok",
                "verdicts": verdicts,
            });
            write_or_print(out, emit_json(&payload)?)?;
            if any_no {
                return Err(CliError::Validation("a subquotient verdict is negative".into()));
            }
            Ok(())
        }

        Command::Examples { which, out } => run_examples::<S>(which, out),
    }
}

fn verdict_text(v: &SubquotientVerdict) -> String {
    match v {
        SubquotientVerdict::Isomorphic => "isomorphic".to_owned(),
        SubquotientVerdict::Subquotient => "subquotient".to_owned(),
        SubquotientVerdict::No { reason } => format!("no: {reason}"),
    }
}

fn witness_from_file<S: Field>(
    file: &WitnessFile,
    bg: &Bisheaf<S>,
) -> Result<StabilityWitness, CliError> {
    let mut assign = BTreeMap::new();
    let complex = &bg.base().complex;
    for (tau, w) in &file.assign {
        assign.insert(
            complex.simplex_from_key(tau).map_err(io::IoError::from)?,
            complex.simplex_from_key(w).map_err(io::IoError::from)?,
        );
    }
    let refinement = match &file.refinement {
        None => None,
        Some(r) => {
            let pair = pair_from_file(&r.complex)?;
            let mut to_target = BTreeMap::new();
            for (a, b) in &r.to_target {
                to_target.insert(
                    pair.complex.simplex_from_key(a).map_err(io::IoError::from)?,
                    complex.simplex_from_key(b).map_err(io::IoError::from)?,
                );
            }
            let mut to_dilated = BTreeMap::new();
            for (a, b) in &r.to_dilated {
                to_dilated.insert(
                    pair.complex.simplex_from_key(a).map_err(io::IoError::from)?,
                    complex.simplex_from_key(b).map_err(io::IoError::from)?,
                );
            }
            Some(WitnessRefinement {
                complex: pair.complex,
                to_target,
                to_dilated,
            })
        }
    };
    Ok(StabilityWitness { assign, refinement })
}

fn run_examples<S: Field>(which: &str, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Parse(e.to_string()))?;
    let wanted = |n: &str| which == "all" || which == n;
    let disk = plsys::fixtures::disk_base();
    let sphere = plsys::fixtures::sphere_base();

    let mut writes: Vec<(String, String)> = Vec::new();
    let mut push = |name: &str, text: String| {
        writes.push((name.to_owned(), text));
    };

    let report_for = |b: &Bisheaf<S>, open: &plsys::etale::EtaleOpen| -> Result<String, CliError> {
        let ls = pls(b, open).map_err(|e| CliError::Validation(e.to_string()))?;
        let report = monodromy_report(&ls).map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(emit_json(&local_system_report(&ls, &report))?)
    };

    if wanted("1") {
        let b = plsys::fixtures::ex1_bisheaf::<S>();
        push("ex1.json", emit_json(&bisheaf_to_file(&b))?);
        let identity = plsys::fixtures::identity_open(&disk);
        let annulus = plsys::fixtures::annulus_open(&disk);
        push("identity.json", emit_json(&etale_to_file(&identity))?);
        push("annulus.json", emit_json(&etale_to_file(&annulus))?);
        push("report-ex1-identity.json", report_for(&b, &identity)?);
        push("report-ex1-annulus.json", report_for(&b, &annulus)?);
    }
    if wanted("2") {
        let b = plsys::fixtures::ex2_bisheaf::<S>();
        push("ex2.json", emit_json(&bisheaf_to_file(&b))?);
        let identity = plsys::fixtures::identity_open(&disk);
        let annulus = plsys::fixtures::annulus_open(&disk);
        push("identity.json", emit_json(&etale_to_file(&identity))?);
        push("annulus.json", emit_json(&etale_to_file(&annulus))?);
        push("report-ex2-identity.json", report_for(&b, &identity)?);
        push("report-ex2-annulus.json", report_for(&b, &annulus)?);
    }
    if wanted("3") {
        let f = plsys::fixtures::ex3_f_bisheaf::<S>();
        let h = plsys::fixtures::ex3_h_bisheaf::<S>();
        push("ex3f.json", emit_json(&bisheaf_to_file(&f))?);
        push("ex3h.json", emit_json(&bisheaf_to_file(&h))?);
        let identity = plsys::fixtures::identity_open(&sphere);
        push("identity-sphere.json", emit_json(&etale_to_file(&identity))?);
        push("report-ex3f-identity.json", report_for(&f, &identity)?);
        push("report-ex3h-identity.json", report_for(&h, &identity)?);
    }
    if writes.is_empty() {
        return Err(CliError::Parse(format!(
            "unknown example selector {which:?}: use 1, 2, 3 or all"
        )));
    }
    for (name, text) in writes {
        let path = out.join(&name);
        std::fs::write(&path, text).map_err(|e| CliError::Parse(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
