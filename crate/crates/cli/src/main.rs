//! Batch front end: build instances, export their complexes and
//! posets, compute exact homology, run verification suites, and print
//! expected top ranks.
//!
//! Exit codes: 0 success / all checks pass, 1 a verification found a
//! violation, 2 usage or input error, 3 resource budget exceeded.
//! Identical invocations produce byte-identical stdout regardless of
//! `--threads`; witnesses and diagnostics go to stderr.

use cbpd_core::*;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cbpd",
    version,
    about = "Common basis complexes and decomposition posets of finite posets with frame families"
)]
struct Cli {
    /// Worker threads for the homology engine (env fallback
    /// CBPD_THREADS; default: all cores). Does not affect output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an instance and write one of its derived objects to disk.
    Build(BuildArgs),
    /// Exact homology of a facet file, integrally or over a prime field.
    Homology(HomologyArgs),
    /// Run a named verification suite against an instance.
    Verify(VerifyArgs),
    /// Closed-form top homology rank of the subspace instance.
    ExpectedRank {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Subspace,
    MatroidUniform,
    MatroidFree,
    MatroidBases,
    Symplectic,
    Files,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_enum)]
    provider: ProviderKind,
    /// Field size (prime) for the subspace and symplectic providers.
    #[arg(long)]
    q: Option<u64>,
    /// Dimension, ground-set size, or half-dimension, per provider.
    #[arg(long)]
    n: Option<usize>,
    /// Rank of the uniform matroid.
    #[arg(long)]
    k: Option<usize>,
    /// Basis list file for matroid-bases: one basis per line,
    /// whitespace-separated ground elements; # starts a comment.
    #[arg(long)]
    bases: Option<PathBuf>,
    /// Poset file for the files provider.
    #[arg(long)]
    poset: Option<PathBuf>,
    /// Frame file for the files provider.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Enumeration budget in poset elements.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitKind {
    /// Facet file of the common basis complex.
    Cb,
    /// Poset file of the partial decomposition poset.
    Pd,
    /// Poset file of the decomposition poset.
    D,
    /// The ambient poset and its frame family (see --frames-out).
    Poset,
    /// Facet file of the order complex of the partial decompositions.
    PdComplex,
    /// Facet file of the order complex of the decompositions.
    DComplex,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    emit: EmitKind,
    #[arg(long)]
    out: PathBuf,
    /// Frame file path for --emit poset (default: <out>.frames).
    #[arg(long)]
    frames_out: Option<PathBuf>,
}

#[derive(Args)]
struct HomologyArgs {
    /// Facet file to read.
    #[arg(long)]
    facets: PathBuf,
    /// Compute Betti numbers over GF(P) instead of integrally.
    #[arg(long = "mod")]
    modulus: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteKind {
    /// Every frame is an antichain with a meet-closed join closure.
    Frames,
    /// Comparable partial decompositions share a witnessing frame.
    Ep,
    /// Existing joins of partial decompositions have additive height.
    Heights,
    /// Dimension bounds and closed forms for the three derived objects.
    Dims,
    /// Composite inequalities relating closure, m and u over chains.
    Bounds,
    /// m maps chains of faces into the refinement poset, monotonically.
    MInPd,
    /// u lands on faces exactly when the extension property holds.
    UIffEp,
    /// Reduced Betti and torsion agree between the complex and the poset.
    Equivalence,
    /// Homology is free and concentrated in the top possible degree.
    Spherical,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteKind,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Sample this many chains instead of the automatic effort choice.
    #[arg(long)]
    sample: Option<usize>,
    /// Seed for sampled verification.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Budget(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("CBPD_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads.filter(|&t| t > 0) {
        // Errors only when a global pool exists already; that one wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Build(args) => build_command(args).map(|()| true),
        Command::Homology(args) => homology_command(args).map(|()| true),
        Command::Verify(args) => verify_command(args),
        Command::ExpectedRank { q, n } => {
            if q < 2 || n < 1 {
                return Err(Error::invalid("expected-rank needs --q >= 2 and --n >= 1"));
            }
            println!("{}", expected_top_rank(q, n));
            Ok(true)
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
}

fn parse_bases_file(text: &str) -> Result<Vec<ElementSet>> {
    let mut bases = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let members: Vec<usize> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| {
                    Error::invalid(format!("bases line {}: bad element {tok:?}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        bases.push(ElementSet::new(members));
    }
    if bases.is_empty() {
        return Err(Error::invalid("bases file lists no bases"));
    }
    Ok(bases)
}

impl InstanceArgs {
    fn need<T: Copy>(opt: Option<T>, flag: &str) -> Result<T> {
        opt.ok_or_else(|| Error::invalid(format!("{flag} is required for this provider")))
    }

    fn build(&self) -> Result<(FinitePoset, FrameFamily)> {
        let budget = self.budget.unwrap_or(DEFAULT_ELEMENT_BUDGET);
        match self.provider {
            ProviderKind::Subspace => {
                let q = Self::need(self.q, "--q")?;
                let n = Self::need(self.n, "--n")?;
                let inst = subspace_provider_with_budget(q, n, budget)?;
                Ok((inst.poset, inst.family))
            }
            ProviderKind::MatroidUniform => {
                let n = Self::need(self.n, "--n")?;
                let k = Self::need(self.k, "--k")?;
                let inst = matroid_provider_with_budget(MatroidSpec::Uniform { n, k }, budget)?;
                Ok((inst.poset, inst.family))
            }
            ProviderKind::MatroidFree => {
                let n = Self::need(self.n, "--n")?;
                let inst = matroid_provider_with_budget(MatroidSpec::Free { n }, budget)?;
                Ok((inst.poset, inst.family))
            }
            ProviderKind::MatroidBases => {
                let path = self
                    .bases
                    .as_ref()
                    .ok_or_else(|| Error::invalid("--bases is required for matroid-bases"))?;
                let bases = parse_bases_file(&read_file(path)?)?;
                let inst = matroid_provider_with_budget(MatroidSpec::Bases { bases }, budget)?;
                Ok((inst.poset, inst.family))
            }
            ProviderKind::Symplectic => {
                let q = Self::need(self.q, "--q")?;
                let n = Self::need(self.n, "--n")?;
                let inst = symplectic_provider_with_budget(q, n, budget)?;
                Ok((inst.poset, inst.family))
            }
            ProviderKind::Files => {
                let poset_path = self
                    .poset
                    .as_ref()
                    .ok_or_else(|| Error::invalid("--poset is required for files"))?;
                let frames_path = self
                    .frames
                    .as_ref()
                    .ok_or_else(|| Error::invalid("--frames is required for files"))?;
                let p = FinitePoset::parse_poset_file(&read_file(poset_path)?)?;
                let frames = parse_frame_file(&read_file(frames_path)?)?;
                let family = FrameFamily::new(&p, frames)?;
                Ok((p, family))
            }
        }
    }
}

/// Poset file of a decomposition poset, elements labelled by their
/// rendered member sets so the file is readable on its own.
fn decomposition_poset_file(dp: &DecompositionPoset, p: &FinitePoset) -> Result<String> {
    let labels: Vec<String> = dp.elements().iter().map(|s| p.render_set(s)).collect();
    Ok(dp.poset().clone().with_labels(labels)?.to_poset_file())
}

fn build_command(args: BuildArgs) -> Result<()> {
    let (p, family) = args.instance.build()?;
    let text = match args.emit {
        EmitKind::Cb => build_cb(&p, &family).to_facet_file(),
        EmitKind::Pd => decomposition_poset_file(&build_pd(&p, &family), &p)?,
        EmitKind::D => decomposition_poset_file(&build_d(&p, &family), &p)?,
        EmitKind::PdComplex => build_pd(&p, &family).order_complex().to_facet_file(),
        EmitKind::DComplex => build_d(&p, &family).order_complex().to_facet_file(),
        EmitKind::Poset => p.to_poset_file(),
    };
    write_file(&args.out, &text)?;
    println!("wrote {}", args.out.display());
    if matches!(args.emit, EmitKind::Poset) {
        let frames_out = args
            .frames_out
            .clone()
            .unwrap_or_else(|| args.out.with_extension(frames_extension(&args.out)));
        write_file(&frames_out, &family.to_frame_file())?;
        println!("wrote {}", frames_out.display());
    }
    Ok(())
}

/// `<out>.frames`, preserving an existing extension rather than
/// replacing it: `t.pos` becomes `t.pos.frames`.
fn frames_extension(out: &Path) -> String {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.frames"),
        None => "frames".to_string(),
    }
}

fn homology_command(args: HomologyArgs) -> Result<()> {
    let complex = SimplicialComplex::parse_facet_file(&read_file(&args.facets)?)?;
    match args.modulus {
        Some(p) => {
            for (k, b) in betti_mod_p(&complex, p)?.iter().enumerate() {
                println!("H~{k} rank={b}");
            }
        }
        None => {
            let h = integral_homology(&complex);
            for k in 0..h.betti_vector().len() {
                let torsion = h.torsion(k);
                if torsion.is_empty() {
                    println!("H~{k} rank={}", h.rank(k));
                } else {
                    let list: Vec<String> = torsion.iter().map(|d| d.to_string()).collect();
                    println!("H~{k} rank={} torsion={}", h.rank(k), list.join(","));
                }
            }
        }
    }
    Ok(())
}

/// One greppable verdict line on stdout; details belong on stderr.
fn verdict(name: &str, ok: bool) -> bool {
    println!("{name} {}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn chain_budget(args: &VerifyArgs, cb: &SimplicialComplex) -> Budget {
    match (args.sample, args.seed) {
        (None, None) => default_budget(cb),
        (count, seed) => Budget::Sample {
            count: count.unwrap_or(DEFAULT_SAMPLE_COUNT),
            seed: seed.unwrap_or(DEFAULT_SAMPLE_SEED),
        },
    }
}

fn verify_command(args: VerifyArgs) -> Result<bool> {
    let (p, family) = args.instance.build()?;
    match args.suite {
        SuiteKind::Frames => {
            let mut ok = true;
            for (i, frame) in family.frames().iter().enumerate() {
                match validate_frame(&p, frame.elements()) {
                    FrameVerdict::Valid => {}
                    FrameVerdict::NotAntichain { lower, upper } => {
                        ok = false;
                        eprintln!(
                            "frame {i}: comparable members {} <= {}",
                            p.render(lower),
                            p.render(upper)
                        );
                    }
                    FrameVerdict::MeetViolation { pair, meet } => {
                        ok = false;
                        match meet {
                            Some(m) => eprintln!(
                                "frame {i}: meet of {} and {} escapes the join closure ({})",
                                p.render(pair.0),
                                p.render(pair.1),
                                p.render(m)
                            ),
                            None => eprintln!(
                                "frame {i}: {} and {} have lower bounds but no meet",
                                p.render(pair.0),
                                p.render(pair.1)
                            ),
                        }
                    }
                }
            }
            println!("frames checked={}", family.len());
            Ok(verdict("frames", ok))
        }
        SuiteKind::Ep => {
            let pd = build_pd(&p, &family);
            let report = check_ep(&family, &pd);
            println!("ep checked={}", report.checked);
            if let Some((lo, hi)) = &report.witness {
                eprintln!(
                    "no frame witnesses {} <= {}",
                    p.render_set(lo),
                    p.render_set(hi)
                );
            }
            Ok(verdict("ep", report.holds))
        }
        SuiteKind::Heights => {
            let pd = build_pd(&p, &family);
            match height_additivity(&p, &pd) {
                None => Ok(verdict("heights", true)),
                Some((sigma, join_height, member_sum)) => {
                    eprintln!(
                        "join of {} has height {join_height}, member heights sum to {member_sum}",
                        p.render_set(&sigma)
                    );
                    Ok(verdict("heights", false))
                }
            }
        }
        SuiteKind::Dims => {
            let cb = build_cb(&p, &family);
            let pd = build_pd(&p, &family);
            let d = build_d(&p, &family);
            let ep = check_ep(&family, &pd).holds;
            let report = dimension_report(&p, &family, &cb, &pd, &d, ep);
            println!(
                "dims cb={} pd={} d={} frame-size={} ep={}",
                report.dim_cb, report.dim_pd, report.dim_d, report.m, report.ep_holds
            );
            let mut ok = true;
            for check in &report.checks {
                if !check.applicable {
                    println!("dim-bound {} SKIP", check.name);
                    continue;
                }
                ok &= check.ok;
                println!(
                    "dim-bound {} {}",
                    check.name,
                    if check.ok { "PASS" } else { "FAIL" }
                );
            }
            Ok(verdict("dims", ok))
        }
        SuiteKind::Bounds => {
            let cb = build_cb(&p, &family);
            let pd = build_pd(&p, &family);
            let report = verify_composite_bounds(&p, &family, &cb, &pd, chain_budget(&args, &cb))?;
            println!(
                "bounds mode={} alpha={} beta={}",
                report.mode, report.checked_alpha, report.checked_beta
            );
            for v in &report.violations {
                eprintln!("{v}");
            }
            Ok(verdict("bounds", report.holds()))
        }
        SuiteKind::MInPd => {
            let cb = build_cb(&p, &family);
            let pd = build_pd(&p, &family);
            let report = verify_map_properties(&p, &family, &cb, &pd, chain_budget(&args, &cb))?;
            println!("m-in-pd mode={} checked={}", report.mode, report.checked_m);
            let mut ok = true;
            for v in report.violations.iter().filter(|v| v.starts_with("m ")) {
                ok = false;
                eprintln!("{v}");
            }
            Ok(verdict("m-in-pd", ok))
        }
        SuiteKind::UIffEp => {
            let pd = build_pd(&p, &family);
            let ep = check_ep(&family, &pd);
            println!("u-iff-ep ep={}", ep.holds);
            if ep.holds {
                let cb = build_cb(&p, &family);
                let report =
                    verify_map_properties(&p, &family, &cb, &pd, chain_budget(&args, &cb))?;
                let mut ok = true;
                for v in report.violations.iter().filter(|v| v.starts_with("u ")) {
                    ok = false;
                    eprintln!("{v}");
                }
                Ok(verdict("u-iff-ep", ok))
            } else {
                // Without the property, u must flag the witness pair.
                let (lo, hi) = ep.witness.expect("failed check carries a witness");
                eprintln!(
                    "extension property fails at {} <= {}",
                    p.render_set(&lo),
                    p.render_set(&hi)
                );
                let chain = ChainInPoset::of_refinement(&pd, vec![lo, hi])?;
                let flagged = !map_u(&family, &chain).is_face;
                Ok(verdict("u-iff-ep", flagged))
            }
        }
        SuiteKind::Equivalence => {
            let cb = build_cb(&p, &family);
            let pd = build_pd(&p, &family);
            let sides = [
                ("cb", integral_homology(&cb)),
                ("pd", integral_homology(&pd.order_complex())),
            ];
            for (name, h) in &sides {
                println!("equivalence {name} {}", profile_line(h));
            }
            let profiles: Vec<Vec<(usize, String)>> =
                sides.iter().map(|(_, h)| reduced_profile(h)).collect();
            Ok(verdict("equivalence", profiles[0] == profiles[1]))
        }
        SuiteKind::Spherical => {
            let pd = build_pd(&p, &family);
            let h = integral_homology(&pd.order_complex());
            let top = pd.poset().total_height() - 2;
            println!("spherical top={top} {}", profile_line(&h));
            let concentrated = (0..top).all(|k| h.rank(k) == 0);
            Ok(verdict(
                "spherical",
                h.rank(top) >= 1 && concentrated && h.is_torsion_free(),
            ))
        }
    }
}

/// Single-line rank and torsion summary: `betti=[0,3] torsion=[- -]`.
fn profile_line(h: &HomologyResult) -> String {
    let betti: Vec<String> = h.betti_vector().iter().map(|b| b.to_string()).collect();
    let torsion: Vec<String> = (0..h.betti_vector().len())
        .map(|k| {
            let t: Vec<String> = h.torsion(k).iter().map(|d| d.to_string()).collect();
            if t.is_empty() {
                "-".to_string()
            } else {
                t.join(",")
            }
        })
        .collect();
    format!(
        "betti=[{}] torsion=[{}]",
        betti.join(","),
        torsion.join(" ")
    )
}

/// Rank/torsion pairs with the trailing zero tail trimmed, so complexes
/// of different dimension compare by their homology content alone.
fn reduced_profile(h: &HomologyResult) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = (0..h.betti_vector().len())
        .map(|k| {
            let torsion: Vec<String> = h.torsion(k).iter().map(|d| d.to_string()).collect();
            (h.rank(k), torsion.join(","))
        })
        .collect();
    while matches!(out.last(), Some((0, t)) if t.is_empty()) {
        out.pop();
    }
    out
}
