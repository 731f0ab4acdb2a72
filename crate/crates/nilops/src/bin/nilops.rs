use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nilops::emodel::{algebraic_d1, e_model, two_column_page};
use nilops::functors::{destabilize, f2bar_um, iterated_loops, loops, phi, Quadratic, UnstableAlgebra};
use nilops::gmod::{free_unstable, suspend, tensor, GradedModule, ModuleMap, Violation, DEFAULT_WINDOW};
use nilops::io::{
    dims_line, functor_json, read_algebra, read_functor, read_module, read_sequence, read_subfunctor, sequence_json,
    to_json, FunctorFile, MapFile, ModuleFile, ModuleSummary,
};
use nilops::library::{n_t, projective, projective_infinity};
use nilops::nilfilt::{certify_almost_unstable, delta_n, les_omegan_check, nil_filtration, Verdict};
use nilops::polyfunc::{
    constant, delta_functor, detection_functor, divided_power, e1_class, e1_tilde_class, exterior_power, ext2_nonzero,
    frobenius_ses, identity_functor, localize, module_obstruction, obstruction, poly_degree, quadratic_functors,
    realizability, ses_splits, symmetric_power, tensor_power, zero_functor, FunctorSes, NatTrans, ObstructionMode,
    ObstructionVerdict, PolyFunctor, SubFunctor, YonedaTwoExt,
};
use nilops::singer::{r1, r1_truncated, residue_differential};
use nilops::{io, Error};

#[derive(Parser)]
#[command(name = "nilops", version, about = "Exact computations with unstable modules over the mod-2 Steenrod algebra")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Degree window `dmin,dmax` for generated modules; input modules are restricted to it.
    #[arg(long, global = true, value_parser = parse_window)]
    window: Option<(i32, i32)>,
    /// `strict`: results limited by the window exit with status 2. `warn`: they exit 0 with a warning.
    #[arg(long, global = true, value_enum, default_value_t = TrustPolicy::Strict)]
    trust_policy: TrustPolicy,
    /// Print the structured report as JSON.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrustPolicy {
    Strict,
    Warn,
}

fn parse_window(s: &str) -> std::result::Result<(i32, i32), String> {
    let (a, b) = s.split_once(',').ok_or("expected dmin,dmax")?;
    let a: i32 = a.trim().parse().map_err(|e| format!("dmin: {e}"))?;
    let b: i32 = b.trim().parse().map_err(|e| format!("dmax: {e}"))?;
    if a > b {
        return Err("dmin exceeds dmax".into());
    }
    Ok((a, b))
}

#[derive(Subcommand)]
enum Command {
    /// Validate a module presentation: Adem relations and instability.
    CheckModule { file: PathBuf },
    /// Build a module from the library.
    Gen {
        #[command(subcommand)]
        which: GenCmd,
    },
    /// Apply a functor to a module.
    Op {
        #[command(subcommand)]
        op: OpCmd,
    },
    /// Singer constructions.
    Singer {
        #[command(subcommand)]
        op: SingerCmd,
    },
    /// The quadratic construction and two-column spectral data.
    Emodel {
        #[command(subcommand)]
        op: EmodelCmd,
    },
    /// The nilpotent filtration and its reduced layers.
    Nilfilt {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        smax: i32,
    },
    /// The map from Φρ_n to ρ_{n+1} and the loops exact sequence.
    Delta {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: i32,
    },
    /// Search for an almost-unstable filtration.
    Almost {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        tmax: i32,
    },
    /// The functor l(M) on F₂^0, …, F₂^kmax.
    Localize {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
    },
    /// Polynomial functors on the truncated linear category.
    Functor {
        #[command(subcommand)]
        op: FunctorCmd,
    },
    /// The obstruction class for F₁ and K, given directly or from a module.
    Obstruction(ObstructionArgs),
    /// Checks the degree gate on the image of l(δ_n), then runs the obstruction.
    Realizability {
        #[arg(long)]
        module: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        /// Skip the Ext² computation.
        #[arg(long)]
        structural: bool,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Free unstable module F(n).
    Free {
        #[arg(long)]
        n: u32,
    },
    /// Reduced cohomology of RP^k.
    Rp {
        #[arg(long)]
        k: i32,
    },
    /// Reduced cohomology of RP^∞ through the window.
    RpInf,
    /// Brown-Gitler module N(t).
    Brown {
        #[arg(long)]
        t: u32,
    },
    /// One class in the given degree.
    Point {
        #[arg(long, default_value_t = 0)]
        degree: i32,
    },
    /// RP^k as an unstable algebra with its product.
    RpAlgebra {
        #[arg(long)]
        k: i32,
    },
}

#[derive(Subcommand)]
enum OpCmd {
    /// Frobenius functor Φ.
    Phi { file: PathBuf },
    /// Symmetric square.
    S2 { file: PathBuf },
    /// Exterior square.
    Lambda2 { file: PathBuf },
    /// Divided square.
    Gamma2 { file: PathBuf },
    /// Tensor product of two modules.
    Tensor { a: PathBuf, b: PathBuf },
    /// Σ^t.
    Suspend {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        by: i32,
    },
    /// Ω^n; with n = 1 also Ω₁.
    Loops {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Ω^∞Σ^{-t}.
    Destab {
        file: PathBuf,
        #[arg(long)]
        t: u32,
    },
    /// The enveloping-algebra piece F₂ŪM.
    F2u { file: PathBuf },
}

#[derive(Subcommand)]
enum SingerCmd {
    /// The Singer functor R₁ in the window.
    R1 { file: PathBuf },
    /// The truncation R_{1/n} with its layers.
    R1n {
        file: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// Residue differential of R_{1/n}Σ^{-n}N.
    D1n {
        file: PathBuf,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum EmodelCmd {
    /// Build 𝓔ₙM with its structure maps.
    Build {
        file: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// d₁ for an unstable algebra.
    D1 {
        algebra: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// Two-column E₂ page for an unstable algebra and the factorization of its layer maps.
    TwoColumn {
        algebra: PathBuf,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Args)]
struct FunctorSource {
    /// Functor file (or a report with a "functor" field).
    file: Option<PathBuf>,
    /// Built-in functor: id, const, zero, t2, s2, lambda2, gamma2, t3, s3, lambda3, gamma3.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
}

#[derive(Args)]
struct SequenceSource {
    /// Sequence file: functors and natural transformations between consecutive ones.
    file: Option<PathBuf>,
    /// Built-in sequence: phi (Id → S² → Λ²), split, e1, e1-tilde, trivial, lambda2-t2.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
}

#[derive(Subcommand)]
enum FunctorCmd {
    /// Print a built-in functor or sequence as a file.
    Show {
        #[arg(long)]
        builtin: String,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
    },
    /// Polynomial degree.
    Degree(FunctorSource),
    /// Difference functor ΔF.
    Delta(FunctorSource),
    /// Decide whether a short exact sequence splits.
    Split(SequenceSource),
    /// Decide whether a 2-extension is nonzero.
    Ext2(SequenceSource),
    /// Detection chain for f: F → G at degree d.
    Detect {
        #[command(flatten)]
        seq: SequenceSource,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
}

#[derive(Args)]
struct ObstructionArgs {
    #[arg(long)]
    n: usize,
    /// Take F₁ = l(ρ_n M) and K = ker l(δ_n) from this module.
    #[arg(long, conflicts_with_all = ["f1", "kernel"])]
    module: Option<PathBuf>,
    /// F₁ as a functor file or built-in name.
    #[arg(long)]
    f1: Option<String>,
    /// K: `full`, `zero` or a subfunctor file (of F₁, or of S²∘F₁ for n = 1).
    #[arg(long, default_value = "full")]
    kernel: String,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    /// Skip the Ext² computation.
    #[arg(long)]
    structural: bool,
}

/// Outcome of a command before printing.
struct Report {
    text: String,
    json: Value,
    status: Status,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Computed,
    /// Depends on the window; governed by the trust policy.
    Inconclusive,
    HypothesisNotMet,
}

impl Report {
    fn computed(text: String, json: Value) -> Report {
        Report { text, json, status: Status::Computed }
    }

    fn with_status(mut self, status: Status) -> Report {
        self.status = status;
        self
    }
}

type CmdResult = nilops::Result<Report>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serialization")
}

fn summary(m: &GradedModule) -> Value {
    to_value(&ModuleSummary::of(m))
}

fn module_report(m: &GradedModule, label: &str) -> Report {
    let file = to_value(&ModuleFile::from_module(m));
    Report::computed(format!("{label}: {}\n", ModuleSummary::of(m)), file)
}

fn input_module(path: &Path, g: &Global) -> nilops::Result<GradedModule> {
    let m = read_module(path)?;
    restrict(m, g)
}

fn restrict(m: GradedModule, g: &Global) -> nilops::Result<GradedModule> {
    let Some((a, b)) = g.window else { return Ok(m) };
    if let Some(lo) = m.low() {
        if lo < a {
            return Err(Error::Parse(format!("--window {a},{b} drops classes in degree {lo}")));
        }
    }
    if !m.complete() && b > m.dmax() {
        return Err(Error::Parse(format!("--window {a},{b} extends an incomplete module above degree {}", m.dmax())));
    }
    if m.complete() && m.high().is_some_and(|h| h > b) {
        return Ok(m.rewindow(a, b).with_trust(nilops::gmod::TrustDegree::at(b)));
    }
    Ok(m.rewindow(a, b))
}

fn window_top(g: &Global) -> i32 {
    g.window.unwrap_or(DEFAULT_WINDOW).1
}

fn gen(which: &GenCmd, g: &Global) -> CmdResult {
    let top = window_top(g);
    let m = match *which {
        GenCmd::Free { n } => free_unstable(n, top),
        GenCmd::Rp { k } => projective(k),
        GenCmd::RpInf => projective_infinity(top),
        GenCmd::Brown { t } => n_t(t),
        GenCmd::Point { degree } => GradedModule::point(degree),
        GenCmd::RpAlgebra { k } => {
            let a = UnstableAlgebra::projective(k);
            let file = to_value(&ModuleFile::from_algebra(&a));
            return Ok(Report::computed(format!("algebra: {}\n", ModuleSummary::of(&a.carrier)), file));
        }
    };
    Ok(module_report(&m, "module"))
}

fn check_module(path: &Path) -> CmdResult {
    let m = read_module(path)?;
    let mut violations = m.validate().violations;
    for v in m.instability_violations() {
        if !violations.contains(&v) {
            violations.push(v);
        }
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    let axioms_ok = !violations.iter().any(|v| matches!(v, Violation::Adem { .. }));
    let json = json!({
        "violations": lines,
        "module": summary(&m),
        "unstable": lines.is_empty(),
    });
    let mut text = format!("module: {}\n", ModuleSummary::of(&m));
    if lines.is_empty() {
        text.push_str("no violations: a valid unstable module\n");
        return Ok(Report::computed(text, json));
    }
    for l in &lines {
        text.push_str(&format!("violation: {l}\n"));
    }
    if axioms_ok {
        Ok(Report::computed(text, json).with_status(Status::HypothesisNotMet))
    } else {
        Err(Error::Parse(text.trim_end().to_string()))
    }
}

fn op(cmd: &OpCmd, g: &Global) -> CmdResult {
    Ok(match cmd {
        OpCmd::Phi { file } => module_report(&phi(&input_module(file, g)?), "ΦM"),
        OpCmd::S2 { file } => module_report(&Quadratic::new(&input_module(file, g)?).s2.module, "S²M"),
        OpCmd::Lambda2 { file } => module_report(&Quadratic::new(&input_module(file, g)?).lambda2.module, "Λ²M"),
        OpCmd::Gamma2 { file } => module_report(&Quadratic::new(&input_module(file, g)?).gamma2.module, "Γ²M"),
        OpCmd::Tensor { a, b } => module_report(&tensor(&input_module(a, g)?, &input_module(b, g)?), "M⊗N"),
        OpCmd::Suspend { file, by } => module_report(&suspend(&input_module(file, g)?, *by), "ΣᵗM"),
        OpCmd::Loops { file, n } => {
            let m = input_module(file, g)?;
            if *n == 1 {
                let l = loops(&m)?;
                let mut r = module_report(&l.omega, "ΩM");
                r.text.push_str(&format!("Ω₁M: {}\n", ModuleSummary::of(&l.omega1)));
                r
            } else {
                module_report(&iterated_loops(&m, *n)?.module, "ΩⁿM")
            }
        }
        OpCmd::Destab { file, t } => module_report(&destabilize(&input_module(file, g)?, *t)?, "Ω^∞Σ^-tM"),
        OpCmd::F2u { file } => module_report(&f2bar_um(&input_module(file, g)?)?.module, "F₂ŪM"),
    })
}

fn rank_line(f: &ModuleMap) -> String {
    dims_line(&f.rank_map())
}

fn singer(cmd: &SingerCmd, g: &Global) -> CmdResult {
    match cmd {
        SingerCmd::R1 { file } => {
            let m = input_module(file, g)?;
            let top = g.window.map_or(2 * m.dmax(), |w| w.1);
            let s = r1(&m, top);
            let text = format!("R₁M: {}\n", ModuleSummary::of(&s.carrier));
            Ok(Report::computed(text, json!({ "r1": summary(&s.carrier) })))
        }
        SingerCmd::R1n { file, n } => {
            let m = input_module(file, g)?;
            let t = r1_truncated(&m, *n);
            let layers: Vec<Value> = t.layers.iter().map(|l| summary(&l.module)).collect();
            let mut text = format!("R_1/{n}M: {}\n", ModuleSummary::of(&t.module.carrier));
            for (i, l) in t.layers.iter().enumerate() {
                text.push_str(&format!("  u^{i} layer: {}\n", dims_line(&l.module.dim_map())));
            }
            Ok(Report::computed(text, json!({ "n": n, "module": summary(&t.module.carrier), "layers": layers })))
        }
        SingerCmd::D1n { file, n } => {
            let m = input_module(file, g)?;
            let r = residue_differential(&m, *n)?;
            let coker = r.cokernel().module;
            let text = format!(
                "d_1/{n}: well defined {}\n  rank {}\n  coker(Σd): {}\n",
                r.well_defined,
                rank_line(&r.map),
                ModuleSummary::of(&coker)
            );
            let json = json!({
                "n": n,
                "well_defined": r.well_defined,
                "rank": r.map.rank_map(),
                "cokernel": summary(&coker),
            });
            Ok(Report::computed(text, json))
        }
    }
}

fn emodel(cmd: &EmodelCmd, g: &Global) -> CmdResult {
    match cmd {
        EmodelCmd::Build { file, n } => {
            let m = input_module(file, g)?;
            let e = e_model(&m, *n)?;
            let mut text = format!(
                "E_{n}M: {}\n  sub: {}\n  quotient: {}\n",
                ModuleSummary::of(&e.module),
                dims_line(&e.sub.dim_map()),
                dims_line(&e.quotient.dim_map())
            );
            for d in &e.defects {
                text.push_str(&format!("defect: {d}\n"));
            }
            let json = json!({
                "n": n,
                "module": summary(&e.module),
                "sub": summary(&e.sub),
                "quotient": summary(&e.quotient),
                "defects": e.defects,
                "trust": e.trust.to_string(),
            });
            Ok(Report::computed(text, json))
        }
        EmodelCmd::D1 { algebra, n } => {
            let k = read_algebra(algebra)?;
            let d = algebraic_d1(&k, *n)?;
            let mut text = format!(
                "d₁: {} → {}\n  rank {}\n  legs compatible: {}\n",
                dims_line(&d.source.dim_map()),
                dims_line(&d.target.dim_map()),
                rank_line(&d.map),
                d.compatible
            );
            for x in &d.defects {
                text.push_str(&format!("defect: {x}\n"));
            }
            let json = json!({
                "n": n,
                "source": summary(&d.source),
                "target": summary(&d.target),
                "rank": d.map.rank_map(),
                "map": to_value(&MapFile::from_map(&d.map)),
                "compatible": d.compatible,
                "defects": d.defects,
            });
            Ok(Report::computed(text, json))
        }
        EmodelCmd::TwoColumn { algebra, n } => {
            let k = read_algebra(algebra)?;
            let r = two_column_page(&k, *n)?;
            let mut text = format!(
                "ρ₀(Σ^-1 E_∞^-1): {}\nρ₀(Σ^-2 E_1^-2): {}\nρ₀(Σ^-2 E_∞^-2): {}\nlayer map rank: {}\n",
                dims_line(&r.f1_layer.dim_map()),
                dims_line(&r.rho0_column2.dim_map()),
                dims_line(&r.rho0_infinity2.dim_map()),
                rank_line(&r.layer_map)
            );
            if let Some(f) = r.factorization_holds {
                text.push_str(&format!("factors through Φρ_{n} as δ_{n}: {f}\n"));
            }
            text.push_str(&format!("d₁ lands in nil_{}: {}\nρ₀ matches: {}\n", n + 1, r.d1_in_nil, r.rho0_matches));
            for h in &r.hypotheses {
                text.push_str(&format!("hypothesis: {h}\n"));
            }
            let json = json!({
                "n": n,
                "f1_layer": summary(&r.f1_layer),
                "rho0_column2": summary(&r.rho0_column2),
                "rho0_infinity2": summary(&r.rho0_infinity2),
                "layer_map_rank": r.layer_map.rank_map(),
                "factorization_holds": r.factorization_holds,
                "d1_in_nil": r.d1_in_nil,
                "rho0_matches": r.rho0_matches,
                "hypotheses": r.hypotheses,
                "trust": r.trust.to_string(),
            });
            let status = if r.hypotheses.is_empty() { Status::Computed } else { Status::HypothesisNotMet };
            Ok(Report::computed(text, json).with_status(status))
        }
    }
}

fn nilfilt(path: &Path, smax: i32, g: &Global) -> CmdResult {
    let m = input_module(path, g)?;
    let f = nil_filtration(&m, smax)?;
    let mut text = format!("M: {}\ntrusted through {}\n", ModuleSummary::of(&m), f.trust);
    let mut pieces = BTreeMap::new();
    for (s, sp) in f.nil.iter().enumerate() {
        text.push_str(&format!("nil_{s}: {}\n", dims_line(&sp.dims())));
        pieces.insert(s as i32, sp.dims());
    }
    let mut layers = Vec::new();
    for s in 0..=smax {
        let l = f.rho(s);
        text.push_str(&format!("ρ_{s}: {}\n", dims_line(&l.dim_map())));
        layers.push(json!({ "s": s, "dims": l.dim_map(), "presentation": to_value(&ModuleFile::from_module(l)) }));
    }
    let json = json!({
        "module": summary(&m),
        "smax": smax,
        "trust": f.trust.to_string(),
        "nil": pieces,
        "layers": layers,
    });
    let status = if m.complete() { Status::Computed } else { Status::Inconclusive };
    Ok(Report::computed(text, json).with_status(status))
}

fn delta(path: &Path, n: i32, g: &Global) -> CmdResult {
    let m = input_module(path, g)?;
    let d = delta_n(&m, n)?;
    let les = les_omegan_check(&m, n)?;
    let mut text = format!(
        "Φρ_{n}: {}\nρ_{}: {}\nδ_{n} rank: {}\nδ_{n} is zero: {}\nlands in nil_{}: {}\nresidue factors: {}\n",
        dims_line(&d.map.source.dim_map()),
        n + 1,
        dims_line(&d.map.target.dim_map()),
        rank_line(&d.map),
        d.map.is_zero(),
        n + 1,
        d.lands_in_nil,
        d.residue_factors
    );
    text.push_str(&format!("four-term sequence exact: {}\n", les.defects.is_empty()));
    for x in &les.defects {
        text.push_str(&format!("defect: {x}\n"));
    }
    let json = json!({
        "n": n,
        "source": summary(&d.map.source),
        "target": summary(&d.map.target),
        "rank": d.map.rank_map(),
        "map": to_value(&MapFile::from_map(&d.map)),
        "zero": d.map.is_zero(),
        "lands_in_nil": d.lands_in_nil,
        "residue_factors": d.residue_factors,
        "sequence_defects": les.defects,
        "trust": d.filtration.trust.to_string(),
    });
    let status = if m.complete() { Status::Computed } else { Status::Inconclusive };
    Ok(Report::computed(text, json).with_status(status))
}

fn almost(path: &Path, tmax: i32, g: &Global) -> CmdResult {
    let m = input_module(path, g)?;
    let v = certify_almost_unstable(&m, None, tmax);
    let (steps, why, status) = match &v {
        Verdict::Yes(w) => {
            let steps: Vec<Value> = w.steps.iter().map(|s| json!({ "t": s.t, "dims": s.space.dims() })).collect();
            (steps, String::new(), Status::Computed)
        }
        Verdict::No(w) => (vec![], w.clone(), Status::Computed),
        Verdict::Inconclusive(w) => (vec![], w.clone(), Status::Inconclusive),
    };
    let mut text = format!("almost unstable: {}\n", v.label());
    if !why.is_empty() {
        text.push_str(&format!("  {why}\n"));
    }
    for s in &steps {
        text.push_str(&format!("  step t={}: {}\n", s["t"], s["dims"]));
    }
    let json = json!({ "verdict": v.label(), "reason": why, "steps": steps });
    Ok(Report::computed(text, json).with_status(status))
}

fn localize_cmd(path: &Path, kmax: usize, g: &Global) -> CmdResult {
    let m = input_module(path, g)?;
    let l = localize(&m, kmax)?;
    let f = l.functor.clone().named("l(M)");
    let deg = poly_degree(&f);
    let text = format!(
        "l(M): dims {:?}\n  degree {deg}\n  maps compared through degree {}{}\n",
        f.dims,
        l.cut,
        if l.exact { "" } else { " (windowed)" }
    );
    let json = json!({
        "functor": to_value(&FunctorFile::from_functor(&f)),
        "degree": to_value(&deg),
        "cut": l.cut,
        "exact": l.exact,
    });
    let status = if l.exact { Status::Computed } else { Status::Inconclusive };
    Ok(Report::computed(text, json).with_status(status))
}

fn builtin_functor(name: &str, kmax: usize) -> nilops::Result<PolyFunctor> {
    Ok(match name {
        "id" => identity_functor(kmax),
        "const" => constant(1, kmax),
        "zero" => zero_functor(kmax),
        "t2" => tensor_power(2, kmax),
        "s2" => symmetric_power(2, kmax),
        "lambda2" => exterior_power(2, kmax),
        "gamma2" => divided_power(2, kmax),
        "t3" => tensor_power(3, kmax),
        "s3" => symmetric_power(3, kmax),
        "lambda3" => exterior_power(3, kmax),
        "gamma3" => divided_power(3, kmax),
        _ => return Err(Error::Parse(format!("unknown functor {name}"))),
    })
}

fn builtin_sequence(name: &str, kmax: usize) -> nilops::Result<Vec<NatTrans>> {
    let q = quadratic_functors(kmax);
    Ok(match name {
        "phi" => {
            let e = frobenius_ses(kmax);
            vec![e.f, e.g]
        }
        "split" => {
            let (a, b) = (identity_functor(kmax), exterior_power(2, kmax));
            let (_, incl, proj) = nilops::polyfunc::direct_sum(&[&a, &b]);
            vec![incl[0].clone(), proj[1].clone()]
        }
        "e1" => two_ext_maps(&e1_class(kmax)),
        "e1-tilde" => two_ext_maps(&e1_tilde_class(kmax)),
        "trivial" => {
            let id = identity_functor(kmax);
            two_ext_maps(&YonedaTwoExt::trivial(&id, &id))
        }
        "lambda2-t2" => vec![q.lambda2_to_gamma2.then(&q.gamma2_to_t2)],
        _ => return Err(Error::Parse(format!("unknown sequence {name}"))),
    })
}

fn two_ext_maps(x: &YonedaTwoExt) -> Vec<NatTrans> {
    vec![x.i.clone(), x.d.clone(), x.p.clone()]
}

fn functor_input(src: &FunctorSource) -> nilops::Result<PolyFunctor> {
    match (&src.file, &src.builtin) {
        (Some(p), None) => read_functor(p),
        (None, Some(name)) => builtin_functor(name, src.kmax),
        _ => Err(Error::Parse("give exactly one of a functor file or --builtin".into())),
    }
}

fn sequence_input(src: &SequenceSource, len: usize) -> nilops::Result<Vec<NatTrans>> {
    let maps = match (&src.file, &src.builtin) {
        (Some(p), None) => read_sequence(p)?,
        (None, Some(name)) => builtin_sequence(name, src.kmax)?,
        _ => return Err(Error::Parse("give exactly one of a sequence file or --builtin".into())),
    };
    if maps.len() != len {
        return Err(Error::Parse(format!("expected a sequence of {len} maps, found {}", maps.len())));
    }
    Ok(maps)
}

fn functor_cmd(cmd: &FunctorCmd) -> CmdResult {
    match cmd {
        FunctorCmd::Show { builtin, kmax } => {
            let text = match builtin_functor(builtin, *kmax) {
                Ok(f) => functor_json(&f),
                Err(_) => {
                    let maps = builtin_sequence(builtin, *kmax)?;
                    let refs: Vec<&NatTrans> = maps.iter().collect();
                    sequence_json(&refs)
                }
            };
            let json: Value = serde_json::from_str(&text).expect("own output parses");
            Ok(Report::computed(text, json))
        }
        FunctorCmd::Degree(src) => {
            let f = functor_input(src)?;
            let deg = poly_degree(&f);
            let mut chain = vec![f.dims.clone()];
            let mut cur = f.clone();
            while cur.kmax() > 0 && !cur.is_zero() {
                cur = delta_functor(&cur)?;
                chain.push(cur.dims.clone());
            }
            let mut text = format!("{}: dims {:?}\ndegree {deg}\n", f.name, f.dims);
            for (j, c) in chain.iter().enumerate().skip(1) {
                text.push_str(&format!("  Δ^{j}: {c:?}\n"));
            }
            let json = json!({ "name": f.name, "dims": f.dims, "degree": to_value(&deg), "delta_dims": chain });
            Ok(Report::computed(text, json))
        }
        FunctorCmd::Delta(src) => {
            let f = functor_input(src)?;
            let d = delta_functor(&f)?.named(&format!("Δ{}", f.name));
            let text = format!("{}: dims {:?}\n", d.name, d.dims);
            Ok(Report::computed(text, to_value(&FunctorFile::from_functor(&d))))
        }
        FunctorCmd::Split(src) => {
            let maps = sequence_input(src, 2)?;
            let e = FunctorSes::new(&maps[0], &maps[1]);
            let defects = e.defects();
            if !defects.is_empty() {
                return Err(Error::Parse(format!("not a short exact sequence: {}", defects.join("; "))));
            }
            let r = ses_splits(&e);
            let mut text = format!("splits: {}\n  {} unknowns, {} equations\n", r.splits, r.unknowns, r.equations);
            let retraction = r.retraction.as_ref().map(|t| t.mats.iter().map(io::matrix_rows).collect::<Vec<_>>());
            let certificate = r.certificate.as_ref().map(|c| c.to_bitstring());
            if let Some(c) = &certificate {
                text.push_str(&format!("  obstruction functional: {} equations\n", c.chars().filter(|&x| x == '1').count()));
            }
            let json = json!({
                "splits": r.splits,
                "retraction": retraction,
                "certificate": certificate,
                "unknowns": r.unknowns,
                "equations": r.equations,
            });
            Ok(Report::computed(text, json))
        }
        FunctorCmd::Ext2(src) => {
            let maps = sequence_input(src, 3)?;
            let x = YonedaTwoExt::new(&maps[0], &maps[1], &maps[2]);
            let r = ext2_nonzero(&x)?;
            let text = format!(
                "class nonzero: {}\n  generators of P₀, P₁, P₂ in dims {:?}\n",
                r.nonzero, r.generators
            );
            Ok(Report::computed(text, to_value(&r)))
        }
        FunctorCmd::Detect { seq, d } => {
            let maps = sequence_input(seq, 1)?;
            let chain = detection_functor(&maps[0], *d)?;
            let s = chain.summary();
            let text = format!(
                "E: dims {:?}\ncomposite is the identity: {}\n",
                s.e_dims, s.composite_is_identity
            );
            let status = if s.composite_is_identity { Status::Computed } else { Status::HypothesisNotMet };
            Ok(Report::computed(text, to_value(&s)).with_status(status))
        }
    }
}

fn verdict_status(v: ObstructionVerdict) -> Status {
    match v {
        ObstructionVerdict::HypothesisNotMet => Status::HypothesisNotMet,
        _ => Status::Computed,
    }
}

fn obstruction_text(r: &nilops::polyfunc::ObstructionReport) -> String {
    let mut t = format!(
        "F₁ = {} dims {:?}, degree {}\nK dims {:?}\ntested subfunctor dims {:?}, degree {}\nω = {}\nverdict: {}\n  {}\n",
        r.f1.name,
        r.f1.dims,
        r.degree_f1,
        r.k.dims,
        r.tested.dims,
        r.degree_tested,
        r.omega,
        r.verdict.label(),
        r.reason
    );
    if let Some(e) = &r.ext2 {
        t.push_str(&format!("Ext² class nonzero: {}\n", e.nonzero));
    }
    if let Some(d) = &r.detection {
        t.push_str(&format!("detection composite is the identity: {}\n", d.composite_is_identity));
    }
    t
}

fn mode(structural: bool) -> ObstructionMode {
    if structural {
        ObstructionMode::Structural
    } else {
        ObstructionMode::Full
    }
}

fn obstruction_cmd(a: &ObstructionArgs, g: &Global) -> CmdResult {
    let r = if let Some(path) = &a.module {
        let m = input_module(path, g)?;
        module_obstruction(&m, a.n, a.kmax, mode(a.structural))?
    } else {
        let f1 = match &a.f1 {
            Some(s) if Path::new(s).exists() => read_functor(Path::new(s))?,
            Some(s) => builtin_functor(s, a.kmax)?,
            None => return Err(Error::Parse("give --module or --f1".into())),
        };
        let ambient = if a.n >= 2 { f1.clone() } else { nilops::polyfunc::compose(&symmetric_power(2, f1.max_dim().max(1)), &f1)? };
        let k = match a.kernel.as_str() {
            "full" => SubFunctor::full(&ambient),
            "zero" => SubFunctor::zero(&ambient),
            p => read_subfunctor(Path::new(p), &ambient)?,
        };
        obstruction(a.n, &f1, &k, mode(a.structural))?
    };
    let status = verdict_status(r.verdict);
    Ok(Report::computed(obstruction_text(&r), to_value(&r)).with_status(status))
}

fn realizability_cmd(path: &Path, n: usize, kmax: usize, structural: bool, g: &Global) -> CmdResult {
    let m = input_module(path, g)?;
    let r = realizability(&m, n, kmax, mode(structural))?;
    let mut text = format!(
        "Nil_{n}: {}\n{n}-connected: {}\nρ_{n}: {}\ndegree of l(ρ_{n}): {}\ndegree of image of l(δ_{n}): {}\ngate passed: {}\n",
        r.nil_n,
        r.connected,
        dims_line(&r.rho_n_dims),
        r.degree_f1,
        r.degree_image,
        r.gate_passed
    );
    match &r.obstruction {
        Some(o) => text.push_str(&obstruction_text(o)),
        None => text.push_str(&format!("verdict: {}\n  {}\n", r.verdict.label(), r.reason)),
    }
    let status = verdict_status(r.verdict);
    Ok(Report::computed(text, to_value(&r)).with_status(status))
}

fn run(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::CheckModule { file } => check_module(file),
        Command::Gen { which } => gen(which, g),
        Command::Op { op: o } => op(o, g),
        Command::Singer { op: o } => singer(o, g),
        Command::Emodel { op: o } => emodel(o, g),
        Command::Nilfilt { file, smax } => nilfilt(file, *smax, g),
        Command::Delta { file, n } => delta(file, *n, g),
        Command::Almost { file, tmax } => almost(file, *tmax, g),
        Command::Localize { file, kmax } => localize_cmd(file, *kmax, g),
        Command::Functor { op: o } => functor_cmd(o),
        Command::Obstruction(a) => obstruction_cmd(a, g),
        Command::Realizability { module, n, kmax, structural } => realizability_cmd(module, *n, *kmax, *structural, g),
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("NILOPS_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("NILOPS_THREADS: not a number: {v}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(r) => {
            if cli.global.json {
                print!("{}", to_json(&r.json));
            } else {
                print!("{}", r.text);
            }
            match r.status {
                Status::Computed => ExitCode::SUCCESS,
                Status::HypothesisNotMet => ExitCode::from(2),
                Status::Inconclusive => match cli.global.trust_policy {
                    TrustPolicy::Strict => {
                        eprintln!("note: result depends on the window; exit status 2 under --trust-policy strict");
                        ExitCode::from(2)
                    }
                    TrustPolicy::Warn => {
                        eprintln!("warning: result depends on the window; see the reported trust degree");
                        ExitCode::SUCCESS
                    }
                },
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Precondition(_) | Error::Window(_) => ExitCode::from(2),
                Error::NotUnstable(_) | Error::Parse(_) => ExitCode::from(1),
            }
        }
    }
}
