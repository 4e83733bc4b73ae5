//! `lkh`: checks and transforms proof files.

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lkh::calculus::{subformula_property, Side};
use lkh::cutelim::{eliminate_cuts_traced, CutElimError};
use lkh::skolem::{
    analyze_freeness, deskolemize_implication, eliminate_counterexample, eliminate_witness, CriticalInferenceReport,
    SkolemError, SkolemizationSpec,
};
use lkh::text::{parse, parse_formula, parse_term, serialize, Document, Item, Provenance};
use lkh::transform::{invert, replace_in_proof, weaken, InversionTarget, TransformError};
use lkh::{check_proof, Expression, Formula, Polarity, Proof, RuleTag};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lkh", version, about = "Check and transform LK^h proofs")]
struct Cli {
    /// Proof to operate on when the file holds several (default: the first).
    #[arg(long, global = true)]
    proof: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Witness,
    Counterexample,
}

#[derive(Subcommand)]
enum Command {
    /// Check a proof and print its length, height, cut-rank and purity.
    Check { file: PathBuf },
    /// Print the statistics of every proof as JSON.
    Stats { file: PathBuf },
    /// Eliminate all cuts from a proof of a pure sequent.
    Cutelim {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write one JSON record per reduction step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Eliminate a Skolem function.
    Deskolemize {
        file: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, value_enum)]
        polarity: PolarityArg,
        #[arg(short, long)]
        output: PathBuf,
        /// Print the critical inferences as JSON.
        #[arg(long)]
        report: bool,
    },
    /// Invert a rule on an endsequent formula, e.g. `--target "LExists (E x (P x))"`.
    Invert {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Weaken the endsequent by extra formulas.
    Weaken {
        file: PathBuf,
        #[arg(long = "add-left")]
        add_left: Vec<String>,
        #[arg(long = "add-right")]
        add_right: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Deeply replace a term throughout the proof.
    Replace {
        file: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Verify that every formula is a subformula of the endsequent.
    SubformulaCheck { file: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Outcome = Result<(), Failure>;

struct Loaded {
    doc: Document,
    name: String,
    proof: Proof,
    provenance: Provenance,
}

fn load(file: &FsPath, wanted: Option<&str>) -> Result<Loaded, Failure> {
    let display = file.display().to_string();
    let text = fs::read_to_string(file).map_err(|e| fail(1, format!("{display}: {e}")))?;
    let doc = parse(&text, Some(&display)).map_err(|e| fail(1, format!("{display}:{e}")))?;
    let (name, proof, provenance) = match wanted {
        Some(w) => doc.proofs().find(|(n, _, _)| &***n == w),
        None => doc.proofs().next(),
    }
    .map(|(n, p, prov)| (n.to_string(), p.clone(), prov.clone()))
    .ok_or_else(|| fail(1, format!("{display}: no proof{}", wanted.map(|w| format!(" named `{w}`")).unwrap_or_default())))?;
    if let Err(e) = check_proof(&proof) {
        return Err(fail(1, format!("{}: {}", provenance.locate(&e.path), e.error)));
    }
    Ok(Loaded { doc, name, proof, provenance })
}

/// Writes `proofs` under the input's signature, extended by new symbols and
/// without `drop`.
fn store(path: &FsPath, src: &Document, proofs: Vec<(String, Proof)>, drop: Option<&str>) -> Outcome {
    let mut signature = src.signature.clone();
    for (_, p) in &proofs {
        debug_assert!(check_proof(p).is_ok());
        signature.scan_proof(p);
    }
    if let Some(g) = drop {
        signature.remove(g);
    }
    let items = proofs
        .into_iter()
        .map(|(name, proof)| Item::Proof { name: name.into(), proof, provenance: Provenance::default() })
        .collect();
    let doc = Document { signature, items };
    fs::write(path, serialize(&doc)).map_err(|e| fail(1, format!("{}: {e}", path.display())))
}

fn stats_json(name: &str, p: &Proof) -> serde_json::Value {
    let s = p.stats();
    json!({
        "name": name,
        "length": s.length,
        "height": s.height,
        "cut_rank": s.cut_rank,
        "pure": p.conclusion.is_pure(),
    })
}

fn check(file: &FsPath, wanted: Option<&str>) -> Outcome {
    let l = load(file, wanted)?;
    let s = l.proof.stats();
    println!(
        "{}: ok length={} height={} cut_rank={} pure={}",
        l.name,
        s.length,
        s.height,
        s.cut_rank,
        l.proof.conclusion.is_pure()
    );
    Ok(())
}

fn stats(file: &FsPath, wanted: Option<&str>) -> Outcome {
    let l = load(file, wanted)?;
    let records: Vec<serde_json::Value> = match wanted {
        Some(_) => vec![stats_json(&l.name, &l.proof)],
        None => {
            let mut out = Vec::new();
            for (name, p, prov) in l.doc.proofs() {
                if let Err(e) = check_proof(p) {
                    return Err(fail(1, format!("{}: {}", prov.locate(&e.path), e.error)));
                }
                out.push(stats_json(name, p));
            }
            out
        }
    };
    println!("{}", serde_json::to_string_pretty(&records).expect("serializable"));
    Ok(())
}

fn cutelim(file: &FsPath, wanted: Option<&str>, output: &FsPath, trace: Option<&FsPath>) -> Outcome {
    let l = load(file, wanted)?;
    let (out, records) = eliminate_cuts_traced(&l.proof).map_err(|e| match e {
        CutElimError::NonPureEndsequent(_) => fail(2, format!("{}: {e}", l.provenance.locate(&[]))),
        other => fail(1, other.to_string()),
    })?;
    if let Some(path) = trace {
        let lines: String = records
            .iter()
            .map(|r| {
                json!({
                    "step": r.step,
                    "op": r.op,
                    "length": r.stats.length,
                    "height": r.stats.height,
                    "cut_rank": r.stats.cut_rank,
                })
                .to_string()
                    + "\n"
            })
            .collect();
        fs::write(path, lines).map_err(|e| fail(1, format!("{}: {e}", path.display())))?;
    }
    store(output, &l.doc, vec![(l.name, out)], None)
}

fn report_json(r: &CriticalInferenceReport) -> serde_json::Value {
    let terms = |ts: &[lkh::Term]| ts.iter().map(ToString::to_string).collect::<Vec<_>>();
    json!({
        "n": r.n(),
        "critical": r.critical.iter().map(|c| json!({"path": c.path, "terms": terms(&c.terms)})).collect::<Vec<_>>(),
        "ordering": r.ordering.iter().map(|ts| terms(ts)).collect::<Vec<_>>(),
    })
}

/// Finds the Skolemized formula for `function` in the endsequent and the
/// elimination that applies to it.
fn skolem_target(p: &Proof, function: &str, polarity: Polarity) -> Option<(SkolemizationSpec, bool)> {
    let spec_of = |f: &Formula| SkolemizationSpec::from_skolemized(f, function, polarity).ok();
    let side = match polarity {
        Polarity::Witness => Side::Left,
        Polarity::Counterexample => Side::Right,
    };
    if let Some(spec) = p.conclusion.cedent(side).iter().find_map(spec_of) {
        return Some((spec, false));
    }
    if polarity == Polarity::Witness {
        for f in p.conclusion.succedent() {
            if let Formula::Imp(a, _) = f {
                if let Some(spec) = spec_of(a) {
                    return Some((spec, true));
                }
            }
        }
    }
    None
}

fn deskolemize(
    file: &FsPath,
    wanted: Option<&str>,
    function: &str,
    polarity: Polarity,
    output: &FsPath,
    report: bool,
) -> Outcome {
    let l = load(file, wanted)?;
    let (spec, implication) = skolem_target(&l.proof, function, polarity)
        .ok_or_else(|| fail(1, format!("{}: no Skolemized formula for `{function}` in the endsequent", l.provenance.locate(&[]))))?;
    let not_free = |nf: &lkh::skolem::NotFree| {
        fail(3, format!("{}: not free for `{function}` at node {:?}: {:?}", l.provenance.locate(&nf.path), nf.path, nf.reason))
    };
    let analyzed = analyze_freeness(&l.proof, &spec).map_err(|nf| not_free(&nf))?;
    if report {
        println!("{}", serde_json::to_string_pretty(&report_json(&analyzed)).expect("serializable"));
    }
    let result = match (polarity, implication) {
        (Polarity::Witness, true) => deskolemize_implication(&l.proof, &spec),
        (Polarity::Witness, false) => eliminate_witness(&l.proof, &spec),
        (Polarity::Counterexample, _) => eliminate_counterexample(&l.proof, &spec),
    };
    let out = result.map_err(|e| match e {
        SkolemError::NotFree(nf) => not_free(&nf),
        other => fail(1, other.to_string()),
    })?;
    store(output, &l.doc, vec![(l.name, out)], Some(function))
}

fn invert_cmd(file: &FsPath, wanted: Option<&str>, target: &str, output: &FsPath) -> Outcome {
    let l = load(file, wanted)?;
    let (tag, formula) = target
        .trim()
        .split_once(char::is_whitespace)
        .ok_or_else(|| fail(1, "--target expects a rule tag followed by a formula"))?;
    let tag: RuleTag = tag.parse().map_err(|e: lkh::calculus::UnknownTag| fail(1, format!("--target: {e}")))?;
    let formula = parse_formula(formula, &l.doc.signature).map_err(|e| fail(1, format!("--target:{e}")))?;
    let outs = invert(&l.proof, &InversionTarget::new(tag, formula)).map_err(|e| fail(1, e.to_string()))?;
    let named = if outs.len() == 1 {
        vec![(l.name.clone(), outs.into_iter().next().expect("one output"))]
    } else {
        outs.into_iter().enumerate().map(|(i, p)| (format!("{}_{}", l.name, i + 1), p)).collect()
    };
    store(output, &l.doc, named, None)
}

fn weaken_cmd(file: &FsPath, wanted: Option<&str>, left: &[String], right: &[String], output: &FsPath) -> Outcome {
    let l = load(file, wanted)?;
    let mut target = l.proof.conclusion.clone();
    for (side, texts, flag) in [(Side::Left, left, "--add-left"), (Side::Right, right, "--add-right")] {
        for t in texts {
            let f = parse_formula(t, &l.doc.signature).map_err(|e| fail(1, format!("{flag}:{e}")))?;
            if !f.is_closed() {
                return Err(fail(1, format!("{flag}: `{f}` is not closed")));
            }
            target = target.with(side, f);
        }
    }
    let out = weaken(&l.proof, &target).map_err(|e| fail(1, e.to_string()))?;
    store(output, &l.doc, vec![(l.name, out)], None)
}

fn replace_cmd(file: &FsPath, wanted: Option<&str>, from: &str, to: &str, output: &FsPath) -> Outcome {
    let l = load(file, wanted)?;
    let r = parse_term(from, &l.doc.signature).map_err(|e| fail(1, format!("--from:{e}")))?;
    let s = parse_term(to, &l.doc.signature).map_err(|e| fail(1, format!("--to:{e}")))?;
    for (flag, t) in [("--from", &r), ("--to", &s)] {
        if !t.is_closed() {
            return Err(fail(1, format!("{flag}: `{t}` is not closed")));
        }
    }
    let out = replace_in_proof(&l.proof, &r, &s).map_err(|e| match e {
        TransformError::NonInvariantNode { path } => fail(
            4,
            format!("{}: node {path:?} is not invariant under {{{r}/{s}}}", l.provenance.locate(&path)),
        ),
        other => fail(1, other.to_string()),
    })?;
    store(output, &l.doc, vec![(l.name, out)], None)
}

fn subformula_check(file: &FsPath, wanted: Option<&str>) -> Outcome {
    let l = load(file, wanted)?;
    match subformula_property(&l.proof) {
        Ok(()) => {
            println!("{}: every formula is a subformula of the endsequent", l.name);
            Ok(())
        }
        Err(v) => {
            let note = if l.proof.is_cut_free() { "" } else { " (the proof has cuts)" };
            Err(fail(
                1,
                format!("{}: `{}` is not a subformula of the endsequent{note}", l.provenance.locate(&v.path), v.formula),
            ))
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let wanted = cli.proof.as_deref();
    match cli.command {
        Command::Check { file } => check(&file, wanted),
        Command::Stats { file } => stats(&file, wanted),
        Command::Cutelim { file, output, trace } => cutelim(&file, wanted, &output, trace.as_deref()),
        Command::Deskolemize { file, function, polarity, output, report } => {
            let polarity = match polarity {
                PolarityArg::Witness => Polarity::Witness,
                PolarityArg::Counterexample => Polarity::Counterexample,
            };
            deskolemize(&file, wanted, &function, polarity, &output, report)
        }
        Command::Invert { file, target, output } => invert_cmd(&file, wanted, &target, &output),
        Command::Weaken { file, add_left, add_right, output } => {
            weaken_cmd(&file, wanted, &add_left, &add_right, &output)
        }
        Command::Replace { file, from, to, output } => replace_cmd(&file, wanted, &from, &to, &output),
        Command::SubformulaCheck { file } => subformula_check(&file, wanted),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
