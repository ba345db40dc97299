use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use record_core::bits::{format_bits, parse_bits};
use record_core::cost::{cost_report, CostModel};
use record_core::demo::{run_demo, ImageDemoConfig, Variant};
use record_core::ftrecord::{ft_simulate, transform_ft, FaultPlan, FtDesign, FtStatus, MISCOMPARE};
use record_core::netlist::{fixtures, parse_netlist, write_netlist, Netlist};
use record_core::pgm::{read_pgm, write_pgm};
use record_core::recordize::{partition_check, transform, Grouping, PartitionedDesign, RecordConfig};
use record_core::sim::{simulate, simulate_netlist, verify_equivalence, CheckMode, RngSpec, Stimulus, Verdict};
use record_core::trojan::{
    exhaustive_fire_rate, input_pairs_of, leak_report_isolated, trigger_experiment, Isolation,
    TriggerSpec,
};

#[derive(Parser)]
#[command(name = "record", version, about = "Randomized-encoding netlist toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark netlist (aes-sbox, maj9, adder4, inverter, and-tree-<n>).
    Fixture {
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Parse and validate a netlist; transformed designs also get a closure check.
    Check { netlist: PathBuf },
    /// Evaluate a netlist on one input vector (first input first).
    Eval { netlist: PathBuf, bits: String },
    /// Apply the randomized-encoding transform.
    Recordize(RecordizeArgs),
    /// Check a transformed design against its source netlist.
    Verify {
        original: PathBuf,
        design: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate a netlist or design over a stimulus.
    Simulate {
        netlist: PathBuf,
        #[command(flatten)]
        stim: StimArgs,
        /// Write the full trace as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure what an untrusted-zone Trojan learns.
    Attack {
        design: PathBuf,
        #[command(flatten)]
        stim: StimArgs,
        /// Wire pairs to score: same, cross or all randomized input pairs.
        #[arg(long, value_enum, default_value_t = PairSel::All)]
        pairs: PairSel,
        /// Restrict the Trojan to one replica.
        #[arg(long)]
        replica: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Firing rate of a trigger watching replica 0's inputs.
    Trigger {
        design: PathBuf,
        /// Pattern over the watched wires.
        #[arg(long)]
        pattern: String,
        /// Watched replica-0 input wires (default: the whole bus).
        #[arg(long, value_delimiter = ',')]
        watch: Option<Vec<String>>,
        /// Source input vector held every cycle (default: the pattern).
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the fault-tolerant protocol with injected transient faults.
    FtSim {
        /// Source netlist, or a fault-tolerant design written by `recordize --ft`.
        netlist: PathBuf,
        /// Fault plan JSON: [{cycle, replica, wire, value}].
        #[arg(long)]
        faults: Option<PathBuf>,
        #[command(flatten)]
        stim: StimArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Area, depth and switching proxies of a design against its source.
    Cost {
        original: PathBuf,
        design: PathBuf,
        #[command(flatten)]
        stim: StimArgs,
        /// Cost model JSON; entries override the defaults.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Denoise an image with the majority filter and render what leaks.
    DemoImage {
        /// Clean input PGM (default: built-in 64x64 two-rectangle scene).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = VariantArg::Record1)]
        variant: VariantArg,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 128)]
        threshold: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for original/enhanced/leaked PGM files.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RecordizeArgs {
    netlist: PathBuf,
    #[arg(long, default_value_t = 1)]
    rand_bits: usize,
    /// `all` or a comma-separated list of inputs.
    #[arg(long, default_value = "all")]
    subset: String,
    /// `checkerboard` or `explicit:<file.json>` mapping input to group.
    #[arg(long, default_value = "checkerboard")]
    grouping: String,
    /// Build the fault-tolerant variant (one random bit only).
    #[arg(long)]
    ft: bool,
    /// Also write the transform configuration as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StimArgs {
    /// Stimulus file, one binary vector per line.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    /// Uniform random cycles when no stimulus file is given.
    #[arg(long, default_value_t = 10_000)]
    cycles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl StimArgs {
    /// Random stimulus uses the seed; the circuit's random bits use the
    /// seed plus one, so the two streams differ.
    fn load(&self) -> Result<(Stimulus, RngSpec)> {
        let stim = match &self.stimulus {
            Some(p) => Stimulus::parse(&read_text(p)?).map_err(fail)?,
            None => Stimulus::random(self.cycles, self.seed),
        };
        Ok((stim, RngSpec::new(self.seed.wrapping_add(1))))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PairSel {
    Same,
    Cross,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Record1,
    Record2,
    All,
}

/// Validation and verification failures exit 1; everything else that goes
/// wrong is a usage problem and exits 2.
#[derive(Debug)]
struct Failure(anyhow::Error);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Failure {}

fn fail(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(Failure(e.into()))
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write_file(p: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(p, data).with_context(|| format!("writing {}", p.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => write_file(p, text),
        None => print_stdout(text),
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load_netlist(p: &Path) -> Result<Netlist> {
    parse_netlist(&read_text(p)?).map_err(|e| fail(anyhow!("{}: {e}", p.display())))
}

fn load_design(p: &Path) -> Result<PartitionedDesign> {
    PartitionedDesign::from_netlist(load_netlist(p)?).map_err(|e| fail(anyhow!("{}: {e}", p.display())))
}

fn write_report(p: Option<&PathBuf>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    emit(p.map(PathBuf::as_path), &text)
}

fn is_design(n: &Netlist) -> bool {
    n.inputs().iter().any(|x| x == "__r1")
}

fn cmd_check(path: &Path) -> Result<()> {
    let n = load_netlist(path)?;
    println!(
        "{}: {} inputs, {} outputs, {} gates",
        n.name(),
        n.inputs().len(),
        n.outputs().len(),
        n.gates().len()
    );
    if is_design(&n) {
        let d = PartitionedDesign::from_netlist(n).map_err(fail)?;
        let report = partition_check(&d);
        for v in &report.violations {
            println!("violation: {v}");
        }
        if !report.passed() {
            return Err(fail(anyhow!("{} closure violations", report.violations.len())));
        }
        println!("partition closure: ok ({} replicas, {} random bits)", d.replica_count(), d.groups());
    }
    Ok(())
}

fn cmd_eval(path: &Path, bits: &str) -> Result<()> {
    let n = load_netlist(path)?;
    let v = parse_bits(bits).ok_or_else(|| anyhow!("`{bits}` is not a binary string"))?;
    let out = n.evaluate_bits(&v).map_err(|e| anyhow!(e))?;
    for (o, b) in n.outputs().iter().zip(&out) {
        println!("{o} = {}", *b as u8);
    }
    Ok(())
}

fn cmd_recordize(a: &RecordizeArgs) -> Result<()> {
    let n = load_netlist(&a.netlist)?;
    let subset: Option<Vec<String>> = match a.subset.as_str() {
        "all" => None,
        s => Some(s.split(',').map(|x| x.trim().to_string()).collect()),
    };
    let grouping = match a.grouping.split_once(':') {
        None if a.grouping == "checkerboard" => Grouping::Checkerboard,
        Some(("explicit", file)) => {
            let map: BTreeMap<String, usize> = serde_json::from_str(&read_text(Path::new(file))?)
                .with_context(|| format!("parsing group map {file}"))?;
            Grouping::Explicit(map)
        }
        _ => bail!("--grouping must be `checkerboard` or `explicit:<file>`"),
    };
    let cfg = RecordConfig::for_netlist(&n, subset.as_deref(), a.rand_bits, &grouping).map_err(fail)?;
    if cfg.is_extended() {
        eprintln!("note: more than two random bits is an extension beyond the published constructions");
    }
    let text = if a.ft {
        transform_ft(&n, &cfg).map_err(fail)?.to_text()
    } else {
        transform(&n, &cfg).map_err(fail)?.to_text()
    };
    if let Some(p) = &a.config {
        write_file(p, cfg.to_json() + "\n")?;
    }
    emit(a.output.as_deref(), &text)
}

fn cmd_verify(original: &Path, design: &Path, mode: Mode, samples: usize, seed: u64) -> Result<()> {
    let n = load_netlist(original)?;
    let d = load_design(design)?;
    let mode = match mode {
        Mode::Exhaustive => CheckMode::Exhaustive,
        Mode::Sampled => CheckMode::Sampled { samples, seed },
    };
    match verify_equivalence(&n, &d, mode).map_err(fail)? {
        Verdict::Pass { cases } => {
            println!("equivalent: {cases} cases checked");
            Ok(())
        }
        Verdict::Fail(c) => {
            println!("counterexample: {c}");
            Err(fail(anyhow!("design is not equivalent to {}", original.display())))
        }
    }
}

fn cmd_simulate(path: &Path, stim: &StimArgs, csv: Option<&PathBuf>, report: Option<&PathBuf>) -> Result<()> {
    let n = load_netlist(path)?;
    let (s, rng) = stim.load()?;
    let (trace, outputs) = if is_design(&n) {
        let d = PartitionedDesign::from_netlist(n).map_err(fail)?;
        let t = simulate(&d, &s, rng).map_err(fail)?;
        (t, d.netlist().outputs().to_vec())
    } else {
        let t = simulate_netlist(&n, &s).map_err(fail)?;
        (t, n.outputs().to_vec())
    };
    if let Some(p) = csv {
        let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        trace.write_csv(std::io::BufWriter::new(f))?;
    }
    write_report(report, &serde_json::to_value(trace.summary(&outputs))?)
}

fn cmd_attack(
    path: &Path,
    stim: &StimArgs,
    sel: PairSel,
    replica: Option<usize>,
    report: Option<&PathBuf>,
) -> Result<()> {
    let d = load_design(path)?;
    let (s, rng) = stim.load()?;
    let t = simulate(&d, &s, rng).map_err(fail)?;
    let k = replica.unwrap_or(0);
    if k >= d.replica_count() {
        bail!("design has {} replicas, no replica {k}", d.replica_count());
    }
    let mut pairs = Vec::new();
    if sel != PairSel::Cross {
        pairs.extend(input_pairs_of(&d, k, true));
    }
    if sel != PairSel::Same {
        pairs.extend(input_pairs_of(&d, k, false));
    }
    let iso = replica.map_or(Isolation::All, Isolation::Replica);
    let r = leak_report_isolated(&d, &t, &pairs, iso).map_err(fail)?;
    write_report(report, &serde_json::to_value(&r)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_trigger(
    path: &Path,
    pattern: &str,
    watch: Option<&[String]>,
    x: Option<&str>,
    cycles: usize,
    seed: u64,
    report: Option<&PathBuf>,
) -> Result<()> {
    let d = load_design(path)?;
    let pat = parse_bits(pattern).ok_or_else(|| anyhow!("--pattern must be binary"))?;
    let trig = match watch {
        Some(w) => TriggerSpec::new(w.to_vec(), pat.clone()),
        None => TriggerSpec::full_bus(&d, pat.clone()),
    }
    .map_err(fail)?;
    let xv = match x {
        Some(s) => parse_bits(s).ok_or_else(|| anyhow!("--x must be binary"))?,
        None if pat.len() == d.source_inputs().len() => pat.clone(),
        None => bail!("--x is required when the pattern does not cover every input"),
    };
    let stats = trigger_experiment(&d, &trig, &Stimulus::constant(xv.clone(), cycles), RngSpec::new(seed))
        .map_err(fail)?;
    let exhaustive = exhaustive_fire_rate(&d, &trig, &xv).map_err(fail)?;
    write_report(
        report,
        &json!({
            "x": format_bits(&xv),
            "pattern": pattern,
            "cycles": stats.cycles,
            "fires": stats.fires,
            "rate": stats.rate,
            "analytic_rate": stats.analytic_rate,
            "exhaustive_rate": exhaustive,
            "sigma": stats.sigma(),
            "within_3_sigma": stats.within_sigmas(3.0),
        }),
    )
}

fn cmd_ft_sim(
    path: &Path,
    faults: Option<&PathBuf>,
    stim: &StimArgs,
    csv: Option<&PathBuf>,
    report: Option<&PathBuf>,
) -> Result<()> {
    let n = load_netlist(path)?;
    let d = if n.outputs().iter().any(|o| o == MISCOMPARE) {
        FtDesign::from_design(PartitionedDesign::from_netlist(n).map_err(fail)?).map_err(fail)?
    } else {
        transform_ft(&n, &RecordConfig::single(&n)).map_err(fail)?
    };
    let plan = match faults {
        Some(p) => FaultPlan::from_json(&read_text(p)?).map_err(fail)?,
        None => FaultPlan::none(),
    };
    let (s, rng) = stim.load()?;
    let t = ft_simulate(&d, &s, rng, &plan).map_err(fail)?;
    // Fault-free reference: the decoded outputs, which equal f(x) every cycle.
    let reference = simulate(d.design(), &s, rng).map_err(fail)?;
    let expected: Vec<_> = d
        .design()
        .decoded_outputs()
        .iter()
        .map(|z| reference.column(z).expect("decoded output").clone())
        .collect();
    let matches = t.committed_stream() == expected;
    if let Some(p) = csv {
        let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        t.write_csv(std::io::BufWriter::new(f))?;
    }
    write_report(
        report,
        &json!({
            "cycles": t.cycles(),
            "steps": t.steps.len(),
            "flagged_cycles": t.flagged_cycles(),
            "replays": t.replays(),
            "status": t.status.to_string(),
            "committed_matches_reference": matches,
        }),
    )?;
    if let FtStatus::PermanentFaultSuspected { at_cycle } = t.status {
        eprintln!("warning: permanent fault suspected at cycle {at_cycle}");
    }
    if !matches {
        return Err(fail(anyhow!("committed stream differs from the fault-free reference")));
    }
    Ok(())
}

fn cmd_cost(
    original: &Path,
    design: &Path,
    stim: &StimArgs,
    model: Option<&PathBuf>,
    report: Option<&PathBuf>,
) -> Result<()> {
    let n = load_netlist(original)?;
    let d = load_design(design)?;
    let m = match model {
        Some(p) => CostModel::from_json(&read_text(p)?).map_err(fail)?,
        None => CostModel::default(),
    };
    let (s, rng) = stim.load()?;
    let to = simulate_netlist(&n, &s).map_err(fail)?;
    let td = simulate(&d, &s, rng).map_err(fail)?;
    let r = cost_report(&n, &d, &to, &td, &m).map_err(fail)?;
    write_report(report, &serde_json::to_value(&r)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo(
    input: Option<&PathBuf>,
    variant: VariantArg,
    noise: f64,
    threshold: u8,
    seed: u64,
    out_dir: &Path,
    report: Option<&PathBuf>,
) -> Result<()> {
    let image = match input {
        Some(p) => {
            let data = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Some(read_pgm(&data).map_err(|e| fail(anyhow!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    if !(0.0..1.0).contains(&noise) {
        bail!("--noise must be in [0, 1)");
    }
    let variants = match variant {
        VariantArg::Plain => vec![Variant::Plain],
        VariantArg::Record1 => vec![Variant::Record1],
        VariantArg::Record2 => vec![Variant::Record2],
        VariantArg::All => vec![Variant::Plain, Variant::Record1, Variant::Record2],
    };
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut results = Vec::new();
    let mut ok = true;
    for v in variants {
        let cfg = ImageDemoConfig {
            input: image.clone(),
            threshold,
            variant: v,
            noise,
            seed,
            with_report: report.is_some(),
        };
        let r = run_demo(&cfg).map_err(fail)?;
        write_file(&out_dir.join(format!("{v}_original.pgm")), write_pgm(&r.original))?;
        write_file(&out_dir.join(format!("{v}_enhanced.pgm")), write_pgm(&r.enhanced))?;
        write_file(&out_dir.join(format!("{v}_leaked.pgm")), write_pgm(&r.leaked))?;
        eprintln!(
            "{v}: structural score {:.3}, edge F1 {:.3}, enhanced matches oracle: {}",
            r.structural_score, r.edge_f1, r.oracle_match
        );
        ok &= r.oracle_match;
        results.push(r);
    }
    if let Some(p) = report {
        write_report(Some(p), &serde_json::to_value(&results)?)?;
    }
    if !ok {
        return Err(fail(anyhow!("enhanced image differs from the median-filter oracle")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fixture { name, output } => {
            let n = fixtures::fixture(&name)?;
            emit(output.as_deref(), &write_netlist(&n))
        }
        Command::Check { netlist } => cmd_check(&netlist),
        Command::Eval { netlist, bits } => cmd_eval(&netlist, &bits),
        Command::Recordize(a) => cmd_recordize(&a),
        Command::Verify {
            original,
            design,
            mode,
            samples,
            seed,
        } => cmd_verify(&original, &design, mode, samples, seed),
        Command::Simulate {
            netlist,
            stim,
            csv,
            report,
        } => cmd_simulate(&netlist, &stim, csv.as_ref(), report.as_ref()),
        Command::Attack {
            design,
            stim,
            pairs,
            replica,
            report,
        } => cmd_attack(&design, &stim, pairs, replica, report.as_ref()),
        Command::Trigger {
            design,
            pattern,
            watch,
            x,
            cycles,
            seed,
            report,
        } => cmd_trigger(&design, &pattern, watch.as_deref(), x.as_deref(), cycles, seed, report.as_ref()),
        Command::FtSim {
            netlist,
            faults,
            stim,
            csv,
            report,
        } => cmd_ft_sim(&netlist, faults.as_ref(), &stim, csv.as_ref(), report.as_ref()),
        Command::Cost {
            original,
            design,
            stim,
            model,
            report,
        } => cmd_cost(&original, &design, &stim, model.as_ref(), report.as_ref()),
        Command::DemoImage {
            input,
            variant,
            noise,
            threshold,
            seed,
            output,
            report,
        } => cmd_demo(input.as_ref(), variant, noise, threshold, seed, &output, report.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Failure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
