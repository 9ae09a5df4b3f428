use cicdec::adder::{critical_path_depth, AdderKind};
use cicdec::verify::{adder_suite, cic_suite, pipeline_suite, Fault, SuiteReport};

use crate::args::{AdderVerifyArgs, SuiteChoice, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

const MAX_EXHAUSTIVE_WIDTH: usize = 12;
const RANDOM_WIDTHS: [usize; 5] = [16, 18, 20, 22, 25];

fn check_width(width: usize, exhaustive: bool) -> CliResult<()> {
    if !(1..=64).contains(&width) {
        return Err(CliError::Usage(format!("adder width {width} outside 1..=64")));
    }
    if exhaustive && width > MAX_EXHAUSTIVE_WIDTH {
        return Err(CliError::Usage(format!(
            "exhaustive sweeps stop at {MAX_EXHAUSTIVE_WIDTH} bits, asked for {width}"
        )));
    }
    Ok(())
}

pub fn run(a: &VerifyArgs, run: &mut Run) -> CliResult<()> {
    if a.suite == SuiteChoice::Adder {
        check_width(a.width, a.exhaustive)?;
    }
    if run.dry_run() {
        return Ok(());
    }
    let fault = Fault::from(a.inject_fault);
    let mut reports = Vec::new();
    if matches!(a.suite, SuiteChoice::All) {
        reports.push(adder_suite(8, true, 0, a.seed, fault)?);
        for w in RANDOM_WIDTHS {
            reports.push(adder_suite(w, false, a.cases, a.seed, fault)?);
        }
    }
    if a.suite == SuiteChoice::Adder {
        reports.push(adder_suite(a.width, a.exhaustive, a.cases, a.seed, fault)?);
    }
    if matches!(a.suite, SuiteChoice::All | SuiteChoice::Cic) {
        reports.push(cic_suite(a.len, a.seed, fault)?);
    }
    if matches!(a.suite, SuiteChoice::All | SuiteChoice::Pipeline) {
        reports.push(pipeline_suite(a.len, a.seed, fault)?);
    }
    finish(run, "verify", &reports)
}

fn finish(run: &mut Run, stem: &str, reports: &[SuiteReport]) -> CliResult<()> {
    let mut csv = String::from("suite,cases,mismatches,passed,elapsed_s\n");
    for r in reports {
        csv.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            r.suite, r.cases, r.mismatches, r.passed, r.elapsed_s
        ));
    }
    print!("{csv}");
    run.write(&format!("{stem}.csv"), csv.as_bytes())?;
    let json = serde_json::to_vec_pretty(reports).expect("reports serialize");
    run.write(&format!("{stem}.json"), &json)?;
    let failed: Vec<&SuiteReport> = reports.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        eprintln!("FAILED {}: {} of {} cases", r.suite, r.mismatches, r.cases);
        for f in &r.failures {
            eprintln!("  {f}");
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(format!(
            "{} of {} suites failed",
            failed.len(),
            reports.len()
        )))
    }
}

pub fn run_adder(a: &AdderVerifyArgs, run: &mut Run) -> CliResult<()> {
    for &w in &a.width {
        check_width(w, false)?;
    }
    if run.dry_run() {
        return Ok(());
    }
    let fault = Fault::from(a.inject_fault);
    let reports = a
        .width
        .iter()
        .map(|&w| adder_suite(w, a.exhaustive && w <= MAX_EXHAUSTIVE_WIDTH, a.cases, a.seed, fault))
        .collect::<cicdec::Result<Vec<_>>>()?;
    let mut depth = String::from("kind,width,gate_depth\n");
    for kind in AdderKind::ALL {
        for &w in &a.width {
            depth.push_str(&format!("{},{w},{}\n", kind.name(), critical_path_depth(kind, w)?));
        }
    }
    print!("{depth}");
    run.write("adder_depth.csv", depth.as_bytes())?;
    finish(run, "adder_equivalence", &reports)
}
