//! Command-line front end. Every operation is exposed as a subcommand with
//! table, JSON, and CSV output; exit codes separate argument problems (2),
//! violated hypotheses (3), and failed verifications (4) so scripted runs
//! can tell bugs from falsifications.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{self, BoundReport};
use crate::error::{Error, Result};
use crate::exactmath;
use crate::expr;
use crate::family;
use crate::localdens;
use crate::qform::QuadForm;
use crate::theta::{self, ThetaBlock};

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "quatform",
    version,
    about = "Representation numbers, theta decompositions, local densities, and explicit bounds for quaternary quadratic forms"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,

    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Cap the worker thread count (falls back to QUATFORM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Waive proof-range hypotheses such as p >= 101.
    #[arg(long, global = true)]
    force: bool,

    /// Family form parameter p (prime, 5 mod 8).
    #[arg(long, global = true)]
    family_p: Option<u64>,

    /// Inline Gram matrix: JSON array of 16 integers, row-major.
    #[arg(long, global = true)]
    gram_json: Option<String>,

    /// Inline Gram matrix: 10 comma-separated upper-triangle integers.
    #[arg(long, global = true)]
    gram_csv: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coefficient table r(n), a_E(n), a_C(n) up to a cutoff.
    Theta {
        #[arg(long)]
        n_max: u64,
    },
    /// Eisenstein coefficients (or the dual series with --dual).
    Eisenstein {
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        dual: bool,
    },
    /// Exact local density at one prime, with type counts.
    LocalDensity {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
    },
    /// Truncated Siegel product against the exact Eisenstein coefficient.
    SiegelCheck {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 500)]
        cutoff: u64,
        /// Relative tolerance for the verification verdict.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Full bound report plus the inequality table.
    Bounds {
        /// Petersson truncation (defaults to 50p).
        #[arg(long)]
        n_trunc: Option<u64>,
    },
    /// Interval enclosure of the cusp norm against its upper bound.
    Petersson {
        #[arg(long)]
        n_trunc: Option<u64>,
    },
    /// Explicit N0 with every n >= N0 represented.
    Threshold,
    /// Excepted values up to a cutoff and their sum.
    Exceptions {
        #[arg(long)]
        n_max: u64,
    },
    /// Family classification check: computed vs predicted exceptions.
    FamilyVerify {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n_max: u64,
    },
    /// Record divisor count M(X) with its witness.
    MaxTau {
        #[arg(long)]
        limit: Option<u64>,
        /// Exact-rational expression, e.g. "25.09*101^(35/6)".
        #[arg(long)]
        limit_expr: Option<String>,
    },
    /// psi and its lattice sum on a grid.
    PsiTable {
        #[arg(long, default_value_t = 0.05)]
        x_min: f64,
        #[arg(long, default_value_t = 5.0)]
        x_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: u32,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
}

/// Runs the CLI against `argv` (excluding the program name is fine; include
/// it and it is skipped by clap). Output goes to `out` unless --output
/// redirects it to a file. Returns the process exit code.
pub fn run<W: Write>(argv: &[String], out: &mut W) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(out, "{e}");
            return 2;
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var("QUATFORM_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(&cli) {
        Ok((text, verified)) => {
            let failed = verified == Some(false);
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::write(path, &text) {
                    let _ = writeln!(out, "error: cannot write {}: {e}", path.display());
                    return 2;
                }
            } else {
                let _ = write!(out, "{text}");
            }
            if failed {
                4
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn form_from(cli: &Cli) -> Result<QuadForm> {
    let sources = [cli.family_p.is_some(), cli.gram_json.is_some(), cli.gram_csv.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::Argument(
            "exactly one form source required: --family-p, --gram-json, or --gram-csv".into(),
        ));
    }
    if let Some(p) = cli.family_p {
        return Ok(family::family_form(p)?.form);
    }
    if let Some(j) = &cli.gram_json {
        return QuadForm::from_json(j);
    }
    QuadForm::from_upper_csv(cli.gram_csv.as_ref().unwrap())
}

/// Produces (rendered output, verification verdict). A verdict of
/// Some(false) means a checked inequality failed and the exit code is 4.
fn dispatch(cli: &Cli) -> Result<(String, Option<bool>)> {
    match &cli.cmd {
        Cmd::Theta { n_max } => {
            check_positive(*n_max, "--n-max")?;
            let q = form_from(cli)?;
            let block = ThetaBlock::compute(&q, *n_max)?;
            let text = match cli.format {
                Format::Csv => block.to_csv(),
                Format::Json => {
                    let rows: Vec<_> = (0..=block.n_max as usize)
                        .map(|n| {
                            let (en, ed) = crate::report::rational_fields(&block.a_e[n]);
                            let (cn, cd) = crate::report::rational_fields(&block.a_c[n]);
                            json!({
                                "n": n,
                                "r": block.r[n],
                                "aE_num": en, "aE_den": ed,
                                "aC_num": cn, "aC_den": cd,
                            })
                        })
                        .collect();
                    pretty(&json!({"kind": "theta", "disc": q.disc().to_string(), "rows": rows}))
                }
                Format::Table => {
                    let mut s = format!("theta coefficients, disc = {}\n", q.disc());
                    s.push_str(&format!("{:>6} {:>10} {:>18} {:>18}\n", "n", "r", "aE", "aC"));
                    for n in 0..=block.n_max as usize {
                        s.push_str(&format!(
                            "{:>6} {:>10} {:>18} {:>18}\n",
                            n,
                            block.r[n],
                            block.a_e[n],
                            block.a_c[n]
                        ));
                    }
                    s
                }
            };
            Ok((text, None))
        }
        Cmd::Eisenstein { n_max, dual } => {
            check_positive(*n_max, "--n-max")?;
            let q = form_from(cli)?;
            let coeffs = if *dual {
                theta::eisenstein_dual_coeffs(&q, *n_max)?
            } else {
                theta::eisenstein_coeffs(&q, *n_max)?
            };
            let kind = if *dual { "eisenstein_dual" } else { "eisenstein" };
            let text = match cli.format {
                Format::Csv => {
                    let mut s = String::from("n,num,den\n");
                    for (n, c) in coeffs.iter().enumerate() {
                        s.push_str(&format!("{n},{},{}\n", c.numer(), c.denom()));
                    }
                    s
                }
                Format::Json => {
                    let rows: Vec<_> = coeffs
                        .iter()
                        .enumerate()
                        .map(|(n, c)| json!({"n": n, "num": c.numer().to_string(), "den": c.denom().to_string()}))
                        .collect();
                    pretty(&json!({"kind": kind, "rows": rows}))
                }
                Format::Table => {
                    let mut s = format!("{kind} coefficients\n");
                    for (n, c) in coeffs.iter().enumerate() {
                        s.push_str(&format!("{n:>6} {c}\n"));
                    }
                    s
                }
            };
            Ok((text, None))
        }
        Cmd::LocalDensity { q: prime, n } => {
            check_positive(*n, "--n")?;
            let q = form_from(cli)?;
            let dens = localdens::local_density(&q, *prime, *n)?;
            let types = if *prime == 2 {
                localdens::count_types(&q, 2, dens.stabilized_at, *n)
            } else {
                localdens::count_types(&q, *prime, dens.stabilized_at.min(2), *n)
            };
            let (good, zero, bad, v) = match &types {
                Ok(t) => (t.good.to_string(), t.zero.to_string(), t.bad.to_string(), t.v),
                Err(_) => ("-".into(), "-".into(), "-".into(), dens.stabilized_at),
            };
            let row = crate::report::LocalDensityJson {
                q: dens.q,
                n: dens.n,
                v,
                good,
                zero,
                bad,
                beta_num: dens.beta.numer().to_string(),
                beta_den: dens.beta.denom().to_string(),
            };
            let text = match cli.format {
                Format::Json => pretty(&serde_json::to_value(&row).unwrap()),
                Format::Csv => format!(
                    "q,n,v,good,zero,bad,beta_num,beta_den\n{},{},{},{},{},{},{},{}\n",
                    row.q, row.n, row.v, row.good, row.zero, row.bad, row.beta_num, row.beta_den
                ),
                Format::Table => format!(
                    "beta_{}({}) = {} (stabilized at v = {})\ntype counts at v = {}: good {}, zero {}, bad {}\n",
                    row.q, row.n, dens.beta, dens.stabilized_at, row.v, row.good, row.zero, row.bad
                ),
            };
            Ok((text, None))
        }
        Cmd::SiegelCheck { n, cutoff, tolerance } => {
            check_positive(*n, "--n")?;
            let q = form_from(cli)?;
            let rep = localdens::siegel_product_check(&q, *n, *cutoff)?;
            let ok = rep.relative_error <= *tolerance;
            let text = match cli.format {
                Format::Json => pretty(&json!({
                    "kind": "siegel_check",
                    "p": rep.p, "n": rep.n, "cutoff": rep.cutoff,
                    "product": rep.product, "a_e": rep.a_e,
                    "tail_estimate": rep.tail_estimate,
                    "deviation": rep.deviation,
                    "relative_error": rep.relative_error,
                    "tolerance": tolerance,
                    "holds": ok,
                })),
                _ => format!(
                    "Siegel product, p = {}, n = {}, cutoff = {}\n\
                     product    = {:.12}\n\
                     a_E(n)     = {:.12}\n\
                     tail est.  = {:.12}\n\
                     deviation  = {:.3e}\n\
                     rel. error = {:.3e} (tolerance {:.1e}) -> {}\n",
                    rep.p,
                    rep.n,
                    rep.cutoff,
                    rep.product,
                    rep.a_e,
                    rep.tail_estimate,
                    rep.deviation,
                    rep.relative_error,
                    tolerance,
                    verdict(ok)
                ),
            };
            Ok((text, Some(ok)))
        }
        Cmd::Bounds { n_trunc } => {
            let q = form_from(cli)?;
            let p = q.prime_disc()?;
            let n_trunc = n_trunc.unwrap_or(50 * p);
            let report = BoundReport::compute(&q, cli.force)?;
            let rows = bounds::lemma_table(&q, n_trunc, cli.force)?;
            let all = rows.iter().all(|r| r.holds);
            let text = match cli.format {
                Format::Json => pretty(&json!({
                    "kind": "bounds",
                    "report": serde_json::to_value(&report).unwrap(),
                    "rows": serde_json::to_value(&rows).unwrap(),
                    "all_hold": all,
                })),
                _ => {
                    let mut s = format!(
                        "bound report, p = {}\n  min Q* = {}\n  M(25.09 p^(35/6)) = {}\n  A (norm bound) = {:.6}\n  B (newform floor) = {:.6e}\n  s (cusp dim) = {}\n  C_Q bound = {:.6}\n\ninequalities (n_trunc = {n_trunc}):\n",
                        report.p, report.min_q_star, report.m_value, report.a, report.b, report.s, report.c_q_bound
                    );
                    s.push_str(&format!(
                        "{:<38} {:>14} {:>14} {:>12} {:>6}\n",
                        "name", "lhs", "rhs", "margin", "holds"
                    ));
                    for r in &rows {
                        s.push_str(&format!(
                            "{:<38} {:>14.6e} {:>14.6e} {:>12.3e} {:>6}\n",
                            r.name, r.lhs, r.rhs, r.margin, r.holds
                        ));
                    }
                    s.push_str(&format!("verdict: {}\n", verdict(all)));
                    s
                }
            };
            Ok((text, Some(all)))
        }
        Cmd::Petersson { n_trunc } => {
            let q = form_from(cli)?;
            let p = q.prime_disc()?;
            let n_trunc = n_trunc.unwrap_or(50 * p);
            let est = bounds::petersson_norm_estimate(&q, n_trunc)?;
            let report = BoundReport::compute(&q, cli.force)?;
            let bound = report.petersson_norm_bound();
            let ok = est.hi <= bound;
            let text = match cli.format {
                Format::Json => pretty(&json!({
                    "kind": "petersson",
                    "p": p, "n_trunc": n_trunc,
                    "lo": est.lo, "hi": est.hi,
                    "bound": bound, "holds": ok,
                })),
                _ => format!(
                    "Petersson norm of the cusp part, p = {p}, truncation {n_trunc}\n\
                     <C,C> in [{:.6e}, {:.6e}]\n\
                     upper bound {:.6e} -> {}\n",
                    est.lo,
                    est.hi,
                    bound,
                    verdict(ok)
                ),
            };
            Ok((text, Some(ok)))
        }
        Cmd::Threshold => {
            let q = form_from(cli)?;
            let report = BoundReport::compute(&q, cli.force)?;
            let th = bounds::sufficient_threshold(&report)?;
            let text = match cli.format {
                Format::Json => pretty(&serde_json::to_value(&th).unwrap()),
                _ => format!(
                    "representation threshold, p = {}\n  analytic N0 = {}\n  refined  N0 = {}\n",
                    th.p, th.analytic, th.refined
                ),
            };
            Ok((text, None))
        }
        Cmd::Exceptions { n_max } => {
            check_positive(*n_max, "--n-max")?;
            let q = form_from(cli)?;
            let rep = bounds::exceptions_sum_report(&q, *n_max)?;
            let text = match cli.format {
                Format::Json => pretty(&serde_json::to_value(&rep).unwrap()),
                _ => format!(
                    "excepted values up to {}\n  excepted = {:?}\n  sum = {}\n  p^(5/2) = {:.4e}\n  p^3/(min Q*)^2 = {:.4e}\n",
                    rep.n_max, rep.excepted, rep.sum, rep.p_pow_5_2, rep.p_cubed_over_min_sq
                ),
            };
            Ok((text, None))
        }
        Cmd::FamilyVerify { p, n_max } => {
            check_positive(*n_max, "--n-max")?;
            let set = family::verify_family(*p, *n_max)?;
            let ok = set.matches;
            let text = match cli.format {
                Format::Json => pretty(&serde_json::to_value(&set).unwrap()),
                _ => format!(
                    "family verification, p = {}, n <= {}\n  p/8 = {:.3}\n  predicted = {:?}\n  computed  = {:?}\n  verdict: {}\n",
                    set.p,
                    set.n_max,
                    *p as f64 / 8.0,
                    set.predicted,
                    set.computed,
                    verdict(ok)
                ),
            };
            Ok((text, Some(ok)))
        }
        Cmd::MaxTau { limit, limit_expr } => {
            let x = match (limit, limit_expr) {
                (Some(l), None) => exactmath::WideInt::from(*l),
                (None, Some(e)) => expr::eval_floor(e)?,
                _ => {
                    return Err(Error::Argument(
                        "provide exactly one of --limit or --limit-expr".into(),
                    ))
                }
            };
            let (m, witness) = exactmath::max_tau(&x)?;
            let text = match cli.format {
                Format::Json => pretty(&json!({
                    "kind": "max_tau",
                    "limit": x.to_string(),
                    "m": m,
                    "witness": witness.to_string(),
                })),
                _ => format!("M({x}) = {m}\nwitness = {witness}\n"),
            };
            Ok((text, None))
        }
        Cmd::PsiTable { x_min, x_max, steps, tol } => {
            if !(x_min > &0.0) || x_max < x_min || *steps == 0 {
                return Err(Error::Argument("psi-table needs 0 < x-min <= x-max and steps >= 1".into()));
            }
            let mut rows = Vec::new();
            for i in 0..*steps {
                let x = x_min + (x_max - x_min) * i as f64 / (*steps as f64 - 1.0).max(1.0);
                rows.push((x, bounds::psi(x)?, bounds::psi_sum(x, *tol)?));
            }
            let text = match cli.format {
                Format::Json => pretty(&json!({
                    "kind": "psi_table",
                    "rows": rows.iter().map(|(x, p, s)| json!({"x": x, "psi": p, "psi_sum": s})).collect::<Vec<_>>(),
                })),
                Format::Csv => {
                    let mut s = String::from("x,psi,psi_sum\n");
                    for (x, p, ps) in &rows {
                        s.push_str(&format!("{x},{p},{ps}\n"));
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("{:>12} {:>18} {:>18}\n", "x", "psi", "psi_sum");
                    for (x, p, ps) in &rows {
                        s.push_str(&format!("{x:>12.6} {p:>18.10e} {ps:>18.10e}\n"));
                    }
                    s
                }
            };
            Ok((text, None))
        }
    }
}

fn check_positive(v: u64, name: &str) -> Result<()> {
    if v == 0 {
        return Err(Error::Argument(format!("{name} must be positive")));
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_vec(args: &[&str]) -> (i32, String) {
        let argv: Vec<String> =
            std::iter::once("quatform".to_string()).chain(args.iter().map(|s| s.to_string())).collect();
        let mut out = Vec::new();
        let code = run(&argv, &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn family_verify_json() {
        let (code, out) = run_vec(&["family-verify", "--p", "229", "--n-max", "1000", "--format", "json"]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["computed"], serde_json::json!([14]));
        assert_eq!(v["predicted"], serde_json::json!([14]));
        assert_eq!(v["matches"], serde_json::json!(true));
    }

    #[test]
    fn max_tau_expression() {
        let (code, out) = run_vec(&["max-tau", "--limit-expr", "25.09*101^(35/6)"]);
        assert_eq!(code, 0);
        assert!(out.contains("10752"), "{out}");
        assert!(out.contains("9316358251200"), "{out}");
    }

    #[test]
    fn theta_table_has_unit_row() {
        let (code, out) = run_vec(&["theta", "--family-p", "5", "--n-max", "10"]);
        assert_eq!(code, 0);
        let has_r0 = out.lines().any(|l| {
            let mut it = l.split_whitespace();
            it.next() == Some("0") && it.next() == Some("1")
        });
        assert!(has_r0, "r(0) = 1 row missing:\n{out}");
    }

    #[test]
    fn exit_codes() {
        // unknown subcommand -> 2 with usage text
        let (code, out) = run_vec(&["no-such-command"]);
        assert_eq!(code, 2);
        assert!(out.to_lowercase().contains("usage"), "{out}");
        // hypothesis violation without --force -> 3
        let (code, _) = run_vec(&["bounds", "--family-p", "13"]);
        assert_eq!(code, 3);
        // same command with --force runs
        let (code, out) = run_vec(&["bounds", "--family-p", "13", "--force", "--n-trunc", "70"]);
        assert!(code == 0 || code == 4, "{out}");
        // missing form source -> 2
        let (code, _) = run_vec(&["theta", "--n-max", "5"]);
        assert_eq!(code, 2);
        // two form sources -> 2
        let (code, _) = run_vec(&[
            "theta",
            "--n-max",
            "5",
            "--family-p",
            "5",
            "--gram-csv",
            "2,0,0,0,2,0,0,2,0,2",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn deterministic_output() {
        for args in [
            vec!["theta", "--family-p", "13", "--n-max", "40", "--format", "csv"],
            vec!["local-density", "--family-p", "13", "--q", "3", "--n", "9", "--format", "json"],
            vec!["psi-table", "--steps", "20", "--format", "csv"],
            vec!["family-verify", "--p", "37", "--n-max", "300", "--format", "json"],
            vec!["threshold", "--family-p", "101", "--format", "json"],
            vec!["siegel-check", "--family-p", "13", "--n", "3", "--cutoff", "80", "--format", "json"],
        ] {
            let (c1, o1) = run_vec(&args);
            let (c2, o2) = run_vec(&args);
            assert_eq!(c1, c2);
            assert_eq!(o1, o2, "output not byte-identical for {args:?}");
        }
    }

    #[test]
    fn gram_sources_agree() {
        let (c1, o1) = run_vec(&["theta", "--family-p", "13", "--n-max", "10", "--format", "csv"]);
        let (c2, o2) = run_vec(&[
            "theta",
            "--gram-json",
            "[2,1,1,1,1,2,1,1,1,1,2,1,1,1,1,4]",
            "--n-max",
            "10",
            "--format",
            "csv",
        ]);
        let (c3, o3) = run_vec(&[
            "theta",
            "--gram-csv",
            "2,1,1,1,2,1,1,2,1,4",
            "--n-max",
            "10",
            "--format",
            "csv",
        ]);
        assert_eq!((c1, c2, c3), (0, 0, 0));
        assert_eq!(o1, o2);
        assert_eq!(o1, o3);
    }

    #[test]
    fn siegel_check_verdict() {
        let (code, out) = run_vec(&[
            "siegel-check",
            "--family-p",
            "5",
            "--n",
            "1",
            "--cutoff",
            "100",
            "--format",
            "json",
        ]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["holds"], serde_json::json!(true));
    }

    #[test]
    fn output_to_file() {
        let dir = std::env::temp_dir().join("quatform-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.json");
        let (code, printed) = run_vec(&[
            "max-tau",
            "--limit",
            "48",
            "--format",
            "json",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(printed.is_empty());
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.contains("\"m\": 10"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
