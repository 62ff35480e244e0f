use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use simplex_grasp::contact::{immobilizes, PenetrationMatrix};
use simplex_grasp::formats::{self, CoeffsFile, ContactSetFile, NormalFanFile, SimplexFile};
use simplex_grasp::oracle::falsify;
use simplex_grasp::synthesis::{apply_displacement, centred_contacts, centred_feasible_witness, centroid_contacts};
use simplex_grasp::{
    worked_example, ContactSet, Error, OracleConfig, OracleReport, OracleVerdict, Simplex, Tolerances, Verdict,
};

const EXIT_PARSE: u8 = 2;
const EXIT_GEOMETRY: u8 = 3;
const EXIT_DISAGREEMENT: u8 = 4;
const EXIT_INFEASIBLE: u8 = 5;
const EXIT_LEFT_FACE: u8 = 6;
const EXIT_REGRESSION: u8 = 7;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "simplex-grasp", version, about = "Decide whether n+1 contact points immobilize an n-simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,

    /// Seed for the oracle's random generators
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Relative tolerance for the symmetry test of A
    #[arg(long, global = true)]
    tol_sym: Option<f64>,

    /// Relative tolerance for the almost-positive-definite test
    #[arg(long, global = true)]
    tol_apd: Option<f64>,

    /// Radius of the rotations sampled by the oracle
    #[arg(long, global = true, default_value_t = 1e-3)]
    epsilon: f64,

    /// Number of random rotations sampled by the oracle
    #[arg(long, global = true, default_value_t = 1000)]
    n_random: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the normal fan, volume and facet volumes of a simplex
    Normals {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Decide immobilization for a simplex and a contact set
    Check {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        contacts: PathBuf,
        /// Also run the penetration oracle and require agreement
        #[arg(long)]
        oracle: bool,
    },
    /// Build an immobilizing contact set
    Synthesize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Centroid)]
        mode: Mode,
        /// Centre for `--mode centred`, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        /// Write the contact set here
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Move a contact set by a symmetry-preserving displacement
    Displace {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        contacts: PathBuf,
        #[arg(long, value_name = "FILE")]
        coeffs: PathBuf,
        /// Write the displaced contact set here
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Recompute the built-in 4-simplex that is symmetric but not immobilized
    #[command(alias = "paper-example")]
    WorkedExample {
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Centroid,
    Centred,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::BadInput(_) | Error::DimensionMismatch { .. } | Error::BadStochastic(_) => EXIT_PARSE,
            Error::NotCentredFeasible { .. } => EXIT_INFEASIBLE,
            Error::LeftFace { .. } => EXIT_LEFT_FACE,
            Error::Internal(_) | Error::NoConvergence(_) => EXIT_INTERNAL,
            _ => EXIT_GEOMETRY,
        };
        Self::new(code, e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol_sym {
        tol.sym = t;
    }
    if let Some(t) = cli.tol_apd {
        tol.apd = t;
    }
    let oracle = OracleConfig { epsilon: cli.epsilon, n_random: cli.n_random, seed: cli.seed };

    match &cli.command {
        Command::Normals { input } => cmd_normals(input, cli.json, &tol),
        Command::Check { input, contacts, oracle: with_oracle } => {
            cmd_check(input, contacts, with_oracle.then_some(&oracle), cli.json, &tol)
        }
        Command::Synthesize { input, mode, z, output } => {
            cmd_synthesize(input, *mode, z.as_deref(), output.as_deref(), cli.json, &tol)
        }
        Command::Displace { input, contacts, coeffs, output } => {
            cmd_displace(input, contacts, coeffs, output.as_deref(), cli.json, &tol)
        }
        Command::WorkedExample { oracle: with_oracle } => {
            cmd_worked_example(with_oracle.then_some(&oracle), cli.json, &tol)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    formats::from_json(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn read_simplex(path: &Path, tol: &Tolerances) -> Result<Simplex, Failure> {
    let file: SimplexFile = read_json(path)?;
    Ok(file.to_simplex(tol)?)
}

fn read_contacts(path: &Path, simplex: &Simplex, tol: &Tolerances) -> Result<ContactSet, Failure> {
    let file: ContactSetFile = read_json(path)?;
    Ok(file.to_contacts(simplex, tol)?)
}

fn write_contacts(path: &Path, contacts: &ContactSet) -> Result<(), Failure> {
    let text = formats::to_json(&ContactSetFile::from_contacts(contacts))?;
    fs::write(path, text).map_err(|e| Failure::new(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> Outcome {
    Ok(formats::to_json(value)?)
}

/// Nine significant digits, fixed notation for moderate magnitudes.
fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

fn nums(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(num).collect::<Vec<_>>().join(" ")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn verdict_line(v: &Verdict) -> String {
    if !v.symmetric {
        return "symmetric: no, immobilizes: NO".into();
    }
    let mut line = format!(
        "symmetric: yes, APD: {}, immobilizes: {}",
        yes_no(v.almost_positive_definite),
        if v.immobilizes { "YES" } else { "NO" }
    );
    if let Some(m) = v.margin {
        let _ = write!(line, ", margin {m:.3}");
    }
    line
}

fn verdict_text(v: &Verdict) -> String {
    let mut out = verdict_line(v);
    out.push('\n');
    let _ = writeln!(out, "symmetric defect: {}", num(v.symmetric_defect));
    if !v.eigenvalues.is_empty() {
        let _ = writeln!(out, "eigenvalues: {}", nums(v.eigenvalues.iter().copied()));
    }
    if !v.strict {
        out.push_str("note: a contact lies on the boundary of its facet\n");
    }
    out
}

fn oracle_text(r: &OracleReport) -> String {
    let mut out = format!("oracle: {:?} ({} rotations, worst psi {})\n", r.verdict, r.samples, num(r.worst_psi));
    if let Some(w) = &r.witness {
        let _ = writeln!(out, "witness generator: {}", nums(w.generator.iter().copied()));
        let _ = writeln!(
            out,
            "witness psi: {}, min normal displacement after equalizing: {}",
            num(w.psi),
            num(w.min_normal_displacement)
        );
    }
    if let Some(p) = r.critical_psi {
        let _ = writeln!(out, "degenerate pair: psi along the critical generator is {}", num(p));
    }
    out
}

fn agrees(v: &Verdict, r: &OracleReport) -> bool {
    match r.verdict {
        OracleVerdict::ConfirmImmobilizing => v.immobilizes,
        OracleVerdict::RefuteWithWitness => !v.immobilizes,
        OracleVerdict::Inconclusive => true,
    }
}

#[derive(Serialize)]
struct NormalsReport {
    fan: NormalFanFile,
    volume: f64,
    face_volumes: Vec<f64>,
    reoriented: bool,
}

fn cmd_normals(input: &Path, as_json: bool, tol: &Tolerances) -> Outcome {
    let s = read_simplex(input, tol)?;
    let fan = s.normal_fan();
    let report = NormalsReport {
        fan: NormalFanFile::from_fan(&fan),
        volume: s.volume(),
        face_volumes: (0..=s.dim()).map(|i| s.face_volume(i)).collect(),
        reoriented: s.reoriented(),
    };
    if as_json {
        return json(&report);
    }
    let mut out = format!("n = {}, volume = {}\n", s.dim(), num(report.volume));
    if s.reoriented() {
        out.push_str("note: vertices 0 and 1 were swapped to make the orientation positive\n");
    }
    for i in 0..=s.dim() {
        let _ = writeln!(
            out,
            "k{i} = ({})  kappa = {}  facet volume = {}",
            nums(fan.normal(i).iter().copied()),
            num(fan.kappa(i)),
            num(report.face_volumes[i])
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct CheckReport {
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn cmd_check(input: &Path, contacts: &Path, oracle: Option<&OracleConfig>, as_json: bool, tol: &Tolerances) -> Outcome {
    let s = read_simplex(input, tol)?;
    let c = read_contacts(contacts, &s, tol)?;
    let verdict = immobilizes(&s, &c, tol)?;
    let report = match oracle {
        Some(config) => Some(falsify(&s, &c, config, tol)?),
        None => None,
    };
    let text = if as_json {
        formats::to_json(&CheckReport { verdict: verdict.clone(), oracle: report.clone() })?
    } else {
        let mut t = verdict_text(&verdict);
        if let Some(r) = &report {
            t.push_str(&oracle_text(r));
        }
        t
    };
    if let Some(r) = &report {
        if !agrees(&verdict, r) {
            print!("{text}");
            return Err(Failure::new(
                EXIT_DISAGREEMENT,
                format!("oracle ({:?}) disagrees with the algebraic verdict", r.verdict),
            ));
        }
    }
    Ok(text)
}

#[derive(Serialize)]
struct SynthesisReport {
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<simplex_grasp::CentredWitness>,
    verdict: Verdict,
    contacts: ContactSetFile,
}

fn cmd_synthesize(
    input: &Path,
    mode: Mode,
    z: Option<&[f64]>,
    output: Option<&Path>,
    as_json: bool,
    tol: &Tolerances,
) -> Outcome {
    let s = read_simplex(input, tol)?;
    let (contacts, witness) = match mode {
        Mode::Centroid => {
            if z.is_some() {
                return Err(Failure::new(EXIT_PARSE, "--z is only used with --mode centred"));
            }
            (centroid_contacts(&s, tol)?, None)
        }
        Mode::Centred => {
            let centre = match z {
                Some(z) => nalgebra::DVector::from_column_slice(z),
                None => nalgebra::DVector::from_vec(centred_feasible_witness(&s).z),
            };
            let (c, w) = centred_contacts(&s, &centre, tol)?;
            (c, Some(w))
        }
    };
    let verdict = immobilizes(&s, &contacts, tol)?;
    if let Some(path) = output {
        write_contacts(path, &contacts)?;
    }
    let report = SynthesisReport {
        mode: match mode {
            Mode::Centroid => "centroid",
            Mode::Centred => "centred",
        },
        witness,
        verdict,
        contacts: ContactSetFile::from_contacts(&contacts),
    };
    if as_json {
        return json(&report);
    }
    let mut out = format!("mode: {}\n", report.mode);
    if let Some(w) = &report.witness {
        let _ = writeln!(out, "centre z: {}", nums(w.z.iter().copied()));
        let _ = writeln!(out, "weights mu: {}", nums(w.mu.iter().copied()));
        let _ = writeln!(out, "offsets t: {}", nums(w.t.iter().copied()));
    }
    out.push_str(&verdict_text(&report.verdict));
    match output {
        Some(path) => {
            let _ = writeln!(out, "contacts written to {}", path.display());
        }
        None => out.push_str(&formats::to_json(&report.contacts)?),
    }
    Ok(out)
}

#[derive(Serialize)]
struct DisplacementReport {
    before: Verdict,
    after: Verdict,
    /// Change of the smallest eigenvalue pair sum.
    min_pair_sum_change: f64,
    contacts: ContactSetFile,
}

fn cmd_displace(
    input: &Path,
    contacts: &Path,
    coeffs: &Path,
    output: Option<&Path>,
    as_json: bool,
    tol: &Tolerances,
) -> Outcome {
    let s = read_simplex(input, tol)?;
    let c = read_contacts(contacts, &s, tol)?;
    let coeffs: CoeffsFile = read_json(coeffs)?;
    let moved = apply_displacement(&s, &c, &coeffs.coeffs, tol)?;
    let fan = s.normal_fan();
    let pair_sum = |c: &ContactSet| -> Result<f64, Failure> {
        PenetrationMatrix::assemble(&fan, c, tol)?
            .min_pair_sum()
            .ok_or_else(|| Failure::new(EXIT_INTERNAL, "penetration matrix lost its symmetry"))
    };
    let report = DisplacementReport {
        before: immobilizes(&s, &c, tol)?,
        after: immobilizes(&s, &moved, tol)?,
        min_pair_sum_change: pair_sum(&moved)? - pair_sum(&c)?,
        contacts: ContactSetFile::from_contacts(&moved),
    };
    if let Some(path) = output {
        write_contacts(path, &moved)?;
    }
    if as_json {
        return json(&report);
    }
    let mut out = String::new();
    let _ = writeln!(out, "eigenvalues before: {}", nums(report.before.eigenvalues.iter().copied()));
    let _ = writeln!(out, "eigenvalues after:  {}", nums(report.after.eigenvalues.iter().copied()));
    let _ = writeln!(out, "min pair sum change: {}", num(report.min_pair_sum_change));
    out.push_str(&verdict_text(&report.after));
    match output {
        Some(path) => {
            let _ = writeln!(out, "contacts written to {}", path.display());
        }
        None => out.push_str(&formats::to_json(&report.contacts)?),
    }
    Ok(out)
}

#[derive(Serialize)]
struct WorkedExampleReport {
    #[serde(flatten)]
    reproduction: worked_example::Reproduction,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn cmd_worked_example(oracle: Option<&OracleConfig>, as_json: bool, tol: &Tolerances) -> Outcome {
    let r = worked_example::reproduce(tol)?;
    let report = match oracle {
        Some(config) => {
            let s = worked_example::simplex(tol)?;
            let c = worked_example::contacts(&s, tol)?;
            Some(falsify(&s, &c, config, tol)?)
        }
        None => None,
    };
    let text = if as_json {
        formats::to_json(&WorkedExampleReport { reproduction: r.clone(), oracle: report.clone() })?
    } else {
        let mut out = format!(
            "4-simplex, volume {}; normals in the published scaling (x{})\n",
            num(r.volume),
            num(worked_example::published_scale())
        );
        for (i, k) in r.normals.iter().enumerate() {
            let _ = writeln!(out, "k{i} = ({})", nums(k.iter().copied()));
        }
        out.push_str("A = sum k_i p_i^T:\n");
        for row in &r.penetration_matrix {
            let _ = writeln!(out, "  {}", nums(row.iter().copied()));
        }
        let _ = writeln!(out, "max error vs published: normals {}, A {}", num(r.normals_error), num(r.matrix_error));
        out.push_str(&verdict_line(&r.verdict));
        out.push('\n');
        if let Some(o) = &report {
            out.push_str(&oracle_text(o));
        }
        out
    };
    if !r.reproduced {
        print!("{text}");
        return Err(Failure::new(EXIT_REGRESSION, "worked example no longer reproduces the published values"));
    }
    if let Some(o) = &report {
        if o.verdict != OracleVerdict::RefuteWithWitness {
            print!("{text}");
            return Err(Failure::new(EXIT_DISAGREEMENT, format!("oracle returned {:?}", o.verdict)));
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(47.6), "47.6");
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(-13.6), "-13.6");
        assert_eq!(num(123456789012.0), "1.23456789e11");
        assert_eq!(num(1e-7), "1.00000000e-7");
        assert_eq!(num(0.0), "0");
    }
}
