use std::fmt::Write as _;
use std::path::Path;

use super::input::{InputKind, MechanismFile, PriorSpec, ProblemSpec};
use super::report::*;
use super::{
    CliError, Command, Common, CompareArgs, ProjectArgs, SolveArgs, VerifyArgs, VerticesArgs, EXIT_NOT_PRIVATE,
    EXIT_OK,
};
use crate::decision::{full_information_value, interim_value, is_supermodular, no_information_value};
use crate::design::{solve_database_with_cap, solve_oblivious_with_cap, SignalMatrix};
use crate::error::Error;
use crate::mechanisms::{
    database_label, induced_distribution, mechanism_value, verify_database_dp_with_tolerance,
    verify_dp_with_tolerance, DpVerdict, ObliviousMechanism,
};
use crate::model::{
    project_belief, symmetric_prior_from_state_prior, Belief, DecisionProblem, EpsilonBudget, StatePrior,
    LOG_RATIO_TOL,
};
use crate::orders::{frechet_representation, spm_dominates, uprr_compare};
use crate::polytope::{
    projection_gap, DatabasePolytope, ObliviousPolytope, DEFAULT_DATABASE_CAP, DEFAULT_OBLIVIOUS_CAP,
};

pub(crate) struct Output {
    pub stdout: String,
    pub code: i32,
}

pub(crate) fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Compare(a) => compare(a),
        Command::Vertices(a) => vertices(a),
        Command::Project(a) => project(a),
    }
}

/// Spec plus command-line overrides.
struct Setup {
    spec: ProblemSpec,
    origin: String,
    epsilon: EpsilonBudget,
    tolerance: f64,
    max_n: Option<usize>,
}

impl Setup {
    fn load(path: &Path, common: &Common) -> Result<Self, CliError> {
        let spec = ProblemSpec::load(path)?;
        let epsilon = match common.epsilon {
            Some(e) => EpsilonBudget::new(e).map_err(|e| CliError::usage(format!("--epsilon: {e}")))?,
            None => spec.epsilon,
        };
        let tolerance = tolerance(common.tolerance.or(spec.tolerance))?;
        let max_n = common.max_n.or(spec.max_n);
        Ok(Self { origin: path.display().to_string(), epsilon, tolerance, max_n, spec })
    }

    fn oblivious_cap(&self) -> usize {
        self.max_n.unwrap_or(DEFAULT_OBLIVIOUS_CAP)
    }

    /// Cap on the number of databases `2^N`.
    fn database_cap(&self) -> usize {
        match self.max_n {
            Some(m) => 1usize.checked_shl(m as u32).unwrap_or(usize::MAX),
            None => DEFAULT_DATABASE_CAP,
        }
    }

    fn problem(&self) -> Result<&DecisionProblem, CliError> {
        self.spec.problem.as_ref().ok_or_else(|| CliError::at(&self.origin, 1, "spec has no payoffs".into()))
    }

    fn oblivious_polytope(&self, mu0: StatePrior) -> ObliviousPolytope {
        ObliviousPolytope::new(self.epsilon, mu0).with_tolerance(self.tolerance)
    }
}

fn tolerance(t: Option<f64>) -> Result<f64, CliError> {
    match t {
        None => Ok(LOG_RATIO_TOL),
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(CliError::usage(format!("--tolerance must be positive, got {t}"))),
    }
}

fn write_report(path: Option<&Path>, json: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        std::fs::write(p, json).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn csv_row(cells: impl IntoIterator<Item = String>) -> String {
    let mut line = cells.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn geometric_value(eps: EpsilonBudget, mu0: &StatePrior, dp: &DecisionProblem) -> Result<f64, CliError> {
    Ok(mechanism_value(&ObliviousMechanism::geometric(eps, mu0.n())?, mu0, dp)?)
}

fn solve(args: &SolveArgs) -> Result<Output, CliError> {
    let setup = Setup::load(&args.spec, &args.common)?;
    let dp = setup.problem()?;
    let eps = setup.epsilon;
    let mu0 = setup.spec.state_prior();
    let no_info = no_information_value(&mu0, dp)?;
    let full_info = full_information_value(&mu0, dp)?;
    let geo = geometric_value(eps, &mu0, dp)?;
    let supermodular = is_supermodular(dp).0;

    let (design, optimum, support, signal, dp_check, uprr, spm) = match &setup.spec.prior {
        PriorSpec::State(mu0) => {
            let sol = solve_oblivious_with_cap(mu0, dp, eps, setup.oblivious_cap())?;
            let poly = setup.oblivious_polytope(mu0.clone());
            let mut support = Vec::new();
            for ((b, w), sig) in sol.distribution.iter().zip(&sol.signatures) {
                support.push(SupportEntry {
                    signature: Some(sig.to_string()),
                    weight: F17(w),
                    belief: f17s(b.probs()),
                    state_belief: None,
                    binding: poly.membership(b)?.binding_count(),
                    value: F17(interim_value(b.probs(), dp)?.value),
                });
            }
            let mech = ObliviousMechanism::new("optimal", sol.signal.clone())?;
            let check = verify_dp_with_tolerance(&mech, eps, setup.tolerance);
            let (uprr, spm) = if args.dominance {
                let (u, s) = dominance(eps, mu0, &sol.distribution)?;
                (Some(u), Some(s))
            } else {
                (None, None)
            };
            ("oblivious", sol.optimum, support, signal_report(&sol.signal, InputKind::States), check, uprr, spm)
        }
        PriorSpec::Database(pi0) => {
            if args.dominance {
                return Err(CliError::usage("--dominance needs a state_prior spec".into()));
            }
            let sol = solve_database_with_cap(pi0, dp, eps, setup.database_cap())?;
            let poly = DatabasePolytope::new(eps, pi0.clone()).with_tolerance(setup.tolerance);
            let mut support = Vec::new();
            for (b, w) in sol.distribution.iter() {
                let projected = project_belief(b);
                support.push(SupportEntry {
                    signature: None,
                    weight: F17(w),
                    belief: f17s(b.probs()),
                    state_belief: Some(f17s(projected.probs())),
                    binding: poly.membership(b)?.binding,
                    value: F17(interim_value(projected.probs(), dp)?.value),
                });
            }
            let kind = InputKind::Databases { n: pi0.n() };
            let check = verify_database_dp_with_tolerance(&sol.signal, pi0.n(), eps, setup.tolerance)?;
            ("database", sol.optimum, support, signal_report(&sol.signal, kind), check, None, None)
        }
    };

    let report = MechanismReport {
        header: Header::new("solve", setup.tolerance),
        design,
        n: setup.spec.n(),
        epsilon: F17(eps.value()),
        optimum: F17(optimum),
        no_info_value: F17(no_info),
        full_info_value: F17(full_info),
        supermodular,
        support,
        signal,
        dp: DpReport { verified: dp_check.private, worst_log_ratio: F17(dp_check.worst_log_ratio) },
        geometric: GeometricReport { value: F17(geo), gap: F17(optimum - geo) },
        uprr,
        spm,
    };
    let json = to_json(&report);
    write_report(args.common.report.as_deref(), &json)?;
    let stdout = if args.common.csv { solve_csv(&report) } else { json };
    Ok(Output { stdout, code: EXIT_OK })
}

fn dominance(
    eps: EpsilonBudget,
    mu0: &StatePrior,
    optimal: &crate::distribution::BeliefDistribution<crate::model::StateBelief>,
) -> Result<(UprrReport, SpmReport), CliError> {
    let geo = induced_distribution(&ObliviousMechanism::geometric(eps, mu0.n())?, mu0)?;
    let assignment = uprr_compare(&geo, optimal)?;
    let geo_labels: Vec<f64> = match &assignment {
        Some(a) => a.peaks.iter().map(|&p| p as f64).collect(),
        None => (0..geo.len()).map(|j| j as f64).collect(),
    };
    let own_labels: Vec<f64> = (0..optimal.len()).map(|j| j as f64).collect();
    let verdict = spm_dominates(&frechet_representation(&geo, &geo_labels)?, &frechet_representation(optimal, &own_labels)?)?;
    let uprr = UprrReport {
        geometric_dominates: assignment.is_some(),
        peaks: assignment.as_ref().map(|a| a.peaks.clone()),
        feasible_peaks: assignment.map(|a| a.feasible_sets),
    };
    Ok((uprr, SpmReport { geometric_dominates: verdict.dominates, worst_violation: F17(verdict.worst_violation) }))
}

fn signal_report(signal: &SignalMatrix, kind: InputKind) -> SignalReport {
    let (kind, inputs) = match kind {
        InputKind::States => ("states", (0..signal.num_inputs()).map(|w| w.to_string()).collect()),
        InputKind::Databases { n } => ("databases", (0..signal.num_inputs()).map(|t| database_label(t, n)).collect()),
    };
    SignalReport {
        kind,
        inputs,
        outputs: signal.outputs().to_vec(),
        rows: signal.rows().iter().map(|r| f17s(r)).collect(),
    }
}

fn solve_csv(report: &MechanismReport) -> String {
    let dim = report.support.first().map_or(0, |s| s.belief.len());
    let mut out = csv_row(
        ["output", "weight", "value", "binding"].iter().map(|s| s.to_string()).chain((0..dim).map(|i| format!("p{i}"))),
    );
    for (j, s) in report.support.iter().enumerate() {
        let name = s.signature.clone().unwrap_or_else(|| j.to_string());
        out += &csv_row(
            [quote(&name), format17(s.weight.0), format17(s.value.0), s.binding.to_string()]
                .into_iter()
                .chain(s.belief.iter().map(|p| format17(p.0))),
        );
    }
    out
}

fn verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let file = MechanismFile::load(&args.mechanism)?;
    let eps = match args.common.epsilon.or(file.epsilon) {
        Some(e) => EpsilonBudget::new(e).map_err(|e| CliError::usage(format!("--epsilon: {e}")))?,
        None => return Err(CliError::usage("--epsilon is required for mechanism tables without a budget".into())),
    };
    let tol = tolerance(args.common.tolerance)?;
    let verdict = match file.inputs {
        InputKind::States => verify_dp_with_tolerance(&ObliviousMechanism::new(&file.label, file.signal)?, eps, tol),
        InputKind::Databases { n } => verify_database_dp_with_tolerance(&file.signal, n, eps, tol)?,
    };
    let report = VerifyReport {
        header: Header::new("verify", tol),
        label: file.label.clone(),
        epsilon: F17(eps.value()),
        verified: verdict.private,
        worst_log_ratio: F17(verdict.worst_log_ratio),
        worst_at: verdict.worst_at.map(|(s, a, b)| [s, a, b]),
    };
    write_report(args.common.report.as_deref(), &to_json(&report))?;
    let stdout = if args.common.csv {
        csv_row(["label", "verified", "worst_log_ratio", "epsilon"].map(String::from))
            + &csv_row([quote(&file.label), verdict.private.to_string(), ratio_text(&verdict), format17(eps.value())])
    } else {
        format!(
            "{} {} worst |log ratio| {} epsilon {}\n",
            if verdict.private { "PASS" } else { "FAIL" },
            file.label,
            ratio_text(&verdict),
            format17(eps.value())
        )
    };
    Ok(Output { stdout, code: if verdict.private { EXIT_OK } else { EXIT_NOT_PRIVATE } })
}

fn ratio_text(v: &DpVerdict) -> String {
    if v.worst_log_ratio.is_finite() {
        format17(v.worst_log_ratio)
    } else {
        "inf".into()
    }
}

fn compare(args: &CompareArgs) -> Result<Output, CliError> {
    let setup = Setup::load(&args.spec, &args.common)?;
    let dp = setup.problem()?;
    let eps = setup.epsilon;
    let mu0 = setup.spec.state_prior();
    let optimum = solve_oblivious_with_cap(&mu0, dp, eps, setup.oblivious_cap())?.optimum;
    let geo = induced_distribution(&ObliviousMechanism::geometric(eps, mu0.n())?, &mu0)?;

    let mut rows = Vec::new();
    for path in &args.mechanism {
        let file = MechanismFile::load(path)?;
        let origin = path.display().to_string();
        if file.inputs != InputKind::States || file.signal.num_inputs() != mu0.probs().len() {
            return Err(CliError::at(
                &origin,
                1,
                format!("mechanism needs one row per count 0..={}, got {}", mu0.n(), file.signal.num_inputs()),
            ));
        }
        let mech = ObliviousMechanism::new(&file.label, file.signal)?;
        let verdict = verify_dp_with_tolerance(&mech, eps, setup.tolerance);
        let tau = induced_distribution(&mech, &mu0)?;
        let (dominates, peaks) = match uprr_compare(&geo, &tau) {
            Ok(Some(a)) => (Some(true), Some(a.peaks)),
            Ok(None) => (Some(false), None),
            Err(Error::ZeroEntry(_)) => (None, None),
            Err(e) => return Err(e.into()),
        };
        rows.push(CompareRow {
            label: file.label,
            value: F17(mechanism_value(&mech, &mu0, dp)?),
            dp_verified: verdict.private,
            worst_log_ratio: F17(verdict.worst_log_ratio),
            geometric_uprr_dominates: dominates,
            peaks,
        });
    }
    let report = CompareReport {
        header: Header::new("compare", setup.tolerance),
        n: mu0.n(),
        epsilon: F17(eps.value()),
        optimum: F17(optimum),
        rows,
    };
    write_report(args.common.report.as_deref(), &to_json(&report))?;

    let cells = |r: &CompareRow| {
        let uprr = match r.geometric_uprr_dominates {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        let peaks = r.peaks.as_ref().map_or(String::new(), |p| {
            p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
        });
        let ratio = if r.worst_log_ratio.0.is_finite() { format17(r.worst_log_ratio.0) } else { "inf".into() };
        [r.label.clone(), format17(r.value.0), r.dp_verified.to_string(), ratio, uprr.to_string(), peaks]
    };
    let header = ["label", "value", "dp_verified", "worst_log_ratio", "geometric_uprr", "peaks"];
    let mut stdout = String::new();
    if args.common.csv {
        stdout += &csv_row(header.map(String::from));
        for r in &report.rows {
            stdout += &csv_row(cells(r).map(|c| quote(&c)));
        }
    } else {
        let table: Vec<[String; 6]> =
            std::iter::once(header.map(String::from)).chain(report.rows.iter().map(cells)).collect();
        let widths: Vec<usize> = (0..6).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let _ = writeln!(stdout, "# optimum {}", format17(optimum));
        for row in &table {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(stdout, "{}", line.join("  ").trim_end());
        }
    }
    Ok(Output { stdout, code: EXIT_OK })
}

fn vertices(args: &VerticesArgs) -> Result<Output, CliError> {
    let setup = Setup::load(&args.spec, &args.common)?;
    let dp = setup.spec.problem.as_ref();
    let eps = setup.epsilon;
    let value = |p: &[f64]| -> Result<Option<F17>, CliError> {
        Ok(match dp {
            Some(dp) => Some(F17(interim_value(p, dp)?.value)),
            None => None,
        })
    };
    let (polytope, entries) = match &setup.spec.prior {
        PriorSpec::State(mu0) => {
            let poly = setup.oblivious_polytope(mu0.clone());
            let mut entries = Vec::new();
            for (sig, v) in poly.vertices(setup.oblivious_cap())? {
                entries.push(VertexEntry {
                    signature: Some(sig.to_string()),
                    heights: None,
                    belief: f17s(v.probs()),
                    state_belief: None,
                    binding: poly.membership(&v)?.binding_count(),
                    value: value(v.probs())?,
                });
            }
            ("states", entries)
        }
        PriorSpec::Database(pi0) => {
            let poly = DatabasePolytope::new(eps, pi0.clone()).with_tolerance(setup.tolerance);
            let vertices = poly.vertices(setup.database_cap())?;
            let mut entries = Vec::new();
            for (k, v) in poly.height_functions().into_iter().zip(&vertices) {
                let projected = project_belief(v);
                entries.push(VertexEntry {
                    signature: None,
                    heights: Some(k),
                    belief: f17s(v.probs()),
                    state_belief: Some(f17s(projected.probs())),
                    binding: poly.membership(v)?.binding,
                    value: value(projected.probs())?,
                });
            }
            ("databases", entries)
        }
    };
    let report = VerticesReport {
        header: Header::new("vertices", setup.tolerance),
        polytope,
        n: setup.spec.n(),
        epsilon: F17(eps.value()),
        count: entries.len(),
        vertices: entries,
    };
    let json = to_json(&report);
    write_report(args.common.report.as_deref(), &json)?;
    let stdout = if args.common.csv {
        let dim = report.vertices.first().map_or(0, |v| v.belief.len());
        let mut out = csv_row(["vertex", "binding"].map(String::from).into_iter().chain((0..dim).map(|i| format!("p{i}"))));
        for (j, v) in report.vertices.iter().enumerate() {
            let name = match (&v.signature, &v.heights) {
                (Some(s), _) => s.clone(),
                (None, Some(k)) => k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                _ => j.to_string(),
            };
            out += &csv_row(
                [quote(&name), v.binding.to_string()].into_iter().chain(v.belief.iter().map(|p| format17(p.0))),
            );
        }
        out
    } else {
        json
    };
    Ok(Output { stdout, code: EXIT_OK })
}

fn project(args: &ProjectArgs) -> Result<Output, CliError> {
    let setup = Setup::load(&args.spec, &args.common)?;
    let eps = setup.epsilon;
    let pi0 = match &setup.spec.prior {
        PriorSpec::Database(p) => p.clone(),
        PriorSpec::State(mu0) => {
            let dim = 1usize.checked_shl(mu0.n() as u32).unwrap_or(usize::MAX);
            if dim > setup.database_cap() {
                return Err(Error::CapExceeded { what: "database vertex enumeration (2^N)", requested: dim, cap: setup.database_cap() }
                    .into());
            }
            symmetric_prior_from_state_prior(mu0)?
        }
    };
    let db = DatabasePolytope::new(eps, pi0.clone()).with_tolerance(setup.tolerance);
    let ob = setup.oblivious_polytope(pi0.state_prior());
    let gap = projection_gap(&db, &ob, setup.database_cap())?;
    let tol = setup.tolerance;
    let outside = gap
        .outside
        .iter()
        .map(|w| WitnessEntry {
            vertex: f17s(w.vertex.probs()),
            projection: f17s(w.projection.probs()),
            violated_upper: w.violations.iter().filter(|s| s.upper < -tol).map(|s| s.state).collect(),
            violated_lower: w.violations.iter().filter(|s| s.lower < -tol).map(|s| s.state).collect(),
        })
        .collect();
    let report = ProjectReport {
        header: Header::new("project", tol),
        n: pi0.n(),
        epsilon: F17(eps.value()),
        symmetric_prior: pi0.is_symmetric(),
        database_vertices: gap.database_vertices,
        equal: gap.equal(),
        outside,
        unattained: gap.unattained.iter().map(|s| s.to_string()).collect(),
    };
    let json = to_json(&report);
    write_report(args.common.report.as_deref(), &json)?;
    let stdout = if args.common.csv {
        let mut out = csv_row(["witness", "violated_upper", "violated_lower", "projection"].map(String::from));
        for (j, w) in report.outside.iter().enumerate() {
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            let proj = w.projection.iter().map(|p| format17(p.0)).collect::<Vec<_>>().join(";");
            out += &csv_row([j.to_string(), join(&w.violated_upper), join(&w.violated_lower), proj]);
        }
        out
    } else {
        json
    };
    Ok(Output { stdout, code: EXIT_OK })
}
