//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use dpdesign::design::{exponential_parameterization, rank_of, DesignSolution};
use dpdesign::mechanisms::verify_dp;
use dpdesign::orders::largest_upper_bound_state;
use dpdesign::polytope::{DatabasePolytope, ObliviousPolytope};
use dpdesign::{
    database_index, frechet_representation, induced_distribution, mechanism_value, project_belief, solve_database,
    solve_oblivious, spm_dominates, supermodular_value_dominance, symmetric_prior_from_state_prior, uprr_compare,
    Belief, BeliefDistribution, DatabaseBelief, DatabasePrior, DecisionProblem, ObliviousMechanism, StateBelief,
    StatePrior,
};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example(row: [f64; 3]) -> DecisionProblem {
    DecisionProblem::new(vec![0.0, 1.0], vec![row.to_vec(), vec![1.0; 3]]).unwrap()
}

fn masks(sol: &DesignSolution) -> Vec<u64> {
    sol.signatures.iter().map(|s| s.mask()).collect()
}

fn all_vertices(poly: &ObliviousPolytope) -> Vec<StateBelief> {
    poly.vertices(20).unwrap().into_iter().map(|(_, v)| v).collect()
}

fn criterion_1() -> Check {
    let mu0 = StatePrior::uniform(2).unwrap();
    let dp = example([3.0, 0.0, -2.5]);
    let sol = solve_oblivious(&mu0, &dp, eps(1.0)).map_err(|e| e.to_string())?;
    ensure(masks(&sol) == vec![0b00, 0b01, 0b11], || format!("signatures {:?}", sol.signatures))?;
    let oracle = brute_force_optimum(&all_vertices(&ObliviousPolytope::new(eps(1.0), mu0.clone())), mu0.probs(), &dp);
    let diff = (sol.optimum - oracle).abs();
    ensure(diff <= 1e-8, || format!("optimum {} vs oracle {oracle}", sol.optimum))?;
    Ok(format!("support {{}}, {{1}}, {{1,2}}; |LP - oracle| = {diff:.1e}"))
}

fn criterion_2() -> Check {
    let mu0 = StatePrior::uniform(2).unwrap();
    let dp = example([2.5, -2.5, 2.5]);
    let sol = solve_oblivious(&mu0, &dp, eps(1.0)).map_err(|e| e.to_string())?;
    ensure(masks(&sol) == vec![0b01, 0b10], || format!("signatures {:?}", sol.signatures))?;
    let oracle = brute_force_optimum(&all_vertices(&ObliviousPolytope::new(eps(1.0), mu0.clone())), mu0.probs(), &dp);
    ensure((sol.optimum - oracle).abs() <= 1e-8, || format!("optimum {} vs oracle {oracle}", sol.optimum))?;
    let geo = mechanism_value(&ObliviousMechanism::geometric(eps(1.0), 2).unwrap(), &mu0, &dp).unwrap();
    let gap = sol.optimum - geo;
    ensure(gap > 1e-3, || format!("gap {gap}"))?;
    Ok(format!("support {{1}}, {{2}}; geometric gap = {gap:.6}"))
}

fn criterion_3() -> Check {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = rng.gen_range(2..=6);
        let actions = rng.gen_range(2..=5);
        let e = rng.gen_range(0.1..3.0);
        let mu0 = random_prior(&mut rng, n + 1);
        let dp = random_supermodular(&mut rng, actions, n + 1);
        let sol = solve_oblivious(&mu0, &dp, eps(e)).map_err(|err| format!("instance {i}: {err}"))?;
        let geo = mechanism_value(&ObliviousMechanism::geometric(eps(e), n).unwrap(), &mu0, &dp).unwrap();
        let diff = (sol.optimum - geo).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-7, || format!("instance {i} (N={n}, eps={e}): optimum {} vs geometric {geo}", sol.optimum))?;
    }
    Ok(format!("200 instances, max |optimum - geometric| = {worst:.1e}"))
}

struct Pair {
    geometric: BeliefDistribution<StateBelief>,
    other: BeliefDistribution<StateBelief>,
    peaks: Vec<usize>,
}

fn criterion_4(pairs: &mut Vec<Pair>) -> Check {
    let mut rng = rng(4);
    let mut canonical_matches = 0;
    for i in 0..100 {
        let n = rng.gen_range(2..=5);
        let e = rng.gen_range(0.1..3.0);
        let mu0 = random_prior(&mut rng, n + 1);
        let poly = ObliviousPolytope::new(eps(e), mu0.clone());
        let mech = random_private_mechanism(&mut rng, &poly);
        ensure(verify_dp(&mech, eps(e)).private, || format!("mechanism {i} is not private"))?;
        let other = induced_distribution(&mech, &mu0).unwrap();
        let geometric = induced_distribution(&ObliviousMechanism::geometric(eps(e), n).unwrap(), &mu0).unwrap();
        let assignment = uprr_compare(&geometric, &other)
            .map_err(|err| format!("mechanism {i}: {err}"))?
            .ok_or_else(|| format!("mechanism {i}: geometric is not UPRR-dominant"))?;
        let peaks: Vec<usize> =
            geometric.support().iter().map(|b| largest_upper_bound_state(b, &poly).unwrap()).collect();
        ensure(peaks == (0..=n).collect::<Vec<_>>(), || format!("mechanism {i}: lemma peaks {peaks:?}"))?;
        for (k, p) in peaks.iter().enumerate() {
            ensure(assignment.feasible_sets[k].contains(p), || {
                format!("mechanism {i}: peak {p} not in {:?}", assignment.feasible_sets[k])
            })?;
        }
        if assignment.peaks == peaks {
            canonical_matches += 1;
        }
        pairs.push(Pair { geometric, other, peaks });
    }
    Ok(format!("100 mechanisms comparable, lemma peaks feasible ({canonical_matches} with canonical = lemma peak)"))
}

fn criterion_5(pairs: &[Pair]) -> Check {
    ensure(!pairs.is_empty(), || "no comparable pairs from criterion 4".into())?;
    let mut rng = rng(5);
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_spm = f64::NEG_INFINITY;
    for (i, pair) in pairs.iter().enumerate() {
        let states = pair.geometric.support()[0].len();
        for _ in 0..50 {
            let actions = rng.gen_range(2..=5);
            let dp = random_supermodular(&mut rng, actions, states);
            let (a, b) = supermodular_value_dominance(&pair.geometric, &pair.other, &dp).map_err(|e| e.to_string())?;
            worst_value = worst_value.max(b - a);
            ensure(a >= b - 1e-9, || format!("pair {i}: {a} < {b}"))?;
        }
        let labels: Vec<f64> = pair.peaks.iter().map(|&p| p as f64).collect();
        let f = frechet_representation(&pair.geometric, &labels).unwrap();
        for labelling in 0..3 {
            let own: Vec<f64> = match labelling {
                0 => (0..pair.other.len()).map(|j| j as f64).collect(),
                1 => vec![0.0; pair.other.len()],
                _ => (0..pair.other.len()).map(|_| rng.gen_range(0..3) as f64).collect(),
            };
            let g = frechet_representation(&pair.other, &own).unwrap();
            let verdict = spm_dominates(&f, &g).map_err(|e| e.to_string())?;
            worst_spm = worst_spm.max(verdict.worst_violation);
            ensure(verdict.dominates, || format!("pair {i}: spm violation {}", verdict.worst_violation))?;
        }
    }
    Ok(format!(
        "{} pairs x 50 problems; max value shortfall {worst_value:.1e}, max CDF violation {worst_spm:.1e}",
        pairs.len()
    ))
}

fn contained(db: &DatabasePolytope, ob: &ObliviousPolytope) -> Result<usize, String> {
    let vertices = db.vertices(16).map_err(|e| e.to_string())?;
    for v in &vertices {
        let p = project_belief(v);
        ensure(ob.contains(&p), || format!("projection {:?} outside", p.probs()))?;
    }
    Ok(vertices.len())
}

fn counterexample_prior(delta: f64) -> DatabasePrior {
    let mut probs = vec![0.0; 8];
    let entries = [
        ([0, 0, 0], (1.0 - delta) / 3.0),
        ([1, 1, 1], (1.0 - delta) / 3.0),
        ([0, 1, 1], (1.0 - delta) / 6.0),
        ([1, 0, 0], (1.0 - delta) / 6.0),
        ([0, 0, 1], delta / 3.0),
        ([1, 1, 0], delta / 3.0),
        ([0, 1, 0], delta / 6.0),
        ([1, 0, 1], delta / 6.0),
    ];
    for (bits, p) in entries {
        probs[database_index(&bits)] = p;
    }
    DatabasePrior::new(3, probs).unwrap()
}

fn criterion_6() -> Check {
    let mut rng = rng(6);
    let mut vertex_counts = 0;
    for i in 0..50 {
        let e = rng.gen_range(0.1..3.0);
        let pi0 = DatabasePrior::new(2, random_probs(&mut rng, 4)).unwrap();
        let db = DatabasePolytope::new(eps(e), pi0.clone());
        let ob = ObliviousPolytope::new(eps(e), pi0.state_prior());
        vertex_counts += contained(&db, &ob).map_err(|err| format!("(a) prior {i}: {err}"))?;
    }
    let mut worst = 0.0f64;
    for i in 0..20 {
        let e = rng.gen_range(0.1..3.0);
        let mu0 = random_prior(&mut rng, 4);
        let pi0 = symmetric_prior_from_state_prior(&mu0).unwrap();
        let db = DatabasePolytope::new(eps(e), pi0.clone());
        let ob = ObliviousPolytope::new(eps(e), mu0.clone());
        contained(&db, &ob).map_err(|err| format!("(b) prior {i}: {err}"))?;
        let actions = rng.gen_range(2..=4);
        let dp = random_payoffs(&mut rng, actions, 4);
        let a = solve_database(&pi0, &dp, eps(e)).map_err(|err| err.to_string())?.optimum;
        let b = solve_oblivious(&mu0, &dp, eps(e)).map_err(|err| err.to_string())?.optimum;
        worst = worst.max((a - b).abs());
        ensure((a - b).abs() <= 1e-7, || format!("(b) prior {i}: database {a} vs oblivious {b}"))?;
    }

    let pi0 = counterexample_prior(1e-3);
    let db = DatabasePolytope::new(eps(1.0), pi0.clone());
    let ob = ObliviousPolytope::new(eps(1.0), pi0.state_prior());
    let e1 = (-1.0f64).exp();
    let phi_by_bits = [
        ([0, 0, 0], e1 * e1),
        ([1, 0, 0], e1 * e1 * e1),
        ([0, 1, 0], e1),
        ([0, 0, 1], e1),
        ([1, 1, 0], e1 * e1),
        ([1, 0, 1], e1 * e1),
        ([0, 1, 1], 1.0),
        ([1, 1, 1], e1),
    ];
    let mut weights = vec![0.0; 8];
    for (bits, phi) in phi_by_bits {
        let t = database_index(&bits);
        weights[t] = phi * pi0.probs()[t];
    }
    let pi_hat = DatabaseBelief::normalized(weights).unwrap();
    ensure(db.contains(&pi_hat), || "(c) the counterexample posterior is not private".into())?;
    let report = ob.membership(&project_belief(&pi_hat)).unwrap();
    let upper: Vec<usize> = report.violations().filter(|s| s.upper < 0.0).map(|s| s.state).collect();
    ensure(upper == vec![2], || format!("(c) violated upper bounds {upper:?}"))?;
    Ok(format!(
        "(a) 50 priors, {vertex_counts} vertices inside; (b) 20 priors, max optimum gap {worst:.1e}; (c) upper bound at 2 exceeded by {:.4}",
        -report.slacks[1].upper
    ))
}

fn structural(sol: &DesignSolution, mu0: &StatePrior, e: f64) -> Result<(), String> {
    let n = mu0.n();
    ensure(sol.distribution.bayes_plausible(mu0.probs()), || "not Bayes-plausible".into())?;
    ensure(rank_of(sol.distribution.support()) == sol.distribution.len(), || "support dependent".into())?;
    let poly = ObliviousPolytope::new(eps(e), mu0.clone());
    for b in sol.distribution.support() {
        let m = poly.membership(b).unwrap();
        ensure(m.member && m.binding_count() == n, || format!("{} of {n} bounds bind", m.binding_count()))?;
    }
    ensure(sol.signal.max_row_defect() <= 1e-9, || "signal rows not stochastic".into())?;
    let mech = ObliviousMechanism::new("optimal", sol.signal.clone()).unwrap();
    let dp_check = verify_dp(&mech, eps(e));
    ensure(dp_check.private, || format!("worst log ratio {}", dp_check.worst_log_ratio))?;
    let back = induced_distribution(&mech, mu0).unwrap();
    ensure(back.len() == sol.distribution.len(), || "inversion changed the support size".into())?;
    for ((a, wa), (b, wb)) in back.iter().zip(sol.distribution.iter()) {
        ensure(a.distance(b) <= 1e-9 && (wa - wb).abs() <= 1e-9, || "inversion does not recover the support".into())?;
    }
    let par = exponential_parameterization(sol, eps(e)).map_err(|err| err.to_string())?;
    for t in 0..1usize << n {
        let row = &sol.signal.rows()[t.count_ones() as usize];
        let d = max_abs_diff(&par.probabilities(t), row);
        ensure(d <= 1e-9, || format!("exponential form off by {d}"))?;
    }
    Ok(())
}

fn criterion_7() -> Check {
    let mut rng = rng(7);
    let uniform = StatePrior::uniform(2).unwrap();
    let mut count = 0;
    for row in [[3.0, 0.0, -2.5], [2.5, -2.5, 2.5]] {
        let sol = solve_oblivious(&uniform, &example(row), eps(1.0)).unwrap();
        structural(&sol, &uniform, 1.0).map_err(|err| format!("example: {err}"))?;
        count += 1;
    }
    for i in 0..100 {
        let n = rng.gen_range(2..=6);
        let e = rng.gen_range(0.1..3.0);
        let mu0 = random_prior(&mut rng, n + 1);
        let actions = rng.gen_range(2..=5);
        let dp = if i % 2 == 0 {
            random_payoffs(&mut rng, actions, n + 1)
        } else {
            random_supermodular(&mut rng, actions, n + 1)
        };
        let sol = solve_oblivious(&mu0, &dp, eps(e)).map_err(|err| err.to_string())?;
        structural(&sol, &mu0, e).map_err(|err| format!("instance {i} (N={n}, eps={e}): {err}"))?;
        count += 1;
    }
    Ok(format!("{count} solved instances"))
}

fn criterion_8() -> Check {
    let mut rng = rng(8);
    let mut worst_marginal = 0.0f64;
    let mut worst_transport = 0.0f64;
    for i in 0..100 {
        let n = rng.gen_range(1..=5);
        let e = rng.gen_range(0.1..3.0);
        let mu0 = random_prior(&mut rng, n + 1);
        let poly = ObliviousPolytope::new(eps(e), mu0.clone());
        let tau = induced_distribution(&random_private_mechanism(&mut rng, &poly), &mu0).unwrap();
        let labels: Vec<f64> = (0..tau.len()).map(|_| rng.gen_range(0..4) as f64 * 0.5).collect();
        let f = frechet_representation(&tau, &labels).unwrap();

        let bp = f.breakpoints();
        ensure(bp[0] == 0.0 && *bp.last().unwrap() == 1.0, || format!("tau {i}: breakpoints {bp:?}"))?;
        ensure(bp.windows(2).all(|w| w[1] > w[0]), || format!("tau {i}: breakpoints not increasing"))?;
        for (k, &t) in f.labels().iter().enumerate() {
            let mass: f64 = tau.weights().iter().zip(&labels).filter(|(_, &l)| l == t).map(|(w, _)| w).sum();
            worst_marginal = worst_marginal.max((f.segment_length(k) - mass).abs());
        }
        worst_marginal = worst_marginal.max(max_abs_diff(&f.state_marginal(), mu0.probs()));

        let h: Vec<Vec<f64>> = (0..=n).map(|_| (0..f.labels().len()).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let col = |t: f64| f.labels().iter().position(|&l| l == t).unwrap();
        let direct: f64 = tau
            .iter()
            .zip(&labels)
            .map(|((b, w), &t)| w * b.probs().iter().enumerate().map(|(y, p)| p * h[y][col(t)]).sum::<f64>())
            .sum();
        let transported = f.expectation(|y, t| h[y][col(t)]);
        worst_transport = worst_transport.max((direct - transported).abs());
    }
    ensure(worst_marginal <= 1e-12, || format!("marginal error {worst_marginal}"))?;
    ensure(worst_transport <= 1e-9, || format!("transport error {worst_transport}"))?;
    Ok(format!("100 representations; marginal error {worst_marginal:.1e}, transport error {worst_transport:.1e}"))
}

fn report(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; took longer than {limit:?}")),
        Err(e) => (false, e),
    };
    println!(
        "{} criterion {id}: {name}: {detail} [{:.2}s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn main() {
    let mut pairs = Vec::new();
    let results = [
        report(1, "Example 1 reproduction", Duration::from_secs(1), criterion_1),
        report(2, "Example 2 reproduction", Duration::from_secs(1), criterion_2),
        report(3, "geometric optimality for supermodular problems", Duration::from_secs(30), criterion_3),
        report(4, "geometric UPRR dominance", Duration::from_secs(10), || criterion_4(&mut pairs)),
        report(5, "UPRR implies supermodular dominance", Duration::from_secs(30), || criterion_5(&pairs)),
        report(6, "oblivious equivalence and its failure", Duration::from_secs(120), criterion_6),
        report(7, "structural invariants", Duration::from_secs(10), criterion_7),
        report(8, "Frechet representations", Duration::from_secs(5), criterion_8),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
