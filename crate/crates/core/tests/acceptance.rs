//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use liederiv::bundles::check_functoriality;
use liederiv::calculus::{curve_fields, Identity, IdentityReport};
use liederiv::cli::run_scenarios;
use liederiv::expr::Expr;
use liederiv::flows::rk4_fixed;
use liederiv::jet::{variables, JetContext};
use liederiv::linalg::Matrix;
use liederiv::maps::{DiffeoCurve, Domain};
use liederiv::report::{read_report, METADATA_FILE};
use liederiv::scenario::{generate, generate_through_identity, Profile, RunOptions, ScenarioFile, FUNCTOR_BATTERY};
use liederiv::sections::{JetSource, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn only(ids: &[Identity]) -> RunOptions {
    RunOptions {
        only: Some(ids.to_vec()),
        ..RunOptions::default()
    }
}

fn concat(files: &[ScenarioFile]) -> ScenarioFile {
    ScenarioFile {
        schema_version: files[0].schema_version,
        scenarios: files.iter().flat_map(|f| f.scenarios.clone()).collect(),
    }
}

fn run(file: &ScenarioFile, opts: &RunOptions) -> Vec<IdentityReport> {
    run_scenarios(file, opts, 0).expect("generated scenarios compile")
}

struct Stats {
    reports: usize,
    passed: usize,
    max_abs: f64,
    max_rel: f64,
    min_coverage: f64,
}

fn stats(reports: &[IdentityReport]) -> Stats {
    Stats {
        reports: reports.len(),
        passed: reports.iter().filter(|r| r.pass).count(),
        max_abs: reports.iter().map(|r| r.max_abs_err).fold(0.0, f64::max),
        max_rel: reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max),
        min_coverage: reports.iter().map(|r| r.coverage).fold(1.0, f64::min),
    }
}

impl Stats {
    fn all_pass(&self) -> bool {
        self.reports > 0 && self.passed == self.reports
    }

    fn line(&self) -> String {
        format!(
            "{}/{} reports pass, max_abs={:.2e}, max_rel={:.2e}, min_coverage={:.2}",
            self.passed, self.reports, self.max_abs, self.max_rel, self.min_coverage
        )
    }
}

/// The scenario battery for the first-order pullback and push-forward
/// identities: 200 scenarios cycling through `m = 1, 2, 3` and the functor
/// battery.
fn first_order_battery() -> ScenarioFile {
    concat(&[
        generate(101, 70, Profile::Poly),
        generate(102, 70, Profile::Trig),
        generate(103, 60, Profile::Mixed),
    ])
}

fn battery_spread(file: &ScenarioFile) -> (BTreeSet<usize>, usize) {
    let dims: BTreeSet<usize> = file.scenarios.iter().map(|s| s.dim).collect();
    let functors: BTreeSet<String> = file
        .scenarios
        .iter()
        .filter_map(|s| s.section.as_ref().map(|sec| sec.functor.to_string()))
        .collect();
    (dims, functors.len())
}

fn criterion_eq1() -> Outcome {
    let file = first_order_battery();
    let (dims, functors) = battery_spread(&file);
    let start = Instant::now();
    let reports = run(&file, &only(&[Identity::Eq1]));
    let secs = start.elapsed().as_secs_f64();
    let s = stats(&reports);
    let pass = s.all_pass()
        && s.reports == 200
        && s.max_abs <= 1e-7
        && secs < 60.0
        && dims == BTreeSet::from([1, 2, 3])
        && functors == FUNCTOR_BATTERY.len();
    outcome(pass, format!("{}, dims={dims:?}, functors={functors}, {secs:.1}s", s.line()))
}

fn criterion_eq2() -> Outcome {
    let file = first_order_battery();
    let start = Instant::now();
    let reports = run(&file, &only(&[Identity::Eq2]));
    let secs = start.elapsed().as_secs_f64();
    let s = stats(&reports);
    let definitional: Vec<f64> = reports
        .iter()
        .flat_map(|r| &r.records)
        .flat_map(|p| &p.comparisons)
        .filter(|c| c.lhs == "pushforward" && c.rhs == "inverse pullback")
        .map(|c| c.abs_err)
        .collect();
    let def_max = definitional.iter().copied().fold(0.0, f64::max);
    let evaluated: usize = reports
        .iter()
        .flat_map(|r| &r.records)
        .filter(|p| p.skipped.is_none())
        .count();
    let pass = s.all_pass()
        && s.reports == 200
        && s.max_abs <= 1e-7
        && definitional.len() == evaluated
        && def_max <= 1e-10
        && secs < 60.0;
    outcome(
        pass,
        format!(
            "{}, definitional checks={} max={def_max:.2e}, {secs:.1}s",
            s.line(),
            definitional.len()
        ),
    )
}

fn criterion_cor2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (profile, k) in [(Profile::HigherOrderK2, 2), (Profile::HigherOrderK3, 3)] {
        let reports = run(&generate(200 + k as u64, 50, profile), &only(&[Identity::Eq3, Identity::Eq4]));
        let s = stats(&reports);
        let lower = reports
            .iter()
            .map(|r| r.lower_order_max.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        let ks_ok = reports.iter().all(|r| r.k == Some(k));
        pass &= s.all_pass() && s.reports == 100 && s.max_abs <= 1e-6 && lower <= 1e-9 && ks_ok;
        parts.push(format!("k={k}: {}, lower_order_max={lower:.2e}", s.line()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_lemma6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let reports = run(&generate_through_identity(300 + k as u64, 50, k), &only(&[Identity::Lemma6]));
        let s = stats(&reports);
        pass &= s.all_pass() && s.reports == 50 && s.max_abs <= 1e-6;
        parts.push(format!("k={k}: {}", s.line()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_lie_oracle() -> Outcome {
    let reports = run(&generate(400, 100, Profile::Mixed), &only(&[Identity::LieOracle]));
    let s = stats(&reports);
    outcome(s.all_pass() && s.reports == 100 && s.max_abs <= 1e-6, s.line())
}

fn criterion_bracket() -> Outcome {
    let reports = run(&generate(500, 100, Profile::Mixed), &only(&[Identity::Bracket]));
    let s = stats(&reports);
    outcome(s.all_pass() && s.reports == 100 && s.max_abs <= 1e-9, s.line())
}

fn criterion_lemma2() -> Outcome {
    let file = concat(&[generate(600, 25, Profile::Poly), generate(601, 25, Profile::Trig)]);
    let orders: BTreeSet<usize> = file
        .scenarios
        .iter()
        .filter_map(|s| s.lemma2.as_ref())
        .filter_map(|l| l.curve[0].split("t^").nth(1).and_then(|r| r[..1].parse().ok()))
        .collect();
    let reports = run(&file, &only(&[Identity::Lemma2]));
    let s = stats(&reports);
    let pass = s.all_pass() && s.reports == 50 && s.max_rel <= 1e-9 && orders == BTreeSet::from([1, 2, 3]);
    outcome(pass, format!("{}, k in {orders:?}", s.line()))
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> Matrix<f64> {
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.6..0.6))
                .collect()
        })
        .collect()
}

fn criterion_functor_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut worst = 0.0f64;
    let mut identity_exact = true;
    let mut count = 0;
    let mut pass = true;
    for spec in FUNCTOR_BATTERY {
        for m in 1..=3 {
            let pairs = if m == 3 { 200 } else { 67 };
            for _ in 0..pairs {
                let j1 = random_matrix(&mut rng, m);
                let j2 = random_matrix(&mut rng, m);
                match check_functoriality(spec, &j1, &j2) {
                    Ok(r) => {
                        worst = worst.max(r.composition_rel_err);
                        identity_exact &= r.identity_err == 0.0;
                        pass &= r.pass;
                    }
                    // near-singular draw
                    Err(_) => continue,
                }
                count += 1;
            }
        }
    }
    let per_spec = count / FUNCTOR_BATTERY.len();
    pass &= worst <= 1e-12 && identity_exact && per_spec >= 200;
    outcome(
        pass,
        format!("{count} pairs over {} specs, max rel err={worst:.2e}, F(Id) exact={identity_exact}", FUNCTOR_BATTERY.len()),
    )
}

fn criterion_autonomous_flow() -> Outcome {
    let fields: [&[&str]; 3] = [
        &["0.3 + 0.2*sin(x1)"],
        &["0.1 + 0.2*x2", "-0.3*x1 + 0.1*x1*x2"],
        &["0.2*x2 - 0.1*x3", "0.15*cos(x1) + 0.05*x3", "0.1*x1*x2 - 0.2"],
    ];
    let times = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut failures = 0;
    for comps in fields {
        let m = comps.len();
        let field = VectorField::parse(comps, false, Domain::cube(m, 2.0)).unwrap();
        let curve = DiffeoCurve::flow_of(field.clone(), (-1.0, 1.0), 1e-12).unwrap();
        let (xf, yf) = curve_fields(&curve);
        for _ in 0..20 {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let expect = field.eval(&0.0, &x).unwrap();
            for &t in &times {
                for got in [xf.value_at(t, &x), yf.value_at(t, &x)] {
                    match got {
                        Ok(v) => {
                            let e = v.components.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            worst = worst.max(e);
                        }
                        Err(_) => failures += 1,
                    }
                    checks += 1;
                }
            }
        }
    }
    outcome(
        failures == 0 && worst <= 1e-8,
        format!("{checks} checks (3 fields x 20 points x 5 times x {{X, Y}}), max err={worst:.2e}, failures={failures}"),
    )
}

fn criterion_mutations() -> Outcome {
    let dir = fixtures().join("mutations");
    let mut seen = BTreeSet::new();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    for path in paths {
        let out = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_liederiv"))
            .arg("run")
            .arg(&path)
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        let code = status.status.code();
        let mut ratio = 0.0f64;
        for entry in std::fs::read_dir(out.path()).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "json") && !p.ends_with(METADATA_FILE) {
                let file = read_report(&p).unwrap();
                seen.insert(file.identity);
                for r in &file.reports {
                    ratio = ratio.max(r.max_abs_err / r.tolerances.abs);
                }
            }
        }
        let ok = code == Some(1) && ratio >= 1e3;
        pass &= ok;
        parts.push(format!(
            "{}: exit={code:?} err/tol={ratio:.1e}",
            path.file_stem().unwrap().to_string_lossy()
        ));
    }
    let expected: BTreeSet<Identity> = Identity::ALL.into_iter().filter(|i| *i != Identity::LieOracle).collect();
    pass &= seen == expected;
    outcome(pass, parts.join(", "))
}

/// Dense polynomial in `(x1, .., xm, t)` as exponent vector to coefficient.
type Poly = BTreeMap<Vec<usize>, f64>;

fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, degree: usize) -> Poly {
    let mut p = Poly::new();
    for _ in 0..rng.gen_range(1..=8) {
        let mut e = vec![0usize; nvars];
        let total = rng.gen_range(0..=degree);
        for _ in 0..total {
            e[rng.gen_range(0..nvars)] += 1;
        }
        *p.entry(e).or_default() += rng.gen_range(-1.0..1.0);
    }
    p
}

fn poly_source(p: &Poly, m: usize) -> String {
    p.iter()
        .map(|(e, c)| {
            let mut s = format!("({c:?})");
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    let name = if v == m { "t".to_string() } else { format!("x{}", v + 1) };
                    s.push_str(&format!("*{name}^{k}"));
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// `∂^α p` at `a`, term by term.
fn symbolic_derivative(p: &Poly, alpha: &[usize], a: &[f64]) -> f64 {
    p.iter()
        .filter(|(e, _)| e.iter().zip(alpha).all(|(n, k)| n >= k))
        .map(|(e, c)| {
            c * e
                .iter()
                .zip(alpha)
                .zip(a)
                .map(|((&n, &k), &x)| falling(n, k) * x.powi((n - k) as i32))
                .product::<f64>()
        })
        .sum()
}

fn multi_indices(nvars: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..nvars {
        out = out
            .into_iter()
            .flat_map(|a: Vec<usize>| {
                let used: usize = a.iter().sum();
                (0..=max - used).map(move |k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out
}

fn rk4_order() -> f64 {
    // y' = cos(t)·y, y(0) = 1 ⇒ y(1) = exp(sin 1)
    let field = VectorField::parse(&["cos(t)*x1"], true, Domain::cube(1, 10.0)).unwrap();
    let exact = 1f64.sin().exp();
    let errs: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| (rk4_fixed(&field, 0.0, 1.0, &[1.0], n).unwrap()[0] - exact).abs())
        .collect();
    let slopes: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    slopes.iter().copied().fold(f64::INFINITY, f64::min)
}

fn criterion_jet_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1100);
    let mut worst = 0.0f64;
    let mut polys = 0;
    for _ in 0..300 {
        let m = rng.gen_range(1..=3usize);
        let k = rng.gen_range(1..=6usize);
        let p = random_poly(&mut rng, m + 1, k);
        let expr = Expr::parse(&poly_source(&p, m), m, true).unwrap();
        let a: Vec<f64> = (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ctx = JetContext::new(m, k).unwrap();
        let mut vars = variables(&ctx, &a[..m], a[m]).unwrap();
        let t = vars.pop().unwrap();
        let jet = expr.eval(&vars, Some(&t)).unwrap();
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for alpha in multi_indices(m + 1, k) {
            let want = symbolic_derivative(&p, &alpha, &a);
            let got = jet.extract_derivative(&alpha).unwrap();
            diff = diff.max((got - want).abs());
            scale = scale.max(want.abs());
        }
        worst = worst.max(if scale == 0.0 { diff } else { diff / scale });
        polys += 1;
    }
    let order = rk4_order();
    outcome(
        worst <= 1e-12 && order >= 3.7,
        format!("{polys} polynomials, max rel err={worst:.2e}; RK4 observed order={order:.2}"),
    )
}

fn run_golden(out: &Path) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_liederiv"))
        .arg("run")
        .arg(fixtures().join("golden.json"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
}

fn criterion_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let codes = (run_golden(a.path()), run_golden(b.path()));
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != METADATA_FILE)
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        let x = std::fs::read(a.path().join(n)).unwrap();
        let y = std::fs::read(b.path().join(n)).ok();
        if y.as_deref() != Some(&x[..]) {
            differing.push(n.to_string_lossy().into_owned());
        }
    }
    outcome(
        codes == (Some(0), Some(0)) && names.len() == 9 && differing.is_empty(),
        format!("exit codes={codes:?}, {} files compared, differing={differing:?}", names.len()),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("first-order pullback identity, 200 scenarios", criterion_eq1),
        ("first-order push-forward identity, 200 scenarios", criterion_eq2),
        ("higher-order identities, k = 2 and 3", criterion_cor2),
        ("k-th derivative through the identity, k = 1, 2, 3", criterion_lemma6),
        ("analytic vs flow Lie derivative, 100 scenarios", criterion_lie_oracle),
        ("bracket identity, 100 scenarios", criterion_bracket),
        ("naturality of the first non-vanishing derivative, 50 triples", criterion_lemma2),
        ("functor laws", criterion_functor_laws),
        ("autonomous flow fields", criterion_autonomous_flow),
        ("sign-mutated fixtures fail", criterion_mutations),
        ("jet kernel and RK4 order", criterion_jet_kernel),
        ("byte-identical reruns", criterion_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{:>2}] {name}: {} ({:.1}s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
