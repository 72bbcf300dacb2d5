//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see only this
//! report; the lines are also written straight to stdout so they show up in
//! a plain `cargo test` log.

use std::cell::OnceCell;
use std::io::Write;
use std::time::{Duration, Instant};

use fillcurve::lance_thomas::{self, ParamMap};
use fillcurve::reparam::{self, AreaProfile};
use fillcurve::scalar::{int, pow2_inv, ratio, Exact};
use fillcurve::verify::{check_knopp, check_lance_thomas, CheckReport, Status};
use fillcurve::{
    render_knopp, render_lt, KnoppCurve, KnoppSchedule, LanceThomasSchedule, Rational, SvgOptions,
};

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn knopp(beta: &Rational, horizon: usize) -> KnoppCurve {
    KnoppCurve::with_default_root(KnoppSchedule::new(beta.clone(), horizon).unwrap())
}

fn lt(alpha: &Rational, n: usize) -> (LanceThomasSchedule, ParamMap) {
    let s = LanceThomasSchedule::new(alpha.clone(), n).unwrap();
    let map = lance_thomas::generation(&s, n).unwrap();
    (s, map)
}

fn require(report: &CheckReport, names: &[&str]) -> Result<(), String> {
    for name in names {
        let check = report
            .get(name)
            .ok_or_else(|| format!("check {name} not registered"))?;
        if check.status != Status::Pass {
            return Err(format!(
                "{} gen {} {}: {:?} {} [{}]",
                report.family,
                report.generation,
                name,
                check.status,
                check.detail,
                check.witness.as_deref().unwrap_or("")
            ));
        }
    }
    Ok(())
}

fn within(limit: Duration, started: Instant, what: &str) -> Result<(), String> {
    let took = started.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:?}, limit {limit:?}"));
    }
    Ok(())
}

fn betas() -> [Rational; 3] {
    [ratio(1, 4), ratio(1, 2), ratio(3, 4)]
}

fn knopp_area_schedule() -> Verdict {
    for beta in betas() {
        let started = Instant::now();
        let curve = knopp(&beta, 12);
        for n in 0..=12 {
            let chain = curve.build_chain(n).map_err(|e| e.to_string())?;
            let p = curve.schedule().p(n);
            if &chain.total_area() != p {
                return Err(format!("beta {} n {n}: total area != p_n", Exact(&beta)));
            }
            let each = p * pow2_inv(n);
            if let Some(t) = chain.triangles().iter().find(|t| t.shape.area() != each) {
                return Err(format!("beta {} triangle {}", Exact(&beta), t.address));
            }
        }
        require(
            &check_knopp(&curve.build_chain(12).unwrap()),
            &["total_area", "triangle_area"],
        )?;
        within(
            Duration::from_secs(5),
            started,
            &format!("beta {}", Exact(&beta)),
        )?;
    }
    Ok("beta in {1/4,1/2,3/4}, n <= 12: total = p_n, each = p_n/2^n".into())
}

fn homogeneity() -> Verdict {
    for beta in betas() {
        let curve = knopp(&beta, 12);
        let one = int(1);
        for m in 0..=12 {
            let chain = curve.build_chain(m).unwrap();
            let p_m = curve.schedule().p(m);
            for n in 0..=m.min(6) {
                for j in 0..1usize << n {
                    let arc = chain.arc_area(n, j).unwrap();
                    if arc.value != p_m * pow2_inv(n) {
                        return Err(format!("beta {} m {m} arc ({n},{j})", Exact(&beta)));
                    }
                    if arc.limit != &beta * pow2_inv(n)
                        || arc.residual() != (&one - &beta) * pow2_inv(m + n)
                    {
                        return Err(format!("beta {} m {m} residual ({n},{j})", Exact(&beta)));
                    }
                    if n < m {
                        let l = chain.arc_area(n + 1, 2 * j).unwrap().value;
                        let r = chain.arc_area(n + 1, 2 * j + 1).unwrap().value;
                        if l + r != arc.value {
                            return Err(format!("additivity m {m} ({n},{j})"));
                        }
                    }
                }
            }
        }
        // the horizon query agrees with slicing the chain
        if curve.arc_area(3, 5, 12).unwrap().value != curve.schedule().p(12) * pow2_inv(3) {
            return Err("subtree arc area differs from chain slice".into());
        }
    }
    Ok("n <= 6, m <= 12: value = p_m/2^n, residual (1-beta)/2^(m+n), additive".into())
}

fn diameter_decay() -> Verdict {
    let started = Instant::now();
    let curve = knopp(&ratio(1, 2), 12);
    let n0 = curve.schedule().first_small_index(&ratio(1, 8)).unwrap();
    if n0 != 3 {
        return Err(format!("n0 = {n0}, expected 3"));
    }
    let report = check_knopp(&curve.build_chain(12).unwrap());
    require(
        &report,
        &["diameter_decay", "nesting", "chain_connectivity"],
    )?;
    let detail = &report.get("diameter_decay").unwrap().detail;
    if !detail.contains("[3, 9]") {
        return Err(format!("unexpected window: {detail}"));
    }
    within(Duration::from_secs(30), started, "depth 12")?;
    Ok(format!("beta 1/2, {detail}"))
}

fn injectivity() -> Verdict {
    let started = Instant::now();
    for n in 0..=8 {
        for beta in betas() {
            let chain = knopp(&beta, n).build_chain(n).unwrap();
            require(&check_knopp(&chain), &["polyline_injectivity"])?;
        }
    }
    for alpha in [ratio(1, 2), ratio(2, 3)] {
        for n in 0..=4 {
            let (s, map) = lt(&alpha, n);
            require(&check_lance_thomas(&map, &s), &["polyline_injectivity"])?;
        }
    }
    within(Duration::from_secs(60), started, "brute force")?;
    Ok("Knopp n <= 8 (257 vertices), LT n <= 4 (511 segments): no intersecting pairs".into())
}

fn lt_reports(alphas: &[Rational], max_n: usize) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for alpha in alphas {
        for n in 0..=max_n {
            let (s, map) = lt(alpha, n);
            out.push(check_lance_thomas(&map, &s));
        }
    }
    out
}

fn lt_measures(reports: &[CheckReport]) -> Verdict {
    for r in reports {
        require(
            r,
            &["measure_chain", "seven_length_identity", "segment_count"],
        )?;
    }
    Ok("alpha in {1/2,2/3}, n <= 6: lambda1(C_2n) = lambda2(A_n) = q_n^2; seven-length sums; 2*4^n-1 segments".into())
}

fn cauchy_bound(reports: &[CheckReport]) -> Verdict {
    for r in reports {
        require(r, &["cauchy_bound", "joint_stability"])?;
    }
    // direct spot check outside the harness: generation 0 -> 1
    let (s, g1) = lt(&ratio(1, 2), 1);
    let g0 = ParamMap::initial();
    let worst = g1
        .breakpoints()
        .iter()
        .map(|b| g0.eval(&b.t).unwrap().point.dist_sq(&b.point))
        .max()
        .unwrap();
    let bound = int(2) * s.side(0) * s.side(0);
    if worst > bound {
        return Err(format!(
            "displacement² {} > {}",
            Exact(&worst),
            Exact(&bound)
        ));
    }
    Ok("generations n -> n+1, n <= 5: displacement² <= 2 (prod a_k/2)²".into())
}

fn product_structure(reports: &[CheckReport]) -> Verdict {
    for r in reports {
        require(r, &["product_structure"])?;
    }
    Ok("B_n = K_n x K_n for n <= 6".into())
}

fn square_pullback() -> Verdict {
    let beta = ratio(1, 2);
    let curve = knopp(&beta, 10);
    let mut last: Option<Rational> = None;
    for m in 2..=10 {
        let d = reparam::square_pullback_demo(&curve, m).unwrap();
        let p = curve.schedule().p(m);
        if d.left != p * ratio(1, 4) || d.right != p * ratio(3, 4) {
            return Err(format!(
                "horizon {m}: ({}, {})",
                Exact(&d.left),
                Exact(&d.right)
            ));
        }
        if d.left_limit != &beta / int(4) || d.right_limit != int(3) * &beta / int(4) {
            return Err("limits differ from (beta/4, 3beta/4)".into());
        }
        let res = d.left_residual();
        if res != (p - &beta) / int(4) || last.as_ref().is_some_and(|prev| &res >= prev) {
            return Err(format!("horizon {m}: residual {}", Exact(&res)));
        }
        last = Some(res);
    }
    let d = reparam::square_pullback_demo(&curve, 10).unwrap();
    Ok(format!(
        "m = 10: ({}, {}) = (p10/4, 3p10/4)",
        Exact(&d.left),
        Exact(&d.right)
    ))
}

fn lt_reparametrization() -> Verdict {
    let mut checked = 0usize;
    for alpha in [ratio(1, 2), ratio(2, 3)] {
        for n in 0..=5 {
            let (s, map) = lt(&alpha, n);
            let beta = s.beta();
            let profile = AreaProfile::lance_thomas(&map, &s).map_err(|e| e.to_string())?;
            let homogeneous = reparam::reparametrize(map.clone(), profile.clone())
                .profile()
                .map_err(|e| e.to_string())?;
            for p in homogeneous.points() {
                if p.mass != &beta * &p.t {
                    return Err(format!("n {n}: F1({}) = {}", Exact(&p.t), Exact(&p.mass)));
                }
            }
            for (lo, hi) in map.cantor_intervals() {
                for t in [lo, hi] {
                    let sv = reparam::h_inverse(&profile, &t).unwrap();
                    let sv = sv.value().ok_or("h^-1 not exact at an endpoint")?;
                    let pre = reparam::h(&profile, sv).unwrap();
                    if !pre.exact || !pre.t.contains(&t) {
                        return Err(format!("n {n}: h(h^-1({})) misses", Exact(&t)));
                    }
                    let f = profile.value_at(&pre.t.lo).unwrap();
                    if f.value() != Some(&(&beta * sv)) {
                        return Err(format!("n {n}: F1({}) != beta s", Exact(sv)));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "F1(s) = beta s at {checked} Cantor endpoints, n <= 5"
    ))
}

fn rendering() -> Verdict {
    let opts = SvgOptions::default();
    for n in 0..=6 {
        let chain = knopp(&ratio(1, 2), n).build_chain(n).unwrap();
        let doc = render_knopp(&chain, &opts);
        if doc.matches("<polygon ").count() != 1 << n {
            return Err(format!("knopp depth {n}: polygon count"));
        }
        if doc != render_knopp(&chain, &opts) {
            return Err(format!("knopp depth {n}: rerun differs"));
        }
    }
    for n in 1..=4 {
        let (_, map) = lt(&ratio(1, 2), n);
        let doc = render_lt(&map, &opts);
        let squares = doc.matches("<rect data-address").count();
        let points = doc
            .lines()
            .find(|l| l.starts_with("<polyline"))
            .and_then(|l| l.split("points=\"").nth(1))
            .map(|p| p.trim_end_matches("\"/>").split(' ').count())
            .unwrap_or(0);
        if squares != 1 << (2 * n) || points != 2 << (2 * n) {
            return Err(format!("lt gen {n}: {squares} squares, {points} vertices"));
        }
        if doc != render_lt(&map, &opts) {
            return Err(format!("lt gen {n}: rerun differs"));
        }
    }
    Ok("2^n polygons, 4^n squares, 2*4^n-1 segments; byte-identical reruns".into())
}

#[test]
fn acceptance_criteria() {
    // built on first use, so the first criterion using them carries the cost
    let lt_cache = OnceCell::new();
    let lt_runs = || lt_cache.get_or_init(|| lt_reports(&[ratio(1, 2), ratio(2, 3)], 6));
    let criteria: Vec<Criterion> = vec![
        ("knopp area schedule", Box::new(knopp_area_schedule)),
        ("homogeneity", Box::new(homogeneity)),
        ("diameter decay", Box::new(diameter_decay)),
        ("injectivity", Box::new(injectivity)),
        ("lance-thomas measures", Box::new(|| lt_measures(lt_runs()))),
        ("cauchy bound", Box::new(|| cauchy_bound(lt_runs()))),
        (
            "product structure",
            Box::new(|| product_structure(lt_runs())),
        ),
        ("square pullback", Box::new(square_pullback)),
        (
            "lance-thomas reparametrization",
            Box::new(lt_reparametrization),
        ),
        ("rendering", Box::new(rendering)),
    ];
    let mut failed = Vec::new();
    let stdout = std::io::stdout();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = run();
        let line = match &verdict {
            Ok(msg) => format!(
                "PASS {:>2} {name}: {msg} ({:.2?})",
                i + 1,
                started.elapsed()
            ),
            Err(msg) => format!("FAIL {:>2} {name}: {msg}", i + 1),
        };
        writeln!(stdout.lock(), "{line}").unwrap();
        if verdict.is_err() {
            failed.push(line);
        }
    }
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}
