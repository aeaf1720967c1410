//! Acceptance suite: eight end-to-end checks at their stated sizes,
//! tolerances and time limits. Prints one line per check and exits
//! non-zero if any check fails.

use std::collections::{HashMap, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lawless_core::montecarlo::{
    alter_bound, alter_sweep, check_bound, chi_square_uniform, decay_verdict, estimate_nontrivial_prob,
    exact_prob_small, freeness_experiment, significantly_greater, substream, Verdict, DEFAULT_EXACT_BUDGET,
};
use lawless_core::perm::{GroupKind, PermGroup, Permutation};
use lawless_core::separation::{certify_not_law, Certificate, PermAction, ThompsonAction};
use lawless_core::thompson::{dy, DyadicPLMap};
use lawless_core::trees::{evaluate_generators, grigorchuk_generators, rist_search, VertexString};
use lawless_core::words::{enumerate_reduced, Word};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

const SEED: u64 = 1;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn separation_bound() -> Outcome {
    let words = enumerate_reduced(2, 3);
    let (mut pass, mut inconclusive, mut fail) = (0, 0, Vec::new());
    for k in 8..=16 {
        let group = PermGroup::alternating(k).unwrap().bsgs();
        for (i, word) in words.iter().enumerate() {
            let bound = alter_bound(word.len(), k).expect("length 3 < k - 1");
            let seed = SEED + (k * 1000 + i) as u64;
            let estimate = estimate_nontrivial_prob(&group, word, 10_000, 0.99, seed, 0).unwrap();
            match check_bound(&estimate, &bound).verdict {
                Verdict::Pass => pass += 1,
                Verdict::Fail => fail.push(format!("A_{k} {word}")),
                _ => inconclusive += 1,
            }
        }
    }
    outcome(
        fail.is_empty(),
        format!("{pass} pass, {inconclusive} inconclusive, {} fail {:?}", fail.len(), fail),
    )
}

fn exact_oracle() -> Outcome {
    let group = PermGroup::alternating(4).unwrap().bsgs();
    let word = Word::parse("abAB").unwrap();
    let exact = exact_prob_small(&group, &word, DEFAULT_EXACT_BUDGET).unwrap();
    let two_thirds = BigRational::new(BigInt::from(2), BigInt::from(3));
    let estimate = estimate_nontrivial_prob(&group, &word, 100_000, 0.99, SEED, 0).unwrap();
    let gap = (estimate.point - 2.0 / 3.0).abs();
    outcome(
        exact == two_thirds && gap <= 0.02,
        format!("exact {exact}, estimate {:.5} (gap {gap:.5})", estimate.point),
    )
}

fn witness_batch() -> Outcome {
    let action = PermAction::standard(GroupKind::Alternating, 14).unwrap();
    let words = enumerate_reduced(2, 5);
    let mut verified = 0;
    let mut problems = Vec::new();
    for word in &words {
        match certify_not_law(word, &action, &1) {
            Ok(cert) => {
                // re-check a deserialized copy so nothing is shared with the producer
                let text = serde_json::to_string(&cert).unwrap();
                let copy: Certificate<Permutation, usize> = serde_json::from_str(&text).unwrap();
                let distinct = copy.trace.trajectory.iter().collect::<HashSet<_>>().len() == word.len() + 1;
                let moved = Permutation::evaluate_word(word, &copy.trace.tuple, 14).unwrap().act(1).unwrap() != 1;
                match copy.check(&action) {
                    Ok(()) if distinct && moved => verified += 1,
                    Ok(()) => problems.push(format!("{word}: direct check failed")),
                    Err(e) => problems.push(format!("{word}: {e}")),
                }
            }
            Err(e) => problems.push(format!("{word}: {e}")),
        }
    }
    outcome(
        words.len() == 484 && verified == 484,
        format!("{verified}/{} certificates verified {:?}", words.len(), problems),
    )
}

fn thompson_witness() -> Outcome {
    let words = enumerate_reduced(2, 3);
    let identity = DyadicPLMap::identity();
    let mut good = 0;
    let mut problems = Vec::new();
    for word in &words {
        match certify_not_law(word, &ThompsonAction, &dy(1, 1)) {
            Ok(cert) if cert.value.breakpoints() != identity.breakpoints() => {
                match cert.check(&ThompsonAction) {
                    Ok(()) => good += 1,
                    Err(e) => problems.push(format!("{word}: {e}")),
                }
            }
            Ok(_) => problems.push(format!("{word}: identity map")),
            Err(e) => problems.push(format!("{word}: {e}")),
        }
    }
    outcome(
        words.len() == 52 && good == 52,
        format!("{good}/{} exact certificates with non-identity maps {:?}", words.len(), problems),
    )
}

fn rigid_stabilizer() -> Outcome {
    let gens = grigorchuk_generators();
    let v = VertexString::parse("1", 2).unwrap();
    let found = rist_search(&gens, &v, 1, 10).unwrap();
    let d = Word::parse("d").unwrap();
    if !found.contains(&d) {
        return outcome(false, format!("search returned {found:?}"));
    }
    let portrait = evaluate_generators(&gens, &d, 10).unwrap();
    let leaves: Vec<VertexString> = VertexString::level(2, 10).collect();
    let fixes_left = leaves
        .iter()
        .filter(|s| s.letters()[0] == 0)
        .all(|s| &portrait.act(s).unwrap() == s);
    let moves_right = leaves
        .iter()
        .filter(|s| s.letters()[0] == 1)
        .any(|s| &portrait.act(s).unwrap() != s);
    let names: Vec<String> = found.iter().map(|w| w.to_string()).collect();
    outcome(
        fixes_left && moves_right,
        format!("found {names:?}; fixes 0-subtree: {fixes_left}, moves 1-subtree: {moves_right}"),
    )
}

fn freeness_decay() -> Outcome {
    let table = freeness_experiment(2, &[3, 6, 9, 12], 2, 6, 200, 0.95, SEED, 0).unwrap();
    let (non_increasing, decreased) = decay_verdict(&table, 0.05);
    let fractions: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            let e = r.estimate.as_ref().unwrap();
            format!("D={}: {}/{}", r.params["depth"], e.successes, e.samples)
        })
        .collect();
    outcome(
        non_increasing && decreased,
        format!("{}; non-increasing: {non_increasing}, D=12 below D=3: {decreased}", fractions.join(", ")),
    )
}

fn alter_trend() -> Outcome {
    let word = Word::parse("abAB").unwrap();
    let table = alter_sweep(&word, &[8, 12, 16, 20, 24], 10_000, 0.99, SEED, 0).unwrap();
    let all_pass = table.rows.iter().all(|r| r.verdict == Verdict::Pass);
    let first = table.rows.first().unwrap().estimate.as_ref().unwrap();
    let last = table.rows.last().unwrap().estimate.as_ref().unwrap();
    let increased = significantly_greater(last, first, 0.05);
    let cells: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            let e = r.estimate.as_ref().unwrap();
            format!("k={}: {}/{} [{}]", r.params["k"], e.successes, e.samples, r.verdict)
        })
        .collect();
    outcome(
        all_pass && increased,
        format!("{}; k=24 above k=8: {increased}", cells.join(", ")),
    )
}

fn closure_order(gens: &[Permutation], degree: usize) -> usize {
    let mut seen: HashSet<Permutation> = HashSet::new();
    let mut frontier = vec![Permutation::identity(degree)];
    seen.insert(Permutation::identity(degree));
    while let Some(g) = frontier.pop() {
        for s in gens {
            let h = g.then(s);
            if seen.insert(h.clone()) {
                frontier.push(h);
            }
        }
    }
    seen.len()
}

fn infrastructure() -> Outcome {
    let mut rng = substream(SEED, 0);
    let mut points: Vec<usize> = (1..=7).collect();
    let mut order_mismatches = 0;
    for _ in 0..50 {
        let count = rng.random_range(1..=3);
        let gens: Vec<Permutation> = (0..count)
            .map(|_| {
                points.shuffle(&mut rng);
                Permutation::from_images(&points).unwrap()
            })
            .collect();
        let chain = PermGroup::new(7, gens.clone()).unwrap().bsgs();
        if chain.order_u128() != Some(closure_order(&gens, 7) as u128) {
            order_mismatches += 1;
        }
    }

    let a4 = PermGroup::alternating(4).unwrap().bsgs();
    let index: HashMap<Permutation, usize> = a4.elements().into_iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut counts = vec![0u64; index.len()];
    let mut rng = substream(SEED, 1);
    for _ in 0..100_000 {
        counts[index[&a4.uniform_element(&mut rng)]] += 1;
    }
    let (stat, p) = chi_square_uniform(&counts);
    let uniform_ok = counts.len() == 12 && p >= 0.01;

    let word = Word::parse("abAB").unwrap();
    let a6 = PermGroup::alternating(6).unwrap().bsgs();
    let e1 = estimate_nontrivial_prob(&a6, &word, 5_000, 0.99, SEED, 1).unwrap();
    let e8 = estimate_nontrivial_prob(&a6, &word, 5_000, 0.99, SEED, 8).unwrap();
    let s1 = alter_sweep(&word, &[6, 9], 2_000, 0.99, SEED, 1).unwrap();
    let s8 = alter_sweep(&word, &[6, 9], 2_000, 0.99, SEED, 8).unwrap();
    let f1 = freeness_experiment(2, &[3, 5], 2, 4, 100, 0.95, SEED, 1).unwrap();
    let f8 = freeness_experiment(2, &[3, 5], 2, 4, 100, 0.95, SEED, 8).unwrap();
    let identical = serde_json::to_string(&e1).unwrap() == serde_json::to_string(&e8).unwrap()
        && s1.to_csv() == s8.to_csv()
        && s1.to_json() == s8.to_json()
        && f1.to_csv() == f8.to_csv()
        && f1.to_json() == f8.to_json();

    outcome(
        order_mismatches == 0 && uniform_ok && identical,
        format!(
            "order mismatches {order_mismatches}/50; A_4 chi-square {stat:.2} (p = {p:.3}); 1 vs 8 workers identical: {identical}"
        ),
    )
}

fn main() -> ExitCode {
    type Check = (&'static str, Option<Duration>, fn() -> Outcome);
    let checks: [Check; 8] = [
        ("1 separation bound over A_8..A_16", Some(Duration::from_secs(60)), separation_bound),
        ("2 exact oracle A_4 abAB", Some(Duration::from_secs(5)), exact_oracle),
        ("3 witness batch on A_14", Some(Duration::from_secs(60)), witness_batch),
        ("4 Thompson witnesses", Some(Duration::from_secs(30)), thompson_witness),
        ("5 Grigorchuk rigid stabilizer", Some(Duration::from_secs(10)), rigid_stabilizer),
        ("6 freeness decay", Some(Duration::from_secs(120)), freeness_decay),
        ("7 alternating trend", Some(Duration::from_secs(60)), alter_trend),
        ("8 infrastructure invariants", None, infrastructure),
    ];
    let mut failures = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = result.ok && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "acceptance {name}: {} in {:.2}s ({}): {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.map_or("no time limit".to_string(), |l| format!("limit {}s", l.as_secs())),
            result.detail
        );
    }
    println!("acceptance summary: {}/8 passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
