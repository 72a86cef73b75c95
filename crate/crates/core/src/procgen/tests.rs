use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pool(n: usize) -> Vec<Symbol> {
    SYMBOL_POOL[..n].iter().map(|&c| Symbol::new(c).unwrap()).collect()
}

fn frequency(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

#[test]
fn successor_draw_frequencies() {
    let mut r = rng(1);
    let n = 100_000;
    let mut seen = [0usize; 4];
    for _ in 0..n {
        seen[draw_successor_count(&mut r)] += 1;
    }
    assert!((frequency(seen[1], n) - 0.5).abs() < 0.02);
    assert!((frequency(seen[2], n) - 0.4).abs() < 0.02);
    assert!((frequency(seen[3], n) - 0.1).abs() < 0.02);
}

#[test]
fn first_draws_at_s20() {
    let mut r = rng(2);
    let n = 10_000;
    let mut seen = [0usize; 4];
    for _ in 0..n {
        seen[assign_successor_counts(20, &mut r)[0]] += 1;
    }
    for (k, p) in [(1, 0.5), (2, 0.4), (3, 0.1)] {
        assert!((frequency(seen[k], n) - p).abs() < 0.02, "{k}: {}", frequency(seen[k], n));
    }
}

#[test]
fn successor_counts_sum_and_are_stochastic() {
    let mut r = rng(3);
    let mut repaired = 0;
    for s in 3..=12 {
        for _ in 0..2000 {
            let c = assign_successor_counts(s, &mut r);
            assert_eq!(c.iter().sum::<usize>(), s);
            assert!(c.iter().all(|&k| (1..=3).contains(&k)) || c.iter().any(|&k| k == 2));
            assert!(c.iter().any(|&k| k >= 2));
            if s == 3 && c == [2, 1] || c == [1, 2] {
                repaired += 1;
            }
        }
    }
    assert!(repaired > 0);
}

#[test]
fn probability_lists() {
    let mut r = rng(4);
    assert_eq!(assign_probabilities::<f64, _>(1, 100, &mut r), vec![1.0]);
    for _ in 0..10_000 {
        let n = r.gen_range(1..=3);
        let ps: Vec<f64> = assign_probabilities(n, 100, &mut r);
        assert_eq!(ps.len(), n);
        assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(ps.iter().all(|&p| p >= 0.01 - 1e-12 && p <= 1.0));
        if n == 2 {
            assert!(ps[0] >= 0.01 - 1e-12 && ps[0] <= 0.99 + 1e-12);
        }
    }
    // three successors can take the extremes 98/1/1
    let mut extremes = BTreeSet::new();
    for _ in 0..20_000 {
        let ps: Vec<f64> = assign_probabilities(3, 100, &mut r);
        extremes.insert((ps[0] * 100.0).round() as u32);
    }
    assert!(extremes.contains(&98) && extremes.contains(&1));
}

#[test]
fn finer_granularity() {
    let mut r = rng(5);
    for _ in 0..1000 {
        let ps: Vec<f64> = assign_probabilities(3, 10_000, &mut r);
        assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(ps.iter().all(|&p| p >= 1e-4 - 1e-15));
    }
}

#[test]
fn length_distribution() {
    let mut r = rng(6);
    let n = 100_000;
    let mut seen = [0usize; 11];
    for _ in 0..n {
        let l = sample_successor_length(&mut r);
        assert!((1..=10).contains(&l));
        seen[l] += 1;
    }
    for l in 3..=5 {
        assert!((frequency(seen[l], n) - 0.20).abs() < 0.005, "{l}");
    }
    for (l, p) in [(8, 0.02), (9, 0.01), (10, 0.01)] {
        assert!((frequency(seen[l], n) - p).abs() < 0.003, "{l}");
    }
}

#[test]
fn successor_words() {
    let mut r = rng(7);
    let nine = pool(9);
    for _ in 0..100 {
        assert_eq!(sample_successor_word(1, &nine, &mut r).len(), 1);
        let w = sample_successor_word(7, &pool(2), &mut r);
        assert_eq!(w.len(), 7);
        assert!(w.iter().collect::<BTreeSet<_>>().len() <= 2);
    }
    let n = 10_000;
    let mut seen = [0usize; 6];
    for _ in 0..n {
        let w = sample_successor_word(10, &nine, &mut r);
        seen[w.iter().collect::<BTreeSet<_>>().len()] += 1;
    }
    for &s in &seen[1..=5] {
        assert!((frequency(s, n) - 0.2).abs() < 0.02);
    }
}

fn prefix_free<T: Real>(system: &S0LSystem<T>) -> bool {
    system.alphabet().iter().all(|&a| {
        let ids = system.productions_for(a);
        ids.iter().all(|&i| {
            ids.iter().all(|&j| {
                i == j || !system.productions()[i].successor.starts_with(&system.productions()[j].successor)
            })
        })
    })
}

#[test]
fn generated_systems_are_valid() {
    for seed in 0..300 {
        let s = 3 + (seed as usize % 8);
        let mut config = GeneratorConfig::new(s, seed);
        config.forbid_prefixes = seed % 2 == 0;
        let system = match generate_system::<f64, _>(&config, &mut rng(seed)) {
            Ok(g) => g,
            Err(GenerationError::ResampleBudget { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(system.validate().is_ok(), "{}", system.validate());
        assert_eq!(system.productions().len(), s);
        assert!(!system.is_deterministic());
        let expected: BTreeSet<Symbol> = pool(system.alphabet().len()).into_iter().collect();
        assert_eq!(system.alphabet(), &expected);
        if config.forbid_prefixes {
            assert!(prefix_free(&system));
        }
        assert_eq!(system.axioms().len(), 1);
        assert_eq!(system.axioms()[0].probability, 1.0);
    }
}

#[test]
fn generation_is_seeded() {
    let config = GeneratorConfig::new(6, 42);
    let a = generate_system::<f64, _>(&config, &mut rng(1)).unwrap();
    let b = generate_system::<f64, _>(&config, &mut rng(1)).unwrap();
    assert_eq!(a, b);
    let c = generate_case::<f64>(&config, "x").unwrap();
    let d = generate_case::<f64>(&config, "x").unwrap();
    assert_eq!(c, d);
}

#[test]
fn cases_replay_and_are_distinct() {
    for seed in 0..40 {
        let mut config = GeneratorConfig::new(4, seed);
        config.sequences = 3;
        config.words = 4;
        let case = match generate_case::<f64>(&config, "c") {
            Ok(c) => c,
            Err(GenerationError::DuplicateSequences) => continue,
            Err(e) => panic!("{e}"),
        };
        assert_eq!(case.inputs.len(), 3);
        assert_eq!(case.inputs.words_per_sequence(), 4);
        let mut total = 0.0;
        for (d, seq) in case.derivations.iter().zip(case.inputs.sequences()) {
            assert_eq!(d.trace(), seq.as_slice());
            d.check(&case.system).unwrap();
            total += derivation_log_probability(&case.system, d, false).unwrap();
        }
        assert_eq!(total, case.log_probability);
        let seqs = case.inputs.sequences();
        assert!(seqs[0] != seqs[1] && seqs[1] != seqs[2] && seqs[0] != seqs[2]);

        // fewer sequences under the same seed is a prefix
        let one = case.with_sequences(1, "c1").unwrap();
        config.sequences = 1;
        let direct = generate_case::<f64>(&config, "c1").unwrap();
        assert_eq!(one, direct);
    }
}

#[test]
fn deterministic_systems_exhaust_duplicates() {
    // a system that can only ever produce one sequence
    let a = Symbol::new('A').unwrap();
    let g: S0LSystem<f64> = S0LSystem::new(
        [a],
        vec![Axiom {
            word: "A".parse().unwrap(),
            probability: 1.0,
        }],
        vec![
            Production::new(a, "A".parse().unwrap(), 1.0),
        ],
    );
    let mut r = rng(0);
    let first = derive_sequence(&g, 2, &mut r).unwrap();
    let second = derive_sequence(&g, 2, &mut r).unwrap();
    assert_eq!(first.trace(), second.trace());
}

#[test]
fn config_checks() {
    assert!(GeneratorConfig::new(2, 0).validate().is_err());
    let mut c = GeneratorConfig::new(3, 0);
    c.words = 1;
    assert!(c.validate().is_err());
    c.words = 2;
    c.sequences = 0;
    assert!(c.validate().is_err());
}

#[test]
fn dataset_sizes_at_desk_scale() {
    let pl = generate_dataset::<f64>(DatasetKind::PrefixFree, 0.1, 9, 3).unwrap();
    assert_eq!(pl.len(), 8 * 6);
    assert!(pl.iter().all(|c| prefix_free(&c.system) && c.inputs.len() == 1));
    let s_values: BTreeSet<usize> = pl.iter().map(|c| c.successors).collect();
    assert_eq!(s_values, (3..=10).collect());

    let npl = generate_dataset::<f64>(DatasetKind::PrefixAllowed, 0.1, 9, 3).unwrap();
    assert_eq!(npl.len(), 7 * 6);

    let vm = generate_dataset::<f64>(DatasetKind::VaryingM, 0.1, 9, 3).unwrap();
    assert_eq!(vm.len(), 6 * 10);
    for chunk in vm.chunks(10) {
        for (k, c) in chunk.iter().enumerate() {
            assert_eq!(c.inputs.len(), k + 1);
            assert_eq!(c.system, chunk[0].system);
            assert!((3..=9).contains(&c.successors));
        }
    }
    let ids: BTreeSet<&str> = vm.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids.len(), vm.len());

    assert_eq!(generate_dataset::<f64>(DatasetKind::VaryingM, 0.1, 9, 3).unwrap(), vm);
    assert_ne!(generate_dataset::<f64>(DatasetKind::VaryingM, 0.1, 10, 3).unwrap(), vm);
}

#[test]
fn full_scale_counts() {
    assert_eq!(systems_per_group(1.0), 60);
    assert_eq!(systems_per_group(0.1), 6);
    assert_eq!(systems_per_group(0.001), 1);
    assert!(generate_dataset::<f64>(DatasetKind::PrefixFree, 0.0, 1, 3).is_err());
}

#[test]
fn dataset_kind_names() {
    for k in [DatasetKind::PrefixFree, DatasetKind::PrefixAllowed, DatasetKind::VaryingM] {
        assert_eq!(k.to_string().parse::<DatasetKind>().unwrap(), k);
    }
    assert!("ds-x".parse::<DatasetKind>().is_err());
}

#[test]
fn manifest_round_trip() {
    let cases = generate_dataset::<f64>(DatasetKind::VaryingM, 0.02, 3, 3).unwrap();
    let records: Vec<ManifestRecord> = cases
        .iter()
        .map(|c| ManifestRecord::for_case(c, format!("{}.grammar", c.id), format!("{}.seq", c.id)))
        .collect();
    let text = render_manifest(&records);
    assert!(text.starts_with(&format!("#{MANIFEST_HEADER}\n")));
    assert_eq!(parse_manifest(&text).unwrap(), records);

    let bad = "#header\nid\t3\t1\t5\tx\ta\tb\t-1.0\n";
    let e = parse_manifest(bad).unwrap_err();
    assert_eq!(e.line, 2);
    assert!(e.message.contains("seed"));
    assert_eq!(parse_manifest("a\tb\n").unwrap_err().line, 1);
}
