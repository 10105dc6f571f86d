//! Engine integration tests: every evaluation path against the oracle
//! and the run enumerator on the running example and random instances.

mod common;

use rand::rngs::StdRng;
use rand::SeedableRng;

use cep_core::cea::{enumerate_runs, io_determinize};
use cep_core::oracle::{apply_selection, oracle_eval, OutputSet};
use cep_core::parser::parse_formula;
use cep_core::pipeline::compile_formula;
use cep_core::runtime::{log_output_set, run_query, Engine};
use cep_core::Strategy;

use common::*;

fn per_position(expected: &OutputSet, n: usize) -> Vec<cep_core::ComplexEvent> {
    expected.iter().filter(|c| c.max_pos() == n).cloned().collect()
}

/// Runs one (formula, strategy) instance through every engine path and
/// compares per-position outputs with the oracle.
fn check_instance(text: &str, strategy: Option<Strategy>, stream: &cep_core::StreamPrefix) {
    let schema = stream.schema().clone();
    let f = parse_formula(text, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    assert!(compiled.strategies.is_empty(), "wrap strategies via the parameter");
    let oracle_all = oracle_eval(&f, stream).unwrap();
    let expected: OutputSet = match strategy {
        None => oracle_all,
        Some(s) => apply_selection(s, &oracle_all),
    };

    // path 1: strategy engine (or det/ndet dispatch) on the raw automaton
    let mut engine = Engine::new(&compiled.automaton, schema.clone(), strategy);
    let log = run_query(&mut engine, stream);
    for (pos, outs) in &log {
        let want = per_position(&expected, *pos);
        let got: OutputSet = outs.iter().cloned().collect();
        assert_eq!(got.len(), outs.len(), "duplicate outputs at {pos} for {text}");
        assert_eq!(got, want.into_iter().collect(), "{strategy:?} engine at {pos} for {text}");
    }
    assert_eq!(log_output_set(&log), expected, "{strategy:?} engine union for {text}");

    // path 2: compile the strategy, determinize, run the det engine
    let strat_auto = match strategy {
        None => io_determinize(&compiled.automaton),
        Some(s) => io_determinize(&cep_core::pipeline::compile_strategy(s, &compiled.automaton)),
    };
    let mut det = Engine::new(&strat_auto, schema.clone(), None);
    let det_log = run_query(&mut det, stream);
    assert_eq!(log_output_set(&det_log), expected, "compiled+det path for {text}");

    // path 3: the compiled strategy automaton evaluated by brute force
    for n in 0..stream.len() {
        assert_eq!(
            enumerate_runs(&strat_auto, stream, n),
            per_position(&expected, n).into_iter().collect(),
            "enumerate_runs at {n} for {text}"
        );
    }

    // path 4: the on-the-fly subset engine on the raw automaton (no strategy)
    if strategy.is_none() {
        let mut ndet = Engine::new_naive(&compiled.automaton, schema.clone());
        let naive_log = run_query(&mut ndet, stream);
        assert_eq!(log_output_set(&naive_log), expected, "naive path for {text}");
    }
}

#[test]
fn running_example_all_paths() {
    let schema = sensors();
    let s = fig1(&schema);
    for strategy in [None, Some(Strategy::Strict), Some(Strategy::Nxt), Some(Strategy::Last), Some(Strategy::Max)] {
        check_instance(PHI1, strategy, &s);
        check_instance(PHI2, strategy, &s);
        check_instance(PHI3, strategy, &s);
    }
}

#[test]
fn running_example_expected_sets() {
    let schema = sensors();
    let s = fig1(&schema);
    let f = parse_formula(PHI1, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema.clone(), None);
    let log = run_query(&mut engine, &s);
    let all = log_output_set(&log);
    assert_eq!(all, [ce(&[1, 2]), ce(&[1, 8]), ce(&[5, 8])].into_iter().collect());
    // selection strategies on the same pipeline
    let mut nxt = Engine::new(&compiled.automaton, schema.clone(), Some(Strategy::Nxt));
    let nxt_union = log_output_set(&run_query(&mut nxt, &s));
    assert_eq!(nxt_union, [ce(&[1, 2]), ce(&[1, 8])].into_iter().collect());
    let mut last = Engine::new(&compiled.automaton, schema.clone(), Some(Strategy::Last));
    let last_union = log_output_set(&run_query(&mut last, &s));
    assert_eq!(last_union, [ce(&[1, 2]), ce(&[5, 8])].into_iter().collect());
    let mut strict = Engine::new(&compiled.automaton, schema.clone(), Some(Strategy::Strict));
    let strict_union = log_output_set(&run_query(&mut strict, &s));
    assert_eq!(strict_union, [ce(&[1, 2])].into_iter().collect());
}

#[test]
fn select_wrappers_compile_through_the_pipeline() {
    let schema = sensors();
    let s = fig1(&schema);
    let f = parse_formula(&format!("MAX({PHI3})"), &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    assert_eq!(compiled.strategies, vec![Strategy::Max]);
    let (a, strategy) = compiled.engine_inputs();
    let mut engine = Engine::new(&a, schema.clone(), strategy);
    let union = log_output_set(&run_query(&mut engine, &s));
    assert_eq!(union, [ce(&[3, 4, 6, 7])].into_iter().collect());
}

#[test]
fn empty_stream_logs_nothing() {
    let schema = sensors();
    let empty = cep_core::StreamPrefix::new(schema.clone(), vec![]);
    let f = parse_formula(PHI1, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema, None);
    assert!(run_query(&mut engine, &empty).is_empty());
}

#[test]
fn q4_style_iteration_outputs() {
    let schema = cep_core::load_schema("A(); B(); C(); D(); E()").unwrap();
    let text = "(A AS x)+ ; B AS y";
    let stream = cep_core::load_stream(
        "{\"type\":\"A\"}\n{\"type\":\"A\"}\n{\"type\":\"B\"}\n".as_bytes(),
        &schema,
        cep_core::StreamFormat::Jsonl,
    )
    .unwrap();
    let f = parse_formula(text, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema.clone(), None);
    let log = run_query(&mut engine, &stream);
    assert_eq!(log.len(), 1);
    let (pos, outs) = &log[0];
    assert_eq!(*pos, 2);
    let got: OutputSet = outs.iter().cloned().collect();
    assert_eq!(
        got,
        [ce(&[0, 2]), ce(&[1, 2]), ce(&[0, 1, 2])].into_iter().collect()
    );
}

#[test]
fn snapshot_enumeration_survives_later_steps() {
    let schema = sensors();
    let s = fig1(&schema);
    let f = parse_formula(PHI1, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema, None);
    let mut snap = None;
    for (pos, t) in s.iter() {
        engine.step(t);
        if pos == 2 {
            snap = Some(engine.snapshot());
        }
    }
    let snap = snap.unwrap();
    let outs: OutputSet = engine.enumerate_snapshot(&snap).collect();
    assert_eq!(outs, [ce(&[1, 2])].into_iter().collect());
}

#[test]
fn consumption_policy_discards_partials() {
    let schema = cep_core::load_schema("A(); B(); C(); D(); E()").unwrap();
    let stream = cep_core::load_stream(
        "{\"type\":\"A\"}\n{\"type\":\"B\"}\n{\"type\":\"A\"}\n{\"type\":\"B\"}\n".as_bytes(),
        &schema,
        cep_core::StreamFormat::Jsonl,
    )
    .unwrap();
    let f = parse_formula("A AS x ; B AS y", &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema.clone(), None);
    engine.consumption_policy = true;
    let log = run_query(&mut engine, &stream);
    // after {0,1} fires, the partial A at 0 is discarded: {0,3} never appears
    let union = log_output_set(&log);
    assert_eq!(union, [ce(&[0, 1]), ce(&[2, 3])].into_iter().collect());
}

#[test]
fn compaction_preserves_outputs() {
    let schema = sensors();
    let s = fig1(&schema);
    let f = parse_formula(PHI1, &schema).unwrap();
    let compiled = compile_formula(&f).unwrap();
    let mut engine = Engine::new(&compiled.automaton, schema.clone(), None);
    let mut collected = OutputSet::new();
    for (_, t) in s.iter() {
        engine.step(t);
        engine.compact();
        collected.extend(engine.enumerate());
    }
    assert_eq!(
        collected,
        [ce(&[1, 2]), ce(&[1, 8]), ce(&[5, 8])].into_iter().collect()
    );
}

#[test]
fn randomized_cross_check() {
    let schema = sensors();
    let mut rng = StdRng::seed_from_u64(0xCEA);
    for round in 0..60 {
        let f = random_formula(&mut rng, &schema, 3);
        let stream = random_stream(&mut rng, &schema, 6);
        let Ok(compiled) = compile_formula(&f) else { continue };
        let oracle_all = oracle_eval(&f, &stream).unwrap();
        for strategy in [None, Some(Strategy::Strict), Some(Strategy::Nxt), Some(Strategy::Last), Some(Strategy::Max)] {
            let expected: OutputSet = match strategy {
                None => oracle_all.clone(),
                Some(sel) => apply_selection(sel, &oracle_all),
            };
            let mut engine = Engine::new(&compiled.automaton, schema.clone(), strategy);
            let union = log_output_set(&run_query(&mut engine, &stream));
            assert_eq!(union, expected, "round {round}: {f} with {strategy:?}");
        }
    }
}

/// Engines must realize the run semantics for arbitrary automata too,
/// including ones without initial skip loops (a dead initial list must
/// stay dead: runs consume the whole prefix).
#[test]
fn engines_match_run_semantics_on_random_automata() {
    let schema = sensors();
    let mut rng = StdRng::seed_from_u64(0xA11A);
    for round in 0..400 {
        let a = random_automaton(&mut rng, &schema);
        let len = rand::Rng::gen_range(&mut rng, 1..=6);
        let stream = random_stream(&mut rng, &schema, len);
        // the full output set, by brute force over runs
        let mut all = OutputSet::new();
        for n in 0..stream.len() {
            all.extend(enumerate_runs(&a, &stream, n));
        }
        // plain paths: subsets on the fly, and determinize + Algorithm 1
        let mut ndet = Engine::new_on_the_fly(&a, schema.clone());
        for (pos, t) in stream.iter() {
            ndet.step(t);
            let got: OutputSet = ndet.enumerate().collect();
            assert_eq!(got, enumerate_runs(&a, &stream, pos), "round {round} ndet at {pos}");
        }
        let det_a = io_determinize(&a);
        let mut det = Engine::new(&det_a, schema.clone(), None);
        for (pos, t) in stream.iter() {
            det.step(t);
            let got: OutputSet = det.enumerate().collect();
            assert_eq!(got, enumerate_runs(&a, &stream, pos), "round {round} det at {pos}");
        }
        // strategy engines and compiled strategy automata against
        // selection over the brute-force set
        for strategy in [Strategy::Strict, Strategy::Nxt, Strategy::Last, Strategy::Max] {
            let expected = apply_selection(strategy, &all);
            let mut engine = Engine::new(&a, schema.clone(), Some(strategy));
            for (pos, t) in stream.iter() {
                engine.step(t);
                let got: OutputSet = engine.enumerate().collect();
                let want: OutputSet =
                    expected.iter().filter(|c| c.max_pos() == pos).cloned().collect();
                assert_eq!(got, want, "round {round} {strategy:?} at {pos}");
            }
            let compiled = cep_core::pipeline::compile_strategy(strategy, &a);
            for pos in 0..stream.len() {
                let got = enumerate_runs(&compiled, &stream, pos);
                let want: OutputSet =
                    expected.iter().filter(|c| c.max_pos() == pos).cloned().collect();
                assert_eq!(got, want, "round {round} compiled {strategy:?} at {pos}");
            }
        }
    }
}
