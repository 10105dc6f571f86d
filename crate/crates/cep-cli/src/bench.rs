//! Benchmark harness: seeded stream generation, the stress / throughput /
//! consumption-policy modes, and the combinatorial output counter that
//! independently predicts stress output counts.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cep_core::event::{EventTuple, StreamPrefix};
use cep_core::formula::Strategy;
use cep_core::pipeline::compile_formula;
use cep_core::runtime::Engine;
use cep_core::schema::Schema;

use crate::queries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    StressTriggerLast,
    Throughput,
    ConsumptionPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dist {
    Uniform,
    /// weights 4:3:2:1:2 over A..E, normalized to probabilities
    Weighted,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub query_id: String,
    pub query_text: String,
    pub len: usize,
    pub dist: Dist,
    pub mode: BenchMode,
    pub strategy: Option<Strategy>,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.len == 0 {
            bail!("stream length must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub query: String,
    pub mode: String,
    pub strategy: String,
    pub engine: String,
    pub len: usize,
    pub seed: u64,
    pub events_processed: usize,
    pub output_count: u64,
    /// counter prediction for the stress modes of the bundled queries
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_output_count: Option<u128>,
    pub processing_secs: f64,
    pub enumeration_secs: f64,
    pub throughput_events_per_sec: f64,
    pub engine_nodes: usize,
    pub engine_memory_bytes: usize,
    /// median per-event step latency per decile of the stream, in ns
    pub decile_step_latency_ns: Vec<u64>,
}

fn type_weights(dist: Dist, n_types: usize) -> Vec<f64> {
    match dist {
        Dist::Uniform => vec![1.0; n_types],
        Dist::Weighted => {
            // the throughput experiment's skewed distribution, as weights
            let w = [4.0, 3.0, 2.0, 1.0, 2.0];
            (0..n_types).map(|i| w[i % w.len()]).collect()
        }
    }
}

/// Deterministic stream generation under the seed. `withhold` removes a
/// type from everything but the final position, which instead is exactly
/// that type.
pub fn gen_stream(
    schema: &Arc<Schema>,
    len: usize,
    dist: Dist,
    seed: u64,
    withhold: Option<&str>,
) -> Result<StreamPrefix> {
    if len == 0 {
        bail!("stream length must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = schema.relations().len();
    let mut weights = type_weights(dist, n);
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let trigger = match withhold {
        Some(name) => {
            let id = schema
                .rel_id(name)
                .with_context(|| format!("unknown trigger type `{name}`"))?;
            weights[id as usize] = 0.0;
            Some(id)
        }
        None => None,
    };
    let index = WeightedIndex::new(&weights).context("type distribution")?;
    let mut events = Vec::with_capacity(len);
    let body_len = if trigger.is_some() { len - 1 } else { len };
    for _ in 0..body_len {
        let rel = index.sample(&mut rng) as u32;
        events.push(EventTuple::new(schema, rel, vec![]).expect("zero-attribute relations"));
    }
    if let Some(rel) = trigger {
        events.push(EventTuple::new(schema, rel, vec![]).expect("zero-attribute relations"));
    }
    Ok(StreamPrefix::new(schema.clone(), events))
}

/// Independent combinatorial counter: the number of complex events the
/// bundled queries produce on a concrete stream, summed over every end
/// position. `None` if the count overflows or the query is not bundled.
pub fn count_outputs(query_id: &str, s: &StreamPrefix) -> Option<u128> {
    let schema = s.schema();
    let rel = |name: &str| schema.rel_id(name);
    let (a, b, c, d) = (rel("A")?, rel("B")?, rel("C")?, rel("D")?);
    let types: Vec<u32> = s.iter().map(|(_, t)| t.rel).collect();
    let pow2 = |n: u32| -> Option<u128> { 1u128.checked_shl(n) };
    match query_id.to_ascii_uppercase().as_str() {
        "Q1" => {
            // positions i<j<k typed A,B,C
            let (mut count, mut ab, mut a_cnt) = (0u128, 0u128, 0u128);
            for &t in &types {
                if t == c {
                    count = count.checked_add(ab)?;
                }
                if t == b {
                    ab = ab.checked_add(a_cnt)?;
                }
                if t == a {
                    a_cnt += 1;
                }
            }
            Some(count)
        }
        "Q2" => {
            let (mut count, mut abc, mut ab, mut a_cnt) = (0u128, 0u128, 0u128, 0u128);
            for &t in &types {
                if t == d {
                    count = count.checked_add(abc)?;
                }
                if t == c {
                    abc = abc.checked_add(ab)?;
                }
                if t == b {
                    ab = ab.checked_add(a_cnt)?;
                }
                if t == a {
                    a_cnt += 1;
                }
            }
            Some(count)
        }
        "Q3" => {
            let (mut count, mut abc_cnt) = (0u128, 0u128);
            for &t in &types {
                if t == d {
                    count = count.checked_add(abc_cnt)?;
                }
                if t == a || t == b || t == c {
                    abc_cnt += 1;
                }
            }
            Some(count)
        }
        "Q4" => {
            // nonempty subsets of the A positions before each B
            let (mut count, mut a_cnt) = (0u128, 0u32);
            for &t in &types {
                if t == b {
                    count = count.checked_add(pow2(a_cnt)?.checked_sub(1)?)?;
                }
                if t == a {
                    a_cnt += 1;
                }
            }
            Some(count)
        }
        "Q5" => {
            // per C at k: sum over B at j<k of (2^{A<j}-1) * 2^{B in (j,k)}
            let mut count = 0u128;
            for (k, &tk) in types.iter().enumerate() {
                if tk != c {
                    continue;
                }
                let mut a_before = 0u32;
                // walk j ascending, tracking B counts in (j, k)
                let b_between: Vec<u32> = {
                    let mut suffix = vec![0u32; k + 1];
                    let mut cnt = 0;
                    for j in (0..k).rev() {
                        suffix[j + 1] = cnt;
                        if types[j] == b {
                            cnt += 1;
                        }
                    }
                    suffix[0] = cnt;
                    suffix
                };
                for (j, &tj) in types.iter().enumerate().take(k) {
                    if tj == b {
                        let ways = pow2(a_before)?
                            .checked_sub(1)?
                            .checked_mul(pow2(b_between[j + 1])?)?;
                        count = count.checked_add(ways)?;
                    }
                    if tj == a {
                        a_before += 1;
                    }
                }
            }
            Some(count)
        }
        "Q6" => {
            // blocks (A+;B) chained, then C; f[j] = ways for a chain ending
            // at B position j
            let b_positions: Vec<usize> = types
                .iter()
                .enumerate()
                .filter(|(_, t)| **t == b)
                .map(|(i, _)| i)
                .collect();
            let a_prefix: Vec<u32> = {
                let mut out = Vec::with_capacity(types.len() + 1);
                let mut cnt = 0;
                out.push(0);
                for &t in &types {
                    if t == a {
                        cnt += 1;
                    }
                    out.push(cnt);
                }
                out
            };
            let mut f = vec![0u128; b_positions.len()];
            for (bi, &j) in b_positions.iter().enumerate() {
                // fresh chain: nonempty A set strictly before j
                let mut ways = pow2(a_prefix[j])?.checked_sub(1)?;
                for (pi, &p) in b_positions.iter().enumerate().take(bi) {
                    let between = a_prefix[j] - a_prefix[p + 1];
                    let ext = f[pi].checked_mul(pow2(between)?.checked_sub(1)?)?;
                    ways = ways.checked_add(ext)?;
                }
                f[bi] = ways;
            }
            let mut count = 0u128;
            for (k, &tk) in types.iter().enumerate() {
                if tk != c {
                    continue;
                }
                for (bi, &j) in b_positions.iter().enumerate() {
                    if j < k {
                        count = count.checked_add(f[bi])?;
                    }
                }
            }
            Some(count)
        }
        _ => None,
    }
}

pub fn median(mut v: Vec<u64>) -> u64 {
    if v.is_empty() {
        return 0;
    }
    let mid = v.len() / 2;
    *v.select_nth_unstable(mid).1
}

/// Runs one benchmark configuration on the selected engine.
pub fn run_bench(config: &BenchConfig, schema: &Arc<Schema>, engine_kind: &str) -> Result<BenchReport> {
    config.validate()?;
    let formula = cep_core::parse_formula(&config.query_text, schema)
        .map_err(|e| anyhow::anyhow!("query: {e}"))?;
    let compiled = compile_formula(&formula).map_err(|e| anyhow::anyhow!("compile: {e}"))?;

    let withheld;
    let stream = match config.mode {
        BenchMode::StressTriggerLast => {
            let trigger = queries::trigger_type(&config.query_id)
                .context("stress mode needs a bundled query with a known trigger type")?;
            withheld = Some(trigger);
            gen_stream(schema, config.len, config.dist, config.seed, Some(trigger))?
        }
        BenchMode::Throughput | BenchMode::ConsumptionPolicy => {
            withheld = None;
            gen_stream(schema, config.len, config.dist, config.seed, None)?
        }
    };
    let _ = withheld;

    let mut engine = match (engine_kind, config.strategy) {
        ("auto", strategy) => Engine::new(&compiled.automaton, schema.clone(), strategy),
        ("det", strategy) => {
            let a = match strategy {
                None => cep_core::cea::io_determinize(&compiled.automaton),
                Some(s) => cep_core::cea::io_determinize(&cep_core::pipeline::compile_strategy(
                    s,
                    &compiled.automaton,
                )),
            };
            Engine::new(&a, schema.clone(), None)
        }
        ("ndet", None) => Engine::new_on_the_fly(&compiled.automaton, schema.clone()),
        ("ndet", Some(s)) => Engine::new_on_the_fly(
            &cep_core::pipeline::compile_strategy(s, &compiled.automaton),
            schema.clone(),
        ),
        ("naive", None) => Engine::new_naive(&compiled.automaton, schema.clone()),
        ("naive", Some(s)) => Engine::new_naive(
            &cep_core::pipeline::compile_strategy(s, &compiled.automaton),
            schema.clone(),
        ),
        (other, _) => bail!("unsupported bench engine `{other}`"),
    };
    engine.consumption_policy = config.mode == BenchMode::ConsumptionPolicy;

    let enumerate_each_position = config.mode != BenchMode::StressTriggerLast;
    let mut output_count: u64 = 0;
    let mut latencies: Vec<u64> = Vec::with_capacity(stream.len());
    let started = Instant::now();
    for (_, t) in stream.iter() {
        let t0 = Instant::now();
        engine.step(t);
        latencies.push(t0.elapsed().as_nanos() as u64);
        if enumerate_each_position {
            let n = match engine.naive_outputs() {
                Some(outs) => outs.len() as u64,
                None => engine.enumerate().count() as u64,
            };
            output_count += n;
            if n > 0 && engine.consumption_policy {
                engine.reset_to_initial();
            }
        }
    }
    let processing_secs = started.elapsed().as_secs_f64();

    let mut enumeration_secs = 0.0;
    if !enumerate_each_position {
        let t0 = Instant::now();
        output_count = match engine.naive_outputs() {
            Some(outs) => outs.len() as u64,
            None => engine.enumerate().count() as u64,
        };
        enumeration_secs = t0.elapsed().as_secs_f64();
    }

    let expected = if config.mode == BenchMode::StressTriggerLast {
        count_outputs(&config.query_id, &stream)
    } else {
        None
    };

    let deciles: Vec<u64> = (0..10)
        .map(|d| {
            let lo = latencies.len() * d / 10;
            let hi = latencies.len() * (d + 1) / 10;
            median(latencies[lo..hi].to_vec())
        })
        .collect();

    Ok(BenchReport {
        query: config.query_id.clone(),
        mode: match config.mode {
            BenchMode::StressTriggerLast => "stress-trigger-last".into(),
            BenchMode::Throughput => "throughput".into(),
            BenchMode::ConsumptionPolicy => "consumption-policy".into(),
        },
        strategy: config.strategy.map_or("none".into(), |s| s.name().to_ascii_lowercase()),
        engine: engine_kind.into(),
        len: config.len,
        seed: config.seed,
        events_processed: stream.len(),
        output_count,
        expected_output_count: expected,
        processing_secs,
        enumeration_secs,
        throughput_events_per_sec: stream.len() as f64 / processing_secs.max(1e-9),
        engine_nodes: engine.node_count(),
        engine_memory_bytes: engine.memory_bytes(),
        decile_step_latency_ns: deciles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cep_core::oracle::oracle_eval;

    fn schema() -> Arc<Schema> {
        cep_core::load_schema(queries::BENCH_SCHEMA).unwrap()
    }

    #[test]
    fn generation_is_deterministic_under_the_seed() {
        let schema = schema();
        let a = gen_stream(&schema, 50, Dist::Uniform, 123, None).unwrap();
        let b = gen_stream(&schema, 50, Dist::Uniform, 123, None).unwrap();
        let c = gen_stream(&schema, 50, Dist::Uniform, 124, None).unwrap();
        let types = |s: &StreamPrefix| s.iter().map(|(_, t)| t.rel).collect::<Vec<_>>();
        assert_eq!(types(&a), types(&b));
        assert_ne!(types(&a), types(&c));
    }

    #[test]
    fn zero_length_is_an_error() {
        let schema = schema();
        assert!(gen_stream(&schema, 0, Dist::Uniform, 1, None).is_err());
    }

    #[test]
    fn weighted_distribution_normalizes() {
        let schema = schema();
        let s = gen_stream(&schema, 20_000, Dist::Weighted, 5, None).unwrap();
        let mut counts = [0usize; 5];
        for (_, t) in s.iter() {
            counts[t.rel as usize] += 1;
        }
        // weights 4:3:2:1:2 over 12; D is the rarest, A the most common
        assert!(counts[0] > counts[1] && counts[1] > counts[2]);
        assert!(counts[3] < counts[4]);
        let d_share = counts[3] as f64 / 20_000.0;
        assert!((d_share - 1.0 / 12.0).abs() < 0.02, "share {d_share}");
    }

    #[test]
    fn stress_withholds_the_trigger() {
        let schema = schema();
        let s = gen_stream(&schema, 500, Dist::Uniform, 9, Some("C")).unwrap();
        let c = schema.rel_id("C").unwrap();
        for (pos, t) in s.iter() {
            assert_eq!(t.rel == c, pos == 499);
        }
    }

    #[test]
    fn counter_agrees_with_the_oracle_on_small_streams() {
        let schema = schema();
        for (query, text) in queries::QUERIES {
            for seed in 0..5 {
                let s = gen_stream(&schema, 10, Dist::Uniform, seed, None).unwrap();
                let f = cep_core::parse_formula(text, &schema).unwrap();
                let oracle = oracle_eval(&f, &s).unwrap().len() as u128;
                assert_eq!(
                    count_outputs(query, &s),
                    Some(oracle),
                    "{query} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn trigger_last_counts_for_single_event_streams() {
        let schema = schema();
        // a lone trigger event cannot complete any match
        let s = gen_stream(&schema, 1, Dist::Uniform, 3, Some("C")).unwrap();
        assert_eq!(count_outputs("Q1", &s), Some(0));
        let f = cep_core::parse_formula(queries::lookup("Q1").unwrap(), &schema).unwrap();
        assert!(oracle_eval(&f, &s).unwrap().is_empty());
    }
}
