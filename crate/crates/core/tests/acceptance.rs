//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a criterion fails that is not listed in `KNOWN_RED`.

use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rec_core::datagen::{generate, plan_jobs, DatagenOptions, SourceRecord, DEFAULT_MAX_TOKENS};
use rec_core::gateway::{
    complete_batch, Builtin, CompletionRequest, Gateway, MockGateway, MockReply, MockRule, MockScript,
};
use rec_core::metrics::{citation_prf, order_bias, parse_pairwise_verdict, win_rate, GoldCitationSet, SnippetMatching};
use rec_core::model::{
    CitationMode, CitationSnippet, ContextDocument, ContextRef, Extra, PointwiseVerdict,
    QualityEvalOutput, RagCitationEntry, RagCitationOutput, SourceKind, Statement, TaskType, Verdict, YesNo,
};
use rec_core::prompt::PromptBuilder;
use rec_core::render::{render_quality, render_rag};
use rec_core::schema::{parse_pointwise, parse_quality_output, parse_rag_output, serialize_canonical};
use rec_core::tokens::WordEstimator;
use rec_core::verify::{verify_quality_output, verify_rag_output, verify_snippet, MatchPolicy};

/// Criteria that cannot pass as written; each is explained in the
/// project's decisions ledger and in the README.
const KNOWN_RED: &[&str] = &["golden_fixtures"];

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, limit: Duration) -> Check {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn dialogue_context() -> ContextDocument {
    ContextDocument::new(fixture("dialogue_context.txt"), SourceKind::TaskPrompt)
}

fn rag_chunks() -> Vec<ContextDocument> {
    serde_json::from_str(&fixture("rag_chunks.json")).unwrap()
}

fn golden_fixtures() -> Check {
    let started = Instant::now();
    let out = parse_quality_output(&fixture("quality_output.json")).map_err(|e| format!("quality output parse: {e}"))?;
    let counts: Vec<usize> = out.statements.iter().map(|s| s.citations.len()).collect();
    ensure(counts == [3, 2], || format!("statement citation counts {counts:?}"))?;

    let postfix = parse_rag_output(&fixture("rag_postfix.json"), CitationMode::PostFix).map_err(|e| e.to_string())?;
    let e = &postfix.citations[..];
    ensure(
        e.len() == 1 && e[0].context_id.as_str() == "1233" && e[0].claim.is_none() && e[0].snippet.is_none(),
        || format!("post-fix entry {e:?}"),
    )?;
    ensure(
        parse_rag_output(&fixture("rag_postfix.json"), CitationMode::InlineWithSnippet).is_err(),
        || "post-fix JSON accepted in inline-snippet mode".into(),
    )?;
    let inline = parse_rag_output(&fixture("rag_inline_snippet.json"), CitationMode::InlineWithSnippet)
        .map_err(|e| e.to_string())?;
    let e = &inline.citations[..];
    ensure(
        e.len() == 1 && e[0].context_id.as_str() == "1233" && e[0].claim.is_some() && e[0].snippet.is_some(),
        || format!("inline-snippet entry {e:?}"),
    )?;
    let rag = render_rag(&inline, &fixture("rag_answer.txt")).map_err(|e| e.to_string())?;
    ensure(rag.body.contains("chlorophyll [1233]."), || format!("RAG body {:?}", rag.body))?;

    let inline_q = render_quality(&out, CitationMode::InlineWithSnippet).map_err(|e| e.to_string())?;
    ensure(ws(&inline_q.to_text()) == ws(&fixture("inline_expected.txt")), || {
        format!("inline layout differs:\n{}", inline_q.to_text())
    })?;
    let postfix_q = render_quality(&out, CitationMode::PostFixWithSnippet).map_err(|e| e.to_string())?;
    ensure(ws(&postfix_q.to_text()) == ws(&fixture("postfix_expected.txt")), || {
        format!("post-fix layout differs:\n{}", postfix_q.to_text())
    })?;
    within(started, Duration::from_secs(1))?;

    // The published post-fix example quotes its snippets with different
    // wording than the raw output it is rendered from.
    let printed = ws(&fixture("postfix_printed.txt"));
    let ours = ws(&postfix_q.to_text());
    ensure(ours == printed, || {
        let at = ours.chars().zip(printed.chars()).take_while(|(a, b)| a == b).count();
        let tail = |s: &str| s.chars().skip(at).take(40).collect::<String>();
        format!(
            "parse and layout checks pass; rendering differs from the printed post-fix example at char {at}: ours {:?}, printed {:?}",
            tail(&ours),
            tail(&printed)
        )
    })
}

/// One word replaced at a time, by a token absent from every context and
/// by a case-toggled copy.
fn mutations(snippet: &str) -> Vec<String> {
    let words: Vec<&str> = snippet.split(' ').collect();
    let mut out = Vec::new();
    for i in 0..words.len() {
        let toggled: String = words[i]
            .chars()
            .map(|c| if c.is_uppercase() { c.to_ascii_lowercase() } else { c.to_ascii_uppercase() })
            .collect();
        for replacement in ["qzxv".to_string(), toggled] {
            if replacement == words[i] {
                continue;
            }
            let mut w = words.clone();
            w[i] = &replacement;
            out.push(w.join(" "));
        }
    }
    out
}

fn verbatim_verification() -> Check {
    let started = Instant::now();
    let ctx = dialogue_context();
    let out = parse_quality_output(&fixture("quality_output.json")).unwrap();
    let mut cases: Vec<(String, ContextDocument)> =
        out.snippets().map(|s| (s.snippet.clone(), ctx.clone())).collect();
    let rag = parse_rag_output(&fixture("rag_inline_snippet.json"), CitationMode::InlineWithSnippet).unwrap();
    let chunks = rag_chunks();
    for e in &rag.citations {
        let chunk = chunks.iter().find(|c| c.context_id.as_deref() == e.context_id.id()).unwrap();
        cases.push((e.snippet.clone().unwrap(), chunk.clone()));
    }
    for policy in [MatchPolicy::Strict, MatchPolicy::Normalized] {
        ensure(verify_quality_output(&out, &ctx, policy).all_citations_verbatim, || {
            format!("quality citations fail under {policy:?}")
        })?;
        let report = verify_rag_output(&rag, &chunks, &fixture("rag_answer.txt"), policy).map_err(|e| e.to_string())?;
        ensure(report.passes(), || format!("RAG citations fail under {policy:?}"))?;
    }
    let mut mutated = 0;
    for (snippet, doc) in &cases {
        for policy in [MatchPolicy::Strict, MatchPolicy::Normalized] {
            ensure(verify_snippet(snippet, doc, policy).unwrap().found, || format!("{snippet:?} not found"))?;
            for m in mutations(snippet) {
                mutated += 1;
                let r = verify_snippet(&m, doc, policy).unwrap();
                ensure(!r.found, || format!("mutation {m:?} verified under {policy:?}"))?;
            }
        }
    }
    ensure(mutated > 100, || format!("only {mutated} mutations checked"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let alphabet: Vec<char> = "abcdefgh  \n\t.,'’éü$4".chars().collect();
    let marks = ['\u{301}', '\u{308}'];
    let mut done = 0;
    while done < 1000 {
        let with_marks = done % 2 == 0;
        let len = rng.random_range(1..120);
        let body: String = (0..len)
            .map(|_| {
                if with_marks && rng.random_ratio(1, 12) {
                    marks[rng.random_range(0..marks.len())]
                } else {
                    alphabet[rng.random_range(0..alphabet.len())]
                }
            })
            .collect();
        let n = body.chars().count();
        let a = rng.random_range(0..n);
        let b = rng.random_range(a + 1..=n);
        let snippet: String = body.chars().skip(a).take(b - a).collect();
        if snippet.trim().is_empty() {
            continue;
        }
        done += 1;
        let doc = ContextDocument::new(body.clone(), SourceKind::Document);
        let strict = verify_snippet(&snippet, &doc, MatchPolicy::Strict).unwrap();
        ensure(strict.found, || format!("strict miss: {snippet:?} in {body:?}"))?;
        // Normalized matching works on whole composed characters, so a cut
        // between a letter and its combining mark is only checked strictly.
        if !with_marks {
            let norm = verify_snippet(&snippet, &doc, MatchPolicy::Normalized).unwrap();
            ensure(norm.found, || format!("normalized miss: {snippet:?} in {body:?}"))?;
        }
    }
    within(started, Duration::from_secs(5))
}

/// Brute-force maximum matching over an equality relation.
fn brute_force_matches(pred: &[usize], gold: &[usize]) -> usize {
    fn go(pred: &[usize], gold: &[usize], used: &mut Vec<bool>) -> usize {
        let Some((&p, rest)) = pred.split_first() else {
            return 0;
        };
        let mut best = go(rest, gold, used);
        for (j, &g) in gold.iter().enumerate() {
            if !used[j] && g == p {
                used[j] = true;
                best = best.max(1 + go(rest, gold, used));
                used[j] = false;
            }
        }
        best
    }
    go(pred, gold, &mut vec![false; gold.len()])
}

fn oracle_prf(pred: &[usize], gold: &[usize]) -> (f64, f64, f64) {
    let mut p: Vec<usize> = pred.to_vec();
    let mut g: Vec<usize> = gold.to_vec();
    p.sort_unstable();
    p.dedup();
    g.sort_unstable();
    g.dedup();
    let tp = brute_force_matches(&p, &g);
    let precision = if p.is_empty() { if g.is_empty() { 1.0 } else { 0.0 } } else { tp as f64 / p.len() as f64 };
    let recall = if g.is_empty() { if p.is_empty() { 1.0 } else { 0.0 } } else { tp as f64 / g.len() as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    (precision, recall, f1)
}

fn metrics_oracle() -> Check {
    let words = ["Alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
    let sentences: Vec<String> = (0..10)
        .map(|i| format!("{}.", words.iter().map(|w| format!("{w}{i}")).collect::<Vec<_>>().join(" ")))
        .collect();
    let ctx = ContextDocument::new(sentences.join(" "), SourceKind::Document);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    // A snippet is a whole sentence, a fragment of one, or a run across two
    // neighbours; it touches the sentence indices returned alongside.
    let draw = |rng: &mut ChaCha8Rng| -> (String, Vec<usize>) {
        let i = rng.random_range(0..sentences.len());
        match rng.random_range(0..3) {
            0 => (sentences[i].clone(), vec![i]),
            1 => {
                let w: Vec<&str> = sentences[i].split(' ').collect();
                let a = rng.random_range(0..w.len() - 1);
                let b = rng.random_range(a + 2..=w.len());
                (w[a..b].join("  "), vec![i])
            }
            _ if i + 1 < sentences.len() => {
                let tail = sentences[i].split(' ').skip(4).collect::<Vec<_>>().join(" ");
                let head = sentences[i + 1].split(' ').take(2).collect::<Vec<_>>().join(" ");
                (format!("{tail}\n{head}"), vec![i, i + 1])
            }
            _ => (sentences[i].clone(), vec![i]),
        }
    };
    for case in 0..1000 {
        let (mut pred, mut pred_ids) = (Vec::new(), Vec::new());
        for _ in 0..rng.random_range(0..=8) {
            let (s, ids) = draw(&mut rng);
            pred.push(s);
            pred_ids.extend(ids);
        }
        let (mut gold, mut gold_ids) = (Vec::new(), Vec::new());
        for _ in 0..rng.random_range(0..=8) {
            let (s, ids) = draw(&mut rng);
            gold.push(s);
            gold_ids.extend(ids);
        }
        let got = citation_prf(
            &pred,
            &GoldCitationSet::new(gold.clone()),
            Some(&ctx),
            MatchPolicy::Normalized,
            SnippetMatching::Exact,
        )
        .map_err(|e| e.to_string())?;
        let want = oracle_prf(&pred_ids, &gold_ids);
        ensure((got.precision, got.recall, got.f1) == want, || {
            format!("case {case}: got {got:?}, oracle {want:?}, pred {pred:?}, gold {gold:?}")
        })?;
    }

    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let worked = citation_prf(
        &s(&["Alpha0 bravo0.", "Alpha1 bravo1.", "Alpha2 bravo2."]),
        &GoldCitationSet::new(s(&["Alpha0 bravo0.", "Alpha1 bravo1."])),
        None,
        MatchPolicy::Normalized,
        SnippetMatching::Exact,
    )
    .map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    ensure(
        close(worked.precision, 2.0 / 3.0) && close(worked.recall, 1.0) && close(worked.f1, 0.8),
        || format!("worked example {worked:?}"),
    )
}

#[derive(Clone, Copy, PartialEq)]
enum Plant {
    Good,
    BadJson,
    NonVerbatim,
    TooLong,
}

fn plant(i: usize) -> Plant {
    match (i % 10, i % 20) {
        (1, _) => Plant::BadJson,
        (2, _) => Plant::NonVerbatim,
        (_, 3) => Plant::TooLong,
        _ => Plant::Good,
    }
}

fn quality_reply(feedback: &str, snippet: &str) -> String {
    serde_json::json!({
        "answer": "Yes",
        "feedback": feedback,
        "statements": [{"statement_string": "The agent resolved it.", "citations": [snippet]}],
    })
    .to_string()
}

fn filter_batch(seed: u64) -> (String, rec_core::datagen::FilterStats, Vec<(String, String)>) {
    let mut records = Vec::new();
    let mut rules = Vec::new();
    for i in 0..100 {
        let tag = format!("item-{i:03}.");
        let task_prompt = format!("Ticket {tag} The customer asked about order {i}. The agent resolved it quickly.");
        let mut inputs = indexmap::IndexMap::new();
        inputs.insert("task_prompt".to_string(), task_prompt);
        inputs.insert("generation".to_string(), format!("Order {i} was resolved."));
        records.push(SourceRecord {
            source_dataset: "acceptance".into(),
            task_type: TaskType::Citation,
            inputs,
        });
        let reply = match plant(i) {
            Plant::Good => quality_reply("The agent resolved it.", "The agent resolved it quickly."),
            Plant::BadJson => "The agent resolved it, so the answer is Yes.".into(),
            Plant::NonVerbatim => quality_reply("The agent resolved it.", "The agent refused to help."),
            Plant::TooLong => quality_reply(
                &format!("The agent resolved it. {}", "filler ".repeat(DEFAULT_MAX_TOKENS)),
                "The agent resolved it quickly.",
            ),
        };
        rules.push(MockRule {
            contains: Some(tag),
            prompt_sha256: None,
            replies: vec![MockReply::Text(reply)],
        });
    }
    let gateway = MockGateway::new(MockScript {
        seed,
        latency_ms: Some((0, 2)),
        rules,
        fallback: None,
    });
    let opts = DatagenOptions {
        parallelism: 8,
        seed: Some(seed),
        ..DatagenOptions::default()
    };
    let jobs = plan_jobs(&records, &PromptBuilder::default(), &opts).unwrap();
    let out = generate(&jobs, &gateway, &opts, None);
    let lines: String = out.records.iter().map(|r| serialize_canonical(r).into_string() + "\n").collect();
    let kept = out
        .records
        .iter()
        .map(|r| {
            let i: usize = r.prompt.split("item-").nth(1).unwrap()[..3].parse().unwrap();
            (records[i].inputs["task_prompt"].clone(), r.completion.clone())
        })
        .collect();
    (lines, out.stats, kept)
}

fn filter_pipeline() -> Check {
    let (first, stats, kept) = filter_batch(7);
    let got = (stats.kept, stats.rejected_bad_json, stats.rejected_non_verbatim, stats.rejected_too_long);
    ensure(got == (75, 10, 10, 5) && stats.total == 100 && stats.is_consistent(), || {
        format!("stats {stats:?}")
    })?;
    let estimator = WordEstimator::default();
    for (context, completion) in &kept {
        let out = parse_quality_output(completion).map_err(|e| format!("kept record does not reparse: {e}"))?;
        let doc = ContextDocument::new(context.clone(), SourceKind::TaskPrompt);
        ensure(verify_quality_output(&out, &doc, MatchPolicy::Normalized).passes(), || {
            format!("kept record fails verification: {completion}")
        })?;
        ensure(
            rec_core::datagen::length_filter(context, completion, DEFAULT_MAX_TOKENS, &estimator),
            || "kept record is over length".into(),
        )?;
    }
    let (second, stats2, _) = filter_batch(7);
    ensure(first == second && stats == stats2, || "two runs with the same seed differ".into())?;
    Ok(())
}

struct Pair {
    instruction: String,
    chosen: String,
    rejected: String,
}

fn pairs50() -> Vec<Pair> {
    (0..50)
        .map(|i| Pair {
            instruction: format!("Describe item {i} in one paragraph."),
            chosen: format!("Item {i} is a sturdy tool with a long handle, a steel head and a lifetime warranty."),
            rejected: format!("Item {i} is a tool."),
        })
        .collect()
}

/// Prompts for every pair in AB then BA order, with the position of the
/// chosen response.
fn pair_prompts(pairs: &[Pair]) -> Vec<(CompletionRequest, Verdict)> {
    let builder = PromptBuilder::default();
    let mut out = Vec::new();
    for p in pairs {
        let ab = builder.pairwise(&p.instruction, &p.chosen, &p.rejected).unwrap();
        let ba = builder.pairwise(&p.instruction, &p.rejected, &p.chosen).unwrap();
        out.push((CompletionRequest::from_prompt(&ab), Verdict::A));
        out.push((CompletionRequest::from_prompt(&ba), Verdict::B));
    }
    out
}

fn judge<G: Gateway>(gateway: &G, prompts: &[(CompletionRequest, Verdict)]) -> Result<Vec<Verdict>, String> {
    let reqs: Vec<CompletionRequest> = prompts.iter().map(|(r, _)| r.clone()).collect();
    complete_batch(gateway, &reqs, 8, None, &|_, _| {})
        .into_iter()
        .map(|r| r.map(|c| parse_pairwise_verdict(&c.text)).map_err(|e| e.to_string()))
        .collect()
}

fn pairwise_extremes() -> Check {
    let started = Instant::now();
    let prompts = pair_prompts(&pairs50());
    let chosen: Vec<Verdict> = prompts.iter().map(|(_, c)| *c).collect();
    let by_pair = |v: &[Verdict]| v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();

    let first = judge(&MockGateway::builtin(Builtin::AlwaysFirst, 1), &prompts)?;
    let bias = order_bias(&by_pair(&first)).map_err(|e| e.to_string())?;
    ensure(bias.value == 1.0, || format!("always-first order bias {bias:?}"))?;

    let longer = judge(&MockGateway::builtin(Builtin::PreferLonger, 1), &prompts)?;
    let bias = order_bias(&by_pair(&longer)).map_err(|e| e.to_string())?;
    ensure(bias.value == 0.0, || format!("content-deterministic order bias {bias:?}"))?;

    let rules = prompts
        .iter()
        .map(|(req, c)| MockRule {
            contains: None,
            prompt_sha256: Some(req.prompt_sha256()),
            replies: vec![MockReply::Text(if *c == Verdict::A { "[[A]]" } else { "[[B]]" }.into())],
        })
        .collect();
    let oracle = MockGateway::new(MockScript {
        rules,
        ..MockScript::default()
    });
    let verdicts = judge(&oracle, &prompts)?;
    let rate = win_rate(&verdicts, &chosen).map_err(|e| e.to_string())?;
    ensure(rate == 1.0, || format!("oracle win rate {rate}"))?;
    within(started, Duration::from_secs(2))
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &["alpha", "Beta", " ", "\n", "\"", "\\", "é", "’", "{", "}", "[1]", "$4.99", "\t", "None", "😀"];
    let mut s = String::from("x");
    for _ in 0..rng.random_range(0..12) {
        s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
    }
    s
}

fn random_quality(rng: &mut ChaCha8Rng) -> QualityEvalOutput {
    let statements = (0..rng.random_range(1..4))
        .map(|_| Statement {
            statement_string: random_text(rng),
            citations: (0..rng.random_range(0..4))
                .map(|_| {
                    let mut c = CitationSnippet::new(random_text(rng));
                    if rng.random_bool(0.3) {
                        c.context_id = Some(random_text(rng));
                    }
                    c
                })
                .collect(),
        })
        .collect();
    QualityEvalOutput {
        answer: if rng.random::<bool>() { YesNo::Yes } else { YesNo::No },
        feedback: random_text(rng),
        statements,
        extra: Extra::default(),
    }
}

fn random_rag(rng: &mut ChaCha8Rng) -> RagCitationOutput {
    let mode = *CitationMode::ALL.choose(rng).unwrap();
    let citations = (0..rng.random_range(1..5))
        .map(|_| {
            let unsupported = rng.random_ratio(1, 5);
            RagCitationEntry {
                context_id: if unsupported { ContextRef::Unsupported } else { ContextRef::Id(random_text(rng)) },
                claim: mode.has_claim().then(|| random_text(rng)),
                snippet: (mode.has_snippet() && !unsupported).then(|| random_text(rng)),
                extra: Extra::default(),
            }
        })
        .collect();
    RagCitationOutput { citations, mode }
}

fn round_trip_and_concurrency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1000 {
        let (first, second) = match i % 3 {
            0 => {
                let v = random_quality(&mut rng);
                let text = serialize_canonical(&v).into_string();
                let back = parse_quality_output(&text).map_err(|e| format!("{e}: {text}"))?;
                ensure(back == v, || format!("quality round trip changed {text}"))?;
                (text, serialize_canonical(&back).into_string())
            }
            1 => {
                let v = random_rag(&mut rng);
                let text = serialize_canonical(&v).into_string();
                let back = parse_rag_output(&text, v.mode).map_err(|e| format!("{e}: {text}"))?;
                ensure(back == v, || format!("RAG round trip changed {text}"))?;
                (text, serialize_canonical(&back).into_string())
            }
            _ => {
                let v = PointwiseVerdict {
                    metriclabel: if rng.random::<bool>() { YesNo::Yes } else { YesNo::No },
                    justification: random_text(&mut rng),
                    extra: Extra::default(),
                };
                let text = serialize_canonical(&v).into_string();
                let back = parse_pointwise(&text).map_err(|e| format!("{e}: {text}"))?;
                ensure(back == v, || format!("pointwise round trip changed {text}"))?;
                (text, serialize_canonical(&back).into_string())
            }
        };
        ensure(first == second, || format!("not a fixpoint: {first} vs {second}"))?;
    }

    for trial in 0..500u64 {
        let n = rng.random_range(1..=24);
        let reqs: Vec<CompletionRequest> =
            (0..n).map(|i| CompletionRequest::new(format!("trial {trial} request {i}"))).collect();
        let gateway = MockGateway::echo(trial, (0, 2));
        let results = complete_batch(&gateway, &reqs, 8, None, &|_, _| {});
        ensure(results.len() == n, || format!("trial {trial}: {} results for {n} requests", results.len()))?;
        for (i, (req, res)) in reqs.iter().zip(&results).enumerate() {
            let text = res.as_ref().map(|r| r.text.as_str()).map_err(|e| e.to_string())?;
            ensure(text == req.prompt, || format!("trial {trial}: slot {i} holds {text:?}"))?;
        }
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("golden_fixtures", golden_fixtures),
        ("verbatim_verification", verbatim_verification),
        ("metrics_oracle", metrics_oracle),
        ("filter_pipeline", filter_pipeline),
        ("pairwise_order_bias", pairwise_extremes),
        ("round_trip_concurrency", round_trip_and_concurrency),
    ];
    let mut unexpected = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = check();
        let took = started.elapsed();
        match result {
            Ok(()) => println!("PASS {name} ({took:.2?})"),
            Err(why) => {
                let known = KNOWN_RED.contains(&name);
                if !known {
                    unexpected += 1;
                }
                let tag = if known { " [known red]" } else { "" };
                println!("FAIL {name}{tag} ({took:.2?}): {why}");
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
