use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rec_core::gateway::{complete_batch, CompletionRequest, GatewayError};
use rec_core::metrics::{order_bias, parse_pairwise_verdict, win_rate, OrderBias};
use rec_core::model::{PairwiseJudgment, PresentationOrder, Verdict};

use crate::args::JudgeArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{print_json, read_rows};
use crate::settings::Settings;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Pair {
    instruction: String,
    chosen: String,
    rejected: String,
}

#[derive(Debug, Serialize)]
struct JudgedItem {
    pair: usize,
    /// Position the chosen response was shown in.
    chosen_is: Verdict,
    #[serde(flatten)]
    judgment: PairwiseJudgment,
}

#[derive(Debug, Serialize)]
struct Report {
    n: usize,
    win_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    order_bias: Option<OrderBias>,
    unparseable: usize,
    judgments: Vec<JudgedItem>,
}

struct Planned {
    pair: usize,
    order: PresentationOrder,
}

pub fn run(args: JudgeArgs, settings: &Settings) -> CliResult {
    let pairs: Vec<Pair> = read_rows(&args.pairs)?;
    if pairs.is_empty() {
        return Err(CliError::usage("no pairs to judge"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.unwrap_or(0));
    let mut planned = Vec::new();
    for i in 0..pairs.len() {
        if args.both_orders {
            planned.push(Planned { pair: i, order: PresentationOrder::AB });
            planned.push(Planned { pair: i, order: PresentationOrder::BA });
        } else {
            let order = if rng.random::<bool>() { PresentationOrder::AB } else { PresentationOrder::BA };
            planned.push(Planned { pair: i, order });
        }
    }
    let builder = settings.prompt_builder()?;
    let mut prompts = Vec::with_capacity(planned.len());
    for p in &planned {
        let pair = &pairs[p.pair];
        let (a, b) = match p.order {
            PresentationOrder::AB => (&pair.chosen, &pair.rejected),
            PresentationOrder::BA => (&pair.rejected, &pair.chosen),
        };
        let prompt = builder
            .pairwise(&pair.instruction, a, b)
            .map_err(|e| CliError::usage(format!("pair {}: {e}", p.pair + 1)))?;
        prompts.push((prompt, a.clone(), b.clone()));
    }
    let reqs: Vec<CompletionRequest> = prompts
        .iter()
        .map(|(p, _, _)| CompletionRequest::from_prompt(p).with_seed(settings.seed))
        .collect();
    let gateway = settings.gateway()?;
    let results = complete_batch(gateway.as_ref(), &reqs, settings.parallelism, Some(crate::cancel_flag()), &|_, _| {});

    let mut judgments = Vec::with_capacity(planned.len());
    for ((p, (_, a, b)), result) in planned.iter().zip(prompts).zip(results) {
        let text = match result {
            Ok(r) => r.text,
            Err(GatewayError::Cancelled) => return Err(CliError::backend("cancelled")),
            Err(e) => return Err(CliError::backend(format!("pair {}: {e}", p.pair + 1))),
        };
        let chosen_is = match p.order {
            PresentationOrder::AB => Verdict::A,
            PresentationOrder::BA => Verdict::B,
        };
        judgments.push(JudgedItem {
            pair: p.pair + 1,
            chosen_is,
            judgment: PairwiseJudgment {
                instruction: pairs[p.pair].instruction.clone(),
                response_a: a,
                response_b: b,
                verdict: parse_pairwise_verdict(&text),
                presentation_order: p.order,
            },
        });
    }
    let verdicts: Vec<Verdict> = judgments.iter().map(|j| j.judgment.verdict).collect();
    let chosen: Vec<Verdict> = judgments.iter().map(|j| j.chosen_is).collect();
    let win_rate = win_rate(&verdicts, &chosen).map_err(CliError::internal)?;
    let order_bias = if args.both_orders {
        let by_pair: Vec<(Verdict, Verdict)> = verdicts.chunks(2).map(|c| (c[0], c[1])).collect();
        match order_bias(&by_pair) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("order bias: {e}");
                None
            }
        }
    } else {
        None
    };
    let unparseable = verdicts.iter().filter(|v| **v == Verdict::Unparseable).count();
    if unparseable > 0 {
        log::warn!("{unparseable} verdicts could not be parsed and count as losses");
    }
    print_json(&Report {
        n: judgments.len(),
        win_rate,
        order_bias,
        unparseable,
        judgments,
    });
    Ok(Exit::Success)
}
