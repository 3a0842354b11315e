//! Render every prompt template for one node and parse a reply in the
//! requested format.

use gttt::annotator::{
    build_prompt, neighbor_summary_prompt, parse_llm_response, render_response, GnnHint, Neighbor, PromptInput,
    PromptKind, Shot,
};

pub fn run_example() -> gttt::Result<()> {
    let categories: Vec<String> = ["Databases", "Machine Learning", "Theory"].map(String::from).to_vec();
    let shots = vec![Shot {
        text: "Title: Query optimization for column stores".into(),
        category: "Databases".into(),
    }];
    let neighbors = vec![
        Neighbor {
            content: "Title: Stochastic gradient methods".into(),
            category: Some("Machine Learning".into()),
        },
        Neighbor {
            content: "Title: Kernel methods revisited".into(),
            category: None,
        },
    ];
    let summary_request = neighbor_summary_prompt(&neighbors);
    println!("--- summary request\n{summary_request}\n");

    let summary = "Most neighbors study learning algorithms.";
    for kind in PromptKind::ALL {
        let input = PromptInput {
            node_text: "Title: Convergence of adaptive optimizers",
            categories: &categories,
            shots: &shots,
            gnn_hint: (kind == PromptKind::FewShotGnn).then(|| GnnHint {
                label: "Machine Learning".into(),
                confidence: 74.0,
            }),
            neighbor_summary: (kind == PromptKind::FewShot2Hop).then_some(summary),
        };
        let prompt = build_prompt(kind, &input)?;
        println!("--- {} ({} chars)\n{prompt}\n", kind.name(), prompt.len());
    }

    let reply = format!("Sure. {}", render_response("machine learning", 88.0));
    let (label, conf) = parse_llm_response(&reply, &categories)?;
    println!("parsed {reply:?} -> {} at {conf}", categories[label]);
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
