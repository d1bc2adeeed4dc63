use std::fmt::Write;

use rr_core::{ExampleRecord, Origin, ScoredPath, SentenceEvidence};

fn premise_label(e: &SentenceEvidence) -> String {
    match &e.premise {
        None => "no evidence".into(),
        Some(p) => match &p.doc_id {
            Some(id) => format!("[{id}] {}", p.text),
            None => p.text.clone(),
        },
    }
}

fn path_block(out: &mut String, i: usize, sp: &ScoredPath, selected: bool) {
    let p = &sp.path;
    let mark = if selected { " <- selected" } else { "" };
    let answer = if p.prediction.is_parsed() {
        format!("answer `{}`", p.prediction.normalized)
    } else {
        "UNPARSED (contributes 0 to the vote)".into()
    };
    let _ = writeln!(
        out,
        "path {i} (sample {}): {answer}, faithfulness {:.4}{mark}",
        p.sample_index, sp.faithfulness
    );
    for (j, s) in p.explanation.iter().enumerate() {
        let _ = writeln!(out, "  s{} {}", j + 1, s.text);
        if let Some(e) = sp.evidence.iter().find(|e| e.sentence_index == j) {
            let _ = writeln!(out, "     premise: {}", premise_label(e));
            let _ = writeln!(
                out,
                "     M={:.4} E={:.4} C={:.4}",
                e.similarity, e.entailment, e.contradiction
            );
        }
    }
}

/// Human-readable audit of one record: paths, premises, scores and the vote.
pub fn render_trace(r: &ExampleRecord) -> String {
    let v = &r.verdict;
    let mut out = String::new();
    let _ = writeln!(out, "example {}: {}", r.id, r.question);
    let _ = writeln!(out, "gold: {}", r.gold.join(" | "));
    let shown = if v.prediction.is_parsed() {
        v.prediction.normalized.as_str()
    } else {
        "(unparsed)"
    };
    let verdict = if r.correct { "correct" } else { "wrong" };
    let _ = writeln!(out, "prediction: {shown} ({verdict}, mode {:?})", v.mode);
    let _ = writeln!(out);
    for (i, sp) in v.per_path.iter().enumerate() {
        path_block(&mut out, i, sp, v.selected_path == Some(i));
    }
    if !v.candidate_scores.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "vote:");
        let mut rows: Vec<(&String, &f64)> = v.candidate_scores.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (answer, score) in rows {
            let paths: Vec<String> = v
                .per_path
                .iter()
                .enumerate()
                .filter(|(_, sp)| sp.path.prediction.is_parsed() && &sp.path.prediction.normalized == answer)
                .map(|(i, _)| i.to_string())
                .collect();
            let _ = writeln!(out, "  {answer:<12} {score:>9.4}  paths [{}]", paths.join(", "));
        }
    }
    if let Some(facts) = &v.facts {
        let _ = writeln!(out);
        let _ = writeln!(out, "facts:");
        for f in &facts.facts {
            let origin = match f.origin {
                Origin::Original => "original",
                Origin::Selected => "selected",
                Origin::Generated => "generated",
            };
            let _ = writeln!(out, "  - {} ({origin}, {:.4})", f.text, f.faithfulness);
        }
    }
    out
}
