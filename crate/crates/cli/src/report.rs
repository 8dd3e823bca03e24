//! JSON encodings of library results.

use hypercyc_core::algebra::{ComplexMatrix, GeneratorFamily, Word};
use hypercyc_core::counterexample::{DensePair, TheoremReport, WitnessSequence};
use hypercyc_core::dynamics::{
    Certificate, CertifyConfig, DensityReport, JsetScore, MinDegreeRule, NonHypercyclicReason, RungEvidence, Verdict,
    WordBudget,
};
use hypercyc_core::normal_form::{NormalForm, ReferenceFrame};
use hypercyc_core::structure::BlockStructureReport;
use hypercyc_core::{Complex64, Error, Tolerances};
use serde_json::{json, Value};

/// Finite numbers as JSON numbers, the rest as `"inf"`, `"-inf"` or `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn vector(v: &[Complex64]) -> Value {
    Value::Array(v.iter().copied().map(complex).collect())
}

pub fn matrix(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.dim()).map(|i| vector(m.row(i))).collect())
}

pub fn word(w: &Word) -> Value {
    json!(w.exponents())
}

pub fn error(e: &Error) -> Value {
    json!({ "code": e.code(), "message": e.to_string() })
}

pub fn tolerances(t: &Tolerances) -> Value {
    json!({
        "commutation": t.commutation,
        "structure": t.structure,
        "eigen": t.eigen,
        "rank": t.rank,
        "jordan_spread": t.jordan_spread,
        "ambiguity_factor": t.ambiguity_factor,
        "max_condition": t.max_condition,
    })
}

pub fn min_degree(rule: MinDegreeRule) -> Value {
    match rule {
        MinDegreeRule::Quarter => json!("quarter"),
        MinDegreeRule::Fixed(m) => json!(m),
    }
}

pub fn budget(b: &WordBudget) -> Value {
    json!({ "min_degree": b.min_degree, "max_degree": b.max_degree, "max_words": b.max_words, "truncate": b.truncate })
}

pub fn certify_config(c: &CertifyConfig) -> Value {
    json!({
        "box": c.grid.half_width,
        "res": c.grid.resolution,
        "ladder": c.ladder,
        "min_degree": min_degree(c.min_degree),
        "max_words": c.max_words,
        "projection_threshold": c.projection_threshold,
        "joint_threshold": c.joint_threshold,
        "plateau_ceiling": c.plateau_ceiling,
        "plateau_growth": c.plateau_growth,
        "plateau_rungs": c.plateau_rungs,
        "tolerances": tolerances(&c.tolerances),
    })
}

pub fn family(f: &GeneratorFamily, labels: Option<&[String]>) -> Value {
    json!({
        "n": f.n(),
        "p": f.p(),
        "labels": labels,
        "commutation_residual": num(f.commutation_residual()),
        "diagonal": f.is_diagonal(),
    })
}

pub fn normal_form(nf: &NormalForm) -> Value {
    json!({
        "partition": nf.partition(),
        "joint_partition": nf.joint_partition(),
        "r": nf.r(),
        "cond_p": num(nf.cond_p()),
        "residual": num(nf.residual()),
        "block_eigenvalues": nf.block_eigenvalues().iter().map(|b| vector(b)).collect::<Vec<_>>(),
        "p": matrix(nf.p()),
    })
}

pub fn frame(f: &ReferenceFrame) -> Value {
    json!({ "u0": vector(&f.u0), "v0": vector(&f.v0) })
}

pub fn block_structure(r: &BlockStructureReport) -> Value {
    json!({
        "pass": r.pass,
        "failing_blocks": r.failing_blocks(),
        "blocks": r.blocks.iter().map(|b| json!({ "size": b.size, "rank": b.rank, "satisfied": b.satisfied })).collect::<Vec<_>>(),
    })
}

pub fn density(d: &DensityReport) -> Value {
    json!({
        "dims": d.dims,
        "box": d.half_width,
        "res": d.resolution,
        "cells_per_axis": d.cells_per_axis,
        "cells_hit": d.cells_hit,
        "cells_total": d.cells_total,
        "coverage": num(d.coverage),
        "points_used": d.points_used,
        "points_in_box": d.points_in_box,
        "saturated_points": d.saturated_points,
    })
}

pub fn rung(r: &RungEvidence) -> Value {
    json!({
        "min_degree": r.min_degree,
        "max_degree": r.max_degree,
        "words": r.words,
        "min_projection": num(r.min_projection),
        "joint_coverage": num(r.joint_coverage),
        "projections": r.projections.iter().map(density).collect::<Vec<_>>(),
        "joint": r.joint.iter().map(density).collect::<Vec<_>>(),
    })
}

pub fn verdict(v: &Verdict) -> Value {
    match v {
        Verdict::EmpiricallyHypercyclic => json!({ "verdict": "EmpiricallyHypercyclic" }),
        Verdict::NotHypercyclic(NonHypercyclicReason::RankObstruction { blocks }) => {
            json!({ "verdict": "NotHypercyclic", "reason": "rank obstruction", "blocks": blocks })
        }
        Verdict::NotHypercyclic(NonHypercyclicReason::Structure) => {
            json!({ "verdict": "NotHypercyclic", "reason": "structure" })
        }
        Verdict::Inconclusive => json!({ "verdict": "Inconclusive" }),
    }
}

pub fn certificate(c: &Certificate) -> Value {
    json!({
        "verdict": verdict(&c.verdict),
        "rank_condition": block_structure(&c.rank_report),
        "frame": frame(&c.frame),
        "ladder": c.rungs.iter().map(rung).collect::<Vec<_>>(),
    })
}

pub fn jset(s: &JsetScore) -> Value {
    json!({
        "source": vector(&s.source),
        "target": vector(&s.target),
        "delta": s.delta,
        "best_word": word(&s.best_word),
        "best_distance": num(s.best_distance),
        "budget": budget(&s.budget),
        "words_in_budget": s.words_in_budget.to_string(),
        "evaluations": s.evaluations,
    })
}

pub fn dense_pair(p: &DensePair) -> Value {
    json!({
        "a": complex(p.a),
        "b": complex(p.b),
        "b_modulus": num(p.b.norm()),
        "score": num(p.score),
        "max_exponent": p.max_exponent,
        "pairs": p.pairs,
        "floor": num(p.floor),
    })
}

pub fn witness(w: &WitnessSequence) -> Value {
    json!({
        "k": w.k,
        "s": w.s,
        "target": vector(&w.target),
        "growth": w.growth,
        "max_image_error": num(w.max_image_error()),
        "steps": w.steps.iter().map(|s| json!({
            "i": s.i,
            "j": s.j,
            "word": word(&s.word),
            "approximation_error": num(s.approximation_error),
            "image_error": num(s.image_error),
            "diagonal_error": num(s.diagonal_error),
        })).collect::<Vec<_>>(),
    })
}

pub fn theorem(t: &TheoremReport) -> Value {
    let per_k: Vec<Value> = t
        .jset
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let worst = row.iter().fold(0.0f64, |m, s| m.max(s.best_distance));
            json!({ "k": k + 1, "targets": row.len(), "max_distance": num(worst) })
        })
        .collect();
    json!({
        "pass": t.pass,
        "jset": { "pass": t.jset_pass, "max_distance": num(t.jset_max), "per_basis_vector": per_k },
        "certify": { "pass": t.certify_pass, "certificate": certificate(&t.certificate) },
        "line_structure": { "pass": t.line_pass, "points": t.line_points, "max_residual": num(t.line_max_residual) },
        "witnesses": { "pass": t.witness_pass, "sequences": t.witnesses.iter().map(witness).collect::<Vec<_>>() },
    })
}
