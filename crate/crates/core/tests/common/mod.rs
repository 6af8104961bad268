#![allow(dead_code)]

use std::path::PathBuf;

use cse_core::program::{parse_program, validate_program, Program};
use cse_core::solver::{BackendRegistry, SolverBackend, SolverConfig};
use cse_core::templates::{build_templates, detect_candidate_parts, DetectorLimits, TemplateFailure, TemplateSet};

pub const CORPUS: [&str; 7] = [
    "lin_srch",
    "count_if",
    "lin_srch_rec",
    "count_if_rec_a",
    "count_if_rec_b",
    "guarded_error",
    "sum_globals",
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(format!("{name}.cse"))
}

pub fn corpus(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus program readable");
    let p = parse_program(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    assert!(validate_program(&p).is_empty(), "{name} is not valid");
    p
}

pub fn backend(name: &str) -> Box<dyn SolverBackend> {
    BackendRegistry::default().create(name, &SolverConfig::default()).expect("registered backend")
}

pub fn templates_for(p: &Program, solver: &mut dyn SolverBackend) -> (TemplateSet, Vec<TemplateFailure>) {
    build_templates(p, &detect_candidate_parts(p, &DetectorLimits::default()), solver)
}
