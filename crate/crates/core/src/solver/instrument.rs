use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use super::{smtlib, SatQuery, SatResult, SolverBackend, SolverError, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    pub queries: u64,
    pub sat: u64,
    pub unsat: u64,
    pub unknown: u64,
}

#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub query: SatQuery,
    pub verdict: Verdict,
}

/// Wraps a backend to count verdicts, optionally keep every query, and
/// optionally write each query as a standalone script.
pub struct Instrumented {
    inner: Box<dyn SolverBackend>,
    dump_dir: Option<PathBuf>,
    record: bool,
    pub log: Vec<QueryRecord>,
    pub stats: SolverStats,
}

impl Instrumented {
    pub fn new(inner: Box<dyn SolverBackend>) -> Instrumented {
        Instrumented { inner, dump_dir: None, record: false, log: Vec::new(), stats: SolverStats::default() }
    }

    pub fn dumping_to(mut self, dir: PathBuf) -> Instrumented {
        self.dump_dir = Some(dir);
        self
    }

    pub fn recording(mut self) -> Instrumented {
        self.record = true;
        self
    }
}

impl SolverBackend for Instrumented {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn check_sat(&mut self, q: &SatQuery) -> Result<SatResult, SolverError> {
        self.stats.queries += 1;
        if let Some(dir) = &self.dump_dir {
            fs::create_dir_all(dir).map_err(|e| SolverError::Io(e.to_string()))?;
            let path = dir.join(format!("query-{:05}.smt2", self.stats.queries));
            fs::write(&path, smtlib::to_smtlib(q)).map_err(|e| SolverError::Io(e.to_string()))?;
        }
        let r = self.inner.check_sat(q)?;
        match r.verdict {
            Verdict::Sat => self.stats.sat += 1,
            Verdict::Unsat => self.stats.unsat += 1,
            Verdict::Unknown => self.stats.unknown += 1,
        }
        if self.record {
            self.log.push(QueryRecord { query: q.clone(), verdict: r.verdict });
        }
        Ok(r)
    }
}
