use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::smtlib::{self, paren_balance};
use super::{SatQuery, SatResult, SolverBackend, SolverError, Verdict};

/// How to launch an SMT-LIB2 solver that reads commands on stdin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    pub path: String,
    pub args: Vec<String>,
}

impl Default for SolverCommand {
    fn default() -> Self {
        SolverCommand { path: "z3".into(), args: vec!["-in".into(), "-smt2".into()] }
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One long-lived solver process; each query runs inside `push`/`pop`.
pub struct ExternalSolver {
    command: SolverCommand,
    timeout: Duration,
    process: Option<Process>,
}

/// Slack on top of the solver's own timeout before the process is killed.
const GRACE: Duration = Duration::from_secs(5);

impl ExternalSolver {
    pub fn new(command: SolverCommand, timeout: Duration) -> ExternalSolver {
        ExternalSolver { command, timeout, process: None }
    }

    fn start(&mut self) -> Result<&mut Process, SolverError> {
        if self.process.is_none() {
            let mut child = Command::new(&self.command.path)
                .args(&self.command.args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|e| SolverError::Unavailable(format!("{}: {e}", self.command.path)))?;
            let stdout = child.stdout.take().expect("piped stdout");
            let stdin = child.stdin.take().expect("piped stdin");
            let (tx, rx) = mpsc::channel();
            thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let Ok(line) = line else { break };
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
            let mut proc = Process { child, stdin, lines: rx };
            let prelude = format!(
                "(set-option :print-success false)\n(set-option :produce-models true)\n\
                 (set-option :timeout {})\n(set-logic ALL)\n",
                self.timeout.as_millis()
            );
            proc.stdin
                .write_all(prelude.as_bytes())
                .map_err(|e| SolverError::Unavailable(e.to_string()))?;
            self.process = Some(proc);
        }
        Ok(self.process.as_mut().unwrap())
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        let proc = self.start()?;
        proc.stdin
            .write_all(text.as_bytes())
            .and_then(|_| proc.stdin.flush())
            .map_err(|e| SolverError::Process(e.to_string()))
    }

    /// `Ok(None)` when the process did not answer in time.
    fn read_line(&mut self) -> Result<Option<String>, SolverError> {
        let wait = self.timeout + GRACE;
        let proc = self.process.as_mut().ok_or(SolverError::Process("not running".into()))?;
        loop {
            match proc.lines.recv_timeout(wait) {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Ok(Some(l)),
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(SolverError::Process("solver exited".into()))
                }
            }
        }
    }

    fn fail(&mut self, e: SolverError) -> SolverError {
        self.process = None;
        e
    }

    fn run(&mut self, q: &SatQuery) -> Result<SatResult, SolverError> {
        self.send(&format!("(push 1)\n{}(check-sat)\n", smtlib::query_body(q)))?;
        let Some(line) = self.read_line()? else {
            return Err(SolverError::Process("timed out".into()));
        };
        let verdict = match line.trim() {
            "sat" => Verdict::Sat,
            "unsat" => Verdict::Unsat,
            "unknown" => Verdict::Unknown,
            other => return Err(SolverError::Process(other.to_string())),
        };
        let mut model = None;
        if verdict == Verdict::Sat {
            self.send("(get-model)\n")?;
            let mut text = String::new();
            loop {
                let Some(line) = self.read_line()? else {
                    return Err(SolverError::Process("timed out reading model".into()));
                };
                text.push_str(&line);
                text.push('\n');
                if paren_balance(&text) <= 0 {
                    break;
                }
            }
            if text.trim_start().starts_with("(error") {
                return Err(SolverError::Process(text));
            }
            model = smtlib::parse_model(&text, q);
        }
        self.send("(pop 1)\n")?;
        Ok(SatResult { verdict, model, exhaustive: false })
    }
}

impl SolverBackend for ExternalSolver {
    fn name(&self) -> &str {
        "external"
    }

    fn check_sat(&mut self, q: &SatQuery) -> Result<SatResult, SolverError> {
        match self.run(q) {
            Ok(r) => Ok(r),
            Err(SolverError::Process(msg)) if msg == "timed out" => {
                self.process = None;
                Ok(SatResult::plain(Verdict::Unknown))
            }
            Err(e) => Err(self.fail(e)),
        }
    }
}
