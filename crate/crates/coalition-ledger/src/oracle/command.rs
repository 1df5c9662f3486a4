//! External-command oracle: one subprocess per coalition evaluation.
//!
//! Protocol: the command is started through `sh -c`, receives a single line
//! `{"players":["a","c"]}` (names sorted) on stdin, and must print
//! `{"value": <number>}` on stdout and exit 0. Anything else aborts the run
//! naming the offending coalition. Values are cached to disk after every
//! fresh evaluation; the cache file is itself a loadable game table, so a
//! finished run can be re-solved offline without touching the command again.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::game::{Coalition, Game};
use crate::oracle::{OracleError, ValueOracle};

#[derive(Serialize)]
struct Request {
    players: Vec<String>,
}

#[derive(Deserialize)]
struct Response {
    value: f64,
}

struct CacheState {
    memo: BTreeMap<Coalition, f64>,
    fresh: usize,
}

pub struct CommandOracle {
    command: String,
    names: Vec<String>,
    cache_path: PathBuf,
    state: Mutex<CacheState>,
}

impl CommandOracle {
    /// Loads any existing cache at `cache_path`. The cached roster must match
    /// `names` exactly, otherwise the cache belongs to a different game.
    pub fn new(command: &str, names: Vec<String>, cache_path: &Path) -> Result<Self, OracleError> {
        let mut memo = BTreeMap::new();
        if cache_path.exists() {
            let game = Game::load(cache_path)
                .map_err(|e| OracleError::Cache(format!("{}: {e}", cache_path.display())))?;
            if game.names() != names.as_slice() {
                return Err(OracleError::Cache(format!(
                    "{}: cached roster {:?} does not match requested roster {:?}",
                    cache_path.display(),
                    game.names(),
                    names
                )));
            }
            memo = game.values().clone();
        }
        Ok(CommandOracle {
            command: command.to_string(),
            names,
            cache_path: cache_path.to_path_buf(),
            state: Mutex::new(CacheState { memo, fresh: 0 }),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Snapshot of everything evaluated or preloaded so far, as a game.
    pub fn cached_game(&self) -> Game {
        let state = self.state.lock().unwrap();
        Game::new(self.names.clone(), state.memo.clone(), None)
            .expect("cache entries are valid by construction")
    }

    fn write_cache_locked(&self, state: &CacheState) -> Result<(), OracleError> {
        let game = Game::new(self.names.clone(), state.memo.clone(), None)
            .expect("cache entries are valid by construction");
        let tmp = self.cache_path.with_extension("tmp");
        let io_err =
            |e: std::io::Error| OracleError::Cache(format!("{}: {e}", self.cache_path.display()));
        std::fs::write(&tmp, game.to_json_string()).map_err(io_err)?;
        std::fs::rename(&tmp, &self.cache_path).map_err(io_err)?;
        Ok(())
    }

    fn run_command(&self, s: Coalition, key: &str) -> Result<f64, OracleError> {
        let fail = |reason: String| OracleError::ProcessFailure {
            coalition: key.to_string(),
            reason,
        };
        let mut players: Vec<String> = s.members().map(|p| self.names[p.0].clone()).collect();
        players.sort();
        let request = serde_json::to_string(&Request { players }).expect("request is serializable");

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("failed to start: {e}")))?;
        {
            let stdin = child.stdin.as_mut().expect("stdin was piped");
            let written = stdin
                .write_all(request.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"));
            // a command may exit (or fail) without ever reading stdin; the
            // broken pipe is not the story then, its exit status is
            if let Err(e) = written {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(fail(format!("failed to write request: {e}")));
                }
            }
        }
        let output = child
            .wait_with_output()
            .map_err(|e| fail(format!("failed to wait: {e}")))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let excerpt: String = stderr.chars().take(300).collect();
            return Err(fail(format!(
                "exit status {}, stderr: {}",
                output.status,
                excerpt.trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let response: Response = serde_json::from_str(stdout.trim())
            .map_err(|e| fail(format!("unparseable output {:?}: {e}", stdout.trim())))?;
        if !response.value.is_finite() {
            return Err(fail(format!("non-finite value {}", response.value)));
        }
        Ok(response.value)
    }
}

impl ValueOracle for CommandOracle {
    fn query(&self, s: Coalition) -> Result<f64, OracleError> {
        if s.is_empty() {
            return Ok(0.0);
        }
        let key = {
            let state = self.state.lock().unwrap();
            if let Some(&v) = state.memo.get(&s) {
                return Ok(v);
            }
            // render outside the subprocess path too, so errors can name S
            let members: Vec<&str> = s.members().map(|p| self.names[p.0].as_str()).collect();
            members.join(",")
        };
        // The lock is dropped while the subprocess runs, so sibling branches
        // can evaluate in parallel.
        let value = self.run_command(s, &key)?;
        let mut state = self.state.lock().unwrap();
        let v = match state.memo.get(&s) {
            // lost a race with a concurrent query; the first answer stands
            Some(&winner) => winner,
            None => {
                state.memo.insert(s, value);
                state.fresh += 1;
                self.write_cache_locked(&state)?;
                value
            }
        };
        Ok(v)
    }

    fn trials_used(&self) -> usize {
        self.state.lock().unwrap().fresh
    }
}
