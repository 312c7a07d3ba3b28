//! Interference-channel scenarios.
//!
//! A scenario is a list of users, each with a transmitter of `M` antennas, a
//! receiver of `N` antennas and a number of streams `d`, plus the set of
//! directed interference links `(k, l)`: transmitter `l` interferes at
//! receiver `k`.
//!
//! The textual form is a product of factors `(MxN,d)`, each optionally raised
//! to a repeat count `^r`, optionally followed by a connectivity clause:
//!
//! ```text
//! (5x11,3)(5x11,4)^2
//! (2x2,1)^3 | edges=(1,2);(2,3);(3,1)
//! ```
//!
//! Without the clause the channel is fully connected. User indices in the text
//! are 1-based; everything in the API is 0-based.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Antenna and stream configuration of one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct UserConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub streams: usize,
}

impl UserConfig {
    pub fn new(tx_antennas: usize, rx_antennas: usize, streams: usize) -> Self {
        Self {
            tx_antennas,
            rx_antennas,
            streams,
        }
    }
}

/// A directed interference link: `rx` suffers interference from transmitter `tx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub rx: usize,
    pub tx: usize,
}

impl Edge {
    pub fn new(rx: usize, tx: usize) -> Self {
        Self { rx, tx }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.rx + 1, self.tx + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("user {user} has zero {side} antennas")]
    ZeroAntennas { user: usize, side: &'static str },
    #[error("repeat count must be at least 1 (position {position})")]
    BadRepeat { position: usize },
    #[error("edge ({rx},{tx}) references a user outside 1..={users}")]
    EdgeOutOfRange { rx: usize, tx: usize, users: usize },
    #[error("edge ({0},{0}) is a self-loop; desired links are not interference")]
    SelfLoop(usize),
    #[error("the interference set is empty")]
    EmptyInterference,
    #[error("stream slot `?` is only allowed in search templates")]
    UnresolvedStreams,
}

/// Normalized interference-channel scenario.
///
/// Invariants: every user carries at least one stream, the edge set is
/// nonempty, sorted, free of self-loops and only references existing users.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    users: Vec<UserConfig>,
    edges: Vec<Edge>,
}

impl Scenario {
    /// Builds and normalizes a scenario from 0-based parts.
    pub fn new(users: Vec<UserConfig>, edges: impl IntoIterator<Item = Edge>) -> Result<Self, ScenarioError> {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for (j, u) in users.iter().enumerate() {
            if u.tx_antennas == 0 {
                return Err(ScenarioError::ZeroAntennas { user: j + 1, side: "transmit" });
            }
            if u.rx_antennas == 0 {
                return Err(ScenarioError::ZeroAntennas { user: j + 1, side: "receive" });
            }
        }
        for e in &edges {
            if e.rx >= users.len() || e.tx >= users.len() {
                return Err(ScenarioError::EdgeOutOfRange {
                    rx: e.rx + 1,
                    tx: e.tx + 1,
                    users: users.len(),
                });
            }
            if e.rx == e.tx {
                return Err(ScenarioError::SelfLoop(e.rx + 1));
            }
        }
        let (users, edges) = drop_silent_users(&users, &edges);
        if edges.is_empty() {
            return Err(ScenarioError::EmptyInterference);
        }
        Ok(Self { users, edges })
    }

    /// Fully connected scenario over the given users.
    pub fn fully_connected(users: Vec<UserConfig>) -> Result<Self, ScenarioError> {
        let k = users.len();
        Self::new(users, all_pairs(k))
    }

    pub fn users(&self) -> &[UserConfig] {
        &self.users
    }

    pub fn user(&self, j: usize) -> &UserConfig {
        &self.users[j]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Interference links in sorted `(rx, tx)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, rx: usize, tx: usize) -> bool {
        self.edges.binary_search(&Edge::new(rx, tx)).is_ok()
    }

    pub fn is_fully_connected(&self) -> bool {
        let k = self.users.len();
        self.edges.len() == k * (k - 1)
    }

    /// Receivers and transmitters touched by at least one interference link.
    pub fn projections(&self) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let rx = self.edges.iter().map(|e| e.rx).collect();
        let tx = self.edges.iter().map(|e| e.tx).collect();
        (rx, tx)
    }

    /// Users that are neither interfered nor interfering; their filters are free.
    pub fn free_users(&self) -> Vec<usize> {
        let (rx, tx) = self.projections();
        (0..self.users.len())
            .filter(|j| !rx.contains(j) && !tx.contains(j))
            .collect()
    }

    /// Stream counts in user order.
    pub fn streams(&self) -> Vec<usize> {
        self.users.iter().map(|u| u.streams).collect()
    }

    /// Canonical textual form; re-parsing it yields an identical scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.users.len() {
            let u = self.users[i];
            let mut run = 1;
            while i + run < self.users.len() && self.users[i + run] == u {
                run += 1;
            }
            out.push_str(&format!("({}x{},{})", u.tx_antennas, u.rx_antennas, u.streams));
            if run > 1 {
                out.push_str(&format!("^{run}"));
            }
            i += run;
        }
        if !self.is_fully_connected() {
            let list: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
            out.push_str(" | edges=");
            out.push_str(&list.join(";"));
        }
        out
    }

    /// Runs the advisory stream/antenna checks.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

pub(crate) fn all_pairs(k: usize) -> Vec<Edge> {
    (0..k)
        .flat_map(|rx| (0..k).filter(move |&tx| tx != rx).map(move |tx| Edge::new(rx, tx)))
        .collect()
}

/// Removes users carrying no streams together with their links, re-indexing
/// the survivors. The returned edge list is sorted.
pub(crate) fn drop_silent_users(users: &[UserConfig], edges: &BTreeSet<Edge>) -> (Vec<UserConfig>, Vec<Edge>) {
    let mut map = vec![None; users.len()];
    let mut kept = Vec::with_capacity(users.len());
    for (j, u) in users.iter().enumerate() {
        if u.streams > 0 {
            map[j] = Some(kept.len());
            kept.push(*u);
        }
    }
    let edges = edges
        .iter()
        .filter_map(|e| Some(Edge::new(map[e.rx]?, map[e.tx]?)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    (kept, edges)
}

/// Per-user and per-link results of the necessary stream/antenna checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserCheck {
    pub user: usize,
    /// `d_k <= N_k` when the user is an interfered receiver.
    pub rx_ok: bool,
    /// `d_l <= M_l` when the user is an interfering transmitter.
    pub tx_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeCheck {
    pub edge: Edge,
    /// Strict `d_k + d_l < N_k + M_l`.
    pub ok: bool,
}

/// Advisory report; the feasibility test runs whatever it says.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub users: Vec<UserCheck>,
    pub edges: Vec<EdgeCheck>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn streams_fit(&self) -> bool {
        self.users.iter().all(|u| u.rx_ok && u.tx_ok)
    }

    pub fn links_fit(&self) -> bool {
        self.edges.iter().all(|e| e.ok)
    }
}

pub fn validate(scenario: &Scenario) -> ValidationReport {
    let (rx, tx) = scenario.projections();
    let mut warnings = Vec::new();
    let users = scenario
        .users()
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let rx_ok = !rx.contains(&j) || u.streams <= u.rx_antennas;
            let tx_ok = !tx.contains(&j) || u.streams <= u.tx_antennas;
            if !rx_ok {
                warnings.push(format!(
                    "user {}: {} streams exceed {} receive antennas",
                    j + 1,
                    u.streams,
                    u.rx_antennas
                ));
            }
            if !tx_ok {
                warnings.push(format!(
                    "user {}: {} streams exceed {} transmit antennas",
                    j + 1,
                    u.streams,
                    u.tx_antennas
                ));
            }
            UserCheck { user: j, rx_ok, tx_ok }
        })
        .collect();
    let edges = scenario
        .edges()
        .iter()
        .map(|&e| {
            let k = scenario.user(e.rx);
            let l = scenario.user(e.tx);
            let ok = k.streams + l.streams < k.rx_antennas + l.tx_antennas;
            if !ok {
                warnings.push(format!(
                    "link {e}: d_k + d_l = {} is not below N_k + M_l = {}",
                    k.streams + l.streams,
                    k.rx_antennas + l.tx_antennas
                ));
            }
            EdgeCheck { edge: e, ok }
        })
        .collect();
    for j in scenario.free_users() {
        warnings.push(format!("user {} takes no part in any interference link", j + 1));
    }
    ValidationReport { users, edges, warnings }
}

/// A scenario whose stream counts may be left open (`?`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioTemplate {
    /// `(tx_antennas, rx_antennas, streams)`; `None` streams are searched.
    pub users: Vec<(usize, usize, Option<usize>)>,
    /// 0-based links; fully connected when the text has no clause.
    pub edges: Vec<Edge>,
}

impl ScenarioTemplate {
    /// Resolves every open slot; fails if any slot is still `?`.
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let users = self
            .users
            .iter()
            .map(|&(m, n, d)| d.map(|d| UserConfig::new(m, n, d)))
            .collect::<Option<Vec<_>>>()
            .ok_or(ScenarioError::UnresolvedStreams)?;
        Scenario::new(users, self.edges)
    }
}

/// Parses the scenario grammar. Every stream slot must be a number.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    parse_template(text)?.into_scenario()
}

/// Parses the scenario grammar, accepting `?` in stream slots.
pub fn parse_template(text: &str) -> Result<ScenarioTemplate, ScenarioError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let mut users = Vec::new();
    p.skip_ws();
    if p.peek() != Some(b'(') {
        return Err(p.expected("'('"));
    }
    while p.peek() == Some(b'(') {
        p.bump();
        let m = p.number()?;
        p.skip_ws();
        match p.peek() {
            Some(b'x' | b'X') => p.bump(),
            _ => return Err(p.expected("'x'")),
        }
        let n = p.number()?;
        p.expect(b',')?;
        p.skip_ws();
        let d = if p.peek() == Some(b'?') {
            p.bump();
            None
        } else {
            Some(p.number()?)
        };
        p.expect(b')')?;
        p.skip_ws();
        let mut repeat = 1;
        if p.peek() == Some(b'^') {
            p.bump();
            let at = p.pos;
            repeat = p.number()?;
            if repeat < 1 {
                return Err(ScenarioError::BadRepeat { position: at });
            }
        }
        for _ in 0..repeat {
            users.push((m, n, d));
        }
        p.skip_ws();
    }
    for (j, &(m, n, _)) in users.iter().enumerate() {
        if m == 0 {
            return Err(ScenarioError::ZeroAntennas { user: j + 1, side: "transmit" });
        }
        if n == 0 {
            return Err(ScenarioError::ZeroAntennas { user: j + 1, side: "receive" });
        }
    }
    let edges = match p.peek() {
        None => all_pairs(users.len()),
        Some(b'|') => {
            p.bump();
            p.keyword("edges")?;
            p.expect(b'=')?;
            let mut edges = Vec::new();
            loop {
                p.expect(b'(')?;
                let rx = p.number()?;
                p.expect(b',')?;
                let tx = p.number()?;
                p.expect(b')')?;
                if rx == 0 || tx == 0 || rx > users.len() || tx > users.len() {
                    return Err(ScenarioError::EdgeOutOfRange { rx, tx, users: users.len() });
                }
                if rx == tx {
                    return Err(ScenarioError::SelfLoop(rx));
                }
                edges.push(Edge::new(rx - 1, tx - 1));
                p.skip_ws();
                if p.peek() == Some(b';') {
                    p.bump();
                } else {
                    break;
                }
            }
            p.skip_ws();
            if p.peek().is_some() {
                return Err(p.expected("';' or end of input"));
            }
            edges
        }
        Some(_) => return Err(p.expected("'(', '|' or end of input")),
    };
    Ok(ScenarioTemplate { users, edges })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expected(&self, what: &str) -> ScenarioError {
        ScenarioError::Syntax {
            position: self.pos,
            expected: what.to_string(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ScenarioError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("'{}'", c as char)))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ScenarioError> {
        self.skip_ws();
        let end = self.pos + word.len();
        match self.src.get(self.pos..end) {
            Some(s) if s.eq_ignore_ascii_case(word.as_bytes()) => {
                self.pos = end;
                Ok(())
            }
            _ => Err(self.expected(&format!("'{word}'"))),
        }
    }

    fn number(&mut self) -> Result<usize, ScenarioError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.expected("a non-negative integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ScenarioError::Syntax {
                position: start,
                expected: "an integer that fits in usize".into(),
            })
    }
}
