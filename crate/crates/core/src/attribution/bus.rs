//! Simulated clock and message bus with per-link latency and loss.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::authority::DigitalSignatureCertificate;
use crate::ledger::{sha256, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Query {
        query_id: u64,
        asker: String,
        address: String,
        dsc: DigitalSignatureCertificate,
        holder_signature: Signature,
    },
    Response {
        query_id: u64,
        responder: String,
        address: String,
        signature: Signature,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Query { .. } => "query",
            Message::Response { .. } => "response",
        }
    }

    /// First 8 bytes of SHA-256 over the JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("message serializes");
        sha256(&json).to_hex()[..16].to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub latency: u64,
    /// Probability in [0, 1] that a message on this link is lost.
    pub drop: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { latency: 1, drop: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub actor: String,
    pub kind: String,
    pub digest: String,
}

impl TraceEntry {
    pub fn render(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.tick, self.actor, self.kind, self.digest)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub from: String,
    pub to: String,
    pub sent_at: u64,
    pub deliver_at: u64,
    pub message: Message,
}

/// Delivers in `(deliver_at, seq)` order; all randomness comes from the
/// seeded generator.
#[derive(Debug, Clone)]
pub struct MessageBus {
    now: u64,
    seq: u64,
    queue: BTreeMap<(u64, u64), Envelope>,
    links: BTreeMap<(String, String), LinkConfig>,
    default_link: LinkConfig,
    rng: ChaCha8Rng,
    trace: Vec<TraceEntry>,
}

impl MessageBus {
    pub fn new(seed: u64) -> Self {
        MessageBus {
            now: 0,
            seq: 0,
            queue: BTreeMap::new(),
            links: BTreeMap::new(),
            default_link: LinkConfig::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            trace: Vec::new(),
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn advance_to(&mut self, tick: u64) {
        self.now = self.now.max(tick);
    }

    pub fn set_link(&mut self, from: &str, to: &str, cfg: LinkConfig) {
        self.links.insert((from.into(), to.into()), cfg);
    }

    pub fn link(&self, from: &str, to: &str) -> LinkConfig {
        self.links.get(&(from.into(), to.into())).copied().unwrap_or(self.default_link)
    }

    pub fn record(&mut self, actor: &str, kind: impl Into<String>, digest: impl Into<String>) {
        self.trace.push(TraceEntry { tick: self.now, actor: actor.into(), kind: kind.into(), digest: digest.into() });
    }

    pub fn send(&mut self, from: &str, to: &str, message: Message) {
        let link = self.link(from, to);
        let digest = message.digest();
        let kind = message.kind();
        if link.drop > 0.0 && self.rng.gen_bool(link.drop.min(1.0)) {
            self.record(from, format!("drop:{kind}->{to}"), digest);
            return;
        }
        self.record(from, format!("send:{kind}->{to}"), digest);
        self.seq += 1;
        let deliver_at = self.now + link.latency;
        self.queue.insert(
            (deliver_at, self.seq),
            Envelope { from: from.into(), to: to.into(), sent_at: self.now, deliver_at, message },
        );
    }

    /// Pops the next message and moves the clock to its delivery tick.
    pub fn pop_next(&mut self) -> Option<Envelope> {
        let (_, env) = self.queue.pop_first()?;
        self.now = self.now.max(env.deliver_at);
        let digest = env.message.digest();
        self.record(&env.to, format!("deliver:{}<-{}", env.message.kind(), env.from), digest);
        Some(env)
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.queue.keys().next().map(|&(t, _)| t)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn render_trace(&self) -> String {
        let mut out = String::from("tick\tactor\tkind\tdigest\n");
        for e in &self.trace {
            out.push_str(&e.render());
            out.push('\n');
        }
        out
    }
}
