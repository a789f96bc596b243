//! Model access for evaluation runs: a chat-style HTTP endpoint with a
//! content-addressed response cache, plus offline mock models.

pub mod cache;
pub mod endpoint;
pub mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use n2f_core::formal::{NamingScheme, Program};

pub use cache::{CacheEntry, ResponseCache};
pub use endpoint::{EndpointConfig, HttpModel, Transport, UreqTransport, WireFields};
pub use mock::{mock_model, MockKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempts (last status {status:?}): {message}")]
    Transport {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("credential error: {0}")]
    Credential(String),
    #[error("endpoint config: {0}")]
    Config(String),
    #[error("response: {0}")]
    Response(String),
    #[error("cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, GatewayError>;

/// Everything a model may look at for one task. Live models read only the
/// prompt; mocks answer from the gold program.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub task_id: &'a str,
    pub prompt: &'a str,
    pub gold: &'a Program,
    pub naming: &'a NamingScheme,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
    pub latency_ms: u64,
    pub cached: bool,
}

impl Completion {
    pub fn immediate(text: String) -> Completion {
        Completion {
            text,
            attempts: 1,
            latency_ms: 0,
            cached: false,
        }
    }
}

pub trait CompletionModel: Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, q: &Query<'_>) -> Result<Completion>;
}

/// Runs every query with at most `parallelism` in flight. Results come back
/// in query order.
pub fn complete_all(
    model: &dyn CompletionModel,
    queries: &[Query<'_>],
    parallelism: usize,
) -> Vec<Result<Completion>> {
    let slots: Vec<Mutex<Option<Result<Completion>>>> = queries.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = parallelism.clamp(1, queries.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(q) = queries.get(i) else { break };
                let r = model.complete(q);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every query ran"))
        .collect()
}
