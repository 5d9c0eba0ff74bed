use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, select_biased, Receiver, Sender};

use super::CheckpointPayload;
use crate::error::{Error, Result};
use crate::schedule::StepIndex;

/// Blocking Level-2 storage. Must tolerate one writer and one reader
/// working on different keys at the same time.
pub trait Device: Send + Sync + 'static {
    fn write(&self, payload: &CheckpointPayload) -> Result<()>;
    fn read(&self, key: StepIndex) -> Result<CheckpointPayload>;
    fn contains(&self, key: StepIndex) -> bool;

    /// Modelled link time in seconds for a transfer of `len` bytes. When
    /// `Some`, [`TransferEngine`] paces transfers on a serial link timeline
    /// that starts at issue, and `write` and `read` should return at once.
    fn link_seconds(&self, _len: usize) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    Store,
    Fetch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transfer {
    Stored,
    Fetched(CheckpointPayload),
}

impl Transfer {
    pub fn into_payload(self) -> Option<CheckpointPayload> {
        match self {
            Transfer::Fetched(p) => Some(p),
            Transfer::Stored => None,
        }
    }
}

#[derive(Debug, Default)]
struct Completion {
    outcome: Mutex<Option<Result<Transfer>>>,
    ready: Condvar,
    /// Earliest time the transfer counts as finished on a paced link.
    not_before: Option<Instant>,
}

impl Completion {
    fn complete(&self, outcome: Result<Transfer>) {
        let mut slot = self.outcome.lock().unwrap_or_else(|e| e.into_inner());
        if slot.is_none() {
            *slot = Some(outcome);
            self.ready.notify_all();
        }
    }
}

/// Handle to an in-flight store or fetch.
#[derive(Debug, Clone)]
pub struct TransferTicket {
    id: u64,
    kind: TransferKind,
    key: StepIndex,
    completion: Arc<Completion>,
}

impl TransferTicket {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> TransferKind {
        self.kind
    }

    pub fn key(&self) -> StepIndex {
        self.key
    }

    /// Blocks until the transfer finishes. Repeated calls return the same outcome.
    pub fn wait(&self) -> Result<Transfer> {
        let outcome = {
            let mut slot = self.completion.outcome.lock().unwrap_or_else(|e| e.into_inner());
            loop {
                if let Some(outcome) = slot.as_ref() {
                    break outcome.clone();
                }
                slot = self.completion.ready.wait(slot).unwrap_or_else(|e| e.into_inner());
            }
        };
        if let Some(at) = self.completion.not_before {
            let now = Instant::now();
            if at > now {
                std::thread::sleep(at - now);
            }
        }
        outcome
    }

    pub fn poll(&self) -> Option<Result<Transfer>> {
        if self.completion.not_before.is_some_and(|at| Instant::now() < at) {
            return None;
        }
        self.completion.outcome.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn is_complete(&self) -> bool {
        self.poll().is_some()
    }
}

/// Asynchronous Level-2 storage.
pub trait Level2Backend: Send + Sync {
    /// Queues a store keyed by `payload.step`. Blocks while the store queue is full.
    fn begin_store(&self, payload: CheckpointPayload) -> Result<TransferTicket>;

    /// Queues a fetch. Fails with `MissingKey` if the key was never stored.
    fn begin_fetch(&self, key: StepIndex) -> Result<TransferTicket>;

    fn wait(&self, ticket: &TransferTicket) -> Result<Transfer> {
        ticket.wait()
    }

    fn poll(&self, ticket: &TransferTicket) -> Option<Result<Transfer>> {
        ticket.poll()
    }

    fn contains(&self, key: StepIndex) -> bool;
}

enum Job {
    Store(CheckpointPayload, Arc<Completion>),
    Fetch(StepIndex, Arc<Completion>),
}

struct Shared<D> {
    device: D,
    pending_stores: Mutex<HashSet<StepIndex>>,
}

/// Serial link timeline for devices with a modelled transfer time.
#[derive(Default)]
struct Link {
    free_at: Option<Instant>,
    sizes: HashMap<StepIndex, usize>,
}

/// Runs a [`Device`] on one background worker fed by two single-slot
/// queues, one for stores and one for fetches.
pub struct TransferEngine<D: Device> {
    shared: Arc<Shared<D>>,
    stores: Option<Sender<Job>>,
    fetches: Option<Sender<Job>>,
    worker: Option<JoinHandle<()>>,
    next_id: AtomicU64,
    link: Mutex<Link>,
}

impl<D: Device> TransferEngine<D> {
    pub fn new(device: D) -> Self {
        let shared = Arc::new(Shared { device, pending_stores: Mutex::new(HashSet::new()) });
        let (store_tx, store_rx) = bounded(1);
        let (fetch_tx, fetch_rx) = bounded(1);
        let worker_shared = Arc::clone(&shared);
        let worker = std::thread::Builder::new()
            .name("ckpt-transfer".into())
            .spawn(move || worker_loop(&worker_shared, &store_rx, &fetch_rx))
            .expect("spawn transfer worker");
        TransferEngine {
            shared,
            stores: Some(store_tx),
            fetches: Some(fetch_tx),
            worker: Some(worker),
            next_id: AtomicU64::new(0),
            link: Mutex::new(Link::default()),
        }
    }

    pub fn device(&self) -> &D {
        &self.shared.device
    }

    fn ticket(&self, kind: TransferKind, key: StepIndex, len: Option<usize>) -> TransferTicket {
        let not_before = {
            let mut link = self.link.lock().unwrap_or_else(|e| e.into_inner());
            let len = match len {
                Some(len) => {
                    link.sizes.insert(key, len);
                    len
                }
                None => link.sizes.get(&key).copied().unwrap_or(0),
            };
            self.shared.device.link_seconds(len).map(|secs| {
                let now = Instant::now();
                let start = link.free_at.map_or(now, |free| free.max(now));
                let done = start + Duration::from_secs_f64(secs);
                link.free_at = Some(done);
                done
            })
        };
        TransferTicket {
            id: self.next_id.fetch_add(1, Ordering::Relaxed),
            kind,
            key,
            completion: Arc::new(Completion { not_before, ..Completion::default() }),
        }
    }
}

impl<D: Device> Level2Backend for TransferEngine<D> {
    fn begin_store(&self, payload: CheckpointPayload) -> Result<TransferTicket> {
        let ticket = self.ticket(TransferKind::Store, payload.step, Some(payload.len()));
        self.shared.pending_stores.lock().unwrap_or_else(|e| e.into_inner()).insert(payload.step);
        let job = Job::Store(payload, Arc::clone(&ticket.completion));
        let sent = self.stores.as_ref().map(|tx| tx.send(job));
        if !matches!(sent, Some(Ok(()))) {
            self.shared.pending_stores.lock().unwrap_or_else(|e| e.into_inner()).remove(&ticket.key);
            return Err(Error::WorkerGone);
        }
        Ok(ticket)
    }

    fn begin_fetch(&self, key: StepIndex) -> Result<TransferTicket> {
        if !self.contains(key) {
            return Err(Error::MissingKey(key.0));
        }
        let ticket = self.ticket(TransferKind::Fetch, key, None);
        let job = Job::Fetch(key, Arc::clone(&ticket.completion));
        match self.fetches.as_ref().map(|tx| tx.send(job)) {
            Some(Ok(())) => Ok(ticket),
            _ => Err(Error::WorkerGone),
        }
    }

    fn contains(&self, key: StepIndex) -> bool {
        self.shared.pending_stores.lock().unwrap_or_else(|e| e.into_inner()).contains(&key)
            || self.shared.device.contains(key)
    }
}

impl<D: Device> Drop for TransferEngine<D> {
    fn drop(&mut self) {
        self.stores.take();
        self.fetches.take();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

fn worker_loop<D: Device>(shared: &Shared<D>, stores: &Receiver<Job>, fetches: &Receiver<Job>) {
    let mut stores_open = true;
    let mut fetches_open = true;
    while stores_open || fetches_open {
        // stores first, so a fetch never overtakes a queued store of its key
        let job = if let Ok(job) = stores.try_recv() {
            job
        } else if stores_open && fetches_open {
            select_biased! {
                recv(stores) -> msg => match msg {
                    Ok(job) => job,
                    Err(_) => { stores_open = false; continue; }
                },
                recv(fetches) -> msg => match msg {
                    Ok(job) => job,
                    Err(_) => { fetches_open = false; continue; }
                },
            }
        } else if stores_open {
            match stores.recv() {
                Ok(job) => job,
                Err(_) => break,
            }
        } else {
            match fetches.recv() {
                Ok(job) => job,
                Err(_) => break,
            }
        };

        match job {
            Job::Store(payload, done) => {
                let key = payload.step;
                let outcome = shared.device.write(&payload).map(|()| Transfer::Stored);
                shared.pending_stores.lock().unwrap_or_else(|e| e.into_inner()).remove(&key);
                done.complete(outcome);
            }
            Job::Fetch(key, done) => {
                done.complete(shared.device.read(key).map(Transfer::Fetched));
            }
        }
    }
}
