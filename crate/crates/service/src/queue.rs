//! Job table plus a single FIFO worker. Geometry is memory-heavy, so only one
//! step runs at a time; reads always see the last committed snapshot.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex};

use magdisplay::pipeline::{Job, JobState};
use magdisplay::{Error, Result};
use serde::Serialize;
use tokio::sync::mpsc;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    Generate,
    Plan,
    /// `None` splices into synthesized perimeters.
    Postprocess { gcode: Option<String> },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Generate => "generate",
            Action::Plan => "plan",
            Action::Postprocess { .. } => "postprocess",
        }
    }

    /// State a job must be in for this action to run.
    fn requires(&self) -> JobState {
        match self {
            Action::Generate => JobState::Created,
            Action::Plan => JobState::Generated,
            Action::Postprocess { .. } => JobState::Planned,
        }
    }

    fn produces(&self) -> JobState {
        match self {
            Action::Generate => JobState::Generated,
            Action::Plan => JobState::Planned,
            Action::Postprocess { .. } => JobState::Postprocessed,
        }
    }

    fn apply(&self, job: &mut Job) -> Result<()> {
        match self {
            Action::Generate => job.generate(),
            Action::Plan => job.plan(),
            Action::Postprocess { gcode } => job.postprocess(gcode.as_deref()),
        }
    }
}

/// Worker log entry, used to show that steps never interleave.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub job: u64,
    pub action: &'static str,
    pub phase: &'static str,
}

#[derive(Default)]
struct Table {
    next_id: u64,
    jobs: BTreeMap<u64, Job>,
    queue: VecDeque<(u64, Action)>,
    running: Option<(u64, Action)>,
    log: Vec<Event>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QueueStatus {
    pub running: Option<(u64, &'static str)>,
    pub queued: Vec<(u64, &'static str)>,
    pub log: Vec<Event>,
}

#[derive(Clone)]
pub struct JobQueue {
    table: Arc<Mutex<Table>>,
    wake: mpsc::UnboundedSender<()>,
}

impl JobQueue {
    /// Starts the worker on the current tokio runtime.
    pub fn start() -> Self {
        let (tx, rx) = mpsc::unbounded_channel();
        let q = JobQueue {
            table: Arc::new(Mutex::new(Table {
                next_id: 1,
                ..Default::default()
            })),
            wake: tx,
        };
        tokio::spawn(q.clone().work(rx));
        q
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Table> {
        self.table.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn create(&self, make: impl FnOnce(u64) -> Job) -> u64 {
        let mut t = self.lock();
        let id = t.next_id;
        t.next_id += 1;
        t.jobs.insert(id, make(id));
        id
    }

    /// Copy of the job as last committed.
    pub fn snapshot(&self, id: u64) -> Option<Job> {
        self.lock().jobs.get(&id).cloned()
    }

    pub fn read<T>(&self, id: u64, f: impl FnOnce(&Job) -> T) -> Option<T> {
        self.lock().jobs.get(&id).map(f)
    }

    pub fn ids(&self) -> Vec<u64> {
        self.lock().jobs.keys().copied().collect()
    }

    /// Queues `action` if it follows the job's state once already-queued
    /// steps have run. Returns the queue position (0 = next).
    pub fn enqueue(&self, id: u64, action: Action) -> Result<usize> {
        let mut t = self.lock();
        let job = t.jobs.get(&id).ok_or_else(|| Error::InvalidArgument(format!("no job {id}")))?;
        let mut projected = job.state();
        let running = t.running.iter().filter(|(j, _)| *j == id).map(|(_, a)| a);
        for a in running.chain(t.queue.iter().filter(|(j, _)| *j == id).map(|(_, a)| a)) {
            projected = a.produces();
        }
        if projected != action.requires() {
            return Err(Error::JobState(format!(
                "cannot {} job {id}: it will be {} (needs {})",
                action.name(),
                projected.as_str(),
                action.requires().as_str()
            )));
        }
        t.queue.push_back((id, action));
        let position = t.queue.len() - 1 + usize::from(t.running.is_some());
        drop(t);
        let _ = self.wake.send(());
        Ok(position)
    }

    pub fn status(&self) -> QueueStatus {
        let t = self.lock();
        QueueStatus {
            running: t.running.as_ref().map(|(j, a)| (*j, a.name())),
            queued: t.queue.iter().map(|(j, a)| (*j, a.name())).collect(),
            log: t.log.clone(),
        }
    }

    /// Position of `id` in the worker: "running", "queued" or "idle".
    pub fn activity(&self, id: u64) -> &'static str {
        let t = self.lock();
        if t.running.as_ref().is_some_and(|(j, _)| *j == id) {
            "running"
        } else if t.queue.iter().any(|(j, _)| *j == id) {
            "queued"
        } else {
            "idle"
        }
    }

    async fn work(self, mut wake: mpsc::UnboundedReceiver<()>) {
        loop {
            let next = {
                let mut t = self.lock();
                let next = t.queue.pop_front();
                if let Some((id, a)) = &next {
                    t.running = Some((*id, a.clone()));
                    t.log.push(Event {
                        job: *id,
                        action: a.name(),
                        phase: "start",
                    });
                }
                next.and_then(|(id, a)| t.jobs.get(&id).cloned().map(|job| (id, a, job)))
            };
            let Some((id, action, mut job)) = next else {
                if wake.recv().await.is_none() {
                    return;
                }
                continue;
            };
            let (job, outcome) = tokio::task::spawn_blocking(move || {
                let r = action.apply(&mut job);
                (job, r.map_err(|e| e.code()))
            })
            .await
            .expect("job step panicked");
            if let Err(code) = outcome {
                log::warn!("job {id} failed: {code}");
            }
            let mut t = self.lock();
            let name = t.running.take().map(|(_, a)| a.name()).unwrap_or("?");
            t.log.push(Event {
                job: id,
                action: name,
                phase: "end",
            });
            t.jobs.insert(id, job);
        }
    }
}
