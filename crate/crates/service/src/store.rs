//! Project state, scheduling and the on-disk logs.
//!
//! Each project lives in its own directory:
//!
//! ```text
//! <root>/<project_id>/project.json      manifest (items, design, settings)
//! <root>/<project_id>/design.tsv        the design, one task per line
//! <root>/<project_id>/annotators.ndjson append-only registrations
//! <root>/<project_id>/votes.ndjson      append-only accepted votes
//! ```
//!
//! State is rebuilt from the logs when the registry is opened. A record is
//! written and synced before the caller sees it acknowledged.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bwsrank_core::judgments::check_items;
use bwsrank_core::{
    aggregate_scale, formats, generate_design, validate_vote, Design, Item, RankedScale, Vote,
};
use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const MANIFEST_FILE: &str = "project.json";
pub const DESIGN_FILE: &str = "design.tsv";
pub const ANNOTATORS_LOG: &str = "annotators.ndjson";
pub const VOTES_LOG: &str = "votes.ndjson";

/// Recorded in every manifest.
pub const SCHEDULER_POLICY: &str = "fewest_votes_first";
pub const DEFAULT_GROUP: &str = "default";

/// How long a handed-out task stays reserved for its annotator.
pub const DEFAULT_RESERVATION_TTL: Duration = Duration::from_secs(30 * 60);

fn default_block_size() -> usize {
    bwsrank_core::design::DEFAULT_BLOCK_SIZE
}

/// Everything needed to create a project besides its items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSettings {
    /// Explicit id; creation is idempotent when the rest matches.
    #[serde(default)]
    pub project_id: Option<String>,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    pub seed: u64,
    pub votes_required: usize,
    /// Only annotators of this group may register.
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub overshoot_allowed: bool,
    /// Number of tasks each annotator is asked to complete, for display.
    #[serde(default)]
    pub expected_quota: Option<usize>,
}

impl ProjectSettings {
    pub fn new(seed: u64, votes_required: usize) -> Self {
        ProjectSettings {
            project_id: None,
            block_size: default_block_size(),
            seed,
            votes_required,
            group: None,
            overshoot_allowed: false,
            expected_quota: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub project_id: String,
    pub created_at: DateTime<Utc>,
    pub scheduler: String,
    pub block_size: usize,
    pub seed: u64,
    pub votes_required: usize,
    pub group: Option<String>,
    pub overshoot_allowed: bool,
    pub expected_quota: Option<usize>,
    pub items: Vec<Item>,
    pub design: Design,
}

impl Manifest {
    fn same_input(&self, items: &[Item], s: &ProjectSettings) -> bool {
        self.items == items
            && self.block_size == s.block_size
            && self.seed == s.seed
            && self.votes_required == s.votes_required
            && self.group == s.group
            && self.overshoot_allowed == s.overshoot_allowed
            && self.expected_quota == s.expected_quota
    }

    pub fn summary(&self) -> ProjectSummary {
        ProjectSummary {
            project_id: self.project_id.clone(),
            created_at: self.created_at,
            scheduler: self.scheduler.clone(),
            n_items: self.items.len(),
            task_count: self.design.len(),
            block_size: self.block_size,
            seed: self.seed,
            votes_required: self.votes_required,
            group: self.group.clone(),
            overshoot_allowed: self.overshoot_allowed,
            expected_quota: self.expected_quota,
        }
    }

    /// Item ids of one task, in design order.
    pub fn task_item_ids(&self, task_index: usize) -> Vec<&str> {
        self.design.tasks()[task_index]
            .iter()
            .map(|&i| self.items[i].id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub project_id: String,
    pub created_at: DateTime<Utc>,
    pub scheduler: String,
    pub n_items: usize,
    pub task_count: usize,
    pub block_size: usize,
    pub seed: u64,
    pub votes_required: usize,
    pub group: Option<String>,
    pub overshoot_allowed: bool,
    pub expected_quota: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    #[serde(default)]
    pub group: Option<String>,
    /// Self-reported background; stored, never interpreted.
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotator {
    pub annotator_id: String,
    pub group: String,
    pub metadata: BTreeMap<String, String>,
    pub registered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskState {
    pub task_index: usize,
    pub votes_received: usize,
    pub answered_by: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_index: usize,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub total_tasks: usize,
    /// Tasks that reached the vote quota.
    pub completed_tasks: usize,
    pub total_votes: usize,
    pub votes_required: usize,
    pub expected_quota: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    /// Tasks answered by `annotator_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_completed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Assigned {
        task: TaskView,
        progress: Progress,
    },
    /// Open work exists but every remaining slot is held by someone else.
    AllReserved {
        progress: Progress,
    },
    NoneRemaining {
        progress: Progress,
    },
}

impl NextTask {
    pub fn task_index(&self) -> Option<usize> {
        match self {
            NextTask::Assigned { task, .. } => Some(task.task_index),
            NextTask::AllReserved { .. } | NextTask::NoneRemaining { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSubmission {
    pub annotator_id: String,
    pub task_index: usize,
    #[serde(default)]
    pub best: Option<String>,
    #[serde(default)]
    pub worst: Option<String>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub task_index: usize,
    pub submitted_at: DateTime<Utc>,
    pub progress: Progress,
}

/// Current time at millisecond precision, the resolution of exported timestamps.
fn now_millis() -> DateTime<Utc> {
    let now = Utc::now();
    DateTime::from_timestamp_millis(now.timestamp_millis()).unwrap_or(now)
}

fn check_project_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ServiceError::InvalidInput(format!(
            "project id {id:?} must be 1-64 characters of [A-Za-z0-9_-]"
        )))
    }
}

fn open_log(path: &Path) -> io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

/// Appends one JSON line and syncs it. A failed write is rolled back so the
/// log never keeps a torn record ahead of later ones.
fn append_record<T: Serialize>(file: &mut File, record: &T) -> Result<()> {
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    let len = file.metadata()?.len();
    if let Err(e) = file.write_all(&line).and_then(|_| file.sync_data()) {
        let _ = file.set_len(len);
        return Err(e.into());
    }
    Ok(())
}

/// Reads a JSON-lines log. An unterminated final line is the remains of an
/// append that was never acknowledged; it is cut off.
fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(complete as u64)?;
        bytes.truncate(complete);
    }
    let corrupt = |line: usize, message: String| ServiceError::CorruptLog {
        path: path.to_path_buf(),
        line,
        message,
    };
    let text = String::from_utf8(bytes).map_err(|e| corrupt(0, e.to_string()))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| corrupt(i + 1, e.to_string())))
        .collect()
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One project's live state. Every mutation goes through `&mut self`, so a
/// project is single-writer by construction.
pub struct Project {
    manifest: Manifest,
    annotators: HashMap<String, Annotator>,
    tasks: Vec<TaskState>,
    votes: Vec<Vote>,
    answered: HashMap<String, usize>,
    /// Task currently handed out to each annotator, and when.
    pending: HashMap<String, (usize, Instant)>,
    reserved: Vec<usize>,
    reservation_ttl: Duration,
    vote_log: File,
    annotator_log: File,
}

impl Project {
    fn create(dir: &Path, manifest: Manifest) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut tsv = Vec::new();
        for task in manifest.design.tasks() {
            let ids: Vec<&str> = task
                .iter()
                .map(|&i| manifest.items[i].id.as_str())
                .collect();
            writeln!(tsv, "{}", ids.join("\t"))?;
        }
        write_atomically(&dir.join(DESIGN_FILE), &tsv)?;
        write_atomically(
            &dir.join(MANIFEST_FILE),
            &serde_json::to_vec_pretty(&manifest)?,
        )?;
        Project::load(dir)
    }

    fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
        let n_tasks = manifest.design.len();
        let annotators_path = dir.join(ANNOTATORS_LOG);
        let votes_path = dir.join(VOTES_LOG);
        let registered: Vec<Annotator> = read_log(&annotators_path)?;
        let logged: Vec<Vote> = read_log(&votes_path)?;
        let mut project = Project {
            tasks: (0..n_tasks)
                .map(|task_index| TaskState {
                    task_index,
                    votes_received: 0,
                    answered_by: BTreeSet::new(),
                })
                .collect(),
            manifest,
            annotators: HashMap::new(),
            votes: Vec::new(),
            answered: HashMap::new(),
            pending: HashMap::new(),
            reserved: vec![0; n_tasks],
            reservation_ttl: DEFAULT_RESERVATION_TTL,
            vote_log: open_log(&votes_path)?,
            annotator_log: open_log(&annotators_path)?,
        };
        for (i, a) in registered.into_iter().enumerate() {
            if project.annotators.contains_key(&a.annotator_id) {
                return Err(ServiceError::CorruptLog {
                    path: annotators_path,
                    line: i + 1,
                    message: format!("annotator {} registered twice", a.annotator_id),
                });
            }
            project.annotators.insert(a.annotator_id.clone(), a);
        }
        for (i, v) in logged.into_iter().enumerate() {
            if let Err(e) = project.check_vote(
                &v.annotator_id,
                v.task_index,
                Some(&v.best),
                Some(&v.worst),
                false,
            ) {
                return Err(ServiceError::CorruptLog {
                    path: votes_path,
                    line: i + 1,
                    message: e.to_string(),
                });
            }
            project.apply(v);
        }
        Ok(project)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn task_states(&self) -> &[TaskState] {
        &self.tasks
    }

    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    pub fn annotator(&self, annotator_id: &str) -> Result<&Annotator> {
        self.annotators
            .get(annotator_id)
            .ok_or_else(|| ServiceError::NotFound(format!("annotator {annotator_id}")))
    }

    fn register(&mut self, reg: Registration) -> Result<Annotator> {
        let group = match (reg.group, &self.manifest.group) {
            (Some(g), Some(want)) if &g != want => {
                return Err(ServiceError::InvalidInput(format!(
                    "project only accepts group {want:?}, got {g:?}"
                )))
            }
            (Some(g), _) => g,
            (None, Some(want)) => want.clone(),
            (None, None) => DEFAULT_GROUP.to_string(),
        };
        if group.trim().is_empty() {
            return Err(ServiceError::InvalidInput("group must not be empty".into()));
        }
        let annotator = Annotator {
            annotator_id: uuid::Uuid::new_v4().simple().to_string(),
            group,
            metadata: reg.metadata,
            registered_at: now_millis(),
        };
        append_record(&mut self.annotator_log, &annotator)?;
        self.annotators
            .insert(annotator.annotator_id.clone(), annotator.clone());
        Ok(annotator)
    }

    fn complete(&self, task_index: usize) -> bool {
        self.tasks[task_index].votes_received >= self.manifest.votes_required
    }

    fn schedulable(&self, task_index: usize, annotator_id: &str) -> bool {
        !self.tasks[task_index].answered_by.contains(annotator_id)
            && (self.manifest.overshoot_allowed || !self.complete(task_index))
    }

    /// Has room for one more hand-out without exceeding the quota.
    fn has_open_slot(&self, task_index: usize) -> bool {
        self.manifest.overshoot_allowed
            || self.tasks[task_index].votes_received + self.reserved[task_index]
                < self.manifest.votes_required
    }

    fn holds(&self, annotator_id: &str, task_index: usize) -> bool {
        self.pending
            .get(annotator_id)
            .is_some_and(|&(t, _)| t == task_index)
    }

    fn release(&mut self, annotator_id: &str) {
        if let Some((t, _)) = self.pending.remove(annotator_id) {
            self.reserved[t] -= 1;
        }
    }

    fn expire_reservations(&mut self, now: Instant) {
        let ttl = self.reservation_ttl;
        let stale: Vec<String> = self
            .pending
            .iter()
            .filter(|(_, &(_, at))| now.duration_since(at) >= ttl)
            .map(|(a, _)| a.clone())
            .collect();
        for a in stale {
            self.release(&a);
        }
    }

    /// Fewest votes first, counting tasks handed out but not yet answered;
    /// ties go to the lowest index. Re-asking returns the same task.
    fn next_task(&mut self, annotator_id: &str) -> Result<NextTask> {
        self.annotator(annotator_id)?;
        let now = Instant::now();
        self.expire_reservations(now);
        let held = self.pending.get(annotator_id).map(|&(t, _)| t);
        let pick = match held {
            Some(t) if self.schedulable(t, annotator_id) => Some(t),
            _ => {
                self.release(annotator_id);
                let pick = (0..self.tasks.len())
                    .filter(|&t| self.schedulable(t, annotator_id) && self.has_open_slot(t))
                    .min_by_key(|&t| (self.tasks[t].votes_received + self.reserved[t], t));
                if let Some(t) = pick {
                    self.pending.insert(annotator_id.to_string(), (t, now));
                    self.reserved[t] += 1;
                }
                pick
            }
        };
        let progress = self.progress(Some(annotator_id))?;
        Ok(match pick {
            Some(task_index) => {
                let items = self.manifest.design.tasks()[task_index]
                    .iter()
                    .map(|&i| self.manifest.items[i].clone())
                    .collect();
                NextTask::Assigned {
                    task: TaskView { task_index, items },
                    progress,
                }
            }
            None if (0..self.tasks.len()).any(|t| self.schedulable(t, annotator_id)) => {
                NextTask::AllReserved { progress }
            }
            None => NextTask::NoneRemaining { progress },
        })
    }

    fn check_vote(
        &self,
        annotator_id: &str,
        task_index: usize,
        best: Option<&str>,
        worst: Option<&str>,
        enforce_quota: bool,
    ) -> Result<()> {
        self.annotator(annotator_id)?;
        if task_index >= self.tasks.len() {
            return Err(ServiceError::NotFound(format!("task {task_index}")));
        }
        if self.tasks[task_index].answered_by.contains(annotator_id) {
            return Err(ServiceError::DuplicateSubmission {
                annotator_id: annotator_id.to_string(),
                task_index,
            });
        }
        validate_vote(&self.manifest.task_item_ids(task_index), best, worst)?;
        // A task handed out before it filled up may still be answered.
        if enforce_quota
            && !self.manifest.overshoot_allowed
            && self.complete(task_index)
            && !self.holds(annotator_id, task_index)
        {
            return Err(ServiceError::TaskComplete(task_index));
        }
        Ok(())
    }

    fn apply(&mut self, vote: Vote) {
        let t = &mut self.tasks[vote.task_index];
        t.answered_by.insert(vote.annotator_id.clone());
        t.votes_received = t.answered_by.len();
        *self.answered.entry(vote.annotator_id.clone()).or_default() += 1;
        if self.holds(&vote.annotator_id, vote.task_index) {
            self.release(&vote.annotator_id);
        }
        self.votes.push(vote);
    }

    fn submit(&mut self, s: VoteSubmission) -> Result<Receipt> {
        self.check_vote(
            &s.annotator_id,
            s.task_index,
            s.best.as_deref(),
            s.worst.as_deref(),
            true,
        )?;
        if !s.elapsed_seconds.is_finite() || s.elapsed_seconds < 0.0 {
            return Err(ServiceError::InvalidInput(format!(
                "elapsed_seconds must be a non-negative number, got {}",
                s.elapsed_seconds
            )));
        }
        let vote = Vote {
            task_index: s.task_index,
            group: self.annotators[&s.annotator_id].group.clone(),
            annotator_id: s.annotator_id,
            // Both present: validation passed.
            best: s.best.unwrap_or_default(),
            worst: s.worst.unwrap_or_default(),
            elapsed_seconds: s.elapsed_seconds,
            submitted_at: now_millis(),
        };
        append_record(&mut self.vote_log, &vote)?;
        let receipt_time = vote.submitted_at;
        let annotator_id = vote.annotator_id.clone();
        self.apply(vote);
        Ok(Receipt {
            task_index: s.task_index,
            submitted_at: receipt_time,
            progress: self.progress(Some(&annotator_id))?,
        })
    }

    pub fn progress(&self, annotator_id: Option<&str>) -> Result<Progress> {
        let annotator_completed = match annotator_id {
            Some(a) => {
                self.annotator(a)?;
                Some(self.answered.get(a).copied().unwrap_or(0))
            }
            None => None,
        };
        Ok(Progress {
            total_tasks: self.tasks.len(),
            completed_tasks: (0..self.tasks.len()).filter(|&t| self.complete(t)).count(),
            total_votes: self.votes.len(),
            votes_required: self.manifest.votes_required,
            expected_quota: self.manifest.expected_quota,
            annotator_id: annotator_id.map(str::to_string),
            annotator_completed,
        })
    }

    pub fn export_votes(&self) -> Result<String> {
        Ok(formats::votes_to_csv(&self.votes)?)
    }

    pub fn scale(&self) -> Result<RankedScale> {
        Ok(aggregate_scale(
            &self.manifest.design,
            &self.manifest.items,
            &self.votes,
        )?)
    }
}

/// All projects under one data directory.
pub struct Registry {
    root: PathBuf,
    reservation_ttl: Duration,
    projects: RwLock<BTreeMap<String, Arc<Mutex<Project>>>>,
}

impl Registry {
    /// Opens (creating if needed) a data directory and replays every project in it.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut projects = BTreeMap::new();
        for entry in fs::read_dir(&root)? {
            let dir = entry?.path();
            if !dir.join(MANIFEST_FILE).is_file() {
                continue;
            }
            let project = Project::load(&dir)?;
            projects.insert(
                project.manifest.project_id.clone(),
                Arc::new(Mutex::new(project)),
            );
        }
        Ok(Registry {
            root,
            reservation_ttl: DEFAULT_RESERVATION_TTL,
            projects: RwLock::new(projects),
        })
    }

    /// Changes how long handed-out tasks stay reserved, for all projects.
    pub fn set_reservation_ttl(&mut self, ttl: Duration) {
        self.reservation_ttl = ttl;
        for p in self.projects.get_mut().values() {
            p.lock().reservation_ttl = ttl;
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.read().keys().cloned().collect()
    }

    /// Creates a project. Returns the summary and whether it was newly created;
    /// repeating a request with the same explicit id and input is a no-op.
    pub fn create_project(
        &self,
        items: Vec<Item>,
        settings: ProjectSettings,
    ) -> Result<(ProjectSummary, bool)> {
        if settings.votes_required == 0 {
            return Err(ServiceError::InvalidInput(
                "votes_required must be at least 1".into(),
            ));
        }
        check_items(&items)?;
        let project_id = match &settings.project_id {
            Some(id) => {
                check_project_id(id)?;
                if let Some(existing) = self.projects.read().get(id) {
                    return Self::existing(&existing.lock(), &items, &settings);
                }
                id.clone()
            }
            None => uuid::Uuid::new_v4().simple().to_string(),
        };
        let design = generate_design(items.len(), settings.block_size, settings.seed)?;
        let manifest = Manifest {
            project_id: project_id.clone(),
            created_at: now_millis(),
            scheduler: SCHEDULER_POLICY.to_string(),
            block_size: settings.block_size,
            seed: settings.seed,
            votes_required: settings.votes_required,
            group: settings.group.clone(),
            overshoot_allowed: settings.overshoot_allowed,
            expected_quota: settings.expected_quota,
            items: items.clone(),
            design,
        };
        let mut projects = self.projects.write();
        if let Some(existing) = projects.get(&project_id) {
            return Self::existing(&existing.lock(), &items, &settings);
        }
        let dir = self.root.join(&project_id);
        if dir.join(MANIFEST_FILE).exists() {
            return Err(ServiceError::ProjectExists(project_id));
        }
        let mut project = Project::create(&dir, manifest)?;
        project.reservation_ttl = self.reservation_ttl;
        let summary = project.manifest.summary();
        projects.insert(project_id, Arc::new(Mutex::new(project)));
        Ok((summary, true))
    }

    fn existing(
        p: &Project,
        items: &[Item],
        settings: &ProjectSettings,
    ) -> Result<(ProjectSummary, bool)> {
        if p.manifest.same_input(items, settings) {
            Ok((p.manifest.summary(), false))
        } else {
            Err(ServiceError::ProjectExists(p.manifest.project_id.clone()))
        }
    }

    pub fn project(&self, project_id: &str) -> Result<Arc<Mutex<Project>>> {
        self.projects
            .read()
            .get(project_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("project {project_id}")))
    }

    fn with<T>(&self, project_id: &str, f: impl FnOnce(&mut Project) -> Result<T>) -> Result<T> {
        let project = self.project(project_id)?;
        let mut guard = project.lock();
        f(&mut guard)
    }

    pub fn summary(&self, project_id: &str) -> Result<ProjectSummary> {
        self.with(project_id, |p| Ok(p.manifest.summary()))
    }

    pub fn register_annotator(&self, project_id: &str, reg: Registration) -> Result<Annotator> {
        self.with(project_id, |p| p.register(reg))
    }

    pub fn next_task(&self, project_id: &str, annotator_id: &str) -> Result<NextTask> {
        self.with(project_id, |p| p.next_task(annotator_id))
    }

    pub fn submit_vote(&self, project_id: &str, submission: VoteSubmission) -> Result<Receipt> {
        self.with(project_id, |p| p.submit(submission))
    }

    pub fn progress(&self, project_id: &str, annotator_id: Option<&str>) -> Result<Progress> {
        self.with(project_id, |p| p.progress(annotator_id))
    }

    pub fn export_votes(&self, project_id: &str) -> Result<String> {
        self.with(project_id, |p| p.export_votes())
    }

    pub fn scale(&self, project_id: &str) -> Result<RankedScale> {
        self.with(project_id, |p| p.scale())
    }

    pub fn task_states(&self, project_id: &str) -> Result<Vec<TaskState>> {
        self.with(project_id, |p| Ok(p.tasks.clone()))
    }
}
