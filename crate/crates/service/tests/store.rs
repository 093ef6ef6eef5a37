use std::collections::BTreeSet;
use std::fs;

use bwsrank_core::{Item, ValidationError};
use bwsrank_service::{
    NextTask, ProjectSettings, Registration, Registry, ServiceError, VoteSubmission,
};
use proptest::prelude::*;
use tempfile::TempDir;

fn items(n: usize) -> Vec<Item> {
    (0..n)
        .map(|i| Item::new(format!("e{i:02}"), format!("expression {i}")))
        .collect()
}

fn settings(id: &str, votes_required: usize) -> ProjectSettings {
    ProjectSettings {
        project_id: Some(id.into()),
        ..ProjectSettings::new(7, votes_required)
    }
}

fn setup(n: usize, votes_required: usize) -> (TempDir, Registry) {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    reg.create_project(items(n), settings("p", votes_required))
        .unwrap();
    (dir, reg)
}

fn annotator(reg: &Registry) -> String {
    reg.register_annotator("p", Registration::default())
        .unwrap()
        .annotator_id
}

/// First and last item of the served task: always a valid selection.
fn answer(who: &str, next: &NextTask) -> VoteSubmission {
    let NextTask::Assigned { task, .. } = next else {
        panic!("nothing assigned")
    };
    VoteSubmission {
        annotator_id: who.to_string(),
        task_index: task.task_index,
        best: Some(task.items[0].id.clone()),
        worst: Some(task.items[3].id.clone()),
        elapsed_seconds: 12.5,
    }
}

#[test]
fn fresh_annotator_gets_task_zero_until_answering() {
    let (_d, reg) = setup(10, 3);
    let a = annotator(&reg);
    let first = reg.next_task("p", &a).unwrap();
    assert_eq!(first.task_index(), Some(0));
    assert_eq!(reg.next_task("p", &a).unwrap(), first);
    let b = annotator(&reg);
    // Task 0 is handed out, so the next annotator starts elsewhere.
    assert_eq!(reg.next_task("p", &b).unwrap().task_index(), Some(1));
    reg.submit_vote("p", answer(&a, &first)).unwrap();
    assert_eq!(reg.next_task("p", &a).unwrap().task_index(), Some(2));
}

#[test]
fn four_items_make_one_task() {
    let (_d, reg) = setup(4, 1);
    assert_eq!(reg.summary("p").unwrap().task_count, 1);
}

#[test]
fn duplicate_items_and_bad_tsv_are_rejected() {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let mut dup = items(6);
    dup[4].id = "e01".into();
    let err = reg.create_project(dup, settings("x", 1)).unwrap_err();
    assert_eq!(err.code(), "DUPLICATE_ITEM");
    assert!(err.to_string().contains("e01"));

    let tsv = "id\ttext\tdefinition\na\tone\t\nb\n";
    let err = ServiceError::from(bwsrank_core::formats::parse_items_tsv(tsv).unwrap_err());
    assert_eq!(err.code(), "INGEST_ERROR");
    assert!(err.to_string().contains("line 3"), "{err}");
    assert!(reg.project_ids().is_empty());
}

#[test]
fn creation_is_idempotent_for_identical_input() {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let (a, created) = reg.create_project(items(12), settings("same", 3)).unwrap();
    assert!(created);
    let (b, created) = reg.create_project(items(12), settings("same", 3)).unwrap();
    assert!(!created);
    assert_eq!(a, b);
    let err = reg
        .create_project(items(12), settings("same", 5))
        .unwrap_err();
    assert_eq!(err.code(), "PROJECT_EXISTS");
    assert!(reg
        .create_project(items(12), settings("../evil", 3))
        .is_err());
}

#[test]
fn rejected_votes_leave_no_trace() {
    let (dir, reg) = setup(8, 3);
    let a = annotator(&reg);
    let next = reg.next_task("p", &a).unwrap();
    let good = answer(&a, &next);
    let cases = [
        (None, None, ValidationError::NoValue),
        (good.best.clone(), None, ValidationError::OneColumn),
        (None, good.worst.clone(), ValidationError::OneColumn),
        (
            good.best.clone(),
            good.best.clone(),
            ValidationError::SameValue,
        ),
        (
            good.best.clone(),
            Some("nope".into()),
            ValidationError::NotInTask,
        ),
    ];
    for (best, worst, want) in cases {
        let err = reg
            .submit_vote(
                "p",
                VoteSubmission {
                    best,
                    worst,
                    ..good.clone()
                },
            )
            .unwrap_err();
        assert_eq!(err.code(), want.code());
    }
    let bad_time = VoteSubmission {
        elapsed_seconds: -1.0,
        ..good.clone()
    };
    assert_eq!(
        reg.submit_vote("p", bad_time).unwrap_err().code(),
        "INVALID_INPUT"
    );
    assert_eq!(
        reg.progress("p", Some(&a)).unwrap().annotator_completed,
        Some(0)
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("p/votes.ndjson")).unwrap(),
        ""
    );

    let receipt = reg.submit_vote("p", good.clone()).unwrap();
    assert_eq!(receipt.progress.annotator_completed, Some(1));
    let err = reg.submit_vote("p", good).unwrap_err();
    assert_eq!(err.code(), "DUPLICATE_SUBMISSION");
    assert_eq!(
        fs::read_to_string(dir.path().join("p/votes.ndjson"))
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn unknown_ids_are_not_found() {
    let (_d, reg) = setup(6, 1);
    assert_eq!(reg.next_task("nope", "x").unwrap_err().code(), "NOT_FOUND");
    assert_eq!(reg.next_task("p", "x").unwrap_err().code(), "NOT_FOUND");
    assert_eq!(
        reg.progress("p", Some("x")).unwrap_err().code(),
        "NOT_FOUND"
    );
    let a = annotator(&reg);
    let sub = VoteSubmission {
        annotator_id: a,
        task_index: 999,
        best: None,
        worst: None,
        elapsed_seconds: 1.0,
    };
    assert_eq!(reg.submit_vote("p", sub).unwrap_err().code(), "NOT_FOUND");
}

#[test]
fn annotator_who_answered_everything_is_done() {
    let (_d, reg) = setup(9, 100);
    let a = annotator(&reg);
    let total = reg.summary("p").unwrap().task_count;
    for _ in 0..total {
        let next = reg.next_task("p", &a).unwrap();
        reg.submit_vote("p", answer(&a, &next)).unwrap();
    }
    let NextTask::NoneRemaining { progress } = reg.next_task("p", &a).unwrap() else {
        panic!("expected done")
    };
    assert_eq!(progress.annotator_completed, Some(total));
    assert_eq!(progress.completed_tasks, 0);
}

#[test]
fn completed_tasks_stop_being_served() {
    let (_d, reg) = setup(5, 1);
    let total = reg.summary("p").unwrap().task_count;
    let a = annotator(&reg);
    for _ in 0..total {
        let next = reg.next_task("p", &a).unwrap();
        reg.submit_vote("p", answer(&a, &next)).unwrap();
    }
    let b = annotator(&reg);
    assert_eq!(reg.next_task("p", &b).unwrap().task_index(), None);
    let ids: Vec<String> = reg
        .project("p")
        .unwrap()
        .lock()
        .manifest()
        .task_item_ids(0)
        .iter()
        .map(|s| s.to_string())
        .collect();
    let late = VoteSubmission {
        annotator_id: b,
        task_index: 0,
        best: Some(ids[0].clone()),
        worst: Some(ids[1].clone()),
        elapsed_seconds: 1.0,
    };
    assert_eq!(
        reg.submit_vote("p", late).unwrap_err().code(),
        "TASK_COMPLETE"
    );
    let progress = reg.progress("p", None).unwrap();
    assert_eq!(
        (progress.completed_tasks, progress.total_tasks),
        (total, total)
    );
}

#[test]
fn overshoot_keeps_complete_tasks_available() {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let s = ProjectSettings {
        overshoot_allowed: true,
        ..settings("p", 1)
    };
    reg.create_project(items(4), s).unwrap();
    for _ in 0..3 {
        let a = annotator(&reg);
        let next = reg.next_task("p", &a).unwrap();
        reg.submit_vote("p", answer(&a, &next)).unwrap();
    }
    assert_eq!(reg.task_states("p").unwrap()[0].votes_received, 3);
}

#[test]
fn quota_is_reported_for_display() {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let s = ProjectSettings {
        expected_quota: Some(84),
        ..settings("p", 5)
    };
    let (summary, _) = reg.create_project(items(60), s).unwrap();
    let p = reg.progress("p", None).unwrap();
    assert_eq!(
        (p.expected_quota, p.total_tasks, p.completed_tasks),
        (Some(84), summary.task_count, 0)
    );
    assert!((295..=340).contains(&p.total_tasks));
}

#[test]
fn group_filter_applies_at_registration() {
    let dir = TempDir::new().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let s = ProjectSettings {
        group: Some("experts".into()),
        ..settings("p", 3)
    };
    reg.create_project(items(6), s).unwrap();
    let a = reg
        .register_annotator("p", Registration::default())
        .unwrap();
    assert_eq!(a.group, "experts");
    let wrong = Registration {
        group: Some("learners".into()),
        ..Default::default()
    };
    assert_eq!(
        reg.register_annotator("p", wrong).unwrap_err().code(),
        "INVALID_INPUT"
    );
}

#[test]
fn state_survives_reopening() {
    let dir = TempDir::new().unwrap();
    let (before_votes, before_scale, before_states, who) = {
        let reg = Registry::open(dir.path()).unwrap();
        reg.create_project(items(10), settings("p", 2)).unwrap();
        let people: Vec<String> = (0..3).map(|_| annotator(&reg)).collect();
        for _ in 0..5 {
            for a in &people {
                let next = reg.next_task("p", a).unwrap();
                if next.task_index().is_some() {
                    reg.submit_vote("p", answer(a, &next)).unwrap();
                }
            }
        }
        (
            reg.export_votes("p").unwrap(),
            reg.scale("p").unwrap(),
            reg.task_states("p").unwrap(),
            people[0].clone(),
        )
    };
    let reg = Registry::open(dir.path()).unwrap();
    assert_eq!(reg.export_votes("p").unwrap(), before_votes);
    assert_eq!(reg.scale("p").unwrap(), before_scale);
    assert_eq!(reg.task_states("p").unwrap(), before_states);
    let answered: BTreeSet<usize> = before_states
        .iter()
        .filter(|t| t.answered_by.contains(&who))
        .map(|t| t.task_index)
        .collect();
    let next = reg.next_task("p", &who).unwrap().task_index().unwrap();
    assert!(!answered.contains(&next));
}

#[test]
fn torn_log_tail_is_dropped_on_replay() {
    let dir = TempDir::new().unwrap();
    {
        let reg = Registry::open(dir.path()).unwrap();
        reg.create_project(items(6), settings("p", 2)).unwrap();
        let a = annotator(&reg);
        let next = reg.next_task("p", &a).unwrap();
        reg.submit_vote("p", answer(&a, &next)).unwrap();
    }
    let log = dir.path().join("p/votes.ndjson");
    let acknowledged = fs::read_to_string(&log).unwrap();
    fs::write(&log, format!("{acknowledged}{{\"task_index\":1,\"annot")).unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    assert_eq!(reg.progress("p", None).unwrap().total_votes, 1);
    assert_eq!(fs::read_to_string(&log).unwrap(), acknowledged);
}

#[test]
fn corrupt_log_line_is_reported() {
    let dir = TempDir::new().unwrap();
    {
        let reg = Registry::open(dir.path()).unwrap();
        reg.create_project(items(6), settings("p", 2)).unwrap();
    }
    fs::write(dir.path().join("p/votes.ndjson"), "not json\n").unwrap();
    let err = Registry::open(dir.path()).err().unwrap();
    assert!(
        matches!(err, ServiceError::CorruptLog { line: 1, .. }),
        "{err}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random interleavings of fetch/answer steps by several annotators.
    #[test]
    fn interleaved_annotators_never_repeat_and_get_least_voted_task(
        steps in prop::collection::vec(0usize..3, 1..120),
        votes_required in 1usize..4,
    ) {
        let (_d, reg) = setup(8, votes_required);
        let people: Vec<String> = (0..3).map(|_| annotator(&reg)).collect();
        let mut seen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); 3];
        for &who in &steps {
            let before = reg.task_states("p").unwrap();
            let next = reg.next_task("p", &people[who]).unwrap();
            let eligible: Vec<usize> = before
                .iter()
                .filter(|s| !seen[who].contains(&s.task_index) && s.votes_received < votes_required)
                .map(|s| s.votes_received)
                .collect();
            let Some(t) = next.task_index() else {
                prop_assert!(eligible.is_empty());
                continue;
            };
            prop_assert!(seen[who].insert(t), "task {} served twice to annotator {}", t, who);
            prop_assert_eq!(before[t].votes_received, *eligible.iter().min().unwrap());
            reg.submit_vote("p", answer(&people[who], &next)).unwrap();
            for s in &reg.task_states("p").unwrap() {
                prop_assert!(s.votes_received == s.answered_by.len());
                prop_assert!(s.votes_received <= votes_required);
            }
        }
    }

    /// Fresh annotators answering one task each keep every task within one
    /// vote of the others until all are complete.
    #[test]
    fn fresh_annotators_keep_counts_within_one(n in 5usize..14, votes_required in 1usize..6) {
        let (_d, reg) = setup(n, votes_required);
        let total = reg.summary("p").unwrap().task_count;
        for _ in 0..total * votes_required {
            let a = annotator(&reg);
            let next = reg.next_task("p", &a).unwrap();
            reg.submit_vote("p", answer(&a, &next)).unwrap();
            let counts: Vec<usize> = reg.task_states("p").unwrap().iter().map(|s| s.votes_received).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "vote counts {:?}", counts);
        }
        prop_assert_eq!(reg.progress("p", None).unwrap().completed_tasks, total);
        let a = annotator(&reg);
        prop_assert_eq!(reg.next_task("p", &a).unwrap().task_index(), None);
    }
}

#[test]
fn reserved_slots_are_not_handed_out_twice() {
    let (_d, reg) = setup(4, 1);
    let (a, b) = (annotator(&reg), annotator(&reg));
    let held = reg.next_task("p", &a).unwrap();
    assert_eq!(held.task_index(), Some(0));
    assert!(matches!(
        reg.next_task("p", &b).unwrap(),
        NextTask::AllReserved { .. }
    ));
    reg.submit_vote("p", answer(&a, &held)).unwrap();
    assert!(matches!(
        reg.next_task("p", &b).unwrap(),
        NextTask::NoneRemaining { .. }
    ));
}

#[test]
fn expired_reservations_return_to_the_pool() {
    let dir = TempDir::new().unwrap();
    let mut reg = Registry::open(dir.path()).unwrap();
    reg.set_reservation_ttl(std::time::Duration::ZERO);
    reg.create_project(items(4), settings("p", 1)).unwrap();
    let (a, b) = (annotator(&reg), annotator(&reg));
    let stale = reg.next_task("p", &a).unwrap();
    let fresh = reg.next_task("p", &b).unwrap();
    assert_eq!(fresh.task_index(), Some(0));
    reg.submit_vote("p", answer(&b, &fresh)).unwrap();
    assert_eq!(
        reg.submit_vote("p", answer(&a, &stale)).unwrap_err().code(),
        "TASK_COMPLETE"
    );
}
