mod common;

use proptest::prelude::*;
use tutoreval::corpus::{self, Speaker, Turn, TutorDialogue, TutorResponse};
use tutoreval::label::{Label, Track};

use common::*;

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ?!.,'\"=+\\-/é√]{0,20}[a-zA-Z0-9]".prop_map(|s| s)
}

fn id() -> impl Strategy<Value = String> {
    "[a-z0-9_\\-]{1,8}"
}

fn dialogue() -> impl Strategy<Value = TutorDialogue> {
    (
        id(),
        prop::option::of(prop_oneof![Just("Bridge".to_string()), Just("MathDial".to_string())]),
        prop::collection::vec((any::<bool>(), text()), 1..6),
        prop::collection::btree_map(
            id(),
            (text(), prop::collection::btree_map(
                prop::sample::select(Track::ALL.to_vec()),
                prop::sample::select(Label::ALL.to_vec()),
                0..4,
            )),
            1..4,
        ),
    )
        .prop_map(|(cid, source, turns, resp)| TutorDialogue {
            conversation_id: cid,
            source,
            history: turns
                .into_iter()
                .map(|(s, t)| Turn { speaker: if s { Speaker::Student } else { Speaker::Tutor }, text: t })
                .collect(),
            responses: resp
                .into_iter()
                .map(|(tid, (t, ann))| (tid.clone(), TutorResponse { tutor_id: tid, text: t, annotations: ann }))
                .collect(),
        })
}

fn corpus_strategy() -> impl Strategy<Value = Vec<TutorDialogue>> {
    prop::collection::vec(dialogue(), 0..5).prop_map(|mut ds| {
        // conversation ids must be unique
        let mut seen = std::collections::HashSet::new();
        ds.retain(|d| seen.insert(d.conversation_id.clone()));
        ds
    })
}

proptest! {
    #[test]
    fn raw_corpus_round_trips(ds in corpus_strategy()) {
        let doc = corpus::write_corpus(&ds);
        prop_assert_eq!(corpus::parse_corpus(&doc).unwrap(), ds);
    }

    #[test]
    fn instruction_jsonl_round_trips(ds in corpus_strategy(), include in any::<bool>()) {
        for track in Track::ALL {
            let records = corpus::track_records(&ds, track, include).unwrap();
            let expected: usize = ds.iter().map(|d| d.responses.values().filter(|r| include || r.annotations.contains_key(&track)).count()).sum();
            prop_assert_eq!(records.len(), expected);
            let doc = corpus::render_jsonl(&records);
            prop_assert_eq!(&corpus::export_track_jsonl(&ds, track, include).unwrap(), &doc);
            prop_assert_eq!(corpus::parse_instruction_jsonl(&doc).unwrap(), records.clone());
            for r in &records {
                prop_assert_eq!(r.instruction.as_str(), corpus::template(track));
            }
        }
    }
}

#[test]
fn two_by_two_fixture_counts() {
    let ds = corpus::read_corpus(fixture("corpus_2x2.json")).unwrap();
    assert_eq!(ds.len(), 2);
    for track in Track::ALL {
        assert_eq!(corpus::track_records(&ds, track, false).unwrap().len(), 4);
    }
}

#[test]
fn golden_files_are_stable() {
    let ds = corpus::read_corpus(fixture("corpus_2x2.json")).unwrap();
    for track in Track::ALL {
        let golden = fixture_text(&format!("golden/{}.jsonl", track.cli_name()));
        assert_eq!(corpus::export_track_jsonl(&ds, track, false).unwrap(), golden, "{track}");
    }
}

#[test]
fn mrbench_shaped_corpus_validates() {
    let ds = corpus::parse_corpus(&mrbench_shaped_corpus()).unwrap();
    let stats = corpus::CorpusStats::compute(&ds);
    assert_eq!(stats.dialogues, 192);
    assert_eq!(stats.by_source["Bridge"], 60);
    assert_eq!(stats.by_source["MathDial"], 132);
    assert_eq!(stats.responses, 1596);
    assert_eq!(stats.mean_turns_by_source["Bridge"], 4.0);
    assert_eq!(stats.mean_turns_by_source["MathDial"], 5.5);
    stats.check_mrbench().unwrap();
}
