//! Caption-to-triplet extraction, counter-actions, and the three prompt
//! families: class-name prompts, bidirectional interaction prompts, and
//! decomposed interaction-pair prompts.

mod counter;
mod lexicon;

pub use counter::{counter_action, CounterActionBackend, LlmClient, LlmConfig};
pub use lexicon::VerbLexicon;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("vocabulary has no {0} categories")]
    EmptyVocabulary(&'static str),
    #[error("duplicate category '{0}' in vocabulary")]
    DuplicateCategory(String),
    #[error("base category '{0}' not present in the vocabulary")]
    UnknownBaseCategory(String),
    #[error("LLM endpoint {url} unavailable: {reason}")]
    LlmUnavailable { url: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed triplet record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// A subject-predicate-object statement, optionally grounded with boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl Triplet {
    /// Ungrounded triplet; components are trimmed and lowercased.
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        Self {
            subject: subject.trim().to_lowercase(),
            predicate: predicate.trim().to_lowercase(),
            object: object.trim().to_lowercase(),
            subject_box: None,
            object_box: None,
            confidence: None,
        }
    }

    pub fn with_boxes(mut self, subject_box: BoundingBox, object_box: BoundingBox) -> Self {
        self.subject_box = Some(subject_box);
        self.object_box = Some(object_box);
        self
    }
}

/// Forward and reversed phrasings of one interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidirectionalPrompt {
    /// "subject predicate object"
    pub forward: String,
    /// "object counter-action subject"
    pub backward: String,
    /// forward + ". " + backward + "."
    pub combined: String,
}

/// Object and predicate category lists with a base/novel partition.
/// Base and novel index sets are disjoint and exhaustive by construction.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    objects: Vec<String>,
    predicates: Vec<String>,
    base_objects: Vec<bool>,
    base_predicates: Vec<bool>,
    object_index: HashMap<String, usize>,
    predicate_index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary where every category is base.
    pub fn new(objects: Vec<String>, predicates: Vec<String>) -> Result<Self, TextError> {
        let base_objects = objects.clone();
        let base_predicates = predicates.clone();
        Self::with_base_split(objects, predicates, &base_objects, &base_predicates)
    }

    /// Vocabulary with explicit base categories; everything else is novel.
    pub fn with_base_split(
        objects: Vec<String>,
        predicates: Vec<String>,
        base_objects: &[String],
        base_predicates: &[String],
    ) -> Result<Self, TextError> {
        let object_index = index_of(&objects)?;
        let predicate_index = index_of(&predicates)?;
        let mut base_o = vec![false; objects.len()];
        for name in base_objects {
            let id = object_index
                .get(name)
                .ok_or_else(|| TextError::UnknownBaseCategory(name.clone()))?;
            base_o[*id] = true;
        }
        let mut base_p = vec![false; predicates.len()];
        for name in base_predicates {
            let id = predicate_index
                .get(name)
                .ok_or_else(|| TextError::UnknownBaseCategory(name.clone()))?;
            base_p[*id] = true;
        }
        Ok(Self {
            objects,
            predicates,
            base_objects: base_o,
            base_predicates: base_p,
            object_index,
            predicate_index,
        })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn object_id(&self, name: &str) -> Option<usize> {
        self.object_index.get(name).copied()
    }

    pub fn predicate_id(&self, name: &str) -> Option<usize> {
        self.predicate_index.get(name).copied()
    }

    /// Categories absent from the vocabulary count as novel: anything the
    /// base training set never saw is beyond it by definition.
    pub fn is_novel_object(&self, name: &str) -> bool {
        match self.object_index.get(name) {
            Some(&id) => !self.base_objects[id],
            None => true,
        }
    }

    pub fn is_novel_predicate(&self, name: &str) -> bool {
        match self.predicate_index.get(name) {
            Some(&id) => !self.base_predicates[id],
            None => true,
        }
    }
}

fn index_of(names: &[String]) -> Result<HashMap<String, usize>, TextError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if map.insert(name.clone(), i).is_some() {
            return Err(TextError::DuplicateCategory(name.clone()));
        }
    }
    Ok(map)
}

/// Lowercased tokens with surrounding punctuation stripped.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric() && c != '-')
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

const ARTICLES: &[&str] = &["a", "an", "the"];

fn is_article(token: &str) -> bool {
    ARTICLES.contains(&token)
}

/// Extract subject-verb-object triplets from a caption with a pattern
/// grammar over `lexicon`: scan left to right for the longest predicate
/// match, take the nearest non-article token on each side, and continue
/// after the object. Unparseable captions yield an empty list.
pub fn parse_caption(caption: &str, lexicon: &VerbLexicon) -> Vec<Triplet> {
    let tokens = tokenize(caption);
    let mut triplets = Vec::new();
    let mut pos = 1; // a predicate at position 0 has no subject
    while pos + 1 < tokens.len() {
        let Some(len) = lexicon.match_at(&tokens, pos) else {
            pos += 1;
            continue;
        };
        let subject = tokens[..pos].iter().rev().find(|t| !is_article(t));
        let object = tokens[pos + len..].iter().find(|t| !is_article(t));
        match (subject, object) {
            (Some(s), Some(o)) => {
                let predicate = tokens[pos..pos + len].join(" ");
                triplets.push(Triplet::new(s, &predicate, o));
                // skip past the object token
                let obj_offset = tokens[pos + len..]
                    .iter()
                    .position(|t| !is_article(t))
                    .unwrap();
                pos = pos + len + obj_offset + 1;
            }
            _ => pos += len,
        }
    }
    triplets
}

/// Forward + reversed phrasing of a triplet, using `backend` for the
/// counter-action. Propagates [`TextError::LlmUnavailable`] from the LLM
/// backend.
pub fn build_bidirectional_prompt(
    triplet: &Triplet,
    backend: &CounterActionBackend,
) -> Result<BidirectionalPrompt, TextError> {
    let counter = counter_action(&triplet.predicate, backend)?;
    let forward = format!(
        "{} {} {}",
        triplet.subject, triplet.predicate, triplet.object
    );
    let backward = format!("{} {} {}", triplet.object, counter, triplet.subject);
    let combined = format!("{forward}. {backward}.");
    Ok(BidirectionalPrompt {
        forward,
        backward,
        combined,
    })
}

/// Class-name prompt segments: categories joined with ". " and terminated
/// with "."; segment order matches vocabulary order so token-to-category
/// index maps stay stable.
pub fn build_vocab_prompt(vocab: &Vocabulary) -> Result<(String, String), TextError> {
    if vocab.objects().is_empty() {
        return Err(TextError::EmptyVocabulary("object"));
    }
    if vocab.predicates().is_empty() {
        return Err(TextError::EmptyVocabulary("predicate"));
    }
    Ok((
        join_segment(vocab.objects()),
        join_segment(vocab.predicates()),
    ))
}

fn join_segment(names: &[String]) -> String {
    let mut s = names.join(". ");
    s.push('.');
    s
}

/// Split a triplet into its two interaction pairs:
/// ("subject predicate", "predicate object").
pub fn decompose_triplet(triplet: &Triplet) -> (String, String) {
    (
        format!("{} {}", triplet.subject, triplet.predicate),
        format!("{} {}", triplet.predicate, triplet.object),
    )
}

/// One line of a pre-parsed triplet ingestion file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub caption_id: u64,
}

impl TripletRecord {
    pub fn triplet(&self) -> Triplet {
        Triplet::new(&self.subject, &self.predicate, &self.object)
    }
}

/// Read `{"subject", "predicate", "object", "caption_id"}` JSONL.
pub fn read_triplet_jsonl(path: &Path) -> Result<Vec<TripletRecord>, TextError> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| TextError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_triplet_jsonl(path: &Path, records: &[TripletRecord]) -> Result<(), TextError> {
    let mut file = std::fs::File::create(path)?;
    for record in records {
        serde_json::to_writer(&mut file, record)
            .map_err(|e| TextError::MalformedRecord { line: 0, reason: e.to_string() })?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_svo() {
        let got = parse_caption("man hold surfboard", VerbLexicon::builtin());
        assert_eq!(got, vec![Triplet::new("man", "hold", "surfboard")]);
    }

    #[test]
    fn parse_empty_caption() {
        assert!(parse_caption("", VerbLexicon::builtin()).is_empty());
    }

    #[test]
    fn parse_skips_articles_and_unknown_verbs() {
        // "near water" has no lexicon verb
        let got = parse_caption("a people ride a bike near water", VerbLexicon::builtin());
        assert_eq!(got, vec![Triplet::new("people", "ride", "bike")]);
    }

    #[test]
    fn parse_multiple_triplets() {
        let got = parse_caption("man rides horse and dog chases cat", VerbLexicon::builtin());
        assert_eq!(
            got,
            vec![
                Triplet::new("man", "rides", "horse"),
                Triplet::new("dog", "chases", "cat"),
            ]
        );
    }

    #[test]
    fn parse_phrasal_predicate() {
        let got = parse_caption("zebra laying on grass", VerbLexicon::builtin());
        assert_eq!(got, vec![Triplet::new("zebra", "laying on", "grass")]);
    }

    #[test]
    fn bidirectional_prompt_golden() {
        let prompt = build_bidirectional_prompt(
            &Triplet::new("man", "hold", "surfboard"),
            &CounterActionBackend::Rules,
        )
        .unwrap();
        assert_eq!(prompt.forward, "man hold surfboard");
        assert_eq!(prompt.backward, "surfboard held by man");
        assert_eq!(prompt.combined, "man hold surfboard. surfboard held by man.");
    }

    #[test]
    fn bidirectional_prompt_regular_inflection() {
        let prompt = build_bidirectional_prompt(
            &Triplet::new("people", "ride", "bike"),
            &CounterActionBackend::Rules,
        )
        .unwrap();
        assert_eq!(prompt.combined, "people ride bike. bike ridden by people.");
    }

    #[test]
    fn bidirectional_prompt_backward_shape() {
        let prompt = build_bidirectional_prompt(
            &Triplet::new("a", "touch", "c"),
            &CounterActionBackend::Rules,
        )
        .unwrap();
        assert!(prompt.backward.starts_with("c touched by"));
    }

    #[test]
    fn combined_prompt_has_two_sentence_terminators() {
        for (s, p, o) in [
            ("man", "hold", "surfboard"),
            ("cup", "on", "table"),
            ("zebra", "laying on", "grass"),
        ] {
            let prompt = build_bidirectional_prompt(
                &Triplet::new(s, p, o),
                &CounterActionBackend::Rules,
            )
            .unwrap();
            assert_eq!(prompt.combined.matches('.').count(), 2, "{}", prompt.combined);
            assert!(prompt.forward.starts_with(s));
            assert!(prompt.backward.starts_with(o));
        }
    }

    #[test]
    fn vocab_prompt_golden() {
        let vocab = Vocabulary::new(
            vec!["man".into(), "horse".into()],
            vec!["riding".into(), "above".into()],
        )
        .unwrap();
        let (objects, relations) = build_vocab_prompt(&vocab).unwrap();
        assert_eq!(objects, "man. horse.");
        assert_eq!(relations, "riding. above.");
    }

    #[test]
    fn vocab_prompt_singleton_and_period_count() {
        let vocab = Vocabulary::new(vec!["cat".into()], vec!["on".into()]).unwrap();
        let (objects, _) = build_vocab_prompt(&vocab).unwrap();
        assert_eq!(objects, "cat.");

        let many: Vec<String> = (0..150).map(|i| format!("cat{i}")).collect();
        let vocab = Vocabulary::new(many, vec!["on".into()]).unwrap();
        let (objects, _) = build_vocab_prompt(&vocab).unwrap();
        assert_eq!(objects.matches('.').count(), 150);
    }

    #[test]
    fn vocab_prompt_order_round_trips() {
        let names: Vec<String> = ["kite", "ball", "man", "dog"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let vocab = Vocabulary::new(names.clone(), vec!["on".into()]).unwrap();
        let (objects, _) = build_vocab_prompt(&vocab).unwrap();
        let recovered: Vec<&str> = objects.trim_end_matches('.').split(". ").collect();
        assert_eq!(recovered, names.iter().map(String::as_str).collect::<Vec<_>>());
        for (i, name) in names.iter().enumerate() {
            assert_eq!(vocab.object_id(name), Some(i));
        }
    }

    #[test]
    fn empty_vocab_is_an_error() {
        let vocab = Vocabulary::new(vec![], vec!["on".into()]).unwrap();
        assert!(matches!(
            build_vocab_prompt(&vocab),
            Err(TextError::EmptyVocabulary("object"))
        ));
    }

    #[test]
    fn duplicate_category_is_an_error() {
        let result = Vocabulary::new(vec!["man".into(), "man".into()], vec!["on".into()]);
        assert!(matches!(result, Err(TextError::DuplicateCategory(_))));
    }

    #[test]
    fn decompose_pairs() {
        let (sp, po) = decompose_triplet(&Triplet::new("man", "riding", "horse"));
        assert_eq!((sp.as_str(), po.as_str()), ("man riding", "riding horse"));

        let (sp, po) = decompose_triplet(&Triplet::new("zebra", "laying on", "grass"));
        assert_eq!(
            (sp.as_str(), po.as_str()),
            ("zebra laying on", "laying on grass")
        );

        let (sp, po) = decompose_triplet(&Triplet::new("a", "r", "a"));
        assert_eq!((sp.as_str(), po.as_str()), ("a r", "r a"));
    }

    #[test]
    fn decompose_always_contains_predicate() {
        for t in [
            Triplet::new("man", "hold", "surfboard"),
            Triplet::new("dog", "sitting on", "mat"),
        ] {
            let (sp, po) = decompose_triplet(&t);
            assert!(sp.contains(&t.predicate) && po.contains(&t.predicate));
        }
    }

    #[test]
    fn novel_membership_and_partition() {
        let vocab = Vocabulary::with_base_split(
            vec!["man".into(), "dragon".into()],
            vec!["hold".into(), "summon".into()],
            &["man".into()],
            &["hold".into()],
        )
        .unwrap();
        assert!(!vocab.is_novel_object("man"));
        assert!(vocab.is_novel_object("dragon"));
        assert!(vocab.is_novel_object("unseen-thing"));
        assert!(vocab.is_novel_predicate("summon"));
    }

    #[test]
    fn triplet_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("triplets.jsonl");
        let records = vec![
            TripletRecord {
                subject: "man".into(),
                predicate: "hold".into(),
                object: "surfboard".into(),
                caption_id: 7,
            },
            TripletRecord {
                subject: "dog".into(),
                predicate: "chase".into(),
                object: "cat".into(),
                caption_id: 8,
            },
        ];
        write_triplet_jsonl(&path, &records).unwrap();
        assert_eq!(read_triplet_jsonl(&path).unwrap(), records);
    }

    #[test]
    fn malformed_triplet_record_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"subject\":\"a\",\"predicate\":\"b\",\"object\":\"c\",\"caption_id\":1}\nnot json\n",
        )
        .unwrap();
        match read_triplet_jsonl(&path) {
            Err(TextError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
