//! Verb lexicon: irregular participles, preposition-like predicates, and
//! the inflection heuristics behind counter-action generation and caption
//! parsing.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// Irregular base -> past participle pairs shipped with the rule backend.
const IRREGULAR_PARTICIPLES: &[(&str, &str)] = &[
    ("be", "been"),
    ("bear", "borne"),
    ("beat", "beaten"),
    ("become", "become"),
    ("begin", "begun"),
    ("bend", "bent"),
    ("bite", "bitten"),
    ("blow", "blown"),
    ("break", "broken"),
    ("bring", "brought"),
    ("build", "built"),
    ("buy", "bought"),
    ("catch", "caught"),
    ("choose", "chosen"),
    ("come", "come"),
    ("cost", "cost"),
    ("cut", "cut"),
    ("dig", "dug"),
    ("do", "done"),
    ("draw", "drawn"),
    ("drink", "drunk"),
    ("drive", "driven"),
    ("eat", "eaten"),
    ("fall", "fallen"),
    ("feed", "fed"),
    ("feel", "felt"),
    ("fight", "fought"),
    ("find", "found"),
    ("fly", "flown"),
    ("forget", "forgotten"),
    ("freeze", "frozen"),
    ("get", "gotten"),
    ("give", "given"),
    ("go", "gone"),
    ("grow", "grown"),
    ("hang", "hung"),
    ("have", "had"),
    ("hear", "heard"),
    ("hide", "hidden"),
    ("hit", "hit"),
    ("hold", "held"),
    ("hurt", "hurt"),
    ("keep", "kept"),
    ("know", "known"),
    ("lay", "laid"),
    ("lead", "led"),
    ("lean", "leaned"),
    ("leave", "left"),
    ("lend", "lent"),
    ("let", "let"),
    ("lie", "lain"),
    ("lying", "lain"),
    ("light", "lit"),
    ("lose", "lost"),
    ("make", "made"),
    ("mean", "meant"),
    ("meet", "met"),
    ("pay", "paid"),
    ("put", "put"),
    ("read", "read"),
    ("ride", "ridden"),
    ("ring", "rung"),
    ("run", "run"),
    ("say", "said"),
    ("see", "seen"),
    ("seek", "sought"),
    ("sell", "sold"),
    ("send", "sent"),
    ("set", "set"),
    ("shake", "shaken"),
    ("shoot", "shot"),
    ("show", "shown"),
    ("shut", "shut"),
    ("sing", "sung"),
    ("sit", "sat"),
    ("sleep", "slept"),
    ("slide", "slid"),
    ("speak", "spoken"),
    ("spend", "spent"),
    ("spin", "spun"),
    ("spread", "spread"),
    ("stand", "stood"),
    ("steal", "stolen"),
    ("stick", "stuck"),
    ("strike", "struck"),
    ("swear", "sworn"),
    ("sweep", "swept"),
    ("swim", "swum"),
    ("swing", "swung"),
    ("take", "taken"),
    ("teach", "taught"),
    ("tear", "torn"),
    ("tell", "told"),
    ("think", "thought"),
    ("throw", "thrown"),
    ("understand", "understood"),
    ("wake", "woken"),
    ("wear", "worn"),
    ("win", "won"),
    ("write", "written"),
];

/// Regular action verbs included in the built-in parse lexicon on top of
/// the irregular table.
const REGULAR_VERBS: &[&str] = &[
    "carry", "touch", "push", "pull", "kick", "watch", "walk", "play", "jump",
    "look", "use", "cover", "surround", "attach", "paint", "park", "climb",
    "chase", "lift", "grab", "follow", "cross", "face", "reach", "point",
    "talk", "wave", "hug", "kiss", "wash", "close", "drop",
];

/// Multiword predicates matched as a unit by the caption parser.
const PHRASAL_PREDICATES: &[&str] = &[
    "laying on",
    "lying on",
    "sitting on",
    "standing on",
    "looking at",
    "leaning on",
    "hanging from",
    "walking on",
    "riding on",
];

/// Predicates with no passive form; the backward sentence reuses them
/// unchanged instead of attempting a counter-action.
const PREPOSITIONAL_PREDICATES: &[&str] = &[
    "on", "in", "near", "above", "below", "under", "over", "behind", "beside",
    "between", "at", "along", "across", "against", "inside", "outside",
    "around", "by", "with", "upon", "onto", "of", "atop", "underneath",
    "next to", "in front of", "on top of", "on side of",
];

/// Configurable verb lexicon driving [`parse_caption`](crate::text::parse_caption)
/// and the rule backend of counter-action generation.
#[derive(Debug, Clone)]
pub struct VerbLexicon {
    /// Surface forms (possibly multiword, as token sequences) recognised as
    /// predicates while parsing.
    entries: HashSet<Vec<String>>,
    /// Longest entry length in tokens, for longest-match scanning.
    max_entry_len: usize,
    irregular: HashMap<String, String>,
    prepositional: HashSet<String>,
}

impl VerbLexicon {
    /// Lexicon shipped with the crate: irregular verbs, a set of common
    /// regular verbs, their `-s`/`-ing` surface forms, and a few phrasal
    /// predicates. Prepositions are deliberately absent so that spatial
    /// modifiers ("near water") never parse as predicates.
    pub fn builtin() -> &'static VerbLexicon {
        static LEXICON: OnceLock<VerbLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            let verbs = IRREGULAR_PARTICIPLES
                .iter()
                .map(|(base, _)| *base)
                .chain(REGULAR_VERBS.iter().copied());
            let mut lexicon = VerbLexicon::from_verbs(verbs);
            for phrase in PHRASAL_PREDICATES {
                lexicon.insert_surface(phrase);
            }
            lexicon
        })
    }

    /// Lexicon over an explicit verb list. Each verb contributes its base,
    /// third-person `-s`, and `-ing` surface forms.
    pub fn from_verbs<'a>(verbs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut lexicon = Self {
            entries: HashSet::new(),
            max_entry_len: 1,
            irregular: IRREGULAR_PARTICIPLES
                .iter()
                .map(|(b, p)| (b.to_string(), p.to_string()))
                .collect(),
            prepositional: PREPOSITIONAL_PREDICATES
                .iter()
                .map(|p| p.to_string())
                .collect(),
        };
        for verb in verbs {
            lexicon.insert_surface(verb);
            lexicon.insert_surface(&third_person_form(verb));
            lexicon.insert_surface(&ing_form(verb));
        }
        lexicon
    }

    fn insert_surface(&mut self, surface: &str) {
        let tokens: Vec<String> = surface.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return;
        }
        self.max_entry_len = self.max_entry_len.max(tokens.len());
        self.entries.insert(tokens);
    }

    pub fn max_entry_len(&self) -> usize {
        self.max_entry_len
    }

    /// Longest predicate match starting at `pos` in `tokens`, as a token count.
    pub fn match_at(&self, tokens: &[String], pos: usize) -> Option<usize> {
        let limit = self.max_entry_len.min(tokens.len() - pos);
        (1..=limit)
            .rev()
            .find(|&len| self.entries.contains(&tokens[pos..pos + len]))
    }

    /// True when the predicate has no passive form (preposition-like).
    pub fn is_prepositional(&self, predicate: &str) -> bool {
        self.prepositional.contains(predicate)
    }

    /// Past participle of a single verb token: irregular table first, then
    /// `-ing` stem recovery (retrying with a restored final "e", so that
    /// "riding" finds "ride"), then regular inflection.
    pub fn participle(&self, verb: &str) -> String {
        if let Some(p) = self.irregular.get(verb) {
            return p.clone();
        }
        if let Some(stem) = strip_ing(verb) {
            if let Some(p) = self.irregular.get(&stem) {
                return p.clone();
            }
            if let Some(p) = self.irregular.get(&format!("{stem}e")) {
                return p.clone();
            }
            return regular_participle(&stem);
        }
        regular_participle(verb)
    }

    /// Passive-voice counter-action of a predicate: "ride" -> "ridden by".
    /// Preposition-like predicates are returned unchanged. For multiword
    /// predicates the head verb is inflected and the tail kept.
    pub fn counter_action(&self, predicate: &str) -> String {
        let predicate = predicate.trim().to_lowercase();
        if self.is_prepositional(&predicate) {
            return predicate;
        }
        let mut parts = predicate.split_whitespace();
        let head = match parts.next() {
            Some(h) => h,
            None => return predicate,
        };
        let tail: Vec<&str> = parts.collect();
        let mut out = self.participle(head);
        for t in &tail {
            out.push(' ');
            out.push_str(t);
        }
        out.push_str(" by");
        out
    }
}

/// Regular `-ed` inflection with y->ied and consonant-doubling heuristics.
fn regular_participle(verb: &str) -> String {
    let chars: Vec<char> = verb.chars().collect();
    let n = chars.len();
    if n == 0 {
        return String::new();
    }
    if chars[n - 1] == 'e' {
        return format!("{verb}d");
    }
    if chars[n - 1] == 'y' && n >= 2 && !is_vowel(chars[n - 2]) {
        return format!("{}ied", &verb[..verb.len() - 1]);
    }
    if should_double(&chars) {
        return format!("{verb}{}ed", chars[n - 1]);
    }
    format!("{verb}ed")
}

/// Present-participle form used to enrich the parse lexicon.
fn ing_form(verb: &str) -> String {
    let chars: Vec<char> = verb.chars().collect();
    let n = chars.len();
    if n == 0 {
        return String::new();
    }
    if verb.ends_with("ie") {
        return format!("{}ying", &verb[..verb.len() - 2]);
    }
    if chars[n - 1] == 'e' && n >= 2 && chars[n - 2] != 'e' {
        return format!("{}ing", &verb[..verb.len() - 1]);
    }
    if should_double(&chars) {
        return format!("{verb}{}ing", chars[n - 1]);
    }
    format!("{verb}ing")
}

fn third_person_form(verb: &str) -> String {
    if verb.ends_with('s') || verb.ends_with("sh") || verb.ends_with("ch") || verb.ends_with('x')
    {
        return format!("{verb}es");
    }
    let chars: Vec<char> = verb.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        return format!("{}ies", &verb[..verb.len() - 1]);
    }
    format!("{verb}s")
}

/// Recover a base form from an `-ing` surface token ("holding" -> "hold",
/// "hugging" -> "hug"). Returns None when the token is not an -ing form.
fn strip_ing(token: &str) -> Option<String> {
    let stem = token.strip_suffix("ing")?;
    if stem.len() < 2 {
        return None;
    }
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 3 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) {
        return Some(stem[..stem.len() - 1].to_string());
    }
    Some(stem.to_string())
}

/// Single-syllable consonant-vowel-consonant heuristic for doubling.
fn should_double(chars: &[char]) -> bool {
    let n = chars.len();
    n >= 3
        && n <= 4
        && !is_vowel(chars[n - 1])
        && is_vowel(chars[n - 2])
        && !is_vowel(chars[n - 3])
        && !matches!(chars[n - 1], 'w' | 'x' | 'y')
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}
