//! Object-class mentions and their singular/plural form in captions.

mod lexicon;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use lexicon::{pluralize, ClassLexicon, LexiconClassEntry, LexiconFile, Surface, SurfaceForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    NN,
    NNS,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedNoun {
    pub token: String,
    pub tag: PosTag,
    /// Plural-only noun (`scissors`); its number is never checked.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exempt: bool,
    /// Invariant-form noun whose number the context did not settle.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

/// Part-of-speech tagger restricted to common nouns.
pub trait NounTagger: Send + Sync {
    /// Nouns of `caption` tagged NN or NNS, in order of appearance.
    fn tag(&self, caption: &str) -> Vec<TaggedNoun>;
}

const SINGULAR_CUES: &[&str] = &["a", "an", "one", "single", "another", "each", "every", "lone", "this", "that"];

const PLURAL_CUES: &[&str] = &[
    "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "dozen", "dozens",
    "several", "many", "some", "few", "multiple", "these", "those", "both", "numerous", "various", "herd", "flock",
    "group", "groups", "couple", "pair", "pairs", "bunch", "lot", "lots", "crowd", "pack", "all",
];

/// Words that end the backward search for a number cue.
const CLAUSE_BREAKS: &[&str] = &[
    "and", "or", "with", "in", "on", "at", "near", "by", "under", "over", "behind", "beside", "next", "to", "from",
    "into", "onto", "while", "is", "are", "was", "were", "the", "its", "their", "his", "her",
];

const SINGULAR_VERBS: &[&str] = &["is", "was", "has", "stands", "sits", "lies", "looks", "eats", "grazes", "walks"];
const PLURAL_VERBS: &[&str] = &["are", "were", "have", "stand", "sit", "lie", "look", "eat", "graze", "walk"];

/// Two-word names whose head noun is not the object class it spells.
const COMPOUND_EXCLUSIONS: &[(&str, &str)] = &[
    ("teddy", "bear"),
    ("teddy", "bears"),
    ("hot", "dog"),
    ("hot", "dogs"),
    ("corn", "dog"),
    ("computer", "mouse"),
];

const CUE_WINDOW: usize = 4;

/// Lowercased word tokens; punctuation separates tokens and is dropped.
pub fn tokenize(caption: &str) -> Vec<String> {
    caption
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_plural_numeral(token: &str) -> bool {
    token.parse::<u64>().map(|n| n > 1).unwrap_or(false)
}

/// Settles the number of an invariant-form noun at `pos` from nearby words.
fn invariant_number(tokens: &[String], pos: usize) -> Option<PosTag> {
    for back in 1..=CUE_WINDOW.min(pos) {
        let t = tokens[pos - back].as_str();
        if SINGULAR_CUES.contains(&t) || t == "1" {
            return Some(PosTag::NN);
        }
        if PLURAL_CUES.contains(&t) || is_plural_numeral(t) {
            return Some(PosTag::NNS);
        }
        if CLAUSE_BREAKS.contains(&t) {
            break;
        }
    }
    let next = tokens.get(pos + 1).map(String::as_str)?;
    if SINGULAR_VERBS.contains(&next) {
        Some(PosTag::NN)
    } else if PLURAL_VERBS.contains(&next) {
        Some(PosTag::NNS)
    } else {
        None
    }
}

/// Reference tagger: surface-form tables of a [`ClassLexicon`].
///
/// Only nouns known to the lexicon are reported. A lexicon noun directly
/// followed by another lexicon noun is read as a modifier ("orange cat").
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    lexicon: ClassLexicon,
}

impl LexiconTagger {
    pub fn new(lexicon: ClassLexicon) -> Self {
        Self { lexicon }
    }

    pub fn lexicon(&self) -> &ClassLexicon {
        &self.lexicon
    }
}

impl NounTagger for LexiconTagger {
    fn tag(&self, caption: &str) -> Vec<TaggedNoun> {
        let tokens = tokenize(caption);
        let mut out = Vec::new();
        for (i, token) in tokens.iter().enumerate() {
            let Some(surface) = self.lexicon.surface(token) else {
                continue;
            };
            if let Some(next) = tokens.get(i + 1) {
                if self.lexicon.surface(next).is_some() {
                    continue;
                }
            }
            if i > 0 && COMPOUND_EXCLUSIONS.contains(&(tokens[i - 1].as_str(), token.as_str())) {
                continue;
            }
            let (tag, exempt, ambiguous) = match surface.form {
                SurfaceForm::Singular => (PosTag::NN, false, false),
                SurfaceForm::Plural => (PosTag::NNS, false, false),
                SurfaceForm::PluraliaTantum => (PosTag::NNS, true, false),
                SurfaceForm::Invariant => match invariant_number(&tokens, i) {
                    Some(tag) => (tag, false, false),
                    None => (PosTag::NN, false, true),
                },
            };
            out.push(TaggedNoun {
                token: token.clone(),
                tag,
                exempt,
                ambiguous,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Singular,
    Plural,
    Exempt,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Form::Singular => "singular",
            Form::Plural => "plural",
            Form::Exempt => "exempt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub form: Form,
    /// The caption used the class in both forms; `form` is then plural.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conflict: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionAnalysis {
    pub caption: String,
    pub mentions: BTreeMap<String, Mention>,
    pub nouns: Vec<TaggedNoun>,
}

impl CaptionAnalysis {
    pub fn form(&self, class: &str) -> Option<Form> {
        self.mentions.get(class).map(|m| m.form)
    }

    pub fn has_conflict(&self) -> bool {
        self.mentions.values().any(|m| m.conflict)
    }
}

pub fn extract_nouns(caption: &str, tagger: &dyn NounTagger) -> Vec<TaggedNoun> {
    tagger.tag(caption)
}

pub fn analyze(caption: &str, lexicon: &ClassLexicon, tagger: &dyn NounTagger) -> CaptionAnalysis {
    let nouns = extract_nouns(caption, tagger);
    let mut mentions: BTreeMap<String, Mention> = BTreeMap::new();
    for noun in &nouns {
        let Some(class) = lexicon.canonicalize(&noun.token) else {
            continue;
        };
        let form = if noun.exempt {
            Form::Exempt
        } else if noun.tag == PosTag::NNS {
            Form::Plural
        } else {
            Form::Singular
        };
        match mentions.get_mut(class) {
            None => {
                mentions.insert(
                    class.to_string(),
                    Mention {
                        form,
                        conflict: false,
                        ambiguous: noun.ambiguous,
                    },
                );
            }
            Some(m) => {
                m.ambiguous |= noun.ambiguous;
                match (m.form, form) {
                    (a, b) if a == b => {}
                    (Form::Exempt, other) => m.form = other,
                    (_, Form::Exempt) => {}
                    _ => {
                        m.form = Form::Plural;
                        m.conflict = true;
                    }
                }
            }
        }
    }
    CaptionAnalysis {
        caption: caption.to_string(),
        mentions,
        nouns,
    }
}

/// Convenience wrapper using the lexicon's own tagger.
pub fn analyze_with_lexicon(caption: &str, tagger: &LexiconTagger) -> CaptionAnalysis {
    analyze(caption, tagger.lexicon(), tagger)
}

pub fn class_set(analysis: &CaptionAnalysis) -> BTreeSet<String> {
    analysis.mentions.keys().cloned().collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn tagger() -> LexiconTagger {
        LexiconTagger::new(ClassLexicon::builtin())
    }

    fn pairs(nouns: &[TaggedNoun]) -> Vec<(&str, PosTag)> {
        nouns.iter().map(|n| (n.token.as_str(), n.tag)).collect()
    }

    fn forms(caption: &str) -> Vec<(String, Form)> {
        let t = tagger();
        analyze_with_lexicon(caption, &t).mentions.into_iter().map(|(c, m)| (c, m.form)).collect()
    }

    #[test]
    fn nouns_are_tagged_by_surface() {
        let t = tagger();
        assert_eq!(pairs(&extract_nouns("a dog and a cat", &t)), [("dog", PosTag::NN), ("cat", PosTag::NN)]);
        assert_eq!(pairs(&extract_nouns("two elephants walking", &t)), [("elephants", PosTag::NNS)]);
    }

    #[test]
    fn scissors_are_exempt() {
        let nouns = extract_nouns("a pair of scissors", &tagger());
        assert_eq!(nouns.len(), 1);
        assert_eq!(nouns[0].tag, PosTag::NNS);
        assert!(nouns[0].exempt);
        assert_eq!(forms("a pair of scissors"), [("scissors".to_string(), Form::Exempt)]);
    }

    #[test]
    fn analysis_examples() {
        let sing = |c: &str| (c.to_string(), Form::Singular);
        assert_eq!(forms("a black horse near a bear"), [sing("bear"), sing("horse")]);
        assert_eq!(forms("a couple of zebras"), [("zebra".to_string(), Form::Plural)]);
        assert_eq!(forms("a parrot on a branch"), [sing("bird")]);
        assert_eq!(forms("A Man riding a WAVE on a surfboard."), [sing("person"), sing("surfboard")]);
        assert_eq!(forms("women holding umbrellas"), [("person".into(), Form::Plural), ("umbrella".into(), Form::Plural)]);
    }

    #[test]
    fn invariant_nouns_use_context() {
        assert_eq!(forms("a sheep in a field"), [("sheep".to_string(), Form::Singular)]);
        assert_eq!(forms("three sheep in a field"), [("sheep".to_string(), Form::Plural)]);
        assert_eq!(forms("a herd of sheep grazing"), [("sheep".to_string(), Form::Plural)]);
        assert_eq!(forms("the sheep are grazing"), [("sheep".to_string(), Form::Plural)]);
        assert_eq!(forms("12 sheep"), [("sheep".to_string(), Form::Plural)]);
        let t = tagger();
        let a = analyze_with_lexicon("sheep grazing in a field", &t);
        let m = a.mentions["sheep"];
        assert_eq!(m.form, Form::Singular);
        assert!(m.ambiguous);
    }

    #[test]
    fn conflicting_forms_become_plural() {
        let t = tagger();
        let a = analyze_with_lexicon("a dog and two dogs", &t);
        assert_eq!(a.mentions["dog"], Mention { form: Form::Plural, conflict: true, ambiguous: false });
        assert!(a.has_conflict());
    }

    #[test]
    fn modifiers_and_compounds_are_skipped() {
        assert_eq!(forms("an orange cat on a couch"), [("cat".into(), Form::Singular), ("couch".into(), Form::Singular)]);
        assert!(forms("a teddy bear on a shelf").is_empty());
        assert!(forms("a man eating a hot dog").iter().all(|(c, _)| c != "dog"));
    }

    #[test]
    fn class_set_examples() {
        let t = tagger();
        assert!(class_set(&analyze_with_lexicon("a view of the sky", &t)).is_empty());
        assert_eq!(class_set(&analyze_with_lexicon("a dog", &t)), BTreeSet::from(["dog".to_string()]));
        assert_eq!(
            class_set(&analyze_with_lexicon("a puppy chasing a dog", &t)),
            BTreeSet::from(["dog".to_string()])
        );
    }

    proptest! {
        #[test]
        fn indefinite_article_gives_singular(idx in 0usize..65, tail in "[ ]{0,1}(walking|on the grass|at night|)") {
            let lex = ClassLexicon::builtin();
            let class = lex.classes().nth(idx).unwrap().name.clone();
            let tagger = LexiconTagger::new(lex.clone());
            let singular = lex
                .surface(&class)
                .filter(|s| s.form != SurfaceForm::Plural)
                .map(|_| class.clone())
                .unwrap_or_else(|| "ski".to_string());
            let article = if "aeiou".contains(&singular[..1]) { "an" } else { "a" };
            let caption = format!("{article} {singular} {tail}");
            let a = analyze(&caption, &lex, &tagger);
            let expected = if lex.is_pluralia_tantum(&singular) { Form::Exempt } else { Form::Singular };
            prop_assert_eq!(a.mentions.len(), 1);
            prop_assert_eq!(a.mentions[&class].form, expected);
        }

        #[test]
        fn analysis_is_case_insensitive(caption in "[a-zA-Z ]{0,40}") {
            let t = tagger();
            let lower = analyze_with_lexicon(&caption.to_lowercase(), &t);
            let mixed = analyze_with_lexicon(&caption, &t);
            prop_assert_eq!(lower.mentions, mixed.mentions);
        }
    }
}
