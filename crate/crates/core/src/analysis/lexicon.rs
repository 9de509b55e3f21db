//! Class lexicon: object classes, their surface forms and synonyms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ObjectClass;

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.json");

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("aircraft", "aircraft"),
    ("calf", "calves"),
    ("child", "children"),
    ("deer", "deer"),
    ("fish", "fish"),
    ("foot", "feet"),
    ("goose", "geese"),
    ("half", "halves"),
    ("knife", "knives"),
    ("leaf", "leaves"),
    ("loaf", "loaves"),
    ("man", "men"),
    ("moose", "moose"),
    ("mouse", "mice"),
    ("ox", "oxen"),
    ("person", "people"),
    ("sheep", "sheep"),
    ("shelf", "shelves"),
    ("tooth", "teeth"),
    ("wife", "wives"),
    ("wolf", "wolves"),
    ("woman", "women"),
];

const O_ES_PLURALS: &[&str] = &["echo", "hero", "potato", "tomato", "volcano"];

/// English plural of a single lowercase noun.
pub fn pluralize(word: &str) -> String {
    if let Some((_, p)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == word) {
        return (*p).to_string();
    }
    let ends_with_consonant_y = word.len() > 1
        && word.ends_with('y')
        && !matches!(word.as_bytes()[word.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u');
    if ends_with_consonant_y {
        format!("{}ies", &word[..word.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| word.ends_with(s)) || O_ES_PLURALS.contains(&word) {
        format!("{word}es")
    } else {
        format!("{word}s")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceForm {
    Singular,
    Plural,
    /// Same spelling in singular and plural (`sheep`); form comes from context.
    Invariant,
    /// No singular form (`scissors`); never checked for number.
    PluraliaTantum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surface {
    pub class: String,
    pub form: SurfaceForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconClassEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_category: Option<String>,
    /// Singular surface when it differs from the class name (`skis` → `ski`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular: Option<String>,
    /// Plural surfaces; generated when omitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plurals: Vec<String>,
}

/// On-disk lexicon schema.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LexiconFile {
    pub classes: Vec<LexiconClassEntry>,
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
    #[serde(default)]
    pub pluralia_tantum: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ClassLexicon {
    classes: BTreeMap<String, ObjectClass>,
    plural_map: BTreeMap<String, Vec<String>>,
    singulars: BTreeMap<String, String>,
    synonyms: BTreeMap<String, String>,
    pluralia_tantum: BTreeSet<String>,
    surfaces: HashMap<String, Surface>,
}

impl ClassLexicon {
    /// The bundled lexicon: single-word COCO classes with common synonyms.
    pub fn builtin() -> Self {
        let file: LexiconFile = serde_json::from_str(DEFAULT_LEXICON).expect("bundled lexicon is valid JSON");
        Self::from_file(file).expect("bundled lexicon is consistent")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(crate::io::read_json(path)?)
    }

    pub fn from_file(file: LexiconFile) -> Result<Self> {
        let norm = |s: &str| s.trim().to_lowercase();
        let pluralia_tantum: BTreeSet<String> = file.pluralia_tantum.iter().map(|s| norm(s)).collect();
        let mut classes = BTreeMap::new();
        let mut plural_map = BTreeMap::new();
        let mut singulars = BTreeMap::new();
        let mut surfaces: HashMap<String, Surface> = HashMap::new();

        let add_surface = |surfaces: &mut HashMap<String, Surface>, token: String, class: &str, form: SurfaceForm| {
            surfaces.entry(token).or_insert(Surface {
                class: class.to_string(),
                form,
            });
        };

        for entry in &file.classes {
            let class = ObjectClass::with_super_category(&entry.name, entry.super_category.as_deref())?;
            let name = class.name.clone();
            if classes.insert(name.clone(), class).is_some() {
                return Err(Error::InvalidInput(format!("lexicon lists class {name} twice")));
            }
            let singular = entry.singular.as_deref().map(norm).unwrap_or_else(|| name.clone());
            singulars.insert(name.clone(), singular.clone());
            if pluralia_tantum.contains(&singular) {
                add_surface(&mut surfaces, singular, &name, SurfaceForm::PluraliaTantum);
                plural_map.insert(name, Vec::new());
                continue;
            }
            let plurals: Vec<String> = if entry.plurals.is_empty() {
                vec![pluralize(&singular)]
            } else {
                entry.plurals.iter().map(|p| norm(p)).collect()
            };
            let invariant = plurals.contains(&singular);
            add_surface(
                &mut surfaces,
                singular.clone(),
                &name,
                if invariant { SurfaceForm::Invariant } else { SurfaceForm::Singular },
            );
            for p in &plurals {
                if *p != singular {
                    add_surface(&mut surfaces, p.clone(), &name, SurfaceForm::Plural);
                }
            }
            plural_map.insert(name, plurals);
        }

        let mut synonyms = BTreeMap::new();
        for (surface, target) in &file.synonyms {
            let (surface, target) = (norm(surface), norm(target));
            if !classes.contains_key(&target) {
                return Err(Error::InvalidInput(format!(
                    "synonym {surface} maps to unknown class {target}"
                )));
            }
            if pluralia_tantum.contains(&surface) {
                add_surface(&mut surfaces, surface.clone(), &target, SurfaceForm::PluraliaTantum);
            } else {
                let plural = pluralize(&surface);
                if plural == surface {
                    add_surface(&mut surfaces, surface.clone(), &target, SurfaceForm::Invariant);
                } else {
                    add_surface(&mut surfaces, surface.clone(), &target, SurfaceForm::Singular);
                    add_surface(&mut surfaces, plural, &target, SurfaceForm::Plural);
                }
            }
            synonyms.insert(surface, target);
        }

        if classes.is_empty() {
            return Err(Error::InvalidInput("lexicon has no classes".into()));
        }
        Ok(Self {
            classes,
            plural_map,
            singulars,
            synonyms,
            pluralia_tantum,
            surfaces,
        })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ObjectClass> {
        self.classes.values()
    }

    pub fn class(&self, name: &str) -> Option<&ObjectClass> {
        self.classes.get(name)
    }

    pub fn contains_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    pub fn plurals(&self, class: &str) -> &[String] {
        self.plural_map.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn is_pluralia_tantum(&self, surface: &str) -> bool {
        self.pluralia_tantum.contains(surface)
    }

    /// Surface token lookup (`parrots` → bird, plural).
    pub fn surface(&self, token: &str) -> Option<&Surface> {
        self.surfaces.get(token)
    }

    /// Maps a surface noun or class name to its class; class names map to themselves.
    pub fn canonicalize(&self, token: &str) -> Option<&str> {
        if let Some((name, _)) = self.classes.get_key_value(token) {
            return Some(name);
        }
        self.surfaces.get(token).map(|s| s.class.as_str())
    }

    /// Super-category of a class, falling back to the class name.
    pub fn category_of<'a>(&'a self, class: &'a str) -> &'a str {
        self.classes.get(class).map(|c| c.category_key()).unwrap_or(class)
    }

    /// A lexicon restricted to `names` (synonyms pointing elsewhere dropped).
    pub fn subset<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let keep: BTreeSet<&str> = names.into_iter().collect();
        let classes = self
            .classes
            .values()
            .filter(|c| keep.contains(c.name.as_str()))
            .map(|c| {
                let plurals = self.plurals(&c.name).to_vec();
                let singular = self.singulars.get(&c.name).filter(|s| **s != c.name).cloned();
                LexiconClassEntry {
                    name: c.name.clone(),
                    super_category: c.super_category.clone(),
                    singular,
                    plurals,
                }
            })
            .collect();
        let synonyms = self
            .synonyms
            .iter()
            .filter(|(_, t)| keep.contains(t.as_str()))
            .map(|(s, t)| (s.clone(), t.clone()))
            .collect();
        Self::from_file(LexiconFile {
            classes,
            synonyms,
            pluralia_tantum: self.pluralia_tantum.iter().cloned().collect(),
        })
    }
}
