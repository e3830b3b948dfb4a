use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Article;

/// The six general entity classes used in NER steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityClass {
    Person,
    Group,
    Location,
    Culture,
    Date,
    Numeral,
}

impl EntityClass {
    pub const ALL: [EntityClass; 6] = [
        EntityClass::Person,
        EntityClass::Group,
        EntityClass::Location,
        EntityClass::Culture,
        EntityClass::Date,
        EntityClass::Numeral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityClass::Person => "person",
            EntityClass::Group => "group",
            EntityClass::Location => "location",
            EntityClass::Culture => "culture",
            EntityClass::Date => "date",
            EntityClass::Numeral => "numeral",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntityClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EntityClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown entity class {s:?}"))
    }
}

/// Fine-grained tags produced by an extractor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types, clippy::upper_case_acronyms)]
pub enum FineTag {
    PERSON,
    NORP,
    ORG,
    LANGUAGE,
    GPE,
    FAC,
    LOC,
    EVENT,
    WORK_OF_ART,
    LAW,
    PRODUCT,
    DATE,
    TIME,
    CARDINAL,
    PERCENT,
    MONEY,
    QUANTITY,
    ORDINAL,
}

impl FineTag {
    pub const ALL: [FineTag; 18] = [
        FineTag::PERSON,
        FineTag::NORP,
        FineTag::ORG,
        FineTag::LANGUAGE,
        FineTag::GPE,
        FineTag::FAC,
        FineTag::LOC,
        FineTag::EVENT,
        FineTag::WORK_OF_ART,
        FineTag::LAW,
        FineTag::PRODUCT,
        FineTag::DATE,
        FineTag::TIME,
        FineTag::CARDINAL,
        FineTag::PERCENT,
        FineTag::MONEY,
        FineTag::QUANTITY,
        FineTag::ORDINAL,
    ];

    pub fn class(self) -> EntityClass {
        use EntityClass::*;
        use FineTag::*;
        match self {
            PERSON => Person,
            NORP | ORG | LANGUAGE => Group,
            GPE | FAC | LOC => Location,
            EVENT | WORK_OF_ART | LAW | PRODUCT => Culture,
            DATE | TIME => Date,
            CARDINAL | PERCENT | MONEY | QUANTITY | ORDINAL => Numeral,
        }
    }

    pub fn label(self) -> &'static str {
        use FineTag::*;
        match self {
            PERSON => "PERSON",
            NORP => "NORP",
            ORG => "ORG",
            LANGUAGE => "LANGUAGE",
            GPE => "GPE",
            FAC => "FAC",
            LOC => "LOC",
            EVENT => "EVENT",
            WORK_OF_ART => "WORK_OF_ART",
            LAW => "LAW",
            PRODUCT => "PRODUCT",
            DATE => "DATE",
            TIME => "TIME",
            CARDINAL => "CARDINAL",
            PERCENT => "PERCENT",
            MONEY => "MONEY",
            QUANTITY => "QUANTITY",
            ORDINAL => "ORDINAL",
        }
    }

    /// `None` for labels outside the table; callers drop and count those.
    pub fn from_label(label: &str) -> Option<FineTag> {
        FineTag::ALL.into_iter().find(|t| t.label() == label)
    }
}

/// Raw extractor output before aggregation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSpan {
    pub span: Range<usize>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedEntity {
    pub surface: String,
    pub class: EntityClass,
    pub tag: FineTag,
    pub span: Range<usize>,
}

pub trait EntityExtractor: Send + Sync {
    fn tag(&self, text: &str) -> Vec<TaggedSpan>;
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extraction {
    pub entities: Vec<NamedEntity>,
    /// Spans whose label is not a known fine-grained tag.
    pub unmapped: usize,
}

/// Runs `extractor` and aggregates tags into general classes.
pub fn ner_extract(extractor: &dyn EntityExtractor, text: &str) -> Extraction {
    let mut out = Extraction::default();
    for t in extractor.tag(text) {
        match FineTag::from_label(&t.label) {
            Some(tag) => out.entities.push(NamedEntity {
                surface: text[t.span.clone()].to_string(),
                class: tag.class(),
                tag,
                span: t.span,
            }),
            None => out.unmapped += 1,
        }
    }
    out
}

/// Deterministic extractor: exact-surface gazetteer plus pattern rules for
/// dates and numerals.
///
/// [`GazetteerExtractor::from_corpus`] derives entries from article titles.
/// A title's class comes from its disambiguator (`Jonathan Stark (tennis)`),
/// organisation keywords, a `(born` lead, or the head noun of the lead
/// sentence predicate (`... is an American film director ...`). Titles that
/// none of these classify are left out.
#[derive(Clone, Debug, Default)]
pub struct GazetteerExtractor {
    entries: BTreeMap<String, FineTag>,
}

impl GazetteerExtractor {
    /// Built-in demonyms only.
    pub fn new() -> Self {
        let mut g = GazetteerExtractor::default();
        for d in DEMONYMS {
            g.entries.insert(d.to_string(), FineTag::NORP);
        }
        g
    }

    pub fn from_corpus<'a>(articles: impl IntoIterator<Item = &'a Article>) -> Self {
        let mut g = GazetteerExtractor::new();
        let mut sorted: Vec<&Article> = articles.into_iter().collect();
        sorted.sort_by(|a, b| a.title.cmp(&b.title));
        for a in sorted {
            if let Some(tag) = classify_title(&a.title, &a.text) {
                let surface = surface_form(&a.title);
                if !surface.is_empty() {
                    g.entries.entry(surface.to_string()).or_insert(tag);
                }
            }
        }
        g
    }

    pub fn insert(&mut self, surface: impl Into<String>, tag: FineTag) {
        self.entries.insert(surface.into(), tag);
    }

    pub fn entries(&self) -> &BTreeMap<String, FineTag> {
        &self.entries
    }
}

struct Candidate {
    span: Range<usize>,
    tag: FineTag,
    priority: usize,
}

impl EntityExtractor for GazetteerExtractor {
    fn tag(&self, text: &str) -> Vec<TaggedSpan> {
        let mut cands = Vec::new();
        for (surface, &tag) in &self.entries {
            for (start, _) in text.match_indices(surface.as_str()) {
                let end = start + surface.len();
                if is_boundary(text, start, end) {
                    cands.push(Candidate {
                        span: start..end,
                        tag,
                        priority: 0,
                    });
                }
            }
        }
        for (i, (tag, re)) in PATTERNS.iter().enumerate() {
            for m in re.find_iter(text) {
                if is_boundary(text, m.start(), m.end()) {
                    cands.push(Candidate {
                        span: m.range(),
                        tag: *tag,
                        priority: i + 1,
                    });
                }
            }
        }
        cands.sort_by(|a, b| {
            a.span
                .start
                .cmp(&b.span.start)
                .then(b.span.end.cmp(&a.span.end))
                .then(a.priority.cmp(&b.priority))
        });
        let mut out: Vec<TaggedSpan> = Vec::new();
        let mut covered = 0;
        for c in cands {
            if c.span.start < covered {
                continue;
            }
            covered = c.span.end;
            out.push(TaggedSpan {
                span: c.span,
                label: c.tag.label().to_string(),
            });
        }
        out
    }
}

fn is_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let glued = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric());
    !glued(before) && !glued(after)
}

/// Title without a trailing parenthetical disambiguator.
pub fn surface_form(title: &str) -> &str {
    match title
        .trim_end()
        .strip_suffix(')')
        .and_then(|t| t.rfind(" (").map(|i| &title[..i]))
    {
        Some(s) => s.trim(),
        None => title.trim(),
    }
}

fn disambiguator(title: &str) -> Option<&str> {
    let t = title.trim_end().strip_suffix(')')?;
    let i = t.rfind(" (")?;
    Some(&t[i + 2..])
}

fn classify_title(title: &str, text: &str) -> Option<FineTag> {
    if let Some(d) = disambiguator(title) {
        let d = d.to_lowercase();
        if let Some(tag) = d.split_whitespace().rev().find_map(lexicon) {
            return Some(tag);
        }
    }
    let surface = surface_form(title);
    if surface.split_whitespace().any(|w| ORG_KEYWORDS.contains(&w)) {
        return Some(FineTag::ORG);
    }
    let lead = lead_sentence(text);
    if lead.contains("(born") {
        return Some(FineTag::PERSON);
    }
    predicate_head(lead)
}

fn lead_sentence(text: &str) -> &str {
    &text[..text.find(". ").map_or(text.len(), |i| i + 1)]
}

/// Tag of the head noun in the first run of lexicon words after the copula.
fn predicate_head(lead: &str) -> Option<FineTag> {
    static COPULA: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"\b(?:is|was|are|were)\s+(?:an?|the)\s+(.*)").expect("valid regex"));
    let pred = COPULA.captures(lead)?.get(1)?.as_str();
    let words: Vec<String> = pred
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let start = words.iter().position(|w| lexicon(w).is_some())?;
    let run_end = words[start..]
        .iter()
        .position(|w| lexicon(w).is_none())
        .map_or(words.len(), |n| start + n);
    lexicon(&words[run_end - 1])
}

fn lexicon(word: &str) -> Option<FineTag> {
    use FineTag::*;
    let tag = match word {
        "actor" | "actress" | "director" | "producer" | "writer" | "screenwriter" | "singer" | "musician"
        | "comedian" | "player" | "cricketer" | "footballer" | "tennis" | "politician" | "professor" | "author"
        | "novelist" | "poet" | "painter" | "officer" | "soldier" | "scientist" | "journalist" | "businessman"
        | "businesswoman" | "athlete" | "composer" | "psychologist" | "philosopher" | "lawyer" | "judge"
        | "engineer" | "architect" => PERSON,
        "film" | "movie" | "comedy" | "drama" | "novel" | "book" | "album" | "song" | "series" | "sitcom" | "play"
        | "opera" | "painting" | "poem" | "documentary" | "musical" => WORK_OF_ART,
        "university" | "college" | "company" | "corporation" | "band" | "party" | "club" | "team" | "organization"
        | "organisation" | "school" | "institute" | "agency" | "newspaper" => ORG,
        "city" | "town" | "village" | "country" | "state" | "province" | "county" | "neighborhood"
        | "neighbourhood" | "borough" | "capital" | "municipality" => GPE,
        "river" | "mountain" | "lake" | "island" | "region" | "valley" | "ocean" | "sea" | "desert" => LOC,
        "airport" | "bridge" | "stadium" | "building" | "museum" | "station" | "highway" | "tower" => FAC,
        "war" | "battle" | "festival" | "tournament" | "championship" | "election" | "revolution" => EVENT,
        "act" | "treaty" | "amendment" | "constitution" => LAW,
        "car" | "aircraft" | "software" | "game" | "console" | "phone" => PRODUCT,
        "language" | "dialect" => LANGUAGE,
        _ => return None,
    };
    Some(tag)
}

const ORG_KEYWORDS: &[&str] = &[
    "University",
    "College",
    "Institute",
    "Company",
    "Corporation",
    "Inc.",
    "Ltd",
    "Association",
    "Society",
    "Party",
    "Club",
    "Academy",
    "Foundation",
    "Records",
    "Studios",
];

const DEMONYMS: &[&str] = &[
    "American",
    "British",
    "English",
    "Scottish",
    "Welsh",
    "Irish",
    "French",
    "German",
    "Italian",
    "Spanish",
    "Portuguese",
    "Dutch",
    "Belgian",
    "Swiss",
    "Austrian",
    "Swedish",
    "Norwegian",
    "Danish",
    "Finnish",
    "Polish",
    "Russian",
    "Ukrainian",
    "Greek",
    "Turkish",
    "Chinese",
    "Japanese",
    "Korean",
    "Indian",
    "Pakistani",
    "Sri Lankan",
    "Bangladeshi",
    "Australian",
    "Canadian",
    "Mexican",
    "Brazilian",
    "Argentine",
    "Egyptian",
    "Nigerian",
    "South African",
    "Israeli",
    "Iranian",
    "Jewish",
    "Christian",
    "Muslim",
    "Catholic",
    "Republican",
    "Democratic",
];

const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|November|December";

static PATTERNS: LazyLock<Vec<(FineTag, Regex)>> = LazyLock::new(|| {
    let re = |s: String| Regex::new(&s).expect("valid regex");
    let num_words = "one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty|thirty|forty|fifty|hundred|thousand|million|billion";
    let ordinals = "first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth";
    vec![
        (FineTag::DATE, re(format!(r"\b\d{{1,2}} (?:{MONTHS}),? \d{{4}}\b"))),
        (FineTag::DATE, re(format!(r"\b(?:{MONTHS}) \d{{1,2}}(?:st|nd|rd|th)?,? \d{{4}}\b"))),
        (FineTag::DATE, re(format!(r"\b(?:{MONTHS}) \d{{4}}\b"))),
        (FineTag::DATE, re(r"\b(?:1\d{3}|20\d{2})s?\b".to_string())),
        (FineTag::MONEY, re(r"[$€£]\d[\d,]*(?:\.\d+)?(?: (?:million|billion))?".to_string())),
        (FineTag::PERCENT, re(r"\b\d+(?:\.\d+)?(?:%| percent\b)".to_string())),
        (
            FineTag::QUANTITY,
            re(r"\b\d+(?:\.\d+)?\s?(?:km|kilometres|kilometers|miles|kg|kilograms|pounds|ounces|metres|meters|feet|acres|tons|litres|liters)\b".to_string()),
        ),
        (FineTag::TIME, re(r"(?i)\b\d{1,2}(?::\d{2})?\s?[ap]\.?m\b\.?".to_string())),
        (FineTag::TIME, re(r"\b\d{1,2}:\d{2}\b".to_string())),
        (FineTag::ORDINAL, re(format!(r"(?i)\b(?:\d+(?:st|nd|rd|th)|{ordinals})\b"))),
        (FineTag::CARDINAL, re(r"\b\d[\d,]*(?:\.\d+)?\b".to_string())),
        (FineTag::CARDINAL, re(format!(r"(?i)\b(?:{num_words})\b"))),
    ]
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_is_total_and_each_tag_has_one_class() {
        let mut per_class: BTreeMap<EntityClass, Vec<&str>> = BTreeMap::new();
        for t in FineTag::ALL {
            per_class.entry(t.class()).or_default().push(t.label());
            assert_eq!(FineTag::from_label(t.label()), Some(t));
        }
        assert_eq!(per_class[&EntityClass::Person], vec!["PERSON"]);
        assert_eq!(per_class[&EntityClass::Group], vec!["NORP", "ORG", "LANGUAGE"]);
        assert_eq!(per_class[&EntityClass::Location], vec!["GPE", "FAC", "LOC"]);
        assert_eq!(
            per_class[&EntityClass::Culture],
            vec!["EVENT", "WORK_OF_ART", "LAW", "PRODUCT"]
        );
        assert_eq!(per_class[&EntityClass::Date], vec!["DATE", "TIME"]);
        assert_eq!(
            per_class[&EntityClass::Numeral],
            vec!["CARDINAL", "PERCENT", "MONEY", "QUANTITY", "ORDINAL"]
        );
        assert_eq!(FineTag::from_label("MISC"), None);
    }

    #[test]
    fn class_names_round_trip() {
        for c in EntityClass::ALL {
            assert_eq!(c.to_string().parse::<EntityClass>(), Ok(c));
        }
        assert!("animal".parse::<EntityClass>().is_err());
    }

    struct Raw(Vec<(Range<usize>, &'static str)>);

    impl EntityExtractor for Raw {
        fn tag(&self, _: &str) -> Vec<TaggedSpan> {
            self.0
                .iter()
                .map(|(r, l)| TaggedSpan {
                    span: r.clone(),
                    label: l.to_string(),
                })
                .collect()
        }
    }

    #[test]
    fn unknown_labels_are_dropped_and_counted() {
        let x = ner_extract(&Raw(vec![(0..3, "ORG"), (4..7, "MISC"), (8..11, "GPE")]), "IBM foo NYC");
        assert_eq!(x.unmapped, 1);
        assert_eq!(
            x.entities.iter().map(|e| e.class).collect::<Vec<_>>(),
            vec![EntityClass::Group, EntityClass::Location]
        );
    }

    fn corpus() -> Vec<Article> {
        let a = |t: &str, x: &str| Article {
            id: t.into(),
            title: t.into(),
            text: x.into(),
        };
        vec![
            a(
                "Big Stone Gap (film)",
                "Big Stone Gap is a 2014 American romantic comedy film directed by Adriana Trigiani.",
            ),
            a(
                "Adriana Trigiani",
                "Adriana Trigiani is an Italian American film director based in Greenwich Village.",
            ),
            a(
                "Columbia University",
                "Columbia University is a private Ivy League research university in Upper Manhattan, New York City.",
            ),
            a(
                "Ricky Gervais",
                "Ricky Dene Gervais (born 25 June 1961) is an English comedian.",
            ),
            a(
                "Jonathan Stark (tennis)",
                "During his career he won two Grand Slam doubles titles.",
            ),
            a("David Weissman", "His film credits include ``The Family Man'' (2000)."),
        ]
    }

    #[test]
    fn titles_are_classified() {
        let g = GazetteerExtractor::from_corpus(&corpus());
        let e = g.entries();
        assert_eq!(e["Big Stone Gap"], FineTag::WORK_OF_ART);
        assert_eq!(e["Adriana Trigiani"], FineTag::PERSON);
        assert_eq!(e["Columbia University"], FineTag::ORG);
        assert_eq!(e["Ricky Gervais"], FineTag::PERSON);
        assert_eq!(e["Jonathan Stark"], FineTag::PERSON);
        assert!(!e.contains_key("David Weissman"));
    }

    #[test]
    fn extracts_person_from_reference_text() {
        let g = GazetteerExtractor::from_corpus(&corpus());
        let text = "Adriana Trigiani is an Italian American film director based in Greenwich Village.";
        let x = ner_extract(&g, text);
        let persons: Vec<_> = x
            .entities
            .iter()
            .filter(|e| e.class == EntityClass::Person)
            .map(|e| e.surface.as_str())
            .collect();
        assert_eq!(persons, vec!["Adriana Trigiani"]);
        let groups: Vec<_> = x
            .entities
            .iter()
            .filter(|e| e.class == EntityClass::Group)
            .map(|e| e.surface.as_str())
            .collect();
        assert_eq!(groups, vec!["Italian", "American"]);
        assert!(ner_extract(&g, "").entities.is_empty());
    }

    #[test]
    fn date_and_numeral_patterns() {
        let g = GazetteerExtractor::new();
        let x = ner_extract(
            &g,
            "Born 25 June 1961, he won two titles in 1984 for $1,200 and 10.5 ounces, 3rd at 5 pm, 40%.",
        );
        let got: Vec<_> = x.entities.iter().map(|e| (e.surface.as_str(), e.tag)).collect();
        assert_eq!(
            got,
            vec![
                ("25 June 1961", FineTag::DATE),
                ("two", FineTag::CARDINAL),
                ("1984", FineTag::DATE),
                ("$1,200", FineTag::MONEY),
                ("10.5 ounces", FineTag::QUANTITY),
                ("3rd", FineTag::ORDINAL),
                ("5 pm", FineTag::TIME),
                ("40%", FineTag::PERCENT),
            ]
        );
    }

    #[test]
    fn surface_strips_disambiguator() {
        assert_eq!(surface_form("Big Stone Gap (film)"), "Big Stone Gap");
        assert_eq!(surface_form("Plain"), "Plain");
        assert_eq!(disambiguator("Jonathan Stark (tennis)"), Some("tennis"));
    }
}
