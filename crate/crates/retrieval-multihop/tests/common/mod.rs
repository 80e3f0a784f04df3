//! Fixtures and a from-scratch BM25 scorer shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use sdp_core::OperatorError;
use sdp_retrieval::{HopFinding, Paragraph, Verifier};

/// Lowercase alphanumeric runs minus the bundled stopwords, re-read from the
/// data file rather than the crate's tokenizer.
pub fn oracle_terms(text: &str) -> Vec<String> {
    let stop: BTreeSet<&str> = include_str!("../../data/stopwords.txt").lines().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            if !stop.contains(cur.as_str()) {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
    out
}

/// Textbook BM25 over title + text, each distinct query term once.
pub fn brute_bm25(corpus: &[Paragraph], query: &str, k1: f64, b: f64) -> BTreeMap<String, f64> {
    let docs: Vec<(String, Vec<String>)> = corpus
        .iter()
        .map(|p| {
            (
                p.doc_id.clone(),
                oracle_terms(&format!("{} {}", p.title, p.text)),
            )
        })
        .collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.1.len() as f64).sum::<f64>() / n;
    let q: BTreeSet<String> = oracle_terms(query).into_iter().collect();
    let mut out = BTreeMap::new();
    for (id, terms) in &docs {
        let mut s = 0.0;
        let mut any = false;
        for t in &q {
            let tf = terms.iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            any = true;
            let df = docs.iter().filter(|d| d.1.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * terms.len() as f64 / avg));
        }
        if any {
            out.insert(id.clone(), s);
        }
    }
    out
}

const VOCAB: [&str; 40] = [
    "river", "castle", "violin", "harbor", "comet", "granite", "orchid", "falcon", "senate",
    "lantern", "meadow", "glacier", "saffron", "quartz", "tundra", "canyon", "bishop", "anthem",
    "tapestry", "magnet", "pepper", "summit", "ember", "marble", "willow", "cobalt", "jasmine",
    "copper", "harvest", "voyage", "plinth", "oracle", "ribbon", "sparrow", "timber", "velvet",
    "zenith", "lagoon", "ferry", "the",
];

/// A corpus of `n` paragraphs with unique two-word titles and random text.
pub fn random_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<Paragraph> {
    let mut titles = BTreeSet::new();
    while titles.len() < n {
        let a = VOCAB[rng.gen_range(0..39)];
        let b = VOCAB[rng.gen_range(0..39)];
        if a != b {
            let mut t = format!("{}{} {}", &a[..1].to_uppercase(), &a[1..], b);
            if rng.gen_bool(0.2) {
                t.push_str(" (album)");
            }
            titles.insert(t);
        }
    }
    let mut titles: Vec<String> = titles.into_iter().collect();
    titles.shuffle(rng);
    titles
        .into_iter()
        .enumerate()
        .map(|(i, title)| {
            let len = rng.gen_range(3..25);
            let text: Vec<&str> = (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect();
            Paragraph::new(format!("doc{i:03}"), title, text.join(" "))
        })
        .collect()
}

pub fn random_query<R: Rng>(rng: &mut R) -> String {
    let len = rng.gen_range(1..5);
    (0..len)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn fixture_paragraphs() -> Vec<Paragraph> {
    [
        ("Eiffel Tower", "The Eiffel Tower is a wrought iron lattice tower in Paris, completed in 1889 and designed by the engineering company of Gustave Eiffel."),
        ("Gustave Eiffel", "Gustave Eiffel was a French civil engineer born in Dijon in 1832, whose company built railway bridges and the framework of the Statue of Liberty."),
        ("Dijon", "Dijon is a city in eastern France, the historic capital of the Burgundy region, famous for its mustard."),
        ("Christopher Nolan", "Christopher Nolan is a British filmmaker born in London in 1970, known for directing Inception and Oppenheimer."),
        ("Inception", "Inception is a 2010 science fiction heist film written and directed by Christopher Nolan, starring Leonardo DiCaprio."),
        ("Rogers Centre", "The Rogers Centre is a multipurpose stadium in downtown Toronto, home of the Blue Jays baseball team since 1989."),
        ("Toronto", "Toronto is the most populous city in Canada and the provincial capital of Ontario, located on Lake Ontario."),
        ("Marie Curie", "Marie Curie was a physicist and chemist born in Warsaw who conducted pioneering research on radioactivity and won two Nobel prizes."),
        ("Warsaw", "Warsaw is the capital and largest city of Poland, standing on the Vistula river."),
        ("Mount Kilimanjaro", "Mount Kilimanjaro is a dormant volcano in Tanzania and the highest mountain in Africa, rising 5895 metres."),
    ]
    .iter()
    .enumerate()
    .map(|(i, (t, x))| Paragraph::new(format!("p{i:02}"), *t, *x))
    .collect()
}

pub struct FallbackCase {
    pub finding: HopFinding,
    pub true_title: &'static str,
}

/// Twenty findings whose cited title is wrong: half cite a title that does
/// not exist, half cite a different real paragraph.
pub fn fallback_cases() -> Vec<FallbackCase> {
    let rows: [(&str, &str, &str, &str); 20] = [
        (
            "Eiffel Tower",
            "Paris landmarks",
            "Gustave Eiffel",
            "The wrought iron lattice tower was completed in 1889.",
        ),
        (
            "Eiffel Tower",
            "Gustave Eiffel",
            "Dijon",
            "The lattice tower in Paris was completed in 1889.",
        ),
        (
            "Gustave Eiffel",
            "French engineers",
            "Eiffel Tower",
            "The civil engineer was born in Dijon in 1832.",
        ),
        (
            "Gustave Eiffel",
            "Dijon",
            "Toronto",
            "His company built railway bridges and the Liberty framework.",
        ),
        (
            "Dijon",
            "Burgundy wine",
            "Gustave Eiffel",
            "The historic capital of Burgundy is famous for mustard.",
        ),
        (
            "Dijon",
            "Warsaw",
            "Toronto",
            "This eastern city is famous for its mustard.",
        ),
        (
            "Christopher Nolan",
            "British cinema",
            "Inception",
            "The British filmmaker was born in London in 1970.",
        ),
        (
            "Christopher Nolan",
            "Inception",
            "Warsaw",
            "The filmmaker known for Oppenheimer was born in London.",
        ),
        (
            "Inception",
            "Leonardo DiCaprio",
            "Christopher Nolan",
            "The 2010 heist film starred Leonardo DiCaprio.",
        ),
        (
            "Inception",
            "Christopher Nolan",
            "Dijon",
            "The science fiction heist film was released in 2010.",
        ),
        (
            "Rogers Centre",
            "Blue Jays",
            "Toronto",
            "The multipurpose stadium has hosted the baseball team since 1989.",
        ),
        (
            "Rogers Centre",
            "Toronto",
            "Dijon",
            "The downtown stadium is home of the Blue Jays baseball team.",
        ),
        (
            "Toronto",
            "Canadian cities",
            "Rogers Centre",
            "The most populous city in Canada lies on Lake Ontario.",
        ),
        (
            "Toronto",
            "Rogers Centre",
            "Warsaw",
            "The provincial capital of Ontario is the most populous Canadian city.",
        ),
        (
            "Marie Curie",
            "Nobel laureates",
            "Warsaw",
            "The physicist conducted pioneering research on radioactivity.",
        ),
        (
            "Marie Curie",
            "Warsaw",
            "Inception",
            "The chemist won two Nobel prizes for radioactivity research.",
        ),
        (
            "Warsaw",
            "Polish capital city",
            "Marie Curie",
            "The largest city of Poland stands on the Vistula river.",
        ),
        (
            "Warsaw",
            "Marie Curie",
            "Toronto",
            "Poland's capital stands on the Vistula river.",
        ),
        (
            "Mount Kilimanjaro",
            "African geography",
            "Dijon",
            "The dormant volcano in Tanzania rises 5895 metres.",
        ),
        (
            "Mount Kilimanjaro",
            "Toronto",
            "Warsaw",
            "The highest mountain in Africa is a dormant volcano.",
        ),
    ];
    rows.iter()
        .map(|(truth, cited, _, text)| FallbackCase {
            finding: HopFinding {
                sub_question: format!("What does the paragraph about {truth} say?"),
                cited_title: cited.to_string(),
                finding_text: text.to_string(),
                bridge_entity: None,
            },
            true_title: truth,
        })
        .collect()
}

pub fn negation_findings() -> Vec<HopFinding> {
    [
        "The paragraph does not provide a birth year.",
        "The location is not mentioned.",
        "The date is not specified anywhere.",
    ]
    .iter()
    .map(|t| HopFinding {
        sub_question: "When?".into(),
        cited_title: "Eiffel Tower".into(),
        finding_text: t.to_string(),
        bridge_entity: None,
    })
    .collect()
}

/// Accepts exactly the listed (finding text, title) pairs and counts calls.
pub struct TableVerifier {
    pub supported: BTreeSet<(String, String)>,
    pub calls: std::cell::Cell<usize>,
}

impl TableVerifier {
    pub fn for_cases(cases: &[FallbackCase]) -> Self {
        Self {
            supported: cases
                .iter()
                .map(|c| (c.finding.finding_text.clone(), c.true_title.to_string()))
                .collect(),
            calls: std::cell::Cell::new(0),
        }
    }
}

impl Verifier for TableVerifier {
    fn verify(&self, finding: &HopFinding, paragraph: &Paragraph) -> Result<bool, OperatorError> {
        self.calls.set(self.calls.get() + 1);
        Ok(self
            .supported
            .contains(&(finding.finding_text.clone(), paragraph.title.clone())))
    }
}
