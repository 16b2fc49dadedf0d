//! Synthetic bitext for experiments and tests.
//!
//! Sentences are drawn word by word from a small bilingual lexicon with
//! Zipf-like word frequencies and translated word for word. Each language
//! pair renders its English side with its own character inventory (the
//! Russian pair in capitals), so drafters specialized on one pair see
//! character statistics the other pair never produces.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;

use crate::corpus::{Corpus, Record};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    DeEn,
    FrEn,
    RuEn,
}

const DE_EN: &[(&str, &str)] = &[
    ("der", "the"), ("die", "the"), ("das", "the"), ("ist", "is"), ("und", "and"),
    ("nicht", "not"), ("wir", "we"), ("sie", "they"), ("haus", "house"), ("straße", "street"),
    ("größe", "size"), ("grün", "green"), ("über", "over"), ("schön", "beautiful"),
    ("mädchen", "girl"), ("hund", "dog"), ("katze", "cat"), ("gehen", "go"), ("heute", "today"),
    ("müssen", "must"), ("fluss", "river"), ("brücke", "bridge"), ("stadt", "city"),
    ("alt", "old"), ("neu", "new"), ("groß", "big"), ("klein", "small"), ("weiß", "white"),
    ("schwarz", "black"), ("tür", "door"), ("fenster", "window"), ("zug", "train"),
    ("früh", "early"), ("spät", "late"), ("hören", "hear"), ("sehen", "see"), ("essen", "eat"),
    ("brot", "bread"), ("käse", "cheese"), ("wasser", "water"),
];

const FR_EN: &[(&str, &str)] = &[
    ("le", "the"), ("la", "the"), ("les", "the"), ("est", "is"), ("et", "and"),
    ("pas", "not"), ("nous", "we"), ("ils", "they"), ("maison", "house"), ("rue", "street"),
    ("été", "summer"), ("très", "very"), ("garçon", "boy"), ("à", "to"), ("chien", "dog"),
    ("chat", "cat"), ("aller", "go"), ("rivière", "river"), ("pont", "bridge"), ("ville", "city"),
    ("vieux", "old"), ("nouveau", "new"), ("grand", "big"), ("petit", "small"),
    ("blanc", "white"), ("noir", "black"), ("porte", "door"), ("fenêtre", "window"),
    ("train", "train"), ("tôt", "early"), ("tard", "late"), ("écouter", "hear"), ("voir", "see"),
    ("manger", "eat"), ("pain", "bread"), ("fromage", "cheese"), ("eau", "water"),
    ("fille", "girl"), ("beau", "beautiful"), ("bonjour", "hello"),
];

const RU_EN: &[(&str, &str)] = &[
    ("и", "AND"), ("не", "NOT"), ("мы", "WE"), ("они", "THEY"), ("это", "THIS"),
    ("дом", "HOUSE"), ("улица", "STREET"), ("большой", "BIG"), ("маленький", "SMALL"),
    ("идти", "GO"), ("сегодня", "TODAY"), ("река", "RIVER"), ("мост", "BRIDGE"),
    ("город", "CITY"), ("старый", "OLD"), ("новый", "NEW"), ("белый", "WHITE"),
    ("чёрный", "BLACK"), ("дверь", "DOOR"), ("окно", "WINDOW"), ("поезд", "TRAIN"),
    ("рано", "EARLY"), ("поздно", "LATE"), ("слышать", "HEAR"), ("видеть", "SEE"),
    ("есть", "EAT"), ("хлеб", "BREAD"), ("сыр", "CHEESE"), ("вода", "WATER"),
    ("собака", "DOG"), ("кошка", "CAT"), ("девочка", "GIRL"), ("красивый", "BEAUTIFUL"),
    ("привет", "HELLO"), ("мир", "WORLD"),
];

impl Pair {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "de-en" => Ok(Pair::DeEn),
            "fr-en" => Ok(Pair::FrEn),
            "ru-en" => Ok(Pair::RuEn),
            other => Err(Error::UnknownLanguage(other.to_string())),
        }
    }

    pub fn langs(self) -> (&'static str, &'static str) {
        match self {
            Pair::DeEn => ("de", "en"),
            Pair::FrEn => ("fr", "en"),
            Pair::RuEn => ("ru", "en"),
        }
    }

    fn lexicon(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Pair::DeEn => DE_EN,
            Pair::FrEn => FR_EN,
            Pair::RuEn => RU_EN,
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            Pair::DeEn => 11,
            Pair::FrEn => 12,
            Pair::RuEn => 13,
        }
    }
}

/// Zipf-like weights `1 / (rank + 1)`.
fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|r| 1.0 / (r as f64 + 1.0))).expect("non-empty lexicon")
}

/// `records` sentence pairs of 3 to 8 words each, ending in a period.
pub fn bitext(pair: Pair, records: usize, seed: u64) -> Corpus {
    let lexicon = pair.lexicon();
    let words = zipf(lexicon.len());
    let mut rng = stream_rng(seed, pair.stream_id());
    let records = (0..records)
        .map(|_| {
            let len = rng.gen_range(3..=8);
            let picks: Vec<usize> = (0..len).map(|_| words.sample(&mut rng)).collect();
            let side = |target_side: bool| {
                let word = |i: usize| if target_side { lexicon[i].1 } else { lexicon[i].0 };
                let mut s = picks.iter().map(|&i| word(i)).collect::<Vec<_>>().join(" ");
                s.push('.');
                s
            };
            Record::new(side(false), side(true))
        })
        .collect();
    Corpus::new(Some(pair.langs()), records)
}

/// Bitext cut to roughly `bytes` bytes of UTF-8 text (at least one record).
pub fn bitext_of_size(pair: Pair, bytes: usize, seed: u64) -> Corpus {
    let mut corpus = bitext(pair, bytes / 20 + 1, seed);
    let mut total = 0;
    let keep = corpus
        .records
        .iter()
        .take_while(|r| {
            let fits = total < bytes;
            total += r.prompt.len() + r.completion.len();
            fits
        })
        .count();
    corpus.records.truncate(keep.max(1));
    corpus
}

/// Long monolingual records: `sentences` English sentences of one pair per
/// record, space separated, with an empty prompt.
pub fn paragraphs(pair: Pair, records: usize, sentences: usize, seed: u64) -> Corpus {
    let source = bitext(pair, records * sentences, seed);
    let records = source
        .records
        .chunks(sentences.max(1))
        .map(|chunk| {
            let text = chunk.iter().map(|r| r.completion.as_str()).collect::<Vec<_>>().join(" ");
            Record::new("", text)
        })
        .collect();
    Corpus::new(None, records)
}
