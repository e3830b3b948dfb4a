use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Article;

const MAGIC: &[u8; 8] = b"COAIDX1\0";

/// Lowercased Unicode-alphanumeric runs. No stemming, no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    /// Number of times the title is repeated in the indexed text.
    pub title_weight: u32,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            title_weight: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chunking {
    #[default]
    PerArticle,
    /// Each blank-line separated paragraph becomes a document with id
    /// `<id>#<n>` and the article's title.
    PerParagraph,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate article id {0:?}")]
    DuplicateArticleId(String),
    #[error("article {0:?} has an empty title")]
    EmptyTitle(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    /// Position in [`Index::articles`]; ordinals follow ascending article id.
    pub doc: u32,
    pub tf: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchHit<'a> {
    pub article: &'a Article,
    pub score: f64,
}

/// Okapi BM25 inverted index. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Index {
    params: Bm25Params,
    chunking: Chunking,
    articles: Vec<Article>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl Index {
    pub fn build(
        corpus: impl IntoIterator<Item = Article>,
        params: Bm25Params,
        chunking: Chunking,
    ) -> Result<Index, IndexError> {
        if !(params.k1 >= 0.0 && params.k1.is_finite()) {
            return Err(IndexError::InvalidParameter(format!("k1 = {}", params.k1)));
        }
        if !(0.0..=1.0).contains(&params.b) {
            return Err(IndexError::InvalidParameter(format!("b = {}", params.b)));
        }
        let mut seen = BTreeSet::new();
        let mut articles = Vec::new();
        for a in corpus {
            if a.title.trim().is_empty() {
                return Err(IndexError::EmptyTitle(a.id));
            }
            if !seen.insert(a.id.clone()) {
                return Err(IndexError::DuplicateArticleId(a.id));
            }
            articles.push(a);
        }
        if articles.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut docs = match chunking {
            Chunking::PerArticle => articles,
            Chunking::PerParagraph => articles.into_iter().flat_map(split_paragraphs).collect(),
        };
        docs.sort_by(|a, b| a.id.cmp(&b.id));

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (ord, doc) in docs.iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            let mut len = 0u32;
            let title = tokenize(&doc.title);
            for _ in 0..params.title_weight {
                for t in &title {
                    *tf.entry(t.clone()).or_default() += 1;
                    len += 1;
                }
            }
            for t in tokenize(&doc.text) {
                *tf.entry(t).or_default() += 1;
                len += 1;
            }
            for (term, n) in tf {
                postings
                    .entry(term)
                    .or_default()
                    .push(Posting { doc: ord as u32, tf: n });
            }
            doc_lengths.push(len);
        }
        let avg_doc_length = mean(&doc_lengths);
        Ok(Index {
            params,
            chunking,
            articles: docs,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn chunking(&self) -> Chunking {
        self.chunking
    }

    pub fn doc_count(&self) -> usize {
        self.articles.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    /// Indexed documents in ordinal (ascending id) order.
    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.articles
            .binary_search_by(|a| a.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.articles[i])
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, positive for every df.
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.articles.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top-`k` documents by BM25, score descending, ties by ascending id.
    /// Repeated query terms count once.
    pub fn search(&self, query: &str, k: usize) -> Vec<SearchHit<'_>> {
        let mut scores = vec![0.0f64; self.articles.len()];
        let mut matched = vec![false; self.articles.len()];
        let mut seen = BTreeSet::new();
        let Bm25Params { k1, b, .. } = self.params;
        for term in tokenize(query) {
            if !seen.insert(term.clone()) {
                continue;
            }
            let list = self.postings(&term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(list.len());
            for p in list {
                let d = p.doc as usize;
                let norm = if self.avg_doc_length > 0.0 {
                    1.0 - b + b * self.doc_lengths[d] as f64 / self.avg_doc_length
                } else {
                    1.0
                };
                let tf = p.tf as f64;
                scores[d] += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
                matched[d] = true;
            }
        }
        let mut hits: Vec<usize> = (0..self.articles.len()).filter(|&d| matched[d]).collect();
        hits.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
        hits.truncate(k);
        hits.into_iter()
            .map(|d| SearchHit {
                article: &self.articles[d],
                score: scores[d],
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&self.params.k1.to_le_bytes());
        w.extend_from_slice(&self.params.b.to_le_bytes());
        w.extend_from_slice(&self.params.title_weight.to_le_bytes());
        w.push(match self.chunking {
            Chunking::PerArticle => 0,
            Chunking::PerParagraph => 1,
        });
        put_len(&mut w, self.articles.len());
        for a in &self.articles {
            put_str(&mut w, &a.id);
            put_str(&mut w, &a.title);
            put_str(&mut w, &a.text);
        }
        for len in &self.doc_lengths {
            w.extend_from_slice(&len.to_le_bytes());
        }
        put_len(&mut w, self.postings.len());
        for (term, list) in &self.postings {
            put_str(&mut w, term);
            put_len(&mut w, list.len());
            for p in list {
                w.extend_from_slice(&p.doc.to_le_bytes());
                w.extend_from_slice(&p.tf.to_le_bytes());
            }
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Index, IndexError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(IndexError::Corrupt("bad magic".into()));
        }
        let k1 = f64::from_le_bytes(r.array()?);
        let b = f64::from_le_bytes(r.array()?);
        let title_weight = u32::from_le_bytes(r.array()?);
        let chunking = match r.take(1)?[0] {
            0 => Chunking::PerArticle,
            1 => Chunking::PerParagraph,
            x => return Err(IndexError::Corrupt(format!("unknown chunking tag {x}"))),
        };
        let n = r.len()?;
        let mut articles = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            articles.push(Article {
                id: r.string()?,
                title: r.string()?,
                text: r.string()?,
            });
        }
        let mut doc_lengths = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            doc_lengths.push(u32::from_le_bytes(r.array()?));
        }
        let terms = r.len()?;
        let mut postings = BTreeMap::new();
        for _ in 0..terms {
            let term = r.string()?;
            let m = r.len()?;
            let mut list = Vec::with_capacity(m.min(1 << 20));
            for _ in 0..m {
                let doc = u32::from_le_bytes(r.array()?);
                let tf = u32::from_le_bytes(r.array()?);
                if doc as usize >= n {
                    return Err(IndexError::Corrupt(format!(
                        "posting for {term:?} points past the last document"
                    )));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        if r.pos != bytes.len() {
            return Err(IndexError::Corrupt("trailing bytes".into()));
        }
        let avg_doc_length = mean(&doc_lengths);
        Ok(Index {
            params: Bm25Params { k1, b, title_weight },
            chunking,
            articles,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Index, IndexError> {
        Index::from_bytes(&std::fs::read(path)?)
    }

    /// Human-readable dump for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        let docs: Vec<_> = self
            .articles
            .iter()
            .zip(&self.doc_lengths)
            .map(|(a, len)| serde_json::json!({"id": a.id, "title": a.title, "length": len}))
            .collect();
        let postings: serde_json::Map<String, serde_json::Value> = self
            .postings
            .iter()
            .map(|(t, list)| {
                let pairs: Vec<_> = list
                    .iter()
                    .map(|p| serde_json::json!([self.articles[p.doc as usize].id, p.tf]))
                    .collect();
                (t.clone(), serde_json::Value::Array(pairs))
            })
            .collect();
        serde_json::json!({
            "params": self.params,
            "chunking": self.chunking,
            "doc_count": self.doc_count(),
            "avg_doc_length": self.avg_doc_length,
            "docs": docs,
            "postings": postings,
        })
    }
}

fn mean(xs: &[u32]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
    }
}

fn split_paragraphs(a: Article) -> Vec<Article> {
    let paras: Vec<&str> = a.text.split("\n\n").map(str::trim).filter(|p| !p.is_empty()).collect();
    if paras.is_empty() {
        return vec![Article {
            id: format!("{}#0", a.id),
            title: a.title,
            text: String::new(),
        }];
    }
    paras
        .iter()
        .enumerate()
        .map(|(i, p)| Article {
            id: format!("{}#{i}", a.id),
            title: a.title.clone(),
            text: p.to_string(),
        })
        .collect()
}

fn put_len(w: &mut Vec<u8>, n: usize) {
    w.extend_from_slice(&(n as u64).to_le_bytes());
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    put_len(w, s.len());
    w.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IndexError::Corrupt("unexpected end of file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], IndexError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn len(&mut self) -> Result<usize, IndexError> {
        let n = u64::from_le_bytes(self.array()?);
        usize::try_from(n).map_err(|_| IndexError::Corrupt("length overflow".into()))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| IndexError::Corrupt("invalid UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn art(id: &str, title: &str, text: &str) -> Article {
        Article {
            id: id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    #[test]
    fn tokenizer() {
        assert_eq!(
            tokenize("Big Stone Gap (film) > It's 2014!"),
            vec!["big", "stone", "gap", "film", "it", "s", "2014"]
        );
        assert_eq!(tokenize("Téa Leoni"), vec!["téa", "leoni"]);
        assert!(tokenize("  ,.; ").is_empty());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            Index::build(vec![], Bm25Params::default(), Chunking::PerArticle),
            Err(IndexError::EmptyCorpus)
        ));
        let dup = vec![art("a", "A", ""), art("a", "B", "")];
        assert!(matches!(
            Index::build(dup, Bm25Params::default(), Chunking::PerArticle),
            Err(IndexError::DuplicateArticleId(id)) if id == "a"
        ));
    }

    #[test]
    fn empty_text_article_is_found_by_title_only() {
        let idx = Index::build(
            vec![art("1", "Lonely Title", "")],
            Bm25Params::default(),
            Chunking::PerArticle,
        )
        .unwrap();
        assert_eq!(idx.doc_count(), 1);
        // two title copies, no body
        assert_eq!(idx.doc_lengths(), &[4]);
        assert_eq!(idx.search("lonely", 5).len(), 1);
        assert!(idx.search("body words", 5).is_empty());
    }

    #[test]
    fn order_independent_and_reloadable() {
        let corpus = vec![
            art("b", "Beta", "alpha beta gamma"),
            art("a", "Alpha", "alpha alpha"),
            art("c", "Gamma", "delta"),
        ];
        let mut rev = corpus.clone();
        rev.reverse();
        let x = Index::build(corpus, Bm25Params::default(), Chunking::PerArticle).unwrap();
        let y = Index::build(rev, Bm25Params::default(), Chunking::PerArticle).unwrap();
        assert_eq!(x.to_bytes(), y.to_bytes());
        let z = Index::from_bytes(&x.to_bytes()).unwrap();
        assert_eq!(z, x);
        assert_eq!(z.to_bytes(), x.to_bytes());
        assert!(Index::from_bytes(&x.to_bytes()[..20]).is_err());
        assert!(Index::from_bytes(b"NOTANIDX").is_err());
    }

    #[test]
    fn no_match_and_truncation() {
        let corpus = vec![
            art("1", "One", "shared"),
            art("2", "Two", "shared"),
            art("3", "Three", "other"),
        ];
        let idx = Index::build(corpus, Bm25Params::default(), Chunking::PerArticle).unwrap();
        assert!(idx.search("absent", 10).is_empty());
        let hits = idx.search("shared", 100);
        assert_eq!(
            hits.iter().map(|h| h.article.id.as_str()).collect::<Vec<_>>(),
            vec!["1", "2"]
        );
        assert_eq!(hits[0].score, hits[1].score);
        assert_eq!(idx.search("shared", 1).len(), 1);
    }

    #[test]
    fn paragraph_chunking() {
        let idx = Index::build(
            vec![art("x", "Doc", "first para\n\nsecond para")],
            Bm25Params::default(),
            Chunking::PerParagraph,
        )
        .unwrap();
        assert_eq!(idx.doc_count(), 2);
        assert_eq!(idx.search("second", 1)[0].article.id, "x#1");
    }
}
