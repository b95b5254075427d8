use crate::error::{invalid, Error, Result};

/// One syntactic word of a CoNLL-U sentence. Optional columns hold `"_"`
/// when unspecified, exactly as in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluToken {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 0 marks the root.
    pub head: usize,
    pub deprel: String,
}

impl ConlluToken {
    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT"
    }

    /// Universal relation without its language-specific subtype.
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

/// A dependency-annotated sentence whose heads form a single-rooted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<ConlluToken>,
    root: usize,
}

impl Sentence {
    /// Builds a sentence, checking that ids run 1..=n and that the heads
    /// form a tree with exactly one root.
    pub fn new(tokens: Vec<ConlluToken>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(invalid!("sentence has no tokens"));
        }
        let n = tokens.len();
        for (i, t) in tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(invalid!(
                    "token ids must run 1..={n}; found {} at position {}",
                    t.id,
                    i + 1
                ));
            }
            if t.head > n {
                return Err(invalid!(
                    "token {} has head {} beyond sentence length {n}",
                    t.id,
                    t.head
                ));
            }
            if t.head == t.id {
                return Err(invalid!("token {} is its own head", t.id));
            }
        }
        let roots: Vec<usize> = tokens
            .iter()
            .filter(|t| t.head == 0)
            .map(|t| t.id)
            .collect();
        if roots.len() != 1 {
            return Err(invalid!("expected exactly one root, found {}", roots.len()));
        }
        // every token must reach the root within n steps
        for t in &tokens {
            let mut cur = t.id;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(invalid!("head cycle through token {}", t.id));
                }
            }
        }
        Ok(Sentence {
            tokens,
            root: roots[0],
        })
    }

    pub fn tokens(&self) -> &[ConlluToken] {
        &self.tokens
    }

    pub fn root(&self) -> &ConlluToken {
        &self.tokens[self.root - 1]
    }

    pub fn token(&self, id: usize) -> Option<&ConlluToken> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn dependents(&self, id: usize) -> impl Iterator<Item = &ConlluToken> {
        self.tokens.iter().filter(move |t| t.head == id)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Renders the sentence back to CoNLL-U (without comments or a trailing
    /// blank line). DEPS and MISC are written as `_`.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_\n",
                t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel
            ));
        }
        out
    }
}

/// Parses CoNLL-U text. Multiword-token ranges (`1-2`) and empty nodes
/// (`3.1`) are skipped; every remaining sentence must be a single-rooted
/// tree.
pub fn parse_conllu(text: &[u8]) -> Result<Vec<Sentence>> {
    let text = std::str::from_utf8(text).map_err(|e| {
        Error::parse(
            "CoNLL-U",
            format!("byte {}", e.valid_up_to()),
            "invalid UTF-8",
        )
    })?;
    let mut sentences = Vec::new();
    let mut current: Vec<ConlluToken> = Vec::new();
    let mut saw_token_line = false;

    let mut flush = |current: &mut Vec<ConlluToken>, saw: &mut bool| -> Result<()> {
        if *saw {
            let index = sentences.len();
            let s = Sentence::new(std::mem::take(current))
                .map_err(|e| invalid!("sentence {index}: {}", strip_prefix(&e)))?;
            sentences.push(s);
        }
        *saw = false;
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut current, &mut saw_token_line)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                "CoNLL-U",
                format!("line {line_no}"),
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        saw_token_line = true;
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id = cols[0].parse::<usize>().map_err(|_| {
            Error::parse(
                "CoNLL-U",
                format!("line {line_no}"),
                format!("bad token id {:?}", cols[0]),
            )
        })?;
        let head = cols[6].parse::<usize>().map_err(|_| {
            Error::parse(
                "CoNLL-U",
                format!("line {line_no}"),
                format!("bad head {:?}", cols[6]),
            )
        })?;
        current.push(ConlluToken {
            id,
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            upos: cols[3].to_owned(),
            xpos: cols[4].to_owned(),
            feats: cols[5].to_owned(),
            head,
            deprel: cols[7].to_owned(),
        });
    }
    flush(&mut current, &mut saw_token_line)?;
    Ok(sentences)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Validation(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOGS_BARK: &str = "# text = Dogs bark\n\
        1\tDogs\tdog\tNOUN\tNNS\tNumber=Plur\t2\tnsubj\t_\t_\n\
        2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn minimal_tree() {
        let s = parse_conllu(DOGS_BARK.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].root().id, 2);
        assert_eq!(s[0].dependents(2).count(), 1);
    }

    #[test]
    fn cycle_rejected_with_sentence_index() {
        let text =
            format!("{DOGS_BARK}1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n");
        let err = parse_conllu(text.as_bytes()).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("sentence 1"), "{err}");
    }

    #[test]
    fn multi_root_rejected() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(parse_conllu(text.as_bytes()).is_err());
    }

    #[test]
    fn three_blocks() {
        let text = DOGS_BARK.repeat(3);
        assert_eq!(parse_conllu(text.as_bytes()).unwrap().len(), 3);
    }

    #[test]
    fn multiword_ranges_and_empty_nodes_skipped() {
        let text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
            1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n\
            2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
            2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\
            3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n";
        let s = parse_conllu(text.as_bytes()).unwrap();
        assert_eq!(s[0].len(), 3);
        assert_eq!(s[0].root().form, "go");
    }

    #[test]
    fn column_count_error_has_line_number() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\n";
        match parse_conllu(text.as_bytes()).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "line 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn render_round_trip() {
        let s = parse_conllu(DOGS_BARK.as_bytes()).unwrap();
        let again = parse_conllu(s[0].to_conllu().as_bytes()).unwrap();
        assert_eq!(s, again);
    }
}
