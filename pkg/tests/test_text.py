"""Tests for text cleaning, tokenization, annotation and vocabulary building."""

import pytest

from cluster_search.data.collections import Document
from cluster_search.text import (
    Label,
    TextPipeline,
    Vocabulary,
    VocabEntry,
    annotate,
    build_vocabulary,
    count_document,
    document_tokens,
    merge_counts,
    preprocess,
    tokenize,
)


class TestPreprocess:
    """Tests for markup, URL and hashtag removal."""

    def test_strips_tags(self):
        """Test HTML tags are removed."""
        assert preprocess("<b>hello</b> world") == "hello world"

    def test_strips_hashtags_and_urls(self):
        """Test hashtag markers and URLs are removed."""
        assert preprocess("#topic see http://x.y now") == "topic see now"

    def test_identity_on_clean_text(self):
        """Test clean text passes through unchanged."""
        assert preprocess("plain text") == "plain text"

    def test_nested_escaped_tags(self):
        """Test a tag exposed by unescaping is removed too."""
        cleaned = preprocess("a &lt;i&gt;b&lt;/i&gt; c")
        assert "<" not in cleaned
        assert cleaned == "a b c"

    @pytest.mark.parametrize(
        "raw",
        [
            "<p>x <a href='www.site.org'>link</a></p>",
            "##double #tags and www.example.com/path?q=1",
            "  spaced\t\tout \n text ",
            "&amp;lt;b&amp;gt;",
            "",
        ],
    )
    def test_idempotent(self, raw):
        """Test preprocess is a fixpoint after one application."""
        once = preprocess(raw)
        assert preprocess(once) == once


class TestTokenize:
    """Tests for tokenization and stopword filtering."""

    def test_stopwords_removed_positions_consecutive(self):
        """Test stopwords are dropped and positions restart from 0."""
        tokens = tokenize("The cat sat", frozenset({"the"}))
        assert [t.surface for t in tokens] == ["cat", "sat"]
        assert [t.position for t in tokens] == [0, 1]

    def test_empty(self):
        """Test empty text gives no tokens."""
        assert tokenize("") == []

    def test_punctuation_split_keeps_original_case(self):
        """Test punctuation splits words and originals keep their casing."""
        tokens = tokenize("Paris, France!")
        assert [t.surface for t in tokens] == ["paris", "france"]
        assert [t.original for t in tokens] == ["Paris", "France"]

    def test_sentence_start_survives_stopword_removal(self):
        """Test a word after a removed sentence-initial stopword is not sentence-initial."""
        tokens = tokenize("The Cat sat. Dogs run", frozenset({"the"}))
        starts = {t.surface: t.sentence_start for t in tokens}
        assert starts == {"cat": False, "sat": False, "dogs": True, "run": False}


class TestAnnotate:
    """Tests for NE / RW / PLAIN labelling."""

    def test_capitalized_non_initial_is_ne(self):
        """Test a capitalized word inside a sentence is a named entity."""
        tokens = annotate(tokenize("we visited Paris"), None, Vocabulary(), rw_threshold=0)
        assert tokens[2].label == Label.NE

    def test_rare_word(self):
        """Test a lowercase word with df <= threshold is a rare word."""
        vocab = Vocabulary({"zyx": VocabEntry(tf=1, df=1, label=Label.PLAIN)}, n_documents=5)
        tokens = annotate(tokenize("zyx"), None, vocab, rw_threshold=1)
        assert tokens[0].label == Label.RW

    def test_gazetteer_overrides_sentence_start(self):
        """Test gazetteer membership makes a sentence-initial word NE."""
        tokens = annotate(tokenize("Paris is big"), frozenset({"paris"}), Vocabulary(), 0)
        assert tokens[0].label == Label.NE

    def test_plain_above_threshold(self):
        """Test a frequent lowercase word stays plain."""
        vocab = Vocabulary({"cat": VocabEntry(tf=4, df=3, label=Label.PLAIN)}, n_documents=5)
        tokens = annotate(tokenize("the cat"), None, vocab, rw_threshold=1)
        assert tokens[1].label == Label.PLAIN

    def test_pre_annotated_labels_kept(self):
        """Test pre-annotated tokens keep their NE decision regardless of casing."""
        doc = Document("d1", "", annotations=(("apple", "NE"), ("Pie", "PLAIN")))
        vocab = Vocabulary({"pie": VocabEntry(tf=3, df=2, label=Label.PLAIN)}, n_documents=5)
        tokens = annotate(document_tokens(doc, frozenset()), None, vocab, 0)
        assert [t.label for t in tokens] == [Label.NE, Label.PLAIN]
        assert [t.position for t in tokens] == [0, 1]


class TestBuildVocabulary:
    """Tests for corpus vocabulary construction."""

    def test_frequencies(self):
        """Test term and document frequencies are exact."""
        vocab = build_vocabulary([Document("1", "a b a"), Document("2", "b c")], rw_threshold=0)
        assert {s: (e.tf, e.df) for s, e in vocab.entries.items()} == {
            "a": (2, 1),
            "b": (2, 2),
            "c": (1, 1),
        }

    def test_empty_corpus(self):
        """Test an empty corpus gives an empty vocabulary."""
        vocab = build_vocabulary([])
        assert len(vocab) == 0
        assert vocab.n_documents == 0

    def test_rare_word_label(self):
        """Test a df-1 word is labelled RW with the default threshold."""
        vocab = build_vocabulary([Document("1", "a b a"), Document("2", "b c")])
        assert vocab.entries["c"].label == Label.RW
        assert vocab.entries["b"].label == Label.PLAIN

    def test_entity_label_needs_consistent_capitals(self):
        """Test a surface is NE only if every non-initial occurrence is capitalized."""
        corpus = [
            Document("1", "we met Smith today"),
            Document("2", "ask Smith now"),
            Document("3", "I like Apple pie. the apple tree"),
        ]
        vocab = build_vocabulary(corpus, rw_threshold=0)
        assert vocab.entries["smith"].label == Label.NE
        assert vocab.entries["apple"].label == Label.PLAIN

    def test_insertion_order(self):
        """Test words are ordered by descending frequency, then alphabetically."""
        vocab = build_vocabulary([Document("1", "b a c b c c d")], rw_threshold=0)
        assert vocab.insertion_order() == ["c", "b", "a", "d"]

    def test_recount_matches(self):
        """Test corpus tf equals the sum of per-document counts."""
        corpus = [Document(str(i), " ".join(["w%d" % (j % 5) for j in range(i + 3)]))
                  for i in range(10)]
        vocab = build_vocabulary(corpus)
        for surface, entry in vocab.entries.items():
            per_doc = [d.text.split().count(surface) for d in corpus]
            assert entry.tf == sum(per_doc)
            assert entry.df == sum(1 for n in per_doc if n)

    def test_merge_is_order_independent(self):
        """Test merging partial counts is commutative."""
        left = count_document(tokenize("Alpha beta beta"))
        right = count_document(tokenize("beta gamma"))
        assert merge_counts(left, right) == merge_counts(right, left)

    def test_deterministic(self):
        """Test two builds over the same corpus are equal."""
        corpus = [Document("1", "x y Zed"), Document("2", "y z")]
        assert build_vocabulary(corpus) == build_vocabulary(corpus)


class TestTextPipeline:
    """Tests for the shared preprocessing settings."""

    def test_create_lowercases_lists(self):
        """Test stopwords and gazetteer entries are lowercased."""
        pipeline = TextPipeline.create(stopwords=["The"], gazetteer=["Paris"])
        assert pipeline.stopwords == frozenset({"the"})
        assert pipeline.gazetteer == frozenset({"paris"})

    def test_negative_threshold_rejected(self):
        """Test a negative rare-word threshold is rejected."""
        with pytest.raises(ValueError):
            TextPipeline.create(rw_threshold=-1)

    def test_query_inherits_corpus_entities(self):
        """Test a lowercase query word is NE when the corpus made it an entity."""
        vocab = build_vocabulary([Document("1", "we met Smith"), Document("2", "see Smith")])
        tokens = TextPipeline().query_tokens("smith", vocab)
        assert tokens[0].label == Label.NE

    def test_query_stopwords_removed(self):
        """Test queries are preprocessed like documents."""
        pipeline = TextPipeline.create(stopwords=["the"])
        tokens = pipeline.query_tokens("<i>the</i> cat", Vocabulary())
        assert [t.surface for t in tokens] == ["cat"]
