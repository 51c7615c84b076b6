import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import KNOracle, oracle_perplexity
from speechaug import lm
from speechaug.lm import (
    BOS,
    EOS,
    FALLBACK_DISCOUNT,
    UNK,
    apply_singleton_pruning,
    load_lm,
    perplexity,
    round_half_up,
    save_lm,
    train,
    train_from_text,
)


def random_corpus(seed, n_sentences=25, vocab_size=7, max_len=7):
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(vocab_size)]
    return [
        [rng.choice(words) for _ in range(rng.randint(1, max_len))]
        for _ in range(n_sentences)
    ]


def query_grid(model, per_order=25):
    """Deterministic sample of (word, context) pairs covering every order."""
    words = sorted(model.vocab) + ["zzz-oov"]
    queries = [(w, ()) for w in words]
    for m in range(2, model.order + 1):
        contexts = sorted(model.context_totals[m - 1])[:per_order]
        contexts.append(("zzz-oov",) * (m - 1))
        for ctx in contexts:
            for w in words[:: max(1, len(words) // 6)]:
                queries.append((w, ctx))
    return queries


class TestRoundHalfUp:
    @pytest.mark.parametrize(
        "x,expected",
        [
            (0.5, 1),
            (1.5, 2),
            (2.5, 3),
            (-0.5, 0),
            (Fraction(1, 2), 1),
            (2, 2),
            (Fraction(149, 100), 1),
            (Fraction(151, 100), 2),
        ],
    )
    def test_values(self, x, expected):
        assert round_half_up(x) == expected

    def test_differs_from_bankers_rounding(self):
        assert round(2.5) == 2 and round_half_up(2.5) == 3


class TestSingletonPruning:
    def corpus_with_hapaxes(self, n):
        sents = [[f"h{i:03d}"] for i in range(n)]
        sents.append(["stable", "stable", "stable"])
        return sents

    @pytest.mark.parametrize(
        "n_hapax,kappa,expected",
        [
            (50, 0.04, 2),
            (37, 0.04, 1),
            (13, 0.04, 1),
            (12, 0.04, 0),
            (2, 0.25, 1),
            (3, 0.5, 2),
        ],
    )
    def test_replacement_cardinality(self, n_hapax, kappa, expected):
        sents = self.corpus_with_hapaxes(n_hapax)
        pruned, report = apply_singleton_pruning(sents, kappa, seed=1)
        assert report.hapax_total == n_hapax
        assert len(report.replaced) == expected
        unks = sum(tok == UNK for sent in pruned for tok in sent)
        assert unks == expected

    def test_only_hapaxes_replaced(self):
        sents = self.corpus_with_hapaxes(50)
        pruned, report = apply_singleton_pruning(sents, 0.04, seed=3)
        assert all(w.startswith("h") for w in report.replaced)
        assert all("stable" in s or len(s) == 1 for s in pruned)
        flat = [tok for sent in pruned for tok in sent]
        assert flat.count("stable") == 3

    def test_deterministic_and_order_independent(self):
        sents = self.corpus_with_hapaxes(50)
        _, a = apply_singleton_pruning(sents, 0.04, seed=9)
        _, b = apply_singleton_pruning(sents, 0.04, seed=9)
        _, c = apply_singleton_pruning(list(reversed(sents)), 0.04, seed=9)
        assert a.replaced == b.replaced == c.replaced

    def test_kappa_bounds(self):
        sents = self.corpus_with_hapaxes(10)
        with pytest.raises(ValueError):
            apply_singleton_pruning(sents, -0.1)
        with pytest.raises(ValueError):
            apply_singleton_pruning(sents, 1.01)

    def test_kappa_extremes(self):
        sents = self.corpus_with_hapaxes(10)
        same, rep0 = apply_singleton_pruning(sents, 0.0)
        assert same == [list(s) for s in sents] and rep0.replaced == ()
        gone, rep1 = apply_singleton_pruning(sents, 1.0)
        assert len(rep1.replaced) == 10
        assert all(tok in (UNK, "stable") for sent in gone for tok in sent)


class TestDiscountEstimation:
    def test_hand_computed_unigram_discounts(self):
        # unigram counts: a:1 b:2 c:3 d:4 + sentence-end:10, so the
        # count-of-counts are n1=n2=n3=n4=1 and Y = 1/3
        sents = [["a"]] + [["b"]] * 2 + [["c"]] * 3 + [["d"]] * 4
        model = train(sents, order=1, kappa=0.0)
        d1, d2, d3 = model.discounts[0]
        assert d1 == pytest.approx(1 / 3, abs=1e-15)
        assert d2 == pytest.approx(1.0, abs=1e-15)
        assert d3 == pytest.approx(5 / 3, abs=1e-15)
        assert model.degenerate_orders == ()

    def test_hand_computed_probabilities(self):
        # with the discounts above, total mass 20 and gamma = 19/60:
        #   P(d)   = (4 - 5/3)/20 + (19/60)/7 = 17/105
        #   P(a)   = (1 - 1/3)/20 + (19/60)/7 = 11/140
        #   P(<s>) = 0            + (19/60)/7 = 19/420
        sents = [["a"]] + [["b"]] * 2 + [["c"]] * 3 + [["d"]] * 4
        model = train(sents, order=1, kappa=0.0)
        assert len(model.vocab) == 7
        assert model.prob("d") == pytest.approx(17 / 105, abs=1e-15)
        assert model.prob("a") == pytest.approx(11 / 140, abs=1e-15)
        assert model.prob(BOS) == pytest.approx(19 / 420, abs=1e-15)

    def test_sparse_corpus_falls_back(self):
        model = train([["kay", "wasi"], ["kay", "riqira"]], order=2, kappa=0.0)
        assert model.degenerate_orders == (1, 2)
        assert model.discounts == ((FALLBACK_DISCOUNT,) * 3,) * 2

    def test_train_rejects_bad_input(self):
        with pytest.raises(ValueError):
            train([], order=2)
        with pytest.raises(ValueError):
            train([["a"]], order=0)


class TestOracleEquivalence:
    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_matches_reference_at_every_order(self, order):
        sents = random_corpus(seed=100 + order)
        pruned, _ = apply_singleton_pruning(sents, 0.04, seed=0)
        model = train(sents, order=order, kappa=0.04, seed=0)
        oracle = KNOracle(pruned, order)
        assert set(model.vocab) == set(oracle.vocab)
        worst = 0.0
        for w, ctx in query_grid(model):
            got = model.prob(w, ctx)
            want = oracle.prob(w, ctx)
            worst = max(worst, abs(got - want))
        assert worst < 1e-12

    def test_oov_and_long_context_handling(self):
        sents = random_corpus(seed=7)
        model = train(sents, order=3, kappa=0.0)
        oracle = KNOracle(sents, 3)
        cases = [
            ("nope", ("w0", "w1")),
            ("w2", ("nope", "w1")),
            ("w2", ("w5", "w0", "w3", "w1")),
            ("w1", (UNK,)),
        ]
        for w, ctx in cases:
            assert model.prob(w, ctx) == pytest.approx(oracle.prob(w, ctx), abs=1e-12)

    def test_order_one_ignores_context(self):
        model = train(random_corpus(seed=3), order=1, kappa=0.0)
        assert model.prob("w0", ("w1", "w2")) == model.prob("w0")


class TestNormalization:
    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_observed_contexts_sum_to_one(self, order):
        model = train(random_corpus(seed=42), order=order, kappa=0.04)
        for m in range(1, order + 1):
            contexts = sorted(model.context_totals[m - 1])[:40]
            for ctx in contexts:
                mass = sum(model._p(ctx + (w,)) for w in model.vocab)
                assert mass == pytest.approx(1.0, abs=1e-9)

    def test_unseen_context_sums_to_one(self):
        model = train(random_corpus(seed=8), order=3, kappa=0.0)
        ctx = ("zzz", "yyy")
        mass = sum(model.prob(w, ctx) for w in model.vocab)
        assert mass == pytest.approx(1.0, abs=1e-9)

    @given(
        st.lists(
            st.lists(st.sampled_from("abcd"), min_size=1, max_size=5),
            min_size=1,
            max_size=8,
        ),
        st.integers(min_value=1, max_value=3),
    )
    @settings(max_examples=60, deadline=None)
    def test_normalization_property(self, sents, order):
        model = train(sents, order=order, kappa=0.0)
        contexts = list(model.context_totals[order - 1])[:5]
        contexts.append((BOS,) * (order - 1))
        for ctx in contexts:
            mass = sum(model._p(tuple(ctx) + (w,)) for w in model.vocab)
            assert mass == pytest.approx(1.0, abs=1e-9)


class TestPerplexity:
    def test_uniform_model_gives_vocab_size(self):
        class Uniform:
            order = 1

            def prob(self, word, context=()):
                return 0.25

        assert perplexity(Uniform(), [["x", "y"], ["z"]]) == pytest.approx(4.0, abs=1e-12)

    def test_matches_reference_computation(self):
        train_sents = random_corpus(seed=21)
        eval_sents = random_corpus(seed=22, n_sentences=6)
        model = train(train_sents, order=3, kappa=0.04)
        got = perplexity(model, eval_sents)
        want = oracle_perplexity(model, eval_sents)
        assert got == pytest.approx(want, rel=1e-12)

    def test_training_data_scores_better_than_noise(self):
        sents = random_corpus(seed=31)
        model = train(sents, order=3, kappa=0.0)
        shuffled = [list(reversed(s)) for s in random_corpus(seed=99, vocab_size=7)]
        assert perplexity(model, sents) < perplexity(model, shuffled)

    def test_empty_evaluation_rejected(self):
        model = train([["a", "b"]], order=2, kappa=0.0)
        with pytest.raises(ValueError):
            perplexity(model, [])


class TestBackoffTable:
    def test_round_trip_reproduces_probabilities(self, tmp_path):
        sents = random_corpus(seed=55)
        model = train(sents, order=4, kappa=0.04)
        path = tmp_path / "lm.arpa"
        save_lm(model, path, comments=["order=4"])
        reloaded = load_lm(path)
        assert reloaded.order == model.order
        assert reloaded.vocab == model.vocab
        worst = 0.0
        for w, ctx in query_grid(model):
            worst = max(worst, abs(reloaded.prob(w, ctx) - model.prob(w, ctx)))
        assert worst < 1e-12

    def test_declared_counts_match_sections(self, tmp_path):
        model = train(random_corpus(seed=56), order=3, kappa=0.0)
        path = tmp_path / "lm.arpa"
        save_lm(model, path)
        declared = {}
        sections = {}
        current = None
        for line in path.read_text().splitlines():
            line = line.strip()
            if line.startswith("ngram "):
                m, n = line.split()[1].split("=")
                declared[int(m)] = int(n)
            elif line.startswith("\\") and line.endswith("-grams:"):
                current = int(line[1:].split("-")[0])
                sections[current] = 0
            elif line == "\\end\\":
                current = None
            elif line and not line.startswith("#") and current is not None:
                sections[current] += 1
        assert declared == sections

    def test_every_vocab_unigram_listed(self, tmp_path):
        model = train([["kay", "wasi"]], order=2, kappa=0.0)
        path = tmp_path / "lm.arpa"
        save_lm(model, path)
        reloaded = load_lm(path)
        for w in (UNK, BOS, EOS, "kay", "wasi"):
            assert (w,) in reloaded.table

    def test_comments_survive(self, tmp_path):
        model = train([["a"]], order=1, kappa=0.0)
        path = tmp_path / "lm.arpa"
        save_lm(model, path, comments=["seed=5", "kappa=0.04"])
        text = path.read_text()
        assert text.startswith("# seed=5\n# kappa=0.04\n")
        load_lm(path)

    def test_loader_rejects_misplaced_gram(self, tmp_path):
        path = tmp_path / "bad.arpa"
        path.write_text(
            "\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\ta b\n\n\\end\\\n"
        )
        with pytest.raises(ValueError):
            load_lm(path)

    def test_backoff_weight_missing_for_unseen_context(self, tmp_path):
        # contexts the model never saw carry no weight entry; lookups through
        # them must still resolve via shorter grams
        model = train(random_corpus(seed=57), order=3, kappa=0.0)
        path = tmp_path / "lm.arpa"
        save_lm(model, path)
        reloaded = load_lm(path)
        p = reloaded.prob("w0", ("zzz", "yyy"))
        assert p == pytest.approx(model.prob("w0", ("zzz", "yyy")), abs=1e-12)


class TestTrainFromText:
    def test_reads_one_sentence_per_line(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("kay wasi\n\nkay riqira\n   \n")
        model = train_from_text(path, order=2, kappa=0.0)
        direct = train([["kay", "wasi"], ["kay", "riqira"]], order=2, kappa=0.0)
        assert model.counts == direct.counts
        assert model.discounts == direct.discounts

    def test_logprob_consistency(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("kay wasi riqira\nwasi kay\n")
        model = train_from_text(path, order=2, kappa=0.0)
        assert model.logprob("kay") == pytest.approx(math.log(model.prob("kay")))
