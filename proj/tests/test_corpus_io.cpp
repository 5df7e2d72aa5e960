#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "cof/corpus_io.hpp"
#include "cof/embedding_store.hpp"
#include "cof/rng.hpp"
#include "cof/run_config.hpp"
#include "cof/synthetic.hpp"
#include "test_util.hpp"

using namespace cof;

TEST_CASE("load_corpus basics") {
    test::TempDir dir("corpusio");
    const std::string path = dir.file("corpus.jsonl");

    SUBCASE("empty file gives an empty corpus") {
        test::spit(path, "");
        CHECK(load_corpus(path).empty());
    }

    SUBCASE("missing abstract becomes the empty string") {
        test::spit(path, R"({"id": "p1", "title": "t"})" "\n");
        const auto records = load_corpus(path);
        REQUIRE(records.size() == 1);
        CHECK(records[0].abstract_text.empty());
        CHECK(records[0].text() == "t");
    }

    SUBCASE("parse errors name the line and key") {
        test::spit(path, R"({"id": "p1"})" "\n" R"({"id": 5})" "\n");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains(":2"), DataError);
        try {
            load_corpus(path);
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("'id'") != std::string::npos);
        }
    }

    SUBCASE("missing id is required") {
        test::spit(path, R"({"title": "x"})" "\n");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("'id'"), DataError);
    }

    SUBCASE("malformed JSON names the line") {
        test::spit(path, "{\"id\": \"p1\"}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains(":2"), DataError);
    }

    SUBCASE("bad year is rejected") {
        test::spit(path, R"({"id": "p1", "year": 20})" "\n");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("year"), DataError);
    }

    SUBCASE("unknown keys warn but load") {
        test::spit(path, R"({"id": "p1", "doi": "10.1/x"})" "\n");
        std::vector<std::string> warnings;
        const auto records = load_corpus(path, &warnings);
        CHECK(records.size() == 1);
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("doi") != std::string::npos);
    }
}

TEST_CASE("corpus round-trips through save and load") {
    test::TempDir dir("roundtrip");
    SyntheticCorpusSpec spec;
    spec.num_papers = 100;
    spec.num_queries = 20;
    spec.num_fields = 105;
    spec.vocab_size = 1300;
    spec.num_reviewers = 6;
    spec.num_submissions = 4;
    const SyntheticOutput out = generate_synthetic_corpus(spec);

    const std::string p1 = dir.file("a.jsonl");
    const std::string p2 = dir.file("b.jsonl");
    save_corpus(p1, out.papers);
    const auto loaded = load_corpus(p1);
    save_corpus(p2, loaded);
    CHECK(test::slurp(p1) == test::slurp(p2));

    // Search log and judgments too.
    const std::string l1 = dir.file("log_a.jsonl");
    const std::string l2 = dir.file("log_b.jsonl");
    save_search_log(l1, out.search_log);
    save_search_log(l2, load_search_log(l1));
    CHECK(test::slurp(l1) == test::slurp(l2));

    const std::string j1 = dir.file("j_a.jsonl");
    const std::string j2 = dir.file("j_b.jsonl");
    save_judgments(j1, out.judgments);
    save_judgments(j2, load_judgments(j1));
    CHECK(test::slurp(j1) == test::slurp(j2));

    const std::string r1 = dir.file("r_a.jsonl");
    const std::string r2 = dir.file("r_b.jsonl");
    save_reviewers(r1, out.reviewers);
    save_reviewers(r2, load_reviewers(r1));
    CHECK(test::slurp(r1) == test::slurp(r2));
}

TEST_CASE("judgment and reviewer validation") {
    test::TempDir dir("validate");
    const std::string path = dir.file("x.jsonl");

    SUBCASE("score out of range") {
        test::spit(path, R"({"paper_id": "p", "reviewer_id": "r", "score": 4})" "\n");
        CHECK_THROWS_AS(load_judgments(path), DataError);
    }

    SUBCASE("duplicate judgment pairs") {
        test::spit(path,
                   R"({"paper_id": "p", "reviewer_id": "r", "score": 1})" "\n"
                   R"({"paper_id": "p", "reviewer_id": "r", "score": 2})" "\n");
        CHECK_THROWS_WITH_AS(load_judgments(path), doctest::Contains("duplicate"), DataError);
    }

    SUBCASE("duplicate reviewer ids") {
        test::spit(path,
                   R"({"reviewer_id": "r", "paper_ids": []})" "\n"
                   R"({"reviewer_id": "r", "paper_ids": ["p"]})" "\n");
        CHECK_THROWS_WITH_AS(load_reviewers(path), doctest::Contains("duplicate"), DataError);
    }

    SUBCASE("search scores clamp to the 0-14 click scale") {
        test::spit(path,
                   R"({"query_id": "q", "text": "t", "results": [{"paper_id": "p", "score": 15}]})"
                   "\n");
        CHECK_THROWS_AS(load_search_log(path), DataError);
    }
}

TEST_CASE("rankings CSV round-trips") {
    test::TempDir dir("rankcsv");
    std::vector<RankingRow> rows;
    RankingRow r;
    r.paper_id = "s1";
    r.reviewer_id = "a9";
    r.rank = 1;
    r.f_total = 1.25;
    r.f_semantic = 0.5;
    r.f_topic = 0.5;
    r.f_citation = 0.25;
    r.variant = "CoF";
    rows.push_back(r);
    r.reviewer_id = "b2";
    r.rank = 2;
    r.f_total = kEmptyProfileScore;
    rows.push_back(r);

    const std::string path = dir.file("rankings.csv");
    save_rankings_csv(path, rows);
    const auto loaded = load_rankings_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].reviewer_id == "a9");
    CHECK(loaded[0].f_total == 1.25);
    CHECK(loaded[1].f_total == kEmptyProfileScore);
    CHECK(loaded[1].variant == "CoF");
}

TEST_CASE("embedding store round-trips bitwise") {
    test::TempDir dir("store");

    SUBCASE("empty store") {
        EmbeddingStore store;
        const std::string p1 = dir.file("empty.cofe");
        store.save(p1);
        const EmbeddingStore loaded = EmbeddingStore::load(p1);
        CHECK(loaded.size() == 0);
        const std::string p2 = dir.file("empty2.cofe");
        loaded.save(p2);
        CHECK(test::slurp(p1) == test::slurp(p2));
    }

    SUBCASE("dim mismatch and duplicate ids rejected") {
        EmbeddingStore store(3);
        store.append("a", std::vector<float>{1, 2, 3});
        CHECK_THROWS_AS(store.append("b", std::vector<float>{1, 2}), UsageError);
        CHECK_THROWS_AS(store.append("a", std::vector<float>{4, 5, 6}), UsageError);
    }

    SUBCASE("1000 random vectors round-trip bitwise") {
        Rng rng(21);
        EmbeddingStore store(24);
        for (int i = 0; i < 1000; ++i) {
            std::vector<float> v(24);
            for (float& x : v) {
                x = static_cast<float>(rng.normal());
            }
            store.append("id" + std::to_string(i), v);
        }
        const std::string p1 = dir.file("big.cofe");
        store.save(p1);
        const EmbeddingStore loaded = EmbeddingStore::load(p1);
        REQUIRE(loaded.size() == 1000);
        CHECK(loaded.vector("id512") == store.vector("id512"));
        const std::string p2 = dir.file("big2.cofe");
        loaded.save(p2);
        CHECK(test::slurp(p1) == test::slurp(p2));
    }

    SUBCASE("bad magic and truncation are format errors") {
        EmbeddingStore store(2);
        store.append("a", std::vector<float>{1, 2});
        const std::string path = dir.file("bad.cofe");
        store.save(path);
        std::string bytes = test::slurp(path);
        bytes[0] = 'X';
        test::spit(path, bytes);
        CHECK_THROWS_AS(EmbeddingStore::load(path), FormatError);

        store.save(path);
        bytes = test::slurp(path);
        bytes.resize(bytes.size() - 3);
        test::spit(path, bytes);
        CHECK_THROWS_AS(EmbeddingStore::load(path), FormatError);
    }
}

TEST_CASE("run config parsing, env overrides, and unknown keys") {
    test::TempDir dir("cfg");
    const std::string path = dir.file("run.conf");

    SUBCASE("file values land in the right fields") {
        test::spit(path,
                   "# comment\n"
                   "seed = 99\n"
                   "encoder.hidden_dim = 48\n"
                   "train.peak_lr = 1e-3\n"
                   "chain.stage1_keep = 0.25\n"
                   "filters.venues = kdd, sigir\n"
                   "filters.author_rank = first_or_last\n"
                   "chain.variant = s_plus_t_plus_c\n"
                   "paths.corpus = /tmp/c.jsonl\n");
        RunConfig cfg;
        cfg.load_file(path);
        CHECK(cfg.seed == 99);
        CHECK(cfg.synth.seed == 99);   // seed propagates to sub-configs
        CHECK(cfg.train.seed == 99);
        CHECK(cfg.encoder.hidden_dim == 48);
        CHECK(cfg.train.peak_lr == 1e-3);
        CHECK(cfg.chain.stage1_keep == 0.25);
        CHECK(cfg.filters.venues == std::vector<std::string>{"kdd", "sigir"});
        CHECK(cfg.filters.author_rank == AuthorRank::first_or_last);
        CHECK(cfg.chain.variant == AblationVariant::s_plus_t_plus_c);
        CHECK(cfg.paths.corpus == "/tmp/c.jsonl");
    }

    SUBCASE("unknown keys are rejected by name") {
        test::spit(path, "train.velocity = 3\n");
        RunConfig cfg;
        CHECK_THROWS_WITH_AS(cfg.load_file(path), doctest::Contains("train.velocity"),
                             DataError);
    }

    SUBCASE("bad values are rejected") {
        test::spit(path, "train.epochs = soon\n");
        RunConfig cfg;
        CHECK_THROWS_AS(cfg.load_file(path), DataError);
    }

    SUBCASE("environment overrides file values") {
        test::spit(path, "train.epochs = 4\n");
        RunConfig cfg;
        cfg.load_file(path);
        CHECK(cfg.train.epochs == 4);
        ::setenv("COF_TRAIN_EPOCHS", "9", 1);
        cfg.apply_environment();
        ::unsetenv("COF_TRAIN_EPOCHS");
        CHECK(cfg.train.epochs == 9);
    }
}
