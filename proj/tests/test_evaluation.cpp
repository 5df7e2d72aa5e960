#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cof/evaluation.hpp"
#include "cof/rng.hpp"
#include "cof/synthetic.hpp"
#include "test_util.hpp"

using namespace cof;

namespace {

// Ranking r1..rn with scores assigned positionally.
std::pair<std::vector<std::string>, std::map<std::string, int>> ranked_fixture(
    const std::vector<int>& scores) {
    std::vector<std::string> ranked;
    std::map<std::string, int> judgments;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::string id = "r" + std::to_string(i);
        ranked.push_back(id);
        if (scores[i] >= 0) {
            judgments[id] = scores[i];
        }
    }
    return {ranked, judgments};
}

}  // namespace

TEST_CASE("precision_at_k soft and hard fixtures") {
    SUBCASE("all very relevant") {
        const auto [ranked, judgments] = ranked_fixture({3, 3, 3, 3, 3});
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::soft) == 1.0);
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::hard) == 1.0);
    }

    SUBCASE("the [3,2,1,0,3] fixture") {
        const auto [ranked, judgments] = ranked_fixture({3, 2, 1, 0, 3});
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::soft) ==
              doctest::Approx(0.6).epsilon(1e-12));
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::hard) ==
              doctest::Approx(0.4).epsilon(1e-12));
    }

    SUBCASE("unjudged reviewers are skipped (ranking restricted to R_p)") {
        // -1 marks reviewers without a judgment; they must not consume rank slots.
        const auto [ranked, judgments] = ranked_fixture({-1, 3, -1, 2, 1, 0, 3});
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::soft) ==
              doctest::Approx(0.6).epsilon(1e-12));
    }

    SUBCASE("|R_p| < K keeps the K denominator and warns") {
        const auto [ranked, judgments] = ranked_fixture({3, 3});
        int short_rp = 0;
        CHECK(precision_at_k(ranked, judgments, 5, PrecisionMode::soft, &short_rp) ==
              doctest::Approx(0.4).epsilon(1e-12));
        CHECK(short_rp == 1);
    }
}

TEST_CASE("precision_at_k_liu fixtures") {
    {
        const auto [ranked, judgments] = ranked_fixture({3, 3, 3, 3, 3});
        CHECK(precision_at_k_liu(ranked, judgments, 5) == 1.0);
    }
    {
        const auto [ranked, judgments] = ranked_fixture({3, 2, 1, 0, 3});
        CHECK(precision_at_k_liu(ranked, judgments, 5) == doctest::Approx(0.6).epsilon(1e-12));
    }
    {
        const auto [ranked, judgments] = ranked_fixture({0, 0, 0, 0, 0});
        CHECK(precision_at_k_liu(ranked, judgments, 5) == 0.0);
    }
}

TEST_CASE("precision_at_k_anjum fixtures") {
    SUBCASE("short R_p uses its own size as denominator") {
        const auto [ranked, judgments] = ranked_fixture({2, 2, 2});
        CHECK(precision_at_k_anjum(ranked, judgments, 5) == 1.0);
    }

    SUBCASE("|R_p| = 10, top-5 [2,2,0,0,0]") {
        const auto [ranked, judgments] =
            ranked_fixture({2, 2, 0, 0, 0, 0, 0, 0, 0, 0});
        CHECK(precision_at_k_anjum(ranked, judgments, 5) ==
              doctest::Approx(0.4).epsilon(1e-12));
    }

    SUBCASE("equals soft P@K whenever |R_p| >= K") {
        Rng rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> scores;
            const int n = 5 + static_cast<int>(rng.uniform_int(0, 10));
            for (int i = 0; i < n; ++i) {
                scores.push_back(static_cast<int>(rng.uniform_int(0, 3)));
            }
            const auto [ranked, judgments] = ranked_fixture(scores);
            CHECK(precision_at_k_anjum(ranked, judgments, 5) ==
                  precision_at_k(ranked, judgments, 5, PrecisionMode::soft));
        }
    }
}

TEST_CASE("hard P@K never exceeds soft P@K, both within [0,1]") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> scores;
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 14));
        for (int i = 0; i < n; ++i) {
            scores.push_back(static_cast<int>(rng.uniform_int(0, 3)));
        }
        const auto [ranked, judgments] = ranked_fixture(scores);
        for (const int k : {5, 10}) {
            const double soft = precision_at_k(ranked, judgments, k, PrecisionMode::soft);
            const double hard = precision_at_k(ranked, judgments, k, PrecisionMode::hard);
            CHECK(hard <= soft);
            CHECK(soft >= 0.0);
            CHECK(soft <= 1.0);
        }
    }
}

TEST_CASE("evaluate_rankings averages the four primary metrics") {
    std::map<std::string, std::vector<std::string>> rankings;
    std::vector<RelevanceJudgment> judgments;
    // Paper A: judged scores in rank order 3,2,1,0,3 ... padded with zeros.
    const std::vector<int> a_scores = {3, 2, 1, 0, 3, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < a_scores.size(); ++i) {
        const std::string id = "r" + std::to_string(i);
        rankings["paperA"].push_back(id);
        judgments.push_back({"paperA", id, a_scores[i]});
    }
    const MetricReport report = evaluate_rankings(rankings, JudgmentSet(judgments));
    CHECK(report.values.at("soft_p@5") == doctest::Approx(0.6));
    CHECK(report.values.at("hard_p@5") == doctest::Approx(0.4));
    CHECK(report.values.at("soft_p@10") == doctest::Approx(0.3));
    CHECK(report.values.at("hard_p@10") == doctest::Approx(0.2));
    CHECK(report.values.at("liu_p@5") == doctest::Approx(0.6));
    CHECK(report.values.at("anjum_p@5") == doctest::Approx(0.6));
    CHECK(report.average == doctest::Approx((0.6 + 0.4 + 0.3 + 0.2) / 4.0));
    CHECK(report.per_paper.at("paperA").at("soft_p@5") == doctest::Approx(0.6));
    for (const auto& [metric, value] : report.values) {
        (void)metric;
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
    }
}

TEST_CASE("jaccard_to_rating") {
    const std::array<double, 3> t = {0.2, 0.4, 0.7};
    CHECK(jaccard_to_rating({"a", "b"}, {"a", "b"}, t) == 3);       // J = 1
    CHECK(jaccard_to_rating({"a"}, {"b"}, t) == 0);                 // J = 0
    CHECK(jaccard_to_rating({"a", "b"}, {"a", "c", "d"}, t) == 1);  // J = 1/4
    CHECK(jaccard_to_rating({}, {}, t) == 0);                       // both empty
}

TEST_CASE("aggregate_annotations rounds half-up") {
    CHECK(aggregate_annotations({3, 3, 3, 3, 3}) == 3);
    CHECK(aggregate_annotations({2, 3, 3, 2, 2}) == 2);  // mean 2.4
    CHECK(aggregate_annotations({1, 2}) == 2);           // mean 1.5, half-up
    CHECK(aggregate_annotations({0, 0, 1}) == 0);        // mean 1/3
    CHECK_THROWS_AS(aggregate_annotations({}), UsageError);
    CHECK_THROWS_AS(aggregate_annotations({4}), UsageError);
}

TEST_CASE("z_test") {
    SUBCASE("identical run lists give p = 1") {
        const ZTestResult r = z_test({0.5, 0.6, 0.7}, {0.5, 0.6, 0.7});
        CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("matches a frozen normal-CDF oracle") {
        // means 0.50 vs 0.48, both sample sd 0.02, n = 3.
        const ZTestResult r = z_test({0.52, 0.50, 0.48}, {0.50, 0.48, 0.46});
        CHECK(std::abs(r.z - 1.2247448713915898) < 1e-9);
        CHECK(std::abs(r.p_value - 0.2206713619198466) < 1e-6);
    }

    SUBCASE("degenerate variances") {
        CHECK(z_test({0.5, 0.5}, {0.5, 0.5}).p_value == 1.0);
        CHECK(z_test({0.5, 0.5}, {0.4, 0.4}).p_value == 0.0);
    }

    SUBCASE("needs two values per list") {
        CHECK_THROWS_AS(z_test({0.5}, {0.4, 0.4}), UsageError);
    }
}

TEST_CASE("mean_rank_probe with oracle scorers") {
    std::vector<ProbeTask> tasks;
    for (int t = 0; t < 3; ++t) {
        ProbeTask task;
        task.kind = t == 0 ? ProbeKind::semantic : t == 1 ? ProbeKind::topic : ProbeKind::citation;
        task.query = "q" + std::to_string(t);
        for (int i = 0; i < 100; ++i) {
            task.candidates.push_back("cand" + std::to_string(t) + "_" + std::to_string(i));
        }
        task.relevant_index = 17;
        tasks.push_back(std::move(task));
    }

    SUBCASE("perfect scorer has mean rank exactly 1") {
        const ProbeScorer perfect = [](const std::string&, const std::string& candidate,
                                       ProbeKind) {
            return candidate.find("_17") != std::string::npos ? 1.0 : 0.0;
        };
        const ProbeReport report = mean_rank_probe(perfect, tasks);
        CHECK(report.mean_rank.at(ProbeKind::semantic) == 1.0);
        CHECK(report.mean_rank.at(ProbeKind::topic) == 1.0);
        CHECK(report.mean_rank.at(ProbeKind::citation) == 1.0);
        CHECK(report.n_tasks.at(ProbeKind::semantic) == 1);
    }

    SUBCASE("hand-built scorer yields the exact rank") {
        // Ten candidates outscore the relevant one; rank must be 11.
        const ProbeScorer scorer = [](const std::string&, const std::string& candidate,
                                      ProbeKind) {
            const std::size_t us = candidate.rfind('_');
            const int idx = std::stoi(candidate.substr(us + 1));
            if (idx == 17) {
                return 50.0;
            }
            return idx < 10 ? 100.0 : 0.0;
        };
        const ProbeReport report = mean_rank_probe(scorer, tasks);
        CHECK(report.mean_rank.at(ProbeKind::semantic) == 11.0);
    }

    SUBCASE("malformed tasks are rejected") {
        ProbeTask bad = tasks[0];
        bad.candidates.pop_back();
        CHECK_THROWS_AS(
            mean_rank_probe([](const std::string&, const std::string&, ProbeKind) { return 0.0; },
                            {bad}),
            UsageError);
    }
}

TEST_CASE("build_probe_tasks produces well-formed 100-candidate tasks") {
    SyntheticCorpusSpec spec;
    spec.num_papers = 220;
    spec.num_queries = 10;
    spec.num_fields = 105;
    spec.vocab_size = 1300;
    spec.num_reviewers = 8;
    spec.num_submissions = 6;
    spec.seed = 9;
    const SyntheticOutput out = generate_synthetic_corpus(spec);

    const std::vector<ProbeTask> tasks = build_probe_tasks(out.papers, out.submissions, 5, 3);
    int semantic = 0, topic = 0, citation = 0;
    for (const ProbeTask& t : tasks) {
        CHECK(t.candidates.size() == 100);
        CHECK(t.relevant_index >= 0);
        CHECK(t.relevant_index < 100);
        switch (t.kind) {
            case ProbeKind::semantic: ++semantic; break;
            case ProbeKind::topic: ++topic; break;
            case ProbeKind::citation: ++citation; break;
        }
    }
    CHECK(semantic == 5);
    CHECK(topic >= 1);
    CHECK(citation >= 1);

    // Uniform random scoring lands near the 50.5 expectation (seeded, exact
    // value is deterministic).
    Rng score_rng(123);
    std::map<std::pair<std::string, std::string>, double> memo;
    const ProbeScorer random_scorer = [&](const std::string& q, const std::string& c, ProbeKind) {
        const auto key = std::make_pair(q, c);
        const auto it = memo.find(key);
        if (it != memo.end()) {
            return it->second;
        }
        return memo.emplace(key, score_rng.uniform()).first->second;
    };
    const ProbeReport report = mean_rank_probe(random_scorer, tasks);
    double mean = 0.0;
    int kinds = 0;
    for (const auto& [kind, rank] : report.mean_rank) {
        (void)kind;
        mean += rank;
        ++kinds;
    }
    mean /= kinds;
    CHECK(mean > 25.0);
    CHECK(mean < 76.0);
}

TEST_CASE("report serialization") {
    test::TempDir dir("evalcsv");
    MetricReport report;
    report.values["soft_p@5"] = 0.5;
    report.average = 0.5;
    const std::string path = dir.file("report.csv");
    save_metric_report_csv(path, report);
    CHECK(test::slurp(path) == "metric,value\nsoft_p@5,0.5\naverage_primary,0.5\n");

    ProbeReport probe;
    probe.mean_rank[ProbeKind::semantic] = 3.25;
    probe.n_tasks[ProbeKind::semantic] = 4;
    const std::string ppath = dir.file("probe.csv");
    save_probe_report_csv(ppath, probe);
    CHECK(test::slurp(ppath) == "probe_kind,mean_rank,n_tasks\nsemantic,3.25,4\n");
}
