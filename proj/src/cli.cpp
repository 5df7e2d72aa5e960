#include "cof/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "cof/corpus_io.hpp"
#include "cof/embedding_store.hpp"
#include "cof/evaluation.hpp"
#include "cof/matching.hpp"
#include "cof/pretraining.hpp"
#include "cof/run_config.hpp"
#include "cof/synthetic.hpp"

namespace cof {

namespace {

namespace fs = std::filesystem;

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

struct LoadedModel {
    Checkpoint checkpoint;
    Vocabulary vocab;
};

LoadedModel load_model(const std::string& model_path, const std::string& vocab_path) {
    LoadedModel m{load_checkpoint(model_path), Vocabulary::load(vocab_path)};
    if (m.checkpoint.config.vocab_size != m.vocab.size()) {
        throw DataError("model " + model_path + " was trained with vocab size " +
                        std::to_string(m.checkpoint.config.vocab_size) + ", but " + vocab_path +
                        " holds " + std::to_string(m.vocab.size()) + " tokens");
    }
    return m;
}

Vocabulary build_training_vocab(const std::vector<CorpusRecord>& corpus, const SearchLog& log,
                                const RunConfig& cfg) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size() + log.queries.size() + 4);
    for (const CorpusRecord& r : corpus) {
        texts.push_back(r.text());
    }
    for (const SearchQuery& q : log.queries) {
        texts.push_back(q.text);
    }
    for (const Factor f : {Factor::semantic, Factor::topic, Factor::citation,
                           Factor::topic_classification}) {
        texts.push_back(instruction_for(f).text);
    }
    return Vocabulary::build(texts, cfg.vocab_min_freq, cfg.vocab_max_size);
}

FactorDatasets build_datasets(const std::vector<CorpusRecord>& corpus, const SearchLog& log,
                              const RunConfig& cfg, SampleBuildReport* report) {
    const CorpusIndex index(corpus);
    Rng seeds(cfg.seed);
    FactorDatasets data;
    data.semantic = build_semantic_samples(log, index, cfg.train.hard_negatives_per_sample,
                                           seeds.fork(10).next_u64(), report);
    data.topic = build_topic_samples(corpus, cfg.train.hard_negatives_per_sample,
                                     cfg.topic_pairs_per_paper, seeds.fork(11).next_u64());
    data.citation = build_citation_samples(corpus, cfg.train.hard_negatives_per_sample,
                                           seeds.fork(12).next_u64());
    return data;
}

int reference_year_for(const CorpusRecord& submission, const std::vector<CorpusRecord>& corpus,
                       int flag_value) {
    if (flag_value > 0) {
        return flag_value;
    }
    if (submission.year > 0) {
        return submission.year;
    }
    int max_year = 0;
    for (const CorpusRecord& r : corpus) {
        max_year = std::max(max_year, r.year);
    }
    return max_year + 1;
}

std::vector<ReviewerProfile> build_profiles(const std::vector<ReviewerRecord>& reviewers,
                                            const CorpusIndex& index,
                                            const ProfileFilters& filters, int reference_year) {
    std::vector<ReviewerProfile> profiles;
    profiles.reserve(reviewers.size());
    for (const ReviewerRecord& r : reviewers) {
        profiles.push_back(build_profile(r, index, filters, reference_year));
    }
    return profiles;
}

std::vector<RankingRow> match_with_model(const std::vector<CorpusRecord>& submissions,
                                         const std::vector<CorpusRecord>& corpus,
                                         const std::vector<ReviewerRecord>& reviewers,
                                         EmbeddingProvider& provider, const ChainConfig& chain,
                                         const ProfileFilters& filters, int reference_year_flag) {
    const CorpusIndex index(corpus);
    std::vector<RankingRow> rows;
    for (const CorpusRecord& submission : submissions) {
        const int ref_year = reference_year_for(submission, corpus, reference_year_flag);
        const std::vector<ReviewerProfile> profiles =
            build_profiles(reviewers, index, filters, ref_year);
        const MatchContext ctx{index, profiles, provider};
        const std::vector<RankedReviewer> ranking = rank_reviewers(submission, ctx, chain);
        const std::vector<RankingRow> paper_rows =
            ranking_to_rows(submission.id, ranking, chain.variant);
        rows.insert(rows.end(), paper_rows.begin(), paper_rows.end());
    }
    return rows;
}

std::vector<RankingRow> match_with_tpms(const std::vector<CorpusRecord>& submissions,
                                        const std::vector<CorpusRecord>& corpus,
                                        const std::vector<ReviewerRecord>& reviewers,
                                        const ProfileFilters& filters, int reference_year_flag) {
    const CorpusIndex index(corpus);
    std::vector<RankingRow> rows;
    for (const CorpusRecord& submission : submissions) {
        const int ref_year = reference_year_for(submission, corpus, reference_year_flag);
        const std::vector<ReviewerProfile> profiles =
            build_profiles(reviewers, index, filters, ref_year);

        // idf over the union corpus: every profile paper plus the submission.
        std::vector<std::string> documents;
        documents.push_back(submission.text());
        std::set<std::string> pool;
        for (const ReviewerProfile& p : profiles) {
            pool.insert(p.paper_ids.begin(), p.paper_ids.end());
        }
        for (const std::string& pid : pool) {
            documents.push_back(index.at(pid).text());
        }
        const TpmsStats stats = build_tpms_stats(documents);

        std::vector<std::pair<std::string, double>> scored;
        for (const ReviewerProfile& p : profiles) {
            std::vector<std::string> texts;
            texts.reserve(p.paper_ids.size());
            for (const std::string& pid : p.paper_ids) {
                texts.push_back(index.at(pid).text());
            }
            scored.emplace_back(p.reviewer_id, tpms_score(submission.text(), texts, stats));
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        for (std::size_t i = 0; i < scored.size(); ++i) {
            RankingRow row;
            row.paper_id = submission.id;
            row.reviewer_id = scored[i].first;
            row.rank = static_cast<int>(i) + 1;
            row.f_total = scored[i].second;
            row.f_semantic = scored[i].second;
            row.variant = "TPMS";
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::map<std::string, std::vector<std::string>> rankings_by_paper(
    const std::vector<RankingRow>& rows) {
    std::map<std::string, std::vector<std::pair<int, std::string>>> grouped;
    for (const RankingRow& r : rows) {
        grouped[r.paper_id].emplace_back(r.rank, r.reviewer_id);
    }
    std::map<std::string, std::vector<std::string>> out;
    for (auto& [paper, entries] : grouped) {
        std::sort(entries.begin(), entries.end());
        for (const auto& [rank, reviewer] : entries) {
            (void)rank;
            out[paper].push_back(reviewer);
        }
    }
    return out;
}

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

RunConfig make_config(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty()) {
        cfg.load_file(flags.config_path);
    }
    cfg.apply_environment();
    if (flags.seed.has_value()) {
        cfg.set("seed", std::to_string(*flags.seed));
    }
    return cfg;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"chain-of-factors paper-reviewer matching"};
    app.require_subcommand(1);

    // --- build-corpus ---
    auto* build = app.add_subcommand("build-corpus", "generate the seeded synthetic corpus");
    CommonFlags build_flags;
    std::string build_out;
    std::optional<int> opt_papers, opt_queries, opt_fields, opt_reviewers, opt_submissions;
    build->add_option("--config", build_flags.config_path, "run configuration file");
    build->add_option("--seed", build_flags.seed, "run seed");
    build->add_option("--out-dir", build_out, "output directory")->required();
    build->add_option("--papers", opt_papers, "number of corpus papers");
    build->add_option("--queries", opt_queries, "number of search-log queries");
    build->add_option("--fields", opt_fields, "number of fine-grained fields");
    build->add_option("--reviewers", opt_reviewers, "number of candidate reviewers");
    build->add_option("--submissions", opt_submissions, "number of held-out submissions");

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "contrastive pre-training on factor data");
    CommonFlags train_flags;
    std::string train_corpus, train_log, train_out;
    std::optional<int> opt_epochs, opt_max_samples, opt_max_paper_len, opt_hidden, opt_layers;
    bool no_instructions = false;
    train_cmd->add_option("--config", train_flags.config_path, "run configuration file");
    train_cmd->add_option("--seed", train_flags.seed, "run seed");
    train_cmd->add_option("--corpus", train_corpus, "corpus JSONL")->required();
    train_cmd->add_option("--search-log", train_log, "search log JSONL (semantic factor)");
    train_cmd->add_option("--out-dir", train_out, "output directory")->required();
    train_cmd->add_option("--epochs", opt_epochs, "override train.epochs");
    train_cmd->add_option("--max-samples-per-factor", opt_max_samples,
                          "override train.max_samples_per_factor");
    train_cmd->add_option("--max-paper-len", opt_max_paper_len,
                          "override encoder.max_paper_len");
    train_cmd->add_option("--hidden-dim", opt_hidden, "override encoder.hidden_dim");
    train_cmd->add_option("--num-layers", opt_layers, "override encoder.num_layers");
    train_cmd->add_flag("--no-instructions", no_instructions,
                        "train the No-Instruction ablation encoder");

    // --- embed ---
    auto* embed_cmd = app.add_subcommand("embed", "embed a corpus under one factor");
    std::string embed_corpus, embed_model, embed_vocab, embed_factor = "semantic", embed_out;
    embed_cmd->add_option("--corpus", embed_corpus, "corpus JSONL")->required();
    embed_cmd->add_option("--model", embed_model, "weight checkpoint")->required();
    embed_cmd->add_option("--vocab", embed_vocab, "vocabulary file")->required();
    embed_cmd->add_option("--factor", embed_factor,
                          "semantic|topic|citation|topic_classification|none");
    embed_cmd->add_option("--out", embed_out, "embedding store path")->required();

    // --- match ---
    auto* match_cmd = app.add_subcommand("match", "rank reviewers for submissions");
    CommonFlags match_flags;
    std::string match_subs, match_corpus, match_reviewers, match_model, match_vocab, match_out;
    std::string match_variant = "cof", match_method = "model", match_author_rank, match_venues;
    std::optional<double> opt_keep1, opt_keep2;
    std::optional<int> opt_years_back;
    int match_ref_year = 0;
    match_cmd->add_option("--config", match_flags.config_path, "run configuration file");
    match_cmd->add_option("--seed", match_flags.seed, "run seed");
    match_cmd->add_option("--submissions", match_subs, "submissions JSONL")->required();
    match_cmd->add_option("--corpus", match_corpus, "profile corpus JSONL")->required();
    match_cmd->add_option("--reviewers", match_reviewers, "reviewers JSONL")->required();
    match_cmd->add_option("--model", match_model, "weight checkpoint (method=model)");
    match_cmd->add_option("--vocab", match_vocab, "vocabulary file (method=model)");
    match_cmd->add_option("--out", match_out, "rankings CSV")->required();
    match_cmd->add_option("--variant", match_variant,
                          "cof|no_instruction|s|t|c|s_plus_t_plus_c|s_to_t_to_c");
    match_cmd->add_option("--method", match_method, "model|tpms");
    match_cmd->add_option("--stage1-keep", opt_keep1, "override chain.stage1_keep");
    match_cmd->add_option("--stage2-keep", opt_keep2, "override chain.stage2_keep");
    match_cmd->add_option("--years-back", opt_years_back, "profile time-span filter");
    match_cmd->add_option("--venues", match_venues, "comma-separated venue whitelist");
    match_cmd->add_option("--author-rank", match_author_rank, "any|first|last|first_or_last");
    match_cmd->add_option("--reference-year", match_ref_year,
                          "reference year for the time-span filter");

    // --- ablate ---
    auto* ablate_cmd = app.add_subcommand("ablate", "emit rankings for all 7 variants");
    CommonFlags ablate_flags;
    std::string ab_subs, ab_corpus, ab_reviewers, ab_model, ab_noinstr_model, ab_vocab, ab_out;
    int ab_ref_year = 0;
    ablate_cmd->add_option("--config", ablate_flags.config_path, "run configuration file");
    ablate_cmd->add_option("--seed", ablate_flags.seed, "run seed");
    ablate_cmd->add_option("--submissions", ab_subs, "submissions JSONL")->required();
    ablate_cmd->add_option("--corpus", ab_corpus, "profile corpus JSONL")->required();
    ablate_cmd->add_option("--reviewers", ab_reviewers, "reviewers JSONL")->required();
    ablate_cmd->add_option("--model", ab_model, "instructed checkpoint")->required();
    ablate_cmd->add_option("--no-instruction-model", ab_noinstr_model,
                           "checkpoint trained with --no-instructions")
        ->required();
    ablate_cmd->add_option("--vocab", ab_vocab, "vocabulary file")->required();
    ablate_cmd->add_option("--out-dir", ab_out, "output directory")->required();
    ablate_cmd->add_option("--reference-year", ab_ref_year, "reference year for filters");

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "score rankings against judgments");
    std::string eval_rankings, eval_judgments, eval_out, eval_per_paper;
    eval_cmd->add_option("--rankings", eval_rankings, "rankings CSV")->required();
    eval_cmd->add_option("--judgments", eval_judgments, "judgments JSONL")->required();
    eval_cmd->add_option("--out", eval_out, "metric report CSV");
    eval_cmd->add_option("--per-paper", eval_per_paper, "per-paper metric CSV");

    // --- probe ---
    auto* probe_cmd = app.add_subcommand("probe", "factor probe tasks (100-candidate mean rank)");
    CommonFlags probe_flags;
    std::string probe_corpus, probe_queries, probe_model, probe_vocab, probe_out;
    std::optional<int> opt_tasks;
    probe_cmd->add_option("--config", probe_flags.config_path, "run configuration file");
    probe_cmd->add_option("--seed", probe_flags.seed, "run seed");
    probe_cmd->add_option("--corpus", probe_corpus, "candidate corpus JSONL")->required();
    probe_cmd->add_option("--queries", probe_queries, "query papers JSONL")->required();
    probe_cmd->add_option("--model", probe_model, "weight checkpoint")->required();
    probe_cmd->add_option("--vocab", probe_vocab, "vocabulary file")->required();
    probe_cmd->add_option("--out", probe_out, "probe report CSV")->required();
    probe_cmd->add_option("--tasks", opt_tasks, "tasks per probe kind");

    std::vector<std::string> argv_storage = args;
    std::vector<const char*> argv;
    argv.push_back("cof");
    for (const std::string& a : argv_storage) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        std::cerr << "run 'cof --help' for usage\n";
        return 1;
    }

    try {
        if (build->parsed()) {
            RunConfig cfg = make_config(build_flags);
            if (opt_papers) cfg.synth.num_papers = *opt_papers;
            if (opt_queries) cfg.synth.num_queries = *opt_queries;
            if (opt_fields) cfg.synth.num_fields = *opt_fields;
            if (opt_reviewers) cfg.synth.num_reviewers = *opt_reviewers;
            if (opt_submissions) cfg.synth.num_submissions = *opt_submissions;
            fs::create_directories(build_out);
            const SyntheticOutput out = generate_synthetic_corpus(cfg.synth);
            save_corpus((fs::path(build_out) / "corpus.jsonl").string(), out.papers);
            save_corpus((fs::path(build_out) / "submissions.jsonl").string(), out.submissions);
            save_search_log((fs::path(build_out) / "search_log.jsonl").string(), out.search_log);
            save_reviewers((fs::path(build_out) / "reviewers.jsonl").string(), out.reviewers);
            save_judgments((fs::path(build_out) / "judgments.jsonl").string(), out.judgments);
            std::cout << "corpus: " << out.papers.size() << " papers, "
                      << out.submissions.size() << " submissions, " << out.reviewers.size()
                      << " reviewers, " << out.search_log.queries.size() << " queries, "
                      << out.judgments.size() << " judgments -> " << build_out << '\n';
            return 0;
        }

        if (train_cmd->parsed()) {
            RunConfig cfg = make_config(train_flags);
            if (opt_epochs) cfg.train.epochs = *opt_epochs;
            if (opt_max_samples) cfg.train.max_samples_per_factor = *opt_max_samples;
            if (opt_max_paper_len) cfg.encoder.max_paper_len = *opt_max_paper_len;
            if (opt_hidden) cfg.encoder.hidden_dim = *opt_hidden;
            if (opt_layers) cfg.encoder.num_layers = *opt_layers;
            if (no_instructions) cfg.train.use_instructions = false;

            std::vector<std::string> warnings;
            const std::vector<CorpusRecord> corpus = load_corpus(train_corpus, &warnings);
            SearchLog log;
            if (!train_log.empty()) {
                log = load_search_log(train_log, &warnings);
            }
            print_warnings(warnings);

            const Vocabulary vocab = build_training_vocab(corpus, log, cfg);
            cfg.encoder.vocab_size = vocab.size();

            SampleBuildReport report;
            const FactorDatasets data = build_datasets(corpus, log, cfg, &report);
            std::cout << "samples: semantic " << data.semantic.size() << " (skipped "
                      << report.skipped_queries << " clickless queries), topic "
                      << data.topic.size() << ", citation " << data.citation.size() << '\n';

            const TrainResult result = train(cfg.train, cfg.encoder, vocab, data);

            fs::create_directories(train_out);
            save_checkpoint((fs::path(train_out) / "model.cofw").string(), cfg.encoder,
                            result.weights);
            vocab.save((fs::path(train_out) / "vocab.txt").string());
            save_loss_history_csv((fs::path(train_out) / "loss_history.csv").string(),
                                  result.history);
            for (const LossRecord& r : result.history) {
                if (r.epoch == 1 || r.epoch == cfg.train.epochs) {
                    std::cout << "epoch " << r.epoch << ' ' << factor_name(r.factor)
                              << " mean loss " << format_double(r.mean_loss) << '\n';
                }
            }
            std::cout << "trained " << result.steps << " steps -> " << train_out << '\n';
            return 0;
        }

        if (embed_cmd->parsed()) {
            const LoadedModel model = load_model(embed_model, embed_vocab);
            std::vector<std::string> warnings;
            const std::vector<CorpusRecord> corpus = load_corpus(embed_corpus, &warnings);
            print_warnings(warnings);
            std::optional<Factor> factor;
            if (embed_factor != "none") {
                factor = factor_from_name(embed_factor);
                if (!factor.has_value()) {
                    throw UsageError("embed: unknown factor '" + embed_factor + "'");
                }
            }
            EncoderEmbeddingProvider provider(model.checkpoint.config, model.checkpoint.weights,
                                              model.vocab);
            EmbeddingStore store(static_cast<std::uint32_t>(model.checkpoint.config.hidden_dim));
            for (const CorpusRecord& r : corpus) {
                store.append(r.id, provider.embed(r.id, r.text(), factor));
            }
            store.save(embed_out);
            std::cout << "embedded " << store.size() << " papers (factor " << embed_factor
                      << ") -> " << embed_out << '\n';
            return 0;
        }

        if (match_cmd->parsed()) {
            RunConfig cfg = make_config(match_flags);
            if (opt_keep1) cfg.chain.stage1_keep = *opt_keep1;
            if (opt_keep2) cfg.chain.stage2_keep = *opt_keep2;
            if (opt_years_back) cfg.filters.years_back = *opt_years_back;
            if (!match_venues.empty()) cfg.set("filters.venues", match_venues);
            if (!match_author_rank.empty()) cfg.set("filters.author_rank", match_author_rank);

            const auto variant = variant_from_name(match_variant);
            if (!variant.has_value()) {
                throw UsageError("match: unknown variant '" + match_variant + "'");
            }
            cfg.chain.variant = *variant;

            std::vector<std::string> warnings;
            const std::vector<CorpusRecord> submissions = load_corpus(match_subs, &warnings);
            const std::vector<CorpusRecord> corpus = load_corpus(match_corpus, &warnings);
            const std::vector<ReviewerRecord> reviewers =
                load_reviewers(match_reviewers, &warnings);
            print_warnings(warnings);

            std::vector<RankingRow> rows;
            if (match_method == "tpms") {
                rows = match_with_tpms(submissions, corpus, reviewers, cfg.filters,
                                       match_ref_year);
            } else if (match_method == "model") {
                if (match_model.empty() || match_vocab.empty()) {
                    throw UsageError("match: --model and --vocab are required for method=model");
                }
                const LoadedModel model = load_model(match_model, match_vocab);
                EncoderEmbeddingProvider provider(model.checkpoint.config,
                                                  model.checkpoint.weights, model.vocab);
                rows = match_with_model(submissions, corpus, reviewers, provider, cfg.chain,
                                        cfg.filters, match_ref_year);
            } else {
                throw UsageError("match: unknown method '" + match_method + "'");
            }
            save_rankings_csv(match_out, rows);
            std::cout << "ranked " << reviewers.size() << " reviewers for " << submissions.size()
                      << " submissions -> " << match_out << '\n';
            return 0;
        }

        if (ablate_cmd->parsed()) {
            RunConfig cfg = make_config(ablate_flags);
            std::vector<std::string> warnings;
            const std::vector<CorpusRecord> submissions = load_corpus(ab_subs, &warnings);
            const std::vector<CorpusRecord> corpus = load_corpus(ab_corpus, &warnings);
            const std::vector<ReviewerRecord> reviewers = load_reviewers(ab_reviewers, &warnings);
            print_warnings(warnings);

            const LoadedModel instructed = load_model(ab_model, ab_vocab);
            const LoadedModel agnostic = load_model(ab_noinstr_model, ab_vocab);
            EncoderEmbeddingProvider instructed_provider(
                instructed.checkpoint.config, instructed.checkpoint.weights, instructed.vocab);
            EncoderEmbeddingProvider agnostic_provider(
                agnostic.checkpoint.config, agnostic.checkpoint.weights, agnostic.vocab);

            fs::create_directories(ab_out);
            for (const AblationVariant variant : kAllVariants) {
                ChainConfig chain = cfg.chain;
                chain.variant = variant;
                EmbeddingProvider& provider =
                    variant == AblationVariant::no_instruction
                        ? static_cast<EmbeddingProvider&>(agnostic_provider)
                        : static_cast<EmbeddingProvider&>(instructed_provider);
                const std::vector<RankingRow> rows = match_with_model(
                    submissions, corpus, reviewers, provider, chain, cfg.filters, ab_ref_year);
                const std::string path =
                    (fs::path(ab_out) / ("ranking_" + std::string(variant_file_tag(variant)) +
                                         ".csv"))
                        .string();
                save_rankings_csv(path, rows);
                std::cout << "variant " << variant_name(variant) << " -> " << path << '\n';
            }
            return 0;
        }

        if (eval_cmd->parsed()) {
            const std::vector<RankingRow> rows = load_rankings_csv(eval_rankings);
            std::vector<std::string> warnings;
            const JudgmentSet judgments(load_judgments(eval_judgments, &warnings));
            print_warnings(warnings);
            const MetricReport report = evaluate_rankings(rankings_by_paper(rows), judgments);
            std::cout << metric_report_table(report);
            if (!eval_out.empty()) {
                save_metric_report_csv(eval_out, report);
            }
            if (!eval_per_paper.empty()) {
                std::ofstream out(eval_per_paper, std::ios::binary);
                if (!out) {
                    throw DataError(eval_per_paper + ": cannot open for writing");
                }
                out << "paper_id,metric,value\n";
                for (const auto& [paper, metrics] : report.per_paper) {
                    for (const auto& [metric, value] : metrics) {
                        out << paper << ',' << metric << ',' << format_double(value) << '\n';
                    }
                }
            }
            return 0;
        }

        if (probe_cmd->parsed()) {
            RunConfig cfg = make_config(probe_flags);
            if (opt_tasks) cfg.probe_tasks_per_kind = *opt_tasks;
            std::vector<std::string> warnings;
            const std::vector<CorpusRecord> corpus = load_corpus(probe_corpus, &warnings);
            const std::vector<CorpusRecord> queries = load_corpus(probe_queries, &warnings);
            print_warnings(warnings);
            const LoadedModel model = load_model(probe_model, probe_vocab);
            EncoderEmbeddingProvider provider(model.checkpoint.config, model.checkpoint.weights,
                                              model.vocab);
            const std::vector<ProbeTask> tasks =
                build_probe_tasks(corpus, queries, cfg.probe_tasks_per_kind, cfg.seed);
            const ProbeReport report = mean_rank_probe(provider, tasks);
            save_probe_report_csv(probe_out, report);
            for (const auto& [kind, rank] : report.mean_rank) {
                std::cout << "probe " << probe_kind_name(kind) << ": mean rank "
                          << format_double(rank) << " over " << report.n_tasks.at(kind)
                          << " tasks\n";
            }
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace cof
