#include "cof/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cof {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for '" + key + "': '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad number for '" + key + "': '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw DataError("config: bad boolean for '" + key + "': '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad integer for '" + key + "': '" + value + "'");
    }
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (!part.empty()) {
            out.push_back(part);
        }
    }
    return out;
}

AuthorRank parse_author_rank(const std::string& key, const std::string& value) {
    if (value == "any") {
        return AuthorRank::any;
    }
    if (value == "first") {
        return AuthorRank::first;
    }
    if (value == "last") {
        return AuthorRank::last;
    }
    if (value == "first_or_last" || value == "first|last" || value == "first+last") {
        return AuthorRank::first_or_last;
    }
    throw DataError("config: bad author rank for '" + key + "': '" + value + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"seed", [&](const std::string& v) { seed = parse_u64(key, v); }},

        {"encoder.num_layers", [&](const std::string& v) { encoder.num_layers = parse_int(key, v); }},
        {"encoder.hidden_dim", [&](const std::string& v) { encoder.hidden_dim = parse_int(key, v); }},
        {"encoder.num_heads", [&](const std::string& v) { encoder.num_heads = parse_int(key, v); }},
        {"encoder.ffn_dim", [&](const std::string& v) { encoder.ffn_dim = parse_int(key, v); }},
        {"encoder.max_instruction_len",
         [&](const std::string& v) { encoder.max_instruction_len = parse_int(key, v); }},
        {"encoder.max_paper_len",
         [&](const std::string& v) { encoder.max_paper_len = parse_int(key, v); }},
        {"encoder.normalize_embeddings",
         [&](const std::string& v) { encoder.normalize_embeddings = parse_bool(key, v); }},

        {"train.epochs", [&](const std::string& v) { train.epochs = parse_int(key, v); }},
        {"train.batch_size", [&](const std::string& v) { train.batch_size = parse_int(key, v); }},
        {"train.peak_lr", [&](const std::string& v) { train.peak_lr = parse_double(key, v); }},
        {"train.weight_decay",
         [&](const std::string& v) { train.weight_decay = parse_double(key, v); }},
        {"train.adam_beta1", [&](const std::string& v) { train.adam_beta1 = parse_double(key, v); }},
        {"train.adam_beta2", [&](const std::string& v) { train.adam_beta2 = parse_double(key, v); }},
        {"train.adam_eps", [&](const std::string& v) { train.adam_eps = parse_double(key, v); }},
        {"train.hard_negatives",
         [&](const std::string& v) { train.hard_negatives_per_sample = parse_int(key, v); }},
        {"train.warmup_fraction",
         [&](const std::string& v) { train.warmup_fraction = parse_double(key, v); }},
        {"train.clip_norm", [&](const std::string& v) { train.clip_norm = parse_double(key, v); }},
        {"train.max_samples_per_factor",
         [&](const std::string& v) { train.max_samples_per_factor = parse_int(key, v); }},
        {"train.use_instructions",
         [&](const std::string& v) { train.use_instructions = parse_bool(key, v); }},
        {"train.in_batch_negatives",
         [&](const std::string& v) { train.in_batch_negatives = parse_bool(key, v); }},
        {"train.topic_pairs_per_paper",
         [&](const std::string& v) { topic_pairs_per_paper = parse_int(key, v); }},
        {"train.vocab_min_freq", [&](const std::string& v) { vocab_min_freq = parse_int(key, v); }},
        {"train.vocab_max_size", [&](const std::string& v) { vocab_max_size = parse_int(key, v); }},

        {"chain.stage1_keep", [&](const std::string& v) { chain.stage1_keep = parse_double(key, v); }},
        {"chain.stage2_keep", [&](const std::string& v) { chain.stage2_keep = parse_double(key, v); }},
        {"chain.stage1_min_keep",
         [&](const std::string& v) { chain.stage1_min_keep = parse_int(key, v); }},
        {"chain.stage2_min_keep",
         [&](const std::string& v) { chain.stage2_min_keep = parse_int(key, v); }},
        {"chain.variant",
         [&](const std::string& v) {
             const auto variant = variant_from_name(v);
             if (!variant.has_value()) {
                 throw DataError("config: unknown variant '" + v + "'");
             }
             chain.variant = *variant;
         }},

        {"filters.years_back",
         [&](const std::string& v) { filters.years_back = parse_int(key, v); }},
        {"filters.venues", [&](const std::string& v) { filters.venues = parse_list(v); }},
        {"filters.author_rank",
         [&](const std::string& v) { filters.author_rank = parse_author_rank(key, v); }},

        {"synth.num_fields", [&](const std::string& v) { synth.num_fields = parse_int(key, v); }},
        {"synth.hierarchy_depth",
         [&](const std::string& v) { synth.hierarchy_depth = parse_int(key, v); }},
        {"synth.num_papers", [&](const std::string& v) { synth.num_papers = parse_int(key, v); }},
        {"synth.num_queries", [&](const std::string& v) { synth.num_queries = parse_int(key, v); }},
        {"synth.citation_density",
         [&](const std::string& v) { synth.citation_density = parse_double(key, v); }},
        {"synth.vocab_size", [&](const std::string& v) { synth.vocab_size = parse_int(key, v); }},
        {"synth.num_reviewers",
         [&](const std::string& v) { synth.num_reviewers = parse_int(key, v); }},
        {"synth.num_submissions",
         [&](const std::string& v) { synth.num_submissions = parse_int(key, v); }},
        {"synth.year_min", [&](const std::string& v) { synth.year_min = parse_int(key, v); }},
        {"synth.year_max", [&](const std::string& v) { synth.year_max = parse_int(key, v); }},

        {"eval.jaccard_t1",
         [&](const std::string& v) { jaccard_thresholds[0] = parse_double(key, v); }},
        {"eval.jaccard_t2",
         [&](const std::string& v) { jaccard_thresholds[1] = parse_double(key, v); }},
        {"eval.jaccard_t3",
         [&](const std::string& v) { jaccard_thresholds[2] = parse_double(key, v); }},
        {"probe.tasks_per_kind",
         [&](const std::string& v) { probe_tasks_per_kind = parse_int(key, v); }},

        {"paths.corpus", [&](const std::string& v) { paths.corpus = v; }},
        {"paths.search_log", [&](const std::string& v) { paths.search_log = v; }},
        {"paths.submissions", [&](const std::string& v) { paths.submissions = v; }},
        {"paths.reviewers", [&](const std::string& v) { paths.reviewers = v; }},
        {"paths.judgments", [&](const std::string& v) { paths.judgments = v; }},
        {"paths.model", [&](const std::string& v) { paths.model = v; }},
        {"paths.vocab", [&](const std::string& v) { paths.vocab = v; }},
        {"paths.out_dir", [&](const std::string& v) { paths.out_dir = v; }},
    };

    const auto it = setters.find(key);
    if (it == setters.end()) {
        throw DataError("config: unknown key '" + key + "'");
    }
    it->second(value);
    synth.seed = seed;
    train.seed = seed;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("config: cannot open: " + path);
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw DataError("config: " + path + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
        }
        set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

void RunConfig::apply_environment() {
    // Known keys only: the env name is COF_ + key with dots as underscores,
    // uppercased. Scanning the key table keeps unknown COF_ variables inert.
    const std::vector<std::string> keys = {
        "seed",
        "encoder.num_layers", "encoder.hidden_dim", "encoder.num_heads", "encoder.ffn_dim",
        "encoder.max_instruction_len", "encoder.max_paper_len", "encoder.normalize_embeddings",
        "train.epochs", "train.batch_size", "train.peak_lr", "train.weight_decay",
        "train.adam_beta1", "train.adam_beta2", "train.adam_eps", "train.hard_negatives",
        "train.warmup_fraction", "train.clip_norm", "train.max_samples_per_factor",
        "train.use_instructions", "train.in_batch_negatives", "train.topic_pairs_per_paper",
        "train.vocab_min_freq", "train.vocab_max_size",
        "chain.stage1_keep", "chain.stage2_keep", "chain.stage1_min_keep",
        "chain.stage2_min_keep", "chain.variant",
        "filters.years_back", "filters.venues", "filters.author_rank",
        "synth.num_fields", "synth.hierarchy_depth", "synth.num_papers", "synth.num_queries",
        "synth.citation_density", "synth.vocab_size", "synth.num_reviewers",
        "synth.num_submissions", "synth.year_min", "synth.year_max",
        "eval.jaccard_t1", "eval.jaccard_t2", "eval.jaccard_t3", "probe.tasks_per_kind",
        "paths.corpus", "paths.search_log", "paths.submissions", "paths.reviewers",
        "paths.judgments", "paths.model", "paths.vocab", "paths.out_dir",
    };
    for (const std::string& key : keys) {
        std::string env_name = "COF_";
        for (const char c : key) {
            env_name.push_back(c == '.' ? '_'
                                        : static_cast<char>(std::toupper(
                                              static_cast<unsigned char>(c))));
        }
        const char* value = std::getenv(env_name.c_str());
        if (value != nullptr) {
            set(key, value);
        }
    }
}

}  // namespace cof
