#include "castor/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "json_codec.hpp"

namespace castor {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Config files are one document, not line records; SchemaError's line slot is
// unused here.
constexpr std::size_t kNoLine = 0;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw SchemaError(kNoLine, where, "expected an object");
    }
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw SchemaError(kNoLine, where, "unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
void read_field(const json& obj, const std::string& where, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(kNoLine, where + "." + key, e.what());
    }
}

void read_date(const json& obj, const std::string& where, const char* key, Date& out) {
    std::string text;
    bool present = obj.contains(key);
    read_field(obj, where, key, text);
    if (!present) return;
    try {
        out = Date::parse(text);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(kNoLine, where + "." + key, e.what());
    }
}

void parse_filter(const json& obj, FilterCriteria& out) {
    check_keys(obj, "filter",
               {"min_reputation", "min_upvotes", "require_accepted", "date_from",
                "date_to"});
    read_field(obj, "filter", "min_reputation", out.min_reputation);
    read_field(obj, "filter", "min_upvotes", out.min_upvotes);
    read_field(obj, "filter", "require_accepted", out.require_accepted);
    read_date(obj, "filter", "date_from", out.date_from);
    read_date(obj, "filter", "date_to", out.date_to);
}

void parse_sampling(const json& obj, SamplingConfig& out) {
    check_keys(obj, "sampling", {"size", "seed"});
    read_field(obj, "sampling", "size", out.size);
    read_field(obj, "sampling", "seed", out.seed);
}

void parse_augment(const json& obj, AugmentConfig& out) {
    check_keys(obj, "augment",
               {"filler_words", "filler_probability", "indicative_blocklist",
                "tone_probability", "seed"});
    read_field(obj, "augment", "filler_words", out.filler_words);
    read_field(obj, "augment", "filler_probability", out.filler_probability);
    read_field(obj, "augment", "indicative_blocklist", out.indicative_blocklist);
    read_field(obj, "augment", "tone_probability", out.tone_probability);
    read_field(obj, "augment", "seed", out.seed);
}

void parse_backend(const json& obj, GenerationBackend& out) {
    check_keys(obj, "backend",
               {"kind", "endpoint", "model_name", "timeout_seconds", "max_retries"});
    if (obj.contains("kind")) {
        std::string kind;
        read_field(obj, "backend", "kind", kind);
        try {
            out.kind = backend_kind_from_string(kind);
        } catch (const std::invalid_argument& e) {
            throw SchemaError(kNoLine, "backend.kind", e.what());
        }
    }
    read_field(obj, "backend", "endpoint", out.endpoint);
    read_field(obj, "backend", "model_name", out.model_name);
    read_field(obj, "backend", "timeout_seconds", out.timeout_seconds);
    read_field(obj, "backend", "max_retries", out.max_retries);
}

void parse_split(const json& obj, SplitConfig& out) {
    check_keys(obj, "split", {"ratios", "seed"});
    if (obj.contains("ratios")) {
        std::vector<double> ratios;
        read_field(obj, "split", "ratios", ratios);
        if (ratios.size() != 3) {
            throw SchemaError(kNoLine, "split.ratios",
                              "expected exactly three ratios [train, validation, test]");
        }
        out.ratios.train = ratios[0];
        out.ratios.validation = ratios[1];
        out.ratios.test = ratios[2];
    }
    read_field(obj, "split", "seed", out.seed);
}

void parse_vocab(const json& obj, VocabConfig& out) {
    check_keys(obj, "vocab", {"min_freq"});
    read_field(obj, "vocab", "min_freq", out.min_freq);
}

void parse_encoder(const json& obj, EncoderConfig& out) {
    check_keys(obj, "encoder",
               {"vocab_size", "d_model", "num_heads", "num_layers", "block_size",
                "window_blocks", "num_random_blocks", "num_global_blocks", "max_len",
                "ffn_multiplier", "pattern_seed"});
    read_field(obj, "encoder", "vocab_size", out.vocab_size);
    read_field(obj, "encoder", "d_model", out.d_model);
    read_field(obj, "encoder", "num_heads", out.num_heads);
    read_field(obj, "encoder", "num_layers", out.num_layers);
    read_field(obj, "encoder", "block_size", out.block_size);
    read_field(obj, "encoder", "window_blocks", out.window_blocks);
    read_field(obj, "encoder", "num_random_blocks", out.num_random_blocks);
    read_field(obj, "encoder", "num_global_blocks", out.num_global_blocks);
    read_field(obj, "encoder", "max_len", out.max_len);
    read_field(obj, "encoder", "ffn_multiplier", out.ffn_multiplier);
    read_field(obj, "encoder", "pattern_seed", out.pattern_seed);
}

void parse_train(const json& obj, TrainConfig& out) {
    check_keys(obj, "train",
               {"margin", "learning_rate", "max_epochs", "patience", "batch_size",
                "seed"});
    read_field(obj, "train", "margin", out.margin);
    read_field(obj, "train", "learning_rate", out.learning_rate);
    read_field(obj, "train", "max_epochs", out.max_epochs);
    read_field(obj, "train", "patience", out.patience);
    read_field(obj, "train", "batch_size", out.batch_size);
    read_field(obj, "train", "seed", out.seed);
}

void parse_attack(const json& obj, AttackSpec& out) {
    check_keys(obj, "attack", {"kind", "budget", "seed", "lexicon_path"});
    if (obj.contains("kind")) {
        std::string kind;
        read_field(obj, "attack", "kind", kind);
        try {
            out.kind = attack_kind_from_string(kind);
        } catch (const std::invalid_argument& e) {
            throw SchemaError(kNoLine, "attack.kind", e.what());
        }
    }
    read_field(obj, "attack", "budget", out.budget);
    read_field(obj, "attack", "seed", out.seed);
    read_field(obj, "attack", "lexicon_path", out.lexicon_path);
}

void parse_paths(const json& obj, PathsConfig& out) {
    check_keys(obj, "paths",
               {"dump", "posts", "triplets", "train_split", "val_split", "test_split",
                "vocab", "checkpoint", "report"});
    read_field(obj, "paths", "dump", out.dump);
    read_field(obj, "paths", "posts", out.posts);
    read_field(obj, "paths", "triplets", out.triplets);
    read_field(obj, "paths", "train_split", out.train_split);
    read_field(obj, "paths", "val_split", out.val_split);
    read_field(obj, "paths", "test_split", out.test_split);
    read_field(obj, "paths", "vocab", out.vocab);
    read_field(obj, "paths", "checkpoint", out.checkpoint);
    read_field(obj, "paths", "report", out.report);
}

}  // namespace

void RunConfig::validate() const {
    filter.validate();
    if (sampling.size == 0) throw std::invalid_argument("sampling.size must be >= 1");
    augment.validate();
    backend.validate();
    double ratio_sum = split.ratios.train + split.ratios.validation + split.ratios.test;
    if (split.ratios.train < 0 || split.ratios.validation < 0 || split.ratios.test < 0 ||
        std::abs(ratio_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split.ratios must be non-negative and sum to 1");
    }
    if (vocab.min_freq == 0) throw std::invalid_argument("vocab.min_freq must be >= 1");
    train.validate();
    if (!(threshold >= -1.0 && threshold <= 1.0)) {
        throw std::invalid_argument("threshold must be in [-1, 1]");
    }
    // attack.validate() is deliberately not called here: its lexicon
    // requirement only binds when an attack actually runs.
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.train.encoder.vocab_size = 4096;
    return cfg;
}

RunConfig run_config_from_json_text(const std::string& text) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        throw SchemaError(kNoLine, "<document>", "not valid JSON");
    }
    check_keys(doc, "<top-level>",
               {"filter", "sampling", "augment", "backend", "split", "vocab", "encoder",
                "train", "threshold", "attack", "paths"});

    RunConfig cfg = default_run_config();
    if (doc.contains("filter")) parse_filter(doc["filter"], cfg.filter);
    if (doc.contains("sampling")) parse_sampling(doc["sampling"], cfg.sampling);
    if (doc.contains("augment")) parse_augment(doc["augment"], cfg.augment);
    if (doc.contains("backend")) parse_backend(doc["backend"], cfg.backend);
    if (doc.contains("split")) parse_split(doc["split"], cfg.split);
    if (doc.contains("vocab")) parse_vocab(doc["vocab"], cfg.vocab);
    if (doc.contains("encoder")) parse_encoder(doc["encoder"], cfg.train.encoder);
    if (doc.contains("train")) parse_train(doc["train"], cfg.train);
    read_field(doc, "<top-level>", "threshold", cfg.threshold);
    if (doc.contains("attack")) parse_attack(doc["attack"], cfg.attack);
    if (doc.contains("paths")) parse_paths(doc["paths"], cfg.paths);
    return cfg;
}

std::string run_config_to_json_text(const RunConfig& cfg) {
    ordered_json doc;
    doc["filter"] = {{"min_reputation", cfg.filter.min_reputation},
                     {"min_upvotes", cfg.filter.min_upvotes},
                     {"require_accepted", cfg.filter.require_accepted},
                     {"date_from", cfg.filter.date_from.to_string()},
                     {"date_to", cfg.filter.date_to.to_string()}};
    doc["sampling"] = {{"size", cfg.sampling.size}, {"seed", cfg.sampling.seed}};
    doc["augment"] = {{"filler_words", cfg.augment.filler_words},
                      {"filler_probability", cfg.augment.filler_probability},
                      {"indicative_blocklist", cfg.augment.indicative_blocklist},
                      {"tone_probability", cfg.augment.tone_probability},
                      {"seed", cfg.augment.seed}};
    doc["backend"] = {{"kind", to_string(cfg.backend.kind)},
                      {"endpoint", cfg.backend.endpoint},
                      {"model_name", cfg.backend.model_name},
                      {"timeout_seconds", cfg.backend.timeout_seconds},
                      {"max_retries", cfg.backend.max_retries}};
    doc["split"] = {{"ratios", {cfg.split.ratios.train, cfg.split.ratios.validation,
                                cfg.split.ratios.test}},
                    {"seed", cfg.split.seed}};
    doc["vocab"] = {{"min_freq", cfg.vocab.min_freq}};
    doc["encoder"] = codec::encoder_config_to_json(cfg.train.encoder);
    doc["train"] = codec::train_config_to_json(cfg.train);
    doc["threshold"] = cfg.threshold;
    doc["attack"] = {{"kind", to_string(cfg.attack.kind)},
                     {"budget", cfg.attack.budget},
                     {"seed", cfg.attack.seed},
                     {"lexicon_path", cfg.attack.lexicon_path}};
    doc["paths"] = {{"dump", cfg.paths.dump},
                    {"posts", cfg.paths.posts},
                    {"triplets", cfg.paths.triplets},
                    {"train_split", cfg.paths.train_split},
                    {"val_split", cfg.paths.val_split},
                    {"test_split", cfg.paths.test_split},
                    {"vocab", cfg.paths.vocab},
                    {"checkpoint", cfg.paths.checkpoint},
                    {"report", cfg.paths.report}};
    return doc.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return run_config_from_json_text(buffer.str());
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config file: " + path);
    out << run_config_to_json_text(cfg);
    if (!out.flush()) throw IoError("failed writing config file: " + path);
}

}  // namespace castor
