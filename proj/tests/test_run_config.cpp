#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "castor/run_config.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace castor;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

// Field path of the SchemaError a parse raises, for pinpoint assertions.
std::string schema_error_field(const std::string& text) {
    try {
        run_config_from_json_text(text);
    } catch (const SchemaError& e) {
        return e.field;
    }
    return "<no error>";
}

}  // namespace

TEST_SUITE("run_config") {

TEST_CASE("defaults are a complete, valid pipeline configuration") {
    RunConfig cfg = default_run_config();
    CHECK_NOTHROW(cfg.validate());

    CHECK(cfg.filter.min_reputation == 1000);
    CHECK(cfg.filter.min_upvotes == 5);
    CHECK(cfg.filter.require_accepted);
    CHECK(cfg.filter.date_from.to_string() == "2019-11-01");
    CHECK(cfg.filter.date_to.to_string() == "2021-11-30");
    CHECK(cfg.sampling.size == 6000);
    CHECK(cfg.sampling.seed == 13);
    CHECK(cfg.backend.kind == BackendKind::Stub);
    CHECK(cfg.split.ratios.train == 0.8);
    CHECK(cfg.split.ratios.validation == 0.1);
    CHECK(cfg.split.ratios.test == 0.1);
    CHECK(cfg.vocab.min_freq == 1);
    CHECK(cfg.train.margin == 0.6);
    CHECK(cfg.train.learning_rate == 2e-5);
    CHECK(cfg.train.max_epochs == 30);
    CHECK(cfg.train.patience == 3);
    CHECK(cfg.train.batch_size == 8);
    CHECK(cfg.train.encoder.vocab_size == 4096);
    CHECK(cfg.threshold == 0.5);
    CHECK(cfg.attack.kind == AttackKind::CharPerturb);
    CHECK(cfg.attack.budget == 3);
    CHECK(cfg.paths.dump.empty());
}

TEST_CASE("an empty document keeps every default") {
    RunConfig cfg = run_config_from_json_text("{}");
    RunConfig defaults = default_run_config();
    CHECK(cfg.sampling.size == defaults.sampling.size);
    CHECK(cfg.train.learning_rate == defaults.train.learning_rate);
    CHECK(cfg.train.encoder.vocab_size == defaults.train.encoder.vocab_size);
    CHECK(cfg.threshold == defaults.threshold);
    CHECK(cfg.filter.date_from == defaults.filter.date_from);
}

TEST_CASE("present keys override, absent keys keep defaults") {
    RunConfig cfg = run_config_from_json_text(R"({
        "train": {"learning_rate": 0.001},
        "encoder": {"d_model": 64, "num_heads": 4},
        "threshold": 0.25,
        "paths": {"checkpoint": "model.ckpt"}
    })");
    CHECK(cfg.train.learning_rate == 0.001);
    CHECK(cfg.train.margin == 0.6);  // untouched
    CHECK(cfg.train.encoder.d_model == 64);
    CHECK(cfg.train.encoder.num_heads == 4);
    CHECK(cfg.train.encoder.vocab_size == 4096);  // untouched
    CHECK(cfg.threshold == 0.25);
    CHECK(cfg.paths.checkpoint == "model.ckpt");
    CHECK(cfg.paths.report.empty());
}

TEST_CASE("unknown keys are rejected, not ignored") {
    CHECK_THROWS_AS(run_config_from_json_text(R"({"treshold": 0.5})"), SchemaError);
    CHECK(schema_error_field(R"({"treshold": 0.5})") == "<top-level>");
    CHECK(schema_error_field(R"({"train": {"learning_rte": 0.01}})") == "train");
    CHECK(schema_error_field(R"({"encoder": {"dmodel": 8}})") == "encoder");
    CHECK(schema_error_field(R"({"filter": {"reputation": 1}})") == "filter");
}

TEST_CASE("wrong value types name the offending field") {
    CHECK(schema_error_field(R"({"threshold": "high"})") == "<top-level>.threshold");
    CHECK(schema_error_field(R"({"train": {"margin": "wide"}})") == "train.margin");
    CHECK(schema_error_field(R"({"sampling": {"size": "many"}})") == "sampling.size");
    CHECK(schema_error_field(R"({"paths": {"dump": 7}})") == "paths.dump");
}

TEST_CASE("malformed values name the offending field") {
    CHECK(schema_error_field(R"({"split": {"ratios": [0.8, 0.2]}})") == "split.ratios");
    CHECK(schema_error_field(R"({"backend": {"kind": "telepathy"}})") == "backend.kind");
    CHECK(schema_error_field(R"({"attack": {"kind": "typo-storm"}})") == "attack.kind");
    CHECK(schema_error_field(R"({"filter": {"date_from": "late 2019"}})") ==
          "filter.date_from");
}

TEST_CASE("documents that are not JSON objects are rejected") {
    CHECK(schema_error_field("{not json") == "<document>");
    CHECK(schema_error_field("[1, 2, 3]") == "<top-level>");
    CHECK(schema_error_field(R"("just a string")") == "<top-level>");
    CHECK(schema_error_field(R"({"train": [1]})") == "train");
}

TEST_CASE("serialization round-trips every field") {
    RunConfig cfg = default_run_config();
    cfg.filter.min_reputation = 250;
    cfg.filter.min_upvotes = 2;
    cfg.filter.require_accepted = false;
    cfg.filter.date_from = Date{2020, 2, 3};
    cfg.filter.date_to = Date{2022, 4, 5};
    cfg.sampling.size = 123;
    cfg.sampling.seed = 99;
    cfg.augment.filler_words = {"well", "basically"};
    cfg.augment.filler_probability = 0.3;
    cfg.augment.indicative_blocklist = {"as a tool"};
    cfg.augment.tone_probability = 0.4;
    cfg.augment.seed = 17;
    cfg.backend.kind = BackendKind::Remote;
    cfg.backend.endpoint = "https://example.test/v1/chat/completions";
    cfg.backend.model_name = "test-model";
    cfg.backend.timeout_seconds = 5.5;
    cfg.backend.max_retries = 1;
    cfg.split.ratios = {0.7, 0.2, 0.1};
    cfg.split.seed = 3;
    cfg.vocab.min_freq = 2;
    cfg.train.margin = 0.7;
    cfg.train.learning_rate = 1e-3;
    cfg.train.max_epochs = 9;
    cfg.train.patience = 2;
    cfg.train.batch_size = 4;
    cfg.train.seed = 8;
    cfg.train.encoder.vocab_size = 512;
    cfg.train.encoder.d_model = 32;
    cfg.train.encoder.num_heads = 4;
    cfg.train.encoder.num_layers = 2;
    cfg.train.encoder.block_size = 8;
    cfg.train.encoder.window_blocks = 5;
    cfg.train.encoder.num_random_blocks = 2;
    cfg.train.encoder.num_global_blocks = 2;
    cfg.train.encoder.max_len = 128;
    cfg.train.encoder.ffn_multiplier = 3;
    cfg.train.encoder.pattern_seed = 77;
    cfg.threshold = -0.25;
    cfg.attack.kind = AttackKind::SynonymSub;
    cfg.attack.budget = 5;
    cfg.attack.seed = 21;
    cfg.attack.lexicon_path = "syn.tsv";
    cfg.paths = {"a", "b", "c", "d", "e", "f", "g", "h", "i"};

    RunConfig back = run_config_from_json_text(run_config_to_json_text(cfg));
    CHECK(back.filter.min_reputation == 250);
    CHECK(back.filter.min_upvotes == 2);
    CHECK_FALSE(back.filter.require_accepted);
    CHECK(back.filter.date_from == cfg.filter.date_from);
    CHECK(back.filter.date_to == cfg.filter.date_to);
    CHECK(back.sampling.size == 123);
    CHECK(back.sampling.seed == 99);
    CHECK(back.augment.filler_words == cfg.augment.filler_words);
    CHECK(back.augment.filler_probability == 0.3);
    CHECK(back.augment.indicative_blocklist == cfg.augment.indicative_blocklist);
    CHECK(back.augment.tone_probability == 0.4);
    CHECK(back.augment.seed == 17);
    CHECK(back.backend.kind == BackendKind::Remote);
    CHECK(back.backend.endpoint == cfg.backend.endpoint);
    CHECK(back.backend.model_name == "test-model");
    CHECK(back.backend.timeout_seconds == 5.5);
    CHECK(back.backend.max_retries == 1);
    CHECK(back.split.ratios.train == 0.7);
    CHECK(back.split.ratios.validation == 0.2);
    CHECK(back.split.ratios.test == 0.1);
    CHECK(back.split.seed == 3);
    CHECK(back.vocab.min_freq == 2);
    CHECK(back.train.margin == 0.7);
    CHECK(back.train.learning_rate == 1e-3);
    CHECK(back.train.max_epochs == 9);
    CHECK(back.train.patience == 2);
    CHECK(back.train.batch_size == 4);
    CHECK(back.train.seed == 8);
    CHECK(back.train.encoder.vocab_size == 512);
    CHECK(back.train.encoder.d_model == 32);
    CHECK(back.train.encoder.num_heads == 4);
    CHECK(back.train.encoder.num_layers == 2);
    CHECK(back.train.encoder.block_size == 8);
    CHECK(back.train.encoder.window_blocks == 5);
    CHECK(back.train.encoder.num_random_blocks == 2);
    CHECK(back.train.encoder.num_global_blocks == 2);
    CHECK(back.train.encoder.max_len == 128);
    CHECK(back.train.encoder.ffn_multiplier == 3);
    CHECK(back.train.encoder.pattern_seed == 77);
    CHECK(back.threshold == -0.25);
    CHECK(back.attack.kind == AttackKind::SynonymSub);
    CHECK(back.attack.budget == 5);
    CHECK(back.attack.seed == 21);
    CHECK(back.attack.lexicon_path == "syn.tsv");
    CHECK(back.paths.dump == "a");
    CHECK(back.paths.posts == "b");
    CHECK(back.paths.triplets == "c");
    CHECK(back.paths.train_split == "d");
    CHECK(back.paths.val_split == "e");
    CHECK(back.paths.test_split == "f");
    CHECK(back.paths.vocab == "g");
    CHECK(back.paths.checkpoint == "h");
    CHECK(back.paths.report == "i");
}

TEST_CASE("the emitted document records every section") {
    std::string text = run_config_to_json_text(default_run_config());
    CHECK(text.back() == '\n');
    nlohmann::json doc = nlohmann::json::parse(text);
    for (const char* key : {"filter", "sampling", "augment", "backend", "split", "vocab",
                            "encoder", "train", "threshold", "attack", "paths"}) {
        CAPTURE(key);
        CHECK(doc.contains(key));
    }
    // The encoder section is complete enough to rebuild the model shape.
    CHECK(doc["encoder"]["vocab_size"].get<int>() == 4096);
    CHECK(doc["encoder"].contains("pattern_seed"));
}

TEST_CASE("file save and load round-trip") {
    TempDir dir;
    std::string path = dir.file("run.json");
    RunConfig cfg = default_run_config();
    cfg.threshold = 0.125;
    cfg.paths.report = "report.json";
    save_run_config(cfg, path);
    RunConfig back = load_run_config(path);
    CHECK(back.threshold == 0.125);
    CHECK(back.paths.report == "report.json");

    CHECK_THROWS_AS(load_run_config(dir.file("absent.json")), IoError);
    CHECK_THROWS_AS(save_run_config(cfg, dir.path() + "/no/such/dir/run.json"), IoError);
}

TEST_CASE("validation rejects inconsistent configurations") {
    auto broken = [](auto mutate) {
        RunConfig cfg = default_run_config();
        mutate(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.sampling.size = 0; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.vocab.min_freq = 0; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.split.ratios = {0.8, 0.1, 0.2}; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        broken([](RunConfig& c) { c.split.ratios = {1.2, -0.1, -0.1}; }).validate(),
        std::invalid_argument);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.threshold = 1.5; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.threshold = -1.5; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        broken([](RunConfig& c) { c.threshold = std::nan(""); }).validate(),
        std::invalid_argument);
    // Nested validations bubble up.
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.train.batch_size = 0; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.backend.timeout_seconds = 0.0; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        broken([](RunConfig& c) { c.filter.date_to = Date{2019, 1, 1}; }).validate(),
        std::invalid_argument);
    CHECK_THROWS_AS(
        broken([](RunConfig& c) { c.augment.filler_probability = 1.5; }).validate(),
        std::invalid_argument);

    // The attack's lexicon requirement binds when the attack runs, not here:
    // a config that never evaluates robustness may leave the path empty.
    RunConfig syn = default_run_config();
    syn.attack.kind = AttackKind::SynonymSub;
    syn.attack.lexicon_path.clear();
    CHECK_NOTHROW(syn.validate());
}

}  // TEST_SUITE
