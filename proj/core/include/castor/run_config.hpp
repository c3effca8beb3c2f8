#pragma once

#include <cstdint>
#include <string>

#include "castor/corpus.hpp"
#include "castor/evalkit.hpp"
#include "castor/generation.hpp"
#include "castor/promptgen.hpp"
#include "castor/siamese.hpp"

namespace castor {

struct SamplingConfig {
    std::size_t size = 6000;
    std::uint64_t seed = 13;
};

struct SplitConfig {
    SplitRatios ratios;  // 0.8 / 0.1 / 0.1
    std::uint64_t seed = 7;
};

// Vocabulary construction; the size cap is the encoder's vocab_size so every
// token id fits the embedding table.
struct VocabConfig {
    std::size_t min_freq = 1;
};

// Every file the pipeline reads or writes.  Empty entries are allowed here;
// each subcommand checks the paths it actually needs.
struct PathsConfig {
    std::string dump;         // raw post dump (input)
    std::string posts;        // filtered, cleaned, sampled posts
    std::string triplets;     // assembled triplet file
    std::string train_split;  // triplet splits
    std::string val_split;
    std::string test_split;
    std::string vocab;
    std::string checkpoint;
    std::string report;
};

// One document carrying every knob of the pipeline, loadable from JSON with
// strict schema checking: unknown keys are rejected, present keys are
// type-checked, absent keys keep these defaults.
struct RunConfig {
    FilterCriteria filter;
    SamplingConfig sampling;
    AugmentConfig augment;
    GenerationBackend backend;
    SplitConfig split;
    VocabConfig vocab;
    TrainConfig train;  // carries the encoder config
    double threshold = 0.5;
    AttackSpec attack;
    PathsConfig paths;

    void validate() const;  // throws std::invalid_argument
};

// Defaults with a desk-scale encoder (vocab 4096) rather than the zero-sized
// placeholder EncoderConfig leaves behind.
RunConfig default_run_config();

// Strict JSON (de)serialization.  Parsing throws SchemaError for unknown
// keys, wrong types, and malformed values; the emitted document contains
// every key, so a saved config is a complete record of a run.
RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json_text(const RunConfig& cfg);

RunConfig load_run_config(const std::string& path);                  // IoError
void save_run_config(const RunConfig& cfg, const std::string& path);  // IoError

}  // namespace castor
