#pragma once

// Shared helpers for the test binaries: temporary directories, process
// spawning, file I/O, an independent dense-attention oracle, an edit-distance
// oracle, and the synthetic triplet corpus generator.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "castor/corpus.hpp"
#include "castor/tensor.hpp"

namespace testsupport {

// Self-deleting temporary directory under the system temp root.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// Sets (or unsets, when value is nullopt) an environment variable for the
// lifetime of the guard, restoring the previous state on destruction.
class EnvVarGuard {
public:
    EnvVarGuard(const std::string& name, const std::optional<std::string>& value);
    ~EnvVarGuard();
    EnvVarGuard(const EnvVarGuard&) = delete;
    EnvVarGuard& operator=(const EnvVarGuard&) = delete;

private:
    std::string name_;
    std::optional<std::string> previous_;
};

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Run a shell command, capturing stdout/stderr and the exit code.
CommandResult run_command(const std::string& command);

// Path of the pipeline CLI binary, from the CASTOR_CLI environment variable.
// Empty when the variable is unset.
std::string cli_path();

// Path of the bundled test data directory, from CASTOR_DATA.
std::string data_dir();

// Plain O(n^2) scaled-dot-product attention with pad masking, written
// independently of the library kernel: every key is visible to every query,
// padded keys are excluded from each softmax, and padded query rows are zero.
castor::Tensor<double> dense_attention_oracle(const castor::Tensor<double>& q,
                                              const castor::Tensor<double>& k,
                                              const castor::Tensor<double>& v,
                                              const std::vector<bool>& pad_mask);

// Character-level Levenshtein distance.
std::size_t levenshtein(const std::string& a, const std::string& b);

// Synthetic triplet corpus: reference and machine answers draw 80% of their
// words from vocabulary A and 20% from a shared pool; human answers draw 80%
// from the disjoint vocabulary B and 20% from the same shared pool.  Word
// counts are uniform in [20, 200].  Deterministic in (n, seed).
struct SyntheticCorpus {
    std::vector<castor::TripletRecord> triplets;
    std::vector<std::string> vocab_a;
    std::vector<std::string> vocab_b;
    std::vector<std::string> shared;
};

SyntheticCorpus make_synthetic_corpus(std::size_t n, std::uint64_t seed);

}  // namespace testsupport
