#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "castor/random.hpp"

namespace testsupport {

TempDir::TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "castor_test_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (mkdtemp(buf.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed for " + tmpl);
    }
    path_.assign(buf.data());
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);  // best effort
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("failed to open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EnvVarGuard::EnvVarGuard(const std::string& name, const std::optional<std::string>& value)
    : name_(name) {
    const char* old = std::getenv(name.c_str());
    if (old != nullptr) previous_ = std::string(old);
    if (value.has_value()) {
        setenv(name.c_str(), value->c_str(), 1);
    } else {
        unsetenv(name.c_str());
    }
}

EnvVarGuard::~EnvVarGuard() {
    if (previous_.has_value()) {
        setenv(name_.c_str(), previous_->c_str(), 1);
    } else {
        unsetenv(name_.c_str());
    }
}

CommandResult run_command(const std::string& command) {
    TempDir streams;
    std::string out_file = streams.file("out");
    std::string err_file = streams.file("err");
    std::string full = command + " >" + out_file + " 2>" + err_file;

    int status = std::system(full.c_str());
    CommandResult result;
    if (status == -1) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else {
        result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    result.out = read_text(out_file);
    result.err = read_text(err_file);
    return result;
}

std::string cli_path() {
    const char* p = std::getenv("CASTOR_CLI");
    return p ? std::string(p) : std::string();
}

std::string data_dir() {
    const char* p = std::getenv("CASTOR_DATA");
    return p ? std::string(p) : std::string();
}

castor::Tensor<double> dense_attention_oracle(const castor::Tensor<double>& q,
                                              const castor::Tensor<double>& k,
                                              const castor::Tensor<double>& v,
                                              const std::vector<bool>& pad_mask) {
    const std::size_t n = q.shape.at(0);
    const std::size_t d = q.shape.at(1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    castor::Tensor<double> out = castor::Tensor<double>::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        if (!pad_mask[i]) continue;  // padded query rows stay zero

        std::vector<double> scores(n, 0.0);
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!pad_mask[j]) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
            scores[j] = s * scale;
            max_score = std::max(max_score, scores[j]);
        }
        double denom = 0.0;
        std::vector<double> weights(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (!pad_mask[j]) continue;
            weights[j] = std::exp(scores[j] - max_score);
            denom += weights[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (weights[j] == 0.0) continue;
            double w = weights[j] / denom;
            for (std::size_t c = 0; c < d; ++c) out.at(i, c) += w * v.at(j, c);
        }
    }
    return out;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

std::vector<std::string> numbered_words(const std::string& stem, std::size_t count) {
    std::vector<std::string> words;
    words.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        words.push_back(stem + std::to_string(i));
    }
    return words;
}

std::string synthetic_text(castor::RandomEngine& rng, const std::vector<std::string>& primary,
                           const std::vector<std::string>& shared) {
    std::size_t length = static_cast<std::size_t>(rng.uniform_int(20, 200));
    std::string text;
    for (std::size_t w = 0; w < length; ++w) {
        const std::vector<std::string>& pool = rng.uniform_real() < 0.8 ? primary : shared;
        if (w > 0) text += ' ';
        text += pool[rng.bounded(pool.size())];
    }
    return text;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t n, std::uint64_t seed) {
    SyntheticCorpus corpus;
    corpus.vocab_a = numbered_words("alpha", 120);
    corpus.vocab_b = numbered_words("bravo", 120);
    corpus.shared = numbered_words("common", 60);

    castor::RandomEngine rng(seed);
    corpus.triplets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        castor::TripletRecord t;
        t.question_id = static_cast<std::int64_t>(i + 1);
        t.question_title = "synthetic question " + std::to_string(i);
        t.question_body = "synthetic body " + std::to_string(i);
        t.reference_answer = synthetic_text(rng, corpus.vocab_a, corpus.shared);
        t.ai_answer = synthetic_text(rng, corpus.vocab_a, corpus.shared);
        t.human_answer = synthetic_text(rng, corpus.vocab_b, corpus.shared);
        t.prompt_variant = castor::PromptVariant::Standard;
        t.max_length_tokens = 200;
        t.tags = {"synthetic"};
        corpus.triplets.push_back(std::move(t));
    }
    return corpus;
}

}  // namespace testsupport
