#include "castor/generation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "castor/random.hpp"
#include "castor/text_util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace castor {

RemoteError::RemoteError(int status_, std::string excerpt)
    : std::runtime_error("remote generation failed (status " + std::to_string(status_) +
                         "): " + excerpt),
      status(status_),
      body_excerpt(std::move(excerpt)) {}

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::Remote: return "remote";
        case BackendKind::Stub: return "stub";
    }
    throw std::invalid_argument("unknown backend kind");
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "remote") return BackendKind::Remote;
    if (name == "stub") return BackendKind::Stub;
    throw std::invalid_argument("unknown backend kind '" + name + "'");
}

void GenerationBackend::validate() const {
    if (timeout_seconds <= 0.0) throw std::invalid_argument("timeout must be positive");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (kind == BackendKind::Remote) {
        if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
            throw std::invalid_argument(
                "remote endpoint must be an http:// or https:// URL");
        }
        if (model_name.empty()) throw std::invalid_argument("model_name must be set");
    }
}

namespace {

const std::vector<std::string>& stub_vocabulary() {
    static const std::vector<std::string> words = {
        "additionally", "overall",     "certainly",  "furthermore", "approach",
        "implementation", "consider",  "ensure",     "typically",   "specifically",
        "structure",    "dependency",  "configuration", "function", "method",
        "value",        "process",     "example",    "solution",    "pattern",
        "framework",    "component",   "interface",  "module",      "parameter",
        "variable",     "instance",    "library",    "compile",     "runtime",
        "performance",  "memory",      "thread",     "buffer",      "index",
        "query",        "schema",      "request",    "response",    "handler",
        "context",      "resource",    "iterate",    "optimize",    "validate",
        "measure",      "document",    "refactor"};
    return words;
}

std::string generate_stub(const std::string& prompt, int max_tokens) {
    const std::vector<std::string>& vocab = stub_vocabulary();
    RandomEngine engine(fnv1a64(prompt));

    const int total = std::min(max_tokens, 64);
    std::string out;
    int emitted = 0;
    while (emitted < total) {
        int sentence_len = 6 + static_cast<int>(engine.bounded(9));  // 6..14 words
        sentence_len = std::min(sentence_len, total - emitted);
        for (int w = 0; w < sentence_len; ++w) {
            std::string word = vocab[engine.bounded(vocab.size())];
            if (w == 0) word[0] = static_cast<char>(std::toupper(word[0]));
            if (!out.empty()) out += ' ';
            out += word;
            ++emitted;
        }
        out += '.';
    }
    return out;
}

// Splits "https://host:port/some/path" into ("https://host:port", "/some/path").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::size_t scheme_end = endpoint.find("://");
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

bool transient_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

bool timeout_error(httplib::Error err) {
    return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
           err == httplib::Error::Write;
}

std::string excerpt_of(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

std::string parse_completion(const std::string& body, int status) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        throw RemoteError(status, "unparseable response body: " + excerpt_of(body));
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty()) {
        throw RemoteError(status, "response has no choices: " + excerpt_of(body));
    }
    const nlohmann::json& first = doc["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw RemoteError(status, "first choice has no message text: " + excerpt_of(body));
    }
    return first["message"]["content"].get<std::string>();
}

std::string generate_remote(const GenerationBackend& backend, const std::string& prompt,
                            int max_tokens) {
    const char* key = std::getenv(kApiKeyEnvVar);
    if (key == nullptr || *key == '\0') {
        throw AuthMissing(std::string("remote generation needs the ") + kApiKeyEnvVar +
                          " environment variable");
    }

    auto [host, path] = split_endpoint(backend.endpoint);
    httplib::Client client(host);
    const auto timeout =
        std::chrono::microseconds(static_cast<long long>(backend.timeout_seconds * 1e6));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_bearer_token_auth(key);

    nlohmann::ordered_json request = {
        {"model", backend.model_name},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
        {"max_tokens", max_tokens},
    };
    const std::string body = request.dump();

    httplib::Error last_error = httplib::Error::Success;
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= backend.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(500.0 * std::pow(2.0, attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        httplib::Result res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = res.error();
            last_status = 0;
            last_body = httplib::to_string(res.error());
            continue;  // all transport failures are worth retrying
        }
        last_error = httplib::Error::Success;
        last_status = res->status;
        last_body = res->body;
        if (res->status >= 200 && res->status < 300) {
            return parse_completion(res->body, res->status);
        }
        if (!transient_status(res->status)) break;
    }

    if (last_error != httplib::Error::Success && timeout_error(last_error)) {
        throw Timeout("remote generation timed out after " +
                      std::to_string(backend.max_retries + 1) + " attempt(s)");
    }
    throw RemoteError(last_status, excerpt_of(last_body));
}

}  // namespace

std::string generate(const GenerationBackend& backend, const std::string& prompt,
                     int max_tokens) {
    backend.validate();
    if (prompt.empty()) throw std::invalid_argument("prompt must be non-empty");
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
    switch (backend.kind) {
        case BackendKind::Stub: return generate_stub(prompt, max_tokens);
        case BackendKind::Remote: return generate_remote(backend, prompt, max_tokens);
    }
    throw std::invalid_argument("unknown backend kind");
}

}  // namespace castor
