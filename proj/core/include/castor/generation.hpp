#pragma once

#include <stdexcept>
#include <string>

namespace castor {

// Remote generation requires a credential in the environment; thrown before
// any network traffic when it is absent.
struct AuthMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-recoverable remote failure: HTTP error status, transport failure after
// retries, or an unparseable response body.
struct RemoteError : std::runtime_error {
    int status;                // HTTP status, or 0 for transport-level failures
    std::string body_excerpt;  // first bytes of the offending response body
    RemoteError(int status_, std::string excerpt);
};

// The remote service did not answer within the configured timeout, on any
// attempt.
struct Timeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Remote, Stub };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

// Environment variable holding the remote credential.
inline constexpr const char* kApiKeyEnvVar = "GENERATION_API_KEY";

struct GenerationBackend {
    BackendKind kind = BackendKind::Stub;
    std::string endpoint;   // Remote only: full URL of the chat-completion route
    std::string model_name = "offline-stub";
    double timeout_seconds = 30.0;
    int max_retries = 3;

    void validate() const;
};

// Obtains generated text for a prompt.
//
// Remote: POSTs one chat-completion request (model, a single user message,
// max_tokens) to backend.endpoint with a bearer token from the environment,
// retrying transient failures (transport errors, 408/429/5xx) with
// exponential backoff up to max_retries, and returns the first choice's
// message text.
//
// Stub: returns a deterministic pseudo-answer seeded by a hash of the prompt,
// with words drawn from a fixed vocabulary and exactly min(max_tokens, 64)
// words — a pure function of (prompt, max_tokens), usable with no network.
std::string generate(const GenerationBackend& backend, const std::string& prompt,
                     int max_tokens);

}  // namespace castor
