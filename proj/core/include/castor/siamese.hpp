#pragma once

// Triplet-loss training of the shared encoder: the distance and loss
// functions, the epoch loop with Adam and early stopping, and checkpoint
// persistence.  The anchor is the reference answer, the positive is the
// machine answer, the negative is the human answer.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "castor/corpus.hpp"
#include "castor/encoder.hpp"
#include "castor/tensor.hpp"
#include "castor/tokenizer.hpp"

namespace castor {

struct EmptySplit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries the epoch/batch coordinates of the first non-finite loss.
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptPayload : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Distance and loss
// ---------------------------------------------------------------------------

// 1 - cos(u, v); in [0, 2].  Throws ZeroVector on a zero input.
template <typename T>
T cosine_distance(const Tensor<T>& u, const Tensor<T>& v) {
    return T(1) - cosine_similarity(u, v);
}

// Hinge loss max(0, D(a,p) - D(a,n) + margin) for a single triplet; batch
// values are the mean over the batch's triplets.
template <typename T>
T triplet_loss(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative,
               T margin) {
    if (!(margin > T(0))) throw std::invalid_argument("triplet margin must be positive");
    T value = cosine_distance(anchor, positive) - cosine_distance(anchor, negative) + margin;
    return value > T(0) ? value : T(0);
}

// ---------------------------------------------------------------------------
// Training configuration and history
// ---------------------------------------------------------------------------

struct TrainConfig {
    double margin = 0.6;
    double learning_rate = 2e-5;
    std::size_t max_epochs = 30;
    std::size_t patience = 3;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    EncoderConfig encoder;

    void validate() const;  // throws std::invalid_argument
};

enum class StopReason { EarlyStopped, MaxEpochs };

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based epoch number
    StopReason stop_reason = StopReason::MaxEpochs;
};

// Strict-improvement early stopping: training halts once the validation
// loss has gone `patience` consecutive epochs without improving on the best
// value seen so far.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);

    // Feed one epoch's validation loss; returns true when training should
    // stop after this epoch.
    bool observe(double val_loss);

    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }
    std::size_t epochs_seen() const { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    double best_loss_ = 0.0;
    std::size_t streak_ = 0;  // consecutive epochs without strict improvement
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

struct ModelCheckpoint {
    int format_version = kCheckpointFormatVersion;
    EncoderConfig encoder_cfg;
    TrainConfig train_cfg;
    std::string vocab_path;
    std::string vocab_sha256;
    double best_val_loss = 0.0;
    EncoderParams<float> params;
};

// Single-line header document, then the raw little-endian float32 payload in
// manifest order, then a trailing hex SHA-256 of the payload.
void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

// SHA-256 of a file's bytes, lower-case hex.  Used to pin the vocab file a
// checkpoint was trained with.
std::string file_sha256(const std::string& path);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainResult {
    ModelCheckpoint checkpoint;
    TrainHistory history;
};

// Called immediately before each of the three forwards of a training step;
// `role` is 'a', 'p', or 'n'.  Exists so tests can verify the three passes
// share one parameter state.
using ForwardObserver = std::function<void(char role, const EncoderParams<float>& params)>;

// Train the shared encoder on the split with Adam (global-norm clipping at
// 1.0) and early stopping; returns the best-epoch parameters.  `vocab_path`
// is recorded (with its content hash) in the checkpoint.  Progress lines go
// to `log` when given.
TrainResult train(const DatasetSplit& split, const TrainConfig& cfg, const Vocab& vocab,
                  const std::string& vocab_path, std::ostream* log = nullptr,
                  const ForwardObserver& observer = nullptr);

}  // namespace castor
