#include "castor/siamese.hpp"

#include <algorithm>
#include <ostream>

#include "castor/optimizer.hpp"
#include "castor/random.hpp"

namespace castor {

void TrainConfig::validate() const {
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    encoder.validate();
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
    ++epoch_;
    if (epoch_ == 1 || val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch_;
        streak_ = 0;
        return false;
    }
    ++streak_;
    return streak_ >= patience_;
}

namespace {

struct EncodedTriplet {
    TokenSeq anchor;    // reference answer
    TokenSeq positive;  // machine answer
    TokenSeq negative;  // human answer
};

std::vector<EncodedTriplet> pre_tokenize(const std::vector<TripletRecord>& records,
                                         const Vocab& vocab, const EncoderConfig& cfg) {
    std::vector<EncodedTriplet> out;
    out.reserve(records.size());
    for (const TripletRecord& r : records) {
        out.push_back({encode(r.reference_answer, vocab, cfg.max_len, cfg.block_size),
                       encode(r.ai_answer, vocab, cfg.max_len, cfg.block_size),
                       encode(r.human_answer, vocab, cfg.max_len, cfg.block_size)});
    }
    return out;
}

double validation_loss(const EncoderParams<float>& params, const EncoderConfig& cfg,
                       const std::vector<EncodedTriplet>& val, float margin) {
    double total = 0.0;
    for (const EncodedTriplet& t : val) {
        Tensor<float> a = encode(params, cfg, t.anchor);
        Tensor<float> p = encode(params, cfg, t.positive);
        Tensor<float> n = encode(params, cfg, t.negative);
        total += static_cast<double>(triplet_loss(a, p, n, margin));
    }
    return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const DatasetSplit& split, const TrainConfig& cfg, const Vocab& vocab,
                  const std::string& vocab_path, std::ostream* log,
                  const ForwardObserver& observer) {
    cfg.validate();
    if (split.train.empty() || split.validation.empty()) {
        throw EmptySplit("training requires non-empty train and validation sets");
    }

    // Tokenize every text once; epochs only shuffle indices.
    std::vector<EncodedTriplet> train_seqs = pre_tokenize(split.train, vocab, cfg.encoder);
    std::vector<EncodedTriplet> val_seqs = pre_tokenize(split.validation, vocab, cfg.encoder);

    EncoderParams<float> params = init_encoder<float>(cfg.encoder, cfg.seed);
    std::vector<Tensor<float>*> param_list = params.tensor_list();

    AdamState<float> adam;
    adam.lr = cfg.learning_rate;

    const auto margin = static_cast<float>(cfg.margin);
    EarlyStopper stopper(cfg.patience);
    TrainHistory history;
    EncoderParams<float> best_params = params;
    double best_val = 0.0;
    StopReason reason = StopReason::MaxEpochs;

    std::vector<std::size_t> order(train_seqs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        RandomEngine shuffle_rng(cfg.seed + 0x9e3779b97f4a7c15ull * epoch);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::size_t batch_n = end - start;
            auto inv_n = static_cast<float>(1.0 / static_cast<double>(batch_n));

            EncoderParams<float> grads = zero_like(params);
            for (std::size_t bi = start; bi < end; ++bi) {
                const EncodedTriplet& t = train_seqs[order[bi]];

                EncoderCache<float> ca, cp, cn;
                if (observer) observer('a', params);
                Tensor<float> a = encode(params, cfg.encoder, t.anchor, &ca);
                if (observer) observer('p', params);
                Tensor<float> p = encode(params, cfg.encoder, t.positive, &cp);
                if (observer) observer('n', params);
                Tensor<float> n = encode(params, cfg.encoder, t.negative, &cn);

                float loss = triplet_loss(a, p, n, margin);
                if (!std::isfinite(loss)) {
                    throw NonFiniteLoss("non-finite training loss at epoch " +
                                        std::to_string(epoch) + ", batch " +
                                        std::to_string(start / cfg.batch_size + 1));
                }
                epoch_loss += static_cast<double>(loss);
                if (loss <= 0.0f) continue;  // hinge inactive: zero gradient

                // d loss/d cos(a,p) = -1/N ; d loss/d cos(a,n) = +1/N.
                auto [da_p, dp] = cosine_similarity_backward(a, p, -inv_n);
                auto [da_n, dn] = cosine_similarity_backward(a, n, inv_n);
                Tensor<float> da = add(da_p, da_n);

                encode_backward(params, cfg.encoder, t.anchor, ca, da, grads);
                encode_backward(params, cfg.encoder, t.positive, cp, dp, grads);
                encode_backward(params, cfg.encoder, t.negative, cn, dn, grads);
            }

            std::vector<Tensor<float>*> grad_list = grads.tensor_list();
            clip_by_global_norm(grad_list, 1.0);
            adam_step(param_list, grad_list, adam);
        }
        epoch_loss /= static_cast<double>(train_seqs.size());

        double val_loss = validation_loss(params, cfg.encoder, val_seqs, margin);
        if (!std::isfinite(val_loss)) {
            throw NonFiniteLoss("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        history.epochs.push_back({epoch_loss, val_loss});

        bool stop = stopper.observe(val_loss);
        if (stopper.best_epoch() == epoch) {
            best_params = params;
            best_val = val_loss;
        }
        if (log) {
            (*log) << "epoch " << epoch << " train_loss=" << epoch_loss
                   << " val_loss=" << val_loss
                   << (stopper.best_epoch() == epoch ? " *" : "") << '\n';
        }
        if (stop) {
            reason = StopReason::EarlyStopped;
            break;
        }
    }

    history.best_epoch = stopper.best_epoch();
    history.stop_reason = reason;

    TrainResult result;
    result.history = history;
    result.checkpoint.format_version = kCheckpointFormatVersion;
    result.checkpoint.encoder_cfg = cfg.encoder;
    result.checkpoint.train_cfg = cfg;
    result.checkpoint.vocab_path = vocab_path;
    result.checkpoint.vocab_sha256 = vocab_path.empty() ? "" : file_sha256(vocab_path);
    result.checkpoint.best_val_loss = best_val;
    result.checkpoint.params = std::move(best_params);
    return result;
}

}  // namespace castor
