#pragma once

// Internal JSON (de)serialization helpers shared by checkpoint and config
// parsing.  Not installed; include only from core sources.

#include "castor/attention.hpp"
#include "castor/siamese.hpp"
#include "json.hpp"

namespace castor::codec {

inline nlohmann::ordered_json encoder_config_to_json(const EncoderConfig& cfg) {
    return nlohmann::ordered_json{{"vocab_size", cfg.vocab_size},
                                  {"d_model", cfg.d_model},
                                  {"num_heads", cfg.num_heads},
                                  {"num_layers", cfg.num_layers},
                                  {"block_size", cfg.block_size},
                                  {"window_blocks", cfg.window_blocks},
                                  {"num_random_blocks", cfg.num_random_blocks},
                                  {"num_global_blocks", cfg.num_global_blocks},
                                  {"max_len", cfg.max_len},
                                  {"ffn_multiplier", cfg.ffn_multiplier},
                                  {"pattern_seed", cfg.pattern_seed}};
}

template <typename Json>
EncoderConfig encoder_config_from_json(const Json& j) {
    EncoderConfig cfg;
    cfg.vocab_size = j.at("vocab_size").template get<std::size_t>();
    cfg.d_model = j.at("d_model").template get<std::size_t>();
    cfg.num_heads = j.at("num_heads").template get<std::size_t>();
    cfg.num_layers = j.at("num_layers").template get<std::size_t>();
    cfg.block_size = j.at("block_size").template get<std::size_t>();
    cfg.window_blocks = j.at("window_blocks").template get<std::size_t>();
    cfg.num_random_blocks = j.at("num_random_blocks").template get<std::size_t>();
    cfg.num_global_blocks = j.at("num_global_blocks").template get<std::size_t>();
    cfg.max_len = j.at("max_len").template get<std::size_t>();
    cfg.ffn_multiplier = j.at("ffn_multiplier").template get<std::size_t>();
    cfg.pattern_seed = j.at("pattern_seed").template get<std::uint64_t>();
    return cfg;
}

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
    return nlohmann::ordered_json{{"margin", cfg.margin},
                                  {"learning_rate", cfg.learning_rate},
                                  {"max_epochs", cfg.max_epochs},
                                  {"patience", cfg.patience},
                                  {"batch_size", cfg.batch_size},
                                  {"seed", cfg.seed}};
}

template <typename Json>
TrainConfig train_config_from_json(const Json& j) {
    TrainConfig cfg;
    cfg.margin = j.at("margin").template get<double>();
    cfg.learning_rate = j.at("learning_rate").template get<double>();
    cfg.max_epochs = j.at("max_epochs").template get<std::size_t>();
    cfg.patience = j.at("patience").template get<std::size_t>();
    cfg.batch_size = j.at("batch_size").template get<std::size_t>();
    cfg.seed = j.at("seed").template get<std::uint64_t>();
    return cfg;
}

}  // namespace castor::codec
