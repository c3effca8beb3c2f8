#include <bit>
#include <cstring>
#include <fstream>

#include "castor/errors.hpp"
#include "castor/sha256.hpp"
#include "castor/siamese.hpp"
#include "json_codec.hpp"

// The payload is written by reinterpreting float buffers as bytes, so the
// format is little-endian by construction of the host.
static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

namespace castor {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kHashHexLen = 64;

std::string build_header(const ModelCheckpoint& ckpt) {
    ordered_json manifest = ordered_json::array();
    std::vector<std::string> names =
        EncoderParams<float>::tensor_names(ckpt.encoder_cfg.num_layers);
    std::vector<const Tensor<float>*> tensors = ckpt.params.tensor_list();
    std::size_t payload_bytes = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        manifest.push_back(ordered_json{{"name", names[i]}, {"shape", tensors[i]->shape}});
        payload_bytes += tensors[i]->data.size() * sizeof(float);
    }

    ordered_json header{{"format_version", ckpt.format_version},
                        {"encoder", codec::encoder_config_to_json(ckpt.encoder_cfg)},
                        {"train", codec::train_config_to_json(ckpt.train_cfg)},
                        {"vocab", ordered_json{{"path", ckpt.vocab_path},
                                               {"sha256", ckpt.vocab_sha256}}},
                        {"best_val_loss", ckpt.best_val_loss},
                        {"payload_bytes", payload_bytes},
                        {"manifest", manifest}};
    return header.dump();
}

}  // namespace

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    Sha256 hasher;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        hasher.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return to_hex(hasher.finish());
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    out << build_header(ckpt) << '\n';

    Sha256 hasher;
    for (const Tensor<float>* t : ckpt.params.tensor_list()) {
        const char* bytes = reinterpret_cast<const char*>(t->data.data());
        std::size_t len = t->data.size() * sizeof(float);
        out.write(bytes, static_cast<std::streamsize>(len));
        hasher.update(bytes, len);
    }
    out << to_hex(hasher.finish());
    if (!out) throw IoError("failed while writing '" + path + "'");
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t newline = bytes.find('\n');
    if (newline == std::string::npos) throw CorruptPayload("checkpoint has no header line");

    json header = json::parse(bytes.substr(0, newline), nullptr, false);
    if (header.is_discarded() || !header.is_object()) {
        throw CorruptPayload("checkpoint header is not a valid document");
    }

    // Version gate first: newer formats must be rejected before any payload
    // interpretation is attempted.
    int version = header.value("format_version", -1);
    if (version != kCheckpointFormatVersion) {
        throw VersionMismatch("checkpoint format_version " + std::to_string(version) +
                              " is not supported (expected " +
                              std::to_string(kCheckpointFormatVersion) + ")");
    }

    ModelCheckpoint ckpt;
    ckpt.format_version = version;
    try {
        ckpt.encoder_cfg = codec::encoder_config_from_json(header.at("encoder"));
        ckpt.train_cfg = codec::train_config_from_json(header.at("train"));
        ckpt.train_cfg.encoder = ckpt.encoder_cfg;
        ckpt.vocab_path = header.at("vocab").at("path").get<std::string>();
        ckpt.vocab_sha256 = header.at("vocab").at("sha256").get<std::string>();
        ckpt.best_val_loss = header.at("best_val_loss").get<double>();
    } catch (const json::exception& e) {
        throw CorruptPayload(std::string("checkpoint header is incomplete: ") + e.what());
    }

    const json& manifest = header.at("manifest");
    std::vector<std::string> expected_names =
        EncoderParams<float>::tensor_names(ckpt.encoder_cfg.num_layers);
    if (!manifest.is_array() || manifest.size() != expected_names.size()) {
        throw CorruptPayload("checkpoint manifest does not match the declared architecture");
    }

    ckpt.params.embedding = Tensor<float>();
    ckpt.params.layers.resize(ckpt.encoder_cfg.num_layers);
    std::vector<Tensor<float>*> tensors = ckpt.params.tensor_list();

    std::size_t payload_bytes = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const json& entry = manifest.at(i);
        if (entry.at("name").get<std::string>() != expected_names[i]) {
            throw CorruptPayload("checkpoint manifest entry " + std::to_string(i) +
                                 " is out of order");
        }
        std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        *tensors[i] = Tensor<float>::zeros(shape);
        payload_bytes += tensors[i]->data.size() * sizeof(float);
    }

    std::size_t expected_total = newline + 1 + payload_bytes + kHashHexLen;
    if (bytes.size() != expected_total) {
        throw CorruptPayload("checkpoint payload is " + std::to_string(bytes.size()) +
                             " bytes; expected " + std::to_string(expected_total));
    }

    const char* payload = bytes.data() + newline + 1;
    std::string stored_hash = bytes.substr(newline + 1 + payload_bytes, kHashHexLen);
    if (sha256_hex(payload, payload_bytes) != stored_hash) {
        throw CorruptPayload("checkpoint payload hash mismatch");
    }

    std::size_t offset = 0;
    for (Tensor<float>* t : tensors) {
        std::size_t len = t->data.size() * sizeof(float);
        std::memcpy(t->data.data(), payload + offset, len);
        offset += len;
    }

    for (const Tensor<float>* t : tensors) {
        if (!all_finite(*t)) throw CorruptPayload("checkpoint contains non-finite parameters");
    }
    return ckpt;
}

}  // namespace castor
