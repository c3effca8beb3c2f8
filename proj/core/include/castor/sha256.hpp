#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace castor {

// Minimal streaming SHA-256 (FIPS 180-4).  Used to fingerprint checkpoint
// payloads; kept self-contained so checkpoints stay dependency-free.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    std::array<std::uint8_t, 32> finish();

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_{};
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

// Lower-case hex digest of a byte buffer.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(std::string_view text);

std::string to_hex(const std::array<std::uint8_t, 32>& digest);

}  // namespace castor
