#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace aaflow {

// Minimal streaming SHA-256 (FIPS 180-4). Self-contained so the embedder has
// no external crypto dependency.
class Sha256 {
public:
    using Digest = std::array<std::uint8_t, 32>;

    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    Digest finish();

    static Digest hash(std::string_view data);
    static std::string hex(const Digest& d);

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t total_len_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
};

} // namespace aaflow
