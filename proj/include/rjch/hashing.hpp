#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace rjch {

// 128-bit keyed digest, kept as two 64-bit halves (hi is the most
// significant). The pinned algorithm is MurmurHash3 x64/128 with both lanes
// seeded from the same 64-bit seed, so runs are reproducible across builds.
struct Digest128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  // The four 32-bit words of the digest, most significant first. Their
  // concatenation is the original 128-bit value.
  std::array<std::uint32_t, 4> words() const {
    return {static_cast<std::uint32_t>(hi >> 32), static_cast<std::uint32_t>(hi),
            static_cast<std::uint32_t>(lo >> 32), static_cast<std::uint32_t>(lo)};
  }

  friend bool operator==(const Digest128&, const Digest128&) = default;
};

Digest128 digest(std::uint64_t seed, std::string_view bytes);

// A slot index is the top `bits` bits of a 32-bit hash word. bits must be in
// [1, 32]; callers validate via check_address_bits.
inline std::uint32_t slot_from_word(std::uint32_t word, int bits) {
  return bits >= 32 ? word : word >> (32 - bits);
}

void check_address_bits(int bits);  // throws std::invalid_argument outside [1, 32]

struct ProbeKey {
  std::string_view base;
  std::uint64_t attempt = 0;
};

// Digest of base + decimal(attempt). One digest feeds a whole probe round of
// four slots; the attempt counter only increments once all four are consumed.
Digest128 probe_digest(std::uint64_t seed, std::string_view base, std::uint64_t attempt);

// The four slot indices of one probe round, most significant word first.
std::array<std::uint32_t, 4> probe_slots(std::uint64_t seed, ProbeKey key, int bits);

// Digest with a deterministic first-probe bias: with probability `bias_p`
// (decided by an auxiliary hash of the input, so the result is a pure function
// of the input) the top `bits` bits of the first word are replaced by
// `hotspot`; otherwise identical to digest().
Digest128 biased_digest(std::uint64_t seed, std::string_view bytes, std::uint32_t hotspot,
                        int bits, double bias_p);

// probe_digest with the same per-input bias applied to each probe round.
Digest128 biased_probe_digest(std::uint64_t seed, std::string_view base, std::uint64_t attempt,
                              std::uint32_t hotspot, int bits, double bias_p);

// Uniform double in [0, 1) derived from a digest; used wherever a
// deterministic per-input coin is needed.
inline double digest_unit(const Digest128& d) {
  return static_cast<double>(d.lo >> 11) * 0x1.0p-53;
}

// Stable seed derivation for trial streams: hash of the master seed and a tag.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

}  // namespace rjch
