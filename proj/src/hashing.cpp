#include "rjch/hashing.hpp"

#include <charconv>
#include <cstring>
#include <stdexcept>
#include <string>

namespace rjch {
namespace {

inline std::uint64_t rotl64(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

// Distinct hash domain for the bias coin so the coin is independent of the
// digest it gates.
constexpr std::uint64_t kBiasCoinSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

Digest128 digest(std::uint64_t seed, std::string_view bytes) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t len = bytes.size();
  const std::size_t nblocks = len / 16;

  std::uint64_t h1 = seed;
  std::uint64_t h2 = seed;
  const std::uint64_t c1 = 0x87c37b91114253d5ULL;
  const std::uint64_t c2 = 0x4cf5ad432745937fULL;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint64_t k1, k2;
    std::memcpy(&k1, data + i * 16, 8);
    std::memcpy(&k2, data + i * 16 + 8, 8);

    k1 *= c1;
    k1 = rotl64(k1, 31);
    k1 *= c2;
    h1 ^= k1;
    h1 = rotl64(h1, 27);
    h1 += h2;
    h1 = h1 * 5 + 0x52dce729;

    k2 *= c2;
    k2 = rotl64(k2, 33);
    k2 *= c1;
    h2 ^= k2;
    h2 = rotl64(h2, 31);
    h2 += h1;
    h2 = h2 * 5 + 0x38495ab5;
  }

  const unsigned char* tail = data + nblocks * 16;
  std::uint64_t k1 = 0;
  std::uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= static_cast<std::uint64_t>(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= static_cast<std::uint64_t>(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= static_cast<std::uint64_t>(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= static_cast<std::uint64_t>(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= static_cast<std::uint64_t>(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= static_cast<std::uint64_t>(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= static_cast<std::uint64_t>(tail[8]);
      k2 *= c2;
      k2 = rotl64(k2, 33);
      k2 *= c1;
      h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= static_cast<std::uint64_t>(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= static_cast<std::uint64_t>(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= static_cast<std::uint64_t>(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= static_cast<std::uint64_t>(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= static_cast<std::uint64_t>(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= static_cast<std::uint64_t>(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= static_cast<std::uint64_t>(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= static_cast<std::uint64_t>(tail[0]);
      k1 *= c1;
      k1 = rotl64(k1, 31);
      k1 *= c2;
      h1 ^= k1;
      break;
    default: break;
  }

  h1 ^= static_cast<std::uint64_t>(len);
  h2 ^= static_cast<std::uint64_t>(len);
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;
  return {h1, h2};
}

void check_address_bits(int bits) {
  if (bits < 1 || bits > 32) {
    throw std::invalid_argument("address bits must be in [1, 32], got " + std::to_string(bits));
  }
}

Digest128 probe_digest(std::uint64_t seed, std::string_view base, std::uint64_t attempt) {
  char buf[160];
  if (base.size() + 20 <= sizeof(buf)) {
    std::memcpy(buf, base.data(), base.size());
    auto [end, ec] = std::to_chars(buf + base.size(), buf + sizeof(buf), attempt);
    (void)ec;
    return digest(seed, std::string_view(buf, static_cast<std::size_t>(end - buf)));
  }
  std::string s;
  s.reserve(base.size() + 20);
  s.append(base);
  s.append(std::to_string(attempt));
  return digest(seed, s);
}

std::array<std::uint32_t, 4> probe_slots(std::uint64_t seed, ProbeKey key, int bits) {
  check_address_bits(bits);
  const Digest128 d = probe_digest(seed, key.base, key.attempt);
  const auto w = d.words();
  return {slot_from_word(w[0], bits), slot_from_word(w[1], bits), slot_from_word(w[2], bits),
          slot_from_word(w[3], bits)};
}

Digest128 biased_digest(std::uint64_t seed, std::string_view bytes, std::uint32_t hotspot,
                        int bits, double bias_p) {
  check_address_bits(bits);
  Digest128 d = digest(seed, bytes);
  if (bias_p <= 0.0) return d;
  if (bias_p < 1.0) {
    const Digest128 coin = digest(seed ^ kBiasCoinSalt, bytes);
    if (digest_unit(coin) >= bias_p) return d;
  }
  const std::uint32_t low_mask = bits >= 32 ? 0u : (0xffffffffu >> bits);
  const std::uint32_t w0 = static_cast<std::uint32_t>(d.hi >> 32);
  const std::uint32_t forced = (bits >= 32 ? hotspot : (hotspot << (32 - bits))) | (w0 & low_mask);
  d.hi = (static_cast<std::uint64_t>(forced) << 32) | (d.hi & 0xffffffffULL);
  return d;
}

Digest128 biased_probe_digest(std::uint64_t seed, std::string_view base, std::uint64_t attempt,
                              std::uint32_t hotspot, int bits, double bias_p) {
  char buf[160];
  if (base.size() + 20 <= sizeof(buf)) {
    std::memcpy(buf, base.data(), base.size());
    auto [end, ec] = std::to_chars(buf + base.size(), buf + sizeof(buf), attempt);
    (void)ec;
    return biased_digest(seed, std::string_view(buf, static_cast<std::size_t>(end - buf)),
                         hotspot, bits, bias_p);
  }
  std::string s;
  s.reserve(base.size() + 20);
  s.append(base);
  s.append(std::to_string(attempt));
  return biased_digest(seed, s, hotspot, bits, bias_p);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return digest(master, tag).lo;
}

}  // namespace rjch
