// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/authsig.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>
#include <mutex>

#include "upsim/errors.hpp"
#include "upsim/rng.hpp"

namespace upsim::authsig {

namespace {

constexpr char kMagic[4] = {'U', 'P', 'S', '1'};
constexpr double kMicrometersPerMeter = 1e6;

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
  });
}

void put_le64(std::vector<std::uint8_t>& out, std::int64_t value) {
  const auto u = static_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

std::int64_t get_le64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  return static_cast<std::int64_t>(u);
}

std::int64_t meters_to_micrometers(double meters) {
  const double scaled = meters * kMicrometersPerMeter;
  if (!(scaled >= -9.2e18 && scaled <= 9.2e18)) {
    throw EncodingOverflowError("coordinate does not fit the micrometer grid");
  }
  return std::llround(scaled);
}

std::array<std::uint8_t, 32> seed_bytes(std::uint64_t seed) {
  SplitMix64 stream(seed);
  std::array<std::uint8_t, 32> out{};
  for (int w = 0; w < 4; ++w) {
    const std::uint64_t word = stream.next();
    for (int i = 0; i < 8; ++i)
      out[static_cast<std::size_t>(8 * w + i)] = static_cast<std::uint8_t>(word >> (8 * i));
  }
  return out;
}

}  // namespace

StationId station_id_from_label(std::string_view label) {
  if (label.empty() || label.size() > 16) {
    throw Error("station label must be 1..16 bytes");
  }
  StationId id{};
  std::memcpy(id.data(), label.data(), label.size());
  return id;
}

std::string label_from_station_id(const StationId& id) {
  std::size_t len = id.size();
  while (len > 0 && id[len - 1] == 0) --len;
  return std::string(reinterpret_cast<const char*>(id.data()), len);
}

std::vector<std::uint8_t> encode_body(const BeaconBody& body) {
  const int dims = static_cast<int>(body.x_s.size());
  if (dims != 2 && dims != 3) throw EncodingOverflowError("body dims must be 2 or 3");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 1 + 8 + 8 * static_cast<std::size_t>(dims) + 16);
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(dims));
  put_le64(out, body.t_s.ticks);
  for (int i = 0; i < dims; ++i) put_le64(out, meters_to_micrometers(body.x_s[i]));
  out.insert(out.end(), body.station_id.begin(), body.station_id.end());
  return out;
}

BeaconBody decode_body(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw MalformedEncodingError("bad magic");
  }
  const int dims = bytes[4];
  if (dims != 2 && dims != 3) throw MalformedEncodingError("bad dims byte");
  const std::size_t expected = 4 + 1 + 8 + 8 * static_cast<std::size_t>(dims) + 16;
  if (bytes.size() != expected) throw MalformedEncodingError("bad length");

  BeaconBody body;
  body.t_s.ticks = get_le64(bytes, 5);
  body.x_s.resize(dims);
  for (int i = 0; i < dims; ++i) {
    body.x_s[i] = static_cast<double>(get_le64(bytes, 13 + 8 * static_cast<std::size_t>(i))) /
                  kMicrometersPerMeter;
  }
  std::memcpy(body.station_id.data(), bytes.data() + 13 + 8 * static_cast<std::size_t>(dims), 16);
  return body;
}

std::size_t Ed25519Scheme::signature_size() const { return crypto_sign_BYTES; }

KeyPair Ed25519Scheme::keypair_from_seed(std::uint64_t seed) const {
  ensure_sodium();
  const auto material = seed_bytes(seed);
  static_assert(crypto_sign_SEEDBYTES == 32);
  KeyPair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), material.data());
  return kp;
}

std::vector<std::uint8_t> Ed25519Scheme::sign(std::span<const std::uint8_t> secret_key,
                                              std::span<const std::uint8_t> message) const {
  ensure_sodium();
  if (secret_key.size() != crypto_sign_SECRETKEYBYTES) throw Error("ed25519: bad secret key size");
  std::vector<std::uint8_t> sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key.data());
  return sig;
}

bool Ed25519Scheme::verify(std::span<const std::uint8_t> public_key,
                           std::span<const std::uint8_t> message,
                           std::span<const std::uint8_t> signature) const {
  ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
  if (signature.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

std::size_t HmacScheme::signature_size() const { return crypto_auth_hmacsha256_BYTES; }

KeyPair HmacScheme::keypair_from_seed(std::uint64_t seed) const {
  ensure_sodium();
  const auto material = seed_bytes(seed);
  static_assert(crypto_auth_hmacsha256_KEYBYTES == 32);
  KeyPair kp;
  kp.secret_key.assign(material.begin(), material.end());
  kp.public_key = kp.secret_key;  // shared-key scheme
  return kp;
}

std::vector<std::uint8_t> HmacScheme::sign(std::span<const std::uint8_t> secret_key,
                                           std::span<const std::uint8_t> message) const {
  ensure_sodium();
  if (secret_key.size() != crypto_auth_hmacsha256_KEYBYTES) throw Error("hmac: bad key size");
  std::vector<std::uint8_t> tag(crypto_auth_hmacsha256_BYTES);
  crypto_auth_hmacsha256(tag.data(), message.data(), message.size(), secret_key.data());
  return tag;
}

bool HmacScheme::verify(std::span<const std::uint8_t> public_key,
                        std::span<const std::uint8_t> message,
                        std::span<const std::uint8_t> signature) const {
  ensure_sodium();
  if (public_key.size() != crypto_auth_hmacsha256_KEYBYTES) return false;
  if (signature.size() != crypto_auth_hmacsha256_BYTES) return false;
  return crypto_auth_hmacsha256_verify(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

const SignatureScheme& ed25519_scheme() {
  static const Ed25519Scheme scheme;
  return scheme;
}

const SignatureScheme& hmac_scheme() {
  static const HmacScheme scheme;
  return scheme;
}

std::size_t StationIdHash::operator()(const StationId& id) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : id) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return static_cast<std::size_t>(h);
}

void KeyRegistry::add(const StationId& id, std::vector<std::uint8_t> public_key) {
  if (!keys_.emplace(id, std::move(public_key)).second) {
    throw Error("duplicate station id in key registry: " + label_from_station_id(id));
  }
}

const std::vector<std::uint8_t>* KeyRegistry::find(const StationId& id) const {
  const auto it = keys_.find(id);
  return it == keys_.end() ? nullptr : &it->second;
}

Broadcast sign_beacon(const SignatureScheme& scheme,
                      std::span<const std::uint8_t> secret_key, BeaconBody body) {
  const auto message = encode_body(body);
  Broadcast b;
  b.signature = scheme.sign(secret_key, message);
  b.body = std::move(body);
  return b;
}

bool verify_beacon(const SignatureScheme& scheme, const KeyRegistry& registry,
                   const Broadcast& b) {
  const auto* key = registry.find(b.body.station_id);
  if (key == nullptr) return false;
  std::vector<std::uint8_t> message;
  try {
    message = encode_body(b.body);
  } catch (const Error&) {
    return false;  // unencodable body cannot have been signed
  }
  return scheme.verify(*key, message, b.signature);
}

}  // namespace upsim::authsig
