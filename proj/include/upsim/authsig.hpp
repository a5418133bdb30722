// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "upsim/geom.hpp"
#include "upsim/timebase.hpp"

namespace upsim::authsig {

/// Opaque station identifier carried inside every signed beacon.
using StationId = std::array<std::uint8_t, 16>;

/// Builds a StationId from a short label (at most 16 bytes, zero padded).
StationId station_id_from_label(std::string_view label);
std::string label_from_station_id(const StationId& id);

/// The signed payload of a beacon: who broadcast, when, and from where.
struct BeaconBody {
  StationId station_id{};
  timebase::Instant t_s;  ///< scheduled emission time
  geom::Vec x_s;          ///< station position at t_s

  bool operator==(const BeaconBody& other) const {
    return station_id == other.station_id && t_s == other.t_s &&
           x_s.size() == other.x_s.size() && x_s == other.x_s;
  }
};

/// A beacon as it travels: body plus detached signature.
struct Broadcast {
  BeaconBody body;
  std::vector<std::uint8_t> signature;
};

/// Canonical wire encoding of a beacon body. The layout is normative and
/// bit-exact, versioned by the leading magic:
///
///   "UPS1"                               4 bytes
///   dims                                 1 byte (2 or 3)
///   t_s ticks, int64 little-endian       8 bytes
///   each coordinate in integer
///     micrometers, int64 little-endian   8 bytes x dims
///   station_id                           16 bytes
///
/// 45 bytes for 2D bodies, 53 for 3D. The encoding is deterministic and
/// injective over the representable domain; coordinates are quantized to
/// the micrometer grid by encoding. Throws EncodingOverflowError when a
/// coordinate does not fit an int64 micrometer count.
std::vector<std::uint8_t> encode_body(const BeaconBody& body);

/// Inverse of encode_body. Throws MalformedEncodingError on any framing,
/// magic, dims or length mismatch.
BeaconBody decode_body(std::span<const std::uint8_t> bytes);

struct KeyPair {
  std::vector<std::uint8_t> public_key;
  std::vector<std::uint8_t> secret_key;
};

/// A detached-signature scheme. The positioning protocol is agnostic to the
/// concrete scheme; signing a beacon could equally be a MAC as long as keys
/// are distributed accordingly. Both implementations here are fully
/// deterministic: identical seeds give identical keys and signatures.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;

  virtual const char* name() const = 0;
  virtual std::size_t signature_size() const = 0;

  /// Derives a key pair deterministically from a 64-bit seed.
  virtual KeyPair keypair_from_seed(std::uint64_t seed) const = 0;

  virtual std::vector<std::uint8_t> sign(std::span<const std::uint8_t> secret_key,
                                         std::span<const std::uint8_t> message) const = 0;

  virtual bool verify(std::span<const std::uint8_t> public_key,
                      std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature) const = 0;
};

/// Ed25519 detached signatures (libsodium). Deterministic by construction.
class Ed25519Scheme final : public SignatureScheme {
 public:
  const char* name() const override { return "ed25519"; }
  std::size_t signature_size() const override;
  KeyPair keypair_from_seed(std::uint64_t seed) const override;
  std::vector<std::uint8_t> sign(std::span<const std::uint8_t> secret_key,
                                 std::span<const std::uint8_t> message) const override;
  bool verify(std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> message,
              std::span<const std::uint8_t> signature) const override;
};

/// Keyed-MAC stand-in for fast property tests: HMAC-SHA256 where the
/// "public" key equals the secret key. Not an asymmetric scheme; intended
/// for tests and high-volume sweeps only.
class HmacScheme final : public SignatureScheme {
 public:
  const char* name() const override { return "hmac"; }
  std::size_t signature_size() const override;
  KeyPair keypair_from_seed(std::uint64_t seed) const override;
  std::vector<std::uint8_t> sign(std::span<const std::uint8_t> secret_key,
                                 std::span<const std::uint8_t> message) const override;
  bool verify(std::span<const std::uint8_t> public_key,
              std::span<const std::uint8_t> message,
              std::span<const std::uint8_t> signature) const override;
};

/// The scheme a scenario runs under.
const SignatureScheme& ed25519_scheme();
const SignatureScheme& hmac_scheme();

struct StationIdHash {
  std::size_t operator()(const StationId& id) const;
};

/// Authentic public keys, indexed by station id. Immutable after scenario
/// load. Lookups of unknown ids fail closed.
class KeyRegistry {
 public:
  /// Registers a station key. Throws Error if the id is already present.
  void add(const StationId& id, std::vector<std::uint8_t> public_key);

  /// Returns the registered key or nullptr for unknown ids.
  const std::vector<std::uint8_t>* find(const StationId& id) const;

  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_map<StationId, std::vector<std::uint8_t>, StationIdHash> keys_;
};

/// Signs the canonical encoding of `body` with `secret_key`.
Broadcast sign_beacon(const SignatureScheme& scheme,
                      std::span<const std::uint8_t> secret_key, BeaconBody body);

/// True iff the registry knows body.station_id and the signature verifies
/// over the canonical body encoding. Unknown stations and unencodable
/// bodies are rejections, not errors: the adversary controls those fields.
bool verify_beacon(const SignatureScheme& scheme, const KeyRegistry& registry,
                   const Broadcast& b);

}  // namespace upsim::authsig
