// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upsim/authsig.hpp"
#include "upsim/geom.hpp"
#include "upsim/ranging.hpp"
#include "upsim/timebase.hpp"

namespace upsim::verifier {

/// One captured broadcast together with its receipt time as read from the
/// terminal's inner clock at arrival (not true time).
struct ReceiptEntry {
  authsig::Broadcast broadcast;
  timebase::Instant t_m;
};

/// Everything the terminal captured in one listen window.
struct Receipt {
  std::vector<ReceiptEntry> entries;
};

/// Why a verification run did not accept.
enum class Reason {
  ClockExpired,
  TooFewBroadcasts,
  FutureTimestamp,
  TooFewValidSignatures,
  SolverFailure,
  ErrorRangeExceeded,
  NotContained,
};

enum class Verdict { Accepted, Abort, Reject };

const char* to_string(Reason reason);
const char* to_string(Verdict verdict);

/// Outcome of one verification: an accepted fix with its witness simplex, or
/// an abort (the protocol never got to a position), or a reject (a computed
/// position failed a gate).
struct PositionResult {
  Verdict verdict = Verdict::Abort;
  std::optional<Reason> reason;
  std::optional<ranging::Fix> fix;
  std::optional<geom::Simplex> witness;

  bool accepted() const { return verdict == Verdict::Accepted; }

  static PositionResult make_accepted(ranging::Fix fix, geom::Simplex witness);
  static PositionResult make_abort(Reason reason);
  static PositionResult make_reject(Reason reason, std::optional<ranging::Fix> fix = {});
};

/// Per-check record of one verification run, for reporting.
struct StepLog {
  enum class State { Skipped, Ok, Failed };
  State expiry = State::Skipped;
  State count = State::Skipped;
  State timestamps = State::Skipped;
  State signatures = State::Skipped;
  State solve = State::Skipped;
  State error_gate = State::Skipped;
  State containment = State::Skipped;
  int entries_received = 0;
  int entries_after_dedup = 0;
  int signatures_valid = 0;
};

const char* to_string(StepLog::State state);

/// Static configuration of the verification module. The verifier works from
/// local inputs only -- receipt, keys, its own clock metadata -- and never
/// transmits; that is what keeps the terminal's location private.
struct VerifierConfig {
  int dims = 2;
  double error_limit_m = 1.0;       ///< gate on the fix's error range
  double c_m_per_s = 3e8;           ///< signal propagation speed
  const authsig::SignatureScheme* scheme = nullptr;
  const authsig::KeyRegistry* registry = nullptr;
  timebase::ClockModel clock;       ///< the inner clock's own sync metadata
};

/// Station side: signs (t_s, x_s) for a future emission time. The radio
/// layer must emit the beacon exactly at t_s.
authsig::Broadcast make_broadcast(const authsig::SignatureScheme& scheme,
                                  std::span<const std::uint8_t> secret_key,
                                  const authsig::StationId& station_id,
                                  timebase::Instant t_s, const geom::Vec& x_s);

/// Runs the verification state machine over a receipt:
///
///   pre. inner clock past its validity period        -> Abort(ClockExpired)
///   dedup. one entry per station, earliest arrival kept
///   3. fewer than dims+1 entries                     -> Abort(TooFewBroadcasts)
///   4. any broadcast timestamped after its receipt   -> Abort(FutureTimestamp)
///   5. drop invalid signatures; fewer than dims+1    -> Abort(TooFewValidSignatures)
///   6. distance bounds + least-squares position      -> Reject(SolverFailure) on error
///   7. error range above the preset limit            -> Reject(ErrorRangeExceeded)
///   8. no station simplex strictly contains the fix  -> Reject(NotContained)
///
/// Earlier steps win: an input violating several conditions reports the
/// first. Malformed input maps to outcomes, never to exceptions.
PositionResult verify_position(const Receipt& receipt, const VerifierConfig& config,
                               StepLog* log = nullptr);

/// First (in lexicographic subset order) non-degenerate simplex of dims+1
/// station positions that strictly contains p, or nullopt. Duplicate
/// positions are fine; their subsets fail the degeneracy gate and are
/// skipped.
std::optional<geom::Simplex> containment_witness_search(std::span<const geom::Vec> positions,
                                                        const geom::Vec& p, int dims);

}  // namespace upsim::verifier
