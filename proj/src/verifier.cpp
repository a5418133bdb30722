// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/verifier.hpp"

#include <algorithm>

#include "upsim/errors.hpp"

namespace upsim::verifier {

const char* to_string(Reason reason) {
  switch (reason) {
    case Reason::ClockExpired: return "clock_expired";
    case Reason::TooFewBroadcasts: return "too_few_broadcasts";
    case Reason::FutureTimestamp: return "future_timestamp";
    case Reason::TooFewValidSignatures: return "too_few_valid_signatures";
    case Reason::SolverFailure: return "solver_failure";
    case Reason::ErrorRangeExceeded: return "error_range_exceeded";
    case Reason::NotContained: return "not_contained";
  }
  return "unknown";
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Abort: return "abort";
    case Verdict::Reject: return "reject";
  }
  return "unknown";
}

const char* to_string(StepLog::State state) {
  switch (state) {
    case StepLog::State::Skipped: return "skipped";
    case StepLog::State::Ok: return "ok";
    case StepLog::State::Failed: return "failed";
  }
  return "unknown";
}

PositionResult PositionResult::make_accepted(ranging::Fix fix, geom::Simplex witness) {
  PositionResult r;
  r.verdict = Verdict::Accepted;
  r.fix = std::move(fix);
  r.witness = std::move(witness);
  return r;
}

PositionResult PositionResult::make_abort(Reason reason) {
  PositionResult r;
  r.verdict = Verdict::Abort;
  r.reason = reason;
  return r;
}

PositionResult PositionResult::make_reject(Reason reason, std::optional<ranging::Fix> fix) {
  PositionResult r;
  r.verdict = Verdict::Reject;
  r.reason = reason;
  r.fix = std::move(fix);
  return r;
}

authsig::Broadcast make_broadcast(const authsig::SignatureScheme& scheme,
                                  std::span<const std::uint8_t> secret_key,
                                  const authsig::StationId& station_id,
                                  timebase::Instant t_s, const geom::Vec& x_s) {
  authsig::BeaconBody body;
  body.station_id = station_id;
  body.t_s = t_s;
  body.x_s = x_s;
  return authsig::sign_beacon(scheme, secret_key, std::move(body));
}

namespace {

// Replays of one station's beacon must not inflate the broadcast count, so
// only the earliest arrival per station survives.
std::vector<const ReceiptEntry*> dedup_by_station(const Receipt& receipt) {
  std::vector<const ReceiptEntry*> kept;
  kept.reserve(receipt.entries.size());
  for (const auto& entry : receipt.entries) {
    auto it = std::find_if(kept.begin(), kept.end(), [&](const ReceiptEntry* e) {
      return e->broadcast.body.station_id == entry.broadcast.body.station_id;
    });
    if (it == kept.end()) {
      kept.push_back(&entry);
    } else if (entry.t_m < (*it)->t_m) {
      *it = &entry;
    }
  }
  return kept;
}

}  // namespace

PositionResult verify_position(const Receipt& receipt, const VerifierConfig& config,
                               StepLog* log) {
  StepLog local_log;
  StepLog& steps = log != nullptr ? *log : local_log;
  steps = StepLog{};
  steps.entries_received = static_cast<int>(receipt.entries.size());

  const int quorum = config.dims + 1;

  // The module refuses service once its own clock is past validity. The
  // freshest inner-clock reading it holds is the best local estimate of
  // "now".
  if (!receipt.entries.empty()) {
    timebase::Instant latest = receipt.entries.front().t_m;
    for (const auto& entry : receipt.entries) latest = std::max(latest, entry.t_m);
    if (timebase::expired(config.clock, latest)) {
      steps.expiry = StepLog::State::Failed;
      return PositionResult::make_abort(Reason::ClockExpired);
    }
  }
  steps.expiry = StepLog::State::Ok;

  const auto entries = dedup_by_station(receipt);
  steps.entries_after_dedup = static_cast<int>(entries.size());

  // Step 3: quorum of received broadcasts.
  if (static_cast<int>(entries.size()) < quorum) {
    steps.count = StepLog::State::Failed;
    return PositionResult::make_abort(Reason::TooFewBroadcasts);
  }
  steps.count = StepLog::State::Ok;

  // Step 4: emission times must not postdate receipt times.
  for (const auto* entry : entries) {
    if (entry->broadcast.body.t_s > entry->t_m) {
      steps.timestamps = StepLog::State::Failed;
      return PositionResult::make_abort(Reason::FutureTimestamp);
    }
  }
  steps.timestamps = StepLog::State::Ok;

  // Step 5: keep only broadcasts that verify under registered keys.
  std::vector<const ReceiptEntry*> accepted;
  accepted.reserve(entries.size());
  for (const auto* entry : entries) {
    if (config.scheme != nullptr && config.registry != nullptr &&
        authsig::verify_beacon(*config.scheme, *config.registry, entry->broadcast)) {
      accepted.push_back(entry);
    }
  }
  steps.signatures_valid = static_cast<int>(accepted.size());
  if (static_cast<int>(accepted.size()) < quorum) {
    steps.signatures = StepLog::State::Failed;
    return PositionResult::make_abort(Reason::TooFewValidSignatures);
  }
  steps.signatures = StepLog::State::Ok;

  // Step 6: one-way distance bounds, then the least-squares position.
  std::vector<ranging::RangeObservation> observations;
  observations.reserve(accepted.size());
  ranging::Fix fix;
  try {
    for (const auto* entry : accepted) {
      ranging::RangeObservation obs;
      obs.station_pos = entry->broadcast.body.x_s;
      obs.bound_m =
          ranging::distance_bound(entry->broadcast.body.t_s, entry->t_m, config.c_m_per_s);
      obs.station_id = entry->broadcast.body.station_id;
      observations.push_back(std::move(obs));
    }
    fix = ranging::solve_position(observations, config.dims);
  } catch (const Error&) {
    steps.solve = StepLog::State::Failed;
    return PositionResult::make_reject(Reason::SolverFailure);
  }
  steps.solve = StepLog::State::Ok;

  // Step 7: uncertainty gate.
  if (fix.error_range_m > config.error_limit_m) {
    steps.error_gate = StepLog::State::Failed;
    return PositionResult::make_reject(Reason::ErrorRangeExceeded, std::move(fix));
  }
  steps.error_gate = StepLog::State::Ok;

  // Step 8: the fix must lie strictly inside a simplex of accepted stations.
  std::vector<geom::Vec> positions;
  positions.reserve(accepted.size());
  for (const auto* entry : accepted) positions.push_back(entry->broadcast.body.x_s);
  auto witness = containment_witness_search(positions, fix.position, config.dims);
  if (!witness) {
    steps.containment = StepLog::State::Failed;
    return PositionResult::make_reject(Reason::NotContained, std::move(fix));
  }
  steps.containment = StepLog::State::Ok;
  return PositionResult::make_accepted(std::move(fix), std::move(*witness));
}

std::optional<geom::Simplex> containment_witness_search(std::span<const geom::Vec> positions,
                                                        const geom::Vec& p, int dims) {
  const int n = static_cast<int>(positions.size());
  const int k = dims + 1;
  if (n < k) return std::nullopt;

  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;

  std::vector<geom::Vec> verts(static_cast<std::size_t>(k));
  while (true) {
    for (int i = 0; i < k; ++i) {
      verts[static_cast<std::size_t>(i)] = positions[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
    }
    const geom::Simplex candidate = geom::make_simplex(verts);
    if (!geom::is_degenerate(candidate) && geom::contains(candidate, p)) {
      return candidate;
    }

    // advance to the next k-subset in lexicographic order
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace upsim::verifier
