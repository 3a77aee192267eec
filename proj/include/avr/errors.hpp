#pragma once

#include <stdexcept>
#include <string>

namespace avr {

enum class Errc {
  out_of_bounds,
  empty_description,
  pool_too_small,
  no_such_tier,
  screenshot_too_small,
  embedder_unavailable,
  empty_text,
  dimension_mismatch,
  empty_hard_set,
  out_of_range,
  empty_probe,
  non_negative_floor,
  weight_shape_mismatch,
  degenerate_weights,
  duplicate_id,
  persistence_failure,
  empty_dangerous_set,
  unknown_model,
  empty_ledger,
  missing_hard_examples,
  unreadable_payload,
  malformed_kb,
  malformed_trace,
  unknown_outcome,
  backend_unavailable,
  probe_malformed,
  bad_request,
  bad_config,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::out_of_bounds: return "OutOfBounds";
    case Errc::empty_description: return "EmptyDescription";
    case Errc::pool_too_small: return "PoolTooSmall";
    case Errc::no_such_tier: return "NoSuchTier";
    case Errc::screenshot_too_small: return "ScreenshotTooSmall";
    case Errc::embedder_unavailable: return "EmbedderUnavailable";
    case Errc::empty_text: return "EmptyText";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_hard_set: return "EmptyHardSet";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::empty_probe: return "EmptyProbe";
    case Errc::non_negative_floor: return "NonNegativeFloor";
    case Errc::weight_shape_mismatch: return "WeightShapeMismatch";
    case Errc::degenerate_weights: return "DegenerateWeights";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::persistence_failure: return "PersistenceFailure";
    case Errc::empty_dangerous_set: return "EmptyDangerousSet";
    case Errc::unknown_model: return "UnknownModel";
    case Errc::empty_ledger: return "EmptyLedger";
    case Errc::missing_hard_examples: return "MissingHardExamples";
    case Errc::unreadable_payload: return "UnreadablePayload";
    case Errc::malformed_kb: return "MalformedKB";
    case Errc::malformed_trace: return "MalformedTrace";
    case Errc::unknown_outcome: return "UnknownOutcome";
    case Errc::backend_unavailable: return "BackendUnavailable";
    case Errc::probe_malformed: return "ProbeMalformed";
    case Errc::bad_request: return "BadRequest";
    case Errc::bad_config: return "BadConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace avr
