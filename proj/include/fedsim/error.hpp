#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Error codes mirror the failure modes of the public operations. The CLI maps
// them onto process exit codes (config=2, scheme=3, io=4).
enum class errc {
  missing_field,
  empty_steps,
  unknown_action_type,
  invalid_spec,
  infeasible_scheme,
  empty_dataset,
  coverage_mismatch,
  dimension_mismatch,
  no_updates,
  zero_total_weight,
  unknown_client,
  no_eligible_clients,
  empty_client,
  empty_corpus,
  empty_test_set,
  corrupt_checkpoint,
  version_mismatch,
  missing_metrics,
  io_error,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fedsim
