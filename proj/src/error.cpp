#include "fedsim/error.hpp"

namespace fedsim {

const char* errc_name(errc code) {
  switch (code) {
    case errc::missing_field: return "MissingField";
    case errc::empty_steps: return "EmptySteps";
    case errc::unknown_action_type: return "UnknownActionType";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::infeasible_scheme: return "InfeasibleScheme";
    case errc::empty_dataset: return "EmptyDataset";
    case errc::coverage_mismatch: return "CoverageMismatch";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::no_updates: return "NoUpdates";
    case errc::zero_total_weight: return "ZeroTotalWeight";
    case errc::unknown_client: return "UnknownClient";
    case errc::no_eligible_clients: return "NoEligibleClients";
    case errc::empty_client: return "EmptyClient";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::empty_test_set: return "EmptyTestSet";
    case errc::corrupt_checkpoint: return "CorruptCheckpoint";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::missing_metrics: return "MissingMetrics";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace fedsim
