#pragma once

#include <stdexcept>

namespace dataflip {

// Invalid inputs: malformed models, bad configs, misaligned vectors,
// cache hash mismatches. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A report was requested from a manifest with missing or partial regime
// outputs. CLI exit code 3.
struct IncompleteManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal cross-checks failed, e.g. the two counterfactual evaluation
// paths disagree. CLI exit code 4.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Conditioning on evidence whose probability is zero: the query is
// ill-posed and there is no posterior to abduct.
struct ZeroEvidenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The latent joint space exceeds the enumeration cap.
struct ModelTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dataflip
