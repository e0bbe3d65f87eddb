#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dataflip/errors.hpp"

namespace dataflip::scm {

// Ordered finite symbol domain. Exact enumeration is only practical for
// small domains, so the validator enforces 1..8 values.
struct DiscreteDomain {
  std::vector<std::string> values;

  int size() const { return static_cast<int>(values.size()); }
  // Index of a symbol, or -1 when absent.
  int index_of(const std::string& symbol) const;

  bool operator==(const DiscreteDomain&) const = default;
};

struct LatentSpec {
  std::string id;
  DiscreteDomain domain;
  std::vector<double> probs;  // one entry per domain value, sums to 1

  bool operator==(const LatentSpec&) const = default;
};

// One structural equation v = f(observed parents, latent). The table is an
// exhaustive lookup, flattened with the parents as outer indices and the
// latent innermost:
//   index = ((p0 * |D1| + p1) * ... + pk) * |L| + u
// Entries are indices into the output variable's domain.
struct StructuralFunction {
  std::string output;
  std::vector<std::string> observed_parents;
  std::string latent_parent;
  std::vector<int> table;

  bool operator==(const StructuralFunction&) const = default;
};

struct ScmModel {
  std::vector<LatentSpec> latents;
  std::vector<std::pair<std::string, DiscreteDomain>> observables;
  std::vector<StructuralFunction> functions;

  const DiscreteDomain* observable_domain(const std::string& id) const;
  bool is_observable(const std::string& id) const;

  bool operator==(const ScmModel&) const = default;
};

// Partial binding of variables to domain symbols.
struct Assignment {
  std::map<std::string, std::string> bindings;

  bool empty() const { return bindings.empty(); }
  Assignment& set(const std::string& var, const std::string& value) {
    bindings[var] = value;
    return *this;
  }

  bool operator==(const Assignment&) const = default;
};

struct Violation {
  std::string code;     // stable machine key, e.g. "cycle", "prob-sum"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// Report-style model check: names, domains, probability sums, table
// completeness, acyclicity, latent usage. Empty report iff well-formed.
ValidationReport validate_model(const ScmModel& model);

struct EnumerationOptions {
  std::uint64_t max_latent_states = 10'000'000;
};

// Distribution over complete observable assignments. Keys pack the value
// indices in model observable order, last observable fastest.
struct JointDistribution {
  std::vector<std::string> variables;
  std::vector<DiscreteDomain> domains;
  std::map<std::uint64_t, double> probs;

  double total() const;
  // Sum of probabilities over assignments consistent with the event.
  // An empty event marginalizes everything.
  double marginal(const Assignment& event) const;
  std::vector<int> decode(std::uint64_t key) const;
};

// P(V = v) by exhaustive enumeration of the latent joint space, summing in
// lexicographic latent-state order. Throws ValidationError on an invalid
// model, ModelTooLargeError past the cap.
JointDistribution enumerate_joint(const ScmModel& model, const EnumerationOptions& opts = {});

// Graph surgery do(x): each intervened observable's function becomes a
// constant with its observed-parent edges removed. The latent parent slot is
// kept so the model shape is unchanged, but the table ignores it.
ScmModel apply_do(const ScmModel& model, const Assignment& intervention);

// P(event | do(intervention)) = P_{M_x}(event).
double interventional_prob(const ScmModel& model, const Assignment& intervention,
                           const Assignment& event, const EnumerationOptions& opts = {});

// P(target_x | evidence) by abduction-action-prediction: Bayes posterior
// over latent joints given the evidence, then deterministic propagation in
// the intervened submodel. Throws ZeroEvidenceError when P(evidence) = 0.
double counterfactual_prob(const ScmModel& model, const Assignment& intervention,
                           const Assignment& target, const Assignment& evidence,
                           const EnumerationOptions& opts = {});

// P(target_a under do(a), target_b under do(b)) over the shared latent space.
double joint_counterfactual_prob(const ScmModel& model,
                                 const Assignment& intervention_a, const Assignment& target_a,
                                 const Assignment& intervention_b, const Assignment& target_b,
                                 const EnumerationOptions& opts = {});

// Factual and counterfactual copies of the model sharing one latent set;
// the intervention is applied on the counterfactual copy only.
struct TwinModel {
  ScmModel combined;
  std::string suffix;        // appended to counterfactual observable names
  Assignment intervention;   // in base-variable names

  std::string counterfactual_name(const std::string& base_name) const {
    return base_name + suffix;
  }
};

TwinModel build_twin(const ScmModel& model, const Assignment& intervention);

// P(target* | evidence) in the twin by ordinary conditioning: target read on
// the counterfactual copies, evidence on the factual ones. Must agree with
// counterfactual_prob.
double twin_counterfactual_prob(const TwinModel& twin, const Assignment& target,
                                const Assignment& evidence, const EnumerationOptions& opts = {});

// Parses "VAR=value" pairs into an assignment (used by the CLI and tests).
Assignment parse_bindings(const std::vector<std::string>& pairs);

}  // namespace dataflip::scm
