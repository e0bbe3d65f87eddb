#include "dataflip/scm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dataflip::scm {

int DiscreteDomain::index_of(const std::string& symbol) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

const DiscreteDomain* ScmModel::observable_domain(const std::string& id) const {
  for (const auto& [name, dom] : observables) {
    if (name == id) return &dom;
  }
  return nullptr;
}

bool ScmModel::is_observable(const std::string& id) const {
  return observable_domain(id) != nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i > 0) out << "; ";
    out << violations[i].code << ": " << violations[i].message;
  }
  return out.str();
}

namespace {

constexpr int kMaxDomainSize = 8;
constexpr double kProbSumTolerance = 1e-12;

void check_domain(const std::string& owner, const DiscreteDomain& dom,
                  std::vector<Violation>& out) {
  if (dom.values.empty() || dom.values.size() > kMaxDomainSize) {
    out.push_back({"domain-size",
                   owner + ": domain must have 1.." + std::to_string(kMaxDomainSize) +
                       " values, has " + std::to_string(dom.values.size())});
  }
  std::set<std::string> seen;
  for (const auto& v : dom.values) {
    if (!seen.insert(v).second) {
      out.push_back({"domain-duplicate", owner + ": duplicate symbol '" + v + "'"});
    }
  }
}

std::size_t expected_table_size(const ScmModel& model, const StructuralFunction& fn) {
  std::size_t size = 1;
  for (const auto& parent : fn.observed_parents) {
    const auto* dom = model.observable_domain(parent);
    size *= dom != nullptr ? static_cast<std::size_t>(dom->size()) : 0;
  }
  for (const auto& latent : model.latents) {
    if (latent.id == fn.latent_parent) {
      size *= static_cast<std::size_t>(latent.domain.size());
      return size;
    }
  }
  return 0;
}

}  // namespace

ValidationReport validate_model(const ScmModel& model) {
  std::vector<Violation> v;

  std::set<std::string> names;
  for (const auto& latent : model.latents) {
    if (latent.id.empty()) v.push_back({"empty-name", "latent with empty id"});
    if (!names.insert(latent.id).second) {
      v.push_back({"duplicate-name", "variable '" + latent.id + "' declared twice"});
    }
    check_domain("latent " + latent.id, latent.domain, v);
    if (latent.probs.size() != latent.domain.values.size()) {
      v.push_back({"prob-arity", "latent " + latent.id + ": " +
                                     std::to_string(latent.probs.size()) + " probs for " +
                                     std::to_string(latent.domain.values.size()) + " values"});
    } else {
      double sum = 0.0;
      bool negative = false;
      for (double p : latent.probs) {
        if (p < 0.0) negative = true;
        sum += p;
      }
      if (negative) v.push_back({"prob-negative", "latent " + latent.id + ": negative probability"});
      if (std::abs(sum - 1.0) > kProbSumTolerance) {
        std::ostringstream msg;
        msg << "latent " << latent.id << ": probabilities sum to " << sum;
        v.push_back({"prob-sum", msg.str()});
      }
    }
  }
  for (const auto& [name, dom] : model.observables) {
    if (name.empty()) v.push_back({"empty-name", "observable with empty id"});
    if (!names.insert(name).second) {
      v.push_back({"duplicate-name", "variable '" + name + "' declared twice"});
    }
    check_domain("observable " + name, dom, v);
  }

  // One function per observable, outputs known, parents known.
  std::map<std::string, int> function_count;
  for (const auto& fn : model.functions) {
    if (!model.is_observable(fn.output)) {
      v.push_back({"unknown-output", "function output '" + fn.output + "' is not an observable"});
      continue;
    }
    ++function_count[fn.output];
    for (const auto& parent : fn.observed_parents) {
      if (!model.is_observable(parent)) {
        v.push_back({"unknown-parent",
                     fn.output + ": parent '" + parent + "' is not an observable"});
      }
    }
    bool latent_known = false;
    for (const auto& latent : model.latents) {
      if (latent.id == fn.latent_parent) latent_known = true;
    }
    if (!latent_known) {
      v.push_back({"unknown-latent",
                   fn.output + ": latent parent '" + fn.latent_parent + "' is not a latent"});
      continue;
    }
    const std::size_t expected = expected_table_size(model, fn);
    if (expected != 0 && fn.table.size() != expected) {
      v.push_back({"table-size", fn.output + ": table has " + std::to_string(fn.table.size()) +
                                     " entries, expected " + std::to_string(expected)});
    }
    const auto* out_dom = model.observable_domain(fn.output);
    for (int entry : fn.table) {
      if (entry < 0 || entry >= out_dom->size()) {
        v.push_back({"table-range", fn.output + ": table entry " + std::to_string(entry) +
                                        " outside output domain"});
        break;
      }
    }
  }
  for (const auto& [name, dom] : model.observables) {
    (void)dom;
    const int count = function_count.count(name) != 0u ? function_count.at(name) : 0;
    if (count != 1) {
      v.push_back({"function-count",
                   "observable " + name + " has " + std::to_string(count) + " functions"});
    }
  }

  // Latent usage.
  for (const auto& latent : model.latents) {
    bool used = false;
    for (const auto& fn : model.functions) {
      if (fn.latent_parent == latent.id) used = true;
    }
    if (!used) v.push_back({"latent-unused", "latent " + latent.id + " feeds no function"});
  }

  // Cycle check over observables (latents are roots by construction).
  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& fn : model.functions) {
    if (model.is_observable(fn.output)) parents[fn.output] = fn.observed_parents;
  }
  std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
  bool cycle = false;
  auto visit = [&](auto&& self, const std::string& node) -> void {
    if (cycle) return;
    int& s = state[node];
    if (s == 1) {
      cycle = true;
      return;
    }
    if (s == 2) return;
    s = 1;
    if (parents.count(node) != 0u) {
      for (const auto& p : parents.at(node)) self(self, p);
    }
    s = 2;
  };
  for (const auto& [name, dom] : model.observables) {
    (void)dom;
    visit(visit, name);
  }
  if (cycle) v.push_back({"cycle", "causal structure contains a cycle"});

  return ValidationReport{std::move(v)};
}

// ---------------------------------------------------------------------------
// Compiled form: integer indices, topological order, flat tables.

namespace {

struct CompiledFunction {
  int output;                   // observable index
  std::vector<int> parents;     // observable indices
  int latent;                   // latent index
  const std::vector<int>* table;
  std::vector<int> parent_radix;  // domain sizes of parents
  int latent_radix;
};

struct Compiled {
  const ScmModel* model;
  std::vector<int> latent_sizes;
  std::vector<int> observable_sizes;
  std::vector<CompiledFunction> order;  // topologically sorted

  int observable_count() const { return static_cast<int>(observable_sizes.size()); }
  int latent_count() const { return static_cast<int>(latent_sizes.size()); }

  void propagate(const std::vector<int>& latent_values, std::vector<int>& observable_values) const {
    for (const auto& fn : order) {
      std::size_t index = 0;
      for (std::size_t k = 0; k < fn.parents.size(); ++k) {
        index = index * static_cast<std::size_t>(fn.parent_radix[k]) +
                static_cast<std::size_t>(observable_values[fn.parents[k]]);
      }
      index = index * static_cast<std::size_t>(fn.latent_radix) +
              static_cast<std::size_t>(latent_values[fn.latent]);
      observable_values[fn.output] = (*fn.table)[index];
    }
  }
};

Compiled compile(const ScmModel& model) {
  auto report = validate_model(model);
  if (!report.ok()) {
    throw ValidationError("invalid model: " + report.summary());
  }

  Compiled c;
  c.model = &model;
  std::unordered_map<std::string, int> latent_index;
  for (const auto& latent : model.latents) {
    latent_index.emplace(latent.id, static_cast<int>(c.latent_sizes.size()));
    c.latent_sizes.push_back(latent.domain.size());
  }
  std::unordered_map<std::string, int> obs_index;
  for (const auto& [name, dom] : model.observables) {
    obs_index.emplace(name, static_cast<int>(c.observable_sizes.size()));
    c.observable_sizes.push_back(dom.size());
  }

  std::vector<const StructuralFunction*> fn_of(model.observables.size(), nullptr);
  for (const auto& fn : model.functions) {
    fn_of[obs_index.at(fn.output)] = &fn;
  }

  // Depth-first topological order over observables.
  std::vector<int> state(model.observables.size(), 0);
  auto visit = [&](auto&& self, int node) -> void {
    if (state[node] != 0) return;
    state[node] = 1;
    for (const auto& parent : fn_of[node]->observed_parents) {
      self(self, obs_index.at(parent));
    }
    state[node] = 2;
    const auto* fn = fn_of[node];
    CompiledFunction cf;
    cf.output = node;
    for (const auto& parent : fn->observed_parents) {
      const int pi = obs_index.at(parent);
      cf.parents.push_back(pi);
      cf.parent_radix.push_back(c.observable_sizes[pi]);
    }
    cf.latent = latent_index.at(fn->latent_parent);
    cf.latent_radix = c.latent_sizes[cf.latent];
    cf.table = &fn->table;
    c.order.push_back(std::move(cf));
  };
  for (int i = 0; i < static_cast<int>(model.observables.size()); ++i) visit(visit, i);
  return c;
}

std::uint64_t latent_space_size(const Compiled& c, const EnumerationOptions& opts) {
  std::uint64_t states = 1;
  for (int size : c.latent_sizes) {
    const auto s = static_cast<std::uint64_t>(size);
    if (s > 1 && states > opts.max_latent_states / s) {
      throw ModelTooLargeError("latent joint space exceeds cap of " +
                               std::to_string(opts.max_latent_states) + " states");
    }
    states *= s;
  }
  return states;
}

// Iterates latent joint states in lexicographic order (first latent most
// significant), calling fn(latent_values, probability) for each.
template <typename Fn>
void for_each_latent_state(const Compiled& c, const EnumerationOptions& opts, Fn&& fn) {
  const std::uint64_t states = latent_space_size(c, opts);
  const int n = c.latent_count();
  std::vector<int> values(n, 0);
  for (std::uint64_t s = 0; s < states; ++s) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      p *= c.model->latents[i].probs[static_cast<std::size_t>(values[i])];
    }
    fn(values, p);
    for (int i = n - 1; i >= 0; --i) {
      if (++values[i] < c.latent_sizes[i]) break;
      values[i] = 0;
    }
  }
}

// Resolves the event to (observable index, value index) pairs; throws on
// unknown variables or out-of-domain values.
std::vector<std::pair<int, int>> resolve_event(const ScmModel& model, const Assignment& event) {
  std::vector<std::pair<int, int>> resolved;
  for (const auto& [var, value] : event.bindings) {
    int index = -1;
    for (std::size_t i = 0; i < model.observables.size(); ++i) {
      if (model.observables[i].first == var) {
        index = static_cast<int>(i);
        break;
      }
    }
    if (index < 0) throw ValidationError("unknown observable '" + var + "'");
    const int value_index = model.observables[static_cast<std::size_t>(index)].second.index_of(value);
    if (value_index < 0) {
      throw ValidationError("value '" + value + "' not in domain of '" + var + "'");
    }
    resolved.emplace_back(index, value_index);
  }
  return resolved;
}

bool holds(const std::vector<std::pair<int, int>>& event, const std::vector<int>& values) {
  for (const auto& [var, value] : event) {
    if (values[static_cast<std::size_t>(var)] != value) return false;
  }
  return true;
}

std::uint64_t pack(const std::vector<int>& values, const std::vector<int>& sizes) {
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    key = key * static_cast<std::uint64_t>(sizes[i]) + static_cast<std::uint64_t>(values[i]);
  }
  return key;
}

}  // namespace

double JointDistribution::total() const {
  double sum = 0.0;
  for (const auto& [key, p] : probs) {
    (void)key;
    sum += p;
  }
  return sum;
}

std::vector<int> JointDistribution::decode(std::uint64_t key) const {
  std::vector<int> values(variables.size(), 0);
  for (std::size_t i = variables.size(); i-- > 0;) {
    const auto size = static_cast<std::uint64_t>(domains[i].size());
    values[i] = static_cast<int>(key % size);
    key /= size;
  }
  return values;
}

double JointDistribution::marginal(const Assignment& event) const {
  std::vector<std::pair<int, int>> resolved;
  for (const auto& [var, value] : event.bindings) {
    int index = -1;
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (variables[i] == var) {
        index = static_cast<int>(i);
        break;
      }
    }
    if (index < 0) throw ValidationError("unknown observable '" + var + "'");
    const int value_index = domains[static_cast<std::size_t>(index)].index_of(value);
    if (value_index < 0) {
      throw ValidationError("value '" + value + "' not in domain of '" + var + "'");
    }
    resolved.emplace_back(index, value_index);
  }
  double sum = 0.0;
  for (const auto& [key, p] : probs) {
    if (holds(resolved, decode(key))) sum += p;
  }
  return sum;
}

JointDistribution enumerate_joint(const ScmModel& model, const EnumerationOptions& opts) {
  const Compiled c = compile(model);
  JointDistribution dist;
  std::vector<int> sizes;
  for (const auto& [name, dom] : model.observables) {
    dist.variables.push_back(name);
    dist.domains.push_back(dom);
    sizes.push_back(dom.size());
  }
  std::vector<int> observed(model.observables.size(), 0);
  for_each_latent_state(c, opts, [&](const std::vector<int>& latent_values, double p) {
    if (p == 0.0) return;
    c.propagate(latent_values, observed);
    dist.probs[pack(observed, sizes)] += p;
  });
  return dist;
}

ScmModel apply_do(const ScmModel& model, const Assignment& intervention) {
  ScmModel result = model;
  for (const auto& [var, value] : intervention.bindings) {
    const auto* dom = model.observable_domain(var);
    if (dom == nullptr) throw ValidationError("cannot intervene on '" + var + "': not an observable");
    const int value_index = dom->index_of(value);
    if (value_index < 0) {
      throw ValidationError("value '" + value + "' not in domain of '" + var + "'");
    }
    for (auto& fn : result.functions) {
      if (fn.output != var) continue;
      fn.observed_parents.clear();
      int latent_size = 0;
      for (const auto& latent : model.latents) {
        if (latent.id == fn.latent_parent) latent_size = latent.domain.size();
      }
      fn.table.assign(static_cast<std::size_t>(latent_size), value_index);
    }
  }
  return result;
}

double interventional_prob(const ScmModel& model, const Assignment& intervention,
                           const Assignment& event, const EnumerationOptions& opts) {
  return enumerate_joint(apply_do(model, intervention), opts).marginal(event);
}

double counterfactual_prob(const ScmModel& model, const Assignment& intervention,
                           const Assignment& target, const Assignment& evidence,
                           const EnumerationOptions& opts) {
  const Compiled factual = compile(model);
  const ScmModel intervened = apply_do(model, intervention);
  const Compiled hypothetical = compile(intervened);

  const auto evidence_resolved = resolve_event(model, evidence);
  const auto target_resolved = resolve_event(model, target);

  // Abduction and prediction share one sweep over the latent joints: each
  // state's posterior weight is P(u) / P(e), applied to the propagation of
  // the intervened submodel.
  double evidence_mass = 0.0;
  double target_mass = 0.0;
  std::vector<int> observed(model.observables.size(), 0);
  for_each_latent_state(factual, opts, [&](const std::vector<int>& latent_values, double p) {
    if (p == 0.0) return;
    factual.propagate(latent_values, observed);
    if (!holds(evidence_resolved, observed)) return;
    evidence_mass += p;
    hypothetical.propagate(latent_values, observed);
    if (holds(target_resolved, observed)) target_mass += p;
  });
  if (evidence_mass == 0.0) {
    throw ZeroEvidenceError("evidence has zero probability; the counterfactual is ill-posed");
  }
  return target_mass / evidence_mass;
}

double joint_counterfactual_prob(const ScmModel& model,
                                 const Assignment& intervention_a, const Assignment& target_a,
                                 const Assignment& intervention_b, const Assignment& target_b,
                                 const EnumerationOptions& opts) {
  const Compiled world_a = compile(apply_do(model, intervention_a));
  const Compiled world_b = compile(apply_do(model, intervention_b));
  const auto a_resolved = resolve_event(model, target_a);
  const auto b_resolved = resolve_event(model, target_b);

  double mass = 0.0;
  std::vector<int> observed(model.observables.size(), 0);
  for_each_latent_state(world_a, opts, [&](const std::vector<int>& latent_values, double p) {
    if (p == 0.0) return;
    world_a.propagate(latent_values, observed);
    if (!holds(a_resolved, observed)) return;
    world_b.propagate(latent_values, observed);
    if (holds(b_resolved, observed)) mass += p;
  });
  return mass;
}

TwinModel build_twin(const ScmModel& model, const Assignment& intervention) {
  std::string suffix = "*";
  for (bool collision = true; collision;) {
    collision = false;
    for (const auto& [name, dom] : model.observables) {
      (void)dom;
      if (name.size() >= suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        collision = true;
      }
    }
    if (collision) suffix += "*";
  }

  ScmModel combined = model;
  for (const auto& [name, dom] : model.observables) {
    combined.observables.emplace_back(name + suffix, dom);
  }
  for (const auto& fn : model.functions) {
    StructuralFunction copy = fn;
    copy.output += suffix;
    for (auto& parent : copy.observed_parents) parent += suffix;
    combined.functions.push_back(std::move(copy));
  }

  Assignment starred;
  for (const auto& [var, value] : intervention.bindings) {
    if (!model.is_observable(var)) {
      throw ValidationError("cannot intervene on '" + var + "': not an observable");
    }
    starred.set(var + suffix, value);
  }

  TwinModel twin;
  twin.combined = apply_do(combined, starred);
  twin.suffix = suffix;
  twin.intervention = intervention;
  return twin;
}

double twin_counterfactual_prob(const TwinModel& twin, const Assignment& target,
                                const Assignment& evidence, const EnumerationOptions& opts) {
  Assignment starred_target;
  for (const auto& [var, value] : target.bindings) {
    starred_target.set(twin.counterfactual_name(var), value);
  }
  Assignment joint_event = starred_target;
  for (const auto& [var, value] : evidence.bindings) {
    joint_event.set(var, value);
  }

  const JointDistribution dist = enumerate_joint(twin.combined, opts);
  const double evidence_mass = dist.marginal(evidence);
  if (evidence_mass == 0.0) {
    throw ZeroEvidenceError("evidence has zero probability; the counterfactual is ill-posed");
  }
  return dist.marginal(joint_event) / evidence_mass;
}

Assignment parse_bindings(const std::vector<std::string>& pairs) {
  Assignment assignment;
  for (const auto& pair : pairs) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("binding '" + pair + "' is not of the form VAR=value");
    }
    assignment.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  return assignment;
}

}  // namespace dataflip::scm
