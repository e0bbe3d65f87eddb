#include "dataflip/scm_json.hpp"

#include <fstream>

#include "dataflip/errors.hpp"

namespace dataflip::scm {

namespace {

using nlohmann::json;

DiscreteDomain domain_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": 'values' must be an array of symbols");
  DiscreteDomain dom;
  for (const auto& v : j) {
    if (!v.is_string()) throw ValidationError(where + ": domain symbols must be strings");
    dom.values.push_back(v.get<std::string>());
  }
  return dom;
}

// Flattens a nested table; `dims` are the parent domain sizes followed by
// the latent domain size, `out` the output domain for symbol lookup.
void flatten_table(const json& node, const std::vector<int>& dims, std::size_t depth,
                   const DiscreteDomain& out, const std::string& where, std::vector<int>& table) {
  if (depth == dims.size()) {
    if (!node.is_string()) {
      throw ValidationError(where + ": table leaf must be an output symbol");
    }
    const int index = out.index_of(node.get<std::string>());
    if (index < 0) {
      throw ValidationError(where + ": symbol '" + node.get<std::string>() +
                            "' not in output domain");
    }
    table.push_back(index);
    return;
  }
  if (!node.is_array() || static_cast<int>(node.size()) != dims[depth]) {
    throw ValidationError(where + ": table nesting does not match parent/latent domain sizes");
  }
  for (const auto& child : node) {
    flatten_table(child, dims, depth + 1, out, where, table);
  }
}

json nest_table(const std::vector<int>& table, const std::vector<int>& dims, std::size_t depth,
                std::size_t& pos, const DiscreteDomain& out) {
  if (depth == dims.size()) {
    return json(out.values[static_cast<std::size_t>(table[pos++])]);
  }
  json arr = json::array();
  for (int i = 0; i < dims[depth]; ++i) {
    arr.push_back(nest_table(table, dims, depth + 1, pos, out));
  }
  return arr;
}

}  // namespace

ScmModel model_from_json(const json& j) {
  ScmModel model;
  if (!j.is_object()) throw ValidationError("model: top level must be an object");

  for (const auto& lj : j.value("latents", json::array())) {
    LatentSpec latent;
    latent.id = lj.value("id", std::string{});
    latent.domain = domain_from_json(lj.value("values", json::array()), "latent " + latent.id);
    for (const auto& p : lj.value("probs", json::array())) {
      latent.probs.push_back(p.get<double>());
    }
    model.latents.push_back(std::move(latent));
  }

  for (const auto& oj : j.value("observables", json::array())) {
    const auto id = oj.value("id", std::string{});
    model.observables.emplace_back(id, domain_from_json(oj.value("values", json::array()),
                                                        "observable " + id));
  }

  for (const auto& fj : j.value("functions", json::array())) {
    StructuralFunction fn;
    fn.output = fj.value("output", std::string{});
    for (const auto& p : fj.value("parents", json::array())) {
      fn.observed_parents.push_back(p.get<std::string>());
    }
    fn.latent_parent = fj.value("latent", std::string{});

    const auto* out_dom = model.observable_domain(fn.output);
    if (out_dom == nullptr) {
      throw ValidationError("function output '" + fn.output + "' is not a declared observable");
    }
    std::vector<int> dims;
    for (const auto& parent : fn.observed_parents) {
      const auto* dom = model.observable_domain(parent);
      if (dom == nullptr) {
        throw ValidationError("function " + fn.output + ": parent '" + parent + "' not declared");
      }
      dims.push_back(dom->size());
    }
    int latent_size = -1;
    for (const auto& latent : model.latents) {
      if (latent.id == fn.latent_parent) latent_size = latent.domain.size();
    }
    if (latent_size < 0) {
      throw ValidationError("function " + fn.output + ": latent '" + fn.latent_parent +
                            "' not declared");
    }
    dims.push_back(latent_size);
    flatten_table(fj.value("table", json::array()), dims, 0, *out_dom,
                  "function " + fn.output, fn.table);
    model.functions.push_back(std::move(fn));
  }

  return model;
}

json model_to_json(const ScmModel& model) {
  json j;
  j["latents"] = json::array();
  for (const auto& latent : model.latents) {
    j["latents"].push_back({{"id", latent.id},
                            {"values", latent.domain.values},
                            {"probs", latent.probs}});
  }
  j["observables"] = json::array();
  for (const auto& [name, dom] : model.observables) {
    j["observables"].push_back({{"id", name}, {"values", dom.values}});
  }
  j["functions"] = json::array();
  for (const auto& fn : model.functions) {
    std::vector<int> dims;
    for (const auto& parent : fn.observed_parents) {
      dims.push_back(model.observable_domain(parent)->size());
    }
    for (const auto& latent : model.latents) {
      if (latent.id == fn.latent_parent) dims.push_back(latent.domain.size());
    }
    std::size_t pos = 0;
    j["functions"].push_back({{"output", fn.output},
                              {"parents", fn.observed_parents},
                              {"latent", fn.latent_parent},
                              {"table", nest_table(fn.table, dims, 0, pos,
                                                   *model.observable_domain(fn.output))}});
  }
  return j;
}

ScmModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

void save_model_file(const ScmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(2) << "\n";
}

}  // namespace dataflip::scm
