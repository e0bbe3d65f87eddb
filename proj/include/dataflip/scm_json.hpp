#pragma once

#include <string>

#include <json.hpp>

#include "dataflip/scm.hpp"

namespace dataflip::scm {

// JSON schema (see docs/formats.md): latents carry values + probs,
// observables carry values, function tables are nested arrays of output
// symbols with parents outermost and the latent innermost.
ScmModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ScmModel& model);

ScmModel load_model_file(const std::string& path);
void save_model_file(const ScmModel& model, const std::string& path);

}  // namespace dataflip::scm
