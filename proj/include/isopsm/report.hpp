#pragma once

#include <json.hpp>

#include "isopsm/bootstrap.hpp"
#include "isopsm/estimators.hpp"
#include "isopsm/index.hpp"
#include "isopsm/pava.hpp"
#include "isopsm/simulation.hpp"

namespace isopsm {

using json = nlohmann::json;

inline json to_json(const IndexFit& fit) {
  json j;
  j["method"] = index_method_name(fit.method);
  j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  j["converged"] = fit.converged;
  if (!fit.objective_trace.empty()) j["objective_trace"] = fit.objective_trace;
  return j;
}

inline json to_json(const EffectEstimate& est) {
  json j;
  j["method"] = estimator_method_name(est.method);
  j["target"] = effect_target_name(est.target);
  j["value"] = est.value;
  j["diagnostics"] = {{"blocks", est.diagnostics.blocks},
                      {"min_fitted", est.diagnostics.min_fitted},
                      {"max_fitted", est.diagnostics.max_fitted},
                      {"zero_over_zero", est.diagnostics.zero_over_zero}};
  return j;
}

inline json to_json(const BootstrapReport& boot, bool include_replicates = false) {
  json j;
  j["point_estimate"] = boot.point_estimate;
  j["B"] = boot.b;
  j["failed"] = boot.failed;
  j["seed"] = boot.seed;
  j["mean"] = boot.mean;
  j["sd"] = boot.sd;
  j["q025"] = boot.q025;
  j["q975"] = boot.q975;
  if (include_replicates) j["replicates"] = boot.replicates;
  return j;
}

inline json to_json(const StepPropensity& step) {
  json j;
  j["blocks"] = step.block_count();
  j["block_ends"] = step.block_ends;
  j["block_values"] = step.block_values;
  return j;
}

inline json to_json(const McCell& cell) {
  json j;
  j["model"] = cell.config.model;
  j["a"] = cell.config.a;
  j["b"] = cell.config.b;
  j["link"] = link_name(cell.config.link);
  j["n"] = cell.config.n;
  j["estimator"] = cell.estimator;
  j["bias"] = cell.bias;
  j["rmse"] = cell.rmse;
  j["bias_se"] = cell.bias_se;
  j["rmse_se"] = cell.rmse_se;
  j["reps"] = cell.reps;
  j["failed"] = cell.failed;
  j["true_att"] = cell.true_att;
  j["true_att_se"] = cell.true_att_se;
  j["outcome_angle_rad"] = cell.outcome_angle;
  return j;
}

inline json to_json(const McReport& report) {
  json j;
  j["reps"] = report.reps;
  j["seed"] = report.master_seed;
  j["oracle_n"] = report.oracle_n;
  j["cells"] = json::array();
  for (const McCell& cell : report.cells) j["cells"].push_back(to_json(cell));
  return j;
}

}  // namespace isopsm
