// Command-line front end: ingest CSV data, run the matching estimators with
// optional bootstrap inference, run simulation studies, and export step
// function data for plotting.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isopsm/isopsm.hpp"

namespace {

using isopsm::json;

struct CommonArgs {
  std::string input;
  std::string out;
  std::string format = "json";
  std::string index_method = "mle";
  std::string features = "raw";
  std::string estimators = "pava-mle,pava-sse,para,psm:3,psm:5,psm:10,psm:15";
  int bootstrap_b = 0;
  std::uint64_t seed = 1;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw isopsm::DataError("cannot write '" + path + "'");
  out << payload;
}

isopsm::ObservationSet load(const CommonArgs& args) {
  if (args.input.empty()) throw isopsm::DataError("--input is required");
  return isopsm::read_observations_csv(args.input, args.features == "quadratic");
}

isopsm::IndexFit fit_index(const isopsm::ObservationSet& data,
                           const std::string& method) {
  if (method == "mle") return isopsm::logistic_mle(data);
  if (method == "sse") return isopsm::sse_fit(data);
  throw isopsm::DataError("unknown index method '" + method +
                          "' (valid: mle, sse)");
}

struct EstimatorSpec {
  std::string name;
  isopsm::SimEstimatorKind kind;
  int m = 0;
};

std::vector<EstimatorSpec> parse_estimators(const std::string& csv) {
  std::vector<EstimatorSpec> specs;
  for (const std::string& token : split(csv, ',')) {
    if (token == "pava-mle") {
      specs.push_back({token, isopsm::SimEstimatorKind::PavaMle, 0});
    } else if (token == "pava-sse") {
      specs.push_back({token, isopsm::SimEstimatorKind::PavaSse, 0});
    } else if (token == "para") {
      specs.push_back({token, isopsm::SimEstimatorKind::Para, 0});
    } else if (token.rfind("psm:", 0) == 0) {
      const int m = std::stoi(token.substr(4));
      if (m < 1) throw isopsm::DataError("psm needs M >= 1");
      specs.push_back({token, isopsm::SimEstimatorKind::Psm, m});
    } else {
      throw isopsm::DataError(
          "unknown estimator '" + token +
          "' (valid: pava-mle, pava-sse, para, psm:<M>)");
    }
  }
  if (specs.empty()) throw isopsm::DataError("no estimators selected");
  return specs;
}

// One full estimator pipeline from raw data to the ATT point estimate; used
// both for the point estimate and inside every bootstrap replicate.
double run_pipeline(const isopsm::ObservationSet& data, const EstimatorSpec& spec) {
  using isopsm::EffectTarget;
  switch (spec.kind) {
    case isopsm::SimEstimatorKind::PavaMle:
      return isopsm::multivariate_pava_estimators(data, isopsm::logistic_mle(data),
                                                  EffectTarget::Att)
          .value;
    case isopsm::SimEstimatorKind::PavaSse:
      return isopsm::multivariate_pava_estimators(data, isopsm::sse_fit(data),
                                                  EffectTarget::Att)
          .value;
    case isopsm::SimEstimatorKind::Para:
      return isopsm::para_estimators(
                 data, [](double t) { return isopsm::logistic_cdf(t); },
                 isopsm::fit_logistic(data), EffectTarget::Att)
          .value;
    default: {
      auto fit = isopsm::fit_logistic(data);
      return isopsm::psm_m_att(data, isopsm::fitted_propensity(fit, data.x), spec.m)
          .value;
    }
  }
}

json full_estimate_json(const isopsm::ObservationSet& data,
                        const EstimatorSpec& spec) {
  using isopsm::EffectTarget;
  switch (spec.kind) {
    case isopsm::SimEstimatorKind::PavaMle: {
      auto index = isopsm::logistic_mle(data);
      auto est = isopsm::multivariate_pava_estimators(data, index, EffectTarget::Att);
      json j = isopsm::to_json(est);
      j["index"] = isopsm::to_json(index);
      return j;
    }
    case isopsm::SimEstimatorKind::PavaSse: {
      auto index = isopsm::sse_fit(data);
      auto est = isopsm::multivariate_pava_estimators(data, index, EffectTarget::Att);
      json j = isopsm::to_json(est);
      j["index"] = isopsm::to_json(index);
      return j;
    }
    case isopsm::SimEstimatorKind::Para: {
      auto est = isopsm::para_estimators(
          data, [](double t) { return isopsm::logistic_cdf(t); },
          isopsm::fit_logistic(data), EffectTarget::Att);
      return isopsm::to_json(est);
    }
    default: {
      auto fit = isopsm::fit_logistic(data);
      auto est = isopsm::psm_m_att(data, isopsm::fitted_propensity(fit, data.x),
                                   spec.m);
      json j = isopsm::to_json(est);
      j["M"] = spec.m;
      return j;
    }
  }
}

std::string att_report_csv(const json& report) {
  std::ostringstream out;
  out << "method,value,boot_sd,boot_q025,boot_q975,boot_mean,boot_B\n";
  for (const auto& est : report["estimates"]) {
    out << est["_key"].get<std::string>() << ","
        << (est.contains("value") ? isopsm::format_double(est["value"].get<double>())
                                  : std::string("NA"));
    if (est.contains("bootstrap")) {
      const auto& b = est["bootstrap"];
      out << "," << isopsm::format_double(b["sd"].get<double>()) << ","
          << isopsm::format_double(b["q025"].get<double>()) << ","
          << isopsm::format_double(b["q975"].get<double>()) << ","
          << isopsm::format_double(b["mean"].get<double>()) << ","
          << b["B"].get<int>();
    } else {
      out << ",,,,,";
    }
    out << "\n";
  }
  return out.str();
}

int cmd_att(const CommonArgs& args, bool bootstrap_required) {
  auto data = load(args);
  auto specs = parse_estimators(args.estimators);
  const int b = bootstrap_required && args.bootstrap_b == 0 ? 1000 : args.bootstrap_b;
  if (bootstrap_required && b < 2)
    throw isopsm::DataError("bootstrap needs --bootstrap B >= 2");

  json report;
  report["command"] = bootstrap_required ? "bootstrap" : "att";
  report["input"] = args.input;
  report["n"] = data.n();
  report["dim"] = data.dim();
  report["n_treated"] = data.n_treated();
  report["seed"] = args.seed;
  report["features"] = args.features;
  report["estimates"] = json::array();
  json errors = json::object();

  int successes = 0;
  bool numeric_failure = false;
  std::string first_error;
  for (const auto& spec : specs) {
    json entry;
    entry["_key"] = spec.name;
    try {
      entry.update(full_estimate_json(data, spec));
      if (b >= 2) {
        auto boot = isopsm::bootstrap(
            data, [&](const isopsm::ObservationSet& ds) { return run_pipeline(ds, spec); },
            b, args.seed);
        entry["bootstrap"] = isopsm::to_json(boot);
      }
      report["estimates"].push_back(entry);
      ++successes;
    } catch (const isopsm::Error& e) {
      errors[spec.name] = e.what();
      report["estimates"].push_back(entry);
      if (dynamic_cast<const isopsm::NumericError*>(&e)) numeric_failure = true;
      if (first_error.empty()) first_error = spec.name + ": " + e.what();
    }
  }
  report["errors"] = errors;
  if (successes == 0) {
    // per-method failures are surfaced in the report, but a run where every
    // method failed is itself a failure
    if (numeric_failure) throw isopsm::NumericError(first_error);
    throw isopsm::DataError(first_error);
  }

  if (args.format == "csv")
    write_output(args.out, att_report_csv(report));
  else
    write_output(args.out, report.dump(2) + "\n");
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  auto data = load(args);
  auto index = fit_index(data, args.index_method);
  auto step = isopsm::fit_step_propensity(data, data.x * index.beta);

  Eigen::VectorXi d_sorted(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    d_sorted[i] = data.d[step.perm.order[static_cast<std::size_t>(i)]];

  json report;
  report["command"] = "fit";
  report["input"] = args.input;
  report["n"] = data.n();
  report["dim"] = data.dim();
  report["n_treated"] = data.n_treated();
  report["features"] = args.features;
  report["index"] = isopsm::to_json(index);
  report["step"] = isopsm::to_json(step);
  report["balance_residual"] =
      isopsm::check_balance(step, d_sorted, [](double p) { return p; });
  write_output(args.out, report.dump(2) + "\n");
  return 0;
}

int cmd_export_steps(const CommonArgs& args) {
  auto data = load(args);
  auto index = fit_index(data, args.index_method);
  auto step = isopsm::fit_step_propensity(data, data.x * index.beta);
  auto logit = isopsm::fit_logistic(data);
  Eigen::VectorXd para = isopsm::fitted_propensity(logit, data.x);

  std::ostringstream out;
  out << "index,pava,logistic\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::Index unit = step.perm.order[static_cast<std::size_t>(i)];
    out << isopsm::format_double(step.perm.key[i]) << ","
        << isopsm::format_double(step.fitted[i]) << ","
        << isopsm::format_double(para[unit]) << "\n";
  }
  write_output(args.out, out.str());
  return 0;
}

struct SimulateArgs {
  int model = 0;  // 0 = both
  int a = 0;      // 0 = both
  int b = 2;      // 2 = all of {1, 0, -1}
  std::string link = "logistic";
  int n = 500;
  int reps = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
};

int cmd_simulate(const SimulateArgs& args) {
  std::vector<isopsm::Link> links;
  if (args.link == "logistic")
    links = {isopsm::Link::Logistic};
  else if (args.link == "probit")
    links = {isopsm::Link::Probit};
  else if (args.link == "both")
    links = {isopsm::Link::Logistic, isopsm::Link::Probit};
  else
    throw isopsm::DataError("unknown link '" + args.link +
                            "' (valid: logistic, probit, both)");

  std::vector<isopsm::DgpConfig> configs;
  for (isopsm::Link link : links)
    for (int model : {1, 2})
      for (int a : {1, 2})
        for (int b : {1, 0, -1}) {
          if (args.model != 0 && model != args.model) continue;
          if (args.a != 0 && a != args.a) continue;
          if (args.b != 2 && b != args.b) continue;
          isopsm::DgpConfig c;
          c.model = model;
          c.a = a;
          c.b = b;
          c.link = link;
          c.n = args.n;
          configs.push_back(c);
        }
  if (configs.empty()) throw isopsm::DataError("no configurations selected");

  auto estimators = isopsm::default_estimators();
  auto report = isopsm::run_study(configs, estimators, args.reps, args.seed);

  std::ostringstream csv;
  std::vector<std::string> order;
  for (const auto& est : estimators) order.push_back(est.name());
  isopsm::write_mc_report_csv(csv, report, order);
  json j = isopsm::to_json(report);
  j["command"] = "simulate";

  if (args.out.empty() || args.out == "-") {
    // stdout gets the requested format only
    write_output(args.out, args.format == "csv" ? csv.str() : j.dump(2) + "\n");
  } else {
    // a file base path gets both the table CSV and the JSON with cell SEs
    write_output(args.out + ".csv", csv.str());
    write_output(args.out + ".json", j.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuning-parameter-free propensity score matching toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  SimulateArgs sim;

  auto add_common = [&](CLI::App* cmd, bool with_estimators) {
    cmd->add_option("--input", common.input, "input CSV (y,d,x1..xd)");
    cmd->add_option("--out", common.out, "output path (default: stdout)");
    cmd->add_option("--format", common.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", common.seed, "RNG seed");
    cmd->add_option("--features", common.features, "raw|quadratic")
        ->check(CLI::IsMember({"raw", "quadratic"}));
    if (with_estimators)
      cmd->add_option("--estimators", common.estimators,
                      "comma list: pava-mle,pava-sse,para,psm:<M>");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit the index and step propensity");
  add_common(fit, false);
  fit->add_option("--index-method", common.index_method, "mle|sse")
      ->check(CLI::IsMember({"mle", "sse"}));

  CLI::App* att = app.add_subcommand("att", "point estimates with optional bootstrap");
  add_common(att, true);
  att->add_option("--bootstrap", common.bootstrap_b, "bootstrap replicate count");

  CLI::App* boot = app.add_subcommand("bootstrap", "estimates with percentile intervals");
  add_common(boot, true);
  boot->add_option("--bootstrap", common.bootstrap_b,
                   "bootstrap replicate count (default 1000)");

  CLI::App* steps = app.add_subcommand("export-steps",
                                       "step function and parametric overlay CSV");
  add_common(steps, false);
  steps->add_option("--index-method", common.index_method, "mle|sse")
      ->check(CLI::IsMember({"mle", "sse"}));

  CLI::App* simulate = app.add_subcommand("simulate", "run the benchmark study grid");
  simulate->add_option("--model", sim.model, "1|2 (default: both)")
      ->check(CLI::Range(0, 2));
  simulate->add_option("--a", sim.a, "1|2 (default: both)")->check(CLI::Range(0, 2));
  simulate->add_option("--b", sim.b, "1|0|-1 (default: all)")
      ->check(CLI::Range(-1, 2));
  simulate->add_option("--link", sim.link, "logistic|probit|both")
      ->check(CLI::IsMember({"logistic", "probit", "both"}));
  simulate->add_option("--n", sim.n, "sample size per replicate");
  simulate->add_option("--reps", sim.reps, "replicates per configuration");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--out", sim.out, "output path (default: stdout)");
  simulate->add_option("--format", sim.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit)) return cmd_fit(common);
    if (app.got_subcommand(att)) return cmd_att(common, false);
    if (app.got_subcommand(boot)) return cmd_att(common, true);
    if (app.got_subcommand(steps)) return cmd_export_steps(common);
    if (app.got_subcommand(simulate)) return cmd_simulate(sim);
  } catch (const isopsm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const isopsm::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
