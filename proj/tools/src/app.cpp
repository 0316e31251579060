#include "app.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include <bfstab/corpus.hpp>
#include <bfstab/errors.hpp>
#include <bfstab/prekopa.hpp>
#include <bfstab/report.hpp>
#include <bfstab/transport1d.hpp>

#include "measure_spec.hpp"

namespace bfstab::cli {
namespace {

const std::vector<double> kPlLambdas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

std::string label(std::string_view name, double value) { return std::string(name) + "=" + format_number(value); }

nlohmann::ordered_json document(const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["tool"] = "bfstab";
  doc["version"] = BFSTAB_VERSION;
  doc["command"] = cfg.command;
  doc["config"] = resolved_config(cfg);
  return doc;
}

Outcome report_outcome(const RunConfig& cfg, std::vector<DeficitReport> reports,
                       std::optional<nlohmann::ordered_json> extra = std::nullopt, bool extra_ok = true) {
  Status status = combine(reports);
  if (!extra_ok && status != Status::fail) status = Status::fail;
  Outcome o;
  o.exit_code = exit_code(status);
  if (cfg.format == "csv") {
    o.artifact = to_csv(reports);
    return o;
  }
  auto doc = document(cfg);
  doc["status"] = std::string(to_string(status));
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) doc["reports"].push_back(to_json(r));
  if (extra) doc.update(*extra);
  o.artifact = doc.dump(2) + "\n";
  return o;
}

TalagrandMode parse_mode(const std::string& mode, const Measure& m) {
  if (mode == "1d") return TalagrandMode::one_d;
  if (mode == "product") return TalagrandMode::product;
  if (mode == "sampled-nd") return TalagrandMode::sampled_nd;
  if (!mode.empty()) throw ValidationError("--mode: expected 1d, product or sampled-nd");
  if (dimension(m) == 1) return TalagrandMode::one_d;
  if (as_product(std::get<GaussianMixtureND>(m))) return TalagrandMode::product;
  return TalagrandMode::sampled_nd;
}

MeasureSpec to_measure_spec(const Measure& m) {
  if (const auto* d = std::get_if<Density1D>(&m)) return *d;
  return std::get<GaussianMixtureND>(m);
}

DeficitReport talagrand_for(const Measure& m, const std::string& mode, const VerifyOptions& opts) {
  return verify_talagrand(to_measure_spec(m), parse_mode(mode, m), opts);
}

DeficitReport theorem_for(const Measure& m, const std::string& theorem, const std::string& mode,
                          const VerifyOptions& opts) {
  if (theorem == "talagrand") return talagrand_for(m, mode, opts);
  const auto mix = as_mixture(m);
  if (theorem == "main") {
    if (const auto* d = std::get_if<Density1D>(&m)) return verify_thm_main(*d, opts);
    return verify_thm_main(*mix, opts);
  }
  if (theorem == "corollary") {
    if (!mix) throw ValidationError("--theorem corollary needs a Gaussian mixture measure");
    return verify_corollary(*mix, opts);
  }
  throw ValidationError("--theorem: expected main, corollary, talagrand or pl");
}

VerifyOptions case_options(const VerifyOptions& base, std::size_t index) {
  VerifyOptions o = base;
  o.seed = split_seed(base.seed, index);
  o.integration.seed = o.seed;
  return o;
}

std::vector<Task> suite_tasks(const RunConfig& cfg) {
  const VerifyOptions base = verify_options(cfg);
  std::vector<Task> tasks;
  auto add = [&](std::string id, auto fn) {
    const VerifyOptions opts = case_options(base, tasks.size());
    tasks.push_back({id, [id, fn, opts] {
                       DeficitReport r = fn(opts);
                       r.case_id = id;
                       return r;
                     }});
  };
  const auto& s = cfg.suite;
  const auto& th = cfg.theorem;
  if (s == "equality-cases") {
    for (const auto& c : equality_cases()) {
      if (th.empty() || th == "main")
        add(c.id, [m = c.mixture](const VerifyOptions& o) { return verify_thm_main(m, o); });
      if (th.empty() || th == "talagrand")
        add(c.id, [m = c.mixture](const VerifyOptions& o) {
          return verify_talagrand(m, m.dim() == 1 ? TalagrandMode::one_d : TalagrandMode::product, o);
        });
      if (th == "corollary")
        add(c.id, [m = c.mixture](const VerifyOptions& o) { return verify_corollary(m, o); });
    }
  } else if (s == "corpus") {
    const std::string theorem = th.empty() ? "main" : th;
    for (const auto& c : theorem_corpus(cfg.seed)) {
      if (theorem == "corollary" && c.mixture.dim() == 1) continue;
      if (theorem == "main")
        add(c.id, [m = c.mixture](const VerifyOptions& o) { return verify_thm_main(m, o); });
      else if (theorem == "corollary")
        add(c.id, [m = c.mixture](const VerifyOptions& o) { return verify_corollary(m, o); });
      else if (theorem == "talagrand")
        add(c.id, [m = c.mixture](const VerifyOptions& o) {
          return verify_talagrand(m, m.dim() == 1 ? TalagrandMode::one_d : TalagrandMode::sampled_nd, o);
        });
      else
        throw ValidationError("--suite corpus supports --theorem main, corollary or talagrand");
    }
  } else if (s == "product") {
    const auto h = GaussianMixture1D::gaussian(0.0, 2.0);
    for (int n = 1; n <= 3; ++n) {
      const auto m = product_power(h, n);
      const std::string id = "n" + std::to_string(n) + "-product-sigma2";
      if (th.empty() || th == "main") add(id, [m](const VerifyOptions& o) { return verify_thm_main(m, o); });
      if (th.empty() || th == "corollary")
        add(id, [m](const VerifyOptions& o) { return verify_corollary(m, o); });
    }
  } else if (s == "talagrand-1d") {
    int i = 0;
    for (const auto& m : random_mixtures_1d(30, cfg.seed)) {
      char id[32];
      std::snprintf(id, sizeof id, "n1-mix%02d", i++);
      add(id, [d = Density1D(m)](const VerifyOptions& o) { return verify_talagrand(d, TalagrandMode::one_d, o); });
    }
  } else if (s == "pl") {
    const std::vector<GFunction> gs{GFunction::constant(0.0), GFunction::linear(1.0),
                                    GFunction::quadratic(-0.25, 0.0), GFunction::sin_bump()};
    for (const auto& g : gs)
      for (double lambda : cfg.lambdas.empty() ? kPlLambdas : cfg.lambdas)
        add(g.name() + "/" + label("lambda", lambda),
            [g, lambda](const VerifyOptions& o) { return pl_deficit_check({g, lambda}, o); });
  } else {
    throw ValidationError("--suite: expected equality-cases, corpus, product, talagrand-1d or pl");
  }
  return tasks;
}

std::vector<Task> sweep_tasks(const RunConfig& cfg) {
  const VerifyOptions base = verify_options(cfg);
  std::vector<Task> tasks;
  auto add = [&](std::string id, std::function<DeficitReport(const VerifyOptions&)> fn) {
    const VerifyOptions opts = case_options(base, tasks.size());
    tasks.push_back({id, [id, fn, opts] {
                       DeficitReport r = fn(opts);
                       r.case_id = id;
                       return r;
                     }});
  };
  const std::string theorem = cfg.theorem.empty() ? "main" : cfg.theorem;
  if (cfg.family == "scaled-gaussian") {
    const auto values = cfg.values.empty() ? std::vector<double>{1.0, 1.5, 2.0} : cfg.values;
    for (double sigma : values) {
      if (!(sigma > 0.0)) throw ValidationError("--values: sigma must be positive");
      const Measure m = Density1D::gaussian(0.0, sigma * sigma);
      add(label("sigma", sigma), [m, theorem](const VerifyOptions& o) { return theorem_for(m, theorem, "", o); });
    }
  } else if (cfg.family == "extremal") {
    if (cfg.dim < 1 || cfg.dim > kMaxDimension) throw ValidationError("--dim must lie in [1, 8]");
    const auto values = cfg.values.empty() ? std::vector<double>{0.0, 1.0, 2.0} : cfg.values;
    for (double a : values) {
      Eigen::VectorXd shift = Eigen::VectorXd::Zero(cfg.dim);
      shift(0) = a;
      const Measure m = GaussianMixtureND::gaussian(shift, Eigen::MatrixXd::Identity(cfg.dim, cfg.dim));
      add(label("a", a), [m, theorem](const VerifyOptions& o) { return theorem_for(m, theorem, "", o); });
    }
  } else if (cfg.family == "pl") {
    const GFunction g = parse_g(cfg.g.empty() ? "quadratic:-0.25,0" : cfg.g);
    for (double lambda : cfg.values.empty() ? kPlLambdas : cfg.values)
      add(label("lambda", lambda), [g, lambda](const VerifyOptions& o) { return pl_deficit_check({g, lambda}, o); });
  } else {
    throw ValidationError("--family: expected scaled-gaussian, extremal or pl");
  }
  return tasks;
}

Outcome distance_outcome(const RunConfig& cfg) {
  Measure u = parse_measure(cfg.u, "u");
  Measure v = parse_measure(cfg.v, "v");
  // "std" takes the dimension of the other side.
  if (cfg.u == "std" && dimension(v) > 1) u = GaussianMixtureND::standard(dimension(v));
  if (cfg.v == "std" && dimension(u) > 1) v = GaussianMixtureND::standard(dimension(u));
  if (dimension(u) != dimension(v)) throw ValidationError("--u and --v have different dimensions");
  const VerifyOptions opts = verify_options(cfg);
  nlohmann::ordered_json result;
  if (dimension(u) == 1) {
    const auto d = bf_distance_detail(std::get<Density1D>(u), std::get<Density1D>(v), opts.quadrature);
    result["value"] = d.value;
    result["forward"] = d.forward;
    result["backward"] = d.backward;
    result["error_estimate"] = d.error;
    result["asymmetric"] = d.asymmetric;
  } else {
    const auto dn = dn_distance(*as_mixture(u), *as_mixture(v), opts.sphere, opts.quadrature);
    result["value"] = dn.value;
    result["argmax"] = std::vector<double>(dn.argmax.vector().data(), dn.argmax.vector().data() + dn.argmax.dim());
    result["coarse_max"] = dn.coarse_max;
    result["refined_gain"] = dn.refined_gain;
    result["error_estimate"] = dn.error;
    result["directions_evaluated"] = dn.directions_evaluated;
    result["skipped"] = dn.skipped;
    result["asymmetric"] = dn.asymmetry_warning;
    result["certificate"] = lower_bound_certificate(dn, opts.sphere).statement;
  }
  Outcome o;
  if (cfg.format == "csv") {
    std::string header, row;
    for (const auto& [k, val] : result.items()) {
      if (val.is_array()) continue;
      header += (header.empty() ? "" : ",") + k;
      row += (row.empty() ? "" : ",") +
             (val.is_number_float() ? format_number(val.get<double>())
                                    : val.is_string() ? "\"" + val.get<std::string>() + "\"" : val.dump());
    }
    o.artifact = header + "\n" + row + "\n";
  } else {
    auto doc = document(cfg);
    doc.update(result);
    o.artifact = doc.dump(2) + "\n";
  }
  return o;
}

Outcome pl_check_outcome(const RunConfig& cfg) {
  const GFunction g = parse_g(cfg.g.empty() ? "quadratic:-0.25,0" : cfg.g);
  const VerifyOptions base = verify_options(cfg);
  std::vector<Task> tasks;
  for (double lambda : cfg.lambdas.empty() ? kPlLambdas : cfg.lambdas) {
    const auto id = g.name() + "/" + label("lambda", lambda);
    tasks.push_back({id, [g, lambda, base, id] {
                       auto r = pl_deficit_check({g, lambda}, base);
                       r.case_id = id;
                       return r;
                     }});
  }
  auto reports = run_tasks(tasks, cfg.jobs);
  if (!cfg.diagnostics) return report_outcome(cfg, std::move(reports));
  const auto rows = lambda_limit_diagnostics(g);
  const bool contracts = residuals_contract(rows);
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["lambda"] = row.lambda;
    j["entropy_ratio"] = row.entropy_ratio;
    j["entropy_target"] = row.entropy_target;
    j["entropy_residual"] = row.entropy_residual();
    j["fisher_ratio"] = row.fisher_ratio;
    j["fisher_target"] = row.fisher_target;
    j["fisher_residual"] = row.fisher_residual();
    table.push_back(j);
  }
  nlohmann::ordered_json extra;
  extra["limit_diagnostics"] = {{"rows", table}, {"residuals_contract", contracts}};
  return report_outcome(cfg, std::move(reports), extra, contracts);
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

}  // namespace

int exit_code(Status overall) {
  switch (overall) {
    case Status::pass: return kExitPass;
    case Status::fail: return kExitFail;
    case Status::inconclusive: return kExitInconclusive;
  }
  return kExitFail;
}

nlohmann::ordered_json resolved_config(const RunConfig& cfg) {
  const VerifyOptions o = verify_options(cfg);
  nlohmann::ordered_json j;
  auto put_if = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  put_if("suite", cfg.suite);
  put_if("theorem", cfg.theorem);
  put_if("mode", cfg.mode);
  put_if("family", cfg.family);
  put_if("u", cfg.u);
  put_if("v", cfg.v);
  put_if("measure", cfg.measure);
  put_if("g", cfg.g);
  if (!cfg.values.empty()) j["values"] = cfg.values;
  if (!cfg.lambdas.empty()) j["lambdas"] = cfg.lambdas;
  if (cfg.command == "sweep" && cfg.family == "extremal") j["dim"] = cfg.dim;
  j["seed"] = cfg.seed;
  if (cfg.tol) j["tol"] = *cfg.tol;
  j["mc_budget"] = o.integration.mc_budget;
  j["slice_mc_budget"] = o.mc_budget;
  j["coarse_directions"] = o.sphere.coarse_count;
  j["refinement_iterations"] = o.sphere.refinement_iterations;
  j["restarts"] = o.sphere.restarts;
  j["angle_tolerance"] = o.sphere.tolerance;
  j["hermite_order"] = o.integration.hermite_order;
  j["slice_order"] = o.slice_order;
  j["quadrature_abs_tol"] = o.quadrature.abs_tol;
  j["slice_quadrature_abs_tol"] = o.slice_quadrature.abs_tol;
  j["w2_sample_size"] = o.sample_size;
  j["w2_repetitions"] = o.repetitions;
  j["format"] = cfg.format;
  return j;
}

VerifyOptions verify_options(const RunConfig& cfg) {
  VerifyOptions o;
  o.tolerance = cfg.tol;
  o.seed = cfg.seed;
  o.integration.seed = cfg.seed;
  if (cfg.mc_budget) {
    if (*cfg.mc_budget < 16) throw ValidationError("--mc-budget must be at least 16");
    o.integration.mc_budget = *cfg.mc_budget;
    o.mc_budget = *cfg.mc_budget;
  }
  if (cfg.directions) {
    if (*cfg.directions < 1) throw ValidationError("--directions must be positive");
    o.sphere.coarse_count = *cfg.directions;
  }
  return o;
}

std::vector<DeficitReport> run_tasks(const std::vector<Task>& tasks, int jobs) {
  std::vector<DeficitReport> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        out[i] = tasks[i].run();
      } catch (const std::exception& e) {
        DeficitReport r;
        r.case_id = tasks[i].case_id;
        r.theorem = "error";
        r.status = Status::inconclusive;
        r.method = std::string("error: ") + e.what();
        out[i] = std::move(r);
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (workers == 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  return out;
}

Outcome execute(const RunConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv") throw ValidationError("--format: expected json or csv");
  if (cfg.jobs < 1) throw ValidationError("--jobs must be positive");
  const auto& c = cfg.command;
  if (c == "distance") return distance_outcome(cfg);
  if (c == "deficit" || c == "talagrand") {
    const std::string theorem = c == "talagrand" ? "talagrand" : (cfg.theorem.empty() ? "main" : cfg.theorem);
    if (theorem == "pl") {
      RunConfig pl = cfg;
      pl.command = "pl-check";
      return pl_check_outcome(pl);
    }
    if (cfg.measure.empty()) throw ValidationError("--measure is required");
    const Measure m = parse_measure(cfg.measure);
    const VerifyOptions opts = verify_options(cfg);
    DeficitReport r = theorem_for(m, theorem, cfg.mode, opts);
    r.case_id = cfg.measure;
    return report_outcome(cfg, {r});
  }
  if (c == "verify") return report_outcome(cfg, run_tasks(suite_tasks(cfg), cfg.jobs));
  if (c == "sweep") return report_outcome(cfg, run_tasks(sweep_tasks(cfg), cfg.jobs));
  if (c == "pl-check") return pl_check_outcome(cfg);
  throw ValidationError("unknown command '" + c + "'");
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transport-distance deficits for Gaussian functional inequalities", "bfstab"};
  app.set_version_flag("--version", std::string(BFSTAB_VERSION));
  app.require_subcommand(1);
  RunConfig cfg;
  std::string values, lambdas;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Seed for every stochastic stage")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", cfg.tol, "Pass tolerance (default depends on the theorem)")->check(CLI::NonNegativeNumber);
    sub->add_option("--mc-budget", cfg.mc_budget, "Monte Carlo / QMC sample budget");
    sub->add_option("--directions", cfg.directions, "Coarse sphere lattice size");
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_option("--out", cfg.out, "Output file (written atomically); stdout when omitted");
  };
  const auto theorems = CLI::IsMember({"main", "corollary", "talagrand", "pl"});

  auto* distance = app.add_subcommand("distance", "Distance d (1-D) or d_n (mixtures in n-D)");
  distance->add_option("--u", cfg.u, "First density")->required();
  distance->add_option("--v", cfg.v, "Second density")->required();
  common(distance);

  auto* deficit = app.add_subcommand("deficit", "Deficit report for one measure");
  deficit->add_option("--measure", cfg.measure, "Density spec");
  deficit->add_option("--theorem", cfg.theorem, "main, corollary, talagrand or pl")->check(theorems);
  deficit->add_option("--mode", cfg.mode, "Talagrand mode: 1d, product or sampled-nd");
  deficit->add_option("--g", cfg.g, "Exponent g for --theorem pl");
  deficit->add_option("--lambda", lambdas, "Comma-separated lambdas for --theorem pl");
  common(deficit);

  auto* talagrand = app.add_subcommand("talagrand", "Talagrand deficit against d_n^2 / 2");
  talagrand->add_option("--measure", cfg.measure, "Density spec")->required();
  talagrand->add_option("--mode", cfg.mode, "1d, product or sampled-nd");
  common(talagrand);

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", cfg.suite, "equality-cases, corpus, product, talagrand-1d or pl")
      ->required()
      ->check(CLI::IsMember({"equality-cases", "corpus", "product", "talagrand-1d", "pl"}));
  verify->add_option("--theorem", cfg.theorem, "Restrict to one theorem")->check(theorems);
  verify->add_option("--lambda", lambdas, "Comma-separated lambdas for the pl suite");
  common(verify);

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep, one row per grid point");
  sweep->add_option("--family", cfg.family, "scaled-gaussian, extremal or pl")
      ->required()
      ->check(CLI::IsMember({"scaled-gaussian", "extremal", "pl"}));
  sweep->add_option("--values", values, "Comma-separated parameter values");
  sweep->add_option("--theorem", cfg.theorem, "Theorem for density families")->check(theorems);
  sweep->add_option("--dim", cfg.dim, "Dimension for the extremal family")->capture_default_str();
  sweep->add_option("--g", cfg.g, "Exponent g for the pl family");
  common(sweep);

  auto* pl = app.add_subcommand("pl-check", "Quantitative Prekopa-Leindler check");
  pl->add_option("--g", cfg.g, "const:b, linear:a,b, quadratic:q,a,b or sin-bump");
  pl->add_option("--lambda", lambdas, "Comma-separated lambdas");
  pl->add_flag("--diagnostics", cfg.diagnostics, "Append the small-lambda expansion table");
  common(pl);

  bool format_given = false;
  try {
    app.parse(argc, argv);
    for (auto* sub : app.get_subcommands()) {
      cfg.command = sub->get_name();
      format_given = sub->count("--format") > 0;
    }
    if (cfg.command == "sweep" && !format_given) cfg.format = "csv";
    if (!values.empty()) cfg.values = parse_list(values, "--values");
    if (!lambdas.empty()) cfg.lambdas = parse_list(lambdas, "--lambda");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForVersion&) {
    out << BFSTAB_VERSION << "\n";
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const Outcome o = execute(cfg);
    if (cfg.out.empty())
      out << o.artifact;
    else
      write_atomically(cfg.out, o.artifact);
    return o.exit_code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bfstab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bfstab::cli
