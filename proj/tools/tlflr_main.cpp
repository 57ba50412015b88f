#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "tlflr/io.hpp"
#include "tlflr/parallel.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace tlflr {

namespace {

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

KernelSpec parse_kernel(const json& j, const std::string& where) {
  check_keys(j, {"type", "decay", "truncation", "nu", "rho", "lengthscale",
                 "period", "rate", "domain"},
             where);
  if (!j.contains("type")) throw ConfigError(where + ": missing 'type'");
  const std::string type = j.at("type").get<std::string>();
  KernelSpec k;
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    if (!d.is_array() || d.size() != 2)
      throw ConfigError(where + ".domain: expected [lo, hi]");
    k.domain = {num(d[0], where), num(d[1], where)};
  }
  if (type == "eigen_expansion") {
    EigenExpansionKernel v;
    if (j.contains("decay")) v.decay = num(j.at("decay"), where + ".decay");
    if (j.contains("truncation"))
      v.truncation = integer(j.at("truncation"), where + ".truncation");
    k.variant = v;
  } else if (type == "matern") {
    MaternKernel v;
    if (j.contains("nu")) {
      const double nu = num(j.at("nu"), where + ".nu");
      if (nu == 0.5)
        v.nu = MaternNu::Half;
      else if (nu == 1.5)
        v.nu = MaternNu::ThreeHalves;
      else if (nu == 2.5)
        v.nu = MaternNu::FiveHalves;
      else
        throw ConfigError(where + ".nu: must be 0.5, 1.5 or 2.5");
    }
    if (j.contains("rho")) v.rho = num(j.at("rho"), where + ".rho");
    k.variant = v;
  } else if (type == "gaussian") {
    GaussianKernel v;
    if (j.contains("rho")) v.rho = num(j.at("rho"), where + ".rho");
    k.variant = v;
  } else if (type == "periodic") {
    PeriodicKernel v;
    if (j.contains("lengthscale"))
      v.lengthscale = num(j.at("lengthscale"), where + ".lengthscale");
    if (j.contains("period")) v.period = num(j.at("period"), where + ".period");
    k.variant = v;
  } else if (type == "ou") {
    OrnsteinUhlenbeckKernel v;
    if (j.contains("rate")) v.rate = num(j.at("rate"), where + ".rate");
    k.variant = v;
  } else if (type == "wiener") {
    k.variant = WienerKernel{};
  } else {
    throw ConfigError(where + ": unknown kernel type '" + type + "'");
  }
  validate_kernel(k);
  return k;
}

json kernel_to_json(const KernelSpec& k) {
  json j;
  j["type"] = kernel_name(k);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EigenExpansionKernel>) {
          j["decay"] = v.decay;
          j["truncation"] = v.truncation;
        } else if constexpr (std::is_same_v<T, MaternKernel>) {
          j["nu"] = v.nu == MaternNu::Half          ? 0.5
                    : v.nu == MaternNu::ThreeHalves ? 1.5
                                                    : 2.5;
          j["rho"] = v.rho;
        } else if constexpr (std::is_same_v<T, GaussianKernel>) {
          j["rho"] = v.rho;
        } else if constexpr (std::is_same_v<T, PeriodicKernel>) {
          j["lengthscale"] = v.lengthscale;
          j["period"] = v.period;
        } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeckKernel>) {
          j["rate"] = v.rate;
        }
      },
      k.variant);
  j["domain"] = {k.domain.lo, k.domain.hi};
  return j;
}

LambdaRule parse_lambda_rule(const json& j, const std::string& where) {
  check_keys(j, {"type", "lambda1", "lambda2", "r", "pre_c1", "pre_c2",
                 "pre_grid", "folds"},
             where);
  if (!j.contains("type")) throw ConfigError(where + ": missing 'type'");
  const std::string type = j.at("type").get<std::string>();
  LambdaRule rule;
  if (type == "fixed") {
    rule.kind = LambdaRule::Kind::Fixed;
    if (j.contains("lambda1")) rule.lambda1 = num(j.at("lambda1"), where);
    if (j.contains("lambda2")) rule.lambda2 = num(j.at("lambda2"), where);
    if (!(rule.lambda1 > 0) || !(rule.lambda2 > 0))
      throw ConfigError(where + ": fixed lambdas must be positive");
  } else if (type == "theorem1" || type == "cv" || type == "gcv") {
    rule.kind = type == "theorem1" ? LambdaRule::Kind::Theorem1
                : type == "cv"     ? LambdaRule::Kind::CV
                                   : LambdaRule::Kind::GCV;
    if (j.contains("r")) rule.r = num(j.at("r"), where + ".r");
    if (j.contains("pre_c1")) rule.pre_c1 = num(j.at("pre_c1"), where);
    if (j.contains("pre_c2")) rule.pre_c2 = num(j.at("pre_c2"), where);
    if (j.contains("folds")) rule.folds = integer(j.at("folds"), where);
    if (j.contains("pre_grid")) {
      for (const auto& v : j.at("pre_grid"))
        rule.pre_grid.push_back(num(v, where + ".pre_grid"));
    }
    if (!(rule.r > 0)) throw ConfigError(where + ": r must be positive");
  } else {
    throw ConfigError(where + ": unknown lambda rule '" + type + "'");
  }
  return rule;
}

ScenarioConfig parse_scenario(const json& j, const std::string& where) {
  check_keys(j,
             {"beta_scenario", "h", "L", "transferable_ids",
              "transferable_count", "n0", "nl", "grid_points", "noise_sd",
              "target_cov", "source_cov", "negative_variant",
              "series_truncation"},
             where);
  ScenarioConfig sc;
  if (j.contains("beta_scenario"))
    sc.beta_scenario = integer(j.at("beta_scenario"), where);
  if (j.contains("h")) sc.h = num(j.at("h"), where + ".h");
  if (j.contains("L")) sc.L = integer(j.at("L"), where + ".L");
  if (j.contains("transferable_ids")) {
    if (j.contains("transferable_count"))
      throw ConfigError(where + ": give transferable_ids or _count, not both");
    for (const auto& v : j.at("transferable_ids"))
      sc.transferable_ids.push_back(integer(v, where + ".transferable_ids"));
  } else if (j.contains("transferable_count")) {
    const int c = integer(j.at("transferable_count"), where);
    for (int l = 1; l <= c; ++l) sc.transferable_ids.push_back(l);
  }
  if (j.contains("n0")) sc.n0 = integer(j.at("n0"), where + ".n0");
  if (j.contains("nl")) sc.nl = integer(j.at("nl"), where + ".nl");
  if (j.contains("grid_points"))
    sc.grid_points = integer(j.at("grid_points"), where);
  if (j.contains("noise_sd")) sc.noise_sd = num(j.at("noise_sd"), where);
  if (j.contains("target_cov"))
    sc.target_cov = parse_kernel(j.at("target_cov"), where + ".target_cov");
  if (j.contains("source_cov"))
    sc.source_cov = parse_kernel(j.at("source_cov"), where + ".source_cov");
  if (j.contains("negative_variant")) {
    const std::string v = j.at("negative_variant").get<std::string>();
    if (v == "ou")
      sc.negative_variant = NegativeVariant::OrnsteinUhlenbeck;
    else if (v == "wiener")
      sc.negative_variant = NegativeVariant::Wiener;
    else
      throw ConfigError(where + ".negative_variant: 'ou' or 'wiener'");
  }
  if (j.contains("series_truncation"))
    sc.series_truncation = integer(j.at("series_truncation"), where);
  return sc;
}

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return j;
}

json beta_to_json(const BetaEstimate& b) {
  json j;
  j["grid"] = std::vector<double>(b.grid.data(), b.grid.data() + b.grid.size());
  j["values"] =
      std::vector<double>(b.values.data(), b.values.data() + b.values.size());
  return j;
}

double mse(const VectorXd& pred, const VectorXd& y) {
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

// ---- simulate ---------------------------------------------------------

int cmd_simulate(const json& cfg, const std::string& out_dir, int threads) {
  check_keys(cfg,
             {"experiment", "seed", "threads", "kernel", "lambda_rule",
              "scenario", "n_mc", "reps", "heatmap", "mixture", "rate_slope",
              "out_prefix"},
             "config");
  if (!cfg.contains("experiment"))
    throw ConfigError("config: missing 'experiment'");
  const std::string experiment = cfg.at("experiment").get<std::string>();

  ExperimentConfig ec;
  if (cfg.contains("seed")) ec.seed = cfg.at("seed").get<std::uint64_t>();
  if (cfg.contains("kernel"))
    ec.kernel = parse_kernel(cfg.at("kernel"), "config.kernel");
  if (cfg.contains("lambda_rule"))
    ec.lambda_rule = parse_lambda_rule(cfg.at("lambda_rule"), "config.lambda_rule");
  if (cfg.contains("scenario"))
    ec.scenario = parse_scenario(cfg.at("scenario"), "config.scenario");
  if (cfg.contains("n_mc")) ec.n_mc = integer(cfg.at("n_mc"), "config.n_mc");
  if (cfg.contains("reps")) ec.reps = integer(cfg.at("reps"), "config.reps");
  ec.threads = threads;
  ec.scenario.seed = ec.seed;

  const std::string prefix =
      cfg.contains("out_prefix") ? cfg.at("out_prefix").get<std::string>()
                                 : experiment;
  fs::create_directories(out_dir);
  const std::string stem = (fs::path(out_dir) / prefix).string();
  const std::string config_hash = fnv1a_hex(cfg.dump());

  if (experiment == "export_scenario") {
    GeneratedScenario gen = generate_scenario(ec.scenario);
    std::vector<const TaskDataset*> tasks{&gen.target};
    for (const auto& s : gen.sources) tasks.push_back(&s);
    auto [curves_path, resp_path] = export_tasks_csv(stem + "_", tasks);
    json manifest;
    manifest["config_hash"] = config_hash;
    manifest["seed"] = ec.seed;
    manifest["curves_csv"] = curves_path;
    manifest["responses_csv"] = resp_path;
    manifest["true_target_beta"] = beta_to_json(gen.true_target_beta);
    std::ofstream mf(stem + "_manifest.json");
    mf << manifest.dump(2) << '\n';
    std::cout << "wrote " << curves_path << ", " << resp_path << "\n";
    return 0;
  }

  ExperimentResult result;
  if (experiment == "heatmap") {
    json sub = cfg.contains("heatmap") ? cfg.at("heatmap") : json::object();
    check_keys(sub, {"h_values", "s_sizes"}, "config.heatmap");
    std::vector<double> h_values;
    std::vector<int> s_sizes;
    for (const auto& v : sub.value("h_values", json::array({1.0, 40.0})))
      h_values.push_back(v.get<double>());
    for (const auto& v : sub.value("s_sizes", json::array({1, 15})))
      s_sizes.push_back(v.get<int>());
    result = run_heatmap_experiment(h_values, s_sizes, ec);
  } else if (experiment == "mixture") {
    json sub = cfg.contains("mixture") ? cfg.at("mixture") : json::object();
    check_keys(sub, {"s_sizes", "methods", "temperature", "M",
                     "eig_grid_size"},
               "config.mixture");
    std::vector<int> s_sizes;
    for (const auto& v : sub.value(
             "s_sizes", json::array({0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20})))
      s_sizes.push_back(v.get<int>());
    std::vector<std::string> methods;
    for (const auto& v :
         sub.value("methods", json::array({"oflr", "tlflr_true_s",
                                           "atlflr_star", "atlflr_ew"})))
      methods.push_back(v.get<std::string>());
    if (sub.contains("temperature"))
      ec.temperature = num(sub.at("temperature"), "config.mixture.temperature");
    if (sub.contains("M")) ec.M = integer(sub.at("M"), "config.mixture.M");
    if (sub.contains("eig_grid_size"))
      ec.eig_grid_size = integer(sub.at("eig_grid_size"), "config.mixture");
    result = run_mixture_experiment(s_sizes, methods, ec);
  } else if (experiment == "rate_slope") {
    json sub = cfg.contains("rate_slope") ? cfg.at("rate_slope") : json::object();
    check_keys(sub, {"n_values"}, "config.rate_slope");
    std::vector<int> n_values;
    for (const auto& v :
         sub.value("n_values", json::array({100, 200, 400, 800})))
      n_values.push_back(v.get<int>());
    result = run_rate_slope_experiment(n_values, ec);
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }

  result.config_hash = config_hash;
  std::ofstream csv(stem + "_result.csv");
  write_experiment_csv(csv, result);
  std::ofstream js(stem + "_result.json");
  js << experiment_json(result) << '\n';
  std::cout << "wrote " << stem << "_result.csv and .json\n";
  return 0;
}

// ---- fit --------------------------------------------------------------

int cmd_fit(const json& cfg, const std::vector<std::string>& curves_paths,
            const std::vector<std::string>& responses_paths,
            const std::string& target_task, const std::string& out_path) {
  check_keys(cfg,
             {"method", "kernel", "lambda_rule", "sources", "M",
              "eig_grid_size", "temperature", "eval_grid_points",
              "test_fraction", "seed"},
             "config");
  if (!cfg.contains("method")) throw ConfigError("config: missing 'method'");
  const std::string method = cfg.at("method").get<std::string>();
  const KernelSpec kernel =
      cfg.contains("kernel") ? parse_kernel(cfg.at("kernel"), "config.kernel")
                             : KernelSpec{EigenExpansionKernel{}, {}};
  const LambdaRule rule =
      cfg.contains("lambda_rule")
          ? parse_lambda_rule(cfg.at("lambda_rule"), "config.lambda_rule")
          : LambdaRule{};
  const int M = cfg.contains("M") ? integer(cfg.at("M"), "config.M") : 20;
  const int eig_grid =
      cfg.contains("eig_grid_size")
          ? integer(cfg.at("eig_grid_size"), "config.eig_grid_size")
          : 256;
  const double temperature =
      cfg.contains("temperature") ? num(cfg.at("temperature"), "config") : 1.0;
  const int eval_points =
      cfg.contains("eval_grid_points")
          ? integer(cfg.at("eval_grid_points"), "config.eval_grid_points")
          : 201;
  const double test_fraction =
      cfg.contains("test_fraction") ? num(cfg.at("test_fraction"), "config")
                                    : 0.0;
  const std::uint64_t seed =
      cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 1;
  if (test_fraction < 0 || test_fraction >= 1)
    throw ConfigError("config.test_fraction: need 0 <= f < 1");

  if (curves_paths.size() != responses_paths.size() || curves_paths.empty())
    throw ConfigError("need matching --curves/--responses pairs");
  std::vector<TaskDataset> tasks;
  for (std::size_t i = 0; i < curves_paths.size(); ++i) {
    auto batch = read_tasks_csv_files(curves_paths[i], responses_paths[i]);
    for (auto& t : batch) tasks.push_back(std::move(t));
  }

  const TaskDataset* target = nullptr;
  std::vector<const TaskDataset*> others;
  for (const auto& t : tasks) {
    if (t.task_id == target_task)
      target = &t;
    else
      others.push_back(&t);
  }
  if (target == nullptr)
    throw ArgumentError("target task '" + target_task + "' not found");

  std::vector<const TaskDataset*> sources = others;
  if (cfg.contains("sources")) {
    sources.clear();
    for (const auto& sid : cfg.at("sources")) {
      const std::string want = sid.get<std::string>();
      auto it = std::find_if(others.begin(), others.end(),
                             [&](const TaskDataset* t) {
                               return t->task_id == want;
                             });
      if (it == others.end())
        throw ArgumentError("source task '" + want + "' not found");
      sources.push_back(*it);
    }
  }

  // Seeded train/test split of the target.
  TaskDataset train = *target, test;
  if (test_fraction > 0) {
    const int n = static_cast<int>(target->size());
    const int n_test = static_cast<int>(test_fraction * n);
    if (n_test >= 1 && n - n_test >= 2) {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(seed, "test_split"));
      rng.shuffle(order);
      std::vector<int> test_idx(order.begin(), order.begin() + n_test);
      std::vector<int> train_idx(order.begin() + n_test, order.end());
      std::sort(test_idx.begin(), test_idx.end());
      std::sort(train_idx.begin(), train_idx.end());
      auto take = [&](const std::vector<int>& idx) {
        TaskDataset d;
        d.task_id = target->task_id;
        d.responses.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          d.curves.push_back(target->curves[idx[k]]);
          d.responses[static_cast<Eigen::Index>(k)] =
              target->responses[idx[k]];
        }
        return d;
      };
      train = take(train_idx);
      test = take(test_idx);
    }
  }

  json report;
  report["schema_version"] = 1;
  report["config_hash"] = fnv1a_hex(cfg.dump());
  report["method"] = method;
  report["kernel"] = kernel_to_json(kernel);
  report["seed"] = seed;
  report["target_task"] = target_task;
  {
    json sj = json::array();
    for (const auto* s : sources) sj.push_back(s->task_id);
    report["source_tasks"] = sj;
  }
  report["n_train"] = train.size();
  report["n_test"] = test.size();

  FitOptions opts;
  opts.eval_grid = default_eval_grid(kernel.domain, eval_points);

  VectorXd train_pred, test_pred;
  if (method == "oflr") {
    const double lambda = resolve_lambda_oflr(train, kernel, rule, seed);
    RidgeFit fit = fit_oflr(train, kernel, lambda, opts);
    report["lambda"] = lambda;
    report["intercept"] = fit.intercept;
    report["beta"] = beta_to_json(fit.beta_on_grid);
    train_pred = predict_batch(fit, train.curves);
    if (test.size() > 0) test_pred = predict_batch(fit, test.curves);
  } else if (method == "tlflr" || method == "pooled" || method == "naive") {
    std::vector<const TaskDataset*> use =
        (method == "tlflr" && cfg.contains("sources")) ? sources : others;
    const auto [l1, l2] = resolve_lambdas_tlflr(train, use, kernel, rule, seed);
    const TransferMode mode =
        method == "pooled" ? TransferMode::PooledOnly : TransferMode::Full;
    TransferFit fit = fit_tlflr(train, use, kernel, l1, l2, mode, opts);
    report["lambda1"] = l1;
    report["lambda2"] = l2;
    report["intercept"] = fit.combined_intercept;
    report["beta"] = beta_to_json(fit.combined_beta);
    report["beta_transfer"] = beta_to_json(fit.transfer_fit.beta_on_grid);
    report["beta_debias"] = beta_to_json(fit.debias_fit.beta_on_grid);
    train_pred = predict_batch(fit, train.curves);
    if (test.size() > 0) test_pred = predict_batch(fit, test.curves);
  } else if (method == "atlflr_star" || method == "atlflr_ew") {
    if (sources.empty())
      throw ArgumentError("aggregation methods need at least one source");
    AggregationMethod am{method == "atlflr_star"
                             ? AggregationMethod::Kind::SparseStar
                             : AggregationMethod::Kind::ExpWeights,
                         temperature};
    AggregateOptions aopts;
    aopts.M = M;
    aopts.eig_grid_size = eig_grid;
    aopts.eval_grid = opts.eval_grid;
    AggregationResult agg =
        fit_atlflr(train, sources, kernel, rule, am, seed, aopts);
    report["intercept"] = agg.aggregated_intercept;
    report["beta"] = beta_to_json(agg.aggregated_beta);
    report["weights"] = std::vector<double>(
        agg.weights.data(), agg.weights.data() + agg.weights.size());
    report["support"] = agg.support;
    report["candidate_distances"] = agg.candidates.distances;
    report["candidate_ranking"] = agg.candidates.ranking;
    report["holdout_risks"] = std::vector<double>(
        agg.holdout_risks.data(),
        agg.holdout_risks.data() + agg.holdout_risks.size());
    // Linear predictor: alpha + <x, beta> by quadrature on the eval grid.
    auto predict_beta = [&](const TaskDataset& d) {
      VectorXd out(d.size());
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        VectorXd bv = interp_linear(agg.aggregated_beta, d.curves[i].grid);
        out[i] = agg.aggregated_intercept +
                 l2_inner_on_grid(d.curves[i].values, bv,
                                  quad_weights(d.curves[i].grid));
      }
      return out;
    };
    train_pred = predict_beta(train);
    if (test.size() > 0) test_pred = predict_beta(test);
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }

  report["train_mse"] = mse(train_pred, train.responses);
  if (test.size() > 0) report["test_mse"] = mse(test_pred, test.responses);

  if (out_path.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    if (fs::path(out_path).has_parent_path())
      fs::create_directories(fs::path(out_path).parent_path());
    std::ofstream f(out_path);
    if (!f) throw ArgumentError("cannot open " + out_path);
    f << report.dump(2) << '\n';
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

// ---- ingest-prices ----------------------------------------------------

int cmd_ingest(const std::string& prices_path, const std::string& month1,
               const std::string& month2, const std::string& out_dir) {
  std::ifstream pf(prices_path);
  if (!pf) throw ArgumentError("cannot open " + prices_path);
  auto rows = read_prices_csv(pf, prices_path);
  IngestSummary summary;
  auto sectors = ingest_prices(rows, month1, month2, summary);
  if (sectors.empty())
    throw ArgumentError("no tickers had complete data for both months");

  fs::create_directories(out_dir);
  std::vector<const TaskDataset*> ptrs;
  std::vector<std::vector<std::string>> ids;
  for (const auto& s : sectors) ptrs.push_back(&s);
  const std::string stem = (fs::path(out_dir) / "mcr_").string();
  auto [curves_path, resp_path] = export_tasks_csv(stem, ptrs);
  (void)ids;

  json summary_json;
  summary_json["tickers_used"] = summary.tickers_used;
  summary_json["tickers_skipped"] = summary.tickers_skipped;
  summary_json["skipped"] = summary.skipped;
  summary_json["months"] = {month1, month2};
  json sector_sizes = json::object();
  for (const auto& s : sectors)
    sector_sizes[s.task_id] = s.size();
  summary_json["sector_sizes"] = sector_sizes;
  summary_json["curves_csv"] = curves_path;
  summary_json["responses_csv"] = resp_path;
  std::ofstream sf(stem + "summary.json");
  sf << summary_json.dump(2) << '\n';
  std::cout << "wrote " << curves_path << " (" << summary.tickers_used
            << " tickers, " << summary.tickers_skipped << " skipped)\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"RKHS transfer learning for scalar-on-function regression"};
  app.require_subcommand(1);

  std::string config_path, out = ".", target_task, out_path;
  std::vector<std::string> curves_paths, responses_paths;
  std::string prices_path, month1, month2;
  int threads = 0;
  std::int64_t seed_override = -1;

  auto* sim = app.add_subcommand("simulate", "run synthetic experiments");
  sim->add_option("--config", config_path, "JSON experiment config")
      ->required();
  sim->add_option("--out", out, "output directory");
  sim->add_option("--seed", seed_override, "override config seed");
  sim->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* fit = app.add_subcommand("fit", "fit models on CSV data");
  fit->add_option("--config", config_path, "JSON fit config")->required();
  fit->add_option("--curves", curves_paths, "curve CSV (repeatable)")
      ->required();
  fit->add_option("--responses", responses_paths,
                  "response CSV (repeatable, zipped with --curves)")
      ->required();
  fit->add_option("--target-task", target_task, "task_id of the target")
      ->required();
  fit->add_option("--out", out_path, "report path (default: stdout)");
  fit->add_option("--seed", seed_override, "override config seed");
  fit->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* ingest = app.add_subcommand("ingest-prices",
                                    "build MCR curves from daily prices");
  ingest->add_option("--prices", prices_path, "prices CSV")->required();
  ingest->add_option("--month1", month1, "predictor month YYYY-MM")
      ->required();
  ingest->add_option("--month2", month2, "response month YYYY-MM")->required();
  ingest->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (threads <= 0) threads = static_cast<int>(default_threads());

  try {
    if (sim->parsed()) {
      json cfg = load_config(config_path);
      if (seed_override >= 0) cfg["seed"] = seed_override;
      return cmd_simulate(cfg, out, threads);
    }
    if (fit->parsed()) {
      json cfg = load_config(config_path);
      if (seed_override >= 0) cfg["seed"] = seed_override;
      return cmd_fit(cfg, curves_paths, responses_paths, target_task,
                     out_path);
    }
    return cmd_ingest(prices_path, month1, month2, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace
}  // namespace tlflr

int main(int argc, char** argv) { return tlflr::run(argc, argv); }
