// geomort: batch front end for the county mortality toolkit.
//
// One subcommand per pipeline stage. Every artifact-producing run writes a
// manifest (resolved config, its hash, seeds, inputs, outputs) so the run
// can be reproduced; reruns with the same config and inputs are
// byte-identical. Exit codes: 1 configuration error, 2 data error,
// 3 numerical failure.

#include <CLI11.hpp>

#include "geomort/anomaly.hpp"
#include "geomort/autoenc.hpp"
#include "geomort/benchmark.hpp"
#include "geomort/common.hpp"
#include "geomort/dist.hpp"
#include "geomort/gbt.hpp"
#include "geomort/geojson.hpp"
#include "geomort/impute.hpp"
#include "geomort/io.hpp"
#include "geomort/panel.hpp"
#include "geomort/region.hpp"
#include "geomort/synth.hpp"
#include "geomort/temporal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace geomort;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot open " + path + " for writing");
  out << content;
}

// Resolves each setting as flag > (out dir only: GEOMORT_OUT) > config file
// > built-in default, and remembers the outcome for the manifest.
struct Run {
  CLI::App* cmd = nullptr;
  std::map<std::string, std::string> file_cfg;
  std::map<std::string, std::string> resolved;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> notes;
  std::string out_dir;

  void load(CLI::App* c, const std::string& config_path) {
    cmd = c;
    if (!config_path.empty()) {
      file_cfg = read_config_file(config_path);
      resolved["config"] = config_path;
    }
  }

  bool given(const char* key) const { return cmd->count(std::string("--") + key) > 0; }

  const std::string* from_file(const char* key) const {
    auto it = file_cfg.find(key);
    return it == file_cfg.end() ? nullptr : &it->second;
  }

  std::string str(const char* key, std::string cli_value) {
    if (!given(key)) {
      if (const std::string* v = from_file(key)) cli_value = *v;
    }
    resolved[key] = cli_value;
    return cli_value;
  }

  std::string required_path(const char* key, const std::string& cli_value) {
    std::string v = str(key, cli_value);
    if (v.empty()) fail(Errc::bad_config, std::string("--") + key + " is required");
    inputs.push_back(v);
    return v;
  }

  double num(const char* key, double cli_value) {
    if (!given(key)) {
      if (const std::string* s = from_file(key)) {
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), cli_value);
        if (ec != std::errc() || p != s->data() + s->size()) {
          fail(Errc::bad_config, std::string("config key ") + key + ": bad number '" + *s + "'");
        }
      }
    }
    resolved[key] = fmt_full(cli_value);
    return cli_value;
  }

  long long integer(const char* key, long long cli_value) {
    if (!given(key)) {
      if (const std::string* s = from_file(key)) {
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), cli_value);
        if (ec != std::errc() || p != s->data() + s->size()) {
          fail(Errc::bad_config, std::string("config key ") + key + ": bad integer '" + *s + "'");
        }
      }
    }
    resolved[key] = std::to_string(cli_value);
    return cli_value;
  }

  std::uint64_t uinteger(const char* key, std::uint64_t cli_value) {
    if (!given(key)) {
      if (const std::string* s = from_file(key)) {
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), cli_value);
        if (ec != std::errc() || p != s->data() + s->size()) {
          fail(Errc::bad_config, std::string("config key ") + key + ": bad integer '" + *s + "'");
        }
      }
    }
    resolved[key] = std::to_string(cli_value);
    return cli_value;
  }

  bool flag(const char* key, bool cli_value) {
    if (!given(key)) {
      if (const std::string* s = from_file(key)) cli_value = (*s == "1" || *s == "true");
    }
    resolved[key] = cli_value ? "true" : "false";
    return cli_value;
  }

  std::vector<int> int_list(const char* key, std::vector<int> cli_value) {
    if (!given(key)) {
      if (const std::string* s = from_file(key)) {
        cli_value.clear();
        std::stringstream ss(*s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (!tok.empty()) cli_value.push_back(std::stoi(tok));
        }
      }
    }
    std::string joined;
    for (int v : cli_value) {
      if (!joined.empty()) joined += ',';
      joined += std::to_string(v);
    }
    resolved[key] = joined;
    return cli_value;
  }

  void resolve_out(std::string cli_value) {
    if (!given("out")) {
      if (const char* env = std::getenv("GEOMORT_OUT"); env && *env) {
        cli_value = env;
      } else if (const std::string* v = from_file("out")) {
        cli_value = *v;
      }
    }
    resolved["out"] = cli_value;
    out_dir = cli_value;
    fs::create_directories(out_dir);
  }

  std::string input(const std::string& path) {
    inputs.push_back(path);
    return path;
  }

  std::string artifact(const std::string& name) {
    std::string p = out_dir + "/" + name;
    outputs.push_back(p);
    return p;
  }

  void manifest(const std::string& command) {
    write_manifest(out_dir + "/manifest_" + command + ".json", command, resolved, inputs,
                   outputs, seeds, notes);
  }
};

RegionGraph load_graph_for(Run& run, const std::string& adjacency, const std::string& centroids,
                           int island_k) {
  RegionGraph graph = load_graph_files(adjacency, centroids);
  bool any_island = false;
  for (int i = 0; i < graph.size(); ++i) any_island = any_island || graph.is_island(i);
  if (any_island) graph = attach_island_neighbors(std::move(graph), island_k);
  run.resolved["island-k"] = std::to_string(island_k);
  return graph;
}

void check_complete_years(const RatePanel& panel, const std::string& what) {
  for (int y = panel.first_year; y <= panel.last_year(); ++y) {
    if (!panel.field(y).complete()) {
      fail(Errc::incomplete_input,
           what + " has missing values in " + std::to_string(y) + "; impute first");
    }
  }
}

// ---------------------------------------------------------------- synth ----

struct SynthOpts {
  std::string config, out = "out";
  SynthSpec spec;
};

void cmd_synth(Run& run, CLI::App* cmd, SynthOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  SynthSpec s;
  s.regions = static_cast<int>(run.integer("regions", o.spec.regions));
  s.cols = static_cast<int>(run.integer("cols", o.spec.cols));
  s.islands = static_cast<int>(run.integer("islands", o.spec.islands));
  s.first_year = static_cast<int>(run.integer("first-year", o.spec.first_year));
  s.years = static_cast<int>(run.integer("years", o.spec.years));
  s.seed = run.uinteger("seed", o.spec.seed);
  s.zero_fraction = run.num("zero-fraction", o.spec.zero_fraction);
  s.censor_fraction = run.num("censor-fraction", o.spec.censor_fraction);
  s.feature_missing = run.num("feature-missing", o.spec.feature_missing);
  run.seeds.push_back(s.seed);

  SynthData d = make_synthetic(s);
  write_adjacency_csv(run.artifact("adjacency.csv"), d.graph);
  write_centroid_csv(run.artifact("centroids.csv"), d.graph);
  write_rates_csv(run.artifact("rates_truth.csv"), d.truth);
  write_rates_csv(run.artifact("rates_censored.csv"), d.censored);
  for (const CensorMask& m : d.masks) {
    write_mask_csv(run.artifact("mask_" + std::to_string(m.year) + ".csv"), m);
  }
  write_features_csv(run.artifact("covariates.csv"), d.covariates);
  write_features_csv(run.artifact("covariates_full.csv"), d.covariates_full);
  write_crosswalk_csv(run.artifact("crosswalk.csv"), d.crosswalk);
  write_text(run.artifact("base.geojson"), d.geojson);
  {
    std::string joined;
    for (int y : d.observed_years) {
      if (!joined.empty()) joined += ',';
      joined += std::to_string(y);
    }
    run.notes["observed_years"] = joined;
  }
  run.manifest("synth");
}

// --------------------------------------------------------------- impute ----

struct ImputeOpts {
  std::string config, out = "out";
  std::string adjacency, centroids, rates;
  std::string method = "neighbor_mean";
  int island_k = 5;
  double idw_power = 1.0;
  int idw_max_donors = 0;
};

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  fail(Errc::bad_config, "unknown method '" + name + "'");
}

void cmd_impute(Run& run, CLI::App* cmd, ImputeOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string adjacency = run.required_path("adjacency", o.adjacency);
  std::string centroids = run.required_path("centroids", o.centroids);
  std::string rates = run.required_path("rates", o.rates);
  Method method = parse_method(run.str("method", o.method));
  IdwOptions idw;
  idw.power = run.num("idw-power", o.idw_power);
  idw.max_donors = static_cast<int>(run.integer("idw-max-donors", o.idw_max_donors));
  int island_k = static_cast<int>(run.integer("island-k", o.island_k));

  RegionGraph graph = load_graph_for(run, adjacency, centroids, island_k);
  RatePanel panel = read_rates_csv(rates);
  int imputed_cells = 0;
  for (int y = panel.first_year; y <= panel.last_year(); ++y) {
    RateField field = panel.field(y);
    int missing = field.missing_count();
    if (missing == 0) continue;
    imputed_cells += missing;
    panel.set_field(run_method(method, field, graph, idw));
  }
  write_rates_csv(run.artifact("rates_imputed.csv"), panel);
  run.notes["imputed_cells"] = std::to_string(imputed_cells);
  run.manifest("impute");
}

// ---------------------------------------------------------------- bench ----

struct BenchOpts {
  std::string config, out = "out";
  std::string adjacency, centroids, rates;
  double fraction = 0.5;
  int seed_count = 20;
  std::uint64_t seed_base = 1;
  int island_k = 5;
  double idw_power = 1.0;
  int idw_max_donors = 0;
};

void cmd_bench(Run& run, CLI::App* cmd, BenchOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string adjacency = run.required_path("adjacency", o.adjacency);
  std::string centroids = run.required_path("centroids", o.centroids);
  std::string rates = run.required_path("rates", o.rates);
  double fraction = run.num("fraction", o.fraction);
  int seed_count = static_cast<int>(run.integer("seed-count", o.seed_count));
  std::uint64_t seed_base = run.uinteger("seed-base", o.seed_base);
  IdwOptions idw;
  idw.power = run.num("idw-power", o.idw_power);
  idw.max_donors = static_cast<int>(run.integer("idw-max-donors", o.idw_max_donors));
  int island_k = static_cast<int>(run.integer("island-k", o.island_k));
  if (seed_count < 1) fail(Errc::bad_config, "--seed-count must be positive");

  RegionGraph graph = load_graph_for(run, adjacency, centroids, island_k);
  RatePanel truth = read_rates_csv(rates);
  check_complete_years(truth, "benchmark truth panel");
  std::vector<std::uint64_t> seed_list(seed_count);
  std::iota(seed_list.begin(), seed_list.end(), seed_base);
  run.seeds = seed_list;
  std::vector<BenchRow> rows = compare_methods(truth, graph, fraction, seed_list, idw);
  write_benchmark_csv(run.artifact("benchmark.csv"), rows);
  run.manifest("bench");
}

// ------------------------------------------------------------ crosswalk ----

struct XwalkOpts {
  std::string config, out = "out";
  std::string rates, crosswalk;
};

void cmd_crosswalk(Run& run, CLI::App* cmd, XwalkOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string rates = run.required_path("rates", o.rates);
  std::string crosswalk = run.required_path("crosswalk", o.crosswalk);

  RatePanel panel = read_rates_csv(rates);
  Crosswalk cw = read_crosswalk_csv(crosswalk);
  RatePanel out;
  out.first_year = panel.first_year;
  for (int y = panel.first_year; y <= panel.last_year(); ++y) {
    RateField f = apply_crosswalk(panel.field(y), cw);
    if (!out.regions) out.regions = f.regions;
    out.values.push_back(f.values);
  }
  write_rates_csv(run.artifact("rates_crosswalked.csv"), out);
  run.manifest("crosswalk");
}

// ------------------------------------------------------- covariates-fill ----

struct CovFillOpts {
  std::string config, out = "out";
  std::string adjacency, centroids, covariates;
  std::vector<int> observed_years;
  int island_k = 5;
};

void cmd_covariates_fill(Run& run, CLI::App* cmd, CovFillOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string adjacency = run.required_path("adjacency", o.adjacency);
  std::string centroids = run.required_path("centroids", o.centroids);
  std::string covariates = run.required_path("covariates", o.covariates);
  std::vector<int> observed = run.int_list("observed-years", o.observed_years);
  int island_k = static_cast<int>(run.integer("island-k", o.island_k));

  RegionGraph graph = load_graph_for(run, adjacency, centroids, island_k);
  FeaturePanel panel = read_features_csv(covariates);
  if (observed.empty()) {
    // Release years are the ones with any observations at all.
    for (int y = panel.first_year; y <= panel.last_year(); ++y) {
      if (!panel.at_year(y).array().isNaN().all()) observed.push_back(y);
    }
    std::string joined;
    for (int y : observed) {
      if (!joined.empty()) joined += ',';
      joined += std::to_string(y);
    }
    run.resolved["observed-years"] = joined;
  }
  FeaturePanel spatial = impute_feature_gaps(panel, graph);
  FeaturePanel filled = linear_gap_fill(spatial, observed);
  write_features_csv(run.artifact("covariates_filled.csv"), filled);
  run.manifest("covariates_fill");
}

// -------------------------------------------------------------- anomaly ----

struct AnomalyOpts {
  std::string config, out = "out";
  std::string rates, covariates;
  double tail = 0.02;
  bool sweep = false;
};

void cmd_anomaly(Run& run, CLI::App* cmd, AnomalyOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string rates = run.required_path("rates", o.rates);
  std::string covariates = run.required_path("covariates", o.covariates);
  double tail = run.num("tail", o.tail);
  bool sweep = run.flag("sweep", o.sweep);

  RatePanel panel = read_rates_csv(rates);
  check_complete_years(panel, "rates panel");
  FeaturePanel covp = read_features_csv(covariates);

  std::vector<AnomalyLabeling> labelings;
  std::vector<std::vector<AnomalyLabeling>> swept(3);
  const std::vector<double> sweep_tails = {0.01, 0.02, 0.03};
  std::ofstream fits(run.artifact("fits.csv"));
  fits << "year,family,p1,p2,n,log_likelihood,ks,aic,bic,aic_rank,bic_rank,ks_rank,chosen\n";
  int fit_failures = 0;
  for (int y = panel.first_year; y <= panel.last_year(); ++y) {
    RateField field = panel.field(y);
    std::vector<double> positives;
    for (int i = 0; i < field.size(); ++i) {
      if (field.values[i] > 0.0) positives.push_back(field.values[i]);
    }
    FitDiagnostics diag = select_best(positives);
    for (std::size_t k = 0; k < diag.failed.size(); ++k) {
      ++fit_failures;
      std::cerr << "warning: " << y << " " << family_name(diag.failed[k])
                << " fit failed: " << diag.failure_reasons[k] << "\n";
    }
    for (std::size_t k = 0; k < diag.fits.size(); ++k) {
      const FittedDistribution& f = diag.fits[k];
      fits << y << ',' << family_name(f.family) << ',' << fmt_g6(f.p1) << ',' << fmt_g6(f.p2)
           << ',' << f.n << ',' << fmt_g6(f.log_likelihood) << ',' << fmt_g6(f.ks) << ','
           << fmt_g6(f.aic) << ',' << fmt_g6(f.bic) << ',' << diag.aic_rank[k] << ','
           << diag.bic_rank[k] << ',' << diag.ks_rank[k] << ','
           << (static_cast<int>(k) == diag.best_index ? 1 : 0) << '\n';
    }
    const FittedDistribution& best = diag.fits[diag.best_index];
    labelings.push_back(label_anomalies(field, best, tail));
    if (sweep) {
      for (std::size_t k = 0; k < sweep_tails.size(); ++k) {
        swept[k].push_back(label_anomalies(field, best, sweep_tails[k]));
      }
    }
  }
  fits.close();
  if (fit_failures > 0) run.notes["fit_failures"] = std::to_string(fit_failures);

  write_anomaly_csv(run.artifact("anomaly.csv"), labelings, *panel.regions);
  if (sweep) {
    for (std::size_t k = 0; k < sweep_tails.size(); ++k) {
      int pct = static_cast<int>(std::lround(sweep_tails[k] * 100));
      write_anomaly_csv(run.artifact("anomaly_p" + std::to_string(pct) + ".csv"), swept[k],
                        *panel.regions);
    }
  }

  for (AnomalyKind kind : {AnomalyKind::hot, AnomalyKind::cold, AnomalyKind::zero}) {
    std::string name = anomaly_kind_name(kind);
    try {
      RankingReport report = rank_features(labelings, covp, kind);
      write_feature_year_csv(run.artifact("ranking_" + name + "_yearly.csv"), "mean",
                             report.years, report.yearly_means);
      write_feature_rank_csv(run.artifact("ranking_" + name + ".csv"), report.average,
                             report.order);
    } catch (const Error& e) {
      if (e.code() != Errc::empty_anomaly_set) throw;
      run.notes["ranking_" + name] = "skipped: no regions labeled in any year";
    }
  }
  run.manifest("anomaly");
}

// ------------------------------------------------------------------ gbt ----

struct GbtOpts {
  std::string config, out = "out";
  std::string covariates, rates;
  int folds = 5;
  std::uint64_t seed = 1;
  double learning_rate = 0.1;
  std::string grid = "default";
  int max_pairs = 0;
};

void cmd_gbt(Run& run, CLI::App* cmd, GbtOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string covariates = run.required_path("covariates", o.covariates);
  std::string rates = run.required_path("rates", o.rates);
  int folds = static_cast<int>(run.integer("folds", o.folds));
  std::uint64_t seed = run.uinteger("seed", o.seed);
  double lr = run.num("learning-rate", o.learning_rate);
  std::string grid_name = run.str("grid", o.grid);
  int max_pairs = static_cast<int>(run.integer("max-pairs", o.max_pairs));

  FeaturePanel covp = read_features_csv(covariates);
  RatePanel ratep = read_rates_csv(rates);

  std::vector<GbtParams> grid;
  if (grid_name == "default") {
    grid = default_grid(lr);
  } else if (grid_name == "small") {
    grid = {GbtParams{20, 3, 50, lr}, GbtParams{40, 3, 50, lr}};
  } else {
    fail(Errc::bad_config, "unknown grid '" + grid_name + "' (default|small)");
  }

  std::vector<int> input_years;
  for (int t = covp.first_year; t <= covp.last_year(); ++t) {
    if (ratep.has_year(t + 1)) input_years.push_back(t);
  }
  if (input_years.empty()) {
    fail(Errc::insufficient_data, "no (covariate year, next-year rates) pairs");
  }
  if (max_pairs > 0 && static_cast<int>(input_years.size()) > max_pairs) {
    input_years.erase(input_years.begin(), input_years.end() - max_pairs);
  }

  std::ofstream grid_csv(run.artifact("gbt_grid.csv"));
  grid_csv << "target_year,trees,max_depth,min_leaf,mean_mae,chosen\n";
  std::ofstream oof_csv(run.artifact("gbt_oof.csv"));
  oof_csv << "fips,year,actual,predicted\n";

  std::vector<GbtEnsemble> finals;
  std::vector<int> target_years;
  const RegionList& regions = *covp.regions;
  for (int t : input_years) {
    const Mat& x = covp.at_year(t);
    if (x.hasNaN()) {
      fail(Errc::incomplete_input,
           "covariates for " + std::to_string(t) + " have gaps; run covariates-fill first");
    }
    RateField yf = ratep.field(t + 1);
    if (!yf.complete()) {
      fail(Errc::incomplete_input,
           "rates for " + std::to_string(t + 1) + " have gaps; impute first");
    }
    if (!covp.regions || !ratep.regions || *covp.regions != *ratep.regions) {
      fail(Errc::region_mismatch, "covariate and rate panels cover different regions");
    }
    std::uint64_t pair_seed = seed + static_cast<std::uint64_t>(t - covp.first_year);
    run.seeds.push_back(pair_seed);
    CvResult cv = cv_predict(x, yf.values, folds, grid, pair_seed);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      grid_csv << t + 1 << ',' << grid[g].trees << ',' << grid[g].max_depth << ','
               << grid[g].min_leaf << ',' << fmt_g6(cv.grid_val_mae[g]) << ','
               << (static_cast<int>(g) == cv.chosen_index ? 1 : 0) << '\n';
    }
    for (int i = 0; i < yf.size(); ++i) {
      oof_csv << regions[i].code << ',' << t + 1 << ',' << fmt_full(yf.values[i]) << ','
              << fmt_full(cv.oof[i]) << '\n';
    }
    finals.push_back(boost(x, yf.values, cv.chosen));
    target_years.push_back(t + 1);
  }
  grid_csv.close();
  oof_csv.close();

  std::vector<const GbtEnsemble*> ptrs;
  for (const GbtEnsemble& e : finals) ptrs.push_back(&e);
  ImportanceReport imp = gain_importance(target_years, ptrs, kFeatureCount);
  write_feature_year_csv(run.artifact("gbt_importance_yearly.csv"), "score", imp.years,
                         imp.yearly);
  write_feature_rank_csv(run.artifact("gbt_importance.csv"), imp.average, imp.order);
  write_gbt_model_json(run.artifact("gbt_model.json"), finals.back());
  run.manifest("gbt");
}

// ------------------------------------------------------------------- ae ----

struct AeOpts {
  std::string config, out = "out";
  std::string covariates, rates;
  TrainConfig train;
  int eg_samples = 200;
  int val_target = 2015;
  int test_target = 0;  // 0 = last available
};

void cmd_ae(Run& run, CLI::App* cmd, AeOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string covariates = run.required_path("covariates", o.covariates);
  std::string rates = run.required_path("rates", o.rates);
  TrainConfig tc;
  tc.d1 = static_cast<int>(run.integer("d1", o.train.d1));
  tc.d2 = static_cast<int>(run.integer("d2", o.train.d2));
  tc.max_epochs = static_cast<int>(run.integer("max-epochs", o.train.max_epochs));
  tc.patience = static_cast<int>(run.integer("patience", o.train.patience));
  tc.lr_base = run.num("lr-base", o.train.lr_base);
  tc.lr_peak = run.num("lr-peak", o.train.lr_peak);
  tc.lr_cycle = static_cast<int>(run.integer("lr-cycle", o.train.lr_cycle));
  tc.seed = run.uinteger("seed", o.train.seed);
  int eg_samples = static_cast<int>(run.integer("eg-samples", o.eg_samples));
  int val_target = static_cast<int>(run.integer("val-target", o.val_target));
  int test_target = static_cast<int>(run.integer("test-target", o.test_target));
  run.seeds.push_back(tc.seed);

  FeaturePanel covp = read_features_csv(covariates);
  RatePanel ratep = read_rates_csv(rates);
  if (!covp.regions || !ratep.regions || *covp.regions != *ratep.regions) {
    fail(Errc::region_mismatch, "covariate and rate panels cover different regions");
  }

  // Chronological (input year t, target year t+1) pairs; inputs in [0,1].
  std::vector<int> targets;
  std::vector<std::pair<Mat, Vec>> pairs;
  for (int t = covp.first_year; t <= covp.last_year(); ++t) {
    if (!ratep.has_year(t + 1)) continue;
    const Mat& x = covp.at_year(t);
    RateField yf = ratep.field(t + 1);
    if (x.hasNaN()) {
      fail(Errc::incomplete_input,
           "covariates for " + std::to_string(t) + " have gaps; run covariates-fill first");
    }
    if (!yf.complete()) {
      fail(Errc::incomplete_input,
           "rates for " + std::to_string(t + 1) + " have gaps; impute first");
    }
    pairs.emplace_back(x / 100.0, yf.values);
    targets.push_back(t + 1);
  }
  if (pairs.size() < 3) fail(Errc::insufficient_data, "need at least three year pairs");

  if (test_target == 0) test_target = targets.back();
  run.resolved["test-target"] = std::to_string(test_target);
  auto test_it = std::find(targets.begin(), targets.end(), test_target);
  if (test_it == targets.end() || *test_it != targets.back()) {
    fail(Errc::bad_config, "--test-target must be the final target year");
  }
  auto val_it = std::find(targets.begin(), targets.end(), val_target);
  if (val_it == targets.end() || val_target == test_target) {
    fail(Errc::bad_config, "--val-target must name a non-test target year");
  }
  int val_index = static_cast<int>(val_it - targets.begin());

  std::vector<std::pair<Mat, Vec>> fit_pairs(pairs.begin(), pairs.end() - 1);
  TrainResult result = train(fit_pairs, val_index, tc);
  write_training_log_csv(run.artifact("training_log.csv"), result.log);
  write_checkpoint_json(run.artifact("checkpoint.json"), result.params);
  run.notes["best_epoch"] = std::to_string(result.best_epoch);
  run.notes["best_val_l1"] = fmt_g6(result.best_val);

  const Mat& x_test = pairs.back().first;
  const Vec& y_test = pairs.back().second;
  Vec yhat = forward(result.params, x_test);
  run.notes["test_l1"] = fmt_g6(l1_loss(yhat, y_test));
  {
    std::ofstream pred(run.artifact("ae_predictions.csv"));
    pred << "fips,year,actual,predicted\n";
    const RegionList& regions = *ratep.regions;
    for (int i = 0; i < yhat.size(); ++i) {
      pred << regions[i].code << ',' << test_target << ',' << fmt_full(y_test[i]) << ','
           << fmt_full(yhat[i]) << '\n';
    }
  }

  // Attribute every target year's prediction; baselines are the training
  // inputs (validation and test inputs excluded).
  std::vector<Mat> baselines;
  for (std::size_t p = 0; p < fit_pairs.size(); ++p) {
    if (static_cast<int>(p) != val_index) baselines.push_back(fit_pairs[p].first);
  }
  Mat yearly(static_cast<Eigen::Index>(pairs.size()), kFeatureCount);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::uint64_t eg_seed = tc.seed + 1000 + static_cast<std::uint64_t>(p);
    run.seeds.push_back(eg_seed);
    AttributionResult attr =
        expected_gradients(result.params, pairs[p].first, baselines, eg_samples, eg_seed);
    yearly.row(static_cast<Eigen::Index>(p)) = attr.mean_abs.transpose();
  }
  Vec average = yearly.colwise().mean().transpose();
  std::vector<int> order(kFeatureCount);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return average[a] > average[b]; });
  write_feature_year_csv(run.artifact("shap_yearly.csv"), "mean_abs_shap", targets, yearly);
  write_feature_rank_csv(run.artifact("shap_rank.csv"), average, order);
  run.manifest("ae");
}

// --------------------------------------------------------------- report ----

struct ReportOpts {
  std::string config, out = "out";
  std::string rates, truth, geojson_in, anomaly_csv;
  int year = 0;  // 0 = last
};

void cmd_report(Run& run, CLI::App* cmd, ReportOpts& o) {
  run.load(cmd, o.config);
  run.resolve_out(o.out);
  std::string rates = run.required_path("rates", o.rates);
  std::string truth = run.str("truth", o.truth);
  std::string geojson_in = run.str("geojson", o.geojson_in);
  std::string anomaly_csv = run.str("anomaly", o.anomaly_csv);
  int year = static_cast<int>(run.integer("year", o.year));

  RatePanel panel = read_rates_csv(rates);
  check_complete_years(panel, "rates panel");
  {
    std::ofstream sum(run.artifact("summary.csv"));
    sum << "year,n,mean,stddev,min,q1,median,q3,max\n";
    for (int y = panel.first_year; y <= panel.last_year(); ++y) {
      RateField f = panel.field(y);
      SummaryStats s = summary_stats(f);
      sum << y << ',' << f.size() << ',' << fmt_g6(s.mean) << ',' << fmt_g6(s.stddev) << ','
          << fmt_g6(s.min) << ',' << fmt_g6(s.q1) << ',' << fmt_g6(s.median) << ','
          << fmt_g6(s.q3) << ',' << fmt_g6(s.max) << '\n';
    }
  }

  if (!truth.empty()) {
    run.input(truth);
    RatePanel truthp = read_rates_csv(truth);
    std::ofstream eff(run.artifact("efficacy.csv"));
    eff << "fips,year,abs_error,accuracy\n";
    std::ofstream effsum(run.artifact("efficacy_summary.csv"));
    effsum << "year,avg_error,max_error,avg_accuracy\n";
    const RegionList& regions = *panel.regions;
    for (int y = panel.first_year; y <= panel.last_year(); ++y) {
      if (!truthp.has_year(y)) continue;
      EfficacyReport rep = efficacy_report(panel.field(y), truthp.field(y));
      for (std::size_t i = 0; i < regions.size(); ++i) {
        eff << regions[i].code << ',' << y << ','
            << fmt_g6(rep.abs_error[static_cast<Eigen::Index>(i)]) << ','
            << fmt_g6(rep.accuracy[static_cast<Eigen::Index>(i)]) << '\n';
      }
      effsum << y << ',' << fmt_g6(rep.avg_error) << ',' << fmt_g6(rep.max_error) << ','
             << fmt_g6(rep.avg_accuracy) << '\n';
    }
  }

  if (!geojson_in.empty()) {
    run.input(geojson_in);
    if (year == 0) year = panel.last_year();
    run.resolved["year"] = std::to_string(year);
    RateField field = panel.field(year);
    MapOverlay overlay;
    overlay.field = &field;
    std::map<std::string, std::string> labels;
    if (!anomaly_csv.empty()) {
      run.input(anomaly_csv);
      for (const AnomalyRow& row : read_anomaly_csv(anomaly_csv)) {
        if (row.year == year) labels[row.region.code] = row.label;
      }
      overlay.anomaly = &labels;
    }
    write_text(run.artifact("report.geojson"), inject_geojson(read_text(geojson_in), overlay));
  }
  run.manifest("report");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"County mortality-rate toolkit: spatial imputation, censoring benchmarks,\n"
               "boundary crosswalks, covariate filling, tail-anomaly analysis, gradient-\n"
               "boosted trees, and a conv-augmented autoencoder with attribution.",
               "geomort"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  Run run;

  SynthOpts synth_o;
  CLI::App* synth_c = app.add_subcommand("synth", "Generate a deterministic lattice fixture");
  synth_c->add_option("--config", synth_o.config, "key=value config file");
  synth_c->add_option("--out", synth_o.out, "output directory");
  synth_c->add_option("--regions", synth_o.spec.regions, "total region count");
  synth_c->add_option("--cols", synth_o.spec.cols, "lattice columns");
  synth_c->add_option("--islands", synth_o.spec.islands, "regions without adjacency");
  synth_c->add_option("--first-year", synth_o.spec.first_year, "first panel year");
  synth_c->add_option("--years", synth_o.spec.years, "panel length");
  synth_c->add_option("--seed", synth_o.spec.seed, "generator seed");
  synth_c->add_option("--zero-fraction", synth_o.spec.zero_fraction, "share of zero rates");
  synth_c->add_option("--censor-fraction", synth_o.spec.censor_fraction,
                      "masking rate of the censored panel");
  synth_c->add_option("--feature-missing", synth_o.spec.feature_missing,
                      "covariate row-gap rate in release years");
  synth_c->callback([&] { cmd_synth(run, synth_c, synth_o); });

  ImputeOpts impute_o;
  CLI::App* impute_c = app.add_subcommand("impute", "Complete a rates panel");
  impute_c->add_option("--config", impute_o.config, "key=value config file");
  impute_c->add_option("--out", impute_o.out, "output directory");
  impute_c->add_option("--adjacency", impute_o.adjacency, "adjacency CSV");
  impute_c->add_option("--centroids", impute_o.centroids, "centroid CSV");
  impute_c->add_option("--rates", impute_o.rates, "rates CSV (with gaps)");
  impute_c->add_option("--method", impute_o.method,
                       "neighbor_mean|state_mean|national_mean|idw");
  impute_c->add_option("--island-k", impute_o.island_k, "constructed island neighborhood size");
  impute_c->add_option("--idw-power", impute_o.idw_power, "IDW distance exponent");
  impute_c->add_option("--idw-max-donors", impute_o.idw_max_donors,
                       "IDW donor cap (0 = all)");
  impute_c->callback([&] { cmd_impute(run, impute_c, impute_o); });

  BenchOpts bench_o;
  CLI::App* bench_c = app.add_subcommand("bench", "Censor-and-score method comparison");
  bench_c->add_option("--config", bench_o.config, "key=value config file");
  bench_c->add_option("--out", bench_o.out, "output directory");
  bench_c->add_option("--adjacency", bench_o.adjacency, "adjacency CSV");
  bench_c->add_option("--centroids", bench_o.centroids, "centroid CSV");
  bench_c->add_option("--rates", bench_o.rates, "complete truth rates CSV");
  bench_c->add_option("--fraction", bench_o.fraction, "censoring fraction");
  bench_c->add_option("--seed-count", bench_o.seed_count, "number of censoring draws");
  bench_c->add_option("--seed-base", bench_o.seed_base, "first seed");
  bench_c->add_option("--island-k", bench_o.island_k, "constructed island neighborhood size");
  bench_c->add_option("--idw-power", bench_o.idw_power, "IDW distance exponent");
  bench_c->add_option("--idw-max-donors", bench_o.idw_max_donors, "IDW donor cap (0 = all)");
  bench_c->callback([&] { cmd_bench(run, bench_c, bench_o); });

  XwalkOpts xwalk_o;
  CLI::App* xwalk_c = app.add_subcommand("crosswalk", "Re-express rates across boundaries");
  xwalk_c->add_option("--config", xwalk_o.config, "key=value config file");
  xwalk_c->add_option("--out", xwalk_o.out, "output directory");
  xwalk_c->add_option("--rates", xwalk_o.rates, "rates CSV");
  xwalk_c->add_option("--crosswalk", xwalk_o.crosswalk, "crosswalk CSV");
  xwalk_c->callback([&] { cmd_crosswalk(run, xwalk_c, xwalk_o); });

  CovFillOpts cov_o;
  CLI::App* cov_c = app.add_subcommand("covariates-fill",
                                       "Spatially then temporally complete covariates");
  cov_c->add_option("--config", cov_o.config, "key=value config file");
  cov_c->add_option("--out", cov_o.out, "output directory");
  cov_c->add_option("--adjacency", cov_o.adjacency, "adjacency CSV");
  cov_c->add_option("--centroids", cov_o.centroids, "centroid CSV");
  cov_c->add_option("--covariates", cov_o.covariates, "covariate CSV (with gaps)");
  cov_c->add_option("--observed-years", cov_o.observed_years, "release years (default: detect)")
      ->delimiter(',');
  cov_c->add_option("--island-k", cov_o.island_k, "constructed island neighborhood size");
  cov_c->callback([&] { cmd_covariates_fill(run, cov_c, cov_o); });

  AnomalyOpts anom_o;
  CLI::App* anom_c = app.add_subcommand("anomaly", "Fit tails, label anomalies, rank features");
  anom_c->add_option("--config", anom_o.config, "key=value config file");
  anom_c->add_option("--out", anom_o.out, "output directory");
  anom_c->add_option("--rates", anom_o.rates, "complete rates CSV");
  anom_c->add_option("--covariates", anom_o.covariates, "complete covariate CSV");
  anom_c->add_option("--tail", anom_o.tail, "tail size in (0, 0.5)");
  anom_c->add_flag("--sweep", anom_o.sweep, "also label at 1%, 2%, 3% tails");
  anom_c->callback([&] { cmd_anomaly(run, anom_c, anom_o); });

  GbtOpts gbt_o;
  CLI::App* gbt_c = app.add_subcommand("gbt", "Cross-validated boosted trees + importance");
  gbt_c->add_option("--config", gbt_o.config, "key=value config file");
  gbt_c->add_option("--out", gbt_o.out, "output directory");
  gbt_c->add_option("--covariates", gbt_o.covariates, "complete covariate CSV");
  gbt_c->add_option("--rates", gbt_o.rates, "complete rates CSV");
  gbt_c->add_option("--folds", gbt_o.folds, "cross-validation folds");
  gbt_c->add_option("--seed", gbt_o.seed, "fold-shuffle seed");
  gbt_c->add_option("--learning-rate", gbt_o.learning_rate, "boosting learning rate");
  gbt_c->add_option("--grid", gbt_o.grid, "hyperparameter grid: default|small");
  gbt_c->add_option("--max-pairs", gbt_o.max_pairs, "use only the last N year pairs (0 = all)");
  gbt_c->callback([&] { cmd_gbt(run, gbt_c, gbt_o); });

  AeOpts ae_o;
  CLI::App* ae_c = app.add_subcommand("ae", "Train the autoencoder, predict, attribute");
  ae_c->add_option("--config", ae_o.config, "key=value config file");
  ae_c->add_option("--out", ae_o.out, "output directory");
  ae_c->add_option("--covariates", ae_o.covariates, "complete covariate CSV");
  ae_c->add_option("--rates", ae_o.rates, "complete rates CSV");
  ae_c->add_option("--d1", ae_o.train.d1, "encoder width");
  ae_c->add_option("--d2", ae_o.train.d2, "bottleneck width");
  ae_c->add_option("--max-epochs", ae_o.train.max_epochs, "epoch cap");
  ae_c->add_option("--patience", ae_o.train.patience, "early-stopping patience");
  ae_c->add_option("--lr-base", ae_o.train.lr_base, "cyclical learning-rate floor");
  ae_c->add_option("--lr-peak", ae_o.train.lr_peak, "cyclical learning-rate peak");
  ae_c->add_option("--lr-cycle", ae_o.train.lr_cycle, "epochs per learning-rate cycle");
  ae_c->add_option("--seed", ae_o.train.seed, "init/attribution seed");
  ae_c->add_option("--eg-samples", ae_o.eg_samples, "expected-gradients samples per region");
  ae_c->add_option("--val-target", ae_o.val_target, "held-out validation target year");
  ae_c->add_option("--test-target", ae_o.test_target, "test target year (0 = last)");
  ae_c->callback([&] { cmd_ae(run, ae_c, ae_o); });

  ReportOpts report_o;
  CLI::App* report_c = app.add_subcommand("report", "Summaries, efficacy, GeoJSON injection");
  report_c->add_option("--config", report_o.config, "key=value config file");
  report_c->add_option("--out", report_o.out, "output directory");
  report_c->add_option("--rates", report_o.rates, "complete rates CSV to summarize");
  report_c->add_option("--truth", report_o.truth, "reference rates CSV for efficacy");
  report_c->add_option("--geojson", report_o.geojson_in, "base GeoJSON to augment");
  report_c->add_option("--anomaly", report_o.anomaly_csv, "anomaly CSV to overlay");
  report_c->add_option("--year", report_o.year, "map year (0 = last)");
  report_c->callback([&] { cmd_report(run, report_c, report_o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::config:
        return 1;
      case ErrorKind::data:
        return 2;
      case ErrorKind::numeric:
        return 3;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
