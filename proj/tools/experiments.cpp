#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "pml/dataset.hpp"
#include "pml/io.hpp"
#include "pml/random.hpp"

namespace pml::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads fields from a JSON object and rejects unknown keys on finish().
class ConfigReader {
 public:
  explicit ConfigReader(const json& j) : j_(j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    used_ = {"seed", "out"};
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("config field '{}': {}", key, e.what()));
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(fmt::format("config field '{}' is required", key));
    return get<T>(key, T{});
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.contains(item.key())) throw ConfigError(fmt::format("unknown config field '{}'", item.key()));
    }
  }

 private:
  const json& j_;
  std::set<std::string> used_;
};

Eigen::VectorXd to_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError(fmt::format("config field '{}' must be an array of numbers", key));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(fmt::format("config field '{}' must hold numbers", key));
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json from_vector(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& value,
                std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(fmt::format("config field '{}': '{}' is not one of {}", key, value, allowed));
}

std::string balancing_name(Balancing b) {
  switch (b) {
    case Balancing::none: return "none";
    case Balancing::loss: return "loss";
    case Balancing::gradient: return "gradient";
  }
  return "none";
}

std::string method_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::ls: return "ls";
    case BaselineMethod::mgda2: return "mgda2";
    case BaselineMethod::pcgrad: return "pcgrad";
  }
  return "ls";
}

TrainerConfig toy_trainer_defaults() {
  TrainerConfig t;
  t.iterations = 50000;
  t.learning_rate = 2e-3;
  t.log_stride = 1000;
  return t;
}

TrainerConfig mlp_trainer_defaults() {
  TrainerConfig t;
  t.iterations = 5000;
  t.learning_rate = 1e-3;
  t.lr_scale_by_members = true;
  t.window = 3;
  t.lambda = 100.0;
  t.log_stride = 100;
  return t;
}

void parse_trainer(ConfigReader& r, TrainerConfig& t, Eigen::Index members) {
  t.iterations = r.get<std::int64_t>("iterations", t.iterations);
  t.learning_rate = r.get<double>("learning_rate", t.learning_rate);
  t.optimizer = parse_enum<OptimizerKind>("optimizer", r.get<std::string>("optimizer", "adam"),
                                          {{"adam", OptimizerKind::adam}, {"sgd", OptimizerKind::sgd}});
  t.adam.beta1 = r.get<double>("adam_beta1", t.adam.beta1);
  t.adam.beta2 = r.get<double>("adam_beta2", t.adam.beta2);
  t.adam.eps = r.get<double>("adam_eps", t.adam.eps);
  t.window = r.get<Eigen::Index>("window", t.window);
  t.lambda = r.get<double>("lambda", t.lambda);
  if (r.has("dirichlet")) {
    const json& d = r.raw("dirichlet");
    if (d.is_number()) {
      t.dirichlet = Eigen::VectorXd::Constant(members, d.get<double>());
    } else {
      t.dirichlet = to_vector(d, "dirichlet");
    }
  }
  if (t.dirichlet.size() == 0) t.dirichlet = Eigen::VectorXd::Ones(members);
  if (t.dirichlet.size() != members) throw ConfigError("dirichlet needs one concentration per member");
  t.balancing = parse_enum<Balancing>("balancing", r.get<std::string>("balancing", balancing_name(t.balancing)),
                                      {{"none", Balancing::none}, {"loss", Balancing::loss},
                                       {"gradient", Balancing::gradient}});
  t.balance_window = r.get<Eigen::Index>("balance_window", t.balance_window);
  t.graph_mode = parse_enum<GraphMode>("graph", r.get<std::string>("graph", "lex"),
                                       {{"lex", GraphMode::lex}, {"full", GraphMode::full}});
  t.lr_scale_by_members = r.get<bool>("lr_scale_by_members", t.lr_scale_by_members);
  t.log_stride = r.get<std::int64_t>("log_stride", t.log_stride);
  check_trainer_config(t);
}

json trainer_json(const TrainerConfig& t) {
  return json{{"iterations", t.iterations},
              {"learning_rate", t.learning_rate},
              {"optimizer", t.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
              {"adam_beta1", t.adam.beta1},
              {"adam_beta2", t.adam.beta2},
              {"adam_eps", t.adam.eps},
              {"window", t.window},
              {"lambda", t.lambda},
              {"dirichlet", from_vector(t.dirichlet)},
              {"balancing", balancing_name(t.balancing)},
              {"balance_window", t.balance_window},
              {"graph", t.graph_mode == GraphMode::lex ? "lex" : "full"},
              {"lr_scale_by_members", t.lr_scale_by_members},
              {"log_stride", t.log_stride}};
}

void merge(json& into, const json& from) {
  for (const auto& item : from.items()) into[item.key()] = item.value();
}

ToyConfig parse_toy(ConfigReader& r) {
  ToyConfig toy{r.get<double>("c", 1.0)};
  check_toy_config(toy);
  return toy;
}

MlpSpec parse_spec(ConfigReader& r) {
  MlpSpec spec;
  spec.hidden_dims = r.get<std::vector<Eigen::Index>>("hidden", spec.hidden_dims);
  check_mlp_spec(spec);
  return spec;
}

int positive_int(ConfigReader& r, const std::string& key, int fallback, int minimum) {
  const int v = r.get<int>(key, fallback);
  if (v < minimum) throw ConfigError(fmt::format("config field '{}' must be at least {}", key, minimum));
  return v;
}

// Runs f(0..n-1) on up to `jobs` threads. Rethrows the failure of the lowest
// index so errors do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string accuracy_csv(const SimplexGrid& grid, const Eigen::MatrixXd& accuracy) {
  std::string out;
  for (Eigen::Index m = 0; m < grid.dims(); ++m) out += fmt::format("alpha_{},", m + 1);
  for (Eigen::Index t = 0; t < accuracy.cols(); ++t) {
    out += fmt::format("accuracy_{}{}", t + 1, t + 1 < accuracy.cols() ? "," : "\n");
  }
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    for (Eigen::Index m = 0; m < grid.dims(); ++m) out += io::format_real(grid.points(k, m)) + ",";
    for (Eigen::Index t = 0; t < accuracy.cols(); ++t) {
      out += io::format_real(accuracy(k, t)) + (t + 1 < accuracy.cols() ? "," : "\n");
    }
  }
  return out;
}

const HypervolumeSpec kAccuracySpec{Eigen::VectorXd::Zero(2), Direction::maximize};

// Datasets and initial members of one MLP repeat.
struct MlpSetup {
  std::shared_ptr<const SyntheticDataset> train;
  std::shared_ptr<const SyntheticDataset> eval;
  ParameterMatrix theta0;
};

MlpSetup mlp_setup(const MlpPmlConfig& c, std::uint64_t seed) {
  MlpSetup s;
  s.train = std::make_shared<const SyntheticDataset>(
      make_synthetic_dataset(c.conflict_angle, c.samples, c.noise_std, derive_seed(seed, 0)));
  s.eval = std::make_shared<const SyntheticDataset>(
      make_synthetic_dataset(c.conflict_angle, c.eval_samples, c.noise_std, derive_seed(seed, 1)));
  Rng init(derive_seed(seed, 2));
  s.theta0.resize(2, parameter_count(c.spec));
  for (Eigen::Index m = 0; m < 2; ++m) s.theta0.row(m) = init_mlp_parameters(c.spec, init).transpose();
  return s;
}

Eigen::MatrixXd segment_accuracy(const ParameterMatrix& theta, const SimplexGrid& grid, const MlpSpec& spec,
                                 const SyntheticDataset& data) {
  Eigen::MatrixXd acc(grid.size(), spec.tasks);
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd p = interpolate(theta, Eigen::VectorXd(grid.points.row(k).transpose()));
    acc.row(k) = mlp_accuracy(p, spec, data.inputs, data.labels).transpose();
  }
  return acc;
}

MlpPmlConfig parse_mlp_fields(ConfigReader& r, MlpPmlConfig c) {
  c.conflict_angle = r.get<double>("conflict_angle", c.conflict_angle);
  c.samples = r.get<Eigen::Index>("samples", c.samples);
  c.eval_samples = r.get<Eigen::Index>("eval_samples", c.eval_samples);
  c.noise_std = r.get<double>("noise_std", c.noise_std);
  c.spec = parse_spec(r);
  c.batch_size = r.get<Eigen::Index>("batch_size", c.batch_size);
  if (!(c.conflict_angle >= 0.0 && c.conflict_angle <= std::numbers::pi / 2)) {
    throw ConfigError("conflict_angle must lie in [0, pi/2]");
  }
  if (c.samples < 1 || c.eval_samples < 1) throw ConfigError("sample counts must be positive");
  if (!(c.noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  return c;
}

json mlp_fields_json(const MlpPmlConfig& c) {
  return json{{"conflict_angle", c.conflict_angle}, {"samples", c.samples},
              {"eval_samples", c.eval_samples},     {"noise_std", c.noise_std},
              {"hidden", c.spec.hidden_dims},       {"batch_size", c.batch_size}};
}

}  // namespace

// toy-sweep

ToySweepConfig parse_toy_sweep(const json& j) {
  ConfigReader r(j);
  ToySweepConfig c;
  c.toy = parse_toy(r);
  c.trainer = toy_trainer_defaults();
  parse_trainer(r, c.trainer, 2);
  c.segment_points = positive_int(r, "segment_points", c.segment_points, 2);
  c.oracle_resolution = positive_int(r, "oracle_resolution", c.oracle_resolution, 100);
  r.finish();
  return c;
}

json to_json(const ToySweepConfig& c) {
  json j{{"c", c.toy.scale_c}, {"segment_points", c.segment_points}, {"oracle_resolution", c.oracle_resolution}};
  merge(j, trainer_json(c.trainer));
  return j;
}

ToySweepResult run_toy_sweep(const ToySweepConfig& c, const RunOptions& options) {
  ToySweepResult result;
  const Front oracle = oracle_front_toy(c.toy, c.oracle_resolution);
  result.reference = toy_reference_point(c.toy);
  const HypervolumeSpec spec{result.reference, Direction::minimize};
  result.oracle_hypervolume = hypervolume(oracle, spec);
  if (!(result.oracle_hypervolume > 0.0)) throw std::runtime_error("oracle front has zero hypervolume");
  const SimplexGrid grid = make_grid(2, c.segment_points);
  const auto& inits = toy_initializations();

  const std::size_t n = inits.size() * inits.size();
  result.pairs.resize(n);
  std::vector<FileSet> files(n);
  parallel_for(n, options.jobs, [&](std::size_t k) {
    const std::size_t i = k / inits.size();
    const std::size_t j = k % inits.size();
    ToyObjective objective(c.toy);
    ParameterMatrix theta0(2, 2);
    theta0.row(0) = inits[i].transpose();
    theta0.row(1) = inits[j].transpose();
    TrainerConfig t = c.trainer;
    t.seed = derive_seed(options.seed, k);
    const PmlResult run = run_pml(objective, theta0, t);
    const Front front = evaluate_subspace(run.theta, grid, objective);

    PairOutcome& p = result.pairs[k];
    p.id = fmt::format("pair-{}-{}", i, j);
    p.first = i;
    p.second = j;
    p.hypervolume = hypervolume(front, spec);
    p.oracle_ratio = p.hypervolume / result.oracle_hypervolume;
    p.initial_loss_sum = toy_loss(inits[i], c.toy).sum() + toy_loss(inits[j], c.toy).sum();
    files[k][p.id + "/trajectory.csv"] = trajectory_csv(run.trajectory);
    files[k][p.id + "/front.csv"] = front_csv(front, 2, 2);
    files[k][p.id + "/theta.bin"] = encode_parameter_matrix(run.theta);
  });
  for (auto& f : files) result.files.merge(f);

  json pairs = json::array();
  std::vector<double> ratios;
  std::size_t at95 = 0;
  std::size_t at90 = 0;
  const PairOutcome* worst = &result.pairs.front();
  for (const auto& p : result.pairs) {
    pairs.push_back({{"id", p.id},
                     {"init_1", from_vector(inits[p.first])},
                     {"init_2", from_vector(inits[p.second])},
                     {"hypervolume", p.hypervolume},
                     {"oracle_ratio", p.oracle_ratio},
                     {"initial_loss_sum", p.initial_loss_sum}});
    ratios.push_back(p.oracle_ratio);
    at95 += p.oracle_ratio >= 0.95 ? 1 : 0;
    at90 += p.oracle_ratio >= 0.90 ? 1 : 0;
    if (p.initial_loss_sum > worst->initial_loss_sum) worst = &p;
  }
  const json summary{{"c", c.toy.scale_c},
                     {"balancing", balancing_name(c.trainer.balancing)},
                     {"reference", from_vector(result.reference)},
                     {"oracle_hypervolume", result.oracle_hypervolume},
                     {"oracle_points", oracle.size()},
                     {"pairs", pairs},
                     {"pairs_ratio_at_least_0.95", at95},
                     {"pairs_ratio_at_least_0.90", at90},
                     {"median_oracle_ratio", median(ratios)},
                     {"worst_initial_pair", worst->id}};
  result.files["summary.json"] = dump(summary);
  result.files["oracle_front.csv"] = front_csv(oracle, 2, 2);
  return result;
}

// toy-baseline

ToyBaselineConfig parse_toy_baseline(const json& j) {
  ConfigReader r(j);
  ToyBaselineConfig c;
  c.toy = parse_toy(r);
  c.method = parse_enum<BaselineMethod>("method", r.get<std::string>("method", "ls"),
                                        {{"ls", BaselineMethod::ls}, {"mgda2", BaselineMethod::mgda2},
                                         {"pcgrad", BaselineMethod::pcgrad}});
  c.trainer = toy_trainer_defaults();
  c.trainer.iterations = r.get<std::int64_t>("iterations", c.trainer.iterations);
  c.trainer.learning_rate = r.get<double>("learning_rate", c.trainer.learning_rate);
  c.trainer.log_stride = r.get<std::int64_t>("log_stride", c.trainer.log_stride);
  check_trainer_config(c.trainer);
  r.finish();
  return c;
}

json to_json(const ToyBaselineConfig& c) {
  return json{{"c", c.toy.scale_c},
              {"method", method_name(c.method)},
              {"iterations", c.trainer.iterations},
              {"learning_rate", c.trainer.learning_rate},
              {"log_stride", c.trainer.log_stride}};
}

ToyBaselineResult run_toy_baseline(const ToyBaselineConfig& c, const RunOptions& options) {
  const auto& inits = toy_initializations();
  ToyBaselineResult result;
  result.inits.resize(inits.size());
  std::vector<FileSet> files(inits.size());
  parallel_for(inits.size(), options.jobs, [&](std::size_t k) {
    ToyObjective objective(c.toy);
    TrainerConfig t = c.trainer;
    t.seed = derive_seed(options.seed, k);
    const BaselineResult run = run_baseline(objective, inits[k], c.method, t);
    BaselineOutcome& o = result.inits[k];
    o.id = fmt::format("init-{}", k);
    o.final_losses = objective.losses(run.theta);
    o.min_norm = mgda2_combine(toy_grad(run.theta, c.toy)).combined.norm();
    o.drift = (o.final_losses - run.previous_losses).cwiseAbs().maxCoeff();
    files[k][o.id + "/trajectory.csv"] = trajectory_csv(run.trajectory);
    files[k][o.id + "/theta.bin"] = encode_parameter_matrix(run.theta.transpose());
  });
  for (auto& f : files) result.files.merge(f);

  json rows = json::array();
  for (std::size_t k = 0; k < inits.size(); ++k) {
    const auto& o = result.inits[k];
    rows.push_back({{"id", o.id},
                    {"init", from_vector(inits[k])},
                    {"final_losses", from_vector(o.final_losses)},
                    {"min_norm", o.min_norm},
                    {"final_drift", o.drift}});
  }
  result.files["summary.json"] = dump(json{{"method", method_name(c.method)}, {"c", c.toy.scale_c}, {"inits", rows}});
  return result;
}

// mlp-pml

MlpPmlConfig parse_mlp_pml(const json& j) {
  ConfigReader r(j);
  MlpPmlConfig c;
  c = parse_mlp_fields(r, c);
  c.trainer = mlp_trainer_defaults();
  parse_trainer(r, c.trainer, 2);
  c.segment_points = positive_int(r, "segment_points", c.segment_points, 2);
  c.repeats = positive_int(r, "repeats", c.repeats, 1);
  c.baseline = r.get<bool>("baseline", c.baseline);
  r.finish();
  return c;
}

json to_json(const MlpPmlConfig& c) {
  json j = mlp_fields_json(c);
  merge(j, trainer_json(c.trainer));
  j["segment_points"] = c.segment_points;
  j["repeats"] = c.repeats;
  j["baseline"] = c.baseline;
  return j;
}

MlpPmlResult run_mlp_pml(const MlpPmlConfig& c, const RunOptions& options) {
  MlpPmlResult result;
  const auto repeats = static_cast<std::size_t>(c.repeats);
  result.seeds.resize(repeats);
  std::vector<FileSet> files(repeats);
  const SimplexGrid grid = make_grid(2, c.segment_points);

  parallel_for(repeats, options.jobs, [&](std::size_t r) {
    const std::uint64_t seed = options.seed + r;
    const MlpSetup setup = mlp_setup(c, seed);
    MlpObjective objective(c.spec, setup.train, c.batch_size);
    TrainerConfig t = c.trainer;
    t.seed = derive_seed(seed, 3);
    const PmlResult run = run_pml(objective, setup.theta0, t);

    const MlpObjective eval(c.spec, setup.eval, 0);
    const Front front = evaluate_subspace(run.theta, grid, eval);
    const Eigen::MatrixXd acc = segment_accuracy(run.theta, grid, c.spec, *setup.eval);
    const Eigen::MatrixXd losses = loss_matrix(front);

    MlpSeedOutcome& o = result.seeds[r];
    o.id = fmt::format("seed-{}", seed);
    o.seed = seed;
    o.spearman_task1 = spearman_correlation(grid.points.col(0), losses.col(0));
    o.spearman_task2 = spearman_correlation(grid.points.col(0), losses.col(1));
    o.segment_hv = hypervolume(acc, kAccuracySpec);

    FileSet& f = files[r];
    f[o.id + "/trajectory.csv"] = trajectory_csv(run.trajectory);
    f[o.id + "/theta.bin"] = encode_parameter_matrix(run.theta);
    f[o.id + "/front.csv"] = front_csv(front, 2, c.spec.tasks);
    f[o.id + "/accuracy.csv"] = accuracy_csv(grid, acc);

    json summary{{"seed", seed},
                 {"spearman_alpha1_loss1", o.spearman_task1},
                 {"spearman_alpha1_loss2", o.spearman_task2},
                 {"segment_accuracy_hv", o.segment_hv}};
    if (c.baseline) {
      MlpObjective baseline_objective(c.spec, setup.train, c.batch_size);
      TrainerConfig bt = c.trainer;
      bt.seed = derive_seed(seed, 4);
      const BaselineResult ls =
          run_baseline(baseline_objective, setup.theta0.row(0).transpose(), BaselineMethod::ls, bt);
      const Eigen::RowVectorXd ls_acc =
          mlp_accuracy(ls.theta, c.spec, setup.eval->inputs, setup.eval->labels).transpose();
      o.ls_hv = hypervolume(Eigen::MatrixXd(ls_acc), kAccuracySpec);
      summary["ls_accuracy"] = from_vector(ls_acc.transpose());
      summary["ls_accuracy_hv"] = o.ls_hv;
      f[o.id + "/baseline_ls_trajectory.csv"] = trajectory_csv(ls.trajectory);
      f[o.id + "/baseline_ls_theta.bin"] = encode_parameter_matrix(ls.theta.transpose());
    }
    f[o.id + "/summary.json"] = dump(summary);
  });
  for (auto& f : files) result.files.merge(f);

  json rows = json::array();
  for (const auto& o : result.seeds) {
    json row{{"id", o.id},
             {"spearman_alpha1_loss1", o.spearman_task1},
             {"spearman_alpha1_loss2", o.spearman_task2},
             {"segment_accuracy_hv", o.segment_hv}};
    if (c.baseline) row["ls_accuracy_hv"] = o.ls_hv;
    rows.push_back(row);
  }
  result.files["summary.json"] = dump(json{{"seeds", rows}});
  return result;
}

// ablation-grid

std::vector<AblationCell> default_ablation_cells() {
  std::vector<AblationCell> cells{{1, 0.0}};
  for (Eigen::Index w = 2; w <= 5; ++w) {
    for (const double lambda : {0.0, 2.0, 5.0, 10.0}) cells.push_back({w, lambda});
  }
  return cells;
}

AblationConfig parse_ablation(const json& j) {
  ConfigReader r(j);
  AblationConfig c;
  c.objective = r.get<std::string>("objective", c.objective);
  if (c.objective == "toy") {
    c.toy = parse_toy(r);
    const auto pair = r.get<std::vector<std::size_t>>("pair", {c.pair_first, c.pair_second});
    if (pair.size() != 2 || pair[0] >= toy_initializations().size() || pair[1] >= toy_initializations().size()) {
      throw ConfigError("pair must hold two initialization indices in [0, 4]");
    }
    c.pair_first = pair[0];
    c.pair_second = pair[1];
    c.segment_points = positive_int(r, "segment_points", 101, 2);
    c.trainer = toy_trainer_defaults();
  } else if (c.objective == "mlp") {
    c.mlp = parse_mlp_fields(r, c.mlp);
    c.segment_points = positive_int(r, "segment_points", 11, 2);
    c.trainer = mlp_trainer_defaults();
  } else {
    throw ConfigError(fmt::format("objective must be 'toy' or 'mlp', got '{}'", c.objective));
  }
  c.trainer.window = 1;
  c.trainer.lambda = 0.0;
  parse_trainer(r, c.trainer, 2);
  c.repeats = positive_int(r, "repeats", c.repeats, 1);
  if (r.has("cells")) {
    c.cells.clear();
    for (const auto& cell : r.raw("cells")) {
      if (!cell.is_array() || cell.size() != 2) throw ConfigError("cells must be [W, lambda] pairs");
      c.cells.push_back({cell[0].get<Eigen::Index>(), cell[1].get<double>()});
    }
  }
  for (const auto& cell : c.cells) {
    if (cell.window < 1 || !(cell.lambda >= 0.0)) throw ConfigError("cells need W >= 1 and lambda >= 0");
  }
  r.finish();
  return c;
}

json to_json(const AblationConfig& c) {
  json j{{"objective", c.objective}, {"segment_points", c.segment_points}, {"repeats", c.repeats}};
  if (c.objective == "toy") {
    j["c"] = c.toy.scale_c;
    j["pair"] = {c.pair_first, c.pair_second};
  } else {
    merge(j, mlp_fields_json(c.mlp));
  }
  merge(j, trainer_json(c.trainer));
  j.erase("window");
  j.erase("lambda");
  json cells = json::array();
  for (const auto& cell : c.cells) cells.push_back({cell.window, cell.lambda});
  j["cells"] = cells;
  return j;
}

AblationResult run_ablation(const AblationConfig& c, const RunOptions& options) {
  AblationResult result;
  const auto repeats = static_cast<std::size_t>(c.repeats);
  for (std::size_t r = 0; r < repeats; ++r) result.seeds.push_back(options.seed + r);
  const SimplexGrid grid = make_grid(2, c.segment_points);
  const std::size_t n = c.cells.size() * repeats;

  std::vector<MlpSetup> setups;
  if (c.objective == "mlp") {
    for (const auto seed : result.seeds) setups.push_back(mlp_setup(c.mlp, seed));
  }
  const Eigen::VectorXd toy_ref = toy_reference_point(c.toy);

  std::vector<double> hv(n);
  std::vector<FileSet> files(n);
  parallel_for(n, options.jobs, [&](std::size_t k) {
    const std::size_t cell_index = k / repeats;
    const std::size_t r = k % repeats;
    const AblationCell& cell = c.cells[cell_index];
    TrainerConfig t = c.trainer;
    t.window = cell.window;
    t.lambda = cell.lambda;
    t.seed = derive_seed(result.seeds[r], 3);
    const std::string dir = fmt::format("w{}-lambda{}/seed-{}", cell.window, io::format_real(cell.lambda),
                                        result.seeds[r]);
    if (c.objective == "toy") {
      ToyObjective objective(c.toy);
      const auto& inits = toy_initializations();
      ParameterMatrix theta0(2, 2);
      theta0.row(0) = inits[c.pair_first].transpose();
      theta0.row(1) = inits[c.pair_second].transpose();
      const PmlResult run = run_pml(objective, theta0, t);
      const Front front = evaluate_subspace(run.theta, grid, objective);
      hv[k] = hypervolume(front, HypervolumeSpec{toy_ref, Direction::minimize});
      files[k][dir + "/front.csv"] = front_csv(front, 2, 2);
    } else {
      const MlpSetup& setup = setups[r];
      MlpObjective objective(c.mlp.spec, setup.train, c.mlp.batch_size);
      const PmlResult run = run_pml(objective, setup.theta0, t);
      const Eigen::MatrixXd acc = segment_accuracy(run.theta, grid, c.mlp.spec, *setup.eval);
      hv[k] = hypervolume(acc, kAccuracySpec);
      files[k][dir + "/accuracy.csv"] = accuracy_csv(grid, acc);
    }
  });
  for (auto& f : files) result.files.merge(f);

  json rows = json::array();
  for (std::size_t ci = 0; ci < c.cells.size(); ++ci) {
    AblationRow row;
    row.cell = c.cells[ci];
    row.hypervolumes.assign(hv.begin() + static_cast<std::ptrdiff_t>(ci * repeats),
                            hv.begin() + static_cast<std::ptrdiff_t>((ci + 1) * repeats));
    const Eigen::Map<const Eigen::VectorXd> v(row.hypervolumes.data(), static_cast<Eigen::Index>(repeats));
    row.mean = v.mean();
    row.max = v.maxCoeff();
    row.std = std::sqrt((v.array() - row.mean).square().mean());
    rows.push_back({{"W", row.cell.window},
                    {"lambda", row.cell.lambda},
                    {"hypervolumes", row.hypervolumes},
                    {"mean_hv", row.mean},
                    {"max_hv", row.max},
                    {"std", row.std}});
    result.rows.push_back(std::move(row));
  }
  result.files["ablation.csv"] = ablation_csv(result);
  result.files["ablation.json"] = dump(json{{"objective", c.objective}, {"seeds", result.seeds}, {"rows", rows}});
  return result;
}

std::string ablation_csv(const AblationResult& result) {
  std::string out = "W,lambda";
  for (std::size_t s = 0; s < result.seeds.size(); ++s) out += fmt::format(",Seed-{}", s);
  out += ",Mean HV,Max HV,std\n";
  for (const auto& row : result.rows) {
    out += fmt::format("{},{}", row.cell.window, io::format_real(row.cell.lambda));
    for (const double h : row.hypervolumes) out += "," + io::format_real(h);
    out += "," + io::format_real(row.mean) + "," + io::format_real(row.max) + "," + io::format_real(row.std) + "\n";
  }
  return out;
}

// subspace-eval

SubspaceEvalConfig parse_subspace_eval(const json& j) {
  ConfigReader r(j);
  SubspaceEvalConfig c;
  c.checkpoint = r.require<std::string>("checkpoint");
  c.objective = r.get<std::string>("objective", c.objective);
  if (c.objective == "toy") {
    c.toy = parse_toy(r);
  } else if (c.objective == "mlp") {
    c.dataset = r.require<std::string>("dataset");
    c.spec = parse_spec(r);
  } else {
    throw ConfigError(fmt::format("objective must be 'toy' or 'mlp', got '{}'", c.objective));
  }
  c.points = positive_int(r, "points", c.points, 2);
  r.finish();
  return c;
}

json to_json(const SubspaceEvalConfig& c) {
  json j{{"checkpoint", c.checkpoint.string()}, {"objective", c.objective}, {"points", c.points}};
  if (c.objective == "toy") {
    j["c"] = c.toy.scale_c;
  } else {
    j["dataset"] = c.dataset.string();
    j["hidden"] = c.spec.hidden_dims;
  }
  return j;
}

SubspaceEvalResult run_subspace_eval(const SubspaceEvalConfig& c, const RunOptions&) {
  const ParameterMatrix theta = read_parameter_matrix(c.checkpoint);
  SubspaceEvalResult result;
  json summary{{"members", theta.rows()}, {"points_per_edge", c.points}};
  std::unique_ptr<VectorObjective> objective;
  if (c.objective == "toy") {
    objective = std::make_unique<ToyObjective>(c.toy);
  } else {
    auto data = std::make_shared<const SyntheticDataset>(read_dataset_csv(c.dataset));
    objective = std::make_unique<MlpObjective>(c.spec, data, 0);
  }
  if (theta.cols() != objective->parameter_count()) {
    throw DimensionMismatch(fmt::format("checkpoint has {} parameters per member, objective needs {}",
                                        theta.cols(), objective->parameter_count()));
  }
  const SimplexGrid grid = make_grid(static_cast<int>(theta.rows()), c.points);
  result.front = evaluate_subspace(theta, grid, *objective);
  summary["samples"] = result.front.size();
  if (c.objective == "toy") {
    summary["hypervolume"] = hypervolume(result.front, HypervolumeSpec{toy_reference_point(c.toy)});
  }
  result.files["front.csv"] = front_csv(result.front, theta.rows(), objective->task_count());
  result.files["summary.json"] = dump(summary);
  return result;
}

// hypervolume

HypervolumeConfig parse_hypervolume(const json& j) {
  ConfigReader r(j);
  HypervolumeConfig c;
  if (r.has("front")) c.front = r.get<std::string>("front", "");
  if (r.has("points")) {
    const json& pts = r.raw("points");
    if (!pts.is_array() || pts.empty()) throw ConfigError("points must be a non-empty array of points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Eigen::VectorXd p = to_vector(pts[i], "points");
      if (i == 0) c.points.resize(static_cast<Eigen::Index>(pts.size()), p.size());
      if (p.size() != c.points.cols()) throw ConfigError("points must all have the same length");
      c.points.row(static_cast<Eigen::Index>(i)) = p.transpose();
    }
  }
  if (c.front.empty() == (c.points.size() == 0)) throw ConfigError("give exactly one of 'front' or 'points'");
  if (!r.has("reference")) throw ConfigError("config field 'reference' is required");
  c.reference = to_vector(r.raw("reference"), "reference");
  if (!c.reference.allFinite()) throw ConfigError("reference must be finite");
  c.direction = parse_enum<Direction>("direction", r.get<std::string>("direction", "minimize"),
                                      {{"minimize", Direction::minimize}, {"maximize", Direction::maximize}});
  c.method = r.get<std::string>("method", c.method);
  if (c.method != "exact" && c.method != "inclusion-exclusion" && c.method != "monte-carlo") {
    throw ConfigError("method must be exact, inclusion-exclusion or monte-carlo");
  }
  c.samples = r.get<std::uint64_t>("samples", c.samples);
  if (c.samples == 0) throw ConfigError("samples must be positive");
  if (c.points.size() > 0 && c.points.cols() != c.reference.size()) {
    throw ConfigError("points and reference differ in dimension");
  }
  r.finish();
  return c;
}

json to_json(const HypervolumeConfig& c) {
  json j{{"reference", from_vector(c.reference)},
         {"direction", c.direction == Direction::minimize ? "minimize" : "maximize"},
         {"method", c.method},
         {"samples", c.samples}};
  if (!c.front.empty()) {
    j["front"] = c.front.string();
  } else {
    json pts = json::array();
    for (Eigen::Index i = 0; i < c.points.rows(); ++i) pts.push_back(from_vector(c.points.row(i).transpose()));
    j["points"] = pts;
  }
  return j;
}

HypervolumeResult run_hypervolume(const HypervolumeConfig& c, const RunOptions& options) {
  const Eigen::MatrixXd points = c.front.empty() ? c.points : loss_matrix(read_front_csv(c.front));
  const HypervolumeSpec spec{c.reference, c.direction};
  HypervolumeResult result;
  if (c.method == "exact") {
    result.value = hypervolume(points, spec);
  } else if (c.method == "inclusion-exclusion") {
    result.value = hypervolume_inclusion_exclusion(points, spec);
  } else {
    const MonteCarloEstimate mc = hypervolume_monte_carlo(points, spec, c.samples, options.seed);
    result.value = mc.value;
    result.standard_error = mc.standard_error;
  }
  json out{{"method", c.method}, {"points", points.rows()}, {"hypervolume", result.value}};
  if (c.method == "monte-carlo") out["standard_error"] = result.standard_error;
  result.files["hypervolume.json"] = dump(out);
  return result;
}

// shared

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void commit_outputs(const fs::path& out, const std::string& experiment, const FileSet& files) {
  const fs::path target = out / experiment;
  const fs::path staging = out / (experiment + ".staging");
  fs::create_directories(out);
  fs::remove_all(staging);
  try {
    for (const auto& [name, contents] : files) {
      const fs::path path = staging / name;
      fs::create_directories(path.parent_path());
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
      if (!f) throw std::runtime_error(fmt::format("failed writing {}", path.string()));
    }
    fs::remove_all(target);
    fs::rename(staging, target);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
}

std::string manifest_json(const std::string& experiment, std::uint64_t seed, const json& config) {
  return dump(json{{"experiment", experiment}, {"version", kVersion}, {"seed", seed}, {"config", config}});
}

int run_command(const std::string& experiment, const json& config, const RunOptions& options,
                const fs::path& out, std::string& message) {
  // Parse first so configuration problems map to exit code 1.
  std::function<FileSet()> run;
  json resolved;
  try {
    if (experiment == "toy-sweep") {
      const auto c = parse_toy_sweep(config);
      resolved = to_json(c);
      run = [c, options] { return run_toy_sweep(c, options).files; };
    } else if (experiment == "toy-baseline") {
      const auto c = parse_toy_baseline(config);
      resolved = to_json(c);
      run = [c, options] { return run_toy_baseline(c, options).files; };
    } else if (experiment == "mlp-pml") {
      const auto c = parse_mlp_pml(config);
      resolved = to_json(c);
      run = [c, options] { return run_mlp_pml(c, options).files; };
    } else if (experiment == "ablation-grid") {
      const auto c = parse_ablation(config);
      resolved = to_json(c);
      run = [c, options] { return run_ablation(c, options).files; };
    } else if (experiment == "subspace-eval") {
      const auto c = parse_subspace_eval(config);
      resolved = to_json(c);
      run = [c, options] { return run_subspace_eval(c, options).files; };
    } else if (experiment == "hypervolume") {
      const auto c = parse_hypervolume(config);
      resolved = to_json(c);
      run = [c, options, &message] {
        HypervolumeResult r = run_hypervolume(c, options);
        message = c.method == "monte-carlo" ? fmt::format("{} +- {}", r.value, r.standard_error)
                                            : fmt::format("{}", r.value);
        return r.files;
      };
    } else {
      message = fmt::format("unknown experiment '{}'", experiment);
      return 1;
    }
  } catch (const std::exception& e) {
    message = fmt::format("config error: {}", e.what());
    return 1;
  }

  try {
    FileSet files = run();
    files["manifest.json"] = manifest_json(experiment, options.seed, resolved);
    commit_outputs(out, experiment, files);
  } catch (const std::exception& e) {
    message = fmt::format("error: {}", e.what());
    return 2;
  }
  return 0;
}

}  // namespace pml::cli
