#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pml/metrics.hpp"
#include "pml/mlp.hpp"
#include "pml/toy.hpp"
#include "pml/trainer.hpp"

namespace pml::cli {

/// Malformed or invalid configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative output path -> file contents.
using FileSet = std::map<std::string, std::string>;

struct RunOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
};

// toy-sweep

struct ToySweepConfig {
  ToyConfig toy;
  TrainerConfig trainer;
  int segment_points = 101;
  int oracle_resolution = 1201;
};

struct PairOutcome {
  std::string id;
  std::size_t first = 0;
  std::size_t second = 0;
  double hypervolume = 0.0;
  double oracle_ratio = 0.0;
  double initial_loss_sum = 0.0;
};

struct ToySweepResult {
  Eigen::VectorXd reference;
  double oracle_hypervolume = 0.0;
  std::vector<PairOutcome> pairs;
  FileSet files;
};

ToySweepConfig parse_toy_sweep(const nlohmann::json& j);
nlohmann::json to_json(const ToySweepConfig& c);
ToySweepResult run_toy_sweep(const ToySweepConfig& c, const RunOptions& options);

// toy-baseline

struct ToyBaselineConfig {
  ToyConfig toy;
  BaselineMethod method = BaselineMethod::ls;
  TrainerConfig trainer;
};

struct BaselineOutcome {
  std::string id;
  VectorLoss final_losses;
  double min_norm = 0.0;  ///< MGDA min-norm of the final task gradients
  double drift = 0.0;     ///< max |L(final) - L(previous step)|
};

struct ToyBaselineResult {
  std::vector<BaselineOutcome> inits;
  FileSet files;
};

ToyBaselineConfig parse_toy_baseline(const nlohmann::json& j);
nlohmann::json to_json(const ToyBaselineConfig& c);
ToyBaselineResult run_toy_baseline(const ToyBaselineConfig& c, const RunOptions& options);

// mlp-pml

struct MlpPmlConfig {
  double conflict_angle = 1.0471975511965976;  // pi / 3
  Eigen::Index samples = 4000;
  Eigen::Index eval_samples = 4000;
  double noise_std = 0.1;
  MlpSpec spec;
  Eigen::Index batch_size = 256;
  TrainerConfig trainer;
  int segment_points = 11;
  int repeats = 3;
  bool baseline = true;
};

struct MlpSeedOutcome {
  std::string id;
  std::uint64_t seed = 0;
  double spearman_task1 = 0.0;  ///< rank correlation of alpha_1 with task-1 loss
  double spearman_task2 = 0.0;
  double segment_hv = 0.0;      ///< accuracy hypervolume of the segment, origin reference
  double ls_hv = 0.0;           ///< same for the LS baseline's single point
};

struct MlpPmlResult {
  std::vector<MlpSeedOutcome> seeds;
  FileSet files;
};

MlpPmlConfig parse_mlp_pml(const nlohmann::json& j);
nlohmann::json to_json(const MlpPmlConfig& c);
MlpPmlResult run_mlp_pml(const MlpPmlConfig& c, const RunOptions& options);

// ablation-grid

struct AblationCell {
  Eigen::Index window = 1;
  double lambda = 0.0;
};

/// (1, 0) followed by W in {2, 3, 4, 5} x lambda in {0, 2, 5, 10}.
std::vector<AblationCell> default_ablation_cells();

struct AblationConfig {
  std::string objective = "toy";  ///< "toy" or "mlp"
  ToyConfig toy;
  std::size_t pair_first = 0;
  std::size_t pair_second = 2;
  int segment_points = 101;
  MlpPmlConfig mlp;  ///< dataset and network when objective == "mlp"
  TrainerConfig trainer;
  int repeats = 3;
  std::vector<AblationCell> cells = default_ablation_cells();
};

struct AblationRow {
  AblationCell cell;
  std::vector<double> hypervolumes;  ///< one per seed
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  ///< population standard deviation
};

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;
  FileSet files;
};

AblationConfig parse_ablation(const nlohmann::json& j);
nlohmann::json to_json(const AblationConfig& c);
AblationResult run_ablation(const AblationConfig& c, const RunOptions& options);

/// `W,lambda,Seed-0..Seed-k,Mean HV,Max HV,std`.
std::string ablation_csv(const AblationResult& result);

// subspace-eval

struct SubspaceEvalConfig {
  std::filesystem::path checkpoint;
  std::string objective = "toy";
  ToyConfig toy;
  std::filesystem::path dataset;  ///< dataset CSV for the MLP objective
  MlpSpec spec;
  int points = 101;
};

struct SubspaceEvalResult {
  Front front;
  FileSet files;
};

SubspaceEvalConfig parse_subspace_eval(const nlohmann::json& j);
nlohmann::json to_json(const SubspaceEvalConfig& c);
SubspaceEvalResult run_subspace_eval(const SubspaceEvalConfig& c, const RunOptions& options);

// hypervolume

struct HypervolumeConfig {
  std::filesystem::path front;  ///< front CSV; alternatively inline points
  Eigen::MatrixXd points;
  Eigen::VectorXd reference;
  Direction direction = Direction::minimize;
  std::string method = "exact";  ///< exact | inclusion-exclusion | monte-carlo
  std::uint64_t samples = 1'000'000;
};

struct HypervolumeResult {
  double value = 0.0;
  double standard_error = 0.0;
  FileSet files;
};

HypervolumeConfig parse_hypervolume(const nlohmann::json& j);
nlohmann::json to_json(const HypervolumeConfig& c);
HypervolumeResult run_hypervolume(const HypervolumeConfig& c, const RunOptions& options);

// shared

nlohmann::json load_config(const std::filesystem::path& path);

/// Writes `files` under `<out>/<experiment>` via a staging directory that is
/// renamed into place only after every file has been written.
void commit_outputs(const std::filesystem::path& out, const std::string& experiment, const FileSet& files);

std::string manifest_json(const std::string& experiment, std::uint64_t seed, const nlohmann::json& config);

/// Parses the config, runs the experiment and writes its outputs. Returns the
/// process exit code: 0 success, 1 configuration error, 2 runtime failure.
int run_command(const std::string& experiment, const nlohmann::json& config, const RunOptions& options,
                const std::filesystem::path& out, std::string& message);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pml::cli
