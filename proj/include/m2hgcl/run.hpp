#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2hgcl/data_io.hpp"
#include "m2hgcl/eval.hpp"
#include "m2hgcl/trainer.hpp"

namespace m2hgcl::cli {

/// SHA-1 over "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_hash(std::string_view content);
/// Hash over the blob hashes and file names of `files`, in order.
std::string hash_inputs(const std::vector<std::filesystem::path>& files);
std::string hash_matrix(const Matrix& m);

nlohmann::json config_to_json(const TrainConfig& config);
/// Keys absent from `j` keep the value in `base`; unknown keys are an error.
TrainConfig config_from_json(const nlohmann::json& j, const TrainConfig& base = {});
TrainConfig load_config(const std::filesystem::path& path);

/// How the downstream evaluation is run.
struct EvalProtocol {
  double train_fraction = 0.4;
  std::size_t seeds = 5;
  std::optional<std::size_t> holdout;         // fixed val/test count
  std::optional<double> holdout_fraction;     // fractional val/test
  bool classify = true;
  bool cluster = true;
};

/// Fixed 1000/1000 holdout when it fits, otherwise 10%/10%, unless overridden.
SplitSpec resolve_split(const EvalProtocol& protocol, std::size_t labeled);
std::string describe(const SplitSpec& spec);

struct RunRecord {
  std::string command;
  std::string dataset;
  TrainConfig config;
  std::string input_hash;
  SubSeeds seeds;
  std::vector<double> loss_curve;
  std::size_t best_epoch = 0;
  nlohmann::json semantic_weights;
  std::string embedding_hash;
  nlohmann::json evaluation;  // EvalReport JSON per task plus the split used
  double wall_clock_seconds = 0.0;

  /// Hash of every field except the wall-clock time.
  std::string content_hash() const;
  nlohmann::json to_json() const;
};

struct RunOutput {
  RunRecord record;
  TrainResult result;
};

/// Trains on a loaded dataset and evaluates the embedding.
RunOutput run_training(const Dataset& dataset, const TrainConfig& config, const EvalProtocol& protocol,
                       const std::string& command);

nlohmann::json params_to_json(const ModelParams& params);

/// Number of worker threads for sweeps and ablations (M2HGCL_THREADS, else hardware).
std::size_t worker_count();

/// Parses "start:stop:step" into an inclusive, ascending grid.
std::vector<double> parse_grid(const std::string& spec);

struct TrainArgs {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  EvalProtocol protocol;
};

struct EvalArgs {
  std::string task;  // "classify" or "cluster"
  std::filesystem::path embeddings;
  std::filesystem::path labels;
  double split = 0.4;
  std::size_t seeds = 5;
  std::optional<std::size_t> holdout;
  std::optional<double> holdout_fraction;
  std::optional<std::filesystem::path> out;
};

struct SweepArgs {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> config;
  std::string param;  // "tau" or "alpha"
  std::string grid = "0.1:0.9:0.1";
  std::filesystem::path out;
  EvalProtocol protocol;
};

struct ExpandArgs {
  std::filesystem::path manifest;
  std::string metapath;
};

struct AblateArgs {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  EvalProtocol protocol;
};

struct GenerateArgs {
  std::optional<std::filesystem::path> spec;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

// Each command returns a process exit code and reports errors on `err`.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_expand(const ExpandArgs& args, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace m2hgcl::cli
