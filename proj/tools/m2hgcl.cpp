#include <iostream>

#include <CLI11.hpp>

#include "m2hgcl/run.hpp"

namespace {

void add_protocol_options(CLI::App* cmd, m2hgcl::cli::EvalProtocol& p) {
  cmd->add_option("--split", p.train_fraction, "Training fraction for the linear probe")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--eval-seeds", p.seeds, "Number of evaluation splits / clustering restarts");
  cmd->add_option("--holdout", p.holdout, "Fixed validation and test size");
  cmd->add_option("--holdout-fraction", p.holdout_fraction, "Fractional validation and test size");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace m2hgcl::cli;
  CLI::App app{"Multi-view multi-scale heterogeneous graph contrastive learning"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train embeddings on a dataset");
  train_cmd->add_option("--manifest", train.manifest, "Dataset manifest (JSON)")->required();
  train_cmd->add_option("--config", train.config, "Training config (JSON)");
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--variant", train.variant, "full, wo_expanded, wo_direct, wo_global, wo_local, wo_psamp");
  train_cmd->add_option("--seed", train.seed, "Run seed");
  add_protocol_options(train_cmd, train.protocol);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate stored embeddings");
  eval_cmd->add_option("task", eval.task, "classify or cluster")->required()->check(CLI::IsMember({"classify", "cluster"}));
  eval_cmd->add_option("--embeddings", eval.embeddings, "Embedding matrix (.bin)")->required();
  eval_cmd->add_option("--labels", eval.labels, "Label file (TSV)")->required();
  eval_cmd->add_option("--split", eval.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seeds", eval.seeds, "Number of seeds");
  eval_cmd->add_option("--holdout", eval.holdout, "Fixed validation and test size");
  eval_cmd->add_option("--holdout-fraction", eval.holdout_fraction, "Fractional validation and test size");
  eval_cmd->add_option("--out", eval.out, "Write the report as JSON");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep tau or alpha over a grid");
  sweep_cmd->add_option("--manifest", sweep.manifest, "Dataset manifest (JSON)")->required();
  sweep_cmd->add_option("--config", sweep.config, "Base training config (JSON)");
  sweep_cmd->add_option("--param", sweep.param, "tau or alpha")->required()->check(CLI::IsMember({"tau", "alpha"}));
  sweep_cmd->add_option("--grid", sweep.grid, "start:stop:step")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
  add_protocol_options(sweep_cmd, sweep.protocol);

  ExpandArgs expand;
  auto* expand_cmd = app.add_subcommand("expand", "Show the expanded meta-path and edge counts");
  expand_cmd->add_option("--manifest", expand.manifest, "Dataset manifest (JSON)")->required();
  expand_cmd->add_option("--metapath", expand.metapath, "Meta-path name, e.g. MAM")->required();

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare all ablation variants");
  ablate_cmd->add_option("--manifest", ablate.manifest, "Dataset manifest (JSON)")->required();
  ablate_cmd->add_option("--config", ablate.config, "Base training config (JSON)");
  ablate_cmd->add_option("--out", ablate.out, "Output directory")->required();
  add_protocol_options(ablate_cmd, ablate.protocol);

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic planted-partition dataset");
  generate_cmd->add_option("--spec", generate.spec, "Synthetic spec (JSON)");
  generate_cmd->add_option("--out", generate.out, "Output directory")->required();
  generate_cmd->add_option("--seed", generate.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  if (*sweep_cmd) return cmd_sweep(sweep, std::cout, std::cerr);
  if (*expand_cmd) return cmd_expand(expand, std::cout, std::cerr);
  if (*ablate_cmd) return cmd_ablate(ablate, std::cout, std::cerr);
  return cmd_generate(generate, std::cout, std::cerr);
}
