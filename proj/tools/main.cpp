#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "lncde/errors.hpp"
#include "lncde/io.hpp"

namespace {

constexpr int kBadFlags = 2;
constexpr int kDataError = 3;
constexpr int kDivergence = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace lncde::cli;
  CLI::App app{"Log-NCDE toolkit: toy data, training, signatures and bounds"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate the toy random-walk dataset");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--num", gen.num, "number of series")->capture_default_str();
  gen_cmd->add_option("--length", gen.length, "observations per series")->capture_default_str();
  gen_cmd->add_option("--channels", gen.channels, "channels per series")->capture_default_str();
  gen_cmd->add_option("--task", gen.task, "label task 1..4")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--splits", gen.splits, "train val test fractions")->expected(3)->capture_default_str();

  TrainArgs tr;
  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train a model on a toy dataset");
  train_cmd->add_option("--config", config_path, "config.json from an earlier run; flags given here override it");
  train_cmd->add_option("--data", tr.data, "dataset directory");
  train_cmd->add_option("--out", tr.out, "run directory");
  train_cmd->add_option("--model", tr.model, "ncde, nrde or logncde")->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden)->capture_default_str();
  train_cmd->add_option("--vf-depth", tr.vf_depth)->capture_default_str();
  train_cmd->add_option("--vf-width", tr.vf_width)->capture_default_str();
  auto* depth_opt = train_cmd->add_option("--logode-depth", tr.logode_depth)->capture_default_str();
  train_cmd->add_option("--logode-step", tr.logode_step)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr)->capture_default_str();
  train_cmd->add_option("--steps", tr.steps)->capture_default_str();
  train_cmd->add_option("--batch", tr.batch)->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda)->capture_default_str();
  train_cmd->add_flag("--include-time", tr.include_time);
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--solver-step", tr.solver_step, "Heun step in normalised time; 0 uses the length rule")
      ->capture_default_str();
  train_cmd->add_option("--eval-every", tr.eval_every)->capture_default_str();
  train_cmd->add_option("--target-accuracy", tr.target_accuracy, "stop once validation accuracy reaches this");
  train_cmd->add_flag("--plot", tr.plot, "write metrics.svg");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--split", ev.split)->capture_default_str();
  eval_cmd->add_option("--model", ev.model, "reject checkpoints of another family");
  eval_cmd->add_option("--out", ev.out, "JSON report path");

  SigArgs sg;
  auto add_sig_options = [&](CLI::App* cmd) {
    cmd->add_option("--path", sg.path, "inline points, e.g. \"0,0;1,0;1,1\"");
    cmd->add_option("--data", sg.data, "dataset directory");
    cmd->add_option("--series", sg.series)->capture_default_str();
    cmd->add_option("--depth", sg.depth)->capture_default_str();
    cmd->add_option("--interval", sg.interval, "first:last observation indices");
  };
  auto* sig_cmd = app.add_subcommand("sig", "print the truncated signature");
  add_sig_options(sig_cmd);
  auto* logsig_cmd = app.add_subcommand("logsig", "print the log-signature in the Lyndon basis");
  add_sig_options(logsig_cmd);

  LipArgs lp;
  auto* lip_cmd = app.add_subcommand("lipbound", "Lip(2) bound of a SiLU vector field");
  lip_cmd->add_option("--checkpoint", lp.checkpoint);
  lip_cmd->add_option("--unit-layers", lp.unit_layers, "synthetic network of this many unit-norm layers");

  FlopArgs fl;
  auto* flops_cmd = app.add_subcommand("flops", "vector-field FLOP counts for the three families");
  flops_cmd->add_option("--hidden", fl.u)->capture_default_str();
  flops_cmd->add_option("--channels", fl.v)->capture_default_str();
  flops_cmd->add_option("--vf-width", fl.width)->capture_default_str();
  flops_cmd->add_option("--vf-depth", fl.depth)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadFlags;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) {
      if (!config_path.empty()) {
        TrainArgs merged = train_args_from_json(lncde::io::read_text(config_path));
        // Re-apply flags given explicitly on this command line.
        for (const CLI::Option* opt : train_cmd->get_options()) {
          if (opt->count() == 0 || opt->get_name() == "--config" || opt->get_name() == "--help") continue;
          const std::string& n = opt->get_name();
          if (n == "--data") merged.data = tr.data;
          else if (n == "--out") merged.out = tr.out;
          else if (n == "--model") merged.model = tr.model;
          else if (n == "--hidden") merged.hidden = tr.hidden;
          else if (n == "--vf-depth") merged.vf_depth = tr.vf_depth;
          else if (n == "--vf-width") merged.vf_width = tr.vf_width;
          else if (n == "--logode-depth") merged.logode_depth = tr.logode_depth;
          else if (n == "--logode-step") merged.logode_step = tr.logode_step;
          else if (n == "--lr") merged.lr = tr.lr;
          else if (n == "--steps") merged.steps = tr.steps;
          else if (n == "--batch") merged.batch = tr.batch;
          else if (n == "--lambda") merged.lambda = tr.lambda;
          else if (n == "--include-time") merged.include_time = tr.include_time;
          else if (n == "--seed") merged.seed = tr.seed;
          else if (n == "--solver-step") merged.solver_step = tr.solver_step;
          else if (n == "--eval-every") merged.eval_every = tr.eval_every;
          else if (n == "--target-accuracy") merged.target_accuracy = tr.target_accuracy;
          else if (n == "--plot") merged.plot = tr.plot;
        }
        tr = merged;
      }
      tr.logode_depth_given = depth_opt->count() > 0;
      return cmd_train(tr);
    }
    if (*eval_cmd) return cmd_eval(ev);
    if (*sig_cmd) return cmd_sig(sg);
    if (*logsig_cmd) return cmd_logsig(sg);
    if (*lip_cmd) return cmd_lipbound(lp);
    if (*flops_cmd) return cmd_flops(fl);
  } catch (const lncde::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const lncde::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kBadFlags;
}
