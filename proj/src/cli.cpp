#include "ucpo/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucpo/advantage.hpp"
#include "ucpo/config.hpp"
#include "ucpo/dura.hpp"
#include "ucpo/format.hpp"
#include "ucpo/metrics.hpp"
#include "ucpo/sim.hpp"
#include "ucpo/sweep.hpp"

namespace ucpo {

namespace {

using json = nlohmann::ordered_json;

// Writes either to a file (when path is set) or to the fallback stream.
template <typename Emit>
void emit_to(const std::string& path, std::ostream& fallback, Emit&& emit) {
  if (path.empty()) {
    emit(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit(file);
  if (!file) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<Method> parse_method_list(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  methods.reserve(names.size());
  for (const std::string& n : names) methods.push_back(method_from_name(n));
  return methods;
}

// ---- advantage subcommand -------------------------------------------------

RewardScheme scheme_from_json(const json& v, const std::string& where) {
  if (!v.is_object())
    throw std::invalid_argument(where + ": scheme must be an object");
  RewardScheme s{1.0, 0.0, 0.8};
  for (const auto& item : v.items()) {
    if (item.key() == "r_right") s.r_right = item.value().get<double>();
    else if (item.key() == "r_wrong") s.r_wrong = item.value().get<double>();
    else if (item.key() == "r_uncertain") s.r_uncertain = item.value().get<double>();
    else throw std::invalid_argument(where + ": unknown scheme key '" + item.key() + "'");
  }
  return s;
}

DuraParams dura_from_json(const json& v, const std::string& where) {
  if (!v.is_object())
    throw std::invalid_argument(where + ": dura must be an object");
  DuraParams d;
  for (const auto& item : v.items()) {
    if (item.key() == "w") d.w = item.value().get<double>();
    else if (item.key() == "eps") d.eps = item.value().get<double>();
    else if (item.key() == "lambda") d.lambda = item.value().get<double>();
    else if (item.key() == "alpha") d.alpha = item.value().get<double>();
    else if (item.key() == "enable_fusion") d.enable_fusion = item.value().get<bool>();
    else if (item.key() == "enable_tanh") d.enable_tanh = item.value().get<bool>();
    else throw std::invalid_argument(where + ": unknown dura key '" + item.key() + "'");
  }
  d.validate();
  return d;
}

json advantage_record(const std::string& line) {
  json rec = json::parse(line);  // json::parse_error propagates
  if (!rec.is_object()) throw std::invalid_argument("record must be a JSON object");
  for (const auto& item : rec.items()) {
    const std::string& k = item.key();
    if (k != "outcomes" && k != "scheme" && k != "method" && k != "dura" &&
        k != "gamma")
      throw std::invalid_argument("unknown record key '" + k + "'");
  }
  if (!rec.contains("outcomes") || !rec["outcomes"].is_string())
    throw std::invalid_argument("record needs an \"outcomes\" string");
  if (!rec.contains("method") || !rec["method"].is_string())
    throw std::invalid_argument("record needs a \"method\" name");
  return rec;
}

json process_advantage_record(const json& rec) {
  const Method method = method_from_name(rec["method"].get<std::string>());
  RewardScheme scheme{1.0, 0.0, 0.8};
  if (rec.contains("scheme")) scheme = scheme_from_json(rec["scheme"], "scheme");
  if (method == Method::GRPO) scheme = scheme.binarized();
  if (method == Method::GRPO_UC && !scheme.is_ternary())
    throw std::invalid_argument(
        "GRPO-UC needs a ternary scheme (r_wrong < r_uncertain < r_right)");

  const RolloutGroup group =
      group_from_labels(rec["outcomes"].get<std::string>(), scheme);

  AdvantageResult result;
  if (method == Method::UCPO) {
    DuraParams dura;
    if (rec.contains("dura")) dura = dura_from_json(rec["dura"], "dura");
    double gain;
    if (rec.contains("gamma")) {
      gain = rec["gamma"].get<double>();  // injected gain, e.g. for testing
    } else {
      const GammaRecord g = gamma_pipeline(compose(group), 0.0, dura);
      gain = g.gamma_final;
    }
    result = ucpo_advantages(group, gain, dura.eps);
  } else {
    result = grpo_advantages(group);
  }

  json out;
  out["advantages"] = result.advantages;
  out["method"] = std::string(method_name(method));
  out["filtered"] = result.filtered;
  if (method == Method::UCPO) {
    out["anchor_right"] = result.anchor_right;
    out["gamma_used"] = result.gamma_used;
    out["det_mean"] = result.det_mean;
    out["det_std"] = result.det_std;
  }
  return out;
}

int run_advantage(std::istream& in, std::ostream& out, std::ostream& err) {
  std::string line;
  long line_no = 0;
  long failures = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out << process_advantage_record(advantage_record(line)).dump() << '\n';
    } catch (const std::exception& e) {
      err << "advantage: line " << line_no << ": " << e.what() << '\n';
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

// ---- eval-metrics subcommand ----------------------------------------------

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream row(line);
  while (std::getline(row, field, ',')) fields.push_back(field);
  return fields;
}

int run_eval_trajectory(const std::string& path, const std::string& column,
                        std::size_t window, std::ostream& out) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(file, line))
    throw std::runtime_error("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_row(line);
  std::size_t index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) index = i;
  if (index == header.size())
    throw std::runtime_error("column '" + column + "' not found in '" + path + "'");

  std::vector<double> values;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line);
    if (fields.size() <= index)
      throw std::runtime_error("short row in '" + path + "'");
    values.push_back(std::strtod(fields[index].c_str(), nullptr));
  }
  const SeriesSummary s = summarize_series(values, window);
  out << "final=" << format_double(s.final_value) << '\n'
      << "window_mean=" << format_double(s.window_mean) << '\n'
      << "window_used=" << s.window_used << '\n'
      << "undefined_count=" << s.undefined_count << '\n';
  return 0;
}

// ---- shared flag plumbing ---------------------------------------------------

struct DuraFlags {
  CLI::Option* w = nullptr;
  CLI::Option* eps = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* fusion = nullptr;
  CLI::Option* tanh_flag = nullptr;
  double w_value = 1.0, eps_value = 1e-6, lambda_value = 0.5, alpha_value = 2.0;
  bool fusion_value = false, tanh_value = false;

  void attach(CLI::App* cmd) {
    w = cmd->add_option("--dura-w", w_value, "suppression weight");
    eps = cmd->add_option("--dura-eps", eps_value, "denominator stabilizer");
    lambda = cmd->add_option("--dura-lambda", lambda_value, "fusion weight");
    alpha = cmd->add_option("--dura-alpha", alpha_value, "tanh scale");
    fusion = cmd->add_flag("--fusion,!--no-fusion", fusion_value,
                           "blend per-group gain with the batch mean");
    tanh_flag = cmd->add_flag("--tanh,!--no-tanh", tanh_value,
                              "squash the fused gain through tanh");
  }
  void apply(DuraParams& d) const {
    if (w->count()) d.w = w_value;
    if (eps->count()) d.eps = eps_value;
    if (lambda->count()) d.lambda = lambda_value;
    if (alpha->count()) d.alpha = alpha_value;
    if (fusion->count()) d.enable_fusion = fusion_value;
    if (tanh_flag->count()) d.enable_tanh = tanh_value;
  }
};

struct SchemeFlags {
  CLI::Option* right = nullptr;
  CLI::Option* wrong = nullptr;
  CLI::Option* uncertain = nullptr;
  double right_value = 1.0, wrong_value = 0.0, uncertain_value = 0.8;

  void attach(CLI::App* cmd) {
    right = cmd->add_option("--r-right", right_value, "reward for Right");
    wrong = cmd->add_option("--r-wrong", wrong_value, "reward for Wrong");
    uncertain =
        cmd->add_option("--r-uncertain", uncertain_value, "reward for Uncertain");
  }
  void apply(RewardScheme& s) const {
    if (right->count()) s.r_right = right_value;
    if (wrong->count()) s.r_wrong = wrong_value;
    if (uncertain->count()) s.r_uncertain = uncertain_value;
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::istream& in,
             std::ostream& out, std::ostream& err) {
  CLI::App app{"ternary advantage shaping: sweeps, gain analysis, simulation"};
  app.require_subcommand(1);

  // sweep ---------------------------------------------------------------
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "evaluate advantage diagnostics over the composition simplex");
  std::string sweep_config_path, sweep_out_path;
  int sweep_group = 8, sweep_density = 0;
  std::vector<std::string> sweep_methods;
  SchemeFlags sweep_scheme;
  DuraFlags sweep_dura;
  CLI::Option* sweep_config_opt =
      sweep_cmd->add_option("--config", sweep_config_path,
                            "experiment config supplying the sweep section");
  CLI::Option* sweep_group_opt = sweep_cmd->add_option(
      "--group-size,-G", sweep_group, "rollouts per group");
  CLI::Option* sweep_methods_opt =
      sweep_cmd->add_option("--methods", sweep_methods,
                            "methods to evaluate (GRPO, GRPO-UC, UCPO)")
          ->delimiter(',');
  CLI::Option* sweep_density_opt = sweep_cmd->add_option(
      "--density", sweep_density,
      "fractional grid density (0 = integer compositions)");
  sweep_scheme.attach(sweep_cmd);
  sweep_dura.attach(sweep_cmd);
  sweep_cmd->add_option("--out", sweep_out_path, "output CSV path (default stdout)");

  // gamma-range ---------------------------------------------------------
  CLI::App* gamma_cmd = app.add_subcommand(
      "gamma-range", "enumerate the dynamic gain over all ternary compositions");
  int gamma_group = 8;
  std::string gamma_out_path;
  double gamma_w = 1.0, gamma_eps = 1e-6;
  CLI::Option* gamma_w_opt =
      gamma_cmd->add_option("--dura-w", gamma_w, "suppression weight");
  CLI::Option* gamma_eps_opt =
      gamma_cmd->add_option("--dura-eps", gamma_eps, "denominator stabilizer");
  gamma_cmd->add_option("--group-size,-G", gamma_group, "rollouts per group");
  gamma_cmd->add_option("--out", gamma_out_path, "output CSV path (default stdout)");

  // train -----------------------------------------------------------------
  CLI::App* train_cmd =
      app.add_subcommand("train", "run the seeded policy-gradient simulation");
  std::string train_config_path, train_out_path, train_format = "csv",
              train_method;
  std::uint64_t train_seed = 0;
  int train_steps = 0, train_group = 0, train_batch = 0, train_epochs = 0;
  double train_lr = 0, train_clip = 0, train_kl = 0, train_init_abstain = 0,
         train_cap_rate = 0, train_solve_prob = 0;
  bool emit_config = false;
  SchemeFlags train_scheme;
  DuraFlags train_dura;
  CLI::Option* train_config_opt = train_cmd->add_option(
      "--config", train_config_path, "experiment config path");
  CLI::Option* train_method_opt = train_cmd->add_option(
      "--method", train_method, "GRPO, GRPO-UC, or UCPO");
  CLI::Option* train_seed_opt =
      train_cmd->add_option("--seed", train_seed, "RNG seed");
  CLI::Option* train_steps_opt =
      train_cmd->add_option("--steps", train_steps, "number of updates");
  CLI::Option* train_lr_opt =
      train_cmd->add_option("--lr", train_lr, "learning rate");
  CLI::Option* train_group_opt =
      train_cmd->add_option("--group-size,-G", train_group, "rollouts per group");
  CLI::Option* train_batch_opt = train_cmd->add_option(
      "--batch-prompts", train_batch, "prompts drawn per step");
  CLI::Option* train_clip_opt =
      train_cmd->add_option("--clip-eps", train_clip, "surrogate clip half-width");
  CLI::Option* train_kl_opt =
      train_cmd->add_option("--kl-beta", train_kl, "KL pull toward the initial policy");
  CLI::Option* train_epochs_opt = train_cmd->add_option(
      "--epochs-per-batch", train_epochs, "surrogate epochs per batch");
  CLI::Option* train_init_opt = train_cmd->add_option(
      "--init-abstain-prob", train_init_abstain, "initial abstain probability");
  CLI::Option* train_cap_opt = train_cmd->add_option(
      "--capability-rate", train_cap_rate, "capability growth rate (0 = off)");
  CLI::Option* train_solve_opt = train_cmd->add_option(
      "--solve-prob", train_solve_prob,
      "replace the task bank with a single bucket of this difficulty");
  train_scheme.attach(train_cmd);
  train_dura.attach(train_cmd);
  train_cmd->add_option("--out", train_out_path,
                        "trajectory output path (default stdout)");
  CLI::Option* train_format_opt = train_cmd->add_option(
      "--format", train_format, "trajectory format: csv or jsonl");
  train_cmd->add_flag("--emit-config", emit_config,
                      "print the resolved config and exit");

  // advantage -------------------------------------------------------------
  app.add_subcommand("advantage",
                     "score rollout groups from line-delimited JSON on stdin");

  // eval-metrics ----------------------------------------------------------
  CLI::App* eval_cmd = app.add_subcommand(
      "eval-metrics", "abstention-aware metrics from counts or a trajectory");
  double eval_acc = 0, eval_hal = 0, eval_unc = 0;
  std::string eval_trajectory, eval_column = "uncertainty_ratio";
  std::size_t eval_window = 0;
  CLI::Option* eval_acc_opt =
      eval_cmd->add_option("--acc", eval_acc, "fraction answered correctly");
  CLI::Option* eval_hal_opt =
      eval_cmd->add_option("--hal", eval_hal, "fraction answered wrongly");
  CLI::Option* eval_unc_opt =
      eval_cmd->add_option("--unc", eval_unc, "fraction abstained");
  CLI::Option* eval_traj_opt = eval_cmd->add_option(
      "--trajectory", eval_trajectory, "summarize a trajectory CSV instead");
  eval_cmd->add_option("--column", eval_column,
                       "trajectory column to summarize");
  eval_cmd->add_option("--window", eval_window,
                       "trailing window length (0 = whole series)");
  eval_acc_opt->needs(eval_hal_opt)->needs(eval_unc_opt);
  eval_traj_opt->excludes(eval_acc_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sweep_cmd->parsed()) {
      SweepRequest request;
      if (sweep_config_opt->count()) {
        const ExperimentConfig cfg = load_config(sweep_config_path);
        if (cfg.sweep) request = *cfg.sweep;
      }
      if (sweep_group_opt->count()) request.group_size = sweep_group;
      if (sweep_methods_opt->count())
        request.methods = parse_method_list(sweep_methods);
      if (sweep_density_opt->count()) request.grid_density = sweep_density;
      sweep_scheme.apply(request.scheme);
      sweep_dura.apply(request.dura);
      const std::vector<SweepPoint> points = sweep(request);
      emit_to(sweep_out_path, out,
              [&](std::ostream& dst) { emit_sweep_csv(points, dst); });
      return 0;
    }

    if (gamma_cmd->parsed()) {
      DuraParams params;
      if (gamma_w_opt->count()) params.w = gamma_w;
      if (gamma_eps_opt->count()) params.eps = gamma_eps;
      const std::vector<GammaRecord> records =
          enumerate_gamma_distribution(gamma_group, params);
      emit_to(gamma_out_path, out,
              [&](std::ostream& dst) { emit_gamma_csv(records, dst); });
      return 0;
    }

    if (train_cmd->parsed()) {
      ExperimentConfig cfg;
      if (train_config_opt->count()) cfg = load_config(train_config_path);
      if (train_method_opt->count())
        cfg.sim.method = method_from_name(train_method);
      if (train_seed_opt->count()) cfg.sim.seed = train_seed;
      if (train_steps_opt->count()) cfg.sim.steps = train_steps;
      if (train_lr_opt->count()) cfg.sim.lr = train_lr;
      if (train_group_opt->count()) cfg.sim.group_size = train_group;
      if (train_clip_opt->count()) cfg.sim.clip_eps = train_clip;
      if (train_kl_opt->count()) cfg.sim.kl_beta = train_kl;
      if (train_epochs_opt->count()) cfg.sim.epochs_per_batch = train_epochs;
      if (train_init_opt->count()) cfg.sim.init_abstain_prob = train_init_abstain;
      if (train_cap_opt->count()) cfg.sim.capability_rate = train_cap_rate;
      if (train_batch_opt->count()) cfg.task_bank.batch_prompts = train_batch;
      if (train_solve_opt->count())
        cfg.task_bank.buckets = {Bucket{train_solve_prob, 1.0, std::nullopt}};
      train_scheme.apply(cfg.sim.scheme);
      train_dura.apply(cfg.sim.dura);
      if (train_out_path.empty() && cfg.output)
        train_out_path = cfg.output->trajectory_path;
      if (!train_format_opt->count() && cfg.output)
        train_format = cfg.output->format;
      if (train_format != "csv" && train_format != "jsonl")
        throw ConfigError("format must be \"csv\" or \"jsonl\"");
      cfg.output = OutputSpec{train_out_path, train_format};
      cfg.validate();

      if (emit_config) {
        out << serialize_config(cfg);
        return 0;
      }
      const std::vector<TrajectoryRecord> records = run(cfg.sim, cfg.task_bank);
      emit_to(train_out_path, out, [&](std::ostream& dst) {
        if (train_format == "csv") emit_trajectory_csv(records, dst);
        else emit_trajectory_jsonl(records, dst);
      });
      return 0;
    }

    if (app.get_subcommand("advantage")->parsed())
      return run_advantage(in, out, err);

    if (eval_cmd->parsed()) {
      if (eval_traj_opt->count())
        return run_eval_trajectory(eval_trajectory, eval_column, eval_window, out);
      if (!eval_acc_opt->count())
        throw std::invalid_argument(
            "eval-metrics needs either --trajectory or --acc/--hal/--unc");
      const EvalCounts counts{eval_acc, eval_hal, eval_unc};
      counts.validate();
      const double p = paq(counts);
      out << "paq=" << (std::isnan(p) ? "undefined" : format_double(p)) << '\n'
          << "f1=" << format_double(f1(counts)) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "config: " << e.what() << '\n';
    return 1;
  } catch (const SimulationFault& e) {
    err << "simulation: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ucpo
