#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "ltlo/approx.hpp"
#include "ltlo/config.hpp"
#include "ltlo/decompose.hpp"
#include "ltlo/executor.hpp"
#include "ltlo/taskgen.hpp"
#include "ltlo/trainer.hpp"

namespace fs = std::filesystem;
using namespace ltlo;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitCheckpoint = 4;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

Config build_config(const ConfigArgs& args) {
  Config c = args.path.empty() ? Config{} : load_config(args.path);
  for (const std::string& o : args.overrides) apply_override(c, o);
  return c;
}

bool parse_switch(const std::string& text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("expected on or off, got '" + text + "'");
}

// Propositions named in the formula text, sorted.
Alphabet alphabet_from_text(const std::string& text) {
  static const std::regex ident("[a-z][a-z0-9_]*");
  std::set<std::string> names;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), ident); it != std::sregex_iterator(); ++it) {
    const std::string name = it->str();
    if (is_valid_prop_name(name)) names.insert(name);
  }
  return Alphabet(std::vector<std::string>(names.begin(), names.end()));
}

// Generator bounds shrunk to fit small alphabets.
DnfParams dnf_params_for(const Alphabet& ab) {
  DnfParams p;
  const int room = static_cast<int>(ab.size()) - 1;
  if (room < p.max_len) {
    if (room < 1) throw ConfigError("dnf tasks need at least 2 propositions");
    std::cerr << "note: dnf chains capped at " << room << " props for a " << ab.size() << "-prop alphabet\n";
    p.max_len = room;
  }
  return p;
}

RecursiveParams recursive_params_for(const Alphabet& ab) {
  RecursiveParams p;
  const int room = static_cast<int>(ab.size()) / 2;
  if (room < p.max_depth) {
    if (room < 1) throw ConfigError("recursive tasks need at least 2 propositions");
    std::cerr << "note: recursion depth capped at " << room << " for a " << ab.size() << "-prop alphabet\n";
    p.max_depth = room;
    p.min_depth = std::min(p.min_depth, room);
  }
  return p;
}

Formula sequence_task(const Alphabet& ab, std::uint64_t seed, int length) {
  std::mt19937_64 rng(seed);
  const SubgoalSequence xi = random_sequence(length, static_cast<int>(ab.size()), rng);
  Formula f = Formula::make_eventually(Formula::prop(xi.back()));
  for (std::size_t i = xi.size() - 1; i-- > 0;) f = Formula::make_eventually(Formula::make_and(Formula::prop(xi[i]), f));
  return f;
}

Formula make_task(const std::string& family, const Alphabet& ab, std::uint64_t seed, int length) {
  if (family == "dnf") return gen_dnf(ab, seed, dnf_params_for(ab));
  if (family == "recursive") return gen_recursive(ab, seed, recursive_params_for(ab));
  if (family == "sequence") return sequence_task(ab, seed, length);
  throw ConfigError("unknown task family '" + family + "'");
}

int cmd_train(const ConfigArgs& args, std::optional<std::uint64_t> seed, const std::string& out) {
  Config c = build_config(args);
  if (const char* env = std::getenv("LTLO_SEED")) apply_override(c, std::string("train.seed=") + env);
  if (seed) c.train.seed = *seed;
  if (!out.empty()) c.out_dir = out;
  fs::create_directories(c.out_dir);
  const std::string config_text = to_ini(c);
  std::ofstream(fs::path(c.out_dir) / "config.ini") << config_text;
  std::ofstream metrics(fs::path(c.out_dir) / "metrics.jsonl");
  Trainer trainer(c.env, c.train);
  Trainer::Callbacks callbacks;
  callbacks.on_metrics = [&](const MetricsRecord& m) {
    metrics << m.to_json() << '\n';
    metrics.flush();
    std::cerr << "step " << m.step << " level " << m.level << " eval_success " << m.eval_success_rate
              << " eval_return " << m.eval_return_mean << " q_loss " << m.q_loss << " v_loss " << m.v_loss << '\n';
  };
  callbacks.on_checkpoint = [&](const Trainer& t) {
    const Checkpoint ckpt = t.checkpoint(config_text);
    save_checkpoint((fs::path(c.out_dir) / ("checkpoint_" + std::to_string(t.steps()) + ".bin")).string(), ckpt);
    save_checkpoint((fs::path(c.out_dir) / "checkpoint_last.bin").string(), ckpt);
  };
  trainer.run(callbacks);
  nlohmann::ordered_json j;
  j["steps"] = trainer.steps();
  j["episodes"] = trainer.episodes();
  j["level"] = trainer.curriculum().level();
  j["complete"] = trainer.curriculum().complete();
  auto changes = nlohmann::ordered_json::array();
  for (const LevelChange& ch : trainer.level_log())
    changes.push_back({{"episode", ch.episode}, {"from", ch.from}, {"success_rate", ch.success_rate}});
  j["level_changes"] = changes;
  std::cout << j.dump() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string formula;
  std::optional<std::string> family;
  std::optional<int> count;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> shield;
  bool myopic = false;
  std::optional<double> kappa;
  int length = 2;
};

int cmd_eval(const EvalArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  Config c = parse_config(ckpt.config_text);
  if (args.family) c.eval.family = *args.family;
  if (args.count) c.eval.count = *args.count;
  if (args.seed) c.eval.seed = *args.seed;
  if (args.shield) c.eval.shield = parse_switch(*args.shield);
  if (args.kappa) c.eval.kappa = *args.kappa;
  if (args.myopic) c.eval.myopic = true;
  const NetModel model(ckpt.nets);
  ExecOptions options;
  options.caps = caps_of(c.eval);
  options.shield = c.eval.shield;
  options.kappa = c.eval.kappa;
  options.myopic = c.eval.myopic;
  options.r_f = c.train.r_f;
  options.subgoal_steps = c.train.subgoal_steps;

  const int count = args.formula.empty() ? c.eval.count : 1;
  std::mt19937_64 rng(c.eval.seed);
  int successes = 0, violated = 0;
  double returns = 0.0;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t world_seed = rng();
    const std::uint64_t task_seed = rng();
    const GridWorld world = generate(c.env, world_seed);
    const Formula phi = args.formula.empty() ? make_task(c.eval.family, world.alphabet(), task_seed, args.length)
                                             : parse(args.formula, world.alphabet());
    const ExecutionReport report = execute(world, phi, model, options);
    auto j = nlohmann::ordered_json::parse(report_json(report, phi, world.alphabet()));
    j["task"] = i;
    j["world_seed"] = world_seed;
    std::cout << j.dump() << '\n';
    successes += report.success;
    violated += report.violated;
    returns += report.total_return;
  }
  nlohmann::ordered_json summary;
  summary["summary"] = true;
  summary["tasks"] = count;
  summary["success_rate"] = static_cast<double>(successes) / count;
  summary["return_mean"] = returns / count;
  summary["violated_episodes"] = violated;
  summary["shield"] = options.shield;
  summary["myopic"] = options.myopic;
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_decompose(const std::string& formula, const std::string& props, int max_depth, int max_sequences) {
  const Alphabet ab = props.empty() ? alphabet_from_text(formula) : Alphabet::from_csv(props);
  const Formula phi = parse(formula, ab);
  DecompositionCaps caps;
  caps.max_depth = static_cast<std::size_t>(max_depth);
  caps.max_sequences = static_cast<std::size_t>(max_sequences);
  const DecompositionResult k = decompose(phi, ab, caps);
  for (const SubgoalSequence& xi : k.sequences) std::cout << to_string(xi, ab) << '\n';
  if (k.truncated) std::cerr << "note: output truncated by the caps\n";
  return 0;
}

int cmd_gen(const std::string& family, int count, std::uint64_t seed, const std::string& props, int length) {
  const Alphabet ab = Alphabet::from_csv(props);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) std::cout << to_string(make_task(family, ab, rng(), length), ab) << '\n';
  return 0;
}

int cmd_inspect(const std::string& path, std::optional<std::uint64_t> board_seed) {
  const Checkpoint ckpt = load_checkpoint(path);
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["steps"] = ckpt.steps;
  j["episodes"] = ckpt.episodes;
  j["level"] = ckpt.curriculum_level;
  j["obs_dim"] = ckpt.nets.dims.obs_dim;
  j["num_props"] = ckpt.nets.dims.num_props;
  auto params = nlohmann::ordered_json::object();
  for (const auto& [name, p] : ckpt.nets.named()) params[name] = p->size();
  j["parameters"] = params;
  j["config"] = ckpt.config_text;
  if (board_seed) j["board"] = generate(parse_config(ckpt.config_text).env, *board_seed).render();
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Options-based agent for LTL instructions"};
  app.require_subcommand(1);

  ConfigArgs train_cfg;
  std::optional<std::uint64_t> train_seed;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train an agent; writes metrics.jsonl and checkpoints");
  train->add_option("--config", train_cfg.path, "INI config file");
  train->add_option("--set", train_cfg.overrides, "section.key=value override (repeatable)");
  train->add_option("--seed", train_seed, "Training seed (overrides LTLO_SEED and the config)");
  train->add_option("--out", train_out, "Output directory");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Execute tasks with a trained checkpoint; one JSON report per task");
  eval->add_option("checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval->add_option("--formula", eval_args.formula, "Single task formula");
  eval->add_option("--family", eval_args.family, "dnf, recursive or sequence");
  eval->add_option("--count", eval_args.count, "Number of generated tasks");
  eval->add_option("--seed", eval_args.seed, "Seed for worlds and tasks");
  eval->add_option("--shield", eval_args.shield, "on or off");
  eval->add_option("--kappa", eval_args.kappa, "Shield proximity threshold");
  eval->add_option("--length", eval_args.length, "Length of sequence-family tasks")->check(CLI::PositiveNumber);
  eval->add_flag("--myopic", eval_args.myopic, "Condition options on an empty future");

  std::string dec_formula, dec_props;
  int dec_depth = 12, dec_max = 256;
  auto* dec = app.add_subcommand("decompose", "Print every satisfying subgoal sequence, one per line");
  dec->add_option("--formula", dec_formula, "Task formula")->required();
  dec->add_option("--props", dec_props, "Comma separated propositions (default: those in the formula)");
  dec->add_option("--max-depth", dec_depth, "Longest sequence searched")->check(CLI::PositiveNumber);
  dec->add_option("--max-sequences", dec_max, "Most sequences returned")->check(CLI::PositiveNumber);

  std::string gen_family = "dnf", gen_props = "a,b,c,d,e,f,g,h,i,j";
  int gen_count = 10, gen_length = 2;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen", "Print random task formulas, one per line");
  gen->add_option("--family", gen_family, "dnf, recursive or sequence");
  gen->add_option("--count", gen_count, "Number of formulas")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--props", gen_props, "Comma separated propositions");
  gen->add_option("--length", gen_length, "Length of sequence-family tasks")->check(CLI::PositiveNumber);

  std::string inspect_path;
  std::optional<std::uint64_t> inspect_board;
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint as JSON");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();
  inspect->add_option("--board", inspect_board, "Also render the board for this world seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_cfg, train_seed, train_out);
    if (*eval) return cmd_eval(eval_args);
    if (*dec) return cmd_decompose(dec_formula, dec_props, dec_depth, dec_max);
    if (*gen) return cmd_gen(gen_family, gen_count, gen_seed, gen_props, gen_length);
    if (*inspect) return cmd_inspect(inspect_path, inspect_board);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AlphabetTooSmall& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EmptyResult& e) {
    std::cerr << "empty result: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
