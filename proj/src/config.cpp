#include "ltlo/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ltlo {

namespace {

struct Field {
  std::string name;  // section.key
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

[[noreturn]] void bad_value(const std::string& name, const std::string& value) {
  throw ConfigError("bad value for " + name + ": '" + value + "'");
}

template <class T>
T parse_number(const std::string& name, const std::string& text) {
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(name, text);
  return out;
}

bool parse_bool(const std::string& name, const std::string& text) {
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  bad_value(name, text);
}

template <class T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

template <class T, class Access>
Field number(std::string name, Access access) {
  return Field{name,
               [name, access](Config& c, const std::string& v) { access(c) = parse_number<T>(name, v); },
               [access](const Config& c) { return format_number<T>(access(const_cast<Config&>(c))); }};
}

template <class Access>
Field flag(std::string name, Access access) {
  return Field{name, [name, access](Config& c, const std::string& v) { access(c) = parse_bool(name, v); },
               [access](const Config& c) { return std::string(access(const_cast<Config&>(c)) ? "true" : "false"); }};
}

template <class Access>
Field text(std::string name, Access access) {
  return Field{name, [access](Config& c, const std::string& v) { access(c) = v; },
               [access](const Config& c) { return access(const_cast<Config&>(c)); }};
}

#define LTLO_REF(expr) [](Config& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(Field{"env.kind",
                      [](Config& c, const std::string& v) {
                        try {
                          c.env = EnvParams::defaults(env_kind_from_string(v));
                        } catch (const std::invalid_argument&) {
                          bad_value("env.kind", v);
                        }
                      },
                      [](const Config& c) { return std::string(to_string(c.env.kind)); }});
    f.push_back(number<int>("env.n", LTLO_REF(c.env.n)));
    f.push_back(number<int>("env.m", LTLO_REF(c.env.m)));
    f.push_back(number<int>("env.k", LTLO_REF(c.env.k)));
    f.push_back(flag("env.fixed_layout", LTLO_REF(c.env.fixed_layout)));
    f.push_back(number<std::uint64_t>("env.layout_seed", LTLO_REF(c.env.layout_seed)));
    f.push_back(number<double>("env.step_reward", LTLO_REF(c.env.step_reward)));

    f.push_back(number<std::uint64_t>("train.seed", LTLO_REF(c.train.seed)));
    f.push_back(number<std::uint64_t>("train.total_steps", LTLO_REF(c.train.total_steps)));
    f.push_back(number<double>("train.gamma", LTLO_REF(c.train.gamma)));
    f.push_back(number<double>("train.r_f", LTLO_REF(c.train.r_f)));
    f.push_back(number<double>("train.eps_init", LTLO_REF(c.train.eps_init)));
    f.push_back(number<double>("train.eps_final", LTLO_REF(c.train.eps_final)));
    f.push_back(number<double>("train.eps_fraction", LTLO_REF(c.train.eps_fraction)));
    f.push_back(number<int>("train.curriculum_levels", LTLO_REF(c.train.curriculum_levels)));
    f.push_back(number<double>("train.curriculum_threshold", LTLO_REF(c.train.curriculum_threshold)));
    f.push_back(number<int>("train.curriculum_window", LTLO_REF(c.train.curriculum_window)));
    f.push_back(flag("train.stop_at_completion", LTLO_REF(c.train.stop_at_completion)));
    f.push_back(number<int>("train.adversarial_candidates", LTLO_REF(c.train.adversarial_candidates)));
    f.push_back(number<int>("train.subgoal_steps", LTLO_REF(c.train.subgoal_steps)));
    f.push_back(number<int>("train.batch_size", LTLO_REF(c.train.batch_size)));
    f.push_back(number<int>("train.q_update_interval", LTLO_REF(c.train.q_update_interval)));
    f.push_back(number<int>("train.q_target_update_interval", LTLO_REF(c.train.q_target_update_interval)));
    f.push_back(number<int>("train.v_update_interval", LTLO_REF(c.train.v_update_interval)));
    f.push_back(number<int>("train.v_target_update_interval", LTLO_REF(c.train.v_target_update_interval)));
    f.push_back(number<double>("train.her_ratio", LTLO_REF(c.train.her_ratio)));
    f.push_back(number<std::size_t>("train.buffer_size", LTLO_REF(c.train.buffer_size)));
    f.push_back(number<std::size_t>("train.trace_buffer_size", LTLO_REF(c.train.trace_buffer_size)));
    f.push_back(number<std::uint64_t>("train.learning_starts", LTLO_REF(c.train.learning_starts)));
    f.push_back(number<double>("train.lr", LTLO_REF(c.train.adam.lr)));
    f.push_back(number<double>("train.beta1", LTLO_REF(c.train.adam.beta1)));
    f.push_back(number<double>("train.beta2", LTLO_REF(c.train.adam.beta2)));
    f.push_back(number<double>("train.adam_eps", LTLO_REF(c.train.adam.eps)));
    f.push_back(number<std::uint64_t>("train.eval_interval", LTLO_REF(c.train.eval_interval)));
    f.push_back(number<int>("train.eval_episodes", LTLO_REF(c.train.eval_episodes)));
    f.push_back(flag("train.myopic", LTLO_REF(c.train.myopic)));
    f.push_back(flag("train.double_q", LTLO_REF(c.train.double_q)));
    f.push_back(flag("train.record_wall_time", LTLO_REF(c.train.record_wall_time)));

    f.push_back(text("eval.family", LTLO_REF(c.eval.family)));
    f.push_back(number<int>("eval.count", LTLO_REF(c.eval.count)));
    f.push_back(number<std::uint64_t>("eval.seed", LTLO_REF(c.eval.seed)));
    f.push_back(flag("eval.shield", LTLO_REF(c.eval.shield)));
    f.push_back(number<double>("eval.kappa", LTLO_REF(c.eval.kappa)));
    f.push_back(flag("eval.myopic", LTLO_REF(c.eval.myopic)));
    f.push_back(number<int>("eval.max_sequences", LTLO_REF(c.eval.max_sequences)));
    f.push_back(number<int>("eval.max_depth", LTLO_REF(c.eval.max_depth)));

    f.push_back(text("io.out_dir", LTLO_REF(c.out_dir)));
    f.push_back(number<std::uint64_t>("io.checkpoint_interval", LTLO_REF(c.train.checkpoint_interval)));
    return f;
  }();
  return all;
}

#undef LTLO_REF

const Field& field(const std::string& name) {
  for (const Field& f : fields())
    if (f.name == name) return f;
  throw ConfigError("unknown config key: " + name);
}

void check(const Config& c) {
  if (c.eval.family != "dnf" && c.eval.family != "recursive" && c.eval.family != "sequence")
    bad_value("eval.family", c.eval.family);
  if (c.eval.count < 1) bad_value("eval.count", std::to_string(c.eval.count));
  if (c.eval.max_sequences < 1) bad_value("eval.max_sequences", std::to_string(c.eval.max_sequences));
  if (c.eval.max_depth < 1) bad_value("eval.max_depth", std::to_string(c.eval.max_depth));
  try {
    validate(c.train);
  } catch (const InvalidConfig& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Config parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("unknown config key: " + section);
    for (const auto& [key, value] : body) entries.emplace_back(section + "." + key, value.data());
  }
  Config c;
  for (const auto& [name, value] : entries)
    if (name == "env.kind") field(name).set(c, value);
  for (const auto& [name, value] : entries)
    if (name != "env.kind") field(name).set(c, value);
  check(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_override(Config& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be section.key=value: " + std::string(assignment));
  const std::string name(assignment.substr(0, eq));
  field(name).set(config, std::string(assignment.substr(eq + 1)));
  check(config);
}

std::string to_ini(const Config& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.name.find('.');
    const std::string s = f.name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += f.name.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.name);
  return out;
}

DecompositionCaps caps_of(const EvalSettings& eval) {
  DecompositionCaps caps;
  caps.max_sequences = static_cast<std::size_t>(eval.max_sequences);
  caps.max_depth = static_cast<std::size_t>(eval.max_depth);
  return caps;
}

}  // namespace ltlo
