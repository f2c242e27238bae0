#include "ltlo/executor.hpp"

#include <algorithm>
#include <limits>
#include <json.hpp>
#include <numeric>

namespace ltlo {

std::array<float, kNumActions> NetModel::q_values(const GridWorld& world, PropId p, std::span<const PropId> xi) const {
  return nets_.q_values(world.observe(), p, xi);
}

double NetModel::v_value(const GridWorld& world, std::span<const PropId> xi) const {
  return xi.empty() ? 0.0 : static_cast<double>(nets_.v_value(world.observe(), xi));
}

SubgoalSequence select_sequence(std::span<const SubgoalSequence> k, const GridWorld& world, const ValueModel& model) {
  if (k.empty()) throw EmptyK("no live subgoal sequence");
  const SubgoalSequence* best = nullptr;
  double best_v = -std::numeric_limits<double>::infinity();
  for (const SubgoalSequence& xi : k) {
    const double v = model.v_value(world, xi);
    const bool better = best == nullptr || v > best_v ||
                        (v == best_v && (xi.size() < best->size() || (xi.size() == best->size() && xi < *best)));
    if (better) {
      best = &xi;
      best_v = v;
    }
  }
  return *best;
}

ShieldedAction safe_action(const GridWorld& world, std::span<const PropId> xi, const ValueModel& model,
                           LabelSet unsafe, double kappa, bool myopic) {
  if (xi.empty()) throw std::invalid_argument("safe_action needs a subgoal");
  const auto rest = myopic ? std::span<const PropId>() : xi.subspan(1);
  const auto q = model.q_values(world, xi[0], rest);
  std::array<int, kNumActions> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return q[a] > q[b]; });
  ShieldedAction out;
  if (unsafe.empty()) {
    out.action = static_cast<Action>(order[0]);
    return out;
  }
  std::array<double, kNumActions> risk;
  risk.fill(-std::numeric_limits<double>::infinity());
  for (PropId u = 0; u < kMaxProps; ++u) {
    if (!unsafe.contains(u)) continue;
    const auto qu = model.q_values(world, u, {});
    for (int a = 0; a < kNumActions; ++a) risk[a] = std::max(risk[a], static_cast<double>(qu[a]));
  }
  for (int a : order) {
    if (risk[a] <= kappa) {
      out.action = static_cast<Action>(a);
      return out;
    }
    ++out.rejections;
  }
  int least = order[0];
  for (int a : order)
    if (risk[a] < risk[least]) least = a;
  out.action = static_cast<Action>(least);
  out.fallback = true;
  return out;
}

namespace {

void pop_and_prune(std::vector<SubgoalSequence>& k, LabelSet label, const Formula& residual) {
  for (SubgoalSequence& xi : k)
    if (!xi.empty() && label.contains(xi.front())) xi.erase(xi.begin());
  std::erase_if(k, [&](const SubgoalSequence& xi) { return !verify_sequence(residual, xi); });
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
}

bool plan_done(const std::vector<SubgoalSequence>& k) {
  return std::any_of(k.begin(), k.end(), [](const SubgoalSequence& xi) { return xi.empty(); });
}

}  // namespace

ExecutionReport execute(GridWorld world, const Formula& phi, const ValueModel& model, const ExecOptions& options) {
  ExecutionReport report;
  report.residual = simplify(phi);
  report.path.push_back(world.agent());
  if (report.residual.is_true()) {
    report.success = true;
    return report;
  }
  std::vector<SubgoalSequence> k = decompose(report.residual, world.alphabet(), options.caps).sequences;
  std::size_t longest = 0;
  for (const auto& xi : k) longest = std::max(longest, xi.size());
  report.step_cap_limit =
      options.max_steps > 0 ? options.max_steps : options.subgoal_steps * static_cast<int>(std::max<std::size_t>(longest, 1)) * 2;

  const Alphabet& alphabet = world.alphabet();
  LabelSet unsafe = unsafe_set(report.residual, alphabet);
  SubgoalSequence active;
  auto reselect = [&] {
    active = select_sequence(k, world, model);
    report.chosen.emplace_back(report.steps, active);
  };
  if (plan_done(k)) {
    report.success = holds_at_end(report.residual);
    return report;
  }
  reselect();

  while (true) {
    const ShieldedAction pick = options.shield ? safe_action(world, active, model, unsafe, options.kappa, options.myopic)
                                               : safe_action(world, active, model, LabelSet{}, options.kappa, options.myopic);
    if (pick.fallback) ++report.fallbacks;
    const auto env = world.step(pick.action);
    ++report.steps;
    report.actions.push_back(pick.action);
    report.labels.push_back(env.label);
    report.path.push_back(world.agent());
    report.residual = prog(env.label, report.residual);
    double reward = env.reward;
    bool done = false;
    if (!env.label.empty()) {
      report.events.push_back(ExecEvent{report.steps, world.agent(), env.label});
      if ((env.label.bits & unsafe.bits) != 0) ++report.violations;
      pop_and_prune(k, env.label, report.residual);
    }
    if (report.residual.is_true()) {
      reward = options.r_f;
      report.success = done = true;
    } else if (report.residual.is_false()) {
      reward = -options.r_f;
      report.violated = report.violations > 0;
      done = true;
    } else if (plan_done(k)) {
      report.success = holds_at_end(report.residual);
      reward = report.success ? options.r_f : -options.r_f;
      done = true;
    } else if (k.empty()) {
      reward = -options.r_f;
      done = true;
    } else if (report.steps >= report.step_cap_limit) {
      reward = -options.r_f;
      report.step_cap = done = true;
    }
    report.rewards.push_back(reward);
    report.total_return += reward;
    if (done) break;
    if (!env.label.empty()) {
      unsafe = unsafe_set(report.residual, alphabet);
      reselect();
    }
  }
  return report;
}

std::string report_json(const ExecutionReport& report, const Formula& phi, const Alphabet& alphabet) {
  nlohmann::ordered_json j;
  j["formula"] = to_string(phi, alphabet);
  j["success"] = report.success;
  j["return"] = report.total_return;
  j["steps"] = report.steps;
  j["chosen_sequence"] = report.chosen.empty() ? std::string() : to_string(report.chosen.front().second, alphabet);
  j["violations"] = report.violations;
  j["violated"] = report.violated;
  j["fallbacks"] = report.fallbacks;
  j["step_cap"] = report.step_cap;
  auto history = nlohmann::ordered_json::array();
  for (const auto& [step, xi] : report.chosen) history.push_back({{"step", step}, {"plan", to_string(xi, alphabet)}});
  j["history"] = history;
  auto events = nlohmann::ordered_json::array();
  for (const ExecEvent& e : report.events) {
    std::string names;
    for (PropId p = 0; p < alphabet.size(); ++p)
      if (e.label.contains(p)) names += (names.empty() ? "" : " ") + alphabet.name(p);
    events.push_back({{"step", e.step}, {"row", e.pos.row}, {"col", e.pos.col}, {"label", names}});
  }
  j["events"] = events;
  j["residual"] = to_string(report.residual, alphabet);
  return j.dump();
}

}  // namespace ltlo
