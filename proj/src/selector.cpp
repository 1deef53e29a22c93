#include "dcast/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dcast/errors.hpp"
#include "dcast/graph.hpp"
#include "dcast/serialize.hpp"

namespace dcast::selector {

std::vector<double> build_state(const std::vector<double>& window, const CommitteeForecast& cf) {
  if (window.empty()) throw ConfigError("build_state: empty window");
  std::vector<double> s;
  s.reserve(window.size() + kActions);
  s.insert(s.end(), window.begin(), window.end());
  s.insert(s.end(), cf.begin(), cf.end());
  return s;
}

EnvStep env_step(const std::vector<double>& state, int action, double actual_next,
                 const CommitteeForecast& next_cf, FeedbackMode mode, std::size_t window) {
  if (action < 0 || static_cast<std::size_t>(action) >= kActions)
    throw ConfigError("env_step: action out of range");
  if (state.size() != window + kActions)
    throw ConfigError("env_step: state length " + std::to_string(state.size()) +
                      " does not match window " + std::to_string(window));
  const double chosen = state[window + static_cast<std::size_t>(action)];
  const double err = chosen - actual_next;
  EnvStep out;
  out.reward = std::exp(-(err * err));
  out.next_state.reserve(window + kActions);
  out.next_state.insert(out.next_state.end(), state.begin() + 1,
                        state.begin() + static_cast<std::ptrdiff_t>(window));
  out.next_state.push_back(mode == FeedbackMode::Forecast ? chosen : actual_next);
  out.next_state.insert(out.next_state.end(), next_cf.begin(), next_cf.end());
  return out;
}

const char* agent_kind_name(AgentKind kind) {
  return kind == AgentKind::Crffnn ? "agent_crffnn" : "agent_ffnn";
}

std::string AgentArch::descriptor(std::size_t state_width) const {
  std::string d = std::string("v1:") + (kind == AgentKind::Crffnn ? "crffnn" : "ffnn") + ":s" +
                  std::to_string(state_width) + ":";
  if (kind == AgentKind::Crffnn) {
    d += "c" + std::to_string(conv_filters) + "k" + std::to_string(conv_kernel) + "s" +
         std::to_string(conv_stride) + "g" + std::to_string(gru_hidden) + "d" +
         std::to_string(dense);
  } else {
    for (auto h : ffnn_hidden) d += "d" + std::to_string(h);
  }
  return d;
}

QNetwork QNetwork::build(const AgentArch& arch, std::size_t state_width, Rng& rng) {
  if (state_width <= kActions) throw ConfigError("agent: state width must exceed action count");
  QNetwork q;
  q.arch_ = arch;
  q.state_width_ = state_width;
  q.fingerprint_ = dcast::fingerprint(arch.descriptor(state_width));
  auto& p = q.params_;
  if (arch.kind == AgentKind::Crffnn) {
    q.conv_ = nn::Conv1d(p, rng, 1, arch.conv_filters, arch.conv_kernel, arch.conv_stride,
                         "agent.conv");
    (void)q.conv_.out_len(state_width);  // construction-time shape check
    q.gru_ = nn::GruCell(p, rng, arch.conv_filters, arch.gru_hidden, "agent.gru");
    q.dense_.emplace_back(p, rng, arch.gru_hidden, arch.dense, "agent.dense");
    q.head_ = nn::Linear(p, rng, arch.dense, kActions, "agent.out");
  } else {
    std::size_t in = state_width;
    for (std::size_t i = 0; i < arch.ffnn_hidden.size(); ++i) {
      q.dense_.emplace_back(p, rng, in, arch.ffnn_hidden[i], "agent.d" + std::to_string(i));
      in = arch.ffnn_hidden[i];
    }
    q.head_ = nn::Linear(p, rng, in, kActions, "agent.out");
  }
  return q;
}

nn::Var QNetwork::forward(nn::Graph& g, const nn::Tensor& states) const {
  if (states.rank() != 2 || states.dim(1) != state_width_)
    throw ConfigError("agent: want [B," + std::to_string(state_width_) + "], got " +
                      states.shape_str());
  const std::size_t batch = states.dim(0);
  nn::Var x = g.input(states);
  if (arch_.kind == AgentKind::Crffnn) {
    nn::Var seq = g.reshape(x, {batch, state_width_, 1});
    nn::Var feat = g.relu(conv_.forward(g, params_, seq));
    nn::Var h = nn::run_gru(g, params_, gru_, feat);
    return head_.forward(g, params_, g.relu(dense_[0].forward(g, params_, h)));
  }
  nn::Var h = x;
  for (const auto& l : dense_) h = g.relu(l.forward(g, params_, h));
  return head_.forward(g, params_, h);
}

std::array<double, kActions> QNetwork::q_values(const std::vector<double>& state) const {
  if (state.size() != state_width_)
    throw ConfigError("q_values: state length " + std::to_string(state.size()) + ", want " +
                      std::to_string(state_width_));
  nn::Graph g;
  nn::Tensor x({1, state_width_});
  for (std::size_t i = 0; i < state.size(); ++i) x[i] = state[i];
  const nn::Tensor& out = g.value(forward(g, x));
  std::array<double, kActions> q;
  for (std::size_t i = 0; i < kActions; ++i) q[i] = out[i];
  return q;
}

int argmax_action(const std::array<double, kActions>& q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(kActions); ++i)
    if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
  return best;
}

int select_action(const std::array<double, kActions>& q, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("select_action: epsilon outside [0,1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon)
    return static_cast<int>(rng.uniform_int(kActions));
  return argmax_action(q);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (batch == 0 || batch > data_.size())
    throw ConfigError("replay: batch " + std::to_string(batch) + " vs size " +
                      std::to_string(data_.size()));
  // Floyd's sampling gives `batch` distinct indices; sorted for a canonical
  // (and therefore reproducible) accumulation order downstream.
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  for (std::size_t i = data_.size() - batch; i < data_.size(); ++i) {
    const std::size_t j = rng.uniform_int(i + 1);
    if (std::find(picked.begin(), picked.end(), j) != picked.end())
      picked.push_back(i);
    else
      picked.push_back(j);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

QNetworks make_qnetworks(const AgentArch& arch, std::size_t state_width, std::size_t sync_period,
                         Rng& rng) {
  QNetworks q;
  q.online = QNetwork::build(arch, state_width, rng);
  q.target = q.online;
  q.sync_period = sync_period;
  return q;
}

void sync_target(QNetworks& q) {
  q.target.params().copy_values_from(q.online.params());
  q.steps_since_sync = 0;
}

std::vector<double> bellman_targets(const std::vector<double>& rewards,
                                    const std::vector<char>& terminal,
                                    const nn::Tensor& q_online_next,
                                    const nn::Tensor& q_target_next, double gamma,
                                    TargetRule rule) {
  const std::size_t n = rewards.size();
  if (terminal.size() != n || q_online_next.dim(0) != n || q_target_next.dim(0) != n)
    throw ConfigError("bellman_targets: batch size mismatch");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("bellman_targets: gamma outside [0,1]");
  const std::size_t acts = q_online_next.dim(1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (terminal[i]) {
      y[i] = rewards[i];
      continue;
    }
    double future;
    if (rule == TargetRule::Double) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < acts; ++a)
        if (q_online_next.at(i, a) > q_online_next.at(i, best)) best = a;
      future = q_target_next.at(i, best);
    } else {
      future = q_target_next.at(i, 0);
      for (std::size_t a = 1; a < acts; ++a) future = std::max(future, q_target_next.at(i, a));
    }
    y[i] = rewards[i] + gamma * future;
  }
  return y;
}

double ddqn_update(const std::vector<const Transition*>& batch, QNetworks& q, double gamma,
                   double lr, TargetRule rule) {
  if (batch.empty()) throw ConfigError("ddqn_update: empty batch");
  const std::size_t n = batch.size();
  const std::size_t width = q.online.state_width();

  nn::Tensor s({n, width}), s2({n, width});
  std::vector<double> rewards(n);
  std::vector<char> terminal(n);
  std::vector<int> actions(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    if (t.state.size() != width || t.next_state.size() != width)
      throw ConfigError("ddqn_update: transition width mismatch");
    for (std::size_t j = 0; j < width; ++j) {
      s.at(i, j) = t.state[j];
      s2.at(i, j) = t.next_state[j];
    }
    rewards[i] = t.reward;
    terminal[i] = t.terminal ? 1 : 0;
    actions[i] = t.action;
  }

  nn::Tensor q_online_next, q_target_next;
  {
    nn::Graph g;
    q_online_next = g.value(q.online.forward(g, s2));
  }
  {
    nn::Graph g;
    q_target_next = g.value(q.target.forward(g, s2));
  }
  const std::vector<double> targets =
      bellman_targets(rewards, terminal, q_online_next, q_target_next, gamma, rule);

  nn::Graph g;
  nn::Var qa = g.select_actions(q.online.forward(g, s), actions);
  nn::Tensor y({n, 1});
  for (std::size_t i = 0; i < n; ++i) y.at(i, 0) = targets[i];
  nn::Var loss = g.mse(qa, g.input(std::move(y)));
  q.online.params().zero_grad();
  g.backward(loss);
  nn::adam_step(q.online.params(), lr);
  q.steps_since_sync += 1;
  return g.value(loss)[0];
}

ArirbesState::ArirbesState(std::size_t window, std::size_t patience, double min_improvement)
    : window_(window), patience_(patience), delta_(min_improvement) {
  if (window < 1) throw ConfigError("arirbes: smoothing window must be >= 1");
  if (patience < 1) throw ConfigError("arirbes: patience must be >= 1");
  if (min_improvement < 0.0) throw ConfigError("arirbes: delta must be >= 0");
}

std::optional<double> ArirbesState::smoothed() const {
  if (rewards_.empty()) return std::nullopt;
  const std::size_t n = std::min(window_, rewards_.size());
  double acc = 0.0;
  for (std::size_t i = rewards_.size() - n; i < rewards_.size(); ++i) acc += rewards_[i];
  return acc / static_cast<double>(n);
}

ArirbesDecision ArirbesState::push(double episode_reward) {
  rewards_.push_back(episode_reward);
  if (rewards_.size() < window_) return ArirbesDecision::Continue;
  double sr = 0.0;
  for (std::size_t i = rewards_.size() - window_; i < rewards_.size(); ++i) sr += rewards_[i];
  sr /= static_cast<double>(window_);
  if (!has_best_) {
    // the first full window seeds the best; no ratio is taken before that
    best_ = sr;
    has_best_ = true;
    counter_ = 0;
    return ArirbesDecision::Continue;
  }
  const double improvement_rate = sr / best_;
  if (improvement_rate >= 1.0 + delta_) {
    best_ = sr;
    counter_ = 0;
  } else {
    counter_ += 1;
  }
  return counter_ >= patience_ ? ArirbesDecision::Stop : ArirbesDecision::Continue;
}

namespace {

double epsilon_for_episode(std::size_t episode, const SelectorConfig& cfg) {
  const double decay_span = cfg.eps_decay_frac * static_cast<double>(cfg.max_episodes);
  if (decay_span <= 0.0) return cfg.eps_end;
  const double frac = std::min(1.0, static_cast<double>(episode) / decay_span);
  return cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);
}

std::vector<double> initial_window(const SeriesEnv& s, std::size_t window) {
  if (s.first_target < window)
    throw ConfigError("series env: first target " + std::to_string(s.first_target) +
                      " lacks a full window of " + std::to_string(window));
  if (s.end_target <= s.first_target || s.end_target > s.demand.size())
    throw ConfigError("series env: bad target range");
  if (s.forecasts.size() != s.end_target - s.first_target)
    throw ConfigError("series env: forecast count does not match target range");
  return std::vector<double>(
      s.demand.begin() + static_cast<std::ptrdiff_t>(s.first_target - window),
      s.demand.begin() + static_cast<std::ptrdiff_t>(s.first_target));
}

}  // namespace

TrainResult train_selector(const EnvTable& env, const SelectorConfig& cfg, std::uint64_t seed) {
  if (env.empty()) throw ConfigError("train_selector: empty environment");
  const auto t0 = std::chrono::steady_clock::now();
  Rng root(seed);
  Rng init_rng = root.fork(0xA11CE);
  Rng explore_rng = root.fork(0xB0B);
  Rng replay_rng = root.fork(0xCAFE);

  const std::size_t width = cfg.state_window + kActions;
  QNetworks q = make_qnetworks(cfg.arch, width, cfg.sync_period, init_rng);

  TrainResult result;
  result.agent = q.online;
  if (cfg.max_episodes == 0) return result;

  ReplayBuffer replay(cfg.replay_capacity);
  ArirbesState arirbes(cfg.arirbes.window, cfg.arirbes.patience, cfg.arirbes.delta);
  double best_smoothed = -1.0;
  std::size_t global_step = 0;

  for (std::size_t episode = 0; episode < cfg.max_episodes; ++episode) {
    const SeriesEnv& series = env[episode % env.size()];
    std::vector<double> window = initial_window(series, cfg.state_window);
    const double eps = epsilon_for_episode(episode, cfg);

    double reward_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t t = series.first_target; t < series.end_target; ++t) {
      const CommitteeForecast& cf = series.forecast_at(t);
      std::vector<double> state = build_state(window, cf);
      const int action = select_action(q.online.q_values(state), eps, explore_rng);
      const bool terminal = t + 1 == series.end_target;
      const CommitteeForecast& next_cf = terminal ? cf : series.forecast_at(t + 1);
      EnvStep step =
          env_step(state, action, series.demand[t], next_cf, cfg.feedback, cfg.state_window);
      reward_sum += step.reward;
      ++steps;
      window.assign(step.next_state.begin(),
                    step.next_state.begin() + static_cast<std::ptrdiff_t>(cfg.state_window));
      replay.push(Transition{std::move(state), action, step.reward, std::move(step.next_state),
                             terminal});
      if (replay.size() >= cfg.batch && global_step % cfg.update_every == 0) {
        const auto idx = replay.sample_indices(cfg.batch, replay_rng);
        std::vector<const Transition*> batch;
        batch.reserve(idx.size());
        for (std::size_t i : idx) batch.push_back(&replay.at(i));
        ddqn_update(batch, q, cfg.gamma, cfg.lr, cfg.target_rule);
        if (q.steps_since_sync >= q.sync_period) sync_target(q);
      }
      ++global_step;
    }

    const double episode_reward = reward_sum / static_cast<double>(steps);
    const ArirbesDecision decision = arirbes.push(episode_reward);
    const double smoothed = *arirbes.smoothed();
    result.log.push_back(RewardLogRow{episode_reward, smoothed});
    if (smoothed > best_smoothed) {
      best_smoothed = smoothed;
      result.agent = q.online;
    }
    result.episodes = episode + 1;
    if (cfg.arirbes.enabled && decision == ArirbesDecision::Stop) {
      result.stopped_early = true;
      break;
    }
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double greedy_mean_reward(const QNetwork& agent, const EnvTable& env, const SelectorConfig& cfg) {
  double reward_sum = 0.0;
  std::size_t steps = 0;
  for (const auto& series : env) {
    std::vector<double> window = initial_window(series, cfg.state_window);
    for (std::size_t t = series.first_target; t < series.end_target; ++t) {
      const CommitteeForecast& cf = series.forecast_at(t);
      const std::vector<double> state = build_state(window, cf);
      const int action = argmax_action(agent.q_values(state));
      const bool terminal = t + 1 == series.end_target;
      const CommitteeForecast& next_cf = terminal ? cf : series.forecast_at(t + 1);
      EnvStep step =
          env_step(state, action, series.demand[t], next_cf, cfg.feedback, cfg.state_window);
      reward_sum += step.reward;
      ++steps;
      window.assign(step.next_state.begin(),
                    step.next_state.begin() + static_cast<std::ptrdiff_t>(cfg.state_window));
    }
  }
  if (steps == 0) throw ConfigError("greedy_mean_reward: no steps");
  return reward_sum / static_cast<double>(steps);
}

std::function<int(const std::vector<double>&)> greedy_policy(const QNetwork& agent) {
  return
      [&agent](const std::vector<double>& state) { return argmax_action(agent.q_values(state)); };
}

SelectForecastResult select_and_forecast(
    const std::function<int(const std::vector<double>&)>& policy,
    const std::vector<std::vector<double>>& member_streams, std::vector<double> window,
    const data::TimeSeries& meta, FeedbackMode mode, data::RoundMode rounding) {
  if (member_streams.size() != kActions)
    throw ConfigError("select_and_forecast: want exactly 6 member streams");
  const std::size_t horizon = member_streams[0].size();
  for (const auto& s : member_streams)
    if (s.size() != horizon) throw ConfigError("select_and_forecast: ragged member streams");

  SelectForecastResult out;
  for (std::size_t i = 0; i < horizon; ++i) {
    CommitteeForecast cf;
    for (std::size_t j = 0; j < kActions; ++j) cf[j] = member_streams[j][i];
    const std::vector<double> state = build_state(window, cf);
    const int action = policy(state);
    if (action < 0 || static_cast<std::size_t>(action) >= kActions)
      throw ConfigError("select_and_forecast: policy returned a bad action");
    const double chosen = cf[static_cast<std::size_t>(action)];
    out.actions.push_back(action);
    out.transformed.push_back(chosen);
    window.erase(window.begin());
    // no demand is observed over the horizon, so both feedback modes roll
    // the chosen value forward
    window.push_back(chosen);
    (void)mode;
  }
  out.values = data::postprocess_series(out.transformed, meta, rounding);
  return out;
}

void save_agent(const std::string& path, const QNetwork& agent) {
  save_params(path, agent_kind_name(agent.arch().kind), agent.fingerprint(), agent.params());
}

QNetwork load_agent(const std::string& path, const AgentArch& arch, std::size_t state_width) {
  Rng rng(0);
  QNetwork q = QNetwork::build(arch, state_width, rng);
  load_params(path, agent_kind_name(arch.kind), q.fingerprint(), q.params());
  return q;
}

}  // namespace dcast::selector
