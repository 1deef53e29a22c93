#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcast/datapipe.hpp"
#include "dcast/ensembles.hpp"
#include "dcast/layers.hpp"
#include "dcast/params.hpp"
#include "dcast/rng.hpp"

namespace dcast::selector {

using ensemble::CommitteeForecast;
constexpr std::size_t kActions = ensemble::kCommitteeSize;

/// State layout: `window` past transformed demands, then the six committee
/// forecasts in action-index order.
std::vector<double> build_state(const std::vector<double>& window, const CommitteeForecast& cf);

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// What enters the demand window after a step: the chosen model's forecast
/// (paper-literal default) or the observed demand.
enum class FeedbackMode { Forecast, Actual };

/// Bellman target estimation: Double decouples argmax (online) from value
/// (target); MaxTarget takes the max over the target network directly.
enum class TargetRule { Double, MaxTarget };

struct EnvStep {
  std::vector<double> next_state;
  double reward = 0.0;
};

/// reward = exp(-(f_chosen - actual)^2); next state shifts the window left
/// one slot, fills the newest slot per the feedback mode, then appends the
/// fresh committee forecasts.
EnvStep env_step(const std::vector<double>& state, int action, double actual_next,
                 const CommitteeForecast& next_cf, FeedbackMode mode, std::size_t window);

enum class AgentKind { Ffnn, Crffnn };

struct AgentArch {
  AgentKind kind = AgentKind::Crffnn;
  // conv -> recurrent -> feedforward sizes (Crffnn)
  std::size_t conv_filters = 8;
  std::size_t conv_kernel = 5;
  std::size_t conv_stride = 1;
  std::size_t gru_hidden = 32;
  std::size_t dense = 32;
  // dense stack (Ffnn agent)
  std::vector<std::size_t> ffnn_hidden{64, 32};

  std::string descriptor(std::size_t state_width) const;
};

/// Q-network over the full state vector; outputs one Q-value per action.
class QNetwork {
 public:
  QNetwork() = default;
  static QNetwork build(const AgentArch& arch, std::size_t state_width, Rng& rng);

  /// [batch, state_width] -> [batch, 6], recorded on the graph.
  nn::Var forward(nn::Graph& g, const nn::Tensor& states) const;

  std::array<double, kActions> q_values(const std::vector<double>& state) const;

  std::size_t state_width() const { return state_width_; }
  const AgentArch& arch() const { return arch_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  nn::NetworkParams& params() { return params_; }
  const nn::NetworkParams& params() const { return params_; }

 private:
  AgentArch arch_;
  std::size_t state_width_ = 0;
  std::uint64_t fingerprint_ = 0;
  mutable nn::NetworkParams params_;
  std::vector<nn::Linear> dense_;
  nn::Linear head_;
  nn::Conv1d conv_;
  nn::GruCell gru_;
};

/// Argmax with ties resolved to the lowest index.
int argmax_action(const std::array<double, kActions>& q);

/// Epsilon-greedy: uniform random with probability epsilon, argmax otherwise.
int select_action(const std::array<double, kActions>& q, double epsilon, Rng& rng);

/// Bounded ring of transitions with uniform without-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  /// `batch` distinct indices (ascending). batch must not exceed size().
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

/// Online/target pair with the sync bookkeeping.
struct QNetworks {
  QNetwork online;
  QNetwork target;
  std::size_t sync_period = 250;
  std::size_t steps_since_sync = 0;
};

QNetworks make_qnetworks(const AgentArch& arch, std::size_t state_width, std::size_t sync_period,
                         Rng& rng);

/// Copies online weights into the target network and resets the counter.
void sync_target(QNetworks& q);

/// Per-transition regression targets. q_*_next are [batch, actions] Q-value
/// tables for the successor states. Terminal transitions get y = r.
std::vector<double> bellman_targets(const std::vector<double>& rewards,
                                    const std::vector<char>& terminal,
                                    const nn::Tensor& q_online_next,
                                    const nn::Tensor& q_target_next, double gamma,
                                    TargetRule rule);

/// One optimizer step on the online network from a sampled batch; the target
/// network is read-only here. Returns the batch loss.
double ddqn_update(const std::vector<const Transition*>& batch, QNetworks& q, double gamma,
                   double lr, TargetRule rule);

enum class ArirbesDecision { Continue, Stop };

/// Average-reward-improvement early stopping: smooth episode rewards over a
/// trailing window, track the improvement ratio against the best smoothed
/// reward, stop after `patience` consecutive misses of the 1+delta bar.
class ArirbesState {
 public:
  ArirbesState(std::size_t window, std::size_t patience, double min_improvement);

  ArirbesDecision push(double episode_reward);

  const std::vector<double>& rewards() const { return rewards_; }
  std::size_t counter() const { return counter_; }
  bool has_best() const { return has_best_; }
  double best() const { return best_; }

  /// Mean of the last min(window, count) rewards; the strict Eq-style value
  /// once a full window exists.
  std::optional<double> smoothed() const;

 private:
  std::size_t window_;
  std::size_t patience_;
  double delta_;
  std::vector<double> rewards_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t counter_ = 0;
};

struct ArirbesConfig {
  bool enabled = true;
  std::size_t window = 20;  // smoothing window n
  std::size_t patience = 15;
  double delta = 0.005;  // minimum improvement rate above 1.0
};

struct SelectorConfig {
  AgentArch arch;
  std::size_t state_window = 35;
  double gamma = 0.9;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t replay_capacity = 50000;
  std::size_t sync_period = 250;
  std::size_t update_every = 1;  // env steps per ddqn_update
  std::size_t max_episodes = 1000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_frac = 0.5;  // fraction of max_episodes over which epsilon decays
  FeedbackMode feedback = FeedbackMode::Forecast;
  TargetRule target_rule = TargetRule::Double;
  ArirbesConfig arirbes;
};

/// One series' view of the frozen-committee environment: transformed demand
/// plus the six one-step forecasts for every decision target index in
/// [first_target, end_target).
struct SeriesEnv {
  std::vector<double> demand;
  std::size_t first_target = 0;
  std::size_t end_target = 0;
  std::vector<CommitteeForecast> forecasts;

  const CommitteeForecast& forecast_at(std::size_t t) const {
    return forecasts[t - first_target];
  }
};

using EnvTable = std::vector<SeriesEnv>;

struct RewardLogRow {
  double raw = 0.0;
  double smoothed = 0.0;
};

struct TrainResult {
  QNetwork agent;  // snapshot at the best smoothed episode reward
  std::vector<RewardLogRow> log;
  std::size_t episodes = 0;
  bool stopped_early = false;
  double train_seconds = 0.0;
};

/// The training loop: episodes cycle through the series; each episode walks
/// that series' decision steps with an epsilon-greedy policy, pushes
/// transitions into replay, and updates the online network from sampled
/// batches with periodic target syncs. Stops on ARIRBES (when enabled) or
/// after max_episodes.
TrainResult train_selector(const EnvTable& env, const SelectorConfig& cfg, std::uint64_t seed);

/// Mean per-step reward of the greedy (epsilon = 0) policy over the table.
double greedy_mean_reward(const QNetwork& agent, const EnvTable& env, const SelectorConfig& cfg);

/// Greedy policy closure over a trained network.
std::function<int(const std::vector<double>&)> greedy_policy(const QNetwork& agent);

struct SelectForecastResult {
  std::vector<long long> values;      // postprocessed integers
  std::vector<double> transformed;    // chosen values in transformed space
  std::vector<int> actions;
};

/// Walks the forecast horizon: at each step the policy picks among the
/// members' step forecasts, the chosen value enters the rolling window per
/// the feedback mode, and the chosen sequence is postprocessed at the end.
/// member_streams[j][i] is member j's forecast for step i (each member
/// recursing on its own history upstream).
SelectForecastResult select_and_forecast(
    const std::function<int(const std::vector<double>&)>& policy,
    const std::vector<std::vector<double>>& member_streams, std::vector<double> window,
    const data::TimeSeries& meta, FeedbackMode mode,
    data::RoundMode rounding = data::RoundMode::Nearest);

const char* agent_kind_name(AgentKind kind);

void save_agent(const std::string& path, const QNetwork& agent);
QNetwork load_agent(const std::string& path, const AgentArch& arch, std::size_t state_width);

}  // namespace dcast::selector
