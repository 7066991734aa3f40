#pragma once

// Soft Actor-Critic over a single continuous action (λ).
//
// Actor: state → (mean, log_std), sample u ~ N(mean, std), a = tanh(u),
// λ = λ_min + (a + 1)/2 · (λ_max − λ_min). Twin critics Q(s, a) with
// soft-updated targets and an adaptive temperature α.

#include "mme/optim.hpp"
#include "mme/rng.hpp"
#include "mme/tensor.hpp"
#include "mme/trainer.hpp"

#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace mme {

struct SacConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double actor_learning_rate = 3e-4;
    double critic_learning_rate = 3e-4;
    double alpha_learning_rate = 3e-4;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 64;
    std::size_t hidden = 64;
    double lambda_min = -1.0;
    double lambda_max = 1.0;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    double target_entropy = -1.0;
    double initial_alpha = 0.2;
    std::size_t updates_per_step = 1;

    void validate() const;
};

struct Transition {
    std::vector<double> state;
    double pre_squash = 0;  // u before tanh
    double lambda = 0;      // squashed and scaled action
    double reward = 0;
    std::vector<double> next_state;
    bool terminal = false;

    bool operator==(const Transition&) const = default;
};

/// Bounded FIFO; the oldest transition is evicted at capacity.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_[i]; }

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

struct ActionSample {
    double pre_squash = 0;
    double squashed = 0;  // tanh(u) in [-1, 1]
    double lambda = 0;
    double log_prob = 0;
};

struct SacUpdateStats {
    double critic_loss = 0;
    double actor_loss = 0;
    double alpha = 0;
    double mean_log_prob = 0;
};

class SacAgent {
public:
    SacAgent(std::size_t state_dim, SacConfig config, std::uint64_t seed);

    /// Policy sample at `state`; the mean action when `stochastic` is false.
    ActionSample sample_action(std::span<const double> state, bool stochastic);
    ActionSample sample_action(std::span<const double> state, bool stochastic, Rng& rng) const;

    void store_transition(Transition t) { buffer_.push(std::move(t)); }

    /// One gradient step on critics, actor and temperature plus the target soft
    /// update. No-op (returns nullopt) while the buffer holds fewer than batch_size items.
    std::optional<SacUpdateStats> update();

    /// Stores (s_prev, λ_prev, r_t, s_t, terminal) when a previous action exists,
    /// runs the configured number of updates and samples λ_next at s_t.
    double agent_step(std::span<const double> state, double reward, bool terminal);
    /// Forgets the pending previous action (first call of a new run).
    void reset_pending() { pending_.reset(); }

    /// Critic target y for a batch of transitions, using the target critics.
    std::vector<double> critic_targets(std::span<const Transition> batch, Rng& rng) const;
    /// Mean squared error of both online critics against `targets`.
    double critic_loss(std::span<const Transition> batch, std::span<const double> targets) const;
    /// Regresses both critics onto the fixed targets (one Adam step); returns the loss before the step.
    double critic_step(std::span<const Transition> batch, std::span<const double> targets);
    /// θ′ ← τθ + (1−τ)θ′ for both target critics.
    void soft_update(double tau);

    double q_value(std::span<const double> state, double lambda, int critic = 0) const;
    double alpha() const;
    double lambda_from_squashed(double a) const;
    double squashed_from_lambda(double lambda) const;

    const ReplayBuffer& buffer() const { return buffer_; }
    const ParameterSet& params() const { return params_; }
    ParameterSet& params() { return params_; }
    const SacConfig& config() const { return config_; }
    std::size_t state_dim() const { return state_dim_; }
    std::size_t update_count() const { return updates_; }

private:
    std::size_t state_dim_;
    SacConfig config_;
    ParameterSet params_;
    ReplayBuffer buffer_;
    Adam actor_opt_;
    Adam critic_opt_;
    Adam alpha_opt_;
    Rng rng_;
    std::size_t updates_ = 0;

    struct Pending {
        std::vector<double> state;
        ActionSample action;
    };
    std::optional<Pending> pending_;
};

/// λ controller backed by a SAC agent.
class SacLambda final : public LambdaController {
public:
    explicit SacLambda(SacAgent& agent) : agent_(agent) {}
    double initial(std::span<const double> state) override;
    double next(std::span<const double> state, double reward, bool terminal) override;

private:
    SacAgent& agent_;
};

} // namespace mme
