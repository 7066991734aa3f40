#include "mme/sac.hpp"

#include "mme/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mme {

using ad::Tape;
using ad::Var;

namespace {

const std::string kActor = "sac/actor";
const std::string kCritic[2] = {"sac/critic1", "sac/critic2"};
const std::string kTarget[2] = {"sac/target1", "sac/target2"};
const std::string kLogAlpha = "sac/log_alpha";
constexpr double kSquashEps = 1e-6;

Tensor rows_of(std::span<const Transition> batch, bool next) {
    const std::size_t dim = batch.empty() ? 0 : batch[0].state.size();
    Tensor t = Tensor::matrix(batch.size(), dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = next ? batch[i].next_state : batch[i].state;
        std::copy(s.begin(), s.end(), t.data() + i * dim);
    }
    return t;
}

struct PolicyOut {
    Var squashed;
    Var log_prob;
};

// Reparameterized policy sample: u = mean + std·eps, a = tanh(u).
PolicyOut policy(Tape& tape, const ParameterSet& params, const SacConfig& config, Var states, const Tensor& eps) {
    Var out = nn::mlp(tape, params, kActor, 3, states);
    Var mean = ad::slice_cols(out, 0, 1);
    Var log_std = ad::clamp(ad::slice_cols(out, 1, 1), config.log_std_min, config.log_std_max);
    Var u = ad::add(mean, ad::mul(ad::exp(log_std), tape.constant(eps)));
    Var a = ad::tanh(u);
    Tensor base = eps;
    for (auto& e : base.values()) e = -0.5 * e * e - 0.5 * std::log(2.0 * std::numbers::pi);
    Var correction = ad::log_clamped(ad::add_scalar(ad::scale(ad::square(a), -1.0), 1.0 + kSquashEps), 1e-300);
    Var log_prob = ad::sub(ad::sub(tape.constant(base), log_std), correction);
    return {a, log_prob};
}

Var critic(Tape& tape, const ParameterSet& params, const std::string& path, Var states, Var actions) {
    const Var parts[2] = {states, actions};
    return nn::mlp(tape, params, path, 3, ad::concat_cols(parts));
}

} // namespace

void SacConfig::validate() const {
    if (!(lambda_min < lambda_max)) throw std::invalid_argument("lambda range must satisfy min < max");
    if (buffer_capacity == 0 || batch_size == 0 || hidden == 0)
        throw std::invalid_argument("SAC capacity, batch size and width must be positive");
    if (tau < 0 || tau > 1) throw std::invalid_argument("tau must lie in [0, 1]");
    if (gamma < 0 || gamma > 1) throw std::invalid_argument("gamma must lie in [0, 1]");
    if (!(initial_alpha > 0)) throw std::invalid_argument("initial alpha must be positive");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

SacAgent::SacAgent(std::size_t state_dim, SacConfig config, std::uint64_t seed)
    : state_dim_(state_dim),
      config_(config),
      buffer_(config.buffer_capacity),
      actor_opt_(AdamConfig{config.actor_learning_rate}),
      critic_opt_(AdamConfig{config.critic_learning_rate}),
      alpha_opt_(AdamConfig{config.alpha_learning_rate}),
      rng_(derive_seed(seed, 0x5AC)) {
    config_.validate();
    if (state_dim == 0) throw std::invalid_argument("state dimension must be positive");
    Rng init(derive_seed(seed, 0x1417));
    const std::size_t h = config_.hidden;
    nn::init_mlp(params_, kActor, {state_dim, h, h, 2}, init);
    for (int k = 0; k < 2; ++k) {
        nn::init_mlp(params_, kCritic[k], {state_dim + 1, h, h, 1}, init);
        for (const auto& [path, value] : params_.subset(kCritic[k] + "/"))
            params_.add(kTarget[k] + path.substr(kCritic[k].size()), value);
    }
    params_.add(kLogAlpha, Tensor::scalar(std::log(config_.initial_alpha)));
}

double SacAgent::alpha() const { return std::exp(params_.at(kLogAlpha)[0]); }

double SacAgent::lambda_from_squashed(double a) const {
    const double lambda = config_.lambda_min + 0.5 * (a + 1.0) * (config_.lambda_max - config_.lambda_min);
    return std::clamp(lambda, config_.lambda_min, config_.lambda_max);
}

double SacAgent::squashed_from_lambda(double lambda) const {
    return 2.0 * (lambda - config_.lambda_min) / (config_.lambda_max - config_.lambda_min) - 1.0;
}

ActionSample SacAgent::sample_action(std::span<const double> state, bool stochastic) {
    return sample_action(state, stochastic, rng_);
}

ActionSample SacAgent::sample_action(std::span<const double> state, bool stochastic, Rng& rng) const {
    if (state.size() != state_dim_) throw std::invalid_argument("state length mismatch");
    Tape tape;
    Tensor eps = Tensor::scalar(stochastic ? rng.normal() : 0.0);
    PolicyOut p = policy(tape, params_, config_, tape.constant(Tensor({1, state_dim_}, {state.begin(), state.end()})), eps);
    ActionSample s;
    s.squashed = p.squashed.value()[0];
    s.pre_squash = std::atanh(std::clamp(s.squashed, -1.0 + 1e-15, 1.0 - 1e-15));
    s.lambda = lambda_from_squashed(s.squashed);
    s.log_prob = p.log_prob.value()[0];
    return s;
}

double SacAgent::q_value(std::span<const double> state, double lambda, int which) const {
    Tape tape;
    Var s = tape.constant(Tensor({1, state_dim_}, {state.begin(), state.end()}));
    Var a = tape.constant(Tensor::scalar(squashed_from_lambda(lambda)));
    return critic(tape, params_, kCritic[which], s, a).value()[0];
}

std::vector<double> SacAgent::critic_targets(std::span<const Transition> batch, Rng& rng) const {
    const std::size_t n = batch.size();
    Tape tape;
    Tensor eps = Tensor::matrix(n, 1);
    for (auto& e : eps.values()) e = rng.normal();
    Var next = tape.constant(rows_of(batch, true));
    PolicyOut p = policy(tape, params_, config_, next, eps);
    Var q1 = critic(tape, params_, kTarget[0], next, p.squashed);
    Var q2 = critic(tape, params_, kTarget[1], next, p.squashed);
    const Tensor& qmin = ad::minimum(q1, q2).value();
    const double a = alpha();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double soft = qmin[i] - a * p.log_prob.value()[i];
        y[i] = batch[i].reward + config_.gamma * (batch[i].terminal ? 0.0 : 1.0) * soft;
    }
    return y;
}

namespace {

Var critic_loss_on_tape(Tape& tape, const ParameterSet& params, const SacAgent& agent,
                        std::span<const Transition> batch, std::span<const double> targets) {
    const std::size_t n = batch.size();
    Var s = tape.constant(rows_of(batch, false));
    Tensor actions = Tensor::matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) actions[i] = agent.squashed_from_lambda(batch[i].lambda);
    Var a = tape.constant(actions);
    Var y = tape.constant(Tensor({n, 1}, {targets.begin(), targets.end()}));
    Var l1 = ad::mean_all(ad::square(ad::sub(critic(tape, params, kCritic[0], s, a), y)));
    Var l2 = ad::mean_all(ad::square(ad::sub(critic(tape, params, kCritic[1], s, a), y)));
    return ad::add(l1, l2);
}

} // namespace

double SacAgent::critic_loss(std::span<const Transition> batch, std::span<const double> targets) const {
    Tape tape;
    return critic_loss_on_tape(tape, params_, *this, batch, targets).value()[0];
}

double SacAgent::critic_step(std::span<const Transition> batch, std::span<const double> targets) {
    Tape tape;
    Var loss = critic_loss_on_tape(tape, params_, *this, batch, targets);
    tape.backward(loss);
    ParameterSet grads;
    tape.accumulate_gradients(grads);
    critic_opt_.step(params_, grads);
    return loss.value()[0];
}

void SacAgent::soft_update(double tau) {
    for (int k = 0; k < 2; ++k) {
        for (const auto& [path, online] : params_.subset(kCritic[k] + "/")) {
            Tensor& target = params_.at(kTarget[k] + path.substr(kCritic[k].size()));
            for (std::size_t i = 0; i < target.size(); ++i) target[i] = tau * online[i] + (1.0 - tau) * target[i];
        }
    }
}

std::optional<SacUpdateStats> SacAgent::update() {
    if (buffer_.size() < config_.batch_size) return std::nullopt;
    const std::size_t n = config_.batch_size;
    std::vector<Transition> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) batch.push_back(buffer_[rng_.uniform_index(buffer_.size())]);

    SacUpdateStats stats;
    const auto targets = critic_targets(batch, rng_);
    stats.critic_loss = critic_step(batch, targets);

    // Actor: minimize α·log π(ã|s) − min_k Q_k(s, ã).
    const double a = alpha();
    Tensor eps = Tensor::matrix(n, 1);
    for (auto& e : eps.values()) e = rng_.normal();
    Tape tape;
    Var s = tape.constant(rows_of(batch, false));
    PolicyOut p = policy(tape, params_, config_, s, eps);
    Var qmin = ad::minimum(critic(tape, params_, kCritic[0], s, p.squashed),
                           critic(tape, params_, kCritic[1], s, p.squashed));
    Var actor_loss = ad::mean_all(ad::sub(ad::scale(p.log_prob, a), qmin));
    tape.backward(actor_loss);
    ParameterSet grads = tape.gradients().subset(kActor + "/");
    actor_opt_.step(params_, grads);
    stats.actor_loss = actor_loss.value()[0];

    // Temperature: d/dlogα of −logα·(log π + H_target), averaged.
    double mean_lp = 0;
    for (double lp : p.log_prob.value().values()) mean_lp += lp;
    mean_lp /= static_cast<double>(n);
    ParameterSet alpha_grad;
    alpha_grad.add(kLogAlpha, Tensor::scalar(-(mean_lp + config_.target_entropy)));
    alpha_opt_.step(params_, alpha_grad);

    soft_update(config_.tau);
    ++updates_;
    stats.alpha = alpha();
    stats.mean_log_prob = mean_lp;
    return stats;
}

double SacAgent::agent_step(std::span<const double> state, double reward, bool terminal) {
    if (pending_) {
        Transition t;
        t.state = pending_->state;
        t.pre_squash = pending_->action.pre_squash;
        t.lambda = pending_->action.lambda;
        t.reward = reward;
        t.next_state.assign(state.begin(), state.end());
        t.terminal = terminal;
        store_transition(std::move(t));
        for (std::size_t k = 0; k < config_.updates_per_step; ++k) update();
    }
    const ActionSample next = sample_action(state, true);
    pending_ = Pending{{state.begin(), state.end()}, next};
    return next.lambda;
}

double SacLambda::initial(std::span<const double> state) {
    agent_.reset_pending();
    return agent_.agent_step(state, 0.0, false);
}

double SacLambda::next(std::span<const double> state, double reward, bool terminal) {
    return agent_.agent_step(state, reward, terminal);
}

} // namespace mme
