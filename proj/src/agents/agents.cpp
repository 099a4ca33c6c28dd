#include "offload/agents/agents.hpp"

#include <cmath>
#include <stdexcept>

namespace offload::agents {

namespace {

constexpr int kStateDim = 5;

void check_state(const StateVec& s) {
    for (float v : s) {
        if (!std::isfinite(v)) throw std::invalid_argument("agent: non-finite state");
    }
}

void check_experience(const Experience& e, ModelKind expected) {
    if (e.kind != expected) throw std::invalid_argument("agent: experience model kind mismatch");
    if (e.action >= kActionCount) throw std::invalid_argument("agent: action out of range");
    if (!std::isfinite(e.reward)) throw std::invalid_argument("agent: non-finite reward");
    check_state(e.state);
    check_state(e.next_state);
}

std::vector<nn::LayerSpec> actor_shape() {
    return {{256, nn::Activation::tanh}, {256, nn::Activation::tanh},
            {kActionCount, nn::Activation::softmax}};
}

std::vector<nn::LayerSpec> critic_shape() {
    return {{256, nn::Activation::tanh}, {256, nn::Activation::tanh},
            {1, nn::Activation::identity}};
}

std::vector<nn::LayerSpec> qnet_shape() {
    return {{256, nn::Activation::relu},
            {256, nn::Activation::relu},
            {256, nn::Activation::relu},
            {256, nn::Activation::relu},
            {kActionCount, nn::Activation::identity}};
}

}  // namespace

AcAgent::AcAgent(const AcConfig& cfg)
    : actor_(kStateDim, actor_shape(), mix_seed(cfg.init_seed, 1)),
      critic_(kStateDim, critic_shape(), mix_seed(cfg.init_seed, 2)),
      actor_opt_(actor_.make_adam(cfg.learning_rate)),
      critic_opt_(critic_.make_adam(cfg.learning_rate)),
      gamma_(cfg.gamma),
      policy_rng_(cfg.policy_seed) {}

AgentDecision AcAgent::select_action(const StateVec& s) {
    check_state(s);
    const auto probs = actor_.evaluate(std::span<const float>(s.data(), s.size()));

    // Inverse-CDF sample over the 3-way distribution; any residual
    // rounding mass falls on the last action.
    const double u = policy_rng_.u01();
    int action = kActionCount - 1;
    double cum = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
        cum += probs[a];
        if (u < cum) {
            action = a;
            break;
        }
    }

    AgentDecision d;
    d.action = action;
    d.probabilities = std::array<float, 3>{probs[0], probs[1], probs[2]};
    return d;
}

AcTrainReport AcAgent::train_step(const Experience& e) {
    check_experience(e, ModelKind::ac);

    const std::span<const float> s(e.state.data(), e.state.size());
    const std::span<const float> s_next(e.next_state.data(), e.next_state.size());

    // Bootstrap value first so the critic's cache for s stays fresh.
    double v_next = 0.0;
    if (!e.done) {
        v_next = critic_.evaluate(s_next)[0];
    }

    auto critic_cache = critic_.forward(s);
    const double v = critic_cache.output()[0];
    const double td = e.reward + static_cast<double>(gamma_) * v_next - v;

    // Critic: L = d^2 with d's -v term the only parameter path, so
    // dL/dV(s) = -2d.
    const float dv = static_cast<float>(-2.0 * td);
    auto critic_grads = critic_.backward(critic_cache, std::span<const float>(&dv, 1));
    adam_step(critic_, critic_opt_, critic_grads);

    // Actor: L = -d * log pi(a|s), gradient w.r.t. the probability of the
    // taken action is -d / pi(a|s); backward applies the softmax Jacobian.
    auto actor_cache = actor_.forward(s);
    const auto& probs = actor_cache.output();
    const double pa = std::max(static_cast<double>(probs[e.action]), 1e-12);
    std::array<float, 3> dprobs{0.0f, 0.0f, 0.0f};
    dprobs[e.action] = static_cast<float>(-td / pa);
    auto actor_grads = actor_.backward(actor_cache, std::span<const float>(dprobs.data(), 3));
    adam_step(actor_, actor_opt_, actor_grads);

    AcTrainReport report;
    report.td_error = static_cast<float>(td);
    report.critic_loss = static_cast<float>(td * td);
    report.actor_loss = static_cast<float>(-td * std::log(pa));
    return report;
}

ModelParameters AcAgent::parameters() const {
    ModelParameters p;
    p.kind = ModelKind::ac;
    p.weights = actor_.flatten_params();
    const auto critic_flat = critic_.flatten_params();
    p.weights.insert(p.weights.end(), critic_flat.begin(), critic_flat.end());
    return p;
}

void AcAgent::set_parameters(const ModelParameters& p) {
    if (p.kind != ModelKind::ac) throw std::invalid_argument("set_parameters: kind mismatch");
    if (p.weights.size() != parameter_count()) {
        throw std::invalid_argument("set_parameters: weight count mismatch");
    }
    const std::span<const float> flat(p.weights);
    actor_.unflatten_params(flat.subspan(0, actor_.param_count()));
    critic_.unflatten_params(flat.subspan(actor_.param_count()));
}

void AcAgent::reset_optimizer() {
    actor_opt_ = actor_.make_adam(actor_opt_.learning_rate);
    critic_opt_ = critic_.make_adam(critic_opt_.learning_rate);
}

size_t AcAgent::actor_param_count() {
    size_t n = 0;
    int prev = kStateDim;
    for (const auto& l : actor_shape()) {
        n += static_cast<size_t>(prev) * l.width + l.width;
        prev = l.width;
    }
    return n;
}

size_t AcAgent::critic_param_count() {
    size_t n = 0;
    int prev = kStateDim;
    for (const auto& l : critic_shape()) {
        n += static_cast<size_t>(prev) * l.width + l.width;
        prev = l.width;
    }
    return n;
}

DqnAgent::DqnAgent(const DqnConfig& cfg)
    : qnet_(kStateDim, qnet_shape(), mix_seed(cfg.init_seed, 1)),
      opt_(qnet_.make_adam(cfg.learning_rate)),
      gamma_(cfg.gamma),
      epsilon_(cfg.epsilon_start),
      epsilon_decay_(cfg.epsilon_decay),
      epsilon_min_(cfg.epsilon_min),
      explore_rng_(cfg.explore_seed) {}

AgentDecision DqnAgent::select_action(const StateVec& s) {
    check_state(s);
    const auto q = qnet_.evaluate(std::span<const float>(s.data(), s.size()));

    AgentDecision d;
    d.q_values = std::array<float, 3>{q[0], q[1], q[2]};

    if (explore_rng_.u01() < epsilon_) {
        d.action = static_cast<int>(explore_rng_.below(kActionCount));
    } else {
        int best = 0;
        for (int a = 1; a < kActionCount; ++a) {
            if (q[a] > q[best]) best = a;  // strict: ties keep the lowest index
        }
        d.action = best;
    }

    epsilon_ = std::max(epsilon_min_, epsilon_ * epsilon_decay_);
    return d;
}

DqnTrainReport DqnAgent::train_step(const Experience& e) {
    check_experience(e, ModelKind::dqn);

    const std::span<const float> s(e.state.data(), e.state.size());
    const std::span<const float> s_next(e.next_state.data(), e.next_state.size());

    double target = e.reward;
    if (!e.done) {
        const auto qn = qnet_.evaluate(s_next);
        double qmax = qn[0];
        for (int a = 1; a < kActionCount; ++a) {
            if (qn[a] > qmax) qmax = qn[a];
        }
        target += static_cast<double>(gamma_) * qmax;
    }

    auto cache = qnet_.forward(s);
    const double q_taken = cache.output()[e.action];
    const double err = q_taken - target;

    // L = (Q(s,a) - y)^2 on the taken action only.
    std::array<float, 3> dq{0.0f, 0.0f, 0.0f};
    dq[e.action] = static_cast<float>(2.0 * err);
    auto grads = qnet_.backward(cache, std::span<const float>(dq.data(), 3));
    adam_step(qnet_, opt_, grads);

    DqnTrainReport report;
    report.td_target = static_cast<float>(target);
    report.loss = static_cast<float>(err * err);
    return report;
}

ModelParameters DqnAgent::parameters() const {
    ModelParameters p;
    p.kind = ModelKind::dqn;
    p.weights = qnet_.flatten_params();
    return p;
}

void DqnAgent::set_parameters(const ModelParameters& p) {
    if (p.kind != ModelKind::dqn) throw std::invalid_argument("set_parameters: kind mismatch");
    if (p.weights.size() != parameter_count()) {
        throw std::invalid_argument("set_parameters: weight count mismatch");
    }
    qnet_.unflatten_params(p.weights);
}

void DqnAgent::reset_optimizer() { opt_ = qnet_.make_adam(opt_.learning_rate); }

size_t DqnAgent::parameter_count() {
    size_t n = 0;
    int prev = kStateDim;
    for (const auto& l : qnet_shape()) {
        n += static_cast<size_t>(prev) * l.width + l.width;
        prev = l.width;
    }
    return n;
}

}  // namespace offload::agents
