#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "offload/nn/net.hpp"
#include "offload/rng.hpp"
#include "offload/types.hpp"

namespace offload::agents {

inline constexpr int kActionCount = 3;  // 0 local, 1 MEC, 2 cloud

struct AgentDecision {
    int action = 0;
    std::optional<std::array<float, 3>> probabilities;  // AC
    std::optional<std::array<float, 3>> q_values;       // DQN
    double decision_elapsed_s = 0.0;
};

struct AcTrainReport {
    float td_error = 0.0f;
    float critic_loss = 0.0f;
    float actor_loss = 0.0f;
};

struct DqnTrainReport {
    float td_target = 0.0f;
    float loss = 0.0f;
};

struct AcConfig {
    float gamma = 0.99f;
    float learning_rate = 1e-5f;
    uint64_t init_seed = 1;
    uint64_t policy_seed = 2;
};

// Actor-Critic agent. Actor 5-256-256-3 (tanh hidden, softmax head),
// critic 5-256-256-1 (tanh hidden, bare scalar output). Trained online,
// one transition per step: the critic regresses the TD error, the actor
// follows the policy gradient weighted by that TD error as advantage.
// Bootstrap values are treated as constants (semi-gradient TD).
class AcAgent {
public:
    explicit AcAgent(const AcConfig& cfg);

    // Samples an action from the actor's distribution. Does not mutate
    // any parameters. Throws on non-finite state.
    AgentDecision select_action(const StateVec& s);

    // One online update from a single transition:
    //   d = r + gamma * V(s') - V(s)   (V(s') = 0 when done)
    //   critic minimizes d^2, actor minimizes -d * log pi(a|s),
    // each with one Adam step. Ordering of network evaluations is fixed:
    // critic(s') first (when needed), then critic(s), then actor(s).
    AcTrainReport train_step(const Experience& e);

    ModelParameters parameters() const;
    void set_parameters(const ModelParameters& p);  // weights only

    // Clears Adam moments and step count (keeps the learning rate); a
    // freshly installed model starts optimizing from scratch.
    void reset_optimizer();

    static size_t actor_param_count();
    static size_t critic_param_count();
    static size_t parameter_count() { return actor_param_count() + critic_param_count(); }

    const nn::DenseNet& actor() const { return actor_; }
    const nn::DenseNet& critic() const { return critic_; }
    nn::DenseNet& actor_mut() { return actor_; }
    nn::DenseNet& critic_mut() { return critic_; }
    const nn::AdamState& actor_opt() const { return actor_opt_; }
    const nn::AdamState& critic_opt() const { return critic_opt_; }
    float gamma() const { return gamma_; }

private:
    nn::DenseNet actor_;
    nn::DenseNet critic_;
    nn::AdamState actor_opt_;
    nn::AdamState critic_opt_;
    float gamma_;
    Rng policy_rng_;
};

struct DqnConfig {
    float gamma = 0.99f;
    float learning_rate = 1e-5f;
    float epsilon_start = 1.0f;
    float epsilon_decay = 0.999f;
    float epsilon_min = 0.05f;
    uint64_t init_seed = 1;
    uint64_t explore_seed = 2;
};

// DQN agent: 5-256-256-256-256-3, ReLU hidden layers, linear Q head.
// Online updates on single transitions, no replay buffer and no target
// network; the TD target is treated as a constant.
class DqnAgent {
public:
    explicit DqnAgent(const DqnConfig& cfg);

    // Epsilon-greedy: with probability epsilon a uniform action, else
    // the argmax of the Q-values with ties broken toward the lowest
    // action index. Epsilon decays multiplicatively after every call,
    // floored at epsilon_min. Q-values are recorded either way.
    AgentDecision select_action(const StateVec& s);

    // One online update: y = r + gamma * max_a Q(s',a) (0 bootstrap when
    // done); squared error on the taken action's Q only; one Adam step.
    DqnTrainReport train_step(const Experience& e);

    ModelParameters parameters() const;
    void set_parameters(const ModelParameters& p);  // weights only

    // Clears Adam moments and step count (keeps the learning rate).
    void reset_optimizer();

    static size_t parameter_count();

    float epsilon() const { return epsilon_; }
    void set_epsilon(float e) { epsilon_ = e; }
    const nn::DenseNet& qnet() const { return qnet_; }
    nn::DenseNet& qnet_mut() { return qnet_; }
    const nn::AdamState& opt() const { return opt_; }
    float gamma() const { return gamma_; }

private:
    nn::DenseNet qnet_;
    nn::AdamState opt_;
    float gamma_;
    float epsilon_;
    float epsilon_decay_;
    float epsilon_min_;
    Rng explore_rng_;
};

}  // namespace offload::agents
