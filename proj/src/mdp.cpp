#include "mvi/mdp.hpp"

#include <cmath>
#include <sstream>

#include "mvi/errors.hpp"
#include "mvi/rng.hpp"

namespace mvi {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kResidualTol = 1e-9;

void require_discounted(const TabularMdp& mdp, const char* op) {
  if (!(mdp.gamma() < 1.0)) {
    throw SingularSystem(std::string(op) + " requires gamma < 1");
  }
}

Vec one_hot(int n, int k) {
  Vec v = Vec::Zero(n);
  v(k) = 1.0;
  return v;
}

Vec flat_dirichlet(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.exponential();
  return v / v.sum();
}

TabularMdp absorb_unknown(const TabularMdp& mdp, const std::set<int>& known, double reward) {
  for (int s : known) {
    if (s < 0 || s >= mdp.n_states()) throw InvalidModel("known state out of range");
  }
  Mat p = mdp.transition();
  Vec r = mdp.mean_reward();
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (known.count(s)) continue;
    for (int a = 0; a < mdp.n_actions(); ++a) {
      p.row(mdp.index(s, a)).setZero();
      p(mdp.index(s, a), s) = 1.0;
      r(mdp.index(s, a)) = reward;
    }
  }
  return TabularMdp(mdp.n_states(), mdp.n_actions(), std::move(p), std::move(r), mdp.r_max(),
                    mdp.gamma(), mdp.initial());
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, Mat transition, Vec mean_reward,
                       double r_max, double gamma, Vec initial)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      mean_reward_(std::move(mean_reward)),
      r_max_(r_max),
      gamma_(gamma),
      initial_(std::move(initial)) {
  validate();
}

TabularMdp::TabularMdp(int n_states, int n_actions, Mat transition, Vec mean_reward,
                       double r_max, double gamma, int initial_state)
    : TabularMdp(n_states, n_actions, std::move(transition), std::move(mean_reward), r_max,
                 gamma, (initial_state >= 0 && initial_state < n_states)
                            ? one_hot(n_states, initial_state)
                            : Vec::Constant(1, -1.0)) {}

void TabularMdp::validate() const {
  if (n_states_ < 1 || n_actions_ < 1) throw InvalidModel("MDP needs at least one state and action");
  if (transition_.rows() != n_pairs() || transition_.cols() != n_states_) {
    throw InvalidModel("transition must have n_states*n_actions rows and n_states columns");
  }
  if (mean_reward_.size() != n_pairs()) throw InvalidModel("mean_reward has wrong size");
  if (initial_.size() != n_states_) throw InvalidModel("initial distribution has wrong size");
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw InvalidModel("gamma must lie in [0, 1]");
  if (!(r_max_ >= 0.0) || !std::isfinite(r_max_)) throw InvalidModel("r_max must be finite and >= 0");
  for (int i = 0; i < n_pairs(); ++i) {
    if ((transition_.row(i).array() < 0.0).any()) throw InvalidModel("negative transition probability");
    if (std::abs(transition_.row(i).sum() - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "transition row " << i << " sums to " << transition_.row(i).sum();
      throw InvalidModel(os.str());
    }
    if (mean_reward_(i) < 0.0 || mean_reward_(i) > r_max_) {
      throw InvalidModel("mean reward outside [0, r_max]");
    }
  }
  if ((initial_.array() < 0.0).any() || std::abs(initial_.sum() - 1.0) > kStochasticTol) {
    throw InvalidModel("initial distribution must be nonnegative and sum to 1");
  }
}

bool TabularMdp::operator==(const TabularMdp& other) const {
  return n_states_ == other.n_states_ && n_actions_ == other.n_actions_ &&
         transition_ == other.transition_ && mean_reward_ == other.mean_reward_ &&
         r_max_ == other.r_max_ && gamma_ == other.gamma_ && initial_ == other.initial_;
}

Policy::Policy(Mat action_probs) : probs_(std::move(action_probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) throw InvalidModel("empty policy");
  for (int s = 0; s < probs_.rows(); ++s) {
    if ((probs_.row(s).array() < 0.0).any() ||
        std::abs(probs_.row(s).sum() - 1.0) > kStochasticTol) {
      throw InvalidModel("policy row " + std::to_string(s) + " is not a distribution");
    }
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Mat::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
  Mat probs = Mat::Zero(static_cast<int>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) throw InvalidModel("action out of range");
    probs(static_cast<int>(s), actions[s]) = 1.0;
  }
  return Policy(std::move(probs));
}

std::vector<Policy> Policy::all_deterministic(int n_states, int n_actions) {
  std::vector<Policy> out;
  std::vector<int> digits(n_states, 0);
  while (true) {
    out.push_back(deterministic(digits, n_actions));
    int s = 0;
    while (s < n_states && ++digits[s] == n_actions) digits[s++] = 0;
    if (s == n_states) break;
  }
  return out;
}

void check_compatible(const TabularMdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw InvalidModel("policy shape does not match the MDP");
  }
}

Mat state_action_transition(const TabularMdp& mdp, const Policy& policy) {
  check_compatible(mdp, policy);
  const int n = mdp.n_pairs();
  const int na = mdp.n_actions();
  Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int s2 = 0; s2 < mdp.n_states(); ++s2) {
      const double p = mdp.transition()(i, s2);
      for (int a2 = 0; a2 < na; ++a2) out(i, s2 * na + a2) = p * policy(s2, a2);
    }
  }
  return out;
}

Mat state_transition(const TabularMdp& mdp, const Policy& policy) {
  check_compatible(mdp, policy);
  Mat out = Mat::Zero(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      out.row(s) += policy(s, a) * mdp.transition().row(mdp.index(s, a));
    }
  }
  return out;
}

Vec initial_state_action(const TabularMdp& mdp, const Policy& policy) {
  check_compatible(mdp, policy);
  Vec nu(mdp.n_pairs());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) nu(mdp.index(s, a)) = mdp.initial()(s) * policy(s, a);
  }
  return nu;
}

Vec solve_q_pi(const TabularMdp& mdp, const Policy& policy) {
  require_discounted(mdp, "solve_q_pi");
  const Mat ppi = state_action_transition(mdp, policy);
  const Mat system = Mat::Identity(mdp.n_pairs(), mdp.n_pairs()) - mdp.gamma() * ppi;
  Vec q = system.partialPivLu().solve(mdp.mean_reward());
  const double residual = (system * q - mdp.mean_reward()).lpNorm<Eigen::Infinity>();
  if (!(residual <= kResidualTol)) {
    throw SingularSystem("Bellman solve residual " + std::to_string(residual));
  }
  return q;
}

Vec solve_v_pi(const TabularMdp& mdp, const Policy& policy) {
  const Vec q = solve_q_pi(mdp, policy);
  Vec v = Vec::Zero(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) v(s) += policy(s, a) * q(mdp.index(s, a));
  }
  return v;
}

Vec solve_d_pi(const TabularMdp& mdp, const Policy& policy) {
  require_discounted(mdp, "solve_d_pi");
  const Mat ppi = state_action_transition(mdp, policy);
  const Mat system = Mat::Identity(mdp.n_pairs(), mdp.n_pairs()) - mdp.gamma() * ppi.transpose();
  const Vec source = initial_state_action(mdp, policy);
  Vec d = system.partialPivLu().solve(source);
  const double residual = (system * d - source).lpNorm<Eigen::Infinity>();
  if (!(residual <= kResidualTol)) {
    throw SingularSystem("occupancy solve residual " + std::to_string(residual));
  }
  // Round-off can leave tiny negatives on pairs pi never takes.
  d = d.cwiseMax(0.0);
  return d;
}

Vec state_occupancy(const TabularMdp& mdp, const Policy& policy) {
  const Vec d = solve_d_pi(mdp, policy);
  Vec out = Vec::Zero(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) out(s) += d(mdp.index(s, a));
  }
  return out;
}

double j_pi(const TabularMdp& mdp, const Policy& policy) {
  const Vec q = solve_q_pi(mdp, policy);
  const double value = initial_state_action(mdp, policy).dot(q);
  const double via_occupancy = solve_d_pi(mdp, policy).dot(mdp.mean_reward());
  if (std::abs(value - via_occupancy) > kResidualTol * (1.0 + std::abs(value))) {
    throw SingularSystem("J(pi) disagrees between value and occupancy routes");
  }
  return value;
}

Vec importance_weights(const Vec& d_pi, const Vec& mu, int n_actions) {
  if (d_pi.size() != mu.size()) throw DimensionMismatch("d_pi and mu differ in size");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw InvalidModel("mu must be a distribution");
  }
  Vec w = Vec::Zero(d_pi.size());
  std::vector<std::pair<int, int>> bad;
  for (int i = 0; i < d_pi.size(); ++i) {
    if (mu(i) > 0.0) {
      w(i) = d_pi(i) / mu(i);
    } else if (d_pi(i) > 1e-14) {
      bad.emplace_back(i / n_actions, i % n_actions);
    }
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "importance weights do not exist: mu = 0 on " << bad.size() << " visited pair(s), first ("
       << bad.front().first << ", " << bad.front().second << ")";
    throw UnsupportedOccupancy(os.str(), std::move(bad));
  }
  return w;
}

TabularMdp build_rmax(const TabularMdp& mdp, const std::set<int>& known_states) {
  return absorb_unknown(mdp, known_states, mdp.r_max());
}

TabularMdp build_rmin(const TabularMdp& mdp, const std::set<int>& known_states) {
  return absorb_unknown(mdp, known_states, 0.0);
}

Vec stationary_distribution(const TabularMdp& mdp, const Policy& policy) {
  const Mat chain = state_transition(mdp, policy);
  const int n = mdp.n_states();
  const Mat generator = chain.transpose() - Mat::Identity(n, n);
  Eigen::FullPivLU<Mat> lu(generator);
  lu.setThreshold(1e-9);
  if (lu.rank() != n - 1) {
    throw NonErgodicChain("eigenvalue 1 of the induced chain is not simple");
  }
  Mat system = generator;
  system.row(n - 1).setOnes();
  const Vec state_dist = system.partialPivLu().solve(one_hot(n, n - 1));
  if ((state_dist.array() <= 1e-9).any()) {
    throw NonErgodicChain("stationary distribution is not strictly positive");
  }
  Vec d(mdp.n_pairs());
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) d(mdp.index(s, a)) = state_dist(s) * policy(s, a);
  }
  const Mat ppi = state_action_transition(mdp, policy);
  if ((ppi.transpose() * d - d).lpNorm<Eigen::Infinity>() > kResidualTol) {
    throw NonErgodicChain("stationary residual check failed");
  }
  return d;
}

double average_reward(const TabularMdp& mdp, const Policy& policy) {
  return stationary_distribution(mdp, policy).dot(mdp.mean_reward());
}

Vec differential_q(const TabularMdp& mdp, const Policy& policy) {
  const Vec d = stationary_distribution(mdp, policy);
  const double j = d.dot(mdp.mean_reward());
  const int n = mdp.n_pairs();
  const Mat ppi = state_action_transition(mdp, policy);
  const Mat fundamental = Mat::Identity(n, n) - ppi + Vec::Ones(n) * d.transpose();
  const Vec rhs = mdp.mean_reward() - Vec::Constant(n, j);
  Vec h = fundamental.partialPivLu().solve(rhs);
  if ((fundamental * h - rhs).lpNorm<Eigen::Infinity>() > kResidualTol) {
    throw SingularSystem("differential value solve failed");
  }
  return h;
}

TabularMdp generate_random_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma,
                               double r_max) {
  if (n_states < 1 || n_actions < 1) throw InvalidModel("sizes must be >= 1");
  Rng rng(seed);
  const int n = n_states * n_actions;
  Mat p(n, n_states);
  Vec r(n);
  for (int i = 0; i < n; ++i) {
    p.row(i) = flat_dirichlet(rng, n_states).transpose();
    // Renormalize once more so rows sum to 1 to the last ulp.
    p.row(i) /= p.row(i).sum();
    r(i) = r_max * rng.uniform();
  }
  return TabularMdp(n_states, n_actions, std::move(p), std::move(r), r_max, gamma, 0);
}

TabularMdp generate_chain(int length, double slip_prob, double gamma) {
  if (length < 1) throw InvalidModel("chain length must be >= 1");
  if (slip_prob < 0.0 || slip_prob > 1.0) throw InvalidModel("slip probability outside [0, 1]");
  constexpr int kActions = 2;
  Mat p = Mat::Zero(length * kActions, length);
  Vec r = Vec::Zero(length * kActions);
  for (int s = 0; s < length; ++s) {
    const int left = std::max(s - 1, 0);
    const int right = std::min(s + 1, length - 1);
    p(s * kActions + 0, left) += 1.0;
    p(s * kActions + 1, right) += 1.0 - slip_prob;
    p(s * kActions + 1, left) += slip_prob;
  }
  if (length > 1) {
    r(0 * kActions + 0) = 0.1;
    r((length - 1) * kActions + 1) = 1.0;
  }
  return TabularMdp(length, kActions, std::move(p), std::move(r), 1.0, gamma, 0);
}

Policy random_policy(std::uint64_t seed, int n_states, int n_actions) {
  Rng rng(seed);
  Mat probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    probs.row(s) = flat_dirichlet(rng, n_actions).transpose();
    probs.row(s) /= probs.row(s).sum();
  }
  return Policy(std::move(probs));
}

Vec random_distribution(std::uint64_t seed, int n, double floor) {
  Rng rng(seed);
  Vec v = floor * Vec::Constant(n, 1.0 / n) + (1.0 - floor) * flat_dirichlet(rng, n);
  return v / v.sum();
}

}  // namespace mvi
